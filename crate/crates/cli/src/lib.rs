//! Subcommands of the `redqsim` binary, kept in a library so they can be
//! exercised without spawning a process.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use redqsim::oracle::{
    fairness_gap, interdrop_pmf_red1, interdrop_pmf_weighted, mathis_goodput_bound,
    montecarlo_interdrop, InterdropLaw, SizeStream,
};
use redqsim::report::write_csv;
use redqsim::{sim, OracleError, RedVariant, RunReport, Scenario, SimError, TcpVariant};

pub const EXIT_OK: u8 = 0;
/// `validate` found the Monte Carlo law too far from the closed form.
pub const EXIT_THRESHOLD: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
/// The simulation stalled before reaching its duration.
pub const EXIT_RUNTIME: u8 = 3;

/// TV distance above which `validate` reports a regression.
pub const TV_THRESHOLD: f64 = 0.02;

/// Below this many trials the TV threshold is not statistically meaningful.
pub const MIN_MEANINGFUL_TRIALS: u64 = 100_000;

pub fn exit_code(err: &SimError) -> u8 {
    match err {
        SimError::Config(_) => EXIT_CONFIG,
        SimError::Stalled { .. } => EXIT_RUNTIME,
    }
}

fn open_output(path: &Path) -> io::Result<Box<dyn Write>> {
    if path.as_os_str() == "-" {
        Ok(Box::new(io::stdout().lock()))
    } else {
        Ok(Box::new(BufWriter::new(File::create(path)?)))
    }
}

fn emit_csv(path: &Path, reports: &[RunReport]) -> Result<(), String> {
    let out = open_output(path).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    write_csv(out, reports).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn load(path: &Path) -> Result<Scenario, u8> {
    Scenario::from_path(path).map_err(|e| {
        eprintln!("error: {e}");
        EXIT_CONFIG
    })
}

fn report_diagnostics(report: &RunReport) {
    for d in &report.diagnostics {
        eprintln!("warning: {d}");
    }
}

/// Runs one scenario file and writes its CSV rows.
pub fn cmd_run(scenario_path: &Path, output_path: &Path, seed_override: Option<u64>) -> u8 {
    let mut scenario = match load(scenario_path) {
        Ok(s) => s,
        Err(code) => return code,
    };
    if let Some(seed) = seed_override {
        scenario.seed = seed;
    }
    let report = match sim::run(&scenario) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    report_diagnostics(&report);
    match emit_csv(output_path, &[report]) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_RUNTIME
        }
    }
}

/// splitmix64 finalizer over `base_seed + cell * golden ratio`.
pub fn cell_seed(base_seed: u64, cell: usize) -> u64 {
    let mut z = base_seed.wrapping_add(
        (cell as u64)
            .wrapping_add(1)
            .wrapping_mul(0x9E37_79B9_7F4A_7C15),
    );
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The cross product `variants x tcp x delays`, variant-major, with derived seeds.
pub fn sweep_cells(
    base: &Scenario,
    variants: &[RedVariant],
    tcp: &[TcpVariant],
    delays_ms: &[u32],
    base_seed: u64,
) -> Vec<Scenario> {
    let mut cells = Vec::with_capacity(variants.len() * tcp.len() * delays_ms.len());
    for &v in variants {
        for &t in tcp {
            for &d in delays_ms {
                let mut s = base.clone();
                s.red.variant = v;
                s.tcp_variant = t;
                s.bottleneck_prop_delay = f64::from(d) / 1000.0;
                s.seed = cell_seed(base_seed, cells.len());
                cells.push(s);
            }
        }
    }
    cells
}

/// Runs every cell of a sweep, concurrently, and writes rows in cell order.
pub fn cmd_sweep(
    base_path: &Path,
    variants: &[RedVariant],
    tcp: &[TcpVariant],
    delays_ms: &[u32],
    output_path: &Path,
    seed_override: Option<u64>,
) -> u8 {
    let base = match load(base_path) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let base_seed = seed_override.unwrap_or(base.seed);
    let cells = sweep_cells(&base, variants, tcp, delays_ms, base_seed);
    for (i, cell) in cells.iter().enumerate() {
        if let Err(e) = cell.validate() {
            eprintln!("error: cell {i}: {e}");
            return EXIT_CONFIG;
        }
    }

    let results: Vec<Result<RunReport, SimError>> = cells.par_iter().map(sim::run).collect();

    let mut worst = EXIT_OK;
    let mut reports = Vec::with_capacity(results.len());
    for (i, (cell, result)) in cells.iter().zip(results).enumerate() {
        match result {
            Ok(r) => {
                report_diagnostics(&r);
                reports.push(r);
            }
            Err(e) => {
                eprintln!(
                    "error: cell {i} ({} {} {} ms): {e}",
                    cell.red.variant,
                    cell.tcp_variant,
                    cell.bottleneck_delay_ms()
                );
                worst = worst.max(exit_code(&e));
            }
        }
    }
    if let Err(e) = emit_csv(output_path, &reports) {
        eprintln!("error: {e}");
        return EXIT_RUNTIME;
    }
    worst
}

/// Outcome of a closed-form versus Monte Carlo comparison.
#[derive(Debug, Clone)]
pub struct Validation {
    pub closed_form: InterdropLaw,
    pub empirical: InterdropLaw,
    pub tv: f64,
}

impl Validation {
    pub fn passed(&self) -> bool {
        self.tv < TV_THRESHOLD
    }
}

/// Compares the inter-drop law of `variant` at a frozen `p_b` with its closed form.
///
/// `pattern` lists the sizes of the packets following a drop and is
/// repeated as needed. RED_2 and RED_3 only have a closed form when every
/// packet has the maximum size.
pub fn validate_law(
    variant: RedVariant,
    p_b: f64,
    pattern: &[u32],
    max_packet: u32,
    trials: u64,
    seed: u64,
) -> Result<Validation, OracleError> {
    if pattern.is_empty() {
        return Err(OracleError::StreamExhausted { len: 0 });
    }
    let min_size = *pattern.iter().min().expect("non-empty");
    let probe = SizeStream::new(pattern.to_vec(), max_packet)?;
    let min_weight = match variant {
        RedVariant::Red5 => (f64::from(min_size) / f64::from(max_packet)).powi(2),
        _ => f64::from(min_size) / f64::from(max_packet),
    };
    if !(p_b > 0.0 && p_b <= 1.0) {
        return Err(OracleError::InvalidProbability(p_b));
    }
    let support = ((1.0 / p_b) / min_weight).ceil() as usize + 2;
    let stream = SizeStream::cycled(probe.sizes(), support.max(pattern.len()), max_packet)?;

    let all_full = pattern.iter().all(|&l| l == max_packet);
    let closed_form = match variant {
        RedVariant::Red4 | RedVariant::Red5 => interdrop_pmf_weighted(p_b, &stream, variant)?,
        _ if all_full => interdrop_pmf_red1(p_b)?,
        RedVariant::Red1 => interdrop_pmf_red1(p_b)?,
        other => return Err(OracleError::UnsupportedVariant(other)),
    };
    let empirical = montecarlo_interdrop(variant, p_b, &stream, trials, seed)?;
    let tv = closed_form.tv_distance(&empirical);
    Ok(Validation {
        closed_form,
        empirical,
        tv,
    })
}

pub fn cmd_validate(
    variant: RedVariant,
    p_b: f64,
    pattern: &[u32],
    max_packet: u32,
    trials: u64,
    seed: u64,
    out: &mut dyn Write,
) -> u8 {
    if trials < MIN_MEANINGFUL_TRIALS {
        eprintln!(
            "warning: {trials} trials is too few for the TV < {TV_THRESHOLD} threshold to be statistically meaningful (use >= {MIN_MEANINGFUL_TRIALS})"
        );
    }
    let v = match validate_law(variant, p_b, pattern, max_packet, trials, seed) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let _ = writeln!(
        out,
        "{variant} p_b={p_b} sizes={pattern:?} M={max_packet} trials={trials} seed={seed}"
    );
    let _ = writeln!(
        out,
        "{:>6} {:>12} {:>12}",
        "n", "closed_form", "monte_carlo"
    );
    let support = v.closed_form.support_max().max(v.empirical.support_max());
    for n in 1..=support {
        let _ = writeln!(
            out,
            "{:>6} {:>12.6} {:>12.6}",
            n,
            v.closed_form.prob(n),
            v.empirical.prob(n)
        );
    }
    let verdict = if v.passed() { "PASS" } else { "FAIL" };
    let _ = writeln!(
        out,
        "tv_distance={:.6} threshold={TV_THRESHOLD} {verdict}",
        v.tv
    );
    if v.passed() {
        EXIT_OK
    } else {
        EXIT_THRESHOLD
    }
}

pub fn cmd_analyze_mathis(mss: u32, rtt: f64, p: f64, c: f64, out: &mut dyn Write) -> u8 {
    match mathis_goodput_bound(mss, rtt, p, c) {
        Ok(bps) => {
            let _ = writeln!(out, "goodput_bound_bps={bps:.6e} ({:.6} Mbit/s)", bps / 1e6);
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    }
}

pub fn cmd_analyze_fairness(mss1: u32, p1: f64, mss2: u32, p2: f64, out: &mut dyn Write) -> u8 {
    match fairness_gap(mss1, p1, mss2, p2) {
        Ok(gap) => {
            let _ = writeln!(out, "fairness_gap={gap:.6}");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_seeds_are_distinct_and_stable() {
        let seeds: Vec<u64> = (0..20).map(|i| cell_seed(42, i)).collect();
        let mut dedup = seeds.clone();
        dedup.sort_unstable();
        dedup.dedup();
        assert_eq!(dedup.len(), 20);
        assert_eq!(cell_seed(42, 3), seeds[3]);
        assert_ne!(cell_seed(43, 3), seeds[3]);
    }

    #[test]
    fn sweep_grid_size_and_order() {
        let base = Scenario::dumbbell_default(RedVariant::Red1, TcpVariant::Reno, 15);
        let cells = sweep_cells(
            &base,
            &RedVariant::ALL,
            &[TcpVariant::Reno, TcpVariant::Sack],
            &[15, 80],
            7,
        );
        assert_eq!(cells.len(), 20);
        assert_eq!(cells[0].red.variant, RedVariant::Red1);
        assert_eq!(cells[1].bottleneck_prop_delay, 0.08);
        assert_eq!(cells[2].tcp_variant, TcpVariant::Sack);
        assert_eq!(cells[19].red.variant, RedVariant::Red5);
        assert_eq!(cells[5].seed, cell_seed(7, 5));
    }

    #[test]
    fn validate_red5_half_size() {
        let v = validate_law(RedVariant::Red5, 0.1, &[750], 1500, 200_000, 11).unwrap();
        assert_eq!(v.closed_form.support_max(), 40);
        assert!(v.passed(), "tv = {}", v.tv);
    }

    #[test]
    fn validate_rejects_sized_red2() {
        assert!(matches!(
            validate_law(RedVariant::Red2, 0.1, &[750], 1500, 10, 1),
            Err(OracleError::UnsupportedVariant(RedVariant::Red2))
        ));
        assert!(validate_law(RedVariant::Red2, 0.1, &[1500], 1500, 1000, 1).is_ok());
    }
}
