use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use redqsim::{RedVariant, Scenario, TcpVariant};
use tempfile::TempDir;

fn redqsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_redqsim"))
        .args(args)
        .env_remove("REDQSIM_SEED")
        .output()
        .expect("binary runs")
}

fn short_scenario(dir: &Path) -> PathBuf {
    let mut s = Scenario::dumbbell_default(RedVariant::Red1, TcpVariant::Reno, 15);
    s.duration = 6.0;
    s.warmup = 1.0;
    let path = dir.join("base.toml");
    fs::write(&path, s.to_toml_string()).unwrap();
    path
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn run_writes_one_row_per_group() {
    let dir = TempDir::new().unwrap();
    let scenario = short_scenario(dir.path());
    let out = dir.path().join("out.csv");
    let o = redqsim(&[
        "run",
        "--scenario",
        scenario.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "scenario_name,red_variant,tcp_variant,bottleneck_delay_ms,group_mtu,goodput_mbps,plr,arrivals,drops_random,drops_forced_avg,drops_buffer,seed"
    );
    assert_eq!(lines.len(), 4);
    for (line, mtu) in lines[1..].iter().zip(["1500", "750", "375"]) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), 12);
        assert_eq!(cols[1], "RED_1");
        assert_eq!(cols[2], "reno");
        assert_eq!(cols[3], "15");
        assert_eq!(cols[4], mtu);
        assert_eq!(cols[11], "1");
    }
}

#[test]
fn run_is_byte_identical_and_honours_seed() {
    let dir = TempDir::new().unwrap();
    let scenario = short_scenario(dir.path());
    let run = |seed: Option<&str>| {
        let mut args = vec![
            "run",
            "--scenario",
            scenario.to_str().unwrap(),
            "--out",
            "-",
        ];
        if let Some(s) = seed {
            args.extend(["--seed", s]);
        }
        let o = redqsim(&args);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        o.stdout
    };
    let a = run(None);
    assert_eq!(a, run(None));
    let seeded = run(Some("7"));
    assert_ne!(a, seeded);
    assert!(String::from_utf8(seeded)
        .unwrap()
        .lines()
        .skip(1)
        .all(|l| l.ends_with(",7")));

    let env = Command::new(env!("CARGO_BIN_EXE_redqsim"))
        .args([
            "run",
            "--scenario",
            scenario.to_str().unwrap(),
            "--out",
            "-",
        ])
        .env("REDQSIM_SEED", "7")
        .output()
        .unwrap();
    assert_eq!(env.stdout, run(Some("7")));
}

#[test]
fn missing_threshold_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let scenario = short_scenario(dir.path());
    let text: String = fs::read_to_string(&scenario)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with("max_th"))
        .map(|l| format!("{l}\n"))
        .collect();
    let broken = dir.path().join("broken.toml");
    fs::write(&broken, text).unwrap();
    let o = redqsim(&["run", "--scenario", broken.to_str().unwrap(), "--out", "-"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("max_th"), "{}", stderr(&o));
}

#[test]
fn unknown_key_is_rejected() {
    let dir = TempDir::new().unwrap();
    let scenario = short_scenario(dir.path());
    let mut text = fs::read_to_string(&scenario).unwrap();
    text.insert_str(0, "bogus_key = 3\n");
    fs::write(&scenario, text).unwrap();
    let o = redqsim(&[
        "run",
        "--scenario",
        scenario.to_str().unwrap(),
        "--out",
        "-",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bogus_key"), "{}", stderr(&o));
}

#[test]
fn sweep_covers_the_grid_in_order() {
    let dir = TempDir::new().unwrap();
    let scenario = short_scenario(dir.path());
    let o = redqsim(&[
        "sweep",
        "--base",
        scenario.to_str().unwrap(),
        "--variants",
        "RED_1,RED_5",
        "--tcp",
        "reno,sack",
        "--delays-ms",
        "15,80",
        "--out",
        "-",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<Vec<&str>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(rows.len(), 2 * 2 * 2 * 3);
    let cells: Vec<(&str, &str, &str)> =
        rows.iter().step_by(3).map(|r| (r[1], r[2], r[3])).collect();
    assert_eq!(
        cells,
        [
            ("RED_1", "reno", "15"),
            ("RED_1", "reno", "80"),
            ("RED_1", "sack", "15"),
            ("RED_1", "sack", "80"),
            ("RED_5", "reno", "15"),
            ("RED_5", "reno", "80"),
            ("RED_5", "sack", "15"),
            ("RED_5", "sack", "80"),
        ]
    );
    let seeds: std::collections::BTreeSet<&str> = rows.iter().map(|r| r[11]).collect();
    assert_eq!(seeds.len(), 8, "each cell gets its own seed");
}

#[test]
fn single_cell_sweep_matches_run_with_recorded_seed() {
    let dir = TempDir::new().unwrap();
    let scenario = short_scenario(dir.path());
    let sweep = redqsim(&[
        "sweep",
        "--base",
        scenario.to_str().unwrap(),
        "--variants",
        "RED_1",
        "--tcp",
        "reno",
        "--delays-ms",
        "15",
        "--out",
        "-",
    ]);
    assert_eq!(sweep.status.code(), Some(0), "{}", stderr(&sweep));
    let text = String::from_utf8(sweep.stdout.clone()).unwrap();
    let seed = text
        .lines()
        .nth(1)
        .unwrap()
        .rsplit(',')
        .next()
        .unwrap()
        .to_string();
    let run = redqsim(&[
        "run",
        "--scenario",
        scenario.to_str().unwrap(),
        "--out",
        "-",
        "--seed",
        &seed,
    ]);
    assert_eq!(run.status.code(), Some(0));
    assert_eq!(run.stdout, sweep.stdout);
}

#[test]
fn validate_passes_for_exact_laws() {
    let o = redqsim(&[
        "validate",
        "--variant",
        "RED_1",
        "--pb",
        "0.1",
        "--sizes",
        "1500",
        "--trials",
        "1000000",
        "--seed",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = String::from_utf8(o.stdout).unwrap();
    assert!(out.contains("PASS"));
    assert_eq!(
        out.lines()
            .filter(|l| l.trim_start().starts_with(|c: char| c.is_ascii_digit()))
            .count(),
        10
    );

    let o = redqsim(&[
        "validate",
        "--variant",
        "RED_5",
        "--pb",
        "0.1",
        "--sizes",
        "750",
        "--trials",
        "200000",
        "--seed",
        "3",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn validate_warns_about_tiny_trial_counts() {
    let o = redqsim(&[
        "validate",
        "--variant",
        "RED_1",
        "--pb",
        "0.1",
        "--trials",
        "10",
        "--seed",
        "1",
    ]);
    assert!(
        stderr(&o).contains("statistically meaningful"),
        "{}",
        stderr(&o)
    );
    assert!(matches!(o.status.code(), Some(0) | Some(1)));
}

#[test]
fn analyze_reports_bound_and_gap() {
    let o = redqsim(&[
        "analyze", "mathis", "--mss", "1500", "--rtt", "0.1", "--p", "0.01", "--c", "1",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("(1.200000 Mbit/s)"));

    let o = redqsim(&[
        "analyze", "fairness", "--mss1", "1500", "--p1", "0.04", "--mss2", "750", "--p2", "0.01",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("fairness_gap=0.000000"));

    let o = redqsim(&[
        "analyze", "mathis", "--mss", "1500", "--rtt", "0.1", "--p", "0",
    ]);
    assert_eq!(o.status.code(), Some(2));
}
