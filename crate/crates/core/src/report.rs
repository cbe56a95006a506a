//! CSV emission: one row per MTU group, fixed column order.

use std::io::Write;

use crate::metrics::RunReport;

pub const CSV_COLUMNS: [&str; 12] = [
    "scenario_name",
    "red_variant",
    "tcp_variant",
    "bottleneck_delay_ms",
    "group_mtu",
    "goodput_mbps",
    "plr",
    "arrivals",
    "drops_random",
    "drops_forced_avg",
    "drops_buffer",
    "seed",
];

/// Formats `x` with 6 significant digits, `%g` style: trailing zeros are
/// trimmed and very large or small magnitudes use an exponent.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    // Let the formatter do the rounding, then read back the decimal exponent.
    let sci = format!("{:.5e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific notation");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{mantissa}e{sign}{:02}", exp.abs());
    }
    let decimals = (5 - exp).max(0) as usize;
    trim_zeros(&format!("{:.*}", decimals, x)).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// The CSV rows of one run, without header.
pub fn rows(report: &RunReport) -> Vec<[String; 12]> {
    report
        .groups
        .iter()
        .map(|g| {
            [
                report.scenario_name.clone(),
                report.red_variant.to_string(),
                report.tcp_variant.to_string(),
                format_sig6(report.bottleneck_delay_ms),
                g.mtu.to_string(),
                format_sig6(g.goodput_bps / 1e6),
                g.plr.map(format_sig6).unwrap_or_default(),
                g.counters.arrivals.to_string(),
                g.counters.drops_random.to_string(),
                g.counters.drops_forced_avg.to_string(),
                g.counters.drops_buffer.to_string(),
                report.seed.to_string(),
            ]
        })
        .collect()
}

/// Writes the header and the rows of every report, in order.
pub fn write_csv<W: Write>(out: W, reports: &[RunReport]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for report in reports {
        for row in rows(report) {
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// The CSV document for `reports` as a string.
pub fn to_csv_string(reports: &[RunReport]) -> String {
    let mut buf = Vec::new();
    write_csv(&mut buf, reports).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("CSV output is UTF-8")
}
