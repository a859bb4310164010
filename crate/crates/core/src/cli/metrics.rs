//! Line-delimited JSON metrics.
//!
//! One `{"type":"slot",...}` record per slot, then one `{"type":"summary",...}`
//! record. Field order is fixed. Reals carry 9 significant digits; infinite
//! values are written as the strings `"inf"` and `"-inf"`. Device and server
//! numbers are 1-based; algorithm 0 means no enhancement.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use super::CliError;
use crate::sim::{SimOutput, SlotMetrics, Summary};

/// `%.9g`-style rendering that stays valid JSON.
pub fn format_real(v: f64) -> String {
    if v.is_nan() {
        return "\"nan\"".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "\"inf\"".into() } else { "\"-inf\"".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_fraction(&format!("{v:.decimals$}")).to_string()
    } else {
        format!("{}e{exp}", trim_fraction(mantissa))
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "null".into(), format_real)
}

fn list(values: impl Iterator<Item = f64>) -> String {
    let items: Vec<String> = values.map(format_real).collect();
    format!("[{}]", items.join(","))
}

pub fn slot_record(s: &SlotMetrics, timing: bool) -> String {
    let decisions: Vec<String> = s
        .devices
        .iter()
        .enumerate()
        .map(|(m, d)| {
            format!(
                "{{\"device\":{},\"server\":{},\"algorithm\":{},\"rejected\":{}}}",
                m + 1,
                d.server + 1,
                d.algorithm,
                d.rejected
            )
        })
        .collect();
    format!(
        "{{\"type\":\"slot\",\"slot\":{},\"decisions\":[{}],\"quality\":{},\"latency_s\":{},\"utility\":{},\"total_utility\":{},\"feasible\":{},\"scheduler_ms\":{}}}",
        s.slot,
        decisions.join(","),
        list(s.devices.iter().map(|d| d.quality)),
        list(s.devices.iter().map(|d| d.latency_s)),
        list(s.devices.iter().map(|d| d.utility)),
        format_real(s.total_utility),
        s.feasible,
        opt(timing.then(|| s.scheduler_ms())),
    )
}

pub fn summary_record(s: &Summary, timing: bool) -> String {
    format!(
        "{{\"type\":\"summary\",\"slots\":{},\"mean_latency_s\":{},\"p50_latency_s\":{},\"p95_latency_s\":{},\"p99_latency_s\":{},\"mean_utility\":{},\"feasibility_rate\":{},\"mean_scheduler_ms\":{}}}",
        s.slots,
        opt(s.mean_latency_s),
        opt(s.p50_latency_s),
        opt(s.p95_latency_s),
        opt(s.p99_latency_s),
        opt(s.mean_utility),
        opt(s.feasibility_rate),
        opt(s.mean_scheduler_ms.filter(|_| timing)),
    )
}

/// Writes the metrics stream. Scheduler wall time is `null` unless `timing`
/// is set, which keeps repeated runs byte-identical.
pub fn write_metrics<W: Write>(mut w: W, output: &SimOutput, timing: bool) -> io::Result<()> {
    for slot in &output.slots {
        writeln!(w, "{}", slot_record(slot, timing))?;
    }
    writeln!(w, "{}", summary_record(&output.summary, timing))?;
    w.flush()
}

pub fn emit_metrics(output: &SimOutput, path: &Path, timing: bool) -> Result<(), CliError> {
    let file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    write_metrics(io::BufWriter::new(file), output, timing).map_err(|e| CliError::io(path, e))
}
