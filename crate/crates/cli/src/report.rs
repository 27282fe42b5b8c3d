//! JSON and CSV renderings of the core result types, and the report
//! envelope written by every command.

use std::path::Path;

use serde_json::{json, Map, Value};
use tessellate::adversary::WitnessReport;
use tessellate::complexity::WidthEstimate;
use tessellate::experiments::{ExponentFit, PhasePoint, PhaseResult, TrialOutcome, WitnessStatus};
use tessellate::tessellation::TessellationReport;

use crate::error::CliResult;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Reproducible part of a report: identical flags and seed give identical
/// bytes.
pub fn payload(command: &str, config: Map<String, Value>, report: Value) -> Value {
    json!({
        "artifact": "tessellate",
        "version": VERSION,
        "command": command,
        "config": Value::Object(config),
        "report": report,
    })
}

/// Payload plus run metadata that is allowed to differ between runs.
pub fn envelope(payload: Value, threads: usize, elapsed_seconds: f64) -> Value {
    let timestamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    json!({
        "payload": payload,
        "metadata": {
            "timestamp_unix": timestamp,
            "threads": threads,
            "elapsed_seconds": elapsed_seconds,
        },
    })
}

pub fn to_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text)?;
    Ok(())
}

pub fn tessellation(r: &TessellationReport) -> Value {
    json!({
        "max_violation": r.max_violation,
        "delta": r.delta,
        "passed": r.passed,
        "worst_pair_index": [r.worst_pair_index.0, r.worst_pair_index.1],
        "quantiles": {"p50": r.quantiles.p50, "p90": r.quantiles.p90, "p99": r.quantiles.p99},
    })
}

pub fn witness(r: &WitnessReport) -> Value {
    json!({
        "succeeded": r.succeeded,
        "violation": r.violation,
        "residual": r.residual,
        "k": r.k,
        "norm_x": r.norm_x,
    })
}

pub fn width(w: &WidthEstimate) -> Value {
    json!({
        "mean": w.mean,
        "std_err": w.std_err,
        "samples": w.samples,
        "mode": w.mode.as_str(),
    })
}

pub fn fit(f: &ExponentFit) -> Value {
    json!({"slope": f.slope, "intercept": f.intercept, "r2": f.r2})
}

pub fn fit_points(f: &ExponentFit) -> Value {
    Value::Array(f.points.iter().map(|&(x, y)| json!([x, y])).collect())
}

pub fn phase_point(p: &PhasePoint) -> Value {
    json!({
        "m": p.m,
        "trials": p.trials,
        "passes": p.passes,
        "pass_rate": p.pass_rate,
        "net_passes": p.net_passes,
        "witness_successes": p.witness_successes,
        "selection_failures": p.selection_failures,
        "k": p.k,
    })
}

pub fn phase(r: &PhaseResult) -> Value {
    json!({
        "delta": r.delta,
        "budget": r.budget,
        "m_low": r.m_low,
        "m_mid": r.m_mid,
        "m_high": r.m_high,
        "trials_per_m": r.trials_per_m,
        "complete": r.complete,
        "complexity": r.complexity,
        "capped_complexity": r.capped_complexity,
        "pass_curve": r.pass_curve.iter().map(phase_point).collect::<Vec<_>>(),
    })
}

pub fn trial(t: &TrialOutcome) -> Value {
    let witness = match &t.witness {
        WitnessStatus::NotAttempted => json!({"status": "not_attempted"}),
        WitnessStatus::SelectionFailed => json!({"status": "selection_failed"}),
        WitnessStatus::Singular => json!({"status": "singular"}),
        WitnessStatus::Attempted {
            succeeded,
            violation,
            residual,
            norm_x,
            in_set,
        } => json!({
            "status": "attempted",
            "succeeded": succeeded,
            "violation": violation,
            "residual": residual,
            "norm_x": norm_x,
            "in_set": in_set,
        }),
    };
    json!({
        "passed": t.passed,
        "net_passed": t.net_passed,
        "euclidean_violation": t.euclidean_violation,
        "spherical_violation": t.spherical_violation,
        "witness": witness,
    })
}

/// Sweep rows `delta,m,trials,passes,pass_rate`, preceded by `#` comment
/// lines holding the version and the resolved configuration. Each section
/// starts with a `# family <name>` line.
pub fn phase_csv(sections: &[(&str, &[PhaseResult])], header: &[String]) -> String {
    let mut s = String::new();
    for h in header {
        s.push_str("# ");
        s.push_str(h);
        s.push('\n');
    }
    s.push_str("delta,m,trials,passes,pass_rate\n");
    for (family, results) in sections {
        s.push_str(&format!("# family {family}\n"));
        for r in results.iter() {
            for p in &r.pass_curve {
                s.push_str(&format!("{:?},{},{},{},{:?}\n", r.delta, p.m, p.trials, p.passes, p.pass_rate));
            }
        }
    }
    s
}

pub fn csv_header(command: &str, config: &Map<String, Value>) -> Vec<String> {
    vec![
        format!("tessellate {VERSION} {command}"),
        format!("config {}", Value::Object(config.clone())),
    ]
}
