//! CSV tables and JSON summaries.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::json;

use crate::demo::DemoReport;
use crate::sweep::SweepReport;
use crate::verify::SuiteReport;
use crate::HarnessError;

/// Writes rows with a header; floats use shortest round-trip formatting.
pub fn write_csv<T: Serialize, W: Write>(rows: &[T], out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| HarnessError::Io(e.to_string()))?;
    }
    w.flush().map_err(|e| HarnessError::Io(e.to_string()))
}

pub fn csv_string<T: Serialize>(rows: &[T]) -> Result<String, HarnessError> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    String::from_utf8(buf).map_err(|e| HarnessError::Io(e.to_string()))
}

pub fn write_file(path: &Path, text: &str) -> Result<(), HarnessError> {
    std::fs::write(path, text).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))
}

fn versions() -> serde_json::Value {
    json!({
        "lichnerowicz-core": lichnerowicz_core::VERSION,
        "lichnerowicz-harness": env!("CARGO_PKG_VERSION"),
    })
}

pub fn sweep_json(r: &SweepReport) -> serde_json::Value {
    json!({
        "kind": "sweep",
        "verdict": r.summary.verdict,
        "summary": r.summary,
        "rows": r.rows.len(),
        "config_hash": r.config_hash,
        "versions": versions(),
    })
}

pub fn demo_json(r: &DemoReport) -> serde_json::Value {
    json!({
        "kind": "instability3",
        "verdict": if r.pass { "pass" } else { "fail" },
        "monotone": r.monotone,
        "source_spread": r.source_spread,
        "rows": r.rows.len(),
        "versions": versions(),
    })
}

pub fn suite_json(r: &SuiteReport) -> serde_json::Value {
    json!({
        "kind": "verify",
        "verdict": if r.pass { "pass" } else { "fail" },
        "selector": r.selector,
        "failed": r.rows.iter().filter(|x| !x.pass).map(|x| x.name).collect::<Vec<_>>(),
        "rows": r.rows.len(),
        "versions": versions(),
    })
}
