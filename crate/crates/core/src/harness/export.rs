//! Plot-ready file export with stable column orders and round-trip float
//! formatting, so re-exports of the same data are byte-identical and
//! recomputations from the files reproduce the reported metrics exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::planner::{PlanResult, TraceRecord};

use super::batch::ExperimentReport;

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.display().to_string(),
        source,
    })
}

/// Trajectory CSV: `t,x,y,v,psi,delta`, one row per state. The `delta`
/// column is the steering applied during the step starting at `t`; the final
/// row repeats the last value (zero when the planner produced no steering,
/// as the Monte-Carlo baseline does).
pub fn trajectory_csv(result: &PlanResult) -> String {
    let mut out = String::from("t,x,y,v,psi,delta\n");
    let dt = result.trajectory.dt;
    let last_delta = result.steering.last().copied().unwrap_or(0.0);
    for (i, s) in result.trajectory.states.iter().enumerate() {
        let delta = result.steering.get(i).copied().unwrap_or(last_delta);
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            i as f64 * dt,
            s.x,
            s.y,
            s.v,
            s.psi,
            delta
        );
    }
    out
}

/// Prediction CSV: `vehicle,step,x,y`, grouped by vehicle, steps starting
/// at 1.
pub fn predictions_csv(result: &PlanResult) -> String {
    let mut out = String::from("vehicle,step,x,y\n");
    for (vehicle, track) in result.predictions.tracks().iter().enumerate() {
        for (k, p) in track.iter().enumerate() {
            let _ = writeln!(out, "{},{},{},{}", vehicle, k + 1, p.x, p.y);
        }
    }
    out
}

/// Cost trace as JSON lines, one record per swarm iteration.
pub fn trace_jsonl(trace: &[TraceRecord]) -> String {
    let mut out = String::new();
    for record in trace {
        // Serialization of these plain records cannot fail.
        let line = serde_json::to_string(record).expect("trace record serializes");
        out.push_str(&line);
        out.push('\n');
    }
    out
}

/// Export one planning run: trajectory and prediction CSVs, the cost trace,
/// and the full result as JSON. Returns the paths written.
pub fn export_plan(
    result: &PlanResult,
    trace: &[TraceRecord],
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let files = [
        ("trajectory.csv", trajectory_csv(result)),
        ("predictions.csv", predictions_csv(result)),
        ("trace.jsonl", trace_jsonl(trace)),
        (
            "result.json",
            serde_json::to_string_pretty(result).map_err(|e| Error::Config(e.to_string()))? + "\n",
        ),
    ];
    let mut written = Vec::with_capacity(files.len());
    for (name, contents) in files {
        let path = dir.join(name);
        write_file(&path, &contents)?;
        written.push(path);
    }
    Ok(written)
}

/// Export a batch report as JSON. Returns the path written.
pub fn export_report(report: &ExperimentReport, dir: &Path) -> Result<PathBuf> {
    ensure_dir(dir)?;
    let path = dir.join("report.json");
    let contents =
        serde_json::to_string_pretty(report).map_err(|e| Error::Config(e.to_string()))? + "\n";
    write_file(&path, &contents)?;
    Ok(path)
}
