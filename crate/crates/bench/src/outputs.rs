//! trace.csv and summary.json.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use ppl_core::kkt::{RateRatio, RateReport};
use ppl_core::TraceRecord;

use crate::config::RunConfig;

pub const TRACE_HEADER: &str =
    "iter,elapsed_sec,objective,feasibility,stationarity,complementarity,dual_gap,lambda_norm,mu_norm,delta_k";

pub const TRACE_FILE: &str = "trace.csv";
pub const SUMMARY_FILE: &str = "summary.json";

/// Serializable mirror of [`RateReport`]. A ratio of `null` means both
/// averages were zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateSummary {
    pub t: usize,
    pub sufficient: bool,
    pub stationarity_sq: (f64, f64),
    pub feasibility_sq: (f64, f64),
    pub complementarity: (f64, f64),
    pub stationarity_ratio: Option<f64>,
    pub feasibility_ratio: Option<f64>,
    pub complementarity_ratio: Option<f64>,
}

fn ratio(r: RateRatio) -> Option<f64> {
    match r {
        RateRatio::Value(v) => Some(v),
        RateRatio::Converged => None,
    }
}

impl From<&RateReport> for RateSummary {
    fn from(r: &RateReport) -> Self {
        RateSummary {
            t: r.t,
            sufficient: r.sufficient,
            stationarity_sq: r.stationarity_sq,
            feasibility_sq: r.feasibility_sq,
            complementarity: r.complementarity,
            stationarity_ratio: ratio(r.stationarity_ratio),
            feasibility_ratio: ratio(r.feasibility_ratio),
            complementarity_ratio: ratio(r.complementarity_ratio),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub stationarity: f64,
    pub feasibility: f64,
    pub complementarity: f64,
    pub dual_gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub config: RunConfig,
    pub problem_name: String,
    pub residuals: Option<Residuals>,
    pub final_objective: Option<f64>,
    pub final_x: Option<Vec<f64>>,
    pub final_nu: Option<Vec<f64>>,
    pub iterations: usize,
    pub best_iter: Option<usize>,
    pub wall_time_sec: f64,
    /// `converged`, `budget`, or `diverged`.
    pub stop_reason: String,
    /// True iff the final residuals meet all three tolerances.
    pub converged: bool,
    pub rate_summary: Option<RateSummary>,
    /// Iteration at which the iterates became non-finite.
    pub failure_iteration: Option<usize>,
    pub error: Option<String>,
    pub warnings: Vec<String>,
}

/// Shortest decimal form that parses back to the same value.
fn num(v: f64) -> String {
    format!("{v}")
}

pub fn trace_to_csv(trace: &[TraceRecord]) -> String {
    let mut out = String::with_capacity(64 * (trace.len() + 1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in trace {
        let fields = [
            r.iter.to_string(),
            num(r.elapsed_sec),
            num(r.objective),
            num(r.feasibility),
            num(r.stationarity),
            num(r.complementarity),
            num(r.dual_gap),
            num(r.lambda_norm),
            num(r.mu_norm),
            num(r.delta_k),
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// Reads a trace written by [`trace_to_csv`]. The header must match exactly.
pub fn read_trace_csv(path: &Path) -> Result<Vec<TraceRecord>> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read trace {}", path.display()))?;
    parse_trace_csv(&text).with_context(|| format!("in trace {}", path.display()))
}

pub fn parse_trace_csv(text: &str) -> Result<Vec<TraceRecord>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = reader.headers()?.iter().collect::<Vec<_>>().join(",");
    if header != TRACE_HEADER {
        bail!("unexpected trace header '{header}'");
    }
    let mut out = Vec::new();
    for (n, row) in reader.records().enumerate() {
        let row = row?;
        let f = |j: usize| -> Result<f64> {
            row[j]
                .parse::<f64>()
                .with_context(|| format!("row {}: field {} is not a number", n + 1, j + 1))
        };
        out.push(TraceRecord {
            iter: row[0]
                .parse()
                .with_context(|| format!("row {}: bad iteration", n + 1))?,
            elapsed_sec: f(1)?,
            objective: f(2)?,
            feasibility: f(3)?,
            stationarity: f(4)?,
            complementarity: f(5)?,
            dual_gap: f(6)?,
            lambda_norm: f(7)?,
            mu_norm: f(8)?,
            delta_k: f(9)?,
        });
    }
    if let Some(w) = out.windows(2).find(|w| w[1].iter <= w[0].iter) {
        bail!("iterations are not strictly increasing at {}", w[1].iter);
    }
    Ok(out)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut file = fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    file.write_all(bytes)
        .with_context(|| format!("cannot write {}", path.display()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputPaths {
    pub trace: PathBuf,
    pub summary: PathBuf,
}

/// Writes both files into `dir`, creating it if needed.
pub fn write_outputs(trace: &[TraceRecord], summary: &Summary, dir: &Path) -> Result<OutputPaths> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
    let paths = OutputPaths {
        trace: dir.join(TRACE_FILE),
        summary: dir.join(SUMMARY_FILE),
    };
    write_file(&paths.trace, trace_to_csv(trace).as_bytes())?;
    let json = serde_json::to_string_pretty(summary)?;
    write_file(&paths.summary, json.as_bytes())?;
    Ok(paths)
}
