//! Reports computed from a finished trace.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use ppl_core::TraceRecord;

/// Number of iterates drawn by [`random_iterate_report`].
pub const RANDOM_ITERATE_DRAWS: usize = 100;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomIterateReport {
    pub draws: usize,
    pub tol: f64,
    /// Share of draws whose three residuals are all `<= tol`.
    pub fraction_below_tol: f64,
    pub mean_stationarity: f64,
    pub mean_feasibility: f64,
    pub mean_complementarity: f64,
}

/// Picks [`RANDOM_ITERATE_DRAWS`] trace rows uniformly with replacement and
/// reports how often the chosen iterate is `tol`-stationary. An empty trace
/// yields zero draws and a zero fraction.
pub fn random_iterate_report(trace: &[TraceRecord], seed: u64, tol: f64) -> RandomIterateReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws = if trace.is_empty() { 0 } else { RANDOM_ITERATE_DRAWS };
    let (mut hits, mut s, mut f, mut c) = (0usize, 0.0, 0.0, 0.0);
    for _ in 0..draws {
        let r = &trace[rng.gen_range(0..trace.len())];
        if r.stationarity <= tol && r.feasibility <= tol && r.complementarity <= tol {
            hits += 1;
        }
        s += r.stationarity;
        f += r.feasibility;
        c += r.complementarity;
    }
    let n = draws.max(1) as f64;
    RandomIterateReport {
        draws,
        tol,
        fraction_below_tol: hits as f64 / n,
        mean_stationarity: s / n,
        mean_feasibility: f / n,
        mean_complementarity: c / n,
    }
}
