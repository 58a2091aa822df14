//! Per-iteration trace records and the sink interface the solvers report to.

use alloc::vec::Vec;

use crate::kkt::KktReport;
use crate::state::IterateState;

/// The solver family that produced a step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Plada,
    Ppala,
}

/// One row of the convergence trace.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRecord {
    pub iter: usize,
    pub elapsed_sec: f64,
    pub objective: f64,
    pub feasibility: f64,
    pub stationarity: f64,
    pub complementarity: f64,
    pub dual_gap: f64,
    pub lambda_norm: f64,
    pub mu_norm: f64,
    pub delta_k: f64,
}

/// Everything known about one completed step. Passed to
/// [`TraceSink::on_step`] so diagnostics can run without re-evaluating oracles.
pub struct StepView<'a> {
    pub method: Method,
    pub prev: &'a IterateState,
    pub next: &'a IterateState,
    /// `δ_k` used for this step.
    pub delta: f64,
    /// Effective μ-step coefficient (`γ_k` or `σ_k`).
    pub coefficient: f64,
    /// Constructed multiplier before clamping at zero.
    pub nu: &'a [f64],
    /// Residuals of `next.x` against the clamped multiplier `report.nu`.
    pub report: &'a KktReport,
    /// `f(next.x)`
    pub objective: f64,
}

/// Receiver for solver progress.
///
/// The core crate has no clock, so `elapsed_sec` is supplied by the sink.
pub trait TraceSink {
    fn elapsed_sec(&self) -> f64 {
        0.0
    }

    fn record(&mut self, record: &TraceRecord);

    fn on_step(&mut self, _step: &StepView<'_>) {}
}

/// Discards everything.
#[derive(Clone, Copy, Debug, Default)]
pub struct NullSink;

impl TraceSink for NullSink {
    fn record(&mut self, _record: &TraceRecord) {}
}

/// Keeps every record in memory.
#[derive(Clone, Debug, Default)]
pub struct VecSink {
    pub records: Vec<TraceRecord>,
}

impl TraceSink for VecSink {
    fn record(&mut self, record: &TraceRecord) {
        self.records.push(*record);
    }
}

impl<S: TraceSink + ?Sized> TraceSink for &mut S {
    fn elapsed_sec(&self) -> f64 {
        (**self).elapsed_sec()
    }

    fn record(&mut self, record: &TraceRecord) {
        (**self).record(record)
    }

    fn on_step(&mut self, step: &StepView<'_>) {
        (**self).on_step(step)
    }
}

/// Forwards every event to two sinks. The clock comes from the first.
#[derive(Clone, Debug, Default)]
pub struct Tee<A, B>(pub A, pub B);

impl<A: TraceSink, B: TraceSink> TraceSink for Tee<A, B> {
    fn elapsed_sec(&self) -> f64 {
        self.0.elapsed_sec()
    }

    fn record(&mut self, record: &TraceRecord) {
        self.0.record(record);
        self.1.record(record);
    }

    fn on_step(&mut self, step: &StepView<'_>) {
        self.0.on_step(step);
        self.1.on_step(step);
    }
}
