//! Pieces shared by the single-loop solvers: schedules, result types, the
//! multiplier-cap projection, and the iteration driver that evaluates
//! residuals and feeds the trace sink.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::kkt::{self, KktReport, KktTolerances};
use crate::linalg;
use crate::problem::ProblemSpec;
use crate::state::{Evaluation, IterateState};
use crate::trace::{Method, StepView, TraceRecord, TraceSink};

/// Default iteration budget.
pub const DEFAULT_MAX_ITERS: usize = 50_000;

/// Fraction of the admissible step-size bound used by the derived defaults.
pub const STEP_SAFETY: f64 = 0.9;

/// `ρ = α / (1 + αβ)`
pub fn rho_from(alpha: f64, beta: f64) -> f64 {
    alpha / (1.0 + alpha * beta)
}

pub(crate) fn check_alpha_beta(alpha: f64, beta: f64) -> Result<()> {
    if !(alpha > 1.0) || !alpha.is_finite() {
        return Err(Error::Parameter(alloc::format!("alpha must be > 1, got {alpha}")));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Parameter(alloc::format!("beta must lie in (0, 1), got {beta}")));
    }
    Ok(())
}

pub(crate) fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(alloc::format!(
            "{name} must be finite and > 0, got {v}"
        )))
    }
}

/// `δ_k = κ / (k + 1)`
pub fn delta_schedule_plada(k: usize, kappa: f64) -> f64 {
    kappa / (k as f64 + 1.0)
}

/// `δ_k = 1 / (p k^q + 1)` with `q ∈ (2/3, 1]`.
pub fn delta_schedule_ppala(k: usize, p: f64, q: f64) -> Result<f64> {
    check_schedule(p, q)?;
    Ok(1.0 / (p * libm::pow(k as f64, q) + 1.0))
}

pub(crate) fn check_schedule(p: f64, q: f64) -> Result<()> {
    check_positive("p", p)?;
    if !(q > 2.0 / 3.0 && q <= 1.0) {
        return Err(Error::Parameter(alloc::format!("q must lie in (2/3, 1], got {q}")));
    }
    Ok(())
}

/// Primal update rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum XUpdateMode {
    /// Prox-gradient step on `f` with linearized constraints.
    #[default]
    Linearized,
    /// Delegates to an injected [`ExactSubproblem`] solver.
    ExactSubproblem,
}

/// Whether the primal step size came from the constants or from the user.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepSource {
    Derived,
    Overridden,
}

/// Solver for `argmin_x ⟨∇f(x_k), x⟩ + ⟨λ, g(x)⟩ + ‖x - x_k‖²/(2η) + r(x)`.
pub trait ExactSubproblem {
    fn solve(&self, problem: &ProblemSpec, x_k: &[f64], grad_f: &[f64], lambda: &[f64], eta: f64) -> Result<Vec<f64>>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    /// All three residuals fell below their tolerances.
    Converged,
    /// The iteration budget ran out.
    Budget,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::Converged => "converged",
            StopReason::Budget => "budget",
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub state: IterateState,
    pub stop_reason: StopReason,
    pub iterations: usize,
    /// Iteration with the smallest tolerance-scaled residual.
    pub best_iter: usize,
    pub final_report: KktReport,
    pub final_objective: f64,
    /// Largest `‖λ_k‖`, `‖u_k‖`, `‖g(x_k)‖` seen during the run, for
    /// checking the bound constants after the fact.
    pub max_lambda_norm: f64,
    pub max_u_norm: f64,
    pub max_g_norm: f64,
    pub warnings: Vec<String>,
}

impl SolveResult {
    pub fn converged(&self, tol: &KktTolerances) -> bool {
        self.final_report.satisfies(tol)
    }
}

/// Projection onto `{λ : ‖λ‖ <= cap}`.
pub(crate) fn project_ball(lambda: &mut [f64], cap: Option<f64>) {
    if let Some(cap) = cap {
        let n = linalg::norm(lambda);
        if n > cap {
            let s = if n > 0.0 { cap / n } else { 0.0 };
            lambda.iter_mut().for_each(|v| *v *= s);
        }
    }
}

/// Output of one internal solver step.
pub(crate) struct Advance {
    pub state: IterateState,
    /// Oracles at `state.x`.
    pub eval: Evaluation,
    pub delta: f64,
    pub coefficient: f64,
    /// `μ⁺ + ρ(g(x⁺) + u⁺)`, before the optional cap projection.
    pub lambda_uncapped: Vec<f64>,
}

pub(crate) fn composite_objective(problem: &ProblemSpec, eval: &Evaluation) -> f64 {
    eval.f + problem.regularizer.value(&eval.x).unwrap_or(f64::INFINITY)
}

pub(crate) fn record_for(
    problem: &ProblemSpec,
    state: &IterateState,
    eval: &Evaluation,
    report: &KktReport,
    delta: f64,
    elapsed_sec: f64,
) -> TraceRecord {
    TraceRecord {
        iter: state.k,
        elapsed_sec,
        objective: composite_objective(problem, eval),
        feasibility: report.feasibility,
        stationarity: report.stationarity,
        complementarity: report.complementarity,
        dual_gap: report.dual_gap,
        lambda_norm: linalg::norm(&state.lambda),
        mu_norm: linalg::norm(&state.mu),
        delta_k: delta,
    }
}

pub(crate) struct DriverConfig {
    pub method: Method,
    pub max_iters: usize,
    pub tol: KktTolerances,
    pub stop_on_kkt: bool,
    pub eta_ref: f64,
}

/// Runs `advance` up to `max_iters` times from `x0`, evaluating the
/// residuals of every new iterate with the multiplier built by `nu_of`.
pub(crate) fn drive<S, A, N>(
    problem: &ProblemSpec,
    x0: Vec<f64>,
    cfg: DriverConfig,
    warnings: Vec<String>,
    sink: &mut S,
    mut advance: A,
    nu_of: N,
) -> Result<SolveResult>
where
    S: TraceSink + ?Sized,
    A: FnMut(&IterateState, &Evaluation) -> Result<Advance>,
    N: Fn(&IterateState, &Advance) -> Result<Vec<f64>>,
{
    if !linalg::all_finite(&x0) {
        return Err(Error::Parameter("x0 must be finite".into()));
    }
    problem.regularizer.value(&x0)?;
    let mut state = IterateState::initial(problem, x0)?;
    let mut eval = Evaluation::at(problem, &state.x)?;
    let zero_nu = alloc::vec![0.0; problem.num_constraints()];
    let mut report = kkt::kkt_from_evaluation(problem, &eval, &zero_nu, cfg.eta_ref)?;
    report.dual_gap = state.dual_gap();

    let mut tracker = Tracker::new(&state, &eval);
    let mut best = (report.scaled_violation(&cfg.tol), 0usize);
    sink.record(&record_for(problem, &state, &eval, &report, 0.0, sink.elapsed_sec()));

    let mut stop = StopReason::Budget;
    for _ in 0..cfg.max_iters {
        let step = advance(&state, &eval)?;
        if !step.state.is_finite() {
            return Err(Error::Divergence {
                iteration: step.state.k,
            });
        }
        let nu = nu_of(&state, &step)?;
        let mut next_report = kkt::kkt_from_evaluation(problem, &step.eval, &nu, cfg.eta_ref)?;
        next_report.dual_gap = step.state.dual_gap();

        let objective = composite_objective(problem, &step.eval);
        sink.on_step(&StepView {
            method: cfg.method,
            prev: &state,
            next: &step.state,
            delta: step.delta,
            coefficient: step.coefficient,
            nu: &nu,
            report: &next_report,
            objective,
        });
        sink.record(&record_for(
            problem,
            &step.state,
            &step.eval,
            &next_report,
            step.delta,
            sink.elapsed_sec(),
        ));

        state = step.state;
        eval = step.eval;
        report = next_report;
        tracker.observe(&state, &eval);
        let score = report.scaled_violation(&cfg.tol);
        if score < best.0 {
            best = (score, state.k);
        }
        if cfg.stop_on_kkt && report.satisfies(&cfg.tol) {
            stop = StopReason::Converged;
            break;
        }
    }

    let final_objective = composite_objective(problem, &eval);
    Ok(SolveResult {
        iterations: state.k,
        state,
        stop_reason: stop,
        best_iter: best.1,
        final_report: report,
        final_objective,
        max_lambda_norm: tracker.lambda,
        max_u_norm: tracker.u,
        max_g_norm: tracker.g,
        warnings,
    })
}

pub(crate) struct Tracker {
    pub lambda: f64,
    pub u: f64,
    pub g: f64,
}

impl Tracker {
    pub fn new(state: &IterateState, eval: &Evaluation) -> Self {
        let mut t = Tracker {
            lambda: 0.0,
            u: 0.0,
            g: 0.0,
        };
        t.observe(state, eval);
        t
    }

    pub fn observe(&mut self, state: &IterateState, eval: &Evaluation) {
        self.lambda = self.lambda.max(linalg::norm(&state.lambda));
        self.u = self.u.max(linalg::norm(&state.u));
        self.g = self.g.max(linalg::norm(&eval.g));
    }
}

/// Configuration error when step sizes depend on constants but the domain
/// is not compact, otherwise a warning when the check was bypassed.
pub(crate) fn compactness_gate(problem: &ProblemSpec, source: StepSource, warnings: &mut Vec<String>) -> Result<()> {
    if problem.regularizer.is_compact() {
        return Ok(());
    }
    match source {
        StepSource::Derived => Err(Error::Configuration(alloc::format!(
            "problem '{}' has an unbounded domain; derived step sizes need a compact box \
             (override eta and tau to run anyway)",
            problem.name
        ))),
        StepSource::Overridden => {
            warnings.push(alloc::format!(
                "domain of '{}' is not compact; running with user-supplied step sizes",
                problem.name
            ));
            Ok(())
        }
    }
}
