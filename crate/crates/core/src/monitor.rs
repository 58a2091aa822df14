//! Per-step invariant monitoring. [`InvariantMonitor`] is a trace sink that
//! checks, at every solver step, the multiplier relations, the approximate
//! descent of the Lagrangian, and the sign and cancellation properties of
//! the constructed multiplier.

use crate::kkt::{
    self, check_descent, check_iterate_relations, DescentCheck, DescentParams, LemmaMode, RelationReport,
};
use crate::linalg;
use crate::plada::PladaParams;
use crate::ppala::PpalaParams;
use crate::problem::ProblemSpec;
use crate::state::IterateState;
use crate::trace::{Method, StepView, TraceRecord, TraceSink};

/// Bound for `|ν_j|` on coordinates whose slack step was not clipped.
pub const INTERIOR_NU_TOLERANCE: f64 = 1e-10;

/// Counters accumulated over a run.
#[derive(Clone, Debug, PartialEq)]
pub struct InvariantTally {
    pub steps: usize,
    /// Steps whose starting state breaks `λ = μ + ρ(g(x) + u)`. Only the
    /// first step from an infeasible `x₀` is expected here. The relation and
    /// descent bounds are derived from that identity, so these steps are
    /// excluded from both checks.
    pub unanchored_steps: usize,
    pub relation_failures: usize,
    pub first_relation_failure: Option<(usize, RelationReport)>,
    pub descent_failures: usize,
    pub first_descent_failure: Option<(usize, DescentCheck)>,
    /// Smallest descent slack seen. `+inf` before the first step.
    pub min_descent_slack: f64,
    /// Steps where a Lagrangian value could not be computed.
    pub lagrangian_errors: usize,
    /// Smallest constructed multiplier coordinate.
    pub min_nu: f64,
    pub negative_nu: usize,
    /// Coordinates with `u⁺_j > 0`, where the multiplier must vanish.
    pub interior_coordinates: usize,
    pub max_interior_nu: f64,
    pub interior_nu_violations: usize,
}

impl Default for InvariantTally {
    fn default() -> Self {
        InvariantTally {
            steps: 0,
            unanchored_steps: 0,
            relation_failures: 0,
            first_relation_failure: None,
            descent_failures: 0,
            first_descent_failure: None,
            min_descent_slack: f64::INFINITY,
            lagrangian_errors: 0,
            min_nu: f64::INFINITY,
            negative_nu: 0,
            interior_coordinates: 0,
            max_interior_nu: 0.0,
            interior_nu_violations: 0,
        }
    }
}

impl InvariantTally {
    pub fn relations_ok(&self) -> bool {
        self.relation_failures == 0 && self.unanchored_steps <= 1
    }

    pub fn descent_ok(&self) -> bool {
        self.descent_failures == 0 && self.lagrangian_errors == 0 && self.unanchored_steps <= 1
    }

    pub fn nu_ok(&self) -> bool {
        self.negative_nu == 0 && self.interior_nu_violations == 0
    }
}

pub struct InvariantMonitor<'a> {
    problem: &'a ProblemSpec,
    method: Method,
    mode: LemmaMode,
    alpha: f64,
    beta: f64,
    descent: DescentParams,
    pub tally: InvariantTally,
}

impl<'a> InvariantMonitor<'a> {
    pub fn for_plada(problem: &'a ProblemSpec, params: &PladaParams) -> Self {
        InvariantMonitor {
            problem,
            method: Method::Plada,
            mode: LemmaMode::Plada { gamma0: params.gamma0 },
            alpha: params.alpha,
            beta: params.beta,
            descent: DescentParams {
                eta: params.eta,
                tau: params.tau,
                rho: params.rho,
            },
            tally: InvariantTally::default(),
        }
    }

    pub fn for_ppala(problem: &'a ProblemSpec, params: &PpalaParams) -> Self {
        InvariantMonitor {
            problem,
            method: Method::Ppala,
            mode: LemmaMode::Ppala,
            alpha: params.alpha,
            beta: params.beta,
            descent: DescentParams {
                eta: params.eta,
                tau: params.tau,
                rho: params.rho,
            },
            tally: InvariantTally::default(),
        }
    }

    fn lagrangian(&self, state: &IterateState) -> crate::error::Result<f64> {
        match self.method {
            Method::Plada => kkt::eval_p_lagrangian(self.problem, state, self.alpha, self.beta),
            Method::Ppala => kkt::eval_ppal(self.problem, state, self.alpha, self.beta, self.descent.rho),
        }
    }

    /// Whether `state` satisfies the multiplier identity to `1e-9`, scaled.
    fn anchored(&self, state: &IterateState) -> bool {
        let Ok(g) = self.problem.constraint_values(&state.x) else {
            return false;
        };
        let rho = self.descent.rho;
        (0..g.len()).all(|j| {
            let expect = state.mu[j] + rho * (g[j] + state.u[j]);
            (state.lambda[j] - expect).abs() <= kkt::CHECK_TOLERANCE * (1.0 + expect.abs())
        })
    }

    fn observe(&mut self, step: &StepView<'_>) {
        let anchored = self.anchored(step.prev);
        let t = &mut self.tally;
        t.steps += 1;
        let k = step.prev.k;
        if !anchored {
            t.unanchored_steps += 1;
        }

        let rel = check_iterate_relations(
            step.prev,
            step.next,
            self.descent.rho,
            self.problem.constants.m_g,
            step.delta,
            self.mode,
        );
        if anchored && !rel.all_passed() {
            t.relation_failures += 1;
            t.first_relation_failure.get_or_insert((k, rel));
        }

        for (j, &v) in step.nu.iter().enumerate() {
            t.min_nu = t.min_nu.min(v);
            if !(v >= -kkt::NU_NEGATIVE_SLACK) {
                t.negative_nu += 1;
            }
            if step.next.u[j] > 0.0 {
                t.interior_coordinates += 1;
                t.max_interior_nu = t.max_interior_nu.max(v.abs());
                if !(v.abs() <= INTERIOR_NU_TOLERANCE) {
                    t.interior_nu_violations += 1;
                }
            }
        }

        if !anchored {
            return;
        }
        let values = (self.lagrangian(step.prev), self.lagrangian(step.next));
        let t = &mut self.tally;
        match values {
            (Ok(l_prev), Ok(l_next)) => {
                let dx = linalg::dist(&step.next.x, &step.prev.x);
                let du = linalg::dist(&step.next.u, &step.prev.u);
                let check = check_descent(
                    l_prev,
                    l_next,
                    dx,
                    du,
                    &self.problem.constants,
                    &self.descent,
                    step.delta,
                    self.method,
                );
                t.min_descent_slack = t.min_descent_slack.min(check.slack);
                if !check.passed {
                    t.descent_failures += 1;
                    t.first_descent_failure.get_or_insert((k, check));
                }
            }
            _ => t.lagrangian_errors += 1,
        }
    }
}

impl TraceSink for InvariantMonitor<'_> {
    fn record(&mut self, _record: &TraceRecord) {}

    fn on_step(&mut self, step: &StepView<'_>) {
        self.observe(step);
    }
}
