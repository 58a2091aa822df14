//! Quadratic-penalty baseline: an outer loop that grows the penalty weight
//! and an inner prox-gradient loop on `f + (ρ_t/2)‖max(0, g)‖² + r`.
//! It emits the same trace records as the primal-dual solvers so the runs
//! can be compared side by side.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::kkt::{self, KktTolerances};
use crate::linalg;
use crate::problem::{ProblemSpec, Smoothness};
use crate::solver::{check_positive, composite_objective, record_for, SolveResult, StopReason, Tracker, STEP_SAFETY};
use crate::state::{Evaluation, IterateState};
use crate::trace::TraceSink;

#[derive(Clone, Debug, PartialEq)]
pub struct PenaltySchedule {
    /// Initial penalty weight.
    pub rho0: f64,
    /// Factor applied to the weight after every outer round (`>= 1`).
    pub growth: f64,
    pub rounds: usize,
    pub inner_iters: usize,
    /// Fixed inner step. `None` derives `0.9/(L_f + ρ_t(M_g² + L_g B_g))` per round.
    pub eta: Option<f64>,
    pub tol: KktTolerances,
    pub stop_on_kkt: bool,
}

impl Default for PenaltySchedule {
    fn default() -> Self {
        PenaltySchedule {
            rho0: 1.0,
            growth: 10.0,
            rounds: 3,
            inner_iters: 2_000,
            eta: None,
            tol: KktTolerances::default(),
            stop_on_kkt: true,
        }
    }
}

/// Summary of one outer round, taken at its last inner iterate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PenaltyRound {
    pub rho: f64,
    pub eta: f64,
    pub iterations: usize,
    pub feasibility: f64,
    pub objective: f64,
}

#[derive(Clone, Debug)]
pub struct PenaltyResult {
    pub solve: SolveResult,
    pub rounds: Vec<PenaltyRound>,
}

fn penalty_state(problem: &ProblemSpec, eval: &Evaluation, rho: f64, k: usize) -> (IterateState, Vec<f64>) {
    let nu: Vec<f64> = eval.g.iter().map(|g| rho * g.max(0.0)).collect();
    let m = problem.num_constraints();
    let state = IterateState {
        x: eval.x.clone(),
        u: eval.g.iter().map(|g| (-g).max(0.0)).collect(),
        z: vec![0.0; m],
        lambda: nu.clone(),
        mu: nu.clone(),
        k,
    };
    (state, nu)
}

/// Runs the baseline. The multiplier estimate reported at each iterate is
/// `ρ_t max(0, g(x))`.
pub fn quadratic_penalty_baseline<S: TraceSink + ?Sized>(
    problem: &ProblemSpec,
    schedule: &PenaltySchedule,
    x0: Option<Vec<f64>>,
    sink: &mut S,
) -> Result<PenaltyResult> {
    if problem.smoothness != Smoothness::Smooth {
        return Err(Error::Configuration(alloc::format!(
            "the penalty baseline needs smooth constraints; '{}' declares a subgradient oracle",
            problem.name
        )));
    }
    check_positive("rho0", schedule.rho0)?;
    if !(schedule.growth >= 1.0) || !schedule.growth.is_finite() {
        return Err(Error::Parameter(alloc::format!(
            "growth must be finite and >= 1, got {}",
            schedule.growth
        )));
    }
    if let Some(eta) = schedule.eta {
        check_positive("eta", eta)?;
    }
    schedule.tol.validate()?;

    let c = &problem.constants;
    let step_for = |rho: f64| {
        schedule
            .eta
            .unwrap_or(STEP_SAFETY / (c.l_f + rho * (c.m_g * c.m_g + c.l_g * c.b_g)).max(f64::MIN_POSITIVE))
    };

    let x0 = x0.unwrap_or_else(|| problem.regularizer.center(problem.dimension()));
    if !linalg::all_finite(&x0) {
        return Err(Error::Parameter("x0 must be finite".into()));
    }
    problem.regularizer.value(&x0)?;
    let mut eval = Evaluation::at(problem, &x0)?;
    let mut rho = schedule.rho0;
    let mut eta = step_for(rho);
    let (mut state, nu) = penalty_state(problem, &eval, rho, 0);
    let mut report = kkt::kkt_from_evaluation(problem, &eval, &nu, eta)?;
    sink.record(&record_for(problem, &state, &eval, &report, 0.0, sink.elapsed_sec()));
    let mut tracker = Tracker::new(&state, &eval);
    let mut best = (report.scaled_violation(&schedule.tol), 0usize);

    let mut rounds = Vec::with_capacity(schedule.rounds);
    let mut stop = StopReason::Budget;
    'outer: for round in 0..schedule.rounds {
        if round > 0 {
            rho *= schedule.growth;
            eta = step_for(rho);
        }
        let mut done = 0usize;
        for _ in 0..schedule.inner_iters {
            let weights: Vec<f64> = eval.g.iter().map(|g| rho * g.max(0.0)).collect();
            let mut direction = eval.grad.clone();
            eval.jac.add_transpose_mul(&weights, &mut direction);
            let trial: Vec<f64> = eval.x.iter().zip(&direction).map(|(x, d)| x - eta * d).collect();
            let x_next = problem.regularizer.prox(&trial, eta);
            if !linalg::all_finite(&x_next) {
                return Err(Error::Divergence { iteration: state.k + 1 });
            }
            eval = Evaluation::at(problem, &x_next)?;
            let (next, nu) = penalty_state(problem, &eval, rho, state.k + 1);
            state = next;
            report = kkt::kkt_from_evaluation(problem, &eval, &nu, eta)?;
            sink.record(&record_for(problem, &state, &eval, &report, 0.0, sink.elapsed_sec()));
            tracker.observe(&state, &eval);
            done += 1;
            let score = report.scaled_violation(&schedule.tol);
            if score < best.0 {
                best = (score, state.k);
            }
            if schedule.stop_on_kkt && report.satisfies(&schedule.tol) {
                stop = StopReason::Converged;
                rounds.push(PenaltyRound {
                    rho,
                    eta,
                    iterations: done,
                    feasibility: report.feasibility,
                    objective: composite_objective(problem, &eval),
                });
                break 'outer;
            }
        }
        rounds.push(PenaltyRound {
            rho,
            eta,
            iterations: done,
            feasibility: report.feasibility,
            objective: composite_objective(problem, &eval),
        });
    }

    let final_objective = composite_objective(problem, &eval);
    Ok(PenaltyResult {
        solve: SolveResult {
            iterations: state.k,
            state,
            stop_reason: stop,
            best_iter: best.1,
            final_report: report,
            final_objective,
            max_lambda_norm: tracker.lambda,
            max_u_norm: tracker.u,
            max_g_norm: tracker.g,
            warnings: Vec::new(),
        },
        rounds,
    })
}
