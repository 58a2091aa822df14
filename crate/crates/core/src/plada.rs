//! PLADA: the single-loop primal-dual method for problems whose
//! constraints may be non-smooth (subgradient oracle).
//!
//! One iteration performs, in order, a primal prox-gradient step (or an
//! injected exact subproblem solve), a projected slack step, a capped
//! auxiliary-multiplier step, the closed-form multiplier maximization and
//! the closed-form perturbation minimization.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::kkt::{self, KktTolerances};
use crate::linalg;
use crate::problem::{ConstantEstimates, ProblemSpec};
use crate::solver::{
    self, check_alpha_beta, check_positive, compactness_gate, delta_schedule_plada, drive, rho_from, Advance,
    DriverConfig, ExactSubproblem, SolveResult, StepSource, XUpdateMode, STEP_SAFETY,
};
use crate::state::{Evaluation, IterateState};
use crate::trace::{Method, TraceSink};

/// μ-step cap used when none is given.
pub const DEFAULT_GAMMA0: f64 = 0.1;

#[derive(Clone, Debug, PartialEq)]
pub struct PladaParams {
    pub alpha: f64,
    pub beta: f64,
    /// Always `α/(1+αβ)`.
    pub rho: f64,
    pub eta: f64,
    pub tau: f64,
    /// Cap on the μ-step coefficient, in `(0, 1]`.
    pub gamma0: f64,
    /// `δ_k = κ/(k+1)`, with `κ ∈ (0, 1]`.
    pub kappa: f64,
    pub max_iters: usize,
    pub tol: KktTolerances,
    pub x_update_mode: XUpdateMode,
    /// Radius of the multiplier ball; `None` leaves λ unprojected.
    pub lambda_cap: Option<f64>,
    /// Stop as soon as the residuals meet `tol`. Off means a fixed budget.
    pub stop_on_kkt: bool,
    pub step_source: StepSource,
    pub warnings: Vec<String>,
}

/// Optional replacements for the derived defaults.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PladaOverrides {
    pub eta: Option<f64>,
    pub tau: Option<f64>,
    pub gamma0: Option<f64>,
    pub kappa: Option<f64>,
    pub max_iters: Option<usize>,
    pub tol: Option<KktTolerances>,
    pub x_update_mode: Option<XUpdateMode>,
    pub lambda_cap: Option<f64>,
    pub stop_on_kkt: Option<bool>,
}

/// Upper bound on η admitted by the analysis: `1/(L_f + 3ρM_g²)`.
pub fn plada_eta_bound(constants: &ConstantEstimates, rho: f64) -> f64 {
    1.0 / (constants.l_f + 3.0 * rho * constants.m_g * constants.m_g)
}

/// `1/(3ρ)`
pub fn plada_tau_bound(rho: f64) -> f64 {
    1.0 / (3.0 * rho)
}

/// Builds parameters from `α, β` and the problem constants.
///
/// Defaults are `η = 0.9/(L_f + 3ρM_g²)` and `τ = 0.9/(3ρ)`. An override
/// that exceeds its bound is accepted and recorded in `warnings`.
pub fn derive_plada_params(
    alpha: f64,
    beta: f64,
    constants: &ConstantEstimates,
    overrides: &PladaOverrides,
) -> Result<PladaParams> {
    check_alpha_beta(alpha, beta)?;
    constants.validate()?;
    let rho = rho_from(alpha, beta);
    let eta_bound = plada_eta_bound(constants, rho);
    let tau_bound = plada_tau_bound(rho);
    let mut warnings = Vec::new();

    let eta = match overrides.eta {
        Some(eta) => {
            check_positive("eta", eta)?;
            if eta >= eta_bound {
                warnings.push(alloc::format!(
                    "eta = {eta} is not below 1/(L_f + 3 rho M_g^2) = {eta_bound}"
                ));
            }
            eta
        }
        None => STEP_SAFETY * eta_bound,
    };
    let tau = match overrides.tau {
        Some(tau) => {
            check_positive("tau", tau)?;
            if tau >= tau_bound {
                warnings.push(alloc::format!("tau = {tau} is not below 1/(3 rho) = {tau_bound}"));
            }
            tau
        }
        None => STEP_SAFETY * tau_bound,
    };
    check_positive("eta", eta)?;

    let gamma0 = overrides.gamma0.unwrap_or(DEFAULT_GAMMA0);
    if !(gamma0 > 0.0 && gamma0 <= 1.0) {
        return Err(Error::Parameter(alloc::format!(
            "gamma0 must lie in (0, 1], got {gamma0}"
        )));
    }
    let kappa = overrides.kappa.unwrap_or(1.0);
    if !(kappa > 0.0 && kappa <= 1.0) {
        return Err(Error::Parameter(alloc::format!(
            "kappa must lie in (0, 1], got {kappa}"
        )));
    }
    let tol = overrides.tol.unwrap_or_default();
    tol.validate()?;
    if let Some(cap) = overrides.lambda_cap {
        if !(cap >= 0.0) {
            return Err(Error::Parameter(alloc::format!("lambda_cap must be >= 0, got {cap}")));
        }
    }
    Ok(PladaParams {
        alpha,
        beta,
        rho,
        eta,
        tau,
        gamma0,
        kappa,
        max_iters: overrides.max_iters.unwrap_or(solver::DEFAULT_MAX_ITERS),
        tol,
        x_update_mode: overrides.x_update_mode.unwrap_or_default(),
        lambda_cap: overrides.lambda_cap,
        stop_on_kkt: overrides.stop_on_kkt.unwrap_or(true),
        step_source: if overrides.eta.is_some() {
            StepSource::Overridden
        } else {
            StepSource::Derived
        },
        warnings,
    })
}

/// `γ_k = min(γ₀, δ_k/(‖λ-μ‖²+1))`
pub fn plada_coefficient(gamma0: f64, delta: f64, lambda: &[f64], mu: &[f64]) -> f64 {
    let gap_sq = linalg::norm_sq(&linalg::sub(lambda, mu));
    kkt::LemmaMode::Plada { gamma0 }.coefficient(delta, gap_sq)
}

fn advance(
    problem: &ProblemSpec,
    state: &IterateState,
    eval: &Evaluation,
    params: &PladaParams,
    exact: Option<&dyn ExactSubproblem>,
) -> Result<Advance> {
    let next_k = state.k + 1;
    let x_next = match params.x_update_mode {
        XUpdateMode::Linearized => {
            let mut direction = eval.grad.clone();
            eval.jac.add_transpose_mul(&state.lambda, &mut direction);
            let trial: Vec<f64> = state
                .x
                .iter()
                .zip(&direction)
                .map(|(x, d)| x - params.eta * d)
                .collect();
            problem.regularizer.prox(&trial, params.eta)
        }
        XUpdateMode::ExactSubproblem => {
            let solver =
                exact.ok_or_else(|| Error::Configuration("exact-subproblem mode needs a subproblem solver".into()))?;
            let x = solver.solve(problem, &state.x, &eval.grad, &state.lambda, params.eta)?;
            crate::error::check_len("subproblem solution", problem.dimension(), x.len())?;
            x
        }
    };
    if !linalg::all_finite(&x_next) {
        return Err(Error::Divergence { iteration: next_k });
    }

    let u_next: Vec<f64> = state
        .u
        .iter()
        .zip(&state.lambda)
        .map(|(u, l)| (u - params.tau * l).max(0.0))
        .collect();

    let delta = delta_schedule_plada(state.k, params.kappa);
    let gamma = plada_coefficient(params.gamma0, delta, &state.lambda, &state.mu);
    let mu_next: Vec<f64> = state
        .mu
        .iter()
        .zip(&state.lambda)
        .map(|(m, l)| m + gamma * (l - m))
        .collect();

    let eval_next = Evaluation::at(problem, &x_next)?;
    let lambda_uncapped: Vec<f64> = (0..mu_next.len())
        .map(|j| mu_next[j] + params.rho * (eval_next.g[j] + u_next[j]))
        .collect();
    let mut lambda_next = lambda_uncapped.clone();
    solver::project_ball(&mut lambda_next, params.lambda_cap);
    let z_next: Vec<f64> = lambda_next
        .iter()
        .zip(&mu_next)
        .map(|(l, m)| (l - m) / params.alpha)
        .collect();

    Ok(Advance {
        state: IterateState {
            x: x_next,
            u: u_next,
            z: z_next,
            lambda: lambda_next,
            mu: mu_next,
            k: next_k,
        },
        eval: eval_next,
        delta,
        coefficient: gamma,
        lambda_uncapped,
    })
}

/// One PLADA iteration in linearized mode.
pub fn plada_step(problem: &ProblemSpec, state: &IterateState, params: &PladaParams) -> Result<IterateState> {
    plada_step_with(problem, state, params, None)
}

/// One PLADA iteration, with an optional exact subproblem solver for
/// [`XUpdateMode::ExactSubproblem`].
pub fn plada_step_with(
    problem: &ProblemSpec,
    state: &IterateState,
    params: &PladaParams,
    exact: Option<&dyn ExactSubproblem>,
) -> Result<IterateState> {
    let eval = Evaluation::at(problem, &state.x)?;
    let out = advance(problem, state, &eval, params, exact)?;
    if !out.state.is_finite() {
        return Err(Error::Divergence { iteration: out.state.k });
    }
    Ok(out.state)
}

/// Runs PLADA from `x0` (default: the domain center) and reports every
/// iterate to `sink`.
pub fn run_plada<S: TraceSink + ?Sized>(
    problem: &ProblemSpec,
    params: &PladaParams,
    x0: Option<Vec<f64>>,
    sink: &mut S,
) -> Result<SolveResult> {
    run_plada_with(problem, params, x0, None, sink)
}

pub fn run_plada_with<S: TraceSink + ?Sized>(
    problem: &ProblemSpec,
    params: &PladaParams,
    x0: Option<Vec<f64>>,
    exact: Option<&dyn ExactSubproblem>,
    sink: &mut S,
) -> Result<SolveResult> {
    let mut warnings = params.warnings.clone();
    compactness_gate(problem, params.step_source, &mut warnings)?;
    if params.x_update_mode == XUpdateMode::ExactSubproblem && exact.is_none() {
        return Err(Error::Configuration(
            "exact-subproblem mode needs a subproblem solver".into(),
        ));
    }
    let x0 = x0.unwrap_or_else(|| problem.regularizer.center(problem.dimension()));
    let cfg = DriverConfig {
        method: Method::Plada,
        max_iters: params.max_iters,
        tol: params.tol,
        stop_on_kkt: params.stop_on_kkt,
        eta_ref: params.eta,
    };
    let tau = params.tau;
    drive(
        problem,
        x0,
        cfg,
        warnings,
        sink,
        |state, eval| advance(problem, state, eval, params, exact),
        |prev, step| kkt::build_nu_plada(&prev.lambda, &prev.u, &step.state.u, tau),
    )
}
