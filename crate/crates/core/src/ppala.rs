//! PPALA: the single-loop method for smooth constraints. The primal step is
//! a prox-gradient step on the augmented (ρ-penalized) Lagrangian, the
//! slack step uses the freshly updated constraint values, and the
//! auxiliary multiplier moves with the uncapped coefficient
//! `σ_k = δ_k/(‖λ-μ‖²+1)`.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::kkt::{self, augmented_lipschitz, KktTolerances};
use crate::linalg;
use crate::problem::{ConstantEstimates, ProblemSpec, Smoothness};
use crate::solver::{
    self, check_alpha_beta, check_positive, check_schedule, compactness_gate, drive, rho_from, Advance, DriverConfig,
    SolveResult, StepSource, STEP_SAFETY,
};
use crate::state::{Evaluation, IterateState};
use crate::trace::{Method, TraceSink};

/// Scale of the default δ-schedule. With `p = 1` the auxiliary multiplier
/// closes its gap to the limit only like `k^(-1/2)`, because the primal step
/// sees `λ + ρ(g + u)` and so λ settles halfway between μ and the limit.
/// Smaller `p` speeds this up to roughly `k^(-1/(2p))`.
pub const DEFAULT_P: f64 = 0.1;

#[derive(Clone, Debug, PartialEq)]
pub struct PpalaParams {
    pub alpha: f64,
    pub beta: f64,
    pub rho: f64,
    pub eta: f64,
    pub tau: f64,
    /// `δ_k = 1/(p k^q + 1)`
    pub p: f64,
    pub q: f64,
    pub max_iters: usize,
    pub tol: KktTolerances,
    pub lambda_cap: Option<f64>,
    pub stop_on_kkt: bool,
    pub step_source: StepSource,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PpalaOverrides {
    pub eta: Option<f64>,
    pub tau: Option<f64>,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub max_iters: Option<usize>,
    pub tol: Option<KktTolerances>,
    pub lambda_cap: Option<f64>,
    pub stop_on_kkt: Option<bool>,
}

/// `1/(L_ℓ + 3ρM_g²)`
pub fn ppala_eta_bound(constants: &ConstantEstimates, rho: f64) -> f64 {
    1.0 / (augmented_lipschitz(constants, rho) + 3.0 * rho * constants.m_g * constants.m_g)
}

/// `1/(2ρ)`
pub fn ppala_tau_bound(rho: f64) -> f64 {
    1.0 / (2.0 * rho)
}

/// Defaults: `η = 0.9/(L_ℓ + 3ρM_g²)`, `τ = 0.9/(2ρ)`, `p = 0.1`, `q = 1`.
pub fn derive_ppala_params(
    alpha: f64,
    beta: f64,
    constants: &ConstantEstimates,
    overrides: &PpalaOverrides,
) -> Result<PpalaParams> {
    check_alpha_beta(alpha, beta)?;
    constants.validate()?;
    let rho = rho_from(alpha, beta);
    let eta_bound = ppala_eta_bound(constants, rho);
    let tau_bound = ppala_tau_bound(rho);
    let mut warnings = Vec::new();

    let eta = match overrides.eta {
        Some(eta) => {
            check_positive("eta", eta)?;
            if eta >= eta_bound {
                warnings.push(alloc::format!(
                    "eta = {eta} is not below 1/(L_l + 3 rho M_g^2) = {eta_bound}"
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
                warnings.push(alloc::format!("tau = {tau} is not below 1/(2 rho) = {tau_bound}"));
            }
            tau
        }
        None => STEP_SAFETY * tau_bound,
    };
    check_positive("eta", eta)?;
    let p = overrides.p.unwrap_or(DEFAULT_P);
    let q = overrides.q.unwrap_or(1.0);
    check_schedule(p, q)?;
    let tol = overrides.tol.unwrap_or_default();
    tol.validate()?;
    if let Some(cap) = overrides.lambda_cap {
        if !(cap >= 0.0) {
            return Err(Error::Parameter(alloc::format!("lambda_cap must be >= 0, got {cap}")));
        }
    }
    Ok(PpalaParams {
        alpha,
        beta,
        rho,
        eta,
        tau,
        p,
        q,
        max_iters: overrides.max_iters.unwrap_or(solver::DEFAULT_MAX_ITERS),
        tol,
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

fn require_smooth(problem: &ProblemSpec) -> Result<()> {
    if problem.smoothness == Smoothness::Smooth {
        Ok(())
    } else {
        Err(Error::Configuration(alloc::format!(
            "PPALA needs smooth constraints; '{}' declares a subgradient oracle",
            problem.name
        )))
    }
}

fn augmented_direction(eval: &Evaluation, state: &IterateState, rho: f64) -> Vec<f64> {
    let w: Vec<f64> = (0..state.lambda.len())
        .map(|j| state.lambda[j] + rho * (eval.g[j] + state.u[j]))
        .collect();
    let mut d = eval.grad.clone();
    eval.jac.add_transpose_mul(&w, &mut d);
    d
}

/// `∇f(x) + J_g(x)ᵀ(λ + ρ(g(x) + u))`
pub fn grad_ppal_x(problem: &ProblemSpec, state: &IterateState, rho: f64) -> Result<Vec<f64>> {
    require_smooth(problem)?;
    let eval = Evaluation::at(problem, &state.x)?;
    crate::error::check_len("u", problem.num_constraints(), state.u.len())?;
    crate::error::check_len("lambda", problem.num_constraints(), state.lambda.len())?;
    Ok(augmented_direction(&eval, state, rho))
}

/// `σ_k = δ_k/(‖λ-μ‖²+1)`
pub fn ppala_coefficient(delta: f64, lambda: &[f64], mu: &[f64]) -> f64 {
    let gap_sq = linalg::norm_sq(&linalg::sub(lambda, mu));
    kkt::LemmaMode::Ppala.coefficient(delta, gap_sq)
}

fn advance(problem: &ProblemSpec, state: &IterateState, eval: &Evaluation, params: &PpalaParams) -> Result<Advance> {
    let next_k = state.k + 1;
    let rho = params.rho;
    let direction = augmented_direction(eval, state, rho);
    let trial: Vec<f64> = state
        .x
        .iter()
        .zip(&direction)
        .map(|(x, d)| x - params.eta * d)
        .collect();
    let x_next = problem.regularizer.prox(&trial, params.eta);
    if !linalg::all_finite(&x_next) {
        return Err(Error::Divergence { iteration: next_k });
    }

    let eval_next = Evaluation::at(problem, &x_next)?;
    let m = state.u.len();
    let u_next: Vec<f64> = (0..m)
        .map(|j| {
            let w = state.lambda[j] + rho * (eval_next.g[j] + state.u[j]);
            (state.u[j] - params.tau * w).max(0.0)
        })
        .collect();

    let delta = 1.0 / (params.p * libm::pow(state.k as f64, params.q) + 1.0);
    let sigma = ppala_coefficient(delta, &state.lambda, &state.mu);
    let mu_next: Vec<f64> = (0..m)
        .map(|j| state.mu[j] + sigma * (state.lambda[j] - state.mu[j]))
        .collect();
    let lambda_uncapped: Vec<f64> = (0..m)
        .map(|j| mu_next[j] + rho * (eval_next.g[j] + u_next[j]))
        .collect();
    let mut lambda_next = lambda_uncapped.clone();
    solver::project_ball(&mut lambda_next, params.lambda_cap);
    let z_next: Vec<f64> = (0..m).map(|j| (lambda_next[j] - mu_next[j]) / params.alpha).collect();

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
        coefficient: sigma,
        lambda_uncapped,
    })
}

/// One PPALA iteration.
pub fn ppala_step(problem: &ProblemSpec, state: &IterateState, params: &PpalaParams) -> Result<IterateState> {
    require_smooth(problem)?;
    let eval = Evaluation::at(problem, &state.x)?;
    let out = advance(problem, state, &eval, params)?;
    if !out.state.is_finite() {
        return Err(Error::Divergence { iteration: out.state.k });
    }
    Ok(out.state)
}

/// Runs PPALA from `x0` (default: the domain center).
pub fn run_ppala<S: TraceSink + ?Sized>(
    problem: &ProblemSpec,
    params: &PpalaParams,
    x0: Option<Vec<f64>>,
    sink: &mut S,
) -> Result<SolveResult> {
    require_smooth(problem)?;
    let mut warnings = params.warnings.clone();
    compactness_gate(problem, params.step_source, &mut warnings)?;
    let x0 = x0.unwrap_or_else(|| problem.regularizer.center(problem.dimension()));
    let cfg = DriverConfig {
        method: Method::Ppala,
        max_iters: params.max_iters,
        tol: params.tol,
        stop_on_kkt: params.stop_on_kkt,
        eta_ref: params.eta,
    };
    let (tau, rho) = (params.tau, params.rho);
    drive(
        problem,
        x0,
        cfg,
        warnings,
        sink,
        |state, eval| advance(problem, state, eval, params),
        // The certificate relies on λ⁺ - μ⁺ = ρ(g(x⁺) + u⁺), so it is built
        // from the multiplier before any cap projection.
        |prev, step| {
            kkt::build_nu_ppala(
                &prev.lambda,
                &step.lambda_uncapped,
                &step.state.mu,
                &prev.u,
                &step.state.u,
                tau,
                rho,
            )
        },
    )
}
