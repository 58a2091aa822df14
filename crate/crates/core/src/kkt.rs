//! KKT diagnostics: residuals of an approximate KKT point, the non-negative
//! multiplier certificates built from consecutive slack iterates, Lagrangian
//! evaluations, and per-iteration checks of the relations the convergence
//! analysis relies on.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_len, Error, Result};
use crate::linalg;
use crate::problem::{ConstantEstimates, ProblemSpec};
use crate::state::{Evaluation, IterateState};
use crate::trace::TraceRecord;

/// Coordinates of a constructed multiplier may dip this far below zero
/// from rounding before the construction is considered inconsistent.
pub const NU_NEGATIVE_SLACK: f64 = 1e-10;

/// Tolerance used by the relation and descent checks.
pub const CHECK_TOLERANCE: f64 = 1e-9;

/// Residuals of one primal point against a multiplier certificate.
#[derive(Clone, Debug, PartialEq)]
pub struct KktReport {
    /// Prox-gradient mapping residual of `∇f + Jᵀν` at the reference step.
    pub stationarity: f64,
    /// `‖max(0, g(x))‖₂`
    pub feasibility: f64,
    /// `Σ_j |ν_j g_j(x)|`
    pub complementarity: f64,
    /// `‖λ - μ‖`, filled in by the solvers (zero when computed from `x, ν` alone).
    pub dual_gap: f64,
    pub nu: Vec<f64>,
}

impl KktReport {
    pub fn satisfies(&self, tol: &KktTolerances) -> bool {
        self.stationarity <= tol.eps_stationarity
            && self.feasibility <= tol.eps_feasibility
            && self.complementarity <= tol.eps_complementarity
    }

    /// Largest residual measured in units of its tolerance.
    pub fn scaled_violation(&self, tol: &KktTolerances) -> f64 {
        (self.stationarity / tol.eps_stationarity)
            .max(self.feasibility / tol.eps_feasibility)
            .max(self.complementarity / tol.eps_complementarity)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KktTolerances {
    pub eps_stationarity: f64,
    pub eps_feasibility: f64,
    pub eps_complementarity: f64,
}

impl KktTolerances {
    pub fn uniform(eps: f64) -> Self {
        KktTolerances {
            eps_stationarity: eps,
            eps_feasibility: eps,
            eps_complementarity: eps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.eps_stationarity > 0.0 && self.eps_feasibility > 0.0 && self.eps_complementarity > 0.0 {
            Ok(())
        } else {
            Err(Error::Parameter("KKT tolerances must all be > 0".into()))
        }
    }
}

impl Default for KktTolerances {
    fn default() -> Self {
        KktTolerances::uniform(1e-3)
    }
}

fn check_nonnegative(what: &'static str, nu: &[f64]) -> Result<()> {
    match nu.iter().enumerate().find(|(_, v)| !(**v >= -NU_NEGATIVE_SLACK)) {
        Some((j, v)) => Err(Error::Precondition {
            what,
            coordinate: j,
            value: *v,
        }),
        None => Ok(()),
    }
}

/// Certificate for the PLADA slack step: `ν = λ_k + (u_{k+1} - u_k) / τ`.
///
/// Non-negative whenever `u_{k+1} = max(0, u_k - τ λ_k)`.
pub fn build_nu_plada(lambda_k: &[f64], u_k: &[f64], u_next: &[f64], tau: f64) -> Result<Vec<f64>> {
    check_len("u_k", lambda_k.len(), u_k.len())?;
    check_len("u_next", lambda_k.len(), u_next.len())?;
    let nu: Vec<f64> = lambda_k
        .iter()
        .zip(u_k.iter().zip(u_next))
        .map(|(l, (u, un))| l + (un - u) / tau)
        .collect();
    check_nonnegative("build_nu_plada", &nu)?;
    Ok(nu)
}

/// Certificate for the PPALA slack step:
/// `ν = λ_k + λ_{k+1} - μ_{k+1} + (1/τ - ρ)(u_{k+1} - u_k)`.
///
/// Exactly zero on coordinates where the slack projection was inactive.
pub fn build_nu_ppala(
    lambda_k: &[f64],
    lambda_next: &[f64],
    mu_next: &[f64],
    u_k: &[f64],
    u_next: &[f64],
    tau: f64,
    rho: f64,
) -> Result<Vec<f64>> {
    let m = lambda_k.len();
    check_len("lambda_next", m, lambda_next.len())?;
    check_len("mu_next", m, mu_next.len())?;
    check_len("u_k", m, u_k.len())?;
    check_len("u_next", m, u_next.len())?;
    let c = 1.0 / tau - rho;
    let nu: Vec<f64> = (0..m)
        .map(|j| lambda_k[j] + lambda_next[j] - mu_next[j] + c * (u_next[j] - u_k[j]))
        .collect();
    check_nonnegative("build_nu_ppala", &nu)?;
    Ok(nu)
}

/// Residuals at `x` for a non-negative multiplier `nu`.
pub fn kkt_residuals(problem: &ProblemSpec, x: &[f64], nu: &[f64], eta_ref: f64) -> Result<KktReport> {
    let eval = Evaluation::at(problem, x)?;
    kkt_from_evaluation(problem, &eval, nu, eta_ref)
}

pub(crate) fn kkt_from_evaluation(
    problem: &ProblemSpec,
    eval: &Evaluation,
    nu: &[f64],
    eta_ref: f64,
) -> Result<KktReport> {
    check_len("nu", problem.num_constraints(), nu.len())?;
    if !(eta_ref > 0.0) {
        return Err(Error::Parameter("eta_ref must be > 0".into()));
    }
    check_nonnegative("kkt_residuals nu", nu)?;
    let nu: Vec<f64> = nu.iter().map(|v| v.max(0.0)).collect();

    let mut direction = eval.grad.clone();
    eval.jac.add_transpose_mul(&nu, &mut direction);
    let trial: Vec<f64> = eval.x.iter().zip(&direction).map(|(x, d)| x - eta_ref * d).collect();
    let projected = problem.regularizer.prox(&trial, eta_ref);
    let stationarity = linalg::dist(&eval.x, &projected) / eta_ref;

    let feasibility = libm::sqrt(eval.g.iter().map(|v| linalg::sq(v.max(0.0))).sum());
    let complementarity = nu.iter().zip(&eval.g).map(|(n, g)| (n * g).abs()).sum();
    Ok(KktReport {
        stationarity,
        feasibility,
        complementarity,
        dual_gap: 0.0,
        nu,
    })
}

// Five parallel per-constraint arrays read more clearly by index.
#[allow(clippy::needless_range_loop)]
fn lagrangian_core(
    problem: &ProblemSpec,
    state: &IterateState,
    alpha: f64,
    beta: f64,
    augmentation: Option<f64>,
) -> Result<f64> {
    let m = problem.num_constraints();
    check_len("u", m, state.u.len())?;
    check_len("z", m, state.z.len())?;
    check_len("lambda", m, state.lambda.len())?;
    check_len("mu", m, state.mu.len())?;
    let r = problem.regularizer.value(&state.x)?;
    let mut grad = vec![0.0; problem.dimension()];
    let f = problem.objective_into(&state.x, &mut grad)?;
    let g = problem.constraint_values(&state.x)?;

    let mut value = f + r;
    let mut gap_sq = 0.0;
    let mut slack_sq = 0.0;
    for j in 0..m {
        let s = g[j] + state.u[j];
        value += state.lambda[j] * (s - state.z[j]) + state.mu[j] * state.z[j];
        value += 0.5 * alpha * state.z[j] * state.z[j];
        let d = state.lambda[j] - state.mu[j];
        gap_sq += d * d;
        slack_sq += s * s;
    }
    value -= 0.5 * beta * gap_sq;
    if let Some(rho) = augmentation {
        value += 0.5 * rho * slack_sq;
    }
    Ok(value)
}

/// P-Lagrangian
/// `f + ⟨λ, g + u - z⟩ + ⟨μ, z⟩ + (α/2)‖z‖² - (β/2)‖λ - μ‖² + r`.
pub fn eval_p_lagrangian(problem: &ProblemSpec, state: &IterateState, alpha: f64, beta: f64) -> Result<f64> {
    lagrangian_core(problem, state, alpha, beta, None)
}

/// Augmented variant: the P-Lagrangian plus `(ρ/2)‖g + u‖²`.
pub fn eval_ppal(problem: &ProblemSpec, state: &IterateState, alpha: f64, beta: f64, rho: f64) -> Result<f64> {
    lagrangian_core(problem, state, alpha, beta, Some(rho))
}

/// Which algorithm produced a step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LemmaMode {
    /// Capped μ-step `γ = min(γ₀, δ/(‖λ-μ‖²+1))`.
    Plada { gamma0: f64 },
    /// Uncapped μ-step `σ = δ/(‖λ-μ‖²+1)`.
    Ppala,
}

impl LemmaMode {
    pub fn coefficient(&self, delta: f64, gap_sq: f64) -> f64 {
        let raw = delta / (gap_sq + 1.0);
        match self {
            LemmaMode::Plada { gamma0 } => raw.min(*gamma0),
            LemmaMode::Ppala => raw,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RelationCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub passed: bool,
}

impl RelationCheck {
    fn le(lhs: f64, rhs: f64) -> Self {
        RelationCheck {
            lhs,
            rhs,
            passed: lhs <= rhs + CHECK_TOLERANCE,
        }
    }

    fn eq(lhs: f64, rhs: f64) -> Self {
        RelationCheck {
            lhs,
            rhs,
            passed: (lhs - rhs).abs() <= CHECK_TOLERANCE,
        }
    }
}

/// Outcome of the four per-step iterate relations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RelationReport {
    /// `‖μ⁺ - μ‖² <= δ²/4`
    pub mu_step: RelationCheck,
    /// `coeff · ‖λ - μ‖² <= δ`
    pub weighted_gap: RelationCheck,
    /// `‖μ⁺ - λ‖ = (1 - coeff)‖λ - μ‖`
    pub contraction: RelationCheck,
    /// `‖λ⁺ - λ‖² <= 3ρ²M_g²‖Δx‖² + 3ρ²‖Δu‖² + extra`
    pub lambda_step: RelationCheck,
}

impl RelationReport {
    pub fn all_passed(&self) -> bool {
        self.mu_step.passed && self.weighted_gap.passed && self.contraction.passed && self.lambda_step.passed
    }
}

/// Checks the multiplier relations between two consecutive iterates.
///
/// The extra term of the λ-step bound is `3δ²/4` for PPALA and
/// `3·coeff²·‖λ-μ‖²` for PLADA.
pub fn check_iterate_relations(
    prev: &IterateState,
    next: &IterateState,
    rho: f64,
    m_g: f64,
    delta_k: f64,
    mode: LemmaMode,
) -> RelationReport {
    let gap_sq = linalg::norm_sq(&linalg::sub(&prev.lambda, &prev.mu));
    let coeff = mode.coefficient(delta_k, gap_sq);

    let mu_step_sq = linalg::norm_sq(&linalg::sub(&next.mu, &prev.mu));
    let mu_step = RelationCheck::le(mu_step_sq, 0.25 * delta_k * delta_k);
    let weighted_gap = RelationCheck::le(coeff * gap_sq, delta_k);
    let contraction = RelationCheck::eq(linalg::dist(&next.mu, &prev.lambda), (1.0 - coeff) * libm::sqrt(gap_sq));

    let dx_sq = linalg::norm_sq(&linalg::sub(&next.x, &prev.x));
    let du_sq = linalg::norm_sq(&linalg::sub(&next.u, &prev.u));
    let extra = match mode {
        LemmaMode::Ppala => 0.75 * delta_k * delta_k,
        LemmaMode::Plada { .. } => 3.0 * coeff * coeff * gap_sq,
    };
    let lambda_step = RelationCheck::le(
        linalg::norm_sq(&linalg::sub(&next.lambda, &prev.lambda)),
        3.0 * rho * rho * m_g * m_g * dx_sq + 3.0 * rho * rho * du_sq + extra,
    );
    RelationReport {
        mu_step,
        weighted_gap,
        contraction,
        lambda_step,
    }
}

/// `L_ℓ = L_f + L_g B_λ + ρ(L_g B_u + L_g B_g + M_g²)`, the Lipschitz
/// constant of the x-gradient of the augmented Lagrangian.
pub fn augmented_lipschitz(constants: &ConstantEstimates, rho: f64) -> f64 {
    let c = constants;
    c.l_f + c.l_g * c.b_lambda + rho * (c.l_g * c.b_u + c.l_g * c.b_g + c.m_g * c.m_g)
}

/// Step sizes entering the descent bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DescentParams {
    pub eta: f64,
    pub tau: f64,
    pub rho: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DescentCheck {
    pub passed: bool,
    /// `-c₁‖Δx‖² - c₂‖Δu‖² + δ̂ - (L_next - L_prev)`; pass iff `>= -1e-9`.
    pub slack: f64,
    pub c1: f64,
    pub c2: f64,
    pub delta_hat: f64,
}

/// Descent coefficients `(c₁, c₂, δ̂)` for one mode.
pub fn descent_coefficients(
    constants: &ConstantEstimates,
    params: &DescentParams,
    delta_k: f64,
    mode: crate::trace::Method,
) -> (f64, f64, f64) {
    use crate::trace::Method;
    let DescentParams { eta, tau, rho } = *params;
    let mg2 = constants.m_g * constants.m_g;
    match mode {
        Method::Plada => (
            0.5 * (1.0 / eta - constants.l_f - 3.0 * rho * mg2),
            0.5 * (1.0 / tau - 3.0 * rho),
            delta_k * delta_k / (2.0 * rho) + delta_k / rho,
        ),
        Method::Ppala => (
            0.5 * (1.0 / eta - augmented_lipschitz(constants, rho) - 3.0 * rho * mg2),
            1.0 / tau - 2.0 * rho,
            delta_k * delta_k / (4.0 * rho) + delta_k / rho,
        ),
    }
}

/// Approximate-decrease check between consecutive Lagrangian values.
#[allow(clippy::too_many_arguments)]
pub fn check_descent(
    l_prev: f64,
    l_next: f64,
    dx_norm: f64,
    du_norm: f64,
    constants: &ConstantEstimates,
    params: &DescentParams,
    delta_k: f64,
    mode: crate::trace::Method,
) -> DescentCheck {
    let (c1, c2, delta_hat) = descent_coefficients(constants, params, delta_k, mode);
    let slack = -c1 * dx_norm * dx_norm - c2 * du_norm * du_norm + delta_hat - (l_next - l_prev);
    DescentCheck {
        passed: slack >= -CHECK_TOLERANCE,
        slack,
        c1,
        c2,
        delta_hat,
    }
}

/// Ratio of running averages at `4T` versus `T`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RateRatio {
    Value(f64),
    /// Both averages are zero.
    Converged,
}

impl RateRatio {
    fn of(late: f64, early: f64) -> Self {
        if early == 0.0 && late == 0.0 {
            RateRatio::Converged
        } else {
            RateRatio::Value(late / early)
        }
    }

    /// Passes a `<= bound` test; a converged pair always passes.
    pub fn at_most(&self, bound: f64) -> bool {
        match self {
            RateRatio::Value(v) => *v <= bound,
            RateRatio::Converged => true,
        }
    }
}

/// Empirical rate report from a trace.
#[derive(Clone, Debug, PartialEq)]
pub struct RateReport {
    pub t: usize,
    pub sufficient: bool,
    /// Running averages over iterations `1..=T` and `1..=4T`.
    pub stationarity_sq: (f64, f64),
    pub feasibility_sq: (f64, f64),
    pub complementarity: (f64, f64),
    pub stationarity_ratio: RateRatio,
    pub feasibility_ratio: RateRatio,
    pub complementarity_ratio: RateRatio,
}

/// Running-average rate report. With `t = None` the checkpoint is a quarter
/// of the last recorded iteration. The initial record (iteration 0) is not
/// part of the averages.
pub fn rate_summary(trace: &[TraceRecord], t: Option<usize>) -> RateReport {
    let last = trace.iter().map(|r| r.iter).max().unwrap_or(0);
    let t = t.unwrap_or(last / 4);
    let window = |upto: usize| -> (usize, f64, f64, f64) {
        let mut n = 0usize;
        let (mut s, mut f, mut c) = (0.0, 0.0, 0.0);
        for r in trace.iter().filter(|r| r.iter >= 1 && r.iter <= upto) {
            n += 1;
            s += r.stationarity * r.stationarity;
            f += r.feasibility * r.feasibility;
            c += r.complementarity;
        }
        if n == 0 {
            (0, 0.0, 0.0, 0.0)
        } else {
            let nf = n as f64;
            (n, s / nf, f / nf, c / nf)
        }
    };
    let (n_early, s1, f1, c1) = window(t);
    let (n_late, s4, f4, c4) = window(4 * t);
    let sufficient = t >= 1 && n_early >= 1 && n_late > n_early && last >= 4 * t && trace.len() >= 4;
    RateReport {
        t,
        sufficient,
        stationarity_sq: (s1, s4),
        feasibility_sq: (f1, f4),
        complementarity: (c1, c4),
        stationarity_ratio: RateRatio::of(s4, s1),
        feasibility_ratio: RateRatio::of(f4, f1),
        complementarity_ratio: RateRatio::of(c4, c1),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::make_disk_problem;
    use crate::trace::Method;
    #[allow(unused_imports)]
    use alloc::vec;
    use core::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn nu_plada_interior_clipped_zero() {
        let nu = build_nu_plada(&[0.5], &[0.2], &[0.15], 0.1).unwrap();
        assert!(nu[0].abs() < 1e-12);
        let nu = build_nu_plada(&[0.5], &[0.02], &[0.0], 0.1).unwrap();
        assert!((nu[0] - 0.3).abs() < 1e-12);
        let nu = build_nu_plada(&[0.0], &[0.4], &[0.4], 0.1).unwrap();
        assert_eq!(nu, vec![0.0]);
    }

    #[test]
    fn nu_plada_rejects_mismatched_inputs() {
        // u_next far below u_k - τλ cannot come from the projection.
        let r = build_nu_plada(&[0.0], &[1.0], &[0.0], 0.1);
        assert!(matches!(r, Err(Error::Precondition { coordinate: 0, .. })));
    }

    #[test]
    fn nu_ppala_cases() {
        // Interior: u_k=0, λ_k=1, g(x⁺)=-0.5, ρ=5, τ=0.1 → u⁺=0.15, λ⁺=5(-0.5+0.15)
        let u_next: f64 = 0.0 - 0.1 * (1.0 + 5.0 * (-0.5 + 0.0));
        assert!((u_next - 0.15).abs() < 1e-15);
        let lambda_next = 5.0 * (-0.5 + u_next);
        let nu = build_nu_ppala(&[1.0], &[lambda_next], &[0.0], &[0.0], &[u_next], 0.1, 5.0).unwrap();
        assert!(nu[0].abs() < 1e-12, "{nu:?}");
        // Clipped: λ_k=4 → inner -0.15 → u⁺=0, λ⁺=-2.5, ν = 4 - 2.5 = 1.5
        let nu = build_nu_ppala(&[4.0], &[-2.5], &[0.0], &[0.0], &[0.0], 0.1, 5.0).unwrap();
        assert!((nu[0] - 1.5).abs() < 1e-12);
        let nu = build_nu_ppala(&[0.0], &[0.0], &[0.0], &[0.0], &[0.0], 0.1, 5.0).unwrap();
        assert_eq!(nu, vec![0.0]);
    }

    #[test]
    fn residuals_at_disk_kkt_point() {
        let p = make_disk_problem();
        let near = -FRAC_1_SQRT_2 + 3e-6;
        let r = kkt_residuals(&p, &[near, near], &[FRAC_1_SQRT_2 + 3e-6], 0.01).unwrap();
        assert!(
            r.stationarity <= 1e-4 && r.feasibility <= 1e-4 && r.complementarity <= 1e-4,
            "{r:?}"
        );
        let r = kkt_residuals(&p, &[2.0, 0.0], &[0.0], 0.01).unwrap();
        assert_eq!(r.feasibility, 3.0);
        let r = kkt_residuals(&p, &[-FRAC_1_SQRT_2, -FRAC_1_SQRT_2], &[FRAC_1_SQRT_2], 0.01).unwrap();
        assert!(r.stationarity <= 1e-6 && r.feasibility <= 1e-6 && r.complementarity <= 1e-6);
    }

    #[test]
    fn residuals_reject_negative_multiplier() {
        let p = make_disk_problem();
        assert!(kkt_residuals(&p, &[0.0, 0.0], &[-1.0], 0.01).is_err());
    }

    fn state(x: &[f64], u: &[f64], z: &[f64], lambda: &[f64], mu: &[f64]) -> IterateState {
        IterateState {
            x: x.to_vec(),
            u: u.to_vec(),
            z: z.to_vec(),
            lambda: lambda.to_vec(),
            mu: mu.to_vec(),
            k: 0,
        }
    }

    #[test]
    fn p_lagrangian_hand_values() {
        let p = make_disk_problem();
        let zero = state(&[0.0, 0.0], &[0.0], &[0.0], &[0.0], &[0.0]);
        assert_eq!(eval_p_lagrangian(&p, &zero, 10.0, 0.1).unwrap(), 0.0);
        // x=(0.5,0): f=0.5, g=-0.75; u=1.25 → g+u=0.5; λ=μ=1, z=0 → f + 0.5
        let s = state(&[0.5, 0.0], &[1.25], &[0.0], &[1.0], &[1.0]);
        let v = eval_p_lagrangian(&p, &s, 10.0, 0.1).unwrap();
        assert!((v - 1.0).abs() < 1e-14);
        // g(0) = -1, u = 0, ρ = 5 → 2.5
        let v = eval_ppal(&p, &zero, 10.0, 0.1, 5.0).unwrap();
        assert!((v - 2.5).abs() < 1e-14);
    }

    #[test]
    fn reduced_form_matches_after_z_substitution() {
        let p = make_disk_problem();
        let (alpha, beta) = (10.0, 0.1);
        let rho = alpha / (1.0 + alpha * beta);
        let (lambda, mu) = (0.9, 0.3);
        let s = state(&[0.3, -0.4], &[0.2], &[(lambda - mu) / alpha], &[lambda], &[mu]);
        let full = eval_p_lagrangian(&p, &s, alpha, beta).unwrap();
        let g = 0.09 + 0.16 - 1.0;
        let reduced = -0.1 + lambda * (g + 0.2) - (lambda - mu) * (lambda - mu) / (2.0 * rho);
        assert!((full - reduced).abs() < 1e-14);
    }

    #[test]
    fn lagrangian_rejects_points_outside_box() {
        let p = make_disk_problem();
        let s = state(&[3.0, 0.0], &[0.0], &[0.0], &[0.0], &[0.0]);
        assert!(matches!(
            eval_p_lagrangian(&p, &s, 10.0, 0.1),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn relations_fixed_point_and_violation() {
        let s = state(&[0.1], &[0.0], &[0.0], &[0.5], &[0.5]);
        let r = check_iterate_relations(&s, &s, 5.0, 1.0, 0.5, LemmaMode::Plada { gamma0: 0.1 });
        assert!(r.all_passed());
        assert_eq!(r.lambda_step.lhs, 0.0);
        let mut bad = s.clone();
        bad.lambda[0] += 10.0;
        let r = check_iterate_relations(&s, &bad, 5.0, 1.0, 0.5, LemmaMode::Plada { gamma0: 0.1 });
        assert!(!r.lambda_step.passed);
        assert!(r.mu_step.passed && r.contraction.passed && r.weighted_gap.passed);
    }

    #[test]
    fn descent_constants_formula() {
        let c = ConstantEstimates::new(1.0, 0.0, 1.0, 1.0);
        let params = DescentParams {
            eta: 0.05,
            tau: 0.05,
            rho: 5.0,
        };
        let (c1, c2, dh) = descent_coefficients(&c, &params, 0.5, Method::Plada);
        assert!((c1 - 2.0).abs() < 1e-12);
        assert!((c2 - 2.5).abs() < 1e-12);
        assert!((dh - (0.25 / 10.0 + 0.1)).abs() < 1e-12);
        let d = check_descent(1.0, 1.0, 0.0, 0.0, &c, &params, 0.5, Method::Plada);
        assert!(d.passed);
        assert!((d.slack - dh).abs() < 1e-15);
    }

    fn record(iter: usize, s: f64, f: f64, c: f64) -> TraceRecord {
        TraceRecord {
            iter,
            elapsed_sec: 0.0,
            objective: 0.0,
            feasibility: f,
            stationarity: s,
            complementarity: c,
            dual_gap: 0.0,
            lambda_norm: 0.0,
            mu_norm: 0.0,
            delta_k: 0.0,
        }
    }

    #[test]
    fn rate_summary_zero_trace_is_converged() {
        let trace: Vec<_> = (0..=40).map(|k| record(k, 0.0, 0.0, 0.0)).collect();
        let r = rate_summary(&trace, None);
        assert!(r.sufficient);
        assert_eq!(r.stationarity_ratio, RateRatio::Converged);
        assert_eq!(r.feasibility_ratio, RateRatio::Converged);
        assert!(r.complementarity_ratio.at_most(0.0));
    }

    #[test]
    fn rate_summary_short_trace_is_insufficient() {
        let trace: Vec<_> = (0..3).map(|k| record(k, 1.0, 1.0, 1.0)).collect();
        assert!(!rate_summary(&trace, None).sufficient);
    }
}
