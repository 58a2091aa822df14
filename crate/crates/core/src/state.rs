use alloc::vec;
use alloc::vec::Vec;

use crate::error::Result;
use crate::linalg::{self, Matrix};
use crate::problem::ProblemSpec;

/// Primal-dual tuple `(x, u, z, λ, μ)` plus the iteration counter.
///
/// `u` is the non-negative slack of `g(x) + u = z`, `z` the perturbation
/// driven to zero, `λ` the multiplier of that equality, `μ` the slowly
/// moving auxiliary multiplier.
#[derive(Clone, Debug, PartialEq)]
pub struct IterateState {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub z: Vec<f64>,
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
    pub k: usize,
}

impl IterateState {
    /// `λ₀ = μ₀ = 0`, `z₀ = 0`, `u₀ = max(0, -g(x₀))`.
    pub fn initial(problem: &ProblemSpec, x0: Vec<f64>) -> Result<Self> {
        let g = problem.constraint_values(&x0)?;
        let m = g.len();
        Ok(IterateState {
            x: x0,
            u: g.iter().map(|v| (-v).max(0.0)).collect(),
            z: vec![0.0; m],
            lambda: vec![0.0; m],
            mu: vec![0.0; m],
            k: 0,
        })
    }

    pub fn dual_gap(&self) -> f64 {
        linalg::dist(&self.lambda, &self.mu)
    }

    pub fn is_finite(&self) -> bool {
        [&self.x, &self.u, &self.z, &self.lambda, &self.mu]
            .iter()
            .all(|v| linalg::all_finite(v))
    }
}

/// Oracle values at one primal point, reused between the residual
/// computation for iterate `k` and the update that produces `k + 1`.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad: Vec<f64>,
    pub g: Vec<f64>,
    pub jac: Matrix,
}

impl Evaluation {
    pub fn at(problem: &ProblemSpec, x: &[f64]) -> Result<Self> {
        let (f, grad) = problem.evaluate_objective(x)?;
        let (g, jac) = problem.evaluate_constraints(x)?;
        Ok(Evaluation {
            x: x.to_vec(),
            f,
            grad,
            g,
            jac,
        })
    }
}
