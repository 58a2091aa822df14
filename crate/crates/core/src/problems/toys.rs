//! Small analytic instances with hand-checkable KKT points.

use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::error::Result;
use crate::linalg::{self, Matrix};
use crate::problem::{ConstantEstimates, FnConstraints, FnObjective, ProblemSpec, Regularizer, Smoothness};
use crate::solver::ExactSubproblem;

/// `min x₁ + x₂  s.t.  ‖x‖² - 1 <= 0`, `x ∈ [-2, 2]²`.
///
/// The unique KKT point is `x* = -(1, 1)/√2` with multiplier `ν* = 1/√2`.
pub fn make_disk_problem() -> ProblemSpec {
    // sup ‖2x‖ over the box is ‖(4, 4)‖; the constraint value ranges over [-1, 7].
    let constants = ConstantEstimates::new(0.0, 2.0, 4.0 * core::f64::consts::SQRT_2, 7.0);
    ProblemSpec::new(
        "disk",
        2,
        1,
        Box::new(FnObjective(|x: &[f64], g: &mut [f64]| {
            g[0] = 1.0;
            g[1] = 1.0;
            x[0] + x[1]
        })),
        Box::new(FnConstraints(|x: &[f64], v: &mut [f64], j: &mut Matrix| {
            v[0] = linalg::norm_sq(x) - 1.0;
            j.set(0, 0, 2.0 * x[0]);
            j.set(0, 1, 2.0 * x[1]);
        })),
        Regularizer::uniform_box(2, -2.0, 2.0),
        constants,
        Smoothness::Smooth,
    )
    .expect("disk problem is well formed")
}

/// Analytic KKT pair of [`make_disk_problem`].
pub fn disk_kkt_point() -> (Vec<f64>, f64) {
    let h = core::f64::consts::FRAC_1_SQRT_2;
    (alloc::vec![-h, -h], h)
}

/// One-dimensional `min x  s.t.  x <= 0`, `x ∈ [-1, 1]`.
pub fn make_line_toy() -> ProblemSpec {
    ProblemSpec::new(
        "line",
        1,
        1,
        Box::new(FnObjective(|x: &[f64], g: &mut [f64]| {
            g[0] = 1.0;
            x[0]
        })),
        Box::new(FnConstraints(|x: &[f64], v: &mut [f64], j: &mut Matrix| {
            v[0] = x[0];
            j.set(0, 0, 1.0);
        })),
        Regularizer::uniform_box(1, -1.0, 1.0),
        ConstantEstimates::new(0.0, 0.0, 1.0, 1.0),
        Smoothness::Smooth,
    )
    .expect("line toy is well formed")
}

/// One-dimensional `min x  s.t.  x² - 1/4 <= 0`, `x ∈ [-1, 1]`; KKT point
/// `x* = -1/2`, `ν* = 1`.
pub fn make_curved_toy() -> ProblemSpec {
    ProblemSpec::new(
        "curved",
        1,
        1,
        Box::new(FnObjective(|x: &[f64], g: &mut [f64]| {
            g[0] = 1.0;
            x[0]
        })),
        Box::new(FnConstraints(|x: &[f64], v: &mut [f64], j: &mut Matrix| {
            v[0] = x[0] * x[0] - 0.25;
            j.set(0, 0, 2.0 * x[0]);
        })),
        Regularizer::uniform_box(1, -1.0, 1.0),
        ConstantEstimates::new(0.0, 2.0, 2.0, 0.75),
        Smoothness::Smooth,
    )
    .expect("curved toy is well formed")
}

/// `min ½‖x - c‖²  s.t.  -1 <= 0`, on the box `[-2, 2]ⁿ`; the constraint
/// never binds so the solution is `c` with zero multiplier.
pub fn make_inactive_toy(center: &[f64]) -> ProblemSpec {
    let c = center.to_vec();
    let n = c.len();
    ProblemSpec::new(
        "inactive",
        n,
        1,
        Box::new(FnObjective(move |x: &[f64], g: &mut [f64]| {
            for i in 0..x.len() {
                g[i] = x[i] - c[i];
            }
            0.5 * linalg::norm_sq(g)
        })),
        Box::new(FnConstraints(|_: &[f64], v: &mut [f64], _: &mut Matrix| {
            v[0] = -1.0;
        })),
        Regularizer::uniform_box(n, -2.0, 2.0),
        ConstantEstimates::new(1.0, 0.0, 0.0, 1.0),
        Smoothness::Smooth,
    )
    .expect("inactive toy is well formed")
}

/// Exact subproblem for [`make_line_toy`]: the model is linear in `x`, so
/// the solution is a clipped gradient step.
#[derive(Clone, Copy, Debug, Default)]
pub struct LineToySubproblem;

impl ExactSubproblem for LineToySubproblem {
    fn solve(&self, problem: &ProblemSpec, x_k: &[f64], grad_f: &[f64], lambda: &[f64], eta: f64) -> Result<Vec<f64>> {
        let y = [x_k[0] - eta * (grad_f[0] + lambda[0])];
        Ok(problem.regularizer.prox(&y, eta))
    }
}

/// Exact subproblem for [`make_curved_toy`]:
/// `argmin_x a x + λ(x² - 1/4) + (x - x_k)²/(2η)` over `[-1, 1]`.
///
/// With `2λ + 1/η > 0` the model is a convex parabola and clipping its
/// vertex is exact. Otherwise the minimum sits at an endpoint.
#[derive(Clone, Copy, Debug, Default)]
pub struct CurvedToySubproblem;

impl ExactSubproblem for CurvedToySubproblem {
    fn solve(&self, _problem: &ProblemSpec, x_k: &[f64], grad_f: &[f64], lambda: &[f64], eta: f64) -> Result<Vec<f64>> {
        let (a, l, xk) = (grad_f[0], lambda[0], x_k[0]);
        let model = |x: f64| a * x + l * (x * x - 0.25) + (x - xk) * (x - xk) / (2.0 * eta);
        let curvature = 2.0 * l + 1.0 / eta;
        let x = if curvature > 0.0 {
            ((xk / eta - a) / curvature).clamp(-1.0, 1.0)
        } else if model(-1.0) <= model(1.0) {
            -1.0
        } else {
            1.0
        };
        Ok(alloc::vec![x])
    }
}
