//! Problem abstraction consumed by every solver: smooth objective `f`,
//! inequality block `g(x) <= 0`, a proximable regularizer `r`, and the
//! constants the step-size rules need.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_len, Error, Result};
use crate::linalg::{self, Matrix};

/// Multiplier bound used when no value is supplied.
pub const DEFAULT_B_LAMBDA: f64 = 10.0;

/// Inflation applied to sampled constants.
pub const SAMPLING_SAFETY_FACTOR: f64 = 1.5;

/// Smooth objective oracle.
pub trait Objective: Send + Sync {
    /// Writes `∇f(x)` into `grad` and returns `f(x)`.
    fn eval(&self, x: &[f64], grad: &mut [f64]) -> f64;
}

/// Constraint block oracle for `g: ℝⁿ → ℝᵐ`.
pub trait ConstraintBlock: Send + Sync {
    /// Writes `g(x)` into `values` and the Jacobian (or a subgradient
    /// selection, one row per constraint) into `jacobian`.
    fn eval(&self, x: &[f64], values: &mut [f64], jacobian: &mut Matrix);

    /// Values only. Override when the Jacobian is expensive.
    fn values(&self, x: &[f64], values: &mut [f64]) {
        let mut jac = Matrix::zeros(values.len(), x.len());
        self.eval(x, values, &mut jac);
    }
}

/// Objective from a closure `x, grad -> f(x)`.
pub struct FnObjective<F>(pub F);

impl<F> Objective for FnObjective<F>
where
    F: Fn(&[f64], &mut [f64]) -> f64 + Send + Sync,
{
    fn eval(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        (self.0)(x, grad)
    }
}

/// Constraint block from a closure `x, values, jacobian`.
pub struct FnConstraints<F>(pub F);

impl<F> ConstraintBlock for FnConstraints<F>
where
    F: Fn(&[f64], &mut [f64], &mut Matrix) + Send + Sync,
{
    fn eval(&self, x: &[f64], values: &mut [f64], jacobian: &mut Matrix) {
        (self.0)(x, values, jacobian)
    }
}

/// Proximable regularizers. Covers every formulation in the problem library.
#[derive(Clone, Debug, PartialEq)]
pub enum Regularizer {
    Zero,
    /// Indicator of `lower <= x <= upper`.
    Box {
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    /// `weight * ‖x‖₁`.
    L1 {
        weight: f64,
    },
}

impl Regularizer {
    pub fn uniform_box(n: usize, lo: f64, hi: f64) -> Self {
        Regularizer::Box {
            lower: vec![lo; n],
            upper: vec![hi; n],
        }
    }

    /// Exact proximal map `argmin_x r(x) + ‖x - y‖² / (2 step)`.
    pub fn prox(&self, y: &[f64], step: f64) -> Vec<f64> {
        match self {
            Regularizer::Zero => y.to_vec(),
            Regularizer::Box { lower, upper } => y
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(v, (lo, hi))| v.clamp(*lo, *hi))
                .collect(),
            Regularizer::L1 { weight } => {
                let t = step * weight;
                y.iter()
                    .map(|v| {
                        let m = v.abs() - t;
                        if m > 0.0 {
                            m.copysign(*v)
                        } else {
                            0.0
                        }
                    })
                    .collect()
            }
        }
    }

    /// `r(x)`; a box indicator outside its box is a domain error.
    pub fn value(&self, x: &[f64]) -> Result<f64> {
        match self {
            Regularizer::Zero => Ok(0.0),
            Regularizer::Box { lower, upper } => {
                for (j, v) in x.iter().enumerate() {
                    if *v < lower[j] || *v > upper[j] {
                        return Err(Error::Domain {
                            coordinate: j,
                            value: *v,
                        });
                    }
                }
                Ok(0.0)
            }
            Regularizer::L1 { weight } => Ok(weight * x.iter().map(|v| v.abs()).sum::<f64>()),
        }
    }

    /// Euclidean diameter of the domain, `None` when unbounded.
    pub fn diameter(&self) -> Option<f64> {
        match self {
            Regularizer::Box { lower, upper } => Some(libm::sqrt(
                lower.iter().zip(upper).map(|(l, u)| (u - l) * (u - l)).sum(),
            )),
            _ => None,
        }
    }

    pub fn is_compact(&self) -> bool {
        self.diameter().is_some_and(f64::is_finite)
    }

    /// Default starting point: box center, or the origin.
    pub fn center(&self, n: usize) -> Vec<f64> {
        match self {
            Regularizer::Box { lower, upper } => lower.iter().zip(upper).map(|(l, u)| 0.5 * (l + u)).collect(),
            _ => vec![0.0; n],
        }
    }
}

/// Where a set of constants came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    UserSupplied,
    Sampled,
}

/// Lipschitz and bound constants used by the step-size rules.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstantEstimates {
    /// Lipschitz constant of `∇f`.
    pub l_f: f64,
    /// Lipschitz constant of the constraint Jacobian (smooth case).
    pub l_g: f64,
    /// Bound on the Jacobian / subgradient norm.
    pub m_g: f64,
    /// Bound on `‖g(x)‖` over the domain.
    pub b_g: f64,
    /// Bound on the slack iterates.
    pub b_u: f64,
    /// Bound on the multiplier iterates.
    pub b_lambda: f64,
    pub provenance: Provenance,
}

impl ConstantEstimates {
    /// User-supplied constants with `b_u = b_g` and the default multiplier bound.
    pub fn new(l_f: f64, l_g: f64, m_g: f64, b_g: f64) -> Self {
        ConstantEstimates {
            l_f,
            l_g,
            m_g,
            b_g,
            b_u: b_g,
            b_lambda: DEFAULT_B_LAMBDA,
            provenance: Provenance::UserSupplied,
        }
    }

    pub fn with_b_lambda(mut self, b_lambda: f64) -> Self {
        self.b_lambda = b_lambda;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let entries = [
            ("l_f", self.l_f),
            ("l_g", self.l_g),
            ("m_g", self.m_g),
            ("b_g", self.b_g),
            ("b_u", self.b_u),
            ("b_lambda", self.b_lambda),
        ];
        for (name, v) in entries {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Parameter(format!(
                    "constant {name} must be finite and >= 0, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Whether the constraint oracle returns a true Jacobian or a subgradient selection.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Smoothness {
    Smooth,
    Nonsmooth,
}

/// An optimization instance `min f(x) + r(x) s.t. g(x) <= 0`.
pub struct ProblemSpec {
    pub name: String,
    dimension: usize,
    num_constraints: usize,
    objective: Box<dyn Objective>,
    constraints: Box<dyn ConstraintBlock>,
    pub regularizer: Regularizer,
    pub constants: ConstantEstimates,
    pub smoothness: Smoothness,
}

impl core::fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("dimension", &self.dimension)
            .field("num_constraints", &self.num_constraints)
            .field("regularizer", &self.regularizer)
            .field("constants", &self.constants)
            .field("smoothness", &self.smoothness)
            .finish_non_exhaustive()
    }
}

impl ProblemSpec {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        dimension: usize,
        num_constraints: usize,
        objective: Box<dyn Objective>,
        constraints: Box<dyn ConstraintBlock>,
        regularizer: Regularizer,
        constants: ConstantEstimates,
        smoothness: Smoothness,
    ) -> Result<Self> {
        if dimension == 0 || num_constraints == 0 {
            return Err(Error::Construction(
                "dimension and constraint count must be positive".into(),
            ));
        }
        match &regularizer {
            Regularizer::Box { lower, upper } => {
                check_len("box lower bounds", dimension, lower.len())?;
                check_len("box upper bounds", dimension, upper.len())?;
                for (j, (l, u)) in lower.iter().zip(upper).enumerate() {
                    if !(l <= u) || !l.is_finite() || !u.is_finite() {
                        return Err(Error::Construction(format!(
                            "box bounds at coordinate {j} must be finite with lower <= upper"
                        )));
                    }
                }
            }
            Regularizer::L1 { weight } if !(*weight >= 0.0) => {
                return Err(Error::Construction("L1 weight must be >= 0".into()));
            }
            _ => {}
        }
        constants.validate()?;
        Ok(ProblemSpec {
            name: name.into(),
            dimension,
            num_constraints,
            objective,
            constraints,
            regularizer,
            constants,
            smoothness,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn num_constraints(&self) -> usize {
        self.num_constraints
    }

    /// `f(x)` with `∇f(x)` written into `grad`.
    pub fn objective_into(&self, x: &[f64], grad: &mut [f64]) -> Result<f64> {
        check_len("x", self.dimension, x.len())?;
        check_len("gradient buffer", self.dimension, grad.len())?;
        let v = self.objective.eval(x, grad);
        if !v.is_finite() || !linalg::all_finite(grad) {
            return Err(Error::OracleFailure {
                what: "objective",
                x: x.to_vec(),
            });
        }
        Ok(v)
    }

    pub fn evaluate_objective(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let mut grad = vec![0.0; self.dimension];
        let v = self.objective_into(x, &mut grad)?;
        Ok((v, grad))
    }

    pub fn constraints_into(&self, x: &[f64], values: &mut [f64], jacobian: &mut Matrix) -> Result<()> {
        check_len("x", self.dimension, x.len())?;
        check_len("constraint buffer", self.num_constraints, values.len())?;
        if jacobian.rows() != self.num_constraints || jacobian.cols() != self.dimension {
            return Err(Error::DimensionMismatch {
                what: "jacobian buffer",
                expected: self.num_constraints * self.dimension,
                found: jacobian.rows() * jacobian.cols(),
            });
        }
        jacobian.fill(0.0);
        self.constraints.eval(x, values, jacobian);
        if !linalg::all_finite(values) || !jacobian.is_finite() {
            return Err(Error::OracleFailure {
                what: "constraint",
                x: x.to_vec(),
            });
        }
        Ok(())
    }

    pub fn evaluate_constraints(&self, x: &[f64]) -> Result<(Vec<f64>, Matrix)> {
        let mut values = vec![0.0; self.num_constraints];
        let mut jac = Matrix::zeros(self.num_constraints, self.dimension);
        self.constraints_into(x, &mut values, &mut jac)?;
        Ok((values, jac))
    }

    pub fn constraint_values_into(&self, x: &[f64], values: &mut [f64]) -> Result<()> {
        check_len("x", self.dimension, x.len())?;
        check_len("constraint buffer", self.num_constraints, values.len())?;
        self.constraints.values(x, values);
        if !linalg::all_finite(values) {
            return Err(Error::OracleFailure {
                what: "constraint",
                x: x.to_vec(),
            });
        }
        Ok(())
    }

    pub fn constraint_values(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut values = vec![0.0; self.num_constraints];
        self.constraint_values_into(x, &mut values)?;
        Ok(values)
    }

    pub fn apply_prox(&self, y: &[f64], step: f64) -> Result<Vec<f64>> {
        check_len("y", self.dimension, y.len())?;
        if !(step > 0.0) {
            return Err(Error::Parameter(format!("prox step must be > 0, got {step}")));
        }
        Ok(self.regularizer.prox(y, step))
    }

    /// Sampling-based constant estimates over the (bounded) regularizer domain.
    ///
    /// Draws `samples` point pairs uniformly from the box and takes maxima of
    /// gradient-difference ratios (`L_f`, `L_g`, Frobenius norm for the
    /// Jacobian) and of norms (`M_g`, `B_g`), each inflated by
    /// [`SAMPLING_SAFETY_FACTOR`]. `b_lambda` keeps its current value.
    pub fn estimate_constants(&self, samples: usize, seed: u64) -> Result<ConstantEstimates> {
        let (lower, upper) = match &self.regularizer {
            Regularizer::Box { lower, upper } => (lower, upper),
            _ => {
                return Err(Error::Configuration(format!(
                    "cannot sample constants for '{}': regularizer domain is unbounded",
                    self.name
                )))
            }
        };
        if samples == 0 {
            return Err(Error::Parameter("samples must be positive".into()));
        }
        let n = self.dimension;
        let m = self.num_constraints;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            (0..n)
                .map(|j| {
                    if lower[j] == upper[j] {
                        lower[j]
                    } else {
                        rng.gen_range(lower[j]..=upper[j])
                    }
                })
                .collect()
        };

        let (mut l_f, mut l_g, mut m_g, mut b_g) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        let mut ga = vec![0.0; n];
        let mut gb = vec![0.0; n];
        let mut va = vec![0.0; m];
        let mut vb = vec![0.0; m];
        let mut ja = Matrix::zeros(m, n);
        let mut jb = Matrix::zeros(m, n);
        for _ in 0..samples {
            let a = draw(&mut rng);
            let b = draw(&mut rng);
            self.objective_into(&a, &mut ga)?;
            self.objective_into(&b, &mut gb)?;
            self.constraints_into(&a, &mut va, &mut ja)?;
            self.constraints_into(&b, &mut vb, &mut jb)?;
            let d = linalg::dist(&a, &b);
            if d > 0.0 {
                l_f = l_f.max(linalg::dist(&ga, &gb) / d);
                l_g = l_g.max(linalg::dist(ja.as_slice(), jb.as_slice()) / d);
            }
            m_g = m_g.max(ja.frobenius()).max(jb.frobenius());
            b_g = b_g.max(linalg::norm(&va)).max(linalg::norm(&vb));
        }
        let s = SAMPLING_SAFETY_FACTOR;
        Ok(ConstantEstimates {
            l_f: s * l_f,
            l_g: s * l_g,
            m_g: s * m_g,
            b_g: s * b_g,
            b_u: s * b_g,
            b_lambda: self.constants.b_lambda,
            provenance: Provenance::Sampled,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::make_disk_problem;
    #[allow(unused_imports)]
    use alloc::vec;

    fn quadratic_toy(reg: Regularizer) -> ProblemSpec {
        ProblemSpec::new(
            "quadratic",
            2,
            1,
            Box::new(FnObjective(|x: &[f64], g: &mut [f64]| {
                g.copy_from_slice(x);
                0.5 * linalg::norm_sq(x)
            })),
            Box::new(FnConstraints(|_x: &[f64], v: &mut [f64], _j: &mut Matrix| {
                v[0] = -1.0;
            })),
            reg,
            ConstantEstimates::new(1.0, 0.0, 0.0, 1.0),
            Smoothness::Smooth,
        )
        .unwrap()
    }

    #[test]
    fn quadratic_objective_value_and_gradient() {
        let p = quadratic_toy(Regularizer::Zero);
        let (v, g) = p.evaluate_objective(&[1.0, 2.0]).unwrap();
        assert_eq!(v, 2.5);
        assert_eq!(g, vec![1.0, 2.0]);
    }

    #[test]
    fn disk_objective_and_constraints() {
        let p = make_disk_problem();
        let (v, g) = p.evaluate_objective(&[0.0, 0.0]).unwrap();
        assert_eq!((v, g), (0.0, vec![1.0, 1.0]));
        let (c, j) = p.evaluate_constraints(&[0.0, 0.0]).unwrap();
        assert_eq!(c, vec![-1.0]);
        assert_eq!(j.row(0), &[0.0, 0.0]);
        let (c, j) = p.evaluate_constraints(&[1.0, 0.0]).unwrap();
        assert_eq!(c, vec![0.0]);
        assert_eq!(j.row(0), &[2.0, 0.0]);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let p = make_disk_problem();
        assert!(matches!(
            p.evaluate_objective(&[0.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn non_finite_oracle_output_carries_x() {
        let p = ProblemSpec::new(
            "bad",
            1,
            1,
            Box::new(FnObjective(|x: &[f64], g: &mut [f64]| {
                g[0] = 1.0;
                libm::log(x[0])
            })),
            Box::new(FnConstraints(|_: &[f64], v: &mut [f64], _: &mut Matrix| v[0] = 0.0)),
            Regularizer::Zero,
            ConstantEstimates::new(0.0, 0.0, 0.0, 0.0),
            Smoothness::Smooth,
        )
        .unwrap();
        match p.evaluate_objective(&[-1.0]) {
            Err(Error::OracleFailure { x, .. }) => assert_eq!(x, vec![-1.0]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn prox_closed_forms() {
        assert_eq!(Regularizer::Zero.prox(&[3.0, -1.0], 0.5), vec![3.0, -1.0]);
        let b = Regularizer::uniform_box(2, -1.0, 1.0);
        assert_eq!(b.prox(&[3.0, -0.2], 0.5), vec![1.0, -0.2]);
        let l1 = Regularizer::L1 { weight: 1.0 };
        assert_eq!(l1.prox(&[0.3, -2.0], 0.5), vec![0.0, -1.5]);
    }

    #[test]
    fn prox_rejects_nonpositive_step() {
        let p = quadratic_toy(Regularizer::Zero);
        assert!(p.apply_prox(&[0.0, 0.0], 0.0).is_err());
    }

    #[test]
    fn box_bounds_must_be_ordered() {
        let r = ProblemSpec::new(
            "inverted",
            1,
            1,
            Box::new(FnObjective(|_: &[f64], g: &mut [f64]| {
                g[0] = 0.0;
                0.0
            })),
            Box::new(FnConstraints(|_: &[f64], v: &mut [f64], _: &mut Matrix| v[0] = 0.0)),
            Regularizer::Box {
                lower: vec![1.0],
                upper: vec![0.0],
            },
            ConstantEstimates::new(0.0, 0.0, 0.0, 0.0),
            Smoothness::Smooth,
        );
        assert!(matches!(r, Err(Error::Construction(_))));
    }

    #[test]
    fn sampled_constants_disk() {
        // sup over [-2,2]² of ‖∇g‖ = 2‖x‖ is 4√2 ≈ 5.657
        let p = make_disk_problem();
        let c = p.estimate_constants(10_000, 1).unwrap();
        assert!(c.m_g >= 5.6 && c.m_g <= 8.5, "m_g = {}", c.m_g);
        assert_eq!(c.provenance, Provenance::Sampled);
        // ∇²g = 2I exactly, so the ratio is exact.
        assert!((c.l_g - 3.0).abs() < 1e-9, "l_g = {}", c.l_g);
        assert_eq!(c.l_f, 0.0);
    }

    #[test]
    fn sampled_constants_quadratic() {
        let p = quadratic_toy(Regularizer::uniform_box(2, -1.0, 1.0));
        let c = p.estimate_constants(500, 3).unwrap();
        assert!(c.l_f >= 1.0 && c.l_f <= 1.5, "l_f = {}", c.l_f);
    }

    #[test]
    fn unbounded_domain_cannot_be_sampled() {
        let p = quadratic_toy(Regularizer::Zero);
        assert!(matches!(p.estimate_constants(10, 0), Err(Error::Configuration(_))));
    }
}
