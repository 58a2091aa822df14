//! Multi-class Neyman-Pearson classification with linear scorers: minimize
//! the pairwise sigmoid loss of class 1 subject to per-class loss ceilings.

use alloc::boxed::Box;
use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{sq, Matrix};
use crate::problem::{ConstantEstimates, ConstraintBlock, Objective, ProblemSpec, Regularizer, Smoothness};

use super::fairness::{sigmoid, SIGMOID_CURVATURE};
use super::random::{gaussian, gaussian_vec};

/// Feature dimension of the synthetic classes.
pub const MNPC_FEATURES: usize = 4;

/// Spread of the class means.
const MEAN_SCALE: f64 = 1.5;

/// `φ(y) = 1/(1 + e^y)`
pub fn phi(y: f64) -> f64 {
    sigmoid(-y)
}

/// Seeded class-conditional Gaussian samples, one matrix per class.
#[derive(Clone, Debug, PartialEq)]
pub struct MnpcData {
    pub classes: Vec<Matrix>,
}

impl MnpcData {
    pub fn generate(seed: u64, classes: usize, per_class: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let means: Vec<Vec<f64>> = (0..classes)
            .map(|_| gaussian_vec(&mut rng, MNPC_FEATURES, MEAN_SCALE))
            .collect();
        let classes = means
            .iter()
            .map(|mean| {
                let rows: Vec<Vec<f64>> = (0..per_class)
                    .map(|_| mean.iter().map(|m| m + gaussian(&mut rng)).collect())
                    .collect();
                Matrix::from_rows(&rows)
            })
            .collect();
        MnpcData { classes }
    }

    fn num_classes(&self) -> usize {
        self.classes.len()
    }

    /// Loss of class `i`: `(1/|D_i|) Σ_{j≠i} Σ_{ξ∈D_i} φ((x_i - x_j)ᵀξ)`,
    /// with its gradient (over all class blocks) added to `grad`.
    fn class_loss(&self, i: usize, x: &[f64], grad: Option<&mut [f64]>) -> f64 {
        let d = MNPC_FEATURES;
        let data = &self.classes[i];
        let w = 1.0 / data.rows() as f64;
        let block = |k: usize| &x[k * d..(k + 1) * d];
        let mut total = 0.0;
        let mut grad = grad;
        for r in 0..data.rows() {
            let xi = data.row(r);
            let own: f64 = block(i).iter().zip(xi).map(|(a, b)| a * b).sum();
            for j in (0..self.num_classes()).filter(|&j| j != i) {
                let other: f64 = block(j).iter().zip(xi).map(|(a, b)| a * b).sum();
                let p = phi(own - other);
                total += p;
                if let Some(g) = grad.as_deref_mut() {
                    // φ'(t) = -φ(t)(1 - φ(t))
                    let s = -w * p * (1.0 - p);
                    for t in 0..d {
                        g[i * d + t] += s * xi[t];
                        g[j * d + t] -= s * xi[t];
                    }
                }
            }
        }
        total * w
    }

    fn mean_norm(&self, i: usize) -> f64 {
        let m = &self.classes[i];
        (0..m.rows())
            .map(|r| libm::sqrt(m.row(r).iter().map(|v| v * v).sum()))
            .sum::<f64>()
            / m.rows() as f64
    }

    fn mean_norm_sq(&self, i: usize) -> f64 {
        let m = &self.classes[i];
        (0..m.rows())
            .map(|r| m.row(r).iter().map(|v| v * v).sum::<f64>())
            .sum::<f64>()
            / m.rows() as f64
    }

    /// `sup ‖∇L_i‖ <= (√2/4)(C-1) mean‖ξ‖` since `|φ'| <= 1/4` and each pair
    /// term touches two blocks.
    fn gradient_bound(&self, i: usize) -> f64 {
        0.25 * core::f64::consts::SQRT_2 * (self.num_classes() - 1) as f64 * self.mean_norm(i)
    }

    /// `|φ''| <= 1/(6√3)` and `‖(e_i - e_j)⊗ξ‖² = 2‖ξ‖²`.
    fn curvature_bound(&self, i: usize) -> f64 {
        SIGMOID_CURVATURE * 2.0 * (self.num_classes() - 1) as f64 * self.mean_norm_sq(i)
    }
}

struct ClassOneLoss {
    data: Arc<MnpcData>,
}

impl Objective for ClassOneLoss {
    fn eval(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        grad.fill(0.0);
        self.data.class_loss(0, x, Some(grad))
    }
}

struct ClassCeilings {
    data: Arc<MnpcData>,
    kappa: Vec<f64>,
}

impl ConstraintBlock for ClassCeilings {
    fn eval(&self, x: &[f64], values: &mut [f64], jacobian: &mut Matrix) {
        for (row, kappa) in self.kappa.iter().enumerate() {
            values[row] = self.data.class_loss(row + 1, x, Some(jacobian.row_mut(row))) - kappa;
        }
    }

    fn values(&self, x: &[f64], values: &mut [f64]) {
        for (row, kappa) in self.kappa.iter().enumerate() {
            values[row] = self.data.class_loss(row + 1, x, None) - kappa;
        }
    }
}

/// Class 1 is the class of interest; `kappa[i-2]` bounds the loss of class
/// `i` for `i = 2..=classes`. The weights of all classes are stacked into
/// one vector of length `classes · MNPC_FEATURES` and kept in the box
/// `‖x‖∞ <= θ`.
pub fn make_mnpc_linear(seed: u64, classes: usize, per_class: usize, kappa: &[f64], theta: f64) -> Result<ProblemSpec> {
    if classes < 2 {
        return Err(Error::Construction(format!(
            "mnpc needs at least 2 classes, got {classes}"
        )));
    }
    if per_class == 0 {
        return Err(Error::Construction("per_class must be positive".into()));
    }
    if kappa.len() != classes - 1 {
        return Err(Error::Construction(format!(
            "kappa must have classes - 1 = {} entries, got {}",
            classes - 1,
            kappa.len()
        )));
    }
    if !(theta > 0.0) || !theta.is_finite() {
        return Err(Error::Construction(format!("theta must be > 0, got {theta}")));
    }
    if kappa.iter().any(|k| !k.is_finite()) {
        return Err(Error::Construction("kappa entries must be finite".into()));
    }
    let data = Arc::new(MnpcData::generate(seed, classes, per_class));
    let top = (classes - 1) as f64;
    let constraint_rows = 1..classes;
    let m_g = libm::sqrt(constraint_rows.clone().map(|i| sq(data.gradient_bound(i))).sum());
    let l_g = libm::sqrt(constraint_rows.clone().map(|i| sq(data.curvature_bound(i))).sum());
    // Each class loss lies in [0, C-1].
    let b_g = libm::sqrt(kappa.iter().map(|k| sq(k.abs().max((top - k).abs()))).sum());
    let constants = ConstantEstimates::new(data.curvature_bound(0), l_g, m_g, b_g);
    let n = classes * MNPC_FEATURES;
    ProblemSpec::new(
        format!("mnpc(seed={seed}, classes={classes})"),
        n,
        classes - 1,
        Box::new(ClassOneLoss { data: data.clone() }),
        Box::new(ClassCeilings {
            data,
            kappa: kappa.to_vec(),
        }),
        Regularizer::uniform_box(n, -theta, theta),
        constants,
        Smoothness::Smooth,
    )
}
