//! Fairness-constrained linear classification: logistic empirical loss with
//! sigmoid-surrogate demographic parity or equalized odds constraints, and
//! hinge-based intersectional group constraints.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::problem::{ConstantEstimates, ConstraintBlock, Objective, ProblemSpec, Regularizer, Smoothness};

use super::dataset::{complement_name, eo_mask_names, Dataset};

/// Half-width of the weight box keeping the domain compact.
pub const DEFAULT_RADIUS: f64 = 100.0;

/// Fairness slack `c` in `Δ(x) - c <= 0`.
pub const DEFAULT_TOLERANCE_C: f64 = 0.05;

/// `sup |σ''|` for the logistic sigmoid, `1/(6√3)`.
pub(crate) const SIGMOID_CURVATURE: f64 = 0.096_225_044_864_937_63;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstraintKind {
    DemographicParity,
    EqualizedOdds,
    Intersectional,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum EoFormulation {
    /// One constraint: the larger of the two rate gaps.
    #[default]
    MaxSingleConstraint,
    /// One constraint per rate gap.
    TwoConstraints,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FairnessConfig {
    pub constraint_kind: ConstraintKind,
    pub tolerance_c: f64,
    /// Mask name of the protected group. Its complement is `not:{group}`.
    pub group_attribute: String,
    pub eo_formulation: EoFormulation,
    pub radius: f64,
}

impl FairnessConfig {
    pub fn new(kind: ConstraintKind, group: impl Into<String>) -> Self {
        FairnessConfig {
            constraint_kind: kind,
            tolerance_c: DEFAULT_TOLERANCE_C,
            group_attribute: group.into(),
            eo_formulation: EoFormulation::default(),
            radius: DEFAULT_RADIUS,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.tolerance_c >= 0.0) || !self.tolerance_c.is_finite() {
            return Err(Error::Construction(format!(
                "tolerance_c must be finite and >= 0, got {}",
                self.tolerance_c
            )));
        }
        if !(self.radius > 0.0) || !self.radius.is_finite() {
            return Err(Error::Construction(format!("radius must be > 0, got {}", self.radius)));
        }
        Ok(())
    }
}

/// Numerically stable logistic sigmoid.
pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + libm::exp(-t))
    } else {
        let e = libm::exp(t);
        e / (1.0 + e)
    }
}

/// `log(1 + e^{-m})` without overflow.
fn log1p_exp_neg(m: f64) -> f64 {
    if m > 0.0 {
        libm::log1p(libm::exp(-m))
    } else {
        -m + libm::log1p(libm::exp(m))
    }
}

/// `(1/N) Σ log(1 + exp(-y_i xᵀa_i))`
struct LogisticLoss {
    data: Arc<Dataset>,
}

impl Objective for LogisticLoss {
    fn eval(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        grad.fill(0.0);
        let n = self.data.rows() as f64;
        let mut total = 0.0;
        for i in 0..self.data.rows() {
            let y = self.data.labels[i];
            let margin = y * self.data.features.row_dot(i, x);
            total += log1p_exp_neg(margin);
            self.data.features.row_axpy(i, -y * sigmoid(-margin) / n, grad);
        }
        total / n
    }
}

/// Signed gap `mean_P σ(xᵀa) - mean_U σ(xᵀa)`, with its gradient added to `grad`.
fn rate_gap(data: &Dataset, p: &[usize], u: &[usize], x: &[f64], grad: Option<&mut [f64]>) -> f64 {
    let scores: Vec<(usize, f64)> = p
        .iter()
        .map(|&i| (i, 1.0 / p.len() as f64))
        .chain(u.iter().map(|&i| (i, -1.0 / u.len() as f64)))
        .collect();
    let mut value = 0.0;
    match grad {
        Some(grad) => {
            for (i, w) in scores {
                let s = sigmoid(data.features.row_dot(i, x));
                value += w * s;
                data.features.row_axpy(i, w * s * (1.0 - s), grad);
            }
        }
        None => {
            for (i, w) in scores {
                value += w * sigmoid(data.features.row_dot(i, x));
            }
        }
    }
    value
}

/// One absolute rate-gap term: the group pair it compares.
#[derive(Clone, Debug)]
struct GapTerm {
    protected: Vec<usize>,
    unprotected: Vec<usize>,
}

impl GapTerm {
    fn from_masks(data: &Dataset, p: &str, u: &str) -> Result<Self> {
        Ok(GapTerm {
            protected: data.mask(p)?.to_vec(),
            unprotected: data.mask(u)?.to_vec(),
        })
    }

    /// `|gap|` and a subgradient. At `gap = 0` the zero vector is selected.
    fn abs_into(&self, data: &Dataset, x: &[f64], row: &mut [f64]) -> f64 {
        let mut grad = vec![0.0; x.len()];
        let gap = rate_gap(data, &self.protected, &self.unprotected, x, Some(&mut grad));
        let sign = if gap > 0.0 {
            1.0
        } else if gap < 0.0 {
            -1.0
        } else {
            0.0
        };
        for (r, g) in row.iter_mut().zip(&grad) {
            *r = sign * g;
        }
        gap.abs()
    }

    fn abs_value(&self, data: &Dataset, x: &[f64]) -> f64 {
        rate_gap(data, &self.protected, &self.unprotected, x, None).abs()
    }

    /// `sup ‖∇gap‖ <= (mean_P ‖a‖ + mean_U ‖a‖)/4`.
    fn gradient_bound(&self, data: &Dataset) -> f64 {
        0.25 * (data.mean_row_norm(&self.protected) + data.mean_row_norm(&self.unprotected))
    }

    fn curvature_bound(&self, data: &Dataset) -> f64 {
        SIGMOID_CURVATURE * (data.mean_row_norm_sq(&self.protected) + data.mean_row_norm_sq(&self.unprotected))
    }
}

/// `g_j(x) = |gap_j(x)| - c`, one row per term.
struct SeparateGaps {
    data: Arc<Dataset>,
    terms: Vec<GapTerm>,
    c: f64,
}

impl ConstraintBlock for SeparateGaps {
    fn eval(&self, x: &[f64], values: &mut [f64], jacobian: &mut Matrix) {
        for (j, term) in self.terms.iter().enumerate() {
            values[j] = term.abs_into(&self.data, x, jacobian.row_mut(j)) - self.c;
        }
    }

    fn values(&self, x: &[f64], values: &mut [f64]) {
        for (j, term) in self.terms.iter().enumerate() {
            values[j] = term.abs_value(&self.data, x) - self.c;
        }
    }
}

/// `g(x) = max_j |gap_j(x)| - c`. Ties select the lowest index.
struct MaxGap {
    data: Arc<Dataset>,
    terms: Vec<GapTerm>,
    c: f64,
}

impl ConstraintBlock for MaxGap {
    fn eval(&self, x: &[f64], values: &mut [f64], jacobian: &mut Matrix) {
        let mut best = f64::NEG_INFINITY;
        let mut row = vec![0.0; x.len()];
        for term in &self.terms {
            let v = term.abs_into(&self.data, x, &mut row);
            if v > best {
                best = v;
                jacobian.row_mut(0).copy_from_slice(&row);
            }
        }
        values[0] = best - self.c;
    }

    fn values(&self, x: &[f64], values: &mut [f64]) {
        let best = self
            .terms
            .iter()
            .map(|t| t.abs_value(&self.data, x))
            .fold(f64::NEG_INFINITY, f64::max);
        values[0] = best - self.c;
    }
}

fn logistic_lipschitz(data: &Dataset) -> f64 {
    let all: Vec<usize> = (0..data.rows()).collect();
    0.25 * data.mean_row_norm_sq(&all)
}

/// Logistic loss under a demographic parity or equalized odds constraint.
///
/// Group masks are looked up by name: `{group}` and `not:{group}` for
/// parity, and the four label-conditioned masks of [`eo_mask_names`] for
/// equalized odds.
pub fn make_fairness_logistic(data: impl Into<Arc<Dataset>>, config: &FairnessConfig) -> Result<ProblemSpec> {
    config.validate()?;
    let data: Arc<Dataset> = data.into();
    let group = &config.group_attribute;
    let c = config.tolerance_c;
    let terms = match config.constraint_kind {
        ConstraintKind::DemographicParity => {
            vec![GapTerm::from_masks(&data, group, &complement_name(group))?]
        }
        ConstraintKind::EqualizedOdds => {
            let [pp, up, pn, un] = eo_mask_names(group);
            vec![
                GapTerm::from_masks(&data, &pp, &up)?,
                GapTerm::from_masks(&data, &pn, &un)?,
            ]
        }
        ConstraintKind::Intersectional => {
            return Err(Error::Construction(
                "intersectional constraints are built by make_intersectional".into(),
            ))
        }
    };

    let gradient_bounds: Vec<f64> = terms.iter().map(|t| t.gradient_bound(&data)).collect();
    let curvature_bounds: Vec<f64> = terms.iter().map(|t| t.curvature_bound(&data)).collect();
    let value_bound = c.max(1.0 - c);
    let two = config.constraint_kind == ConstraintKind::EqualizedOdds
        && config.eo_formulation == EoFormulation::TwoConstraints;
    let (m, m_g, l_g, b_g) = if two {
        (
            2,
            libm::sqrt(gradient_bounds.iter().map(|v| v * v).sum()),
            libm::sqrt(curvature_bounds.iter().map(|v| v * v).sum()),
            libm::sqrt(2.0) * value_bound,
        )
    } else {
        (
            1,
            gradient_bounds.iter().copied().fold(0.0, f64::max),
            curvature_bounds.iter().copied().fold(0.0, f64::max),
            value_bound,
        )
    };
    let constants = ConstantEstimates::new(logistic_lipschitz(&data), l_g, m_g, b_g);
    let constraints: Box<dyn ConstraintBlock> = if two || terms.len() == 1 {
        Box::new(SeparateGaps {
            data: data.clone(),
            terms,
            c,
        })
    } else {
        Box::new(MaxGap {
            data: data.clone(),
            terms,
            c,
        })
    };
    let name = match config.constraint_kind {
        ConstraintKind::DemographicParity => "fairness-dp",
        _ => "fairness-eo",
    };
    ProblemSpec::new(
        name,
        data.dim(),
        m,
        Box::new(LogisticLoss { data: data.clone() }),
        constraints,
        Regularizer::uniform_box(data.dim(), -config.radius, config.radius),
        constants,
        Smoothness::Nonsmooth,
    )
}

/// `mean_rows [1 - y_i xᵀa_i]⁺` with a subgradient added to `grad`
/// (zero at the kink).
fn mean_hinge(data: &Dataset, rows: &[usize], x: &[f64], grad: Option<&mut [f64]>, scale: f64) -> f64 {
    let w = 1.0 / rows.len() as f64;
    let mut total = 0.0;
    match grad {
        Some(grad) => {
            for &i in rows {
                let y = data.labels[i];
                let slack = 1.0 - y * data.features.row_dot(i, x);
                if slack > 0.0 {
                    total += slack;
                    data.features.row_axpy(i, -scale * w * y, grad);
                }
            }
        }
        None => {
            for &i in rows {
                let slack = 1.0 - data.labels[i] * data.features.row_dot(i, x);
                if slack > 0.0 {
                    total += slack;
                }
            }
        }
    }
    total * w
}

/// `g_G(x) = mean_G hinge - mean_all hinge - c` for each listed group.
struct IntersectionalBlock {
    data: Arc<Dataset>,
    groups: Vec<Vec<usize>>,
    all: Vec<usize>,
    c: f64,
}

impl ConstraintBlock for IntersectionalBlock {
    fn eval(&self, x: &[f64], values: &mut [f64], jacobian: &mut Matrix) {
        let mut base_grad = vec![0.0; x.len()];
        let base = mean_hinge(&self.data, &self.all, x, Some(&mut base_grad), 1.0);
        for (j, rows) in self.groups.iter().enumerate() {
            let row = jacobian.row_mut(j);
            let v = mean_hinge(&self.data, rows, x, Some(row), 1.0);
            for (r, b) in row.iter_mut().zip(&base_grad) {
                *r -= b;
            }
            values[j] = v - base - self.c;
        }
    }

    fn values(&self, x: &[f64], values: &mut [f64]) {
        let base = mean_hinge(&self.data, &self.all, x, None, 1.0);
        for (j, rows) in self.groups.iter().enumerate() {
            values[j] = mean_hinge(&self.data, rows, x, None, 1.0) - base - self.c;
        }
    }
}

/// Logistic loss with one hinge-disparity constraint per group, evaluated
/// exactly over every listed group.
pub fn make_intersectional(
    data: impl Into<Arc<Dataset>>,
    groups: Vec<Vec<usize>>,
    config: &FairnessConfig,
) -> Result<ProblemSpec> {
    config.validate()?;
    let data: Arc<Dataset> = data.into();
    if groups.is_empty() {
        return Err(Error::Construction("at least one group is required".into()));
    }
    let mut clean = Vec::with_capacity(groups.len());
    for (j, mut rows) in groups.into_iter().enumerate() {
        rows.sort_unstable();
        rows.dedup();
        if rows.is_empty() {
            return Err(Error::Construction(format!("intersectional group {j} is empty")));
        }
        if let Some(&bad) = rows.iter().find(|&&i| i >= data.rows()) {
            return Err(Error::Construction(format!(
                "intersectional group {j} has row {bad} but the dataset has {} rows",
                data.rows()
            )));
        }
        clean.push(rows);
    }
    let all: Vec<usize> = (0..data.rows()).collect();
    let mean_all = data.mean_row_norm(&all);
    let max_norm = data.max_row_norm();
    let c = config.tolerance_c;
    let m_g = libm::sqrt(
        clean
            .iter()
            .map(|g| {
                let b = data.mean_row_norm(g) + mean_all;
                b * b
            })
            .sum(),
    );
    // Each mean hinge lies in [0, 1 + R max‖a‖].
    let per = 1.0 + config.radius * max_norm + c;
    let b_g = libm::sqrt(clean.len() as f64) * per;
    let constants = ConstantEstimates::new(logistic_lipschitz(&data), 0.0, m_g, b_g);
    let m = clean.len();
    ProblemSpec::new(
        "intersectional",
        data.dim(),
        m,
        Box::new(LogisticLoss { data: data.clone() }),
        Box::new(IntersectionalBlock {
            data: data.clone(),
            groups: clean,
            all,
            c,
        }),
        Regularizer::uniform_box(data.dim(), -config.radius, config.radius),
        constants,
        Smoothness::Nonsmooth,
    )
}
