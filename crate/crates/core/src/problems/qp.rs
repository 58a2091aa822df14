//! Seeded non-convex quadratic programs with quadratic constraints.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, sq, Matrix};
use crate::problem::{ConstantEstimates, FnConstraints, FnObjective, ProblemSpec, Regularizer, Smoothness};

use super::random::{gaussian_vec, orthogonal, symmetric_from};

pub const QP_MAX_DIM: usize = 50;
pub const QP_MAX_CONSTRAINTS: usize = 10;

/// Value of every constraint at the origin.
pub const QP_ORIGIN_VALUE: f64 = -0.5;

/// Raw data of one instance.
#[derive(Clone, Debug, PartialEq)]
pub struct QpData {
    pub q: Matrix,
    pub c: Vec<f64>,
    pub a: Vec<Matrix>,
    pub b: Vec<Vec<f64>>,
    pub d: Vec<f64>,
    pub q_eigenvalues: Vec<f64>,
    pub a_eigenvalues: Vec<Vec<f64>>,
}

fn indefinite_spectrum(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut eig: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    if n >= 2 {
        // Pin one eigenvalue of each sign so the matrix is indefinite.
        eig[0] = -eig[0].abs().max(0.1);
        eig[1] = eig[1].abs().max(0.1);
    }
    eig
}

/// Draws the instance data for `seed`.
pub fn qp_data(seed: u64, n: usize, m: usize) -> Result<QpData> {
    if n == 0 || n > QP_MAX_DIM || m == 0 || m > QP_MAX_CONSTRAINTS {
        return Err(Error::Construction(format!(
            "qp size must satisfy 1 <= n <= {QP_MAX_DIM} and 1 <= m <= {QP_MAX_CONSTRAINTS}, got n = {n}, m = {m}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q_eigenvalues = indefinite_spectrum(&mut rng, n);
    let q = symmetric_from(&orthogonal(&mut rng, n), &q_eigenvalues);
    let c = gaussian_vec(&mut rng, n, 0.5);
    let mut a = Vec::with_capacity(m);
    let mut a_eigenvalues = Vec::with_capacity(m);
    let mut b = Vec::with_capacity(m);
    for _ in 0..m {
        let eig = indefinite_spectrum(&mut rng, n);
        a.push(symmetric_from(&orthogonal(&mut rng, n), &eig));
        a_eigenvalues.push(eig);
        b.push(gaussian_vec(&mut rng, n, 0.5));
    }
    Ok(QpData {
        q,
        c,
        a,
        b,
        d: alloc::vec![QP_ORIGIN_VALUE; m],
        q_eigenvalues,
        a_eigenvalues,
    })
}

fn spectral(eig: &[f64]) -> f64 {
    eig.iter().fold(0.0f64, |acc, e| acc.max(e.abs()))
}

/// `min ½xᵀQx + cᵀx  s.t.  ½xᵀA_jx + b_jᵀx + d_j <= 0`, `x ∈ [-1, 1]ⁿ`.
///
/// `Q` and every `A_j` are indefinite with eigenvalues in `[-1, 1]`, and
/// `d_j` makes the origin strictly feasible. Constants are exact bounds
/// over the box: with `‖x‖ <= √n`,
/// `‖∇g_j‖ <= ‖A_j‖√n + ‖b_j‖` and `|g_j| <= ½‖A_j‖n + ‖b_j‖√n + |d_j|`.
pub fn make_nonconvex_qp(seed: u64, n: usize, m: usize) -> Result<ProblemSpec> {
    let data = qp_data(seed, n, m)?;
    let sqrt_n = libm::sqrt(n as f64);
    let a_norms: Vec<f64> = data.a_eigenvalues.iter().map(|e| spectral(e)).collect();
    let b_norms: Vec<f64> = data.b.iter().map(|b| linalg::norm(b)).collect();
    let l_f = spectral(&data.q_eigenvalues);
    let l_g = libm::sqrt(a_norms.iter().map(|a| a * a).sum());
    let m_g = libm::sqrt(a_norms.iter().zip(&b_norms).map(|(a, b)| sq(a * sqrt_n + b)).sum());
    let b_g = libm::sqrt(
        (0..m)
            .map(|j| sq(0.5 * a_norms[j] * n as f64 + b_norms[j] * sqrt_n + data.d[j].abs()))
            .sum(),
    );
    let constants = ConstantEstimates::new(l_f, l_g, m_g, b_g);

    let QpData { q, c, a, b, d, .. } = data;
    ProblemSpec::new(
        format!("qp(seed={seed}, n={n}, m={m})"),
        n,
        m,
        Box::new(FnObjective(move |x: &[f64], g: &mut [f64]| {
            let qx = q.mul_vec(x);
            for i in 0..x.len() {
                g[i] = qx[i] + c[i];
            }
            0.5 * linalg::dot(x, &qx) + linalg::dot(&c, x)
        })),
        Box::new(FnConstraints(move |x: &[f64], v: &mut [f64], jac: &mut Matrix| {
            for j in 0..a.len() {
                let ax = a[j].mul_vec(x);
                v[j] = 0.5 * linalg::dot(x, &ax) + linalg::dot(&b[j], x) + d[j];
                let row = jac.row_mut(j);
                for i in 0..x.len() {
                    row[i] = ax[i] + b[j][i];
                }
            }
        })),
        Regularizer::uniform_box(n, -1.0, 1.0),
        constants,
        Smoothness::Smooth,
    )
}
