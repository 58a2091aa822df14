//! Seeded sampling helpers shared by the synthetic generators.

use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::linalg::{self, Matrix};

/// Standard normal draw by the Box-Muller transform.
pub(crate) fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // `gen::<f64>()` lies in [0, 1); shift to (0, 1] so the log is finite.
    let u1 = 1.0 - rng.gen::<f64>();
    let u2 = rng.gen::<f64>();
    libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(core::f64::consts::TAU * u2)
}

pub(crate) fn gaussian_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| scale * gaussian(rng)).collect()
}

/// Random orthogonal matrix from Gram-Schmidt on Gaussian columns.
pub(crate) fn orthogonal(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n);
    while basis.len() < n {
        let mut v = gaussian_vec(rng, n, 1.0);
        for b in &basis {
            let d = linalg::dot(&v, b);
            linalg::axpy(-d, b, &mut v);
        }
        let nv = linalg::norm(&v);
        if nv > 1e-8 {
            v.iter_mut().for_each(|x| *x /= nv);
            basis.push(v);
        }
    }
    Matrix::from_rows(&basis)
}

/// `U diag(eig) Uᵀ` where the rows of `u` are the eigenvectors.
pub(crate) fn symmetric_from(u: &Matrix, eig: &[f64]) -> Matrix {
    let n = eig.len();
    let mut out = Matrix::zeros(n, n);
    for (k, e) in eig.iter().enumerate() {
        let v = u.row(k);
        for i in 0..n {
            for j in 0..n {
                out.set(i, j, out.get(i, j) + e * v[i] * v[j]);
            }
        }
    }
    out
}
