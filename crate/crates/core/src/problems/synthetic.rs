//! Seeded synthetic classification data with a planted group disparity.

use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::linalg::{Features, Matrix};

use super::dataset::Dataset;
use super::random::gaussian;

/// Mask name of the protected group in generated datasets.
pub const SYNTHETIC_GROUP: &str = "group";

/// Feature count: three informative columns, one shifted by group
/// membership, plus a constant intercept column.
pub const SYNTHETIC_FEATURES: usize = 5;

/// `rows` samples. Membership is drawn with probability 0.4, the first
/// feature is shifted by membership, and labels follow a noisy linear rule
/// that also favors members, so an unconstrained classifier shows a
/// demographic-parity gap. Masks `group`, `not:group`, and the four
/// label-conditioned intersections are inserted.
pub fn synthetic_fairness_dataset(seed: u64, rows: usize) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let planted = [1.0, -0.8, 0.5];
    let mut x = Vec::with_capacity(rows);
    let mut labels = Vec::with_capacity(rows);
    let mut members = Vec::new();
    for i in 0..rows {
        let member = rng.gen_bool(0.4);
        let s = if member { 1.0 } else { 0.0 };
        let a = [gaussian(&mut rng) + s, gaussian(&mut rng), gaussian(&mut rng)];
        let score: f64 =
            planted.iter().zip(&a).map(|(w, v)| w * v).sum::<f64>() + 0.8 * s - 0.3 + 0.5 * gaussian(&mut rng);
        labels.push(if score > 0.0 { 1.0 } else { -1.0 });
        let mut row = Vec::with_capacity(SYNTHETIC_FEATURES);
        row.extend_from_slice(&a);
        row.push(0.5 * gaussian(&mut rng));
        row.push(1.0);
        x.push(row);
        if member {
            members.push(i);
        }
    }
    let mut data = Dataset::new(Features::Dense(Matrix::from_rows(&x)), labels)?;
    data.feature_names = ["a1", "a2", "a3", "noise", "intercept"]
        .iter()
        .map(|s| String::from(*s))
        .collect();
    data.insert_mask(SYNTHETIC_GROUP, members)?;
    data.insert_complement(SYNTHETIC_GROUP)?;
    data.insert_label_masks(SYNTHETIC_GROUP)?;
    Ok(data)
}
