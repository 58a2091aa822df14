use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::Features;

/// Prefix marking the complement of a named group.
pub const COMPLEMENT_PREFIX: &str = "not:";

/// Name of the complement mask of `group`.
pub fn complement_name(group: &str) -> String {
    format!("{COMPLEMENT_PREFIX}{group}")
}

/// Names of the four label-conditioned masks used by equalized odds:
/// `[protected ∩ y=+1, unprotected ∩ y=+1, protected ∩ y=-1, unprotected ∩ y=-1]`.
pub fn eo_mask_names(group: &str) -> [String; 4] {
    [
        format!("{group}:pos"),
        format!("{}:pos", complement_name(group)),
        format!("{group}:neg"),
        format!("{}:neg", complement_name(group)),
    ]
}

/// Labeled rows plus named row subsets.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub features: Features,
    /// Each label is `-1.0` or `+1.0`.
    pub labels: Vec<f64>,
    /// Column names when the source had a header.
    pub feature_names: Vec<String>,
    /// Sorted, duplicate-free row indices by name.
    pub group_masks: BTreeMap<String, Vec<usize>>,
    /// Non-feature string columns (for example a sensitive attribute).
    pub attributes: BTreeMap<String, Vec<String>>,
}

impl Dataset {
    pub fn new(features: Features, labels: Vec<f64>) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(Error::Construction(format!(
                "{} feature rows but {} labels",
                features.rows(),
                labels.len()
            )));
        }
        if let Some((i, y)) = labels.iter().enumerate().find(|(_, y)| **y != 1.0 && **y != -1.0) {
            return Err(Error::Construction(format!("label {y} at row {i} is not +1 or -1")));
        }
        Ok(Dataset {
            features,
            labels,
            feature_names: Vec::new(),
            group_masks: BTreeMap::new(),
            attributes: BTreeMap::new(),
        })
    }

    pub fn rows(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    /// Adds or replaces a mask. Indices are sorted and deduplicated.
    pub fn insert_mask(&mut self, name: impl Into<String>, mut rows: Vec<usize>) -> Result<()> {
        let name = name.into();
        rows.sort_unstable();
        rows.dedup();
        if let Some(&bad) = rows.iter().find(|&&i| i >= self.rows()) {
            return Err(Error::Construction(format!(
                "mask '{name}' has row {bad} but the dataset has {} rows",
                self.rows()
            )));
        }
        self.group_masks.insert(name, rows);
        Ok(())
    }

    /// Looks up a mask that must exist and be non-empty.
    pub fn mask(&self, name: &str) -> Result<&[usize]> {
        match self.group_masks.get(name) {
            None => Err(Error::Construction(format!("group mask '{name}' is missing"))),
            Some(rows) if rows.is_empty() => Err(Error::Construction(format!("group mask '{name}' is empty"))),
            Some(rows) => Ok(rows),
        }
    }

    /// Inserts `not:{group}` holding every row outside `group`.
    pub fn insert_complement(&mut self, group: &str) -> Result<()> {
        let inside = self
            .group_masks
            .get(group)
            .ok_or_else(|| Error::Construction(format!("group mask '{group}' is missing")))?;
        let mut flag = alloc::vec![false; self.rows()];
        inside.iter().for_each(|&i| flag[i] = true);
        let outside = (0..self.rows()).filter(|&i| !flag[i]).collect();
        self.insert_mask(complement_name(group), outside)
    }

    /// Adds the four label-conditioned intersections of `group` and its
    /// complement (see [`eo_mask_names`]). Fails naming the first empty one.
    pub fn insert_label_masks(&mut self, group: &str) -> Result<()> {
        let p = self.mask(group)?.to_vec();
        let u = self.mask(&complement_name(group))?.to_vec();
        let names = eo_mask_names(group);
        let split = |rows: &[usize], sign: f64| -> Vec<usize> {
            rows.iter().copied().filter(|&i| self.labels[i] == sign).collect()
        };
        let parts = [split(&p, 1.0), split(&u, 1.0), split(&p, -1.0), split(&u, -1.0)];
        for (name, rows) in names.iter().zip(parts) {
            if rows.is_empty() {
                return Err(Error::Construction(format!("group mask '{name}' is empty")));
            }
            self.insert_mask(name.to_string(), rows)?;
        }
        Ok(())
    }

    pub fn mean_row_norm(&self, rows: &[usize]) -> f64 {
        if rows.is_empty() {
            return 0.0;
        }
        rows.iter().map(|&i| self.features.row_norm(i)).sum::<f64>() / rows.len() as f64
    }

    pub fn mean_row_norm_sq(&self, rows: &[usize]) -> f64 {
        if rows.is_empty() {
            return 0.0;
        }
        rows.iter()
            .map(|&i| {
                let n = self.features.row_norm(i);
                n * n
            })
            .sum::<f64>()
            / rows.len() as f64
    }

    pub fn max_row_norm(&self) -> f64 {
        (0..self.rows()).map(|i| self.features.row_norm(i)).fold(0.0, f64::max)
    }
}
