//! Dataset ingestion: LIBSVM and CSV readers, group-mask extraction, and a
//! few small utilities (min-max scaling, seeded split).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read};

use ppl_core::linalg::{CsrMatrix, Features, Matrix};
use ppl_core::problems::{complement_name, Dataset};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Widest feature matrix that is stored densely.
pub const DENSE_MAX_DIM: usize = 4096;

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("no header")]
    NoHeader,
    #[error("column '{0}' not found in header")]
    MissingColumn(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Construction(#[from] ppl_core::Error),
}

fn parse_error(line: usize, message: impl Into<String>) -> DataError {
    DataError::Parse {
        line,
        message: message.into(),
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LibsvmOptions {
    /// Also accept `0` as the negative label.
    pub zero_one_labels: bool,
}

fn parse_label(token: &str, line: usize, opts: LibsvmOptions) -> Result<f64, DataError> {
    let value: f64 = token
        .parse()
        .map_err(|_| parse_error(line, format!("label '{token}' is not numeric")))?;
    if value == 1.0 {
        Ok(1.0)
    } else if value == -1.0 || (value == 0.0 && opts.zero_one_labels) {
        Ok(-1.0)
    } else {
        Err(parse_error(line, format!("label '{token}' is not +1 or -1")))
    }
}

/// Builds dense or sparse storage depending on the width.
fn assemble(rows: Vec<Vec<(usize, f64)>>, dim: usize) -> Features {
    if dim <= DENSE_MAX_DIM {
        let mut m = Matrix::zeros(rows.len(), dim);
        for (i, row) in rows.iter().enumerate() {
            for &(j, v) in row {
                m.set(i, j, v);
            }
        }
        Features::Dense(m)
    } else {
        let mut m = CsrMatrix::new(dim);
        for row in &rows {
            m.push_row(row);
        }
        Features::Sparse(m)
    }
}

/// Reads `label idx:val ...` lines with 1-based, strictly ascending indices.
///
/// Text after `#` is a comment. The dimension is the largest index seen.
pub fn parse_libsvm<R: Read>(input: R, opts: LibsvmOptions) -> Result<Dataset, DataError> {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut dim = 0usize;
    for (n, line) in BufReader::new(input).lines().enumerate() {
        let line_no = n + 1;
        let line = line?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let label_token = tokens.next().unwrap_or_default();
        if label_token.contains(':') {
            return Err(parse_error(line_no, format!("expected a label before '{label_token}'")));
        }
        labels.push(parse_label(label_token, line_no, opts)?);
        let mut row = Vec::new();
        let mut last = 0usize;
        for token in tokens {
            let (idx, val) = token
                .split_once(':')
                .ok_or_else(|| parse_error(line_no, format!("entry '{token}' is not idx:val")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| parse_error(line_no, format!("index '{idx}' is not a positive integer")))?;
            if idx == 0 {
                return Err(parse_error(line_no, "indices are 1-based"));
            }
            if idx <= last {
                return Err(parse_error(
                    line_no,
                    format!("index {idx} does not follow {last} (indices must be ascending and unique)"),
                ));
            }
            let val: f64 = val
                .parse()
                .map_err(|_| parse_error(line_no, format!("value '{val}' is not numeric")))?;
            if !val.is_finite() {
                return Err(parse_error(line_no, format!("value '{val}' is not finite")));
            }
            last = idx;
            if val != 0.0 {
                row.push((idx - 1, val));
            }
        }
        dim = dim.max(last);
        rows.push(row);
    }
    Ok(Dataset::new(assemble(rows, dim), labels)?)
}

/// Writes the dataset in LIBSVM form. Zero entries are omitted, except that
/// the last column is written explicitly on the first row when no row has a
/// nonzero there, so the dimension survives a round trip.
pub fn serialize_libsvm(data: &Dataset) -> String {
    let dim = data.dim();
    let last_used = dim == 0 || (0..data.rows()).any(|i| data.features.value(i, dim.wrapping_sub(1)) != 0.0);
    let mut out = String::new();
    for i in 0..data.rows() {
        out.push_str(if data.labels[i] > 0.0 { "+1" } else { "-1" });
        let mut wrote_last = false;
        for (j, v) in data.features.row_entries(i) {
            if v != 0.0 {
                let _ = write!(out, " {}:{}", j + 1, v);
                wrote_last |= j + 1 == dim;
            }
        }
        if i == 0 && !last_used && !wrote_last {
            let _ = write!(out, " {dim}:0");
        }
        out.push('\n');
    }
    out
}

/// Reads a headed, comma-delimited file.
///
/// Every column other than the label and the listed group columns must be
/// numeric and becomes a feature. Group columns are kept as string
/// attributes for [`extract_group_masks`].
pub fn parse_csv<R: Read>(
    input: R,
    label_column: &str,
    positive_label: &str,
    group_columns: &[&str],
) -> Result<Dataset, DataError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_reader(input);
    let mut records = reader.records();
    let header = match records.next() {
        None => return Err(DataError::NoHeader),
        Some(r) => r.map_err(|e| parse_error(1, e.to_string()))?,
    };
    let names: Vec<String> = header.iter().map(|s| s.trim().to_string()).collect();
    if names.iter().all(|s| s.is_empty()) {
        return Err(DataError::NoHeader);
    }
    let label_idx = names
        .iter()
        .position(|n| n == label_column)
        .ok_or_else(|| DataError::MissingColumn(label_column.to_string()))?;
    for g in group_columns {
        if !names.iter().any(|n| n == g) {
            return Err(DataError::MissingColumn(g.to_string()));
        }
    }
    let is_group = |j: usize| group_columns.contains(&names[j].as_str());
    let feature_cols: Vec<usize> = (0..names.len()).filter(|&j| j != label_idx && !is_group(j)).collect();

    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut attributes: BTreeMap<String, Vec<String>> =
        group_columns.iter().map(|g| (g.to_string(), Vec::new())).collect();
    for (n, record) in records.enumerate() {
        let line_no = n + 2;
        let record = record.map_err(|e| parse_error(line_no, e.to_string()))?;
        if record.len() != names.len() {
            return Err(parse_error(
                line_no,
                format!("expected {} fields, found {}", names.len(), record.len()),
            ));
        }
        labels.push(if record[label_idx].trim() == positive_label {
            1.0
        } else {
            -1.0
        });
        let mut row = Vec::with_capacity(feature_cols.len());
        for (k, &j) in feature_cols.iter().enumerate() {
            let cell = record[j].trim();
            let v: f64 = cell.parse().map_err(|_| {
                parse_error(
                    line_no,
                    format!(
                        "column '{}' has non-numeric value '{cell}'; list it as a group column",
                        names[j]
                    ),
                )
            })?;
            if !v.is_finite() {
                return Err(parse_error(
                    line_no,
                    format!("column '{}' value '{cell}' is not finite", names[j]),
                ));
            }
            row.push((k, v));
        }
        rows.push(row);
        for g in group_columns {
            let j = names.iter().position(|n| n == g).expect("checked above");
            attributes
                .get_mut(*g)
                .expect("initialized")
                .push(record[j].trim().to_string());
        }
    }
    let mut data = Dataset::new(assemble(rows, feature_cols.len()), labels)?;
    data.feature_names = feature_cols.iter().map(|&j| names[j].clone()).collect();
    data.attributes = attributes;
    Ok(data)
}

#[derive(Clone, Debug, PartialEq)]
pub enum GroupSource {
    /// Rows whose feature `index` (0-based) exceeds `threshold`.
    FeatureColumn { index: usize, threshold: f64 },
    /// Rows whose string attribute `name` is one of `values`.
    CsvColumn { name: String, values: Vec<String> },
}

/// Selects a protected group. Extraction adds the mask `name` and its
/// complement `not:{name}`.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupSpec {
    pub name: String,
    pub source: GroupSource,
}

fn select_rows(data: &Dataset, spec: &GroupSpec) -> Result<Vec<usize>, DataError> {
    let fail = |msg: String| DataError::Construction(ppl_core::Error::Construction(msg));
    match &spec.source {
        GroupSource::FeatureColumn { index, threshold } => {
            if *index >= data.dim() {
                return Err(fail(format!(
                    "group '{}' uses feature {index} but the dataset has {} features",
                    spec.name,
                    data.dim()
                )));
            }
            Ok((0..data.rows())
                .filter(|&i| data.features.value(i, *index) > *threshold)
                .collect())
        }
        GroupSource::CsvColumn { name, values } => {
            let column = data
                .attributes
                .get(name)
                .ok_or_else(|| fail(format!("group '{}' uses missing column '{name}'", spec.name)))?;
            Ok(column
                .iter()
                .enumerate()
                .filter(|(_, v)| values.iter().any(|w| w == *v))
                .map(|(i, _)| i)
                .collect())
        }
    }
}

/// Adds each group and its complement to `data`. With `equalized_odds`, also
/// adds the four label-conditioned intersections per group.
pub fn extract_group_masks(mut data: Dataset, specs: &[GroupSpec], equalized_odds: bool) -> Result<Dataset, DataError> {
    for spec in specs {
        let rows = select_rows(&data, spec)?;
        data.insert_mask(spec.name.clone(), rows)?;
        data.insert_complement(&spec.name)?;
        data.mask(&spec.name)?;
        data.mask(&complement_name(&spec.name))?;
        if equalized_odds {
            data.insert_label_masks(&spec.name)?;
        }
    }
    Ok(data)
}

/// Rescales every feature column to `[0, 1]`. Constant columns become 0.
/// Not applied unless a run asks for it.
pub fn min_max_scale(data: &Dataset) -> Dataset {
    let (n, d) = (data.rows(), data.dim());
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for i in 0..n {
        for j in 0..d {
            let v = data.features.value(i, j);
            lo[j] = lo[j].min(v);
            hi[j] = hi[j].max(v);
        }
    }
    let rows: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|i| {
            (0..d)
                .map(|j| {
                    let span = hi[j] - lo[j];
                    let v = if span > 0.0 {
                        (data.features.value(i, j) - lo[j]) / span
                    } else {
                        0.0
                    };
                    (j, v)
                })
                .filter(|(_, v)| *v != 0.0)
                .collect()
        })
        .collect();
    let mut out = data.clone();
    out.features = assemble(rows, d);
    out
}

/// Shuffles rows with a seeded generator and splits off the first
/// `fraction` of them. Masks are dropped; string attributes follow the rows.
pub fn shuffle_split(data: &Dataset, fraction: f64, seed: u64) -> Result<(Dataset, Dataset), DataError> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(DataError::Construction(ppl_core::Error::Parameter(format!(
            "split fraction must lie in [0, 1], got {fraction}"
        ))));
    }
    let mut order: Vec<usize> = (0..data.rows()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let cut = (fraction * data.rows() as f64).round() as usize;
    let take = |idx: &[usize]| -> Result<Dataset, DataError> {
        let rows = idx.iter().map(|&i| data.features.row_entries(i)).collect();
        let mut out = Dataset::new(
            assemble(rows, data.dim()),
            idx.iter().map(|&i| data.labels[i]).collect(),
        )?;
        out.feature_names = data.feature_names.clone();
        out.attributes = data
            .attributes
            .iter()
            .map(|(k, col)| (k.clone(), idx.iter().map(|&i| col[i].clone()).collect()))
            .collect();
        Ok(out)
    };
    Ok((take(&order[..cut])?, take(&order[cut..])?))
}
