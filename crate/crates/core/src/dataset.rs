//! Tabular datasets: loading, encoding, standardization, folds and subsampling.

use std::collections::{BTreeSet, HashSet};
use std::path::Path;

use ndarray::{concatenate, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnMeta {
    pub name: String,
    pub kind: ColumnKind,
    /// Sorted distinct raw values; empty for numeric columns.
    pub category_map: Vec<String>,
}

impl ColumnMeta {
    pub fn numeric(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: ColumnKind::Numeric,
            category_map: Vec::new(),
        }
    }
}

/// Row-major feature matrix with an integer class vector.
///
/// Categorical columns hold their `category_map` index as the cell value, so
/// every cell is a finite real.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    x: Array2<f64>,
    y: Vec<usize>,
    columns: Vec<ColumnMeta>,
    /// Raw target values indexed by encoded label.
    classes: Vec<String>,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        x: Array2<f64>,
        y: Vec<usize>,
        columns: Vec<ColumnMeta>,
        classes: Vec<String>,
    ) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::Shape(format!(
                "{} rows in x but {} labels",
                x.nrows(),
                y.len()
            )));
        }
        if x.ncols() != columns.len() {
            return Err(Error::Shape(format!(
                "{} columns in x but {} column names",
                x.ncols(),
                columns.len()
            )));
        }
        let mut seen = HashSet::new();
        for c in &columns {
            if !seen.insert(c.name.as_str()) {
                return Err(Error::DuplicateColumn(c.name.clone()));
            }
        }
        if let Some(pos) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite value at flat index {pos}"
            )));
        }
        if let Some(&bad) = y.iter().find(|&&l| l >= classes.len()) {
            return Err(Error::InvalidArgument(format!(
                "label {bad} has no class name ({} classes)",
                classes.len()
            )));
        }
        Ok(Self {
            name: name.into(),
            x,
            y,
            columns,
            classes,
        })
    }

    /// Build a numeric dataset with generated column names `f0..` and class names `0..`.
    pub fn from_parts(name: impl Into<String>, x: Array2<f64>, y: Vec<usize>) -> Result<Self> {
        let columns = (0..x.ncols())
            .map(|j| ColumnMeta::numeric(format!("f{j}")))
            .collect();
        let n_classes = y.iter().copied().max().map_or(0, |m| m + 1);
        let classes = (0..n_classes).map(|c| c.to_string()).collect();
        Self::new(name, x, y, columns, classes)
    }

    pub fn x(&self) -> ArrayView2<'_, f64> {
        self.x.view()
    }

    pub fn y(&self) -> &[usize] {
        &self.y
    }

    pub fn columns(&self) -> &[ColumnMeta] {
        &self.columns
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn n_rows(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.x.ncols()
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    /// Encoded label of a raw target value.
    pub fn label_of(&self, raw: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == raw)
    }

    /// Keep only the given columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Result<Self> {
        if let Some(&bad) = cols.iter().find(|&&c| c >= self.n_cols()) {
            return Err(Error::InvalidArgument(format!("column {bad} out of range")));
        }
        let x = self.x.select(Axis(1), cols);
        let columns = cols.iter().map(|&c| self.columns[c].clone()).collect();
        Self::new(
            self.name.clone(),
            x,
            self.y.clone(),
            columns,
            self.classes.clone(),
        )
    }

    /// Keep only the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            name: self.name.clone(),
            x: self.x.select(Axis(0), rows),
            y: rows.iter().map(|&r| self.y[r]).collect(),
            columns: self.columns.clone(),
            classes: self.classes.clone(),
        }
    }
}

fn parse_cell(raw: &str) -> Option<f64> {
    raw.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Sort raw labels numerically when they all parse as numbers, lexicographically otherwise.
fn sorted_distinct(values: &[String]) -> Vec<String> {
    let distinct: BTreeSet<&str> = values.iter().map(String::as_str).collect();
    let mut out: Vec<String> = distinct.into_iter().map(str::to_owned).collect();
    if out.iter().all(|v| parse_cell(v).is_some()) {
        out.sort_by(|a, b| {
            parse_cell(a)
                .unwrap()
                .total_cmp(&parse_cell(b).unwrap())
                .then_with(|| a.cmp(b))
        });
    }
    out
}

/// Load a comma-separated file with a header row. Non-numeric columns become
/// categorical; the target column is label-encoded into `y`.
pub fn load_csv(path: impl AsRef<Path>, target: &str) -> Result<Dataset> {
    let path = path.as_ref();
    let csv_err = |e: csv::Error| Error::Csv {
        path: path.to_owned(),
        message: e.to_string(),
    };
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(file);
    let header: Vec<String> = reader
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(|h| h.trim().to_owned())
        .collect();
    let target_idx = header
        .iter()
        .position(|h| h == target)
        .ok_or_else(|| Error::MissingTarget(target.to_owned()))?;

    let mut cells: Vec<Vec<String>> = vec![Vec::new(); header.len()];
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        if record.len() != header.len() {
            return Err(Error::RaggedRow {
                row,
                expected: header.len(),
                found: record.len(),
            });
        }
        for (j, field) in record.iter().enumerate() {
            let field = field.trim();
            if field.is_empty() || field == "?" {
                return Err(Error::MissingValue {
                    column: header[j].clone(),
                    row,
                });
            }
            cells[j].push(field.to_owned());
        }
    }
    let n_rows = cells[0].len();
    if n_rows == 0 {
        return Err(Error::EmptyDataset);
    }

    let classes = sorted_distinct(&cells[target_idx]);
    let y = cells[target_idx]
        .iter()
        .map(|v| classes.iter().position(|c| c == v).unwrap())
        .collect();

    let feature_idx: Vec<usize> = (0..header.len()).filter(|&j| j != target_idx).collect();
    let mut x = Array2::zeros((n_rows, feature_idx.len()));
    let mut columns = Vec::with_capacity(feature_idx.len());
    for (out_j, &j) in feature_idx.iter().enumerate() {
        let parsed: Option<Vec<f64>> = cells[j].iter().map(|v| parse_cell(v)).collect();
        let meta = match parsed {
            Some(values) => {
                for (i, v) in values.into_iter().enumerate() {
                    x[[i, out_j]] = v;
                }
                ColumnMeta::numeric(header[j].clone())
            }
            None => {
                let mut category_map: Vec<String> = cells[j].clone();
                category_map.sort();
                category_map.dedup();
                for (i, v) in cells[j].iter().enumerate() {
                    x[[i, out_j]] = category_map.binary_search(v).unwrap() as f64;
                }
                ColumnMeta {
                    name: header[j].clone(),
                    kind: ColumnKind::Categorical,
                    category_map,
                }
            }
        };
        columns.push(meta);
    }

    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Dataset::new(name, x, y, columns, classes)
}

/// Per-column location and scale used by [`prepare`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerStats {
    pub mean: Vec<f64>,
    /// Population standard deviation.
    pub std: Vec<f64>,
}

impl ScalerStats {
    pub fn is_constant(&self, col: usize) -> bool {
        self.std[col] == 0.0
    }
}

/// Z-score every column of `x` in place with population statistics.
/// Constant columns become all zeros.
pub fn standardize_columns(x: &mut Array2<f64>) -> ScalerStats {
    let n = x.nrows() as f64;
    let mut mean = Vec::with_capacity(x.ncols());
    let mut std = Vec::with_capacity(x.ncols());
    for mut col in x.columns_mut() {
        let first = col[0];
        if col.iter().all(|&v| v == first) {
            mean.push(first);
            std.push(0.0);
            col.fill(0.0);
            continue;
        }
        let m = col.sum() / n;
        let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
        let s = var.sqrt();
        col.mapv_inplace(|v| (v - m) / s);
        mean.push(m);
        std.push(s);
    }
    ScalerStats { mean, std }
}

/// Encode categoricals by category index and z-score every column.
pub fn prepare(d: &Dataset) -> (Dataset, ScalerStats) {
    let mut out = d.clone();
    let stats = if out.n_rows() == 0 {
        ScalerStats {
            mean: vec![0.0; out.n_cols()],
            std: vec![0.0; out.n_cols()],
        }
    } else {
        standardize_columns(&mut out.x)
    };
    (out, stats)
}

/// Stratified k-fold assignment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub assignments: Vec<usize>,
}

impl FoldPlan {
    /// (train rows, test rows) for one fold, both ascending.
    pub fn split(&self, fold: usize) -> (Vec<usize>, Vec<usize>) {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (row, &f) in self.assignments.iter().enumerate() {
            if f == fold {
                test.push(row);
            } else {
                train.push(row);
            }
        }
        (train, test)
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignments {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Shuffle each class independently, then deal its rows round-robin across
/// folds, continuing the dealer position from class to class so total fold
/// sizes differ by at most one.
pub fn make_folds(d: &Dataset, k: usize, seed: u64) -> Result<FoldPlan> {
    make_folds_for_labels(d.y(), d.n_classes(), k, seed)
}

pub fn make_folds_for_labels(
    y: &[usize],
    n_classes: usize,
    k: usize,
    seed: u64,
) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("k must be >= 2, got {k}")));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (row, &label) in y.iter().enumerate() {
        by_class[label].push(row);
    }
    for (class, rows) in by_class.iter().enumerate() {
        if !rows.is_empty() && rows.len() < k {
            return Err(Error::ClassTooSmall {
                class,
                count: rows.len(),
                k,
            });
        }
    }
    let mut rng = rng::stream(seed, &[0xF01D]);
    let mut assignments = vec![0; y.len()];
    let mut dealer = 0;
    for rows in by_class.iter_mut() {
        rows.shuffle(&mut rng);
        for &row in rows.iter() {
            assignments[row] = dealer % k;
            dealer += 1;
        }
    }
    Ok(FoldPlan { k, assignments })
}

/// ⌈fraction·n⌉ distinct row indices drawn uniformly without replacement,
/// returned in ascending order.
pub fn subsample_rows(n_rows: usize, fraction: f64, seed: u64) -> Vec<usize> {
    let fraction = fraction.clamp(0.0, 1.0);
    // 1e-9 absorbs products such as 0.7 * 10 = 7.000000000000001
    let count = ((fraction * n_rows as f64) - 1e-9).ceil().max(0.0) as usize;
    let count = count.min(n_rows);
    if count == n_rows {
        return (0..n_rows).collect();
    }
    let mut rng = rng::stream(seed, &[0x5AB5]);
    let mut rows = rand::seq::index::sample(&mut rng, n_rows, count).into_vec();
    rows.sort_unstable();
    rows
}

/// Append `cols` as new numeric columns named `names`.
pub fn append_features(d: &Dataset, cols: ArrayView2<'_, f64>, names: &[String]) -> Result<Dataset> {
    if cols.ncols() == 0 && names.is_empty() {
        return Ok(d.clone());
    }
    if cols.nrows() != d.n_rows() {
        return Err(Error::Shape(format!(
            "{} generated rows for a dataset of {} rows",
            cols.nrows(),
            d.n_rows()
        )));
    }
    if cols.ncols() != names.len() {
        return Err(Error::Shape(format!(
            "{} generated columns but {} names",
            cols.ncols(),
            names.len()
        )));
    }
    let x = concatenate(Axis(1), &[d.x.view(), cols.reborrow()]).expect("row counts checked");
    let mut columns = d.columns.clone();
    columns.extend(names.iter().map(|n| ColumnMeta::numeric(n.clone())));
    Dataset::new(d.name.clone(), x, d.y.clone(), columns, d.classes.clone())
}
