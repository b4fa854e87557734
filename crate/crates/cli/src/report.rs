use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use featgenn_core::eval::mean_std;
use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::reference;

/// One line of a results table: a method on a dataset, aggregated over runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub dataset: String,
    /// `base` or `featgenn`.
    pub method: String,
    /// Human label of the setting, e.g. `raw`, `correlation`, `full`, `60%`.
    pub variant: String,
    pub pooling: Option<String>,
    pub fraction: Option<f64>,
    pub n_generated: usize,
    pub runs: usize,
    pub completed: usize,
    pub seeds: Vec<u64>,
    /// Per-run score under the configured f1 averaging.
    pub scores: Vec<f64>,
    pub mean_f1: f64,
    pub std_f1: f64,
    /// Support-weighted f1 of the same runs, kept for cross-checking.
    pub mean_weighted_f1: f64,
    pub reference_f1: Option<f64>,
    pub reference_std: Option<f64>,
    pub reference_source: Option<String>,
    pub config_hash: String,
    pub error: Option<String>,
}

impl ResultRow {
    pub fn new(dataset: &str, method: &str, variant: &str, config_hash: &str) -> Self {
        Self {
            dataset: dataset.to_string(),
            method: method.to_string(),
            variant: variant.to_string(),
            pooling: None,
            fraction: None,
            n_generated: 0,
            runs: 0,
            completed: 0,
            seeds: Vec::new(),
            scores: Vec::new(),
            mean_f1: 0.0,
            std_f1: 0.0,
            mean_weighted_f1: 0.0,
            reference_f1: None,
            reference_std: None,
            reference_source: None,
            config_hash: config_hash.to_string(),
            error: None,
        }
    }

    /// Fill mean/std from per-run scores; population std over runs.
    pub fn set_scores(&mut self, scores: Vec<f64>, weighted: &[f64]) {
        let (m, s) = mean_std(&scores);
        self.mean_f1 = m;
        self.std_f1 = s;
        self.mean_weighted_f1 = mean_std(weighted).0;
        self.completed = scores.len();
        self.scores = scores;
    }

    pub fn with_reference(mut self, r: Option<reference::Score>) -> Self {
        if let Some((mean, std)) = r {
            self.reference_f1 = Some(mean);
            self.reference_std = std;
            self.reference_source = Some(reference::SOURCE.to_string());
        }
        self
    }

    fn sort_key(&self) -> (String, String, String, u64) {
        (
            self.dataset.clone(),
            self.method.clone(),
            self.pooling.clone().unwrap_or_default(),
            self.fraction.map_or(0, f64::to_bits),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub command: String,
    pub config_hash: String,
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn new(command: &str, config_hash: &str) -> Self {
        Self {
            command: command.to_string(),
            config_hash: config_hash.to_string(),
            rows: Vec::new(),
        }
    }

    pub fn sort(&mut self) {
        self.rows.sort_by_key(ResultRow::sort_key);
    }

    pub fn find(&self, dataset: &str, method: &str, variant: &str) -> Option<&ResultRow> {
        self.rows
            .iter()
            .find(|r| r.dataset == dataset && r.method == method && r.variant == variant)
    }
}

pub const CSV_HEADER: [&str; 18] = [
    "dataset",
    "method",
    "variant",
    "pooling",
    "fraction",
    "n_generated",
    "runs",
    "completed",
    "seeds",
    "scores",
    "mean_f1",
    "std_f1",
    "mean_weighted_f1",
    "reference_f1",
    "reference_std",
    "reference_source",
    "config_hash",
    "error",
];

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

fn joined<T: ToString>(v: &[T]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(";")
}

pub fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' })
        .collect()
}

pub fn write_results(dir: &Path, table: &ResultTable) -> Result<()> {
    let csv_path = dir.join("results.csv");
    let mut w = csv::Writer::from_path(&csv_path).with_context(|| format!("writing {}", csv_path.display()))?;
    w.write_record(CSV_HEADER)?;
    for r in &table.rows {
        w.write_record([
            r.dataset.clone(),
            r.method.clone(),
            r.variant.clone(),
            opt(&r.pooling),
            opt(&r.fraction),
            r.n_generated.to_string(),
            r.runs.to_string(),
            r.completed.to_string(),
            joined(&r.seeds),
            joined(&r.scores),
            r.mean_f1.to_string(),
            r.std_f1.to_string(),
            r.mean_weighted_f1.to_string(),
            opt(&r.reference_f1),
            opt(&r.reference_std),
            opt(&r.reference_source),
            r.config_hash.clone(),
            opt(&r.error),
        ])?;
    }
    w.flush()?;
    write_json(&dir.join("results.json"), table)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = std::fs::File::create(path).with_context(|| format!("writing {}", path.display()))?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    Ok(())
}

/// `generation,best_f1` for one run.
pub fn write_history(dir: &Path, label: &str, history: &[(usize, f64)]) -> Result<PathBuf> {
    let path = dir.join(format!("history_{}.csv", file_stem(label)));
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["generation", "best_f1"])?;
    for (g, s) in history {
        w.write_record([g.to_string(), s.to_string()])?;
    }
    w.flush()?;
    Ok(path)
}

pub fn write_features(dir: &Path, label: &str, names: &[String], cols: ArrayView2<'_, f64>) -> Result<PathBuf> {
    let path = dir.join(format!("features_{}.csv", file_stem(label)));
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(names)?;
    for row in cols.rows() {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(path)
}

pub fn write_rows<S: AsRef<str>>(path: &Path, header: &[&str], rows: &[Vec<S>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r.iter().map(AsRef::as_ref))?;
    }
    w.flush()?;
    Ok(())
}

pub fn print_table(table: &ResultTable) {
    println!(
        "{:<16} {:<9} {:<12} {:>5} {:>9} {:>8} {:>10} {:>5}",
        "dataset", "method", "variant", "runs", "mean_f1", "std", "paper", "n_gen"
    );
    for r in &table.rows {
        let paper = match (r.reference_f1, r.reference_std) {
            (Some(m), Some(s)) => format!("{m:.4}({s:.3})"),
            (Some(m), None) => format!("{m:.4}"),
            _ => "-".into(),
        };
        println!(
            "{:<16} {:<9} {:<12} {:>2}/{:<2} {:>9.4} {:>8.4} {:>10} {:>5}{}",
            r.dataset,
            r.method,
            r.variant,
            r.completed,
            r.runs,
            r.mean_f1,
            r.std_f1,
            paper,
            r.n_generated,
            r.error.as_ref().map(|e| format!("  error: {e}")).unwrap_or_default()
        );
    }
}
