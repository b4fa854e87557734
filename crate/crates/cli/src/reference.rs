//! Published numbers printed beside measured ones. Display only; nothing here
//! feeds back into a computation.

use serde::Serialize;

pub const SOURCE: &str = "paper";

pub const DATASETS: [&str; 6] = [
    "SpamBase",
    "Megawatt1",
    "Ionosphere",
    "SpectF",
    "Credit_Default",
    "German Credit",
];

/// (mean, std) f1.
pub type Score = (f64, Option<f64>);

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PoolingRow {
    pub dataset: &'static str,
    pub base: f64,
    pub max_pool: Score,
    pub corr_pool: Score,
}

/// Base f1 and FeatGeNN under max and correlation pooling, 30 runs.
pub const POOLING: [PoolingRow; 6] = [
    PoolingRow { dataset: "SpamBase", base: 0.9102, max_pool: (0.9422, Some(0.011)), corr_pool: (0.9530, Some(0.016)) },
    PoolingRow { dataset: "Megawatt1", base: 0.8890, max_pool: (0.9148, Some(0.002)), corr_pool: (0.9151, Some(0.002)) },
    PoolingRow { dataset: "Ionosphere", base: 0.9233, max_pool: (0.9587, Some(0.012)), corr_pool: (0.9667, Some(0.004)) },
    PoolingRow { dataset: "SpectF", base: 0.7750, max_pool: (0.8682, Some(0.018)), corr_pool: (0.8776, Some(0.013)) },
    PoolingRow { dataset: "Credit_Default", base: 0.8037, max_pool: (0.8092, Some(0.003)), corr_pool: (0.8095, Some(0.003)) },
    PoolingRow { dataset: "German Credit", base: 0.7401, max_pool: (0.7775, Some(0.006)), corr_pool: (0.7814, Some(0.002)) },
];

pub const METHODS: [&str; 8] = [
    "Base", "Random", "DFS", "AutoFeat", "NFS", "DIFER", "FeatGeNN*", "FeatGeNN",
];

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ComparisonRow {
    pub dataset: &'static str,
    /// Same order as [`METHODS`]; `FeatGeNN*` is the 30-run mean, `FeatGeNN` the maximum.
    pub values: [Score; 8],
}

const fn s(v: f64) -> Score {
    (v, None)
}

/// Comparison with other feature-engineering methods.
pub const COMPARISON: [ComparisonRow; 6] = [
    ComparisonRow { dataset: "SpamBase", values: [s(0.9102), s(0.9237), s(0.9102), s(0.9237), s(0.9296), s(0.9339), (0.9530, Some(0.016)), s(0.9644)] },
    ComparisonRow { dataset: "Megawatt1", values: [s(0.8890), s(0.8973), s(0.8773), s(0.8893), s(0.9130), s(0.9171), (0.9151, Some(0.002)), s(0.9171)] },
    ComparisonRow { dataset: "Ionosphere", values: [s(0.9233), s(0.9344), s(0.9175), s(0.9117), s(0.9516), s(0.9770), (0.9644, Some(0.012)), s(0.9713)] },
    ComparisonRow { dataset: "SpectF", values: [s(0.7750), s(0.8277), s(0.7906), s(0.8161), s(0.8501), s(0.8612), (0.8776, Some(0.013)), s(0.8802)] },
    ComparisonRow { dataset: "Credit_Default", values: [s(0.8037), s(0.8060), s(0.8059), s(0.8060), s(0.8049), s(0.8096), (0.8095, Some(0.003)), s(0.8102)] },
    ComparisonRow { dataset: "German Credit", values: [s(0.7410), s(0.7550), s(0.7490), s(0.7600), s(0.7818), s(0.7770), (0.7814, Some(0.002)), s(0.7827)] },
];

pub const COUNT_METHODS: [&str; 5] = ["Random", "AutoFeat", "NFS", "DIFER", "FeatGeNN"];

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CountRow {
    pub dataset: &'static str,
    pub counts: [usize; 5],
}

/// Generated-feature counts.
pub const FEATURE_COUNTS: [CountRow; 6] = [
    CountRow { dataset: "SpamBase", counts: [1, 46, 57, 1, 1] },
    CountRow { dataset: "Megawatt1", counts: [8, 48, 37, 29, 8] },
    CountRow { dataset: "Ionosphere", counts: [1, 52, 34, 1, 1] },
    CountRow { dataset: "SpectF", counts: [8, 37, 44, 9, 8] },
    CountRow { dataset: "Credit_Default", counts: [4, 30, 25, 5, 4] },
    CountRow { dataset: "German Credit", counts: [1, 22, 24, 1, 1] },
];

/// Relative gain of full-data pooling statistics over 60% and 30%, in percent.
pub const FRACTION_GAIN_PCT: [(f64, f64); 2] = [(0.6, 0.76), (0.3, 1.38)];

pub fn pooling(dataset: &str) -> Option<&'static PoolingRow> {
    POOLING.iter().find(|r| r.dataset.eq_ignore_ascii_case(dataset))
}

pub fn comparison(dataset: &str) -> Option<&'static ComparisonRow> {
    COMPARISON.iter().find(|r| r.dataset.eq_ignore_ascii_case(dataset))
}

pub fn feature_count(dataset: &str) -> Option<usize> {
    FEATURE_COUNTS
        .iter()
        .find(|r| r.dataset.eq_ignore_ascii_case(dataset))
        .map(|r| r.counts[4])
}
