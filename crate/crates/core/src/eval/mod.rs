//! The scoring model: a random forest under stratified k-fold cross-validation.

mod forest;
mod metrics;

use serde::{Deserialize, Serialize};

pub use forest::{fit_forest, predict, FeaturesPerSplit, Forest, ForestConfig, Tree};
pub use metrics::{f1_score, f1_with, weighted_f1, F1Average};

use crate::dataset::{Dataset, FoldPlan};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Per-fold f1 under the requested averaging.
    pub fold_f1: Vec<f64>,
    pub mean_f1: f64,
    /// Population standard deviation of `fold_f1`.
    pub std_f1: f64,
    /// Support-weighted f1 per fold, reported whatever the primary averaging.
    pub fold_weighted_f1: Vec<f64>,
    pub n_features_used: usize,
}

impl EvalReport {
    pub fn mean_weighted_f1(&self) -> f64 {
        mean_std(&self.fold_weighted_f1).0
    }
}

/// Mean and population standard deviation.
pub fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (0.0, 0.0);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Train on k−1 folds, score the held-out fold, for every fold.
pub fn evaluate_cv(
    d: &Dataset,
    folds: &FoldPlan,
    cfg: &ForestConfig,
    average: F1Average,
    positive: usize,
) -> Result<EvalReport> {
    if folds.assignments.len() != d.n_rows() {
        return Err(Error::Shape(format!(
            "fold plan covers {} rows, dataset has {}",
            folds.assignments.len(),
            d.n_rows()
        )));
    }
    let mut fold_f1 = Vec::with_capacity(folds.k);
    let mut fold_weighted_f1 = Vec::with_capacity(folds.k);
    for fold in 0..folds.k {
        let (train, test) = folds.split(fold);
        assert!(
            train.iter().all(|r| folds.assignments[*r] != fold)
                && test.iter().all(|r| folds.assignments[*r] == fold),
            "fold {fold} train and test rows overlap"
        );
        let train_d = d.select_rows(&train);
        let test_d = d.select_rows(&test);
        let forest = fit_forest(train_d.x(), train_d.y(), cfg)?;
        let pred = forest.predict(test_d.x())?;
        fold_f1.push(f1_with(average, test_d.y(), &pred, positive)?);
        fold_weighted_f1.push(weighted_f1(test_d.y(), &pred)?);
    }
    let (mean_f1, std_f1) = mean_std(&fold_f1);
    Ok(EvalReport {
        fold_f1,
        mean_f1,
        std_f1,
        fold_weighted_f1,
        n_features_used: d.n_cols(),
    })
}

/// Everything `evaluate_cv` needs besides the dataset, bundled so the
/// evolutionary search can score candidate datasets through one handle.
#[derive(Debug, Clone)]
pub struct CvEvaluator {
    pub folds: FoldPlan,
    pub forest: ForestConfig,
    pub average: F1Average,
    pub positive: usize,
}

impl CvEvaluator {
    pub fn report(&self, d: &Dataset) -> Result<EvalReport> {
        evaluate_cv(d, &self.folds, &self.forest, self.average, self.positive)
    }
}

/// Scores a dataset; higher is better, range [0, 1].
pub trait Evaluator: Sync {
    fn score(&self, d: &Dataset) -> Result<f64>;
}

impl Evaluator for CvEvaluator {
    fn score(&self, d: &Dataset) -> Result<f64> {
        Ok(self.report(d)?.mean_f1)
    }
}

#[cfg(test)]
mod tests {
    use ndarray::Array2;

    use super::*;
    use crate::dataset::make_folds;

    #[test]
    fn leaked_target_scores_one() {
        let n = 60;
        let y: Vec<usize> = (0..n).map(|i| (i * 7 % 5 == 0) as usize).collect();
        let x = Array2::from_shape_fn((n, 3), |(i, j)| match j {
            0 => y[i] as f64,
            _ => ((i * 31 + j * 17) % 11) as f64,
        });
        let d = Dataset::from_parts("leak", x, y).unwrap();
        let folds = make_folds(&d, 5, 1).unwrap();
        let cfg = ForestConfig {
            n_trees: 20,
            // the leaked column must be offered at every split
            features_per_split: FeaturesPerSplit::All,
            ..Default::default()
        };
        for avg in [F1Average::Binary, F1Average::Weighted] {
            let r = evaluate_cv(&d, &folds, &cfg, avg, 1).unwrap();
            assert_eq!(r.mean_f1, 1.0);
            assert_eq!(r.fold_f1.len(), 5);
            assert_eq!(r.std_f1, 0.0);
        }
    }

    #[test]
    fn mean_std_population() {
        let (m, s) = mean_std(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert_eq!(s, 1.0);
    }
}
