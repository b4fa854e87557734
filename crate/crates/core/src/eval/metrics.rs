//! f1 scores.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How per-class f1 values are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum F1Average {
    /// f1 of the positive class only.
    Binary,
    /// Per-class f1 weighted by each class's share of `y_true`.
    #[default]
    Weighted,
}

fn check_lengths(y_true: &[usize], y_pred: &[usize]) -> Result<()> {
    if y_true.len() != y_pred.len() {
        return Err(Error::Shape(format!(
            "{} true labels but {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    Ok(())
}

fn f1_of_class(y_true: &[usize], y_pred: &[usize], class: usize) -> f64 {
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t == class, p == class) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (true, false) => fn_ += 1,
            (false, false) => {}
        }
    }
    // 2PR/(P+R) reduces to 2TP/(2TP+FP+FN); zero when nothing is positive
    let denom = 2 * tp + fp + fn_;
    if tp == 0 || denom == 0 {
        0.0
    } else {
        2.0 * tp as f64 / denom as f64
    }
}

/// 2·P·R/(P+R) for `positive`, 0 when P + R = 0.
pub fn f1_score(y_true: &[usize], y_pred: &[usize], positive: usize) -> Result<f64> {
    check_lengths(y_true, y_pred)?;
    Ok(f1_of_class(y_true, y_pred, positive))
}

pub fn weighted_f1(y_true: &[usize], y_pred: &[usize]) -> Result<f64> {
    check_lengths(y_true, y_pred)?;
    if y_true.is_empty() {
        return Ok(0.0);
    }
    let n_classes = y_true.iter().max().unwrap() + 1;
    let mut support = vec![0usize; n_classes];
    y_true.iter().for_each(|&t| support[t] += 1);
    let n = y_true.len() as f64;
    Ok(support
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > 0)
        .map(|(c, &s)| s as f64 / n * f1_of_class(y_true, y_pred, c))
        .sum())
}

pub fn f1_with(average: F1Average, y_true: &[usize], y_pred: &[usize], positive: usize) -> Result<f64> {
    match average {
        F1Average::Binary => f1_score(y_true, y_pred, positive),
        F1Average::Weighted => weighted_f1(y_true, y_pred),
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;

    #[test]
    fn perfect() {
        let y = [0, 1, 1, 0];
        assert_eq!(f1_score(&y, &y, 1).unwrap(), 1.0);
        assert_eq!(weighted_f1(&y, &y).unwrap(), 1.0);
    }

    #[test]
    fn two_thirds() {
        // TP=2, FP=1, FN=1
        let t = [1, 1, 1, 0, 0];
        let p = [1, 1, 0, 1, 0];
        assert_abs_diff_eq!(f1_score(&t, &p, 1).unwrap(), 2.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn degenerate_is_zero() {
        assert_eq!(f1_score(&[0, 0, 0], &[0, 0, 0], 1).unwrap(), 0.0);
        assert!(f1_score(&[0, 1], &[0], 1).is_err());
    }

    #[test]
    fn weighted_by_support() {
        // class 0: tp=2 fp=1 fn=0 -> 0.8 ; class 1: tp=1 fp=0 fn=1 -> 2/3
        let t = [0, 0, 1, 1];
        let p = [0, 0, 0, 1];
        assert_abs_diff_eq!(
            weighted_f1(&t, &p).unwrap(),
            0.5 * 0.8 + 0.5 * (2.0 / 3.0),
            epsilon = 1e-15
        );
    }
}
