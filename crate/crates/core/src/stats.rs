//! Pearson correlation, correlation scores, binned mutual information and
//! mRMR feature pre-selection.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Pairwise Pearson coefficients between columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub r: Array2<f64>,
}

impl CorrelationMatrix {
    pub fn dim(&self) -> usize {
        self.r.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.r[[i, j]]
    }
}

/// Mean correlation of each column against all columns, self included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationScores {
    pub cs: Vec<f64>,
}

fn is_constant(v: &[f64]) -> bool {
    v.iter().all(|&x| x == v[0])
}

/// r = (nΣxy − ΣxΣy) / √([nΣx² − (Σx)²][nΣy² − (Σy)²]), zero when either
/// input has no variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Shape(format!(
            "pearson inputs of length {} and {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::InvalidArgument(
            "pearson needs at least 2 samples".into(),
        ));
    }
    if is_constant(x) || is_constant(y) {
        return Ok(0.0);
    }
    let n = x.len() as f64;
    let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        sx += a;
        sy += b;
        sxx += a * a;
        syy += b * b;
        sxy += a * b;
    }
    Ok(pearson_from_sums(n, sx, sy, sxx, syy, sxy))
}

fn pearson_from_sums(n: f64, sx: f64, sy: f64, sxx: f64, syy: f64, sxy: f64) -> f64 {
    let vx = n * sxx - sx * sx;
    let vy = n * syy - sy * sy;
    if vx <= 0.0 || vy <= 0.0 {
        return 0.0;
    }
    ((n * sxy - sx * sy) / (vx * vy).sqrt()).clamp(-1.0, 1.0)
}

/// Correlation matrix of the columns of `x`, restricted to `rows`.
pub fn correlation_matrix(x: ArrayView2<'_, f64>, rows: &[usize]) -> Result<CorrelationMatrix> {
    if rows.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "correlation needs at least 2 rows, got {}",
            rows.len()
        )));
    }
    let d = x.ncols();
    // column-major copy of the selected rows
    let cols: Vec<Vec<f64>> = (0..d)
        .map(|j| rows.iter().map(|&i| x[[i, j]]).collect())
        .collect();
    Ok(correlation_matrix_of_columns(&cols))
}

pub(crate) fn correlation_matrix_of_columns(cols: &[Vec<f64>]) -> CorrelationMatrix {
    let d = cols.len();
    let n = cols.first().map_or(0, Vec::len) as f64;
    let constant: Vec<bool> = cols.iter().map(|c| is_constant(c)).collect();
    let sums: Vec<f64> = cols.iter().map(|c| c.iter().sum()).collect();
    let squares: Vec<f64> = cols.iter().map(|c| c.iter().map(|v| v * v).sum()).collect();
    let mut r = Array2::zeros((d, d));
    for i in 0..d {
        if constant[i] {
            continue;
        }
        r[[i, i]] = 1.0;
        for j in (i + 1)..d {
            if constant[j] {
                continue;
            }
            let sxy: f64 = cols[i].iter().zip(&cols[j]).map(|(a, b)| a * b).sum();
            let v = pearson_from_sums(n, sums[i], sums[j], squares[i], squares[j], sxy);
            r[[i, j]] = v;
            r[[j, i]] = v;
        }
    }
    CorrelationMatrix { r }
}

pub fn correlation_scores(m: &CorrelationMatrix) -> CorrelationScores {
    let n = m.dim() as f64;
    CorrelationScores {
        cs: m.r.rows().into_iter().map(|row| row.sum() / n).collect(),
    }
}

/// Equal-width bin codes in `0..bins`; a constant vector maps to bin 0.
pub fn equal_width_bins(x: &[f64], bins: usize) -> Vec<usize> {
    let (lo, hi) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if x.is_empty() || hi <= lo {
        return vec![0; x.len()];
    }
    let width = hi - lo;
    x.iter()
        .map(|&v| (((v - lo) / width * bins as f64) as usize).min(bins - 1))
        .collect()
}

/// Mutual information (nats) between two discrete code vectors.
pub fn discrete_mutual_information(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len();
    if n == 0 {
        return 0.0;
    }
    let na = a.iter().max().map_or(0, |m| m + 1);
    let nb = b.iter().max().map_or(0, |m| m + 1);
    let mut joint = vec![0usize; na * nb];
    let mut pa = vec![0usize; na];
    let mut pb = vec![0usize; nb];
    for (&i, &j) in a.iter().zip(b) {
        joint[i * nb + j] += 1;
        pa[i] += 1;
        pb[j] += 1;
    }
    let n = n as f64;
    let mut mi = 0.0;
    for i in 0..na {
        for j in 0..nb {
            let c = joint[i * nb + j];
            if c == 0 {
                continue;
            }
            let pxy = c as f64 / n;
            mi += pxy * (pxy * n * n / (pa[i] as f64 * pb[j] as f64)).ln();
        }
    }
    mi.max(0.0)
}

/// MI between an equal-width-binned feature and class labels.
pub fn mutual_information(x: &[f64], y: &[usize], bins: usize) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Shape(format!(
            "mutual information inputs of length {} and {}",
            x.len(),
            y.len()
        )));
    }
    if bins < 2 {
        return Err(Error::InvalidArgument(format!("bins must be >= 2, got {bins}")));
    }
    Ok(discrete_mutual_information(&equal_width_bins(x, bins), y))
}

const SCORE_TIE: f64 = 1e-12;

/// Greedy mRMR with the difference criterion.
///
/// The first pick maximizes MI(f; y). Each later pick maximizes
/// MI(f; y) − mean over selected s of MI(f; s). Features with zero relevance
/// rank after every feature with positive relevance. Remaining ties go to the
/// lowest index.
pub fn mrmr_select(d: &Dataset, m: usize, bins: usize) -> Result<Vec<usize>> {
    let n_cols = d.n_cols();
    if m == 0 || m > n_cols {
        return Err(Error::InvalidArgument(format!(
            "mrmr keep count {m} outside 1..={n_cols}"
        )));
    }
    if bins < 2 {
        return Err(Error::InvalidArgument(format!("bins must be >= 2, got {bins}")));
    }
    let x = d.x();
    let codes: Vec<Vec<usize>> = (0..n_cols)
        .map(|j| equal_width_bins(&x.column(j).to_vec(), bins))
        .collect();
    let relevance: Vec<f64> = codes
        .iter()
        .map(|c| discrete_mutual_information(c, d.y()))
        .collect();

    let mut selected = Vec::with_capacity(m);
    let mut remaining: Vec<usize> = (0..n_cols).collect();
    let mut redundancy = vec![0.0; n_cols];
    while selected.len() < m {
        let k = selected.len() as f64;
        let score = |f: usize| {
            if k == 0.0 {
                relevance[f]
            } else {
                relevance[f] - redundancy[f] / k
            }
        };
        let mut best_pos = 0;
        for pos in 1..remaining.len() {
            let (f, b) = (remaining[pos], remaining[best_pos]);
            let key = (relevance[f] > 0.0, score(f));
            let best_key = (relevance[b] > 0.0, score(b));
            // equal contingency tables summed in a different bin order can
            // differ in the last ulp; those count as ties, kept by lowest index
            if key.0 && !best_key.0 || key.0 == best_key.0 && key.1 > best_key.1 + SCORE_TIE {
                best_pos = pos;
            }
        }
        let pick = remaining.remove(best_pos);
        selected.push(pick);
        for &f in &remaining {
            redundancy[f] += discrete_mutual_information(&codes[f], &codes[pick]);
        }
    }
    Ok(selected)
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    use super::*;

    #[test]
    fn pearson_examples() {
        assert_abs_diff_eq!(pearson(&[1., 2., 3.], &[1., 2., 3.]).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(pearson(&[1., 2., 3.], &[3., 2., 1.]).unwrap(), -1.0, epsilon = 1e-15);
        // (4·29 − 100) / √(20·20)
        assert_abs_diff_eq!(
            pearson(&[1., 2., 3., 4.], &[1., 3., 2., 4.]).unwrap(),
            0.8,
            epsilon = 1e-15
        );
        assert_eq!(pearson(&[1., 2., 3.], &[5., 5., 5.]).unwrap(), 0.0);
    }

    #[test]
    fn pearson_errors() {
        assert!(matches!(pearson(&[1., 2.], &[1.]), Err(Error::Shape(_))));
        assert!(matches!(pearson(&[1.], &[1.]), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn matrix_examples() {
        let x = array![[1., 1.], [2., 2.], [3., 3.]];
        let m = correlation_matrix(x.view(), &[0, 1, 2]).unwrap();
        assert_eq!(m.r, array![[1., 1.], [1., 1.]]);

        let x = array![[1., 1.], [2., 3.], [3., 2.], [4., 4.]];
        let m = correlation_matrix(x.view(), &[0, 1, 2, 3]).unwrap();
        assert_abs_diff_eq!(m.get(0, 1), 0.8, epsilon = 1e-15);
        assert_eq!(m.get(0, 1), m.get(1, 0));

        let x = array![[1., 7.], [2., 7.], [3., 7.]];
        let m = correlation_matrix(x.view(), &[0, 1, 2]).unwrap();
        assert_eq!(m.get(1, 1), 0.0);
        assert_eq!(m.get(0, 0), 1.0);

        assert!(correlation_matrix(x.view(), &[0]).is_err());
    }

    #[test]
    fn matrix_uses_only_selected_rows() {
        let x = array![[1., 1.], [2., 3.], [3., 2.], [4., 4.], [100., -100.]];
        let m = correlation_matrix(x.view(), &[0, 1, 2, 3]).unwrap();
        assert_abs_diff_eq!(m.get(0, 1), 0.8, epsilon = 1e-15);
    }

    #[test]
    fn scores_examples() {
        let ones = CorrelationMatrix {
            r: Array2::ones((3, 3)),
        };
        assert_eq!(correlation_scores(&ones).cs, vec![1.0; 3]);

        let m = CorrelationMatrix {
            r: array![[1.0, 0.5, -0.5], [0.5, 1.0, 0.0], [-0.5, 0.0, 1.0]],
        };
        assert_abs_diff_eq!(correlation_scores(&m).cs[0], 1.0 / 3.0, epsilon = 1e-15);

        let single = CorrelationMatrix { r: array![[1.0]] };
        assert_eq!(correlation_scores(&single).cs, vec![1.0]);
    }

    #[test]
    fn mi_examples() {
        let x = [0.0, 0.0, 1.0, 1.0];
        let y = [0, 0, 1, 1];
        assert_abs_diff_eq!(
            mutual_information(&x, &y, 2).unwrap(),
            std::f64::consts::LN_2,
            epsilon = 1e-12
        );
        assert_eq!(mutual_information(&[3.0; 4], &[0, 1, 0, 1], 10).unwrap(), 0.0);
        assert!(mutual_information(&x, &y[..3], 2).is_err());
        assert!(mutual_information(&x, &y, 1).is_err());
    }

    #[test]
    fn bins_cover_range() {
        assert_eq!(equal_width_bins(&[0.0, 0.5, 1.0], 2), vec![0, 1, 1]);
        assert_eq!(equal_width_bins(&[0.0, 0.49, 1.0], 2), vec![0, 0, 1]);
        assert_eq!(equal_width_bins(&[2.0, 2.0], 4), vec![0, 0]);
    }

    fn duplicate_instance() -> Dataset {
        // col1 duplicates col0, the most relevant column; col2 is weaker but
        // nearly independent of col0.
        let y = vec![0, 0, 0, 0, 1, 1, 1, 1];
        let c0 = [0., 0., 0., 1., 1., 1., 1., 1.];
        let c2 = [0., 0., 1., 0., 1., 1., 0., 1.];
        let x = Array2::from_shape_fn((8, 3), |(i, j)| match j {
            0 | 1 => c0[i],
            _ => c2[i],
        });
        Dataset::from_parts("dup", x, y).unwrap()
    }

    #[test]
    fn mrmr_ties_go_to_lowest_index_despite_rounding() {
        // columns 0 and 1 bin into relabeled copies of the same contingency table
        let y = vec![0, 1, 0, 1, 1, 0, 1, 1, 0, 0, 1, 0];
        let a: Vec<f64> = (0..12).map(|i| (i % 5) as f64 + 3.0 * y[i] as f64).collect();
        let b: Vec<f64> = a.iter().map(|v| 7.0 - v).collect();
        let x = Array2::from_shape_fn((12, 2), |(r, c)| if c == 0 { a[r] } else { b[r] });
        let d = Dataset::from_parts("tie", x, y.clone()).unwrap();
        assert_abs_diff_eq!(
            mutual_information(&a, &y, 10).unwrap(),
            mutual_information(&b, &y, 10).unwrap(),
            epsilon = 1e-12
        );
        assert_eq!(mrmr_select(&d, 1, 10).unwrap(), vec![0]);
        let flipped = Array2::from_shape_fn((12, 2), |(r, c)| if c == 0 { b[r] } else { a[r] });
        let d = Dataset::from_parts("tie", flipped, y).unwrap();
        assert_eq!(mrmr_select(&d, 1, 10).unwrap(), vec![0]);
    }

    #[test]
    fn mrmr_skips_duplicate() {
        let d = duplicate_instance();
        let picks = mrmr_select(&d, 2, 2).unwrap();
        assert_eq!(picks, vec![0, 2]);
    }

    #[test]
    fn mrmr_exhaustive_is_permutation() {
        let d = duplicate_instance();
        let mut picks = mrmr_select(&d, 3, 2).unwrap();
        picks.sort();
        assert_eq!(picks, vec![0, 1, 2]);
        assert!(mrmr_select(&d, 0, 2).is_err());
        assert!(mrmr_select(&d, 4, 2).is_err());
    }
}
