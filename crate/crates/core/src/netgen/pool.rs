use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{correlation_scores, CorrelationMatrix, CorrelationScores};

/// Partition of one layer's positions into pooling groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolPlan {
    pub layer: usize,
    /// Disjoint position lists covering `0..positions`, each sorted ascending.
    pub groups: Vec<Vec<usize>>,
    /// Correlation score of every position, used as softmax logits inside a group.
    pub scores: CorrelationScores,
}

impl PoolPlan {
    pub fn positions(&self) -> usize {
        self.scores.cs.len()
    }

    /// Softmax weight of every position within its group.
    pub fn position_weights(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.positions()];
        for g in &self.groups {
            let max = g
                .iter()
                .map(|&p| self.scores.cs[p])
                .fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = g.iter().map(|&p| (self.scores.cs[p] - max).exp()).sum();
            for &p in g {
                w[p] = (self.scores.cs[p] - max).exp() / z;
            }
        }
        w
    }

    fn check_partition(&self, positions: usize) -> Result<()> {
        let mut seen = vec![false; positions];
        for g in &self.groups {
            for &p in g {
                if p >= positions || seen[p] {
                    return Err(Error::Shape(format!(
                        "pool plan position {p} out of range or repeated"
                    )));
                }
                seen[p] = true;
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Shape("pool plan does not cover every position".into()));
        }
        Ok(())
    }
}

/// Greedy correlation clustering.
///
/// Repeatedly seed a group with the unassigned position of highest mean
/// correlation against the other unassigned positions, then add its k−1
/// unassigned partners of largest |r|. Ties go to the lowest index.
pub fn build_pool_plan(m: &CorrelationMatrix, k: usize) -> PoolPlan {
    let d = m.dim();
    let k = k.max(1);
    let mut unassigned: Vec<usize> = (0..d).collect();
    let mut groups = Vec::with_capacity(d.div_ceil(k));
    while !unassigned.is_empty() {
        let count = unassigned.len() as f64;
        let mut seed_pos = 0;
        let mut seed_cs = f64::NEG_INFINITY;
        for (i, &f) in unassigned.iter().enumerate() {
            let cs = unassigned.iter().map(|&j| m.get(f, j)).sum::<f64>() / count;
            if cs > seed_cs {
                seed_cs = cs;
                seed_pos = i;
            }
        }
        let seed = unassigned.remove(seed_pos);
        // stable sort keeps ascending index order among equal |r|
        let mut partners = unassigned.clone();
        partners.sort_by(|&a, &b| m.get(seed, b).abs().total_cmp(&m.get(seed, a).abs()));
        partners.truncate(k - 1);
        unassigned.retain(|p| !partners.contains(p));
        let mut group = partners;
        group.push(seed);
        group.sort_unstable();
        groups.push(group);
    }
    PoolPlan {
        layer: 0,
        groups,
        scores: correlation_scores(m),
    }
}

/// Softmax-over-scores weighted average of each group's columns.
pub fn correlation_pool(
    act: ArrayView2<'_, f64>,
    plan: &PoolPlan,
    cs: &CorrelationScores,
) -> Result<Array2<f64>> {
    let positions = act.ncols();
    if cs.cs.len() != positions {
        return Err(Error::Shape(format!(
            "{} correlation scores for {} positions",
            cs.cs.len(),
            positions
        )));
    }
    plan.check_partition(positions)?;
    let weighted = PoolPlan {
        layer: plan.layer,
        groups: plan.groups.clone(),
        scores: cs.clone(),
    };
    let w = weighted.position_weights();
    let mut out = Array2::zeros((act.nrows(), plan.groups.len()));
    for (r, row) in act.rows().into_iter().enumerate() {
        for (g, group) in plan.groups.iter().enumerate() {
            out[[r, g]] = group.iter().map(|&p| w[p] * row[p]).sum();
        }
    }
    Ok(out)
}

/// Row-wise maximum over non-overlapping windows of `k` consecutive positions.
pub fn max_pool(act: ArrayView2<'_, f64>, k: usize) -> Array2<f64> {
    let k = k.max(1);
    let groups = act.ncols().div_ceil(k);
    let mut out = Array2::zeros((act.nrows(), groups));
    for (r, row) in act.rows().into_iter().enumerate() {
        for g in 0..groups {
            let end = ((g + 1) * k).min(row.len());
            out[[r, g]] = (g * k..end).map(|p| row[p]).fold(f64::NEG_INFINITY, f64::max);
        }
    }
    out
}
