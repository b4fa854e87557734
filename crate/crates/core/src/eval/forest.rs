//! CART random forest with Gini splits on bootstrap samples.
//!
//! Each feature is rank-coded once per fit. A node scans either a class
//! histogram over the feature's distinct values (large nodes) or a sorted list
//! of its own rank codes (small nodes); both produce the same split.

use ndarray::ArrayView2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeaturesPerSplit {
    Sqrt,
    All,
    Fixed(usize),
}

impl FeaturesPerSplit {
    pub fn resolve(self, n_features: usize) -> usize {
        let k = match self {
            FeaturesPerSplit::Sqrt => (n_features as f64).sqrt() as usize,
            FeaturesPerSplit::All => n_features,
            FeaturesPerSplit::Fixed(k) => k,
        };
        k.clamp(1, n_features.max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// `None` grows trees until leaves are pure.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub features_per_split: FeaturesPerSplit,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: None,
            min_samples_leaf: 1,
            features_per_split: FeaturesPerSplit::Sqrt,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf(usize),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    pub fn predict_row(&self, row: &[f64]) -> usize {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf(label) => return label,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if row[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    trees: Vec<Tree>,
    n_features: usize,
    n_classes: usize,
}

impl Forest {
    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    /// Majority vote over trees; ties go to the lower label.
    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Vec<usize>> {
        if x.ncols() != self.n_features {
            return Err(Error::Shape(format!(
                "forest trained on {} features, got {}",
                self.n_features,
                x.ncols()
            )));
        }
        let mut votes = vec![0usize; self.n_classes];
        let mut row = vec![0.0; self.n_features];
        let mut out = Vec::with_capacity(x.nrows());
        for r in x.rows() {
            row.iter_mut().zip(r.iter()).for_each(|(d, s)| *d = *s);
            votes.iter_mut().for_each(|v| *v = 0);
            for tree in &self.trees {
                votes[tree.predict_row(&row)] += 1;
            }
            out.push(argmax_lowest(&votes));
        }
        Ok(out)
    }
}

fn argmax_lowest<T: PartialOrd + Copy>(v: &[T]) -> usize {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i] > v[best] {
            best = i;
        }
    }
    best
}

pub fn predict(forest: &Forest, x: ArrayView2<'_, f64>) -> Result<Vec<usize>> {
    forest.predict(x)
}

/// One feature's training values mapped to dense ranks.
struct CodedColumn {
    /// Rank of each training row's value among the distinct values.
    codes: Vec<u32>,
    /// Distinct values, ascending.
    values: Vec<f64>,
}

impl CodedColumn {
    fn new(col: impl Iterator<Item = f64>) -> Self {
        let raw: Vec<f64> = col.collect();
        let mut values = raw.clone();
        values.sort_by(f64::total_cmp);
        values.dedup();
        let codes = raw
            .iter()
            .map(|v| values.binary_search_by(|p| p.total_cmp(v)).unwrap() as u32)
            .collect();
        Self { codes, values }
    }
}

struct Training<'a> {
    columns: &'a [CodedColumn],
    y: &'a [usize],
    n_classes: usize,
    mtry: usize,
    max_depth: usize,
    min_leaf: usize,
}

struct SplitChoice {
    feature: usize,
    /// Largest rank code sent left.
    left_code: u32,
    threshold: f64,
    gain: f64,
}

/// Per-thread buffers reused across nodes.
struct Scratch {
    hist: Vec<f64>,
    pairs: Vec<(u32, u32)>,
    features: Vec<usize>,
}

fn gini_sum_sq(counts: &[f64]) -> f64 {
    counts.iter().map(|c| c * c).sum()
}

impl Training<'_> {
    fn grow(&self, samples: &mut [(u32, u32)], rng: &mut ChaCha8Rng) -> Tree {
        let mut nodes = Vec::new();
        let mut scratch = Scratch {
            hist: Vec::new(),
            pairs: Vec::new(),
            features: (0..self.columns.len()).collect(),
        };
        self.build(samples, 0, &mut nodes, &mut scratch, rng);
        Tree { nodes }
    }

    fn class_counts(&self, samples: &[(u32, u32)]) -> Vec<f64> {
        let mut counts = vec![0.0; self.n_classes];
        for &(row, w) in samples {
            counts[self.y[row as usize]] += w as f64;
        }
        counts
    }

    fn build(
        &self,
        samples: &mut [(u32, u32)],
        depth: usize,
        nodes: &mut Vec<Node>,
        scratch: &mut Scratch,
        rng: &mut ChaCha8Rng,
    ) -> usize {
        let id = nodes.len();
        let counts = self.class_counts(samples);
        let majority = argmax_lowest(&counts);
        nodes.push(Node::Leaf(majority));
        let pure = counts.iter().filter(|&&c| c > 0.0).count() <= 1;
        if pure || depth >= self.max_depth || samples.len() < 2 * self.min_leaf {
            return id;
        }
        let Some(split) = self.find_split(samples, &counts, scratch, rng) else {
            return id;
        };
        let codes = &self.columns[split.feature].codes;
        let mut mid = 0;
        for i in 0..samples.len() {
            if codes[samples[i].0 as usize] <= split.left_code {
                samples.swap(i, mid);
                mid += 1;
            }
        }
        let (left_samples, right_samples) = samples.split_at_mut(mid);
        let left = self.build(left_samples, depth + 1, nodes, scratch, rng);
        let right = self.build(right_samples, depth + 1, nodes, scratch, rng);
        nodes[id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        id
    }

    /// Draw features without replacement until `mtry` non-constant ones have
    /// been scanned (or all are exhausted), then pick the best gain. Ties go
    /// to the lowest feature index, then the lowest threshold.
    fn find_split(
        &self,
        samples: &[(u32, u32)],
        counts: &[f64],
        scratch: &mut Scratch,
        rng: &mut ChaCha8Rng,
    ) -> Option<SplitChoice> {
        let n_features = self.columns.len();
        let total: f64 = counts.iter().sum();
        let mut best: Option<SplitChoice> = None;
        let mut visited = 0;
        let mut drawn = 0;
        while drawn < n_features && visited < self.mtry {
            let pick = rng.gen_range(drawn..n_features);
            scratch.features.swap(drawn, pick);
            let feature = scratch.features[drawn];
            drawn += 1;
            let Some(cand) = self.best_split_on(feature, samples, counts, total, scratch) else {
                continue;
            };
            visited += 1;
            let better = match &best {
                None => true,
                Some(b) => {
                    cand.gain > b.gain || (cand.gain == b.gain && cand.feature < b.feature)
                }
            };
            if better {
                best = Some(cand);
            }
        }
        // zero-gain splits are allowed: XOR-like structure needs them at the root
        best
    }

    /// Best split on one feature, scored as Σ_child (Σ_c n_c² / n_child);
    /// maximizing it minimizes weighted Gini impurity. `None` when the feature
    /// is constant within the node or no split satisfies the leaf minimum.
    fn best_split_on(
        &self,
        feature: usize,
        samples: &[(u32, u32)],
        counts: &[f64],
        total: f64,
        scratch: &mut Scratch,
    ) -> Option<SplitChoice> {
        let col = &self.columns[feature];
        let k = self.n_classes;
        let n_values = col.values.len();
        let m = samples.len();
        let mut left = vec![0.0; k];
        let mut left_rows = 0usize;
        let mut best: Option<(u32, u32, f64)> = None; // (left code, next code, score)
        let consider =
            |code: u32, next: u32, left: &[f64], left_rows: usize, best: &mut Option<(u32, u32, f64)>| {
                if left_rows < self.min_leaf || m - left_rows < self.min_leaf {
                    return;
                }
                let nl: f64 = left.iter().sum();
                let nr = total - nl;
                let sl: f64 = gini_sum_sq(left);
                let sr: f64 = left
                    .iter()
                    .zip(counts)
                    .map(|(l, c)| (c - l) * (c - l))
                    .sum();
                let score = sl / nl + sr / nr;
                if best.map_or(true, |b| score > b.2) {
                    *best = Some((code, next, score));
                }
            };

        // histogram slot k counts distinct rows for the leaf-size check
        if n_values <= 4 * m {
            let width = k + 1;
            scratch.hist.clear();
            scratch.hist.resize(n_values * width, 0.0);
            let mut lo = u32::MAX;
            let mut hi = 0;
            for &(row, w) in samples {
                let c = col.codes[row as usize];
                lo = lo.min(c);
                hi = hi.max(c);
                let base = c as usize * width;
                scratch.hist[base + self.y[row as usize]] += w as f64;
                scratch.hist[base + k] += 1.0;
            }
            if lo == hi {
                return None;
            }
            let mut prev: Option<u32> = None;
            for code in lo..=hi {
                let base = code as usize * width;
                if scratch.hist[base + k] == 0.0 {
                    continue;
                }
                if let Some(p) = prev {
                    consider(p, code, &left, left_rows, &mut best);
                }
                for c in 0..k {
                    left[c] += scratch.hist[base + c];
                }
                left_rows += scratch.hist[base + k] as usize;
                prev = Some(code);
            }
        } else {
            scratch.pairs.clear();
            scratch.pairs.extend(
                samples
                    .iter()
                    .enumerate()
                    .map(|(i, &(row, _))| (col.codes[row as usize], i as u32)),
            );
            scratch.pairs.sort_unstable();
            let pairs = &scratch.pairs;
            if pairs[0].0 == pairs[m - 1].0 {
                return None;
            }
            let mut i = 0;
            while i < m {
                let code = pairs[i].0;
                while i < m && pairs[i].0 == code {
                    let (row, w) = samples[pairs[i].1 as usize];
                    left[self.y[row as usize]] += w as f64;
                    left_rows += 1;
                    i += 1;
                }
                if i < m {
                    consider(code, pairs[i].0, &left, left_rows, &mut best);
                }
            }
        }
        best.map(|(code, next, score)| SplitChoice {
            feature,
            left_code: code,
            threshold: 0.5 * (col.values[code as usize] + col.values[next as usize]),
            gain: score,
        })
    }
}

/// Fit `cfg.n_trees` trees, each on its own bootstrap sample.
pub fn fit_forest(x: ArrayView2<'_, f64>, y: &[usize], cfg: &ForestConfig) -> Result<Forest> {
    if x.nrows() != y.len() {
        return Err(Error::Shape(format!(
            "{} rows but {} labels",
            x.nrows(),
            y.len()
        )));
    }
    if x.nrows() < 2 {
        return Err(Error::InvalidArgument("need at least 2 rows".into()));
    }
    if cfg.n_trees == 0 || cfg.min_samples_leaf == 0 {
        return Err(Error::InvalidArgument(
            "n_trees and min_samples_leaf must be >= 1".into(),
        ));
    }
    let n_classes = y.iter().copied().max().unwrap() + 1;
    let mut seen = vec![false; n_classes];
    y.iter().for_each(|&l| seen[l] = true);
    if seen.iter().filter(|&&s| s).count() < 2 {
        return Err(Error::SingleClass);
    }
    let columns: Vec<CodedColumn> = x
        .columns()
        .into_iter()
        .map(|c| CodedColumn::new(c.iter().copied()))
        .collect();
    let training = Training {
        columns: &columns,
        y,
        n_classes,
        mtry: cfg.features_per_split.resolve(x.ncols()),
        max_depth: cfg.max_depth.unwrap_or(usize::MAX),
        min_leaf: cfg.min_samples_leaf,
    };
    let n = x.nrows();
    let trees = (0..cfg.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng::stream(cfg.seed, &[0x7EE, t as u64]);
            let mut weights = vec![0u32; n];
            for _ in 0..n {
                weights[rng.gen_range(0..n)] += 1;
            }
            let mut samples: Vec<(u32, u32)> = weights
                .iter()
                .enumerate()
                .filter(|(_, &w)| w > 0)
                .map(|(i, &w)| (i as u32, w))
                .collect();
            training.grow(&mut samples, &mut rng)
        })
        .collect();
    Ok(Forest {
        trees,
        n_features: x.ncols(),
        n_classes,
    })
}
