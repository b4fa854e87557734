use ndarray::{Array2, ArrayView2};

use super::{pool::build_pool_plan, Block, GeneratorConfig, Genome, GenomeLayout, PoolPlan, Pooling};
use crate::dataset::{standardize_columns, subsample_rows};
use crate::error::{Error, Result};
use crate::stats::correlation_matrix_of_columns;

/// How a layer reduces its positions.
enum LayerPool<'a> {
    Correlation {
        groups: &'a [Vec<usize>],
        weights: Vec<f64>,
    },
    Max {
        window: usize,
    },
    /// Raw inputs propagated through correlation pooling without convolution.
    Passthrough,
}

/// A genome bound to its configuration and pooling plans.
pub struct Network<'a> {
    cfg: &'a GeneratorConfig,
    genome: &'a Genome,
    pools: Vec<LayerPool<'a>>,
}

impl<'a> Network<'a> {
    pub fn new(cfg: &'a GeneratorConfig, genome: &'a Genome, plans: &'a [PoolPlan]) -> Result<Self> {
        let expected = GenomeLayout::new(cfg, genome.layout.input_width);
        if genome.layout != expected || genome.weights.len() != expected.total {
            return Err(Error::LayoutMismatch);
        }
        let pools = match cfg.pooling {
            Pooling::Max => (0..cfg.conv_layers)
                .map(|_| LayerPool::Max {
                    window: cfg.pool_group,
                })
                .collect(),
            Pooling::Correlation => {
                if plans.len() != cfg.conv_layers {
                    return Err(Error::Shape(format!(
                        "{} pool plans for {} conv layers",
                        plans.len(),
                        cfg.conv_layers
                    )));
                }
                for (l, plan) in plans.iter().enumerate() {
                    let want = (expected.positions[l], expected.positions[l + 1]);
                    if (plan.positions(), plan.groups.len()) != want {
                        return Err(Error::Shape(format!(
                            "plan for layer {l} maps {} positions to {} groups, layout needs {} to {}",
                            plan.positions(),
                            plan.groups.len(),
                            want.0,
                            want.1
                        )));
                    }
                }
                plans
                    .iter()
                    .map(|p| LayerPool::Correlation {
                        groups: &p.groups,
                        weights: p.position_weights(),
                    })
                    .collect()
            }
        };
        Ok(Self { cfg, genome, pools })
    }

    fn conv_block(&self, layer: usize) -> &Block {
        &self.genome.layout.blocks[layer]
    }

    /// Same-padded convolution plus tanh. `input` is channel-major.
    fn conv(&self, layer: usize, input: &[f64], in_ch: usize, positions: usize, out: &mut Vec<f64>) {
        let b = self.conv_block(layer);
        let w = self.genome.block_weights(b);
        let bias = self.genome.block_bias(b);
        let k = self.cfg.kernel;
        let half = k / 2;
        out.clear();
        out.resize(b.outputs * positions, 0.0);
        for co in 0..b.outputs {
            for p in 0..positions {
                let mut acc = bias[co];
                for ci in 0..in_ch {
                    let wrow = &w[(co * in_ch + ci) * k..(co * in_ch + ci + 1) * k];
                    let signal = &input[ci * positions..(ci + 1) * positions];
                    for (t, &wt) in wrow.iter().enumerate() {
                        let src = p + t;
                        if src >= half && src - half < positions {
                            acc += wt * signal[src - half];
                        }
                    }
                }
                out[co * positions + p] = acc.tanh();
            }
        }
    }

    fn pool(&self, layer: usize, input: &[f64], channels: usize, positions: usize, out: &mut Vec<f64>) {
        let groups_out = self.genome.layout.positions[layer + 1];
        out.clear();
        out.resize(channels * groups_out, 0.0);
        for c in 0..channels {
            let signal = &input[c * positions..(c + 1) * positions];
            let dst = &mut out[c * groups_out..(c + 1) * groups_out];
            match &self.pools[layer] {
                LayerPool::Correlation { groups, weights } => {
                    for (g, group) in groups.iter().enumerate() {
                        dst[g] = group.iter().map(|&p| weights[p] * signal[p]).sum();
                    }
                }
                LayerPool::Max { window } => {
                    for (g, slot) in dst.iter_mut().enumerate() {
                        let end = ((g + 1) * window).min(positions);
                        *slot = signal[g * window..end]
                            .iter()
                            .copied()
                            .fold(f64::NEG_INFINITY, f64::max);
                    }
                }
                LayerPool::Passthrough => unreachable!("passthrough only used for plan bootstrapping"),
            }
        }
    }

    /// Run the conv/pool stack on one row up to and including layer `upto`.
    /// Returns the channel-major pooled activations and their channel count.
    fn features_row(&self, row: &[f64], upto: usize, buf: &mut Vec<f64>, tmp: &mut Vec<f64>) -> usize {
        buf.clear();
        buf.extend_from_slice(row);
        let mut channels = 1;
        for layer in 0..=upto {
            let positions = self.genome.layout.positions[layer];
            self.conv(layer, buf, channels, positions, tmp);
            channels = self.cfg.channels;
            self.pool(layer, tmp, channels, positions, buf);
        }
        channels
    }

    fn head(&self, flat: &[f64], tmp: &mut Vec<f64>, out: &mut [f64]) {
        let blocks = &self.genome.layout.blocks[self.cfg.conv_layers..];
        let mut input = flat.to_vec();
        for (i, b) in blocks.iter().enumerate() {
            let w = self.genome.block_weights(b);
            let bias = self.genome.block_bias(b);
            tmp.clear();
            for o in 0..b.outputs {
                let z = bias[o]
                    + w[o * b.inputs..(o + 1) * b.inputs]
                        .iter()
                        .zip(&input)
                        .map(|(a, x)| a * x)
                        .sum::<f64>();
                tmp.push(if i + 1 == blocks.len() { z } else { z.tanh() });
            }
            std::mem::swap(&mut input, tmp);
        }
        out.copy_from_slice(&input);
    }

    /// Generated columns for every row of `x`.
    pub fn forward(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.genome.layout.input_width {
            return Err(Error::Shape(format!(
                "network expects {} inputs, got {}",
                self.genome.layout.input_width,
                x.ncols()
            )));
        }
        let mut out = Array2::zeros((x.nrows(), self.cfg.n_out));
        let (mut buf, mut tmp) = (Vec::new(), Vec::new());
        let mut row = vec![0.0; x.ncols()];
        let mut res = vec![0.0; self.cfg.n_out];
        for (r, xr) in x.rows().into_iter().enumerate() {
            row.iter_mut().zip(xr.iter()).for_each(|(d, s)| *d = *s);
            self.features_row(&row, self.cfg.conv_layers - 1, &mut buf, &mut tmp);
            self.head(&buf, &mut tmp, &mut res);
            out.row_mut(r).iter_mut().zip(&res).for_each(|(d, s)| *d = *s);
        }
        Ok(out)
    }

    /// Channel-averaged pooled output of conv layer `layer` for the given
    /// rows, as one column per position.
    pub fn layer_activations(&self, x: ArrayView2<'_, f64>, rows: &[usize], layer: usize) -> Vec<Vec<f64>> {
        let positions = self.genome.layout.positions[layer + 1];
        let mut cols = vec![Vec::with_capacity(rows.len()); positions];
        let (mut buf, mut tmp) = (Vec::new(), Vec::new());
        let mut row = vec![0.0; x.ncols()];
        for &r in rows {
            row.iter_mut().zip(x.row(r).iter()).for_each(|(d, s)| *d = *s);
            let channels = self.features_row(&row, layer, &mut buf, &mut tmp);
            for (p, col) in cols.iter_mut().enumerate() {
                let mean = (0..channels).map(|c| buf[c * positions + p]).sum::<f64>() / channels as f64;
                col.push(mean);
            }
        }
        cols
    }
}

/// Forward pass producing `cfg.n_out` raw columns.
pub fn network_forward(
    x: ArrayView2<'_, f64>,
    genome: &Genome,
    cfg: &GeneratorConfig,
    plans: &[PoolPlan],
) -> Result<Array2<f64>> {
    Network::new(cfg, genome, plans)?.forward(x)
}

/// Forward pass with each output column z-scored (constant columns become zeros).
pub fn generate_features(
    x: ArrayView2<'_, f64>,
    genome: &Genome,
    cfg: &GeneratorConfig,
    plans: &[PoolPlan],
) -> Result<Array2<f64>> {
    let mut out = network_forward(x, genome, cfg, plans)?;
    if out.nrows() > 0 {
        standardize_columns(&mut out);
    }
    Ok(out)
}

/// Rebuild every layer's pooling plan from correlations on a row subsample.
///
/// Layer 0 uses the raw inputs. Layer L > 0 uses the pooled activations of
/// layer L−1 produced by `best` under the plans already rebuilt for earlier
/// layers. Without a genome (the initial generation), earlier layers pass the
/// raw inputs through correlation pooling alone. Max pooling needs no plans.
pub fn update_pool_plans(
    best: Option<&Genome>,
    cfg: &GeneratorConfig,
    x: ArrayView2<'_, f64>,
    fraction: f64,
    seed: u64,
) -> Result<Vec<PoolPlan>> {
    if cfg.pooling == Pooling::Max {
        return Ok(Vec::new());
    }
    let rows = subsample_rows(x.nrows(), fraction, seed);
    if rows.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "correlation fraction {fraction} leaves {} rows",
            rows.len()
        )));
    }
    let layout = GenomeLayout::new(cfg, x.ncols());
    let mut cols: Vec<Vec<f64>> = (0..x.ncols())
        .map(|j| rows.iter().map(|&r| x[[r, j]]).collect())
        .collect();
    let mut plans: Vec<PoolPlan> = Vec::with_capacity(cfg.conv_layers);
    for layer in 0..cfg.conv_layers {
        if layer > 0 {
            let prev = &plans[layer - 1];
            cols = match best {
                Some(g) => {
                    // only the first `layer` plans are consulted
                    let partial = PartialNetwork::new(cfg, g, &plans)?;
                    partial.activations(x, &rows, layer - 1)
                }
                None => {
                    let w = prev.position_weights();
                    prev.groups
                        .iter()
                        .map(|g| {
                            (0..rows.len())
                                .map(|i| g.iter().map(|&p| w[p] * cols[p][i]).sum())
                                .collect()
                        })
                        .collect()
                }
            };
        }
        debug_assert_eq!(cols.len(), layout.positions[layer]);
        let m = correlation_matrix_of_columns(&cols);
        let mut plan = build_pool_plan(&m, cfg.pool_group);
        plan.layer = layer;
        plans.push(plan);
    }
    Ok(plans)
}

/// A network whose later layers have no plan yet.
struct PartialNetwork<'a> {
    inner: Network<'a>,
}

impl<'a> PartialNetwork<'a> {
    fn new(cfg: &'a GeneratorConfig, genome: &'a Genome, plans: &'a [PoolPlan]) -> Result<Self> {
        let expected = GenomeLayout::new(cfg, genome.layout.input_width);
        if genome.layout != expected {
            return Err(Error::LayoutMismatch);
        }
        let mut pools: Vec<LayerPool<'a>> = plans
            .iter()
            .map(|p| LayerPool::Correlation {
                groups: &p.groups,
                weights: p.position_weights(),
            })
            .collect();
        pools.resize_with(cfg.conv_layers, || LayerPool::Passthrough);
        Ok(Self {
            inner: Network { cfg, genome, pools },
        })
    }

    fn activations(&self, x: ArrayView2<'_, f64>, rows: &[usize], layer: usize) -> Vec<Vec<f64>> {
        self.inner.layer_activations(x, rows, layer)
    }
}
