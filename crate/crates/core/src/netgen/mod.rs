//! Forward-only feature generator.
//!
//! Each row is treated as a one-channel signal over its feature positions.
//! Convolution layers (same padding, stride 1, tanh) alternate with pooling
//! layers that shrink the position axis by the group size. Pooling either
//! averages groups of correlated positions, weighted by a softmax over their
//! correlation scores, or takes the maximum over consecutive windows. A small
//! MLP head maps the flattened result to the generated columns.
//!
//! The network is never trained by gradient; its flat weight vector is the
//! individual evolved by [`crate::evolve`].

mod forward;
mod pool;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use forward::{generate_features, network_forward, update_pool_plans, Network};
pub use pool::{build_pool_plan, correlation_pool, max_pool, PoolPlan};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Pooling {
    #[default]
    Correlation,
    Max,
}

impl Pooling {
    pub fn as_str(self) -> &'static str {
        match self {
            Pooling::Correlation => "correlation",
            Pooling::Max => "max",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Tanh,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub conv_layers: usize,
    /// Output channels of every convolution layer.
    pub channels: usize,
    /// Convolution width; must be odd.
    pub kernel: usize,
    /// Pooling group (or window) size.
    pub pool_group: usize,
    pub mlp_hidden: Vec<usize>,
    /// Number of generated columns.
    pub n_out: usize,
    pub activation: Activation,
    pub pooling: Pooling,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            conv_layers: 2,
            channels: 4,
            kernel: 3,
            pool_group: 2,
            mlp_hidden: vec![16],
            n_out: 1,
            activation: Activation::Tanh,
            pooling: Pooling::Correlation,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(format!("generator config: {m}")));
        if self.conv_layers < 1 {
            return bad("conv_layers must be >= 1");
        }
        if self.channels < 1 {
            return bad("channels must be >= 1");
        }
        if self.kernel % 2 == 0 {
            return bad("kernel must be odd");
        }
        if self.pool_group < 2 {
            return bad("pool_group must be >= 2");
        }
        if self.n_out < 1 {
            return bad("n_out must be >= 1");
        }
        if self.mlp_hidden.iter().any(|&h| h == 0) {
            return bad("hidden widths must be >= 1");
        }
        Ok(())
    }

    /// Positions entering each conv layer, followed by the count after the last pool.
    pub fn positions(&self, input_width: usize) -> Vec<usize> {
        let mut p = vec![input_width];
        for _ in 0..self.conv_layers {
            let last = *p.last().unwrap();
            p.push(last.div_ceil(self.pool_group));
        }
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlockKind {
    Conv,
    Dense,
}

/// One weight matrix plus its bias vector inside the flat genome.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub kind: BlockKind,
    /// Output units (channels for conv).
    pub outputs: usize,
    /// Inputs per output unit (in_channels × kernel for conv).
    pub inputs: usize,
    pub weight_offset: usize,
    pub bias_offset: usize,
}

impl Block {
    pub fn weight_len(&self) -> usize {
        self.outputs * self.inputs
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenomeLayout {
    pub input_width: usize,
    pub positions: Vec<usize>,
    pub blocks: Vec<Block>,
    pub total: usize,
}

impl GenomeLayout {
    pub fn new(cfg: &GeneratorConfig, input_width: usize) -> Self {
        let positions = cfg.positions(input_width);
        let mut blocks = Vec::new();
        let mut offset = 0;
        let mut push = |kind, outputs: usize, inputs: usize| {
            let b = Block {
                kind,
                outputs,
                inputs,
                weight_offset: offset,
                bias_offset: offset + outputs * inputs,
            };
            offset = b.bias_offset + outputs;
            blocks.push(b);
        };
        for layer in 0..cfg.conv_layers {
            let in_ch = if layer == 0 { 1 } else { cfg.channels };
            push(BlockKind::Conv, cfg.channels, in_ch * cfg.kernel);
        }
        let mut width = cfg.channels * positions[cfg.conv_layers];
        for &h in &cfg.mlp_hidden {
            push(BlockKind::Dense, h, width);
            width = h;
        }
        push(BlockKind::Dense, cfg.n_out, width);
        Self {
            input_width,
            positions,
            blocks,
            total: offset,
        }
    }
}

/// Flat weight vector of one generator network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Genome {
    pub weights: Vec<f64>,
    pub layout: GenomeLayout,
}

impl Genome {
    pub fn zeros(layout: GenomeLayout) -> Self {
        Self {
            weights: vec![0.0; layout.total],
            layout,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn block_weights(&self, b: &Block) -> &[f64] {
        &self.weights[b.weight_offset..b.weight_offset + b.weight_len()]
    }

    pub fn block_bias(&self, b: &Block) -> &[f64] {
        &self.weights[b.bias_offset..b.bias_offset + b.outputs]
    }
}

/// Glorot-uniform weights, zero biases.
pub fn init_genome(cfg: &GeneratorConfig, input_width: usize, seed: u64) -> Genome {
    let layout = GenomeLayout::new(cfg, input_width);
    let mut genome = Genome::zeros(layout);
    let mut rng = rng::stream(seed, &[0x6E40]);
    for b in genome.layout.blocks.clone() {
        let (fan_in, fan_out) = match b.kind {
            BlockKind::Conv => (b.inputs, b.outputs * cfg.kernel),
            BlockKind::Dense => (b.inputs, b.outputs),
        };
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        for w in &mut genome.weights[b.weight_offset..b.weight_offset + b.weight_len()] {
            *w = rng.gen_range(-limit..=limit);
        }
    }
    genome
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_hand_count() {
        let cfg = GeneratorConfig {
            conv_layers: 1,
            channels: 4,
            kernel: 3,
            mlp_hidden: vec![16],
            n_out: 2,
            ..Default::default()
        };
        // conv 4·1·3 + 4 = 16; flatten 4 channels × 4 positions = 16;
        // dense 16·16 + 16 = 272; head 16·2 + 2 = 34
        let layout = GenomeLayout::new(&cfg, 8);
        assert_eq!(layout.total, 16 + 272 + 34);
        assert_eq!(layout.positions, vec![8, 4]);
        assert_eq!(init_genome(&cfg, 8, 1).len(), 322);
    }

    #[test]
    fn init_is_deterministic_with_zero_bias() {
        let cfg = GeneratorConfig::default();
        let a = init_genome(&cfg, 10, 7);
        assert_eq!(a, init_genome(&cfg, 10, 7));
        assert_ne!(a, init_genome(&cfg, 10, 8));
        for b in &a.layout.blocks {
            assert!(a.block_bias(b).iter().all(|&v| v == 0.0));
            let limit = match b.kind {
                BlockKind::Conv => (6.0 / (b.inputs + b.outputs * cfg.kernel) as f64).sqrt(),
                BlockKind::Dense => (6.0 / (b.inputs + b.outputs) as f64).sqrt(),
            };
            assert!(a.block_weights(b).iter().all(|w| w.abs() <= limit));
        }
    }

    #[test]
    fn default_positions() {
        let cfg = GeneratorConfig::default();
        assert_eq!(cfg.positions(57), vec![57, 29, 15]);
        assert!(cfg.validate().is_ok());
        let even = GeneratorConfig {
            kernel: 2,
            ..Default::default()
        };
        assert!(even.validate().is_err());
    }
}
