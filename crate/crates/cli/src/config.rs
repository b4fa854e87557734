use std::path::{Path, PathBuf};

use featgenn_core::eval::{F1Average, ForestConfig};
use featgenn_core::evolve::EvolutionConfig;
use featgenn_core::netgen::{GeneratorConfig, Pooling};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse config {path}: {source}")]
    Parse {
        path: PathBuf,
        source: toml::de::Error,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// One entry of the dataset manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetEntry {
    pub name: String,
    /// CSV path, relative to the config file's directory.
    pub path: PathBuf,
    pub target: String,
    /// Raw target value scored by binary f1.
    pub positive: String,
    /// Generated columns for this dataset.
    pub n_out: usize,
    /// Missing files of optional entries are skipped instead of failing the run.
    #[serde(default)]
    pub optional: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub runs: usize,
    pub seed: u64,
    pub folds: usize,
    /// Base seed of the fold split and forest, independent of the GA seed.
    pub eval_seed: u64,
    pub f1_average: F1Average,
    pub fractions: Vec<f64>,
    pub workers: usize,
    pub out: PathBuf,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            runs: 5,
            seed: 0,
            folds: 5,
            eval_seed: 2024,
            f1_average: F1Average::Weighted,
            fractions: vec![0.3, 0.6, 0.8, 1.0],
            workers: 1,
            out: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub generator: GeneratorConfig,
    pub evolution: EvolutionConfig,
    pub forest: ForestConfig,
    #[serde(rename = "dataset")]
    pub datasets: Vec<DatasetEntry>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub datasets: Vec<String>,
    pub seed: Option<u64>,
    pub runs: Option<usize>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub fractions: Option<Vec<f64>>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|source| ConfigError::Parse {
            path: base_dir.to_path_buf(),
            source,
        })?;
        cfg.base_dir = base_dir.to_path_buf();
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Self::from_toml(&text, &base).map_err(|e| match e {
            ConfigError::Parse { source, .. } => ConfigError::Parse {
                path: path.to_path_buf(),
                source,
            },
            other => other,
        })
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), ConfigError> {
        if let Some(seed) = o.seed {
            self.experiment.seed = seed;
        }
        if let Some(runs) = o.runs {
            self.experiment.runs = runs;
        }
        if let Some(out) = &o.out {
            self.experiment.out = out.clone();
        }
        if let Some(w) = o.workers {
            self.experiment.workers = w;
        }
        if let Some(f) = &o.fractions {
            self.experiment.fractions = f.clone();
        }
        if !o.datasets.is_empty() {
            let mut picked = Vec::new();
            for want in &o.datasets {
                let entry = self
                    .datasets
                    .iter()
                    .find(|d| d.name.eq_ignore_ascii_case(want))
                    .ok_or_else(|| ConfigError::Invalid(format!("dataset {want:?} is not in the manifest")))?;
                // explicitly requested datasets must load
                let mut entry = entry.clone();
                entry.optional = false;
                picked.push(entry);
            }
            self.datasets = picked;
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let e = &self.experiment;
        if e.runs < 1 {
            return Err(ConfigError::Invalid("runs must be >= 1".into()));
        }
        if e.folds < 2 {
            return Err(ConfigError::Invalid("folds must be >= 2".into()));
        }
        if e.fractions.is_empty() || e.fractions.iter().any(|&f| !(f > 0.0 && f <= 1.0)) {
            return Err(ConfigError::Invalid("fractions must be non-empty and within (0, 1]".into()));
        }
        if self.forest.n_trees < 1 || self.forest.min_samples_leaf < 1 {
            return Err(ConfigError::Invalid("forest needs n_trees >= 1 and min_samples_leaf >= 1".into()));
        }
        self.generator
            .validate()
            .map_err(|err| ConfigError::Invalid(err.to_string()))?;
        self.evolution
            .validate()
            .map_err(|err| ConfigError::Invalid(err.to_string()))?;
        for (i, d) in self.datasets.iter().enumerate() {
            if d.n_out < 1 {
                return Err(ConfigError::Invalid(format!("dataset {}: n_out must be >= 1", d.name)));
            }
            if self.datasets[..i].iter().any(|o| o.name == d.name) {
                return Err(ConfigError::Invalid(format!("dataset {} listed twice", d.name)));
            }
        }
        Ok(())
    }

    pub fn dataset_path(&self, d: &DatasetEntry) -> PathBuf {
        if d.path.is_absolute() {
            d.path.clone()
        } else {
            self.base_dir.join(&d.path)
        }
    }

    /// Generator settings for one dataset.
    pub fn generator_for(&self, d: &DatasetEntry, pooling: Pooling) -> GeneratorConfig {
        GeneratorConfig {
            n_out: d.n_out,
            pooling,
            ..self.generator.clone()
        }
    }

    /// Everything that affects results; output location and worker count excluded.
    pub fn echo(&self) -> String {
        let mut c = self.clone();
        c.experiment.out = PathBuf::new();
        c.experiment.workers = 0;
        toml::to_string(&c).expect("config serializes")
    }

    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.echo().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
