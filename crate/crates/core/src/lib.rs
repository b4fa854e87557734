//! Automated feature engineering for tabular classification.
//!
//! A small convolutional network runs over the feature axis of each row and
//! emits a handful of new columns. Its weights are evolved with a genetic
//! algorithm whose fitness is the cross-validated f1 of a random forest
//! trained on the original columns plus the generated ones. Pooling between
//! convolution layers groups positions by Pearson correlation instead of by
//! spatial window.
//!
//! Modules, bottom-up:
//!
//! - [`dataset`]: CSV loading, encoding, scaling, folds, subsampling.
//! - [`stats`]: Pearson correlation, correlation scores, mutual information, mRMR.
//! - [`eval`]: random forest, f1 metrics, k-fold evaluation.
//! - [`netgen`]: the feature-generator network and its pooling layers.
//! - [`evolve`]: the genetic algorithm over generator weights.

pub mod dataset;
pub mod error;
pub mod eval;
pub mod evolve;
pub mod netgen;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
