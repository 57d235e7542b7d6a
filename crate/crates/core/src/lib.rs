//! Tunable alpha-loss for binary classification.
//!
//! Alpha interpolates between log-loss (`alpha = 1`) and the probability of
//! error (`alpha = inf`). The crate provides the loss family in probabilistic
//! and margin form, classification-calibration checks, logistic regression
//! trained under alpha-loss, a generalization-gap experiment on synthetic
//! symmetric data, and an IDX reader for the MNIST 1-vs-7 task.

pub mod calibration;
pub mod error;
pub mod landscape;
pub mod logreg;
pub mod loss;
pub mod mnist;
pub mod numerics;

pub use error::{Error, Result};
pub use logreg::{LabeledDataset, LinearModel, TrainConfig, TrainReport};
pub use loss::{AlphaParam, Belief, Label, Margin, PosteriorEta};
