//! Logistic regression trained under alpha-loss.
//!
//! The soft classifier is `g(x) = sigmoid(theta . x)`. Per-sample derivatives
//! in `theta` all factor through scalar coefficients:
//!
//! ```text
//! grad    = F1 * x
//! hessian = F2 * x x^T
//! d/dtheta_i hessian = F3 * x x^T x_i
//! ```
//!
//! with `|F1| <= 1`, `|F2| <= 1/4` and `|F3| <= 2` for every alpha.

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::loss::{log_sigmoid, margin_alpha_loss, sigmoid, AlphaParam, Belief, Label};

/// Rows per work unit when reducing over a dataset. Partial sums are always
/// combined in chunk order, so results do not depend on the thread count.
const CHUNK_ROWS: usize = 256;

/// Rows of `(x, y)` with every `|x| <= feature_radius`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    features: Vec<f64>,
    dim: usize,
    labels: Vec<Label>,
    feature_radius: f64,
}

impl LabeledDataset {
    /// Builds a dataset from a row-major feature buffer.
    pub fn from_flat(
        features: Vec<f64>,
        dim: usize,
        labels: Vec<Label>,
        feature_radius: f64,
    ) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if dim == 0 || features.len() != dim * labels.len() {
            return Err(Error::DimensionMismatch {
                expected: dim * labels.len(),
                found: features.len(),
            });
        }
        if !(feature_radius > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "feature_radius must be positive, got {feature_radius}"
            )));
        }
        for (row, x) in features.chunks_exact(dim).enumerate() {
            let norm = norm(x);
            if !(norm <= feature_radius) {
                return Err(Error::OutsideSupport {
                    row,
                    norm,
                    radius: feature_radius,
                });
            }
        }
        Ok(LabeledDataset {
            features,
            dim,
            labels,
            feature_radius,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<Label>, feature_radius: f64) -> Result<Self> {
        let dim = rows.first().map(Vec::len).ok_or(Error::EmptyDataset)?;
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.len(),
            });
        }
        Self::from_flat(rows.concat(), dim, labels, feature_radius)
    }

    /// Like [`LabeledDataset::from_flat`], with the radius set to the largest
    /// row norm.
    pub fn with_measured_radius(features: Vec<f64>, dim: usize, labels: Vec<Label>) -> Result<Self> {
        let radius = if dim == 0 {
            0.0
        } else {
            features.chunks_exact(dim).map(norm).fold(0.0, f64::max)
        };
        Self::from_flat(features, dim, labels, radius.max(f64::MIN_POSITIVE))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn feature_radius(&self) -> f64 {
        self.feature_radius
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn label(&self, i: usize) -> Label {
        self.labels[i]
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn rows(&self) -> impl Iterator<Item = (&[f64], Label)> + '_ {
        self.features.chunks_exact(self.dim).zip(self.labels.iter().copied())
    }

    pub fn count(&self, label: Label) -> usize {
        self.labels.iter().filter(|&&y| y == label).count()
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let mut features = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            features.extend_from_slice(self.row(i));
        }
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        Self::from_flat(features, self.dim, labels, self.feature_radius)
    }

    /// The dataset with every label flipped.
    pub fn flip_labels(&self) -> Self {
        LabeledDataset {
            labels: self.labels.iter().map(|y| y.flip()).collect(),
            ..self.clone()
        }
    }
}

/// Weights `theta` of a linear soft classifier, kept inside a ball of radius
/// `radius_bound` (which may be `inf`).
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    weights: Vec<f64>,
    radius_bound: f64,
}

impl LinearModel {
    pub fn new(weights: Vec<f64>, radius_bound: f64) -> Result<Self> {
        if !(radius_bound > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "radius_bound must be positive, got {radius_bound}"
            )));
        }
        let n = norm(&weights);
        if !(n <= radius_bound) {
            return Err(Error::InvalidConfig(format!(
                "weight norm {n} exceeds radius_bound {radius_bound}"
            )));
        }
        Ok(LinearModel {
            weights,
            radius_bound,
        })
    }

    /// Unconstrained model.
    pub fn unbounded(weights: Vec<f64>) -> Self {
        LinearModel {
            weights,
            radius_bound: f64::INFINITY,
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self::unbounded(vec![0.0; dim])
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn radius_bound(&self) -> f64 {
        self.radius_bound
    }

    /// Rescales the weights back onto the ball when they leave it.
    pub fn project(&mut self) {
        let n = norm(&self.weights);
        if n > self.radius_bound {
            let s = self.radius_bound / n;
            self.weights.iter_mut().for_each(|w| *w *= s);
        }
    }

    pub fn score(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(dot(&self.weights, x))
    }

    pub fn negated(&self) -> Self {
        LinearModel {
            weights: self.weights.iter().map(|w| -w).collect(),
            radius_bound: self.radius_bound,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub alpha: AlphaParam,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Initial weights are uniform in `[-init_scale, init_scale]`.
    pub init_scale: f64,
    /// Keep the weights inside the ball of the data's feature radius.
    pub projection: bool,
}

impl TrainConfig {
    pub const DEFAULT_EPOCHS: usize = 200;
    pub const DEFAULT_INIT_SCALE: f64 = 0.01;

    pub fn new(alpha: AlphaParam, learning_rate: f64) -> Self {
        TrainConfig {
            alpha,
            learning_rate,
            epochs: Self::DEFAULT_EPOCHS,
            seed: 0,
            init_scale: Self::DEFAULT_INIT_SCALE,
            projection: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        // lr = 0 is accepted so a run can report the initial model.
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "learning_rate must be finite and nonnegative, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be positive".into()));
        }
        if !(self.init_scale >= 0.0 && self.init_scale.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "init_scale must be finite and nonnegative, got {}",
                self.init_scale
            )));
        }
        Ok(())
    }

    /// The seeded starting point of [`train`].
    pub fn initial_model(&self, data: &LabeledDataset) -> LinearModel {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let uniform = Uniform::new_inclusive(-self.init_scale, self.init_scale);
        let weights = (0..data.dim()).map(|_| uniform.sample(&mut rng)).collect();
        let radius = if self.projection {
            data.feature_radius()
        } else {
            f64::INFINITY
        };
        let mut model = LinearModel {
            weights,
            radius_bound: radius,
        };
        model.project();
        model
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub final_model: LinearModel,
    /// Empirical risk at the start of each epoch, before that epoch's step.
    pub empirical_risk_trace: Vec<f64>,
    pub final_risk: f64,
    pub final_gradient_norm: f64,
    pub train_accuracy: f64,
}

pub fn predict_proba(model: &LinearModel, x: &[f64]) -> Result<Belief> {
    Belief::new(sigmoid(model.score(x)?))
}

/// Alpha-loss of one sample, evaluated in margin form for stability.
pub fn sample_loss(alpha: AlphaParam, model: &LinearModel, x: &[f64], y: Label) -> Result<f64> {
    Ok(margin_alpha_loss(alpha, y.sign() * model.score(x)?))
}

// Coefficients in terms of g and h = 1 - g, so callers holding a score can
// pass sigmoid(-t) for h instead of losing digits in 1 - g.

fn f1(c: f64, g: f64, h: f64, y: Label) -> f64 {
    match y {
        Label::Positive => -g.powf(c) * h,
        Label::Negative => g * h.powf(c),
    }
}

fn f2(c: f64, g: f64, h: f64, y: Label) -> f64 {
    match y {
        Label::Positive => g.powf(1.0 + c) * h - c * g.powf(c) * h * h,
        Label::Negative => g * h.powf(1.0 + c) - c * g * g * h.powf(c),
    }
}

fn f3(c: f64, g: f64, h: f64, y: Label) -> f64 {
    // middle coefficient 4 - 3/alpha = 1 + 3c
    let mid = 1.0 + 3.0 * c;
    match y {
        Label::Positive => {
            -(g.powf(2.0 + c) * h - mid * h * h * g.powf(1.0 + c) + c * c * h.powi(3) * g.powf(c))
        }
        Label::Negative => {
            g * h.powf(2.0 + c) - mid * g * g * h.powf(1.0 + c) + c * c * g.powi(3) * h.powf(c)
        }
    }
}

/// Gradient coefficient: `grad_theta l(y, g(x)) = F1 * x`.
pub fn f1_coefficient(alpha: AlphaParam, g: Belief, y: Label) -> f64 {
    f1(alpha.exponent(), g.get(), 1.0 - g.get(), y)
}

/// Hessian coefficient: `hess_theta l(y, g(x)) = F2 * x x^T`.
pub fn f2_coefficient(alpha: AlphaParam, g: Belief, y: Label) -> f64 {
    f2(alpha.exponent(), g.get(), 1.0 - g.get(), y)
}

/// Third-derivative coefficient: `d/dtheta_i hess = F3 * x x^T x_i`.
pub fn f3_coefficient(alpha: AlphaParam, g: Belief, y: Label) -> f64 {
    f3(alpha.exponent(), g.get(), 1.0 - g.get(), y)
}

/// F1 at score `t = theta . x`, with `g^c` taken through `log sigmoid`.
fn f1_at_score(c: f64, t: f64, y: Label) -> f64 {
    match y {
        Label::Positive => -(c * log_sigmoid(t)).exp() * sigmoid(-t),
        Label::Negative => sigmoid(t) * (c * log_sigmoid(-t)).exp(),
    }
}

/// Mean alpha-loss over the dataset.
pub fn empirical_risk(alpha: AlphaParam, model: &LinearModel, data: &LabeledDataset) -> Result<f64> {
    check_dim(model.dim(), data.dim())?;
    let partials: Vec<f64> = chunks(data)
        .map(|(xs, ys)| {
            xs.chunks_exact(data.dim())
                .zip(ys)
                .map(|(x, &y)| margin_alpha_loss(alpha, y.sign() * dot(&model.weights, x)))
                .sum::<f64>()
        })
        .collect();
    Ok(partials.iter().sum::<f64>() / data.len() as f64)
}

/// Mean of `F1 * x` over the dataset.
pub fn empirical_gradient(
    alpha: AlphaParam,
    model: &LinearModel,
    data: &LabeledDataset,
) -> Result<Vec<f64>> {
    risk_and_gradient(alpha, model, data).map(|(_, g)| g)
}

/// Empirical risk and its gradient from a single pass over the rows.
pub fn risk_and_gradient(
    alpha: AlphaParam,
    model: &LinearModel,
    data: &LabeledDataset,
) -> Result<(f64, Vec<f64>)> {
    check_dim(model.dim(), data.dim())?;
    let d = data.dim();
    let c = alpha.exponent();
    let partials: Vec<(f64, Vec<f64>)> = chunks(data)
        .map(|(xs, ys)| {
            let mut risk = 0.0;
            let mut grad = vec![0.0; d];
            for (x, &y) in xs.chunks_exact(d).zip(ys) {
                let t = dot(&model.weights, x);
                risk += margin_alpha_loss(alpha, y.sign() * t);
                let coef = f1_at_score(c, t, y);
                grad.iter_mut().zip(x).for_each(|(g, xi)| *g += coef * xi);
            }
            (risk, grad)
        })
        .collect();
    let n = data.len() as f64;
    let mut risk = 0.0;
    let mut grad = vec![0.0; d];
    for (r, g) in &partials {
        risk += r;
        grad.iter_mut().zip(g).for_each(|(a, b)| *a += b);
    }
    grad.iter_mut().for_each(|g| *g /= n);
    Ok((risk / n, grad))
}

/// Full-batch gradient descent from the seeded initial model.
pub fn train(config: &TrainConfig, data: &LabeledDataset) -> Result<TrainReport> {
    config.validate()?;
    let mut model = config.initial_model(data);
    let mut trace = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let (risk, grad) = risk_and_gradient(config.alpha, &model, data)?;
        if !risk.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Diverged { epoch, risk });
        }
        trace.push(risk);
        model
            .weights
            .iter_mut()
            .zip(&grad)
            .for_each(|(w, g)| *w -= config.learning_rate * g);
        model.project();
    }
    let (final_risk, grad) = risk_and_gradient(config.alpha, &model, data)?;
    if !final_risk.is_finite() {
        return Err(Error::Diverged {
            epoch: config.epochs,
            risk: final_risk,
        });
    }
    let train_accuracy = evaluate(&model, data)?;
    Ok(TrainReport {
        final_gradient_norm: norm(&grad),
        final_model: model,
        empirical_risk_trace: trace,
        final_risk,
        train_accuracy,
    })
}

/// Fraction of rows with `sign(theta . x) = y`, counting `sign(0)` as +1.
pub fn evaluate(model: &LinearModel, data: &LabeledDataset) -> Result<f64> {
    check_dim(model.dim(), data.dim())?;
    let hits = data
        .rows()
        .filter(|(x, y)| Label::from_score(dot(&model.weights, x)) == *y)
        .count();
    Ok(hits as f64 / data.len() as f64)
}

fn chunks(data: &LabeledDataset) -> impl IndexedParallelIterator<Item = (&[f64], &[Label])> {
    data.features
        .par_chunks(CHUNK_ROWS * data.dim)
        .zip(data.labels.par_chunks(CHUNK_ROWS))
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Dot product with four running sums, in a fixed order.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (a4, a_tail) = a.split_at(a.len() - a.len() % 4);
    let (b4, b_tail) = b.split_at(a4.len());
    for (x, y) in a4.chunks_exact(4).zip(b4.chunks_exact(4)) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let tail: f64 = a_tail.iter().zip(b_tail).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}
