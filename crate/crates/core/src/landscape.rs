//! Generalization-gap experiments for alpha-loss logistic regression.
//!
//! Data are drawn so that the class conditionals are mirror images,
//! `X | Y=-1 ~ -X | Y=+1`, with a nonzero class mean and support inside the
//! ball of radius `r`. On such data the gap between true and empirical risk at
//! a trained minimizer should shrink like `sqrt(log n / n)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::logreg::{empirical_risk, evaluate, norm, train, LabeledDataset, LinearModel, TrainConfig};
use crate::loss::{sigmoid, AlphaParam, Label};
use crate::numerics::{ls_slope, median};

/// Draws per point before rejection sampling gives up.
pub const MAX_REJECTIONS: usize = 1000;
pub const DEFAULT_DELTA: f64 = 0.05;
pub const DEFAULT_HOLDOUT: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricDataSpec {
    pub dim: usize,
    pub radius: f64,
    /// Unit vector.
    pub mean_direction: Vec<f64>,
    pub mean_norm: f64,
    pub noise_scale: f64,
    pub seed: u64,
}

impl SymmetricDataSpec {
    /// Spec with the mean along `(1, ..., 1) / sqrt(d)`.
    pub fn new(dim: usize, radius: f64, mean_norm: f64, noise_scale: f64, seed: u64) -> Result<Self> {
        let dir = vec![1.0 / (dim as f64).sqrt(); dim];
        Self::with_direction(dir, radius, mean_norm, noise_scale, seed)
    }

    /// Spec with an arbitrary mean direction, normalized here.
    pub fn with_direction(
        direction: Vec<f64>,
        radius: f64,
        mean_norm: f64,
        noise_scale: f64,
        seed: u64,
    ) -> Result<Self> {
        let n = norm(&direction);
        if direction.is_empty() || !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidConfig("mean direction must be a nonzero vector".into()));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidConfig(format!("radius must be positive, got {radius}")));
        }
        if !(mean_norm > 0.0 && mean_norm.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "mean_norm must be positive, got {mean_norm}"
            )));
        }
        if !(noise_scale >= 0.0 && noise_scale.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "noise_scale must be nonnegative, got {noise_scale}"
            )));
        }
        Ok(SymmetricDataSpec {
            dim: direction.len(),
            mean_direction: direction.iter().map(|v| v / n).collect(),
            radius,
            mean_norm,
            noise_scale,
            seed,
        })
    }

    pub fn reseeded(&self, seed: u64) -> Self {
        SymmetricDataSpec {
            seed,
            ..self.clone()
        }
    }

    /// One draw from the `Y = +1` conditional.
    fn draw_positive(&self, rng: &mut ChaCha8Rng, out: &mut [f64]) -> Result<()> {
        for _ in 0..MAX_REJECTIONS {
            for (o, m) in out.iter_mut().zip(&self.mean_direction) {
                let z: f64 = StandardNormal.sample(rng);
                *o = self.mean_norm * m + self.noise_scale * z;
            }
            if norm(out) <= self.radius {
                return Ok(());
            }
        }
        Err(Error::RejectionLimit {
            attempts: MAX_REJECTIONS,
            mean_norm: self.mean_norm,
            noise_scale: self.noise_scale,
            radius: self.radius,
        })
    }
}

/// `n` rows alternating `+1, -1, +1, ...`; each `-1` row is the negation of
/// an independent `+1` draw.
pub fn generate_symmetric_dataset(spec: &SymmetricDataSpec, n: usize) -> Result<LabeledDataset> {
    if n < 2 {
        return Err(Error::InvalidConfig(format!("need at least 2 rows, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let d = spec.dim;
    let mut features = vec![0.0; n * d];
    let mut labels = Vec::with_capacity(n);
    for (i, row) in features.chunks_exact_mut(d).enumerate() {
        spec.draw_positive(&mut rng, row)?;
        if i % 2 == 0 {
            labels.push(Label::Positive);
        } else {
            row.iter_mut().for_each(|v| *v = -*v);
            labels.push(Label::Negative);
        }
    }
    LabeledDataset::from_flat(features, d, labels, spec.radius)
}

/// Sample quantities behind the strongly-Morse condition
/// `1 - sigmoid(-r^2)^2 < |E X+| / E|X+|`.
#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    /// `|mean of X+|`
    pub mean_norm: f64,
    /// mean of `|X+|`
    pub mean_abs_norm: f64,
    pub ratio: f64,
    /// `sigmoid(-r^2)^2`
    pub sigmoid_sq: f64,
    pub morse_epsilon: f64,
    /// `|mean X+ + mean X-|`, zero under exact mirror symmetry.
    pub symmetry_residual: f64,
    pub nonzero_mean: bool,
    pub inequality_holds: bool,
}

pub fn check_assumptions(data: &LabeledDataset, r: f64) -> Result<AssumptionReport> {
    let d = data.dim();
    let (n_pos, n_neg) = (data.count(Label::Positive), data.count(Label::Negative));
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }
    let mut mean_pos = vec![0.0; d];
    let mut mean_neg = vec![0.0; d];
    let mut abs_norm = 0.0;
    for (x, y) in data.rows() {
        match y {
            Label::Positive => {
                mean_pos.iter_mut().zip(x).for_each(|(m, v)| *m += v);
                abs_norm += norm(x);
            }
            Label::Negative => mean_neg.iter_mut().zip(x).for_each(|(m, v)| *m += v),
        }
    }
    mean_pos.iter_mut().for_each(|m| *m /= n_pos as f64);
    mean_neg.iter_mut().for_each(|m| *m /= n_neg as f64);
    let mean_abs_norm = abs_norm / n_pos as f64;
    let mean_norm = norm(&mean_pos);
    let ratio = if mean_abs_norm > 0.0 {
        mean_norm / mean_abs_norm
    } else {
        0.0
    };
    let sigmoid_sq = sigmoid(-r * r).powi(2);
    let residual: Vec<f64> = mean_pos.iter().zip(&mean_neg).map(|(a, b)| a + b).collect();
    Ok(AssumptionReport {
        mean_norm,
        mean_abs_norm,
        ratio,
        sigmoid_sq,
        morse_epsilon: sigmoid_sq * mean_abs_norm,
        symmetry_residual: norm(&residual),
        nonzero_mean: mean_norm > 0.0,
        inequality_holds: 1.0 - sigmoid_sq < ratio,
    })
}

/// Hoeffding deviation for `m` union-bounded points at confidence `delta/2`:
/// `a/(a-1) * sqrt(log(4m/delta) / (2n))`.
///
/// Log-loss is unbounded and rejected. At `alpha = inf` the range width
/// `a/(a-1)` is taken at its limit 1.
pub fn hoeffding_epsilon(alpha: AlphaParam, n: usize, m: usize, delta: f64) -> Result<f64> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidConfig("n and m must be positive".into()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidConfig(format!("delta must lie in (0, 1), got {delta}")));
    }
    let width = match alpha {
        AlphaParam::LogLoss => return Err(Error::UnboundedLoss),
        AlphaParam::Finite(a) => a.get() / (a.get() - 1.0),
        AlphaParam::Infinity => 1.0,
    };
    Ok(width * ((4.0 * m as f64 / delta).ln() / (2.0 * n as f64)).sqrt())
}

/// `sigmoid(-r^2)^2 * E|X+|`, the gradient-norm floor of the true risk.
pub fn morse_epsilon(r: f64, mean_abs_norm: f64) -> f64 {
    sigmoid(-r * r).powi(2) * mean_abs_norm
}

/// Risks of one model on its training set and a holdout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapMeasurement {
    pub empirical_risk: f64,
    pub true_risk_estimate: f64,
    pub gap: f64,
}

pub fn measure_gap(
    alpha: AlphaParam,
    model: &LinearModel,
    train_set: &LabeledDataset,
    holdout: &LabeledDataset,
) -> Result<GapMeasurement> {
    let empirical = empirical_risk(alpha, model, train_set)?;
    let truth = empirical_risk(alpha, model, holdout)?;
    Ok(GapMeasurement {
        empirical_risk: empirical,
        true_risk_estimate: truth,
        gap: (truth - empirical).abs(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskGapRecord {
    pub alpha: AlphaParam,
    pub n: usize,
    pub trial: usize,
    pub gap: f64,
    /// `None` for log-loss.
    pub hoeffding_term: Option<f64>,
    pub true_risk_estimate: f64,
    pub empirical_risk: f64,
    pub zero_one_test_risk: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskGapExperiment {
    pub spec: SymmetricDataSpec,
    pub alphas: Vec<AlphaParam>,
    pub sample_sizes: Vec<usize>,
    pub trials: usize,
    pub holdout_n: usize,
    /// Template; alpha, seed and projection are set per trial.
    pub train: TrainConfig,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Divergence {
    pub alpha: AlphaParam,
    pub n: usize,
    pub trial: usize,
    pub epoch: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RiskGapOutcome {
    /// Sorted by `(alpha, n, trial)` in the experiment's listed order.
    pub records: Vec<RiskGapRecord>,
    pub divergences: Vec<Divergence>,
}

/// Seed for one trial, independent of scheduling.
pub fn trial_seed(base: u64, alpha: AlphaParam, n: usize, trial: usize) -> u64 {
    let h = splitmix64(alpha.value().to_bits());
    let h = splitmix64(h ^ n as u64);
    base ^ splitmix64(h ^ trial as u64)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Holdout stream of a trial, distinct from its training stream.
const HOLDOUT_STREAM: u64 = 0x5EED_0F40_1D0C;

impl RiskGapExperiment {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 || self.alphas.is_empty() || self.sample_sizes.is_empty() {
            return Err(Error::InvalidConfig(
                "need at least one alpha, sample size and trial".into(),
            ));
        }
        if let Some(&n) = self.sample_sizes.iter().find(|&&n| n < 2) {
            return Err(Error::InvalidConfig(format!("sample size {n} is below 2")));
        }
        if self.holdout_n < 2 {
            return Err(Error::InvalidConfig("holdout_n must be at least 2".into()));
        }
        self.train.validate()
    }

    /// Runs every `(alpha, n, trial)`; trials run in parallel.
    pub fn run(&self) -> Result<RiskGapOutcome> {
        self.validate()?;
        let jobs: Vec<(AlphaParam, usize, usize)> = self
            .alphas
            .iter()
            .flat_map(|&a| {
                self.sample_sizes
                    .iter()
                    .flat_map(move |&n| (0..self.trials).map(move |t| (a, n, t)))
            })
            .collect();
        let results: Vec<Result<std::result::Result<RiskGapRecord, Divergence>>> = jobs
            .par_iter()
            .map(|&(alpha, n, trial)| self.run_trial(alpha, n, trial))
            .collect();
        let mut outcome = RiskGapOutcome::default();
        for r in results {
            match r? {
                Ok(record) => outcome.records.push(record),
                Err(div) => outcome.divergences.push(div),
            }
        }
        Ok(outcome)
    }

    fn run_trial(
        &self,
        alpha: AlphaParam,
        n: usize,
        trial: usize,
    ) -> Result<std::result::Result<RiskGapRecord, Divergence>> {
        let seed = trial_seed(self.spec.seed, alpha, n, trial);
        let train_set = generate_symmetric_dataset(&self.spec.reseeded(seed), n)?;
        let holdout =
            generate_symmetric_dataset(&self.spec.reseeded(seed ^ HOLDOUT_STREAM), self.holdout_n)?;
        let cfg = TrainConfig {
            alpha,
            seed,
            projection: true,
            ..self.train.clone()
        };
        let report = match train(&cfg, &train_set) {
            Ok(report) => report,
            Err(Error::Diverged { epoch, .. }) => {
                return Ok(Err(Divergence {
                    alpha,
                    n,
                    trial,
                    epoch,
                }))
            }
            Err(err) => return Err(err),
        };
        let m = measure_gap(alpha, &report.final_model, &train_set, &holdout)?;
        Ok(Ok(RiskGapRecord {
            alpha,
            n,
            trial,
            gap: m.gap,
            hoeffding_term: hoeffding_epsilon(alpha, n, 1, self.delta).ok(),
            true_risk_estimate: m.true_risk_estimate,
            empirical_risk: m.empirical_risk,
            zero_one_test_risk: 1.0 - evaluate(&report.final_model, &holdout)?,
        }))
    }
}

/// Per-`(alpha, n)` aggregate of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct GapSummary {
    pub alpha: AlphaParam,
    pub n: usize,
    pub trials: usize,
    pub diverged: usize,
    pub median_gap: f64,
    pub mean_zero_one: f64,
    /// Standard error of `mean_zero_one`.
    pub se_zero_one: f64,
}

/// Groups records by `(alpha, n)`, keeping first-appearance order.
pub fn summarize(outcome: &RiskGapOutcome) -> Vec<GapSummary> {
    let mut keys: Vec<(AlphaParam, usize)> = Vec::new();
    for r in &outcome.records {
        if !keys.contains(&(r.alpha, r.n)) {
            keys.push((r.alpha, r.n));
        }
    }
    for d in &outcome.divergences {
        if !keys.contains(&(d.alpha, d.n)) {
            keys.push((d.alpha, d.n));
        }
    }
    keys.into_iter()
        .map(|(alpha, n)| {
            let group: Vec<&RiskGapRecord> = outcome
                .records
                .iter()
                .filter(|r| r.alpha == alpha && r.n == n)
                .collect();
            let gaps: Vec<f64> = group.iter().map(|r| r.gap).collect();
            let zo: Vec<f64> = group.iter().map(|r| r.zero_one_test_risk).collect();
            let k = zo.len() as f64;
            let mean = zo.iter().sum::<f64>() / k;
            let var = if zo.len() > 1 {
                zo.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0)
            } else {
                0.0
            };
            GapSummary {
                alpha,
                n,
                trials: group.len(),
                diverged: outcome
                    .divergences
                    .iter()
                    .filter(|d| d.alpha == alpha && d.n == n)
                    .count(),
                median_gap: median(&gaps),
                mean_zero_one: mean,
                se_zero_one: (var / k).sqrt(),
            }
        })
        .collect()
}

/// Least-squares slope of `log(median gap)` against `log n` for one alpha.
pub fn decay_slope(summaries: &[GapSummary], alpha: AlphaParam) -> f64 {
    let (xs, ys): (Vec<f64>, Vec<f64>) = summaries
        .iter()
        .filter(|s| s.alpha == alpha && s.median_gap > 0.0)
        .map(|s| ((s.n as f64).ln(), s.median_gap.ln()))
        .unzip();
    if xs.len() < 2 {
        return f64::NAN;
    }
    ls_slope(&xs, &ys)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HoeffdingCheck {
    pub epsilon: f64,
    pub true_risk_estimate: f64,
    pub resamples: usize,
    pub violations: usize,
}

impl HoeffdingCheck {
    pub fn violation_rate(&self) -> f64 {
        self.violations as f64 / self.resamples as f64
    }
}

/// Frozen-model concentration check: how often the empirical risk of a
/// fresh size-`n` sample strays from the true risk by more than the
/// Hoeffding term. The true risk is estimated on `reference_n` rows.
pub fn hoeffding_check(
    spec: &SymmetricDataSpec,
    alpha: AlphaParam,
    model: &LinearModel,
    n: usize,
    resamples: usize,
    delta: f64,
    reference_n: usize,
) -> Result<HoeffdingCheck> {
    let epsilon = hoeffding_epsilon(alpha, n, 1, delta)?;
    let reference = generate_symmetric_dataset(&spec.reseeded(spec.seed ^ HOLDOUT_STREAM), reference_n)?;
    let truth = empirical_risk(alpha, model, &reference)?;
    let deviations: Vec<f64> = (0..resamples)
        .into_par_iter()
        .map(|k| {
            let sample = generate_symmetric_dataset(&spec.reseeded(splitmix64(spec.seed ^ k as u64)), n)?;
            Ok((empirical_risk(alpha, model, &sample)? - truth).abs())
        })
        .collect::<Result<_>>()?;
    Ok(HoeffdingCheck {
        epsilon,
        true_risk_estimate: truth,
        resamples,
        violations: deviations.iter().filter(|&&d| d > epsilon).count(),
    })
}
