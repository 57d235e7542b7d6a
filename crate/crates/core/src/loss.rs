//! Closed-form alpha-loss family.
//!
//! The probabilistic form scores the belief a soft classifier assigns to the
//! true label:
//!
//! ```text
//! l(y, p) = -log p                              alpha = 1
//!         = a/(a-1) * (1 - p^(1 - 1/a))         1 < alpha < inf
//!         = 1 - p                               alpha = inf
//! ```
//!
//! The margin form evaluates the same loss at `p = sigmoid(z)` for a margin
//! `z = y * f(x)`. Both forms agree whenever `f = sigmoid_inv(g)`.
//!
//! Everything here is a pure function; margins may be `+-inf`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Raw alpha values within this distance of 1 are treated as log-loss.
pub const LOG_LOSS_SNAP: f64 = 1e-9;

/// A finite alpha strictly above 1.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct FiniteAlpha(f64);

impl FiniteAlpha {
    pub fn get(self) -> f64 {
        self.0
    }
}

/// The tuning parameter alpha in `[1, inf]`.
///
/// The two endpoints are exact variants so that log-loss and the
/// probability-of-error loss never go through the `a/(a-1)` prefactor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaParam {
    LogLoss,
    Finite(FiniteAlpha),
    Infinity,
}

impl AlphaParam {
    /// Maps a raw real onto the three branches.
    ///
    /// `1` (within [`LOG_LOSS_SNAP`]) becomes [`AlphaParam::LogLoss`], `+inf`
    /// becomes [`AlphaParam::Infinity`]; anything below 1 or NaN is rejected.
    pub fn new(raw: f64) -> Result<Self> {
        if raw == f64::INFINITY {
            Ok(AlphaParam::Infinity)
        } else if (raw - 1.0).abs() < LOG_LOSS_SNAP {
            Ok(AlphaParam::LogLoss)
        } else if raw.is_finite() && raw > 1.0 {
            Ok(AlphaParam::Finite(FiniteAlpha(raw)))
        } else {
            Err(Error::InvalidAlpha(raw))
        }
    }

    /// Like [`AlphaParam::new`] but panics on invalid input. Meant for constants.
    pub fn of(raw: f64) -> Self {
        match Self::new(raw) {
            Ok(alpha) => alpha,
            Err(err) => panic!("{err}"),
        }
    }

    /// Alpha as a real, `inf` for the upper endpoint.
    pub fn value(self) -> f64 {
        match self {
            AlphaParam::LogLoss => 1.0,
            AlphaParam::Finite(a) => a.0,
            AlphaParam::Infinity => f64::INFINITY,
        }
    }

    /// `1/alpha`: 1 for log-loss, 0 at infinity.
    pub fn reciprocal(self) -> f64 {
        match self {
            AlphaParam::LogLoss => 1.0,
            AlphaParam::Finite(a) => 1.0 / a.0,
            AlphaParam::Infinity => 0.0,
        }
    }

    /// The exponent `1 - 1/alpha` that appears throughout the loss and its
    /// derivatives.
    pub fn exponent(self) -> f64 {
        match self {
            AlphaParam::LogLoss => 0.0,
            AlphaParam::Finite(a) => 1.0 - 1.0 / a.0,
            AlphaParam::Infinity => 1.0,
        }
    }
}

impl fmt::Display for AlphaParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlphaParam::LogLoss => f.write_str("1"),
            AlphaParam::Finite(a) => write!(f, "{}", a.0),
            AlphaParam::Infinity => f.write_str("inf"),
        }
    }
}

impl FromStr for AlphaParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s.to_ascii_lowercase().as_str() {
            "inf" | "+inf" | "infinity" | "∞" => Ok(AlphaParam::Infinity),
            other => other
                .parse::<f64>()
                .map_err(|_| Error::InvalidAlpha(f64::NAN))
                .and_then(AlphaParam::new),
        }
    }
}

/// A probability assigned to a binary label.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Belief(f64);

impl Belief {
    pub fn new(p: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&p) {
            Ok(Belief(p))
        } else {
            Err(Error::InvalidBelief(p))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }

    /// The belief in the other label.
    pub fn complement(self) -> Belief {
        Belief(1.0 - self.0)
    }
}

/// Binary label in `{-1, +1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Negative,
    Positive,
}

impl Label {
    pub fn sign(self) -> f64 {
        match self {
            Label::Negative => -1.0,
            Label::Positive => 1.0,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Label::Negative => -1,
            Label::Positive => 1,
        }
    }

    pub fn flip(self) -> Label {
        match self {
            Label::Negative => Label::Positive,
            Label::Positive => Label::Negative,
        }
    }

    /// Label predicted by a real score, with `sign(0) = +1`.
    pub fn from_score(score: f64) -> Label {
        if score >= 0.0 {
            Label::Positive
        } else {
            Label::Negative
        }
    }
}

impl TryFrom<i64> for Label {
    type Error = Error;

    fn try_from(y: i64) -> Result<Self> {
        match y {
            1 => Ok(Label::Positive),
            -1 => Ok(Label::Negative),
            other => Err(Error::InvalidLabel(other)),
        }
    }
}

/// Margin `z = y * f(x)`; negative means `f` misclassifies.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Margin(pub f64);

impl Margin {
    pub fn of(y: Label, score: f64) -> Margin {
        Margin(y.sign() * score)
    }

    pub fn is_misclassified(self) -> bool {
        self.0 < 0.0
    }

    pub fn loss(self, alpha: AlphaParam) -> f64 {
        margin_alpha_loss(alpha, self.0)
    }
}

/// True posterior `eta(x) = P(Y = 1 | x)`, strictly inside `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct PosteriorEta(f64);

impl PosteriorEta {
    pub fn new(eta: f64) -> Result<Self> {
        if eta > 0.0 && eta < 1.0 {
            Ok(PosteriorEta(eta))
        } else {
            Err(Error::InvalidPosterior(eta))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }

    pub fn complement(self) -> PosteriorEta {
        PosteriorEta(1.0 - self.0)
    }
}

/// `1 - p^c` over `c`, written so it stays accurate as `c -> 0`.
fn power_gap(log_p: f64, c: f64) -> f64 {
    -(c * log_p).exp_m1() / c
}

/// Alpha-loss of a belief `belief_of_y` placed on the true label `y`.
///
/// Returns `+inf` for log-loss at `p = 0`.
pub fn alpha_loss(alpha: AlphaParam, _y: Label, belief_of_y: Belief) -> f64 {
    let p = belief_of_y.get();
    match alpha {
        AlphaParam::LogLoss => -p.ln(),
        AlphaParam::Finite(_) => power_gap(p.ln(), alpha.exponent()),
        AlphaParam::Infinity => 1.0 - p,
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log sigmoid(z)` without overflow for large `|z|`.
pub fn log_sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        -(-z).exp().ln_1p()
    } else {
        z - z.exp().ln_1p()
    }
}

/// Logit; maps 0 and 1 to `-inf` and `+inf`.
pub fn sigmoid_inv(p: Belief) -> f64 {
    let p = p.get();
    p.ln() - (-p).ln_1p()
}

/// Margin alpha-loss, nonincreasing in `z`.
pub fn margin_alpha_loss(alpha: AlphaParam, z: f64) -> f64 {
    match alpha {
        AlphaParam::LogLoss => -log_sigmoid(z),
        AlphaParam::Finite(_) => power_gap(log_sigmoid(z), alpha.exponent()),
        AlphaParam::Infinity => sigmoid(-z),
    }
}

/// First derivative of the margin loss, `-sigmoid(z)^(1-1/a) * sigmoid(-z)`.
pub fn margin_loss_d1(alpha: AlphaParam, z: f64) -> f64 {
    -(alpha.exponent() * log_sigmoid(z)).exp() * sigmoid(-z)
}

/// Second derivative of the margin loss,
/// `sigmoid(z)^(1-1/a) * sigmoid(-z) * (sigmoid(z) - (1-1/a) * sigmoid(-z))`.
///
/// Changes sign at `z = log((a-1)/a)` for every `a > 1`.
pub fn margin_loss_d2(alpha: AlphaParam, z: f64) -> f64 {
    let c = alpha.exponent();
    let (s, t) = (sigmoid(z), sigmoid(-z));
    (c * log_sigmoid(z)).exp() * t * (s - c * t)
}

/// Conditional risk `eta * l(f) + (1 - eta) * l(-f)` at a point with
/// posterior `eta`.
pub fn conditional_risk(alpha: AlphaParam, eta: PosteriorEta, f: f64) -> f64 {
    let eta = eta.get();
    eta * margin_alpha_loss(alpha, f) + (1.0 - eta) * margin_alpha_loss(alpha, -f)
}

/// Minimizer of [`conditional_risk`] over `f`: `alpha * logit(eta)`.
///
/// At `alpha = inf` the minimum is only approached at `+-inf`; `eta = 1/2`
/// maps to 0.
pub fn optimal_classifier(alpha: AlphaParam, eta: PosteriorEta) -> f64 {
    let logit = sigmoid_inv(Belief(eta.get()));
    match alpha {
        AlphaParam::LogLoss => logit,
        AlphaParam::Finite(a) => a.get() * logit,
        AlphaParam::Infinity => {
            if eta.get() > 0.5 {
                f64::INFINITY
            } else if eta.get() < 0.5 {
                f64::NEG_INFINITY
            } else {
                0.0
            }
        }
    }
}

/// Conditional risk at the optimal classifier.
///
/// Binary entropy at `alpha = 1`, `min(eta, 1 - eta)` at `alpha = inf`, and
/// `a/(a-1) * (1 - (eta^a + (1-eta)^a)^(1/a))` in between.
pub fn min_conditional_risk(alpha: AlphaParam, eta: PosteriorEta) -> f64 {
    let eta = eta.get();
    match alpha {
        AlphaParam::LogLoss => -eta * eta.ln() - (1.0 - eta) * (1.0 - eta).ln(),
        AlphaParam::Finite(a) => {
            let a = a.get();
            // (1 - N^(1/a)) / c with N = eta^a + (1-eta)^a
            let log_norm = (eta.powf(a) + (1.0 - eta).powf(a)).ln();
            -(log_norm / a).exp_m1() / alpha.exponent()
        }
        AlphaParam::Infinity => eta.min(1.0 - eta),
    }
}

/// Belief minimizing expected alpha-loss under `posterior`:
/// `eta^a / (eta^a + (1-eta)^a)`.
pub fn alpha_tilted_posterior(alpha: AlphaParam, posterior: Belief) -> Belief {
    let eta = posterior.get();
    match alpha {
        AlphaParam::LogLoss => posterior,
        AlphaParam::Finite(a) => Belief(sigmoid(a.get() * sigmoid_inv(posterior))),
        AlphaParam::Infinity => Belief(if eta > 0.5 {
            1.0
        } else if eta < 0.5 {
            0.0
        } else {
            0.5
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LN2: f64 = std::f64::consts::LN_2;

    fn b(p: f64) -> Belief {
        Belief::new(p).unwrap()
    }

    fn eta(p: f64) -> PosteriorEta {
        PosteriorEta::new(p).unwrap()
    }

    #[test]
    fn alpha_construction() {
        assert_eq!(AlphaParam::new(1.0).unwrap(), AlphaParam::LogLoss);
        assert_eq!(AlphaParam::new(1.0 + 1e-10).unwrap(), AlphaParam::LogLoss);
        assert_eq!(AlphaParam::new(f64::INFINITY).unwrap(), AlphaParam::Infinity);
        assert!(matches!(AlphaParam::new(2.0).unwrap(), AlphaParam::Finite(_)));
        assert!(AlphaParam::new(0.5).is_err());
        assert!(AlphaParam::new(f64::NAN).is_err());
        assert!(AlphaParam::new(f64::NEG_INFINITY).is_err());
        assert_eq!("inf".parse::<AlphaParam>().unwrap(), AlphaParam::Infinity);
        assert_eq!("1".parse::<AlphaParam>().unwrap(), AlphaParam::LogLoss);
        assert_eq!("1.5".parse::<AlphaParam>().unwrap().value(), 1.5);
        assert!("abc".parse::<AlphaParam>().is_err());
        assert_eq!(AlphaParam::Infinity.to_string(), "inf");
    }

    #[test]
    fn domain_types_reject_out_of_range() {
        assert!(Belief::new(1.5).is_err());
        assert!(Belief::new(-0.1).is_err());
        assert!(Belief::new(f64::NAN).is_err());
        assert!(PosteriorEta::new(0.0).is_err());
        assert!(PosteriorEta::new(1.0).is_err());
        assert!(Label::try_from(0).is_err());
        assert_eq!(Label::try_from(-1).unwrap(), Label::Negative);
        assert!(Margin::of(Label::Negative, 2.0).is_misclassified());
    }

    #[test]
    fn alpha_loss_examples() {
        let y = Label::Positive;
        assert!((alpha_loss(AlphaParam::Infinity, y, b(0.9)) - 0.1).abs() < 1e-15);
        assert!((alpha_loss(AlphaParam::of(2.0), y, b(0.25)) - 1.0).abs() < 1e-15);
        assert!((alpha_loss(AlphaParam::LogLoss, Label::Negative, b(0.5)) - LN2).abs() < 1e-15);
        assert_eq!(alpha_loss(AlphaParam::LogLoss, y, b(0.0)), f64::INFINITY);
        assert!((alpha_loss(AlphaParam::of(2.0), y, b(0.0)) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn sigmoid_examples() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert_eq!(sigmoid(f64::INFINITY), 1.0);
        assert_eq!(sigmoid(f64::NEG_INFINITY), 0.0);
        // 1/(1+e) to 20 digits: 0.26894142136999512075
        assert!((sigmoid(-1.0) - 0.268_941_421_369_995_12).abs() < 1e-16);
        for z in [-800.0, -30.0, -1.0, 0.3, 17.0, 800.0] {
            assert!((sigmoid(z) + sigmoid(-z) - 1.0).abs() <= f64::EPSILON);
        }
    }

    #[test]
    fn sigmoid_inv_examples() {
        assert_eq!(sigmoid_inv(b(0.5)), 0.0);
        assert_eq!(sigmoid_inv(b(1.0)), f64::INFINITY);
        assert_eq!(sigmoid_inv(b(0.0)), f64::NEG_INFINITY);
        let e = std::f64::consts::E;
        assert!((sigmoid_inv(b(e / (1.0 + e))) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn margin_loss_examples() {
        assert_eq!(margin_alpha_loss(AlphaParam::Infinity, 0.0), 0.5);
        assert!((margin_alpha_loss(AlphaParam::LogLoss, 0.0) - LN2).abs() < 1e-15);
        let z = sigmoid_inv(b(0.25));
        assert!((margin_alpha_loss(AlphaParam::of(2.0), z) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn margin_loss_extended_reals() {
        for alpha in [AlphaParam::LogLoss, AlphaParam::of(3.0), AlphaParam::Infinity] {
            assert_eq!(margin_alpha_loss(alpha, f64::INFINITY), 0.0);
        }
        assert_eq!(margin_alpha_loss(AlphaParam::LogLoss, f64::NEG_INFINITY), f64::INFINITY);
        assert!((margin_alpha_loss(AlphaParam::of(3.0), f64::NEG_INFINITY) - 1.5).abs() < 1e-15);
        assert_eq!(margin_alpha_loss(AlphaParam::Infinity, f64::NEG_INFINITY), 1.0);
        // no overflow far out
        assert!(margin_alpha_loss(AlphaParam::of(2.0), -1000.0).is_finite());
        assert!((margin_alpha_loss(AlphaParam::LogLoss, -1000.0) - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn derivative_examples() {
        assert_eq!(margin_loss_d1(AlphaParam::Infinity, 0.0), -0.25);
        assert_eq!(margin_loss_d1(AlphaParam::LogLoss, 0.0), -0.5);
        assert_eq!(margin_loss_d2(AlphaParam::LogLoss, 0.0), 0.25);
        assert_eq!(margin_loss_d2(AlphaParam::Infinity, 0.0), 0.0);
        assert!(margin_loss_d2(AlphaParam::of(2.0), -2.0) < 0.0);
    }

    #[test]
    fn d2_sign_change_location() {
        for a in [1.1f64, 1.5, 2.0, 7.0] {
            let z0 = ((a - 1.0) / a).ln();
            let alpha = AlphaParam::of(a);
            assert!(margin_loss_d2(alpha, z0 - 1e-3) < 0.0);
            assert!(margin_loss_d2(alpha, z0 + 1e-3) > 0.0);
            assert!(margin_loss_d2(alpha, z0).abs() < 1e-15);
        }
    }

    #[test]
    fn conditional_risk_examples() {
        let r = conditional_risk(AlphaParam::Infinity, eta(0.3), f64::NEG_INFINITY);
        assert!((r - 0.3).abs() < 1e-15);
        let r = conditional_risk(AlphaParam::Infinity, eta(0.3), f64::INFINITY);
        assert!((r - 0.7).abs() < 1e-15);
        assert!((conditional_risk(AlphaParam::LogLoss, eta(0.5), 0.0) - LN2).abs() < 1e-15);
    }

    #[test]
    fn optimal_classifier_examples() {
        let two = AlphaParam::of(2.0);
        assert_eq!(optimal_classifier(two, eta(0.5)), 0.0);
        let e = std::f64::consts::E;
        let f = optimal_classifier(AlphaParam::of(3.0), eta(e / (1.0 + e)));
        assert!((f - 3.0).abs() < 1e-14);
        assert!((optimal_classifier(two, eta(0.8)) - 2.0 * 4f64.ln()).abs() < 1e-14);
        assert_eq!(optimal_classifier(AlphaParam::Infinity, eta(0.7)), f64::INFINITY);
        assert_eq!(optimal_classifier(AlphaParam::Infinity, eta(0.2)), f64::NEG_INFINITY);
        assert_eq!(optimal_classifier(AlphaParam::Infinity, eta(0.5)), 0.0);
    }

    #[test]
    fn min_conditional_risk_examples() {
        assert_eq!(min_conditional_risk(AlphaParam::Infinity, eta(0.3)), 0.3);
        assert!((min_conditional_risk(AlphaParam::LogLoss, eta(0.5)) - LN2).abs() < 1e-15);
        let r = min_conditional_risk(AlphaParam::of(2.0), eta(0.5));
        assert!((r - 2.0 * (1.0 - 0.5f64.sqrt())).abs() < 1e-15);
    }

    #[test]
    fn min_conditional_risk_matches_risk_at_optimum() {
        for a in [1.0, 1.3, 2.0, 5.0] {
            let alpha = AlphaParam::new(a).unwrap();
            for e in [0.05, 0.3, 0.7, 0.99] {
                let at_opt = conditional_risk(alpha, eta(e), optimal_classifier(alpha, eta(e)));
                assert!((at_opt - min_conditional_risk(alpha, eta(e))).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn tilted_posterior_examples() {
        assert_eq!(alpha_tilted_posterior(AlphaParam::LogLoss, b(0.7)), b(0.7));
        assert_eq!(alpha_tilted_posterior(AlphaParam::of(2.0), b(0.5)).get(), 0.5);
        let t = alpha_tilted_posterior(AlphaParam::of(2.0), b(0.75)).get();
        assert!((t - 0.9).abs() < 1e-15);
        assert_eq!(alpha_tilted_posterior(AlphaParam::Infinity, b(0.6)).get(), 1.0);
        assert_eq!(alpha_tilted_posterior(AlphaParam::Infinity, b(0.5)).get(), 0.5);
        assert_eq!(alpha_tilted_posterior(AlphaParam::of(2.0), b(1.0)).get(), 1.0);
        assert_eq!(alpha_tilted_posterior(AlphaParam::of(2.0), b(0.0)).get(), 0.0);
    }
}
