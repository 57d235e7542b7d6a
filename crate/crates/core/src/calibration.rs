//! Numerical classification-calibration checks.
//!
//! A margin loss is calibrated at a posterior `eta != 1/2` when the smallest
//! conditional risk reachable with a wrong-signed classifier value
//! (`f * (2 eta - 1) <= 0`) strictly exceeds the unconstrained minimum.
//! Both infima are taken over a bounded grid and polished by golden-section
//! search around the best cell.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::loss::{
    conditional_risk, log_sigmoid, margin_alpha_loss, optimal_classifier, sigmoid, AlphaParam,
    FiniteAlpha, PosteriorEta,
};
use crate::numerics::{bisect, golden_section};

pub const DEFAULT_F_RANGE: f64 = 50.0;
pub const DEFAULT_GRID_STEP: f64 = 1e-3;
/// A gap above this declares the loss calibrated at the tested posterior.
pub const CALIBRATION_TOL: f64 = 1e-9;
/// Bracket for the root of [`inner_derivative`].
pub const ROOT_BRACKET: f64 = 100.0;

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationReport {
    pub eta: PosteriorEta,
    /// `None` for a user-supplied margin loss.
    pub alpha: Option<AlphaParam>,
    pub unconstrained_min: f64,
    pub constrained_min: f64,
    pub unconstrained_argmin: f64,
    pub constrained_argmin: f64,
    /// `constrained_min - unconstrained_min`.
    pub gap: f64,
    pub calibrated_at_eta: bool,
    /// The unconstrained infimum sits on the edge of the searched range, so it
    /// is only approached, not attained (the `alpha = inf` case).
    pub argmin_at_boundary: bool,
}

/// Calibration check for an arbitrary margin loss `loss(z)`.
pub fn check_margin_loss<L>(
    loss: L,
    eta: PosteriorEta,
    f_range: f64,
    grid_step: f64,
) -> Result<CalibrationReport>
where
    L: Fn(f64) -> f64,
{
    if eta.get() == 0.5 {
        return Err(Error::UndecidedPosterior);
    }
    if !(f_range > 0.0 && f_range.is_finite()) {
        return Err(Error::InvalidConfig(format!("f_range must be positive, got {f_range}")));
    }
    if !(grid_step > 0.0 && grid_step <= f_range) {
        return Err(Error::InvalidConfig(format!(
            "grid_step must lie in (0, f_range], got {grid_step}"
        )));
    }
    let e = eta.get();
    let risk = |f: f64| e * loss(f) + (1.0 - e) * loss(-f);

    let half = (f_range / grid_step).ceil() as i64;
    let point = |k: i64| (k as f64 * grid_step).clamp(-f_range, f_range);

    // Wrong-signed half: f <= 0 when eta > 1/2, f >= 0 otherwise. Both
    // contain f = 0.
    let (lo_k, hi_k) = if e > 0.5 { (-half, 0) } else { (0, half) };

    let (mut u_arg, u_min) = search(&risk, -half, half, &point);
    let (c_arg, c_min) = search(&risk, lo_k, hi_k, &point);
    // Flat tails (alpha = inf) saturate in floating point well before the
    // range edge; the infimum is then only approached there.
    let edge = if e > 0.5 { f_range } else { -f_range };
    let u_edge = risk(edge) - u_min <= f64::EPSILON * u_min.abs().max(1.0);
    if u_edge {
        u_arg = edge;
    }
    let gap = c_min - u_min;
    Ok(CalibrationReport {
        eta,
        alpha: None,
        unconstrained_min: u_min,
        constrained_min: c_min,
        unconstrained_argmin: u_arg,
        constrained_argmin: c_arg,
        gap,
        calibrated_at_eta: gap > CALIBRATION_TOL,
        argmin_at_boundary: u_edge,
    })
}

/// Grid scan over indices `lo..=hi`, then golden-section refinement inside
/// the neighbouring cells. Returns `(argmin, min)`.
fn search<R, P>(risk: &R, lo: i64, hi: i64, point: &P) -> (f64, f64)
where
    R: Fn(f64) -> f64,
    P: Fn(i64) -> f64,
{
    let mut best_k = lo;
    let mut best = risk(point(lo));
    for k in lo + 1..=hi {
        let v = risk(point(k));
        if v < best {
            best = v;
            best_k = k;
        }
    }
    let a = point((best_k - 1).max(lo));
    let b = point((best_k + 1).min(hi));
    let (arg, val) = golden_section(risk, a, b, 1e-12);
    if val < best {
        (arg, val)
    } else {
        (point(best_k), best)
    }
}

/// Calibration check for alpha-loss at one posterior.
pub fn check_calibration_at(
    alpha: AlphaParam,
    eta: PosteriorEta,
    f_range: f64,
    grid_step: f64,
) -> Result<CalibrationReport> {
    let f_star = optimal_classifier(alpha, eta);
    if f_star.is_finite() && f_range <= f_star.abs() {
        return Err(Error::InvalidConfig(format!(
            "f_range {f_range} does not cover the optimal classifier {f_star}"
        )));
    }
    let mut report = check_margin_loss(|z| margin_alpha_loss(alpha, z), eta, f_range, grid_step)?;
    report.alpha = Some(alpha);
    Ok(report)
}

/// Search range for a sweep: the default, widened to `1.5 |f*|` when the
/// optimal classifier lies outside it.
pub fn sweep_range(alpha: AlphaParam, eta: PosteriorEta) -> f64 {
    let f_star = optimal_classifier(alpha, eta);
    if f_star.is_finite() {
        DEFAULT_F_RANGE.max(1.5 * f_star.abs())
    } else {
        DEFAULT_F_RANGE
    }
}

/// One report per posterior, in input order, using [`sweep_range`] and the
/// default grid step.
pub fn calibration_sweep(alpha: AlphaParam, etas: &[PosteriorEta]) -> Result<Vec<CalibrationReport>> {
    etas.par_iter()
        .map(|&eta| {
            let range = sweep_range(alpha, eta);
            check_calibration_at(alpha, eta, range, DEFAULT_GRID_STEP).map_err(|err| {
                Error::AtPosterior {
                    eta: eta.get(),
                    source: Box::new(err),
                }
            })
        })
        .collect()
}

/// Derivative in `f` of `eta * s(f)^c + (1 - eta) * s(-f)^c` with
/// `c = 1 - 1/alpha`, the quantity whose supremum gives the minimum
/// conditional risk. Equals `-c` times the derivative of the conditional risk.
///
/// Unique zero at `f = alpha * log(eta / (1 - eta))`.
pub fn inner_derivative(alpha: FiniteAlpha, eta: PosteriorEta, f: f64) -> f64 {
    let a = alpha.get();
    let c = 1.0 - 1.0 / a;
    let e = eta.get();
    // 1 / (e^f + 2 + e^-f) = s(f) s(-f); (1 + e^-f)^(1/a) = s(f)^(-1/a)
    let weight = sigmoid(f) * sigmoid(-f);
    let pos = (-log_sigmoid(f) / a).exp();
    let neg = (-log_sigmoid(-f) / a).exp();
    c * weight * (e * pos - (1.0 - e) * neg)
}

/// Root of [`inner_derivative`] by bisection on `[-100, 100]`.
pub fn inner_derivative_root(alpha: FiniteAlpha, eta: PosteriorEta) -> Option<f64> {
    bisect(|f| inner_derivative(alpha, eta, f), -ROOT_BRACKET, ROOT_BRACKET, 1e-13)
}

/// Convenience used by the sweep consumers: the closed-form comparison
/// values for a report.
pub fn closed_form_argmin(report: &CalibrationReport) -> Option<f64> {
    report.alpha.map(|alpha| optimal_classifier(alpha, report.eta))
}

/// Conditional risk of alpha-loss at the report's unconstrained argmin.
pub fn risk_at_argmin(report: &CalibrationReport) -> Option<f64> {
    report
        .alpha
        .map(|alpha| conditional_risk(alpha, report.eta, report.unconstrained_argmin))
}
