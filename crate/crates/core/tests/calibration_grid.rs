use alphaloss::calibration::{
    calibration_sweep, check_calibration_at, check_margin_loss, inner_derivative_root,
    CALIBRATION_TOL,
};
use alphaloss::loss::{conditional_risk, min_conditional_risk, optimal_classifier, sigmoid};
use alphaloss::{AlphaParam, PosteriorEta};

fn eta_grid() -> Vec<PosteriorEta> {
    (1..=9)
        .filter(|&k| k != 5)
        .map(|k| PosteriorEta::new(k as f64 / 10.0).unwrap())
        .collect()
}

#[test]
fn grid_argmin_is_alpha_times_logit() {
    for a in [1.0, 1.5, 2.0, 4.0] {
        let alpha = AlphaParam::of(a);
        for eta in eta_grid() {
            let report = check_calibration_at(alpha, eta, 50.0, 1e-3).unwrap();
            let f_star = optimal_classifier(alpha, eta);
            let e = eta.get();
            assert!((f_star - a * (e / (1.0 - e)).ln()).abs() < 1e-12);
            assert!((report.unconstrained_argmin - f_star).abs() < 1e-3, "a {a}, eta {e}");
            let closed = min_conditional_risk(alpha, eta);
            assert!((report.unconstrained_min - closed).abs() < 1e-6, "a {a}, eta {e}");
        }
    }
}

#[test]
fn closed_form_minimum_is_attained_at_the_optimal_classifier() {
    for a in [1.0, 1.2, 2.0, 3.0, 8.0] {
        let alpha = AlphaParam::of(a);
        for k in 1..40 {
            let eta = PosteriorEta::new(k as f64 / 40.0).unwrap();
            let at_opt = conditional_risk(alpha, eta, optimal_classifier(alpha, eta));
            assert!((at_opt - min_conditional_risk(alpha, eta)).abs() < 1e-12);
        }
    }
}

#[test]
fn inner_root_agrees_with_optimal_classifier() {
    for a in [1.3, 2.0, 5.0] {
        let AlphaParam::Finite(fa) = AlphaParam::of(a) else {
            unreachable!()
        };
        for eta in eta_grid() {
            let root = inner_derivative_root(fa, eta).unwrap();
            assert!((root - optimal_classifier(AlphaParam::of(a), eta)).abs() < 1e-9);
        }
    }
}

#[test]
fn every_alpha_is_calibrated() {
    let alphas = [1.0, 1.01, 1.5, 2.0, 4.0, 10.0, 100.0]
        .into_iter()
        .map(AlphaParam::of)
        .chain([AlphaParam::Infinity]);
    let etas: Vec<PosteriorEta> = (1..20)
        .filter(|&k| k != 10)
        .map(|k| PosteriorEta::new(k as f64 / 20.0).unwrap())
        .collect();
    for alpha in alphas {
        for report in calibration_sweep(alpha, &etas).unwrap() {
            assert!(report.gap > CALIBRATION_TOL, "alpha {alpha}, eta {}", report.eta.get());
            assert!(report.calibrated_at_eta);
        }
    }
}

#[test]
fn constrained_minimum_sits_at_zero_for_alpha_loss() {
    // the wrong-signed side is minimized at the decision boundary
    for a in [1.0, 2.0, 6.0] {
        let alpha = AlphaParam::of(a);
        for eta in eta_grid() {
            let report = check_calibration_at(alpha, eta, 50.0, 1e-3).unwrap();
            assert!(report.constrained_argmin.abs() < 1e-6);
            assert!((report.constrained_min - conditional_risk(alpha, eta, 0.0)).abs() < 1e-12);
        }
    }
}

#[test]
fn non_calibrated_loss_is_flagged() {
    // constant loss has no preference between signs
    let eta = PosteriorEta::new(0.8).unwrap();
    let report = check_margin_loss(|_| 1.0, eta, 10.0, 1e-2).unwrap();
    assert!(report.gap.abs() <= CALIBRATION_TOL);
    assert!(!report.calibrated_at_eta);
}

#[test]
fn minimum_conditional_risk_is_concave_and_symmetric() {
    for alpha in [1.0, 1.5, 2.0, 4.0, 20.0]
        .into_iter()
        .map(AlphaParam::of)
        .chain([AlphaParam::Infinity])
    {
        let h = 0.01;
        let risk = |e: f64| min_conditional_risk(alpha, PosteriorEta::new(e).unwrap());
        for k in 2..99 {
            let e = k as f64 * h;
            let second = risk(e + h) - 2.0 * risk(e) + risk(e - h);
            assert!(second <= 1e-9, "alpha {alpha}, eta {e}: {second}");
            assert!((risk(e) - risk(1.0 - e)).abs() < 1e-12);
        }
    }
}

#[test]
fn conditional_risk_is_symmetric_under_relabeling() {
    for alpha in [1.0, 3.0].into_iter().map(AlphaParam::of).chain([AlphaParam::Infinity]) {
        for eta in eta_grid() {
            for f in [-3.0, -0.4, 0.0, 1.7] {
                let a = conditional_risk(alpha, eta, f);
                let b = conditional_risk(alpha, eta.complement(), -f);
                assert!((a - b).abs() < 1e-14);
            }
        }
    }
}

#[test]
fn infinite_alpha_risk_is_probability_of_error() {
    // the soft classifier sigmoid(f) errs with probability eta s(-f) + (1-eta) s(f)
    for eta in eta_grid() {
        for f in [-5.0, -1.0, 0.0, 0.3, 2.0] {
            let e = eta.get();
            let p_err = e * sigmoid(-f) + (1.0 - e) * sigmoid(f);
            assert!((conditional_risk(AlphaParam::Infinity, eta, f) - p_err).abs() < 1e-15);
        }
        let report = check_calibration_at(AlphaParam::Infinity, eta, 50.0, 1e-3).unwrap();
        assert!(report.argmin_at_boundary);
        assert!((report.unconstrained_min - eta.get().min(1.0 - eta.get())).abs() < 1e-9);
    }
}
