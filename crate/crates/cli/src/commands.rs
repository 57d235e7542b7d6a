use std::path::{Path, PathBuf};

use alphaloss::calibration::{check_calibration_at, closed_form_argmin};
use alphaloss::landscape::{
    check_assumptions, decay_slope, generate_symmetric_dataset, summarize, RiskGapExperiment,
    SymmetricDataSpec,
};
use alphaloss::logreg::{evaluate, train};
use alphaloss::loss::{margin_alpha_loss, margin_loss_d1, margin_loss_d2, min_conditional_risk};
use alphaloss::mnist::{BinaryTaskSplit, MnistCorpus};
use alphaloss::{AlphaParam, Error, PosteriorEta, TrainConfig};

use crate::args::{
    CalibrationArgs, LandscapeArgs, LossCurvesArgs, MnistArgs, SweepArgs, TrainArgs,
};
use crate::error::{CliError, CliResult};
use crate::output::{alpha, real, Table};

/// Files written and free-form notes for the manifest.
#[derive(Debug, Default)]
pub struct Produced {
    pub outputs: Vec<PathBuf>,
    pub notes: Vec<String>,
}

impl Produced {
    fn note(&mut self, msg: String) {
        eprintln!("warning: {msg}");
        self.notes.push(msg);
    }
}

/// Accuracies of one trained model on the three splits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskScores {
    pub train_acc: f64,
    pub val_acc: f64,
    pub test_acc: f64,
    pub final_risk: f64,
}

fn load_task(mnist: &MnistArgs, seed: u64) -> CliResult<BinaryTaskSplit> {
    let corpus = MnistCorpus::load(&mnist.mnist_dir).map_err(|err| match err {
        Error::Io(io) => CliError::Usage(format!(
            "cannot read MNIST from {}: {io}",
            mnist.mnist_dir.display()
        )),
        other => other.into(),
    })?;
    Ok(corpus.binary_task(seed)?)
}

fn config(alpha: AlphaParam, lr: f64, seed: u64, mnist: &MnistArgs) -> TrainConfig {
    TrainConfig {
        epochs: mnist.epochs,
        init_scale: mnist.init_scale,
        seed,
        ..TrainConfig::new(alpha, lr)
    }
}

pub fn fit_and_score(task: &BinaryTaskSplit, cfg: &TrainConfig) -> CliResult<TaskScores> {
    let report = train(cfg, &task.train)?;
    Ok(TaskScores {
        train_acc: evaluate(&report.final_model, &task.train)?,
        val_acc: evaluate(&report.final_model, &task.validation)?,
        test_acc: evaluate(&report.final_model, &task.test)?,
        final_risk: report.final_risk,
    })
}

pub fn train_cmd(args: &TrainArgs) -> CliResult<Produced> {
    let task = load_task(&args.mnist, args.seed)?;
    let cfg = config(args.alpha, args.lr, args.seed, &args.mnist);
    let s = fit_and_score(&task, &cfg)?;
    let mut table = Table::new(&[
        "alpha", "lr", "epochs", "seed", "train_acc", "val_acc", "test_acc", "final_risk",
    ])?;
    table.row([
        alpha(args.alpha),
        real(args.lr),
        args.mnist.epochs.to_string(),
        args.seed.to_string(),
        real(s.train_acc),
        real(s.val_acc),
        real(s.test_acc),
        real(s.final_risk),
    ])?;
    table.write_to(&args.out)?;
    Ok(Produced {
        outputs: vec![args.out.clone()],
        notes: Vec::new(),
    })
}

pub fn sweep_cmd(args: &SweepArgs) -> CliResult<Produced> {
    if args.alphas.is_empty() || args.lr_grid.is_empty() {
        return Err(CliError::Usage("need at least one alpha and one learning rate".into()));
    }
    let task = load_task(&args.mnist, args.seed)?;
    let mut produced = Produced::default();
    let mut table = Table::new(&["alpha", "best_lr", "val_acc", "test_acc"])?;
    for &a in &args.alphas {
        let mut best: Option<(f64, TaskScores)> = None;
        let mut last_divergence = None;
        for &lr in &args.lr_grid {
            match fit_and_score(&task, &config(a, lr, args.seed, &args.mnist)) {
                Ok(s) => {
                    if best.is_none_or(|(_, b)| s.val_acc > b.val_acc) {
                        best = Some((lr, s));
                    }
                }
                Err(CliError::Library(err @ Error::Diverged { .. })) => {
                    produced.note(format!("alpha {a}, lr {lr}: {err}"));
                    last_divergence = Some(err);
                }
                Err(err) => return Err(err),
            }
        }
        let Some((lr, s)) = best else {
            return Err(last_divergence.expect("grid is nonempty").into());
        };
        table.row([alpha(a), real(lr), real(s.val_acc), real(s.test_acc)])?;
    }
    table.write_to(&args.out)?;
    produced.outputs.push(args.out.clone());
    Ok(produced)
}

pub fn calibration_cmd(args: &CalibrationArgs) -> CliResult<Produced> {
    let mut produced = Produced::default();
    let mut table = Table::new(&[
        "alpha",
        "eta",
        "unconstrained_min",
        "constrained_min",
        "gap",
        "argmin",
        "closed_form_argmin",
        "min_cond_risk_closed_form",
    ])?;
    let mut etas = Vec::with_capacity(args.eta_grid.len());
    for &e in &args.eta_grid {
        if e == 0.5 {
            produced.note("eta = 0.5 skipped: no preferred label, calibration undefined".into());
            continue;
        }
        etas.push(PosteriorEta::new(e)?);
    }
    for &a in &args.alphas {
        for &eta in &etas {
            let report = check_calibration_at(a, eta, args.f_range, args.grid_step).map_err(|err| {
                Error::AtPosterior {
                    eta: eta.get(),
                    source: Box::new(err),
                }
            })?;
            table.row([
                alpha(a),
                real(eta.get()),
                real(report.unconstrained_min),
                real(report.constrained_min),
                real(report.gap),
                real(report.unconstrained_argmin),
                real(closed_form_argmin(&report).unwrap_or(f64::NAN)),
                real(min_conditional_risk(a, eta)),
            ])?;
        }
    }
    table.write_to(&args.out)?;
    produced.outputs.push(args.out.clone());
    Ok(produced)
}

/// `<dir>/<stem>_summary.csv` for `<dir>/<stem>.csv`.
pub fn default_summary_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "landscape".into());
    out.with_file_name(format!("{stem}_summary.csv"))
}

/// Rows drawn once from the base seed to report the data assumptions.
const ASSUMPTION_SAMPLE: usize = 10_000;

pub fn landscape_cmd(args: &LandscapeArgs) -> CliResult<Produced> {
    let Some(&first) = args.alphas.first() else {
        return Err(CliError::Usage("need at least one alpha".into()));
    };
    let spec = SymmetricDataSpec::new(args.dim, args.radius, args.mean_norm, args.noise, args.seed)?;
    let experiment = RiskGapExperiment {
        spec: spec.clone(),
        alphas: args.alphas.clone(),
        sample_sizes: args.ns.clone(),
        trials: args.trials,
        holdout_n: args.holdout,
        train: TrainConfig {
            epochs: args.epochs,
            projection: true,
            ..TrainConfig::new(first, args.lr)
        },
        delta: args.delta,
    };
    experiment.validate()?;

    let mut produced = Produced::default();
    produced
        .notes
        .push("hoeffding_eps uses m = 1 (a single critical point)".into());
    if args.alphas.contains(&AlphaParam::LogLoss) {
        produced.note(
            "hoeffding_eps left empty for alpha = 1: log-loss is unbounded, \
             so the range alpha/(alpha-1) is undefined"
                .into(),
        );
    }
    let probe = generate_symmetric_dataset(&spec, ASSUMPTION_SAMPLE)?;
    let report = check_assumptions(&probe, args.radius)?;
    produced.notes.push(format!(
        "assumptions on {ASSUMPTION_SAMPLE} rows: |E X+| = {:.6}, E|X+| = {:.6}, ratio = {:.6}, \
         sigmoid(-r^2)^2 = {:.6}, symmetry residual = {:.3e}, inequality holds = {}",
        report.mean_norm,
        report.mean_abs_norm,
        report.ratio,
        report.sigmoid_sq,
        report.symmetry_residual,
        report.inequality_holds
    ));
    if !report.inequality_holds {
        produced.note(format!(
            "the strongly-Morse inequality 1 - sigmoid(-r^2)^2 < |E X+|/E|X+| fails \
             ({:.6} >= {:.6}); gaps are measured regardless",
            1.0 - report.sigmoid_sq,
            report.ratio
        ));
    }

    let outcome = experiment.run()?;
    for d in &outcome.divergences {
        produced.note(format!(
            "alpha {}, n {}, trial {} diverged at epoch {}",
            d.alpha, d.n, d.trial, d.epoch
        ));
    }

    let mut table = Table::new(&["alpha", "n", "trial", "gap", "hoeffding_eps", "zero_one_test_risk"])?;
    for r in &outcome.records {
        table.row([
            alpha(r.alpha),
            r.n.to_string(),
            r.trial.to_string(),
            real(r.gap),
            r.hoeffding_term.map(real).unwrap_or_default(),
            real(r.zero_one_test_risk),
        ])?;
    }
    table.write_to(&args.out)?;
    produced.outputs.push(args.out.clone());

    let summaries = summarize(&outcome);
    let mut summary = Table::new(&[
        "alpha",
        "n",
        "trials",
        "diverged",
        "median_gap",
        "mean_zero_one_risk",
        "se_zero_one_risk",
        "slope",
    ])?;
    for s in &summaries {
        summary.row([
            alpha(s.alpha),
            s.n.to_string(),
            s.trials.to_string(),
            s.diverged.to_string(),
            real(s.median_gap),
            real(s.mean_zero_one),
            real(s.se_zero_one),
            real(decay_slope(&summaries, s.alpha)),
        ])?;
    }
    let summary_path = args
        .summary_out
        .clone()
        .unwrap_or_else(|| default_summary_path(&args.out));
    summary.write_to(&summary_path)?;
    produced.outputs.push(summary_path);
    Ok(produced)
}

pub fn losscurves_cmd(args: &LossCurvesArgs) -> CliResult<Produced> {
    if args.steps < 2 {
        return Err(CliError::Usage("steps must be at least 2".into()));
    }
    if !(args.z_min < args.z_max && args.z_min.is_finite() && args.z_max.is_finite()) {
        return Err(CliError::Usage(format!(
            "need finite z_min < z_max, got {} and {}",
            args.z_min, args.z_max
        )));
    }
    let mut table = Table::new(&["alpha", "z", "loss", "d1", "d2"])?;
    let span = args.z_max - args.z_min;
    let last = args.steps - 1;
    for &a in &args.alphas {
        for i in 0..args.steps {
            let z = if i == last {
                args.z_max
            } else {
                args.z_min + span * i as f64 / last as f64
            };
            table.row([
                alpha(a),
                real(z),
                real(margin_alpha_loss(a, z)),
                real(margin_loss_d1(a, z)),
                real(margin_loss_d2(a, z)),
            ])?;
        }
    }
    table.write_to(&args.out)?;
    Ok(Produced {
        outputs: vec![args.out.clone()],
        notes: Vec::new(),
    })
}
