use std::path::PathBuf;

use alphaloss::AlphaParam;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

/// Environment variable holding the default MNIST directory.
pub const MNIST_DIR_ENV: &str = "ALPHALOSS_MNIST_DIR";

#[derive(Debug, Parser)]
#[command(name = "alphaloss", version, about = "Alpha-loss experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Train one logistic-regression model on MNIST 1-vs-7.
    Train(TrainArgs),
    /// Pick the learning rate per alpha on the validation split.
    Sweep(SweepArgs),
    /// Conditional-risk infima and calibration gaps over a posterior grid.
    Calibration(CalibrationArgs),
    /// Risk-gap scaling on synthetic symmetric data.
    Landscape(LandscapeArgs),
    /// Margin loss and its derivatives on a grid of margins.
    Losscurves(LossCurvesArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Train(_) => "train",
            Command::Sweep(_) => "sweep",
            Command::Calibration(_) => "calibration",
            Command::Landscape(_) => "landscape",
            Command::Losscurves(_) => "losscurves",
        }
    }

    pub fn out(&self) -> &PathBuf {
        match self {
            Command::Train(a) => &a.out,
            Command::Sweep(a) => &a.out,
            Command::Calibration(a) => &a.out,
            Command::Landscape(a) => &a.out,
            Command::Losscurves(a) => &a.out,
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Command::Train(a) => Some(a.seed),
            Command::Sweep(a) => Some(a.seed),
            Command::Landscape(a) => Some(a.seed),
            Command::Calibration(_) | Command::Losscurves(_) => None,
        }
    }
}

fn parse_alpha(s: &str) -> Result<AlphaParam, String> {
    s.parse().map_err(|e: alphaloss::Error| e.to_string())
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MnistArgs {
    /// Directory with the four IDX files (optionally .gz).
    #[arg(long, env = MNIST_DIR_ENV, default_value = "data/mnist")]
    pub mnist_dir: PathBuf,
    #[arg(long, default_value_t = alphaloss::TrainConfig::DEFAULT_EPOCHS)]
    pub epochs: usize,
    #[arg(long, default_value_t = alphaloss::TrainConfig::DEFAULT_INIT_SCALE)]
    pub init_scale: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TrainArgs {
    /// Real alpha >= 1, or `inf`.
    #[arg(long, value_parser = parse_alpha)]
    #[serde(serialize_with = "ser_alpha")]
    pub alpha: AlphaParam,
    #[arg(long)]
    pub lr: f64,
    /// Seeds both the data split and the initial weights.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(flatten)]
    pub mnist: MnistArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepArgs {
    #[arg(long, value_delimiter = ',', value_parser = parse_alpha, default_value = "1,1.1,1.2,1.5,2")]
    #[serde(serialize_with = "ser_alphas")]
    pub alphas: Vec<AlphaParam>,
    #[arg(long, value_delimiter = ',', default_value = "1.0,1.3,1.9,2.0")]
    pub lr_grid: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(flatten)]
    pub mnist: MnistArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CalibrationArgs {
    #[arg(long, value_delimiter = ',', value_parser = parse_alpha, default_value = "1,1.5,2,4,inf")]
    #[serde(serialize_with = "ser_alphas")]
    pub alphas: Vec<AlphaParam>,
    /// Posteriors in (0, 1); 0.5 is skipped.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0.05,0.1,0.15,0.2,0.25,0.3,0.35,0.4,0.45,0.55,0.6,0.65,0.7,0.75,0.8,0.85,0.9,0.95"
    )]
    pub eta_grid: Vec<f64>,
    #[arg(long, default_value_t = alphaloss::calibration::DEFAULT_F_RANGE)]
    pub f_range: f64,
    #[arg(long, default_value_t = alphaloss::calibration::DEFAULT_GRID_STEP)]
    pub grid_step: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LandscapeArgs {
    #[arg(long, value_delimiter = ',', value_parser = parse_alpha, default_value = "2")]
    #[serde(serialize_with = "ser_alphas")]
    pub alphas: Vec<AlphaParam>,
    #[arg(long, value_delimiter = ',', default_value = "100,1000,10000")]
    pub ns: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long, default_value_t = 5)]
    pub dim: usize,
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    #[arg(long, default_value_t = 0.3)]
    pub mean_norm: f64,
    #[arg(long, default_value_t = 0.3)]
    pub noise: f64,
    #[arg(long, default_value_t = alphaloss::landscape::DEFAULT_HOLDOUT)]
    pub holdout: usize,
    #[arg(long, default_value_t = 1.0)]
    pub lr: f64,
    #[arg(long, default_value_t = 300)]
    pub epochs: usize,
    #[arg(long, default_value_t = alphaloss::landscape::DEFAULT_DELTA)]
    pub delta: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Defaults to `<out stem>_summary.csv` next to `--out`.
    #[arg(long)]
    pub summary_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LossCurvesArgs {
    #[arg(long, value_delimiter = ',', value_parser = parse_alpha, default_value = "1,1.5,2,4,inf")]
    #[serde(serialize_with = "ser_alphas")]
    pub alphas: Vec<AlphaParam>,
    #[arg(long, default_value_t = -10.0, allow_hyphen_values = true)]
    pub z_min: f64,
    #[arg(long, default_value_t = 10.0, allow_hyphen_values = true)]
    pub z_max: f64,
    #[arg(long, default_value_t = 201)]
    pub steps: usize,
    #[arg(long)]
    pub out: PathBuf,
}

fn ser_alpha<S: serde::Serializer>(a: &AlphaParam, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&a.to_string())
}

fn ser_alphas<S: serde::Serializer>(a: &[AlphaParam], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(a.iter().map(|a| a.to_string()))
}
