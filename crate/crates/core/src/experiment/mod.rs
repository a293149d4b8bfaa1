//! Repeated, seeded experiment runs: split, train, threshold, measure.

use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::{normalize_minmax, split, Dataset, SplitSpec};
use crate::error::{Error, Result};
use crate::network::{default_activations, Network};
use crate::optimizer::{train, TrainConfig, TrainHistory};
use crate::penalties::PenaltyKind;
use crate::pruning::{prune_report, threshold_weights, PruneReport};

pub mod featmap;
pub mod model_io;
pub mod report;
pub mod sweep;

pub use featmap::{feature_intensities, feature_map_pixels, write_feature_map};
pub use model_io::{deserialize_model, parse_model, read_model, render_model, serialize_model, ModelMetadata};
pub use report::{render_report, ReportColumn};
pub use sweep::{lambda_sweep, SweepRecord, SweepResult};

/// λ grid 10⁻¹ … 10⁻⁵.
pub const DEFAULT_LAMBDAS: [f64; 5] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Hidden layer widths; input and output sizes come from the dataset.
    pub hidden: Vec<usize>,
    pub train: TrainConfig,
    /// Run `r` uses seed `train.seed + r`.
    pub repeats: usize,
    pub test_fraction: f64,
    /// λ grid used by sweeps.
    #[serde(default = "default_lambdas")]
    pub lambdas: Vec<f64>,
}

fn default_lambdas() -> Vec<f64> {
    DEFAULT_LAMBDAS.to_vec()
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Preset::Digits.config()
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.repeats == 0 {
            return Err(Error::InvalidConfig("repeats must be at least 1".into()));
        }
        if self.hidden.contains(&0) {
            return Err(Error::InvalidConfig("hidden layers must be non-empty".into()));
        }
        if let Some(l) = self.lambdas.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
            return Err(Error::InvalidConfig(format!("sweep λ values must be positive, got {l}")));
        }
        self.train.validate()
    }

    pub fn dims_for(&self, dataset: &Dataset) -> Vec<usize> {
        let mut dims = vec![dataset.dim()];
        dims.extend(&self.hidden);
        dims.push(dataset.class_count);
        dims
    }
}

/// Architectures and hyperparameters of the bundled benchmark setups.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Digits,
    Ssd,
    Mnist,
    Cover,
}

impl Preset {
    pub fn config(self) -> ExperimentConfig {
        let (hidden, lambda, batch_size, epochs) = match self {
            Preset::Digits => (vec![40, 20], 1e-3, 300, 200),
            Preset::Ssd => (vec![40, 40, 30], 1e-4, 500, 100),
            Preset::Mnist => (vec![400, 300, 100], 1e-4, 400, 100),
            Preset::Cover => (vec![50, 50, 20], 1e-4, 1000, 100),
        };
        ExperimentConfig {
            hidden,
            train: TrainConfig {
                penalty: PenaltyKind::SparseGroupLasso,
                lambda,
                epochs,
                batch_size,
                ..TrainConfig::default()
            },
            repeats: 25,
            test_fraction: 0.25,
            lambdas: default_lambdas(),
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "digits" => Ok(Preset::Digits),
            "ssd" => Ok(Preset::Ssd),
            "mnist" => Ok(Preset::Mnist),
            "cover" => Ok(Preset::Cover),
            _ => Err(Error::InvalidConfig(format!(
                "unknown preset {s:?} (expected digits, ssd, mnist or cover)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub seed: u64,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub report: PruneReport,
    pub seconds: f64,
}

/// Everything one run produces, including the thresholded network.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub result: RunResult,
    pub network: Network,
    pub history: TrainHistory,
}

/// One run on an already-normalized dataset: split with `train.seed`,
/// Glorot init, train, threshold at `train.threshold`, measure.
pub fn run_single(dataset: &Dataset, hidden: &[usize], train_cfg: &TrainConfig, test_fraction: f64) -> Result<RunOutput> {
    let seed = train_cfg.seed;
    let (train_set, test_set) = split(dataset, SplitSpec { test_fraction, seed })?;
    let mut dims = vec![dataset.dim()];
    dims.extend(hidden);
    dims.push(dataset.class_count);
    let init = Network::init_glorot(&dims, &default_activations(dims.len() - 1), seed)?;

    let start = Instant::now();
    let (trained, history) = train(&init, &train_set, train_cfg)?;
    let seconds = start.elapsed().as_secs_f64();

    let pruned = threshold_weights(&trained, train_cfg.threshold);
    let report = prune_report(&trained, &pruned, train_cfg.threshold)?;
    let result = RunResult {
        seed,
        train_accuracy: pruned.accuracy(train_set.features.view(), &train_set.labels)?,
        test_accuracy: pruned.accuracy(test_set.features.view(), &test_set.labels)?,
        report,
        seconds,
    };
    Ok(RunOutput {
        result,
        network: pruned,
        history,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let values: Vec<f64> = values.into_iter().collect();
        if values.is_empty() {
            return MeanStd::default();
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        MeanStd { mean, std: var.sqrt() }
    }
}

/// Mean and spread of every metric over the repeats of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub repeats: usize,
    pub train_accuracy: MeanStd,
    pub test_accuracy: MeanStd,
    pub seconds: MeanStd,
    /// Per weight matrix.
    pub sparsity: Vec<MeanStd>,
    pub total_sparsity: MeanStd,
    /// Input layer and each hidden layer.
    pub active_neurons: Vec<MeanStd>,
    pub selected_features: MeanStd,
    pub hidden_neurons: MeanStd,
}

impl ExperimentSummary {
    pub fn from_runs(runs: &[RunResult]) -> Self {
        let per_entry = |f: &dyn Fn(&RunResult) -> &[f64]| -> Vec<MeanStd> {
            let width = runs.first().map_or(0, |r| f(r).len());
            (0..width).map(|i| MeanStd::of(runs.iter().map(|r| f(r)[i]))).collect()
        };
        let neurons: Vec<Vec<f64>> = runs
            .iter()
            .map(|r| r.report.active_neurons.iter().map(|&n| n as f64).collect())
            .collect();
        let width = neurons.first().map_or(0, Vec::len);
        ExperimentSummary {
            repeats: runs.len(),
            train_accuracy: MeanStd::of(runs.iter().map(|r| r.train_accuracy)),
            test_accuracy: MeanStd::of(runs.iter().map(|r| r.test_accuracy)),
            seconds: MeanStd::of(runs.iter().map(|r| r.seconds)),
            sparsity: per_entry(&|r| &r.report.sparsity),
            total_sparsity: MeanStd::of(runs.iter().map(|r| r.report.total_sparsity)),
            active_neurons: (0..width).map(|i| MeanStd::of(neurons.iter().map(|n| n[i]))).collect(),
            selected_features: MeanStd::of(runs.iter().map(|r| r.report.selected_feature_count as f64)),
            hidden_neurons: MeanStd::of(runs.iter().map(|r| r.report.hidden_neurons() as f64)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub runs: Vec<RunResult>,
    pub summary: ExperimentSummary,
}

#[cfg(feature = "parallel")]
pub(crate) fn map_tasks<T, R, F>(tasks: Vec<T>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    tasks.into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_tasks<T, R, F>(tasks: Vec<T>, f: F) -> Vec<R>
where
    F: Fn(T) -> R,
{
    tasks.into_iter().map(f).collect()
}

/// Runs `config.repeats` independent repeats on `dataset`, which is min-max
/// normalized first. Any failing run fails the experiment.
pub fn run_experiment(dataset: &Dataset, config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let data = normalize_minmax(dataset);
    let tasks: Vec<TrainConfig> = (0..config.repeats as u64)
        .map(|r| TrainConfig {
            seed: config.train.seed + r,
            ..config.train.clone()
        })
        .collect();
    let outcomes = map_tasks(tasks, |cfg| {
        run_single(&data, &config.hidden, &cfg, config.test_fraction)
            .map(|out| out.result)
            .map_err(|e| Error::RunFailed {
                seed: cfg.seed,
                source: Box::new(e),
            })
    });
    let runs = outcomes.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(ExperimentResult {
        config: config.clone(),
        summary: ExperimentSummary::from_runs(&runs),
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_std() {
        let m = MeanStd::of([2.0]);
        assert_eq!(m, MeanStd { mean: 2.0, std: 0.0 });
        let m = MeanStd::of([1.0, 3.0]);
        assert_eq!(m, MeanStd { mean: 2.0, std: 1.0 });
    }

    #[test]
    fn presets() {
        let d = Preset::Digits.config();
        assert_eq!(d.hidden, vec![40, 20]);
        assert_eq!((d.train.epochs, d.train.batch_size, d.train.threshold), (200, 300, 1e-3));
        assert_eq!(d.repeats, 25);
        assert_eq!(d.test_fraction, 0.25);
        assert_eq!(Preset::Mnist.config().hidden, vec![400, 300, 100]);
        assert_eq!(Preset::Ssd.config().train.batch_size, 500);
        assert_eq!(Preset::Cover.config().train.lambda, 1e-4);
        assert!("imagenet".parse::<Preset>().is_err());
    }

    #[test]
    fn invalid_configs() {
        let mut c = ExperimentConfig::default();
        c.repeats = 0;
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::default();
        c.lambdas = vec![0.0];
        assert!(c.validate().is_err());
    }
}
