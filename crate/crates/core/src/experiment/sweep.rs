//! Full-factorial λ × penalty × repeat sweeps.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{map_tasks, run_single, ExperimentConfig, MeanStd};
use crate::data::{normalize_minmax, Dataset};
use crate::error::{Error, Result};
use crate::optimizer::TrainConfig;
use crate::penalties::PenaltyKind;

pub const SWEEP_CSV_HEADER: &str = "penalty,lambda,repeat,test_acc,sparsity,features,hidden_neurons";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub penalty: PenaltyKind,
    pub lambda: f64,
    pub repeat: usize,
    pub seed: u64,
    pub test_accuracy: f64,
    /// Zero fraction over all weight matrices.
    pub sparsity: f64,
    pub features: usize,
    pub hidden_neurons: usize,
}

/// Aggregate of one (penalty, λ) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub penalty: PenaltyKind,
    pub lambda: f64,
    pub repeats: usize,
    pub test_accuracy: MeanStd,
    pub sparsity: MeanStd,
    pub features: MeanStd,
    pub hidden_neurons: MeanStd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    /// Sorted by penalty, then λ ascending, then repeat.
    pub records: Vec<SweepRecord>,
}

fn canonical_order(a: &SweepRecord, b: &SweepRecord) -> std::cmp::Ordering {
    a.penalty
        .cmp(&b.penalty)
        .then(a.lambda.total_cmp(&b.lambda))
        .then(a.repeat.cmp(&b.repeat))
}

/// Trains every (penalty, λ, repeat) combination on the normalized dataset.
/// Repeat `r` uses seed `config.train.seed + r` for every cell, so cells are
/// paired across penalties and λ values.
pub fn lambda_sweep(
    dataset: &Dataset,
    config: &ExperimentConfig,
    lambdas: &[f64],
    penalties: &[PenaltyKind],
) -> Result<SweepResult> {
    config.validate()?;
    if lambdas.is_empty() || penalties.is_empty() {
        return Err(Error::InvalidConfig("a sweep needs at least one λ and one penalty".into()));
    }
    if let Some(l) = lambdas.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
        return Err(Error::InvalidConfig(format!("sweep λ values must be positive, got {l}")));
    }
    let data = normalize_minmax(dataset);
    let mut tasks = Vec::new();
    for &penalty in penalties {
        for &lambda in lambdas {
            for repeat in 0..config.repeats {
                tasks.push((penalty, lambda, repeat));
            }
        }
    }
    let outcomes = map_tasks(tasks, |(penalty, lambda, repeat)| {
        let seed = config.train.seed + repeat as u64;
        let cfg = TrainConfig {
            penalty,
            lambda,
            seed,
            ..config.train.clone()
        };
        let out = run_single(&data, &config.hidden, &cfg, config.test_fraction).map_err(|e| Error::RunFailed {
            seed,
            source: Box::new(e),
        })?;
        let r = out.result;
        Ok(SweepRecord {
            penalty,
            lambda,
            repeat,
            seed,
            test_accuracy: r.test_accuracy,
            sparsity: r.report.total_sparsity,
            features: r.report.selected_feature_count,
            hidden_neurons: r.report.hidden_neurons(),
        })
    });
    let mut records = outcomes.into_iter().collect::<Result<Vec<_>>>()?;
    records.sort_by(canonical_order);
    Ok(SweepResult { records })
}

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(SWEEP_CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            writeln!(
                out,
                "{},{:e},{},{:.6},{:.6},{},{}",
                r.penalty, r.lambda, r.repeat, r.test_accuracy, r.sparsity, r.features, r.hidden_neurons
            )
            .unwrap();
        }
        out
    }

    /// Mean/std per (penalty, λ), in canonical order.
    pub fn cells(&self) -> Vec<SweepCell> {
        let mut groups: BTreeMap<(PenaltyKind, u64), Vec<&SweepRecord>> = BTreeMap::new();
        for r in &self.records {
            // λ > 0, so its bit pattern orders like the value
            groups.entry((r.penalty, r.lambda.to_bits())).or_default().push(r);
        }
        groups
            .into_iter()
            .map(|((penalty, bits), rs)| SweepCell {
                penalty,
                lambda: f64::from_bits(bits),
                repeats: rs.len(),
                test_accuracy: MeanStd::of(rs.iter().map(|r| r.test_accuracy)),
                sparsity: MeanStd::of(rs.iter().map(|r| r.sparsity)),
                features: MeanStd::of(rs.iter().map(|r| r.features as f64)),
                hidden_neurons: MeanStd::of(rs.iter().map(|r| r.hidden_neurons as f64)),
            })
            .collect()
    }

    pub fn cell(&self, penalty: PenaltyKind, lambda: f64) -> Option<SweepCell> {
        self.cells()
            .into_iter()
            .find(|c| c.penalty == penalty && c.lambda == lambda)
    }

    /// JSON summary of every cell.
    pub fn summary_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.cells()).expect("cells serialize");
        s.push('\n');
        s
    }

    /// Aligned text table of every cell.
    pub fn summary_table(&self) -> String {
        let mut out = format!(
            "{:<8}{:>10}{:>8}{:>18}{:>18}{:>16}{:>16}\n",
            "penalty", "lambda", "runs", "test acc", "sparsity", "features", "hidden"
        );
        for c in self.cells() {
            writeln!(
                out,
                "{:<8}{:>10}{:>8}{:>18}{:>18}{:>16}{:>16}",
                c.penalty.name(),
                format!("{:e}", c.lambda),
                c.repeats,
                format!("{:.4} ± {:.4}", c.test_accuracy.mean, c.test_accuracy.std),
                format!("{:.4} ± {:.4}", c.sparsity.mean, c.sparsity.std),
                format!("{:.1} ± {:.1}", c.features.mean, c.features.std),
                format!("{:.1} ± {:.1}", c.hidden_neurons.mean, c.hidden_neurons.std),
            )
            .unwrap();
        }
        out
    }
}
