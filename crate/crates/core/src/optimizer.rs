//! Adam and the mini-batch training loop.

use ndarray::Axis;
use serde::{Deserialize, Serialize};

use crate::data::{minibatches, one_hot, Dataset};
use crate::error::{Error, Result};
use crate::network::{argmax_rows, backprop, Network};
use crate::penalties::{add_penalty_subgradient, build_groups, penalty_value, BiasMode, PenaltyKind};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate > 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.epsilon > 0.0;
        if !ok {
            return Err(Error::InvalidConfig(format!("invalid Adam hyperparameters {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(param_count: usize, config: AdamConfig) -> Result<Self> {
        if param_count == 0 {
            return Err(Error::InvalidConfig("Adam needs at least one parameter".into()));
        }
        config.validate()?;
        Ok(AdamState {
            config,
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
            t: 0,
        })
    }

    /// One bias-corrected Adam update of `params` along `grad`, in place.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) -> Result<()> {
        if params.len() != self.m.len() || grad.len() != self.m.len() {
            return Err(Error::ShapeMismatch(format!(
                "Adam state has {} entries, params {}, gradient {}",
                self.m.len(),
                params.len(),
                grad.len()
            )));
        }
        if let Some(i) = grad.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFinite(format!("gradient entry {i} = {}", grad[i])));
        }
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        self.t += 1;
        let t = self.t as i32;
        let correction1 = 1.0 - beta1.powi(t);
        let correction2 = 1.0 - beta2.powi(t);
        for (((p, &g), m), v) in params.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let m_hat = *m / correction1;
            let v_hat = *v / correction2;
            *p -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub penalty: PenaltyKind,
    pub lambda: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    #[serde(default)]
    pub bias_mode: BiasMode,
    /// Post-training magnitude threshold, applied by the pruning stage.
    pub threshold: f64,
    #[serde(default)]
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            penalty: PenaltyKind::SparseGroupLasso,
            lambda: 1e-3,
            epochs: 200,
            batch_size: 300,
            seed: 0,
            bias_mode: BiasMode::PerBias,
            threshold: 1e-3,
            adam: AdamConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidConfig(format!("lambda must be non-negative, got {}", self.lambda)));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidConfig("epochs and batch size must be positive".into()));
        }
        if self.threshold.is_nan() || self.threshold < 0.0 {
            return Err(Error::InvalidConfig(format!("threshold must be non-negative, got {}", self.threshold)));
        }
        self.adam.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EpochStats {
    /// Mean mini-batch data loss plus `λ R(w)` at the end of the epoch.
    pub objective: f64,
    /// Sample-weighted mean of the mini-batch cross-entropies.
    pub data_loss: f64,
    /// Accuracy of the mini-batch predictions made during the epoch.
    pub train_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochStats>,
    /// Largest single-coordinate parameter change over all Adam steps.
    pub max_step: f64,
    /// Samples consumed in each epoch.
    pub samples_per_epoch: Vec<usize>,
}

/// Minimizes mean cross-entropy plus `λ R(w)` with Adam over shuffled
/// mini-batches. Deterministic given the inputs.
pub fn train(net: &Network, train_set: &Dataset, config: &TrainConfig) -> Result<(Network, TrainHistory)> {
    config.validate()?;
    let n = train_set.len();
    if n == 0 {
        return Err(Error::InvalidData("empty training set".into()));
    }
    if train_set.dim() != net.input_dim() || train_set.class_count > net.output_dim() {
        return Err(Error::ShapeMismatch(format!(
            "dataset has {} features / {} classes, network is {:?}",
            train_set.dim(),
            train_set.class_count,
            net.dims()
        )));
    }
    let targets = one_hot(&train_set.labels, net.output_dim())?;
    let partition = build_groups(net, config.bias_mode);
    let mut net = net.clone();
    let mut adam = AdamState::new(net.param_count(), config.adam)?;
    let mut shuffle_seeds = rng::stream(config.seed, rng::STREAM_SHUFFLE);
    let mut history = TrainHistory::default();
    let mut before = vec![0.0; net.param_count()];

    for epoch in 0..config.epochs {
        let epoch_seed = rand::RngCore::next_u64(&mut shuffle_seeds);
        let mut loss_sum = 0.0;
        let mut hits = 0usize;
        let mut seen = 0usize;
        for batch in minibatches(n, config.batch_size, epoch_seed) {
            let x = train_set.features.select(Axis(0), &batch);
            let d = targets.select(Axis(0), &batch);
            let pass = backprop(&net, x.view(), d.view())?;
            let mut grad = pass.gradient;
            if config.lambda > 0.0 {
                add_penalty_subgradient(config.penalty, net.params(), &partition, config.lambda, &mut grad)?;
            }
            loss_sum += pass.loss * batch.len() as f64;
            hits += argmax_rows(pass.trace.output())
                .iter()
                .zip(&batch)
                .filter(|(p, &i)| **p == train_set.labels[i])
                .count();
            seen += batch.len();
            before.copy_from_slice(net.params());
            adam.step(net.params_mut(), &grad)
                .map_err(|e| Error::NonFinite(format!("epoch {epoch}: {e}")))?;
            let step = net
                .params()
                .iter()
                .zip(&before)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            history.max_step = history.max_step.max(step);
        }
        let data_loss = loss_sum / seen as f64;
        let objective = data_loss + config.lambda * penalty_value(config.penalty, net.params(), &partition)?;
        if !objective.is_finite() {
            return Err(Error::NonFinite(format!("objective at epoch {epoch}")));
        }
        history.epochs.push(EpochStats {
            objective,
            data_loss,
            train_accuracy: hits as f64 / seen as f64,
        });
        history.samples_per_epoch.push(seen);
    }
    Ok((net, history))
}
