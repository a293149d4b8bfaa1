//! WebAssembly bindings for the browser demo.
//!
//! Every exported call returns a JSON string; errors come back as
//! `{"error": "..."}` so the page never has to catch exceptions.

use groupsparse::data::{bundled_digits, normalize_minmax, split, synth_blobs, Dataset, SplitSpec};
use groupsparse::experiment::featmap::{feature_intensities, feature_map_pixels};
use groupsparse::network::{default_activations, Network};
use groupsparse::optimizer::train;
use groupsparse::pruning::{prune_report, threshold_weights};
use groupsparse::{PenaltyKind, PruneReport, Result, TrainConfig};
use serde::Serialize;
use wasm_bindgen::prelude::*;

pub const DIGITS_HIDDEN: [usize; 2] = [40, 20];
pub const BLOBS_INFORMATIVE: usize = 4;
pub const BLOBS_NOISE: usize = 16;

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub penalty: String,
    pub lambda: f64,
    pub threshold: f64,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub report: PruneReport,
    /// Grayscale feature map, row-major, 255 marks a removed input.
    pub pixels: Vec<u8>,
    pub image_shape: Option<(usize, usize)>,
    /// Objective after each epoch.
    pub objective: Vec<f64>,
}

/// A trained network kept around so it can be re-pruned without retraining.
pub struct Trained {
    penalty: PenaltyKind,
    lambda: f64,
    net: Network,
    train_set: Dataset,
    test_set: Dataset,
    objective: Vec<f64>,
}

impl Trained {
    pub fn fit(data: &Dataset, hidden: &[usize], cfg: &TrainConfig) -> Result<Self> {
        let (train_set, test_set) = split(data, SplitSpec { test_fraction: 0.25, seed: cfg.seed })?;
        let mut dims = vec![data.dim()];
        dims.extend(hidden);
        dims.push(data.class_count);
        let init = Network::init_glorot(&dims, &default_activations(dims.len() - 1), cfg.seed)?;
        let (net, history) = train(&init, &train_set, cfg)?;
        Ok(Trained {
            penalty: cfg.penalty,
            lambda: cfg.lambda,
            net,
            train_set,
            test_set,
            objective: history.epochs.iter().map(|e| e.objective).collect(),
        })
    }

    pub fn summary(&self, threshold: f64) -> Result<Summary> {
        let pruned = threshold_weights(&self.net, threshold);
        Ok(Summary {
            penalty: self.penalty.name().into(),
            lambda: self.lambda,
            threshold,
            train_accuracy: pruned.accuracy(self.train_set.features.view(), &self.train_set.labels)?,
            test_accuracy: pruned.accuracy(self.test_set.features.view(), &self.test_set.labels)?,
            report: prune_report(&self.net, &pruned, threshold)?,
            pixels: feature_map_pixels(&feature_intensities(&pruned)),
            image_shape: self.train_set.image_shape,
            objective: self.objective.clone(),
        })
    }
}

pub fn demo_config(penalty: &str, lambda: f64, epochs: usize, batch_size: usize, seed: u64) -> Result<TrainConfig> {
    let cfg = TrainConfig {
        penalty: penalty.parse()?,
        lambda,
        epochs,
        batch_size,
        seed,
        ..TrainConfig::default()
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn digits_data() -> Dataset {
    normalize_minmax(&bundled_digits())
}

pub fn blobs_data(seed: u64) -> Result<Dataset> {
    synth_blobs(150, BLOBS_INFORMATIVE, BLOBS_NOISE, 4, seed)
}

fn to_json<T: Serialize>(r: Result<T>) -> String {
    match r {
        Ok(v) => serde_json::to_string(&v).expect("summary serializes"),
        Err(e) => serde_json::json!({ "error": e.to_string() }).to_string(),
    }
}

/// Holds the most recently trained network between calls.
#[wasm_bindgen]
#[derive(Default)]
pub struct Demo {
    last: Option<Trained>,
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new() -> Demo {
        Demo::default()
    }

    /// Trains a 64-40-20-10 network on the 8×8 digits.
    pub fn train_digits(&mut self, penalty: &str, lambda: f64, epochs: u32, seed: u32) -> String {
        let cfg = demo_config(penalty, lambda, epochs as usize, 300, u64::from(seed));
        to_json(cfg.and_then(|c| self.fit(&digits_data(), &DIGITS_HIDDEN, &c)))
    }

    /// Trains a 20-20-10-4 network on blobs whose first 4 inputs carry the
    /// class and whose other 16 are noise.
    pub fn train_blobs(&mut self, penalty: &str, lambda: f64, epochs: u32, seed: u32) -> String {
        let cfg = demo_config(penalty, lambda, epochs as usize, 50, u64::from(seed));
        let data = blobs_data(u64::from(seed));
        to_json(cfg.and_then(|c| self.fit(&data?, &[20, 10], &c)))
    }

    /// Re-thresholds the last trained network at `threshold`.
    pub fn prune(&self, threshold: f64) -> String {
        let result = match &self.last {
            Some(t) if threshold >= 0.0 && threshold.is_finite() => t.summary(threshold),
            Some(_) => Err(groupsparse::Error::InvalidConfig(format!("bad threshold {threshold}"))),
            None => Err(groupsparse::Error::InvalidConfig("train a network first".into())),
        };
        to_json(result)
    }
}

impl Demo {
    fn fit(&mut self, data: &Dataset, hidden: &[usize], cfg: &TrainConfig) -> Result<Summary> {
        let trained = Trained::fit(data, hidden, cfg)?;
        let summary = trained.summary(cfg.threshold)?;
        self.last = Some(trained);
        Ok(summary)
    }
}
