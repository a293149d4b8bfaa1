//! Post-training thresholding, sparsity and neuron metrics, and structural
//! compaction of neurons whose outgoing weights are all zero.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::Network;

/// Magnitude threshold applied after training.
pub const DEFAULT_THRESHOLD: f64 = 1e-3;

/// Sets every weight and bias with `|v| < threshold` to exactly zero.
pub fn threshold_weights(net: &Network, threshold: f64) -> Network {
    let mut out = net.clone();
    for v in out.params_mut() {
        if v.abs() < threshold {
            *v = 0.0;
        }
    }
    out
}

fn zero_fraction(m: ArrayView2<'_, f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.iter().filter(|&&v| v == 0.0).count() as f64 / m.len() as f64
}

/// Fraction of exact zeros in each weight matrix (biases excluded).
pub fn sparsity(net: &Network) -> Vec<f64> {
    (0..net.layer_count()).map(|k| zero_fraction(net.weights(k))).collect()
}

/// Fraction of exact zeros across all weight matrices together.
pub fn total_sparsity(net: &Network) -> f64 {
    let (zeros, total) = (0..net.layer_count()).fold((0usize, 0usize), |(z, t), k| {
        let w = net.weights(k);
        (z + w.iter().filter(|&&v| v == 0.0).count(), t + w.len())
    });
    zeros as f64 / total as f64
}

/// For layers `0..=H` (input and hidden), whether each neuron has at least
/// one nonzero outgoing weight.
pub fn active_masks(net: &Network) -> Vec<Vec<bool>> {
    (0..net.layer_count())
        .map(|k| {
            net.weights(k)
                .axis_iter(Axis(1))
                .map(|col| col.iter().any(|&v| v != 0.0))
                .collect()
        })
        .collect()
}

/// Active neuron counts for the input layer and every hidden layer.
pub fn active_neurons(net: &Network) -> Vec<usize> {
    active_masks(net)
        .iter()
        .map(|mask| mask.iter().filter(|&&a| a).count())
        .collect()
}

/// Input features with at least one nonzero outgoing weight.
pub fn selected_features(net: &Network) -> Vec<bool> {
    active_masks(net).swap_remove(0)
}

/// Kept neuron indices per layer, input layer first, output layer last.
pub type KeptIndices = Vec<Vec<usize>>;

/// Removes every input feature and hidden neuron whose outgoing weights are
/// all zero. The compacted network computes the same function.
pub fn compact(net: &Network) -> Result<(Network, KeptIndices)> {
    let mut kept: KeptIndices = active_masks(net)
        .iter()
        .map(|mask| mask.iter().enumerate().filter(|(_, &a)| a).map(|(i, _)| i).collect())
        .collect();
    if let Some(layer) = kept.iter().position(Vec::is_empty) {
        return Err(Error::DegenerateNetwork { layer });
    }
    kept.push((0..net.output_dim()).collect());

    let mut weights = Vec::with_capacity(net.layer_count());
    let mut biases = Vec::with_capacity(net.layer_count());
    for k in 0..net.layer_count() {
        let w = net.weights(k);
        let (rows, cols) = (&kept[k + 1], &kept[k]);
        let reduced = Array2::from_shape_fn((rows.len(), cols.len()), |(r, c)| w[[rows[r], cols[c]]]);
        let b = net.bias(k);
        weights.push(reduced);
        biases.push(rows.iter().map(|&r| b[r]).collect::<Array1<f64>>());
    }
    let compacted = Network::from_layers(&weights, &biases)?;
    Ok((compacted, kept))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneReport {
    pub threshold: f64,
    pub original_dims: Vec<usize>,
    /// One entry per weight matrix.
    pub sparsity: Vec<f64>,
    pub total_sparsity: f64,
    /// Input layer followed by every hidden layer.
    pub active_neurons: Vec<usize>,
    pub selected_feature_count: usize,
    pub feature_mask: Vec<bool>,
    /// Layer sizes after compaction, output layer included.
    pub compacted_dims: Vec<usize>,
}

impl PruneReport {
    /// Active neurons summed over the hidden layers.
    pub fn hidden_neurons(&self) -> usize {
        self.active_neurons[1..].iter().sum()
    }
}

pub fn prune_report(before: &Network, after: &Network, threshold: f64) -> Result<PruneReport> {
    if before.dims() != after.dims() {
        return Err(Error::ShapeMismatch(format!(
            "architectures differ: {:?} vs {:?}",
            before.dims(),
            after.dims()
        )));
    }
    let active = active_neurons(after);
    let feature_mask = selected_features(after);
    let mut compacted_dims = active.clone();
    compacted_dims.push(after.output_dim());
    Ok(PruneReport {
        threshold,
        original_dims: before.dims().to_vec(),
        sparsity: sparsity(after),
        total_sparsity: total_sparsity(after),
        selected_feature_count: active[0],
        active_neurons: active,
        feature_mask,
        compacted_dims,
    })
}
