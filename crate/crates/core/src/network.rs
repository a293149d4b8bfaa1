//! Dense feed-forward classifier: ReLU hidden layers, softmax output,
//! cross-entropy loss and exact backpropagated gradients.
//!
//! All parameters live in one flat vector `w`. Layer `k` occupies a
//! contiguous span holding its weight matrix `W_k` (shape `out × in`,
//! row-major) followed by its bias vector `b_k`. With this orientation the
//! outgoing connections of neuron `i` in layer `k` are column `i` of `W_k`.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, ArrayViewMut1, ArrayViewMut2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Floor applied to probabilities before taking their logarithm.
pub const LOG_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Softmax,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Softmax => "softmax",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "relu" => Some(Activation::Relu),
            "softmax" => Some(Activation::Softmax),
            _ => None,
        }
    }
}

/// Offsets of one layer inside the flat parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerSpan {
    pub fan_in: usize,
    pub fan_out: usize,
    pub weight_offset: usize,
    pub bias_offset: usize,
}

impl LayerSpan {
    pub fn weight_len(&self) -> usize {
        self.fan_in * self.fan_out
    }

    pub fn end(&self) -> usize {
        self.bias_offset + self.fan_out
    }

    /// Flat index of `W[row, col]`.
    pub fn weight_index(&self, row: usize, col: usize) -> usize {
        self.weight_offset + row * self.fan_in + col
    }
}

fn layout(dims: &[usize]) -> Vec<LayerSpan> {
    let mut offset = 0;
    dims.windows(2)
        .map(|pair| {
            let span = LayerSpan {
                fan_in: pair[0],
                fan_out: pair[1],
                weight_offset: offset,
                bias_offset: offset + pair[0] * pair[1],
            };
            offset = span.end();
            span
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    dims: Vec<usize>,
    activations: Vec<Activation>,
    spans: Vec<LayerSpan>,
    params: Vec<f64>,
}

fn validate_dims(dims: &[usize]) -> Result<()> {
    if dims.len() < 2 {
        return Err(Error::InvalidArchitecture(format!(
            "need at least an input and an output layer, got {} dims",
            dims.len()
        )));
    }
    if let Some(pos) = dims.iter().position(|&d| d == 0) {
        return Err(Error::InvalidArchitecture(format!("layer {pos} has zero width")));
    }
    Ok(())
}

fn validate_activations(dims: &[usize], activations: &[Activation]) -> Result<()> {
    if activations.len() != dims.len() - 1 {
        return Err(Error::InvalidArchitecture(format!(
            "{} activations for {} weight layers",
            activations.len(),
            dims.len() - 1
        )));
    }
    let (last, hidden) = activations.split_last().expect("non-empty");
    if *last != Activation::Softmax || hidden.contains(&Activation::Softmax) {
        return Err(Error::InvalidArchitecture(
            "softmax must be the single, final activation".into(),
        ));
    }
    Ok(())
}

/// ReLU on every layer but the last, softmax on the last.
pub fn default_activations(layer_count: usize) -> Vec<Activation> {
    let mut acts = vec![Activation::Relu; layer_count.saturating_sub(1)];
    acts.push(Activation::Softmax);
    acts
}

impl Network {
    /// Builds a network from a flat parameter vector laid out as described in
    /// the module docs.
    pub fn from_params(dims: &[usize], activations: &[Activation], params: Vec<f64>) -> Result<Self> {
        validate_dims(dims)?;
        validate_activations(dims, activations)?;
        let spans = layout(dims);
        let expected = spans.last().map_or(0, LayerSpan::end);
        if params.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "expected {expected} parameters for dims {dims:?}, got {}",
                params.len()
            )));
        }
        if let Some(pos) = params.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("parameter {pos}")));
        }
        Ok(Network {
            dims: dims.to_vec(),
            activations: activations.to_vec(),
            spans,
            params,
        })
    }

    /// Builds a network from per-layer matrices (`out × in`) and bias vectors.
    pub fn from_layers(weights: &[Array2<f64>], biases: &[Array1<f64>]) -> Result<Self> {
        if weights.is_empty() || weights.len() != biases.len() {
            return Err(Error::InvalidArchitecture(format!(
                "{} weight matrices and {} bias vectors",
                weights.len(),
                biases.len()
            )));
        }
        let mut dims = vec![weights[0].ncols()];
        let mut params = Vec::new();
        for (k, (w, b)) in weights.iter().zip(biases).enumerate() {
            if w.ncols() != *dims.last().unwrap() || b.len() != w.nrows() {
                return Err(Error::ShapeMismatch(format!(
                    "layer {k}: weight {:?} / bias {} do not chain",
                    w.shape(),
                    b.len()
                )));
            }
            dims.push(w.nrows());
            params.extend(w.iter().copied());
            params.extend(b.iter().copied());
        }
        let acts = default_activations(weights.len());
        Network::from_params(&dims, &acts, params)
    }

    /// Glorot-uniform weights, zero biases. Deterministic in `seed`.
    pub fn init_glorot(dims: &[usize], activations: &[Activation], seed: u64) -> Result<Self> {
        validate_dims(dims)?;
        validate_activations(dims, activations)?;
        let spans = layout(dims);
        let mut params = vec![0.0; spans.last().map_or(0, LayerSpan::end)];
        let mut rng = rng::stream(seed, rng::STREAM_INIT);
        for span in &spans {
            let limit = glorot_limit(span.fan_in, span.fan_out);
            for w in &mut params[span.weight_offset..span.bias_offset] {
                *w = rng.random_range(-limit..=limit);
            }
        }
        Ok(Network {
            dims: dims.to_vec(),
            activations: activations.to_vec(),
            spans,
            params,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn activations(&self) -> &[Activation] {
        &self.activations
    }

    pub fn spans(&self) -> &[LayerSpan] {
        &self.spans
    }

    /// Number of weight layers (`H + 1`).
    pub fn layer_count(&self) -> usize {
        self.spans.len()
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().unwrap()
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn into_params(self) -> Vec<f64> {
        self.params
    }

    pub fn weights(&self, layer: usize) -> ArrayView2<'_, f64> {
        let s = self.spans[layer];
        ArrayView2::from_shape((s.fan_out, s.fan_in), &self.params[s.weight_offset..s.bias_offset])
            .expect("span matches shape")
    }

    pub fn weights_mut(&mut self, layer: usize) -> ArrayViewMut2<'_, f64> {
        let s = self.spans[layer];
        ArrayViewMut2::from_shape(
            (s.fan_out, s.fan_in),
            &mut self.params[s.weight_offset..s.bias_offset],
        )
        .expect("span matches shape")
    }

    pub fn bias(&self, layer: usize) -> ArrayView1<'_, f64> {
        let s = self.spans[layer];
        ArrayView1::from(&self.params[s.bias_offset..s.end()])
    }

    pub fn bias_mut(&mut self, layer: usize) -> ArrayViewMut1<'_, f64> {
        let s = self.spans[layer];
        ArrayViewMut1::from(&mut self.params[s.bias_offset..s.end()])
    }

    /// Class probabilities for every row of `x`.
    pub fn predict_proba(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        let mut trace = forward(self, x)?;
        Ok(trace.activations.pop().expect("at least one layer"))
    }

    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Vec<usize>> {
        Ok(argmax_rows(self.predict_proba(x)?.view()))
    }

    /// Fraction of rows whose arg-max class equals the label.
    pub fn accuracy(&self, x: ArrayView2<'_, f64>, labels: &[usize]) -> Result<f64> {
        if labels.len() != x.nrows() {
            return Err(Error::ShapeMismatch(format!(
                "{} labels for {} samples",
                labels.len(),
                x.nrows()
            )));
        }
        if labels.is_empty() {
            return Ok(0.0);
        }
        let predicted = self.predict(x)?;
        let hits = predicted.iter().zip(labels).filter(|(p, l)| p == l).count();
        Ok(hits as f64 / labels.len() as f64)
    }
}

pub fn glorot_limit(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

pub fn relu(s: f64) -> f64 {
    s.max(0.0)
}

/// Softmax with max-subtraction.
pub fn softmax(s: ArrayView1<'_, f64>) -> Array1<f64> {
    let mut out = s.to_owned();
    softmax_in_place(out.view_mut());
    out
}

fn softmax_in_place(mut row: ArrayViewMut1<'_, f64>) {
    let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    row.mapv_inplace(|v| (v - max).exp());
    let sum = row.sum();
    row.mapv_inplace(|v| v / sum);
}

/// `-Σ d_i log p_i`, with `p` clamped below at [`LOG_CLAMP`].
pub fn cross_entropy(target: ArrayView1<'_, f64>, probs: ArrayView1<'_, f64>) -> Result<f64> {
    if target.len() != probs.len() {
        return Err(Error::ShapeMismatch(format!(
            "target has {} classes, prediction {}",
            target.len(),
            probs.len()
        )));
    }
    Ok(-target
        .iter()
        .zip(probs)
        .filter(|(d, _)| **d != 0.0)
        .map(|(d, p)| d * p.max(LOG_CLAMP).ln())
        .sum::<f64>())
}

/// Mean cross-entropy over the rows of a batch.
pub fn mean_cross_entropy(targets: ArrayView2<'_, f64>, probs: ArrayView2<'_, f64>) -> Result<f64> {
    if targets.dim() != probs.dim() {
        return Err(Error::ShapeMismatch(format!(
            "targets {:?} vs predictions {:?}",
            targets.dim(),
            probs.dim()
        )));
    }
    let n = targets.nrows();
    if n == 0 {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for (d, p) in targets.outer_iter().zip(probs.outer_iter()) {
        total += cross_entropy(d, p)?;
    }
    Ok(total / n as f64)
}

pub fn argmax_rows(m: ArrayView2<'_, f64>) -> Vec<usize> {
    m.outer_iter()
        .map(|row| {
            let mut best = 0;
            for (i, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = i;
                }
            }
            best
        })
        .collect()
}

/// Per-layer pre-activations and activations of one batch (rows = samples).
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    /// `s_k = h_k W_kᵀ + b_k`, one entry per weight layer.
    pub pre_activations: Vec<Array2<f64>>,
    /// `h_1 = x`, `h_{k+1} = g_k(s_k)`; the last entry holds class probabilities.
    pub activations: Vec<Array2<f64>>,
}

impl ForwardTrace {
    pub fn output(&self) -> ArrayView2<'_, f64> {
        self.activations.last().expect("non-empty trace").view()
    }
}

pub fn forward(net: &Network, x: ArrayView2<'_, f64>) -> Result<ForwardTrace> {
    if x.ncols() != net.input_dim() {
        return Err(Error::ShapeMismatch(format!(
            "batch has {} features, network expects {}",
            x.ncols(),
            net.input_dim()
        )));
    }
    let mut pre_activations = Vec::with_capacity(net.layer_count());
    let mut activations = Vec::with_capacity(net.layer_count() + 1);
    activations.push(x.to_owned());
    for k in 0..net.layer_count() {
        let h = activations.last().unwrap();
        let mut s = h.dot(&net.weights(k).t());
        s += &net.bias(k);
        let mut out = s.clone();
        match net.activations[k] {
            Activation::Relu => out.mapv_inplace(relu),
            Activation::Softmax => out.outer_iter_mut().for_each(softmax_in_place),
        }
        pre_activations.push(s);
        activations.push(out);
    }
    Ok(ForwardTrace {
        pre_activations,
        activations,
    })
}

/// Result of one forward/backward pass over a batch.
#[derive(Debug, Clone)]
pub struct Backprop {
    pub loss: f64,
    pub gradient: Vec<f64>,
    pub trace: ForwardTrace,
}

fn check_targets(net: &Network, x: ArrayView2<'_, f64>, targets: ArrayView2<'_, f64>) -> Result<()> {
    if targets.nrows() != x.nrows() || targets.ncols() != net.output_dim() {
        return Err(Error::ShapeMismatch(format!(
            "targets {:?} for {} samples and {} classes",
            targets.dim(),
            x.nrows(),
            net.output_dim()
        )));
    }
    Ok(())
}

/// Mean cross-entropy of the batch and its exact gradient with respect to
/// every parameter, in the flat layout of [`Network::params`].
pub fn backprop(net: &Network, x: ArrayView2<'_, f64>, targets: ArrayView2<'_, f64>) -> Result<Backprop> {
    check_targets(net, x, targets)?;
    let n = x.nrows();
    if n == 0 {
        return Err(Error::InvalidData("empty batch".into()));
    }
    let trace = forward(net, x)?;
    let probs = trace.output();
    if probs.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("network output".into()));
    }
    let loss = mean_cross_entropy(targets, probs)?;

    let mut gradient = vec![0.0; net.param_count()];
    // softmax + cross-entropy: dL/ds = p - d
    let mut delta = (&probs - &targets) / n as f64;
    for k in (0..net.layer_count()).rev() {
        let span = net.spans[k];
        let h = &trace.activations[k];
        let grad_w = delta.t().dot(h);
        let grad_b = delta.sum_axis(Axis(0));
        gradient[span.weight_offset..span.bias_offset]
            .iter_mut()
            .zip(grad_w.iter())
            .for_each(|(g, v)| *g = *v);
        gradient[span.bias_offset..span.end()]
            .iter_mut()
            .zip(grad_b.iter())
            .for_each(|(g, v)| *g = *v);
        if k > 0 {
            let mut upstream = delta.dot(&net.weights(k));
            debug_assert_eq!(net.activations[k - 1], Activation::Relu);
            upstream.zip_mut_with(&trace.pre_activations[k - 1], |u, &s| {
                if s <= 0.0 {
                    *u = 0.0;
                }
            });
            delta = upstream;
        }
    }
    if gradient.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("gradient".into()));
    }
    Ok(Backprop {
        loss,
        gradient,
        trace,
    })
}

/// Gradient of the mean cross-entropy data term.
pub fn data_loss_gradient(net: &Network, x: ArrayView2<'_, f64>, targets: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
    backprop(net, x, targets).map(|b| b.gradient)
}

pub fn data_loss(net: &Network, x: ArrayView2<'_, f64>, targets: ArrayView2<'_, f64>) -> Result<f64> {
    check_targets(net, x, targets)?;
    let trace = forward(net, x)?;
    mean_cross_entropy(targets, trace.output())
}
