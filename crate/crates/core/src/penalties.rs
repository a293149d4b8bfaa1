//! Regularizers over the flat parameter vector and the neuron-level group
//! partition used by the group penalties.
//!
//! Three group families cover every parameter exactly once:
//! - input groups: outgoing weights of each input feature (column of `W_1`),
//! - hidden groups: outgoing weights of each hidden neuron (column of `W_k`, `k ≥ 2`),
//! - bias groups: one scalar per bias, or one vector per layer.

use std::fmt;
use std::str::FromStr;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{backprop, data_loss, Network};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PenaltyKind {
    /// Squared Euclidean norm (weight decay).
    #[serde(rename = "l2")]
    L2,
    /// Sum of absolute values (Lasso).
    #[serde(rename = "l1")]
    L1,
    /// Σ_g √|g| ‖g‖₂ over the group partition.
    #[serde(rename = "gl")]
    GroupLasso,
    /// Group Lasso plus L1, sharing one coefficient.
    #[serde(rename = "sgl")]
    SparseGroupLasso,
}

impl PenaltyKind {
    pub const ALL: [PenaltyKind; 4] = [
        PenaltyKind::L2,
        PenaltyKind::L1,
        PenaltyKind::GroupLasso,
        PenaltyKind::SparseGroupLasso,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PenaltyKind::L2 => "l2",
            PenaltyKind::L1 => "l1",
            PenaltyKind::GroupLasso => "gl",
            PenaltyKind::SparseGroupLasso => "sgl",
        }
    }

    pub fn uses_groups(self) -> bool {
        matches!(self, PenaltyKind::GroupLasso | PenaltyKind::SparseGroupLasso)
    }
}

impl fmt::Display for PenaltyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PenaltyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PenaltyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown penalty {s:?} (expected l2, l1, gl or sgl)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GroupKind {
    Input,
    Hidden,
    Bias,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum BiasMode {
    /// Every bias scalar is its own group.
    #[default]
    #[serde(rename = "per-bias")]
    PerBias,
    /// One group per layer bias vector.
    #[serde(rename = "per-layer")]
    PerLayer,
}

impl BiasMode {
    pub fn name(self) -> &'static str {
        match self {
            BiasMode::PerBias => "per-bias",
            BiasMode::PerLayer => "per-layer",
        }
    }
}

impl FromStr for BiasMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per-bias" => Ok(BiasMode::PerBias),
            "per-layer" => Ok(BiasMode::PerLayer),
            _ => Err(Error::InvalidConfig(format!(
                "unknown bias grouping {s:?} (expected per-bias or per-layer)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    pub kind: GroupKind,
    pub members: Vec<usize>,
    /// √|g|
    pub weight: f64,
}

impl Group {
    pub fn new(kind: GroupKind, members: Vec<usize>) -> Self {
        let weight = (members.len() as f64).sqrt();
        Group { kind, members, weight }
    }

    pub fn norm(&self, w: &[f64]) -> f64 {
        self.members.iter().map(|&i| w[i] * w[i]).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupPartition {
    groups: Vec<Group>,
    bias_mode: BiasMode,
    param_count: usize,
}

impl GroupPartition {
    /// Validates that `groups` are non-empty, disjoint, and together cover
    /// `0..param_count`.
    pub fn new(groups: Vec<Group>, bias_mode: BiasMode, param_count: usize) -> Result<Self> {
        let mut seen = vec![false; param_count];
        for (g, group) in groups.iter().enumerate() {
            if group.members.is_empty() {
                return Err(Error::InvalidConfig(format!("group {g} is empty")));
            }
            for &i in &group.members {
                match seen.get_mut(i) {
                    None => {
                        return Err(Error::ShapeMismatch(format!(
                            "group {g} references index {i} beyond {param_count} parameters"
                        )))
                    }
                    Some(true) => {
                        return Err(Error::InvalidConfig(format!("index {i} belongs to two groups")))
                    }
                    Some(slot) => *slot = true,
                }
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidConfig(format!("index {i} is not covered by any group")));
        }
        Ok(GroupPartition {
            groups,
            bias_mode,
            param_count,
        })
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    pub fn bias_mode(&self) -> BiasMode {
        self.bias_mode
    }

    pub fn param_count(&self) -> usize {
        self.param_count
    }

    /// Total number of groups `G`.
    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn count(&self, kind: GroupKind) -> usize {
        self.groups.iter().filter(|g| g.kind == kind).count()
    }

    fn check(&self, w: &[f64]) -> Result<()> {
        if w.len() != self.param_count {
            return Err(Error::ShapeMismatch(format!(
                "partition covers {} parameters, vector has {}",
                self.param_count,
                w.len()
            )));
        }
        Ok(())
    }
}

pub fn build_groups(net: &Network, bias_mode: BiasMode) -> GroupPartition {
    let spans = net.spans();
    let mut groups = Vec::new();
    for (k, span) in spans.iter().enumerate() {
        let kind = if k == 0 { GroupKind::Input } else { GroupKind::Hidden };
        for col in 0..span.fan_in {
            let members = (0..span.fan_out).map(|row| span.weight_index(row, col)).collect();
            groups.push(Group::new(kind, members));
        }
    }
    for span in spans {
        match bias_mode {
            BiasMode::PerBias => {
                groups.extend((span.bias_offset..span.end()).map(|i| Group::new(GroupKind::Bias, vec![i])))
            }
            BiasMode::PerLayer => groups.push(Group::new(GroupKind::Bias, (span.bias_offset..span.end()).collect())),
        }
    }
    GroupPartition::new(groups, bias_mode, net.param_count()).expect("network groups form a partition")
}

fn group_lasso(w: &[f64], partition: &GroupPartition) -> f64 {
    partition.groups.iter().map(|g| g.weight * g.norm(w)).sum()
}

/// Value of `R(w)` for the chosen penalty. The partition is only consulted by
/// the group penalties, but its size is always checked against `w`.
pub fn penalty_value(kind: PenaltyKind, w: &[f64], partition: &GroupPartition) -> Result<f64> {
    partition.check(w)?;
    Ok(match kind {
        PenaltyKind::L2 => w.iter().map(|v| v * v).sum(),
        PenaltyKind::L1 => w.iter().map(|v| v.abs()).sum(),
        PenaltyKind::GroupLasso => group_lasso(w, partition),
        PenaltyKind::SparseGroupLasso => group_lasso(w, partition) + w.iter().map(|v| v.abs()).sum::<f64>(),
    })
}

/// `sign(v)` with `sign(0) = 0`.
fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn add_group_lasso_subgradient(w: &[f64], partition: &GroupPartition, scale: f64, out: &mut [f64]) {
    for g in &partition.groups {
        let norm = g.norm(w);
        if norm > 0.0 {
            let factor = scale * g.weight;
            for &i in &g.members {
                out[i] += factor * (w[i] / norm);
            }
        }
    }
}

/// Adds `scale · ∂R(w)` into `out`; zero is chosen wherever `R` is not differentiable.
pub fn add_penalty_subgradient(
    kind: PenaltyKind,
    w: &[f64],
    partition: &GroupPartition,
    scale: f64,
    out: &mut [f64],
) -> Result<()> {
    partition.check(w)?;
    if out.len() != w.len() {
        return Err(Error::ShapeMismatch(format!(
            "output buffer has {} entries for {} parameters",
            out.len(),
            w.len()
        )));
    }
    match kind {
        PenaltyKind::L2 => out.iter_mut().zip(w).for_each(|(o, v)| *o += scale * 2.0 * v),
        PenaltyKind::L1 => out.iter_mut().zip(w).for_each(|(o, v)| *o += scale * sign(*v)),
        PenaltyKind::GroupLasso => add_group_lasso_subgradient(w, partition, scale, out),
        PenaltyKind::SparseGroupLasso => {
            add_group_lasso_subgradient(w, partition, scale, out);
            out.iter_mut().zip(w).for_each(|(o, v)| *o += scale * sign(*v));
        }
    }
    Ok(())
}

pub fn penalty_subgradient(kind: PenaltyKind, w: &[f64], partition: &GroupPartition) -> Result<Vec<f64>> {
    let mut out = vec![0.0; w.len()];
    add_penalty_subgradient(kind, w, partition, 1.0, &mut out)?;
    Ok(out)
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidConfig(format!("lambda must be finite and non-negative, got {lambda}")));
    }
    Ok(())
}

/// Regularized cost: mean cross-entropy plus `λ R(w)`.
pub fn objective(
    net: &Network,
    x: ArrayView2<'_, f64>,
    targets: ArrayView2<'_, f64>,
    kind: PenaltyKind,
    lambda: f64,
    partition: &GroupPartition,
) -> Result<f64> {
    check_lambda(lambda)?;
    let data = data_loss(net, x, targets)?;
    Ok(data + lambda * penalty_value(kind, net.params(), partition)?)
}

/// Gradient of [`objective`]: backpropagated data gradient plus `λ` times the
/// penalty subgradient.
pub fn total_gradient(
    net: &Network,
    x: ArrayView2<'_, f64>,
    targets: ArrayView2<'_, f64>,
    kind: PenaltyKind,
    lambda: f64,
    partition: &GroupPartition,
) -> Result<Vec<f64>> {
    check_lambda(lambda)?;
    let mut grad = backprop(net, x, targets)?.gradient;
    if lambda > 0.0 {
        add_penalty_subgradient(kind, net.params(), partition, lambda, &mut grad)?;
    }
    Ok(grad)
}
