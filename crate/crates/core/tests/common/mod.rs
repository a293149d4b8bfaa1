//! Test-only oracles, written independently of the library's vectorized paths.
#![allow(dead_code)]

use groupsparse::network::{default_activations, Network};
use groupsparse::penalties::{GroupPartition, PenaltyKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random magnitude in `[lo, hi]` with random sign.
pub fn signed(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let m = rng.random_range(lo..=hi);
    if rng.random_bool(0.5) {
        m
    } else {
        -m
    }
}

pub fn param_count(dims: &[usize]) -> usize {
    dims.windows(2).map(|p| p[0] * p[1] + p[1]).sum()
}

/// Network whose every parameter has magnitude in `[0.05, 1]`.
pub fn random_dense_net(dims: &[usize], rng: &mut ChaCha8Rng) -> Network {
    let params = (0..param_count(dims)).map(|_| signed(rng, 0.05, 1.0)).collect();
    Network::from_params(dims, &default_activations(dims.len() - 1), params).unwrap()
}

/// Scalar-loop forward pass for one sample.
pub fn naive_forward(net: &Network, x: &[f64]) -> Vec<f64> {
    let mut h = x.to_vec();
    let layers = net.layer_count();
    for k in 0..layers {
        let w = net.weights(k);
        let b = net.bias(k);
        let mut s = vec![0.0; w.nrows()];
        for r in 0..w.nrows() {
            let mut acc = b[r];
            for c in 0..w.ncols() {
                acc += w[[r, c]] * h[c];
            }
            s[r] = acc;
        }
        if k + 1 < layers {
            h = s.iter().map(|v| v.max(0.0)).collect();
        } else {
            let max = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = s.iter().map(|v| (v - max).exp()).collect();
            let total: f64 = exps.iter().sum();
            h = exps.iter().map(|e| e / total).collect();
        }
    }
    h
}

/// Mean cross-entropy by loops.
pub fn naive_data_loss(net: &Network, xs: &[Vec<f64>], labels: &[usize]) -> f64 {
    let mut total = 0.0;
    for (x, &l) in xs.iter().zip(labels) {
        let p = naive_forward(net, x);
        total -= p[l].max(1e-12).ln();
    }
    total / xs.len() as f64
}

/// Penalty by direct summation over groups given as index lists.
pub fn naive_penalty(kind: PenaltyKind, w: &[f64], groups: &[Vec<usize>]) -> f64 {
    let l1: f64 = w.iter().map(|v| v.abs()).sum();
    let gl = || {
        let mut total = 0.0;
        for g in groups {
            let mut sq = 0.0;
            for &i in g {
                sq += w[i] * w[i];
            }
            total += (g.len() as f64).sqrt() * sq.sqrt();
        }
        total
    };
    match kind {
        PenaltyKind::L2 => w.iter().map(|v| v * v).sum(),
        PenaltyKind::L1 => l1,
        PenaltyKind::GroupLasso => gl(),
        PenaltyKind::SparseGroupLasso => gl() + l1,
    }
}

pub fn naive_subgradient(kind: PenaltyKind, w: &[f64], groups: &[Vec<usize>]) -> Vec<f64> {
    if kind == PenaltyKind::L2 {
        return w.iter().map(|v| 2.0 * v).collect();
    }
    let mut out = vec![0.0; w.len()];
    if matches!(kind, PenaltyKind::L1 | PenaltyKind::SparseGroupLasso) {
        for (o, v) in out.iter_mut().zip(w) {
            *o += if *v > 0.0 {
                1.0
            } else if *v < 0.0 {
                -1.0
            } else {
                0.0
            };
        }
    }
    if matches!(kind, PenaltyKind::GroupLasso | PenaltyKind::SparseGroupLasso) {
        for g in groups {
            let norm = g.iter().map(|&i| w[i] * w[i]).sum::<f64>().sqrt();
            if norm > 0.0 {
                for &i in g {
                    out[i] += (g.len() as f64).sqrt() * w[i] / norm;
                }
            }
        }
    }
    out
}

pub fn group_lists(p: &GroupPartition) -> Vec<Vec<usize>> {
    p.groups().iter().map(|g| g.members.clone()).collect()
}

/// `|a-b| / max(|a|, |b|, floor)`.
pub fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}
