//! Acceptance suite. Prints one `[PASS]`/`[FAIL]` line per criterion and
//! exits nonzero if any criterion fails.
//!
//! Run a subset with `cargo test --test acceptance -- 3 5`.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use groupsparse::data::{bundled_digits, load_idx, normalize_minmax, synth_blobs};
use groupsparse::experiment::featmap::write_feature_map;
use groupsparse::experiment::{lambda_sweep, run_single, ExperimentConfig, Preset, SweepResult};
use groupsparse::network::{default_activations, Network};
use groupsparse::penalties::{build_groups, penalty_subgradient, penalty_value, total_gradient, BiasMode};
use groupsparse::penalties::{Group, GroupKind, GroupPartition, PenaltyKind};
use groupsparse::pruning::{active_masks, compact};
use groupsparse::TrainConfig;
use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;

use common::*;

type Outcome = Result<String, String>;

const PENALTIES: [PenaltyKind; 4] = PenaltyKind::ALL;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(secs: f64, limit: f64) -> Result<(), String> {
    if secs < limit {
        Ok(())
    } else {
        Err(format!("runtime {secs:.1}s exceeds {limit}s"))
    }
}

// ---------------------------------------------------------------- 1

fn c1_gradient_correctness() -> Outcome {
    let start = Instant::now();
    let mut rng = rng(101);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for case in 0..20 {
        let mut dims = vec![rng.random_range(2..=6)];
        for _ in 0..rng.random_range(1..=2) {
            dims.push(rng.random_range(2..=8));
        }
        dims.push(rng.random_range(2..=4));
        let net = random_dense_net(&dims, &mut rng);
        let n = rng.random_range(1..=8);
        let xs: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..dims[0]).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..dims[dims.len() - 1])).collect();
        let kind = PENALTIES[case % 4];
        let lambda = 10f64.powf(rng.random_range(-3.0..-1.0));
        let bias_mode = if case % 2 == 0 { BiasMode::PerBias } else { BiasMode::PerLayer };
        let partition = build_groups(&net, bias_mode);
        let groups = group_lists(&partition);

        let x = Array2::from_shape_fn((n, dims[0]), |(i, j)| xs[i][j]);
        let targets = Array2::from_shape_fn((n, dims[dims.len() - 1]), |(i, c)| if labels[i] == c { 1.0 } else { 0.0 });
        let analytic =
            total_gradient(&net, x.view(), targets.view(), kind, lambda, &partition).map_err(|e| e.to_string())?;

        let objective = |p: &[f64]| {
            let probe = Network::from_params(&dims, &default_activations(dims.len() - 1), p.to_vec()).unwrap();
            naive_data_loss(&probe, &xs, &labels) + lambda * naive_penalty(kind, p, &groups)
        };
        let mut p = net.params().to_vec();
        for q in 0..p.len() {
            let orig = p[q];
            p[q] = orig + h;
            let up = objective(&p);
            p[q] = orig - h;
            let down = objective(&p);
            p[q] = orig;
            let fd = (up - down) / (2.0 * h);
            worst = worst.max(rel_err(analytic[q], fd, 1e-6));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    within(secs, 30.0)?;
    check(worst < 1e-4, format!("max relative error {worst:.2e} over 20 networks ({secs:.1}s)"))
}

// ---------------------------------------------------------------- 2

fn random_partition(len: usize, rng: &mut rand_chacha::ChaCha8Rng) -> GroupPartition {
    let mut idx: Vec<usize> = (0..len).collect();
    idx.shuffle(rng);
    let mut groups = Vec::new();
    let mut rest = &idx[..];
    while !rest.is_empty() {
        let size = rng.random_range(1..=rest.len().min(7));
        let (g, tail) = rest.split_at(size);
        groups.push(Group::new(GroupKind::Hidden, g.to_vec()));
        rest = tail;
    }
    GroupPartition::new(groups, BiasMode::PerBias, len).unwrap()
}

fn c2_penalty_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = rng(202);
    let mut worst: f64 = 0.0;
    let mut violations = Vec::new();
    for case in 0..100 {
        let len = rng.random_range(1..=60);
        let mut w: Vec<f64> = (0..len).map(|_| signed(&mut rng, 1e-3, 3.0)).collect();
        // exercise the zero conventions too
        if case % 5 == 0 {
            for v in w.iter_mut().step_by(3) {
                *v = 0.0;
            }
        }
        let partition = random_partition(len, &mut rng);
        let groups = group_lists(&partition);
        for kind in PENALTIES {
            let value = penalty_value(kind, &w, &partition).unwrap();
            worst = worst.max(rel_err(value, naive_penalty(kind, &w, &groups), 1e-300));
            let sub = penalty_subgradient(kind, &w, &partition).unwrap();
            for (a, b) in sub.iter().zip(naive_subgradient(kind, &w, &groups)) {
                worst = worst.max(rel_err(*a, b, 1e-300));
            }
        }

        let l1 = penalty_value(PenaltyKind::L1, &w, &partition).unwrap();
        let gl = penalty_value(PenaltyKind::GroupLasso, &w, &partition).unwrap();
        if gl < l1 {
            violations.push(format!("case {case}: GL {gl} < L1 {l1}"));
        }
        for c in [2.0, -0.5, 0.25, -4.0] {
            let scaled: Vec<f64> = w.iter().map(|v| c * v).collect();
            for kind in [PenaltyKind::L1, PenaltyKind::GroupLasso, PenaltyKind::SparseGroupLasso] {
                let lhs = penalty_value(kind, &scaled, &partition).unwrap();
                let rhs = f64::abs(c) * penalty_value(kind, &w, &partition).unwrap();
                if lhs != rhs {
                    violations.push(format!("case {case}: {kind} not homogeneous at c={c}"));
                }
            }
            let lhs = penalty_value(PenaltyKind::L2, &scaled, &partition).unwrap();
            let rhs = c * c * penalty_value(PenaltyKind::L2, &w, &partition).unwrap();
            if lhs != rhs {
                violations.push(format!("case {case}: l2 not 2-homogeneous at c={c}"));
            }
        }
        // singleton groups in index order, so both sums run in the same order
        let singles = GroupPartition::new(
            (0..len).map(|i| Group::new(GroupKind::Bias, vec![i])).collect(),
            BiasMode::PerBias,
            len,
        )
        .unwrap();
        let gl1 = penalty_value(PenaltyKind::GroupLasso, &w, &singles).unwrap();
        let l1s = penalty_value(PenaltyKind::L1, &w, &singles).unwrap();
        let sub_gl = penalty_subgradient(PenaltyKind::GroupLasso, &w, &singles).unwrap();
        let sub_l1 = penalty_subgradient(PenaltyKind::L1, &w, &singles).unwrap();
        if gl1 != l1s || sub_gl != sub_l1 {
            violations.push(format!("case {case}: singleton GL {gl1} != L1 {l1s}"));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    within(secs, 10.0)?;
    if let Some(v) = violations.first() {
        return Err(format!("{} invariant violations, first: {v}", violations.len()));
    }
    check(
        worst < 1e-10,
        format!("max relative error {worst:.2e} on 100 instances, invariants exact ({secs:.1}s)"),
    )
}

// ---------------------------------------------------------------- 3

fn c3_compaction() -> Outcome {
    let start = Instant::now();
    let mut rng = rng(303);
    let mut worst: f64 = 0.0;
    let mut removed = 0;
    for _ in 0..50 {
        let mut dims = vec![rng.random_range(2..=10)];
        for _ in 0..rng.random_range(1..=3) {
            dims.push(rng.random_range(2..=10));
        }
        dims.push(rng.random_range(2..=5));
        let mut net = random_dense_net(&dims, &mut rng);
        for k in 0..net.layer_count() {
            let cols = dims[k];
            let keep = rng.random_range(0..cols);
            for c in 0..cols {
                if c != keep && rng.random_bool(0.4) {
                    net.weights_mut(k).column_mut(c).fill(0.0);
                    removed += 1;
                }
            }
        }
        let (small, kept) = compact(&net).map_err(|e| e.to_string())?;
        let x = Array2::from_shape_fn((100, dims[0]), |_| rng.random_range(-2.0..2.0));
        let xs = x.select(ndarray::Axis(1), &kept[0]);
        let full = net.predict_proba(x.view()).unwrap();
        let reduced = small.predict_proba(xs.view()).unwrap();
        let diff = (&full - &reduced).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        worst = worst.max(diff);
        let expect: Vec<usize> = active_masks(&net).iter().map(|m| m.iter().filter(|a| **a).count()).collect();
        if small.dims()[..small.dims().len() - 1] != expect[..] {
            return Err(format!("compacted dims {:?} disagree with active counts {expect:?}", small.dims()));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    within(secs, 30.0)?;
    check(
        worst <= 1e-12,
        format!("max abs difference {worst:.1e} over 50 networks, {removed} groups removed ({secs:.1}s)"),
    )
}

// ---------------------------------------------------------------- 4, 5, 8, 9

struct DigitsSweep {
    sweep: SweepResult,
    secs: f64,
}

fn digits_config() -> ExperimentConfig {
    let mut cfg = Preset::Digits.config();
    cfg.repeats = 5;
    cfg
}

fn run_digits_sweep() -> Result<DigitsSweep, String> {
    let start = Instant::now();
    let cfg = digits_config();
    let sweep = lambda_sweep(&bundled_digits(), &cfg, &cfg.lambdas, &PENALTIES).map_err(|e| e.to_string())?;
    Ok(DigitsSweep {
        sweep,
        secs: start.elapsed().as_secs_f64(),
    })
}

fn c4_digits(ds: &DigitsSweep) -> Outcome {
    let cell = ds.sweep.cell(PenaltyKind::SparseGroupLasso, 1e-3).ok_or("missing SGL cell")?;
    let per_cell = ds.secs / ds.sweep.cells().len() as f64;
    within(per_cell, 600.0)?;
    let (acc, sp) = (cell.test_accuracy.mean, cell.sparsity.mean);
    check(
        acc >= 0.90 && sp >= 0.70,
        format!(
            "SGL λ=1e-3 over {} seeds: test acc {acc:.4} (≥ 0.90), total sparsity {sp:.4} (≥ 0.70) ({per_cell:.1}s)",
            cell.repeats
        ),
    )
}

/// Checks the ordering properties on the λ cells of a sweep.
fn ordering(sweep: &SweepResult, lambda: f64) -> Outcome {
    let get = |p| sweep.cell(p, lambda).ok_or(format!("missing {p} cell"));
    let (l2, l1, gl, sgl) = (
        get(PenaltyKind::L2)?,
        get(PenaltyKind::L1)?,
        get(PenaltyKind::GroupLasso)?,
        get(PenaltyKind::SparseGroupLasso)?,
    );
    let sp = |c: &groupsparse::experiment::sweep::SweepCell| c.sparsity.mean;
    let ft = |c: &groupsparse::experiment::sweep::SweepCell| c.features.mean;
    let hn = |c: &groupsparse::experiment::sweep::SweepCell| c.hidden_neurons.mean;
    let checks = [
        ("sparsity SGL ≥ GL", sp(&sgl) >= sp(&gl)),
        ("sparsity SGL ≥ L1", sp(&sgl) >= sp(&l1)),
        ("sparsity L1 ≥ L2", sp(&l1) >= sp(&l2)),
        ("features SGL ≤ L1", ft(&sgl) <= ft(&l1)),
        ("features L1 ≤ L2", ft(&l1) <= ft(&l2)),
        ("neurons SGL ≤ L1", hn(&sgl) <= hn(&l1)),
        ("neurons L1 ≤ L2", hn(&l1) <= hn(&l2)),
        ("sparsity L2 ≤ 0.30", sp(&l2) <= 0.30),
    ];
    let detail = format!(
        "sparsity l2/l1/gl/sgl {:.3}/{:.3}/{:.3}/{:.3}, features {:.1}/{:.1}/{:.1}/{:.1}, neurons {:.1}/{:.1}/{:.1}/{:.1}",
        sp(&l2),
        sp(&l1),
        sp(&gl),
        sp(&sgl),
        ft(&l2),
        ft(&l1),
        ft(&gl),
        ft(&sgl),
        hn(&l2),
        hn(&l1),
        hn(&gl),
        hn(&sgl)
    );
    let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    if failed.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{detail}; violated: {}", failed.join(", ")))
    }
}

fn c5_ordering(ds: &DigitsSweep) -> Outcome {
    ordering(&ds.sweep, 1e-3).map(|d| format!("λ=1e-3, 5 seeds: {d}"))
}

fn c8_determinism(ds: &DigitsSweep) -> Outcome {
    let again = run_digits_sweep()?;
    let pairs = [
        ("csv", ds.sweep.to_csv(), again.sweep.to_csv()),
        ("json report", ds.sweep.summary_json(), again.sweep.summary_json()),
        ("text report", ds.sweep.summary_table(), again.sweep.summary_table()),
    ];
    for (name, a, b) in &pairs {
        if a.as_bytes() != b.as_bytes() {
            return Err(format!("{name} differs between runs"));
        }
    }
    Ok(format!(
        "{} sweep rows, csv/json/text byte-identical across two runs",
        ds.sweep.records.len()
    ))
}

fn c9_feature_map(ds: &DigitsSweep) -> Outcome {
    let cfg = digits_config();
    let train = TrainConfig {
        penalty: PenaltyKind::SparseGroupLasso,
        lambda: 1e-3,
        ..cfg.train.clone()
    };
    let out = run_single(&normalize_minmax(&bundled_digits()), &cfg.hidden, &train, cfg.test_fraction)
        .map_err(|e| e.to_string())?;
    let record = ds
        .sweep
        .records
        .iter()
        .find(|r| r.penalty == PenaltyKind::SparseGroupLasso && r.lambda == 1e-3 && r.repeat == 0)
        .ok_or("missing sweep record")?;
    if record.features != out.result.report.selected_feature_count {
        return Err("standalone run disagrees with the sweep's repeat 0".into());
    }
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (pgm, _) = write_feature_map(&out.network, (8, 8), dir.path().join("sgl")).map_err(|e| e.to_string())?;
    let text = std::fs::read_to_string(pgm).map_err(|e| e.to_string())?;
    let mut tokens = text.split_whitespace();
    let header: Vec<&str> = tokens.by_ref().take(4).collect();
    if header != ["P2", "8", "8", "255"] {
        return Err(format!("bad PGM header {header:?}"));
    }
    let pixels: Vec<u32> = tokens.map(|t| t.parse().unwrap()).collect();
    if pixels.len() != 64 {
        return Err(format!("expected 64 pixels, found {}", pixels.len()));
    }
    let mask = &out.result.report.feature_mask;
    let mismatch = (0..64).filter(|&i| (pixels[i] == 255) == mask[i]).count();
    let border_white = (0..8).filter(|r| pixels[r * 8] == 255 || pixels[r * 8 + 7] == 255).count();
    let white = pixels.iter().filter(|p| **p == 255).count();
    check(
        mismatch == 0 && border_white > 0,
        format!(
            "{white} white pixels, {mismatch} disagreeing with the deselection mask, {border_white} border rows with a white edge pixel"
        ),
    )
}

// ---------------------------------------------------------------- 6

const C6_EPOCHS: usize = 1000;
const C6_BATCH: usize = 100;

fn c6_feature_selection() -> Outcome {
    let start = Instant::now();
    let (informative, noise) = (4, 16);
    let data = synth_blobs(300, informative, noise, 4, 7).map_err(|e| e.to_string())?;
    let hidden = [20, 10];
    let mut summary = Vec::new();
    for lambda in [1e-1, 1e-2, 1e-3, 1e-4] {
        let (mut acc, mut inf_off, mut noise_off) = (0.0, 0.0, 0.0);
        let seeds = 5;
        for seed in 0..seeds {
            let cfg = TrainConfig {
                penalty: PenaltyKind::SparseGroupLasso,
                lambda,
                epochs: C6_EPOCHS,
                batch_size: C6_BATCH,
                seed,
                ..TrainConfig::default()
            };
            let out = run_single(&data, &hidden, &cfg, 0.25).map_err(|e| e.to_string())?;
            let mask = &out.result.report.feature_mask;
            acc += out.result.test_accuracy;
            inf_off += mask[..informative].iter().filter(|m| !**m).count() as f64 / informative as f64;
            noise_off += mask[informative..].iter().filter(|m| !**m).count() as f64 / noise as f64;
        }
        let n = seeds as f64;
        summary.push((lambda, acc / n, inf_off / n, noise_off / n));
    }
    let secs = start.elapsed().as_secs_f64();
    within(secs, 120.0)?;
    let table: Vec<String> = summary
        .iter()
        .map(|(l, a, i, n)| format!("λ={l:e}: acc {a:.3}, informative off {i:.2}, noise off {n:.2}"))
        .collect();
    // among accurate λ, the one separating noise from signal best
    let chosen = summary
        .iter()
        .filter(|s| s.1 >= 0.90)
        .max_by(|a, b| (a.3 - a.2).total_cmp(&(b.3 - b.2)));
    match chosen {
        Some(&(lambda, acc, inf, noi)) if noi > inf => Ok(format!(
            "chose λ={lambda:e}: noise deactivation {noi:.2} > informative {inf:.2}, acc {acc:.3} ({secs:.1}s) [{}]",
            table.join("; ")
        )),
        _ => Err(format!("no λ separates noise from informative features: {}", table.join("; "))),
    }
}

// ---------------------------------------------------------------- 7

fn c7_mnist() -> Outcome {
    let start = Instant::now();
    let root = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/");
    let data = load_idx(
        format!("{root}mnist10k-images-idx3-ubyte.gz"),
        format!("{root}mnist10k-labels-idx1-ubyte.gz"),
    )
    .map_err(|e| e.to_string())?;
    if data.len() != 10_000 || data.dim() != 784 {
        return Err(format!("unexpected MNIST subset shape {}×{}", data.len(), data.dim()));
    }
    let mut cfg = Preset::Mnist.config();
    cfg.hidden = vec![100, 60];
    cfg.train.epochs = 30;
    cfg.repeats = 3;
    let sweep = lambda_sweep(&data, &cfg, &[1e-4], &PENALTIES).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    within(secs, 900.0)?;
    let sgl = sweep.cell(PenaltyKind::SparseGroupLasso, 1e-4).ok_or("missing SGL cell")?;
    let order = ordering(&sweep, 1e-4);
    let inputs = format!("SGL active inputs {:.1} of 784", sgl.features.mean);
    let detail = |d: &str| format!("{} seeds, batch {}: {d}; {inputs} ({secs:.0}s)", cfg.repeats, cfg.train.batch_size);
    match order {
        Ok(d) if sgl.features.mean < 784.0 => Ok(detail(&d)),
        Ok(d) | Err(d) => Err(detail(&d)),
    }
}

// ----------------------------------------------------------------

fn main() -> ExitCode {
    let wanted: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let selected = |id: &str| wanted.is_empty() || wanted.iter().any(|w| w == id);
    let mut results: Vec<(&str, &str, Outcome)> = Vec::new();
    let mut record = |id: &'static str, name: &'static str, f: &dyn Fn() -> Outcome| {
        if selected(id) {
            let outcome = f();
            let (tag, text) = match &outcome {
                Ok(d) => ("PASS", d),
                Err(d) => ("FAIL", d),
            };
            println!("[{tag}] C{id} {name}: {text}");
            results.push((id, name, outcome));
        }
    };

    record("1", "gradient correctness", &c1_gradient_correctness);
    record("2", "penalty oracle suite", &c2_penalty_oracle);
    record("3", "compaction equivalence", &c3_compaction);
    if ["4", "5", "8", "9"].iter().any(|id| selected(id)) {
        match run_digits_sweep() {
            Ok(ds) => {
                record("4", "digits reproduction", &|| c4_digits(&ds));
                record("5", "penalty ordering", &|| c5_ordering(&ds));
                record("8", "determinism", &|| c8_determinism(&ds));
                record("9", "feature map", &|| c9_feature_map(&ds));
            }
            Err(e) => {
                for (id, name) in [("4", "digits reproduction"), ("5", "penalty ordering"), ("8", "determinism"), ("9", "feature map")] {
                    record(id, name, &|| Err(format!("digits sweep failed: {e}")));
                }
            }
        }
    }
    record("6", "feature selection", &c6_feature_selection);
    record("7", "mnist subset ordering", &c7_mnist);

    let failed = results.iter().filter(|r| r.2.is_err()).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
