use groupsparse::data::{synth_blobs, Dataset};
use groupsparse::network::{default_activations, Network};
use groupsparse::optimizer::{train, AdamConfig};
use groupsparse::pruning::threshold_weights;
use groupsparse::{PenaltyKind, TrainConfig};

/// Two well separated 2-D clusters.
fn separable() -> Dataset {
    let data = synth_blobs(60, 2, 0, 2, 3).unwrap();
    // classes sit on different axes at offset 4 with unit noise; drop the rare overlap
    let keep: Vec<usize> = (0..data.len())
        .filter(|&i| {
            let r = data.features.row(i);
            (data.labels[i] == 0) == (r[0] > r[1])
        })
        .collect();
    data.subset(&keep)
}

fn net_for(ds: &Dataset, hidden: usize, seed: u64) -> Network {
    Network::init_glorot(&[ds.dim(), hidden, ds.class_count], &default_activations(2), seed).unwrap()
}

fn cfg(penalty: PenaltyKind, lambda: f64, epochs: usize) -> TrainConfig {
    TrainConfig {
        penalty,
        lambda,
        epochs,
        batch_size: 16,
        seed: 5,
        ..TrainConfig::default()
    }
}

#[test]
fn unregularized_training_separates_blobs() {
    let ds = separable();
    let c = TrainConfig {
        batch_size: 4,
        ..cfg(PenaltyKind::L2, 0.0, 100)
    };
    let (net, history) = train(&net_for(&ds, 8, 0), &ds, &c).unwrap();
    assert_eq!(net.accuracy(ds.features.view(), &ds.labels).unwrap(), 1.0);
    assert_eq!(history.epochs.len(), 100);
}

#[test]
fn objective_moving_average_decreases() {
    let ds = separable();
    let (_, history) = train(&net_for(&ds, 8, 1), &ds, &cfg(PenaltyKind::SparseGroupLasso, 1e-3, 60)).unwrap();
    let obj: Vec<f64> = history.epochs.iter().map(|e| e.objective).collect();
    let avg: Vec<f64> = obj.windows(5).map(|w| w.iter().sum::<f64>() / 5.0).collect();
    for (e, w) in avg.windows(2).enumerate().skip(5) {
        assert!(w[1] <= w[0] + 1e-9, "moving average rose after epoch {}", e + 5);
    }
}

#[test]
fn huge_lambda_drives_weights_to_zero() {
    let ds = separable();
    // Adam moves each weight about α per step, so allow enough steps to reach zero
    let mut c = cfg(PenaltyKind::SparseGroupLasso, 1e3, 1500);
    c.batch_size = ds.len();
    let (net, _) = train(&net_for(&ds, 4, 2), &ds, &c).unwrap();
    assert!(net.params().iter().all(|v| v.abs() < c.threshold));
    let pruned = threshold_weights(&net, c.threshold);
    assert!(pruned.params().iter().all(|v| *v == 0.0));
}

#[test]
fn training_is_deterministic_and_seed_sensitive() {
    let ds = separable();
    let init = net_for(&ds, 6, 3);
    let c = cfg(PenaltyKind::L1, 1e-3, 10);
    let (a, ha) = train(&init, &ds, &c).unwrap();
    let (b, hb) = train(&init, &ds, &c).unwrap();
    assert_eq!(a.params(), b.params());
    assert_eq!(ha, hb);
    let (other, _) = train(&init, &ds, &TrainConfig { seed: 6, ..c }).unwrap();
    assert_ne!(a.params(), other.params());
}

#[test]
fn every_sample_is_used_once_per_epoch_and_steps_are_bounded() {
    let ds = separable();
    let mut c = cfg(PenaltyKind::GroupLasso, 1e-2, 7);
    c.batch_size = 13;
    let (_, history) = train(&net_for(&ds, 5, 4), &ds, &c).unwrap();
    assert_eq!(history.samples_per_epoch, vec![ds.len(); 7]);
    assert!(history.max_step <= 10.0 * c.adam.learning_rate);
}

#[test]
fn oversized_batch_is_one_full_batch() {
    let ds = separable();
    let mut c = cfg(PenaltyKind::L2, 1e-4, 3);
    c.batch_size = 10 * ds.len();
    let (_, history) = train(&net_for(&ds, 5, 4), &ds, &c).unwrap();
    assert_eq!(history.samples_per_epoch, vec![ds.len(); 3]);
}

#[test]
fn invalid_configurations_are_rejected() {
    let ds = separable();
    let net = net_for(&ds, 4, 0);
    let bad = [
        TrainConfig { lambda: -1.0, ..cfg(PenaltyKind::L1, 0.0, 1) },
        TrainConfig { epochs: 0, ..cfg(PenaltyKind::L1, 0.0, 1) },
        TrainConfig { batch_size: 0, ..cfg(PenaltyKind::L1, 0.0, 1) },
        TrainConfig {
            adam: AdamConfig { learning_rate: 0.0, ..AdamConfig::default() },
            ..cfg(PenaltyKind::L1, 0.0, 1)
        },
    ];
    for c in bad {
        assert!(train(&net, &ds, &c).is_err());
    }
    let wrong = Network::init_glorot(&[3, 4, 2], &default_activations(2), 0).unwrap();
    assert!(train(&wrong, &ds, &cfg(PenaltyKind::L1, 0.0, 1)).is_err());
}

#[test]
fn non_finite_data_aborts_training() {
    let mut ds = separable();
    ds.features[[0, 0]] = f64::NAN;
    let net = net_for(&ds, 4, 0);
    assert!(train(&net, &ds, &cfg(PenaltyKind::L2, 1e-3, 2)).is_err());
}

