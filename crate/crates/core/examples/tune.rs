//! Grid search over model hyperparameters on a validation split carved
//! from the training rows only. Prints the winning hyperparameter file.
//!
//!     cargo run --release --example tune > crates/core/data/hyperparams.json

use rttwatch::config::RunConfig;
use rttwatch::eval::{run_protocol, training_portion, ProtocolConfig};
use rttwatch::models::*;
use rttwatch::pipeline::{run_baseline, simulate_datasets};
use rttwatch::rng::derive_seed;

fn score(ds: &std::collections::BTreeMap<rttwatch::stressor::ScenarioId, rttwatch::labeling::LabeledDataset>, base: &ProtocolConfig, kind: ModelKind, hp: &Hyperparams) -> f64 {
    let cfg = ProtocolConfig {
        models: vec![kind],
        hyperparams: hp.clone(),
        untrained: vec![],
        seed: derive_seed(base.seed, "tune"),
        ..base.clone()
    };
    let run = run_protocol(ds, &cfg).expect("validation run");
    ["unstressed", "anomalous", "non_anomalous"]
        .iter()
        .map(|g| run.group(kind, g).and_then(|r| r.metrics.f1).unwrap_or(0.0))
        .fold(f64::INFINITY, f64::min)
}

/// First candidate with the best score wins.
fn pick(
    ds: &std::collections::BTreeMap<rttwatch::stressor::ScenarioId, rttwatch::labeling::LabeledDataset>,
    base: &ProtocolConfig,
    kind: ModelKind,
    candidates: Vec<Hyperparams>,
) -> Hyperparams {
    let mut best: Option<(f64, Hyperparams)> = None;
    for hp in candidates {
        let s = score(ds, base, kind, &hp);
        eprintln!("{kind} {s:.5} {}", serde_json::to_string(&section(kind, &hp)).unwrap());
        if best.as_ref().is_none_or(|(b, _)| s > *b) {
            best = Some((s, hp));
        }
    }
    best.expect("non-empty grid").1
}

fn section(kind: ModelKind, hp: &Hyperparams) -> serde_json::Value {
    let v = serde_json::to_value(hp).unwrap();
    v[kind.name()].clone()
}

fn main() {
    let cfg = RunConfig::default();
    let base = cfg.protocol().unwrap();
    let b = run_baseline(&cfg).unwrap();
    let all = simulate_datasets(&cfg, &cfg.catalog().unwrap(), &b.threshold).unwrap();
    let ds = training_portion(&all, &base).unwrap();
    let mut hp = base.hyperparams.clone();
    let n_features = rttwatch::schema::FEATURES.len() as f64;

    hp = pick(&ds, &base, ModelKind::Gnb, [1e-9, 1e-6, 1e-3, 1e-2].iter().map(|v| {
        let mut h = hp.clone();
        h.gnb.variance_smoothing = *v;
        h
    }).collect());

    let mut grid = Vec::new();
    for distance in [Distance::Manhattan, Distance::Euclidean, Distance::Minkowski { p: 3.0 }] {
        for k in (3..=25).step_by(2) {
            let mut h = hp.clone();
            h.knn = KnnParams { k, distance };
            grid.push(h);
        }
    }
    hp = pick(&ds, &base, ModelKind::Knn, grid);

    let mut grid = Vec::new();
    for split_criterion in [SplitCriterion::Entropy, SplitCriterion::Gini] {
        for max_depth in [8, 16, 32] {
            for min_split_weight in [2.0, 5.0] {
                let mut h = hp.clone();
                h.dt = TreeParams { split_criterion, max_depth, min_split_weight, features_per_split: FeaturesPerSplit::All };
                grid.push(h);
            }
        }
    }
    hp = pick(&ds, &base, ModelKind::Dt, grid);

    let mut grid = Vec::new();
    for split_criterion in [SplitCriterion::Gini, SplitCriterion::Entropy] {
        for features_per_split in [FeaturesPerSplit::Sqrt, FeaturesPerSplit::All] {
            for tree_count in [50, 100] {
                let mut h = hp.clone();
                h.rf = ForestParams { tree_count, split_criterion, features_per_split, ..h.rf };
                grid.push(h);
            }
        }
    }
    hp = pick(&ds, &base, ModelKind::Rf, grid);

    let mut grid = Vec::new();
    for degree in [2, 3, 4] {
        for c in [1.0, 10.0, 100.0] {
            let mut h = hp.clone();
            h.svc.kernel = Kernel::Polynomial { degree, coef0: 1.0, gamma: 1.0 / n_features };
            h.svc.c = c;
            grid.push(h);
        }
    }
    hp = pick(&ds, &base, ModelKind::Svc, grid);

    let mut grid = Vec::new();
    for gamma in [1.0 / n_features, 0.5 / n_features] {
        for c in [1.0, 0.5] {
            for nu in [0.5, 0.3] {
                let mut h = hp.clone();
                h.nu_svr.kernel = Kernel::Polynomial { degree: 7, coef0: 1.0, gamma };
                h.nu_svr.c = c;
                h.nu_svr.nu = nu;
                grid.push(h);
            }
        }
    }
    hp = pick(&ds, &base, ModelKind::NuSvr, grid);

    let mut grid = Vec::new();
    for gamma in [0.1, 0.5, 1.0, 2.0] {
        for nu in [0.01, 0.05, 0.1] {
            let mut h = hp.clone();
            h.oc_svm.kernel = Kernel::Rbf { gamma };
            h.oc_svm.nu = nu;
            grid.push(h);
        }
    }
    hp = pick(&ds, &base, ModelKind::OcSvm, grid);

    println!("{}", hp.to_json().unwrap());
}
