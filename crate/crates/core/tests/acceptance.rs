//! Release criteria. Each test prints one `PASS`/`FAIL` line per check and
//! fails if any check failed; run with `--nocapture` to see the lines.

use std::collections::BTreeMap;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use approx::relative_eq;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rttwatch::config::RunConfig;
use rttwatch::eval::{self, confusion, metrics, ConfusionMatrix, EvaluationRun, Polarity, TestSet};
use rttwatch::ingest::{dataset_from_csv, dataset_to_csv, parse_iostat, parse_netstat, parse_vmstat, ToolRecord};
use rttwatch::labeling::{compute_threshold, FrameRtt, Label, LabeledDataset};
use rttwatch::models::distance::Distance;
use rttwatch::models::forest::{ForestParams, RandomForest};
use rttwatch::models::kernel::Kernel;
use rttwatch::models::knn::{linear_scan, VpTree};
use rttwatch::models::tree::{entropy, gini_impurity, DecisionTree, FeaturesPerSplit, SplitCriterion, TreeParams};
use rttwatch::models::ModelKind;
use rttwatch::pipeline::{run_baseline, simulate_datasets, BaselineReport};
use rttwatch::stressor::{ScenarioId, StressLevel, StressorKind};

#[derive(Default)]
struct Checks {
    failed: Vec<String>,
}

impl Checks {
    fn check(&mut self, name: &str, ok: bool, detail: impl std::fmt::Display) {
        println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            self.failed.push(name.to_string());
        }
    }

    fn finish(self, criterion: &str) {
        assert!(self.failed.is_empty(), "{criterion}: failed {:?}", self.failed);
        println!("PASS {criterion}");
    }
}

struct Pipeline {
    baseline: BaselineReport,
    baseline_time: Duration,
    datasets: BTreeMap<ScenarioId, LabeledDataset>,
    run: EvaluationRun,
    total_time: Duration,
}

fn full_pipeline(cfg: &RunConfig) -> Pipeline {
    let start = Instant::now();
    let baseline = run_baseline(cfg).expect("baseline");
    let baseline_time = start.elapsed();
    let datasets = simulate_datasets(cfg, &cfg.catalog().unwrap(), &baseline.threshold).expect("generate");
    let run = eval::run_protocol(&datasets, &cfg.protocol().unwrap()).expect("evaluate");
    Pipeline {
        baseline,
        baseline_time,
        datasets,
        run,
        total_time: start.elapsed(),
    }
}

fn reference() -> &'static Pipeline {
    static P: OnceLock<Pipeline> = OnceLock::new();
    P.get_or_init(|| full_pipeline(&RunConfig::default()))
}

fn within(actual: f64, target: f64, rel: f64) -> bool {
    ((actual - target) / target).abs() <= rel
}

#[test]
fn threshold_reproduction() {
    let mut c = Checks::default();
    let p = reference();
    let t = &p.baseline.threshold;
    c.check(
        "baseline frames >= 2000",
        t.baseline_frame_count >= 2000,
        t.baseline_frame_count,
    );
    c.check(
        "baseline runtime < 60 s",
        p.baseline_time < Duration::from_secs(60),
        format!("{:.2?}", p.baseline_time),
    );
    c.check(
        "mean RTT within 10% of 4.675 ms",
        within(t.baseline_mean, 4.675, 0.10),
        format!("{:.4} ms", t.baseline_mean),
    );
    c.check(
        "cutoff within 10% of 8.741 ms",
        within(t.cutoff, 8.741, 0.10),
        format!("{:.4} ms", t.cutoff),
    );

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = rng.random_range(2..600);
        let scale = 10f64.powf(rng.random_range(-2.0..2.0));
        let xs: Vec<f64> = (0..n).map(|_| scale * rng.random_range(0.5..20.0)).collect();
        let frames: Vec<FrameRtt> = xs
            .iter()
            .enumerate()
            .map(|(i, x)| FrameRtt::new(6.0 * i as f64, *x, 420).unwrap())
            .collect();
        let got = compute_threshold(&frames, 2).unwrap();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let cutoff = mean + 3.0 * var.sqrt();
        for (a, b) in [(got.baseline_mean, mean), (got.cutoff, cutoff), (got.baseline_frame_std, var.sqrt())] {
            worst = worst.max(((a - b) / b).abs());
        }
    }
    c.check("threshold vs brute force over 1000 inputs (1e-12 rel)", worst <= 1e-12, format!("worst {worst:.2e}"));
    c.finish("threshold reproduction");
}

fn cm(tp: u64, fp: u64, fn_: u64, tn: u64, polarity: Polarity) -> ConfusionMatrix {
    ConfusionMatrix {
        tp,
        fp,
        fn_,
        tn,
        polarity,
    }
}

#[test]
fn metrics_exactness() {
    use Label::{Anomalous as A, NonAnomalous as N};
    let mut c = Checks::default();

    let labels = vec![A; 100];
    let mut pred = vec![A; 100];
    pred[17] = N;
    let got = confusion(&pred, &labels, Polarity::AnomalousPositive).unwrap();
    c.check(
        "99 of 100 anomalous predicted",
        got == cm(99, 0, 1, 0, Polarity::AnomalousPositive),
        format!("{got:?}"),
    );
    let got = confusion(&[N; 40], &[N; 40], Polarity::NonAnomalousPositive).unwrap();
    c.check(
        "perfect non-anomalous test",
        got == cm(40, 0, 0, 0, Polarity::NonAnomalousPositive),
        format!("{got:?}"),
    );
    let labels: Vec<Label> = (0..100).map(|i| if i < 97 { A } else { N }).collect();
    let got = confusion(&labels, &labels, Polarity::AnomalousPositive).unwrap();
    c.check(
        "97/3 mixed test, perfect predictor",
        got == cm(97, 0, 0, 3, Polarity::AnomalousPositive),
        format!("{got:?}"),
    );

    let m = metrics(&cm(99, 1, 1, 99, Polarity::AnomalousPositive)).unwrap();
    c.check(
        "tp=99 fp=1 fn=1 tn=99",
        m.accuracy == 0.99 && m.precision == Some(0.99) && m.recall == Some(0.99) && m.f1 == Some(0.99),
        format!("{m:?}"),
    );
    let m = metrics(&cm(0, 0, 10, 90, Polarity::AnomalousPositive)).unwrap();
    c.check(
        "tp=0 fp=0 fn=10 tn=90",
        m.accuracy == 0.9 && m.precision.is_none() && m.recall == Some(0.0) && m.f1.is_none(),
        format!("{m:?}"),
    );
    let m = metrics(&cm(97, 0, 3, 0, Polarity::AnomalousPositive)).unwrap();
    let f1 = 2.0 * 0.97 / 1.97;
    c.check(
        "tp=97 fp=0 fn=3 tn=0",
        m.recall == Some(0.97) && m.precision == Some(1.0) && m.f1 == Some(f1) && (f1 - 0.98477).abs() < 1e-5,
        format!("{m:?}"),
    );

    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let n = rng.random_range(1..300);
        let bias = rng.random_range(0.0..1.0);
        let labels: Vec<Label> = (0..n).map(|_| if rng.random_bool(bias) { A } else { N }).collect();
        let pred: Vec<Label> = (0..n)
            .map(|i| if rng.random_bool(0.8) { labels[i] } else { labels[i].flip() })
            .collect();
        let polarity = if rng.random_bool(0.5) {
            Polarity::AnomalousPositive
        } else {
            Polarity::NonAnomalousPositive
        };
        let pos = if polarity == Polarity::AnomalousPositive { A } else { N };
        let count = |p: bool, l: bool| {
            pred.iter()
                .zip(&labels)
                .filter(|(a, b)| (**a == pos) == p && (**b == pos) == l)
                .count() as f64
        };
        let (tp, fp, fn_, tn) = (count(true, true), count(true, false), count(false, true), count(false, false));
        let got = confusion(&pred, &labels, polarity).unwrap();
        let m = metrics(&got).unwrap();
        let acc = (tp + tn) / n as f64;
        let prec = (tp + fp > 0.0).then(|| tp / (tp + fp));
        let rec = (tp + fn_ > 0.0).then(|| tp / (tp + fn_));
        let f1 = match (prec, rec) {
            (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
            (Some(_), Some(_)) => Some(0.0),
            _ => None,
        };
        let close = |a: Option<f64>, b: Option<f64>| match (a, b) {
            (Some(a), Some(b)) => relative_eq!(a, b, epsilon = 1e-12, max_relative = 1e-12),
            (None, None) => true,
            _ => false,
        };
        let counts_ok = [got.tp, got.fp, got.fn_, got.tn] == [tp as u64, fp as u64, fn_ as u64, tn as u64];
        if !(counts_ok
            && relative_eq!(m.accuracy, acc, epsilon = 1e-12, max_relative = 1e-12)
            && close(m.precision, prec)
            && close(m.recall, rec)
            && close(m.f1, f1))
        {
            mismatches += 1;
        }
    }
    c.check("confusion/metrics vs brute force, 1000 cases", mismatches == 0, format!("{mismatches} mismatches"));
    c.finish("metrics exactness");
}

#[test]
fn purity_gate() {
    let mut c = Checks::default();
    let p = reference();
    let mut stressed = 0;
    for (id, ds) in &p.datasets {
        if id.kind() == StressorKind::None {
            continue;
        }
        stressed += 1;
        let purity = ds.count(id.expected_class()) as f64 / ds.len() as f64;
        c.check(&format!("purity {id}"), purity >= 0.97, format!("{purity:.4} over {} frames", ds.len()));
    }
    c.check("18 stressed scenarios", stressed == 18, stressed);
    c.finish("purity gate");
}

fn group_f1(run: &EvaluationRun, model: ModelKind, group: &str) -> f64 {
    run.group(model, group)
        .unwrap_or_else(|| panic!("no group {group} for {model}"))
        .metrics
        .f1
        .unwrap_or(0.0)
}

#[test]
fn trained_scenario_performance() {
    let mut c = Checks::default();
    let p = reference();
    for model in [ModelKind::NuSvr, ModelKind::Svc, ModelKind::Knn, ModelKind::Dt, ModelKind::Rf] {
        for group in ["unstressed", "anomalous", "non_anomalous"] {
            let f1 = group_f1(&p.run, model, group);
            c.check(&format!("{model} {group} F1 >= 0.95"), f1 >= 0.95, format!("{f1:.4}"));
        }
    }
    for model in [ModelKind::Gnb, ModelKind::OcSvm] {
        let f1 = group_f1(&p.run, model, "overall");
        c.check(&format!("{model} overall F1 >= 0.80"), f1 >= 0.80, format!("{f1:.4}"));
    }
    c.check(
        "full run < 5 min",
        p.total_time < Duration::from_secs(300),
        format!("{:.2?}", p.total_time),
    );
    c.finish("trained-scenario performance");
}

#[test]
fn untrained_scenario_generalization() {
    let mut c = Checks::default();
    let p = reference();
    for kind in [StressorKind::Matrix, StressorKind::Revio, StressorKind::Rawudp, StressorKind::Rawpkt] {
        let f1 = group_f1(&p.run, ModelKind::Rf, &format!("untrained/{}", kind.name()));
        c.check(&format!("rf untrained/{} F1 >= 0.90", kind.name()), f1 >= 0.90, format!("{f1:.4}"));
    }
    let mut low = Vec::new();
    for model in [ModelKind::Svc, ModelKind::NuSvr] {
        for kind in [StressorKind::Rawudp, StressorKind::Rawpkt] {
            for level in [StressLevel::Low, StressLevel::High] {
                let id = ScenarioId::new(kind, level).unwrap();
                let r = p.run.scenario(model, id).expect("scenario report");
                assert_eq!(r.set, TestSet::Untrained);
                if r.metrics.accuracy < 0.5 {
                    low.push(format!("{model} {id} {:.1}%", 100.0 * r.metrics.accuracy));
                }
            }
        }
    }
    c.check(
        "svc or nu_svr below 50% accuracy on an untrained network scenario",
        !low.is_empty(),
        if low.is_empty() { "none".to_string() } else { low.join(", ") },
    );
    c.finish("untrained-scenario generalization");
}

fn golden(name: &str) -> String {
    std::fs::read_to_string(format!("{}/tests/golden/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

#[test]
fn parser_fidelity() {
    let mut c = Checks::default();
    type Parser = fn(&str, f64) -> rttwatch::Result<Vec<ToolRecord>>;
    let parsers: [(&str, Parser); 3] = [("vmstat", parse_vmstat), ("iostat", parse_iostat), ("netstat", parse_netstat)];
    for (tool, parse) in parsers {
        let got = parse(&golden(&format!("{tool}.txt")), 2.0).unwrap();
        let want: Vec<ToolRecord> = serde_json::from_str(&golden(&format!("{tool}.expected.json"))).unwrap();
        // PartialEq on f64 fields: bit-exact apart from the sign of zero.
        c.check(&format!("{tool} golden"), got == want, format!("{} records", got.len()));
    }

    let p = reference();
    let mut lossless = true;
    for ds in p.datasets.values() {
        let text = dataset_to_csv(ds).unwrap();
        let back = dataset_from_csv(&text).unwrap();
        lossless &= &back == ds && dataset_to_csv(&back).unwrap() == text;
    }
    c.check("dataset CSV round trip", lossless, format!("{} datasets", p.datasets.len()));
    c.finish("parser fidelity");
}

fn random_rows(rng: &mut ChaCha8Rng, n: usize, d: usize, grid: bool) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            (0..d)
                .map(|_| {
                    if grid {
                        rng.random_range(0..4) as f64
                    } else {
                        rng.random_range(-1.0..1.0)
                    }
                })
                .collect()
        })
        .collect()
}

#[test]
fn model_unit_properties() {
    let mut c = Checks::default();

    let h = |p: f64| if p > 0.0 { -p * p.log2() } else { 0.0 };
    for counts in [[5.0, 5.0], [10.0, 0.0], [9.0, 1.0]] {
        let n = counts[0] + counts[1];
        let (p, q) = (counts[0] / n, counts[1] / n);
        let (e, g) = (entropy(&counts).unwrap(), gini_impurity(&counts).unwrap());
        c.check(
            &format!("impurity {counts:?}"),
            (e - (h(p) + h(q))).abs() < 1e-12 && (g - (1.0 - p * p - q * q)).abs() < 1e-12,
            format!("entropy {e:.4}, gini {g:.4}"),
        );
    }
    let e91 = entropy(&[9.0, 1.0]).unwrap();
    c.check("entropy (9,1) = 0.4690", (e91 - 0.4690).abs() < 5e-5, format!("{e91:.6}"));

    let rbf = Kernel::Rbf { gamma: 0.37 }.eval(&[0.3, -2.0, 5.0], &[0.3, -2.0, 5.0]).unwrap();
    c.check("rbf(x, x) = 1", rbf == 1.0, rbf);
    let poly = Kernel::Polynomial {
        degree: 7,
        coef0: 1.0,
        gamma: 1.0,
    }
    .eval(&[1.0, 0.0], &[0.0, 3.0])
    .unwrap();
    c.check("poly7 with zero dot = 1", poly == 1.0, poly);
    let man = Distance::Manhattan.eval(&[0.0, 0.0], &[1.0, 2.0]).unwrap();
    c.check("manhattan((0,0),(1,2)) = 3", man == 3.0, man);
    let euc = Distance::Euclidean.eval(&[0.0, 0.0], &[3.0, 4.0]).unwrap();
    c.check("euclidean((0,0),(3,4)) = 5", euc == 5.0, euc);

    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let metrics = [
        Distance::Manhattan,
        Distance::Euclidean,
        Distance::Hamming,
        Distance::Minkowski { p: 3.0 },
    ];
    let mut disagreements = 0;
    for case in 0..200 {
        let metric = metrics[case % metrics.len()];
        let grid = case % 3 == 0 || metric == Distance::Hamming;
        let n = rng.random_range(1..150);
        let d = rng.random_range(1..6);
        let pts = random_rows(&mut rng, n, d, grid);
        let tree = VpTree::build(&pts, metric);
        for q in random_rows(&mut rng, 5, d, grid) {
            let k = rng.random_range(1..=n.min(12));
            if tree.nearest(&pts, &q, k) != linear_scan(&pts, metric, &q, k) {
                disagreements += 1;
            }
        }
    }
    c.check("kNN index = linear scan, 200 datasets", disagreements == 0, format!("{disagreements} disagreements"));

    let mut differing = 0;
    for case in 0..20u64 {
        let n = rng.random_range(10..200);
        let x = random_rows(&mut rng, n, 4, case % 2 == 0);
        let y: Vec<Label> = x
            .iter()
            .map(|r| if r[0] + 0.5 * r[1] + rng.random_range(-0.3..0.3) > 0.2 { Label::Anomalous } else { Label::NonAnomalous })
            .collect();
        if y.iter().all(|l| *l == y[0]) {
            continue;
        }
        let criterion = if case % 2 == 0 { SplitCriterion::Gini } else { SplitCriterion::Entropy };
        let tp = TreeParams {
            split_criterion: criterion,
            min_split_weight: 2.0,
            max_depth: 6,
            features_per_split: FeaturesPerSplit::All,
        };
        let fp = ForestParams {
            tree_count: 1,
            split_criterion: criterion,
            min_split_weight: 2.0,
            max_depth: 6,
            features_per_split: FeaturesPerSplit::All,
            bootstrap: false,
        };
        let dt = DecisionTree::fit(&x, &y, None, tp, None).unwrap();
        let rf = RandomForest::fit(&x, &y, &fp, case).unwrap();
        differing += random_rows(&mut rng, 100, 4, false)
            .iter()
            .chain(&x)
            .filter(|q| dt.predict(q) != rf.predict(q))
            .count();
    }
    c.check("rf(1 tree, no bootstrap, all features) = dt", differing == 0, format!("{differing} differing predictions"));
    c.finish("model unit properties");
}

#[test]
fn end_to_end_determinism() {
    let mut c = Checks::default();
    let first = reference();
    let second = full_pipeline(&RunConfig::default());
    let a = first.run.to_json().unwrap();
    let b = second.run.to_json().unwrap();
    c.check("report JSON identical across runs", a == b, format!("{} bytes", a.len()));
    let same_data = first
        .datasets
        .iter()
        .zip(&second.datasets)
        .all(|((_, x), (_, y))| dataset_to_csv(x).unwrap() == dataset_to_csv(y).unwrap());
    c.check("dataset CSVs identical across runs", same_data, format!("{} datasets", first.datasets.len()));
    c.finish("end-to-end determinism");
}
