//! Confusion matrices, accuracy/precision/recall/F1, and the trained vs
//! untrained evaluation protocol.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labeling::{fit_scaling, DatasetRow, Label, LabeledDataset, Scaling};
use crate::models::{train, Hyperparams, ModelKind, TrainedModel};
use crate::rng::{derive_seed, stream};
use crate::stressor::{ScenarioId, StressLevel, StressorKind};

pub const REPORT_VERSION: &str = "report-v1";

/// Which class counts as positive. A scenario's positive class is its
/// expected class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Polarity {
    AnomalousPositive,
    NonAnomalousPositive,
    /// Pooled over scenarios of both polarities.
    Mixed,
}

impl Polarity {
    pub fn for_scenario(id: ScenarioId) -> Polarity {
        match id.expected_class() {
            Label::Anomalous => Polarity::AnomalousPositive,
            Label::NonAnomalous => Polarity::NonAnomalousPositive,
        }
    }

    pub fn positive(self) -> Option<Label> {
        match self {
            Polarity::AnomalousPositive => Some(Label::Anomalous),
            Polarity::NonAnomalousPositive => Some(Label::NonAnomalous),
            Polarity::Mixed => None,
        }
    }

    pub fn swapped(self) -> Polarity {
        match self {
            Polarity::AnomalousPositive => Polarity::NonAnomalousPositive,
            Polarity::NonAnomalousPositive => Polarity::AnomalousPositive,
            Polarity::Mixed => Polarity::Mixed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
    pub polarity: Polarity,
}

impl ConfusionMatrix {
    pub fn empty(polarity: Polarity) -> Self {
        ConfusionMatrix {
            tp: 0,
            fp: 0,
            fn_: 0,
            tn: 0,
            polarity,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// Same rows counted with the other class as positive.
    pub fn swapped(&self) -> Self {
        ConfusionMatrix {
            tp: self.tn,
            fp: self.fn_,
            fn_: self.fp,
            tn: self.tp,
            polarity: self.polarity.swapped(),
        }
    }

    /// Cell-wise sum. Each input keeps its own positive class, so pooling
    /// scenarios of different polarity counts "expected class predicted"
    /// as tp throughout.
    pub fn pooled(&self, other: &ConfusionMatrix) -> Self {
        ConfusionMatrix {
            tp: self.tp + other.tp,
            fp: self.fp + other.fp,
            fn_: self.fn_ + other.fn_,
            tn: self.tn + other.tn,
            polarity: if self.total() == 0 {
                other.polarity
            } else if other.total() == 0 || self.polarity == other.polarity {
                self.polarity
            } else {
                Polarity::Mixed
            },
        }
    }
}

pub fn confusion(predictions: &[Label], labels: &[Label], polarity: Polarity) -> Result<ConfusionMatrix> {
    if predictions.len() != labels.len() {
        return Err(Error::Contract(format!(
            "{} predictions for {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    let positive = polarity
        .positive()
        .ok_or_else(|| Error::Contract("confusion needs a definite polarity".into()))?;
    let mut cm = ConfusionMatrix::empty(polarity);
    for (p, l) in predictions.iter().zip(labels) {
        match (*l == positive, *p == positive) {
            (true, true) => cm.tp += 1,
            (true, false) => cm.fn_ += 1,
            (false, true) => cm.fp += 1,
            (false, false) => cm.tn += 1,
        }
    }
    Ok(cm)
}

/// Scores from one confusion matrix. A ratio with a zero denominator is
/// absent, and F1 is absent when either component is.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub row_count: u64,
}

pub fn metrics(cm: &ConfusionMatrix) -> Result<Metrics> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::Domain("metrics of an empty confusion matrix".into()));
    }
    let ratio = |num: u64, den: u64| (den > 0).then(|| num as f64 / den as f64);
    let precision = ratio(cm.tp, cm.tp + cm.fp);
    let recall = ratio(cm.tp, cm.tp + cm.fn_);
    let f1 = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        (Some(_), Some(_)) => Some(0.0),
        _ => None,
    };
    Ok(Metrics {
        accuracy: (cm.tp + cm.tn) as f64 / total as f64,
        precision,
        recall,
        f1,
        row_count: total,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestSet {
    /// Held-out rows of a scenario that also contributed training rows.
    Trained,
    /// A scenario never seen in training.
    Untrained,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub model: ModelKind,
    pub scenario: ScenarioId,
    pub set: TestSet,
    pub confusion: ConfusionMatrix,
    pub metrics: Metrics,
}

/// Pooled result over a group of scenarios: `unstressed`, `anomalous`,
/// `non_anomalous`, `overall` (all trained-set tests), `untrained/<kind>`
/// (both levels) and `untrained` (all untrained tests).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupReport {
    pub model: ModelKind,
    pub group: String,
    pub confusion: ConfusionMatrix,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSplit {
    pub scenarios: Vec<ScenarioId>,
    pub train_fraction: f64,
    pub rows: usize,
    pub anomalous_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestSplit {
    pub scenario: ScenarioId,
    pub set: TestSet,
    pub rows: usize,
    pub anomalous_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRun {
    pub version: String,
    pub seed: u64,
    pub models: Vec<ModelKind>,
    pub train_split: TrainSplit,
    pub test_splits: Vec<TestSplit>,
    pub scenarios: Vec<ScenarioReport>,
    pub groups: Vec<GroupReport>,
}

impl EvaluationRun {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let run: EvaluationRun = serde_json::from_str(text)?;
        if run.version != REPORT_VERSION {
            return Err(Error::Version {
                expected: REPORT_VERSION.into(),
                found: run.version,
            });
        }
        Ok(run)
    }

    pub fn scenario(&self, model: ModelKind, id: ScenarioId) -> Option<&ScenarioReport> {
        self.scenarios
            .iter()
            .find(|r| r.model == model && r.scenario == id)
    }

    pub fn group(&self, model: ModelKind, group: &str) -> Option<&GroupReport> {
        self.groups
            .iter()
            .find(|g| g.model == model && g.group == group)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    pub models: Vec<ModelKind>,
    pub hyperparams: Hyperparams,
    pub seed: u64,
    pub train_fraction: f64,
    /// Scenarios split into train and test rows.
    pub trained: Vec<ScenarioId>,
    /// Scenarios used only for testing.
    pub untrained: Vec<ScenarioId>,
}

impl ProtocolConfig {
    pub fn standard(seed: u64) -> Self {
        let mut trained = vec![ScenarioId::UNSTRESSED];
        let mut untrained = Vec::new();
        for id in ScenarioId::all() {
            if id.kind().is_trained() {
                trained.push(id);
            } else if id.kind().is_untrained() {
                untrained.push(id);
            }
        }
        ProtocolConfig {
            models: ModelKind::ALL.to_vec(),
            hyperparams: Hyperparams::default(),
            seed,
            train_fraction: 0.8,
            trained,
            untrained,
        }
    }
}

/// Split indices stratified by label; each class contributes
/// `round(fraction · n)` rows to training. Both index lists are ascending.
pub fn stratified_split(labels: &[Label], fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = stream(seed, "split");
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in [Label::NonAnomalous, Label::Anomalous] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|i| labels[*i] == class).collect();
        idx.shuffle(&mut rng);
        let n_train = (fraction * idx.len() as f64).round() as usize;
        train.extend_from_slice(&idx[..n_train]);
        test.extend_from_slice(&idx[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

/// Content identity of a row, independent of its scenario tag.
fn row_key(r: &DatasetRow) -> (u64, u64, Vec<u64>) {
    (
        r.frame_start.to_bits(),
        r.avg_rtt.to_bits(),
        r.features.iter().map(|v| v.to_bits()).collect(),
    )
}

/// The training rows of each trained scenario under `cfg`'s split, for
/// hyperparameter search on data the test splits never touch.
pub fn training_portion(
    datasets: &BTreeMap<ScenarioId, LabeledDataset>,
    cfg: &ProtocolConfig,
) -> Result<BTreeMap<ScenarioId, LabeledDataset>> {
    cfg.trained
        .iter()
        .map(|id| {
            let ds = datasets
                .get(id)
                .ok_or_else(|| Error::Protocol(format!("missing scenario data: {id}")))?;
            let labels: Vec<Label> = ds.rows.iter().map(|r| r.label).collect();
            let (tr, _) = stratified_split(&labels, cfg.train_fraction, derive_seed(cfg.seed, &id.slug()));
            Ok((*id, LabeledDataset::new(tr.iter().map(|i| ds.rows[*i].clone()).collect())))
        })
        .collect()
}

struct Prepared {
    scaling: Scaling,
    train_x: Vec<Vec<f64>>,
    train_y: Vec<Label>,
    tests: Vec<(ScenarioId, TestSet, Vec<Vec<f64>>, Vec<Label>)>,
}

fn prepare(datasets: &BTreeMap<ScenarioId, LabeledDataset>, cfg: &ProtocolConfig) -> Result<Prepared> {
    let missing: Vec<String> = cfg
        .trained
        .iter()
        .chain(&cfg.untrained)
        .filter(|id| datasets.get(id).is_none_or(|d| d.is_empty()))
        .map(|id| id.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::Protocol(format!(
            "missing scenario data: {}",
            missing.join(", ")
        )));
    }
    if let Some(id) = cfg.untrained.iter().find(|id| cfg.trained.contains(id)) {
        return Err(Error::Protocol(format!("{id} is listed as both trained and untrained")));
    }
    if !(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0) {
        return Err(Error::Config(format!(
            "train_fraction must lie in (0, 1), got {}",
            cfg.train_fraction
        )));
    }

    let mut train_rows: Vec<&DatasetRow> = Vec::new();
    let mut tests_raw: Vec<(ScenarioId, TestSet, Vec<&DatasetRow>)> = Vec::new();
    for id in &cfg.trained {
        let ds = &datasets[id];
        let labels: Vec<Label> = ds.rows.iter().map(|r| r.label).collect();
        let (tr, te) = stratified_split(&labels, cfg.train_fraction, derive_seed(cfg.seed, &id.slug()));
        train_rows.extend(tr.iter().map(|i| &ds.rows[*i]));
        tests_raw.push((*id, TestSet::Trained, te.iter().map(|i| &ds.rows[*i]).collect()));
    }
    for id in &cfg.untrained {
        tests_raw.push((*id, TestSet::Untrained, datasets[id].rows.iter().collect()));
    }

    let seen: HashSet<_> = train_rows.iter().map(|r| row_key(r)).collect();
    for (id, set, rows) in &tests_raw {
        if *set == TestSet::Untrained {
            if let Some(r) = rows.iter().find(|r| seen.contains(&row_key(r))) {
                return Err(Error::Protocol(format!(
                    "untrained scenario {id} row at t={} also appears in training",
                    r.frame_start
                )));
            }
        }
    }

    let scaling = fit_scaling(train_rows.iter().map(|r| r.features.as_slice()))?;
    let scale = |rows: &[&DatasetRow]| -> Result<Vec<Vec<f64>>> {
        rows.iter().map(|r| scaling.apply(&r.features)).collect()
    };
    let train_x = scale(&train_rows)?;
    let train_y = train_rows.iter().map(|r| r.label).collect();
    let tests = tests_raw
        .iter()
        .map(|(id, set, rows)| Ok((*id, *set, scale(rows)?, rows.iter().map(|r| r.label).collect())))
        .collect::<Result<Vec<_>>>()?;
    Ok(Prepared {
        scaling,
        train_x,
        train_y,
        tests,
    })
}

/// Trains one model on the prepared split. OC-SVM sees only the
/// non-anomalous training rows.
fn train_one(kind: ModelKind, p: &Prepared, cfg: &ProtocolConfig) -> Result<TrainedModel> {
    let seed = derive_seed(cfg.seed, kind.name());
    let model = if kind.is_one_class() {
        let (x, y): (Vec<Vec<f64>>, Vec<Label>) = p
            .train_x
            .iter()
            .zip(&p.train_y)
            .filter(|(_, l)| !l.is_anomalous())
            .map(|(x, l)| (x.clone(), *l))
            .unzip();
        train(kind, &x, &y, &cfg.hyperparams, seed)?
    } else {
        train(kind, &p.train_x, &p.train_y, &cfg.hyperparams, seed)?
    };
    Ok(model.with_scaling(p.scaling.clone()))
}

fn map_models<T: Send>(
    models: &[ModelKind],
    f: impl Fn(ModelKind) -> Result<T> + Sync + Send,
) -> Result<Vec<T>> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        models.par_iter().map(|k| f(*k)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        models.iter().map(|k| f(*k)).collect()
    }
}

/// Fits every configured model on the pooled training split of the trained
/// scenarios.
pub fn train_models(
    datasets: &BTreeMap<ScenarioId, LabeledDataset>,
    cfg: &ProtocolConfig,
) -> Result<Vec<TrainedModel>> {
    if cfg.models.is_empty() {
        return Err(Error::Protocol("no models selected".into()));
    }
    let p = prepare(datasets, cfg)?;
    map_models(&cfg.models, |k| train_one(k, &p, cfg))
}

/// Trains each model once and evaluates it on every test split.
pub fn run_protocol(datasets: &BTreeMap<ScenarioId, LabeledDataset>, cfg: &ProtocolConfig) -> Result<EvaluationRun> {
    if cfg.models.is_empty() {
        return Err(Error::Protocol("no models selected".into()));
    }
    let p = prepare(datasets, cfg)?;
    let models = map_models(&cfg.models, |k| train_one(k, &p, cfg))?;
    evaluate_prepared(&models, &p, cfg)
}

/// Evaluates already-trained models. Their attached scaling must be the
/// one the split produces, which holds for models from [`train_models`]
/// with the same datasets and config.
pub fn evaluate_models(
    models: &[TrainedModel],
    datasets: &BTreeMap<ScenarioId, LabeledDataset>,
    cfg: &ProtocolConfig,
) -> Result<EvaluationRun> {
    if models.is_empty() {
        return Err(Error::Protocol("no models selected".into()));
    }
    let p = prepare(datasets, cfg)?;
    for m in models {
        if m.scaling.as_ref() != Some(&p.scaling) {
            return Err(Error::Protocol(format!(
                "model {} was trained on a different split; retrain it",
                m.kind
            )));
        }
    }
    evaluate_prepared(models, &p, cfg)
}

fn evaluate_prepared(models: &[TrainedModel], p: &Prepared, cfg: &ProtocolConfig) -> Result<EvaluationRun> {
    let kinds: Vec<ModelKind> = models.iter().map(|m| m.kind).collect();
    let per_model = map_models(&kinds, |k| {
        let m = models.iter().find(|m| m.kind == k).expect("kind from list");
        p.tests
            .iter()
            .map(|(id, set, x, y)| {
                let pred: Vec<Label> = x.iter().map(|r| m.predict(r)).collect::<Result<_>>()?;
                let cm = confusion(&pred, y, Polarity::for_scenario(*id))?;
                Ok(ScenarioReport {
                    model: k,
                    scenario: *id,
                    set: *set,
                    confusion: cm,
                    metrics: metrics(&cm)?,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let scenarios: Vec<ScenarioReport> = per_model.into_iter().flatten().collect();

    let mut groups = Vec::new();
    for &k in &kinds {
        let mine: Vec<&ScenarioReport> = scenarios.iter().filter(|r| r.model == k).collect();
        let mut push = |name: String, pred: &dyn Fn(&ScenarioReport) -> bool| -> Result<()> {
            let cm = mine
                .iter()
                .filter(|r| pred(r))
                .fold(None::<ConfusionMatrix>, |acc, r| {
                    Some(acc.map_or(r.confusion, |a| a.pooled(&r.confusion)))
                });
            if let Some(cm) = cm {
                groups.push(GroupReport {
                    model: k,
                    group: name,
                    metrics: metrics(&cm)?,
                    confusion: cm,
                });
            }
            Ok(())
        };
        let trained = |r: &ScenarioReport| r.set == TestSet::Trained;
        push("unstressed".into(), &|r| trained(r) && r.scenario == ScenarioId::UNSTRESSED)?;
        push("anomalous".into(), &|r| trained(r) && r.scenario.level() == StressLevel::High)?;
        push("non_anomalous".into(), &|r| trained(r) && r.scenario.level() == StressLevel::Low)?;
        push("overall".into(), &trained)?;
        let mut untrained_kinds: Vec<StressorKind> = cfg.untrained.iter().map(|s| s.kind()).collect();
        untrained_kinds.dedup();
        for uk in untrained_kinds {
            push(format!("untrained/{uk}"), &|r| {
                r.set == TestSet::Untrained && r.scenario.kind() == uk
            })?;
        }
        push("untrained".into(), &|r| r.set == TestSet::Untrained)?;
    }

    let count = |y: &[Label]| y.iter().filter(|l| l.is_anomalous()).count();
    Ok(EvaluationRun {
        version: REPORT_VERSION.into(),
        seed: cfg.seed,
        models: kinds,
        train_split: TrainSplit {
            scenarios: cfg.trained.clone(),
            train_fraction: cfg.train_fraction,
            rows: p.train_y.len(),
            anomalous_rows: count(&p.train_y),
        },
        test_splits: p
            .tests
            .iter()
            .map(|(id, set, _, y)| TestSplit {
                scenario: *id,
                set: *set,
                rows: y.len(),
                anomalous_rows: count(y),
            })
            .collect(),
        scenarios,
        groups,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
}

fn pct(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.5}")).unwrap_or_default()
}

/// Accuracy table with one row per scenario kind and a `{model}_high`,
/// `{model}_low` column pair per model. Rows without levels (`overall`,
/// `unstressed`) repeat their value in both columns.
pub fn accuracy_table(run: &EvaluationRun, set: TestSet) -> String {
    let mut out = String::from("test");
    for m in &run.models {
        let _ = write!(out, ",{m}_high,{m}_low");
    }
    out.push('\n');
    if set == TestSet::Trained {
        for group in ["overall", "unstressed"] {
            out.push_str(group);
            for m in &run.models {
                let v = run.group(*m, group).map(|g| pct(g.metrics.accuracy)).unwrap_or_default();
                let _ = write!(out, ",{v},{v}");
            }
            out.push('\n');
        }
    }
    let mut kinds: Vec<StressorKind> = run
        .test_splits
        .iter()
        .filter(|t| t.set == set && t.scenario.kind() != StressorKind::None)
        .map(|t| t.scenario.kind())
        .collect();
    kinds.dedup();
    if set == TestSet::Trained {
        kinds.sort_by_key(|k| k.name());
    }
    for kind in kinds {
        out.push_str(kind.name());
        for m in &run.models {
            for level in [StressLevel::High, StressLevel::Low] {
                let v = ScenarioId::new(kind, level)
                    .ok()
                    .and_then(|id| run.scenario(*m, id))
                    .map(|r| pct(r.metrics.accuracy))
                    .unwrap_or_default();
                let _ = write!(out, ",{v}");
            }
        }
        out.push('\n');
    }
    out
}

/// Long-format F1 per group and model, for plotting.
pub fn f1_table(run: &EvaluationRun) -> String {
    let mut out = String::from("group,model,f1,accuracy,precision,recall,rows\n");
    for g in &run.groups {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            g.group,
            g.model,
            opt(g.metrics.f1),
            opt(Some(g.metrics.accuracy)),
            opt(g.metrics.precision),
            opt(g.metrics.recall),
            g.metrics.row_count
        );
    }
    out
}

/// Writes the report files into `dir` and returns their paths.
pub fn emit_report(run: &EvaluationRun, dir: &Path, formats: &[ReportFormat]) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for f in formats {
        match f {
            ReportFormat::Json => {
                let p = dir.join("report.json");
                crate::ingest::write_atomic(&p, run.to_json()?.as_bytes())?;
                written.push(p);
            }
            ReportFormat::Csv => {
                for (name, body) in [
                    ("accuracy_trained.csv", accuracy_table(run, TestSet::Trained)),
                    ("accuracy_untrained.csv", accuracy_table(run, TestSet::Untrained)),
                    ("f1_groups.csv", f1_table(run)),
                ] {
                    let p = dir.join(name);
                    crate::ingest::write_atomic(&p, body.as_bytes())?;
                    written.push(p);
                }
            }
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labeling::DatasetRow;

    fn cm(tp: u64, fp: u64, fn_: u64, tn: u64) -> ConfusionMatrix {
        ConfusionMatrix {
            tp,
            fp,
            fn_,
            tn,
            polarity: Polarity::AnomalousPositive,
        }
    }

    #[test]
    fn worked_confusions() {
        let a = Label::Anomalous;
        let n = Label::NonAnomalous;
        let mut pred = vec![a; 99];
        pred.push(n);
        let c = confusion(&pred, &[a; 100], Polarity::AnomalousPositive).unwrap();
        assert_eq!((c.tp, c.fp, c.fn_, c.tn), (99, 0, 1, 0));

        let c = confusion(&[n; 50], &[n; 50], Polarity::NonAnomalousPositive).unwrap();
        assert_eq!((c.tp, c.fp, c.fn_, c.tn), (50, 0, 0, 0));

        let labels: Vec<Label> = (0..100).map(|i| if i < 97 { a } else { n }).collect();
        let c = confusion(&labels, &labels, Polarity::AnomalousPositive).unwrap();
        assert_eq!((c.tp, c.fp, c.fn_, c.tn), (97, 0, 0, 3));

        assert!(matches!(
            confusion(&[a], &[a, a], Polarity::AnomalousPositive),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn worked_metrics() {
        let m = metrics(&cm(99, 1, 1, 99)).unwrap();
        assert_eq!(m.accuracy, 0.99);
        assert_eq!(m.precision, Some(0.99));
        assert_eq!(m.recall, Some(0.99));
        assert!((m.f1.unwrap() - 0.99).abs() < 1e-15);

        let m = metrics(&cm(0, 0, 10, 90)).unwrap();
        assert_eq!(m.precision, None);
        assert_eq!(m.recall, Some(0.0));
        assert_eq!(m.f1, None);
        assert_eq!(m.accuracy, 0.9);

        let m = metrics(&cm(97, 0, 3, 0)).unwrap();
        assert_eq!(m.recall, Some(0.97));
        assert_eq!(m.precision, Some(1.0));
        assert!((m.f1.unwrap() - 2.0 * 0.97 / 1.97).abs() < 1e-15);
        assert!((m.f1.unwrap() - 0.98477).abs() < 1e-5);

        assert!(metrics(&cm(0, 0, 0, 0)).is_err());
    }

    #[test]
    fn swapping_polarity() {
        let labels = [Label::Anomalous, Label::NonAnomalous, Label::Anomalous, Label::NonAnomalous];
        let pred = [Label::Anomalous, Label::Anomalous, Label::NonAnomalous, Label::NonAnomalous];
        let a = confusion(&pred, &labels, Polarity::AnomalousPositive).unwrap();
        let b = confusion(&pred, &labels, Polarity::NonAnomalousPositive).unwrap();
        assert_eq!(a.swapped(), b);
    }

    #[test]
    fn split_is_stratified_and_disjoint() {
        let labels: Vec<Label> = (0..103)
            .map(|i| Label::from_index(usize::from(i % 10 == 0)))
            .collect();
        let (tr, te) = stratified_split(&labels, 0.8, 4);
        assert_eq!(tr.len() + te.len(), labels.len());
        assert!(tr.iter().all(|i| !te.contains(i)));
        let anom_train = tr.iter().filter(|i| labels[**i].is_anomalous()).count();
        assert_eq!(anom_train, 9);
        assert_eq!(stratified_split(&labels, 0.8, 4), (tr, te));
    }

    fn toy_datasets(cfg: &ProtocolConfig) -> BTreeMap<ScenarioId, LabeledDataset> {
        let mut out = BTreeMap::new();
        for (s, id) in cfg.trained.iter().chain(&cfg.untrained).enumerate() {
            let high = id.level() == StressLevel::High;
            let rows = (0..40)
                .map(|i| {
                    let v = if high { 10.0 } else { 1.0 } + (i % 5) as f64 * 0.1 + s as f64 * 0.01;
                    DatasetRow {
                        frame_start: 6.0 * i as f64,
                        scenario: *id,
                        avg_rtt: v,
                        label: Label::from_index(usize::from(high)),
                        features: vec![v; crate::schema::FEATURES.len()],
                    }
                })
                .collect();
            out.insert(*id, LabeledDataset::new(rows));
        }
        out
    }

    #[test]
    fn protocol_on_separable_toy() {
        let mut cfg = ProtocolConfig::standard(3);
        cfg.models = vec![ModelKind::Dt, ModelKind::Knn];
        let data = toy_datasets(&cfg);
        let run = run_protocol(&data, &cfg).unwrap();
        for g in &run.groups {
            assert_eq!(g.metrics.accuracy, 1.0, "{} {}", g.model, g.group);
        }
        assert_eq!(run.train_split.rows, 32 * cfg.trained.len());
        let back = EvaluationRun::from_json(&run.to_json().unwrap()).unwrap();
        assert_eq!(back, run);
        let table = accuracy_table(&run, TestSet::Trained);
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines.len(), 1 + 2 + 5);
        assert_eq!(lines[0].split(',').count(), 1 + 2 * 2);
    }

    #[test]
    fn protocol_errors() {
        let mut cfg = ProtocolConfig::standard(3);
        let mut data = toy_datasets(&cfg);
        cfg.models.clear();
        assert!(matches!(run_protocol(&data, &cfg), Err(Error::Protocol(_))));
        cfg.models = vec![ModelKind::Dt];
        data.remove(&cfg.untrained[0]);
        match run_protocol(&data, &cfg) {
            Err(Error::Protocol(msg)) => assert!(msg.contains("matrix/low"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn leaked_rows_are_rejected() {
        let mut cfg = ProtocolConfig::standard(3);
        cfg.models = vec![ModelKind::Dt];
        let mut data = toy_datasets(&cfg);
        let src = data[&ScenarioId::UNSTRESSED].rows.clone();
        let target = cfg.untrained[0];
        data.get_mut(&target).unwrap().rows = src
            .into_iter()
            .map(|mut r| {
                r.scenario = target;
                r
            })
            .collect();
        assert!(matches!(run_protocol(&data, &cfg), Err(Error::Protocol(_))));
    }
}
