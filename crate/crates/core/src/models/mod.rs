//! The seven classifiers behind one train/predict interface.

pub mod distance;
pub mod forest;
pub mod gnb;
pub mod kernel;
pub mod knn;
pub mod svm;
pub mod tree;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labeling::{Label, Scaling};

pub use distance::Distance;
pub use forest::{ForestParams, RandomForest};
pub use gnb::{GaussianNb, GnbParams};
pub use kernel::Kernel;
pub use knn::{KnnModel, KnnParams};
pub use svm::{NuSvrParams, OcSvmParams, SolverParams, SvcParams, SvmModel};
pub use tree::{DecisionTree, FeaturesPerSplit, SplitCriterion, TreeParams};

pub const MODEL_VERSION: &str = "model-v1";
const DEFAULT_HYPERPARAMS: &str = include_str!("../../data/hyperparams.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Gnb,
    Knn,
    Dt,
    Rf,
    Svc,
    NuSvr,
    OcSvm,
}

impl ModelKind {
    pub const ALL: [ModelKind; 7] = [
        ModelKind::Gnb,
        ModelKind::NuSvr,
        ModelKind::OcSvm,
        ModelKind::Svc,
        ModelKind::Knn,
        ModelKind::Dt,
        ModelKind::Rf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Gnb => "gnb",
            ModelKind::Knn => "knn",
            ModelKind::Dt => "dt",
            ModelKind::Rf => "rf",
            ModelKind::Svc => "svc",
            ModelKind::NuSvr => "nu_svr",
            ModelKind::OcSvm => "oc_svm",
        }
    }

    /// Trained on non-anomalous rows only.
    pub fn is_one_class(self) -> bool {
        self == ModelKind::OcSvm
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase().replace('-', "_");
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s || (s == "nusvr" && *k == ModelKind::NuSvr))
            .ok_or_else(|| Error::Config(format!("unknown model '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hyperparams {
    pub gnb: GnbParams,
    pub knn: KnnParams,
    pub dt: TreeParams,
    pub rf: ForestParams,
    pub svc: SvcParams,
    pub nu_svr: NuSvrParams,
    pub oc_svm: OcSvmParams,
}

impl Default for Hyperparams {
    fn default() -> Self {
        serde_json::from_str(DEFAULT_HYPERPARAMS).expect("bundled hyperparams.json is valid")
    }
}

impl Hyperparams {
    pub fn from_json(text: &str) -> Result<Self> {
        let hp: Hyperparams = serde_json::from_str(text)?;
        hp.validate()?;
        Ok(hp)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Replaces the sections present in `overrides` (a partial JSON object
    /// keyed by model name).
    pub fn merged(&self, overrides: &serde_json::Value) -> Result<Self> {
        let mut base = serde_json::to_value(self)?;
        let (Some(obj), Some(over)) = (base.as_object_mut(), overrides.as_object()) else {
            return Err(Error::Config("hyperparameter overrides must be an object".into()));
        };
        for (k, v) in over {
            let Some(slot) = obj.get_mut(k) else {
                return Err(Error::Config(format!("unknown model '{k}' in hyperparameters")));
            };
            match (slot.as_object_mut(), v.as_object()) {
                (Some(s), Some(v)) => {
                    for (field, value) in v {
                        s.insert(field.clone(), value.clone());
                    }
                }
                _ => *slot = v.clone(),
            }
        }
        let hp: Hyperparams = serde_json::from_value(base)
            .map_err(|e| Error::Config(format!("hyperparameter overrides: {e}")))?;
        hp.validate()?;
        Ok(hp)
    }

    pub fn validate(&self) -> Result<()> {
        self.knn.validate()?;
        self.dt.validate()?;
        self.rf.validate()?;
        self.svc.kernel.validate()?;
        self.nu_svr.kernel.validate()?;
        self.oc_svm.kernel.validate()?;
        if let Kernel::Polynomial { degree, .. } = self.nu_svr.kernel {
            if degree != 7 {
                log::warn!("nu_svr polynomial degree {degree} differs from the reference degree 7");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Fitted {
    Gnb(GaussianNb),
    Knn(KnnModel),
    Dt(DecisionTree),
    Rf(RandomForest),
    Svc(SvmModel),
    NuSvr { model: SvmModel, decision_cutoff: f64 },
    OcSvm(SvmModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub non_anomalous_rows: usize,
    pub anomalous_rows: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub version: String,
    pub kind: ModelKind,
    pub n_features: usize,
    pub scaling: Option<Scaling>,
    pub meta: TrainingMeta,
    pub fitted: Fitted,
}

/// Fits `kind` on already-scaled rows.
pub fn train(kind: ModelKind, x: &[Vec<f64>], y: &[Label], hp: &Hyperparams, seed: u64) -> Result<TrainedModel> {
    if x.is_empty() {
        return Err(Error::Domain("cannot train on zero rows".into()));
    }
    if x.len() != y.len() {
        return Err(Error::Contract(format!("{} rows but {} labels", x.len(), y.len())));
    }
    let n_features = x[0].len();
    if let Some(i) = x.iter().position(|r| r.len() != n_features) {
        return Err(Error::Schema(format!(
            "row {i} has {} features, expected {n_features}",
            x[i].len()
        )));
    }
    let anomalous = y.iter().filter(|l| l.is_anomalous()).count();
    let normal = y.len() - anomalous;
    if kind.is_one_class() {
        if anomalous > 0 {
            return Err(Error::Contract(format!(
                "oc_svm must be trained on non-anomalous rows only, got {anomalous} anomalous"
            )));
        }
    } else if anomalous == 0 || normal == 0 {
        return Err(Error::Domain(format!("{kind} needs rows of both classes")));
    }
    let fitted = match kind {
        ModelKind::Gnb => Fitted::Gnb(GaussianNb::fit(x, y, &hp.gnb)?),
        ModelKind::Knn => Fitted::Knn(KnnModel::fit(x, y, hp.knn)?),
        ModelKind::Dt => Fitted::Dt(DecisionTree::fit(x, y, None, hp.dt, None)?),
        ModelKind::Rf => Fitted::Rf(RandomForest::fit(x, y, &hp.rf, seed)?),
        ModelKind::Svc => Fitted::Svc(svm::fit_svc(x, y, &hp.svc)?),
        ModelKind::NuSvr => Fitted::NuSvr {
            model: svm::fit_nu_svr(x, y, &hp.nu_svr)?,
            decision_cutoff: hp.nu_svr.decision_cutoff,
        },
        ModelKind::OcSvm => Fitted::OcSvm(svm::fit_one_class(x, &hp.oc_svm)?),
    };
    Ok(TrainedModel {
        version: MODEL_VERSION.into(),
        kind,
        n_features,
        scaling: None,
        meta: TrainingMeta {
            non_anomalous_rows: normal,
            anomalous_rows: anomalous,
            seed,
        },
        fitted,
    })
}

impl TrainedModel {
    pub fn with_scaling(mut self, scaling: Scaling) -> Self {
        self.scaling = Some(scaling);
        self
    }

    /// Classifies an already-scaled feature vector.
    pub fn predict(&self, features: &[f64]) -> Result<Label> {
        if features.len() != self.n_features {
            return Err(Error::Schema(format!(
                "model expects {} features, got {}",
                self.n_features,
                features.len()
            )));
        }
        Ok(self.predict_unchecked(features))
    }

    /// Scales raw features with the attached scaling, then classifies.
    pub fn predict_raw(&self, features: &[f64]) -> Result<Label> {
        match &self.scaling {
            Some(s) => self.predict(&s.apply(features)?),
            None => self.predict(features),
        }
    }

    pub(crate) fn predict_unchecked(&self, x: &[f64]) -> Label {
        match &self.fitted {
            Fitted::Gnb(m) => m.predict(x),
            Fitted::Knn(m) => m.predict(x),
            Fitted::Dt(m) => m.predict(x),
            Fitted::Rf(m) => m.predict(x),
            Fitted::Svc(m) => anomalous_if(m.decision(x) > 0.0),
            Fitted::NuSvr {
                model,
                decision_cutoff,
            } => anomalous_if(model.decision(x) >= *decision_cutoff),
            Fitted::OcSvm(m) => anomalous_if(m.decision(x) < 0.0),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: TrainedModel = serde_json::from_str(text)?;
        if m.version != MODEL_VERSION {
            return Err(Error::Version {
                expected: MODEL_VERSION.into(),
                found: m.version,
            });
        }
        Ok(m)
    }
}

fn anomalous_if(b: bool) -> Label {
    if b {
        Label::Anomalous
    } else {
        Label::NonAnomalous
    }
}
