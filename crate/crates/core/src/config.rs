//! Run configuration shared by every pipeline stage.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::ProtocolConfig;
use crate::labeling::DEFAULT_MIN_BASELINE_FRAMES;
use crate::models::{Hyperparams, ModelKind};
use crate::sim::SimConfig;
use crate::stressor::{Catalog, ProfileOverride, ScenarioId, StressLevel, StressorKind};

pub const ENV_SEED: &str = "RTTWATCH_SEED";
pub const ENV_DATA_DIR: &str = "RTTWATCH_DATA_DIR";
pub const ENV_REPORT_DIR: &str = "RTTWATCH_REPORT_DIR";

pub const DEFAULT_SEED: u64 = 0x5EED_0070;

/// Frame counts per generated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RowCounts {
    /// Frames in each of the two baseline runs.
    pub baseline_per_run: usize,
    pub min_baseline_frames: usize,
    pub unstressed: usize,
    pub trained_per_level: usize,
    pub untrained_per_level: usize,
    pub train_fraction: f64,
}

impl Default for RowCounts {
    fn default() -> Self {
        RowCounts {
            baseline_per_run: 1000,
            min_baseline_frames: DEFAULT_MIN_BASELINE_FRAMES,
            unstressed: 500,
            trained_per_level: 500,
            untrained_per_level: 1000,
            train_fraction: 0.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Scenarios {
    pub trained: Vec<StressorKind>,
    pub untrained: Vec<StressorKind>,
}

impl Default for Scenarios {
    fn default() -> Self {
        Scenarios {
            trained: StressorKind::TRAINED.to_vec(),
            untrained: StressorKind::UNTRAINED.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub data_dir: PathBuf,
    pub report_dir: PathBuf,
    /// Master seed. Every run, split and model seed derives from it; the
    /// `sim.seed` field is ignored.
    pub seed: u64,
    pub sim: SimConfig,
    /// Keyed by `kind/level`.
    pub profiles: BTreeMap<String, ProfileOverride>,
    /// Partial per-model sections merged over the bundled defaults.
    pub hyperparams: serde_json::Value,
    pub scenarios: Scenarios,
    pub models: Vec<ModelKind>,
    pub rows: RowCounts,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data_dir: PathBuf::from("rttwatch-data"),
            report_dir: PathBuf::from("rttwatch-reports"),
            seed: DEFAULT_SEED,
            sim: SimConfig::default(),
            profiles: BTreeMap::new(),
            hyperparams: serde_json::Value::Object(Default::default()),
            scenarios: Scenarios::default(),
            models: ModelKind::ALL.to_vec(),
            rows: RowCounts::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("config file: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Reads `path` when given, otherwise starts from defaults; then applies
    /// environment overrides.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| {
                    Error::Config(format!("cannot read config {}: {e}", p.display()))
                })?;
                Self::from_json(&text)?
            }
            None => RunConfig::default(),
        };
        cfg.apply_env(|k| std::env::var(k).ok())?;
        Ok(cfg)
    }

    /// Environment variables may override paths and the seed only.
    pub fn apply_env(&mut self, get: impl Fn(&str) -> Option<String>) -> Result<()> {
        if let Some(s) = get(ENV_SEED) {
            self.seed = parse_seed(&s).map_err(|e| Error::Config(format!("{ENV_SEED}: {e}")))?;
        }
        if let Some(d) = get(ENV_DATA_DIR) {
            self.data_dir = d.into();
        }
        if let Some(d) = get(ENV_REPORT_DIR) {
            self.report_dir = d.into();
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        self.hyperparams()?;
        self.catalog()?;
        for k in &self.scenarios.trained {
            if !k.is_trained() {
                return Err(Error::Config(format!("{k} is not a trained stressor")));
            }
        }
        for k in &self.scenarios.untrained {
            if !k.is_untrained() {
                return Err(Error::Config(format!("{k} is not an untrained stressor")));
            }
        }
        let r = &self.rows;
        if r.unstressed == 0 || r.trained_per_level == 0 {
            return Err(Error::Config("row counts must be >= 1".into()));
        }
        if !(r.train_fraction > 0.0 && r.train_fraction < 1.0) {
            return Err(Error::Config("rows.train_fraction must lie in (0, 1)".into()));
        }
        Ok(())
    }

    pub fn hyperparams(&self) -> Result<Hyperparams> {
        Hyperparams::default().merged(&self.hyperparams)
    }

    /// Built-in catalog with the configured overrides applied.
    pub fn catalog(&self) -> Result<Catalog> {
        let mut c = Catalog::builtin();
        c.apply_overrides(&self.profiles)?;
        Ok(c)
    }

    pub fn trained_scenarios(&self) -> Vec<ScenarioId> {
        let mut v = vec![ScenarioId::UNSTRESSED];
        v.extend(levels(&self.scenarios.trained));
        v
    }

    pub fn untrained_scenarios(&self) -> Vec<ScenarioId> {
        levels(&self.scenarios.untrained)
    }

    pub fn protocol(&self) -> Result<ProtocolConfig> {
        Ok(ProtocolConfig {
            models: self.models.clone(),
            hyperparams: self.hyperparams()?,
            seed: self.seed,
            train_fraction: self.rows.train_fraction,
            trained: self.trained_scenarios(),
            untrained: self.untrained_scenarios(),
        })
    }

    /// Frames generated for a scenario.
    pub fn frames_for(&self, id: ScenarioId) -> usize {
        if id == ScenarioId::UNSTRESSED {
            self.rows.unstressed
        } else if id.kind().is_trained() {
            self.rows.trained_per_level
        } else {
            self.rows.untrained_per_level
        }
    }
}

fn levels(kinds: &[StressorKind]) -> Vec<ScenarioId> {
    kinds
        .iter()
        .flat_map(|k| {
            [StressLevel::Low, StressLevel::High]
                .map(|l| ScenarioId::new(*k, l).expect("stressed kind with a level"))
        })
        .collect()
}

/// Decimal or `0x`-prefixed hexadecimal.
pub fn parse_seed(s: &str) -> std::result::Result<u64, String> {
    let s = s.trim();
    let r = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(h) => u64::from_str_radix(&h.replace('_', ""), 16),
        None => s.replace('_', "").parse(),
    };
    r.map_err(|e| format!("`{s}` is not a u64 seed ({e})"))
}
