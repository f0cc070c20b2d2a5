//! Stressor scenarios and their effect on processing time and KPIs.
//!
//! The catalog is plain data loaded from `data/profiles.json`: a baseline KPI
//! table plus one profile per (kind, level) pair. Nothing here draws random
//! numbers.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labeling::{label_for, Label, Threshold};
use crate::schema::{FEATURES, FeatureSchema};
use crate::sim::Trace;

pub const CATALOG_VERSION: &str = "profiles-v1";
pub const PURITY_TARGET: f64 = 0.97;

const DEFAULT_CATALOG: &str = include_str!("../data/profiles.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StressorKind {
    None,
    Cpu,
    Icache,
    Aio,
    Udp,
    Rawsock,
    Matrix,
    Revio,
    Rawudp,
    Rawpkt,
}

impl StressorKind {
    pub const TRAINED: [StressorKind; 5] = [
        StressorKind::Cpu,
        StressorKind::Icache,
        StressorKind::Aio,
        StressorKind::Udp,
        StressorKind::Rawsock,
    ];
    pub const UNTRAINED: [StressorKind; 4] = [
        StressorKind::Matrix,
        StressorKind::Revio,
        StressorKind::Rawudp,
        StressorKind::Rawpkt,
    ];

    pub fn is_trained(self) -> bool {
        Self::TRAINED.contains(&self)
    }

    pub fn is_untrained(self) -> bool {
        Self::UNTRAINED.contains(&self)
    }

    /// The trained kinds whose KPI channel families an untrained kind shares.
    pub fn trained_analogues(self) -> &'static [StressorKind] {
        match self {
            StressorKind::Matrix => &[StressorKind::Cpu, StressorKind::Icache],
            StressorKind::Revio => &[StressorKind::Aio],
            StressorKind::Rawudp | StressorKind::Rawpkt => &[StressorKind::Rawsock],
            _ => &[],
        }
    }

    pub fn is_network(self) -> bool {
        matches!(
            self,
            StressorKind::Udp | StressorKind::Rawsock | StressorKind::Rawudp | StressorKind::Rawpkt
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            StressorKind::None => "none",
            StressorKind::Cpu => "cpu",
            StressorKind::Icache => "icache",
            StressorKind::Aio => "aio",
            StressorKind::Udp => "udp",
            StressorKind::Rawsock => "rawsock",
            StressorKind::Matrix => "matrix",
            StressorKind::Revio => "revio",
            StressorKind::Rawudp => "rawudp",
            StressorKind::Rawpkt => "rawpkt",
        }
    }

    /// KPI channels a profile of this kind is allowed to perturb.
    pub fn channel_family(self) -> &'static [&'static str] {
        const CPU: &[&str] = &[
            "procs_runnable",
            "context_switches",
            "interrupts",
            "cpu_user",
            "cpu_sys",
            "mem_free",
            "mem_cache",
        ];
        const DISK: &[&str] = &[
            "procs_runnable",
            "procs_blocked",
            "blocks_in",
            "blocks_out",
            "context_switches",
            "interrupts",
            "cpu_sys",
            "cpu_wait",
            "mem_buff",
            "mem_cache",
            "tps",
            "kb_read_per_s",
            "kb_wrtn_per_s",
        ];
        const NET: &[&str] = &[
            "procs_runnable",
            "context_switches",
            "interrupts",
            "cpu_sys",
            "tcp_segments_in",
            "tcp_segments_out",
            "tcp_retransmits",
            "udp_in",
            "udp_out",
            "udp_errors",
        ];
        match self {
            StressorKind::None => &[],
            StressorKind::Cpu | StressorKind::Icache | StressorKind::Matrix => CPU,
            StressorKind::Aio | StressorKind::Revio => DISK,
            _ => NET,
        }
    }

    pub fn all() -> impl Iterator<Item = StressorKind> {
        std::iter::once(StressorKind::None)
            .chain(Self::TRAINED)
            .chain(Self::UNTRAINED)
    }
}

impl fmt::Display for StressorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StressorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StressorKind::all()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Domain(format!("unknown stressor kind `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StressLevel {
    None,
    Low,
    High,
}

impl StressLevel {
    pub fn name(self) -> &'static str {
        match self {
            StressLevel::None => "none",
            StressLevel::Low => "low",
            StressLevel::High => "high",
        }
    }
}

impl fmt::Display for StressLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StressLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(StressLevel::None),
            "low" => Ok(StressLevel::Low),
            "high" => Ok(StressLevel::High),
            _ => Err(Error::Domain(format!("unknown stress level `{s}`"))),
        }
    }
}

/// A (kind, level) scenario. Construction enforces `kind == none ⇔ level == none`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "RawScenario", into = "RawScenario")]
pub struct ScenarioId {
    kind: StressorKind,
    level: StressLevel,
}

#[derive(Serialize, Deserialize)]
struct RawScenario {
    kind: StressorKind,
    level: StressLevel,
}

impl TryFrom<RawScenario> for ScenarioId {
    type Error = Error;
    fn try_from(r: RawScenario) -> Result<Self> {
        ScenarioId::new(r.kind, r.level)
    }
}

impl From<ScenarioId> for RawScenario {
    fn from(s: ScenarioId) -> Self {
        RawScenario {
            kind: s.kind,
            level: s.level,
        }
    }
}

impl ScenarioId {
    pub const UNSTRESSED: ScenarioId = ScenarioId {
        kind: StressorKind::None,
        level: StressLevel::None,
    };

    pub fn new(kind: StressorKind, level: StressLevel) -> Result<Self> {
        if (kind == StressorKind::None) != (level == StressLevel::None) {
            return Err(Error::Domain(format!(
                "invalid scenario {kind}/{level}: kind none requires level none and vice versa"
            )));
        }
        Ok(ScenarioId { kind, level })
    }

    pub fn kind(&self) -> StressorKind {
        self.kind
    }

    pub fn level(&self) -> StressLevel {
        self.level
    }

    pub fn expected_class(&self) -> Label {
        match self.level {
            StressLevel::High => Label::Anomalous,
            _ => Label::NonAnomalous,
        }
    }

    /// Every valid scenario: unstressed, then each kind at low and high.
    pub fn all() -> Vec<ScenarioId> {
        let mut v = vec![ScenarioId::UNSTRESSED];
        for kind in StressorKind::TRAINED.into_iter().chain(StressorKind::UNTRAINED) {
            for level in [StressLevel::Low, StressLevel::High] {
                v.push(ScenarioId { kind, level });
            }
        }
        v
    }

    /// `kind_level`, used for file names.
    pub fn slug(&self) -> String {
        format!("{}_{}", self.kind, self.level)
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.kind, self.level)
    }
}

impl FromStr for ScenarioId {
    type Err = Error;

    /// Accepts `kind/level`, `kind_level`, or a bare `none`.
    fn from_str(s: &str) -> Result<Self> {
        if s == "none" || s == "unstressed" {
            return Ok(ScenarioId::UNSTRESSED);
        }
        let (k, l) = s
            .split_once(['/', '_'])
            .ok_or_else(|| Error::Domain(format!("scenario `{s}` is not of the form kind/level")))?;
        ScenarioId::new(k.parse()?, l.parse()?)
    }
}

/// Effect of one stressor configuration on the server.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StressorProfile {
    pub kind: StressorKind,
    pub level: StressLevel,
    /// Multiplier on the mean server processing time.
    pub processing_inflation: f64,
    /// Additive per-feature shifts in feature units. Missing names are zero.
    #[serde(default)]
    pub kpi_deltas: BTreeMap<String, f64>,
    /// Probability per frame of a transient multiplicative RTT spike.
    #[serde(default)]
    pub burst_probability: f64,
    #[serde(default = "one")]
    pub burst_multiplier: f64,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub notes: String,
}

fn one() -> f64 {
    1.0
}

impl StressorProfile {
    pub fn unstressed() -> Self {
        StressorProfile {
            kind: StressorKind::None,
            level: StressLevel::None,
            processing_inflation: 1.0,
            kpi_deltas: BTreeMap::new(),
            burst_probability: 0.0,
            burst_multiplier: 1.0,
            notes: String::new(),
        }
    }

    pub fn scenario(&self) -> ScenarioId {
        ScenarioId {
            kind: self.kind,
            level: self.level,
        }
    }

    /// Delta vector in schema order.
    pub fn delta_vector(&self) -> Vec<f64> {
        FEATURES
            .iter()
            .map(|f| self.kpi_deltas.get(f.name).copied().unwrap_or(0.0))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let id = ScenarioId::new(self.kind, self.level)?;
        let bad = |m: String| Err(Error::Domain(format!("profile {id}: {m}")));
        if !(self.processing_inflation >= 1.0 && self.processing_inflation.is_finite()) {
            return bad(format!(
                "processing_inflation must be >= 1, got {}",
                self.processing_inflation
            ));
        }
        if !(0.0..=1.0).contains(&self.burst_probability) {
            return bad("burst_probability must lie in [0, 1]".into());
        }
        if !(self.burst_multiplier >= 1.0 && self.burst_multiplier.is_finite()) {
            return bad("burst_multiplier must be >= 1".into());
        }
        let schema = FeatureSchema::canonical();
        for (name, v) in &self.kpi_deltas {
            if schema.index_of(name).is_none() {
                return bad(format!("unknown feature `{name}` in kpi_deltas"));
            }
            if !v.is_finite() {
                return bad(format!("delta for `{name}` is not finite"));
            }
        }
        if self.kind == StressorKind::None
            && (self.processing_inflation != 1.0
                || self.kpi_deltas.values().any(|v| *v != 0.0)
                || self.burst_probability != 0.0)
        {
            return bad("unstressed profile must be the identity".into());
        }
        Ok(())
    }
}

/// Baseline behaviour of one KPI channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Channel {
    pub mean: f64,
    /// Standard deviation of frame-to-frame noise.
    pub noise: f64,
    /// Shift per unit of excess processing load (frame load ratio minus one).
    #[serde(default)]
    pub load: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CatalogFile {
    version: String,
    #[serde(default)]
    notes: Vec<String>,
    baseline: BTreeMap<String, Channel>,
    profiles: Vec<StressorProfile>,
}

/// Baseline KPI table plus every stressor profile.
#[derive(Debug, Clone, PartialEq)]
pub struct Catalog {
    pub version: String,
    pub notes: Vec<String>,
    /// Baseline channels in schema order.
    pub baseline: Vec<Channel>,
    profiles: BTreeMap<ScenarioId, StressorProfile>,
}

/// Partial profile used by config overrides.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileOverride {
    pub processing_inflation: Option<f64>,
    pub kpi_deltas: Option<BTreeMap<String, f64>>,
    pub burst_probability: Option<f64>,
    pub burst_multiplier: Option<f64>,
}

impl Catalog {
    /// The committed catalog.
    pub fn builtin() -> Self {
        Self::from_json(DEFAULT_CATALOG).expect("built-in profile catalog is valid")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: CatalogFile = serde_json::from_str(text)?;
        if file.version != CATALOG_VERSION {
            return Err(Error::Version {
                expected: CATALOG_VERSION.into(),
                found: file.version,
            });
        }
        let mut baseline = Vec::with_capacity(FEATURES.len());
        for f in FEATURES.iter() {
            let ch = file.baseline.get(f.name).ok_or_else(|| {
                Error::Schema(format!("baseline table lacks feature `{}`", f.name))
            })?;
            baseline.push(*ch);
        }
        if let Some(extra) = file
            .baseline
            .keys()
            .find(|k| FEATURES.iter().all(|f| f.name != k.as_str()))
        {
            return Err(Error::Schema(format!("baseline table has unknown feature `{extra}`")));
        }
        let mut profiles = BTreeMap::new();
        profiles.insert(ScenarioId::UNSTRESSED, StressorProfile::unstressed());
        for p in file.profiles {
            p.validate()?;
            if p.kind == StressorKind::None {
                continue;
            }
            let id = p.scenario();
            if profiles.insert(id, p).is_some() {
                return Err(Error::Domain(format!("duplicate profile for {id}")));
            }
        }
        let cat = Catalog {
            version: file.version,
            notes: file.notes,
            baseline,
            profiles,
        };
        cat.check_complete()?;
        Ok(cat)
    }

    pub fn to_json(&self) -> Result<String> {
        let file = CatalogFile {
            version: self.version.clone(),
            notes: self.notes.clone(),
            baseline: FEATURES
                .iter()
                .zip(&self.baseline)
                .map(|(f, c)| (f.name.to_string(), *c))
                .collect(),
            profiles: self
                .profiles
                .values()
                .filter(|p| p.kind != StressorKind::None)
                .cloned()
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    fn check_complete(&self) -> Result<()> {
        let missing: Vec<String> = ScenarioId::all()
            .into_iter()
            .filter(|id| !self.profiles.contains_key(id))
            .map(|id| id.to_string())
            .collect();
        if !missing.is_empty() {
            return Err(Error::Domain(format!(
                "catalog is missing profiles: {}",
                missing.join(", ")
            )));
        }
        for p in self.profiles.values() {
            if p.level == StressLevel::High {
                let low = &self.profiles[&ScenarioId::new(p.kind, StressLevel::Low)?];
                if p.processing_inflation <= low.processing_inflation {
                    return Err(Error::Domain(format!(
                        "{}: high inflation {} must exceed low inflation {}",
                        p.kind, p.processing_inflation, low.processing_inflation
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn profile_for(&self, kind: StressorKind, level: StressLevel) -> Result<&StressorProfile> {
        let id = ScenarioId::new(kind, level)?;
        self.profiles
            .get(&id)
            .ok_or_else(|| Error::Domain(format!("no profile for {id}")))
    }

    pub fn profile(&self, id: ScenarioId) -> &StressorProfile {
        // Completeness is checked at construction.
        &self.profiles[&id]
    }

    pub fn profiles(&self) -> impl Iterator<Item = &StressorProfile> {
        self.profiles.values()
    }

    pub fn set_inflation(&mut self, id: ScenarioId, inflation: f64) -> Result<()> {
        let p = self
            .profiles
            .get_mut(&id)
            .ok_or_else(|| Error::Domain(format!("no profile for {id}")))?;
        p.processing_inflation = inflation;
        p.validate()
    }

    /// Applies `kind/level`-keyed partial overrides and revalidates.
    pub fn apply_overrides(&mut self, overrides: &BTreeMap<String, ProfileOverride>) -> Result<()> {
        for (key, o) in overrides {
            let id: ScenarioId = key
                .parse()
                .map_err(|e| Error::Config(format!("profile override `{key}`: {e}")))?;
            let p = self.profiles.get_mut(&id).expect("complete catalog");
            if let Some(v) = o.processing_inflation {
                p.processing_inflation = v;
            }
            if let Some(d) = &o.kpi_deltas {
                p.kpi_deltas = d.clone();
            }
            if let Some(v) = o.burst_probability {
                p.burst_probability = v;
            }
            if let Some(v) = o.burst_multiplier {
                p.burst_multiplier = v;
            }
            p.validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        self.check_complete().map_err(|e| Error::Config(e.to_string()))
    }
}

/// Looks up a profile in the built-in catalog.
pub fn profile_for(kind: StressorKind, level: StressLevel) -> Result<StressorProfile> {
    Catalog::builtin().profile_for(kind, level).cloned()
}

/// Fraction of frames whose RTT label matches `expected`.
pub fn validate_purity(trace: &Trace, threshold: &Threshold, expected: Label) -> Result<f64> {
    purity_of(trace.frames.iter().map(|f| f.rtt.avg_rtt), threshold, expected)
}

pub fn purity_of(
    avg_rtts: impl IntoIterator<Item = f64>,
    threshold: &Threshold,
    expected: Label,
) -> Result<f64> {
    let (mut hit, mut n) = (0usize, 0usize);
    for rtt in avg_rtts {
        n += 1;
        if label_for(rtt, threshold) == expected {
            hit += 1;
        }
    }
    if n == 0 {
        return Err(Error::Domain("purity of an empty trace is undefined".into()));
    }
    Ok(hit as f64 / n as f64)
}
