//! Canonical KPI feature schema and the per-frame feature vector.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: &str = "kpi-v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tool {
    Vmstat,
    Iostat,
    Netstat,
}

impl Tool {
    pub const ALL: [Tool; 3] = [Tool::Vmstat, Tool::Iostat, Tool::Netstat];

    pub fn name(self) -> &'static str {
        match self {
            Tool::Vmstat => "vmstat",
            Tool::Iostat => "iostat",
            Tool::Netstat => "netstat",
        }
    }
}

/// How a feature is sampled by its source tool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampling {
    /// Instantaneous or already per-interval value reported by the tool.
    Gauge,
    /// Cumulative counter, differenced between snapshots into a per-second rate.
    Counter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Feature {
    pub name: &'static str,
    pub unit: &'static str,
    pub tool: Tool,
    pub sampling: Sampling,
}

const fn gauge(name: &'static str, unit: &'static str, tool: Tool) -> Feature {
    Feature {
        name,
        unit,
        tool,
        sampling: Sampling::Gauge,
    }
}

const fn counter(name: &'static str, unit: &'static str) -> Feature {
    Feature {
        name,
        unit,
        tool: Tool::Netstat,
        sampling: Sampling::Counter,
    }
}

pub const FEATURES: [Feature; 24] = [
    gauge("procs_runnable", "count", Tool::Vmstat),
    gauge("procs_blocked", "count", Tool::Vmstat),
    gauge("mem_free", "KB", Tool::Vmstat),
    gauge("mem_buff", "KB", Tool::Vmstat),
    gauge("mem_cache", "KB", Tool::Vmstat),
    gauge("swap_in", "KB/s", Tool::Vmstat),
    gauge("swap_out", "KB/s", Tool::Vmstat),
    gauge("blocks_in", "blk/s", Tool::Vmstat),
    gauge("blocks_out", "blk/s", Tool::Vmstat),
    gauge("interrupts", "/s", Tool::Vmstat),
    gauge("context_switches", "/s", Tool::Vmstat),
    gauge("cpu_user", "%", Tool::Vmstat),
    gauge("cpu_sys", "%", Tool::Vmstat),
    gauge("cpu_idle", "%", Tool::Vmstat),
    gauge("cpu_wait", "%", Tool::Vmstat),
    gauge("tps", "/s", Tool::Iostat),
    gauge("kb_read_per_s", "KB/s", Tool::Iostat),
    gauge("kb_wrtn_per_s", "KB/s", Tool::Iostat),
    counter("tcp_segments_in", "/s"),
    counter("tcp_segments_out", "/s"),
    counter("tcp_retransmits", "/s"),
    counter("udp_in", "/s"),
    counter("udp_out", "/s"),
    counter("udp_errors", "/s"),
];

pub const CPU_USER: usize = 11;
pub const CPU_SYS: usize = 12;
pub const CPU_IDLE: usize = 13;
pub const CPU_WAIT: usize = 14;

pub fn is_percentage(index: usize) -> bool {
    (CPU_USER..=CPU_WAIT).contains(&index)
}

/// Ordered feature names plus the version string written into every dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub version: String,
    pub names: Vec<String>,
}

impl Default for FeatureSchema {
    fn default() -> Self {
        Self::canonical()
    }
}

impl FeatureSchema {
    pub fn canonical() -> Self {
        FeatureSchema {
            version: SCHEMA_VERSION.to_string(),
            names: FEATURES.iter().map(|f| f.name.to_string()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn check_len(&self, got: usize) -> Result<()> {
        if got != self.len() {
            return Err(Error::Schema(format!(
                "expected {} features, got {got}",
                self.len()
            )));
        }
        Ok(())
    }
}

pub fn feature_index(name: &str) -> Option<usize> {
    FEATURES.iter().position(|f| f.name == name)
}

/// One logging interval's server-side feature vector, in schema order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpiFrame {
    pub frame_start: f64,
    pub frame_duration: f64,
    pub features: Vec<f64>,
}

impl KpiFrame {
    pub fn new(frame_start: f64, frame_duration: f64, features: Vec<f64>) -> Result<Self> {
        FeatureSchema::canonical().check_len(features.len())?;
        if let Some(i) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::Format(format!(
                "feature `{}` is not finite",
                FEATURES[i].name
            )));
        }
        Ok(KpiFrame {
            frame_start,
            frame_duration,
            features,
        })
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        feature_index(name).map(|i| self.features[i])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn names_are_unique() {
        let set: HashSet<_> = FEATURES.iter().map(|f| f.name).collect();
        assert_eq!(set.len(), FEATURES.len());
        assert_eq!(FEATURES[CPU_IDLE].name, "cpu_idle");
        assert_eq!(FEATURES[CPU_USER].name, "cpu_user");
        assert_eq!(FEATURES[CPU_WAIT].name, "cpu_wait");
    }

    #[test]
    fn frame_rejects_wrong_length_and_nan() {
        assert!(matches!(
            KpiFrame::new(0.0, 6.0, vec![0.0; 3]),
            Err(Error::Schema(_))
        ));
        let mut v = vec![1.0; FEATURES.len()];
        v[4] = f64::NAN;
        assert!(matches!(KpiFrame::new(0.0, 6.0, v), Err(Error::Format(_))));
    }
}
