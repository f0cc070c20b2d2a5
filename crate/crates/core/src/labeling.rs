//! Frame-averaged RTT, the 3σ anomaly cutoff, labels and min-max scaling.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schema::{FeatureSchema, KpiFrame};
use crate::stressor::ScenarioId;

pub const DEFAULT_MIN_BASELINE_FRAMES: usize = 300;
pub const THRESHOLD_VERSION: &str = "threshold-v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Label {
    NonAnomalous,
    Anomalous,
}

impl Label {
    pub fn flip(self) -> Label {
        match self {
            Label::NonAnomalous => Label::Anomalous,
            Label::Anomalous => Label::NonAnomalous,
        }
    }

    pub fn as_index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Label {
        if i == 0 {
            Label::NonAnomalous
        } else {
            Label::Anomalous
        }
    }

    pub fn is_anomalous(self) -> bool {
        self == Label::Anomalous
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::NonAnomalous => "non-anomalous",
            Label::Anomalous => "anomalous",
        })
    }
}

/// Mean client RTT over one logging frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameRtt {
    pub frame_start: f64,
    pub avg_rtt: f64,
    pub sample_count: usize,
}

impl FrameRtt {
    pub fn new(frame_start: f64, avg_rtt: f64, sample_count: usize) -> Result<Self> {
        if sample_count == 0 {
            return Err(Error::Domain("frame has no RTT samples".into()));
        }
        if !(avg_rtt > 0.0 && avg_rtt.is_finite()) {
            return Err(Error::Domain(format!("frame RTT must be positive, got {avg_rtt}")));
        }
        Ok(FrameRtt {
            frame_start,
            avg_rtt,
            sample_count,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub baseline_mean: f64,
    pub baseline_frame_std: f64,
    /// `baseline_mean + 3 * baseline_frame_std`.
    pub cutoff: f64,
    pub baseline_frame_count: usize,
    /// Set when the baseline had zero variance and the cutoff collapsed to the mean.
    #[serde(default)]
    pub degenerate: bool,
}

#[derive(Serialize, Deserialize)]
struct ThresholdFile {
    version: String,
    #[serde(flatten)]
    threshold: Threshold,
}

impl Threshold {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ThresholdFile {
            version: THRESHOLD_VERSION.into(),
            threshold: *self,
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ThresholdFile = serde_json::from_str(text)?;
        if file.version != THRESHOLD_VERSION {
            return Err(Error::Version {
                expected: THRESHOLD_VERSION.into(),
                found: file.version,
            });
        }
        Ok(file.threshold)
    }
}

/// Streaming mean and (n−1) variance.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub count: usize,
    pub mean: f64,
    /// Sum of squared deviations from the mean.
    pub m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    /// Chan et al. parallel combination.
    pub fn merge(&self, other: &Moments) -> Moments {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let n = (self.count + other.count) as f64;
        let d = other.mean - self.mean;
        Moments {
            count: self.count + other.count,
            mean: self.mean + d * other.count as f64 / n,
            m2: self.m2 + other.m2 + d * d * self.count as f64 * other.count as f64 / n,
        }
    }

    pub fn sample_std(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / (self.count - 1) as f64).sqrt()
        }
    }
}

impl FromIterator<f64> for Moments {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut m = Moments::default();
        for x in iter {
            m.push(x);
        }
        m
    }
}

/// Cutoff from an unstressed baseline: mean plus three sample standard
/// deviations of the frame averages.
pub fn compute_threshold(baseline: &[FrameRtt], min_frames: usize) -> Result<Threshold> {
    if baseline.len() < min_frames.max(2) {
        return Err(Error::Domain(format!(
            "baseline has {} frames, at least {} required",
            baseline.len(),
            min_frames.max(2)
        )));
    }
    let m: Moments = baseline.iter().map(|f| f.avg_rtt).collect();
    let std = m.sample_std();
    let degenerate = std == 0.0;
    if degenerate {
        log::warn!("baseline RTT has zero variance; cutoff equals the mean");
    }
    Ok(Threshold {
        baseline_mean: m.mean,
        baseline_frame_std: std,
        cutoff: m.mean + 3.0 * std,
        baseline_frame_count: baseline.len(),
        degenerate,
    })
}

/// Frames at or above the cutoff are anomalous.
pub fn label_for(avg_rtt: f64, threshold: &Threshold) -> Label {
    if avg_rtt >= threshold.cutoff {
        Label::Anomalous
    } else {
        Label::NonAnomalous
    }
}

/// One dataset row: a frame's KPIs with its RTT, scenario and label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRow {
    pub frame_start: f64,
    pub scenario: ScenarioId,
    pub avg_rtt: f64,
    pub label: Label,
    pub features: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub schema: FeatureSchema,
    pub rows: Vec<DatasetRow>,
}

impl LabeledDataset {
    pub fn new(rows: Vec<DatasetRow>) -> Self {
        LabeledDataset {
            schema: FeatureSchema::canonical(),
            rows,
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn count(&self, label: Label) -> usize {
        self.rows.iter().filter(|r| r.label == label).count()
    }
}

pub fn label_frames<'a>(
    frames: impl IntoIterator<Item = (&'a KpiFrame, &'a FrameRtt)>,
    threshold: &Threshold,
    scenario: ScenarioId,
) -> Result<Vec<DatasetRow>> {
    let rows: Vec<DatasetRow> = frames
        .into_iter()
        .map(|(kpi, rtt)| DatasetRow {
            frame_start: kpi.frame_start,
            scenario,
            avg_rtt: rtt.avg_rtt,
            label: label_for(rtt.avg_rtt, threshold),
            features: kpi.features.clone(),
        })
        .collect();
    if rows.is_empty() {
        return Err(Error::Domain("no frames to label".into()));
    }
    Ok(rows)
}

/// Per-feature min-max scaling fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub schema_version: String,
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
}

pub fn fit_scaling<'a>(rows: impl IntoIterator<Item = &'a [f64]>) -> Result<Scaling> {
    let mut it = rows.into_iter();
    let first = it
        .next()
        .ok_or_else(|| Error::Domain("cannot fit scaling on zero rows".into()))?;
    let mut mins = first.to_vec();
    let mut maxs = first.to_vec();
    for row in it {
        if row.len() != mins.len() {
            return Err(Error::Schema(format!(
                "row has {} features, expected {}",
                row.len(),
                mins.len()
            )));
        }
        for (i, v) in row.iter().enumerate() {
            mins[i] = mins[i].min(*v);
            maxs[i] = maxs[i].max(*v);
        }
    }
    Ok(Scaling {
        schema_version: crate::schema::SCHEMA_VERSION.into(),
        mins,
        maxs,
    })
}

impl Scaling {
    pub fn len(&self) -> usize {
        self.mins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mins.is_empty()
    }

    /// Maps `x → (x − min)/(max − min)`; constant features map to 0.
    /// Values outside the fitted range are not clamped.
    pub fn apply(&self, features: &[f64]) -> Result<Vec<f64>> {
        if features.len() != self.mins.len() {
            return Err(Error::Schema(format!(
                "scaling fitted on {} features, got {}",
                self.mins.len(),
                features.len()
            )));
        }
        Ok(features
            .iter()
            .zip(self.mins.iter().zip(&self.maxs))
            .map(|(x, (lo, hi))| {
                let span = hi - lo;
                if span > 0.0 {
                    (x - lo) / span
                } else {
                    0.0
                }
            })
            .collect())
    }
}

pub fn apply_scaling(dataset: &LabeledDataset, scaling: &Scaling) -> Result<Vec<Vec<f64>>> {
    if dataset.schema.version != scaling.schema_version || dataset.schema.len() != scaling.len() {
        return Err(Error::Schema(format!(
            "dataset schema {} ({} features) does not match scaling {} ({} features)",
            dataset.schema.version,
            dataset.schema.len(),
            scaling.schema_version,
            scaling.len()
        )));
    }
    dataset.rows.iter().map(|r| scaling.apply(&r.features)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frames(values: &[f64]) -> Vec<FrameRtt> {
        values
            .iter()
            .enumerate()
            .map(|(i, v)| FrameRtt::new(6.0 * i as f64, *v, 420).unwrap())
            .collect()
    }

    fn table1_threshold() -> Threshold {
        Threshold {
            baseline_mean: 4.675,
            baseline_frame_std: 1.355,
            cutoff: 4.675 + 3.0 * 1.355,
            baseline_frame_count: 2000,
            degenerate: false,
        }
    }

    #[test]
    fn hand_computed_threshold() {
        let t = compute_threshold(&frames(&[4.0, 5.0, 6.0]), 3).unwrap();
        assert!((t.baseline_mean - 5.0).abs() < 1e-15);
        assert!((t.baseline_frame_std - 1.0).abs() < 1e-15);
        assert!((t.cutoff - 8.0).abs() < 1e-15);
        assert!(!t.degenerate);
    }

    #[test]
    fn table_one_cutoff() {
        // 4.675 + 3 × 1.355 = 8.740; the printed 8.741 comes from unrounded inputs.
        assert!((table1_threshold().cutoff - 8.741).abs() < 0.01);
    }

    #[test]
    fn zero_variance_is_degenerate() {
        let t = compute_threshold(&frames(&[5.0; 10]), 3).unwrap();
        assert_eq!(t.cutoff, 5.0);
        assert!(t.degenerate);
    }

    #[test]
    fn too_few_frames() {
        let err = compute_threshold(&frames(&[5.0; 10]), DEFAULT_MIN_BASELINE_FRAMES).unwrap_err();
        assert!(err.to_string().contains("300"));
    }

    #[test]
    fn labels_against_table_one() {
        let t = table1_threshold();
        assert_eq!(label_for(8.8, &t), Label::Anomalous);
        assert_eq!(label_for(4.675, &t), Label::NonAnomalous);
        assert_eq!(label_for(t.cutoff, &t), Label::Anomalous);
    }

    #[test]
    fn min_max_definition() {
        let rows: Vec<Vec<f64>> = vec![vec![10.0, 7.0], vec![20.0, 7.0], vec![30.0, 7.0]];
        let s = fit_scaling(rows.iter().map(|r| r.as_slice())).unwrap();
        let scaled: Vec<Vec<f64>> = rows.iter().map(|r| s.apply(r).unwrap()).collect();
        assert_eq!(scaled, vec![vec![0.0, 0.0], vec![0.5, 0.0], vec![1.0, 0.0]]);
        assert_eq!(s.apply(&[40.0, 7.0]).unwrap(), vec![1.5, 0.0]);
        assert!(matches!(s.apply(&[1.0]), Err(Error::Schema(_))));
        assert!(fit_scaling(std::iter::empty()).is_err());
    }

    #[test]
    fn moments_merge_matches_single_pass() {
        let xs: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin() * 3.0 + 5.0).collect();
        let all: Moments = xs.iter().copied().collect();
        let a: Moments = xs[..17].iter().copied().collect();
        let b: Moments = xs[17..].iter().copied().collect();
        let m = a.merge(&b);
        assert_eq!(m.count, all.count);
        assert!((m.mean - all.mean).abs() < 1e-12);
        assert!((m.sample_std() - all.sample_std()).abs() < 1e-12);
    }

    #[test]
    fn threshold_json_round_trip() {
        let t = table1_threshold();
        assert_eq!(Threshold::from_json(&t.to_json().unwrap()).unwrap(), t);
        let bad = t.to_json().unwrap().replace(THRESHOLD_VERSION, "threshold-v0");
        assert!(matches!(Threshold::from_json(&bad), Err(Error::Version { .. })));
    }
}
