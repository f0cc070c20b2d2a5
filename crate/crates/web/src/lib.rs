//! wasm-bindgen exports behind `www/index.html`. Every export takes plain
//! numbers or strings and returns a JSON string; the `*_json` functions hold
//! the logic so they can be exercised natively.

use rttwatch::config::RunConfig;
use rttwatch::eval::{metrics, ConfusionMatrix, Metrics, Polarity};
use rttwatch::labeling::Threshold;
use rttwatch::pipeline::{run_baseline, simulate_dataset, BaselineReport};
use rttwatch::stressor::ScenarioId;
use rttwatch::{Error, Result};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Largest frame count the page may request per run.
pub const MAX_FRAMES: usize = 5000;

fn demo_config(seed: u64, frames: usize) -> Result<RunConfig> {
    if frames == 0 || frames > MAX_FRAMES {
        return Err(Error::Config(format!("frames must be in 1..={MAX_FRAMES}, got {frames}")));
    }
    let mut cfg = RunConfig {
        seed,
        ..RunConfig::default()
    };
    cfg.rows.baseline_per_run = frames;
    cfg.rows.min_baseline_frames = cfg.rows.min_baseline_frames.min(frames);
    cfg.rows.unstressed = frames;
    cfg.rows.trained_per_level = frames;
    cfg.rows.untrained_per_level = frames;
    Ok(cfg)
}

pub fn baseline_json(seed: u64, frames: usize) -> Result<String> {
    let report: BaselineReport = run_baseline(&demo_config(seed, frames)?)?;
    Ok(serde_json::to_string(&report)?)
}

#[derive(Serialize)]
struct Series {
    scenario: String,
    expected: String,
    cutoff: f64,
    frame_start: Vec<f64>,
    avg_rtt: Vec<f64>,
    anomalous: Vec<bool>,
    purity: f64,
}

/// One scenario's per-frame RTT and labels under `cutoff`.
pub fn simulate_json(seed: u64, scenario: &str, frames: usize, cutoff: f64) -> Result<String> {
    let id: ScenarioId = scenario.parse()?;
    if !cutoff.is_finite() {
        return Err(Error::Domain(format!("cutoff must be finite, got {cutoff}")));
    }
    let cfg = demo_config(seed, frames)?;
    let threshold = Threshold {
        baseline_mean: cutoff,
        baseline_frame_std: 0.0,
        cutoff,
        baseline_frame_count: 0,
        degenerate: false,
    };
    let ds = simulate_dataset(&cfg, &cfg.catalog()?, &threshold, id)?;
    let expected = id.expected_class();
    let series = Series {
        scenario: id.to_string(),
        expected: expected.to_string(),
        cutoff,
        frame_start: ds.rows.iter().map(|r| r.frame_start).collect(),
        avg_rtt: ds.rows.iter().map(|r| r.avg_rtt).collect(),
        anomalous: ds.rows.iter().map(|r| r.label.is_anomalous()).collect(),
        purity: ds.count(expected) as f64 / ds.len() as f64,
    };
    Ok(serde_json::to_string(&series)?)
}

/// Accuracy, precision, recall and F1 of a confusion matrix.
pub fn metrics_json(tp: u32, fp: u32, fn_: u32, tn: u32) -> Result<String> {
    let cm = ConfusionMatrix {
        tp: tp.into(),
        fp: fp.into(),
        fn_: fn_.into(),
        tn: tn.into(),
        polarity: Polarity::AnomalousPositive,
    };
    let m: Metrics = metrics(&cm)?;
    Ok(serde_json::to_string(&m)?)
}

fn js(r: Result<String>) -> std::result::Result<String, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

/// Seeds cross the boundary as f64; anything past 2^53 loses bits.
fn seed(s: f64) -> std::result::Result<u64, JsError> {
    if s.is_finite() && s >= 0.0 && s.fract() == 0.0 && s <= 9007199254740992.0 {
        Ok(s as u64)
    } else {
        Err(JsError::new(&format!("seed must be a non-negative integer, got {s}")))
    }
}

#[wasm_bindgen]
pub fn baseline(seed_value: f64, frames: usize) -> std::result::Result<String, JsError> {
    js(baseline_json(seed(seed_value)?, frames))
}

#[wasm_bindgen]
pub fn simulate(seed_value: f64, scenario: &str, frames: usize, cutoff: f64) -> std::result::Result<String, JsError> {
    js(simulate_json(seed(seed_value)?, scenario, frames, cutoff))
}

#[wasm_bindgen]
pub fn score(tp: u32, fp: u32, fn_: u32, tn: u32) -> std::result::Result<String, JsError> {
    js(metrics_json(tp, fp, fn_, tn))
}

/// Scenario names accepted by `simulate`, as a JSON array.
#[wasm_bindgen]
pub fn scenarios() -> String {
    let names: Vec<String> = ScenarioId::all().iter().map(|s| s.to_string()).collect();
    serde_json::to_string(&names).unwrap_or_default()
}
