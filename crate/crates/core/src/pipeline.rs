//! The workbench stages: baseline, calibrate, generate, ingest, train,
//! evaluate and report. Each stage reads the artifacts of the previous one
//! from the data directory.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::eval::{self, EvaluationRun, ReportFormat};
use crate::ingest::{self, read_text, write_atomic};
use crate::labeling::{compute_threshold, label_frames, FrameRtt, LabeledDataset, Moments, Threshold};
use crate::models::{ModelKind, TrainedModel};
use crate::rng::derive_seed;
use crate::sim::{simulate_scenario, SimConfig};
use crate::stressor::{purity_of, Catalog, ScenarioId, StressLevel, StressorProfile, PURITY_TARGET};

pub const THRESHOLD_FILE: &str = "threshold.json";
pub const BASELINE_FILE: &str = "baseline.json";
pub const CATALOG_FILE: &str = "profiles.json";
pub const REPORT_FILE: &str = "report.json";

pub fn dataset_path(data_dir: &Path, id: ScenarioId) -> PathBuf {
    data_dir.join("datasets").join(format!("{}.csv", id.slug()))
}

pub fn model_path(data_dir: &Path, kind: ModelKind) -> PathBuf {
    data_dir.join("models").join(format!("{kind}.json"))
}

/// RTT statistics of one baseline run, or of both pooled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub frames: usize,
    pub mean: f64,
    pub raw_std: f64,
    /// `mean + 3·raw_std`.
    pub raw_cutoff: f64,
    pub frame_std: f64,
    /// `frame mean + 3·frame_std`.
    pub frame_cutoff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineReport {
    pub runs: [RunStats; 2],
    pub overall: RunStats,
    pub threshold: Threshold,
    pub seeds: [u64; 2],
}

fn stats(raw: &Moments, frames: &[FrameRtt], min_frames: usize) -> Result<(RunStats, Threshold)> {
    let th = compute_threshold(frames, min_frames)?;
    let raw_std = raw.sample_std();
    Ok((
        RunStats {
            frames: frames.len(),
            mean: raw.mean,
            raw_std,
            raw_cutoff: raw.mean + 3.0 * raw_std,
            frame_std: th.baseline_frame_std,
            frame_cutoff: th.cutoff,
        },
        th,
    ))
}

fn sim_for(cfg: &RunConfig, seed: u64, frames: usize) -> SimConfig {
    SimConfig {
        seed,
        ..cfg.sim.clone()
    }
    .with_frames(frames)
}

/// Two independently seeded unstressed runs; the threshold comes from
/// their pooled frames.
pub fn run_baseline(cfg: &RunConfig) -> Result<BaselineReport> {
    let n = cfg.rows.baseline_per_run;
    let min = cfg.rows.min_baseline_frames;
    if n < min {
        return Err(Error::Config(format!(
            "each baseline run needs at least {min} frames ({} s at {} s frames), got {n}",
            min as f64 * cfg.sim.frame_duration,
            cfg.sim.frame_duration
        )));
    }
    let catalog = cfg.catalog()?;
    let seeds = [derive_seed(cfg.seed, "baseline/1"), derive_seed(cfg.seed, "baseline/2")];
    let traces = seeds
        .map(|s| simulate_scenario(&sim_for(cfg, s, n), &StressorProfile::unstressed(), &catalog.baseline));
    let [a, b] = traces;
    let (a, b) = (a?, b?);
    let (sa, _) = stats(&a.raw_moments(), &a.frame_rtts(), min)?;
    let (sb, _) = stats(&b.raw_moments(), &b.frame_rtts(), min)?;
    let mut all = a.frame_rtts();
    all.extend(b.frame_rtts());
    let (overall, threshold) = stats(&a.raw_moments().merge(&b.raw_moments()), &all, min)?;
    Ok(BaselineReport {
        runs: [sa, sb],
        overall,
        threshold,
        seeds,
    })
}

/// The three-column statistics table.
pub fn format_baseline(r: &BaselineReport) -> String {
    let rows: [(&str, fn(&RunStats) -> f64); 5] = [
        ("Average over full duration", |s| s.mean),
        ("Standard deviation using rtt", |s| s.raw_std),
        ("3rd standard deviation using rtt", |s| s.raw_cutoff),
        ("Standard deviation using rtt for the frame", |s| s.frame_std),
        ("3rd standard deviation using rtt for the frame", |s| s.frame_cutoff),
    ];
    let mut out = format!("{:<48}{:>12}{:>12}{:>12}\n", "Metric", "1st run", "2nd run", "Overall");
    for (name, f) in rows {
        let _ = writeln!(
            out,
            "{name:<48}{:>10.3}ms{:>10.3}ms{:>10.3}ms",
            f(&r.runs[0]),
            f(&r.runs[1]),
            f(&r.overall)
        );
    }
    out
}

pub fn cmd_baseline(cfg: &RunConfig) -> Result<BaselineReport> {
    let r = run_baseline(cfg)?;
    write_atomic(&cfg.data_dir.join(THRESHOLD_FILE), r.threshold.to_json()?.as_bytes())?;
    write_atomic(
        &cfg.data_dir.join(BASELINE_FILE),
        serde_json::to_string_pretty(&r)?.as_bytes(),
    )?;
    Ok(r)
}

pub fn load_threshold(data_dir: &Path) -> Result<Threshold> {
    Threshold::from_json(&read_text(&data_dir.join(THRESHOLD_FILE), "baseline")?)
}

/// The calibrated catalog if `calibrate` has written one, otherwise the
/// configured catalog.
pub fn load_catalog(cfg: &RunConfig) -> Result<Catalog> {
    let p = cfg.data_dir.join(CATALOG_FILE);
    if p.exists() {
        let mut c = Catalog::from_json(&read_text(&p, "calibrate")?)?;
        c.apply_overrides(&cfg.profiles)?;
        Ok(c)
    } else {
        cfg.catalog()
    }
}

fn scenario_seed(cfg: &RunConfig, id: ScenarioId) -> u64 {
    derive_seed(cfg.seed, &format!("scenario/{}", id.slug()))
}

/// Simulates and labels one scenario with the frame count the config
/// assigns it.
pub fn simulate_dataset(
    cfg: &RunConfig,
    catalog: &Catalog,
    threshold: &Threshold,
    id: ScenarioId,
) -> Result<LabeledDataset> {
    let sim = sim_for(cfg, scenario_seed(cfg, id), cfg.frames_for(id));
    let trace = simulate_scenario(&sim, catalog.profile(id), &catalog.baseline)?;
    let rows = label_frames(trace.frames.iter().map(|f| (&f.kpi, &f.rtt)), threshold, id)?;
    Ok(LabeledDataset::new(rows))
}

fn par_map<T: Send, U: Send + Sync>(items: &[U], f: impl Fn(&U) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Every configured scenario, simulated in memory.
pub fn simulate_datasets(
    cfg: &RunConfig,
    catalog: &Catalog,
    threshold: &Threshold,
) -> Result<BTreeMap<ScenarioId, LabeledDataset>> {
    let ids: Vec<ScenarioId> = cfg
        .trained_scenarios()
        .into_iter()
        .chain(cfg.untrained_scenarios())
        .collect();
    let sets = par_map(&ids, |id| simulate_dataset(cfg, catalog, threshold, *id))?;
    Ok(ids.into_iter().zip(sets).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationEntry {
    pub scenario: ScenarioId,
    pub initial_inflation: f64,
    pub inflation: f64,
    pub purity: f64,
    pub passed: bool,
}

const CALIBRATION_STEP: f64 = 1.04;
const CALIBRATION_ROUNDS: usize = 60;

/// Adjusts each stressed profile's inflation until its generated frames
/// reach the purity target, raising high levels and lowering low levels
/// (never below 1).
pub fn calibrate(cfg: &RunConfig, catalog: &Catalog, threshold: &Threshold) -> Result<(Catalog, Vec<CalibrationEntry>)> {
    let ids: Vec<ScenarioId> = ScenarioId::all()
        .into_iter()
        .filter(|id| *id != ScenarioId::UNSTRESSED)
        .collect();
    let entries = par_map(&ids, |id| {
        let mut profile = catalog.profile(*id).clone();
        let initial = profile.processing_inflation;
        let expected = id.expected_class();
        let sim = sim_for(cfg, scenario_seed(cfg, *id), cfg.frames_for(*id));
        let mut round = 0;
        loop {
            let t = simulate_scenario(&sim, &profile, &catalog.baseline)?;
            let purity = purity_of(t.frames.iter().map(|f| f.rtt.avg_rtt), threshold, expected)?;
            let passed = purity >= PURITY_TARGET;
            let stuck = id.level() == StressLevel::Low && profile.processing_inflation <= 1.0;
            if passed || stuck || round == CALIBRATION_ROUNDS {
                return Ok(CalibrationEntry {
                    scenario: *id,
                    initial_inflation: initial,
                    inflation: profile.processing_inflation,
                    purity,
                    passed,
                });
            }
            profile.processing_inflation = match id.level() {
                StressLevel::High => profile.processing_inflation * CALIBRATION_STEP,
                _ => (profile.processing_inflation / CALIBRATION_STEP).max(1.0),
            };
            round += 1;
        }
    })?;
    let mut out = catalog.clone();
    // Lowering a low level or raising a high level keeps high > low.
    for e in &entries {
        out.set_inflation(e.scenario, e.inflation)?;
    }
    Ok((out, entries))
}

pub fn cmd_calibrate(cfg: &RunConfig) -> Result<Vec<CalibrationEntry>> {
    let threshold = load_threshold(&cfg.data_dir)?;
    let (cat, entries) = calibrate(cfg, &cfg.catalog()?, &threshold)?;
    let mut cat = cat;
    let changed: Vec<String> = entries
        .iter()
        .filter(|e| e.inflation != e.initial_inflation)
        .map(|e| format!("{}: {} -> {}", e.scenario, e.initial_inflation, e.inflation))
        .collect();
    if !changed.is_empty() {
        cat.notes.push(format!("calibrated (seed {}): {}", cfg.seed, changed.join("; ")));
    }
    write_atomic(&cfg.data_dir.join(CATALOG_FILE), cat.to_json()?.as_bytes())?;
    Ok(entries)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedDataset {
    pub scenario: ScenarioId,
    pub path: PathBuf,
    pub rows: usize,
    pub purity: f64,
}

pub fn cmd_generate(cfg: &RunConfig) -> Result<Vec<GeneratedDataset>> {
    let threshold = load_threshold(&cfg.data_dir)?;
    let catalog = load_catalog(cfg)?;
    let sets = simulate_datasets(cfg, &catalog, &threshold)?;
    let mut out = Vec::new();
    for (id, ds) in &sets {
        let path = dataset_path(&cfg.data_dir, *id);
        ingest::write_dataset(ds, &path)?;
        let purity = ds.count(id.expected_class()) as f64 / ds.len() as f64;
        out.push(GeneratedDataset {
            scenario: *id,
            path,
            rows: ds.len(),
            purity,
        });
    }
    Ok(out)
}

/// Raw captures for one scenario recorded on a real system.
#[derive(Debug, Clone, PartialEq)]
pub struct Captures<'a> {
    pub vmstat: &'a Path,
    pub iostat: &'a Path,
    pub netstat: &'a Path,
    pub rtt: &'a Path,
    /// Sampling interval used for captures printed without timestamps.
    pub interval: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub path: PathBuf,
    pub rows: usize,
    pub windows_without_tools: usize,
    pub frames_without_rtt: usize,
}

pub fn cmd_ingest(cfg: &RunConfig, captures: &Captures<'_>, scenario: ScenarioId, out: &Path) -> Result<IngestSummary> {
    let threshold = load_threshold(&cfg.data_dir)?;
    let read = |p: &Path| std::fs::read_to_string(p).map_err(|e| Error::io(p, e));
    let vm = ingest::parse_vmstat(&read(captures.vmstat)?, captures.interval)?;
    let io = ingest::parse_iostat(&read(captures.iostat)?, captures.interval)?;
    let ns = ingest::parse_netstat(&read(captures.netstat)?, captures.interval)?;
    let samples = ingest::parse_rtt_csv(&read(captures.rtt)?)?;
    let asm = ingest::assemble_frames(&vm, &io, &ns, cfg.sim.frame_duration)?;
    let (pairs, no_rtt) = ingest::attach_rtt(&asm.frames, &samples)?;
    let rows = label_frames(pairs.iter().map(|(k, r)| (k, r)), &threshold, scenario)?;
    let ds = LabeledDataset::new(rows);
    ingest::write_dataset(&ds, out)?;
    Ok(IngestSummary {
        path: out.to_path_buf(),
        rows: ds.len(),
        windows_without_tools: asm.dropped,
        frames_without_rtt: no_rtt,
    })
}

pub fn load_datasets(cfg: &RunConfig) -> Result<BTreeMap<ScenarioId, LabeledDataset>> {
    cfg.trained_scenarios()
        .into_iter()
        .chain(cfg.untrained_scenarios())
        .map(|id| Ok((id, ingest::read_dataset(&dataset_path(&cfg.data_dir, id))?)))
        .collect()
}

pub fn cmd_train(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let datasets = load_datasets(cfg)?;
    let models = eval::train_models(&datasets, &cfg.protocol()?)?;
    let mut paths = Vec::new();
    for m in &models {
        let p = model_path(&cfg.data_dir, m.kind);
        write_atomic(&p, m.to_json()?.as_bytes())?;
        paths.push(p);
    }
    Ok(paths)
}

pub fn load_models(cfg: &RunConfig) -> Result<Vec<TrainedModel>> {
    cfg.models
        .iter()
        .map(|k| TrainedModel::from_json(&read_text(&model_path(&cfg.data_dir, *k), "train")?))
        .collect()
}

pub fn cmd_evaluate(cfg: &RunConfig, formats: &[ReportFormat]) -> Result<(EvaluationRun, Vec<PathBuf>)> {
    let models = load_models(cfg)?;
    let datasets = load_datasets(cfg)?;
    let run = eval::evaluate_models(&models, &datasets, &cfg.protocol()?)?;
    let files = eval::emit_report(&run, &cfg.report_dir, formats)?;
    Ok((run, files))
}

pub fn load_report(cfg: &RunConfig) -> Result<EvaluationRun> {
    EvaluationRun::from_json(&read_text(&cfg.report_dir.join(REPORT_FILE), "evaluate")?)
}

pub fn cmd_report(cfg: &RunConfig, formats: &[ReportFormat]) -> Result<(EvaluationRun, Vec<PathBuf>)> {
    let run = load_report(cfg)?;
    let files = eval::emit_report(&run, &cfg.report_dir, formats)?;
    Ok((run, files))
}

/// Human-readable F1 summary of the groups in a run.
pub fn format_summary(run: &EvaluationRun) -> String {
    let mut groups: Vec<&str> = Vec::new();
    for g in &run.groups {
        if !groups.contains(&g.group.as_str()) {
            groups.push(&g.group);
        }
    }
    let mut out = format!("{:<22}", "F1");
    for m in &run.models {
        let _ = write!(out, "{:>9}", m.name());
    }
    out.push('\n');
    for g in groups {
        let _ = write!(out, "{g:<22}");
        for m in &run.models {
            let v = run
                .group(*m, g)
                .and_then(|r| r.metrics.f1)
                .map(|f| format!("{f:.4}"))
                .unwrap_or_else(|| "-".into());
            let _ = write!(out, "{v:>9}");
        }
        out.push('\n');
    }
    out
}

/// Baseline, generation and evaluation entirely in memory.
pub fn run_in_memory(cfg: &RunConfig) -> Result<(BaselineReport, EvaluationRun)> {
    let base = run_baseline(cfg)?;
    let datasets = simulate_datasets(cfg, &cfg.catalog()?, &base.threshold)?;
    let run = eval::run_protocol(&datasets, &cfg.protocol()?)?;
    Ok((base, run))
}
