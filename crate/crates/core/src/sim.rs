//! Discrete-time simulator of a loaded call-processing server.
//!
//! Each call contributes one RTT sample `2·t_tx + t_p`, where `t_tx` is fixed
//! and `t_p` is log-normal around the frame's processing level. The frame
//! level itself varies from frame to frame (background load), so frame
//! averages keep most of the RTT variance. A lost call pays the
//! retransmission timeout on top.

use rand::Rng;
use rand_distr::{Distribution, Exp, LogNormal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labeling::{FrameRtt, Moments};
use crate::rng::{self, StreamRng};
use crate::schema::{self, KpiFrame, FEATURES};
use crate::stressor::{Channel, ScenarioId, StressorProfile};

/// Extra KPI noise per unit of applied delta, so stressed channels are noisier.
const DELTA_NOISE_FRACTION: f64 = 0.08;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArrivalMode {
    /// Evenly spaced calls at exactly `call_rate`.
    Fixed,
    /// Poisson process with intensity `call_rate`.
    Poisson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    /// Calls per second.
    pub call_rate: f64,
    /// Seconds.
    pub frame_duration: f64,
    /// Seconds.
    pub run_duration: f64,
    /// One-way transmission time, ms.
    pub base_transmission_time: f64,
    /// Mean server processing time when unstressed, ms.
    pub base_processing_time: f64,
    /// Per-call standard deviation of processing time at the base level, ms.
    pub processing_jitter: f64,
    /// Frame-to-frame standard deviation of the processing level, ms.
    pub frame_jitter: f64,
    /// ms.
    pub retransmission_timeout: f64,
    pub loss_probability: f64,
    pub arrivals: ArrivalMode,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            call_rate: 70.0,
            frame_duration: 6.0,
            run_duration: 2000.0 * 6.0,
            base_transmission_time: 0.5,
            base_processing_time: 3.675,
            processing_jitter: 1.2,
            frame_jitter: 1.37,
            retransmission_timeout: 50.0,
            loss_probability: 0.0002,
            arrivals: ArrivalMode::Poisson,
            seed: 0x5EED_0070,
        }
    }
}

impl SimConfig {
    pub fn with_frames(mut self, frames: usize) -> Self {
        self.run_duration = frames as f64 * self.frame_duration;
        self
    }

    pub fn frame_count(&self) -> usize {
        (self.run_duration / self.frame_duration + 1e-9).floor() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        let finite = [
            self.call_rate,
            self.frame_duration,
            self.run_duration,
            self.base_transmission_time,
            self.base_processing_time,
            self.processing_jitter,
            self.frame_jitter,
            self.retransmission_timeout,
            self.loss_probability,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return fail("all simulation parameters must be finite");
        }
        if self.call_rate <= 0.0 {
            return fail("call_rate must be > 0");
        }
        if self.frame_duration <= 0.0 {
            return fail("frame_duration must be > 0");
        }
        if self.run_duration < self.frame_duration {
            return fail("run_duration must be >= frame_duration");
        }
        if self.base_transmission_time < 0.0 || self.base_processing_time <= 0.0 {
            return fail("base_transmission_time must be >= 0 and base_processing_time > 0");
        }
        if self.processing_jitter < 0.0 || self.frame_jitter < 0.0 {
            return fail("processing_jitter and frame_jitter must be >= 0");
        }
        if self.retransmission_timeout
            <= self.base_transmission_time * 2.0 + self.base_processing_time
        {
            return fail(
                "retransmission_timeout must exceed 2 * base_transmission_time + base_processing_time",
            );
        }
        if !(0.0..=1.0).contains(&self.loss_probability) {
            return fail("loss_probability must lie in [0, 1]");
        }
        Ok(())
    }
}

/// One call's client-side round trip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RttSample {
    /// Seconds since run start.
    pub timestamp: f64,
    /// ms.
    pub rtt: f64,
    pub retransmitted: bool,
}

/// Everything needed to draw one call's RTT.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CallDraw {
    pub timestamp: f64,
    pub transmission_time: f64,
    /// Mean processing time for this frame, ms.
    pub processing_level: f64,
    /// Coefficient of variation of per-call processing time.
    pub processing_cv: f64,
    pub burst_multiplier: f64,
    pub loss_probability: f64,
    pub retransmission_timeout: f64,
}

/// Draws one RTT: `(2·t_tx + t_p) · burst`, plus the timeout on a loss.
///
/// Consumes exactly two random draws regardless of parameters, so streams
/// stay aligned across profiles.
pub fn sample_rtt<R: Rng + ?Sized>(draw: &CallDraw, rng: &mut R) -> RttSample {
    let z: f64 = rng.sample(StandardNormal);
    let u: f64 = rng.random();
    let tp = if draw.processing_cv > 0.0 {
        let s2 = (1.0 + draw.processing_cv * draw.processing_cv).ln();
        let mu = draw.processing_level.ln() - 0.5 * s2;
        (mu + s2.sqrt() * z).exp()
    } else {
        draw.processing_level
    };
    let mut rtt = (2.0 * draw.transmission_time + tp) * draw.burst_multiplier;
    let retransmitted = u < draw.loss_probability;
    if retransmitted {
        rtt += draw.retransmission_timeout;
    }
    RttSample {
        timestamp: draw.timestamp,
        rtt,
        retransmitted,
    }
}

/// Produces a frame's KPI vector from the baseline table, the profile's
/// deltas, the frame's load ratio and channel noise.
///
/// `load_ratio` is the frame processing level over the base processing time;
/// channels with a `load` coefficient move by `load · (ratio − 1)`.
pub fn frame_kpis<R: Rng + ?Sized>(
    baseline: &[Channel],
    profile: &StressorProfile,
    frame_start: f64,
    frame_duration: f64,
    load_ratio: f64,
    rng: &mut R,
) -> KpiFrame {
    debug_assert_eq!(baseline.len(), FEATURES.len());
    let deltas = profile.delta_vector();
    let mut v: Vec<f64> = baseline
        .iter()
        .zip(&deltas)
        .map(|(ch, d)| {
            let z: f64 = rng.sample(StandardNormal);
            let sd = ch.noise + DELTA_NOISE_FRACTION * d.abs();
            (ch.mean + d + ch.load * (load_ratio - 1.0) + sd * z).max(0.0)
        })
        .collect();

    // cpu_idle is whatever the other three leave.
    let busy = [schema::CPU_USER, schema::CPU_SYS, schema::CPU_WAIT];
    let total: f64 = busy.iter().map(|&i| v[i]).sum();
    if total > 100.0 {
        for &i in &busy {
            v[i] *= 100.0 / total;
        }
        v[schema::CPU_IDLE] = 0.0;
    } else {
        v[schema::CPU_IDLE] = 100.0 - total;
    }
    for (i, x) in v.iter_mut().enumerate() {
        if schema::is_percentage(i) {
            *x = x.clamp(0.0, 100.0);
        }
    }
    KpiFrame {
        frame_start,
        frame_duration,
        features: v,
    }
}

/// One simulated frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceFrame {
    pub kpi: KpiFrame,
    pub rtt: FrameRtt,
    /// Moments of the raw per-call RTTs in this frame.
    pub raw: Moments,
    pub retransmissions: usize,
    pub burst: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub config: SimConfig,
    pub scenario: ScenarioId,
    pub frames: Vec<TraceFrame>,
}

impl Trace {
    pub fn raw_moments(&self) -> Moments {
        self.frames
            .iter()
            .fold(Moments::default(), |acc, f| acc.merge(&f.raw))
    }

    pub fn frame_rtts(&self) -> Vec<FrameRtt> {
        self.frames.iter().map(|f| f.rtt).collect()
    }
}

struct Streams {
    arrivals: StreamRng,
    frames: StreamRng,
    calls: StreamRng,
    kpis: StreamRng,
}

impl Streams {
    fn new(seed: u64) -> Self {
        Streams {
            arrivals: rng::stream(seed, "arrivals"),
            frames: rng::stream(seed, "frames"),
            calls: rng::stream(seed, "calls"),
            kpis: rng::stream(seed, "kpis"),
        }
    }
}

pub fn simulate_scenario(
    config: &SimConfig,
    profile: &StressorProfile,
    baseline: &[Channel],
) -> Result<Trace> {
    simulate_with_samples(config, profile, baseline, |_, _| {})
}

/// Runs the simulation, handing every RTT sample and its frame index to
/// `on_sample`.
pub fn simulate_with_samples(
    config: &SimConfig,
    profile: &StressorProfile,
    baseline: &[Channel],
    mut on_sample: impl FnMut(usize, &RttSample),
) -> Result<Trace> {
    config.validate()?;
    profile.validate()?;
    if baseline.len() != FEATURES.len() {
        return Err(Error::Schema(format!(
            "baseline table has {} channels, expected {}",
            baseline.len(),
            FEATURES.len()
        )));
    }
    let n_frames = config.frame_count();
    let mut s = Streams::new(config.seed);
    let interarrival = Exp::new(config.call_rate).expect("call_rate > 0");
    let processing_cv = config.processing_jitter / config.base_processing_time;
    let base_level = config.base_processing_time * profile.processing_inflation;
    let floor = 0.05 * config.base_processing_time;

    let mut frames = Vec::with_capacity(n_frames);
    let mut next_arrival = match config.arrivals {
        ArrivalMode::Fixed => 0.0,
        ArrivalMode::Poisson => interarrival.sample(&mut s.arrivals),
    };
    for index in 0..n_frames {
        let start = index as f64 * config.frame_duration;
        let end = start + config.frame_duration;

        let z: f64 = s.frames.sample(StandardNormal);
        let u: f64 = s.frames.random();
        let level = (base_level + config.frame_jitter * z).max(floor);
        let burst = u < profile.burst_probability;
        let mut draw = CallDraw {
            timestamp: start,
            transmission_time: config.base_transmission_time,
            processing_level: level,
            processing_cv,
            burst_multiplier: if burst { profile.burst_multiplier } else { 1.0 },
            loss_probability: config.loss_probability,
            retransmission_timeout: config.retransmission_timeout,
        };

        let mut raw = Moments::default();
        let mut retransmissions = 0;
        let mut record = |draw: &CallDraw, calls: &mut StreamRng, raw: &mut Moments| {
            let sample = sample_rtt(draw, calls);
            raw.push(sample.rtt);
            retransmissions += usize::from(sample.retransmitted);
            on_sample(index, &sample);
        };
        while next_arrival < end {
            draw.timestamp = next_arrival;
            record(&draw, &mut s.calls, &mut raw);
            next_arrival += match config.arrivals {
                ArrivalMode::Fixed => 1.0 / config.call_rate,
                ArrivalMode::Poisson => interarrival.sample(&mut s.arrivals),
            };
        }
        if raw.count == 0 {
            // Sparse call rates can leave a frame empty; probe once so every
            // frame carries an RTT.
            draw.timestamp = start + 0.5 * config.frame_duration;
            record(&draw, &mut s.calls, &mut raw);
        }

        let kpi = frame_kpis(
            baseline,
            profile,
            start,
            config.frame_duration,
            level / config.base_processing_time,
            &mut s.kpis,
        );
        frames.push(TraceFrame {
            kpi,
            rtt: FrameRtt {
                frame_start: start,
                avg_rtt: raw.mean,
                sample_count: raw.count,
            },
            raw,
            retransmissions,
            burst,
        });
    }
    Ok(Trace {
        config: config.clone(),
        scenario: profile.scenario(),
        frames,
    })
}

/// Log-normal with a given mean and coefficient of variation, for callers
/// that want to draw processing times outside a full simulation.
pub fn processing_distribution(mean: f64, cv: f64) -> Result<LogNormal<f64>> {
    let s2 = (1.0 + cv * cv).ln();
    LogNormal::new(mean.ln() - 0.5 * s2, s2.sqrt())
        .map_err(|e| Error::Domain(format!("invalid processing distribution: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stressor::{Catalog, StressLevel, StressorKind};
    use rand::SeedableRng;

    fn fixed_draw(loss: f64) -> CallDraw {
        CallDraw {
            timestamp: 0.0,
            transmission_time: 0.5,
            processing_level: 3.675,
            processing_cv: 0.0,
            burst_multiplier: 1.0,
            loss_probability: loss,
            retransmission_timeout: 50.0,
        }
    }

    #[test]
    fn deterministic_rtt_decomposition() {
        let mut r = StreamRng::seed_from_u64(1);
        let s = sample_rtt(&fixed_draw(0.0), &mut r);
        assert!((s.rtt - 4.675).abs() < 1e-12);
        assert!(!s.retransmitted);
    }

    #[test]
    fn loss_adds_timeout() {
        let mut r = StreamRng::seed_from_u64(1);
        let s = sample_rtt(&fixed_draw(1.0), &mut r);
        assert!((s.rtt - 54.675).abs() < 1e-12);
        assert!(s.retransmitted);
    }

    #[test]
    fn config_invariants_are_named() {
        let mut c = SimConfig::default();
        c.retransmission_timeout = 4.0;
        let e = c.validate().unwrap_err().to_string();
        assert!(e.contains("retransmission_timeout"), "{e}");
        let mut c = SimConfig::default();
        c.run_duration = 1.0;
        assert!(c.validate().unwrap_err().to_string().contains("run_duration"));
        let mut c = SimConfig::default();
        c.loss_probability = 1.5;
        assert!(c.validate().is_err());
        let mut c = SimConfig::default();
        c.call_rate = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn frame_count_and_sample_count() {
        let cat = Catalog::builtin();
        let cfg = SimConfig {
            run_duration: 60.0,
            ..SimConfig::default()
        };
        let t = simulate_scenario(&cfg, &StressorProfile::unstressed(), &cat.baseline).unwrap();
        assert_eq!(t.frames.len(), 10);
        for (i, f) in t.frames.iter().enumerate() {
            assert_eq!(f.kpi.frame_start, 6.0 * i as f64);
            // Poisson(420): ±5σ ≈ ±103.
            assert!((317..=523).contains(&f.rtt.sample_count), "{}", f.rtt.sample_count);
        }
        let fixed = SimConfig {
            arrivals: ArrivalMode::Fixed,
            ..cfg
        };
        let t = simulate_scenario(&fixed, &StressorProfile::unstressed(), &cat.baseline).unwrap();
        assert!(t.frames.iter().all(|f| (419..=421).contains(&f.rtt.sample_count)));
    }

    #[test]
    fn samples_land_in_their_frame() {
        let cat = Catalog::builtin();
        let cfg = SimConfig::default().with_frames(20);
        let mut counts = vec![0usize; 20];
        let t = simulate_with_samples(&cfg, &StressorProfile::unstressed(), &cat.baseline, |i, s| {
            assert!(s.timestamp >= i as f64 * 6.0 && s.timestamp < (i + 1) as f64 * 6.0);
            assert!(s.rtt > 0.0);
            if s.retransmitted {
                assert!(s.rtt >= cfg.retransmission_timeout);
            }
            counts[i] += 1;
        })
        .unwrap();
        for (f, c) in t.frames.iter().zip(counts) {
            assert_eq!(f.rtt.sample_count, c);
        }
    }

    #[test]
    fn unstressed_kpis_sit_in_baseline_band() {
        let cat = Catalog::builtin();
        let mut r = StreamRng::seed_from_u64(3);
        for _ in 0..200 {
            let f = frame_kpis(&cat.baseline, &StressorProfile::unstressed(), 0.0, 6.0, 1.0, &mut r);
            for (i, (v, ch)) in f.features.iter().zip(&cat.baseline).enumerate() {
                if i == schema::CPU_IDLE {
                    continue;
                }
                assert!((v - ch.mean.max(0.0)).abs() <= 6.0 * ch.noise + 1e-9, "{}", FEATURES[i].name);
            }
            let cpu: f64 = (schema::CPU_USER..=schema::CPU_WAIT).map(|i| f.features[i]).sum();
            assert!((cpu - 100.0).abs() < 1e-9);
        }
    }

    fn mean_kpis(kind: StressorKind, level: StressLevel, load: f64) -> Vec<f64> {
        let cat = Catalog::builtin();
        let p = cat.profile_for(kind, level).unwrap();
        let mut r = StreamRng::seed_from_u64(11);
        let n = 200;
        let mut acc = vec![0.0; FEATURES.len()];
        for _ in 0..n {
            let f = frame_kpis(&cat.baseline, p, 0.0, 6.0, load, &mut r);
            for (a, v) in acc.iter_mut().zip(&f.features) {
                *a += v / n as f64;
            }
        }
        acc
    }

    #[test]
    fn cpu_high_saturates_cpu() {
        let base = mean_kpis(StressorKind::None, StressLevel::None, 1.0);
        let cpu = mean_kpis(StressorKind::Cpu, StressLevel::High, 3.6);
        let cs = schema::feature_index("context_switches").unwrap();
        assert!(cpu[schema::CPU_IDLE] < 5.0, "idle {}", cpu[schema::CPU_IDLE]);
        assert!(cpu[cs] > base[cs] + 1000.0);
        let mut r = StreamRng::seed_from_u64(5);
        let cat = Catalog::builtin();
        let p = cat.profile_for(StressorKind::Cpu, StressLevel::High).unwrap();
        for _ in 0..100 {
            let f = frame_kpis(&cat.baseline, p, 0.0, 6.0, 3.6, &mut r);
            let cpu: f64 = (schema::CPU_USER..=schema::CPU_WAIT).map(|i| f.features[i]).sum();
            assert!((cpu - 100.0).abs() < 1e-9);
            assert!(f.features.iter().all(|v| *v >= 0.0));
        }
    }

    #[test]
    fn udp_high_is_channel_selective() {
        let cat = Catalog::builtin();
        let base = mean_kpis(StressorKind::None, StressLevel::None, 1.0);
        let udp = mean_kpis(StressorKind::Udp, StressLevel::High, 1.0);
        for name in ["udp_in", "udp_out"] {
            let i = schema::feature_index(name).unwrap();
            assert!(udp[i] > base[i] + 10.0 * cat.baseline[i].noise, "{name}");
        }
        for name in ["tps", "kb_read_per_s", "kb_wrtn_per_s", "blocks_in", "blocks_out"] {
            let i = schema::feature_index(name).unwrap();
            assert!((udp[i] - base[i]).abs() < cat.baseline[i].noise, "{name}");
        }
    }

    #[test]
    fn lognormal_helper_matches_moments() {
        let d = processing_distribution(3.675, 0.3).unwrap();
        let mut r = StreamRng::seed_from_u64(9);
        let m: Moments = (0..200_000).map(|_| d.sample(&mut r)).collect();
        assert!((m.mean - 3.675).abs() < 0.01);
        assert!((m.sample_std() - 0.3 * 3.675).abs() < 0.02);
    }
}
