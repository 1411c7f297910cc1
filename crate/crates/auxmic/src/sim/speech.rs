//! Speech-like test signals.
//!
//! Pink-filtered noise driven through a bank of formant-like resonators
//! whose frequencies are redrawn every 150 ms, with a 4 Hz syllabic
//! amplitude modulation and roughly 30% silence gaps. Not speech, but it
//! shares the long-term spectral slope and the on/off activity pattern
//! that matter for the DOA experiments.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceKind {
    SyntheticSpeech,
    WavFile,
}

/// A dry source signal plus its provenance.
#[derive(Debug, Clone)]
pub struct SourceSignal {
    pub samples: Vec<f64>,
    pub sample_rate: f64,
    pub kind: SourceKind,
    pub seed: u64,
}

impl SourceSignal {
    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s * s).sum()
    }

    pub fn from_samples(samples: Vec<f64>, sample_rate: f64) -> Result<Self> {
        let sig = Self {
            samples,
            sample_rate,
            kind: SourceKind::WavFile,
            seed: 0,
        };
        if sig.energy() <= 0.0 {
            return Err(Error::InvalidInput("source signal is silent".into()));
        }
        Ok(sig)
    }
}

/// Pink-filter state (Kellet's economy 1/f approximation).
struct PinkFilter {
    b: [f64; 3],
}

impl PinkFilter {
    fn new() -> Self {
        Self { b: [0.0; 3] }
    }

    fn process(&mut self, white: f64) -> f64 {
        self.b[0] = 0.99765 * self.b[0] + white * 0.099_046_0;
        self.b[1] = 0.96300 * self.b[1] + white * 0.296_516_4;
        self.b[2] = 0.57000 * self.b[2] + white * 1.052_691_3;
        self.b[0] + self.b[1] + self.b[2] + white * 0.1848
    }
}

/// Constant-peak-gain two-pole resonator.
struct Resonator {
    b0: f64,
    a1: f64,
    a2: f64,
    y1: f64,
    y2: f64,
}

impl Resonator {
    fn new() -> Self {
        Self {
            b0: 0.0,
            a1: 0.0,
            a2: 0.0,
            y1: 0.0,
            y2: 0.0,
        }
    }

    fn retune(&mut self, center_hz: f64, bandwidth_hz: f64, sample_rate: f64) {
        let r = (-std::f64::consts::PI * bandwidth_hz / sample_rate).exp();
        let theta = std::f64::consts::TAU * center_hz / sample_rate;
        self.b0 = (1.0 - r) * (1.0 - 2.0 * r * (2.0 * theta).cos() + r * r).sqrt();
        self.a1 = 2.0 * r * theta.cos();
        self.a2 = -r * r;
    }

    fn process(&mut self, x: f64) -> f64 {
        let y = self.b0 * x + self.a1 * self.y1 + self.a2 * self.y2;
        self.y2 = self.y1;
        self.y1 = y;
        y
    }
}

const NUM_FORMANTS: usize = 4;
const SEGMENT_SECONDS: f64 = 0.150;

/// Generate a speech-like signal. Deterministic per seed; peak-normalized.
pub fn synth_speech(duration_seconds: f64, sample_rate: f64, seed: u64) -> Result<SourceSignal> {
    if !(duration_seconds >= 1.0) {
        return Err(Error::InvalidInput(format!(
            "source duration must be at least 1 s, got {duration_seconds}"
        )));
    }
    if !(sample_rate > 0.0) {
        return Err(Error::Config(format!("bad sample rate {sample_rate}")));
    }
    let n = (duration_seconds * sample_rate).round() as usize;
    let mut rng = rng_from_seed(seed);

    // Pink excitation.
    let mut pink = PinkFilter::new();
    let excitation: Vec<f64> = (0..n)
        .map(|_| pink.process(rng.gen_range(-1.0..1.0)))
        .collect();

    // Formant bank, retuned every segment while keeping filter state.
    let segment = (SEGMENT_SECONDS * sample_rate) as usize;
    let mut bank: Vec<Resonator> = (0..NUM_FORMANTS).map(|_| Resonator::new()).collect();
    let mut voiced = vec![0.0f64; n];
    let mut start = 0;
    while start < n {
        let stop = (start + segment).min(n);
        for res in &mut bank {
            let center = rng.gen_range(300.0..3200.0);
            let bandwidth = rng.gen_range(80.0..240.0);
            res.retune(center, bandwidth, sample_rate);
        }
        for i in start..stop {
            let x = excitation[i];
            voiced[i] = bank.iter_mut().map(|r| r.process(x)).sum();
        }
        start = stop;
    }

    // 4 Hz syllabic amplitude modulation.
    let phase0 = rng.gen_range(0.0..std::f64::consts::TAU);
    for (i, v) in voiced.iter_mut().enumerate() {
        let t = i as f64 / sample_rate;
        *v *= 0.55 + 0.45 * (std::f64::consts::TAU * 4.0 * t + phase0).sin();
    }

    // Alternate talk spurts and silent gaps; the gap share lands near 30%.
    let mut gate = vec![1.0f64; n];
    let mut pos = 0usize;
    while pos < n {
        let talk = (rng.gen_range(0.25..0.70) * sample_rate) as usize;
        let gap = (rng.gen_range(0.08..0.35) * sample_rate) as usize;
        pos += talk;
        let g0 = pos.min(n);
        let g1 = (pos + gap).min(n);
        for g in gate.iter_mut().take(g1).skip(g0) {
            *g = 0.0;
        }
        pos += gap;
    }
    // 10 ms ramp on the gate to avoid clicks.
    let ramp = (0.010 * sample_rate) as usize;
    let mut smoothed = vec![0.0f64; n];
    let mut acc = 0.0;
    for i in 0..n {
        acc += gate[i];
        if i >= ramp {
            acc -= gate[i - ramp];
        }
        smoothed[i] = acc / ramp as f64;
    }
    for (v, g) in voiced.iter_mut().zip(&smoothed) {
        *v *= g;
    }

    let peak = voiced.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if peak <= 0.0 {
        return Err(Error::InvalidInput(
            "generated signal is silent; widen the duration".into(),
        ));
    }
    for v in &mut voiced {
        *v /= peak;
    }

    Ok(SourceSignal {
        samples: voiced,
        sample_rate,
        kind: SourceKind::SyntheticSpeech,
        seed,
    })
}
