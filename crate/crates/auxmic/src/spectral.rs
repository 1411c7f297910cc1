//! STFT analysis, recursively averaged cross-power spectra, and PHAT
//! weighting.
//!
//! The pipeline is analysis-only: multichannel waveforms go in, weighted
//! cross-spectra come out. No synthesis path exists.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use ndarray::{Array3, ArrayView2};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative magnitude below which a bin is treated as silent by the PHAT
/// weighting (scaled by the largest magnitude seen for the pair).
pub const PHAT_FLOOR: f64 = 1e-12;

/// Analysis window shape. Periodic definitions throughout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Window {
    Rectangular,
    Hann,
    /// Square-root of the periodic Hann window, i.e. sin(πn/N).
    SqrtHann,
}

impl Window {
    pub fn coefficients(&self, len: usize) -> Vec<f64> {
        (0..len)
            .map(|n| match self {
                Window::Rectangular => 1.0,
                Window::Hann => 0.5 * (1.0 - (TAU * n as f64 / len as f64).cos()),
                Window::SqrtHann => (PI * n as f64 / len as f64).sin(),
            })
            .collect()
    }
}

/// STFT analysis parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StftConfig {
    pub sample_rate: f64,
    pub frame_length: usize,
    pub hop: usize,
    pub window: Window,
}

impl Default for StftConfig {
    /// 16 kHz, 32 ms frames, 50% overlap, square-root-Hann analysis window.
    fn default() -> Self {
        Self {
            sample_rate: 16_000.0,
            frame_length: 512,
            hop: 256,
            window: Window::SqrtHann,
        }
    }
}

impl StftConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate.is_finite() && self.sample_rate > 0.0) {
            return Err(Error::Config(format!(
                "sample rate must be positive, got {}",
                self.sample_rate
            )));
        }
        if self.frame_length == 0 || self.frame_length % 2 != 0 {
            return Err(Error::Config(format!(
                "frame length must be even and nonzero, got {}",
                self.frame_length
            )));
        }
        if self.hop == 0 || self.hop > self.frame_length {
            return Err(Error::Config(format!(
                "hop must be in [1, frame_length], got {}",
                self.hop
            )));
        }
        Ok(())
    }

    /// Number of one-sided bins K = frame_length/2 + 1.
    pub fn num_bins(&self) -> usize {
        self.frame_length / 2 + 1
    }

    /// Radial frequency of bin k: 2π·fs·k/frame_length.
    pub fn bin_frequency(&self, k: usize) -> f64 {
        TAU * self.sample_rate * k as f64 / self.frame_length as f64
    }

    pub fn bin_frequencies(&self) -> Vec<f64> {
        (0..self.num_bins()).map(|k| self.bin_frequency(k)).collect()
    }
}

/// One-sided complex STFT of a multichannel signal.
#[derive(Debug, Clone)]
pub struct Spectrogram {
    /// Complex frames, indexed [channel, frame, bin].
    pub data: Array3<Complex64>,
    /// Radial frequency of each bin, rad/s.
    pub bin_frequencies: Vec<f64>,
    pub sample_rate: f64,
    pub hop: usize,
}

impl Spectrogram {
    pub fn num_channels(&self) -> usize {
        self.data.shape()[0]
    }

    pub fn num_frames(&self) -> usize {
        self.data.shape()[1]
    }

    pub fn num_bins(&self) -> usize {
        self.data.shape()[2]
    }

    pub fn channel(&self, ch: usize) -> ArrayView2<'_, Complex64> {
        self.data.index_axis(ndarray::Axis(0), ch)
    }
}

fn fft_plan(len: usize) -> Arc<dyn Fft<f64>> {
    FftPlanner::new().plan_fft_forward(len)
}

/// Short-time Fourier transform.
///
/// Frames are windowed, transformed, and kept one-sided (bin 0 = DC, bin
/// K-1 = Nyquist). The last partial frame is dropped; no zero padding.
pub fn stft(signals: &[Vec<f64>], cfg: &StftConfig) -> Result<Spectrogram> {
    cfg.validate()?;
    if signals.is_empty() {
        return Err(Error::InvalidInput("no channels given".into()));
    }
    let n = signals[0].len();
    for (ch, s) in signals.iter().enumerate() {
        if s.len() != n {
            return Err(Error::InvalidInput(format!(
                "channel {ch} has {} samples, expected {n}",
                s.len()
            )));
        }
    }
    if n < cfg.frame_length {
        return Err(Error::InvalidInput(format!(
            "signal of {n} samples is shorter than one frame ({})",
            cfg.frame_length
        )));
    }

    let num_frames = (n - cfg.frame_length) / cfg.hop + 1;
    let bins = cfg.num_bins();
    let window = cfg.window.coefficients(cfg.frame_length);
    let fft = fft_plan(cfg.frame_length);

    let mut data = Array3::zeros((signals.len(), num_frames, bins));
    let mut buf = vec![Complex64::default(); cfg.frame_length];
    for (ch, signal) in signals.iter().enumerate() {
        for frame in 0..num_frames {
            let start = frame * cfg.hop;
            for (i, b) in buf.iter_mut().enumerate() {
                *b = Complex64::new(signal[start + i] * window[i], 0.0);
            }
            fft.process(&mut buf);
            for k in 0..bins {
                data[(ch, frame, k)] = buf[k];
            }
        }
    }

    Ok(Spectrogram {
        data,
        bin_frequencies: cfg.bin_frequencies(),
        sample_rate: cfg.sample_rate,
        hop: cfg.hop,
    })
}

/// Per-pair, per-frame cross-power spectra.
#[derive(Debug, Clone)]
pub struct CrossSpectrumSet {
    /// Channel-index pairs (i, j); values hold E{Y_i Y_j*} estimates.
    pub pairs: Vec<(usize, usize)>,
    /// Cross-spectra, indexed [pair, frame, bin].
    pub values: Array3<Complex64>,
    /// Recursive-averaging factor used to produce the values.
    pub smoothing: f64,
    /// Radial frequency of each bin, rad/s.
    pub bin_frequencies: Vec<f64>,
    pub hop: usize,
    pub sample_rate: f64,
}

impl CrossSpectrumSet {
    pub fn pair_index(&self, i: usize, j: usize) -> Option<usize> {
        self.pairs.iter().position(|&p| p == (i, j))
    }
}

/// Recursively averaged cross-power spectral density:
/// ψ̃[k,l] = λ·ψ̃[k,l-1] + (1-λ)·Y_i Y_j*[k,l], started from the first
/// instantaneous product so there is no zero-bias transient.
pub fn recursive_cross_psd(
    spec: &Spectrogram,
    pairs: &[(usize, usize)],
    lambda: f64,
) -> Result<CrossSpectrumSet> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::Config(format!(
            "smoothing factor must be in [0, 1), got {lambda}"
        )));
    }
    let channels = spec.num_channels();
    for &(i, j) in pairs {
        for idx in [i, j] {
            if idx >= channels {
                return Err(Error::IndexOutOfRange {
                    what: "channels",
                    index: idx,
                    len: channels,
                });
            }
        }
    }

    let (frames, bins) = (spec.num_frames(), spec.num_bins());
    let mut values = Array3::zeros((pairs.len(), frames, bins));
    for (p, &(i, j)) in pairs.iter().enumerate() {
        for k in 0..bins {
            let mut prev = Complex64::default();
            for l in 0..frames {
                let inst = spec.data[(i, l, k)] * spec.data[(j, l, k)].conj();
                let smoothed = if l == 0 {
                    inst
                } else {
                    lambda * prev + (1.0 - lambda) * inst
                };
                values[(p, l, k)] = smoothed;
                prev = smoothed;
            }
        }
    }

    Ok(CrossSpectrumSet {
        pairs: pairs.to_vec(),
        values,
        smoothing: lambda,
        bin_frequencies: spec.bin_frequencies.clone(),
        hop: spec.hop,
        sample_rate: spec.sample_rate,
    })
}

/// PHAT weighting W = 1/|ψ̃|, applied per pair, frame, and bin.
///
/// Bins whose magnitude falls at or below `floor_eps` times the largest
/// magnitude seen for the pair output zero and drop out of the SRP sum.
pub fn phat_weight(cs: &CrossSpectrumSet, floor_eps: f64) -> CrossSpectrumSet {
    let mut out = cs.clone();
    let (num_pairs, frames, bins) = {
        let s = cs.values.shape();
        (s[0], s[1], s[2])
    };
    for p in 0..num_pairs {
        let mut max_mag: f64 = 0.0;
        for l in 0..frames {
            for k in 0..bins {
                max_mag = max_mag.max(cs.values[(p, l, k)].norm());
            }
        }
        let floor = floor_eps * max_mag;
        for l in 0..frames {
            for k in 0..bins {
                let v = cs.values[(p, l, k)];
                let mag = v.norm();
                out.values[(p, l, k)] = if mag > floor && mag > 0.0 {
                    v / mag
                } else {
                    Complex64::default()
                };
            }
        }
    }
    out
}
