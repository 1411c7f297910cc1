//! Spherically isotropic noise synthesis.
//!
//! The field is a sum of independent white-noise plane waves arriving from
//! directions spread uniformly over the sphere (a Fibonacci lattice, so
//! the angular coverage is even at any wave count). Each wave reaches each
//! microphone with the projection delay of its direction, applied in the
//! frequency domain. The resulting inter-channel coherence follows
//! sinc(ωd/ν).

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::geometry::{AcousticConstants, Position};
use crate::rng::{derive_seed, rng_from_seed};

/// Unit directions on a Fibonacci sphere lattice.
pub fn fibonacci_sphere(n: usize) -> Vec<[f64; 3]> {
    let golden = (1.0 + 5.0f64.sqrt()) / 2.0;
    (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let theta = std::f64::consts::TAU * i as f64 / golden;
            let r = (1.0 - z * z).sqrt();
            [r * theta.cos(), r * theta.sin(), z]
        })
        .collect()
}

fn inverse_fft_real(spectrum: &[Complex64], nfft: usize, plan: &Arc<dyn Fft<f64>>) -> Vec<f64> {
    // Hermitian extension of the one-sided spectrum, then a full inverse
    // transform; the imaginary parts cancel by construction.
    let bins = spectrum.len();
    let mut full = vec![Complex64::default(); nfft];
    full[..bins].copy_from_slice(spectrum);
    for k in 1..bins - 1 {
        full[nfft - k] = spectrum[k].conj();
    }
    plan.process(&mut full);
    full.iter().map(|v| v.re).collect()
}

/// Synthesize `num_samples` of a spherically isotropic noise field observed
/// at the given positions. Deterministic for a given seed; channels from
/// the same call share one field and carry equal power.
pub fn isotropic_noise(
    num_samples: usize,
    sample_rate: f64,
    positions: &[Position],
    num_plane_waves: usize,
    seed: u64,
    c: &AcousticConstants,
) -> Result<Vec<Vec<f64>>> {
    if num_plane_waves < 64 {
        return Err(Error::Config(format!(
            "need at least 64 plane waves for an isotropic field, got {num_plane_waves}"
        )));
    }
    if positions.is_empty() || num_samples == 0 || !(sample_rate > 0.0) {
        return Err(Error::InvalidInput(
            "isotropic noise needs positions, samples, and a sample rate".into(),
        ));
    }

    let nfft = num_samples.next_power_of_two().max(2);
    let bins = nfft / 2 + 1;
    let nu = c.speed_of_sound;

    // Delays are taken relative to the centroid of the positions to keep
    // the per-channel phase ramps small.
    let nch = positions.len() as f64;
    let ref_point = positions.iter().fold(Position::new(0.0, 0.0, 0.0), |a, p| {
        Position::new(a.x + p.x / nch, a.y + p.y / nch, a.z + p.z / nch)
    });

    let directions = fibonacci_sphere(num_plane_waves);
    let omega: Vec<f64> = (0..bins)
        .map(|k| std::f64::consts::TAU * sample_rate * k as f64 / nfft as f64)
        .collect();
    let inverse = FftPlanner::new().plan_fft_inverse(nfft);
    let scale = 1.0 / ((nfft * num_plane_waves) as f64).sqrt();

    // Each channel accumulates the same per-wave spectra (regenerated from
    // the same derived seeds) with its own steering phase, so channels can
    // run in parallel and still observe one coherent field.
    let channels: Vec<Vec<f64>> = positions
        .par_iter()
        .map(|pos| {
            let offset = pos.sub(&ref_point);
            let mut acc = vec![Complex64::default(); bins];
            let mut wave = vec![Complex64::default(); bins];
            for (p, dir) in directions.iter().enumerate() {
                let mut rng = rng_from_seed(derive_seed(seed, "isotropic-plane-wave", &[p as u64]));
                for w in wave.iter_mut() {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    *w = Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2;
                }
                wave[0].im = 0.0;
                wave[bins - 1].im = 0.0;
                // Arrival-time offset of this wavefront at the channel.
                let delay = -(dir[0] * offset[0] + dir[1] * offset[1] + dir[2] * offset[2]) / nu;
                for k in 0..bins {
                    acc[k] += wave[k] * Complex64::from_polar(1.0, -omega[k] * delay);
                }
            }
            let mut time = inverse_fft_real(&acc, nfft, &inverse);
            time.truncate(num_samples);
            for s in &mut time {
                *s *= scale;
            }
            time
        })
        .collect();

    Ok(channels)
}
