//! Steered response power over an azimuth grid.
//!
//! Two ways to obtain the per-pair spectra feeding the grid search: the
//! conventional route uses the cross-spectra between the array microphones
//! directly; the auxiliary route replaces each pair spectrum with the
//! product of the two spectra linking that pair through the auxiliary
//! microphone. The auxiliary microphone itself is never steered, since its
//! position is unknown.

use std::ops::Range;

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{tdoa_between, AcousticConstants, ArrayGeometry, DoaVector};
use crate::spectral::CrossSpectrumSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SrpMode {
    Conventional,
    Auxiliary,
}

/// Time-averaged, PHAT-weighted spectra for every array pair (i, j), i > j.
#[derive(Debug, Clone)]
pub struct SrpSpectra {
    pub mode: SrpMode,
    /// Array-microphone pairs (i, j) with i > j, deterministic order.
    pub pairs: Vec<(usize, usize)>,
    /// Frame-averaged spectra, indexed [pair, bin]. The average of
    /// unit-modulus values is kept as-is, so |ψ| ≤ 1.
    pub spectra: Array2<Complex64>,
    /// Radial frequency of each bin, rad/s.
    pub bin_frequencies: Vec<f64>,
}

fn cma_pair_list(num_mics: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for i in 1..num_mics {
        for j in 0..i {
            pairs.push((i, j));
        }
    }
    pairs
}

/// Frame-mean of a per-frame pair spectrum.
fn frame_mean(cs: &CrossSpectrumSet, pair_idx: usize, conjugate: bool) -> Vec<Complex64> {
    let frames = cs.values.shape()[1];
    let bins = cs.values.shape()[2];
    let mut out = vec![Complex64::default(); bins];
    for l in 0..frames {
        for (k, o) in out.iter_mut().enumerate() {
            let v = cs.values[(pair_idx, l, k)];
            *o += if conjugate { v.conj() } else { v };
        }
    }
    for o in &mut out {
        *o /= frames as f64;
    }
    out
}

/// Conventional SRP spectra: frame-mean of the PHAT-weighted cross-spectra
/// over all array pairs (i, j), i > j. The mean is not re-normalized.
pub fn conventional_spectra(cs: &CrossSpectrumSet, num_mics: usize) -> Result<SrpSpectra> {
    let pairs = cma_pair_list(num_mics);
    let bins = cs.values.shape()[2];
    let mut spectra = Array2::default((pairs.len(), bins));
    for (row, &(i, j)) in pairs.iter().enumerate() {
        // Accept either orientation of the stored pair.
        let (idx, conj) = match (cs.pair_index(i, j), cs.pair_index(j, i)) {
            (Some(p), _) => (p, false),
            (None, Some(p)) => (p, true),
            (None, None) => {
                return Err(Error::InvalidInput(format!(
                    "cross-spectrum set is missing pair ({i}, {j})"
                )))
            }
        };
        let mean = frame_mean(cs, idx, conj);
        for (k, v) in mean.into_iter().enumerate() {
            spectra[(row, k)] = v;
        }
    }
    Ok(SrpSpectra {
        mode: SrpMode::Conventional,
        pairs,
        spectra,
        bin_frequencies: cs.bin_frequencies.clone(),
    })
}

/// Auxiliary-microphone SRP spectra.
///
/// For every array pair (i, j) the spectrum is the per-frame product
/// ψ_iA[k,l]·ψ_Aj[k,l] (with ψ_Aj = conj(ψ_jA)), frame-averaged afterwards.
/// `cs` must contain a PHAT-weighted pair (i, aux_channel) or
/// (aux_channel, i) for every array microphone i < num_cma.
pub fn auxiliary_spectra(
    cs: &CrossSpectrumSet,
    aux_channel: usize,
    num_cma: usize,
) -> Result<SrpSpectra> {
    if num_cma < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 array microphones, got {num_cma}"
        )));
    }
    // Locate ψ_iA for each array microphone; conjugate if stored as ψ_Ai.
    let mut link = Vec::with_capacity(num_cma);
    for i in 0..num_cma {
        match (
            cs.pair_index(i, aux_channel),
            cs.pair_index(aux_channel, i),
        ) {
            (Some(p), _) => link.push((p, false)),
            (None, Some(p)) => link.push((p, true)),
            (None, None) => {
                return Err(Error::InvalidInput(format!(
                    "no auxiliary cross-spectrum for microphone {i} \
                     (channel {aux_channel} not paired)"
                )))
            }
        }
    }

    let frames = cs.values.shape()[1];
    let bins = cs.values.shape()[2];
    let pairs = cma_pair_list(num_cma);
    let mut spectra = Array2::default((pairs.len(), bins));
    for (row, &(i, j)) in pairs.iter().enumerate() {
        let (pi, ci) = link[i];
        let (pj, cj) = link[j];
        for k in 0..bins {
            let mut acc = Complex64::default();
            for l in 0..frames {
                let psi_ia = if ci {
                    cs.values[(pi, l, k)].conj()
                } else {
                    cs.values[(pi, l, k)]
                };
                let psi_ja = if cj {
                    cs.values[(pj, l, k)].conj()
                } else {
                    cs.values[(pj, l, k)]
                };
                // ψ_Aj = conj(ψ_jA)
                acc += psi_ia * psi_ja.conj();
            }
            spectra[(row, k)] = acc / frames as f64;
        }
    }
    Ok(SrpSpectra {
        mode: SrpMode::Auxiliary,
        pairs,
        spectra,
        bin_frequencies: cs.bin_frequencies.clone(),
    })
}

/// SRP values over a uniform azimuth grid.
#[derive(Debug, Clone)]
pub struct SrpGrid {
    /// Azimuths in radians, uniform over [0, 2π).
    pub azimuths: Vec<f64>,
    pub values: Vec<f64>,
    pub argmax_index: usize,
}

impl SrpGrid {
    fn from_values(azimuths: Vec<f64>, values: Vec<f64>) -> Self {
        // Ties break toward the smallest azimuth.
        let mut argmax = 0;
        for (idx, &v) in values.iter().enumerate() {
            if v > values[argmax] {
                argmax = idx;
            }
        }
        Self {
            azimuths,
            values,
            argmax_index: argmax,
        }
    }
}

/// Evaluate the SRP functional over `num_azimuths` uniform steering angles:
/// φ(θ) = Σ_pairs Σ_{k ∈ band} 2·Re{ψ_ij[k]·exp(jω_k τ_ij(v(θ)))}.
///
/// The doubled real part realizes the two-sided frequency integral using
/// one-sided spectra. `band` indexes bins half-open; bin 0 (DC) is usually
/// excluded by the caller.
pub fn srp_function(
    spectra: &SrpSpectra,
    geometry: &ArrayGeometry,
    num_azimuths: usize,
    band: Range<usize>,
    c: &AcousticConstants,
) -> Result<SrpGrid> {
    if num_azimuths == 0 {
        return Err(Error::InvalidInput("azimuth grid is empty".into()));
    }
    let bins = spectra.bin_frequencies.len();
    if band.is_empty() || band.end > bins {
        return Err(Error::InvalidInput(format!(
            "frequency band {band:?} invalid for {bins} bins"
        )));
    }
    // Resolve pair positions up front so index errors surface before the scan.
    let mut pair_positions = Vec::with_capacity(spectra.pairs.len());
    for &(i, j) in &spectra.pairs {
        pair_positions.push((geometry.mic(i)?, geometry.mic(j)?));
    }

    let azimuths: Vec<f64> = (0..num_azimuths)
        .map(|n| std::f64::consts::TAU * n as f64 / num_azimuths as f64)
        .collect();
    let values: Vec<f64> = azimuths
        .iter()
        .map(|&theta| {
            let v = DoaVector::from_azimuth(theta);
            let mut phi = 0.0;
            for (row, (mi, mj)) in pair_positions.iter().enumerate() {
                let tau = tdoa_between(mi, mj, &v, c);
                for k in band.clone() {
                    let steer = Complex64::from_polar(1.0, spectra.bin_frequencies[k] * tau);
                    phi += 2.0 * (spectra.spectra[(row, k)] * steer).re;
                }
            }
            phi
        })
        .collect();

    Ok(SrpGrid::from_values(azimuths, values))
}

/// DOA estimate: the grid azimuth maximizing the SRP functional.
pub fn estimate_doa(grid: &SrpGrid) -> DoaVector {
    DoaVector::from_azimuth(grid.azimuths[grid.argmax_index])
}

/// Spectra synthesized from pure far-field phase shifts for a known source
/// direction: ψ_ij[k] = exp(-jω_k τ_ij(v_s)). Used by tests and free-field
/// checks; no undesired component.
pub fn ideal_spectra(
    geometry: &ArrayGeometry,
    v_s: &DoaVector,
    bin_frequencies: &[f64],
    c: &AcousticConstants,
) -> Result<SrpSpectra> {
    let pairs = geometry.cma_pairs();
    let mut spectra = Array2::default((pairs.len(), bin_frequencies.len()));
    for (row, &(i, j)) in pairs.iter().enumerate() {
        let tau = crate::geometry::tdoa(geometry, i, j, v_s, c)?;
        for (k, &w) in bin_frequencies.iter().enumerate() {
            spectra[(row, k)] = Complex64::from_polar(1.0, -w * tau);
        }
    }
    Ok(SrpSpectra {
        mode: SrpMode::Conventional,
        pairs,
        spectra,
        bin_frequencies: bin_frequencies.to_vec(),
    })
}
