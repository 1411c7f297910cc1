//! Single-file DOA estimation from a multichannel WAV.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geometry::{doa_error_degrees, AcousticConstants, ArrayGeometry, DoaVector, Position};
use crate::harness::config::{LocateConfig, LocateMode};
use crate::spectral::{phat_weight, recursive_cross_psd, stft, StftConfig, Window, PHAT_FLOOR};
use crate::srp::{auxiliary_spectra, conventional_spectra, estimate_doa, srp_function, SrpGrid};

/// Per-pair summary: how much modulus the frame-averaged PHAT spectrum
/// keeps in the analysis band (1 = perfectly stationary phase).
#[derive(Debug, Clone)]
pub struct PairSummary {
    pub i: usize,
    pub j: usize,
    pub mean_modulus: f64,
}

#[derive(Debug)]
pub struct LocateReport {
    pub mode: LocateMode,
    pub estimated_azimuth_deg: f64,
    pub error_deg: Option<f64>,
    pub pair_summaries: Vec<PairSummary>,
    pub grid: SrpGrid,
}

impl LocateReport {
    /// Human-readable report for the CLI.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "mode: {:?}", self.mode);
        let _ = writeln!(out, "estimated_azimuth_deg: {:.2}", self.estimated_azimuth_deg);
        if let Some(e) = self.error_deg {
            let _ = writeln!(out, "error_deg: {e:.2}");
        }
        for p in &self.pair_summaries {
            let _ = writeln!(
                out,
                "pair ({}, {}): mean |psi| over band = {:.4}",
                p.i, p.j, p.mean_modulus
            );
        }
        out
    }
}

/// Estimate the DOA from a WAV file. The channel count must equal the
/// number of configured microphones, plus one trailing auxiliary channel
/// in auxiliary mode.
pub fn locate(cfg: &LocateConfig) -> Result<LocateReport> {
    let wav = crate::wav::read_wav(&cfg.wav_path)?;
    let m = cfg.mic_positions.len();
    if m < 2 {
        return Err(Error::Config("need at least two microphones".into()));
    }
    let expected = match cfg.mode {
        LocateMode::Conventional => m,
        LocateMode::Auxiliary => m + 1,
    };
    if wav.channels.len() != expected {
        return Err(Error::ChannelMismatch {
            expected,
            actual: wav.channels.len(),
        });
    }

    let constants = AcousticConstants::new(cfg.speed_of_sound)?;
    let stft_cfg = StftConfig {
        sample_rate: cfg.sample_rate_override.unwrap_or(wav.sample_rate),
        frame_length: cfg.frame_length,
        hop: cfg.hop,
        window: Window::SqrtHann,
    };
    let mics: Vec<Position> = cfg.mic_positions.iter().map(|&p| Position::from(p)).collect();
    let geometry = ArrayGeometry::new(mics, None)?;

    let spec = stft(&wav.channels, &stft_cfg)?;
    let bins = spec.num_bins();
    let band = cfg.band_lo_bin..cfg.band_hi_bin.unwrap_or(bins);

    let pairs = match cfg.mode {
        LocateMode::Conventional => geometry.cma_pairs(),
        LocateMode::Auxiliary => (0..m).map(|i| (i, m)).collect(),
    };
    let cross = phat_weight(
        &recursive_cross_psd(&spec, &pairs, cfg.smoothing_lambda)?,
        PHAT_FLOOR,
    );
    let spectra = match cfg.mode {
        LocateMode::Conventional => conventional_spectra(&cross, m)?,
        LocateMode::Auxiliary => auxiliary_spectra(&cross, m, m)?,
    };

    let pair_summaries: Vec<PairSummary> = spectra
        .pairs
        .iter()
        .enumerate()
        .map(|(row, &(i, j))| {
            let mut acc = 0.0;
            for k in band.clone() {
                acc += spectra.spectra[(row, k)].norm();
            }
            PairSummary {
                i,
                j,
                mean_modulus: acc / band.len() as f64,
            }
        })
        .collect();

    let grid = srp_function(&spectra, &geometry, cfg.num_azimuths, band, &constants)?;
    let est = estimate_doa(&grid);
    let error_deg = cfg
        .true_azimuth_deg
        .map(|t| doa_error_degrees(&est, &DoaVector::from_degrees(t)));

    if let Some(csv) = &cfg.grid_csv {
        let mut text = String::from("azimuth_deg,srp\n");
        for (theta, v) in grid.azimuths.iter().zip(&grid.values) {
            let _ = writeln!(text, "{:.4},{v:.9}", theta.to_degrees());
        }
        std::fs::write(csv, text).map_err(|e| Error::io(csv, e))?;
    }

    Ok(LocateReport {
        mode: cfg.mode,
        estimated_azimuth_deg: est.azimuth_degrees(),
        error_deg,
        pair_summaries,
        grid,
    })
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{cma_positions, render_scenario, synth_speech, RoomSpec, SceneConfig};

    fn render_free_field_wav(dir: &std::path::Path, theta_deg: f64, aux: bool) -> LocateConfig {
        let constants = AcousticConstants::default();
        let center = Position::new(3.0, 3.0, 1.2);
        let mics = cma_positions(&center, 0.05, 0.0, 3);
        let theta = theta_deg.to_radians();
        let source = Position::new(3.0 + 2.0 * theta.cos(), 3.0 + 2.0 * theta.sin(), 1.2);
        let scene = SceneConfig {
            room: RoomSpec::default(),
            cma_positions: mics.clone(),
            aux_positions: if aux {
                vec![Position::new(3.0, 1.0, 1.2)]
            } else {
                vec![]
            },
            source_position: source,
            source: synth_speech(1.0, 16_000.0, 3).unwrap(),
            target_rsnr_db: f64::INFINITY,
            target_drr_db: None,
            direct_window_ms: 1.0,
            noise_plane_waves: 64,
            noise_seed: 5,
        };
        let render = render_scenario(&scene, &constants).unwrap();
        let wav_path = dir.join("scene.wav");
        crate::wav::write_wav_f32(&wav_path, &render.mixed, 16_000.0).unwrap();

        LocateConfig {
            wav_path,
            mic_positions: mics
                .iter()
                .map(|p| [p.x - center.x, p.y - center.y, 0.0])
                .collect(),
            mode: if aux {
                LocateMode::Auxiliary
            } else {
                LocateMode::Conventional
            },
            true_azimuth_deg: Some(theta_deg),
            ..LocateConfig::default()
        }
    }

    #[test]
    fn locates_free_field_source() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = render_free_field_wav(dir.path(), 45.0, false);
        let report = locate(&cfg).unwrap();
        assert!(report.error_deg.unwrap() <= 1.0, "{report:?}");
    }

    #[test]
    fn locates_with_auxiliary_channel() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = render_free_field_wav(dir.path(), 45.0, true);
        let report = locate(&cfg).unwrap();
        assert!(report.error_deg.unwrap() <= 1.0, "{report:?}");
    }

    #[test]
    fn channel_count_mismatch_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = render_free_field_wav(dir.path(), 10.0, false);
        // Mono file with a 3-microphone geometry.
        let mono = vec![vec![0.1f64; 16_000]];
        crate::wav::write_wav_f32(&cfg.wav_path, &mono, 16_000.0).unwrap();
        cfg.true_azimuth_deg = None;
        match locate(&cfg) {
            Err(Error::ChannelMismatch { expected, actual }) => {
                assert_eq!(expected, 3);
                assert_eq!(actual, 1);
            }
            other => panic!("expected channel mismatch, got {other:?}"),
        }
    }

    #[test]
    fn repeated_runs_identical() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = render_free_field_wav(dir.path(), 200.0, false);
        cfg.grid_csv = Some(dir.path().join("grid.csv"));
        let r1 = locate(&cfg).unwrap();
        let g1 = std::fs::read(cfg.grid_csv.as_ref().unwrap()).unwrap();
        let r2 = locate(&cfg).unwrap();
        let g2 = std::fs::read(cfg.grid_csv.as_ref().unwrap()).unwrap();
        assert_eq!(r1.estimated_azimuth_deg, r2.estimated_azimuth_deg);
        assert_eq!(g1, g2);
        let text = String::from_utf8(g1).unwrap();
        assert!(text.starts_with("azimuth_deg,srp\n"));
        assert_eq!(text.lines().count(), 361);
    }
}
