//! Experiment configuration: TOML files with flag-level overrides applied
//! by the CLI. Every field has a default, so an empty file (or no file) is
//! a valid starting point.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{SweepGrid, TdoaConvention};
use crate::spectral::{StftConfig, Window};

/// Load a TOML config, or defaults when `path` is `None`.
pub fn load_config<T: Default + serde::de::DeserializeOwned>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))
        }
    }
}

fn default_speed() -> f64 {
    343.0
}

/// Analytic-model sweep over auxiliary positions, one map per SUR.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSweepConfig {
    /// One map is produced per entry.
    pub surs_db: Vec<f64>,
    /// Array pair spacing, meters.
    pub d12: f64,
    /// Source distance from the array centroid, meters.
    pub dc: f64,
    /// Frequency samples on [0, band edge], endpoints included.
    pub num_freqs: usize,
    /// Band upper edge, Hz.
    pub band_upper_hz: f64,
    /// Pair orientations in degrees; `None` selects 0°..170° in 10° steps.
    pub orientations_deg: Option<Vec<f64>>,
    pub tdoa_convention: TdoaConvention,
    pub grid: SweepGrid,
    pub speed_of_sound: f64,
    pub out_dir: PathBuf,
}

impl Default for ModelSweepConfig {
    fn default() -> Self {
        Self {
            surs_db: vec![10.0, 0.0],
            d12: 0.05,
            dc: 2.0,
            num_freqs: 1025,
            band_upper_hz: 8000.0,
            orientations_deg: None,
            tdoa_convention: TdoaConvention::FarField,
            grid: SweepGrid::default(),
            speed_of_sound: default_speed(),
            out_dir: PathBuf::from("out/model-sweep"),
        }
    }
}

/// Simulation campaign over CMA orientations, source signals, and
/// auxiliary positions.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignConfig {
    pub room_dimensions: [f64; 3],
    pub cma_center: [f64; 3],
    pub cma_spacing: f64,
    pub num_mics: usize,
    pub source_position: [f64; 3],
    pub target_drr_db: f64,
    pub target_rsnr_db: f64,
    /// CMA orientations in degrees.
    pub orientations_deg: Vec<f64>,
    pub signals_per_orientation: usize,
    pub signal_duration_s: f64,
    /// Auxiliary microphone positions (absolute room coordinates).
    pub aux_positions: Vec<[f64; 3]>,
    pub master_seed: u64,
    pub sample_rate: f64,
    pub frame_length: usize,
    pub hop: usize,
    pub smoothing_lambda: f64,
    pub num_azimuths: usize,
    /// First STFT bin entering the SRP sum (1 skips DC).
    pub band_lo_bin: usize,
    /// One past the last bin; `None` means all bins.
    pub band_hi_bin: Option<usize>,
    pub noise_plane_waves: usize,
    pub direct_window_ms: f64,
    pub speed_of_sound: f64,
    pub out_dir: PathBuf,
    pub dump_stems: bool,
    pub threads: Option<usize>,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            room_dimensions: [6.0, 6.0, 2.4],
            cma_center: [4.0, 3.0, 1.75],
            cma_spacing: 0.05,
            num_mics: 3,
            source_position: [2.0, 3.0, 1.75],
            target_drr_db: -1.4,
            target_rsnr_db: -1.4,
            orientations_deg: (0..12).map(|n| 10.0 * n as f64).collect(),
            signals_per_orientation: 10,
            signal_duration_s: 3.0,
            aux_positions: default_aux_ring(),
            master_seed: 0,
            sample_rate: 16_000.0,
            frame_length: 512,
            hop: 256,
            smoothing_lambda: 0.98,
            num_azimuths: 360,
            band_lo_bin: 1,
            band_hi_bin: None,
            noise_plane_waves: 256,
            direct_window_ms: 1.0,
            speed_of_sound: default_speed(),
            out_dir: PathBuf::from("out/campaign"),
            dump_stems: false,
            threads: None,
        }
    }
}

/// Eight auxiliary positions on a 1.5 m ring around the default CMA.
fn default_aux_ring() -> Vec<[f64; 3]> {
    (0..8)
        .map(|k| {
            let a = std::f64::consts::TAU * k as f64 / 8.0;
            [4.0 + 1.5 * a.cos(), 3.0 + 1.5 * a.sin(), 1.75]
        })
        .collect()
}

impl CampaignConfig {
    pub fn stft(&self) -> StftConfig {
        StftConfig {
            sample_rate: self.sample_rate,
            frame_length: self.frame_length,
            hop: self.hop,
            window: Window::SqrtHann,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_mics < 2 {
            return Err(Error::Config("num_mics must be at least 2".into()));
        }
        if self.orientations_deg.is_empty() || self.signals_per_orientation == 0 {
            return Err(Error::Config(
                "campaign needs at least one orientation and one signal".into(),
            ));
        }
        if self.aux_positions.is_empty() {
            return Err(Error::Config(
                "campaign needs at least one auxiliary position".into(),
            ));
        }
        if !(self.signal_duration_s >= 1.0) {
            return Err(Error::Config("signal duration must be >= 1 s".into()));
        }
        self.stft().validate()
    }
}

/// Which spectra feed the grid search for `locate`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LocateMode {
    #[default]
    Conventional,
    /// Auxiliary microphone is the last WAV channel.
    Auxiliary,
}

/// Single-file DOA estimation.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LocateConfig {
    pub wav_path: PathBuf,
    /// Array microphone positions; the WAV must carry one channel per
    /// entry (plus a trailing auxiliary channel in auxiliary mode).
    pub mic_positions: Vec<[f64; 3]>,
    pub mode: LocateMode,
    pub sample_rate_override: Option<f64>,
    pub frame_length: usize,
    pub hop: usize,
    pub smoothing_lambda: f64,
    pub num_azimuths: usize,
    pub band_lo_bin: usize,
    pub band_hi_bin: Option<usize>,
    /// Ground-truth azimuth for error reporting, degrees.
    pub true_azimuth_deg: Option<f64>,
    /// When set, the SRP grid is written here as CSV.
    pub grid_csv: Option<PathBuf>,
    pub speed_of_sound: f64,
}

impl Default for LocateConfig {
    fn default() -> Self {
        Self {
            wav_path: PathBuf::new(),
            mic_positions: vec![
                [0.025, 0.0, 0.0],
                [-0.0125, 0.021650635094610966, 0.0],
                [-0.0125, -0.021650635094610966, 0.0],
            ],
            mode: LocateMode::Conventional,
            sample_rate_override: None,
            frame_length: 512,
            hop: 256,
            smoothing_lambda: 0.98,
            num_azimuths: 360,
            band_lo_bin: 1,
            band_hi_bin: None,
            true_azimuth_deg: None,
            grid_csv: None,
            speed_of_sound: default_speed(),
        }
    }
}

/// Calibrated-RIR dump.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RirConfig {
    pub room_dimensions: [f64; 3],
    /// Either calibrate to this DRR target...
    pub target_drr_db: Option<f64>,
    /// ...or use this reflection coefficient directly.
    pub reflection_coefficient: Option<f64>,
    pub source_position: [f64; 3],
    pub mic_position: [f64; 3],
    pub sample_rate: f64,
    pub direct_window_ms: f64,
    pub speed_of_sound: f64,
    pub out_dir: PathBuf,
}

impl Default for RirConfig {
    fn default() -> Self {
        Self {
            room_dimensions: [6.0, 6.0, 2.4],
            target_drr_db: Some(-1.4),
            reflection_coefficient: None,
            source_position: [2.0, 3.0, 1.75],
            mic_position: [4.0, 3.0, 1.75],
            sample_rate: 16_000.0,
            direct_window_ms: 1.0,
            speed_of_sound: default_speed(),
            out_dir: PathBuf::from("out/rir"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_toml_gives_defaults() {
        let cfg: CampaignConfig = toml::from_str("").unwrap();
        assert_eq!(cfg.num_mics, 3);
        assert_eq!(cfg.orientations_deg.len(), 12);
        assert_eq!(cfg.signals_per_orientation, 10);
        assert_eq!(cfg.aux_positions.len(), 8);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let err = toml::from_str::<ModelSweepConfig>("no_such_field = 1").unwrap_err();
        assert!(err.to_string().contains("no_such_field"));
    }

    #[test]
    fn partial_override_keeps_rest() {
        let cfg: ModelSweepConfig = toml::from_str("surs_db = [5.0]\nd12 = 0.1").unwrap();
        assert_eq!(cfg.surs_db, vec![5.0]);
        assert_eq!(cfg.d12, 0.1);
        assert_eq!(cfg.num_freqs, 1025);
    }

    #[test]
    fn campaign_validation() {
        let mut cfg = CampaignConfig::default();
        cfg.signals_per_orientation = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = CampaignConfig::default();
        cfg.aux_positions.clear();
        assert!(cfg.validate().is_err());
    }
}
