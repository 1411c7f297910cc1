//! Experiment orchestration: analytic-model sweeps, simulation campaigns,
//! single-file localization, and calibrated-RIR dumps, each with CSV and
//! metadata emission.

mod campaign;
mod config;
mod locate;
mod sweep;

use std::fmt::Write as _;
use std::path::PathBuf;

pub use campaign::{run_campaign, AuxSummary, CampaignResult, ScenarioRow};
pub use config::{
    load_config, CampaignConfig, LocateConfig, LocateMode, ModelSweepConfig, RirConfig,
};
pub use locate::{locate, LocateReport, PairSummary};
pub use sweep::{run_model_sweep, ModelSweepResult, SweepOutput};

use crate::error::{Error, Result};
use crate::geometry::{AcousticConstants, Position};
use crate::sim::{calibrate_reflection, estimate_t60, ism_rir, rir_drr_db, RoomSpec};

#[derive(Debug)]
pub struct RirDump {
    pub wav_path: PathBuf,
    pub sidecar_path: PathBuf,
    pub reflection_coefficient: f64,
    pub t60_s: Option<f64>,
    pub drr_db: f64,
}

/// Produce a (possibly calibrated) RIR as a single-channel WAV plus a text
/// sidecar with the simulation parameters.
pub fn dump_rir(cfg: &RirConfig) -> Result<RirDump> {
    let constants = AcousticConstants::new(cfg.speed_of_sound)?;
    let source = Position::from(cfg.source_position);
    let mic = Position::from(cfg.mic_position);
    let template = RoomSpec {
        dimensions: cfg.room_dimensions,
        reflection_coefficient: cfg.reflection_coefficient.unwrap_or(0.0),
        max_image_order: None,
    };

    let room = match (cfg.reflection_coefficient, cfg.target_drr_db) {
        (Some(_), Some(_)) => {
            return Err(Error::Config(
                "set either reflection_coefficient or target_drr_db, not both".into(),
            ))
        }
        (Some(_), None) => template,
        (None, Some(target)) => {
            calibrate_reflection(
                &template,
                &[mic],
                &source,
                target,
                cfg.sample_rate,
                &constants,
                cfg.direct_window_ms,
            )?
            .room
        }
        (None, None) => template,
    };

    let rir = ism_rir(&room, &source, &mic, cfg.sample_rate, &constants)?;
    let t60 = estimate_t60(&rir);
    let drr = rir_drr_db(&rir, cfg.direct_window_ms);

    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e))?;
    let wav_path = cfg.out_dir.join("rir.wav");
    crate::wav::write_wav_f32(&wav_path, &[rir.samples.clone()], cfg.sample_rate)?;

    let sidecar_path = cfg.out_dir.join("rir.meta.txt");
    let mut meta = String::new();
    let _ = writeln!(meta, "sample_rate_hz = {}", cfg.sample_rate);
    let _ = writeln!(
        meta,
        "room_dimensions_m = [{}, {}, {}]",
        cfg.room_dimensions[0], cfg.room_dimensions[1], cfg.room_dimensions[2]
    );
    let _ = writeln!(
        meta,
        "source_position_m = [{}, {}, {}]",
        source.x, source.y, source.z
    );
    let _ = writeln!(meta, "mic_position_m = [{}, {}, {}]", mic.x, mic.y, mic.z);
    let _ = writeln!(
        meta,
        "reflection_coefficient = {}",
        room.reflection_coefficient
    );
    let _ = writeln!(
        meta,
        "t60_s = {}",
        t60.map_or(String::from("n/a"), |t| format!("{t:.4}"))
    );
    let _ = writeln!(meta, "drr_db = {drr:.4}");
    let _ = writeln!(meta, "direct_index = {}", rir.direct_index);
    std::fs::write(&sidecar_path, meta).map_err(|e| Error::io(&sidecar_path, e))?;

    Ok(RirDump {
        wav_path,
        sidecar_path,
        reflection_coefficient: room.reflection_coefficient,
        t60_s: t60,
        drr_db: drr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rir_dump_writes_wav_and_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RirConfig {
            target_drr_db: None,
            reflection_coefficient: Some(0.5),
            out_dir: dir.path().to_path_buf(),
            ..RirConfig::default()
        };
        let dump = dump_rir(&cfg).unwrap();
        assert!(dump.wav_path.exists());
        let meta = std::fs::read_to_string(&dump.sidecar_path).unwrap();
        assert!(meta.contains("reflection_coefficient = 0.5"));
        assert!(meta.contains("t60_s ="));
    }

    #[test]
    fn rir_dump_rejects_conflicting_settings() {
        let cfg = RirConfig {
            target_drr_db: Some(-1.4),
            reflection_coefficient: Some(0.5),
            ..RirConfig::default()
        };
        assert!(matches!(dump_rir(&cfg), Err(Error::Config(_))));
    }
}
