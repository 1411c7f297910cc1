//! Simulation campaigns: calibrate one room, render every (orientation,
//! signal) scenario, estimate the DOA once conventionally and once per
//! auxiliary position, and aggregate the errors.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{
    doa_error_degrees, AcousticConstants, ArrayGeometry, Position,
};
use crate::harness::config::CampaignConfig;
use crate::rng::derive_seed;
use crate::sim::{
    calibrate_reflection, cma_positions, estimate_t60, ism_rir, render_scenario, synth_speech,
    RoomSpec, SceneConfig,
};
use crate::spectral::{phat_weight, recursive_cross_psd, stft, PHAT_FLOOR};
use crate::srp::{auxiliary_spectra, conventional_spectra, estimate_doa, srp_function};

/// One DOA estimate within a campaign.
#[derive(Debug, Clone)]
pub struct ScenarioRow {
    pub orientation_deg: f64,
    pub signal_index: usize,
    /// `None` marks the conventional baseline, `Some(a)` auxiliary position a.
    pub aux_index: Option<usize>,
    pub theta_true_deg: f64,
    pub theta_est_deg: f64,
    pub error_deg: f64,
    pub drr_db: f64,
    pub rsnr_db: f64,
    pub sur_db: f64,
}

#[derive(Debug, Clone)]
pub struct AuxSummary {
    pub aux_index: usize,
    pub position: [f64; 3],
    pub mean_error_deg: f64,
    /// Whether this auxiliary position reduced the mean error below the
    /// conventional baseline.
    pub improved: bool,
}

#[derive(Debug)]
pub struct CampaignResult {
    pub baseline_mean_error_deg: f64,
    pub aux_summaries: Vec<AuxSummary>,
    pub rows: Vec<ScenarioRow>,
    pub reflection_coefficient: f64,
    pub calibrated_drr_db: f64,
    pub t60_s: Option<f64>,
    pub scenarios_csv: PathBuf,
    pub summary_csv: PathBuf,
    pub metadata_path: PathBuf,
}

/// Holds `<out_dir>/.lock` for the lifetime of a campaign run.
struct DirLock {
    path: PathBuf,
}

impl DirLock {
    fn acquire(dir: &Path) -> Result<Self> {
        let path = dir.join(".lock");
        match std::fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
        {
            Ok(_) => Ok(Self { path }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(Error::Config(format!(
                "campaign directory {} is locked by another run (remove {} if stale)",
                dir.display(),
                path.display()
            ))),
            Err(e) => Err(Error::io(&path, e)),
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
    }
}

struct ScenarioOutcome {
    rows: Vec<ScenarioRow>,
}

fn run_scenario(
    cfg: &CampaignConfig,
    room: &RoomSpec,
    constants: &AcousticConstants,
    orientation_idx: usize,
    signal_idx: usize,
) -> Result<ScenarioOutcome> {
    let orientation_deg = cfg.orientations_deg[orientation_idx];
    let center = Position::from(cfg.cma_center);
    let mics = cma_positions(
        &center,
        cfg.cma_spacing,
        orientation_deg.to_radians(),
        cfg.num_mics,
    );
    let aux_positions: Vec<Position> =
        cfg.aux_positions.iter().map(|&p| Position::from(p)).collect();

    let speech_seed = derive_seed(
        cfg.master_seed,
        "speech",
        &[orientation_idx as u64, signal_idx as u64],
    );
    let noise_seed = derive_seed(
        cfg.master_seed,
        "noise",
        &[orientation_idx as u64, signal_idx as u64],
    );
    let source = synth_speech(cfg.signal_duration_s, cfg.sample_rate, speech_seed)?;

    let scene = SceneConfig {
        room: *room,
        cma_positions: mics.clone(),
        aux_positions: aux_positions.clone(),
        source_position: Position::from(cfg.source_position),
        source,
        target_rsnr_db: cfg.target_rsnr_db,
        target_drr_db: Some(cfg.target_drr_db),
        direct_window_ms: cfg.direct_window_ms,
        noise_plane_waves: cfg.noise_plane_waves,
        noise_seed,
    };
    let render = render_scenario(&scene, constants)?;

    if cfg.dump_stems {
        let stem_dir = cfg.out_dir.join("stems");
        std::fs::create_dir_all(&stem_dir).map_err(|e| Error::io(&stem_dir, e))?;
        let tag = format!("o{orientation_idx:02}_s{signal_idx:02}");
        for (name, data) in [
            ("direct", &render.direct),
            ("reverb", &render.reverberant),
            ("noise", &render.noise),
            ("mixed", &render.mixed),
        ] {
            let path = stem_dir.join(format!("{tag}_{name}.wav"));
            crate::wav::write_wav_f32(&path, data, cfg.sample_rate)?;
        }
    }

    // All cross-spectra in one pass: the array pairs plus one pair linking
    // each array microphone to each auxiliary channel.
    let m = cfg.num_mics;
    let geometry = ArrayGeometry::new(mics, None)?;
    let mut pairs = geometry.cma_pairs();
    for a in 0..aux_positions.len() {
        for i in 0..m {
            pairs.push((i, m + a));
        }
    }
    let spec = stft(&render.mixed, &cfg.stft())?;
    let bins = spec.num_bins();
    let band = cfg.band_lo_bin..cfg.band_hi_bin.unwrap_or(bins);
    let cross = phat_weight(
        &recursive_cross_psd(&spec, &pairs, cfg.smoothing_lambda)?,
        PHAT_FLOOR,
    );

    let theta_true_deg = render.v_s.azimuth_degrees();
    let mut rows = Vec::with_capacity(1 + aux_positions.len());

    // Conventional baseline: computed once, independent of any auxiliary.
    let conv = conventional_spectra(&cross, m)?;
    let grid = srp_function(&conv, &geometry, cfg.num_azimuths, band.clone(), constants)?;
    let est = estimate_doa(&grid);
    rows.push(ScenarioRow {
        orientation_deg,
        signal_index: signal_idx,
        aux_index: None,
        theta_true_deg,
        theta_est_deg: est.azimuth_degrees(),
        error_deg: doa_error_degrees(&est, &render.v_s),
        drr_db: render.drr_db,
        rsnr_db: render.rsnr_db,
        sur_db: render.sur_db,
    });

    for a in 0..aux_positions.len() {
        let auxs = auxiliary_spectra(&cross, m + a, m)?;
        let grid = srp_function(&auxs, &geometry, cfg.num_azimuths, band.clone(), constants)?;
        let est = estimate_doa(&grid);
        rows.push(ScenarioRow {
            orientation_deg,
            signal_index: signal_idx,
            aux_index: Some(a),
            theta_true_deg,
            theta_est_deg: est.azimuth_degrees(),
            error_deg: doa_error_degrees(&est, &render.v_s),
            drr_db: render.drr_db,
            rsnr_db: render.rsnr_db,
            sur_db: render.sur_db,
        });
    }

    Ok(ScenarioOutcome { rows })
}

fn write_outputs(
    cfg: &CampaignConfig,
    rows: &[ScenarioRow],
    baseline_mean: f64,
    aux: &[AuxSummary],
    beta: f64,
    calibrated_drr: f64,
    t60: Option<f64>,
) -> Result<(PathBuf, PathBuf, PathBuf)> {
    let scenarios_csv = cfg.out_dir.join("scenarios.csv");
    let mut text = String::from(
        "orientation_deg,signal,mode,aux_index,aux_x,aux_y,theta_true_deg,\
         theta_est_deg,error_deg,drr_db,rsnr_db,sur_db\n",
    );
    for r in rows {
        let (mode, aux_index, ax, ay) = match r.aux_index {
            None => ("conventional".to_string(), "-1".to_string(), String::new(), String::new()),
            Some(a) => (
                "auxiliary".to_string(),
                a.to_string(),
                format!("{:.4}", cfg.aux_positions[a][0]),
                format!("{:.4}", cfg.aux_positions[a][1]),
            ),
        };
        let _ = writeln!(
            text,
            "{:.1},{},{mode},{aux_index},{ax},{ay},{:.4},{:.4},{:.6},{:.4},{:.4},{:.4}",
            r.orientation_deg,
            r.signal_index,
            r.theta_true_deg,
            r.theta_est_deg,
            r.error_deg,
            r.drr_db,
            r.rsnr_db,
            r.sur_db,
        );
    }
    std::fs::write(&scenarios_csv, text).map_err(|e| Error::io(&scenarios_csv, e))?;

    let summary_csv = cfg.out_dir.join("summary.csv");
    let mut text = String::from("mode,aux_index,aux_x,aux_y,mean_error_deg,improved\n");
    let _ = writeln!(text, "conventional,-1,,,{baseline_mean:.9},");
    for s in aux {
        let _ = writeln!(
            text,
            "auxiliary,{},{:.4},{:.4},{:.9},{}",
            s.aux_index, s.position[0], s.position[1], s.mean_error_deg, s.improved
        );
    }
    std::fs::write(&summary_csv, text).map_err(|e| Error::io(&summary_csv, e))?;

    let metadata_path = cfg.out_dir.join("metadata.txt");
    let resolved = toml::to_string_pretty(cfg)
        .map_err(|e| Error::Config(format!("config serialization: {e}")))?;
    let meta = format!(
        "reflection_coefficient = {beta}\ncalibrated_mean_drr_db = {calibrated_drr:.4}\n\
         t60_s = {}\nscenarios = {}\n\n[resolved_config]\n{resolved}",
        t60.map_or(String::from("n/a"), |t| format!("{t:.4}")),
        cfg.orientations_deg.len() * cfg.signals_per_orientation,
    );
    std::fs::write(&metadata_path, meta).map_err(|e| Error::io(&metadata_path, e))?;

    Ok((scenarios_csv, summary_csv, metadata_path))
}

/// Run a full campaign. Deterministic for a given master seed, including
/// the bytes of every CSV written.
pub fn run_campaign(cfg: &CampaignConfig) -> Result<CampaignResult> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e))?;
    let _lock = DirLock::acquire(&cfg.out_dir)?;
    let constants = AcousticConstants::new(cfg.speed_of_sound)?;

    let run = |cfg: &CampaignConfig| -> Result<CampaignResult> {
        // Calibrate once, with the unrotated array.
        let center = Position::from(cfg.cma_center);
        let mics0 = cma_positions(&center, cfg.cma_spacing, 0.0, cfg.num_mics);
        let template = RoomSpec {
            dimensions: cfg.room_dimensions,
            reflection_coefficient: 0.0,
            max_image_order: None,
        };
        let calibration = calibrate_reflection(
            &template,
            &mics0,
            &Position::from(cfg.source_position),
            cfg.target_drr_db,
            cfg.sample_rate,
            &constants,
            cfg.direct_window_ms,
        )?;
        let room = calibration.room;
        let t60 = estimate_t60(&ism_rir(
            &room,
            &Position::from(cfg.source_position),
            &mics0[0],
            cfg.sample_rate,
            &constants,
        )?);

        // Scenario grid, parallel with deterministic output order.
        let scenario_ids: Vec<(usize, usize)> = (0..cfg.orientations_deg.len())
            .flat_map(|o| (0..cfg.signals_per_orientation).map(move |s| (o, s)))
            .collect();
        let outcomes: Result<Vec<ScenarioOutcome>> = scenario_ids
            .par_iter()
            .map(|&(o, s)| run_scenario(cfg, &room, &constants, o, s))
            .collect();
        let rows: Vec<ScenarioRow> = outcomes?.into_iter().flat_map(|o| o.rows).collect();

        let mean_error = |filter: &dyn Fn(&ScenarioRow) -> bool| -> f64 {
            let selected: Vec<f64> = rows
                .iter()
                .filter(|r| filter(r))
                .map(|r| r.error_deg)
                .collect();
            selected.iter().sum::<f64>() / selected.len() as f64
        };
        let baseline_mean = mean_error(&|r| r.aux_index.is_none());
        let aux_summaries: Vec<AuxSummary> = (0..cfg.aux_positions.len())
            .map(|a| {
                let mean = mean_error(&|r| r.aux_index == Some(a));
                AuxSummary {
                    aux_index: a,
                    position: cfg.aux_positions[a],
                    mean_error_deg: mean,
                    improved: mean < baseline_mean,
                }
            })
            .collect();

        let (scenarios_csv, summary_csv, metadata_path) = write_outputs(
            cfg,
            &rows,
            baseline_mean,
            &aux_summaries,
            room.reflection_coefficient,
            calibration.achieved_drr_db,
            t60,
        )?;

        Ok(CampaignResult {
            baseline_mean_error_deg: baseline_mean,
            aux_summaries,
            rows,
            reflection_coefficient: room.reflection_coefficient,
            calibrated_drr_db: calibration.achieved_drr_db,
            t60_s: t60,
            scenarios_csv,
            summary_csv,
            metadata_path,
        })
    };

    match cfg.threads {
        None => run(cfg),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(|| run(cfg)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_campaign(dir: &Path) -> CampaignConfig {
        CampaignConfig {
            orientations_deg: vec![0.0, 90.0],
            signals_per_orientation: 1,
            signal_duration_s: 1.0,
            aux_positions: vec![[4.0, 1.5, 1.75], [2.0, 1.0, 1.75]],
            noise_plane_waves: 64,
            out_dir: dir.to_path_buf(),
            master_seed: 7,
            ..CampaignConfig::default()
        }
    }

    #[test]
    fn campaign_emits_consistent_csv() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_campaign(dir.path());
        let result = run_campaign(&cfg).unwrap();

        // 2 scenarios × (1 baseline + 2 aux) rows.
        assert_eq!(result.rows.len(), 6);
        assert_eq!(result.aux_summaries.len(), 2);

        // The reported means equal the arithmetic means of the raw rows.
        let base: Vec<f64> = result
            .rows
            .iter()
            .filter(|r| r.aux_index.is_none())
            .map(|r| r.error_deg)
            .collect();
        let mean = base.iter().sum::<f64>() / base.len() as f64;
        assert!((mean - result.baseline_mean_error_deg).abs() < 1e-9);

        let text = std::fs::read_to_string(&result.scenarios_csv).unwrap();
        assert_eq!(text.lines().count(), 7);
        assert!(result.summary_csv.exists());
        assert!(result.metadata_path.exists());
        // Lock is released at the end of the run.
        assert!(!dir.path().join(".lock").exists());
    }

    #[test]
    fn campaign_is_reproducible_byte_for_byte() {
        let dir1 = tempfile::tempdir().unwrap();
        let dir2 = tempfile::tempdir().unwrap();
        let r1 = run_campaign(&tiny_campaign(dir1.path())).unwrap();
        let r2 = run_campaign(&tiny_campaign(dir2.path())).unwrap();
        let a = std::fs::read(&r1.scenarios_csv).unwrap();
        let b = std::fs::read(&r2.scenarios_csv).unwrap();
        assert_eq!(a, b);
        let a = std::fs::read(&r1.summary_csv).unwrap();
        let b = std::fs::read(&r2.summary_csv).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn lock_blocks_concurrent_use() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join(".lock"), b"").unwrap();
        let cfg = tiny_campaign(dir.path());
        match run_campaign(&cfg) {
            Err(Error::Config(msg)) => assert!(msg.contains("locked")),
            other => panic!("expected lock error, got {other:?}"),
        }
    }
}
