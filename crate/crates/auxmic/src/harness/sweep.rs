//! Analytic-model sweep: one proportion map per SUR plus a report of where
//! the 0.5 contour crosses the ray leading directly away from the source.

use std::fmt::Write as _;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::geometry::AcousticConstants;
use crate::harness::config::ModelSweepConfig;
use crate::model::{
    crossing_distance, default_orientations, p_avg_sweep, write_sweep_metadata, DistortionConfig,
    PMap,
};

#[derive(Debug)]
pub struct SweepOutput {
    pub sur_db: f64,
    pub map: PMap,
    /// Distance of the first P_avg = 0.5 crossing along the away-from-source
    /// ray, if reached within the scan range.
    pub crossing_m: Option<f64>,
    pub csv_path: PathBuf,
}

#[derive(Debug)]
pub struct ModelSweepResult {
    pub outputs: Vec<SweepOutput>,
    pub crossings_csv: PathBuf,
}

pub(crate) fn distortion_config(cfg: &ModelSweepConfig, sur_db: f64) -> Result<DistortionConfig> {
    let orientations = match &cfg.orientations_deg {
        Some(list) => list.iter().map(|d| d.to_radians()).collect(),
        None => default_orientations(),
    };
    let dc = DistortionConfig {
        sur_db,
        d12: cfg.d12,
        dc: cfg.dc,
        omega0: std::f64::consts::TAU * cfg.band_upper_hz,
        num_freqs: cfg.num_freqs,
        orientations,
        constants: AcousticConstants::new(cfg.speed_of_sound)?,
        tdoa_convention: cfg.tdoa_convention,
    };
    dc.validate()?;
    Ok(dc)
}

fn sur_tag(sur_db: f64) -> String {
    format!("{:+05.1}", sur_db).replace('.', "p").replace('+', "pos").replace('-', "neg")
}

/// Run the sweep for every configured SUR, writing per-SUR CSV maps, their
/// metadata sidecars, and a crossing report.
pub fn run_model_sweep(cfg: &ModelSweepConfig) -> Result<ModelSweepResult> {
    if cfg.surs_db.is_empty() {
        return Err(Error::Config("no SUR values configured".into()));
    }
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e))?;

    let scan_max = cfg.grid.x_max.max(1.5);
    let mut outputs = Vec::new();
    let mut crossings = String::from("sur_db,level,crossing_m\n");
    for &sur_db in &cfg.surs_db {
        let dcfg = distortion_config(cfg, sur_db)?;
        let map = p_avg_sweep(&cfg.grid, &dcfg)?;

        let csv_path = cfg.out_dir.join(format!("p_avg_sur_{}.csv", sur_tag(sur_db)));
        map.write_csv(&csv_path)?;
        let meta_path = cfg.out_dir.join(format!("p_avg_sur_{}.meta.txt", sur_tag(sur_db)));
        write_sweep_metadata(&meta_path, &dcfg, &cfg.grid)?;

        let crossing = crossing_distance(&dcfg, 0.5, scan_max, 0.01)?;
        match crossing {
            Some(d) => {
                let _ = writeln!(crossings, "{sur_db},0.5,{d:.4}");
            }
            None => {
                let _ = writeln!(crossings, "{sur_db},0.5,");
            }
        }
        outputs.push(SweepOutput {
            sur_db,
            map,
            crossing_m: crossing,
            csv_path,
        });
    }

    let crossings_csv = cfg.out_dir.join("crossings.csv");
    std::fs::write(&crossings_csv, crossings).map_err(|e| Error::io(&crossings_csv, e))?;

    Ok(ModelSweepResult {
        outputs,
        crossings_csv,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SweepGrid;

    #[test]
    fn single_cell_sweep_writes_one_row() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ModelSweepConfig {
            surs_db: vec![10.0],
            num_freqs: 65,
            grid: SweepGrid {
                x_min: 0.0,
                x_max: 0.0,
                y_min: 0.0,
                y_max: 0.0,
                step: 0.1,
            },
            out_dir: dir.path().to_path_buf(),
            ..ModelSweepConfig::default()
        };
        let result = run_model_sweep(&cfg).unwrap();
        let text = std::fs::read_to_string(&result.outputs[0].csv_path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x,y,p_avg");
        assert_eq!(lines.len(), 2);
        assert!(result.crossings_csv.exists());
    }

    #[test]
    fn empty_sur_list_is_config_error() {
        let cfg = ModelSweepConfig {
            surs_db: vec![],
            ..ModelSweepConfig::default()
        };
        assert!(matches!(run_model_sweep(&cfg), Err(Error::Config(_))));
    }
}
