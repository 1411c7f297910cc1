//! Analytic distortion model under a spherically isotropic undesired field.
//!
//! Compares the phase distortion of the conventional pair spectrum against
//! the auxiliary-microphone route, and maps the proportion of frequencies
//! for which the auxiliary route wins over a 2-D grid of auxiliary
//! positions.
//!
//! Scene convention: the array centroid sits at the origin, the source on
//! the negative x axis at distance `dc`, so the positive x axis points
//! directly away from the source. Pair orientations rotate the two array
//! microphones about the centroid in the x-y plane.

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{AcousticConstants, Position, POINT_SOURCE_ATTENUATION};

/// How the TDOAs entering the auxiliary distortion are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TdoaConvention {
    /// Plane-wave projection onto the source direction.
    #[default]
    FarField,
    /// Exact path-length differences from the true positions.
    ExactPath,
}

/// Parameters of the distortion comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionConfig {
    /// Frequency-constant source-to-undesired ratio, dB.
    pub sur_db: f64,
    /// Spacing of the array pair, meters.
    pub d12: f64,
    /// Source distance from the array centroid, meters.
    pub dc: f64,
    /// Upper band edge ω₀, rad/s.
    pub omega0: f64,
    /// Number of uniform frequency samples on [0, ω₀], endpoints included.
    pub num_freqs: usize,
    /// Pair orientations to average over, radians.
    pub orientations: Vec<f64>,
    pub constants: AcousticConstants,
    pub tdoa_convention: TdoaConvention,
}

impl Default for DistortionConfig {
    fn default() -> Self {
        Self {
            sur_db: 10.0,
            d12: 0.05,
            dc: 2.0,
            omega0: TAU * 8_000.0,
            num_freqs: 1025,
            orientations: default_orientations(),
            constants: AcousticConstants::default(),
            tdoa_convention: TdoaConvention::FarField,
        }
    }
}

/// 18 orientations from 0° to 170° in 10° steps.
pub fn default_orientations() -> Vec<f64> {
    (0..18).map(|n| (10.0 * n as f64).to_radians()).collect()
}

impl DistortionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sur_db.is_finite()) {
            return Err(Error::Config("SUR must be finite".into()));
        }
        if !(self.d12 > 0.0 && self.dc > 0.0) {
            return Err(Error::Config(format!(
                "pair spacing and source distance must be positive, got d12={} dc={}",
                self.d12, self.dc
            )));
        }
        if self.num_freqs < 2 {
            return Err(Error::Config(format!(
                "need at least 2 frequency samples, got {}",
                self.num_freqs
            )));
        }
        if !(self.omega0 > 0.0) {
            return Err(Error::Config("band edge must be positive".into()));
        }
        if self.orientations.is_empty() {
            return Err(Error::Config("orientation set is empty".into()));
        }
        Ok(())
    }

    pub fn sur_linear(&self) -> f64 {
        10.0f64.powf(self.sur_db / 10.0)
    }

    /// The n-th frequency sample on [0, ω₀].
    pub fn omega(&self, n: usize) -> f64 {
        self.omega0 * n as f64 / (self.num_freqs - 1) as f64
    }

    fn source_position(&self) -> Position {
        Position::new(-self.dc, 0.0, 0.0)
    }

    /// Array pair positions for a given orientation about the centroid.
    pub fn pair_positions(&self, orientation: f64) -> (Position, Position) {
        let (s, c) = orientation.sin_cos();
        let h = 0.5 * self.d12;
        (
            Position::new(h * c, h * s, 0.0),
            Position::new(-h * c, -h * s, 0.0),
        )
    }
}

/// Spatial coherence of a spherically isotropic field between two points a
/// distance `d` apart: sinc(ωd/ν) with sinc(x) = sin(x)/x, sinc(0) = 1.
pub fn isotropic_coherence(omega: f64, d: f64, c: &AcousticConstants) -> f64 {
    let x = omega * d / c.speed_of_sound;
    if x == 0.0 {
        1.0
    } else {
        x.sin() / x
    }
}

/// Distortion of the conventional pair spectrum,
/// D_ij(ω) = (ξ d_c)²/SUR · sinc(ω d_ij/ν). Real by construction.
pub fn distortion_conventional(omega: f64, cfg: &DistortionConfig) -> f64 {
    let xi_dc = POINT_SOURCE_ATTENUATION * cfg.dc;
    xi_dc * xi_dc / cfg.sur_linear() * isotropic_coherence(omega, cfg.d12, &cfg.constants)
}

/// Distances and TDOAs linking one array pair to the auxiliary microphone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuxLinkGeometry {
    /// Source-to-auxiliary distance d_A.
    pub d_a: f64,
    /// Auxiliary-to-mic-i distance d_Ai.
    pub d_ai: f64,
    /// Auxiliary-to-mic-j distance d_Aj.
    pub d_aj: f64,
    /// TDOA τ_iA between mic i and the auxiliary microphone, seconds.
    pub tau_ia: f64,
    /// TDOA τ_Aj between the auxiliary microphone and mic j, seconds.
    pub tau_aj: f64,
}

/// Distortion of the auxiliary-microphone pair spectrum:
///
/// D_ij^A(ω) = q·[sinc(ωd_Ai/ν)·e^(-jωτ_Aj) + sinc(ωd_Aj/ν)·e^(-jωτ_iA)]
///           + q²·sinc(ωd_Ai/ν)·sinc(ωd_Aj/ν),   q = ξ²·d_c·d_A/SUR.
pub fn distortion_auxiliary(
    omega: f64,
    aux: &AuxLinkGeometry,
    cfg: &DistortionConfig,
) -> Complex64 {
    let q = POINT_SOURCE_ATTENUATION * POINT_SOURCE_ATTENUATION * cfg.dc * aux.d_a
        / cfg.sur_linear();
    let sinc_ai = isotropic_coherence(omega, aux.d_ai, &cfg.constants);
    let sinc_aj = isotropic_coherence(omega, aux.d_aj, &cfg.constants);
    let e_aj = Complex64::from_polar(1.0, -omega * aux.tau_aj);
    let e_ia = Complex64::from_polar(1.0, -omega * aux.tau_ia);
    q * (sinc_ai * e_aj + sinc_aj * e_ia) + Complex64::new(q * q * sinc_ai * sinc_aj, 0.0)
}

/// Link geometry for an auxiliary position (relative to the centroid) and a
/// pair orientation, under the configured TDOA convention.
pub fn aux_link_geometry(
    aux: &Position,
    orientation: f64,
    cfg: &DistortionConfig,
) -> AuxLinkGeometry {
    let source = cfg.source_position();
    let (mi, mj) = cfg.pair_positions(orientation);
    let nu = cfg.constants.speed_of_sound;
    let d_a = source.distance_to(aux);
    let (tau_ia, tau_aj) = match cfg.tdoa_convention {
        TdoaConvention::FarField => {
            // Source direction seen from the centroid is the -x axis.
            let v = [-1.0, 0.0, 0.0];
            let di = mi.sub(aux);
            let dj = aux.sub(&mj);
            (
                -(v[0] * di[0] + v[1] * di[1] + v[2] * di[2]) / nu,
                -(v[0] * dj[0] + v[1] * dj[1] + v[2] * dj[2]) / nu,
            )
        }
        TdoaConvention::ExactPath => {
            let d_i = source.distance_to(&mi);
            let d_j = source.distance_to(&mj);
            ((d_i - d_a) / nu, (d_a - d_j) / nu)
        }
    };
    AuxLinkGeometry {
        d_a,
        d_ai: aux.distance_to(&mi),
        d_aj: aux.distance_to(&mj),
        tau_ia,
        tau_aj,
    }
}

/// Proportion of the sampled band for which the auxiliary distortion is
/// strictly smaller than the conventional one:
/// P = (1/N)·Σ H(|D_ij(ω_n)| - |D_ij^A(ω_n)|), H(0) = 0.
pub fn proportion_p(aux: &Position, orientation: f64, cfg: &DistortionConfig) -> Result<f64> {
    cfg.validate()?;
    let (mi, mj) = cfg.pair_positions(orientation);
    if aux.distance_to(&mi) == 0.0 || aux.distance_to(&mj) == 0.0 {
        return Err(Error::DegenerateGeometry(
            "auxiliary position coincides with an array microphone".into(),
        ));
    }
    let link = aux_link_geometry(aux, orientation, cfg);
    let mut wins = 0usize;
    for n in 0..cfg.num_freqs {
        let omega = cfg.omega(n);
        let d = distortion_conventional(omega, cfg).abs();
        let d_aux = distortion_auxiliary(omega, &link, cfg).norm();
        if d > d_aux {
            wins += 1;
        }
    }
    Ok(wins as f64 / cfg.num_freqs as f64)
}

/// Mean of `proportion_p` over the configured orientation set.
pub fn p_avg_at(aux: &Position, cfg: &DistortionConfig) -> Result<f64> {
    let mut acc = 0.0;
    for &orientation in &cfg.orientations {
        acc += proportion_p(aux, orientation, cfg)?;
    }
    Ok(acc / cfg.orientations.len() as f64)
}

/// Rectangular auxiliary-position grid, centroid-relative coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub step: f64,
}

impl Default for SweepGrid {
    /// 4 m × 4 m around the centroid at 10 cm resolution.
    fn default() -> Self {
        Self {
            x_min: -2.0,
            x_max: 2.0,
            y_min: -2.0,
            y_max: 2.0,
            step: 0.1,
        }
    }
}

fn axis(min: f64, max: f64, step: f64) -> Vec<f64> {
    let n = ((max - min) / step + 0.5).floor() as usize + 1;
    (0..n).map(|i| min + i as f64 * step).collect()
}

impl SweepGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) || self.x_max < self.x_min || self.y_max < self.y_min {
            return Err(Error::Config(format!("invalid sweep grid {self:?}")));
        }
        Ok(())
    }

    pub fn xs(&self) -> Vec<f64> {
        axis(self.x_min, self.x_max, self.step)
    }

    pub fn ys(&self) -> Vec<f64> {
        axis(self.y_min, self.y_max, self.step)
    }
}

/// Orientation-averaged proportion map over an auxiliary-position grid.
#[derive(Debug, Clone)]
pub struct PMap {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// Row-major over (y, x): values[iy * xs.len() + ix].
    pub values: Vec<f64>,
    /// Iso-levels reported alongside the map.
    pub contour_levels: Vec<f64>,
}

impl PMap {
    pub fn value(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.xs.len() + ix]
    }

    /// Write the map as CSV with header `x,y,p_avg`, one row per cell.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("x,y,p_avg\n");
        for (iy, &y) in self.ys.iter().enumerate() {
            for (ix, &x) in self.xs.iter().enumerate() {
                let _ = writeln!(out, "{x:.6},{y:.6},{:.9}", self.value(ix, iy));
            }
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

/// Write a sidecar describing the configuration a map was produced with.
pub fn write_sweep_metadata(path: &Path, cfg: &DistortionConfig, grid: &SweepGrid) -> Result<()> {
    let orientations: Vec<String> = cfg
        .orientations
        .iter()
        .map(|o| format!("{:.1}", o.to_degrees()))
        .collect();
    let text = format!(
        "sur_db = {}\nd12_m = {}\ndc_m = {}\nomega0_rad_per_s = {:.6}\n\
         band_upper_hz = {:.3}\nnum_freqs = {}\norientations_deg = {}\n\
         tdoa_convention = {:?}\nspeed_of_sound_m_per_s = {}\n\
         grid_x = [{}, {}]\ngrid_y = [{}, {}]\ngrid_step_m = {}\n",
        cfg.sur_db,
        cfg.d12,
        cfg.dc,
        cfg.omega0,
        cfg.omega0 / TAU,
        cfg.num_freqs,
        orientations.join(","),
        cfg.tdoa_convention,
        cfg.constants.speed_of_sound,
        grid.x_min,
        grid.x_max,
        grid.y_min,
        grid.y_max,
        grid.step,
    );
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Evaluate the orientation-averaged proportion over a position grid.
/// Cells are independent; evaluation is parallel with a deterministic
/// layout.
pub fn p_avg_sweep(grid: &SweepGrid, cfg: &DistortionConfig) -> Result<PMap> {
    grid.validate()?;
    cfg.validate()?;
    let xs = grid.xs();
    let ys = grid.ys();
    let cells: Vec<(usize, usize)> = ys
        .iter()
        .enumerate()
        .flat_map(|(iy, _)| xs.iter().enumerate().map(move |(ix, _)| (ix, iy)))
        .collect();
    let values: Result<Vec<f64>> = cells
        .par_iter()
        .map(|&(ix, iy)| p_avg_at(&Position::new(xs[ix], ys[iy], 0.0), cfg))
        .collect();
    Ok(PMap {
        xs,
        ys,
        values: values?,
        contour_levels: vec![0.5, 0.9],
    })
}

/// Distance from the centroid, along the ray pointing directly away from
/// the source, at which the orientation-averaged proportion first reaches
/// `level`. Linearly interpolated between samples; `None` if the level is
/// not reached within `max_dist`.
pub fn crossing_distance(
    cfg: &DistortionConfig,
    level: f64,
    max_dist: f64,
    step: f64,
) -> Result<Option<f64>> {
    if !(step > 0.0 && max_dist > step) {
        return Err(Error::Config("invalid crossing scan range".into()));
    }
    let mut prev: Option<(f64, f64)> = None;
    let n = (max_dist / step).ceil() as usize;
    for i in 1..=n {
        let d = i as f64 * step;
        let p = p_avg_at(&Position::new(d, 0.0, 0.0), cfg)?;
        if p >= level {
            let d_cross = match prev {
                Some((d0, p0)) if p > p0 => d0 + (level - p0) / (p - p0) * (d - d0),
                _ => d,
            };
            return Ok(Some(d_cross));
        }
        prev = Some((d, p));
    }
    Ok(None)
}
