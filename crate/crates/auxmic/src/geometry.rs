//! Microphone-array geometry, DOA vectors, and the far-field signal-model
//! primitives shared by every other module.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Attenuation factor of a point source (4π).
pub const POINT_SOURCE_ATTENUATION: f64 = 4.0 * PI;

/// Physical constants of the propagation medium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcousticConstants {
    /// Speed of sound in m/s.
    pub speed_of_sound: f64,
}

impl Default for AcousticConstants {
    fn default() -> Self {
        // 343 m/s: dry air at 20 °C.
        Self {
            speed_of_sound: 343.0,
        }
    }
}

impl AcousticConstants {
    pub fn new(speed_of_sound: f64) -> Result<Self> {
        if !(speed_of_sound.is_finite() && speed_of_sound > 0.0) {
            return Err(Error::Config(format!(
                "speed of sound must be finite and positive, got {speed_of_sound}"
            )));
        }
        Ok(Self { speed_of_sound })
    }

    /// Point-source attenuation ξ; fixed at 4π.
    pub fn point_source_attenuation(&self) -> f64 {
        POINT_SOURCE_ATTENUATION
    }
}

/// A point in 3-D space, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn distance_to(&self, other: &Position) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    /// Component-wise difference `self - other`.
    pub fn sub(&self, other: &Position) -> [f64; 3] {
        [self.x - other.x, self.y - other.y, self.z - other.z]
    }
}

impl From<[f64; 3]> for Position {
    fn from(p: [f64; 3]) -> Self {
        Self::new(p[0], p[1], p[2])
    }
}

/// A compact microphone array plus an optional auxiliary microphone.
///
/// The auxiliary microphone is never steered directly; it enters DOA
/// estimation only through cross-spectra with the array microphones.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    mics: Vec<Position>,
    aux: Option<Position>,
}

impl ArrayGeometry {
    pub fn new(mics: Vec<Position>, aux: Option<Position>) -> Result<Self> {
        if mics.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "array needs at least 2 microphones, got {}",
                mics.len()
            )));
        }
        for (i, m) in mics.iter().enumerate() {
            if !m.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "microphone {i} position is not finite"
                )));
            }
        }
        for i in 0..mics.len() {
            for j in (i + 1)..mics.len() {
                if mics[i].distance_to(&mics[j]) <= 0.0 {
                    return Err(Error::DegenerateGeometry(format!(
                        "microphones {i} and {j} coincide"
                    )));
                }
            }
        }
        if let Some(a) = &aux {
            if !a.is_finite() {
                return Err(Error::InvalidInput(
                    "auxiliary position is not finite".into(),
                ));
            }
            for (i, m) in mics.iter().enumerate() {
                if a.distance_to(m) <= 0.0 {
                    return Err(Error::DegenerateGeometry(format!(
                        "auxiliary microphone coincides with microphone {i}"
                    )));
                }
            }
        }
        Ok(Self { mics, aux })
    }

    pub fn num_mics(&self) -> usize {
        self.mics.len()
    }

    pub fn mics(&self) -> &[Position] {
        &self.mics
    }

    pub fn mic(&self, i: usize) -> Result<Position> {
        self.mics.get(i).copied().ok_or(Error::IndexOutOfRange {
            what: "microphones",
            index: i,
            len: self.mics.len(),
        })
    }

    pub fn aux(&self) -> Option<Position> {
        self.aux
    }

    /// Arithmetic mean of the array microphone positions (aux excluded).
    pub fn centroid(&self) -> Position {
        let n = self.mics.len() as f64;
        let (mut x, mut y, mut z) = (0.0, 0.0, 0.0);
        for m in &self.mics {
            x += m.x;
            y += m.y;
            z += m.z;
        }
        Position::new(x / n, y / n, z / n)
    }

    pub fn pair_distance(&self, i: usize, j: usize) -> Result<f64> {
        Ok(self.mic(i)?.distance_to(&self.mic(j)?))
    }

    /// All array-microphone pairs (i, j) with i > j, in deterministic order.
    pub fn cma_pairs(&self) -> Vec<(usize, usize)> {
        let mut pairs = Vec::new();
        for i in 1..self.mics.len() {
            for j in 0..i {
                pairs.push((i, j));
            }
        }
        pairs
    }
}

/// Azimuthal direction of arrival in the x-y plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoaVector {
    azimuth: f64,
}

impl DoaVector {
    /// Build from an azimuth in radians; normalized to [0, 2π).
    pub fn from_azimuth(theta: f64) -> Self {
        let mut a = theta % TAU;
        if a < 0.0 {
            a += TAU;
        }
        Self { azimuth: a }
    }

    pub fn from_degrees(deg: f64) -> Self {
        Self::from_azimuth(deg.to_radians())
    }

    pub fn azimuth(&self) -> f64 {
        self.azimuth
    }

    pub fn azimuth_degrees(&self) -> f64 {
        self.azimuth.to_degrees()
    }

    /// Unit vector [cos θ, sin θ, 0].
    pub fn unit_vector(&self) -> [f64; 3] {
        [self.azimuth.cos(), self.azimuth.sin(), 0.0]
    }
}

/// TDOA between two positions for a plane wave from direction `v`:
/// τ = -vᵀ(a - b) / ν.
pub fn tdoa_between(a: &Position, b: &Position, v: &DoaVector, c: &AcousticConstants) -> f64 {
    let u = v.unit_vector();
    let d = a.sub(b);
    -(u[0] * d[0] + u[1] * d[1] + u[2] * d[2]) / c.speed_of_sound
}

/// TDOA between microphones `i` and `j` of the array for direction `v`.
pub fn tdoa(
    geometry: &ArrayGeometry,
    i: usize,
    j: usize,
    v: &DoaVector,
    c: &AcousticConstants,
) -> Result<f64> {
    let mi = geometry.mic(i)?;
    let mj = geometry.mic(j)?;
    Ok(tdoa_between(&mi, &mj, v, c))
}

/// Free-field transfer function from a point source to a microphone:
/// gain 1/(ξ d) with phase -ω d / ν.
pub fn direct_path_transfer(
    source: &Position,
    mic: &Position,
    omega: f64,
    c: &AcousticConstants,
) -> Result<Complex64> {
    let d = source.distance_to(mic);
    if d <= 0.0 {
        return Err(Error::DegenerateGeometry(
            "source coincides with microphone".into(),
        ));
    }
    let magnitude = 1.0 / (POINT_SOURCE_ATTENUATION * d);
    let phase = -omega * d / c.speed_of_sound;
    Ok(Complex64::from_polar(magnitude, phase))
}

/// Angle between two arbitrary 3-D vectors, in degrees.
pub fn vector_angle_degrees(a: [f64; 3], b: [f64; 3]) -> Result<f64> {
    let na = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
    let nb = (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::InvalidInput(
            "angle undefined for a zero vector".into(),
        ));
    }
    let cos = ((a[0] * b[0] + a[1] * b[1] + a[2] * b[2]) / (na * nb)).clamp(-1.0, 1.0);
    Ok(cos.acos().to_degrees())
}

/// DOA estimation error ε = cos⁻¹(v̂ᵀv / (‖v̂‖·‖v‖)), in degrees ∈ [0, 180].
pub fn doa_error_degrees(v_hat: &DoaVector, v_true: &DoaVector) -> f64 {
    // Unit vectors by construction; the normalized form cannot fail.
    vector_angle_degrees(v_hat.unit_vector(), v_true.unit_vector())
        .expect("DOA vectors are unit vectors")
}
