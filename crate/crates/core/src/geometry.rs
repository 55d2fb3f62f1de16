//! Planar bistatic scene: Tx at (-a, 0), Rx at (a, 0), target at (0, y).

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("half baseline must be finite and non-negative, got {0}")]
    InvalidBaseline(f64),
    #[error("target offset must be finite and positive, got {0}")]
    InvalidOffset(f64),
    #[error("target extent must be finite and positive, got {0}")]
    InvalidExtent(f64),
    #[error("frequency must be finite and positive, got {0}")]
    InvalidFrequency(f64),
}

/// Tx/Rx/target placement in the measurement plane.
///
/// `half_baseline` may be zero, which models the ideal monostatic case where
/// Tx and Rx coincide.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGeometry", into = "RawGeometry")]
pub struct BistaticGeometry {
    half_baseline: f64,
    target_offset: f64,
}

#[derive(Serialize, Deserialize)]
struct RawGeometry {
    half_baseline_m: f64,
    target_offset_m: f64,
}

impl TryFrom<RawGeometry> for BistaticGeometry {
    type Error = GeometryError;

    fn try_from(raw: RawGeometry) -> Result<Self, Self::Error> {
        BistaticGeometry::new(raw.half_baseline_m, raw.target_offset_m)
    }
}

impl From<BistaticGeometry> for RawGeometry {
    fn from(g: BistaticGeometry) -> Self {
        RawGeometry {
            half_baseline_m: g.half_baseline,
            target_offset_m: g.target_offset,
        }
    }
}

impl BistaticGeometry {
    pub fn new(half_baseline: f64, target_offset: f64) -> Result<Self, GeometryError> {
        if !half_baseline.is_finite() || half_baseline < 0.0 {
            return Err(GeometryError::InvalidBaseline(half_baseline));
        }
        if !target_offset.is_finite() || target_offset <= 0.0 {
            return Err(GeometryError::InvalidOffset(target_offset));
        }
        Ok(Self {
            half_baseline,
            target_offset,
        })
    }

    pub fn half_baseline(&self) -> f64 {
        self.half_baseline
    }

    pub fn target_offset(&self) -> f64 {
        self.target_offset
    }

    /// Tx-target distance, equal to the Rx-target distance: sqrt(a² + y²).
    pub fn distance(&self) -> f64 {
        self.half_baseline.hypot(self.target_offset)
    }

    /// Tx-target-Rx angle in degrees.
    pub fn bistatic_angle_deg(&self) -> f64 {
        bistatic_angle_deg(self.half_baseline, self.distance())
    }
}

/// Bistatic angle for half baseline `a` and leg length `d`, in degrees.
///
/// Evaluates arccos(1 - 2(a/d)²), which is the law-of-cosines angle of the
/// isosceles triangle with legs `d` and base `2a`.
pub fn bistatic_angle_deg(a: f64, d: f64) -> f64 {
    let ratio = a / d;
    let cos_theta = (1.0 - 2.0 * ratio * ratio).clamp(-1.0, 1.0);
    cos_theta.acos().to_degrees()
}

/// Largest physical dimension of a target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetExtent {
    largest_dimension: f64,
}

impl TargetExtent {
    pub fn new(largest_dimension: f64) -> Result<Self, GeometryError> {
        if !largest_dimension.is_finite() || largest_dimension <= 0.0 {
            return Err(GeometryError::InvalidExtent(largest_dimension));
        }
        Ok(Self { largest_dimension })
    }

    pub fn largest_dimension(&self) -> f64 {
        self.largest_dimension
    }

    /// Near-field boundary 2S²/λ in metres.
    pub fn near_field_distance(&self, frequency_hz: f64) -> Result<f64, GeometryError> {
        near_field_distance(self.largest_dimension, frequency_hz)
    }
}

/// Near-field boundary 2S²/λ for largest dimension `s` (m) at `frequency_hz`.
///
/// A zero extent is accepted and yields zero (point target).
pub fn near_field_distance(s: f64, frequency_hz: f64) -> Result<f64, GeometryError> {
    if !frequency_hz.is_finite() || frequency_hz <= 0.0 {
        return Err(GeometryError::InvalidFrequency(frequency_hz));
    }
    if !s.is_finite() || s < 0.0 {
        return Err(GeometryError::InvalidExtent(s));
    }
    Ok(2.0 * s * s * frequency_hz / SPEED_OF_LIGHT)
}

/// Wavelength in metres for a carrier frequency in hertz.
pub fn wavelength(frequency_hz: f64) -> f64 {
    SPEED_OF_LIGHT / frequency_hz
}
