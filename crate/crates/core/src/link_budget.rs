//! Radar-equation forward model, free-space calibration and RCS inversion.
//!
//! All powers are linear watts. Conversions to dB happen at I/O boundaries.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative tolerance when checking that a calibration factor is reused at
/// the (λ, d) pair it was measured for.
pub const CALIBRATION_MATCH_RTOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinkError {
    #[error("{name} must be finite and positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("{name} must be finite and non-negative, got {value}")]
    Negative { name: &'static str, value: f64 },
    #[error(
        "calibration measured at wavelength {cal_lambda} m, distance {cal_d} m \
         cannot be used at wavelength {lambda} m, distance {d} m"
    )]
    CalibrationMismatch {
        cal_lambda: f64,
        cal_d: f64,
        lambda: f64,
        d: f64,
    },
}

fn positive(name: &'static str, value: f64) -> Result<f64, LinkError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(LinkError::NonPositive { name, value })
    }
}

fn non_negative(name: &'static str, value: f64) -> Result<f64, LinkError> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(LinkError::Negative { name, value })
    }
}

/// System constants of the radar equation. Gains and loss are linear.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLinkParams", into = "RawLinkParams")]
pub struct LinkParams {
    tx_power: f64,
    tx_gain: f64,
    rx_gain: f64,
    wavelength: f64,
    system_loss: f64,
}

#[derive(Serialize, Deserialize)]
struct RawLinkParams {
    tx_power_w: f64,
    tx_gain: f64,
    rx_gain: f64,
    wavelength_m: f64,
    system_loss: f64,
}

impl TryFrom<RawLinkParams> for LinkParams {
    type Error = LinkError;

    fn try_from(raw: RawLinkParams) -> Result<Self, Self::Error> {
        LinkParams::new(
            raw.tx_power_w,
            raw.tx_gain,
            raw.rx_gain,
            raw.wavelength_m,
            raw.system_loss,
        )
    }
}

impl From<LinkParams> for RawLinkParams {
    fn from(p: LinkParams) -> Self {
        RawLinkParams {
            tx_power_w: p.tx_power,
            tx_gain: p.tx_gain,
            rx_gain: p.rx_gain,
            wavelength_m: p.wavelength,
            system_loss: p.system_loss,
        }
    }
}

impl LinkParams {
    pub fn new(
        tx_power: f64,
        tx_gain: f64,
        rx_gain: f64,
        wavelength: f64,
        system_loss: f64,
    ) -> Result<Self, LinkError> {
        Ok(Self {
            tx_power: positive("transmit power", tx_power)?,
            tx_gain: positive("tx gain", tx_gain)?,
            rx_gain: positive("rx gain", rx_gain)?,
            wavelength: positive("wavelength", wavelength)?,
            system_loss: positive("system loss", system_loss)?,
        })
    }

    pub fn tx_power(&self) -> f64 {
        self.tx_power
    }

    pub fn tx_gain(&self) -> f64 {
        self.tx_gain
    }

    pub fn rx_gain(&self) -> f64 {
        self.rx_gain
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn system_loss(&self) -> f64 {
        self.system_loss
    }

    fn numerator(&self) -> f64 {
        self.tx_power * self.tx_gain * self.rx_gain * self.wavelength * self.wavelength * self.system_loss
    }

    /// Power scattered back by a target of RCS `sigma` (m²) at leg length `d`:
    /// Pt·GTx·GRx·σ·λ²·L / ((4π)³·d⁴).
    pub fn target_power(&self, d: f64, sigma: f64) -> Result<f64, LinkError> {
        let d = positive("distance", d)?;
        let sigma = non_negative("rcs", sigma)?;
        let d2 = d * d;
        Ok(self.numerator() * sigma / ((4.0 * PI).powi(3) * d2 * d2))
    }

    /// One-way Friis received power at distance `d`.
    pub fn free_space_rx_power(&self, d: f64) -> Result<f64, LinkError> {
        let d = positive("distance", d)?;
        Ok(self.numerator() / ((4.0 * PI).powi(2) * d * d))
    }
}

/// System factor K(λ, d) = P_Rx / (4π d²), tied to the pair it was measured at.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationFactor {
    k: f64,
    wavelength: f64,
    distance: f64,
}

impl CalibrationFactor {
    /// Builds K from a free-space reference measurement taken with the
    /// receiver placed at the target position.
    pub fn calibrate(p_rx_measured: f64, d: f64, wavelength: f64) -> Result<Self, LinkError> {
        let p_rx = positive("received power", p_rx_measured)?;
        let d = positive("distance", d)?;
        let wavelength = positive("wavelength", wavelength)?;
        Ok(Self {
            k: p_rx / (4.0 * PI * d * d),
            wavelength,
            distance: d,
        })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn distance(&self) -> f64 {
        self.distance
    }

    /// σ = P_tar / K.
    pub fn invert_rcs(&self, p_tar: f64) -> Result<f64, LinkError> {
        let p_tar = non_negative("target power", p_tar)?;
        Ok(p_tar / self.k)
    }

    /// Same as [`invert_rcs`](Self::invert_rcs) but first checks that the
    /// capture was taken at the calibrated (λ, d).
    pub fn invert_rcs_at(&self, p_tar: f64, wavelength: f64, d: f64) -> Result<f64, LinkError> {
        let matches = |a: f64, b: f64| (a - b).abs() <= CALIBRATION_MATCH_RTOL * a.abs().max(b.abs());
        if !matches(self.wavelength, wavelength) || !matches(self.distance, d) {
            return Err(LinkError::CalibrationMismatch {
                cal_lambda: self.wavelength,
                cal_d: self.distance,
                lambda: wavelength,
                d,
            });
        }
        self.invert_rcs(p_tar)
    }
}

pub fn watts_to_db(p: f64) -> f64 {
    10.0 * p.log10()
}

pub fn db_to_watts(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_link(lambda: f64) -> LinkParams {
        LinkParams::new(1.0, 1.0, 1.0, lambda, 1.0).unwrap()
    }

    #[test]
    fn forward_examples() {
        let link = unit_link(0.012);
        assert_eq!(link.target_power(3.0, 0.0).unwrap(), 0.0);
        let oracle = 0.012f64 * 0.012 / ((4.0 * PI).powi(3) * 81.0);
        let got = link.target_power(3.0, 1.0).unwrap();
        assert!((got - oracle).abs() <= 1e-15 * oracle);
        let near = link.target_power(2.0, 1.0).unwrap();
        let far = link.target_power(4.0, 1.0).unwrap();
        assert!((near / far - 16.0).abs() < 1e-12);
        assert!(link.target_power(0.0, 1.0).is_err());
        assert!(link.target_power(-1.0, 1.0).is_err());
    }

    #[test]
    fn friis_examples() {
        let link = unit_link(4.0 * PI);
        assert!((link.free_space_rx_power(1.0).unwrap() - 1.0).abs() < 1e-15);
        let link = unit_link(0.011);
        let ratio = link.free_space_rx_power(1.5).unwrap() / link.free_space_rx_power(3.0).unwrap();
        assert!((ratio - 4.0).abs() < 1e-12);
        assert!(link.free_space_rx_power(0.0).is_err());
    }

    #[test]
    fn single_and_double_path_ratio() {
        let link = LinkParams::new(0.3, 20.0, 15.0, 0.0115, 0.4).unwrap();
        for &d in &[1.0, 2.5, 7.0] {
            for &sigma in &[0.01, 1.0, 30.0] {
                let ratio = link.target_power(d, sigma).unwrap() / link.free_space_rx_power(d).unwrap();
                let expected = sigma / (4.0 * PI * d * d);
                assert!((ratio - expected).abs() <= 1e-13 * expected);
            }
        }
    }

    #[test]
    fn calibrate_examples() {
        let cal = CalibrationFactor::calibrate(4.0 * PI, 1.0, 0.01).unwrap();
        assert!((cal.k() - 1.0).abs() < 1e-15);
        assert_eq!(cal.invert_rcs(0.0).unwrap(), 0.0);
        assert!((cal.invert_rcs(cal.k()).unwrap() - 1.0).abs() < 1e-15);
        assert!(cal.invert_rcs(-1.0).is_err());
        assert!(CalibrationFactor::calibrate(0.0, 1.0, 0.01).is_err());
        assert!(CalibrationFactor::calibrate(1.0, -1.0, 0.01).is_err());
    }

    #[test]
    fn calibration_factor_expands_friis() {
        let link = LinkParams::new(0.5, 12.0, 9.0, 0.0107, 0.7).unwrap();
        let d = 4.2;
        let cal = CalibrationFactor::calibrate(link.free_space_rx_power(d).unwrap(), d, link.wavelength()).unwrap();
        let expected = 0.5 * 12.0 * 9.0 * 0.0107f64.powi(2) * 0.7 / ((4.0 * PI).powi(3) * d.powi(4));
        assert!((cal.k() - expected).abs() <= 1e-14 * expected);
    }

    #[test]
    fn mismatched_calibration_is_refused() {
        let cal = CalibrationFactor::calibrate(1.0, 3.0, 0.012).unwrap();
        assert!(cal.invert_rcs_at(1.0, 0.012, 3.0).is_ok());
        assert!(cal.invert_rcs_at(1.0, 0.012 * (1.0 + 1e-7), 3.0).is_ok());
        assert!(matches!(
            cal.invert_rcs_at(1.0, 0.012, 3.1),
            Err(LinkError::CalibrationMismatch { .. })
        ));
        assert!(cal.invert_rcs_at(1.0, 0.0107, 3.0).is_err());
    }

    #[test]
    fn db_conversions_invert() {
        for &p in &[1e-9, 0.5, 1.0, 42.0] {
            assert!((db_to_watts(watts_to_db(p)) - p).abs() < 1e-12 * p);
        }
    }
}
