//! Zadoff-Chu channel sounding and the CIR power-accounting chain.
//!
//! The sounding model is periodic: the received block is the circular
//! convolution of the probe with the channel, so correlating against the
//! probe recovers the channel taps exactly for noiseless input.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WaveformError {
    #[error("sequence length must be positive")]
    EmptySequence,
    #[error("root {root} is not coprime with length {length}")]
    RootNotCoprime { root: u64, length: usize },
    #[error("received block has {got} samples, probe has {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("CIR tap {index} is not finite")]
    NonFiniteTap { index: usize },
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Constant-amplitude probe sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct ZcSequence {
    root: u64,
    samples: Vec<Complex64>,
}

impl ZcSequence {
    /// x[n] = exp(-jπ·u·n(n + N mod 2)/N), n = 0..N-1.
    pub fn generate(length: usize, root: u64) -> Result<Self, WaveformError> {
        if length == 0 {
            return Err(WaveformError::EmptySequence);
        }
        if root == 0 || gcd(root, length as u64) != 1 {
            return Err(WaveformError::RootNotCoprime { root, length });
        }
        let n_len = length as u64;
        let parity = n_len % 2;
        // Reduce the phase index modulo 2N in integers so large n keeps full precision.
        let samples = (0..n_len)
            .map(|n| {
                let k = ((root % (2 * n_len)) as u128 * (n as u128) * ((n + parity) as u128)) % (2 * n_len) as u128;
                Complex64::from_polar(1.0, -PI * k as f64 / n_len as f64)
            })
            .collect();
        Ok(Self { root, samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn root(&self) -> u64 {
        self.root
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    /// Periodic autocorrelation r[τ] = Σ x[n]·conj(x[(n-τ) mod N]).
    pub fn periodic_autocorrelation(&self) -> Vec<Complex64> {
        circular_xcorr(&self.samples, &self.samples)
    }

    /// Circular convolution of the probe with channel taps `g` (length ≤ N).
    pub fn transmit_through(&self, channel: &[Complex64]) -> Vec<Complex64> {
        let n = self.len();
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for (k, &g) in channel.iter().enumerate() {
            if g == Complex64::new(0.0, 0.0) {
                continue;
            }
            for (i, o) in out.iter_mut().enumerate() {
                *o += g * self.samples[(i + n - k % n) % n];
            }
        }
        out
    }
}

/// Σ_n a[n]·conj(b[(n-k) mod N]) for each lag k.
fn circular_xcorr(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let n = a.len();
    (0..n)
        .map(|k| {
            a.iter()
                .enumerate()
                .map(|(i, &x)| x * b[(i + n - k) % n].conj())
                .sum()
        })
        .collect()
}

/// Channel impulse response taps with capture metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CirCapture {
    pub taps: Vec<Complex64>,
    pub frequency_hz: f64,
    pub scenario_tag: String,
}

impl CirCapture {
    pub fn new(taps: Vec<Complex64>, frequency_hz: f64, scenario_tag: impl Into<String>) -> Result<Self, WaveformError> {
        if let Some(index) = taps.iter().position(|t| !t.re.is_finite() || !t.im.is_finite()) {
            return Err(WaveformError::NonFiniteTap { index });
        }
        Ok(Self {
            taps,
            frequency_hz,
            scenario_tag: scenario_tag.into(),
        })
    }

    /// P = Σ|h(n)|².
    pub fn total_power(&self) -> f64 {
        total_power(&self.taps)
    }
}

/// Estimates the CIR by circular correlation with the probe, normalised by N.
pub fn cir_extract(
    received: &[Complex64],
    probe: &ZcSequence,
    frequency_hz: f64,
    scenario_tag: &str,
) -> Result<CirCapture, WaveformError> {
    if received.len() != probe.len() {
        return Err(WaveformError::LengthMismatch {
            expected: probe.len(),
            got: received.len(),
        });
    }
    let scale = 1.0 / probe.len() as f64;
    let taps = circular_xcorr(received, probe.samples())
        .into_iter()
        .map(|v| v * scale)
        .collect();
    CirCapture::new(taps, frequency_hz, scenario_tag)
}

pub fn total_power(taps: &[Complex64]) -> f64 {
    taps.iter().map(|t| t.norm_sqr()).sum()
}

/// Power accounting for one capture. `clamped` records that the
/// background-plus-noise estimate exceeded the total and P_tar was forced to 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerBudget {
    pub p_tot: f64,
    pub p_back: f64,
    pub p_noise: f64,
    pub p_tar: f64,
    pub clamped: bool,
}

/// P_tar = P_tot - P_back - P_noise, clamped at zero.
pub fn target_power(p_tot: f64, p_back: f64, p_noise: f64) -> PowerBudget {
    let raw = p_tot - p_back - p_noise;
    let clamped = raw < 0.0;
    PowerBudget {
        p_tot,
        p_back,
        p_noise,
        p_tar: if clamped { 0.0 } else { raw },
        clamped,
    }
}

/// Where the noise term of the power budget comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseSource {
    /// Total power of a noise-only capture.
    Capture { power_w: f64 },
    /// Fixed floor in dB relative to the capture scale.
    Floor { level_db: f64 },
}

impl NoiseSource {
    pub fn from_capture(noise: &CirCapture) -> Self {
        NoiseSource::Capture {
            power_w: noise.total_power(),
        }
    }

    pub fn power(&self) -> f64 {
        match *self {
            NoiseSource::Capture { power_w } => power_w,
            NoiseSource::Floor { level_db } => 10f64.powf(level_db / 10.0),
        }
    }
}

/// Background-subtracted target power from a target capture and a background capture.
pub fn separate_target(target: &CirCapture, background: &CirCapture, noise: NoiseSource) -> PowerBudget {
    target_power(target.total_power(), background.total_power(), noise.power())
}
