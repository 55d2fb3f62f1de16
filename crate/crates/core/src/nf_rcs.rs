//! Near-field bistatic RCS models, the double-slope path-loss model, and its
//! least-squares fit.
//!
//! In every model order the intercept and the leading coefficient appear only
//! through α' = α - 10·log10(a1), so a1 is not identifiable. The fit solves for
//! α', n and m by box-constrained linear least squares and searches the
//! remaining coefficient ratios a2/a1 and a3/a1 with bounded multi-start
//! Nelder-Mead. The reported a1 is pinned at 1 and `degenerate` is set.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{bistatic_angle_deg, wavelength};
use crate::optim::{Bounds, NelderMead};

pub const ALPHA_BOUNDS: (f64, f64) = (0.0, 120.0);
pub const N_BOUNDS: (f64, f64) = (0.5, 4.0);
pub const M_BOUNDS: (f64, f64) = (-20.0, 5.0);
pub const A1_BOUNDS: (f64, f64) = (1e-3, 1e3);
pub const HIGHER_COEFF_BOUNDS: (f64, f64) = (-10.0, 10.0);
pub const MIN_OBSERVATIONS: usize = 8;
pub const MIN_DISTANCE_RATIO: f64 = 2.0;
pub const MULTI_STARTS: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NfRcsError {
    #[error("model RCS is not positive ({value}) at d = {distance} m")]
    NonPositiveRcs { value: f64, distance: f64 },
    #[error("bistatic angle {0}° has cos ≤ 0")]
    InvalidAngle(f64),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("degenerate geometry: all observations share one distance")]
    DegenerateGeometry,
    #[error("observations mix frequencies {0} Hz and {1} Hz")]
    MixedFrequencies(f64, f64),
    #[error("invalid observation at index {index}: {reason}")]
    InvalidObservation { index: usize, reason: String },
    #[error("no start reached a finite loss")]
    NonConvergence,
    #[error("length mismatch: {0} measured vs {1} modeled")]
    LengthMismatch(usize, usize),
    #[error("measured value at index {0} is zero")]
    ZeroMeasured(usize),
    #[error("unknown model order `{0}`")]
    UnknownOrder(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelOrder {
    Sigma1,
    Sigma2,
    Sigma3,
}

impl ModelOrder {
    pub const ALL: [ModelOrder; 3] = [ModelOrder::Sigma1, ModelOrder::Sigma2, ModelOrder::Sigma3];

    pub fn name(&self) -> &'static str {
        match self {
            ModelOrder::Sigma1 => "sigma1",
            ModelOrder::Sigma2 => "sigma2",
            ModelOrder::Sigma3 => "sigma3",
        }
    }

    /// Number of free coefficient ratios beyond a1.
    fn ratio_count(&self) -> usize {
        *self as usize
    }
}

impl fmt::Display for ModelOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelOrder {
    type Err = NfRcsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sigma1" => Ok(ModelOrder::Sigma1),
            "sigma2" => Ok(ModelOrder::Sigma2),
            "sigma3" => Ok(ModelOrder::Sigma3),
            other => Err(NfRcsError::UnknownOrder(other.to_string())),
        }
    }
}

/// σ(d, λ, θ) = cos^m θ · (a1·d² + a2·λ·d³ + a3·λ²·d⁴), truncated by order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NfRcsModel {
    pub order: ModelOrder,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub m: f64,
}

impl NfRcsModel {
    pub fn sigma1(a1: f64, m: f64) -> Self {
        Self {
            order: ModelOrder::Sigma1,
            a1,
            a2: 0.0,
            a3: 0.0,
            m,
        }
    }

    pub fn sigma2(a1: f64, a2: f64, m: f64) -> Self {
        Self {
            order: ModelOrder::Sigma2,
            a1,
            a2,
            a3: 0.0,
            m,
        }
    }

    pub fn sigma3(a1: f64, a2: f64, a3: f64, m: f64) -> Self {
        Self {
            order: ModelOrder::Sigma3,
            a1,
            a2,
            a3,
            m,
        }
    }

    fn polynomial(&self, d: f64, lambda: f64) -> f64 {
        let mut p = self.a1 * d * d;
        if self.order >= ModelOrder::Sigma2 {
            p += self.a2 * lambda * d.powi(3);
        }
        if self.order >= ModelOrder::Sigma3 {
            p += self.a3 * lambda * lambda * d.powi(4);
        }
        p
    }
}

pub fn sigma_model_eval(model: &NfRcsModel, d: f64, lambda: f64, theta_b_deg: f64) -> Result<f64, NfRcsError> {
    let c = theta_b_deg.to_radians().cos();
    if c <= 0.0 {
        return Err(NfRcsError::InvalidAngle(theta_b_deg));
    }
    let p = model.polynomial(d, lambda);
    if p <= 0.0 || !p.is_finite() {
        return Err(NfRcsError::NonPositiveRcs { value: p, distance: d });
    }
    Ok(p * c.powf(model.m))
}

/// α + 20·n·log10 d - 10·log10 σ, in dB.
pub fn predict_pl(alpha: f64, n: f64, model: &NfRcsModel, d: f64, lambda: f64, theta_b_deg: f64) -> Result<f64, NfRcsError> {
    let sigma = sigma_model_eval(model, d, lambda, theta_b_deg)?;
    Ok(alpha + 20.0 * n * d.log10() - 10.0 * sigma.log10())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlObservation {
    pub y_m: f64,
    pub frequency_hz: f64,
    pub pl_db: f64,
}

/// Mean absolute relative error between measured and modeled values, in %.
pub fn mfe_percent(measured: &[f64], modeled: &[f64]) -> Result<f64, NfRcsError> {
    if measured.len() != modeled.len() || measured.is_empty() {
        return Err(NfRcsError::LengthMismatch(measured.len(), modeled.len()));
    }
    let mut acc = 0.0;
    for (i, (&a, &b)) in measured.iter().zip(modeled).enumerate() {
        if a == 0.0 {
            return Err(NfRcsError::ZeroMeasured(i));
        }
        acc += ((a - b) / a).abs();
    }
    Ok(acc / measured.len() as f64 * 100.0)
}

/// Population standard deviation of the residuals.
pub fn shadowing_std(residuals: &[f64]) -> Result<f64, NfRcsError> {
    if residuals.len() < 2 {
        return Err(NfRcsError::InsufficientData(format!(
            "shadowing needs at least 2 residuals, got {}",
            residuals.len()
        )));
    }
    let n = residuals.len() as f64;
    let mean = residuals.iter().sum::<f64>() / n;
    Ok((residuals.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "FitRecord", try_from = "FitRecord")]
pub struct PathLossFit {
    pub alpha: f64,
    pub n: f64,
    pub model: NfRcsModel,
    pub x_sigma: f64,
    pub mfe_percent: f64,
    /// Set when a1 was pinned because only α - 10·log10(a1) is identifiable.
    pub degenerate: bool,
}

impl PathLossFit {
    /// The identifiable intercept α - 10·log10(a1).
    pub fn alpha_prime(&self) -> f64 {
        self.alpha - 10.0 * self.model.a1.log10()
    }

    pub fn predict(&self, d: f64, lambda: f64, theta_b_deg: f64) -> Result<f64, NfRcsError> {
        predict_pl(self.alpha, self.n, &self.model, d, lambda, theta_b_deg)
    }

    /// Predicted PL at target offset `y` for half-baseline `geom_a`.
    pub fn predict_at_offset(&self, geom_a: f64, y: f64, frequency_hz: f64) -> Result<f64, NfRcsError> {
        let d = geom_a.hypot(y);
        self.predict(d, wavelength(frequency_hz), bistatic_angle_deg(geom_a, d))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct FitRecord {
    model: ModelOrder,
    alpha: f64,
    n: f64,
    m: f64,
    a1: f64,
    a2: Option<f64>,
    a3: Option<f64>,
    x_sigma: f64,
    mfe_percent: f64,
    #[serde(default)]
    degenerate: bool,
}

impl From<PathLossFit> for FitRecord {
    fn from(f: PathLossFit) -> Self {
        let order = f.model.order;
        Self {
            model: order,
            alpha: f.alpha,
            n: f.n,
            m: f.model.m,
            a1: f.model.a1,
            a2: (order >= ModelOrder::Sigma2).then_some(f.model.a2),
            a3: (order >= ModelOrder::Sigma3).then_some(f.model.a3),
            x_sigma: f.x_sigma,
            mfe_percent: f.mfe_percent,
            degenerate: f.degenerate,
        }
    }
}

impl TryFrom<FitRecord> for PathLossFit {
    type Error = String;

    fn try_from(r: FitRecord) -> Result<Self, Self::Error> {
        let need = |v: Option<f64>, name: &str| v.ok_or_else(|| format!("{} record needs {name}", r.model));
        let model = match r.model {
            ModelOrder::Sigma1 => NfRcsModel::sigma1(r.a1, r.m),
            ModelOrder::Sigma2 => NfRcsModel::sigma2(r.a1, need(r.a2, "a2")?, r.m),
            ModelOrder::Sigma3 => NfRcsModel::sigma3(r.a1, need(r.a2, "a2")?, need(r.a3, "a3")?, r.m),
        };
        Ok(Self {
            alpha: r.alpha,
            n: r.n,
            model,
            x_sigma: r.x_sigma,
            mfe_percent: r.mfe_percent,
            degenerate: r.degenerate,
        })
    }
}

/// Data prepared for the profiled least-squares problem.
struct Design {
    pl: Vec<f64>,
    log_d: Vec<f64>,
    log_cos: Vec<f64>,
    /// λ·d per observation.
    lambda_d: Vec<f64>,
    /// Columns [1, 20·log10 d, -10·log10 cos θ].
    matrix: DMatrix<f64>,
    pinv: DMatrix<f64>,
}

/// Box on (α', n, m). α' may range over every value reachable with a1 in its
/// bounds.
fn linear_bounds() -> [(f64, f64); 3] {
    [
        (
            ALPHA_BOUNDS.0 - 10.0 * A1_BOUNDS.1.log10(),
            ALPHA_BOUNDS.1 - 10.0 * A1_BOUNDS.0.log10(),
        ),
        N_BOUNDS,
        M_BOUNDS,
    ]
}

impl Design {
    fn new(obs: &[PlObservation], geom_a: f64) -> Result<(Self, f64), NfRcsError> {
        if !(geom_a.is_finite() && geom_a >= 0.0) {
            return Err(NfRcsError::InsufficientData(format!("half-baseline must be ≥ 0, got {geom_a}")));
        }
        for (index, o) in obs.iter().enumerate() {
            let bad = |reason: &str| NfRcsError::InvalidObservation {
                index,
                reason: reason.to_string(),
            };
            if !(o.y_m.is_finite() && o.y_m > 0.0) {
                return Err(bad("target offset must be positive"));
            }
            if !(o.frequency_hz.is_finite() && o.frequency_hz > 0.0) {
                return Err(bad("frequency must be positive"));
            }
            if !o.pl_db.is_finite() {
                return Err(bad("path loss must be finite"));
            }
        }
        let Some(first) = obs.first() else {
            return Err(NfRcsError::InsufficientData("no observations".into()));
        };
        if let Some(o) = obs.iter().find(|o| o.frequency_hz != first.frequency_hz) {
            return Err(NfRcsError::MixedFrequencies(first.frequency_hz, o.frequency_hz));
        }
        let ds: Vec<f64> = obs.iter().map(|o| geom_a.hypot(o.y_m)).collect();
        let d_min = ds.iter().copied().fold(f64::INFINITY, f64::min);
        let d_max = ds.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if d_max == d_min {
            return Err(NfRcsError::DegenerateGeometry);
        }
        if obs.len() < MIN_OBSERVATIONS {
            return Err(NfRcsError::InsufficientData(format!(
                "need at least {MIN_OBSERVATIONS} observations, got {}",
                obs.len()
            )));
        }
        if d_max / d_min < MIN_DISTANCE_RATIO {
            return Err(NfRcsError::InsufficientData(format!(
                "distances span {:.3}:1, need {MIN_DISTANCE_RATIO}:1",
                d_max / d_min
            )));
        }

        let lambda = wavelength(first.frequency_hz);
        let mut log_cos = Vec::with_capacity(obs.len());
        for &d in &ds {
            let theta = bistatic_angle_deg(geom_a, d);
            let c = theta.to_radians().cos();
            if c <= 0.0 {
                return Err(NfRcsError::InvalidAngle(theta));
            }
            log_cos.push(c.log10());
        }
        let log_d: Vec<f64> = ds.iter().map(|d| d.log10()).collect();
        let rows = obs.len();
        let matrix = DMatrix::from_fn(rows, 3, |i, j| match j {
            0 => 1.0,
            1 => 20.0 * log_d[i],
            _ => -10.0 * log_cos[i],
        });
        let pinv = matrix
            .clone()
            .pseudo_inverse(1e-12)
            .map_err(|_| NfRcsError::DegenerateGeometry)?;
        Ok((
            Self {
                pl: obs.iter().map(|o| o.pl_db).collect(),
                log_d,
                log_cos,
                lambda_d: ds.iter().map(|d| lambda * d).collect(),
                matrix,
                pinv,
            },
            lambda,
        ))
    }

    /// Response after moving the ratio terms to the left-hand side:
    /// PL + 20·log10 d + 10·log10(1 + r2·λd + r3·(λd)²). `None` if the
    /// polynomial is not positive somewhere.
    fn response(&self, ratios: &[f64]) -> Option<DVector<f64>> {
        let r2 = ratios.first().copied().unwrap_or(0.0);
        let r3 = ratios.get(1).copied().unwrap_or(0.0);
        let mut t = DVector::zeros(self.pl.len());
        for i in 0..self.pl.len() {
            let x = self.lambda_d[i];
            let p = 1.0 + x * (r2 + r3 * x);
            if p <= 0.0 {
                return None;
            }
            t[i] = self.pl[i] + 20.0 * self.log_d[i] + 10.0 * p.log10();
        }
        Some(t)
    }

    /// Least squares for (α', n, m) inside their box. Returns (SSE, β).
    fn solve(&self, ratios: &[f64]) -> Option<(f64, [f64; 3])> {
        let t = self.response(ratios)?;
        let beta = &self.pinv * &t;
        let bounds = linear_bounds();
        let inside = (0..3).all(|j| beta[j] >= bounds[j].0 && beta[j] <= bounds[j].1);
        if inside {
            let sse = (&t - &self.matrix * &beta).norm_squared();
            return Some((sse, [beta[0], beta[1], beta[2]]));
        }
        // The problem is convex, so the constrained optimum is the best
        // feasible solution over all choices of free / lower / upper per
        // variable.
        let mut best: Option<(f64, [f64; 3])> = None;
        for code in 0..27usize {
            let states = [code % 3, (code / 3) % 3, code / 9];
            let mut fixed = [0.0; 3];
            let mut free = Vec::new();
            for j in 0..3 {
                match states[j] {
                    0 => free.push(j),
                    1 => fixed[j] = bounds[j].0,
                    _ => fixed[j] = bounds[j].1,
                }
            }
            let mut rhs = t.clone();
            for j in 0..3 {
                if states[j] != 0 {
                    rhs -= self.matrix.column(j) * fixed[j];
                }
            }
            let mut beta = fixed;
            if !free.is_empty() {
                let sub = self.matrix.select_columns(&free);
                let Ok(p) = sub.pseudo_inverse(1e-12) else { continue };
                let sol = p * &rhs;
                for (k, &j) in free.iter().enumerate() {
                    beta[j] = sol[k];
                }
            }
            if !(0..3).all(|j| beta[j] >= bounds[j].0 - 1e-12 && beta[j] <= bounds[j].1 + 1e-12) {
                continue;
            }
            let b = DVector::from_row_slice(&beta);
            let sse = (&t - &self.matrix * b).norm_squared();
            if best.is_none_or(|(s, _)| sse < s) {
                best = Some((sse, beta));
            }
        }
        best
    }
}

/// Van der Corput radical inverse of `i` in `base`.
fn radical_inverse(mut i: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// First start is the embedded lower-order optimum; the rest fill the ratio
/// box with a Halton sequence.
fn ratio_starts(dim: usize, embedded: &[f64]) -> Vec<Vec<f64>> {
    let (lo, hi) = HIGHER_COEFF_BOUNDS;
    let mut starts = vec![embedded.to_vec()];
    for i in 1..MULTI_STARTS {
        let point = (0..dim)
            .map(|k| lo + (hi - lo) * radical_inverse(i, [2, 3][k]))
            .collect();
        starts.push(point);
    }
    starts
}

/// Fits all three orders, each seeded with the optimum of the one below so the
/// sum of squared residuals never increases with order.
pub fn fit_pl_all(obs: &[PlObservation], geom_a: f64) -> Result<Vec<PathLossFit>, NfRcsError> {
    fit_chain(obs, geom_a, ModelOrder::Sigma3)
}

pub fn fit_pl(obs: &[PlObservation], geom_a: f64, order: ModelOrder) -> Result<PathLossFit, NfRcsError> {
    Ok(fit_chain(obs, geom_a, order)?.pop().expect("chain is non-empty"))
}

fn fit_chain(obs: &[PlObservation], geom_a: f64, top: ModelOrder) -> Result<Vec<PathLossFit>, NfRcsError> {
    let (design, lambda) = Design::new(obs, geom_a)?;
    let nm = NelderMead::default();
    let mut fits = Vec::new();
    let mut ratios: Vec<f64> = Vec::new();
    for order in ModelOrder::ALL.into_iter().filter(|o| *o <= top) {
        let dim = order.ratio_count();
        if dim > 0 {
            let mut embedded = ratios.clone();
            embedded.resize(dim, 0.0);
            let bounds = Bounds::new(vec![HIGHER_COEFF_BOUNDS.0; dim], vec![HIGHER_COEFF_BOUNDS.1; dim]);
            let objective = |r: &[f64]| design.solve(r).map_or(f64::INFINITY, |(sse, _)| sse);
            let (_, best) = nm
                .multi_start(objective, &ratio_starts(dim, &embedded), &bounds)
                .ok_or(NfRcsError::NonConvergence)?;
            ratios = best.x;
        }
        let (_, [alpha_prime, n, m]) = design.solve(&ratios).ok_or(NfRcsError::NonConvergence)?;
        fits.push(finish(&design, lambda, order, alpha_prime, n, m, &ratios)?);
    }
    Ok(fits)
}

fn finish(
    design: &Design,
    lambda: f64,
    order: ModelOrder,
    alpha_prime: f64,
    n: f64,
    m: f64,
    ratios: &[f64],
) -> Result<PathLossFit, NfRcsError> {
    // a1 = 1 unless α' lies outside the α box, in which case a1 absorbs the
    // excess.
    let alpha = alpha_prime.clamp(ALPHA_BOUNDS.0, ALPHA_BOUNDS.1);
    let a1 = 10f64.powf((alpha - alpha_prime) / 10.0);
    let r = |k: usize| ratios.get(k).copied().unwrap_or(0.0);
    let model = NfRcsModel {
        order,
        a1,
        a2: if order >= ModelOrder::Sigma2 { r(0) * a1 } else { 0.0 },
        a3: if order >= ModelOrder::Sigma3 { r(1) * a1 } else { 0.0 },
        m,
    };
    let mut modeled = Vec::with_capacity(design.pl.len());
    for i in 0..design.pl.len() {
        let d = 10f64.powf(design.log_d[i]);
        let sigma = sigma_model_eval(&model, d, lambda, 0.0)? * 10f64.powf(m * design.log_cos[i]);
        modeled.push(alpha + 20.0 * n * design.log_d[i] - 10.0 * sigma.log10());
    }
    let residuals: Vec<f64> = design.pl.iter().zip(&modeled).map(|(a, b)| a - b).collect();
    Ok(PathLossFit {
        alpha,
        n,
        model,
        x_sigma: shadowing_std(&residuals)?,
        mfe_percent: mfe_percent(&design.pl, &modeled)?,
        degenerate: true,
    })
}
