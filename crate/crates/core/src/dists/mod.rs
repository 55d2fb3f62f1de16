//! Parametric RCS distributions: evaluation, sampling and maximum-likelihood fits.
//!
//! Parameter names follow the conventions used in published RCS fitting
//! tables: gamma has shape `A` and scale `B`, Weibull has scale `A` and shape
//! `B`, Rayleigh has scale `B`, and the exponential is parameterised by its
//! mean `λ` (not the rate).

mod fit;
pub mod special;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use fit::{log_likelihood, mle_fit};
use special::{erfc, gamma_lr, ln_gamma};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistError {
    #[error("invalid {family} parameter {name} = {value}")]
    InvalidParams {
        family: Family,
        name: &'static str,
        value: f64,
    },
    #[error("sample set is empty")]
    EmptySample,
    #[error("sample {index} is not finite ({value})")]
    NonFiniteSample { index: usize, value: f64 },
    #[error("{family} requires positive samples, sample {index} is {value}")]
    NonPositiveSample {
        family: Family,
        index: usize,
        value: f64,
    },
    #[error("{family} fit needs a sample with non-zero spread")]
    DegenerateSample { family: Family },
    #[error("{family} fit did not converge in {iterations} iterations")]
    NonConvergence { family: Family, iterations: usize },
    #[error("maximum-likelihood fitting is not provided for {0}")]
    FitUnsupported(Family),
    #[error("unknown distribution family '{0}'")]
    UnknownFamily(String),
}

/// Closed set of candidate families. The declaration order is the final
/// tie-breaker when ranking fits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Normal,
    Lognormal,
    Gamma,
    Weibull,
    Rayleigh,
    Exponential,
    GeneralizedGamma,
}

impl Family {
    /// The six families fitted to measured RCS data.
    pub const FITTABLE: [Family; 6] = [
        Family::Normal,
        Family::Lognormal,
        Family::Gamma,
        Family::Weibull,
        Family::Rayleigh,
        Family::Exponential,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Family::Normal => "normal",
            Family::Lognormal => "lognormal",
            Family::Gamma => "gamma",
            Family::Weibull => "weibull",
            Family::Rayleigh => "rayleigh",
            Family::Exponential => "exponential",
            Family::GeneralizedGamma => "generalized_gamma",
        }
    }

    /// Whether the family lives on (0, ∞).
    pub fn positive_support(&self) -> bool {
        !matches!(self, Family::Normal)
    }

    pub fn parameter_count(&self) -> usize {
        match self {
            Family::Rayleigh | Family::Exponential => 1,
            Family::GeneralizedGamma => 3,
            _ => 2,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = DistError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        [
            Family::Normal,
            Family::Lognormal,
            Family::Gamma,
            Family::Weibull,
            Family::Rayleigh,
            Family::Exponential,
            Family::GeneralizedGamma,
        ]
        .into_iter()
        .find(|f| f.name() == lower)
        .ok_or_else(|| DistError::UnknownFamily(s.to_string()))
    }
}

/// Raw parameter values per family. Obtain one through a validated
/// [`DistParams`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Params {
    Normal { mu: f64, sigma: f64 },
    /// `mu` and `sigma` of the natural logarithm of the variable.
    Lognormal { mu: f64, sigma: f64 },
    Gamma { shape: f64, scale: f64 },
    Weibull { scale: f64, shape: f64 },
    Rayleigh { scale: f64 },
    Exponential { mean: f64 },
    GeneralizedGamma { scale: f64, shape: f64, power: f64 },
}

impl Params {
    pub fn family(&self) -> Family {
        match self {
            Params::Normal { .. } => Family::Normal,
            Params::Lognormal { .. } => Family::Lognormal,
            Params::Gamma { .. } => Family::Gamma,
            Params::Weibull { .. } => Family::Weibull,
            Params::Rayleigh { .. } => Family::Rayleigh,
            Params::Exponential { .. } => Family::Exponential,
            Params::GeneralizedGamma { .. } => Family::GeneralizedGamma,
        }
    }

    /// (name, value) pairs using the published parameter letters.
    pub fn named(&self) -> Vec<(&'static str, f64)> {
        match *self {
            Params::Normal { mu, sigma } | Params::Lognormal { mu, sigma } => vec![("mu", mu), ("sigma", sigma)],
            Params::Gamma { shape, scale } => vec![("A", shape), ("B", scale)],
            Params::Weibull { scale, shape } => vec![("A", scale), ("B", shape)],
            Params::Rayleigh { scale } => vec![("B", scale)],
            Params::Exponential { mean } => vec![("lambda", mean)],
            Params::GeneralizedGamma { scale, shape, power } => vec![("a", scale), ("d", shape), ("p", power)],
        }
    }

    fn validate(self) -> Result<Self, DistError> {
        let family = self.family();
        for (name, value) in self.named() {
            let real_valued = matches!(self, Params::Normal { .. } | Params::Lognormal { .. }) && name == "mu";
            let ok = if real_valued { value.is_finite() } else { value.is_finite() && value > 0.0 };
            if !ok {
                return Err(DistError::InvalidParams { family, name, value });
            }
        }
        Ok(self)
    }
}

/// Validated distribution parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct DistParams {
    params: Params,
}

impl DistParams {
    pub fn new(params: Params) -> Result<Self, DistError> {
        Ok(Self {
            params: params.validate()?,
        })
    }

    pub fn normal(mu: f64, sigma: f64) -> Result<Self, DistError> {
        Self::new(Params::Normal { mu, sigma })
    }

    pub fn lognormal(mu: f64, sigma: f64) -> Result<Self, DistError> {
        Self::new(Params::Lognormal { mu, sigma })
    }

    /// Gamma with shape `A` and scale `B`.
    pub fn gamma(shape: f64, scale: f64) -> Result<Self, DistError> {
        Self::new(Params::Gamma { shape, scale })
    }

    /// Weibull with scale `A` and shape `B`.
    pub fn weibull(scale: f64, shape: f64) -> Result<Self, DistError> {
        Self::new(Params::Weibull { scale, shape })
    }

    pub fn rayleigh(scale: f64) -> Result<Self, DistError> {
        Self::new(Params::Rayleigh { scale })
    }

    /// Exponential with mean `λ`.
    pub fn exponential(mean: f64) -> Result<Self, DistError> {
        Self::new(Params::Exponential { mean })
    }

    pub fn generalized_gamma(scale: f64, shape: f64, power: f64) -> Result<Self, DistError> {
        Self::new(Params::GeneralizedGamma { scale, shape, power })
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn family(&self) -> Family {
        self.params.family()
    }

    /// Natural log of the density; `-inf` outside the support.
    pub fn ln_pdf(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        match self.params {
            Params::Normal { mu, sigma } => {
                let z = (x - mu) / sigma;
                -0.5 * z * z - sigma.ln() - 0.5 * (2.0 * PI).ln()
            }
            Params::Lognormal { mu, sigma } => {
                if x <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                let lx = x.ln();
                let z = (lx - mu) / sigma;
                -0.5 * z * z - lx - sigma.ln() - 0.5 * (2.0 * PI).ln()
            }
            Params::Gamma { shape, scale } => {
                if x < 0.0 {
                    return f64::NEG_INFINITY;
                }
                if x == 0.0 {
                    return power_law_origin(shape, -ln_gamma(shape) - shape * scale.ln());
                }
                (shape - 1.0) * x.ln() - x / scale - ln_gamma(shape) - shape * scale.ln()
            }
            Params::Weibull { scale, shape } => {
                if x < 0.0 {
                    return f64::NEG_INFINITY;
                }
                if x == 0.0 {
                    return power_law_origin(shape, shape.ln() - shape * scale.ln());
                }
                shape.ln() - scale.ln() + (shape - 1.0) * (x.ln() - scale.ln()) - (x / scale).powf(shape)
            }
            Params::Rayleigh { scale } => {
                if x <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                let s2 = scale * scale;
                x.ln() - s2.ln() - x * x / (2.0 * s2)
            }
            Params::Exponential { mean } => {
                if x < 0.0 {
                    return f64::NEG_INFINITY;
                }
                -x / mean - mean.ln()
            }
            Params::GeneralizedGamma { scale, shape, power } => {
                if x < 0.0 {
                    return f64::NEG_INFINITY;
                }
                let norm = power.ln() - shape * scale.ln() - ln_gamma(shape / power);
                if x == 0.0 {
                    return power_law_origin(shape, norm);
                }
                norm + (shape - 1.0) * x.ln() - (x / scale).powf(power)
            }
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        match self.params {
            Params::Normal { mu, sigma } => 0.5 * erfc(-(x - mu) / (sigma * std::f64::consts::SQRT_2)),
            Params::Lognormal { mu, sigma } => {
                if x <= 0.0 {
                    0.0
                } else {
                    0.5 * erfc(-(x.ln() - mu) / (sigma * std::f64::consts::SQRT_2))
                }
            }
            Params::Gamma { shape, scale } => {
                if x <= 0.0 {
                    0.0
                } else if x.is_infinite() {
                    1.0
                } else {
                    gamma_lr(shape, x / scale)
                }
            }
            Params::Weibull { scale, shape } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-(x / scale).powf(shape)).exp_m1()
                }
            }
            Params::Rayleigh { scale } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-(x * x) / (2.0 * scale * scale)).exp_m1()
                }
            }
            Params::Exponential { mean } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-x / mean).exp_m1()
                }
            }
            Params::GeneralizedGamma { scale, shape, power } => {
                if x <= 0.0 {
                    0.0
                } else {
                    let t = (x / scale).powf(power);
                    if t.is_infinite() {
                        1.0
                    } else {
                        gamma_lr(shape / power, t)
                    }
                }
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match self.params {
            Params::Normal { mu, .. } => mu,
            Params::Lognormal { mu, sigma } => (mu + 0.5 * sigma * sigma).exp(),
            Params::Gamma { shape, scale } => shape * scale,
            Params::Weibull { scale, shape } => scale * ln_gamma(1.0 + 1.0 / shape).exp(),
            Params::Rayleigh { scale } => scale * (PI / 2.0).sqrt(),
            Params::Exponential { mean } => mean,
            Params::GeneralizedGamma { scale, shape, power } => {
                scale * (ln_gamma((shape + 1.0) / power) - ln_gamma(shape / power)).exp()
            }
        }
    }

    /// One draw using the supplied generator.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.params {
            Params::Normal { mu, sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                mu + sigma * z
            }
            Params::Lognormal { mu, sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                (mu + sigma * z).exp()
            }
            Params::Gamma { shape, scale } => unit_gamma(shape, rng) * scale,
            Params::Weibull { scale, shape } => {
                let e: f64 = Exp1.sample(rng);
                scale * e.powf(1.0 / shape)
            }
            Params::Rayleigh { scale } => {
                let e: f64 = Exp1.sample(rng);
                scale * (2.0 * e).sqrt()
            }
            Params::Exponential { mean } => {
                let e: f64 = Exp1.sample(rng);
                mean * e
            }
            Params::GeneralizedGamma { scale, shape, power } => {
                scale * unit_gamma(shape / power, rng).powf(1.0 / power)
            }
        }
    }

    /// `count` seeded draws. Identical `(self, count, seed)` give bitwise
    /// identical output.
    pub fn sample(&self, count: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count).map(|_| self.draw(&mut rng)).collect()
    }
}

impl fmt::Display for DistParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.family())?;
        for (i, (name, value)) in self.params.named().into_iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{name}={value}")?;
        }
        f.write_str(")")
    }
}

/// Log density at the origin for x^(shape-1)·exp(norm) type densities.
fn power_law_origin(shape: f64, norm: f64) -> f64 {
    if shape < 1.0 {
        f64::INFINITY
    } else if shape == 1.0 {
        norm
    } else {
        f64::NEG_INFINITY
    }
}

fn unit_gamma<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    // rand_distr::Gamma only fails on invalid parameters, which DistParams excludes.
    rand_distr::Gamma::new(shape, 1.0)
        .expect("validated shape")
        .sample(rng)
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
enum RawParams {
    Normal {
        mu: f64,
        sigma: f64,
    },
    Lognormal {
        mu: f64,
        sigma: f64,
    },
    Gamma {
        #[serde(rename = "A")]
        a: f64,
        #[serde(rename = "B")]
        b: f64,
    },
    Weibull {
        #[serde(rename = "A")]
        a: f64,
        #[serde(rename = "B")]
        b: f64,
    },
    Rayleigh {
        #[serde(rename = "B")]
        b: f64,
    },
    Exponential {
        lambda: f64,
    },
    GeneralizedGamma {
        a: f64,
        d: f64,
        p: f64,
    },
}

impl TryFrom<RawParams> for DistParams {
    type Error = DistError;

    fn try_from(raw: RawParams) -> Result<Self, Self::Error> {
        DistParams::new(match raw {
            RawParams::Normal { mu, sigma } => Params::Normal { mu, sigma },
            RawParams::Lognormal { mu, sigma } => Params::Lognormal { mu, sigma },
            RawParams::Gamma { a, b } => Params::Gamma { shape: a, scale: b },
            RawParams::Weibull { a, b } => Params::Weibull { scale: a, shape: b },
            RawParams::Rayleigh { b } => Params::Rayleigh { scale: b },
            RawParams::Exponential { lambda } => Params::Exponential { mean: lambda },
            RawParams::GeneralizedGamma { a, d, p } => Params::GeneralizedGamma {
                scale: a,
                shape: d,
                power: p,
            },
        })
    }
}

impl From<DistParams> for RawParams {
    fn from(p: DistParams) -> Self {
        match p.params {
            Params::Normal { mu, sigma } => RawParams::Normal { mu, sigma },
            Params::Lognormal { mu, sigma } => RawParams::Lognormal { mu, sigma },
            Params::Gamma { shape, scale } => RawParams::Gamma { a: shape, b: scale },
            Params::Weibull { scale, shape } => RawParams::Weibull { a: scale, b: shape },
            Params::Rayleigh { scale } => RawParams::Rayleigh { b: scale },
            Params::Exponential { mean } => RawParams::Exponential { lambda: mean },
            Params::GeneralizedGamma { scale, shape, power } => RawParams::GeneralizedGamma {
                a: scale,
                d: shape,
                p: power,
            },
        }
    }
}

/// Where a group of RCS observations came from.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SampleMeta {
    pub target_id: String,
    pub frequency_ghz: f64,
    pub theta_b_deg: f64,
}

/// Non-empty set of RCS observations (m²) for one measurement configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    values: Vec<f64>,
    pub meta: SampleMeta,
}

impl SampleSet {
    pub fn new(values: Vec<f64>, meta: SampleMeta) -> Result<Self, DistError> {
        if values.is_empty() {
            return Err(DistError::EmptySample);
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(DistError::NonFiniteSample { index, value });
        }
        Ok(Self { values, meta })
    }

    pub fn from_values(values: Vec<f64>) -> Result<Self, DistError> {
        Self::new(values, SampleMeta::default())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sorted(&self) -> Vec<f64> {
        let mut v = self.values.clone();
        v.sort_by(f64::total_cmp);
        v
    }
}

/// Seeded sample set drawn from `params`.
pub fn sample(params: &DistParams, count: usize, seed: u64) -> Result<SampleSet, DistError> {
    SampleSet::from_values(params.sample(count, seed))
}
