use super::special::{digamma, trigamma};
use super::{DistError, DistParams, Family, SampleSet};

const TOLERANCE: f64 = 1e-10;
const MAX_ITERATIONS: usize = 200;
const WEIBULL_SHAPE_RANGE: (f64, f64) = (1e-3, 1e3);

/// Σ ln f(x_i).
pub fn log_likelihood(params: &DistParams, data: &SampleSet) -> f64 {
    data.values().iter().map(|&x| params.ln_pdf(x)).sum()
}

/// Maximum-likelihood estimate of `family` on `data`.
///
/// Normal, lognormal, exponential and Rayleigh use their closed forms; gamma
/// and Weibull solve the one-dimensional profile score equation for the shape.
pub fn mle_fit(family: Family, data: &SampleSet) -> Result<DistParams, DistError> {
    let xs = data.values();
    if xs.is_empty() {
        return Err(DistError::EmptySample);
    }
    if family.positive_support() {
        if let Some((index, &value)) = xs.iter().enumerate().find(|(_, &v)| v <= 0.0) {
            return Err(DistError::NonPositiveSample { family, index, value });
        }
    }
    let n = xs.len() as f64;
    let constant = xs.iter().all(|&x| x == xs[0]);
    if constant && matches!(family, Family::Normal | Family::Lognormal | Family::Gamma | Family::Weibull) {
        return Err(DistError::DegenerateSample { family });
    }
    match family {
        Family::Normal => {
            let (mu, var) = mean_var(xs.iter().copied());
            if var <= 0.0 {
                return Err(DistError::DegenerateSample { family });
            }
            DistParams::normal(mu, var.sqrt())
        }
        Family::Lognormal => {
            let (mu, var) = mean_var(xs.iter().map(|x| x.ln()));
            if var <= 0.0 {
                return Err(DistError::DegenerateSample { family });
            }
            DistParams::lognormal(mu, var.sqrt())
        }
        Family::Exponential => DistParams::exponential(xs.iter().sum::<f64>() / n),
        Family::Rayleigh => DistParams::rayleigh((xs.iter().map(|x| x * x).sum::<f64>() / (2.0 * n)).sqrt()),
        Family::Gamma => fit_gamma(xs),
        Family::Weibull => fit_weibull(xs),
        Family::GeneralizedGamma => Err(DistError::FitUnsupported(family)),
    }
}

/// Mean and population (1/N) variance, two-pass.
fn mean_var(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let (count, sum) = values.clone().fold((0usize, 0.0), |(c, s), v| (c + 1, s + v));
    let mean = sum / count as f64;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / count as f64;
    (mean, var)
}

/// Solves ln A - ψ(A) = ln(mean) - mean(ln x) for the shape by safeguarded
/// Newton in log A, seeded by the method of moments. Scale is mean / A.
fn fit_gamma(xs: &[f64]) -> Result<DistParams, DistError> {
    let family = Family::Gamma;
    let (mean, var) = mean_var(xs.iter().copied());
    let mean_ln = xs.iter().map(|x| x.ln()).sum::<f64>() / xs.len() as f64;
    let s = mean.ln() - mean_ln;
    if var <= 0.0 || s <= 0.0 || !s.is_finite() {
        return Err(DistError::DegenerateSample { family });
    }

    // score(t) with t = ln A is strictly decreasing in t.
    let score = |t: f64| {
        let a = t.exp();
        a.ln() - digamma(a) - s
    };
    let mut lo = (1e-12f64).ln();
    let mut hi = (1e12f64).ln();
    let mut t = (mean * mean / var).clamp(1e-8, 1e8).ln();

    for _ in 0..MAX_ITERATIONS {
        let f = score(t);
        if f.abs() < TOLERANCE {
            return DistParams::gamma(t.exp(), mean / t.exp());
        }
        if f > 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let a = t.exp();
        let slope = 1.0 - a * trigamma(a);
        let mut next = t - f / slope;
        if !next.is_finite() || next <= lo || next >= hi {
            next = 0.5 * (lo + hi);
        }
        if (next - t).abs() < 1e-15 * t.abs().max(1.0) {
            return DistParams::gamma(next.exp(), mean / next.exp());
        }
        t = next;
    }
    Err(DistError::NonConvergence {
        family,
        iterations: MAX_ITERATIONS,
    })
}

/// Profile score for the Weibull shape on centred logs `l` (Σ l = 0):
/// h(k) = 1/k - Σ w_i l_i with w_i ∝ exp(k l_i). Returns (h, h').
fn weibull_score(k: f64, logs: &[f64], max_log: f64, min_log: f64) -> (f64, f64) {
    // Shift by the largest exponent to keep exp() finite for large k.
    let shift = if k >= 0.0 { k * max_log } else { k * min_log };
    let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
    for &l in logs {
        let w = (k * l - shift).exp();
        s0 += w;
        s1 += w * l;
        s2 += w * l * l;
    }
    let m1 = s1 / s0;
    let m2 = s2 / s0;
    (1.0 / k - m1, -1.0 / (k * k) - (m2 - m1 * m1))
}

/// Bisection/Newton hybrid on the profile score for the shape over
/// [1e-3, 1e3]; scale then follows in closed form.
fn fit_weibull(xs: &[f64]) -> Result<DistParams, DistError> {
    let family = Family::Weibull;
    let n = xs.len() as f64;
    let centre = xs.iter().map(|x| x.ln()).sum::<f64>() / n;
    let logs: Vec<f64> = xs.iter().map(|x| x.ln() - centre).collect();
    let max_log = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min_log = logs.iter().copied().fold(f64::INFINITY, f64::min);
    if max_log - min_log <= 0.0 {
        return Err(DistError::DegenerateSample { family });
    }

    let (mut lo, mut hi) = WEIBULL_SHAPE_RANGE;
    if weibull_score(lo, &logs, max_log, min_log).0 <= 0.0 || weibull_score(hi, &logs, max_log, min_log).0 >= 0.0 {
        return Err(DistError::NonConvergence { family, iterations: 0 });
    }

    let finish = |k: f64| {
        let shift = k * max_log;
        let sum: f64 = logs.iter().map(|&l| (k * l - shift).exp()).sum();
        let ln_scale = centre + (shift + sum.ln() - n.ln()) / k;
        DistParams::weibull(ln_scale.exp(), k)
    };

    // Moment-style seed: shape ≈ 1.2 / std(ln x).
    let sd = (logs.iter().map(|l| l * l).sum::<f64>() / n).sqrt();
    let mut k = (1.2 / sd).clamp(lo * 1.01, hi * 0.99);
    for _ in 0..MAX_ITERATIONS {
        let (h, dh) = weibull_score(k, &logs, max_log, min_log);
        if h.abs() < TOLERANCE {
            return finish(k);
        }
        if h > 0.0 {
            lo = k;
        } else {
            hi = k;
        }
        let mut next = k - h / dh;
        if !next.is_finite() || next <= lo || next >= hi {
            next = 0.5 * (lo + hi);
        }
        if (next - k).abs() < 1e-15 * k {
            return finish(next);
        }
        k = next;
    }
    Err(DistError::NonConvergence {
        family,
        iterations: MAX_ITERATIONS,
    })
}
