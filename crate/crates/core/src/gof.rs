//! Goodness of fit: empirical CDF, KS and CDF-MSE statistics, and ranking of
//! candidate families.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dists::{mle_fit, DistError, DistParams, Family, SampleSet};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GofError {
    #[error("ranking needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("no candidate families given")]
    NoFamilies,
}

/// Right-continuous step function F(x) = #{x_i ≤ x} / n.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(data: &SampleSet) -> Self {
        Self { sorted: data.sorted() }
    }

    pub fn from_sorted(sorted: Vec<f64>) -> Self {
        debug_assert!(sorted.windows(2).all(|w| w[0] <= w[1]));
        Self { sorted }
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted_values(&self) -> &[f64] {
        &self.sorted
    }

    pub fn eval(&self, x: f64) -> f64 {
        let count = self.sorted.partition_point(|&v| v <= x);
        count as f64 / self.sorted.len() as f64
    }
}

/// KS and MSE from ascending data in one pass over the fitted CDF.
fn statistics_sorted(sorted: &[f64], fitted: &DistParams) -> (f64, f64) {
    let n = sorted.len() as f64;
    let mut ks = 0.0f64;
    let mut sq = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = fitted.cdf(x);
        let above = (i + 1) as f64 / n;
        let below = i as f64 / n;
        ks = ks.max(above - f).max(f - below);
        sq += (above - f) * (above - f);
    }
    (ks.clamp(0.0, 1.0), sq / n)
}

/// Two-sided supremum of |F_n(x) - F_fit(x)|, taken over both edges of every
/// step of the empirical CDF.
pub fn ks_statistic(data: &SampleSet, fitted: &DistParams) -> f64 {
    statistics_sorted(&data.sorted(), fitted).0
}

/// (1/N) Σ (i/N - F_fit(x_(i)))² over the sorted samples.
pub fn mse_statistic(data: &SampleSet, fitted: &DistParams) -> f64 {
    statistics_sorted(&data.sorted(), fitted).1
}

/// One scored candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofReport {
    pub family: Family,
    pub ks: f64,
    pub mse: f64,
    pub params: DistParams,
}

impl GofReport {
    /// Scores `params` on `data`.
    pub fn score(data: &SampleSet, params: DistParams) -> Self {
        let (ks, mse) = statistics_sorted(&data.sorted(), &params);
        Self {
            family: params.family(),
            ks,
            mse,
            params,
        }
    }
}

/// A family that could not be fitted and was left out of the ranking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostic {
    pub family: Family,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Ranking {
    /// Best first.
    pub reports: Vec<GofReport>,
    pub excluded: Vec<FitDiagnostic>,
}

impl Ranking {
    pub fn best(&self) -> Option<&GofReport> {
        self.reports.first()
    }
}

/// Mean of the limiting Kolmogorov distribution, √(π/2)·ln 2. Scaled by 1/√n
/// it is the typical KS value of a correctly specified model.
pub const KOLMOGOROV_MEAN: f64 = 0.868_731_160_636_159_1;

/// True when every member of `simple` is also a member of `general`.
pub fn nests(general: Family, simple: Family) -> bool {
    matches!(
        (general, simple),
        (Family::Gamma, Family::Exponential)
            | (Family::Weibull, Family::Exponential)
            | (Family::Weibull, Family::Rayleigh)
            | (Family::GeneralizedGamma, Family::Gamma)
            | (Family::GeneralizedGamma, Family::Weibull)
            | (Family::GeneralizedGamma, Family::Exponential)
            | (Family::GeneralizedGamma, Family::Rayleigh)
    )
}

/// KS gap below which two nested fits are treated as indistinguishable.
pub fn parsimony_tolerance(n: usize) -> f64 {
    KOLMOGOROV_MEAN / (n as f64).sqrt()
}

/// Fits every family by maximum likelihood and orders the results by KS,
/// then MSE, then family declaration order.
///
/// A family that nests a simpler candidate (gamma or Weibull over the
/// exponential, Weibull over the Rayleigh) only stays ahead of it when its KS
/// is lower by more than [`parsimony_tolerance`]; otherwise the simpler
/// family is ranked first. Families whose fit fails are reported in
/// [`Ranking::excluded`] instead of failing the whole call.
pub fn rank_fits(data: &SampleSet, families: &[Family]) -> Result<Ranking, GofError> {
    if data.len() < 2 {
        return Err(GofError::TooFewSamples(data.len()));
    }
    if families.is_empty() {
        return Err(GofError::NoFamilies);
    }
    let mut unique = families.to_vec();
    unique.sort();
    unique.dedup();

    let sorted = data.sorted();
    let outcomes: Vec<(Family, Result<DistParams, DistError>)> = unique
        .par_iter()
        .map(|&family| (family, mle_fit(family, data)))
        .collect();

    let mut ranking = Ranking::default();
    for (family, outcome) in outcomes {
        match outcome {
            Ok(params) => {
                let (ks, mse) = statistics_sorted(&sorted, &params);
                ranking.reports.push(GofReport { family, ks, mse, params });
            }
            Err(e) => ranking.excluded.push(FitDiagnostic {
                family,
                message: e.to_string(),
            }),
        }
    }
    ranking.reports.sort_by(|a, b| {
        a.ks.total_cmp(&b.ks)
            .then(a.mse.total_cmp(&b.mse))
            .then(a.family.cmp(&b.family))
    });
    prefer_simpler(&mut ranking.reports, parsimony_tolerance(data.len()));
    Ok(ranking)
}

/// Moves a nested family ahead of the family that contains it when their KS
/// values differ by no more than `tolerance`. Each swap moves a strictly
/// simpler family forward, so the loop terminates.
fn prefer_simpler(reports: &mut [GofReport], tolerance: f64) {
    loop {
        let mut swapped = false;
        for i in 0..reports.len() {
            for j in (i + 1)..reports.len() {
                if nests(reports[i].family, reports[j].family) && reports[j].ks - reports[i].ks <= tolerance {
                    let simple = reports[j].clone();
                    reports[i..=j].rotate_right(1);
                    reports[i] = simple;
                    swapped = true;
                }
            }
        }
        if !swapped {
            break;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[f64]) -> SampleSet {
        SampleSet::from_values(v.to_vec()).unwrap()
    }

    #[test]
    fn ecdf_is_right_continuous() {
        let e = EmpiricalCdf::new(&set(&[3.0, 1.0, 2.0, 2.0]));
        assert_eq!(e.eval(0.5), 0.0);
        assert_eq!(e.eval(1.0), 0.25);
        assert_eq!(e.eval(2.0), 0.75);
        assert_eq!(e.eval(2.5), 0.75);
        assert_eq!(e.eval(3.0), 1.0);
        assert_eq!(e.eval(10.0), 1.0);
    }

    #[test]
    fn single_sample_at_median() {
        let p = DistParams::normal(2.0, 1.0).unwrap();
        assert!((ks_statistic(&set(&[2.0]), &p) - 0.5).abs() < 1e-15);
        let e = DistParams::exponential(1.0).unwrap();
        assert!((ks_statistic(&set(&[std::f64::consts::LN_2]), &e) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn mse_hand_examples() {
        let e = DistParams::exponential(1.0).unwrap();
        assert!((mse_statistic(&set(&[std::f64::consts::LN_2]), &e) - 0.25).abs() < 1e-15);
        // Exponential(1) CDF is 0.25 at ln(4/3) and 0.75 at ln 4.
        let xs = [(4.0f64 / 3.0).ln(), 4.0f64.ln()];
        assert!((mse_statistic(&set(&xs), &e) - 0.0625).abs() < 1e-15);
    }

    #[test]
    fn rank_single_family() {
        let r = rank_fits(&set(&[1.0, 2.0, 3.0]), &[Family::Lognormal]).unwrap();
        assert_eq!(r.reports.len(), 1);
        assert_eq!(r.reports[0].family, Family::Lognormal);
    }

    #[test]
    fn rank_isolates_failing_families() {
        let r = rank_fits(&set(&[0.0, 0.1, 0.4, 0.2]), &Family::FITTABLE).unwrap();
        assert_eq!(r.reports.len(), 1);
        assert_eq!(r.reports[0].family, Family::Normal);
        assert_eq!(r.excluded.len(), 5);
    }

    #[test]
    fn rank_preconditions() {
        assert_eq!(rank_fits(&set(&[1.0]), &[Family::Normal]), Err(GofError::TooFewSamples(1)));
        assert_eq!(rank_fits(&set(&[1.0, 2.0]), &[]), Err(GofError::NoFamilies));
    }

    fn report(family: Family, ks: f64) -> GofReport {
        let params = match family {
            Family::Gamma => DistParams::gamma(1.0, 1.0),
            Family::Weibull => DistParams::weibull(1.0, 1.0),
            Family::Exponential => DistParams::exponential(1.0),
            Family::Rayleigh => DistParams::rayleigh(1.0),
            _ => DistParams::lognormal(0.0, 1.0),
        }
        .unwrap();
        GofReport { family, ks, mse: 0.0, params }
    }

    #[test]
    fn nested_family_within_tolerance_moves_first() {
        let mut r = vec![
            report(Family::Weibull, 0.0100),
            report(Family::Gamma, 0.0102),
            report(Family::Lognormal, 0.0103),
            report(Family::Exponential, 0.0104),
        ];
        prefer_simpler(&mut r, 0.001);
        let order: Vec<Family> = r.iter().map(|x| x.family).collect();
        assert_eq!(order, [Family::Exponential, Family::Weibull, Family::Gamma, Family::Lognormal]);
    }

    #[test]
    fn nested_family_outside_tolerance_stays() {
        let mut r = vec![report(Family::Gamma, 0.010), report(Family::Exponential, 0.020)];
        prefer_simpler(&mut r, 0.001);
        assert_eq!(r[0].family, Family::Gamma);
        // Lognormal does not nest the Rayleigh.
        let mut r = vec![report(Family::Lognormal, 0.010), report(Family::Rayleigh, 0.0101)];
        prefer_simpler(&mut r, 0.001);
        assert_eq!(r[0].family, Family::Lognormal);
    }

    #[test]
    fn kolmogorov_mean_constant() {
        let v = (std::f64::consts::PI / 2.0).sqrt() * std::f64::consts::LN_2;
        assert!((KOLMOGOROV_MEAN - v).abs() < 1e-15);
    }

    #[test]
    fn report_json_shape() {
        let r = GofReport {
            family: Family::Exponential,
            ks: 0.052,
            mse: 0.00087,
            params: DistParams::exponential(0.04).unwrap(),
        };
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        assert_eq!(v["family"], "exponential");
        assert_eq!(v["params"]["lambda"], 0.04);
        assert_eq!(v["ks"], 0.052);
    }
}
