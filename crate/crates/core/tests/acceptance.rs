//! Acceptance criteria. Each test prints one `PASS`/`FAIL` line and asserts
//! the same condition. Run with `--nocapture` to see the lines.

use std::fs;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rcskit::cli_io::{cmd_simulate, ReportBundle};
use rcskit::dists::{mle_fit, DistParams, Family, SampleSet};
use rcskit::geometry::{bistatic_angle_deg, near_field_distance, BistaticGeometry, SPEED_OF_LIGHT};
use rcskit::gof::{ks_statistic, mse_statistic, rank_fits};
use rcskit::link_budget::{CalibrationFactor, LinkParams};
use rcskit::montecarlo::{synth_pl_dataset, PlRow};
use rcskit::nf_rcs::{fit_pl, fit_pl_all, ModelOrder, NfRcsModel, PathLossFit, PlObservation};
use rcskit::waveform::{cir_extract, ZcSequence};

fn verdict(id: u32, title: &str, ok: bool, elapsed: Duration, limit: Duration, detail: &str) {
    let ok = ok && elapsed < limit;
    println!(
        "[acceptance] {id:>2} {} {title}: {detail} ({:.2}s, limit {}s)",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    assert!(ok, "criterion {id} failed: {detail}");
}

#[test]
fn c01_near_field_distance() {
    let t = Instant::now();
    let d25 = near_field_distance(1.84, 25e9).unwrap();
    let d28 = near_field_distance(1.84, 28e9).unwrap();
    let ok = (d25 - 564.6).abs() <= 1.0 && (d28 - 632.3).abs() <= 1.0;
    verdict(
        1,
        "near-field distance",
        ok,
        t.elapsed(),
        Duration::from_secs(1),
        &format!("25 GHz {d25:.2} m, 28 GHz {d28:.2} m (±1.0 m)"),
    );
}

#[test]
fn c02_bistatic_angle_endpoints() {
    let t = Instant::now();
    let near = BistaticGeometry::new(0.7, 2.0).unwrap().bistatic_angle_deg();
    let far = BistaticGeometry::new(0.7, 10.0).unwrap().bistatic_angle_deg();
    let ok = (near - 38.37).abs() <= 0.5 && (far - 7.97).abs() <= 0.5;
    verdict(
        2,
        "bistatic angle endpoints",
        ok,
        t.elapsed(),
        Duration::from_secs(1),
        &format!("y=2: {near:.3}°, y=10: {far:.3}° (±0.5°)"),
    );
}

#[test]
fn c03_radar_equation_round_trip() {
    let t = Instant::now();
    let mut worst = 0.0f64;
    for f in [24e9, 25e9, 26e9, 27e9, 28e9] {
        let lambda = SPEED_OF_LIGHT / f;
        let link = LinkParams::new(1e-3, 316.0, 251.0, lambda, 0.3).unwrap();
        for d in [0.5, 2.0, 5.0, 10.0, 40.0] {
            let cal = CalibrationFactor::calibrate(link.free_space_rx_power(d).unwrap(), d, lambda).unwrap();
            for sigma in [1e-4, 3e-3, 0.04, 1.0, 25.0] {
                let p_tar = link.target_power(d, sigma).unwrap();
                let back = cal.invert_rcs_at(p_tar, lambda, d).unwrap();
                worst = worst.max((back - sigma).abs() / sigma);
            }
        }
    }
    verdict(
        3,
        "radar-equation round trip",
        worst <= 1e-12,
        t.elapsed(),
        Duration::from_secs(1),
        &format!("max relative error {worst:.2e} over 125 cells (≤1e-12)"),
    );
}

#[test]
fn c04_distribution_round_trips() {
    let t = Instant::now();
    let cells = [
        DistParams::gamma(0.9, 0.044).unwrap(),
        DistParams::gamma(0.66, 0.076).unwrap(),
        DistParams::gamma(3.66, 0.0066).unwrap(),
        DistParams::weibull(0.058, 0.86).unwrap(),
        DistParams::weibull(0.027, 1.86).unwrap(),
        DistParams::lognormal(-3.44, 1.52).unwrap(),
        DistParams::lognormal(-3.49, 1.47).unwrap(),
        DistParams::lognormal(-3.8, 0.52).unwrap(),
        DistParams::exponential(0.04).unwrap(),
        DistParams::rayleigh(0.039).unwrap(),
    ];
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for (seed, cell) in cells.iter().enumerate() {
        let data = SampleSet::from_values(cell.sample(1_000_000, 100 + seed as u64)).unwrap();
        let fit = mle_fit(cell.family(), &data).unwrap();
        for ((name, truth), (_, got)) in cell.params().named().into_iter().zip(fit.params().named()) {
            let rel = (got - truth).abs() / truth.abs();
            worst = worst.max(rel);
            if rel > 0.02 {
                failures.push(format!("{cell}: {name}={got}"));
            }
        }
        let ranking = rank_fits(&data, &Family::FITTABLE).unwrap();
        let top = ranking.best().unwrap().family;
        if top != cell.family() {
            failures.push(format!("{cell}: ranked {top} first"));
        }
    }
    let detail = if failures.is_empty() {
        format!("{} cells, worst parameter error {:.3}% (±2%), generating family first in all", cells.len(), 100.0 * worst)
    } else {
        failures.join("; ")
    };
    verdict(4, "distribution round trips", failures.is_empty(), t.elapsed(), Duration::from_secs(60), &detail);
}

fn oracle_ks(data: &[f64], p: &DistParams) -> f64 {
    let n = data.len() as f64;
    data.iter().fold(0.0f64, |acc, &x| {
        let le = data.iter().filter(|&&v| v <= x).count() as f64 / n;
        let lt = data.iter().filter(|&&v| v < x).count() as f64 / n;
        let f = p.cdf(x);
        acc.max((le - f).abs()).max((lt - f).abs())
    })
}

fn oracle_mse(data: &[f64], p: &DistParams) -> f64 {
    let mut s = data.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let mut acc = 0.0;
    for (i, x) in s.iter().enumerate() {
        let e = (i + 1) as f64 / n - p.cdf(*x);
        acc += e * e;
    }
    acc / n
}

#[test]
fn c05_ks_mse_oracles() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let fitted = [
        DistParams::gamma(0.9, 0.044).unwrap(),
        DistParams::lognormal(-3.44, 1.52).unwrap(),
        DistParams::weibull(0.058, 0.86).unwrap(),
        DistParams::normal(0.05, 0.03).unwrap(),
    ];
    let mut ks_mismatch = 0;
    let mut mse_worst = 0.0f64;
    for case in 0..100 {
        let n = rng.random_range(1..=20);
        let data: Vec<f64> = (0..n).map(|_| (rng.random_range(0.001..0.2f64) * 40.0).round() / 40.0 + 0.001).collect();
        let p = &fitted[case % fitted.len()];
        let set = SampleSet::from_values(data.clone()).unwrap();
        if ks_statistic(&set, p) != oracle_ks(&data, p) {
            ks_mismatch += 1;
        }
        mse_worst = mse_worst.max((mse_statistic(&set, p) - oracle_mse(&data, p)).abs());
    }
    verdict(
        5,
        "KS/MSE oracle equivalence",
        ks_mismatch == 0 && mse_worst <= 1e-15,
        t.elapsed(),
        Duration::from_secs(5),
        &format!("KS mismatches {ks_mismatch}/100 (exact), MSE max diff {mse_worst:.1e} (≤1e-15)"),
    );
}

#[test]
fn c06_generalized_gamma_collapses() {
    let t = Instant::now();
    let mut worst = 0.0f64;
    for &(a, d) in &[(0.044, 0.9), (0.058, 0.86), (1.0, 2.5)] {
        let gg1 = DistParams::generalized_gamma(a, d, 1.0).unwrap();
        let gamma = DistParams::gamma(d, a).unwrap();
        let ggw = DistParams::generalized_gamma(a, d, d).unwrap();
        let weibull = DistParams::weibull(a, d).unwrap();
        for i in 1..=100 {
            let x = a * 8.0 * i as f64 / 100.0;
            worst = worst.max((gg1.pdf(x) - gamma.pdf(x)).abs() / gamma.pdf(x));
            worst = worst.max((ggw.pdf(x) - weibull.pdf(x)).abs() / weibull.pdf(x));
        }
    }
    verdict(
        6,
        "generalized-gamma special cases",
        worst <= 1e-12,
        t.elapsed(),
        Duration::from_secs(1),
        &format!("max relative pdf gap {worst:.1e} on 100-point grids (≤1e-12)"),
    );
}

#[test]
fn c07_zadoff_chu_probe() {
    let t = Instant::now();
    let mut amp = 0.0f64;
    let mut side = 0.0f64;
    let mut cir = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for u in [1u64, 3, 5] {
        let zc = ZcSequence::generate(128, u).unwrap();
        amp = amp.max(zc.samples().iter().map(|s| (s.norm() - 1.0).abs()).fold(0.0, f64::max));
        side = side.max(zc.periodic_autocorrelation()[1..].iter().map(|c| c.norm()).fold(0.0, f64::max));
        for _ in 0..10 {
            let mut h = vec![Complex64::new(0.0, 0.0); 128];
            for _ in 0..rng.random_range(1..8) {
                let k = rng.random_range(0..128);
                h[k] += Complex64::from_polar(rng.random_range(1e-4..1.0), rng.random_range(-3.2..3.2));
            }
            let est = cir_extract(&zc.transmit_through(&h), &zc, 26e9, "probe").unwrap();
            cir = cir.max(est.taps.iter().zip(&h).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max));
        }
    }
    verdict(
        7,
        "Zadoff-Chu probe",
        amp < 1e-9 && side < 1e-9 && cir < 1e-9,
        t.elapsed(),
        Duration::from_secs(5),
        &format!("amplitude error {amp:.1e}, max sidelobe {side:.1e}, CIR error {cir:.1e} (all <1e-9)"),
    );
}

/// Published deterministic-fit rows: frequency, order, α, n, m, a1, a2, a3, X_σ.
type Row = (f64, ModelOrder, f64, f64, f64, f64, f64, f64, f64);

const ROWS: [Row; 12] = [
    (25e9, ModelOrder::Sigma1, 51.41, 1.85, -7.86, 2.96, 0.0, 0.0, 1.64),
    (25e9, ModelOrder::Sigma2, 51.66, 1.84, -8.13, 2.91, 1.25, 0.0, 1.63),
    (25e9, ModelOrder::Sigma3, 51.82, 1.83, -8.26, 2.90, 1.25, 0.03, 1.63),
    (26e9, ModelOrder::Sigma1, 44.21, 1.90, -6.1, 2.94, 0.0, 0.0, 0.72),
    (26e9, ModelOrder::Sigma2, 43.80, 1.92, -6.02, 2.90, 1.25, 0.0, 0.72),
    (26e9, ModelOrder::Sigma3, 43.65, 1.92, -6.02, 2.80, 1.25, 0.03, 0.72),
    (27e9, ModelOrder::Sigma1, 43.78, 1.95, -7.19, 2.99, 0.0, 0.0, 2.09),
    (27e9, ModelOrder::Sigma2, 44.17, 1.97, -7.04, 3.50, 1.01, 0.0, 2.03),
    (27e9, ModelOrder::Sigma3, 43.99, 1.98, -6.91, 3.50, 1.01, 0.02, 2.02),
    (28e9, ModelOrder::Sigma1, 46.80, 1.85, -6.56, 3.02, 0.0, 0.0, 1.04),
    (28e9, ModelOrder::Sigma2, 47.73, 1.85, -6.68, 3.25, 1.01, 0.0, 1.04),
    (28e9, ModelOrder::Sigma3, 47.56, 1.85, -6.69, 3.50, 1.01, 0.02, 1.04),
];

const GEOM_A: f64 = 0.7;

fn y_grid() -> Vec<f64> {
    (0..17).map(|i| 2.0 + 0.5 * i as f64).collect()
}

fn pl_row(r: &Row) -> PlRow {
    let (_, order, alpha, n, m, a1, a2, a3, _) = *r;
    PlRow {
        alpha,
        n,
        model: NfRcsModel { order, a1, a2, a3, m },
    }
}

fn max_curve_gap(fit: &PathLossFit, obs: &[PlObservation]) -> f64 {
    obs.iter()
        .map(|o| (fit.predict_at_offset(GEOM_A, o.y_m, o.frequency_hz).unwrap() - o.pl_db).abs())
        .fold(0.0, f64::max)
}

#[test]
fn c08_noiseless_fit_recovery() {
    let t = Instant::now();
    let mut problems = Vec::new();
    let (mut gap, mut mfe, mut combo) = (0.0f64, 0.0f64, 0.0f64);
    for r in &ROWS {
        let row = pl_row(r);
        let obs = synth_pl_dataset(&row, GEOM_A, &y_grid(), r.0, 0.0, 0).unwrap();
        let fit = fit_pl(&obs, GEOM_A, r.1).unwrap();
        let g = max_curve_gap(&fit, &obs);
        gap = gap.max(g);
        mfe = mfe.max(fit.mfe_percent);
        if g >= 0.05 || fit.mfe_percent >= 0.1 {
            problems.push(format!("{} GHz {}: gap {g:.3} dB, MFE {:.4}%", r.0 / 1e9, r.1, fit.mfe_percent));
        }
        if r.1 == ModelOrder::Sigma1 {
            let want = row.alpha - 10.0 * row.model.a1.log10();
            let e = (fit.alpha_prime() - want).abs().max(((fit.n - 1.0) - (row.n - 1.0)).abs());
            combo = combo.max(e);
            if e > 1e-6 {
                problems.push(format!("{} GHz sigma1: identifiable combination error {e:.1e}", r.0 / 1e9));
            }
        }
    }
    let detail = if problems.is_empty() {
        format!("12 rows, max curve gap {gap:.1e} dB (<0.05), max MFE {mfe:.1e}% (<0.1), sigma1 combinations {combo:.1e} (≤1e-6)")
    } else {
        problems.join("; ")
    };
    verdict(8, "noiseless path-loss fit recovery", problems.is_empty(), t.elapsed(), Duration::from_secs(120), &detail);
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[test]
fn c09_fit_under_shadowing() {
    let t = Instant::now();
    const SEEDS: u64 = 200;
    let mut problems = Vec::new();
    let mut medians = Vec::new();
    let (mut mfe_lo, mut mfe_hi) = (f64::INFINITY, 0.0f64);
    let mut other_25 = (f64::INFINITY, 0.0f64);
    let mut ordering_violations = 0usize;
    for (index, r) in ROWS.iter().enumerate() {
        let row = pl_row(r);
        let own = r.1 as usize;
        let mut x_sigmas = Vec::with_capacity(SEEDS as usize);
        for seed in 0..SEEDS {
            let obs = synth_pl_dataset(&row, GEOM_A, &y_grid(), r.0, r.8, 1000 * index as u64 + seed).unwrap();
            let fits = fit_pl_all(&obs, GEOM_A).unwrap();
            x_sigmas.push(fits[own].x_sigma);
            if r.0 == 25e9 && r.1 == ModelOrder::Sigma1 {
                mfe_lo = mfe_lo.min(fits[own].mfe_percent);
                mfe_hi = mfe_hi.max(fits[own].mfe_percent);
            } else if r.0 == 25e9 {
                other_25.0 = other_25.0.min(fits[own].mfe_percent);
                other_25.1 = other_25.1.max(fits[own].mfe_percent);
            }
            let m: Vec<f64> = fits.iter().map(|f| f.mfe_percent).collect();
            if !(m[2] <= m[1] + 1e-9 && m[1] <= m[0] + 1e-9) {
                ordering_violations += 1;
            }
        }
        let med = median(x_sigmas);
        medians.push(med / r.8);
        if (med - r.8).abs() > 0.35 * r.8 {
            problems.push(format!("{} GHz {}: median x_sigma {med:.3} vs {}", r.0 / 1e9, r.1, r.8));
        }
    }
    if !(1.0..=4.0).contains(&mfe_lo) || !(1.0..=4.0).contains(&mfe_hi) {
        problems.push(format!("25 GHz sigma1 MFE range [{mfe_lo:.3}, {mfe_hi:.3}]% outside [1, 4]%"));
    }
    if ordering_violations > 0 {
        problems.push(format!(
            "MFE(sigma3) ≤ MFE(sigma2) ≤ MFE(sigma1) violated in {ordering_violations}/{} seeded datasets",
            SEEDS as usize * ROWS.len()
        ));
    }
    let ratio_lo = medians.iter().copied().fold(f64::INFINITY, f64::min);
    let ratio_hi = medians.iter().copied().fold(0.0, f64::max);
    let detail = format!(
        "median x_sigma / injected in [{ratio_lo:.3}, {ratio_hi:.3}] (±35%), 25 GHz sigma1 MFE in [{mfe_lo:.3}, {mfe_hi:.3}]% ([1, 4]%), sigma2/sigma3 rows [{:.3}, {:.3}]%{}",
        other_25.0,
        other_25.1,
        if problems.is_empty() {
            String::new()
        } else {
            format!("; {}", problems.join("; "))
        }
    );
    verdict(9, "path-loss fit under shadowing", problems.is_empty(), t.elapsed(), Duration::from_secs(600), &detail);
}

#[test]
fn c10_end_to_end_simulation() {
    let t = Instant::now();
    let dir = tempfile::TempDir::new().unwrap();
    let spec = serde_json::json!({
        "geometry": {"half_baseline_m": 0.275, "target_offset_m": 1.56},
        "link": serde_json::to_value(LinkParams::new(1e-3, 316.0, 316.0, SPEED_OF_LIGHT / 26e9, 0.5).unwrap()).unwrap(),
        "rcs_process": {"family": "lognormal", "mu": -3.49, "sigma": 1.47},
        "n_snapshots": 100_000,
        "noise_power": 0.0,
        "seed": 0,
        "target_id": "matrice"
    });
    let spec_path = dir.path().join("spec.json");
    fs::write(&spec_path, serde_json::to_string_pretty(&spec).unwrap()).unwrap();
    let run = |tag: &str| {
        let s = dir.path().join(format!("{tag}.csv"));
        let r = dir.path().join(format!("{tag}.json"));
        cmd_simulate(&spec_path, &s, &r, Some(2024)).unwrap();
        (fs::read(&s).unwrap(), fs::read(&r).unwrap())
    };
    let a = run("a");
    let b = run("b");
    let identical = a == b;
    let bundle: ReportBundle = serde_json::from_slice(&a.1).unwrap();
    let top = &bundle.groups[0].reports[0];
    let named = top.params.params().named();
    let mu_err = (named[0].1 + 3.49).abs() / 3.49;
    let sigma_err = (named[1].1 - 1.47).abs() / 1.47;
    let ok = identical && top.family == Family::Lognormal && mu_err <= 0.02 && sigma_err <= 0.02;
    let angle = bistatic_angle_deg(0.275, 0.275f64.hypot(1.56));
    verdict(
        10,
        "end-to-end simulation",
        ok,
        t.elapsed(),
        Duration::from_secs(60),
        &format!(
            "byte-identical reruns: {identical}, top family {} (θ_b {angle:.1}°), μ error {:.3}%, σ error {:.3}% (±2%)",
            top.family,
            100.0 * mu_err,
            100.0 * sigma_err
        ),
    );
}
