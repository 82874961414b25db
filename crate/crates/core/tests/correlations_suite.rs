//! Correlation estimation against independent quadrature oracles, envelope
//! fitting on the two model systems, covariance assembly, and the
//! fourth-order Δ diagnostics.

mod common;

use steindyn::correlations::{
    analytic_fallback, delta_diagnostic, estimate_profile, fit_envelope, fourth_correlation,
    pair_correlation, pair_correlation_from_origin, sigma_matrix, sigma_scalar, FitSource,
    SigmaSource,
};
use steindyn::mc::McOptions;
use steindyn::numeric::linalg::PdStatus;
use steindyn::numeric::sum::MeanVar;
use steindyn::observables::cos1_doubling;
use steindyn::observables::cos_pair_toral;
use steindyn::rng::Stream;
use steindyn::systems::{orbit_values, SystemKind};

const CAT: SystemKind = SystemKind::Toral { m: [[2, 1], [1, 1]] };
const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

#[test]
fn pair_correlation_against_doubling_oracle() {
    // oracles: μ(f f∘T⁰) = ∫cos² = 1/2; μ(f f∘T¹) = ∫cos2πx cos4πx = 0
    let cos1 = |x: f64| (TWO_PI * x).cos();
    let oracle0 = common::doubling_corr(cos1, cos1, 0);
    let oracle1 = common::doubling_corr(cos1, cos1, 1);
    assert!((oracle0 - 0.5).abs() < 1e-10);
    assert!(oracle1.abs() < 1e-10);

    let f = cos1_doubling();
    let opts = McOptions::new(200_000);
    let s = Stream::new(0xC0FFEE);
    let p0 = pair_correlation(&SystemKind::Doubling, &f, 0, &opts, &s).unwrap();
    assert!((p0.est[0] - oracle0).abs() <= 4.0 * p0.se[0], "lag0 {} ± {}", p0.est[0], p0.se[0]);
    let p1 = pair_correlation(&SystemKind::Doubling, &f, 1, &opts, &s).unwrap();
    assert!((p1.est[0] - oracle1).abs() <= 4.0 * p1.se[0]);
}

#[test]
fn fourth_correlation_against_doubling_oracle() {
    // μ(f⁴) = ∫cos⁴ = 3/8; μ(f²(f∘T)²) = ∫cos²2πx cos²4πx = 1/4
    let cos1 = |x: f64| (TWO_PI * x).cos();
    let oracle_f4 = common::simpson(|x| cos1(x).powi(4), 0.0, 1.0, 1024);
    assert!((oracle_f4 - 0.375).abs() < 1e-10);
    let oracle_mixed = common::simpson(
        |x| cos1(x).powi(2) * (2.0 * TWO_PI * x).cos().powi(2),
        0.0,
        1.0,
        1024,
    );
    assert!((oracle_mixed - 0.25).abs() < 1e-10);

    let f = cos1_doubling();
    let opts = McOptions::new(200_000);
    let s = Stream::new(0xC4);
    let e000 = fourth_correlation(&SystemKind::Doubling, &f, (0, 0, 0), &opts, &s).unwrap();
    assert!((e000.est[0] - oracle_f4).abs() <= 4.0 * e000.se[0]);
    let e011 = fourth_correlation(&SystemKind::Doubling, &f, (0, 1, 1), &opts, &s).unwrap();
    assert!((e011.est[0] - oracle_mixed).abs() <= 4.0 * e011.se[0]);
    // ordering contract
    assert!(fourth_correlation(&SystemKind::Doubling, &f, (2, 1, 3), &opts, &s).is_err());
}

#[test]
fn stationarity_through_the_statistics() {
    // pair correlation from origin 0 and from origin j agree within 4 joint SEs
    let f = cos1_doubling();
    let opts = McOptions::new(150_000);
    for (j, k) in [(3usize, 0usize), (5, 2)] {
        let a = pair_correlation_from_origin(&SystemKind::Doubling, &f, 0, k, &opts, &Stream::new(1)).unwrap();
        let b = pair_correlation_from_origin(&SystemKind::Doubling, &f, j, k, &opts, &Stream::new(2)).unwrap();
        let gap = (a.est[0] - b.est[0]).abs();
        let joint = (a.se[0].powi(2) + b.se[0].powi(2)).sqrt();
        assert!(gap <= 4.0 * joint, "origin {j} lag {k}: gap {gap:.2e}");
    }
}

#[test]
fn doubling_fit_falls_back_to_analytic_envelope() {
    // all lags k ≥ 1 vanish analytically: the fit must take the fallback
    // (λ = 1/2, C2 = L‖f‖∞) and scale by the safety factor
    let f = cos1_doubling();
    let opts = McOptions::new(1_000_000);
    let profile = estimate_profile(
        &SystemKind::Doubling,
        &f,
        8,
        &[(0, 0, 0), (0, 1, 1), (0, 1, 2), (2, 4, 8), (8, 8, 8)],
        &opts,
        &Stream::new(0xF17),
    )
    .unwrap();
    let fb = analytic_fallback(&SystemKind::Doubling, &f);
    assert!((fb.lambda - 0.5).abs() < 1e-15);
    assert!((fb.c2 - TWO_PI).abs() < 1e-12);
    let fit = fit_envelope(&profile, 2.0, Some(fb)).unwrap();
    assert_eq!(fit.source, FitSource::Fallback);
    assert!((fit.lambda - 0.5).abs() < 1e-15);
    assert!((fit.c2 - 2.0 * TWO_PI).abs() < 1e-9, "C2 = {}", fit.c2);
    // C4 must dominate the tabulated fourth moments: 3/8 at (0,0,0) with
    // safety 2 means at least 0.75
    assert!(fit.c4 >= 0.74 && fit.c4 < 3.0, "C4 = {}", fit.c4);

    // the fitted envelope dominates every tabulated pair value + 2 SE
    for pe in &profile.pair {
        let bound = fit.c2 * fit.lambda.powi(pe.lag as i32);
        assert!(pe.est[0].abs() + 2.0 * pe.se[0] <= bound, "lag {}", pe.lag);
    }

    // σ² from the empirical profile: 0.5 within 2 SE + tail bound
    let (sigma2, est) = sigma_scalar(SigmaSource::Profile(&profile), &fit, 1e-8).unwrap();
    let se0 = profile.pair[0].se[0];
    assert!(
        (sigma2 - 0.5).abs() <= 2.0 * se0 + est.tail_bound + 8.0 * profile.pair[1].se[0],
        "sigma2 = {sigma2}"
    );
    assert_eq!(est.pd, PdStatus::PositiveDefinite);
}

#[test]
fn toral_sigma_matches_character_oracle() {
    // oracle: brute-force 2D quadrature of μ(f_α f_β∘Tᵏ) for lags 0..4
    let cosx = |x: f64, _y: f64| (TWO_PI * x).cos();
    let cosy = |_x: f64, y: f64| (TWO_PI * y).cos();
    let m = [[2i64, 1], [1, 1]];
    for k in 0..5usize {
        for (a, b, expect) in [
            (0, 0, if k == 0 { 0.5 } else { 0.0 }),
            (1, 1, if k == 0 { 0.5 } else { 0.0 }),
            (0, 1, 0.0),
        ] {
            let g: &dyn Fn(f64, f64) -> f64 = if a == 0 { &cosx } else { &cosy };
            let h: &dyn Fn(f64, f64) -> f64 = if b == 0 { &cosx } else { &cosy };
            let v = common::toral_corr(m, k, g, h);
            assert!((v - expect).abs() < 1e-9, "oracle lag {k} ({a},{b}): {v}");
        }
    }

    let f = cos_pair_toral();
    let opts = McOptions::new(400_000);
    let profile = estimate_profile(&CAT, &f, 6, &[(0, 0, 0), (0, 1, 1)], &opts, &Stream::new(0xCA)).unwrap();
    let fit = fit_envelope(&profile, 2.0, Some(analytic_fallback(&CAT, &f))).unwrap();
    let est = sigma_matrix(SigmaSource::Profile(&profile), &fit, 1e-8).unwrap();
    let tol = 4.0 * profile.pair.iter().flat_map(|p| p.se.iter()).fold(0.0f64, |m, &x| m.max(x))
        * (1.0 + 2.0 * 6.0)
        + est.tail_bound;
    for a in 0..2 {
        for b in 0..2 {
            let expect = if a == b { 0.5 } else { 0.0 };
            assert!(
                (est.sigma.get(a, b) - expect).abs() <= tol,
                "Σ[{a}{b}] = {} vs {expect} (tol {tol:.2e})",
                est.sigma.get(a, b)
            );
        }
    }
    assert_eq!(est.pd, PdStatus::PositiveDefinite);
    // the analytic route gives the exact matrix
    let exact = sigma_matrix(
        SigmaSource::Analytic { pair: f.analytic_pair().unwrap() },
        &fit,
        1e-8,
    )
    .unwrap();
    assert!((exact.sigma.get(0, 0) - 0.5).abs() < 1e-15);
    assert!((exact.sigma.get(1, 1) - 0.5).abs() < 1e-15);
    assert!(exact.sigma.get(0, 1).abs() < 1e-15);
}

#[test]
fn variance_of_w_consistent_with_sigma() {
    // Var(W(N)) at N = 2¹² matches σ² = 1/2 within 4 SE (for f = cos 2πx all
    // lagged covariances vanish, so E W² = 1/2 exactly at every N)
    let f = cos1_doubling();
    let n = 1 << 12;
    let m = 20_000usize;
    let master = Stream::new(0x7A7);
    let mut mv = MeanVar::default();
    for i in 0..m {
        let orbit = orbit_values(&SystemKind::Doubling, &f, n, master.child(i as u64)).unwrap();
        let w: f64 = orbit.iter().sum::<f64>() / (n as f64).sqrt();
        mv.add(w * w);
    }
    assert!((mv.mean() - 0.5).abs() <= 4.0 * mv.se(), "Var(W) = {} ± {}", mv.mean(), mv.se());
}

/// The per-(case, L) class sizes stay below the counting estimates
/// 24N(K+1)(L+1) for case one and 32N(K+1)(L+1) for case two, across small
/// horizons and gaps.
#[test]
fn delta_case_cardinalities_within_counting_bounds() {
    use steindyn::correlations::{delta_case_counts, DeltaCase};
    for n_small in [8usize, 16, 24] {
        for gap in [0usize, 1, 3, 7] {
            let counts = delta_case_counts(n_small, gap).unwrap();
            let total: usize = counts.iter().map(|&(_, _, c)| c).sum();
            assert!(total > 0);
            for (case, l, c) in counts {
                let factor = match case {
                    DeltaCase::One => 24.0,
                    DeltaCase::Two => 32.0,
                };
                let bound = factor * n_small as f64 * (gap as f64 + 1.0) * (l as f64 + 1.0);
                assert!(
                    (c as f64) <= bound,
                    "N={n_small} K={gap} case {case:?} L={l}: {c} > {bound}"
                );
            }
        }
    }
    assert!(delta_case_counts(64, 1).is_err());
}

#[test]
fn delta_diagnostic_within_case_bounds() {
    let f = cos1_doubling();
    let opts = McOptions::new(200_000);
    let profile = estimate_profile(
        &SystemKind::Doubling,
        &f,
        8,
        &[(0, 0, 0), (0, 1, 1), (0, 1, 2)],
        &opts,
        &Stream::new(0xD17),
    )
    .unwrap();
    let fit = fit_envelope(&profile, 2.0, Some(analytic_fallback(&SystemKind::Doubling, &f))).unwrap();
    let deltas = delta_diagnostic(&SystemKind::Doubling, &f, 16, 1, &fit, &opts, &Stream::new(0xD18)).unwrap();
    assert!(!deltas.is_empty());
    let mut worst: f64 = 0.0;
    for d in &deltas {
        assert!(
            d.value.abs() <= d.bound,
            "Δ{:?} = {} exceeds case bound {}",
            d.indices,
            d.value,
            d.bound
        );
        worst = worst.max(d.value.abs() / d.bound);
    }
    // the diagnostic has to have some bite: the ratios are not all ~0
    assert!(worst > 1e-3, "worst ratio {worst}");
    // resource contract
    assert!(delta_diagnostic(&SystemKind::Doubling, &f, 64, 1, &fit, &opts, &Stream::new(1)).is_err());
}
