//! The conditioning scheme on the doubling map: pushforward exactness of the
//! dyadic cells, the per-cell oscillation bound on the past sum, the error
//! terms and their identities, and the decorrelation checks.

mod common;

use steindyn::correlations::heuristic_rho_tilde;
use steindyn::hfuns::HFun1D;
use steindyn::mc::McOptions;
use steindyn::observables::cos1_doubling;
use steindyn::rng::Stream;
use steindyn::scheme::{
    conditional_constants, decorrelation_check, gapped_decorrelation_check, gapped_decorrelation_rhs, scheme_terms,
    DyadicPartition,
};
use steindyn::systems::SystemKind;

/// Tⁿ pushes every generation-n conditional measure to Lebesgue exactly:
/// Kolmogorov–Smirnov statistic below 1.63/√M per sampled cell.
#[test]
fn pushforward_of_cells_is_uniform() {
    let n = 6usize;
    let part = DyadicPartition::new(n).unwrap();
    let m = 100_000usize;
    let master = Stream::new(0x9A);
    for &q in &[1usize, 13, 64] {
        let mut values: Vec<f64> = (0..m)
            .map(|i| {
                let mut p = part.sample_conditional(q, master.child((q * m + i) as u64));
                p.reserve_digits(n + 64);
                p.value_at(n)
            })
            .collect();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut ks: f64 = 0.0;
        for (i, &v) in values.iter().enumerate() {
            ks = ks.max(((i + 1) as f64 / m as f64 - v).abs());
            ks = ks.max((i as f64 / m as f64 - v).abs());
        }
        let threshold = 1.63 / (m as f64).sqrt();
        assert!(ks < threshold, "cell {q}: KS {ks:.5} vs {threshold:.5}");
    }
}

/// Per-cell oscillation of the past sum: sup |Wⁿ₋ − c_q| ≤ L/(√N·2ᴷ),
/// checked on a dense grid in sampled cells across several (N, K, n).
#[test]
fn past_sum_oscillation_bound() {
    let f = cos1_doubling();
    let lip = f.lipschitz();
    for (n_total, gap, center) in [(64usize, 0usize, 6usize), (64, 2, 6), (256, 1, 8), (256, 4, 5)] {
        let c = conditional_constants(&f, n_total, gap, center).unwrap();
        let part = DyadicPartition::new(center).unwrap();
        let bound = lip / ((n_total as f64).sqrt() * 2.0f64.powi(gap as i32));
        let scale = 1.0 / (n_total as f64).sqrt();
        let past = center.saturating_sub(gap);
        let cells = [1usize, part.cell_count() / 2, part.cell_count()];
        for &q in &cells {
            let (lo, hi) = part.interval(q);
            let mut sup: f64 = 0.0;
            let grid = 2000;
            for i in 0..grid {
                let x = lo + (hi - lo) * (i as f64 + 0.5) / grid as f64;
                let mut y = x;
                let mut s = 0.0;
                for _ in 0..past {
                    s += f.eval1(&[y]);
                    y = (2.0 * y).fract();
                }
                sup = sup.max((s * scale - c[q - 1]).abs());
            }
            assert!(
                sup <= bound + 1e-12,
                "N={n_total} K={gap} n={center} cell {q}: osc {sup:.3e} vs {bound:.3e}"
            );
        }
    }
}

/// The three error terms: E2 vanishes within noise (the pushforward identity
/// is exact), |E1| obeys the conditioning estimate, and the triangle
/// decomposition closes.
#[test]
fn scheme_error_terms() {
    let f = cos1_doubling();
    let a = HFun1D::Sin;
    let opts = McOptions::new(150_000);
    for (n_total, gap, center) in [(64usize, 2usize, 10usize), (64, 4, 10), (256, 3, 12)] {
        let r = scheme_terms(&f, &a, n_total, gap, center, &opts, &Stream::new(0x5C3)).unwrap();
        // Step 2 is exact for the doubling map at generation n
        assert!(
            r.e2.value.abs() <= 4.0 * r.e2.se,
            "E2 = {} ± {} at (N={n_total}, K={gap}, n={center})",
            r.e2.value,
            r.e2.se
        );
        // Step 1 conditioning estimate
        let e1_bound = f.lipschitz() * a.lipschitz() * f.sup_norm()
            / ((n_total as f64).sqrt() * 2.0f64.powi(gap as i32));
        assert!(
            r.e1.value.abs() <= e1_bound + 4.0 * r.e1.se,
            "E1 = {} vs {e1_bound}",
            r.e1.value
        );
        // δ is dominated by the oscillation bound as well
        assert!(r.delta <= f.lipschitz() / ((n_total as f64).sqrt() * 2.0f64.powi(gap as i32)) + 1e-12);
        // triangle: lhs − (E1 + E3) is the (zero-mean) E2 estimate
        let gap_triangle = (r.lhs.value - (r.e1.value + r.e2.value + r.e3.value)).abs();
        assert!(gap_triangle < 1e-12, "per-sample identity broke: {gap_triangle}");
        let resid = (r.lhs.value - (r.e1.value + r.e3.value)).abs();
        let combined = (r.lhs.se.powi(2) + r.e1.se.powi(2) + r.e3.se.powi(2)).sqrt();
        assert!(resid <= 4.0 * (combined + r.e2.se), "triangle: {resid}");
        // and the decorrelation inequality itself
        assert!(r.lhs.value.abs() <= r.rhs + 4.0 * r.lhs.se);
    }
}

/// The certified envelope: ρ̃(K) = L(½ + ‖f‖∞)2⁻ᴷ matches the rhs structure
/// (for A with ‖A‖∞ = ‖A′‖∞ = 1 and N → ∞ the certified bound approaches
/// L·½·2⁻ᴷ ≤ ρ̃(K)).
#[test]
fn rho_tilde_envelope_values() {
    let f = cos1_doubling();
    let rt = heuristic_rho_tilde(&SystemKind::Doubling, &f);
    let three_pi = 3.0 * std::f64::consts::PI;
    assert!((rt.c - three_pi).abs() < 1e-12, "C̃ = {}", rt.c);
    assert!((rt.lam - 0.5).abs() < 1e-15);
    for k in [0usize, 3, 8] {
        assert!((rt.at(k) - three_pi * 0.5f64.powi(k as i32)).abs() < 1e-12);
        // the certified bound for A = sin is below the envelope once N ≥ 5
        let rhs = gapped_decorrelation_rhs(&f, &HFun1D::Sin, 64, k);
        assert!(rhs <= rt.at(k));
    }
}

/// Dense Monte Carlo inequality check at small N, including the extreme gap
/// K = N−1.
#[test]
fn gapped_decorrelation_small_n_dense() {
    let f = cos1_doubling();
    let a = HFun1D::Sin;
    let opts = McOptions::new(1_000_000);
    for (n_total, gap, center) in [(16usize, 15usize, 7usize), (64, 63, 31), (64, 6, 0)] {
        let cell = gapped_decorrelation_check(&f, &a, n_total, gap, center, &opts, &Stream::new(0x71C)).unwrap();
        assert!(
            cell.pass,
            "N={n_total} K={gap} n={center}: lhs {} vs rhs {} (se {})",
            cell.lhs_abs,
            cell.rhs,
            cell.se
        );
    }
}

/// Zero observable: everything collapses to zero but the report stays sane.
#[test]
fn gapped_decorrelation_zero_observable() {
    let zero = steindyn::observables::Observable::custom(1, 1, |_, o| o[0] = 0.0, 0.0, 0.0, "zero");
    let cell = gapped_decorrelation_check(&zero, &HFun1D::Sin, 32, 3, 5, &McOptions::new(5000), &Stream::new(2)).unwrap();
    assert_eq!(cell.lhs_abs, 0.0);
    assert!(cell.pass);
}

/// Dual-route E3: the Monte Carlo estimate of the decorrelation term agrees
/// with its exact branch-wise quadrature at a quadrature-tractable size.
/// The integrand for cell q is f(y)·A(c_q + W̃ⁿ₊(T^{K+1}y)), piecewise
/// smooth with 2^{N−n−1} breakpoints, integrated branch by branch; the two
/// independent estimates guard against rare-event noise.
#[test]
fn e3_monte_carlo_matches_quadrature() {
    let f = cos1_doubling();
    let a = HFun1D::Sin;
    let (n_total, gap, center) = (12usize, 2usize, 6usize);
    let c_q = conditional_constants(&f, n_total, gap, center).unwrap();
    let part = DyadicPartition::new(center).unwrap();
    let scale = 1.0 / (n_total as f64).sqrt();
    let future_len = n_total - center - gap - 1; // terms of W̃ⁿ₊
    // exact: Σ_q λ_q ∫ f(y) A(c_q + W̃ⁿ₊(T^{K+1}y)) dy over 2^{K+1+future_len}
    // branches (the full breakpoint structure of the composed map)
    let branches = 1usize << (gap + future_len);
    let width = 1.0 / branches as f64;
    let (nodes, weights) = steindyn::numeric::quad::gauss_legendre(8);
    let mut exact = 0.0;
    for q in 1..=part.cell_count() {
        let mut cell_acc = 0.0;
        for b in 0..branches {
            let lo = b as f64 * width;
            for (x, w) in nodes.iter().zip(&weights) {
                let y = lo + 0.5 * width * (x + 1.0);
                let mut z = y;
                for _ in 0..=gap {
                    z = (2.0 * z).fract();
                }
                let mut fut = 0.0;
                let mut zz = z;
                for _ in 0..future_len {
                    fut += f.eval1(&[zz]);
                    zz = (2.0 * zz).fract();
                }
                cell_acc += 0.5 * w * width * f.eval1(&[y]) * a.eval(c_q[q - 1] + fut * scale);
            }
        }
        exact += part.weight() * cell_acc;
    }
    let r = scheme_terms(&f, &a, n_total, gap, center, &McOptions::new(400_000), &Stream::new(0xE3)).unwrap();
    assert!(
        (r.e3.value - exact).abs() <= 4.0 * r.e3.se + 1e-9,
        "E3 Monte Carlo {} ± {} vs quadrature {exact}",
        r.e3.value,
        r.e3.se
    );
}

/// Branch-wise decorrelation sweep: |μ(f·Ã∘Tʲ)| ≤ L‖Ã‖∞2⁻ʲ for a small
/// panel of Ã and j up to 12, with the quadrature oracle cross-checking a
/// nontrivial case.
#[test]
fn decorrelation_sweep() {
    let f = cos1_doubling();
    let tildes: Vec<(&str, Box<dyn Fn(f64) -> f64>, f64)> = vec![
        ("x", Box::new(|t: f64| t), 1.0),
        ("x^2", Box::new(|t: f64| t * t), 1.0),
        ("sin4pix", Box::new(|t: f64| (4.0 * std::f64::consts::PI * t).sin()), 1.0),
        ("step-smooth", Box::new(|t: f64| (8.0 * (t - 0.5)).tanh()), 1.0),
    ];
    for (name, a_tilde, sup) in &tildes {
        for j in [1usize, 2, 4, 8, 12] {
            let (est, bound, pass) = decorrelation_check(&f, a_tilde, *sup, j).unwrap();
            assert!(pass, "{name} j={j}: {est} vs {bound}");
        }
    }
    // oracle cross-check: μ(f · Ã∘T) for Ã = x² against the independent rule
    let oracle = common::doubling_corr(
        |x| (2.0 * std::f64::consts::PI * x).cos(),
        |t| t * t,
        1,
    );
    let (est, _, _) = decorrelation_check(&f, |t| t * t, 1.0, 1).unwrap();
    assert!((est - oracle).abs() < 1e-9, "{est} vs oracle {oracle}");
}
