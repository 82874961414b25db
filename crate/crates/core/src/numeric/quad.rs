//! Quadrature rules: Gauss–Legendre, Gauss–Hermite, composite panels, and an
//! adaptive Simpson integrator for the tail integrals of the Stein solutions.

use crate::{Error, Result};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
///
/// Newton iteration on the Legendre recurrence from the Chebyshev initial
/// guess; standard construction, accurate to machine precision for the orders
/// used here (≤ 64).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre P_n(x) and derivative by recurrence.
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Composite Gauss–Legendre over `[a, b]` split into `panels` equal panels
/// with `n` nodes each.
pub fn gl_integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, panels: usize, n: usize) -> f64 {
    let (nodes, weights) = gauss_legendre(n);
    let h = (b - a) / panels as f64;
    let mut acc = crate::numeric::sum::Kahan::default();
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let mid = lo + 0.5 * h;
        for (x, w) in nodes.iter().zip(&weights) {
            acc.add(w * 0.5 * h * f(mid + 0.5 * h * x));
        }
    }
    acc.value()
}

/// Gauss–Hermite nodes and weights for `∫ e^{-x²} f(x) dx ≈ Σ w_i f(x_i)`
/// (physicists' weight).
///
/// Roots of the orthonormal Hermite polynomial located by sign-change scan
/// plus Newton; weights are the Christoffel numbers `1 / Σ_{k<n} p_k(x)²`.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    // Orthonormal recurrence: sqrt((k+1)/2) p_{k+1} = x p_k - sqrt(k/2) p_{k-1}.
    let eval = |x: f64| -> (f64, f64) {
        let mut pkm1 = 0.0;
        let mut pk = std::f64::consts::PI.powf(-0.25);
        for k in 0..n {
            let a = ((k + 1) as f64 / 2.0).sqrt();
            let b = (k as f64 / 2.0).sqrt();
            let pkp1 = (x * pk - b * pkm1) / a;
            pkm1 = pk;
            pk = pkp1;
        }
        // p_n and p_{n-1}; derivative p_n' = sqrt(2n) p_{n-1}.
        (pk, (2.0 * n as f64).sqrt() * pkm1)
    };
    let bound = (2.0 * n as f64 + 1.0).sqrt() + 2.0;
    let step = 0.5 / (n as f64).sqrt().max(1.0);
    let mut roots = Vec::with_capacity(n);
    let mut x = -bound;
    let (mut fx, _) = eval(x);
    while x < bound && roots.len() < n {
        let xn = x + step;
        let (fxn, _) = eval(xn);
        if fx == 0.0 {
            roots.push(x);
        } else if fx * fxn < 0.0 {
            // Newton from the midpoint, bisection fallback.
            let (mut lo, mut hi) = (x, xn);
            let mut r = 0.5 * (lo + hi);
            for _ in 0..100 {
                let (pr, dpr) = eval(r);
                if pr == 0.0 {
                    break;
                }
                if pr * fx < 0.0 {
                    hi = r;
                } else {
                    lo = r;
                }
                let rn = r - pr / dpr;
                let rn = if rn > lo && rn < hi { rn } else { 0.5 * (lo + hi) };
                if (rn - r).abs() < 1e-15 * (1.0 + r.abs()) {
                    r = rn;
                    break;
                }
                r = rn;
            }
            roots.push(r);
        }
        x = xn;
        fx = fxn;
    }
    assert_eq!(roots.len(), n, "failed to locate all Hermite roots");
    let weights: Vec<f64> = roots
        .iter()
        .map(|&r| {
            let mut pkm1 = 0.0;
            let mut pk = std::f64::consts::PI.powf(-0.25);
            let mut s = pk * pk;
            for k in 0..n - 1 {
                let a = ((k + 1) as f64 / 2.0).sqrt();
                let b = (k as f64 / 2.0).sqrt();
                let pkp1 = (r * pk - b * pkm1) / a;
                pkm1 = pk;
                pk = pkp1;
                s += pk * pk;
            }
            1.0 / s
        })
        .collect();
    (roots, weights)
}

/// Adaptive Simpson integration of `f` over `[a, b]` to absolute tolerance
/// `tol`. Returns the value; errors out if the recursion cannot reach the
/// tolerance, reporting the tolerance actually achieved.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn rec<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
        err_acc: &mut f64,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let err = (left + right - whole) / 15.0;
        if err.abs() <= tol || depth >= 48 {
            *err_acc += err.abs();
            return left + right + err;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1, err_acc)
            + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1, err_acc)
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Contract("adaptive_simpson: endpoints must be finite".into()));
    }
    if a == b {
        return Ok(0.0);
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson(fa, fm, fb, a, b);
    let mut err_acc = 0.0;
    let v = rec(f, a, b, fa, fm, fb, whole, tol, 0, &mut err_acc);
    if !v.is_finite() {
        return Err(Error::Numerical(format!(
            "adaptive_simpson produced a non-finite value on [{a}, {b}]"
        )));
    }
    if err_acc > 20.0 * tol {
        return Err(Error::Numerical(format!(
            "adaptive_simpson reached tolerance {err_acc:.3e} (requested {tol:.3e})"
        )));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl_exact_on_polynomials() {
        let (nodes, weights) = gauss_legendre(8);
        // degree-15 exactness: ∫_{-1}^{1} x^14 dx = 2/15
        let v: f64 = nodes.iter().zip(&weights).map(|(x, w)| w * x.powi(14)).sum();
        assert!((v - 2.0 / 15.0).abs() < 1e-14);
        let s: f64 = weights.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
    }

    #[test]
    fn gl_composite_sin() {
        let v = gl_integrate(|x: f64| x.sin(), 0.0, std::f64::consts::PI, 4, 12);
        assert!((v - 2.0).abs() < 1e-13);
    }

    #[test]
    fn gh_moments() {
        let sqrt_pi = std::f64::consts::PI.sqrt();
        for n in [5usize, 20, 40] {
            let (nodes, weights) = gauss_hermite(n);
            let m0: f64 = weights.iter().sum();
            let m2: f64 = nodes.iter().zip(&weights).map(|(x, w)| w * x * x).sum();
            let m4: f64 = nodes.iter().zip(&weights).map(|(x, w)| w * x.powi(4)).sum();
            assert!((m0 - sqrt_pi).abs() < 1e-12, "n={n} m0");
            assert!((m2 - 0.5 * sqrt_pi).abs() < 1e-12, "n={n} m2");
            assert!((m4 - 0.75 * sqrt_pi).abs() < 1e-11, "n={n} m4");
        }
    }

    #[test]
    fn gh_integrates_gaussianized_cos() {
        // ∫ e^{-x²} cos(2x) dx = √π e^{-1}
        let (nodes, weights) = gauss_hermite(40);
        let v: f64 = nodes.iter().zip(&weights).map(|(x, w)| w * (2.0 * x).cos()).sum();
        let expect = std::f64::consts::PI.sqrt() * (-1.0f64).exp();
        assert!((v - expect).abs() < 1e-13);
    }

    #[test]
    fn simpson_smooth_and_tail() {
        let v = adaptive_simpson(&|x: f64| (-x * x / 2.0).exp(), 0.0, 10.0, 1e-12).unwrap();
        let expect = (std::f64::consts::PI / 2.0).sqrt();
        assert!((v - expect).abs() < 1e-10);
    }
}
