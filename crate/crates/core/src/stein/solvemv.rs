//! The multivariate Stein equation tr Σ D²A(w) − w·∇A(w) = h(w) − Φ_Σ(h),
//! solved through the Gaussian smoothing representation: A integrates the
//! centered Ornstein–Uhlenbeck interpolation of h against time.
//!
//! Numerics: the inner Gaussian expectation uses tensor Gauss–Hermite after
//! Cholesky whitening of Σ; the outer time integral is taken in the angular
//! variable u = sin θ, which makes every integrand analytic on [0, π/2] so a
//! fixed composite Gauss–Legendre rule converges to machine precision.
//! Derivatives of A differentiate under the integral, picking up one factor
//! of sin θ per order and one overall cos θ from the substitution.

use crate::hfuns::HFun;
use crate::numeric::linalg::SymMat;
use crate::numeric::quad::{gauss_hermite, gauss_legendre};
use crate::{Error, Result};

/// Quadrature controls: Gauss–Hermite order per axis and the composite
/// panel layout of the outer angular integral.
#[derive(Clone, Copy, Debug)]
pub struct QuadSpecMv {
    pub gh_order: usize,
    pub theta_panels: usize,
    pub theta_nodes: usize,
}

impl Default for QuadSpecMv {
    fn default() -> Self {
        QuadSpecMv { gh_order: 40, theta_panels: 12, theta_nodes: 16 }
    }
}

/// Hard cap on the ambient dimension: tensor Gauss–Hermite cost grows as
/// order^d.
pub const MAX_DIM: usize = 3;

#[derive(Clone, Debug)]
pub struct SteinSolutionMv {
    h: HFun,
    sigma: SymMat,
    phi_h: f64,
    quad: QuadSpecMv,
    /// Gaussian nodes: `gauss_pts[j*d..(j+1)*d]` is the j-th N(0, Σ) point.
    gauss_pts: Vec<f64>,
    gauss_wts: Vec<f64>,
    /// Angular nodes over [0, π/2] with combined panel weights.
    theta: Vec<(f64, f64)>,
}

/// All derivative data of A at one point.
#[derive(Clone, Debug)]
pub struct MvDerivs {
    pub a: f64,
    pub grad: Vec<f64>,
    pub hess: Vec<f64>,
    pub third: Option<Vec<f64>>,
}

/// Solves the multivariate equation for h with bounded derivatives up to
/// order three and positive-definite Σ (d ≤ 3).
pub fn solve_mv(h: &HFun, sigma: &SymMat, quad: QuadSpecMv) -> Result<SteinSolutionMv> {
    let d = h.dim();
    if sigma.dim() != d {
        return Err(Error::Contract(format!(
            "dimension mismatch: h has d={d}, Σ is {}×{}",
            sigma.dim(),
            sigma.dim()
        )));
    }
    if d > MAX_DIM {
        return Err(Error::Resource(format!(
            "dimension {d} exceeds the quadrature budget (d ≤ {MAX_DIM})"
        )));
    }
    // Orders two and three must be bounded (they control the smoothing
    // integrands); order one may be unbounded for the polynomial closed-form
    // cases, which tensor Gauss–Hermite integrates exactly.
    for k in 2..=3 {
        if !h.deriv_norm(k).is_finite() {
            return Err(Error::Contract(format!("‖D^{k} h‖∞ must be finite")));
        }
    }
    let chol = sigma.cholesky()?; // errors if not positive definite
    let (hx, hw) = gauss_hermite(quad.gh_order);
    let n = quad.gh_order;
    let total = n.pow(d as u32);
    let norm = std::f64::consts::PI.powf(-(d as f64) / 2.0);
    let mut gauss_pts = vec![0.0; total * d];
    let mut gauss_wts = vec![0.0; total];
    let sqrt2 = std::f64::consts::SQRT_2;
    for j in 0..total {
        let mut idx = j;
        let mut x = [0.0f64; MAX_DIM];
        let mut w = norm;
        for axis in 0..d {
            let i = idx % n;
            idx /= n;
            x[axis] = hx[i];
            w *= hw[i];
        }
        // z = √2 · L · x
        for r in 0..d {
            let mut s = 0.0;
            for c in 0..=r {
                s += chol[r * d + c] * x[c];
            }
            gauss_pts[j * d + r] = sqrt2 * s;
        }
        gauss_wts[j] = w;
    }
    let phi_h: f64 = (0..total).map(|j| gauss_wts[j] * h.eval(&gauss_pts[j * d..(j + 1) * d])).sum();

    let (gn, gw) = gauss_legendre(quad.theta_nodes);
    let half_pi = std::f64::consts::FRAC_PI_2;
    let hp = half_pi / quad.theta_panels as f64;
    let mut theta = Vec::with_capacity(quad.theta_panels * quad.theta_nodes);
    for p in 0..quad.theta_panels {
        let mid = (p as f64 + 0.5) * hp;
        for (x, w) in gn.iter().zip(&gw) {
            theta.push((mid + 0.5 * hp * x, 0.5 * hp * w));
        }
    }
    Ok(SteinSolutionMv { h: h.clone(), sigma: sigma.clone(), phi_h, quad, gauss_pts, gauss_wts, theta })
}

impl SteinSolutionMv {
    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    pub fn phi_h(&self) -> f64 {
        self.phi_h
    }

    pub fn sigma(&self) -> &SymMat {
        &self.sigma
    }

    pub fn quad_spec(&self) -> QuadSpecMv {
        self.quad
    }

    pub fn h(&self) -> &HFun {
        &self.h
    }

    /// A and its derivatives in one sweep over the quadrature grid.
    pub fn derivs(&self, w: &[f64], need_third: bool) -> MvDerivs {
        let d = self.dim();
        let total = self.gauss_wts.len();
        let mut a = 0.0;
        let mut grad = vec![0.0; d];
        let mut hess = vec![0.0; d * d];
        let mut third = if need_third { vec![0.0; d * d * d] } else { Vec::new() };
        let mut pos = vec![0.0; d];
        let mut gbuf = vec![0.0; d];
        let mut hbuf = vec![0.0; d * d];
        let mut tbuf = if need_third { vec![0.0; d * d * d] } else { Vec::new() };
        for &(th, wt) in &self.theta {
            let (sin_t, cos_t) = th.sin_cos();
            let mut ev = 0.0;
            let mut eg = vec![0.0; d];
            let mut eh = vec![0.0; d * d];
            let mut et = if need_third { vec![0.0; d * d * d] } else { Vec::new() };
            for j in 0..total {
                let z = &self.gauss_pts[j * d..(j + 1) * d];
                let gw = self.gauss_wts[j];
                for i in 0..d {
                    pos[i] = sin_t * w[i] + cos_t * z[i];
                }
                ev += gw * self.h.eval(&pos);
                self.h.grad(&pos, &mut gbuf);
                for i in 0..d {
                    eg[i] += gw * gbuf[i];
                }
                self.h.hess(&pos, &mut hbuf);
                for i in 0..d * d {
                    eh[i] += gw * hbuf[i];
                }
                if need_third {
                    self.h.third(&pos, &mut tbuf);
                    for i in 0..d * d * d {
                        et[i] += gw * tbuf[i];
                    }
                }
            }
            // A: −∫ (E h − Φ(h)) cosθ/sinθ dθ; ∇A: −∫ E∇h cosθ dθ;
            // D²A: −∫ E D²h sinθ cosθ dθ; D³A: −∫ E D³h sin²θ cosθ dθ.
            a -= wt * (ev - self.phi_h) * cos_t / sin_t;
            for i in 0..d {
                grad[i] -= wt * eg[i] * cos_t;
            }
            for i in 0..d * d {
                hess[i] -= wt * eh[i] * sin_t * cos_t;
            }
            if need_third {
                for i in 0..d * d * d {
                    third[i] -= wt * et[i] * sin_t * sin_t * cos_t;
                }
            }
        }
        MvDerivs { a, grad, hess, third: if need_third { Some(third) } else { None } }
    }

    pub fn a(&self, w: &[f64]) -> f64 {
        self.derivs(w, false).a
    }

    pub fn grad_a(&self, w: &[f64]) -> Vec<f64> {
        self.derivs(w, false).grad
    }

    pub fn hess_a(&self, w: &[f64]) -> Vec<f64> {
        self.derivs(w, false).hess
    }
}

/// The defect tr Σ D²A(w) − w·∇A(w) − (h(w) − Φ_Σ(h)).
pub fn residual_mv(sol: &SteinSolutionMv, w: &[f64]) -> f64 {
    let d = sol.dim();
    let parts = sol.derivs(w, false);
    let mut tr = 0.0;
    for i in 0..d {
        for j in 0..d {
            tr += sol.sigma().get(i, j) * parts.hess[j * d + i];
        }
    }
    let wdot: f64 = w.iter().zip(&parts.grad).map(|(a, b)| a * b).sum();
    tr - wdot - (sol.h().eval(w) - sol.phi_h())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_h_closed_form() {
        // h(w) = v·w ⇒ A(w) = −v·w, residual 0
        let h = HFun::Linear { v: vec![0.75, -0.5] };
        let sol = solve_mv(&h, &SymMat::identity(2), QuadSpecMv::default()).unwrap();
        assert!(sol.phi_h().abs() < 1e-12);
        for w in [[0.0, 0.0], [1.0, 2.0], [-0.3, 0.9]] {
            let expect = -(0.75 * w[0] - 0.5 * w[1]);
            assert!((sol.a(&w) - expect).abs() < 1e-9, "A({w:?}) = {}", sol.a(&w));
            assert!(residual_mv(&sol, &w).abs() < 1e-9);
        }
    }

    #[test]
    fn quadratic_h_closed_form() {
        // h(w) = w·Mw with Σ = I ⇒ Φ(h) = tr M, A = −(w·Mw − tr M)/2
        let m = SymMat::from_rows(2, &[1.0, 0.25, 0.25, 0.5]);
        let h = HFun::Quadratic { m: m.clone() };
        let sol = solve_mv(&h, &SymMat::identity(2), QuadSpecMv::default()).unwrap();
        assert!((sol.phi_h() - m.trace()).abs() < 1e-10);
        for w in [[0.4, -1.2], [2.0, 1.0], [0.0, 3.0]] {
            let q = m.quadratic_form(&w);
            let expect = -0.5 * (q - m.trace());
            assert!((sol.a(&w) - expect).abs() < 1e-8, "A({w:?}) = {} vs {expect}", sol.a(&w));
            assert!(residual_mv(&sol, &w).abs() < 1e-8);
        }
    }

    #[test]
    fn constant_h_gives_zero() {
        let h = HFun::Constant { d: 2, c: 3.0 };
        let sol = solve_mv(&h, &SymMat::identity(2), QuadSpecMv::default()).unwrap();
        assert!((sol.phi_h() - 3.0).abs() < 1e-12);
        assert!(sol.a(&[0.7, -0.2]).abs() < 1e-10);
        assert!(residual_mv(&sol, &[0.7, -0.2]).abs() < 1e-10);
    }

    #[test]
    fn rejects_bad_inputs() {
        let h = HFun::Linear { v: vec![1.0, 0.0] };
        // non-PD sigma
        let bad = SymMat::from_rows(2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(solve_mv(&h, &bad, QuadSpecMv::default()).is_err());
        // dimension mismatch
        assert!(solve_mv(&h, &SymMat::identity(3), QuadSpecMv::default()).is_err());
    }
}
