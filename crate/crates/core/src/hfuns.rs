//! Test-function panels with certified derivative metadata.
//!
//! Two families are used throughout:
//! - [`HFun1D`]: scalar test functions with a known Lipschitz constant, the
//!   class the 1D Wasserstein machinery quantifies over;
//! - [`HFun`]: multivariate three-times-differentiable test functions with
//!   upper bounds on every partial derivative up to order three, the class
//!   the smooth-metric machinery quantifies over.
//!
//! All stored norms are upper bounds on the true suprema; the test suites
//! verify this on dense grids.

use crate::numeric::linalg::SymMat;
use crate::rng::Stream;
use std::sync::OnceLock;

// ---------------------------------------------------------------------------
// 1D Lipschitz test functions
// ---------------------------------------------------------------------------

/// Scalar test function with absolutely continuous derivative and known
/// Lipschitz constant.
#[derive(Clone, Debug)]
pub enum HFun1D {
    Zero,
    /// h(w) = w
    Identity,
    Sin,
    Cos,
    /// sin(ω·w): Lipschitz constant |ω| (scaling-reduction tests)
    SinFreq { omega: f64 },
    /// Pseudo-Huber smoothing of |w|: δ(√(1+(w/δ)²) − 1)
    PseudoHuber { delta: f64 },
    /// tanh(a·w)/a, normalized to Lipschitz constant 1
    ScaledTanh { a: f64 },
}

impl HFun1D {
    pub fn eval(&self, w: f64) -> f64 {
        match self {
            HFun1D::Zero => 0.0,
            HFun1D::Identity => w,
            HFun1D::Sin => w.sin(),
            HFun1D::Cos => w.cos(),
            HFun1D::SinFreq { omega } => (omega * w).sin(),
            HFun1D::PseudoHuber { delta } => {
                let t = w / delta;
                delta * ((1.0 + t * t).sqrt() - 1.0)
            }
            HFun1D::ScaledTanh { a } => (a * w).tanh() / a,
        }
    }

    pub fn deriv(&self, w: f64) -> f64 {
        match self {
            HFun1D::Zero => 0.0,
            HFun1D::Identity => 1.0,
            HFun1D::Sin => w.cos(),
            HFun1D::Cos => -w.sin(),
            HFun1D::SinFreq { omega } => omega * (omega * w).cos(),
            HFun1D::PseudoHuber { delta } => {
                let t = w / delta;
                t / (1.0 + t * t).sqrt()
            }
            HFun1D::ScaledTanh { a } => {
                let c = (a * w).cosh();
                1.0 / (c * c)
            }
        }
    }

    /// The Lipschitz constant ‖h′‖∞ (exact for every member).
    pub fn lipschitz(&self) -> f64 {
        match self {
            HFun1D::Zero => 0.0,
            HFun1D::SinFreq { omega } => omega.abs(),
            _ => 1.0,
        }
    }

    /// ‖h‖∞; infinite for the unbounded members.
    pub fn sup_norm(&self) -> f64 {
        match self {
            HFun1D::Zero => 0.0,
            HFun1D::Identity | HFun1D::PseudoHuber { .. } => f64::INFINITY,
            HFun1D::Sin | HFun1D::Cos | HFun1D::SinFreq { .. } => 1.0,
            HFun1D::ScaledTanh { a } => 1.0 / a,
        }
    }

    pub fn name(&self) -> String {
        match self {
            HFun1D::Zero => "zero".into(),
            HFun1D::Identity => "identity".into(),
            HFun1D::Sin => "sin".into(),
            HFun1D::Cos => "cos".into(),
            HFun1D::SinFreq { omega } => format!("sin({omega}w)"),
            HFun1D::PseudoHuber { delta } => format!("pseudo_huber({delta})"),
            HFun1D::ScaledTanh { a } => format!("scaled_tanh({a})"),
        }
    }
}

/// The default panel of 1-Lipschitz test functions.
pub fn lipschitz_panel() -> Vec<HFun1D> {
    vec![
        HFun1D::Identity,
        HFun1D::Sin,
        HFun1D::Cos,
        HFun1D::PseudoHuber { delta: 1.0 },
        HFun1D::ScaledTanh { a: 1.0 },
        HFun1D::ScaledTanh { a: 4.0 },
    ]
}

// ---------------------------------------------------------------------------
// Multivariate C³ test functions
// ---------------------------------------------------------------------------

/// Three-times-differentiable test function h: ℝᵈ → ℝ with certified upper
/// bounds on all partial derivatives of orders one to three.
#[derive(Clone, Debug)]
pub enum HFun {
    Constant { d: usize, c: f64 },
    /// h(w) = v·w
    Linear { v: Vec<f64> },
    /// h(w) = tanh(a (w_axis − center))
    AxisTanh { d: usize, axis: usize, a: f64, center: f64 },
    /// h(w) = amp · cos(freq·w + phase)
    Trig { freq: Vec<f64>, phase: f64, amp: f64 },
    /// h(w) = w·Mw (unbounded value and gradient; bounded D², D³)
    Quadratic { m: SymMat },
    /// h(w) = r · tanh(c‖w‖² / r): a smooth saturation of the isotropic
    /// quadratic, bounded with all derivative norms certified.
    ClippedQuadratic { d: usize, c: f64, r: f64 },
}

// Universal profile maxima for the clipped quadratic (functions of u = c‖w‖²/r):
//   K1 = max √u sech²u                               (gradient entries)
//   K2 = max sech²u (1 + 4u tanh u)                  (Hessian diagonal; dominates off-diagonal)
//   K3 = max 16 u^{3/2} |sech²u(sech²u − 2tanh²u)| + 24 √u sech²u tanh u
fn profile_max(f: impl Fn(f64) -> f64) -> f64 {
    let mut best = 0.0f64;
    let mut arg = 0.0f64;
    let mut u = 0.0;
    while u <= 30.0 {
        let v = f(u);
        if v > best {
            best = v;
            arg = u;
        }
        u += 1e-3;
    }
    // golden-section refine around the scan winner
    let (mut lo, mut hi) = ((arg - 2e-3).max(0.0), arg + 2e-3);
    let g = 0.618_033_988_749_894_8;
    for _ in 0..80 {
        let m1 = hi - g * (hi - lo);
        let m2 = lo + g * (hi - lo);
        if f(m1) < f(m2) {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    let refined = f(0.5 * (lo + hi)).max(best);
    refined * (1.0 + 1e-9) + 1e-12
}

fn k1() -> f64 {
    static K: OnceLock<f64> = OnceLock::new();
    *K.get_or_init(|| profile_max(|u| u.sqrt() / u.cosh().powi(2)))
}

fn k2() -> f64 {
    static K: OnceLock<f64> = OnceLock::new();
    *K.get_or_init(|| {
        profile_max(|u| {
            let s = 1.0 / u.cosh().powi(2);
            s * (1.0 + 4.0 * u * u.tanh())
        })
    })
}

fn k3() -> f64 {
    static K: OnceLock<f64> = OnceLock::new();
    *K.get_or_init(|| {
        profile_max(|u| {
            let s = 1.0 / u.cosh().powi(2);
            let t = u.tanh();
            16.0 * u.powf(1.5) * (s * (s - 2.0 * t * t)).abs() + 24.0 * u.sqrt() * s * t
        })
    })
}

impl HFun {
    pub fn dim(&self) -> usize {
        match self {
            HFun::Constant { d, .. } => *d,
            HFun::Linear { v } => v.len(),
            HFun::AxisTanh { d, .. } => *d,
            HFun::Trig { freq, .. } => freq.len(),
            HFun::Quadratic { m } => m.dim(),
            HFun::ClippedQuadratic { d, .. } => *d,
        }
    }

    pub fn eval(&self, w: &[f64]) -> f64 {
        match self {
            HFun::Constant { c, .. } => *c,
            HFun::Linear { v } => v.iter().zip(w).map(|(a, b)| a * b).sum(),
            HFun::AxisTanh { axis, a, center, .. } => (a * (w[*axis] - center)).tanh(),
            HFun::Trig { freq, phase, amp } => {
                let arg: f64 = freq.iter().zip(w).map(|(k, x)| k * x).sum::<f64>() + phase;
                amp * arg.cos()
            }
            HFun::Quadratic { m } => m.quadratic_form(w),
            HFun::ClippedQuadratic { c, r, .. } => {
                let q: f64 = w.iter().map(|x| x * x).sum::<f64>() * c;
                r * (q / r).tanh()
            }
        }
    }

    pub fn grad(&self, w: &[f64], out: &mut [f64]) {
        let d = self.dim();
        out[..d].fill(0.0);
        match self {
            HFun::Constant { .. } => {}
            HFun::Linear { v } => out[..d].copy_from_slice(v),
            HFun::AxisTanh { axis, a, center, .. } => {
                let u = a * (w[*axis] - center);
                let sech2 = 1.0 / u.cosh().powi(2);
                out[*axis] = a * sech2;
            }
            HFun::Trig { freq, phase, amp } => {
                let arg: f64 = freq.iter().zip(w).map(|(k, x)| k * x).sum::<f64>() + phase;
                let s = -amp * arg.sin();
                for i in 0..d {
                    out[i] = s * freq[i];
                }
            }
            HFun::Quadratic { m } => {
                m.mat_vec(w, out);
                for x in out[..d].iter_mut() {
                    *x *= 2.0;
                }
            }
            HFun::ClippedQuadratic { c, r, .. } => {
                let u = w.iter().map(|x| x * x).sum::<f64>() * c / r;
                let s = 1.0 / u.cosh().powi(2);
                for i in 0..d {
                    out[i] = 2.0 * c * s * w[i];
                }
            }
        }
    }

    /// Hessian, row-major d×d.
    pub fn hess(&self, w: &[f64], out: &mut [f64]) {
        let d = self.dim();
        out[..d * d].fill(0.0);
        match self {
            HFun::Constant { .. } | HFun::Linear { .. } => {}
            HFun::AxisTanh { axis, a, center, .. } => {
                let u = a * (w[*axis] - center);
                let sech2 = 1.0 / u.cosh().powi(2);
                out[axis * d + axis] = -2.0 * a * a * sech2 * u.tanh();
            }
            HFun::Trig { freq, phase, amp } => {
                let arg: f64 = freq.iter().zip(w).map(|(k, x)| k * x).sum::<f64>() + phase;
                let cminus = -amp * arg.cos();
                for i in 0..d {
                    for j in 0..d {
                        out[i * d + j] = cminus * freq[i] * freq[j];
                    }
                }
            }
            HFun::Quadratic { m } => {
                for i in 0..d {
                    for j in 0..d {
                        out[i * d + j] = 2.0 * m.get(i, j);
                    }
                }
            }
            HFun::ClippedQuadratic { c, r, .. } => {
                let u = w.iter().map(|x| x * x).sum::<f64>() * c / r;
                let s = 1.0 / u.cosh().powi(2);
                let t = u.tanh();
                for i in 0..d {
                    for j in 0..d {
                        let mut v = -(8.0 * c * c / r) * s * t * w[i] * w[j];
                        if i == j {
                            v += 2.0 * c * s;
                        }
                        out[i * d + j] = v;
                    }
                }
            }
        }
    }

    /// Third derivative tensor, index (i, j, k) at `i*d*d + j*d + k`.
    pub fn third(&self, w: &[f64], out: &mut [f64]) {
        let d = self.dim();
        out[..d * d * d].fill(0.0);
        match self {
            HFun::Constant { .. } | HFun::Linear { .. } | HFun::Quadratic { .. } => {}
            HFun::AxisTanh { axis, a, center, .. } => {
                let u = a * (w[*axis] - center);
                let s = 1.0 / u.cosh().powi(2);
                let t = u.tanh();
                out[axis * d * d + axis * d + axis] = -2.0 * a.powi(3) * s * (s - 2.0 * t * t);
            }
            HFun::Trig { freq, phase, amp } => {
                let arg: f64 = freq.iter().zip(w).map(|(k, x)| k * x).sum::<f64>() + phase;
                let sp = amp * arg.sin();
                for i in 0..d {
                    for j in 0..d {
                        for k in 0..d {
                            out[i * d * d + j * d + k] = sp * freq[i] * freq[j] * freq[k];
                        }
                    }
                }
            }
            HFun::ClippedQuadratic { c, r, .. } => {
                let u = w.iter().map(|x| x * x).sum::<f64>() * c / r;
                let s = 1.0 / u.cosh().powi(2);
                let t = u.tanh();
                let cube = -(16.0 * c.powi(3) / (r * r)) * s * (s - 2.0 * t * t);
                let lin = -(8.0 * c * c / r) * s * t;
                for i in 0..d {
                    for j in 0..d {
                        for k in 0..d {
                            let mut v = cube * w[i] * w[j] * w[k];
                            if i == j {
                                v += lin * w[k];
                            }
                            if i == k {
                                v += lin * w[j];
                            }
                            if j == k {
                                v += lin * w[i];
                            }
                            out[i * d * d + j * d + k] = v;
                        }
                    }
                }
            }
        }
    }

    /// Upper bound on ‖∂^t h‖∞ for the multi-index `t` (length d, |t| in 1..=3).
    pub fn partial_norm(&self, t: &[usize]) -> f64 {
        let order: usize = t.iter().sum();
        debug_assert!((1..=3).contains(&order));
        match self {
            HFun::Constant { .. } => 0.0,
            HFun::Linear { v } => {
                if order == 1 {
                    let i = t.iter().position(|&x| x == 1).unwrap();
                    v[i].abs()
                } else {
                    0.0
                }
            }
            HFun::AxisTanh { axis, a, .. } => {
                if t[*axis] == order {
                    match order {
                        1 => a.abs(),
                        2 => 2.0 * a * a * 2.0 / (3.0 * 3.0f64.sqrt()),
                        _ => 2.0 * a.abs().powi(3),
                    }
                } else {
                    0.0
                }
            }
            HFun::Trig { freq, amp, .. } => {
                let mut p = amp.abs();
                for (ti, k) in t.iter().zip(freq) {
                    p *= k.abs().powi(*ti as i32);
                }
                p
            }
            HFun::Quadratic { m } => match order {
                1 => f64::INFINITY,
                2 => {
                    let i = t.iter().position(|&x| x >= 1).unwrap();
                    let j = i + t[i + 1..].iter().position(|&x| x >= 1).map_or(0, |p| p + 1);
                    let j = if t[i] == 2 { i } else { j };
                    2.0 * m.get(i, j).abs()
                }
                _ => 0.0,
            },
            HFun::ClippedQuadratic { c, r, .. } => match order {
                1 => 2.0 * (c * r).sqrt() * k1(),
                2 => 2.0 * c * k2(),
                _ => c.powf(1.5) / r.sqrt() * k3(),
            },
        }
    }

    /// ‖D^k h‖∞ upper bound: maximum of `partial_norm` over multi-indices of
    /// order k.
    pub fn deriv_norm(&self, k: usize) -> f64 {
        debug_assert!((1..=3).contains(&k));
        let d = self.dim();
        let mut best = 0.0f64;
        let mut t = vec![0usize; d];
        fn rec(t: &mut [usize], pos: usize, left: usize, best: &mut f64, f: &dyn Fn(&[usize]) -> f64) {
            if pos == t.len() {
                if left == 0 {
                    let v = f(t);
                    if v > *best {
                        *best = v;
                    }
                }
                return;
            }
            for x in 0..=left {
                t[pos] = x;
                rec(t, pos + 1, left - x, best, f);
            }
            t[pos] = 0;
        }
        rec(&mut t, 0, k, &mut best, &|t| self.partial_norm(t));
        best
    }

    /// ‖h‖∞; infinite for members unbounded in value.
    pub fn sup_norm(&self) -> f64 {
        match self {
            HFun::Constant { c, .. } => c.abs(),
            HFun::Linear { .. } | HFun::Quadratic { .. } => f64::INFINITY,
            HFun::AxisTanh { .. } => 1.0,
            HFun::Trig { amp, .. } => amp.abs(),
            HFun::ClippedQuadratic { r, .. } => r.abs(),
        }
    }

    pub fn name(&self) -> String {
        match self {
            HFun::Constant { c, .. } => format!("const({c})"),
            HFun::Linear { v } => format!("linear({v:?})"),
            HFun::AxisTanh { axis, a, center, .. } => format!("axis_tanh(axis={axis},a={a},c={center})"),
            HFun::Trig { freq, phase, amp } => format!("trig(freq={freq:?},phase={phase:.3},amp={amp})"),
            HFun::Quadratic { .. } => "quadratic".into(),
            HFun::ClippedQuadratic { c, r, .. } => format!("clipped_quadratic(c={c},r={r})"),
        }
    }
}

/// E[h(Z)] for Z ~ N(0, Σ) by tensor Gauss–Hermite after Cholesky whitening.
pub fn gaussian_expectation(h: &HFun, sigma: &SymMat, order: usize) -> crate::Result<f64> {
    use crate::numeric::quad::gauss_hermite;
    let d = h.dim();
    if sigma.dim() != d {
        return Err(crate::Error::Contract("dimension mismatch in gaussian_expectation".into()));
    }
    let chol = sigma.cholesky()?;
    let (hx, hw) = gauss_hermite(order);
    let norm = std::f64::consts::PI.powf(-(d as f64) / 2.0);
    let total = order.pow(d as u32);
    let mut z = vec![0.0; d];
    let mut x = vec![0.0; d];
    let mut acc = crate::numeric::sum::Kahan::default();
    for j in 0..total {
        let mut idx = j;
        let mut w = norm;
        for axis in 0..d {
            let i = idx % order;
            idx /= order;
            x[axis] = hx[i];
            w *= hw[i];
        }
        for r in 0..d {
            let mut s = 0.0;
            for c in 0..=r {
                s += chol[r * d + c] * x[c];
            }
            z[r] = std::f64::consts::SQRT_2 * s;
        }
        acc.add(w * h.eval(&z));
    }
    Ok(acc.value())
}

/// Default smooth-metric panel in dimension `d`: random linear directions,
/// per-axis tanh indicators, trigonometric bumps, and a clipped quadratic.
pub fn default_panel(d: usize, stream: &Stream) -> Vec<HFun> {
    let mut panel = Vec::new();
    let mut s = stream.clone();
    for _ in 0..3 {
        let mut v: Vec<f64> = (0..d).map(|_| 2.0 * s.next_f64() - 1.0).collect();
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-9 {
            v = (0..d).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect();
        } else {
            for x in &mut v {
                *x /= norm;
            }
        }
        panel.push(HFun::Linear { v });
    }
    for axis in 0..d {
        panel.push(HFun::AxisTanh { d, axis, a: 1.0, center: 0.0 });
    }
    let mut freq1 = vec![0.0; d];
    freq1[0] = 1.0;
    if d > 1 {
        freq1[1] = 0.5;
    }
    panel.push(HFun::Trig { freq: freq1, phase: 0.0, amp: 1.0 });
    let mut freq2 = vec![-0.75; d];
    freq2[0] = 2.0;
    panel.push(HFun::Trig { freq: freq2, phase: std::f64::consts::FRAC_PI_3, amp: 1.0 });
    panel.push(HFun::ClippedQuadratic { d, c: 1.0, r: 4.0 });
    panel
}
