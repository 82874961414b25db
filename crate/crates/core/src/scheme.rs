//! The dyadic conditioning scheme on the doubling map: partition the circle
//! into generation-n dyadic cells, freeze the past sum Wⁿ₋ at its
//! conditional mean c_q per cell, and split the decorrelation quantity
//! μ(fⁿ A(Wⁿ)) into the three error terms
//!
//!   E1: replacing Wⁿ₋ by the per-cell constants,
//!   E2: replacing each conditional measure by μ after n pushforwards
//!       (identically zero for the doubling map at generation n, since Tⁿ
//!       maps every cell affinely onto the circle),
//!   E3: the remaining decorrelation against μ across the K+1 time gap.
//!
//! All estimates operate on the doubling map with scalar observables.

use crate::hfuns::HFun1D;
use crate::mc::{run_chunks, McOptions};
use crate::numeric::quad::gauss_legendre;
use crate::numeric::sum::{Kahan, MeanVar};
use crate::observables::Observable;
use crate::rng::Stream;
use crate::systems::BitPoint;
use crate::{Error, Result};

/// Hard cap on the partition generation: 2ⁿ cells.
pub const MAX_GENERATION: usize = 24;

/// The generation-n dyadic partition of [0, 1): cells ((q−1)2⁻ⁿ, q2⁻ⁿ) for
/// q = 1..2ⁿ, each of weight 2⁻ⁿ.
#[derive(Clone, Copy, Debug)]
pub struct DyadicPartition {
    pub generation: usize,
}

impl DyadicPartition {
    pub fn new(generation: usize) -> Result<Self> {
        if generation > MAX_GENERATION {
            return Err(Error::Resource(format!(
                "generation {generation} means 2^{generation} cells; cap is {MAX_GENERATION}"
            )));
        }
        Ok(DyadicPartition { generation })
    }

    pub fn cell_count(&self) -> usize {
        1usize << self.generation
    }

    pub fn weight(&self) -> f64 {
        1.0 / self.cell_count() as f64
    }

    /// Cell interval (1-based q).
    pub fn interval(&self, q: usize) -> (f64, f64) {
        let w = self.weight();
        ((q - 1) as f64 * w, q as f64 * w)
    }

    /// 1-based index of the cell containing x ∈ [0, 1).
    pub fn cell_of(&self, x: f64) -> usize {
        ((x * self.cell_count() as f64) as usize).min(self.cell_count() - 1) + 1
    }

    /// Exact conditional sampling from ν_q: fix the cell's leading digits,
    /// then fresh random digits.
    pub fn sample_conditional(&self, q: usize, stream: Stream) -> BitPoint {
        let n = self.generation;
        let bits: Vec<u8> = (0..n).map(|i| (((q - 1) >> (n - 1 - i)) & 1) as u8).collect();
        BitPoint::with_prefix(&bits, stream)
    }
}

/// Per-cell conditional means c_q = ν_q(Wⁿ₋) by per-cell Gauss–Legendre
/// quadrature (the integrand is smooth on each generation-n cell because the
/// past sum only applies Tᵏ for k < n). The partition generation equals n.
pub fn conditional_constants(
    f: &Observable,
    n_total: usize,
    gap_radius: usize,
    center: usize,
) -> Result<Vec<f64>> {
    if f.dim() != 1 || f.coord_dim() != 1 {
        return Err(Error::Contract("the conditioning scheme handles scalar observables on [0,1)".into()));
    }
    if center >= n_total {
        return Err(Error::Contract(format!("n={center} must be < N={n_total}")));
    }
    let part = DyadicPartition::new(center)?;
    let cells = part.cell_count();
    // past sum covers k ≤ n−K−1
    if gap_radius >= center {
        return Ok(vec![0.0; cells]);
    }
    let k_past = center - gap_radius; // number of past terms: k = 0..k_past-1
    let scale = 1.0 / (n_total as f64).sqrt();
    let (nodes, weights) = gauss_legendre(12);
    let w_cell = part.weight();
    let mut out = vec![0.0; cells];
    for (q0, slot) in out.iter_mut().enumerate() {
        let (lo, _hi) = part.interval(q0 + 1);
        let mut acc = Kahan::default();
        for (x, w) in nodes.iter().zip(&weights) {
            // map [-1,1] to the cell
            let t = lo + 0.5 * w_cell * (x + 1.0);
            let mut s = Kahan::default();
            let mut y = t;
            for _ in 0..k_past {
                s.add(f.eval1(&[y]));
                y = (2.0 * y).fract();
            }
            acc.add(0.5 * w * s.value());
        }
        // 0.5·Σw f = cell-average (GL weights sum to 2)
        *slot = acc.value() * scale;
    }
    Ok(out)
}

/// A Monte Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, Default)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

/// The itemized scheme report for one (N, K, n).
#[derive(Clone, Debug)]
pub struct SchemeReport {
    pub n_total: usize,
    pub gap_radius: usize,
    pub center: usize,
    pub e1: Estimate,
    pub e2: Estimate,
    pub e3: Estimate,
    /// δ = E|Wⁿ₋ − c_q|: the conditioning quality of Step 1.
    pub delta: f64,
    /// Monte Carlo estimate of μ(fⁿ A(Wⁿ)) (signed; the decorrelation
    /// inequality bounds its absolute value).
    pub lhs: Estimate,
    /// The certified bound L(‖A‖∞/2 + ‖A′‖∞‖f‖∞/√N)·2⁻ᴷ.
    pub rhs: f64,
}

/// The certified decorrelation bound for the doubling map:
/// L(‖A‖∞/2 + ‖A′‖∞‖f‖∞/√N)·2⁻ᴷ.
pub fn gapped_decorrelation_rhs(f: &Observable, a: &HFun1D, n_total: usize, gap_radius: usize) -> f64 {
    f.lipschitz() * (a.sup_norm() / 2.0 + a.lipschitz() * f.sup_norm() / (n_total as f64).sqrt())
        * 0.5f64.powi(gap_radius as i32)
}

struct SchemeAcc {
    lhs: MeanVar,
    e1: MeanVar,
    e2: MeanVar,
    e3: MeanVar,
    delta: MeanVar,
}

impl SchemeAcc {
    fn new() -> Self {
        SchemeAcc {
            lhs: MeanVar::default(),
            e1: MeanVar::default(),
            e2: MeanVar::default(),
            e3: MeanVar::default(),
            delta: MeanVar::default(),
        }
    }
    fn merge(&mut self, o: &SchemeAcc) {
        self.lhs.merge(&o.lhs);
        self.e1.merge(&o.e1);
        self.e2.merge(&o.e2);
        self.e3.merge(&o.e3);
        self.delta.merge(&o.delta);
    }
}

/// Estimates the scheme terms for one configuration.
///
/// Sampling: x ~ μ gives the cell q(x) (its weight is the uniform cell law)
/// and the same x feeds the lhs and E1; an independent y ~ μ paired with
/// q(x) gives the E3 sample f(y)·Ã_q(T^{K+1}y), and E2 is the matched
/// difference, so lhs = E1 + E2 + E3 holds sample by sample.
pub fn scheme_terms(
    f: &Observable,
    a: &HFun1D,
    n_total: usize,
    gap_radius: usize,
    center: usize,
    opts: &McOptions,
    stream: &Stream,
) -> Result<SchemeReport> {
    if f.dim() != 1 || f.coord_dim() != 1 {
        return Err(Error::Contract("the conditioning scheme handles scalar observables on [0,1)".into()));
    }
    if !a.sup_norm().is_finite() {
        return Err(Error::Contract("A must be bounded with a bounded derivative".into()));
    }
    if center >= n_total || gap_radius >= n_total {
        return Err(Error::Contract(format!(
            "scheme requires n, K < N, got n={center}, K={gap_radius}, N={n_total}"
        )));
    }
    let part = DyadicPartition::new(center)?;
    let c_q = conditional_constants(f, n_total, gap_radius, center)?;
    let scale = 1.0 / (n_total as f64).sqrt();
    // window [lo, hi] = [max(0, n−K), min(N−1, n+K)]
    let lo = center.saturating_sub(gap_radius);
    let hi = (center + gap_radius).min(n_total - 1);
    // future part of Ã_q: W̃ⁿ₊(z) = N^{-1/2} Σ_{k=0}^{N−n−K−2} f(Tᵏ z),
    // evaluated at z = T^{K+1} y.
    let future_len = (n_total as i64 - center as i64 - gap_radius as i64 - 1).max(0) as usize;
    let master = stream.child(0x5C);
    let chunks = run_chunks(opts.samples, opts.workers, opts.chunk, |_c, start, count| {
        let mut acc = SchemeAcc::new();
        let mut vals = vec![0.0; n_total];
        let mut yvals = vec![0.0; gap_radius + 1 + future_len];
        for j in 0..count {
            let s = master.child((start + j) as u64);
            let mut px = BitPoint::sample(s.child(0));
            px.reserve_digits(n_total + 64);
            let x0 = px.value();
            let q = part.cell_of(x0);
            let mut total = Kahan::default();
            let mut winpart = Kahan::default();
            let mut minus = Kahan::default();
            let mut plus = Kahan::default();
            for (k, v) in vals.iter_mut().enumerate() {
                *v = f.eval1(&[px.value_at(k)]);
                total.add(*v);
                if k >= lo && k <= hi {
                    winpart.add(*v);
                } else if k < lo {
                    minus.add(*v);
                } else {
                    plus.add(*v);
                }
            }
            let wn = (minus.value() + plus.value()) * scale;
            let wn_minus = minus.value() * scale;
            let wn_plus = plus.value() * scale;
            let fn_x = vals[center];
            let lhs_i = fn_x * a.eval(wn);
            let frozen_i = fn_x * a.eval(c_q[q - 1] + wn_plus);
            // independent y for the E2/E3 pieces
            let mut py = BitPoint::sample(s.child(1));
            py.reserve_digits(yvals.len() + 64);
            for (k, v) in yvals.iter_mut().enumerate() {
                *v = f.eval1(&[py.value_at(k)]);
            }
            let mut fut = Kahan::default();
            for v in &yvals[gap_radius + 1..] {
                fut.add(*v);
            }
            let e3_i = yvals[0] * a.eval(c_q[q - 1] + fut.value() * scale);
            acc.lhs.add(lhs_i);
            acc.e1.add(lhs_i - frozen_i);
            acc.e2.add(frozen_i - e3_i);
            acc.e3.add(e3_i);
            acc.delta.add((wn_minus - c_q[q - 1]).abs());
        }
        acc
    });
    let mut acc = SchemeAcc::new();
    for c in chunks {
        acc.merge(&c);
    }
    Ok(SchemeReport {
        n_total,
        gap_radius,
        center,
        e1: Estimate { value: acc.e1.mean(), se: acc.e1.se() },
        e2: Estimate { value: acc.e2.mean(), se: acc.e2.se() },
        e3: Estimate { value: acc.e3.mean(), se: acc.e3.se() },
        delta: acc.delta.mean(),
        lhs: Estimate { value: acc.lhs.mean(), se: acc.lhs.se() },
        rhs: gapped_decorrelation_rhs(f, a, n_total, gap_radius),
    })
}

/// One cell of a gapped-decorrelation sweep.
#[derive(Clone, Debug)]
pub struct GappedDecorrelationCell {
    pub center: usize,
    pub gap_radius: usize,
    pub lhs_abs: f64,
    pub se: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// Checks |μ(fⁿ A(Wⁿ))| ≤ RHS for many (n, K) cells over a shared set of
/// orbits of length N (one simulation per sample serves every cell).
pub fn gapped_decorrelation_sweep(
    f: &Observable,
    a: &HFun1D,
    n_total: usize,
    cells: &[(usize, usize)],
    opts: &McOptions,
    stream: &Stream,
) -> Result<Vec<GappedDecorrelationCell>> {
    if f.dim() != 1 || f.coord_dim() != 1 {
        return Err(Error::Contract("the scheme handles scalar observables on [0,1)".into()));
    }
    for &(n, k) in cells {
        if n >= n_total || k >= n_total {
            return Err(Error::Contract(format!("cell (n={n}, K={k}) out of range for N={n_total}")));
        }
    }
    let master = stream.child(0x71);
    let scale = 1.0 / (n_total as f64).sqrt();
    let chunks = run_chunks(opts.samples, opts.workers, opts.chunk, |_c, start, count| {
        let mut acc = vec![MeanVar::default(); cells.len()];
        let mut vals = vec![0.0; n_total];
        let mut prefix = vec![0.0; n_total + 1];
        for j in 0..count {
            let s = master.child((start + j) as u64);
            let mut px = BitPoint::sample(s);
            px.reserve_digits(n_total + 64);
            let mut run = Kahan::default();
            for k in 0..n_total {
                vals[k] = f.eval1(&[px.value_at(k)]);
                prefix[k] = run.value();
                run.add(vals[k]);
            }
            prefix[n_total] = run.value();
            let total = run.value();
            for (ci, &(n, k)) in cells.iter().enumerate() {
                let lo = n.saturating_sub(k);
                let hi = (n + k).min(n_total - 1);
                let wn = (total - (prefix[hi + 1] - prefix[lo])) * scale;
                acc[ci].add(vals[n] * a.eval(wn));
            }
        }
        acc
    });
    let mut acc = vec![MeanVar::default(); cells.len()];
    for c in chunks {
        for (t, s) in acc.iter_mut().zip(&c) {
            t.merge(s);
        }
    }
    Ok(cells
        .iter()
        .zip(&acc)
        .map(|(&(n, k), mv)| {
            let rhs = gapped_decorrelation_rhs(f, a, n_total, k);
            let lhs_abs = mv.mean().abs();
            let se = mv.se();
            GappedDecorrelationCell { center: n, gap_radius: k, lhs_abs, se, rhs, pass: lhs_abs <= rhs + 4.0 * se }
        })
        .collect())
}

/// Single-cell convenience wrapper around [`gapped_decorrelation_sweep`].
pub fn gapped_decorrelation_check(
    f: &Observable,
    a: &HFun1D,
    n_total: usize,
    gap_radius: usize,
    center: usize,
    opts: &McOptions,
    stream: &Stream,
) -> Result<GappedDecorrelationCell> {
    Ok(gapped_decorrelation_sweep(f, a, n_total, &[(center, gap_radius)], opts, stream)?
        .pop()
        .expect("one cell in, one cell out"))
}

/// Branch-wise quadrature check of the decorrelation inequality
/// |μ(f · Ã∘Tʲ)| ≤ L‖Ã‖∞ 2⁻ʲ for the doubling map: Tʲ has 2ʲ affine
/// branches, and the integral is taken branch by branch with Gauss–Legendre
/// so smooth integrands are resolved to ~1e-9.
pub fn decorrelation_check(
    f: &Observable,
    a_tilde: impl Fn(f64) -> f64,
    a_sup: f64,
    j: usize,
) -> Result<(f64, f64, bool)> {
    if f.dim() != 1 || f.coord_dim() != 1 {
        return Err(Error::Contract("decorrelation_check handles scalar observables on [0,1)".into()));
    }
    if j > MAX_GENERATION {
        return Err(Error::Resource(format!("2^{j} branches exceed the quadrature budget (j ≤ {MAX_GENERATION})")));
    }
    let branches = 1usize << j;
    let width = 1.0 / branches as f64;
    let (nodes, weights) = gauss_legendre(16);
    let mut acc = Kahan::default();
    for b in 0..branches {
        let lo = b as f64 * width;
        for (x, w) in nodes.iter().zip(&weights) {
            let t = 0.5 * (x + 1.0); // in [0,1]: T^j maps the branch onto it
            let xx = lo + t * width;
            acc.add(0.5 * w * width * f.eval1(&[xx]) * a_tilde(t));
        }
    }
    let estimate = acc.value();
    let bound = f.lipschitz() * a_sup * 0.5f64.powi(j as i32);
    Ok((estimate, bound, estimate.abs() <= bound + 1e-9))
}
