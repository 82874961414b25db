//! The sum objects: the scaled Birkhoff sum W(N), the gapped sums Wⁿ with a
//! radius-K time window around n removed, the past/future split
//! Wⁿ = Wⁿ₋ + Wⁿ₊, and their continuous-time counterparts V(T) and Vᵗ.
//!
//! Sums accumulate with compensated summation: N runs up to 2¹⁶ and centered
//! observables cancel heavily.

use crate::numeric::sum::Kahan;
use crate::systems::SemiflowPath;
use crate::{Error, Result};

/// The time window \[n\]_K = {k ∈ [0, N−1] : |k−n| ≤ K}, stored as the closed
/// index range [lo, hi]. Its cardinality always lies in [K+1, 2K+1].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GapWindow {
    pub n_total: usize,
    pub gap_radius: usize,
    pub center: usize,
    pub lo: usize,
    pub hi: usize,
}

impl GapWindow {
    pub fn len(&self) -> usize {
        self.hi - self.lo + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, k: usize) -> bool {
        (self.lo..=self.hi).contains(&k)
    }
}

/// Builds the window centered at `center` with radius `gap_radius` inside
/// [0, n_total).
pub fn window(n_total: usize, gap_radius: usize, center: usize) -> Result<GapWindow> {
    if n_total == 0 || gap_radius >= n_total || center >= n_total {
        return Err(Error::Contract(format!(
            "window requires 0 ≤ K < N and 0 ≤ n < N, got N={n_total}, K={gap_radius}, n={center}"
        )));
    }
    Ok(GapWindow {
        n_total,
        gap_radius,
        center,
        lo: center.saturating_sub(gap_radius),
        hi: (center + gap_radius).min(n_total - 1),
    })
}

/// The quadruple (W, Wⁿ, Wⁿ₋, Wⁿ₊) for one orbit; all components are
/// d-vectors scaled by N^{-1/2}.
#[derive(Clone, Debug)]
pub struct GappedSums {
    pub d: usize,
    pub w: Vec<f64>,
    pub wn: Vec<f64>,
    pub wn_minus: Vec<f64>,
    pub wn_plus: Vec<f64>,
}

/// Computes the gapped sums of an orbit (flat, stride `d`, length N·d).
///
/// Wⁿ₋ sums k ≤ n−K−1, Wⁿ₊ sums k ≥ n+K+1, Wⁿ = Wⁿ₋ + Wⁿ₊ by construction,
/// and W − Wⁿ is exactly the window part.
pub fn gapped_sums(orbit: &[f64], d: usize, win: &GapWindow) -> Result<GappedSums> {
    if d == 0 || orbit.len() != win.n_total * d {
        return Err(Error::Contract(format!(
            "orbit length {} does not match N={} × d={d}",
            orbit.len(),
            win.n_total
        )));
    }
    let scale = 1.0 / (win.n_total as f64).sqrt();
    let mut w = vec![Kahan::default(); d];
    let mut minus = vec![Kahan::default(); d];
    let mut plus = vec![Kahan::default(); d];
    for k in 0..win.n_total {
        let row = &orbit[k * d..(k + 1) * d];
        for (c, &v) in row.iter().enumerate() {
            w[c].add(v);
            if k < win.lo {
                minus[c].add(v);
            } else if k > win.hi {
                plus[c].add(v);
            }
        }
    }
    let w: Vec<f64> = w.iter().map(|k| k.value() * scale).collect();
    let wn_minus: Vec<f64> = minus.iter().map(|k| k.value() * scale).collect();
    let wn_plus: Vec<f64> = plus.iter().map(|k| k.value() * scale).collect();
    let wn: Vec<f64> = wn_minus.iter().zip(&wn_plus).map(|(a, b)| a + b).collect();
    Ok(GappedSums { d, w, wn, wn_minus, wn_plus })
}

/// Continuous-time sums from a discretized path by composite-midpoint
/// quadrature: V = T^{-1/2} ∫₀ᵀ fˢ ds and the gapped
/// Vᵗ = ⌊T⌋^{-1/2} (∫ 1_{[0, ⌊t⌋−K]} fˢ ds + ∫ 1_{[⌊t⌋+K+1, ⌊T⌋]} fˢ ds),
/// where an indicator over an empty interval contributes nothing.
pub fn continuous_sums(
    path: &SemiflowPath,
    t_total: f64,
    gap_radius: usize,
    t_center: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let d = path.d;
    let n_floor = t_total.floor();
    if t_total < 1.0 || t_total > path.t_horizon + 1e-9 {
        return Err(Error::Contract(format!(
            "t_total must lie in [1, horizon], got {t_total} (horizon {})",
            path.t_horizon
        )));
    }
    if gap_radius == 0 || (gap_radius as f64) >= t_total {
        return Err(Error::Contract(format!(
            "gap radius must satisfy 0 < K < T, got K={gap_radius}, T={t_total}"
        )));
    }
    if !(0.0 <= t_center && t_center < n_floor) {
        return Err(Error::Contract(format!(
            "t must lie in [0, ⌊T⌋), got t={t_center}, ⌊T⌋={n_floor}"
        )));
    }
    let dt = path.dt;
    let cells_total = (t_total / dt).round() as usize;
    if ((t_total / dt) - cells_total as f64).abs() > 1e-9 {
        return Err(Error::Contract(format!(
            "path resolution dt={dt} does not divide T={t_total}"
        )));
    }
    let integrate = |a: f64, b: f64| -> Vec<f64> {
        // integral over [a, b] of the piecewise path; a, b are dt-multiples
        let mut acc = vec![Kahan::default(); d];
        if b > a {
            let ja = (a / dt).round() as usize;
            let jb = (b / dt).round() as usize;
            for j in ja..jb {
                let row = &path.values[j * d..(j + 1) * d];
                for (c, &v) in row.iter().enumerate() {
                    acc[c].add(v);
                }
            }
        }
        acc.iter().map(|k| k.value() * dt).collect()
    };
    let v_raw = integrate(0.0, t_total);
    let v: Vec<f64> = v_raw.iter().map(|x| x / t_total.sqrt()).collect();

    let n_center = t_center.floor();
    let lo_end = n_center - gap_radius as f64; // [0, ⌊t⌋ − K]
    let hi_start = n_center + gap_radius as f64 + 1.0; // [⌊t⌋ + K + 1, ⌊T⌋]
    let mut vt = vec![0.0; d];
    let scale = 1.0 / n_floor.sqrt();
    if lo_end > 0.0 {
        for (c, x) in integrate(0.0, lo_end.min(n_floor)).into_iter().enumerate() {
            vt[c] += x * scale;
        }
    }
    if hi_start < n_floor {
        for (c, x) in integrate(hi_start, n_floor).into_iter().enumerate() {
            vt[c] += x * scale;
        }
    }
    Ok((v, vt))
}
