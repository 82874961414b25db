//! Empirical distances between the law of the scaled sums and the target
//! normal: the exact-quantile-coupling Wasserstein estimator, the Kolmogorov
//! statistic, and the smooth metric over a declared test-function panel.

use crate::birkhoff::window;
use crate::hfuns::{gaussian_expectation, HFun};
use crate::mc::{run_chunks, McOptions};
use crate::numeric::linalg::SymMat;
use crate::numeric::normal::{norm_cdf_scaled, norm_quantile_scaled};
use crate::numeric::sum::{Kahan, MeanVar};
use crate::observables::Observable;
use crate::rng::Stream;
use crate::systems::{orbit_values_into, semiflow_path_at, sample_initial, SystemKind};
use crate::{Error, Result};

/// Where a pool came from, for report provenance.
#[derive(Clone, Debug)]
pub struct Provenance {
    pub system: String,
    pub observable: String,
    pub n: f64,
    pub seed_tag: u64,
}

/// An empirical sample pool of W(N) (or V(T)) values, flat with stride `d`.
#[derive(Clone, Debug)]
pub struct SamplePool {
    pub d: usize,
    pub m: usize,
    pub samples: Vec<f64>,
    pub provenance: Provenance,
}

impl SamplePool {
    pub fn component(&self, c: usize) -> Vec<f64> {
        (0..self.m).map(|i| self.samples[i * self.d + c]).collect()
    }
}

const POOL_TAG: u64 = 0xF00;

/// Simulates M independent samples of W(N) = N^{-1/2} Σ f∘Tᵏ.
pub fn simulate_pool(
    kind: &SystemKind,
    f: &Observable,
    n: usize,
    opts: &McOptions,
    stream: &Stream,
) -> Result<SamplePool> {
    let d = f.dim();
    let scale = 1.0 / (n as f64).sqrt();
    let master = stream.child(POOL_TAG);
    let chunks: Vec<Result<Vec<f64>>> = run_chunks(opts.samples, opts.workers, opts.chunk, |_c, start, count| {
        let mut out = vec![0.0; count * d];
        let mut orbit = Vec::new();
        for j in 0..count {
            let s = master.child((start + j) as u64);
            orbit_values_into(kind, f, n, s, &mut orbit)?;
            let mut acc = vec![Kahan::default(); d];
            for k in 0..n {
                for (c, a) in acc.iter_mut().enumerate() {
                    a.add(orbit[k * d + c]);
                }
            }
            for (c, a) in acc.iter().enumerate() {
                out[j * d + c] = a.value() * scale;
            }
        }
        Ok(out)
    });
    let mut samples = Vec::with_capacity(opts.samples * d);
    for c in chunks {
        samples.extend_from_slice(&c?);
    }
    Ok(SamplePool {
        d,
        m: opts.samples,
        samples,
        provenance: Provenance {
            system: format!("{kind:?}"),
            observable: f.describe(),
            n: n as f64,
            seed_tag: POOL_TAG,
        },
    })
}

/// Simulates M independent samples of V(T) = T^{-1/2} ∫₀ᵀ fˢ ds for the
/// constant-roof suspension, by composite-midpoint quadrature of the
/// discretized path at resolution dt.
pub fn simulate_flow_pool(
    kind: &SystemKind,
    f: &Observable,
    t_total: f64,
    dt: f64,
    opts: &McOptions,
    stream: &Stream,
) -> Result<SamplePool> {
    if !matches!(kind, SystemKind::Suspension { .. }) {
        return Err(Error::Contract("flow pools require a suspension system".into()));
    }
    let d = f.dim();
    let master = stream.child(POOL_TAG + 1);
    let chunks: Vec<Result<Vec<f64>>> = run_chunks(opts.samples, opts.workers, opts.chunk, |_c, start, count| {
        let mut out = vec![0.0; count * d];
        for j in 0..count {
            let s = master.child((start + j) as u64);
            let p = sample_initial(kind, s);
            let path = semiflow_path_at(kind, f, t_total, dt, &p)?;
            let mut acc = vec![Kahan::default(); d];
            for cell in 0..path.n_cells() {
                for (c, a) in acc.iter_mut().enumerate() {
                    a.add(path.values[cell * d + c]);
                }
            }
            for (c, a) in acc.iter().enumerate() {
                out[j * d + c] = a.value() * dt / t_total.sqrt();
            }
        }
        Ok(out)
    });
    let mut samples = Vec::with_capacity(opts.samples * d);
    for c in chunks {
        samples.extend_from_slice(&c?);
    }
    Ok(SamplePool {
        d,
        m: opts.samples,
        samples,
        provenance: Provenance {
            system: format!("{kind:?}"),
            observable: f.describe(),
            n: t_total,
            seed_tag: POOL_TAG + 1,
        },
    })
}

/// A distance estimate with bootstrap uncertainty.
#[derive(Clone, Copy, Debug)]
pub struct DistanceEstimate {
    pub estimate: f64,
    pub se: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// Set when the pool is a point mass; the estimate is still returned.
    pub degenerate: bool,
}

/// Wasserstein distance between the pool's empirical law and N(0, σ²) by
/// quantile coupling: d̂ = M⁻¹ Σ |X₍ᵢ₎ − Φ⁻¹_{σ²}((i−½)/M)|, with a
/// bootstrap confidence interval from `bootstrap` resamples.
pub fn wasserstein_1d(
    pool: &SamplePool,
    sigma2: f64,
    bootstrap: usize,
    stream: &Stream,
) -> Result<DistanceEstimate> {
    if pool.d != 1 {
        return Err(Error::Contract("wasserstein_1d requires a scalar pool".into()));
    }
    if sigma2.is_nan() || sigma2 <= 0.0 {
        return Err(Error::Contract(format!("sigma2 must be positive, got {sigma2}")));
    }
    if pool.m < 1000 {
        return Err(Error::Contract(format!("pool must hold at least 10³ samples, got {}", pool.m)));
    }
    let m = pool.m;
    let mut xs = pool.samples.clone();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if !xs.iter().all(|x| x.is_finite()) {
        return Err(Error::Numerical("pool contains non-finite samples".into()));
    }
    let degenerate = xs.first() == xs.last();
    let quant: Vec<f64> = (0..m)
        .map(|i| norm_quantile_scaled((i as f64 + 0.5) / m as f64, sigma2))
        .collect();
    let mut acc = Kahan::default();
    for (x, q) in xs.iter().zip(&quant) {
        acc.add((x - q).abs());
    }
    let estimate = acc.value() / m as f64;

    let mut reps = Vec::with_capacity(bootstrap);
    let mut counts = vec![0u32; m];
    let mut bs = stream.child(0xB00);
    for _ in 0..bootstrap {
        counts.fill(0);
        for _ in 0..m {
            let idx = (bs.next_u64() % m as u64) as usize;
            counts[idx] += 1;
        }
        let mut pos = 0usize;
        let mut a = Kahan::default();
        for (j, &c) in counts.iter().enumerate() {
            for _ in 0..c {
                a.add((xs[j] - quant[pos]).abs());
                pos += 1;
            }
        }
        reps.push(a.value() / m as f64);
    }
    let (se, ci_lo, ci_hi) = if reps.is_empty() {
        (f64::NAN, estimate, estimate)
    } else {
        let mut mv = MeanVar::default();
        for &r in &reps {
            mv.add(r);
        }
        let mut sorted = reps.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let lo = sorted[((0.025 * sorted.len() as f64) as usize).min(sorted.len() - 1)];
        let hi = sorted[((0.975 * sorted.len() as f64) as usize).min(sorted.len() - 1)];
        (mv.variance().sqrt(), lo, hi)
    };
    Ok(DistanceEstimate { estimate, se, ci_lo, ci_hi, degenerate })
}

/// Kolmogorov distance sup_x |F̂(x) − Φ_{σ²}(x)|, evaluating both one-sided
/// limits at every jump of the empirical CDF.
pub fn kolmogorov_1d(pool: &SamplePool, sigma2: f64) -> Result<f64> {
    if pool.d != 1 {
        return Err(Error::Contract("kolmogorov_1d requires a scalar pool".into()));
    }
    if sigma2.is_nan() || sigma2 <= 0.0 {
        return Err(Error::Contract(format!("sigma2 must be positive, got {sigma2}")));
    }
    let m = pool.m;
    let mut xs = pool.samples.clone();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut sup: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let cdf = norm_cdf_scaled(x, sigma2);
        sup = sup.max(((i + 1) as f64 / m as f64 - cdf).abs());
        sup = sup.max((i as f64 / m as f64 - cdf).abs());
    }
    Ok(sup)
}

/// One panel member's smooth-metric gap |mean h(W) − Φ_Σ(h)|.
#[derive(Clone, Debug)]
pub struct SmoothGap {
    pub member: String,
    pub gap: f64,
    pub se: f64,
    pub phi_h: f64,
}

/// Smooth metric of the pool against N(0, Σ) over the panel: per-member
/// Monte Carlo mean of h minus the Gaussian expectation (Gauss–Hermite,
/// order 40 by default).
pub fn smooth_metric(pool: &SamplePool, sigma: &SymMat, panel: &[HFun]) -> Result<Vec<SmoothGap>> {
    if sigma.dim() != pool.d {
        return Err(Error::Contract("covariance dimension does not match the pool".into()));
    }
    if pool.d > 3 {
        return Err(Error::Resource("smooth metric supports d ≤ 3".into()));
    }
    let mut out = Vec::with_capacity(panel.len());
    for h in panel {
        if h.dim() != pool.d {
            return Err(Error::Contract(format!(
                "panel member {} has dimension {}, pool has {}",
                h.name(),
                h.dim(),
                pool.d
            )));
        }
        let phi_h = gaussian_expectation(h, sigma, 40)?;
        let mut mv = MeanVar::default();
        for i in 0..pool.m {
            mv.add(h.eval(&pool.samples[i * pool.d..(i + 1) * pool.d]));
        }
        out.push(SmoothGap {
            member: h.name(),
            gap: (mv.mean() - phi_h).abs(),
            se: mv.se(),
            phi_h,
        });
    }
    Ok(out)
}

/// Empirical variance/covariance of the pool (for the variance-consistency
/// checks against Σ).
pub fn pool_covariance(pool: &SamplePool) -> SymMat {
    let d = pool.d;
    let mut mean = vec![Kahan::default(); d];
    for i in 0..pool.m {
        for c in 0..d {
            mean[c].add(pool.samples[i * d + c]);
        }
    }
    let mean: Vec<f64> = mean.iter().map(|k| k.value() / pool.m as f64).collect();
    let mut cov = SymMat::zeros(d);
    for a in 0..d {
        for b in a..d {
            let mut acc = Kahan::default();
            for i in 0..pool.m {
                acc.add((pool.samples[i * d + a] - mean[a]) * (pool.samples[i * d + b] - mean[b]));
            }
            cov.set(a, b, acc.value() / (pool.m as f64 - 1.0));
        }
    }
    cov
}

/// Gapped-sum pool helper used by the variance-consistency tests: returns
/// per-sample (W, Wⁿ) pairs for a fixed window.
pub fn simulate_gapped_pool(
    kind: &SystemKind,
    f: &Observable,
    n: usize,
    gap_radius: usize,
    center: usize,
    opts: &McOptions,
    stream: &Stream,
) -> Result<(SamplePool, SamplePool)> {
    let d = f.dim();
    let win = window(n, gap_radius, center)?;
    let master = stream.child(POOL_TAG + 2);
    let chunks: Vec<Result<(Vec<f64>, Vec<f64>)>> =
        run_chunks(opts.samples, opts.workers, opts.chunk, |_c, start, count| {
            let mut w_out = vec![0.0; count * d];
            let mut wn_out = vec![0.0; count * d];
            let mut orbit = Vec::new();
            for j in 0..count {
                let s = master.child((start + j) as u64);
                orbit_values_into(kind, f, n, s, &mut orbit)?;
                let sums = crate::birkhoff::gapped_sums(&orbit, d, &win)?;
                w_out[j * d..(j + 1) * d].copy_from_slice(&sums.w);
                wn_out[j * d..(j + 1) * d].copy_from_slice(&sums.wn);
            }
            Ok((w_out, wn_out))
        });
    let mut w_samples = Vec::with_capacity(opts.samples * d);
    let mut wn_samples = Vec::with_capacity(opts.samples * d);
    for c in chunks {
        let (w, wn) = c?;
        w_samples.extend_from_slice(&w);
        wn_samples.extend_from_slice(&wn);
    }
    let prov = Provenance {
        system: format!("{kind:?}"),
        observable: f.describe(),
        n: n as f64,
        seed_tag: POOL_TAG + 2,
    };
    Ok((
        SamplePool { d, m: opts.samples, samples: w_samples, provenance: prov.clone() },
        SamplePool { d, m: opts.samples, samples: wn_samples, provenance: prov },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point_mass_pool(m: usize, v: f64) -> SamplePool {
        SamplePool {
            d: 1,
            m,
            samples: vec![v; m],
            provenance: Provenance {
                system: "test".into(),
                observable: "const".into(),
                n: 1.0,
                seed_tag: 0,
            },
        }
    }

    #[test]
    fn wasserstein_of_point_mass_tends_to_mean_abs_normal() {
        // samples ≡ 0 vs N(0,1): d̂ → E|Z| = √(2/π) ≈ 0.7978845608
        let pool = point_mass_pool(100_000, 0.0);
        let est = wasserstein_1d(&pool, 1.0, 0, &Stream::new(1)).unwrap();
        assert!(est.degenerate);
        let expect = (2.0 / std::f64::consts::PI).sqrt();
        assert!((est.estimate - expect).abs() < 2e-4, "{} vs {expect}", est.estimate);
    }

    #[test]
    fn wasserstein_shift_bound() {
        // adding c to all samples moves d̂ by at most |c| (1-Lipschitz class)
        let mut s = Stream::new(3);
        let m = 5000;
        let samples: Vec<f64> = (0..m)
            .map(|_| crate::numeric::normal::sample_standard_normal(&mut s))
            .collect();
        let pool = SamplePool {
            d: 1,
            m,
            samples: samples.clone(),
            provenance: point_mass_pool(1000, 0.0).provenance,
        };
        let base = wasserstein_1d(&pool, 1.0, 0, &Stream::new(1)).unwrap().estimate;
        let shifted = SamplePool {
            d: 1,
            m,
            samples: samples.iter().map(|x| x + 0.3).collect(),
            provenance: pool.provenance.clone(),
        };
        let moved = wasserstein_1d(&shifted, 1.0, 0, &Stream::new(1)).unwrap().estimate;
        assert!((moved - base).abs() <= 0.3 + 1e-12);
    }

    #[test]
    fn kolmogorov_point_mass_is_half() {
        let pool = point_mass_pool(2000, 0.0);
        let k = kolmogorov_1d(&pool, 1.0).unwrap();
        assert!((k - 0.5).abs() < 1e-3, "{k}");
    }

    #[test]
    fn smooth_metric_constant_member_gap_zero() {
        let pool = point_mass_pool(1500, 0.7);
        let gaps = smooth_metric(&pool, &SymMat::identity(1), &[HFun::Constant { d: 1, c: 2.0 }]).unwrap();
        assert!(gaps[0].gap < 1e-13, "{}", gaps[0].gap);
    }

    #[test]
    fn pool_size_contract() {
        let pool = point_mass_pool(10, 0.0);
        assert!(wasserstein_1d(&pool, 1.0, 0, &Stream::new(1)).is_err());
    }
}
