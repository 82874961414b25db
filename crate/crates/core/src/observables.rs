//! Vector-valued observables with the regularity metadata the error bounds
//! consume: componentwise sup norm, Lipschitz constant, mean-zero status, and
//! (optionally) exact pair-correlation tables for oracle use.
//!
//! The norm convention is componentwise throughout: for f: X → ℝᵈ the stored
//! sup norm is the maximum over components of the per-component sup norm.

use crate::numeric::quad::gl_integrate;
use crate::{Error, Result};
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Wave {
    Cos,
    Sin,
}

/// One trigonometric term `amp · wave(2π freq·x)` of a component.
#[derive(Clone, Debug)]
pub struct TrigTerm {
    pub freq: Vec<i64>,
    pub amp: f64,
    pub wave: Wave,
}

/// Exact pair-correlation table: `mats[k]` is the row-major d×d matrix with
/// entries μ(f_α · f_β∘Tᵏ); lags beyond the table are exactly zero.
#[derive(Clone, Debug, Default)]
pub struct AnalyticPair {
    pub d: usize,
    pub mats: Vec<Vec<f64>>,
}

impl AnalyticPair {
    pub fn at(&self, k: usize) -> Option<&[f64]> {
        self.mats.get(k).map(|m| m.as_slice())
    }
}

#[derive(Clone)]
enum ObsKind {
    Trig(Vec<Vec<TrigTerm>>),
    Custom {
        f: Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>,
        desc: String,
    },
}

/// A bounded observable f: X → ℝᵈ. Immutable after construction; safe for
/// concurrent evaluation.
#[derive(Clone)]
pub struct Observable {
    dim: usize,
    coord_dim: usize,
    kind: ObsKind,
    shift: Vec<f64>,
    sup_norm: f64,
    lipschitz: f64,
    mean_zero: bool,
    analytic_pair: Option<AnalyticPair>,
    /// Dynamical-Hölder regularity (H, θ): reserved metadata for systems
    /// where observables are Hölder along separation times rather than
    /// Lipschitz in the phase variable. Carried but not consumed by the
    /// bounds here, which read only the Lipschitz data.
    holder: Option<(f64, f64)>,
}

impl std::fmt::Debug for Observable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Observable")
            .field("dim", &self.dim)
            .field("coord_dim", &self.coord_dim)
            .field("sup_norm", &self.sup_norm)
            .field("lipschitz", &self.lipschitz)
            .field("mean_zero", &self.mean_zero)
            .finish()
    }
}

impl Observable {
    /// Builds a trigonometric-polynomial observable from
    /// `(component, frequency vector, amplitude, waveform)` records.
    ///
    /// Zero-frequency terms are rejected: they would carry a constant part
    /// and break the mean-zero contract. The stored sup norm is the
    /// per-component sum of |amplitudes| (triangle inequality); the Lipschitz
    /// constant is `2π Σ |amp|·|freq|` per component, maximized over
    /// components.
    pub fn trig(
        coord_dim: usize,
        dim: usize,
        records: &[(usize, Vec<i64>, f64, Wave)],
    ) -> Result<Observable> {
        if dim == 0 || coord_dim == 0 {
            return Err(Error::Contract("observable dimensions must be at least 1".into()));
        }
        let mut comps: Vec<Vec<TrigTerm>> = vec![Vec::new(); dim];
        for (c, freq, amp, wave) in records {
            if *c >= dim {
                return Err(Error::Contract(format!("component {c} out of range for dim {dim}")));
            }
            if freq.len() != coord_dim {
                return Err(Error::Contract(format!(
                    "frequency vector length {} does not match coordinate dimension {coord_dim}",
                    freq.len()
                )));
            }
            if freq.iter().all(|&k| k == 0) {
                return Err(Error::Contract(
                    "zero-frequency term rejected: constant terms break the mean-zero contract".into(),
                ));
            }
            comps[*c].push(TrigTerm { freq: freq.clone(), amp: *amp, wave: *wave });
        }
        let mut sup: f64 = 0.0;
        let mut lip: f64 = 0.0;
        for terms in &comps {
            let s: f64 = terms.iter().map(|t| t.amp.abs()).sum();
            let l: f64 = terms
                .iter()
                .map(|t| {
                    let fnorm = t.freq.iter().map(|&k| (k * k) as f64).sum::<f64>().sqrt();
                    2.0 * std::f64::consts::PI * t.amp.abs() * fnorm
                })
                .sum();
            sup = sup.max(s);
            lip = lip.max(l);
        }
        Ok(Observable {
            dim,
            coord_dim,
            kind: ObsKind::Trig(comps),
            shift: vec![0.0; dim],
            sup_norm: sup,
            lipschitz: lip,
            mean_zero: true,
            analytic_pair: None,
            holder: None,
        })
    }

    /// Wraps an arbitrary evaluation closure with caller-supplied metadata.
    pub fn custom(
        coord_dim: usize,
        dim: usize,
        f: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
        sup_norm: f64,
        lipschitz: f64,
        desc: &str,
    ) -> Observable {
        Observable {
            dim,
            coord_dim,
            kind: ObsKind::Custom { f: Arc::new(f), desc: desc.to_string() },
            shift: vec![0.0; dim],
            sup_norm,
            lipschitz,
            mean_zero: false,
            analytic_pair: None,
            holder: None,
        }
    }

    pub fn with_analytic_pair(mut self, pair: AnalyticPair) -> Self {
        self.analytic_pair = Some(pair);
        self
    }

    pub fn with_holder(mut self, h: f64, theta: f64) -> Self {
        self.holder = Some((h, theta));
        self
    }

    pub fn holder(&self) -> Option<(f64, f64)> {
        self.holder
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coord_dim(&self) -> usize {
        self.coord_dim
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn mean_zero(&self) -> bool {
        self.mean_zero
    }

    pub fn analytic_pair(&self) -> Option<&AnalyticPair> {
        self.analytic_pair.as_ref()
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            ObsKind::Trig(comps) => {
                let n: usize = comps.iter().map(|c| c.len()).sum();
                format!("trig[{} terms, dim {}]", n, self.dim)
            }
            ObsKind::Custom { desc, .. } => desc.clone(),
        }
    }

    #[inline]
    pub fn eval(&self, coords: &[f64], out: &mut [f64]) {
        debug_assert_eq!(coords.len(), self.coord_dim);
        debug_assert_eq!(out.len(), self.dim);
        match &self.kind {
            ObsKind::Trig(comps) => {
                for (c, terms) in comps.iter().enumerate() {
                    let mut acc = 0.0;
                    for t in terms {
                        let mut arg = 0.0;
                        for (k, x) in t.freq.iter().zip(coords) {
                            arg += *k as f64 * x;
                        }
                        arg *= 2.0 * std::f64::consts::PI;
                        acc += t.amp
                            * match t.wave {
                                Wave::Cos => arg.cos(),
                                Wave::Sin => arg.sin(),
                            };
                    }
                    out[c] = acc;
                }
            }
            ObsKind::Custom { f, .. } => f(coords, out),
        }
        for (o, s) in out.iter_mut().zip(&self.shift) {
            *o -= s;
        }
    }

    /// Scalar fast path for d = 1.
    #[inline]
    pub fn eval1(&self, coords: &[f64]) -> f64 {
        debug_assert_eq!(self.dim, 1);
        let mut out = [0.0];
        self.eval(coords, &mut out);
        out[0]
    }

    /// Mean of every component over Lebesgue measure on [0,1)^coord_dim by
    /// composite Gauss–Legendre; `tol` is the acceptance threshold on the
    /// refinement difference.
    pub fn quadrature_mean(&self, tol: f64) -> Result<Vec<f64>> {
        let coarse = self.mean_with(48, 12)?;
        let fine = self.mean_with(96, 12)?;
        let diff = coarse
            .iter()
            .zip(&fine)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        if diff > tol {
            return Err(Error::Numerical(format!(
                "observable mean quadrature achieved {diff:.3e}, requested {tol:.3e}"
            )));
        }
        Ok(fine)
    }

    fn mean_with(&self, panels: usize, nodes: usize) -> Result<Vec<f64>> {
        let d = self.dim;
        match self.coord_dim {
            1 => {
                let mut mean = vec![0.0; d];
                for (c, m) in mean.iter_mut().enumerate() {
                    let mut out = vec![0.0; d];
                    *m = gl_integrate(
                        |x| {
                            self.eval(&[x], &mut out);
                            out[c]
                        },
                        0.0,
                        1.0,
                        panels,
                        nodes,
                    );
                }
                Ok(mean)
            }
            2 => {
                let mut mean = vec![0.0; d];
                for (c, m) in mean.iter_mut().enumerate() {
                    let mut out = vec![0.0; d];
                    *m = gl_integrate(
                        |x| {
                            gl_integrate(
                                |y| {
                                    self.eval(&[x, y], &mut out);
                                    out[c]
                                },
                                0.0,
                                1.0,
                                panels,
                                nodes,
                            )
                        },
                        0.0,
                        1.0,
                        panels,
                        nodes,
                    );
                }
                Ok(mean)
            }
            n => Err(Error::Resource(format!("quadrature mean unsupported for coordinate dimension {n}"))),
        }
    }
}

/// Returns a copy of `f` shifted by its quadrature mean, so the result is
/// mean zero. Centering an already centered observable is the identity up to
/// the quadrature tolerance.
pub fn center(f: &Observable, tol: f64) -> Result<Observable> {
    let mean = f.quadrature_mean(tol)?;
    let mut g = f.clone();
    for (s, m) in g.shift.iter_mut().zip(&mean) {
        *s += m;
    }
    g.mean_zero = true;
    Ok(g)
}

/// The workhorse scalar observable cos 2πx with its exact metadata and
/// analytic pair table under the doubling map (lag 0: ½; all higher lags
/// vanish by orthogonality of cos 2πx and cos 2π·2ᵏx).
pub fn cos1_doubling() -> Observable {
    let obs = Observable::trig(1, 1, &[(0, vec![1], 1.0, Wave::Cos)]).unwrap();
    let mut mats = vec![vec![0.5]];
    mats.extend(std::iter::repeat_n(vec![0.0], 8));
    obs.with_analytic_pair(AnalyticPair { d: 1, mats })
}

/// The two-component observable (cos 2πx, cos 2πy) on the torus with its
/// analytic pair table under a hyperbolic toral automorphism: character
/// orthogonality kills every lag ≥ 1 entry and the lag-0 cross terms.
pub fn cos_pair_toral() -> Observable {
    let obs = Observable::trig(
        2,
        2,
        &[(0, vec![1, 0], 1.0, Wave::Cos), (1, vec![0, 1], 1.0, Wave::Cos)],
    )
    .unwrap();
    let mut mats = vec![vec![0.5, 0.0, 0.0, 0.5]];
    mats.extend(std::iter::repeat_n(vec![0.0; 4], 8));
    obs.with_analytic_pair(AnalyticPair { d: 2, mats })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trig_metadata_cos() {
        // f(x) = cos 2πx: sup 1, Lipschitz 2π
        let f = Observable::trig(1, 1, &[(0, vec![1], 1.0, Wave::Cos)]).unwrap();
        assert_eq!(f.dim(), 1);
        assert!((f.sup_norm() - 1.0).abs() < 1e-15);
        assert!((f.lipschitz() - 2.0 * std::f64::consts::PI).abs() < 1e-12);
        assert!(f.mean_zero());
        assert!((f.eval1(&[0.25])).abs() < 1e-15);
        assert!((f.eval1(&[0.5]) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn trig_metadata_mixture() {
        // f(x) = cos 2πx + ½ sin 4πx: sup bound 1.5, Lipschitz bound 4π
        let f = Observable::trig(
            1,
            1,
            &[(0, vec![1], 1.0, Wave::Cos), (0, vec![2], 0.5, Wave::Sin)],
        )
        .unwrap();
        assert!((f.sup_norm() - 1.5).abs() < 1e-15);
        assert!((f.lipschitz() - 4.0 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn trig_two_components() {
        let f = Observable::trig(
            2,
            2,
            &[(0, vec![1, 0], 1.0, Wave::Cos), (1, vec![0, 1], 1.0, Wave::Cos)],
        )
        .unwrap();
        assert_eq!(f.dim(), 2);
        assert!((f.sup_norm() - 1.0).abs() < 1e-15);
        let mut out = [0.0; 2];
        f.eval(&[0.0, 0.5], &mut out);
        assert!((out[0] - 1.0).abs() < 1e-15);
        assert!((out[1] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn holder_metadata_carried() {
        let f = Observable::trig(1, 1, &[(0, vec![1], 1.0, Wave::Cos)]).unwrap();
        assert!(f.holder().is_none());
        let g = f.with_holder(2.0, 0.5);
        assert_eq!(g.holder(), Some((2.0, 0.5)));
        // the consumed regularity is still the Lipschitz constant
        assert!((g.lipschitz() - 2.0 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn zero_frequency_rejected() {
        let r = Observable::trig(1, 1, &[(0, vec![0], 1.0, Wave::Cos)]);
        assert!(r.is_err());
    }

    #[test]
    fn center_identity_and_x() {
        // already mean-zero: shift stays 0
        let f = Observable::trig(1, 1, &[(0, vec![1], 1.0, Wave::Cos)]).unwrap();
        let g = center(&f, 1e-10).unwrap();
        assert!(g.shift[0].abs() < 1e-12);

        // f(x) = x: shift 1/2
        let f = Observable::custom(1, 1, |c, o| o[0] = c[0], 1.0, 1.0, "x");
        let g = center(&f, 1e-10).unwrap();
        assert!((g.shift[0] - 0.5).abs() < 1e-12);
        assert!(g.mean_zero());

        // f(x) = x²: shift 1/3
        let f = Observable::custom(1, 1, |c, o| o[0] = c[0] * c[0], 1.0, 2.0, "x^2");
        let g = center(&f, 1e-10).unwrap();
        assert!((g.shift[0] - 1.0 / 3.0).abs() < 1e-12);

        // idempotence: center(center(f)) = center(f) to 1e-12
        let g2 = center(&g, 1e-10).unwrap();
        assert!((g2.shift[0] - g.shift[0]).abs() < 1e-12);
    }
}
