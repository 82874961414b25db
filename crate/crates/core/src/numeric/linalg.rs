//! Dense symmetric matrices of small dimension (d ≤ 3 in practice):
//! Cholesky factorization, pivoted positive-definiteness probing, and a
//! Jacobi eigensolver for the degeneracy diagnostics.

use crate::{Error, Result};

/// Dense row-major symmetric matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMat {
    d: usize,
    a: Vec<f64>,
}

/// Outcome of the pivoted Cholesky probe.
#[derive(Clone, Debug, PartialEq)]
pub enum PdStatus {
    PositiveDefinite,
    /// A direction `v` (unit vector) along which the quadratic form is at or
    /// below the pivot tolerance; for covariance matrices this witnesses the
    /// degenerate (coboundary) direction.
    Degenerate { direction: Vec<f64> },
}

impl SymMat {
    pub fn zeros(d: usize) -> Self {
        SymMat { d, a: vec![0.0; d * d] }
    }

    pub fn from_rows(d: usize, rows: &[f64]) -> Self {
        assert_eq!(rows.len(), d * d);
        let mut m = SymMat { d, a: rows.to_vec() };
        m.symmetrize();
        m
    }

    pub fn identity(d: usize) -> Self {
        let mut m = Self::zeros(d);
        for i in 0..d {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.d + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * self.d + j] = v;
        self.a[j * self.d + i] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.a
    }

    /// Replace by the symmetric part (average with the transpose).
    pub fn symmetrize(&mut self) {
        for i in 0..self.d {
            for j in (i + 1)..self.d {
                let v = 0.5 * (self.a[i * self.d + j] + self.a[j * self.d + i]);
                self.a[i * self.d + j] = v;
                self.a[j * self.d + i] = v;
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.a.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.d {
            for j in 0..self.d {
                s += v[i] * self.get(i, j) * v[j];
            }
        }
        s
    }

    pub fn mat_vec(&self, v: &[f64], out: &mut [f64]) {
        for i in 0..self.d {
            let mut s = 0.0;
            for j in 0..self.d {
                s += self.get(i, j) * v[j];
            }
            out[i] = s;
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.d).map(|i| self.get(i, i)).sum()
    }

    /// Lower-triangular Cholesky factor `L` (row-major, full storage), or an
    /// error if the matrix is not positive definite at the given tolerance.
    pub fn cholesky(&self) -> Result<Vec<f64>> {
        let d = self.d;
        let mut l = vec![0.0; d * d];
        let scale = self.max_abs().max(1e-300);
        for i in 0..d {
            for j in 0..=i {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l[i * d + k] * l[j * d + k];
                }
                if i == j {
                    if s <= 1e-14 * scale {
                        return Err(Error::Contract(format!(
                            "matrix is not positive definite (pivot {s:.3e} at {i})"
                        )));
                    }
                    l[i * d + i] = s.sqrt();
                } else {
                    l[i * d + j] = s / l[j * d + j];
                }
            }
        }
        Ok(l)
    }

    /// Positive-definiteness probe via unpivoted Cholesky with an absolute
    /// pivot tolerance; on failure the reported direction is the eigenvector
    /// of the smallest eigenvalue.
    pub fn pd_status(&self, pivot_tol: f64) -> PdStatus {
        let d = self.d;
        let mut l = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..=i {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l[i * d + k] * l[j * d + k];
                }
                if i == j {
                    if s < pivot_tol {
                        let (_, v) = self.smallest_eigenpair();
                        return PdStatus::Degenerate { direction: v };
                    }
                    l[i * d + i] = s.sqrt();
                } else {
                    l[i * d + j] = s / l[j * d + j];
                }
            }
        }
        PdStatus::PositiveDefinite
    }

    /// All eigenvalues with eigenvectors by cyclic Jacobi rotations.
    /// Returns (eigenvalues, column-major eigenvectors).
    pub fn jacobi_eigen(&self) -> (Vec<f64>, Vec<Vec<f64>>) {
        let d = self.d;
        let mut a = self.a.clone();
        let mut v = vec![0.0; d * d];
        for i in 0..d {
            v[i * d + i] = 1.0;
        }
        for _sweep in 0..100 {
            let mut off = 0.0;
            for i in 0..d {
                for j in (i + 1)..d {
                    off += a[i * d + j] * a[i * d + j];
                }
            }
            if off.sqrt() < 1e-15 * self.max_abs().max(1e-300) {
                break;
            }
            for p in 0..d {
                for q in (p + 1)..d {
                    let apq = a[p * d + q];
                    if apq.abs() < 1e-300 {
                        continue;
                    }
                    let app = a[p * d + p];
                    let aqq = a[q * d + q];
                    let theta = 0.5 * (aqq - app) / apq;
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..d {
                        let akp = a[k * d + p];
                        let akq = a[k * d + q];
                        a[k * d + p] = c * akp - s * akq;
                        a[k * d + q] = s * akp + c * akq;
                    }
                    for k in 0..d {
                        let apk = a[p * d + k];
                        let aqk = a[q * d + k];
                        a[p * d + k] = c * apk - s * aqk;
                        a[q * d + k] = s * apk + c * aqk;
                    }
                    for k in 0..d {
                        let vkp = v[k * d + p];
                        let vkq = v[k * d + q];
                        v[k * d + p] = c * vkp - s * vkq;
                        v[k * d + q] = s * vkp + c * vkq;
                    }
                }
            }
        }
        let evals: Vec<f64> = (0..d).map(|i| a[i * d + i]).collect();
        let evecs: Vec<Vec<f64>> = (0..d)
            .map(|c| (0..d).map(|r| v[r * d + c]).collect())
            .collect();
        (evals, evecs)
    }

    pub fn smallest_eigenpair(&self) -> (f64, Vec<f64>) {
        let (evals, evecs) = self.jacobi_eigen();
        let mut idx = 0;
        for i in 1..evals.len() {
            if evals[i] < evals[idx] {
                idx = i;
            }
        }
        (evals[idx], evecs[idx].clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_reconstructs() {
        let m = SymMat::from_rows(3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
        let l = m.cholesky().unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let mut s = 0.0;
                for k in 0..3 {
                    s += l[i * 3 + k] * l[j * 3 + k];
                }
                assert!((s - m.get(i, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn degenerate_direction_found() {
        // rank-1 matrix v v^T with v = (1, 1)/√2: degenerate along (1, -1)/√2
        let m = SymMat::from_rows(2, &[0.5, 0.5, 0.5, 0.5]);
        match m.pd_status(1e-10) {
            PdStatus::Degenerate { direction } => {
                let q = m.quadratic_form(&direction);
                assert!(q.abs() < 1e-12);
                let norm: f64 = direction.iter().map(|x| x * x).sum::<f64>().sqrt();
                assert!((norm - 1.0).abs() < 1e-10);
            }
            PdStatus::PositiveDefinite => panic!("expected degenerate"),
        }
        assert_eq!(SymMat::identity(2).pd_status(1e-10), PdStatus::PositiveDefinite);
    }

    #[test]
    fn jacobi_eigen_2x2() {
        let m = SymMat::from_rows(2, &[2.0, 1.0, 1.0, 2.0]);
        let (mut evals, _) = m.jacobi_eigen();
        evals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((evals[0] - 1.0).abs() < 1e-12);
        assert!((evals[1] - 3.0).abs() < 1e-12);
    }
}
