//! Dense eigensolvers: cyclic Jacobi for complex Hermitian matrices (with
//! eigenvectors, f64) and for real symmetric matrices (eigenvalues only,
//! generic over the scalar so the quench certification can run in
//! double-double precision). Matrices here are at most ~101x101, so O(n^3)
//! with a few sweeps is plenty.

use crate::dd::Dd;
use crate::error::{Error, Result};
use num_complex::Complex64;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    pub n: usize,
    pub data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> CMatrix {
        CMatrix { n, data: vec![Complex64::new(0.0, 0.0); n * n] }
    }

    pub fn identity(n: usize) -> CMatrix {
        let mut m = CMatrix::zeros(n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn mul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = CMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> CMatrix {
        CMatrix { n: self.n, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn add(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.n, other.n);
        CMatrix {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &CMatrix) -> CMatrix {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// max |A - A^dagger| entrywise.
    pub fn hermiticity_residual(&self) -> f64 {
        let n = self.n;
        let mut r: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                r = r.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        r
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..n {
                acc += self[(i, j)] * v[j];
            }
            out[i] = acc;
        }
        out
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.n + j]
    }
}

/// Eigen-decomposition of a Hermitian matrix by cyclic Jacobi.
/// Returns eigenvalues ascending and the unitary of column eigenvectors.
pub fn hermitian_eigen(a: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let n = a.n;
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    let herm = a.hermiticity_residual();
    if herm > 1e-12 * scale {
        return Err(Error::NotHermitian { residual: herm, tolerance: 1e-12 * scale });
    }
    let mut m = a.clone();
    // Symmetrize exactly so rotations see a perfectly Hermitian matrix.
    for i in 0..n {
        for j in (i + 1)..n {
            let g = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            m[(i, j)] = g;
            m[(j, i)] = g.conj();
        }
        m[(i, i)] = Complex64::new(m[(i, i)].re, 0.0);
    }
    let mut v = CMatrix::identity(n);
    let tol = 1e-15 * scale;
    let mut converged = false;
    for _sweep in 0..60 {
        let mut off: f64 = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(m[(p, q)].norm());
            }
        }
        if off <= tol {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let g = m[(p, q)];
                let gn = g.norm();
                if gn <= 0.25 * tol {
                    continue;
                }
                let alpha = m[(p, p)].re;
                let beta = m[(q, q)].re;
                let theta = (beta - alpha) / (2.0 * gn);
                let t = if theta >= 0.0 {
                    -1.0 / (theta + (theta * theta + 1.0).sqrt())
                } else {
                    1.0 / (-theta + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let u = g / gn;
                let ubar = u.conj();
                // columns: col_p' = c col_p + s ubar col_q ; col_q' = -s u col_p + c col_q
                for i in 0..n {
                    let aip = m[(i, p)];
                    let aiq = m[(i, q)];
                    m[(i, p)] = aip * c + aiq * (s * ubar);
                    m[(i, q)] = aip * (-s) * u + aiq * c;
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = vip * c + viq * (s * ubar);
                    v[(i, q)] = vip * (-s) * u + viq * c;
                }
                // rows: row_p' = c row_p + s u row_q ; row_q' = -s ubar row_p + c row_q
                for j in 0..n {
                    let apj = m[(p, j)];
                    let aqj = m[(q, j)];
                    m[(p, j)] = apj * c + aqj * (s * u);
                    m[(q, j)] = apj * (-s) * ubar + aqj * c;
                }
                m[(p, q)] = Complex64::new(0.0, 0.0);
                m[(q, p)] = Complex64::new(0.0, 0.0);
                m[(p, p)] = Complex64::new(m[(p, p)].re, 0.0);
                m[(q, q)] = Complex64::new(m[(q, q)].re, 0.0);
            }
        }
    }
    if !converged {
        return Err(Error::EigenNoConvergence(60));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    let vals: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
    idx.sort_by(|&i, &j| vals[i].partial_cmp(&vals[j]).unwrap());
    let sorted_vals: Vec<f64> = idx.iter().map(|&i| vals[i]).collect();
    let mut sorted_vecs = CMatrix::zeros(n);
    for (newcol, &oldcol) in idx.iter().enumerate() {
        for i in 0..n {
            sorted_vecs[(i, newcol)] = v[(i, oldcol)];
        }
    }
    Ok((sorted_vals, sorted_vecs))
}

/// Scalar abstraction for the real symmetric solver.
pub trait Real:
    Copy
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    const ZERO: Self;
    const ONE: Self;
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    fn sqrt(self) -> Self;
    fn abs(self) -> Self;
    /// Convergence epsilon for the off-diagonal norm.
    fn jacobi_eps() -> f64;
}

impl Real for f64 {
    const ZERO: f64 = 0.0;
    const ONE: f64 = 1.0;
    fn from_f64(x: f64) -> f64 {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn sqrt(self) -> f64 {
        f64::sqrt(self)
    }
    fn abs(self) -> f64 {
        f64::abs(self)
    }
    fn jacobi_eps() -> f64 {
        1e-15
    }
}

impl Real for Dd {
    const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };
    fn from_f64(x: f64) -> Dd {
        Dd::from_f64(x)
    }
    fn to_f64(self) -> f64 {
        Dd::to_f64(self)
    }
    fn sqrt(self) -> Dd {
        Dd::sqrt(self)
    }
    fn abs(self) -> Dd {
        Dd::abs(self)
    }
    fn jacobi_eps() -> f64 {
        1e-30
    }
}

/// Eigenvalues (ascending) of a real symmetric matrix, cyclic Jacobi.
/// `a` is n*n row-major and is consumed as workspace.
pub fn symmetric_eigenvalues<R: Real>(mut a: Vec<R>, n: usize) -> Result<Vec<R>> {
    let idx = |i: usize, j: usize| i * n + j;
    let mut scale = R::ZERO;
    for v in &a {
        if v.abs() > scale {
            scale = v.abs();
        }
    }
    if scale == R::ZERO {
        return Ok(vec![R::ZERO; n]);
    }
    let tol = scale * R::from_f64(R::jacobi_eps());
    let mut converged = false;
    for _sweep in 0..80 {
        let mut off = R::ZERO;
        for p in 0..n {
            for q in (p + 1)..n {
                if a[idx(p, q)].abs() > off {
                    off = a[idx(p, q)].abs();
                }
            }
        }
        if off <= tol {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let g = a[idx(p, q)];
                if g.abs() <= tol * R::from_f64(0.25) {
                    continue;
                }
                let theta = (a[idx(q, q)] - a[idx(p, p)]) / (R::from_f64(2.0) * g);
                let t = if theta >= R::ZERO {
                    R::ONE / (theta + (theta * theta + R::ONE).sqrt())
                } else {
                    -(R::ONE) / (-theta + (theta * theta + R::ONE).sqrt())
                };
                let c = R::ONE / (t * t + R::ONE).sqrt();
                let s = t * c;
                for i in 0..n {
                    let aip = a[idx(i, p)];
                    let aiq = a[idx(i, q)];
                    a[idx(i, p)] = aip * c - aiq * s;
                    a[idx(i, q)] = aip * s + aiq * c;
                }
                for j in 0..n {
                    let apj = a[idx(p, j)];
                    let aqj = a[idx(q, j)];
                    a[idx(p, j)] = apj * c - aqj * s;
                    a[idx(q, j)] = apj * s + aqj * c;
                }
                a[idx(p, q)] = R::ZERO;
                a[idx(q, p)] = R::ZERO;
            }
        }
    }
    if !converged {
        return Err(Error::EigenNoConvergence(80));
    }
    let mut vals: Vec<R> = (0..n).map(|i| a[idx(i, i)]).collect();
    vals.sort_by(|x, y| x.partial_cmp(y).unwrap());
    Ok(vals)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_matrix_sorted() {
        let mut m = CMatrix::zeros(3);
        m[(0, 0)] = Complex64::new(3.0, 0.0);
        m[(1, 1)] = Complex64::new(1.0, 0.0);
        m[(2, 2)] = Complex64::new(2.0, 0.0);
        let (vals, _) = hermitian_eigen(&m).unwrap();
        assert_eq!(vals, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn pauli_x() {
        let mut m = CMatrix::zeros(2);
        m[(0, 1)] = Complex64::new(1.0, 0.0);
        m[(1, 0)] = Complex64::new(1.0, 0.0);
        let (vals, v) = hermitian_eigen(&m).unwrap();
        assert!((vals[0] + 1.0).abs() < 1e-14);
        assert!((vals[1] - 1.0).abs() < 1e-14);
        // residual check
        for k in 0..2 {
            let col: Vec<Complex64> = (0..2).map(|i| v[(i, k)]).collect();
            let mv = m.mul_vec(&col);
            for i in 0..2 {
                assert!((mv[i] - col[i] * vals[k]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn complex_hermitian_residual() {
        // pseudo-random Hermitian 8x8
        let n = 8;
        let mut state = 0x12345678u64;
        let mut rnd = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
        };
        let mut m = CMatrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                if i == j {
                    m[(i, j)] = Complex64::new(rnd(), 0.0);
                } else {
                    let z = Complex64::new(rnd(), rnd());
                    m[(i, j)] = z;
                    m[(j, i)] = z.conj();
                }
            }
        }
        let (vals, v) = hermitian_eigen(&m).unwrap();
        let scale = m.max_abs();
        for k in 0..n {
            let col: Vec<Complex64> = (0..n).map(|i| v[(i, k)]).collect();
            let mv = m.mul_vec(&col);
            let mut r: f64 = 0.0;
            for i in 0..n {
                r = r.max((mv[i] - col[i] * vals[k]).norm());
            }
            assert!(r < 1e-13 * scale, "residual {r:.3e}");
        }
        for k in 1..n {
            assert!(vals[k] >= vals[k - 1]);
        }
    }

    #[test]
    fn dd_symmetric_matches_f64() {
        let n = 5;
        let src: Vec<f64> = (0..n * n).map(|k| ((k * 37 % 11) as f64 - 5.0) / 3.0).collect();
        let mut sym = vec![0.0f64; n * n];
        for i in 0..n {
            for j in 0..n {
                sym[i * n + j] = 0.5 * (src[i * n + j] + src[j * n + i]);
            }
        }
        let v64 = symmetric_eigenvalues(sym.clone(), n).unwrap();
        let vdd = symmetric_eigenvalues(sym.iter().map(|&x| Dd::from_f64(x)).collect::<Vec<_>>(), n).unwrap();
        for k in 0..n {
            assert!((v64[k] - vdd[k].to_f64()).abs() < 1e-12);
        }
    }
}
