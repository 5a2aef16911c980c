//! Quantum-mechanical oracle: spin operators, the anisotropy Hamiltonian
//! H = k1 Jx^2 + k2 Jy^2 - zeeman Jx, its exact spectrum, the dimensionless
//! parameter map, tunneling splittings and quench-field scans.

use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, symmetric_eigenvalues, CMatrix, Real};
use num_complex::Complex64;

/// Spin quantum number, stored as 2J so half-integers are exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Spin {
    twice: u32,
}

impl Spin {
    pub fn new(j: f64) -> Result<Spin> {
        let twice = (2.0 * j).round();
        if !(twice > 0.0 && (2.0 * j - twice).abs() < 1e-9) {
            return Err(Error::InvalidSpin(j));
        }
        if twice > 100.0 {
            return Err(Error::SpinTooLarge(j));
        }
        Ok(Spin { twice: twice as u32 })
    }

    pub fn from_twice(twice: u32) -> Result<Spin> {
        if twice == 0 || twice > 100 {
            return Err(Error::InvalidSpin(twice as f64 / 2.0));
        }
        Ok(Spin { twice })
    }

    #[inline]
    pub fn j(&self) -> f64 {
        self.twice as f64 / 2.0
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.twice as usize + 1
    }

    #[inline]
    pub fn is_half_integer(&self) -> bool {
        self.twice % 2 == 1
    }
}

/// Laboratory parameters of the anisotropy Hamiltonian (energies in Kelvin).
/// `zeeman` is the scalar g*muB*H of the -H.Jx term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinParams {
    pub j: Spin,
    pub k1: f64,
    pub k2: f64,
    pub zeeman: f64,
}

impl SpinParams {
    pub fn new(j: Spin, k1: f64, k2: f64, zeeman: f64) -> Result<SpinParams> {
        if !(k1 > k2 && k2 > 0.0) {
            return Err(Error::InvalidAnisotropy { k1, k2 });
        }
        Ok(SpinParams { j, k1, k2, zeeman })
    }
}

/// Dimensionless moduli (lambda, h) plus a dimensionless energy epsilon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimensionlessParams {
    pub lambda: f64,
    pub h: f64,
    pub epsilon: f64,
}

/// Full sorted spectrum with raw pair splittings and the eigen-residual.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    /// Delta_n = E(2n+1) - E(2n) for every full pair (unfiltered).
    pub splittings: Vec<f64>,
    /// max_k || H v_k - E_k v_k ||_2.
    pub residual_norm: f64,
}

impl Spectrum {
    pub fn spectral_range(&self) -> f64 {
        match (self.eigenvalues.first(), self.eigenvalues.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }
}

/// One tunneling pair: level index n, dimensionless mean energy, splitting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TunnelingPair {
    pub n: usize,
    pub eps_mean: f64,
    pub delta: f64,
}

/// Result of pairing up a spectrum; explicit about the empty case.
#[derive(Debug, Clone, PartialEq)]
pub enum TunnelingPairs {
    Pairs(Vec<TunnelingPair>),
    NoTunnelingPairs,
}

/// Angular momentum matrices on |J,m>, m = -J..J ascending. Jz is diagonal.
pub fn build_spin_operators(j: Spin) -> (CMatrix, CMatrix, CMatrix) {
    let n = j.dim();
    let jj = j.j();
    let mut jx = CMatrix::zeros(n);
    let mut jy = CMatrix::zeros(n);
    let mut jz = CMatrix::zeros(n);
    for k in 0..n {
        let m = -jj + k as f64;
        jz[(k, k)] = Complex64::new(m, 0.0);
        if k + 1 < n {
            // <m+1| J+ |m> = sqrt(J(J+1) - m(m+1))
            let c = (jj * (jj + 1.0) - m * (m + 1.0)).sqrt();
            jx[(k + 1, k)] = Complex64::new(c / 2.0, 0.0);
            jx[(k, k + 1)] = Complex64::new(c / 2.0, 0.0);
            jy[(k + 1, k)] = Complex64::new(0.0, -c / 2.0);
            jy[(k, k + 1)] = Complex64::new(0.0, c / 2.0);
        }
    }
    (jx, jy, jz)
}

/// H = k1 Jx^2 + k2 Jy^2 - zeeman Jx.
pub fn build_hamiltonian(p: &SpinParams) -> CMatrix {
    let (jx, jy, _) = build_spin_operators(p.j);
    let jx2 = jx.mul(&jx);
    let jy2 = jy.mul(&jy);
    jx2.scale(Complex64::new(p.k1, 0.0))
        .add(&jy2.scale(Complex64::new(p.k2, 0.0)))
        .sub(&jx.scale(Complex64::new(p.zeeman, 0.0)))
}

/// Diagonalize a Hermitian matrix into a Spectrum.
pub fn eigensystem(h: &CMatrix) -> Result<Spectrum> {
    let (vals, vecs) = hermitian_eigen(h)?;
    let n = h.n;
    let mut residual: f64 = 0.0;
    for k in 0..n {
        let col: Vec<Complex64> = (0..n).map(|i| vecs[(i, k)]).collect();
        let hv = h.mul_vec(&col);
        let mut r2 = 0.0;
        for i in 0..n {
            r2 += (hv[i] - col[i] * vals[k]).norm_sqr();
        }
        residual = residual.max(r2.sqrt());
    }
    let mut splittings = Vec::new();
    let mut i = 0;
    while i + 1 < vals.len() {
        splittings.push(vals[i + 1] - vals[i]);
        i += 2;
    }
    Ok(Spectrum { eigenvalues: vals, splittings, residual_norm: residual })
}

/// Laboratory -> dimensionless. The field map h = zeeman / (2 k1 J) makes the
/// quench condition h_m = sqrt(1-lambda) (m+1/2) / J hold exactly against the
/// diagonalized spectrum (the exact degeneracy sits at
/// zeeman = 2 k1 sqrt(1-lambda) (m+1/2), independent of J).
pub fn map_parameters(p: &SpinParams) -> Result<DimensionlessParams> {
    if p.j.j() < 1.0 {
        return Err(Error::SpinTooSmallForMapping(p.j.j()));
    }
    Ok(DimensionlessParams {
        lambda: p.k2 / p.k1,
        h: p.zeeman / (2.0 * p.k1 * p.j.j()),
        epsilon: 0.0,
    })
}

/// Dimensionless -> laboratory (epsilon is not representable and is dropped).
pub fn realize(d: &DimensionlessParams, j: Spin, k1: f64) -> Result<SpinParams> {
    if j.j() < 1.0 {
        return Err(Error::SpinTooSmallForMapping(j.j()));
    }
    SpinParams::new(j, k1, d.lambda * k1, 2.0 * k1 * j.j() * d.h)
}

/// Eigenvalue E (Kelvin) -> dimensionless epsilon.
pub fn energy_to_epsilon(e: f64, p: &SpinParams) -> Result<f64> {
    let j = p.j.j();
    if j < 1.0 {
        return Err(Error::SpinTooSmallForMapping(j));
    }
    let d = map_parameters(p)?;
    Ok((e - (p.k1 + p.k2) * j / 2.0) / (p.k2 * j * (j - 0.5)) + (p.k1 / p.k2) * d.h * d.h)
}

/// Dimensionless barrier energy at given (lambda, h): critical condition d.
pub fn epsilon_barrier(lambda: f64, h: f64) -> f64 {
    (1.0 - lambda - h * h) / (1.0 - lambda)
}

/// Group the spectrum into tunneling pairs with dimensionless mean energies.
/// Pairs are accepted while the splitting stays below a tenth of the local
/// level spacing and the mean energy is below the barrier.
pub fn level_splittings(s: &Spectrum, p: &SpinParams) -> Result<TunnelingPairs> {
    let d = map_parameters(p)?;
    let barrier = epsilon_barrier(d.lambda, d.h);
    let e = &s.eigenvalues;
    let mut pairs = Vec::new();
    let mut n = 0;
    while 2 * n + 1 < e.len() {
        let delta = e[2 * n + 1] - e[2 * n];
        let spacing = if 2 * n + 2 < e.len() {
            e[2 * n + 2] - e[2 * n + 1]
        } else {
            f64::INFINITY
        };
        if delta > 0.1 * spacing {
            break;
        }
        let eps_mean = energy_to_epsilon(0.5 * (e[2 * n] + e[2 * n + 1]), p)?;
        if eps_mean >= barrier {
            break;
        }
        pairs.push(TunnelingPair { n, eps_mean, delta });
        n += 1;
    }
    if pairs.is_empty() {
        Ok(TunnelingPairs::NoTunnelingPairs)
    } else {
        Ok(TunnelingPairs::Pairs(pairs))
    }
}

/// Real symmetric Hamiltonian in scalar type R (the matrix is real in the
/// |J,m> basis: Jx is real and Jy^2 = -(iJy)^2 with iJy real antisymmetric).
fn hamiltonian_sym<R: Real>(j: Spin, k1: R, k2: R, zeeman: R) -> Vec<R> {
    let n = j.dim();
    let jj_num = j.twice as f64 / 2.0;
    let mut c = Vec::with_capacity(n - 1);
    for k in 0..(n - 1) {
        let m = -jj_num + k as f64;
        // J(J+1) - m(m+1) in exact halves, then sqrt in R
        let val = R::from_f64(jj_num * (jj_num + 1.0) - m * (m + 1.0));
        c.push(val.sqrt() / R::from_f64(2.0));
    }
    // Jx tridiagonal with off-diagonal c; K = iJy with K[k+1][k] = c, K[k][k+1] = -c.
    let idx = |i: usize, jj: usize| i * n + jj;
    let mut jx = vec![R::ZERO; n * n];
    let mut kk = vec![R::ZERO; n * n];
    for k in 0..(n - 1) {
        jx[idx(k + 1, k)] = c[k];
        jx[idx(k, k + 1)] = c[k];
        kk[idx(k + 1, k)] = c[k];
        kk[idx(k, k + 1)] = -c[k];
    }
    let mut h = vec![R::ZERO; n * n];
    for i in 0..n {
        for jcol in 0..n {
            let mut acc = R::ZERO;
            for l in 0..n {
                acc = acc + jx[idx(i, l)] * jx[idx(l, jcol)] * k1
                    - kk[idx(i, l)] * kk[idx(l, jcol)] * k2;
            }
            h[idx(i, jcol)] = acc - zeeman * jx[idx(i, jcol)];
        }
    }
    h
}

/// Splitting Delta_n at dimensionless field h, computed in scalar R.
pub fn splitting_generic<R: Real>(j: Spin, lambda: f64, n: usize, h: R) -> Result<R> {
    let k1 = R::ONE;
    let k2 = R::from_f64(lambda);
    let zeeman = R::from_f64(2.0 * j.j()) * h;
    let m = hamiltonian_sym(j, k1, k2, zeeman);
    let vals = symmetric_eigenvalues(m, j.dim())?;
    if 2 * n + 1 >= vals.len() {
        return Err(Error::InvalidInput(format!("level {n} out of range for J = {}", j.j())));
    }
    Ok(vals[2 * n + 1] - vals[2 * n])
}

/// Splitting in double-double precision (for quench certification).
pub fn splitting_dd(j: Spin, lambda: f64, n: usize, h: f64) -> Result<Dd> {
    splitting_generic(j, lambda, n, Dd::from_f64(h))
}

/// Options for the quench scan.
#[derive(Debug, Clone, Copy)]
pub struct QuenchScanOptions {
    pub grid_points: usize,
    /// refine minima to |dh| below this
    pub h_tolerance: f64,
}

impl Default for QuenchScanOptions {
    fn default() -> Self {
        QuenchScanOptions { grid_points: 400, h_tolerance: 1e-9 }
    }
}

/// Locate quench fields (minima of Delta_n(h)) in [h_lo, h_hi] by a coarse
/// f64 grid over log Delta followed by golden-section refinement in
/// double-double precision (the dips bottom out far below f64 resolution).
pub fn quench_scan(
    j: Spin,
    lambda: f64,
    h_range: (f64, f64),
    n: usize,
    opts: QuenchScanOptions,
) -> Result<Vec<f64>> {
    let (lo, hi) = h_range;
    if !(hi > lo) {
        return Ok(Vec::new());
    }
    let pts = opts.grid_points.max(400);
    let mut grid = Vec::with_capacity(pts + 1);
    for k in 0..=pts {
        let h = lo + (hi - lo) * (k as f64) / (pts as f64);
        let d = splitting_generic::<f64>(j, lambda, n, h)?;
        grid.push((h, d.abs().max(f64::MIN_POSITIVE).ln()));
    }
    let mut out = Vec::new();
    for k in 1..pts {
        if grid[k].1 < grid[k - 1].1 && grid[k].1 <= grid[k + 1].1 {
            let a = grid[k - 1].0;
            let b = grid[k + 1].0;
            out.push(refine_quench_dd(j, lambda, n, a, b, opts.h_tolerance)?);
        }
    }
    Ok(out)
}

fn refine_quench_dd(j: Spin, lambda: f64, n: usize, mut a: f64, mut b: f64, tol: f64) -> Result<f64> {
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let mut fc = splitting_dd(j, lambda, n, c)?.abs();
    let mut fd = splitting_dd(j, lambda, n, d)?.abs();
    while (b - a) > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = splitting_dd(j, lambda, n, c)?.abs();
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = splitting_dd(j, lambda, n, d)?.abs();
        }
    }
    Ok(0.5 * (a + b))
}
