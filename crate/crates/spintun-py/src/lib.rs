//! Python bindings: the quantum oracle, the closed forms, the contour
//! integrals and monodromy transport, with complex values crossing as
//! Python complex numbers.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use spintun::monodromy::{LoopKind, LoopSpec};
use spintun::semiclassics::{self, QuantizationCoefficient};
use spintun::spinmodel::{self, Spin, TunnelingPairs};
use spintun::surface::{self, Moduli, Sheet, SheetPoint};
use spintun::{contour, Error};

fn err_to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidSpin(_)
        | Error::SpinTooLarge(_)
        | Error::InvalidAnisotropy { .. }
        | Error::SpinTooSmallForMapping(_)
        | Error::BadTolerance(_)
        | Error::InvalidInput(_) => PyValueError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn sheet_from(n: u8) -> PyResult<Sheet> {
    match n {
        1 => Ok(Sheet::One),
        2 => Ok(Sheet::Two),
        _ => Err(PyValueError::new_err("sheet must be 1 or 2")),
    }
}

fn loop_kind(name: &str) -> PyResult<LoopKind> {
    Ok(match name {
        "lambda" => LoopKind::Lambda,
        "one_minus_sqrt_lambda" => LoopKind::OneMinusSqrtLambda,
        "one_plus_sqrt_lambda" => LoopKind::OnePlusSqrtLambda,
        "epsilon" => LoopKind::Epsilon,
        "critical_d_combination" => LoopKind::CriticalDCombination,
        _ => return Err(PyValueError::new_err(format!("unknown loop kind '{name}'"))),
    })
}

/// Sorted eigenvalues of H = k1 Jx^2 + lambda k1 Jy^2 - 2 k1 J h Jx.
#[pyfunction]
#[pyo3(signature = (j, lambda, h, k1 = 1.0))]
fn spectrum(j: f64, lambda: f64, h: f64, k1: f64) -> PyResult<Vec<f64>> {
    let spin = Spin::new(j).map_err(err_to_py)?;
    let d = spinmodel::DimensionlessParams { lambda, h, epsilon: 0.0 };
    let p = spinmodel::realize(&d, spin, k1).map_err(err_to_py)?;
    let s = spinmodel::eigensystem(&spinmodel::build_hamiltonian(&p)).map_err(err_to_py)?;
    Ok(s.eigenvalues)
}

/// Tunneling pairs (n, eps_mean, delta) below the barrier.
#[pyfunction]
#[pyo3(signature = (j, lambda, h, k1 = 1.0))]
fn level_splittings(j: f64, lambda: f64, h: f64, k1: f64) -> PyResult<Vec<(usize, f64, f64)>> {
    let spin = Spin::new(j).map_err(err_to_py)?;
    let d = spinmodel::DimensionlessParams { lambda, h, epsilon: 0.0 };
    let p = spinmodel::realize(&d, spin, k1).map_err(err_to_py)?;
    let s = spinmodel::eigensystem(&spinmodel::build_hamiltonian(&p)).map_err(err_to_py)?;
    match spinmodel::level_splittings(&s, &p).map_err(err_to_py)? {
        TunnelingPairs::Pairs(v) => Ok(v.into_iter().map(|t| (t.n, t.eps_mean, t.delta)).collect()),
        TunnelingPairs::NoTunnelingPairs => Ok(Vec::new()),
    }
}

/// Splitting of level n at field h, in extended precision (resolves quench
/// dips far below f64 eigensolver noise).
#[pyfunction]
fn splitting(j: f64, lambda: f64, n: usize, h: f64) -> PyResult<f64> {
    let spin = Spin::new(j).map_err(err_to_py)?;
    Ok(spinmodel::splitting_dd(spin, lambda, n, h).map_err(err_to_py)?.to_f64())
}

/// Quench fields located by scanning Delta_n(h) in [h_lo, h_hi].
#[pyfunction]
fn quench_scan(j: f64, lambda: f64, h_lo: f64, h_hi: f64, n: usize) -> PyResult<Vec<f64>> {
    let spin = Spin::new(j).map_err(err_to_py)?;
    spinmodel::quench_scan(spin, lambda, (h_lo, h_hi), n, Default::default()).map_err(err_to_py)
}

#[pyfunction]
fn quench_fields(j: f64, lambda: f64, m_max: usize) -> PyResult<Vec<f64>> {
    semiclassics::quench_fields(j, lambda, m_max).map_err(err_to_py)
}

#[pyfunction]
fn epsilon_n(n: usize, j: f64, lambda: f64, h: f64) -> PyResult<f64> {
    semiclassics::epsilon_n(n, j, lambda, h).map_err(err_to_py)
}

#[pyfunction]
fn s_cl(epsilon: f64, lambda: f64, h: f64) -> PyResult<f64> {
    semiclassics::s_cl(epsilon, lambda, h).map_err(err_to_py)
}

#[pyfunction]
fn im_s1(n: usize, j: f64, lambda: f64, h: f64) -> PyResult<f64> {
    semiclassics::im_s1(n, j, lambda, h).map_err(err_to_py)
}

#[pyfunction]
fn s_in_closed(lambda: f64, h: f64, epsilon: f64) -> PyResult<f64> {
    semiclassics::s_in_closed(lambda, h, epsilon).map_err(err_to_py)
}

#[pyfunction]
#[pyo3(signature = (lambda, h, n, j, first_order = false))]
fn s_in_excited(lambda: f64, h: f64, n: usize, j: f64, first_order: bool) -> PyResult<f64> {
    let coeff = if first_order {
        QuantizationCoefficient::FirstOrder
    } else {
        QuantizationCoefficient::Replaced
    };
    semiclassics::s_in_excited(lambda, h, n, j, coeff).map_err(err_to_py)
}

/// The four branch points as (inner, outer) upper representatives.
#[pyfunction]
fn branch_points(lambda: f64, h: f64, epsilon: f64) -> PyResult<(Complex64, Complex64)> {
    let bp = surface::branch_points(&Moduli::real(lambda, h, epsilon)).map_err(err_to_py)?;
    Ok((bp.inner, bp.outer))
}

/// The pole table: list of (q, sheet, residue).
#[pyfunction]
fn poles_and_residues(lambda: f64, h: f64, epsilon: f64) -> PyResult<Vec<(Complex64, u8, Complex64)>> {
    let poles = surface::poles_and_residues(&Moduli::real(lambda, h, epsilon)).map_err(err_to_py)?;
    Ok(poles.iter().map(|p| (p.q, p.sheet.index(), p.residue)).collect())
}

/// Which critical condition the moduli satisfy, if any.
#[pyfunction]
fn is_critical(lambda: f64, h: f64, epsilon: f64) -> Option<String> {
    surface::is_critical(&Moduli::real(lambda, h, epsilon)).map(|c| c.label().to_string())
}

#[pyfunction]
fn critical_field(lambda: f64, epsilon: f64) -> f64 {
    surface::critical_field(lambda, epsilon)
}

/// p(q) on the given sheet by analytic continuation from the anchor.
#[pyfunction]
fn p_of_q(lambda: f64, h: f64, epsilon: f64, q: Complex64, sheet: u8) -> PyResult<Complex64> {
    let m = Moduli::real(lambda, h, epsilon);
    let x = SheetPoint { q, sheet: sheet_from(sheet)? };
    surface::p_of_q(&x, &m).map_err(err_to_py)
}

/// Numeric residue of sigma at a pole on the given sheet.
#[pyfunction]
#[pyo3(signature = (lambda, h, epsilon, pole, sheet, radius = 0.08))]
fn residue_numeric(
    lambda: f64,
    h: f64,
    epsilon: f64,
    pole: Complex64,
    sheet: u8,
    radius: f64,
) -> PyResult<Complex64> {
    let m = Moduli::real(lambda, h, epsilon);
    contour::residue_numeric(&m, pole, sheet_from(sheet)?, radius).map_err(err_to_py)
}

#[pyfunction]
#[pyo3(signature = (lambda, h, epsilon, tol = 1e-8))]
fn classical_action(lambda: f64, h: f64, epsilon: f64, tol: f64) -> PyResult<Complex64> {
    contour::classical_action(&Moduli::real(lambda, h, epsilon), tol).map_err(err_to_py)
}

#[pyfunction]
#[pyo3(signature = (lambda, h, epsilon, tol = 1e-8))]
fn closed_instanton_action(lambda: f64, h: f64, epsilon: f64, tol: f64) -> PyResult<Complex64> {
    contour::closed_instanton_action(&Moduli::real(lambda, h, epsilon), tol).map_err(err_to_py)
}

#[pyfunction]
#[pyo3(signature = (lambda, h, epsilon, n, j, tol = 1e-8))]
fn instanton_action(
    lambda: f64,
    h: f64,
    epsilon: f64,
    n: usize,
    j: f64,
    tol: f64,
) -> PyResult<Complex64> {
    contour::instanton_action(&Moduli::real(lambda, h, epsilon), n, j, tol).map_err(err_to_py)
}

/// Transport the closed instanton cycle around a critical-moduli loop.
/// Returns (value_before, value_after, jump, classification).
#[pyfunction]
#[pyo3(signature = (kind, lambda, h, epsilon, steps = 256, tol = 1e-9))]
fn transport(
    kind: &str,
    lambda: f64,
    h: f64,
    epsilon: f64,
    steps: usize,
    tol: f64,
) -> PyResult<(Complex64, Complex64, Complex64, String)> {
    let spec = LoopSpec::new(loop_kind(kind)?, Moduli::real(lambda, h, epsilon), steps);
    let r = spintun::monodromy::transport(&spec, tol).map_err(err_to_py)?;
    Ok((r.value_before, r.value_after, r.jump, format!("{:?}", r.classification)))
}

#[pyfunction]
fn predicted_jump(kind: &str, lambda: f64, h: f64, epsilon: f64) -> PyResult<Complex64> {
    let base = Moduli::real(lambda, h, epsilon);
    let spec = LoopSpec::new(loop_kind(kind)?, base, 64);
    Ok(spintun::monodromy::predicted_jump(&spec, &base))
}

/// Splitting model with the prefactor fitted at zero field.
#[pyclass]
struct SplittingModel {
    inner: semiclassics::SplittingModel,
    lambda: f64,
}

#[pymethods]
impl SplittingModel {
    #[new]
    fn new(j: f64, lambda: f64, level: usize) -> PyResult<Self> {
        let spin = Spin::new(j).map_err(err_to_py)?;
        let d0 = spinmodel::splitting_dd(spin, lambda, level, 0.0).map_err(err_to_py)?.to_f64();
        let inner =
            semiclassics::SplittingModel::fit_at_zero_field(d0, j, lambda, level).map_err(err_to_py)?;
        Ok(SplittingModel { inner, lambda })
    }

    fn splitting(&self, h: f64) -> PyResult<f64> {
        self.inner.splitting(self.lambda, h).map_err(err_to_py)
    }

    #[getter]
    fn prefactor(&self) -> f64 {
        self.inner.prefactor
    }
}

#[pymodule]
fn spintun_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(level_splittings, m)?)?;
    m.add_function(wrap_pyfunction!(splitting, m)?)?;
    m.add_function(wrap_pyfunction!(quench_scan, m)?)?;
    m.add_function(wrap_pyfunction!(quench_fields, m)?)?;
    m.add_function(wrap_pyfunction!(epsilon_n, m)?)?;
    m.add_function(wrap_pyfunction!(s_cl, m)?)?;
    m.add_function(wrap_pyfunction!(im_s1, m)?)?;
    m.add_function(wrap_pyfunction!(s_in_closed, m)?)?;
    m.add_function(wrap_pyfunction!(s_in_excited, m)?)?;
    m.add_function(wrap_pyfunction!(branch_points, m)?)?;
    m.add_function(wrap_pyfunction!(poles_and_residues, m)?)?;
    m.add_function(wrap_pyfunction!(is_critical, m)?)?;
    m.add_function(wrap_pyfunction!(critical_field, m)?)?;
    m.add_function(wrap_pyfunction!(p_of_q, m)?)?;
    m.add_function(wrap_pyfunction!(residue_numeric, m)?)?;
    m.add_function(wrap_pyfunction!(classical_action, m)?)?;
    m.add_function(wrap_pyfunction!(closed_instanton_action, m)?)?;
    m.add_function(wrap_pyfunction!(instanton_action, m)?)?;
    m.add_function(wrap_pyfunction!(transport, m)?)?;
    m.add_function(wrap_pyfunction!(predicted_jump, m)?)?;
    m.add_class::<SplittingModel>()?;
    Ok(())
}
