use num_complex::Complex64;
use thiserror::Error;

/// Which condition of the critical set a degenerate surface satisfies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriticalCondition {
    /// epsilon = 0: the inner branch cut collapses to a point.
    EpsilonZero,
    /// lambda = 0.
    LambdaZero,
    /// (h +- 1)^2 = epsilon * lambda.
    FieldResonance,
    /// 1 - lambda - h^2 = epsilon (1 - lambda): branch points collide at infinity.
    CriticalField,
}

impl CriticalCondition {
    pub fn label(&self) -> &'static str {
        match self {
            CriticalCondition::EpsilonZero => "a (epsilon = 0)",
            CriticalCondition::LambdaZero => "b (lambda = 0)",
            CriticalCondition::FieldResonance => "c ((h +- 1)^2 = eps*lambda)",
            CriticalCondition::CriticalField => "d (1 - lambda - h^2 = eps (1 - lambda))",
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("2J must be a positive integer, got J = {0}")]
    InvalidSpin(f64),
    #[error("spin J = {0} too large (no sparse solver; J <= 50)")]
    SpinTooLarge(f64),
    #[error("anisotropy constants must satisfy k1 > k2 > 0, got k1 = {k1}, k2 = {k2}")]
    InvalidAnisotropy { k1: f64, k2: f64 },
    #[error("dimensionless mapping requires J >= 1, got J = {0}")]
    SpinTooSmallForMapping(f64),
    #[error("matrix is not Hermitian: residual {residual:.3e} exceeds {tolerance:.3e}")]
    NotHermitian { residual: f64, tolerance: f64 },
    #[error("eigensolver did not converge after {0} sweeps")]
    EigenNoConvergence(usize),
    #[error("degenerate surface: critical condition {}", .0.label())]
    DegenerateSurface(CriticalCondition),
    #[error("lambda = 1: poles q_+- collide with the point at infinity")]
    LambdaOne,
    #[error("point {0} is within {1:.1e} of a pole or branch point; indent the path")]
    TooCloseToSingular(Complex64, f64),
    #[error("path too close to a special point near {location} (step collapse)")]
    PathTooClose { location: Complex64 },
    #[error("no isolation radius found for the pole at {0}")]
    NoIsolationRadius(Complex64),
    #[error("field h = {h} at or above the critical field h_c = {h_c}: no instanton regime")]
    NoInstantonRegime { h: f64, h_c: f64 },
    #[error("log argument <= 0 in the closed-form action: field above critical")]
    AboveCriticalField,
    #[error("tolerance {0:.3e} outside the accepted range [1e-12, 1e-4]")]
    BadTolerance(f64),
    #[error("monodromy transport broke continuity at step {step}: |dS| = {jump:.3e}")]
    TransportBroken { step: usize, jump: f64 },
    #[error("loop must enclose exactly one critical value; {0}")]
    BadLoop(String),
    #[error("{0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
