//! Semiclassical tunneling actions for an anisotropic large spin, computed
//! three independent ways and cross-validated:
//!
//! * exact diagonalization of H = k1 Jx^2 + k2 Jy^2 - zeeman Jx
//!   ([`spinmodel`]),
//! * numerical contour integration of the 1-form sigma on the two-sheeted
//!   energy surface, with branch tracking and a chart at infinity
//!   ([`surface`], [`contour`]),
//! * the closed forms obtained from residues and monodromy arguments
//!   ([`semiclassics`]), with the monodromy jumps themselves verified by
//!   numerical transport of the cycles around critical moduli
//!   ([`monodromy`]).

pub mod contour;
pub mod dd;
pub mod error;
pub mod linalg;
pub mod monodromy;
pub mod semiclassics;
pub mod spinmodel;
pub mod surface;
pub mod verification;

pub use error::{CriticalCondition, Error, Result};
