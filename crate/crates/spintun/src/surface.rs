//! The genus-1 energy surface F(p,q) = ((p-h)^2 - eps*lambda)(1+q^2)
//! + lambda q^2 (1-p^2) = 0: radicand coefficients, branch points, the
//! two-sheeted p(q), the 1-form density, poles with residues, and the
//! critical-set predicate.

use crate::error::{CriticalCondition, Error, Result};
use num_complex::Complex64;

pub type C64 = Complex64;

/// Moduli of the surface. Complex-capable; physical runs use real values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moduli {
    pub lambda: C64,
    pub h: C64,
    pub epsilon: C64,
}

impl Moduli {
    pub fn new(lambda: C64, h: C64, epsilon: C64) -> Moduli {
        Moduli { lambda, h, epsilon }
    }

    pub fn real(lambda: f64, h: f64, epsilon: f64) -> Moduli {
        Moduli {
            lambda: C64::new(lambda, 0.0),
            h: C64::new(h, 0.0),
            epsilon: C64::new(epsilon, 0.0),
        }
    }

    pub fn is_real(&self) -> bool {
        self.lambda.im == 0.0 && self.h.im == 0.0 && self.epsilon.im == 0.0
    }

    /// Physical-mode validity: lambda in (0,1), h^2 < 1, epsilon >= 0, all real.
    pub fn is_physical(&self) -> bool {
        self.is_real()
            && self.lambda.re > 0.0
            && self.lambda.re < 1.0
            && self.h.re.abs() < 1.0
            && self.epsilon.re >= 0.0
    }
}

/// Radicand coefficients of R(q) = c0 + c2 q^2 + c4 q^4 under the square root
/// of p(q).
pub fn radicand_coeffs(m: &Moduli) -> (C64, C64, C64) {
    let one = C64::new(1.0, 0.0);
    let two = C64::new(2.0, 0.0);
    let c0 = m.epsilon;
    let c2 = m.epsilon * (two - m.lambda) - one + m.h * m.h;
    let c4 = m.epsilon * (one - m.lambda) + m.h * m.h + m.lambda - one;
    (c0, c2, c4)
}

/// lambda * R(q): the discriminant whose square root separates the sheets.
/// Tracking sqrt(disc) avoids a separate sqrt(lambda) branch choice.
pub fn disc(m: &Moduli, q: C64) -> C64 {
    let (c0, c2, c4) = radicand_coeffs(m);
    let q2 = q * q;
    m.lambda * (c0 + c2 * q2 + c4 * q2 * q2)
}

/// The same discriminant in the w = 1/q chart: w^4 disc(1/w), regular at w=0.
pub fn disc_w(m: &Moduli, w: C64) -> C64 {
    let (c0, c2, c4) = radicand_coeffs(m);
    let w2 = w * w;
    m.lambda * (c4 + c2 * w2 + c0 * w2 * w2)
}

/// Denominator of p(q).
pub fn p_denom(m: &Moduli, q: C64) -> C64 {
    C64::new(1.0, 0.0) + (C64::new(1.0, 0.0) - m.lambda) * q * q
}

/// p(q) on the branch with sqrt(lambda R) = s. The two algebraically
/// equivalent quotient forms are chosen by denominator size so the value
/// stays accurate near the removable point at q_+- where both the naive
/// numerator and denominator vanish.
pub fn p_from_branch(m: &Moduli, q: C64, s: C64) -> C64 {
    let q2 = q * q;
    let num = m.h * (C64::new(1.0, 0.0) + q2);
    let d = p_denom(m, q);
    let dscale = 1.0 + (C64::new(1.0, 0.0) - m.lambda).norm() * q2.norm();
    if d.norm() > 0.05 * dscale {
        (num + s) / d
    } else {
        // p1 p2 = C/D with C = (h^2 - eps lambda)(1+q^2) + lambda q^2:
        // p = C / (D * p_other) = C / (h(1+q^2) - s)
        let c = (m.h * m.h - m.epsilon * m.lambda) * (C64::new(1.0, 0.0) + q2) + m.lambda * q2;
        c / (num - s)
    }
}

/// The 1-form density sigma/dq = i (1 - p) / (1 + q^2) on the given branch.
pub fn sigma_from_branch(m: &Moduli, q: C64, s: C64) -> C64 {
    let p = p_from_branch(m, q, s);
    C64::new(0.0, 1.0) * (C64::new(1.0, 0.0) - p) / (C64::new(1.0, 0.0) + q * q)
}

/// sigma in the w = 1/q chart with branch st = w^2 * s: -i (1 - p~) / (1 + w^2).
pub fn sigma_w_from_branch(m: &Moduli, w: C64, st: C64) -> C64 {
    let w2 = w * w;
    let p = (m.h * (C64::new(1.0, 0.0) + w2) + st) / (w2 + C64::new(1.0, 0.0) - m.lambda);
    C64::new(0.0, -1.0) * (C64::new(1.0, 0.0) - p) / (C64::new(1.0, 0.0) + w2)
}

/// The defining polynomial of the curve.
pub fn curve_residual(m: &Moduli, p: C64, q: C64) -> C64 {
    let one = C64::new(1.0, 0.0);
    ((p - m.h) * (p - m.h) - m.epsilon * m.lambda) * (one + q * q)
        + m.lambda * q * q * (one - p * p)
}

/// One of the two sheets, labeled by the anchor convention: at q = 0 + i*delta
/// sheet 1 takes the + sign in p(q) with the principal square root.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sheet {
    One,
    Two,
}

impl Sheet {
    pub fn other(self) -> Sheet {
        match self {
            Sheet::One => Sheet::Two,
            Sheet::Two => Sheet::One,
        }
    }

    pub fn index(self) -> u8 {
        match self {
            Sheet::One => 1,
            Sheet::Two => 2,
        }
    }
}

/// A point of the surface: base point plus sheet label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SheetPoint {
    pub q: C64,
    pub sheet: Sheet,
}

/// The four branch points, classified into the pair connected to q=0 as
/// eps -> 0 (inner) and the pair that merges with q_+- as h -> 0 (outer).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchPoints {
    /// +root of the inner pair (the pair is +-inner)
    pub inner: C64,
    /// +root of the outer pair
    pub outer: C64,
    /// true when the inner pair is degenerate at q = 0 (eps = 0)
    pub inner_degenerate: bool,
}

impl BranchPoints {
    pub fn all(&self) -> [C64; 4] {
        [self.inner, -self.inner, self.outer, -self.outer]
    }
}

/// Solve the biquadratic radicand for the four branch points.
pub fn branch_points(m: &Moduli) -> Result<BranchPoints> {
    if let Some(cond) = is_critical(m) {
        // eps = 0 keeps a well-defined (degenerate-inner) surface that the
        // rest of the crate works with; everything else is rejected.
        if cond != CriticalCondition::EpsilonZero {
            return Err(Error::DegenerateSurface(cond));
        }
    }
    let (c0, c2, c4) = radicand_coeffs(m);
    let scale = c0.norm().max(c2.norm()).max(c4.norm());
    if c4.norm() <= 1e-14 * scale {
        return Err(Error::DegenerateSurface(CriticalCondition::CriticalField));
    }
    // stable quadratic in u = q^2
    let disc = (c2 * c2 - 4.0 * c4 * c0).sqrt();
    // pick the sign that avoids cancellation in -c2 -+ disc
    let (big, small) = if (-c2 + disc).norm() >= (-c2 - disc).norm() {
        let u1 = (-c2 + disc) / (2.0 * c4);
        (u1, if u1.norm() > 0.0 { c0 / (c4 * u1) } else { (-c2 - disc) / (2.0 * c4) })
    } else {
        let u1 = (-c2 - disc) / (2.0 * c4);
        (u1, if u1.norm() > 0.0 { c0 / (c4 * u1) } else { (-c2 + disc) / (2.0 * c4) })
    };
    let (u_in, u_out) = if small.norm() <= big.norm() { (small, big) } else { (big, small) };
    let inner = u_in.sqrt();
    let outer = u_out.sqrt();
    Ok(BranchPoints {
        inner,
        outer,
        inner_degenerate: inner.norm() < 1e-9,
    })
}

/// A pole of sigma with the sheet that carries the nonzero residue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoleData {
    pub q: C64,
    pub sheet: Sheet,
    pub residue: C64,
}

/// The four poles of sigma and their residues under the anchor convention,
/// each attached to the sheet on which it is actually polar (the other sheet
/// is removable). For h > 0 the continuation from q = 0 + i*delta puts the
/// +h/sqrt(1-lambda) residue at q_- on sheet 1 and -h/sqrt(1-lambda) at q_+
/// on sheet 2; the measure poles sit at +i (sheet 2, residue 1) and -i
/// (sheet 1, residue -1).
pub fn poles_and_residues(m: &Moduli) -> Result<[PoleData; 4]> {
    let one = C64::new(1.0, 0.0);
    if (one - m.lambda).norm() < 1e-12 {
        return Err(Error::LambdaOne);
    }
    let i = C64::new(0.0, 1.0);
    let qp = i / (one - m.lambda).sqrt();
    let res = m.h / (one - m.lambda).sqrt();
    Ok([
        PoleData { q: i, sheet: Sheet::Two, residue: one },
        PoleData { q: -i, sheet: Sheet::One, residue: -one },
        PoleData { q: qp, sheet: Sheet::Two, residue: -res },
        PoleData { q: -qp, sheet: Sheet::One, residue: res },
    ])
}

/// All special points (poles and branch points) for clearance checks.
pub fn special_points(m: &Moduli) -> Result<Vec<C64>> {
    let bp = branch_points(m)?;
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    let qp = i / (one - m.lambda).sqrt();
    let mut pts = vec![i, -i, qp, -qp, bp.outer, -bp.outer];
    if !bp.inner_degenerate {
        pts.push(bp.inner);
        pts.push(-bp.inner);
    } else {
        pts.push(C64::new(0.0, 0.0));
    }
    Ok(pts)
}

const CRITICAL_TOL: f64 = 1e-12;

/// Report the first critical condition satisfied within tolerance, if any.
pub fn is_critical(m: &Moduli) -> Option<CriticalCondition> {
    let one = C64::new(1.0, 0.0);
    let scale = 1.0 + m.lambda.norm() + m.h.norm() + m.epsilon.norm();
    if m.epsilon.norm() <= CRITICAL_TOL * scale {
        return Some(CriticalCondition::EpsilonZero);
    }
    if m.lambda.norm() <= CRITICAL_TOL * scale {
        return Some(CriticalCondition::LambdaZero);
    }
    let el = m.epsilon * m.lambda;
    let cp = (m.h + one) * (m.h + one) - el;
    let cm = (m.h - one) * (m.h - one) - el;
    if cp.norm() <= CRITICAL_TOL * scale || cm.norm() <= CRITICAL_TOL * scale {
        return Some(CriticalCondition::FieldResonance);
    }
    let d = one - m.lambda - m.h * m.h - m.epsilon * (one - m.lambda);
    if d.norm() <= CRITICAL_TOL * scale {
        return Some(CriticalCondition::CriticalField);
    }
    None
}

/// Critical field exposed by condition d: h_c = sqrt((1-lambda)(1-eps)).
pub fn critical_field(lambda: f64, epsilon: f64) -> f64 {
    ((1.0 - lambda) * (1.0 - epsilon)).max(0.0).sqrt()
}

/// p(q) at a sheet point, by analytic continuation from the anchor along a
/// reference path that crosses no cut.
pub fn p_of_q(x: &SheetPoint, m: &Moduli) -> Result<C64> {
    let s = crate::contour::branch_value_at(m, x)?;
    Ok(p_from_branch(m, x.q, s))
}

/// sigma density at a sheet point.
pub fn sigma_density(x: &SheetPoint, m: &Moduli) -> Result<C64> {
    let s = crate::contour::branch_value_at(m, x)?;
    Ok(sigma_from_branch(m, x.q, s))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coeffs_fig2_moduli() {
        let m = Moduli::real(0.5, 0.4, 0.1);
        let (c0, c2, c4) = radicand_coeffs(&m);
        assert!((c0 - C64::new(0.1, 0.0)).norm() < 1e-15);
        assert!((c2 - C64::new(-0.69, 0.0)).norm() < 1e-15);
        assert!((c4 - C64::new(-0.29, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn coeffs_zero_field_zero_energy() {
        let m = Moduli::real(0.728, 0.0, 0.0);
        let (c0, c2, c4) = radicand_coeffs(&m);
        assert!(c0.norm() < 1e-15);
        assert!((c2 - C64::new(-1.0, 0.0)).norm() < 1e-15);
        assert!((c4 - C64::new(-0.272, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn branch_points_fig2() {
        let m = Moduli::real(0.5, 0.4, 0.1);
        let bp = branch_points(&m).unwrap();
        // frozen from 30-digit arithmetic
        assert!((bp.inner - C64::new(0.370182490244328, 0.0)).norm() < 1e-12);
        assert!((bp.outer - C64::new(0.0, 1.58629928478553)).norm() < 1e-12);
        // residual: R(q_b) = 0
        for q in bp.all() {
            let r = disc(&m, q).norm() / m.lambda.norm();
            assert!(r < 1e-12, "residual {r:.3e}");
        }
    }

    #[test]
    fn branch_points_degenerate_inner() {
        let m = Moduli::real(0.728, 0.2, 0.0);
        let bp = branch_points(&m).unwrap();
        assert!(bp.inner_degenerate);
        assert!(bp.inner.norm() < 1e-12);
        // outer pure imaginary, beyond q_+ = i/sqrt(1-lambda)
        assert!(bp.outer.re.abs() < 1e-12);
        let qp_mag = 1.0 / (1.0f64 - 0.728).sqrt();
        assert!(bp.outer.im.abs() > qp_mag);
        assert!((bp.outer - C64::new(0.0, 2.03419051086243)).norm() < 1e-12);
    }

    #[test]
    fn zero_field_outer_at_poles() {
        let m = Moduli::real(0.6, 0.0, 0.0);
        let bp = branch_points(&m).unwrap();
        let qp = 1.0 / (1.0f64 - 0.6).sqrt();
        assert!((bp.outer - C64::new(0.0, qp)).norm() < 1e-12);
    }

    #[test]
    fn critical_conditions() {
        assert_eq!(
            is_critical(&Moduli::real(0.728, 0.5215361, 0.0)),
            Some(CriticalCondition::EpsilonZero),
            "eps=0 reports first"
        );
        let hc = critical_field(0.728, 0.3);
        let m = Moduli::real(0.728, hc, 0.3);
        assert_eq!(is_critical(&m), Some(CriticalCondition::CriticalField));
        assert_eq!(is_critical(&Moduli::real(0.5, 0.4, 0.1)), None);
        // condition c
        let eps = 0.1f64;
        let lam = 0.5f64;
        let h = 1.0 - (eps * lam).sqrt();
        assert_eq!(
            is_critical(&Moduli::real(lam, h, eps)),
            Some(CriticalCondition::FieldResonance)
        );
    }

    #[test]
    fn critical_field_invariant_under_lambda_inversion_shape() {
        // at eps=0, h=0 condition d fires only at lambda=1, fixed under 1/lambda
        for lam in [0.3, 0.6, 0.9] {
            let a = is_critical(&Moduli::real(lam, 0.0, 0.5));
            let b = is_critical(&Moduli::real(1.0 / lam, 0.0, 0.5));
            assert_eq!(
                matches!(a, Some(CriticalCondition::CriticalField)),
                matches!(b, Some(CriticalCondition::CriticalField))
            );
        }
    }

    #[test]
    fn residue_sum_is_zero() {
        for (lam, h) in [(0.5, 0.4), (0.728, 0.2), (0.9, 0.05)] {
            let m = Moduli::real(lam, h, 0.1);
            let poles = poles_and_residues(&m).unwrap();
            let sum: C64 = poles.iter().map(|p| p.residue).sum();
            assert!(sum.norm() <= 1e-13);
        }
    }

    #[test]
    fn residues_vanish_at_zero_field() {
        let m = Moduli::real(0.5, 0.0, 0.1);
        let poles = poles_and_residues(&m).unwrap();
        assert!(poles[2].residue.norm() < 1e-15);
        assert!(poles[3].residue.norm() < 1e-15);
    }

    #[test]
    fn lambda_one_rejected() {
        let m = Moduli::real(1.0, 0.1, 0.1);
        assert!(poles_and_residues(&m).is_err());
    }
}
