//! Property tests for the structural invariants.

use num_complex::Complex64;
use proptest::prelude::*;
use spintun::semiclassics;
use spintun::spinmodel::{self, Spin};
use spintun::surface::{self, Moduli, Sheet, SheetPoint};

fn physical_moduli() -> impl Strategy<Value = (f64, f64, f64)> {
    (0.05f64..0.95, 0.0f64..0.9, 0.0f64..0.5).prop_filter("below critical", |(lam, hfrac, eps)| {
        let hc = surface::critical_field(*lam, *eps);
        hfrac * hc < 0.95 * hc && *eps < 0.9
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn curve_residual_vanishes_on_both_sheets((lam, hfrac, eps) in physical_moduli(),
                                              re in -1.5f64..1.5, im in 0.05f64..1.5) {
        let h = hfrac * surface::critical_field(lam, eps);
        let m = Moduli::real(lam, h, eps);
        let q = Complex64::new(re, im);
        let clear = surface::special_points(&m).unwrap().iter()
            .all(|z| (q - z).norm() > 0.05);
        prop_assume!(clear);
        for sheet in [Sheet::One, Sheet::Two] {
            let p = surface::p_of_q(&SheetPoint { q, sheet }, &m).unwrap();
            let f = surface::curve_residual(&m, p, q);
            prop_assert!(f.norm() < 1e-11, "residual {:.3e}", f.norm());
        }
    }

    #[test]
    fn residue_sum_vanishes((lam, hfrac, eps) in physical_moduli()) {
        let h = hfrac * surface::critical_field(lam, eps);
        let m = Moduli::real(lam, h, eps);
        let sum: Complex64 = surface::poles_and_residues(&m).unwrap()
            .iter().map(|p| p.residue).sum();
        prop_assert!(sum.norm() <= 1e-13);
    }

    #[test]
    fn s_in_closed_is_even_in_h(lam in 0.1f64..0.9, hfrac in 0.0f64..0.9, eps in 0.0f64..0.3) {
        let h = hfrac * surface::critical_field(lam, eps);
        prop_assume!(semiclassics::s_in_closed(lam, h, eps).is_ok());
        let a = semiclassics::s_in_closed(lam, h, eps).unwrap();
        let b = semiclassics::s_in_closed(lam, -h, eps).unwrap();
        prop_assert!((a - b).abs() < 1e-13);
    }

    #[test]
    fn splitting_even_in_field(twice_j in 4u32..14, lam in 0.3f64..0.9, hfrac in 0.01f64..0.5) {
        let j = Spin::from_twice(twice_j).unwrap();
        let h = hfrac * (1.0 - lam).sqrt();
        let dp = spinmodel::splitting_generic::<f64>(j, lam, 0, h).unwrap();
        let dm = spinmodel::splitting_generic::<f64>(j, lam, 0, -h).unwrap();
        prop_assert!((dp - dm).abs() <= 1e-11 * dp.abs().max(1e-300));
    }

    #[test]
    fn hamiltonian_hermitian_and_real_spectrum(twice_j in 2u32..20, lam in 0.2f64..0.9,
                                               z in -0.5f64..0.5) {
        let j = Spin::from_twice(twice_j).unwrap();
        let p = spinmodel::SpinParams::new(j, 1.0, lam, z).unwrap();
        let hm = spinmodel::build_hamiltonian(&p);
        prop_assert!(hm.hermiticity_residual() <= 1e-13 * hm.max_abs().max(1e-300));
        let s = spinmodel::eigensystem(&hm).unwrap();
        prop_assert!(s.residual_norm <= 1e-12 * s.spectral_range().max(1e-300));
        for w in s.eigenvalues.windows(2) {
            prop_assert!(w[1] >= w[0]);
        }
    }

    #[test]
    fn zero_field_form_odd_in_sqrt_lambda(lam in 0.05f64..0.95) {
        // S_in(sqrt(lam)) = 2 ln((1-s)/(1+s)) flips sign under s -> -s
        let s = lam.sqrt();
        let plus = 2.0 * ((1.0 - s) / (1.0 + s)).ln();
        let minus = 2.0 * ((1.0 + s) / (1.0 - s)).ln();
        prop_assert!((plus + minus).abs() < 1e-12);
    }
}
