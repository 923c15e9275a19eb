use std::f64::consts::FRAC_PI_2;

use opentri_core::jacobi::{first_zero, focal_distance, index_form, solve_jacobi, FnField};
use opentri_core::warping::{CurvatureProfile, PolyPiece};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn constant_curvature_zero(k in 0.2f64..4.0) {
        let sol = solve_jacobi(&CurvatureProfile::Constant(k), 1.0, 0.0, 10.0).unwrap();
        let z = first_zero(&sol).unwrap();
        prop_assert!((z - FRAC_PI_2 / k.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn flat_focal_distance(lambda in 0.1f64..3.0) {
        let z = focal_distance(&CurvatureProfile::Constant(0.0), lambda, 20.0).unwrap().unwrap();
        prop_assert!((z - 1.0 / lambda).abs() < 1e-9);
    }

    #[test]
    fn index_form_of_a_jacobi_field(k0 in -1.0f64..1.0, k1 in -1.0f64..1.0, fp0 in -1.0f64..1.0, lambda in 0.0f64..1.0) {
        // Integration by parts: I(f, f) = f(l) f'(l) - f(0) f'(0) - lambda f(0)^2.
        let g = CurvatureProfile::piecewise(vec![
            PolyPiece { start: 0.0, coeffs: vec![k0, 0.3] },
            PolyPiece { start: 0.7, coeffs: vec![k1] },
        ]).unwrap();
        let l = 1.2;
        let sol = solve_jacobi(&g, 1.0, fp0, l).unwrap();
        let (fl, fpl) = sol.at(l);
        let lhs = index_form(&sol, &g, l, lambda).unwrap().value;
        let rhs = fl * fpl - fp0 - lambda;
        prop_assert!((lhs - rhs).abs() < 1e-8, "{lhs} vs {rhs}");
    }
}

#[test]
fn no_zero_for_negative_curvature() {
    let sol = solve_jacobi(&CurvatureProfile::Constant(-1.0), 1.0, 0.0, 5.0).unwrap();
    assert_eq!(first_zero(&sol), None);
    assert!((sol.min_value() - 1.0).abs() < 1e-12);
}

#[test]
fn sturm_comparison() {
    // Larger curvature reaches its first zero no later.
    let lo = CurvatureProfile::custom("lo", |t: f64| 0.5 + 0.1 * t.sin());
    let hi = CurvatureProfile::custom("hi", |t: f64| 1.0 + 0.1 * t.sin());
    let z_lo = first_zero(&solve_jacobi(&lo, 1.0, 0.0, 10.0).unwrap()).unwrap();
    let z_hi = first_zero(&solve_jacobi(&hi, 1.0, 0.0, 10.0).unwrap()).unwrap();
    assert!(z_hi < z_lo);
}

#[test]
fn index_form_of_a_closed_form_field() {
    // f = cos t with K = 1: the integral vanishes, leaving -lambda.
    let field = FnField(|t: f64| (t.cos(), -t.sin()));
    let v = index_form(&field, &CurvatureProfile::Constant(1.0), 2.0, 0.25).unwrap();
    let exact = (2f64.cos() * -(2f64.sin())) - 0.25;
    assert!((v.value - exact).abs() < 1e-12);
}

#[test]
fn bad_inputs_are_rejected() {
    assert!(solve_jacobi(&CurvatureProfile::Constant(1.0), 1.0, 0.0, 0.0).is_err());
    assert!(focal_distance(&CurvatureProfile::Constant(0.0), -1.0, 1.0).is_err());
    assert!(CurvatureProfile::piecewise(vec![]).is_err());
}
