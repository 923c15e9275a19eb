use opentri_core::warping::{
    solve_from_curvature, splitting_class, CurvatureProfile, Derivs, PolyPiece, SplittingClass, WarpingFunction,
};
use opentri_core::Error;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn closed_forms_solve_the_warping_equation(t in 0.0f64..4.0) {
        for w in [WarpingFunction::euclidean(), WarpingFunction::hyperbolic(), WarpingFunction::gauss()] {
            let d = w.evaluate(t).unwrap();
            let g = w.radial_curvature(t).unwrap();
            prop_assert!((d.ddm + g * d.m).abs() <= 1e-12 * (1.0 + d.m.abs()), "{} at {t}", w.name());
        }
    }

    #[test]
    fn hyperbolic_is_cosh(t in 0.0f64..6.0) {
        let d = WarpingFunction::hyperbolic().evaluate(t).unwrap();
        prop_assert!((d.m - t.cosh()).abs() < 1e-12 * t.cosh());
        prop_assert!((d.dm - t.sinh()).abs() < 1e-12 * t.cosh());
    }
}

#[test]
fn tabulated_constant_curvature_matches_cosh() {
    let w = solve_from_curvature(&CurvatureProfile::Constant(-1.0), 5.0, 1e-12).unwrap();
    assert!(w.is_tabulated());
    for i in 0..=100 {
        let t = 0.05 * i as f64;
        let d = w.evaluate(t).unwrap();
        assert!((d.m - t.cosh()).abs() < 1e-8 * t.cosh(), "t = {t}: {}", d.m);
    }
}

#[test]
fn positive_curvature_degenerates() {
    // m = cos t vanishes at pi / 2.
    let err = solve_from_curvature(&CurvatureProfile::Constant(1.0), 3.0, 1e-10).unwrap_err();
    match err {
        Error::DegenerateWarping { t } => assert!((t - std::f64::consts::FRAC_PI_2).abs() < 1e-6, "{t}"),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn piecewise_profile_is_continuous_in_the_warping() {
    let g = CurvatureProfile::piecewise(vec![
        PolyPiece { start: 0.0, coeffs: vec![-1.0] },
        PolyPiece { start: 1.0, coeffs: vec![0.0] },
    ])
    .unwrap();
    let w = solve_from_curvature(&g, 3.0, 1e-12).unwrap();
    // Past the break m continues linearly from (cosh 1, sinh 1).
    let d = w.evaluate(2.0).unwrap();
    assert!((d.m - (1f64.cosh() + 1f64.sinh())).abs() < 1e-8);
    assert!((d.dm - 1f64.sinh()).abs() < 1e-8);
}

#[test]
fn custom_warping_is_validated() {
    let ok = WarpingFunction::custom("cosh", 10.0, |t: f64| Derivs { m: t.cosh(), dm: t.sinh(), ddm: t.cosh() });
    assert!(ok.is_ok());
    let bad = WarpingFunction::custom("shifted", 10.0, |t: f64| Derivs { m: 2.0 + t, dm: 1.0, ddm: 0.0 });
    assert!(bad.is_err());
}

#[test]
fn splitting_classes_of_the_families() {
    assert_eq!(splitting_class(&WarpingFunction::euclidean(), 20.0, 1e-6), SplittingClass::St1);
    assert_eq!(splitting_class(&WarpingFunction::gauss(), 20.0, 1e-6), SplittingClass::St2);
    assert_eq!(splitting_class(&WarpingFunction::hyperbolic(), 20.0, 1e-6), SplittingClass::Neither);
}

#[test]
fn unknown_tag_is_a_config_error() {
    assert!(matches!(WarpingFunction::from_tag("spherical"), Err(Error::Config(_))));
    assert_eq!(WarpingFunction::from_tag("cosh").unwrap().name(), "hyperbolic");
}
