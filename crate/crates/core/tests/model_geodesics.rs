use std::f64::consts::PI;

use opentri_core::model_surface::{distance, integrate_geodesic, length_lower_bound, ModelPoint};
use opentri_core::warping::WarpingFunction;
use proptest::prelude::*;

fn fermi(p: ModelPoint, q: ModelPoint) -> f64 {
    (p.x.cosh() * q.x.cosh() * (q.y - p.y).cosh() - p.x.sinh() * q.x.sinh()).max(1.0).acosh()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn clairaut_constant_is_conserved(x in 0.1f64..3.0, heading in -PI..PI, len in 0.1f64..8.0, fam in 0usize..3) {
        let w = [WarpingFunction::euclidean(), WarpingFunction::hyperbolic(), WarpingFunction::gauss()][fam].clone();
        let g = integrate_geodesic(ModelPoint::new(x, 0.0), heading, len, &w).unwrap();
        prop_assert!(g.clairaut_drift(&w) < 1e-8);
        prop_assert!(g.speed_error(&w) < 1e-8);
    }

    #[test]
    fn flat_distance_is_euclidean(px in 0.0f64..4.0, py in -4.0f64..4.0, qx in 0.0f64..4.0, qy in -4.0f64..4.0) {
        let p = ModelPoint::new(px, py);
        let q = ModelPoint::new(qx, qy);
        let (d, _) = distance(p, q, &WarpingFunction::euclidean()).unwrap();
        prop_assert!((d - (qx - px).hypot(qy - py)).abs() < 1e-8);
    }

    #[test]
    fn hyperbolic_distance_matches_fermi_formula(px in 0.0f64..2.5, py in -2.0f64..2.0, qx in 0.0f64..2.5, qy in -2.0f64..2.0) {
        let p = ModelPoint::new(px, py);
        let q = ModelPoint::new(qx, qy);
        let (d, g) = distance(p, q, &WarpingFunction::hyperbolic()).unwrap();
        let exact = fermi(p, q);
        prop_assert!((d - exact).abs() <= 1e-6 * exact.max(1e-3), "{d} vs {exact}");
        prop_assert!((g.end().x - qx).abs() < 1e-7);
    }

    #[test]
    fn distance_is_symmetric(px in 0.0f64..2.0, qx in 0.0f64..2.0, dy in -2.0f64..2.0) {
        let w = WarpingFunction::gauss();
        let p = ModelPoint::new(px, 0.0);
        let q = ModelPoint::new(qx, dy);
        let (d1, _) = distance(p, q, &w).unwrap();
        let (d2, _) = distance(q, p, &w).unwrap();
        prop_assert!((d1 - d2).abs() < 1e-7);
    }
}

#[test]
fn leg_bound_is_below_the_leg() {
    let w = WarpingFunction::hyperbolic();
    // Rising leg from t = 0.5 with heading 0.6 rad off the x-axis.
    let g = integrate_geodesic(ModelPoint::new(0.5, 0.0), 0.6, 0.8, &w).unwrap();
    assert!(g.turning_points().is_empty());
    let nu = g.signed_clairaut().abs();
    let bound = length_lower_bound(nu, g.start().x, g.end().x, &w);
    assert!(bound <= 0.8 + 1e-9, "bound {bound}");
    assert!(bound > 0.8 - 0.5, "bound {bound} too weak");
}

#[test]
fn points_below_the_boundary_are_rejected() {
    let w = WarpingFunction::euclidean();
    assert!(distance(ModelPoint::new(-0.1, 0.0), ModelPoint::new(1.0, 0.0), &w).is_err());
    assert!(integrate_geodesic(ModelPoint::new(1.0, 0.0), f64::NAN, 1.0, &w).is_err());
}
