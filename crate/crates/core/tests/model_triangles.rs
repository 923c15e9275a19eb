use opentri_core::triangle::{build_generalized_triangle, build_model_triangle, theta, TriangleSides};
use opentri_core::warping::WarpingFunction;
use proptest::prelude::*;

/// Sides with `|a - c| < b`, bounded away from degeneracy.
fn sides() -> impl Strategy<Value = TriangleSides> {
    (0.2f64..2.5, 0.2f64..2.5, 0.05f64..1.5).prop_map(|(a, c, extra)| TriangleSides::new(a, (a - c).abs() + extra, c))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn flat_foot_gap_closed_form(s in sides()) {
        let th = theta(s, &WarpingFunction::euclidean()).unwrap();
        let exact = (s.b * s.b - (s.a - s.c).powi(2)).sqrt();
        prop_assert!((th - exact).abs() < 1e-8, "{th} vs {exact}");
    }

    #[test]
    fn flat_angles_are_supplementary_in_cosine(s in sides()) {
        let t = build_model_triangle(s, &WarpingFunction::euclidean()).unwrap();
        prop_assert!((t.angle_p.cos() - (s.a - s.c) / s.b).abs() < 1e-7);
        prop_assert!((t.angle_p.cos() + t.angle_q.cos()).abs() < 1e-7);
    }

    #[test]
    fn hyperbolic_foot_gap_closed_form(s in sides()) {
        let th = theta(s, &WarpingFunction::hyperbolic()).unwrap();
        let arg = (s.b.cosh() + s.a.sinh() * s.c.sinh()) / (s.a.cosh() * s.c.cosh());
        prop_assert!((th - arg.acosh()).abs() < 1e-7);
    }

    #[test]
    fn foot_gap_is_symmetric(a in 0.2f64..1.2, c in 0.2f64..1.2, extra in 0.05f64..1.0, fam in 0usize..3) {
        // Far from the boundary the gauss gap outgrows the search window.
        let w = [WarpingFunction::euclidean(), WarpingFunction::hyperbolic(), WarpingFunction::gauss()][fam].clone();
        let s = TriangleSides::new(a, (a - c).abs() + extra, c);
        let t1 = theta(s, &w).unwrap();
        let t2 = theta(s.reversed(), &w).unwrap();
        prop_assert!((t1 - t2).abs() < 1e-7);
    }

    #[test]
    fn foot_gap_grows_with_the_opposite_side(s in sides(), db in 0.01f64..0.5) {
        let w = WarpingFunction::hyperbolic();
        let longer = TriangleSides::new(s.a, s.b + db, s.c);
        prop_assert!(theta(longer, &w).unwrap() > theta(s, &w).unwrap());
    }
}

#[test]
fn degenerate_sides_have_zero_gap() {
    let t = build_model_triangle(TriangleSides::new(1.0, 0.5, 1.5), &WarpingFunction::hyperbolic()).unwrap();
    assert!(t.degenerate);
    assert!(t.base_gap.abs() < 1e-9);
}

#[test]
fn impossible_sides_are_rejected() {
    assert!(theta(TriangleSides::new(1.0, 0.2, 2.0), &WarpingFunction::euclidean()).is_err());
    assert!(theta(TriangleSides::new(-1.0, 2.0, 1.0), &WarpingFunction::euclidean()).is_err());
}

#[test]
fn single_piece_chain_is_the_triangle() {
    let w = WarpingFunction::gauss();
    let s = TriangleSides::new(0.8, 1.2, 1.1);
    let single = build_model_triangle(s, &w).unwrap();
    let chain = build_generalized_triangle(&[s], &w).unwrap();
    assert!((chain.shortcut_length - s.b).abs() < 1e-7);
    assert!((chain.endpoint_distance - s.b).abs() < 1e-7);
    assert!((chain.angle_p - single.angle_p).abs() < 1e-6);
}

#[test]
fn flat_chain_shortcut_is_straight() {
    let w = WarpingFunction::euclidean();
    // Two pieces meeting at a vertex that sticks out; the shortcut skips it.
    let pieces = [TriangleSides::new(1.0, 1.0, 2.0), TriangleSides::new(2.0, 1.0, 1.0)];
    let chain = build_generalized_triangle(&pieces, &w).unwrap();
    let (p, q) = (chain.p_hat(), chain.q_hat());
    let straight = (q.x - p.x).hypot(q.y - p.y);
    assert!((chain.shortcut_length - straight).abs() < 1e-7);
    assert!(chain.shortcut_length <= chain.chain_length + 1e-12);
}
