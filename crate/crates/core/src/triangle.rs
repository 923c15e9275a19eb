//! Open triangles in the model half-plane: realization from side data, the
//! foot-gap function `theta(a, b, c)`, gluing, and chains of triangles with
//! their shortcut paths.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model_surface::{self, check_point, distance, run, GeodesicStatus, ModelGeodesic, ModelPoint, RunEnd};
use crate::roots::{self, Sample};
use crate::warping::WarpingFunction;

/// Largest foot gap accepted by the realization.
pub const Y_WINDOW: f64 = 100.0;

const REALIZE_STARTS: usize = 32;

/// Side data `(a, b, c)`: `a = d(boundary, p)`, `b = d(p, q)`,
/// `c = d(boundary, q)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriangleSides {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl TriangleSides {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        Self { a, b, c }
    }

    pub fn reversed(self) -> Self {
        Self { a: self.c, b: self.b, c: self.a }
    }

    /// `b - |a - c|`; zero on degenerate data.
    pub fn slack(&self) -> f64 {
        self.b - (self.a - self.c).abs()
    }

    fn validate(&self, w: &WarpingFunction) -> Result<bool> {
        let Self { a, b, c } = *self;
        if !(a.is_finite() && b.is_finite() && c.is_finite()) {
            return Err(Error::InvalidSides { a, b, c, reason: "non-finite side" });
        }
        if a <= 0.0 || c <= 0.0 {
            return Err(Error::InvalidSides { a, b, c, reason: "vertices must lie off the boundary" });
        }
        if a > w.domain_max || c > w.domain_max {
            return Err(Error::Domain { t: a.max(c), domain_max: w.domain_max });
        }
        let tol = 1e-12 * (1.0 + b);
        if self.slack() < -tol {
            return Err(Error::InvalidSides { a, b, c, reason: "b < |a - c|" });
        }
        Ok(self.slack() <= tol)
    }
}

/// Model triangle with `p = (a, 0)` and `q = (c, theta)`, `theta >= 0`.
#[derive(Debug, Clone)]
pub struct ModelOpenTriangle {
    pub sides: TriangleSides,
    pub p: ModelPoint,
    pub q: ModelPoint,
    pub foot_y1: f64,
    pub foot_y2: f64,
    /// Angle at `p` between the opposite side and the segment to the boundary.
    pub angle_p: f64,
    pub angle_q: f64,
    pub base_gap: f64,
    pub degenerate: bool,
    pub opposite_side: ModelGeodesic,
}

/// Flat serialization of a triangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriangleRecord {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub angle_p: f64,
    pub angle_q: f64,
    pub theta: f64,
    pub degenerate: bool,
}

impl ModelOpenTriangle {
    pub fn record(&self) -> TriangleRecord {
        TriangleRecord {
            a: self.sides.a,
            b: self.sides.b,
            c: self.sides.c,
            angle_p: self.angle_p,
            angle_q: self.angle_q,
            theta: self.base_gap,
            degenerate: self.degenerate,
        }
    }

    fn from_geodesic(sides: TriangleSides, g: ModelGeodesic, degenerate: bool) -> Self {
        let q = g.end();
        let theta = q.y.max(0.0);
        Self {
            sides,
            p: g.start(),
            q: ModelPoint::new(sides.c, theta),
            foot_y1: 0.0,
            foot_y2: theta,
            angle_p: PI - g.start_angle(),
            angle_q: g.end_angle(),
            base_gap: theta,
            degenerate,
            opposite_side: g,
        }
    }
}

/// Realize the model triangle with sides `(a, b, c)`.
///
/// Geodesics of length `b` are shot from `p = (a, 0)` towards increasing `y`
/// and the heading is solved for ending on the level `x = c`. Among those
/// endpoints the minimizing one has the largest `y`, since the distance from
/// `p` to `(c, s)` increases with `s`. The result is re-measured with
/// [`distance`]; on mismatch the foot gap is found by bisection on `s`.
pub fn build_model_triangle(sides: TriangleSides, w: &WarpingFunction) -> Result<ModelOpenTriangle> {
    let degenerate = sides.validate(w)?;
    let TriangleSides { a, b, c } = sides;
    let p = ModelPoint::new(a, 0.0);
    if degenerate {
        let heading = if c >= a { 0.0 } else { PI };
        let (traj, _, _) = run(w, p, heading, (c - a).abs(), None)?;
        let g = ModelGeodesic::from_run(w, traj, 0.0, GeodesicStatus::Complete);
        let mut t = ModelOpenTriangle::from_geodesic(sides, g, true);
        // The side runs along one boundary segment.
        (t.angle_p, t.angle_q) = if c >= a { (PI, 0.0) } else { (0.0, PI) };
        t.q = ModelPoint::new(c, 0.0);
        return Ok(t);
    }

    let mut failure: Option<Error> = None;
    let mut residual = |alpha: f64| -> Sample {
        match run(w, p, alpha, b, None) {
            Ok((traj, RunEnd::Length, _)) => Sample::Value(traj.last()[0] - c),
            Ok((_, RunEnd::Window, _)) => Sample::Marker(1.0),
            Ok(_) => Sample::Marker(-1.0),
            Err(e) => {
                failure.get_or_insert(e);
                Sample::Marker(1.0)
            }
        }
    };
    let grid: Vec<f64> = (0..=REALIZE_STARTS + 1).map(|i| PI * i as f64 / (REALIZE_STARTS + 1) as f64).collect();
    let mut best: Option<(f64, f64)> = None;
    for (lo, hi) in roots::brackets(&mut residual, &grid) {
        if let Some((alpha, v)) = roots::refine(&mut residual, lo, hi, 1e-16, 1e-13 * (1.0 + c)) {
            if v.abs() <= 1e-10 * (1.0 + c) {
                let (traj, _, _) = run(w, p, alpha, b, None)?;
                let y = traj.last()[1];
                if best.is_none_or(|(_, by)| y > by) {
                    best = Some((alpha, y));
                }
            }
        }
    }
    if let Some(e) = failure {
        if best.is_none() {
            return Err(e);
        }
    }
    if let Some((alpha, y)) = best {
        if y > Y_WINDOW {
            return Err(Error::Unrealizable(format!("foot gap {y} exceeds window {Y_WINDOW}")));
        }
        let (d, _) = distance(p, ModelPoint::new(c, y), w)?;
        if (d - b).abs() <= 1e-7 {
            let (traj, _, nu_s) = run(w, p, alpha, b, None)?;
            let g = ModelGeodesic::from_run(w, traj, nu_s, GeodesicStatus::Complete);
            return Ok(ModelOpenTriangle::from_geodesic(sides, g, false));
        }
    }
    realize_by_bisection(sides, w)
}

fn realize_by_bisection(sides: TriangleSides, w: &WarpingFunction) -> Result<ModelOpenTriangle> {
    let TriangleSides { a, b, c } = sides;
    let p = ModelPoint::new(a, 0.0);
    let gap = |s: f64| model_surface::distance_to_parallel(p, c, s, w).map(|d| d - b);
    let mut hi = 1.0;
    while gap(hi)? <= 0.0 {
        hi *= 2.0;
        if hi > Y_WINDOW {
            return Err(Error::Unrealizable(format!("no foot gap below {Y_WINDOW} for {sides:?}")));
        }
    }
    let mut lo = 0.0;
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if gap(mid)? > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let s0 = 0.5 * (lo + hi);
    let (_, g) = distance(p, ModelPoint::new(c, s0), w)?;
    Ok(ModelOpenTriangle::from_geodesic(sides, g, false))
}

/// Foot gap `theta(a, b, c)` of the model triangle.
pub fn theta(sides: TriangleSides, w: &WarpingFunction) -> Result<f64> {
    Ok(build_model_triangle(sides, w)?.base_gap)
}

/// Largest of the six one-sided difference quotients `|d theta| / h` under
/// perturbations `+-h` of each side.
pub fn theta_lipschitz_probe(sides: TriangleSides, w: &WarpingFunction, h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::Precondition(format!("probe step must be positive, got {h}")));
    }
    let base = theta(sides, w)?;
    let mut worst: f64 = 0.0;
    for k in 0..3 {
        for sign in [1.0, -1.0] {
            let mut s = sides;
            match k {
                0 => s.a += sign * h,
                1 => s.b += sign * h,
                _ => s.c += sign * h,
            }
            if s.a <= 0.0 || s.c <= 0.0 || s.slack() <= 0.0 {
                return Err(Error::Precondition(format!("perturbation leaves the open side domain: {s:?}")));
            }
            worst = worst.max((theta(s, w)? - base).abs() / h);
        }
    }
    Ok(worst)
}

/// Glue `t1` and `t2` along their shared boundary segment and return the
/// triangle with sides `(a1, b1 + b2, c2)`. Fails when the outer angles grow.
pub fn glue_triangles(t1: &ModelOpenTriangle, t2: &ModelOpenTriangle, w: &WarpingFunction) -> Result<ModelOpenTriangle> {
    if (t1.sides.c - t2.sides.a).abs() > 1e-7 {
        return Err(Error::SideMismatch(format!(
            "d(boundary, q1) = {} but d(boundary, p2) = {}",
            t1.sides.c, t2.sides.a
        )));
    }
    let sum = t1.angle_q + t2.angle_p;
    if sum > PI + 1e-7 {
        return Err(Error::AngleCondition { sum });
    }
    let glued = build_model_triangle(TriangleSides::new(t1.sides.a, t1.sides.b + t2.sides.b, t2.sides.c), w)?;
    if t1.angle_p < glued.angle_p - 1e-6 || t2.angle_q < glued.angle_q - 1e-6 {
        return Err(Error::HypothesisRegime(format!(
            "glued angles ({}, {}) exceed piece angles ({}, {})",
            glued.angle_p, glued.angle_q, t1.angle_p, t2.angle_q
        )));
    }
    Ok(glued)
}

/// Chain of model triangles laid side by side, with the shortest path from
/// the first to the last vertex inside the domain under the chain.
#[derive(Debug, Clone)]
pub struct GeneralizedOpenTriangle {
    pub pieces: Vec<ModelOpenTriangle>,
    /// `y` offset of each piece.
    pub offsets: Vec<f64>,
    /// Chain vertices; the first is `p_hat`, the last `q_hat`.
    pub vertices: Vec<ModelPoint>,
    /// Indices into `vertices` the shortcut passes through.
    pub contacts: Vec<usize>,
    pub shortcut: Vec<ModelGeodesic>,
    pub shortcut_length: f64,
    pub chain_length: f64,
    pub endpoint_distance: f64,
    pub angle_p: f64,
    pub angle_q: f64,
}

impl GeneralizedOpenTriangle {
    pub fn p_hat(&self) -> ModelPoint {
        self.vertices[0]
    }

    pub fn q_hat(&self) -> ModelPoint {
        *self.vertices.last().unwrap()
    }

    /// `x` of the chain's upper side at height `y`, if `y` is in its range.
    pub fn upper_side(&self, y: f64) -> Option<f64> {
        for (piece, &off) in self.pieces.iter().zip(&self.offsets) {
            if piece.degenerate || y < off || y > off + piece.base_gap {
                continue;
            }
            let g = &piece.opposite_side;
            let local = y - off;
            let s = roots::bisect(&mut |s| g.point_at(s).y - local, 0.0, g.total_length, 1e-14);
            return Some(g.point_at(s).x);
        }
        None
    }

    fn contains(&self, g: &ModelGeodesic, tol: f64) -> bool {
        let n = 64;
        (0..=n).all(|i| {
            let pt = g.point_at(g.total_length * i as f64 / n as f64);
            pt.x >= -tol && self.upper_side(pt.y).is_none_or(|x| pt.x <= x + tol)
        })
    }
}

/// Lay out the pieces and compute the shortcut by repeatedly dropping chain
/// vertices whose neighbours can be joined inside the domain by a shorter
/// geodesic.
pub fn build_generalized_triangle(pieces: &[TriangleSides], w: &WarpingFunction) -> Result<GeneralizedOpenTriangle> {
    if pieces.is_empty() {
        return Err(Error::Precondition("a chain needs at least one piece".into()));
    }
    let built: Vec<ModelOpenTriangle> = pieces.iter().map(|s| build_model_triangle(*s, w)).collect::<Result<_>>()?;
    for (i, pair) in built.windows(2).enumerate() {
        if (pair[0].sides.c - pair[1].sides.a).abs() > 1e-7 {
            return Err(Error::SideMismatch(format!(
                "pieces {i} and {}: {} vs {}",
                i + 1,
                pair[0].sides.c,
                pair[1].sides.a
            )));
        }
        let sum = pair[0].angle_q + pair[1].angle_p;
        if sum > PI + 1e-7 {
            return Err(Error::AngleCondition { sum });
        }
    }
    let mut offsets = Vec::with_capacity(built.len());
    let mut vertices = vec![ModelPoint::new(built[0].sides.a, 0.0)];
    let mut y = 0.0;
    for t in &built {
        offsets.push(y);
        y += t.base_gap;
        vertices.push(ModelPoint::new(t.sides.c, y));
    }
    let chain_length: f64 = built.iter().map(|t| t.sides.b).sum();
    let mut gen = GeneralizedOpenTriangle {
        shortcut: Vec::new(),
        contacts: (0..vertices.len()).collect(),
        pieces: built,
        offsets,
        vertices,
        shortcut_length: chain_length,
        chain_length,
        endpoint_distance: 0.0,
        angle_p: 0.0,
        angle_q: 0.0,
    };
    let translate = |g: &ModelGeodesic, dy: f64, w: &WarpingFunction| -> Result<ModelGeodesic> {
        let start = ModelPoint::new(g.start().x, g.start().y + dy);
        let heading = if g.y_sign < 0.0 { -g.start_angle() } else { g.start_angle() };
        model_surface::integrate_geodesic(start, heading, g.total_length, w)
    };
    let mut segments: Vec<ModelGeodesic> = gen
        .pieces
        .iter()
        .zip(&gen.offsets)
        .map(|(t, &off)| translate(&t.opposite_side, off, w))
        .collect::<Result<_>>()?;
    let mut lengths: Vec<f64> = gen.pieces.iter().map(|t| t.sides.b).collect();

    loop {
        let mut changed = false;
        let mut i = 1;
        while i + 1 < gen.contacts.len() {
            let (u, v) = (gen.vertices[gen.contacts[i - 1]], gen.vertices[gen.contacts[i + 1]]);
            let (d, g) = distance(u, v, w)?;
            let current = lengths[i - 1] + lengths[i];
            if d < current - 1e-10 && gen.contains(&g, 1e-7) {
                gen.contacts.remove(i);
                lengths.splice(i - 1..=i, [d]);
                segments.splice(i - 1..=i, [g]);
                changed = true;
            } else {
                i += 1;
            }
        }
        if !changed {
            break;
        }
    }
    gen.shortcut_length = lengths.iter().sum();
    gen.endpoint_distance = distance(gen.p_hat(), gen.q_hat(), w)?.0;
    gen.angle_p = PI - segments[0].start_angle();
    gen.angle_q = segments.last().unwrap().end_angle();
    gen.shortcut = segments;
    check_point(gen.q_hat(), w)?;
    Ok(gen)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fermi(x1: f64, x2: f64, dy: f64) -> f64 {
        (x1.cosh() * x2.cosh() * dy.cosh() - x1.sinh() * x2.sinh()).acosh()
    }

    #[test]
    fn flat_right_triangle() {
        let e = WarpingFunction::euclidean();
        let t = build_model_triangle(TriangleSides::new(1.0, 5.0, 4.0), &e).unwrap();
        assert!((t.base_gap - 4.0).abs() < 1e-10);
        assert!((t.angle_p - (PI - (4.0f64 / 3.0).atan())).abs() < 1e-9);
        assert!((t.angle_q - (4.0f64 / 3.0).atan()).abs() < 1e-9);
        assert!(!t.degenerate);
        assert_eq!(t.record().theta, t.base_gap);
    }

    #[test]
    fn degenerate_triangles() {
        for w in [WarpingFunction::euclidean(), WarpingFunction::hyperbolic(), WarpingFunction::gauss()] {
            let t = build_model_triangle(TriangleSides::new(2.0, 3.0, 5.0), &w).unwrap();
            assert!(t.degenerate);
            assert_eq!((t.base_gap, t.angle_p, t.angle_q), (0.0, PI, 0.0));
            let r = build_model_triangle(TriangleSides::new(5.0, 3.0, 2.0), &w).unwrap();
            assert_eq!((r.angle_p, r.angle_q), (0.0, PI));
        }
    }

    #[test]
    fn invalid_sides() {
        let e = WarpingFunction::euclidean();
        assert!(matches!(build_model_triangle(TriangleSides::new(0.0, 1.0, 1.0), &e), Err(Error::InvalidSides { .. })));
        assert!(matches!(build_model_triangle(TriangleSides::new(1.0, 1.0, 3.0), &e), Err(Error::InvalidSides { .. })));
    }

    #[test]
    fn hyperbolic_theta_inverts_fermi() {
        let h = WarpingFunction::hyperbolic();
        let th = theta(TriangleSides::new(1.0, 2.0, 1.0), &h).unwrap();
        assert!((fermi(1.0, 1.0, th) - 2.0).abs() < 1e-9);
    }

    #[test]
    fn theta_flat_closed_form_and_symmetry() {
        let e = WarpingFunction::euclidean();
        assert!((theta(TriangleSides::new(3.0, 5.0, 6.0), &e).unwrap() - 4.0).abs() < 1e-9);
        assert!((theta(TriangleSides::new(2.0, 1.7, 2.0), &e).unwrap() - 1.7).abs() < 1e-9);
        for w in [WarpingFunction::euclidean(), WarpingFunction::hyperbolic(), WarpingFunction::gauss()] {
            let l = theta(TriangleSides::new(1.0, 2.0, 1.5), &w).unwrap();
            let r = theta(TriangleSides::new(1.5, 2.0, 1.0), &w).unwrap();
            assert!((l - r).abs() < 1e-8, "{l} vs {r}");
        }
    }

    #[test]
    fn lipschitz_probe() {
        let e = WarpingFunction::euclidean();
        let q = theta_lipschitz_probe(TriangleSides::new(3.0, 5.0, 6.0), &e, 1e-4).unwrap();
        assert!((q - 1.25).abs() < 1e-3, "{q}");
        let near = theta_lipschitz_probe(TriangleSides::new(1.0, 1.0 + 1e-3 + 1e-4, 2.0), &e, 1e-4).unwrap();
        assert!(near.is_finite() && near > 5.0);
        let g = WarpingFunction::gauss();
        let s = TriangleSides::new(1.0, 2.0, 1.5);
        let q1 = theta_lipschitz_probe(s, &g, 1e-4).unwrap();
        let q2 = theta_lipschitz_probe(s, &g, 5e-5).unwrap();
        assert!(q1 / q2 < 2.0 && q2 / q1 < 2.0);
    }

    #[test]
    fn gluing_flat_triangles() {
        let e = WarpingFunction::euclidean();
        // Collinear subdivision of the segment from (1, 0) to (4, 4).
        let t1 = build_model_triangle(TriangleSides::new(1.0, 2.5, 2.5), &e).unwrap();
        let t2 = build_model_triangle(TriangleSides::new(2.5, 2.5, 4.0), &e).unwrap();
        assert!((t1.angle_q + t2.angle_p - PI).abs() < 1e-9);
        let g = glue_triangles(&t1, &t2, &e).unwrap();
        assert!((g.angle_p - t1.angle_p).abs() < 1e-8);
        // Two right triangles with a bend.
        let r1 = build_model_triangle(TriangleSides::new(1.0, 2.0, 2.0), &e).unwrap();
        let r2 = build_model_triangle(TriangleSides::new(2.0, 2.0, 1.0), &e).unwrap();
        let g = glue_triangles(&r1, &r2, &e).unwrap();
        assert!(g.angle_p <= r1.angle_p + 1e-6);
        let bad = build_model_triangle(TriangleSides::new(3.0, 2.0, 2.0), &e).unwrap();
        assert!(matches!(glue_triangles(&r1, &bad, &e), Err(Error::SideMismatch(_))));
    }

    #[test]
    fn chains() {
        let e = WarpingFunction::euclidean();
        let one = build_generalized_triangle(&[TriangleSides::new(1.0, 5.0, 4.0)], &e).unwrap();
        assert!((one.shortcut_length - 5.0).abs() < 1e-12);
        // Two pieces meeting at a strict convex corner: a real shortcut.
        let two = build_generalized_triangle(&[TriangleSides::new(1.0, 2.0, 2.0), TriangleSides::new(2.0, 2.0, 1.0)], &e)
            .unwrap();
        assert!(two.shortcut_length < 4.0 - 1e-3);
        assert!(two.endpoint_distance <= two.shortcut_length + 1e-9);
        // Four pieces re-subdividing one geodesic.
        let h = WarpingFunction::hyperbolic();
        let t = build_model_triangle(TriangleSides::new(1.0, 2.0, 1.5), &h).unwrap();
        let g = &t.opposite_side;
        let pts: Vec<ModelPoint> = (0..=4).map(|i| g.point_at(g.total_length * i as f64 / 4.0)).collect();
        let sides: Vec<TriangleSides> =
            pts.windows(2).map(|p| TriangleSides::new(p[0].x, g.total_length / 4.0, p[1].x)).collect();
        let chain = build_generalized_triangle(&sides, &h).unwrap();
        assert!((chain.shortcut_length - chain.chain_length).abs() < 1e-7);
        assert!((chain.chain_length - 2.0).abs() < 1e-12);
    }
}
