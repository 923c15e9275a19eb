//! Geodesics and distances on the model half-plane
//! `[0, inf) x R` with metric `dx^2 + m(x)^2 dy^2`.
//!
//! Geodesics are integrated in the reduced form
//! `x' = v`, `y' = nu/m^2`, `v' = nu^2 m'/m^3`, where `nu` is the signed
//! Clairaut constant. It holds `nu` fixed by construction and passes through
//! turning points (`v = 0`) without any square-root singularity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::sig12;
use crate::ode::{Crossing, Dopri5, Event, Stop, Trajectory};
use crate::quad;
use crate::roots::{self, Sample};
use crate::warping::WarpingFunction;

/// Point of the model half-plane: `x` is the distance to the boundary,
/// `y` the boundary parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelPoint {
    pub x: f64,
    pub y: f64,
}

impl ModelPoint {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// Arc `s -> (c, s)` of the level `x = c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParallelArc {
    pub c: f64,
    pub s_start: f64,
    pub s_end: f64,
}

impl ParallelArc {
    pub fn point(&self, s: f64) -> ModelPoint {
        ModelPoint::new(self.c, s)
    }

    /// Length `m(c) |s_end - s_start|`.
    pub fn length(&self, w: &WarpingFunction) -> f64 {
        w.m(self.c) * (self.s_end - self.s_start).abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GeodesicStatus {
    Complete,
    /// Reached the boundary transversally and stopped there.
    BoundaryHit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSample {
    pub s: f64,
    pub point: ModelPoint,
    /// Angle in `[0, pi]` between the velocity and `+d/dx`.
    pub angle: f64,
}

/// Unit-speed model geodesic with its dense output.
#[derive(Debug, Clone)]
pub struct ModelGeodesic {
    /// Clairaut constant `nu >= 0`.
    pub clairaut: f64,
    /// Direction of travel in `y`: +1, -1, or 0 for boundary rays.
    pub y_sign: f64,
    /// Sign of `x'` at the end of the path.
    pub x_sign: i8,
    pub path: Vec<PathSample>,
    pub total_length: f64,
    pub status: GeodesicStatus,
    traj: Trajectory<3>,
}

fn sign_i8(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

impl ModelGeodesic {
    pub(crate) fn from_run(w: &WarpingFunction, traj: Trajectory<3>, nu_s: f64, status: GeodesicStatus) -> Self {
        let nu = nu_s.abs();
        let path = traj
            .t
            .iter()
            .zip(&traj.y)
            .map(|(&s, st)| PathSample {
                s,
                point: ModelPoint::new(st[0], st[1]),
                angle: (nu / w.eval(st[0]).m).atan2(st[2]),
            })
            .collect();
        let x_sign = sign_i8(traj.last()[2]);
        Self {
            clairaut: nu,
            y_sign: if nu_s > 0.0 { 1.0 } else if nu_s < 0.0 { -1.0 } else { 0.0 },
            x_sign,
            path,
            total_length: traj.t_end(),
            status,
            traj,
        }
    }

    pub fn start(&self) -> ModelPoint {
        self.path[0].point
    }

    pub fn end(&self) -> ModelPoint {
        self.path.last().unwrap().point
    }

    pub fn start_angle(&self) -> f64 {
        self.path[0].angle
    }

    pub fn end_angle(&self) -> f64 {
        self.path.last().unwrap().angle
    }

    /// `x'` at the start and the end of the path.
    pub fn start_dx(&self) -> f64 {
        self.traj.y[0][2]
    }

    pub fn end_dx(&self) -> f64 {
        self.traj.last()[2]
    }

    /// Signed Clairaut constant `m^2 y'`.
    pub fn signed_clairaut(&self) -> f64 {
        self.y_sign * self.clairaut
    }

    /// Dense-output point at arclength `s` (clamped to the path).
    pub fn point_at(&self, s: f64) -> ModelPoint {
        let st = self.traj.interpolate(s);
        ModelPoint::new(st[0], st[1])
    }

    /// Dense-output `x'` at arclength `s`.
    pub fn dx_at(&self, s: f64) -> f64 {
        self.traj.interpolate(s)[2]
    }

    /// Largest `|m(x) sin(angle) - nu|` over the samples.
    pub fn clairaut_drift(&self, w: &WarpingFunction) -> f64 {
        self.traj
            .y
            .iter()
            .map(|st| {
                let m = w.eval(st[0]).m;
                let angle = (self.clairaut / m).atan2(st[2]);
                (m * angle.sin() - self.clairaut).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Largest `|x'^2 + m^2 y'^2 - 1|` over the samples.
    pub fn speed_error(&self, w: &WarpingFunction) -> f64 {
        self.traj
            .y
            .iter()
            .map(|st| {
                let m = w.eval(st[0]).m;
                (st[2] * st[2] + (self.clairaut / m).powi(2) - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Arclengths where `x'` changes sign, located on the dense output.
    pub fn turning_points(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for k in 0..self.traj.len().saturating_sub(1) {
            let (v0, v1) = (self.traj.y[k][2], self.traj.y[k + 1][2]);
            if v0 != 0.0 && v0 * v1 < 0.0 {
                let s = roots::bisect(&mut |s| self.dx_at(s), self.traj.t[k], self.traj.t[k + 1], 1e-14);
                out.push(s);
            }
        }
        out
    }

    /// CSV rows `s,x,y,angle,nu` with 12 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,x,y,angle,nu\n");
        for p in &self.path {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                sig12(p.s),
                sig12(p.point.x),
                sig12(p.point.y),
                sig12(p.angle),
                sig12(self.clairaut)
            ));
        }
        out
    }
}

/// `nu = m(x) sin(angle)`.
pub fn clairaut_constant(x: f64, angle: f64, w: &WarpingFunction) -> Result<f64> {
    Ok(w.evaluate(x)?.m * angle.sin().abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum RunEnd {
    Length,
    Boundary,
    Window,
    Target,
}

fn solver() -> Dopri5 {
    // Short steps keep the Hermite dense output near integrator accuracy.
    Dopri5 { h_max: 0.1, ..Dopri5::default() }
}

pub(crate) fn check_point(p: ModelPoint, w: &WarpingFunction) -> Result<()> {
    if !(p.x >= 0.0 && p.x <= w.domain_max) || !p.y.is_finite() {
        return Err(Error::Domain { t: p.x, domain_max: w.domain_max });
    }
    Ok(())
}

/// Integrate from `p` with signed heading (`|heading|` is the angle to
/// `+d/dx`, its sign the direction of travel in `y`), for at most `s_max`,
/// optionally stopping where `y` reaches a target moving in direction `dir`.
pub(crate) fn run(
    w: &WarpingFunction,
    p: ModelPoint,
    heading: f64,
    s_max: f64,
    target: Option<(f64, f64)>,
) -> Result<(Trajectory<3>, RunEnd, f64)> {
    let m0 = w.eval(p.x).m;
    let mut v0 = heading.abs().cos();
    if v0.abs() < 1e-14 {
        // cos(pi/2) rounding would push boundary-tangent geodesics off x = 0.
        v0 = 0.0;
    }
    let nu_s = m0 * heading.sin();
    let y0 = [p.x, p.y, v0];
    if p.x <= 0.0 && v0 < -1e-15 {
        let traj = Trajectory::from_samples(vec![0.0], vec![y0], vec![[v0, 0.0, 0.0]]);
        return Ok((traj, RunEnd::Boundary, nu_s));
    }
    let nu2 = nu_s * nu_s;
    let sys = |_s: f64, st: &[f64; 3]| {
        let d = w.eval(st[0]);
        let inv = 1.0 / d.m;
        [st[2], nu_s * inv * inv, nu2 * d.dm * inv * inv * inv]
    };
    let window = w.domain_max;
    let mut events = vec![
        Event::new(Crossing::Falling, |_s, st: &[f64; 3]| st[0]),
        Event::new(Crossing::Rising, move |_s, st: &[f64; 3]| st[0] - window),
    ];
    if let Some((yt, dir)) = target {
        events.push(Event::new(Crossing::Rising, move |_s, st: &[f64; 3]| dir * (st[1] - yt)));
    }
    let (traj, stop) = solver().integrate(&sys, 0.0, y0, s_max, &events)?;
    let end = match stop {
        Stop::End => RunEnd::Length,
        Stop::Event(0) => RunEnd::Boundary,
        Stop::Event(1) => RunEnd::Window,
        Stop::Event(_) => RunEnd::Target,
    };
    Ok((traj, end, nu_s))
}

/// Integrate the unit-speed geodesic from `p` for `length`. `angle` in
/// `[0, pi]` is measured against `+d/dx` and heads towards increasing `y`;
/// negative angles head towards decreasing `y`.
pub fn integrate_geodesic(p: ModelPoint, angle: f64, length: f64, w: &WarpingFunction) -> Result<ModelGeodesic> {
    check_point(p, w)?;
    if !(length >= 0.0) {
        return Err(Error::Precondition(format!("geodesic length must be non-negative, got {length}")));
    }
    let (traj, end, nu_s) = run(w, p, angle, length, None)?;
    match end {
        RunEnd::Window => Err(Error::ExitsWindow { x: traj.last()[0], window: w.domain_max }),
        RunEnd::Boundary => Ok(ModelGeodesic::from_run(w, traj, nu_s, GeodesicStatus::BoundaryHit)),
        _ => Ok(ModelGeodesic::from_run(w, traj, nu_s, GeodesicStatus::Complete)),
    }
}

/// `int m / sqrt(m^2 - nu^2)` between the levels `x1` and `x2`: the length
/// of a monotone geodesic leg with Clairaut constant `nu`.
pub fn length_between_parallels(nu: f64, x1: f64, x2: f64, w: &WarpingFunction) -> Result<f64> {
    let (lo, hi) = (x1.min(x2), x1.max(x2));
    w.evaluate(lo)?;
    w.evaluate(hi)?;
    if hi == lo {
        return Ok(0.0);
    }
    let n = 512;
    for i in 1..n {
        let t = lo + (hi - lo) * i as f64 / n as f64;
        let m = w.eval(t).m;
        if m <= nu {
            return Err(Error::TurningPointInsideLeg { at: t, m, nu });
        }
    }
    let f = |t: f64| {
        let m = w.eval(t).m;
        let d = m * m - nu * nu;
        if d <= 0.0 {
            0.0
        } else {
            m / d.sqrt()
        }
    };
    if nu == 0.0 {
        return Ok(hi - lo);
    }
    Ok(quad::endpoint_singular(&f, lo, hi, 1e-13))
}

/// Lower bound `t2 - t1 + (nu^2/2) int 1/(m sqrt(m^2 - nu^2))` for the length
/// of a geodesic leg between the levels `t1 <= t2`. Falls back to `t2 - t1`
/// when the correction term is undefined.
pub fn length_lower_bound(nu: f64, t1: f64, t2: f64, w: &WarpingFunction) -> f64 {
    if t2 <= t1 {
        return t2 - t1;
    }
    let n = 512;
    let min_m = (0..=n)
        .map(|i| w.eval(t1 + (t2 - t1) * i as f64 / n as f64).m)
        .fold(f64::INFINITY, f64::min);
    if nu == 0.0 || nu >= min_m {
        return t2 - t1;
    }
    let f = |t: f64| {
        let m = w.eval(t).m;
        1.0 / (m * (m * m - nu * nu).sqrt())
    };
    // The integrand blows up like an inverse square root where m = nu.
    t2 - t1 + 0.5 * nu * nu * quad::endpoint_singular(&f, t1, t2, 1e-13)
}

/// A geodesic from `p` that reaches the target.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub heading: f64,
    pub length: f64,
    pub clairaut: f64,
    pub geodesic: ModelGeodesic,
}

const SHOOT_STARTS: usize = 32;

/// Length of a path that runs along `x`-lines to a level `c` and along the
/// parallel at `c`; an upper bound for the distance.
fn distance_upper_bound(p: ModelPoint, q: ModelPoint, w: &WarpingFunction) -> f64 {
    let r = (q.y - p.y).abs();
    let n = 256;
    let mut levels: Vec<f64> = (0..=n).map(|i| w.domain_max * i as f64 / n as f64).collect();
    levels.push(p.x);
    levels.push(q.x);
    levels
        .into_iter()
        .map(|c| (p.x - c).abs() + w.eval(c).m * r + (c - q.x).abs())
        .fold(f64::INFINITY, f64::min)
}

/// All geodesics from `p` to `q` found by multi-start shooting over the
/// initial heading, with length below a cap derived from a path bound.
pub fn shoot_candidates(p: ModelPoint, q: ModelPoint, w: &WarpingFunction) -> Result<Vec<Candidate>> {
    check_point(p, w)?;
    check_point(q, w)?;
    let dir = if q.y >= p.y { 1.0 } else { -1.0 };
    let cap = 1.5 * distance_upper_bound(p, q, w) + 1e-3;
    let mut failure: Option<Error> = None;
    let mut residual = |alpha: f64| -> Sample {
        match run(w, p, dir * alpha, cap, Some((q.y, dir))) {
            Ok((traj, RunEnd::Target, _)) => Sample::Value(traj.last()[0] - q.x),
            Ok((_, RunEnd::Boundary, _)) => Sample::Marker(-1.0),
            Ok((_, RunEnd::Window, _)) => Sample::Marker(1.0),
            Ok((traj, _, _)) => Sample::Marker(if traj.last()[0] >= q.x { 1.0 } else { -1.0 }),
            Err(e) => {
                failure.get_or_insert(e);
                Sample::Marker(1.0)
            }
        }
    };
    let grid: Vec<f64> = (0..=SHOOT_STARTS + 1)
        .map(|i| std::f64::consts::PI * i as f64 / (SHOOT_STARTS + 1) as f64)
        .collect();
    let brackets = roots::brackets(&mut residual, &grid);
    let ftol = 1e-10 * (1.0 + q.x);
    let mut roots_found = Vec::new();
    for (lo, hi) in brackets {
        if let Some((alpha, v)) = roots::refine(&mut residual, lo, hi, 1e-16, 1e-13 * (1.0 + q.x)) {
            if v.abs() <= ftol {
                roots_found.push(alpha);
            }
        }
    }
    if let Some(e) = failure {
        if roots_found.is_empty() {
            return Err(e);
        }
    }
    let mut out = Vec::new();
    for alpha in roots_found {
        let (traj, end, nu_s) = run(w, p, dir * alpha, cap, Some((q.y, dir)))?;
        if end != RunEnd::Target {
            continue;
        }
        let g = ModelGeodesic::from_run(w, traj, nu_s, GeodesicStatus::Complete);
        out.push(Candidate { heading: dir * alpha, length: g.total_length, clairaut: g.clairaut, geodesic: g });
    }
    Ok(out)
}

/// Pick the shortest candidate; lengths within 1e-9 go to the smaller
/// Clairaut constant.
pub(crate) fn shortest(cands: Vec<Candidate>) -> Option<Candidate> {
    let min_len = cands.iter().map(|c| c.length).fold(f64::INFINITY, f64::min);
    cands
        .into_iter()
        .filter(|c| c.length <= min_len + 1e-9)
        .min_by(|a, b| a.clairaut.partial_cmp(&b.clairaut).unwrap())
}

/// Reverse heading of a geodesic's end velocity, for integrating back.
fn reversed_heading(g: &ModelGeodesic, w: &WarpingFunction) -> f64 {
    let end = g.end();
    let m = w.eval(end.x).m;
    let back_y = -g.signed_clairaut() / m;
    back_y.atan2(-g.end_dx())
}

/// Distance between `p` and `q` and a realizing geodesic from `p` to `q`.
pub fn distance(p: ModelPoint, q: ModelPoint, w: &WarpingFunction) -> Result<(f64, ModelGeodesic)> {
    check_point(p, w)?;
    check_point(q, w)?;
    let dy = q.y - p.y;
    if dy.abs() < 1e-14 {
        let len = (q.x - p.x).abs();
        let heading = if q.x >= p.x { 0.0 } else { std::f64::consts::PI };
        let (traj, _, _) = run(w, p, heading, len, None)?;
        return Ok((len, ModelGeodesic::from_run(w, traj, 0.0, GeodesicStatus::Complete)));
    }
    if q.x == 0.0 && p.x > 0.0 {
        // Shoot from the boundary point and integrate back.
        let (d, g) = distance(q, p, w)?;
        let back = integrate_geodesic(p, reversed_heading(&g, w), d, w)?;
        return Ok((d, back));
    }
    let cands = shoot_candidates(p, q, w)?;
    match shortest(cands) {
        Some(c) => Ok((c.length, c.geodesic)),
        None => Err(Error::NoGeodesic(format!(
            "no shooting bracket from ({}, {}) to ({}, {})",
            p.x, p.y, q.x, q.y
        ))),
    }
}

/// `d(p, (c, s))`.
pub fn distance_to_parallel(p: ModelPoint, c: f64, s: f64, w: &WarpingFunction) -> Result<f64> {
    Ok(distance(p, ModelPoint::new(c, s), w)?.0)
}

/// First zero of the normal Jacobi field `J(0) = 0`, `J'(0) = 1` along `g`,
/// or `None` within its length.
pub fn conjugate_point_search(g: &ModelGeodesic, w: &WarpingFunction) -> Option<f64> {
    let p = g.start();
    let nu_s = g.signed_clairaut();
    let nu2 = nu_s * nu_s;
    let sys = |_s: f64, st: &[f64; 5]| {
        let d = w.eval(st[0]);
        let inv = 1.0 / d.m;
        let curvature = -d.ddm * inv;
        [st[2], nu_s * inv * inv, nu2 * d.dm * inv * inv * inv, st[4], -curvature * st[3]]
    };
    let ev = Event::new(Crossing::Falling, |_s, st: &[f64; 5]| st[3]);
    let y0 = [p.x, p.y, g.start_dx(), 0.0, 1.0];
    match solver().integrate(&sys, 0.0, y0, g.total_length, &[ev]) {
        Ok((traj, Stop::Event(_))) => Some(traj.t_end()),
        _ => None,
    }
}

/// Numerical surrogate for a cut-point-free sector `0 <= y <= theta0`.
#[derive(Debug, Clone, Serialize)]
pub struct SectorCertificate {
    pub theta0: f64,
    pub x_max: f64,
    pub pairs_checked: usize,
    pub conjugate_points: usize,
    pub ambiguous_pairs: usize,
    pub pass: bool,
}

/// Check sampled pairs `(x1, 0)`, `(x2, r)` with `x1, x2 <= x_max` and
/// `r <= theta0`: the minimizing geodesic carries no conjugate point and no
/// second geodesic of the same length is found by shooting.
pub fn certify_sector(w: &WarpingFunction, theta0: f64, x_max: f64, grid: usize) -> Result<SectorCertificate> {
    let mut pairs = 0;
    let mut conj = 0;
    let mut ambiguous = 0;
    let levels: Vec<f64> = (1..=grid).map(|i| x_max * i as f64 / grid as f64).collect();
    let gaps: Vec<f64> = (1..=grid).map(|i| theta0 * i as f64 / grid as f64).collect();
    for &x1 in &levels {
        for &x2 in &levels {
            for &r in &gaps {
                let cands = shoot_candidates(ModelPoint::new(x1, 0.0), ModelPoint::new(x2, r), w)?;
                let best = match shortest(cands.clone()) {
                    Some(b) => b,
                    None => {
                        ambiguous += 1;
                        continue;
                    }
                };
                pairs += 1;
                let twins = cands
                    .iter()
                    .filter(|c| (c.length - best.length).abs() < 1e-7 && (c.heading - best.heading).abs() > 1e-6)
                    .count();
                if twins > 0 {
                    ambiguous += 1;
                }
                if conjugate_point_search(&best.geodesic, w).is_some() {
                    conj += 1;
                }
            }
        }
    }
    Ok(SectorCertificate {
        theta0,
        x_max,
        pairs_checked: pairs,
        conjugate_points: conj,
        ambiguous_pairs: ambiguous,
        pass: conj == 0 && ambiguous == 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, FRAC_PI_6, PI};

    fn fermi(p: ModelPoint, q: ModelPoint) -> f64 {
        (p.x.cosh() * q.x.cosh() * (q.y - p.y).cosh() - p.x.sinh() * q.x.sinh()).acosh()
    }

    #[test]
    fn clairaut_values() {
        let e = WarpingFunction::euclidean();
        let h = WarpingFunction::hyperbolic();
        assert_eq!(clairaut_constant(5.0, 0.0, &e).unwrap(), 0.0);
        assert_eq!(clairaut_constant(0.0, FRAC_PI_2, &WarpingFunction::gauss()).unwrap(), 1.0);
        let nu = clairaut_constant(1.0, FRAC_PI_6, &h).unwrap();
        assert!((nu - 0.771540317407621).abs() < 1e-14);
    }

    #[test]
    fn straight_lines_in_flat_model() {
        let e = WarpingFunction::euclidean();
        let g = integrate_geodesic(ModelPoint::new(1.0, 0.0), FRAC_PI_4, 2f64.sqrt(), &e).unwrap();
        let end = g.end();
        assert!((end.x - 2.0).abs() < 1e-12 && (end.y - 1.0).abs() < 1e-12);
        for w in [e, WarpingFunction::hyperbolic(), WarpingFunction::gauss()] {
            let ray = integrate_geodesic(ModelPoint::new(0.0, 0.0), 0.0, 3.0, &w).unwrap();
            assert!((ray.end().x - 3.0).abs() < 1e-12 && ray.end().y == 0.0);
        }
    }

    #[test]
    fn hyperbolic_geodesic_matches_fermi_oracle() {
        let h = WarpingFunction::hyperbolic();
        let p = ModelPoint::new(1.0, 0.0);
        let g = integrate_geodesic(p, FRAC_PI_3, 2.0, &h).unwrap();
        assert!((fermi(p, g.end()) - 2.0).abs() < 1e-9);
        assert!(g.clairaut_drift(&h) < 1e-10);
        assert!(g.speed_error(&h) < 1e-10);
    }

    #[test]
    fn boundary_hit_is_a_status() {
        let e = WarpingFunction::euclidean();
        let g = integrate_geodesic(ModelPoint::new(1.0, 0.0), 3.0 * FRAC_PI_4, 5.0, &e).unwrap();
        assert_eq!(g.status, GeodesicStatus::BoundaryHit);
        assert!((g.total_length - 2f64.sqrt()).abs() < 1e-12);
        let far = integrate_geodesic(ModelPoint::new(1.0, 0.0), 0.1, 50.0, &e);
        assert!(matches!(far, Err(Error::ExitsWindow { .. })));
    }

    #[test]
    fn turning_points_sit_on_the_clairaut_level() {
        let h = WarpingFunction::hyperbolic();
        // Heading towards the boundary with large nu turns before reaching it.
        let g = integrate_geodesic(ModelPoint::new(1.0, 0.0), 2.0, 3.0, &h).unwrap();
        let tps = g.turning_points();
        assert_eq!(tps.len(), 1);
        let x = g.point_at(tps[0]).x;
        assert!((h.m(x) - g.clairaut).abs() < 1e-8);
    }

    #[test]
    fn parallel_lengths() {
        let e = WarpingFunction::euclidean();
        let h = WarpingFunction::hyperbolic();
        assert!((length_between_parallels(0.0, 0.0, 3.0, &h).unwrap() - 3.0).abs() < 1e-15);
        let v = length_between_parallels(0.5, 1.0, 2.0, &e).unwrap();
        assert!((v - 2.0 / 3f64.sqrt()).abs() < 1e-12);
        // Against the arclength of a geodesic leg with nu = 1 from x = 0.5 upwards.
        let nu = 1.0;
        let angle = (nu / 0.5f64.cosh()).asin();
        let g = integrate_geodesic(ModelPoint::new(0.5, 0.0), angle, 3.0, &h).unwrap();
        let s = roots::bisect(&mut |s| g.point_at(s).x - 1.5, 0.0, 3.0, 1e-14);
        let q = length_between_parallels(nu, 0.5, 1.5, &h).unwrap();
        assert!((q - s).abs() < 1e-6, "{q} vs {s}");
        assert!(matches!(
            length_between_parallels(1.2, 0.0, 2.0, &h),
            Err(Error::TurningPointInsideLeg { .. })
        ));
    }

    #[test]
    fn lower_bound_values() {
        let e = WarpingFunction::euclidean();
        assert_eq!(length_lower_bound(0.0, 0.0, 4.0, &e), 4.0);
        let b = length_lower_bound(0.5, 1.0, 2.0, &e);
        assert!((b - (1.0 + 0.25 / 3f64.sqrt())).abs() < 1e-12);
        assert!(length_lower_bound(0.5, 2.0, 1.0, &e) <= 0.0);
    }

    #[test]
    fn distances() {
        let e = WarpingFunction::euclidean();
        let h = WarpingFunction::hyperbolic();
        let p = ModelPoint::new(1.0, 0.0);
        assert_eq!(distance(p, p, &e).unwrap().0, 0.0);
        let (d, g) = distance(p, ModelPoint::new(4.0, 4.0), &e).unwrap();
        assert!((d - 5.0).abs() < 1e-10);
        assert!((g.end().x - 4.0).abs() < 1e-9);
        let q = ModelPoint::new(2.0, 1.0);
        let (d, _) = distance(p, q, &h).unwrap();
        assert!((d - fermi(p, q)).abs() < 1e-9);
        let (back, _) = distance(q, p, &h).unwrap();
        assert!((d - back).abs() < 1e-9);
        let below = distance(p, ModelPoint::new(2.0, -1.0), &h).unwrap();
        assert!((below.0 - d).abs() < 1e-9 && below.1.y_sign < 0.0);
    }

    #[test]
    fn distance_to_boundary_point() {
        let e = WarpingFunction::euclidean();
        let (d, g) = distance(ModelPoint::new(3.0, 0.0), ModelPoint::new(0.0, 4.0), &e).unwrap();
        assert!((d - 5.0).abs() < 1e-9);
        assert!((g.end().y - 4.0).abs() < 1e-8 && g.end().x.abs() < 1e-8);
    }

    #[test]
    fn parallel_distance_is_monotone() {
        let e = WarpingFunction::euclidean();
        let g = WarpingFunction::gauss();
        let p = ModelPoint::new(1.0, 0.0);
        assert!(distance_to_parallel(p, 1.0, 0.0, &g).unwrap().abs() < 1e-14);
        assert!((distance_to_parallel(p, 2.0, 3.0, &e).unwrap() - 10f64.sqrt()).abs() < 1e-9);
        let vals: Vec<f64> = (1..=8).map(|i| distance_to_parallel(p, 1.0, 0.5 * i as f64, &g).unwrap()).collect();
        assert!(vals.windows(2).all(|v| v[1] > v[0]), "{vals:?}");
    }

    #[test]
    fn conjugate_points() {
        let e = WarpingFunction::euclidean();
        let h = WarpingFunction::hyperbolic();
        let g = WarpingFunction::gauss();
        let ge = integrate_geodesic(ModelPoint::new(1.0, 0.0), 1.0, 5.0, &e).unwrap();
        assert!(conjugate_point_search(&ge, &e).is_none());
        let gh = integrate_geodesic(ModelPoint::new(1.0, 0.0), 1.0, 5.0, &h).unwrap();
        assert!(conjugate_point_search(&gh, &h).is_none());
        // Along the boundary of the gauss model J'' + 2J = 0.
        let gb = integrate_geodesic(ModelPoint::new(0.0, 0.0), FRAC_PI_2, 4.0, &g).unwrap();
        let s = conjugate_point_search(&gb, &g).unwrap();
        assert!((s - PI / 2f64.sqrt()).abs() < 1e-9, "{s}");
    }

    #[test]
    fn csv_export() {
        let e = WarpingFunction::euclidean();
        let g = integrate_geodesic(ModelPoint::new(1.0, 0.0), FRAC_PI_4, 1.0, &e).unwrap();
        let csv = g.to_csv();
        assert!(csv.starts_with("s,x,y,angle,nu\n0.0,1.0,0.0,"));
        assert_eq!(csv.lines().count(), g.path.len() + 1);
    }
}
