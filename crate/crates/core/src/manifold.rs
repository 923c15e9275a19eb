//! Warped-product test manifolds `dt^2 + f(t)^2 (flat fiber)` with boundary
//! `t = 0` (and `t = l` for slabs): geodesics, boundary segments, distances,
//! open triangles, curvature certificates and variational lengths.
//!
//! Geodesics use the full second-order system
//! `t'' = f f' |u'|^2`, `u_i'' = -2 (f'/f) t' u_i'`; the fiber momenta
//! `f^2 u_i'` are not built in and serve as a conservation check.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model_surface::{self, ModelPoint};
use crate::ode::{Crossing, Dopri5, Event, Stop, Trajectory};
use crate::roots::{self, Sample};
use crate::warping::WarpingFunction;

/// Flat fiber of the warped product.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Fiber {
    Line,
    Plane,
}

impl Fiber {
    pub fn dim(self) -> usize {
        match self {
            Fiber::Line => 1,
            Fiber::Plane => 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TestManifold {
    pub name: String,
    pub fiber: Fiber,
    pub warping: WarpingFunction,
    /// Width of a two-boundary slab `[0, l] x fiber`.
    pub slab: Option<f64>,
    /// Comparison model.
    pub model: WarpingFunction,
}

/// Point `(t, u)`; `u[1]` is unused for a line fiber.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ManifoldPoint {
    pub t: f64,
    pub u: [f64; 2],
}

impl ManifoldPoint {
    pub fn new(t: f64, u1: f64, u2: f64) -> Self {
        Self { t, u: [u1, u2] }
    }

    pub fn fiber_distance(&self, other: &Self) -> f64 {
        ((self.u[0] - other.u[0]).powi(2) + (self.u[1] - other.u[1]).powi(2)).sqrt()
    }
}

impl TestManifold {
    pub fn new(name: impl Into<String>, fiber: Fiber, warping: WarpingFunction, model: WarpingFunction) -> Result<Self> {
        let m = Self { name: name.into(), fiber, warping, slab: None, model };
        m.validate()?;
        Ok(m)
    }

    /// Flat slab `[0, l] x fiber`.
    pub fn slab(width: f64, fiber: Fiber) -> Result<Self> {
        if !(width > 0.0) {
            return Err(Error::Config(format!("slab width must be positive, got {width}")));
        }
        let m = Self {
            name: format!("slab{}", fiber.dim() + 1),
            fiber,
            warping: WarpingFunction::euclidean(),
            slab: Some(width),
            model: WarpingFunction::euclidean(),
        };
        m.validate()?;
        Ok(m)
    }

    /// Resolve `flat2`, `flat3`, `cosh2`, `cosh3`, `gauss2`, `gauss3`,
    /// `slab2`, `slab3` (width 2). A missing digit means dimension 2.
    pub fn from_name(name: &str, model: WarpingFunction) -> Result<Self> {
        let (base, dim) = match name.strip_suffix('3') {
            Some(b) => (b, 3),
            None => (name.strip_suffix('2').unwrap_or(name), 2),
        };
        let fiber = if dim == 3 { Fiber::Plane } else { Fiber::Line };
        let warping = match base {
            "flat" => WarpingFunction::euclidean(),
            "cosh" => WarpingFunction::hyperbolic(),
            "gauss" => WarpingFunction::gauss(),
            "slab" => {
                let mut m = Self::slab(2.0, fiber)?;
                m.model = model;
                return Ok(m);
            }
            other => return Err(Error::Config(format!("unknown manifold '{other}'"))),
        };
        Self::new(format!("{base}{dim}"), fiber, warping, model)
    }

    pub fn dim(&self) -> usize {
        self.fiber.dim() + 1
    }

    /// Eigenvalue `-f'(0)/f(0)` of the boundary shape operator.
    pub fn boundary_shape_eigenvalue(&self) -> f64 {
        let d = self.warping.eval(0.0);
        -d.dm / d.m
    }

    pub fn validate(&self) -> Result<()> {
        self.warping.validate()?;
        if self.boundary_shape_eigenvalue() < 0.0 {
            return Err(Error::Precondition("boundary is not convex".into()));
        }
        if let Some(l) = self.slab {
            if l > self.warping.domain_max {
                return Err(Error::Domain { t: l, domain_max: self.warping.domain_max });
            }
        }
        Ok(())
    }

    fn check_point(&self, p: &ManifoldPoint) -> Result<()> {
        let top = self.slab.unwrap_or(self.warping.domain_max);
        if !(p.t >= 0.0 && p.t <= top) || !p.u.iter().all(|u| u.is_finite()) {
            return Err(Error::Domain { t: p.t, domain_max: top });
        }
        if self.fiber == Fiber::Line && p.u[1] != 0.0 {
            return Err(Error::Precondition("line fiber points need u2 = 0".into()));
        }
        Ok(())
    }

    /// Metric norm of a coordinate vector `(t', u1', u2')` at `p`.
    pub fn norm(&self, p: &ManifoldPoint, v: [f64; 3]) -> f64 {
        let f = self.warping.eval(p.t).m;
        (v[0] * v[0] + f * f * (v[1] * v[1] + v[2] * v[2])).sqrt()
    }

    /// Unit vector at angle `theta` from `+d/dt` towards the fiber direction
    /// `e` (normalized in the flat fiber).
    pub fn unit_direction(&self, p: &ManifoldPoint, theta: f64, e: [f64; 2]) -> [f64; 3] {
        let n = (e[0] * e[0] + e[1] * e[1]).sqrt();
        let f = self.warping.eval(p.t).m;
        let (e1, e2) = if n > 0.0 { (e[0] / n, e[1] / n) } else { (1.0, 0.0) };
        let e2 = if self.fiber == Fiber::Line { 0.0 } else { e2 };
        [theta.cos(), theta.sin() * e1 / f, theta.sin() * e2 / f]
    }

    /// Distance to the boundary.
    pub fn boundary_distance(&self, p: &ManifoldPoint) -> f64 {
        match self.slab {
            Some(l) => p.t.min(l - p.t),
            None => p.t,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ManifoldGeodesicStatus {
    Complete,
    BoundaryHit,
}

#[derive(Debug, Clone)]
pub struct ManifoldGeodesic {
    pub total_length: f64,
    pub status: ManifoldGeodesicStatus,
    traj: Trajectory<6>,
}

impl ManifoldGeodesic {
    fn point_of(st: &[f64; 6]) -> ManifoldPoint {
        ManifoldPoint::new(st[0], st[1], st[2])
    }

    pub fn start(&self) -> ManifoldPoint {
        Self::point_of(&self.traj.y[0])
    }

    pub fn end(&self) -> ManifoldPoint {
        Self::point_of(self.traj.last())
    }

    pub fn start_velocity(&self) -> [f64; 3] {
        let y = self.traj.y[0];
        [y[3], y[4], y[5]]
    }

    pub fn end_velocity(&self) -> [f64; 3] {
        let y = self.traj.last();
        [y[3], y[4], y[5]]
    }

    pub fn point_at(&self, s: f64) -> ManifoldPoint {
        Self::point_of(&self.traj.interpolate(s))
    }

    pub fn velocity_at(&self, s: f64) -> [f64; 3] {
        let y = self.traj.interpolate(s);
        [y[3], y[4], y[5]]
    }

    /// Samples `(s, point)` of the accepted steps.
    pub fn samples(&self) -> impl Iterator<Item = (f64, ManifoldPoint)> + '_ {
        self.traj.t.iter().zip(&self.traj.y).map(|(s, y)| (*s, Self::point_of(y)))
    }

    pub fn speed_error(&self, m: &TestManifold) -> f64 {
        self.traj
            .y
            .iter()
            .map(|y| {
                let f = m.warping.eval(y[0]).m;
                (y[3] * y[3] + f * f * (y[4] * y[4] + y[5] * y[5]) - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Largest change of the fiber momenta `f^2 u_i'`.
    pub fn momentum_drift(&self, m: &TestManifold) -> f64 {
        let mom = |y: &[f64; 6]| {
            let f = m.warping.eval(y[0]).m;
            [f * f * y[4], f * f * y[5]]
        };
        let m0 = mom(&self.traj.y[0]);
        self.traj
            .y
            .iter()
            .map(|y| {
                let mk = mom(y);
                (mk[0] - m0[0]).abs().max((mk[1] - m0[1]).abs())
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum End {
    Length,
    Boundary,
    Far,
    Window,
    Target,
}

/// Integrate from `p` with coordinate velocity `v`; the optional target
/// stops where the fiber progress along `e` reaches `r`.
fn run(
    m: &TestManifold,
    p: ManifoldPoint,
    v: [f64; 3],
    s_max: f64,
    target: Option<([f64; 2], f64)>,
) -> Result<(Trajectory<6>, End)> {
    let y0 = [p.t, p.u[0], p.u[1], v[0], v[1], v[2]];
    if p.t <= 0.0 && v[0] < -1e-15 {
        let traj = Trajectory::from_samples(vec![0.0], vec![y0], vec![[0.0; 6]]);
        return Ok((traj, End::Boundary));
    }
    if let Some(l) = m.slab {
        if p.t >= l && v[0] > 1e-15 {
            let traj = Trajectory::from_samples(vec![0.0], vec![y0], vec![[0.0; 6]]);
            return Ok((traj, End::Far));
        }
    }
    let w = &m.warping;
    let sys = |_s: f64, y: &[f64; 6]| {
        let d = w.eval(y[0]);
        let k = d.dm / d.m;
        let u2 = y[4] * y[4] + y[5] * y[5];
        [y[3], y[4], y[5], d.m * d.dm * u2, -2.0 * k * y[3] * y[4], -2.0 * k * y[3] * y[5]]
    };
    let far = m.slab.unwrap_or(f64::INFINITY);
    let window = w.domain_max;
    let mut events = vec![
        Event::new(Crossing::Falling, |_s, y: &[f64; 6]| y[0]),
        Event::new(Crossing::Rising, move |_s, y: &[f64; 6]| y[0] - far),
        Event::new(Crossing::Rising, move |_s, y: &[f64; 6]| y[0] - window),
    ];
    if let Some((e, r)) = target {
        let (u1, u2) = (p.u[0], p.u[1]);
        events.push(Event::new(Crossing::Rising, move |_s, y: &[f64; 6]| {
            (y[1] - u1) * e[0] + (y[2] - u2) * e[1] - r
        }));
    }
    let (traj, stop) = Dopri5 { h_max: 0.1, ..Dopri5::default() }.integrate(&sys, 0.0, y0, s_max, &events)?;
    let end = match stop {
        Stop::End => End::Length,
        Stop::Event(0) => End::Boundary,
        Stop::Event(1) => End::Far,
        Stop::Event(2) => End::Window,
        Stop::Event(_) => End::Target,
    };
    Ok((traj, end))
}

/// Integrate the geodesic from `p` with unit coordinate velocity `v`.
pub fn integrate_manifold_geodesic(
    m: &TestManifold,
    p: ManifoldPoint,
    v: [f64; 3],
    length: f64,
) -> Result<ManifoldGeodesic> {
    m.check_point(&p)?;
    if (m.norm(&p, v) - 1.0).abs() > 1e-9 {
        return Err(Error::Precondition(format!("initial velocity has norm {}", m.norm(&p, v))));
    }
    if m.fiber == Fiber::Line && v[2] != 0.0 {
        return Err(Error::Precondition("line fiber velocities need u2' = 0".into()));
    }
    let (traj, end) = run(m, p, v, length, None)?;
    let status = match end {
        End::Window => return Err(Error::ExitsWindow { x: traj.last()[0], window: m.warping.domain_max }),
        End::Boundary | End::Far => ManifoldGeodesicStatus::BoundaryHit,
        _ => ManifoldGeodesicStatus::Complete,
    };
    Ok(ManifoldGeodesic { total_length: traj.t_end(), status, traj })
}

/// Foot of the boundary segment through `p` and its length.
pub fn boundary_segment(m: &TestManifold, p: ManifoldPoint) -> Result<(ManifoldPoint, f64)> {
    m.check_point(&p)?;
    match m.slab {
        Some(l) if p.t > 0.5 * l => Ok((ManifoldPoint { t: l, u: p.u }, l - p.t)),
        _ => Ok((ManifoldPoint { t: 0.0, u: p.u }, p.t)),
    }
}

const MANIFOLD_STARTS: usize = 64;

/// Distance and a minimizing geodesic from `p` to `q`, by shooting in the
/// plane spanned by `d/dt` and the fiber displacement.
pub fn manifold_distance(m: &TestManifold, p: ManifoldPoint, q: ManifoldPoint) -> Result<(f64, ManifoldGeodesic)> {
    m.check_point(&p)?;
    m.check_point(&q)?;
    let r = p.fiber_distance(&q);
    if r < 1e-14 {
        let len = (q.t - p.t).abs();
        let v = [if q.t >= p.t { 1.0 } else { -1.0 }, 0.0, 0.0];
        let (traj, _) = run(m, p, v, len, None)?;
        return Ok((len, ManifoldGeodesic { total_length: len, status: ManifoldGeodesicStatus::Complete, traj }));
    }
    if q.t == 0.0 && p.t > 0.0 {
        let (d, g) = manifold_distance(m, q, p)?;
        let end_v = g.end_velocity();
        let back = integrate_manifold_geodesic(m, p, [-end_v[0], -end_v[1], -end_v[2]], d)?;
        return Ok((d, back));
    }
    let e = [(q.u[0] - p.u[0]) / r, (q.u[1] - p.u[1]) / r];
    let top = m.slab.unwrap_or(m.warping.domain_max);
    // Path bound: up or down to a level, across, and back.
    let bound = (0..=256)
        .map(|i| top * i as f64 / 256.0)
        .chain([p.t, q.t])
        .map(|c| (p.t - c).abs() + m.warping.eval(c).m * r + (c - q.t).abs())
        .fold(f64::INFINITY, f64::min);
    let cap = 1.5 * bound + 1e-3;
    let mut failure: Option<Error> = None;
    let mut residual = |theta: f64| -> Sample {
        let v = m.unit_direction(&p, theta, e);
        match run(m, p, v, cap, Some((e, r))) {
            Ok((traj, End::Target)) => Sample::Value(traj.last()[0] - q.t),
            Ok((_, End::Boundary)) => Sample::Marker(-1.0),
            Ok((_, End::Far | End::Window)) => Sample::Marker(1.0),
            Ok((traj, _)) => Sample::Marker(if traj.last()[0] >= q.t { 1.0 } else { -1.0 }),
            Err(err) => {
                failure.get_or_insert(err);
                Sample::Marker(1.0)
            }
        }
    };
    let grid: Vec<f64> = (0..=MANIFOLD_STARTS + 1).map(|i| PI * i as f64 / (MANIFOLD_STARTS + 1) as f64).collect();
    let mut best: Option<(f64, ManifoldGeodesic)> = None;
    for (lo, hi) in roots::brackets(&mut residual, &grid) {
        let Some((theta, _)) = roots::refine(&mut residual, lo, hi, 1e-16, 1e-13 * (1.0 + q.t)) else {
            continue;
        };
        let v = m.unit_direction(&p, theta, e);
        let (traj, end) = run(m, p, v, cap, Some((e, r)))?;
        if end != End::Target {
            continue;
        }
        let endpoint = ManifoldGeodesic::point_of(traj.last());
        let len = traj.t_end();
        let miss = (endpoint.t - q.t).abs() + endpoint.fiber_distance(&q);
        if miss > 1e-9 * (1.0 + len) {
            continue;
        }
        let g = ManifoldGeodesic { total_length: len, status: ManifoldGeodesicStatus::Complete, traj };
        if best.as_ref().is_none_or(|(bl, _)| len < *bl) {
            best = Some((len, g));
        }
    }
    match (best, failure) {
        (Some(b), _) => Ok(b),
        (None, Some(err)) => Err(err),
        (None, None) => Err(Error::NoGeodesic(format!("no shooting bracket from {p:?} to {q:?}"))),
    }
}

/// Open triangle spanned by the boundary and two interior points.
#[derive(Debug, Clone)]
pub struct ManifoldOpenTriangle {
    pub p: ManifoldPoint,
    pub q: ManifoldPoint,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub angle_p: f64,
    pub angle_q: f64,
    pub foot_gap: f64,
    pub side: ManifoldGeodesic,
}

fn snap_angle(x: f64) -> f64 {
    if x < 1e-9 {
        0.0
    } else if x > PI - 1e-9 {
        PI
    } else {
        x
    }
}

/// Measure the open triangle `(boundary, p, q)`.
pub fn open_triangle(m: &TestManifold, p: ManifoldPoint, q: ManifoldPoint) -> Result<ManifoldOpenTriangle> {
    let (foot_p, a) = boundary_segment(m, p)?;
    let (foot_q, c) = boundary_segment(m, q)?;
    if a <= 0.0 || c <= 0.0 {
        return Err(Error::Precondition("triangle vertices must be interior".into()));
    }
    if p == q {
        return Err(Error::Precondition("triangle vertices coincide".into()));
    }
    let (b, side) = manifold_distance(m, p, q)?;
    // Unit vector at each vertex pointing back along its boundary segment.
    let down = |foot: &ManifoldPoint| if foot.t == 0.0 { -1.0 } else { 1.0 };
    let v0 = side.start_velocity();
    let v1 = side.end_velocity();
    let angle_p = snap_angle((down(&foot_p) * v0[0]).clamp(-1.0, 1.0).acos());
    let angle_q = snap_angle((-down(&foot_q) * v1[0]).clamp(-1.0, 1.0).acos());
    Ok(ManifoldOpenTriangle { p, q, a, b, c, angle_p, angle_q, foot_gap: foot_p.fiber_distance(&foot_q), side })
}

#[derive(Debug, Clone, Serialize)]
pub struct CurvatureCertificate {
    pub horizon: f64,
    pub samples: usize,
    /// Minimum over the grid of `-f''/f - G`.
    pub min_slack: f64,
    pub pass: bool,
}

/// Compare the radial curvature `-f''/f` with the model curvature.
pub fn curvature_bound_certificate(m: &TestManifold, horizon: f64, samples: usize) -> Result<CurvatureCertificate> {
    let n = samples.max(2);
    let mut min_slack = f64::INFINITY;
    for i in 0..n {
        let t = horizon * i as f64 / (n - 1) as f64;
        let k = m.warping.radial_curvature(t)?;
        let g = m.model.radial_curvature(t)?;
        min_slack = min_slack.min(k - g);
    }
    Ok(CurvatureCertificate { horizon, samples: n, min_slack, pass: min_slack >= -1e-9 })
}

/// Largest step accepted by [`variational_length`].
pub const VARIATION_STEP_MAX: f64 = 0.1;

/// Distance to the boundary from the endpoint of the geodesic of length
/// `|s|` from `p` at angle `theta` to `+d/dt` (fiber direction `e`);
/// negative `s` runs the opposite direction.
pub fn variational_length(m: &TestManifold, p: ManifoldPoint, theta: f64, e: [f64; 2], s: f64) -> Result<f64> {
    if s.abs() > VARIATION_STEP_MAX {
        return Err(Error::Precondition(format!("step {s} exceeds {VARIATION_STEP_MAX}")));
    }
    if s == 0.0 {
        return Ok(m.boundary_distance(&p));
    }
    let mut v = m.unit_direction(&p, theta, e);
    if s < 0.0 {
        v = [-v[0], -v[1], -v[2]];
    }
    let g = integrate_manifold_geodesic(m, p, v, s.abs())?;
    if g.status != ManifoldGeodesicStatus::Complete {
        return Err(Error::Precondition("variation reaches the boundary".into()));
    }
    Ok(m.boundary_distance(&g.end()))
}

/// The same construction on a model half-plane from `(a, 0)`.
pub fn model_variational_length(w: &WarpingFunction, a: f64, theta: f64, s: f64) -> Result<f64> {
    if s.abs() > VARIATION_STEP_MAX {
        return Err(Error::Precondition(format!("step {s} exceeds {VARIATION_STEP_MAX}")));
    }
    let heading = if s < 0.0 { theta - PI } else { theta };
    let g = model_surface::integrate_geodesic(ModelPoint::new(a, 0.0), heading, s.abs(), w)?;
    Ok(g.end().x)
}
