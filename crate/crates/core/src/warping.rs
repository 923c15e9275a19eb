//! Warping functions `m` of model half-planes and their radial curvature
//! `G = -m''/m`.
//!
//! A warping function always satisfies `m(0) = 1`, `m'(0) = 0`, `m > 0`.
//! Closed forms are evaluated directly; curvature-derived functions are
//! tabulated from an adaptive integration of `m'' + G m = 0` and
//! interpolated with cubic Hermite pieces, with `m''` reconstructed as
//! `-G m` rather than differenced.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{Crossing, Dopri5, Event, Stop};
use crate::quad;

/// Default truncation horizon of the half-line.
pub const DEFAULT_DOMAIN_MAX: f64 = 20.0;

/// `(m, m', m'')` at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivs {
    pub m: f64,
    pub dm: f64,
    pub ddm: f64,
}

/// One polynomial piece `sum_k coeffs[k] (t - start)^k`, active from
/// `start` until the next piece begins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyPiece {
    pub start: f64,
    pub coeffs: Vec<f64>,
}

impl PolyPiece {
    fn eval(&self, t: f64) -> f64 {
        let x = t - self.start;
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A radial curvature profile `t -> G(t)` on the half-line.
#[derive(Clone)]
pub enum CurvatureProfile {
    Constant(f64),
    /// Piecewise polynomial; pieces sorted by `start`, the first starting at 0.
    Piecewise(Vec<PolyPiece>),
    /// The radial curvature `-m''/m` of a warping function.
    OfWarping(WarpingFunction),
    Custom { name: String, g: ScalarFn, breaks: Vec<f64> },
}

impl fmt::Debug for CurvatureProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(k) => write!(f, "Constant({k})"),
            Self::Piecewise(p) => f.debug_tuple("Piecewise").field(p).finish(),
            Self::OfWarping(w) => write!(f, "OfWarping({})", w.name()),
            Self::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

impl CurvatureProfile {
    pub fn custom(name: impl Into<String>, g: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::Custom { name: name.into(), g: Arc::new(g), breaks: Vec::new() }
    }

    /// Like [`CurvatureProfile::custom`], with known discontinuities the
    /// integrators should step onto exactly.
    pub fn custom_with_breaks(
        name: impl Into<String>,
        breaks: Vec<f64>,
        g: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self::Custom { name: name.into(), g: Arc::new(g), breaks }
    }

    pub fn piecewise(mut pieces: Vec<PolyPiece>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::Config("piecewise profile needs at least one piece".into()));
        }
        pieces.sort_by(|a, b| a.start.partial_cmp(&b.start).unwrap());
        if pieces[0].start > 0.0 {
            return Err(Error::Config("first curvature piece must start at t = 0".into()));
        }
        if pieces.iter().any(|p| p.coeffs.is_empty() || p.coeffs.iter().any(|c| !c.is_finite())) {
            return Err(Error::Config("curvature pieces need finite coefficients".into()));
        }
        Ok(Self::Piecewise(pieces))
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            Self::Constant(k) => *k,
            Self::Piecewise(pieces) => {
                let idx = pieces.partition_point(|p| p.start <= t).saturating_sub(1);
                pieces[idx].eval(t)
            }
            Self::OfWarping(w) => {
                let d = w.eval(t);
                -d.ddm / d.m
            }
            Self::Custom { g, .. } => g(t),
        }
    }

    /// Discontinuity candidates strictly inside `(0, horizon)`.
    pub fn breakpoints(&self, horizon: f64) -> Vec<f64> {
        let raw: Vec<f64> = match self {
            Self::Piecewise(pieces) => pieces.iter().map(|p| p.start).collect(),
            Self::Custom { breaks, .. } => breaks.clone(),
            _ => Vec::new(),
        };
        raw.into_iter().filter(|&b| b > 0.0 && b < horizon).collect()
    }

    /// Grid on `[0, horizon]` that contains every breakpoint.
    pub fn segments(&self, horizon: f64) -> Vec<f64> {
        let mut knots = vec![0.0];
        knots.extend(self.breakpoints(horizon));
        knots.push(horizon);
        knots.dedup();
        knots
    }
}

/// User-supplied closed form returning `(m, m', m'')`.
#[derive(Clone)]
pub struct CustomWarping {
    pub name: String,
    pub f: Arc<dyn Fn(f64) -> Derivs + Send + Sync>,
}

/// Dense samples of `(t, m, m')` with the profile that generated them.
#[derive(Debug, Clone)]
pub struct WarpingTable {
    pub t: Vec<f64>,
    pub m: Vec<f64>,
    pub dm: Vec<f64>,
    pub profile: CurvatureProfile,
}

#[derive(Clone)]
pub enum WarpingKind {
    /// `m = 1`
    Euclidean,
    /// `m = cosh t`
    Hyperbolic,
    /// `m = exp(-t^2)`
    Gauss,
    Custom(CustomWarping),
    Tabulated(Arc<WarpingTable>),
}

/// Warping function of a model half-plane `dx^2 + m(x)^2 dy^2`.
#[derive(Clone)]
pub struct WarpingFunction {
    pub kind: WarpingKind,
    pub domain_max: f64,
}

impl fmt::Debug for WarpingFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "WarpingFunction({}, domain_max = {})", self.name(), self.domain_max)
    }
}

/// Splitting-condition class of a warping function (numerical heuristic).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplittingClass {
    /// `int_0^inf m^-2 = inf` (isometric warped splitting).
    #[serde(rename = "ST1")]
    St1,
    /// `liminf m = 0` (diffeomorphic product).
    #[serde(rename = "ST2")]
    St2,
    #[serde(rename = "neither")]
    Neither,
    #[serde(rename = "inconclusive")]
    Inconclusive,
}

impl fmt::Display for SplittingClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::St1 => "ST1",
            Self::St2 => "ST2",
            Self::Neither => "neither",
            Self::Inconclusive => "inconclusive",
        })
    }
}

impl WarpingFunction {
    pub fn euclidean() -> Self {
        Self { kind: WarpingKind::Euclidean, domain_max: DEFAULT_DOMAIN_MAX }
    }

    pub fn hyperbolic() -> Self {
        Self { kind: WarpingKind::Hyperbolic, domain_max: DEFAULT_DOMAIN_MAX }
    }

    pub fn gauss() -> Self {
        Self { kind: WarpingKind::Gauss, domain_max: DEFAULT_DOMAIN_MAX }
    }

    /// Closed-form warping from a user function; the initial conditions and
    /// positivity are checked on a grid.
    pub fn custom(
        name: impl Into<String>,
        domain_max: f64,
        f: impl Fn(f64) -> Derivs + Send + Sync + 'static,
    ) -> Result<Self> {
        let w = Self {
            kind: WarpingKind::Custom(CustomWarping { name: name.into(), f: Arc::new(f) }),
            domain_max,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn with_domain_max(mut self, domain_max: f64) -> Self {
        self.domain_max = domain_max;
        self
    }

    /// Resolve a closed-form tag.
    pub fn from_tag(tag: &str) -> Result<Self> {
        match tag {
            "euclidean" | "flat" => Ok(Self::euclidean()),
            "hyperbolic" | "cosh" => Ok(Self::hyperbolic()),
            "gauss" => Ok(Self::gauss()),
            other => Err(Error::Config(format!("unknown warping tag '{other}'"))),
        }
    }

    pub fn name(&self) -> String {
        match &self.kind {
            WarpingKind::Euclidean => "euclidean".into(),
            WarpingKind::Hyperbolic => "hyperbolic".into(),
            WarpingKind::Gauss => "gauss".into(),
            WarpingKind::Custom(c) => c.name.clone(),
            WarpingKind::Tabulated(t) => format!("tabulated[{:?}]", t.profile),
        }
    }

    pub fn is_tabulated(&self) -> bool {
        matches!(self.kind, WarpingKind::Tabulated(_))
    }

    /// `(m, m', m'')` at `t` in `[0, domain_max]`.
    pub fn evaluate(&self, t: f64) -> Result<Derivs> {
        if !(0.0..=self.domain_max).contains(&t) {
            return Err(Error::Domain { t, domain_max: self.domain_max });
        }
        Ok(self.eval(t))
    }

    /// `G(t) = -m''(t)/m(t)`.
    pub fn radial_curvature(&self, t: f64) -> Result<f64> {
        let d = self.evaluate(t)?;
        Ok(-d.ddm / d.m)
    }

    pub fn m(&self, t: f64) -> f64 {
        self.eval(t).m
    }

    /// Unchecked evaluation used inside integrators: even extension for
    /// `t < 0`, Taylor extrapolation past the table end.
    pub(crate) fn eval(&self, t: f64) -> Derivs {
        let (s, sign) = if t < 0.0 { (-t, -1.0) } else { (t, 1.0) };
        let d = match &self.kind {
            WarpingKind::Euclidean => Derivs { m: 1.0, dm: 0.0, ddm: 0.0 },
            WarpingKind::Hyperbolic => {
                let (c, sh) = (s.cosh(), s.sinh());
                Derivs { m: c, dm: sh, ddm: c }
            }
            WarpingKind::Gauss => {
                let m = (-s * s).exp();
                Derivs { m, dm: -2.0 * s * m, ddm: (4.0 * s * s - 2.0) * m }
            }
            WarpingKind::Custom(c) => (c.f)(s),
            WarpingKind::Tabulated(table) => table.eval(s),
        };
        Derivs { m: d.m, dm: sign * d.dm, ddm: d.ddm }
    }

    /// Check `m(0) = 1`, `m'(0) = 0` (within 1e-10) and `m > 0` on a grid.
    pub fn validate(&self) -> Result<()> {
        let d0 = self.eval(0.0);
        if (d0.m - 1.0).abs() > 1e-10 || d0.dm.abs() > 1e-10 {
            return Err(Error::BadInitialData { m0: d0.m, dm0: d0.dm });
        }
        let n = 4000;
        for i in 0..=n {
            let t = self.domain_max * i as f64 / n as f64;
            let m = self.eval(t).m;
            if !(m > 0.0) {
                return Err(Error::DegenerateWarping { t });
            }
        }
        Ok(())
    }

    /// Largest weak-form ODE residual of a tabulated function: per table
    /// interval, `|(m'_{k+1} - m'_k) + int G m| / h`, scaled by `max(1, |m|)`.
    /// Closed forms return the pointwise residual of their exact derivatives.
    pub fn ode_residual(&self) -> f64 {
        match &self.kind {
            WarpingKind::Tabulated(table) => {
                let mut worst: f64 = 0.0;
                for k in 0..table.t.len() - 1 {
                    let (a, b) = (table.t[k], table.t[k + 1]);
                    let h = b - a;
                    if h <= 0.0 {
                        continue;
                    }
                    let gm = quad::fixed(&|t: f64| table.profile.value(t) * table.eval(t).m, a, b, 5);
                    let r = ((table.dm[k + 1] - table.dm[k]) + gm).abs() / h;
                    let scale = table.m[k].abs().max(table.m[k + 1].abs()).max(1.0);
                    worst = worst.max(r / scale);
                }
                worst
            }
            _ => {
                let n = 2000;
                (0..=n)
                    .map(|i| {
                        let t = self.domain_max * i as f64 / n as f64;
                        let d = self.eval(t);
                        let g = -d.ddm / d.m;
                        (d.ddm + g * d.m).abs() / d.m.abs().max(1.0)
                    })
                    .fold(0.0, f64::max)
            }
        }
    }
}

impl WarpingTable {
    fn eval(&self, t: f64) -> Derivs {
        let n = self.t.len();
        let last = n - 1;
        if t >= self.t[last] {
            let dt = t - self.t[last];
            let m = self.m[last];
            let dm = self.dm[last];
            let ddm = -self.profile.value(self.t[last]) * m;
            let m_ex = m + dm * dt + 0.5 * ddm * dt * dt;
            let dm_ex = dm + ddm * dt;
            return Derivs { m: m_ex, dm: dm_ex, ddm: -self.profile.value(t) * m_ex };
        }
        let i = match self.t.binary_search_by(|p| p.partial_cmp(&t).unwrap()) {
            Ok(i) => i.min(last - 1),
            Err(i) => i.saturating_sub(1).min(last - 1),
        };
        let (t0, t1) = (self.t[i], self.t[i + 1]);
        let h = t1 - t0;
        let s = (t - t0) / h;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        // One-sided limits of G at the interval ends keep jumps at breakpoints exact.
        let g0 = self.profile.value(t0 + 1e-3 * h);
        let g1 = self.profile.value(t1 - 1e-3 * h);
        let (g0, g1) = if self.profile.breakpoints(f64::INFINITY).is_empty() {
            (self.profile.value(t0), self.profile.value(t1))
        } else {
            (g0, g1)
        };
        let ddm0 = -g0 * self.m[i];
        let ddm1 = -g1 * self.m[i + 1];
        let m = h00 * self.m[i] + h10 * h * self.dm[i] + h01 * self.m[i + 1] + h11 * h * self.dm[i + 1];
        let dm = h00 * self.dm[i] + h10 * h * ddm0 + h01 * self.dm[i + 1] + h11 * h * ddm1;
        Derivs { m, dm, ddm: -self.profile.value(t) * m }
    }
}

/// Tabulate the warping function solving `m'' + G m = 0`, `m(0) = 1`,
/// `m'(0) = 0` on `[0, domain_max]` with integrator tolerance `tol`.
pub fn solve_from_curvature(g: &CurvatureProfile, domain_max: f64, tol: f64) -> Result<WarpingFunction> {
    if !(domain_max > 0.0) {
        return Err(Error::Config(format!("domain_max must be positive, got {domain_max}")));
    }
    let knots = g.segments(domain_max);
    for &k in &knots {
        if !g.value(k).is_finite() {
            return Err(Error::Precondition(format!("curvature not finite at t = {k}")));
        }
    }
    let solver = Dopri5 { h_max: 0.05, ..Dopri5::with_tolerance(tol) };
    let mut table = WarpingTable { t: vec![0.0], m: vec![1.0], dm: vec![0.0], profile: g.clone() };
    let mut state = [1.0, 0.0];
    for seg in knots.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        // Evaluate G strictly inside the segment so jumps are respected.
        let sys = |t: f64, y: &[f64; 2]| {
            let tt = t.clamp(a + 1e-12 * (b - a), b - 1e-12 * (b - a));
            [y[1], -g.value(tt) * y[0]]
        };
        let degenerate = Event::new(Crossing::Falling, |_t, y: &[f64; 2]| y[0]);
        let (traj, stop) = solver.integrate(&sys, a, state, b, &[degenerate])?;
        if stop == Stop::Event(0) {
            return Err(Error::DegenerateWarping { t: traj.t_end() });
        }
        for k in 1..traj.len() {
            table.t.push(traj.t[k]);
            table.m.push(traj.y[k][0]);
            table.dm.push(traj.y[k][1]);
        }
        state = *traj.last();
    }
    if table.m.iter().any(|&m| !(m > 0.0)) {
        let t = table.t[table.m.iter().position(|&m| !(m > 0.0)).unwrap()];
        return Err(Error::DegenerateWarping { t });
    }
    Ok(WarpingFunction { kind: WarpingKind::Tabulated(Arc::new(table)), domain_max })
}

/// Default number of quadrature panels used by [`splitting_class`].
pub const SPLITTING_PANELS: usize = 512;

/// Numerical classification of the splitting conditions.
///
/// Checked in order: ST2 when `inf m` over `[H/2, H]` is below `tol`;
/// ST1 when `int m^-2` grows by more than `tol` over `[H/2, H]` and the mean
/// of `m^-2` there is at least half its mean over `[H/4, H/2]` (decay no
/// faster than `1/t`); neither when that growth is below `tol` and `m >= tol`
/// on `[0, H]`; otherwise inconclusive. This is a heuristic surrogate for
/// asymptotic conditions.
pub fn splitting_class(w: &WarpingFunction, horizon: f64, tol: f64) -> SplittingClass {
    splitting_class_with_panels(w, horizon, tol, SPLITTING_PANELS)
}

pub fn splitting_class_with_panels(
    w: &WarpingFunction,
    horizon: f64,
    tol: f64,
    panels: usize,
) -> SplittingClass {
    let h = horizon.min(w.domain_max);
    let min_on = |a: f64, b: f64| {
        (0..=4 * panels)
            .map(|i| w.eval(a + (b - a) * i as f64 / (4 * panels) as f64).m)
            .fold(f64::INFINITY, f64::min)
    };
    if min_on(0.5 * h, h) < tol {
        return SplittingClass::St2;
    }
    let inv_sq = |t: f64| w.eval(t).m.powi(-2);
    let integral = |a: f64, b: f64| {
        let grid: Vec<f64> = (0..=panels).map(|i| a + (b - a) * i as f64 / panels as f64).collect();
        quad::composite(&inv_sq, &grid, 5)
    };
    let growth = integral(0.5 * h, h);
    let earlier = integral(0.25 * h, 0.5 * h);
    let mean_hi = growth / (0.5 * h);
    let mean_lo = earlier / (0.25 * h);
    if growth > tol && mean_hi >= 0.5 * mean_lo {
        return SplittingClass::St1;
    }
    if growth < tol && min_on(0.0, h) >= tol {
        return SplittingClass::Neither;
    }
    SplittingClass::Inconclusive
}

#[cfg(test)]
mod tests {
    use super::*;

    const E: f64 = std::f64::consts::E;

    #[test]
    fn closed_form_values() {
        let d = WarpingFunction::euclidean().evaluate(3.7).unwrap();
        assert_eq!((d.m, d.dm, d.ddm), (1.0, 0.0, 0.0));
        let d = WarpingFunction::hyperbolic().evaluate(0.0).unwrap();
        assert_eq!((d.m, d.dm, d.ddm), (1.0, 0.0, 1.0));
        // m = e^{-t^2}: m' = -2t m, m'' = (4t^2 - 2) m, at t = 1.
        let d = WarpingFunction::gauss().evaluate(1.0).unwrap();
        assert!((d.m - 1.0 / E).abs() < 1e-15);
        assert!((d.dm + 2.0 / E).abs() < 1e-15);
        assert!((d.ddm - 2.0 / E).abs() < 1e-15);
    }

    #[test]
    fn domain_errors() {
        let w = WarpingFunction::euclidean();
        assert!(matches!(w.evaluate(-0.1), Err(Error::Domain { .. })));
        assert!(matches!(w.evaluate(20.5), Err(Error::Domain { .. })));
        assert!(w.radial_curvature(21.0).is_err());
    }

    #[test]
    fn radial_curvatures() {
        for t in [0.0, 0.5, 2.0, 7.0] {
            assert_eq!(WarpingFunction::euclidean().radial_curvature(t).unwrap(), 0.0);
            assert!((WarpingFunction::hyperbolic().radial_curvature(t).unwrap() + 1.0).abs() < 1e-12);
            let g = WarpingFunction::gauss().radial_curvature(t).unwrap();
            assert!((g - (2.0 - 4.0 * t * t)).abs() < 1e-12);
        }
    }

    #[test]
    fn solve_constant_profiles() {
        let flat = solve_from_curvature(&CurvatureProfile::Constant(0.0), 20.0, 1e-12).unwrap();
        for t in [0.0, 1.0, 13.3, 20.0] {
            assert!((flat.m(t) - 1.0).abs() < 1e-12);
        }
        let hyp = solve_from_curvature(&CurvatureProfile::Constant(-1.0), 5.0, 1e-12).unwrap();
        assert!((hyp.m(1.0) - 1.5430806).abs() < 1e-7);
        assert!((hyp.m(1.0) - 1f64.cosh()).abs() < 1e-8);
    }

    #[test]
    fn solve_gauss_profile() {
        let g = CurvatureProfile::Piecewise(vec![PolyPiece { start: 0.0, coeffs: vec![2.0, 0.0, -4.0] }]);
        let w = solve_from_curvature(&g, 4.0, 1e-12).unwrap();
        assert!((w.m(2.0) - (-4f64).exp()).abs() < 1e-9);
        assert!(w.ode_residual() < 1e-8);
    }

    #[test]
    fn degenerate_profile_is_reported() {
        // G = 1 gives m = cos t, which vanishes at pi/2.
        let err = solve_from_curvature(&CurvatureProfile::Constant(1.0), 3.0, 1e-12).unwrap_err();
        match err {
            Error::DegenerateWarping { t } => assert!((t - std::f64::consts::FRAC_PI_2).abs() < 1e-8),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn piecewise_jump_is_respected() {
        // G = 0 on [0, 1), G = -1 afterwards: m = 1 then cosh(t - 1).
        let g = CurvatureProfile::piecewise(vec![
            PolyPiece { start: 0.0, coeffs: vec![0.0] },
            PolyPiece { start: 1.0, coeffs: vec![-1.0] },
        ])
        .unwrap();
        let w = solve_from_curvature(&g, 4.0, 1e-12).unwrap();
        assert!((w.m(0.7) - 1.0).abs() < 1e-12);
        assert!((w.m(3.0) - 2f64.cosh()).abs() < 1e-9);
        assert!(w.ode_residual() < 1e-8);
    }

    #[test]
    fn splitting_classes_of_fixtures() {
        assert_eq!(splitting_class(&WarpingFunction::euclidean(), 20.0, 1e-6), SplittingClass::St1);
        assert_eq!(splitting_class(&WarpingFunction::gauss(), 20.0, 1e-6), SplittingClass::St2);
        assert_eq!(splitting_class(&WarpingFunction::hyperbolic(), 20.0, 1e-6), SplittingClass::Neither);
        // 1/(1+t)^2 converges slowly: not decided at this horizon.
        let slow = WarpingFunction::custom("linear", 20.0, |t| Derivs { m: 1.0 + t * t, dm: 2.0 * t, ddm: 2.0 })
            .unwrap();
        assert_eq!(splitting_class(&slow, 20.0, 1e-6), SplittingClass::Inconclusive);
    }

    #[test]
    fn custom_warping_validation() {
        let bad = WarpingFunction::custom("shifted", 5.0, |t| Derivs { m: 2.0 + t, dm: 1.0, ddm: 0.0 });
        assert!(matches!(bad, Err(Error::BadInitialData { .. })));
        let vanishing = WarpingFunction::custom("cos", 5.0, |t| Derivs { m: t.cos(), dm: -t.sin(), ddm: -t.cos() });
        assert!(matches!(vanishing, Err(Error::DegenerateWarping { .. })));
    }
}
