//! Scalar Jacobi equations `f'' + K f = 0`, their zeros, focal distances of
//! a convex boundary, and index forms with the boundary correction.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::format::sig12;
use crate::ode::{Crossing, Dopri5, Event, Stop, Trajectory};
use crate::quad;
use crate::warping::{splitting_class, CurvatureProfile, SplittingClass, WarpingFunction, WarpingKind};

/// Dense solution of `f'' + K f = 0` on `[0, horizon]`.
#[derive(Debug, Clone)]
pub struct JacobiSolution {
    pub profile: CurvatureProfile,
    pub f0: f64,
    pub fp0: f64,
    pub horizon: f64,
    traj: Trajectory<2>,
}

fn jacobi_solver(h_max: f64) -> Dopri5 {
    Dopri5 { h_max, ..Dopri5::default() }
}

fn integrate_segments(k: &CurvatureProfile, y0: [f64; 2], horizon: f64, h_max: f64) -> Result<Trajectory<2>> {
    let knots = k.segments(horizon);
    let mut out = Trajectory::from_samples(vec![0.0], vec![y0], vec![[y0[1], -k.value(0.0) * y0[0]]]);
    let mut state = y0;
    for seg in knots.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let eps = 1e-12 * (b - a);
        let sys = |t: f64, y: &[f64; 2]| [y[1], -k.value(t.clamp(a + eps, b - eps)) * y[0]];
        let (traj, _) = jacobi_solver(h_max).integrate(&sys, a, state, b, &[])?;
        // Replace the derivative at the joint with the one-sided value.
        *out.dy.last_mut().unwrap() = traj.dy[0];
        out.append(&traj);
        state = *traj.last();
    }
    Ok(out)
}

/// Solve `f'' + K f = 0` with `f(0) = f0`, `f'(0) = fp0` on `[0, horizon]`.
pub fn solve_jacobi(k: &CurvatureProfile, f0: f64, fp0: f64, horizon: f64) -> Result<JacobiSolution> {
    solve_jacobi_with_step(k, f0, fp0, horizon, 0.05)
}

fn solve_jacobi_with_step(k: &CurvatureProfile, f0: f64, fp0: f64, horizon: f64, h_max: f64) -> Result<JacobiSolution> {
    if !(horizon > 0.0) {
        return Err(Error::Precondition(format!("horizon must be positive, got {horizon}")));
    }
    for t in k.segments(horizon) {
        if !k.value(t).is_finite() {
            return Err(Error::Precondition(format!("curvature not finite at t = {t}")));
        }
    }
    let traj = integrate_segments(k, [f0, fp0], horizon, h_max)?;
    Ok(JacobiSolution { profile: k.clone(), f0, fp0, horizon, traj })
}

impl JacobiSolution {
    pub fn grid(&self) -> &[f64] {
        &self.traj.t
    }

    /// `(f, f')` at `t`.
    pub fn at(&self, t: f64) -> (f64, f64) {
        let y = self.traj.interpolate(t);
        (y[0], y[1])
    }

    pub fn min_value(&self) -> f64 {
        self.traj.y.iter().map(|y| y[0]).fold(f64::INFINITY, f64::min)
    }

    /// Largest weak-form residual `|f'(t_{k+1}) - f'(t_k) + int K f| / h` over
    /// the steps, scaled by `max(1, |f|)`.
    pub fn residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for k in 0..self.traj.len().saturating_sub(1) {
            let (a, b) = (self.traj.t[k], self.traj.t[k + 1]);
            let h = b - a;
            if h <= 0.0 {
                continue;
            }
            let eps = 1e-9 * h;
            let kf = quad::fixed(
                &|t: f64| self.profile.value(t.clamp(a + eps, b - eps)) * self.traj.interpolate(t)[0],
                a,
                b,
                5,
            );
            let r = (self.traj.y[k + 1][1] - self.traj.y[k][1] + kf).abs() / h;
            let scale = self.traj.y[k][0].abs().max(self.traj.y[k + 1][0].abs()).max(1.0);
            worst = worst.max(r / scale);
        }
        worst
    }

    /// CSV rows `t,f,fp`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,f,fp\n");
        for (t, y) in self.traj.t.iter().zip(&self.traj.y) {
            out.push_str(&format!("{},{},{}\n", sig12(*t), sig12(y[0]), sig12(y[1])));
        }
        out
    }
}

/// First `t > 0` where `f` changes sign, or `None` on `[0, horizon]`.
/// The step containing the change is re-integrated with event location.
pub fn first_zero(sol: &JacobiSolution) -> Option<f64> {
    let tr = &sol.traj;
    for k in 0..tr.len().saturating_sub(1) {
        let (f0, f1) = (tr.y[k][0], tr.y[k + 1][0]);
        if f0 == 0.0 {
            continue;
        }
        if f0 * f1 <= 0.0 {
            let (a, b) = (tr.t[k], tr.t[k + 1]);
            if f1 == 0.0 {
                return Some(b);
            }
            let eps = 1e-12 * (b - a);
            let kp = &sol.profile;
            let sys = |t: f64, y: &[f64; 2]| [y[1], -kp.value(t.clamp(a + eps, b - eps)) * y[0]];
            let ev = Event::new(Crossing::Either, |_t, y: &[f64; 2]| y[0]);
            return match jacobi_solver(b - a).integrate(&sys, a, tr.y[k], b, &[ev]) {
                Ok((t, Stop::Event(_))) => Some(t.t_end()),
                _ => Some(b),
            };
        }
    }
    None
}

/// Distance to the first focal point of a boundary with shape eigenvalue
/// `lambda >= 0`: the first zero of `f'' + K f = 0`, `f(0) = 1`,
/// `f'(0) = -lambda`.
pub fn focal_distance(k: &CurvatureProfile, lambda: f64, horizon: f64) -> Result<Option<f64>> {
    if !(lambda >= 0.0) {
        return Err(Error::Precondition(format!("shape eigenvalue must be non-negative, got {lambda}")));
    }
    Ok(first_zero(&solve_jacobi(k, 1.0, -lambda, horizon)?))
}

/// A scalar field `t -> (f(t), f'(t))` along a boundary segment.
pub trait ScalarField {
    fn at(&self, t: f64) -> (f64, f64);

    /// Points in `[0, l]` where the field may lose smoothness.
    fn knots(&self, _l: f64) -> Vec<f64> {
        Vec::new()
    }
}

impl ScalarField for JacobiSolution {
    fn at(&self, t: f64) -> (f64, f64) {
        JacobiSolution::at(self, t)
    }

    fn knots(&self, l: f64) -> Vec<f64> {
        self.traj.t.iter().copied().filter(|&t| t > 0.0 && t < l).collect()
    }
}

/// Field given by a closure returning `(f, f')`.
pub struct FnField<F>(pub F);

impl<F: Fn(f64) -> (f64, f64)> ScalarField for FnField<F> {
    fn at(&self, t: f64) -> (f64, f64) {
        (self.0)(t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IndexFormValue {
    pub value: f64,
    /// Shape eigenvalue of the boundary used in the correction term.
    pub lambda: f64,
}

/// `int_0^l (f'^2 - K f^2) - lambda f(0)^2`.
pub fn index_form(field: &dyn ScalarField, k: &CurvatureProfile, l: f64, lambda: f64) -> Result<IndexFormValue> {
    if !(l > 0.0) {
        return Err(Error::Precondition(format!("index form needs l > 0, got {l}")));
    }
    let mut grid = vec![0.0];
    grid.extend(field.knots(l));
    grid.extend(k.breakpoints(l));
    grid.push(l);
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup();
    // Refine coarse panels so each carries at most 0.05.
    let mut fine = vec![0.0];
    for w in grid.windows(2) {
        let n = ((w[1] - w[0]) / 0.05).ceil().max(1.0) as usize;
        for i in 1..=n {
            fine.push(w[0] + (w[1] - w[0]) * i as f64 / n as f64);
        }
    }
    let mut value = 0.0;
    for w in fine.windows(2) {
        let (a, b) = (w[0], w[1]);
        let eps = 1e-9 * (b - a);
        let integrand = |t: f64| {
            let (f, fp) = field.at(t);
            fp * fp - k.value(t.clamp(a + eps, b - eps)) * f * f
        };
        value += quad::fixed(&integrand, a, b, 10);
    }
    let f0 = field.at(0.0).0;
    Ok(IndexFormValue { value: value - lambda * f0 * f0, lambda })
}

/// Outcome of the rigidity comparison between a curvature `K >= G` and a
/// model with divergent `int m^-2`.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    /// First zero of `f'' + K f = 0`, `f(0) = 1`, `f'(0) = 0`.
    pub zero: Option<f64>,
    pub min_f: f64,
    pub max_deviation: f64,
    pub tol: f64,
    /// The observation agrees with the rigidity statement.
    pub consistent: bool,
    pub note: String,
}

/// If the solution with `K` stays positive on `[0, horizon]`, then `K` must
/// equal the model curvature `G`; report `max |K - G|` on the grid.
pub fn comparison_l1_check(
    k: &CurvatureProfile,
    w: &WarpingFunction,
    horizon: f64,
    tol: f64,
) -> Result<ComparisonReport> {
    if matches!(w.kind, WarpingKind::Tabulated(_)) && horizon > w.domain_max {
        return Err(Error::Precondition(format!(
            "horizon {horizon} beyond tabulated domain {}",
            w.domain_max
        )));
    }
    let class = splitting_class(w, w.domain_max, 1e-6);
    if class != SplittingClass::St1 {
        return Err(Error::Precondition(format!("model integral of m^-2 classified {class}, need ST1")));
    }
    let g = CurvatureProfile::OfWarping(w.clone());
    let n = 4000;
    let mut max_dev: f64 = 0.0;
    for i in 0..=n {
        let t = horizon * i as f64 / n as f64;
        let (kv, gv) = (k.value(t), g.value(t));
        if kv < gv - tol {
            return Err(Error::Precondition(format!("K({t}) = {kv} below G = {gv}")));
        }
        max_dev = max_dev.max((kv - gv).abs());
    }
    let sol = solve_jacobi(k, 1.0, 0.0, horizon)?;
    let zero = first_zero(&sol);
    let min_f = sol.min_value();
    let positive = zero.is_none() && min_f > 1e-6;
    if positive {
        // Confirm with a halved step bound.
        let finer = solve_jacobi_with_step(k, 1.0, 0.0, horizon, 0.025)?;
        if first_zero(&finer).is_some() || finer.min_value() <= 1e-6 {
            return Err(Error::Integration("positivity verdict changed under step refinement".into()));
        }
    }
    let (consistent, note) = if positive {
        if max_dev < tol {
            (true, format!("f positive; max |K - G| = {max_dev:e} < tol"))
        } else {
            (false, format!("f positive but max |K - G| = {max_dev:e} >= tol"))
        }
    } else {
        match zero {
            Some(t0) => (true, format!("f vanished at t = {}; no rigidity conclusion", sig12(t0))),
            None => (true, "f touched zero tolerance; no rigidity conclusion".to_string()),
        }
    };
    Ok(ComparisonReport { zero, min_f, max_deviation: max_dev, tol, consistent, note })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn closed_form_solutions() {
        let s = solve_jacobi(&CurvatureProfile::Constant(1.0), 1.0, 0.0, 3.0).unwrap();
        assert!(s.at(FRAC_PI_2).0.abs() < 1e-10);
        assert!(s.residual() < 1e-8);
        let s = solve_jacobi(&CurvatureProfile::Constant(0.0), 1.0, -0.3, 2.0).unwrap();
        assert!((s.at(1.5).0 - 0.55).abs() < 1e-12);
        let s = solve_jacobi(&CurvatureProfile::Constant(-1.0), 1.0, 0.0, 2.0).unwrap();
        assert!((s.at(1.0).0 - 1f64.cosh()).abs() < 1e-10);
    }

    #[test]
    fn zeros_and_focal_points() {
        let cos = solve_jacobi(&CurvatureProfile::Constant(1.0), 1.0, 0.0, 3.0).unwrap();
        assert!((first_zero(&cos).unwrap() - FRAC_PI_2).abs() < 1e-10);
        let lin = solve_jacobi(&CurvatureProfile::Constant(0.0), 1.0, -0.5, 5.0).unwrap();
        assert!((first_zero(&lin).unwrap() - 2.0).abs() < 1e-10);
        let flat = CurvatureProfile::Constant(0.0);
        assert_eq!(focal_distance(&flat, 0.0, 10.0).unwrap(), None);
        assert!((focal_distance(&flat, 1.0, 10.0).unwrap().unwrap() - 1.0).abs() < 1e-10);
        let round = CurvatureProfile::Constant(1.0);
        assert!((focal_distance(&round, 0.0, 10.0).unwrap().unwrap() - FRAC_PI_2).abs() < 1e-10);
        assert!(focal_distance(&round, -1.0, 10.0).is_err());
    }

    #[test]
    fn index_form_boundary_terms() {
        let h = WarpingFunction::hyperbolic();
        let field = FnField(|t: f64| (t.cosh() / 1f64.cosh(), t.sinh() / 1f64.cosh()));
        let v = index_form(&field, &CurvatureProfile::OfWarping(h), 1.0, 0.0).unwrap();
        assert!((v.value - 1f64.tanh()).abs() < 1e-12);
        let one = FnField(|_t: f64| (1.0, 0.0));
        assert_eq!(index_form(&one, &CurvatureProfile::Constant(0.0), 2.0, 0.0).unwrap().value, 0.0);
        let cos = solve_jacobi(&CurvatureProfile::Constant(1.0), 1.0, 0.0, 2.0).unwrap();
        let v = index_form(&cos, &CurvatureProfile::Constant(1.0), FRAC_PI_2, 0.0).unwrap();
        assert!(v.value.abs() < 1e-9);
    }

    #[test]
    fn rigidity_comparisons() {
        let e = WarpingFunction::euclidean();
        let r = comparison_l1_check(&CurvatureProfile::Constant(0.0), &e, 50.0, 1e-8).unwrap();
        assert!(r.zero.is_none() && r.max_deviation == 0.0 && r.consistent);
        let r = comparison_l1_check(&CurvatureProfile::Constant(0.1), &e, 50.0, 1e-8).unwrap();
        assert!((r.zero.unwrap() - PI / (2.0 * 0.1f64.sqrt())).abs() < 1e-8);
        assert!(r.note.contains("f vanished"));
        let bump = CurvatureProfile::custom_with_breaks("bump", vec![1.0, 2.0], |t| {
            if (1.0..2.0).contains(&t) {
                0.05
            } else {
                0.0
            }
        });
        let r = comparison_l1_check(&bump, &e, 50.0, 1e-8).unwrap();
        assert!(r.zero.is_some() && r.consistent);
        let below = CurvatureProfile::Constant(-0.5);
        assert!(matches!(comparison_l1_check(&below, &e, 10.0, 1e-8), Err(Error::Precondition(_))));
        assert!(comparison_l1_check(&CurvatureProfile::Constant(0.0), &WarpingFunction::hyperbolic(), 5.0, 1e-8).is_err());
    }
}
