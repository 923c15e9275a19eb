//! Adaptive Dormand-Prince 5(4) integrator with event location and the
//! method's fourth-order continuous extension as dense output.
//!
//! Events are located by re-taking the last accepted step with a shortened
//! step size and solving for the zero of the event function on that
//! one-step map (Illinois regula falsi). This keeps the located state at
//! full integrator accuracy instead of interpolation accuracy.

use crate::error::{Error, Result};

/// Right-hand side of `y' = f(t, y)`.
pub trait OdeSystem<const N: usize> {
    fn rhs(&self, t: f64, y: &[f64; N]) -> [f64; N];
}

impl<F, const N: usize> OdeSystem<N> for F
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    fn rhs(&self, t: f64, y: &[f64; N]) -> [f64; N] {
        self(t, y)
    }
}

/// Which sign changes of an event function trigger it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Crossing {
    Rising,
    Falling,
    Either,
}

type EventFn<'a, const N: usize> = Box<dyn Fn(f64, &[f64; N]) -> f64 + 'a>;

/// Terminal event: integration stops at the first zero of `g` crossing
/// in the given direction.
pub struct Event<'a, const N: usize> {
    g: EventFn<'a, N>,
    crossing: Crossing,
}

impl<'a, const N: usize> Event<'a, N> {
    pub fn new(crossing: Crossing, g: impl Fn(f64, &[f64; N]) -> f64 + 'a) -> Self {
        Self { g: Box::new(g), crossing }
    }

    fn triggered(&self, before: f64, after: f64) -> bool {
        let rising = before < 0.0 && after >= 0.0;
        let falling = before > 0.0 && after <= 0.0;
        match self.crossing {
            Crossing::Rising => rising,
            Crossing::Falling => falling,
            Crossing::Either => rising || falling,
        }
    }
}

/// How an integration run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stop {
    /// Reached the requested end time.
    End,
    /// Stopped at the zero of the event with this index.
    Event(usize),
}

/// Accepted steps of an integration run with their derivatives.
#[derive(Debug, Clone)]
pub struct Trajectory<const N: usize> {
    pub t: Vec<f64>,
    pub y: Vec<[f64; N]>,
    pub dy: Vec<[f64; N]>,
    /// Continuous-extension coefficients per step; when absent the
    /// interpolant falls back to cubic Hermite.
    pub dense: Vec<[[f64; N]; 3]>,
}

impl<const N: usize> Trajectory<N> {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn t_start(&self) -> f64 {
        self.t[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.t.last().expect("trajectory has at least one sample")
    }

    pub fn last(&self) -> &[f64; N] {
        self.y.last().expect("trajectory has at least one sample")
    }

    /// Index `i` of the step interval `[t_i, t_{i+1}]` containing `t`.
    fn interval(&self, t: f64) -> usize {
        let n = self.t.len();
        if n < 2 || t <= self.t[0] {
            return 0;
        }
        if t >= self.t[n - 1] {
            return n - 2;
        }
        match self.t.binary_search_by(|probe| probe.partial_cmp(&t).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(i) => i - 1,
        }
    }

    /// Build from samples only; interpolation is cubic Hermite.
    pub fn from_samples(t: Vec<f64>, y: Vec<[f64; N]>, dy: Vec<[f64; N]>) -> Self {
        Self { t, y, dy, dense: Vec::new() }
    }

    /// Append another run that starts where this one ends.
    pub fn append(&mut self, other: &Trajectory<N>) {
        let with_dense = self.dense.len() + 1 == self.t.len() && other.dense.len() + 1 == other.t.len();
        self.t.extend_from_slice(&other.t[1..]);
        self.y.extend_from_slice(&other.y[1..]);
        self.dy.extend_from_slice(&other.dy[1..]);
        if with_dense {
            self.dense.extend_from_slice(&other.dense);
        } else {
            self.dense.clear();
        }
    }

    /// State at `t` (clamped to the run).
    pub fn interpolate(&self, t: f64) -> [f64; N] {
        if self.t.len() == 1 {
            return self.y[0];
        }
        let i = self.interval(t);
        let (t0, t1) = (self.t[i], self.t[i + 1]);
        let h = t1 - t0;
        if h <= 0.0 {
            return self.y[i];
        }
        let s = ((t - t0) / h).clamp(0.0, 1.0);
        if self.dense.len() + 1 == self.t.len() {
            let [r3, r4, r5] = &self.dense[i];
            let (y0, y1) = (&self.y[i], &self.y[i + 1]);
            let s1 = 1.0 - s;
            let mut out = [0.0; N];
            for k in 0..N {
                out[k] = y0[k] + s * ((y1[k] - y0[k]) + s1 * (r3[k] + s * (r4[k] + s1 * r5[k])));
            }
            return out;
        }
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        let mut out = [0.0; N];
        for (k, o) in out.iter_mut().enumerate() {
            *o = h00 * self.y[i][k] + h10 * h * self.dy[i][k] + h01 * self.y[i + 1][k] + h11 * h * self.dy[i + 1][k];
        }
        out
    }
}

/// Dormand-Prince 5(4) with standard step-size control.
#[derive(Debug, Clone, Copy)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Self { rtol: 1e-12, atol: 1e-12, h_max: 0.25, max_steps: 2_000_000 }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

struct StepOut<const N: usize> {
    y: [f64; N],
    k7: [f64; N],
    err: [f64; N],
    /// `h (D1 k1 + D3 k3 + ... + D7 k7)`
    d: [f64; N],
}

fn dense_coeffs<const N: usize>(y0: &[f64; N], k1: &[f64; N], out: &StepOut<N>, h: f64) -> [[f64; N]; 3] {
    let mut r3 = [0.0; N];
    let mut r4 = [0.0; N];
    for i in 0..N {
        let r2 = out.y[i] - y0[i];
        r3[i] = h * k1[i] - r2;
        r4[i] = r2 - h * out.k7[i] - r3[i];
    }
    [r3, r4, out.d]
}

fn combine<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (coef, k) in terms {
        if *coef == 0.0 {
            continue;
        }
        for i in 0..N {
            out[i] += h * coef * k[i];
        }
    }
    out
}

impl Dopri5 {
    pub fn with_tolerance(tol: f64) -> Self {
        Self { rtol: tol, atol: tol, ..Self::default() }
    }

    fn step<S: OdeSystem<N>, const N: usize>(
        &self,
        sys: &S,
        t: f64,
        y: &[f64; N],
        k1: &[f64; N],
        h: f64,
    ) -> StepOut<N> {
        let k2 = sys.rhs(t + C2 * h, &combine(y, h, &[(A21, k1)]));
        let k3 = sys.rhs(t + C3 * h, &combine(y, h, &[(A31, k1), (A32, &k2)]));
        let k4 = sys.rhs(t + C4 * h, &combine(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]));
        let k5 = sys.rhs(
            t + C5 * h,
            &combine(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = sys.rhs(
            t + h,
            &combine(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        );
        let y_new = combine(y, h, &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = sys.rhs(t + h, &y_new);
        let mut err = [0.0; N];
        let mut d = [0.0; N];
        for i in 0..N {
            err[i] = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            d[i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
        }
        StepOut { y: y_new, k7, err, d }
    }

    fn error_norm<const N: usize>(&self, y: &[f64; N], y_new: &[f64; N], err: &[f64; N]) -> f64 {
        let mut acc = 0.0;
        for i in 0..N {
            let scale = self.atol + self.rtol * y[i].abs().max(y_new[i].abs());
            acc += (err[i] / scale).powi(2);
        }
        (acc / N as f64).sqrt()
    }

    /// Integrate forward from `t0` to `t_end`, stopping early at the first
    /// triggered event.
    pub fn integrate<S: OdeSystem<N>, const N: usize>(
        &self,
        sys: &S,
        t0: f64,
        y0: [f64; N],
        t_end: f64,
        events: &[Event<'_, N>],
    ) -> Result<(Trajectory<N>, Stop)> {
        if !(t_end >= t0) {
            return Err(Error::Integration(format!("backward span [{t0}, {t_end}]")));
        }
        let mut k1 = sys.rhs(t0, &y0);
        let mut traj = Trajectory { t: vec![t0], y: vec![y0], dy: vec![k1], dense: Vec::new() };
        let span = t_end - t0;
        if span == 0.0 {
            return Ok((traj, Stop::End));
        }
        let mut g_prev: Vec<f64> = events.iter().map(|e| (e.g)(t0, &y0)).collect();

        let mut t = t0;
        let mut y = y0;
        let mut h = self.initial_step(&y, &k1, span);
        let mut steps = 0usize;
        loop {
            let remaining = t_end - t;
            if remaining <= 1e-14 * (1.0 + t.abs()) {
                return Ok((traj, Stop::End));
            }
            steps += 1;
            if steps > self.max_steps {
                return Err(Error::Integration(format!("exceeded {} steps at t = {t}", self.max_steps)));
            }
            let last = h >= remaining;
            let h_try = if last { remaining } else { h };
            let out = self.step(sys, t, &y, &k1, h_try);
            let err = self.error_norm(&y, &out.y, &out.err);
            if !err.is_finite() {
                h = 0.2 * h_try;
                if h < 1e-14 * (1.0 + t.abs()) {
                    return Err(Error::Integration(format!("non-finite state near t = {t}")));
                }
                continue;
            }
            if err > 1.0 {
                h = h_try * (0.9 * err.powf(-0.2)).max(0.2);
                if h < 1e-14 * (1.0 + t.abs()) {
                    return Err(Error::Integration(format!("step size underflow at t = {t}")));
                }
                continue;
            }

            // Accepted step: check events before committing.
            let t_new = if last { t_end } else { t + h_try };
            let mut first: Option<(usize, f64)> = None;
            for (idx, ev) in events.iter().enumerate() {
                let g_new = (ev.g)(t_new, &out.y);
                if ev.triggered(g_prev[idx], g_new) {
                    let h_star = self.locate(sys, ev, t, &y, &k1, g_prev[idx], h_try, g_new);
                    if first.is_none_or(|(_, hs)| h_star < hs) {
                        first = Some((idx, h_star));
                    }
                }
                g_prev[idx] = g_new;
            }
            if let Some((idx, h_star)) = first {
                let t_star = t + h_star;
                let last = if h_star == h_try { out } else { self.step(sys, t, &y, &k1, h_star) };
                traj.dense.push(dense_coeffs(&y, &k1, &last, h_star));
                traj.t.push(t_star);
                traj.dy.push(last.k7);
                traj.y.push(last.y);
                return Ok((traj, Stop::Event(idx)));
            }

            traj.dense.push(dense_coeffs(&y, &k1, &out, h_try));
            t = t_new;
            y = out.y;
            k1 = out.k7;
            traj.t.push(t);
            traj.y.push(y);
            traj.dy.push(k1);
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h = (h_try * factor).min(self.h_max);
        }
    }

    fn initial_step<const N: usize>(&self, y: &[f64; N], f: &[f64; N], span: f64) -> f64 {
        let mut d0 = 0.0;
        let mut d1 = 0.0;
        for i in 0..N {
            let scale = self.atol + self.rtol * y[i].abs();
            d0 += (y[i] / scale).powi(2);
            d1 += (f[i] / scale).powi(2);
        }
        let (d0, d1) = ((d0 / N as f64).sqrt(), (d1 / N as f64).sqrt());
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-4 } else { 0.01 * d0 / d1 };
        h0.min(span).min(self.h_max).max(1e-10 * span)
    }

    /// Shrink the accepted step `[t, t + h]` to the zero of the event and
    /// return the shortened step size.
    #[allow(clippy::too_many_arguments)]
    fn locate<S: OdeSystem<N>, const N: usize>(
        &self,
        sys: &S,
        ev: &Event<'_, N>,
        t: f64,
        y: &[f64; N],
        k1: &[f64; N],
        g_lo: f64,
        h: f64,
        g_hi: f64,
    ) -> f64 {
        let (mut a, mut fa) = (0.0, g_lo);
        let (mut b, mut fb) = (h, g_hi);
        if fb == 0.0 {
            return b;
        }
        let mut side = 0i8;
        for _ in 0..100 {
            if (b - a).abs() <= 4.0 * f64::EPSILON * (t.abs() + h.abs()) {
                break;
            }
            let mut c = (a * fb - b * fa) / (fb - fa);
            if !(c > a && c < b) {
                c = 0.5 * (a + b);
            }
            let yc = self.step(sys, t, y, k1, c).y;
            let fc = (ev.g)(t + c, &yc);
            if fc == 0.0 {
                return c;
            }
            if (fc > 0.0) == (fb > 0.0) {
                b = c;
                fb = fc;
                if side == 1 {
                    fa *= 0.5;
                }
                side = 1;
            } else {
                a = c;
                fa = fc;
                if side == -1 {
                    fb *= 0.5;
                }
                side = -1;
            }
        }
        // `b` is always on the triggered side of the zero.
        b
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_matches_closed_form() {
        let sys = |_t: f64, y: &[f64; 2]| [y[1], -y[0]];
        let (traj, stop) = Dopri5::default().integrate(&sys, 0.0, [1.0, 0.0], 10.0, &[]).unwrap();
        assert_eq!(stop, Stop::End);
        let end = traj.last();
        assert!((end[0] - 10f64.cos()).abs() < 1e-10);
        assert!((end[1] + 10f64.sin()).abs() < 1e-10);
        let mid = traj.interpolate(3.3);
        assert!((mid[0] - 3.3f64.cos()).abs() < 1e-11);
    }

    #[test]
    fn event_located_to_high_precision() {
        let sys = |_t: f64, y: &[f64; 2]| [y[1], -y[0]];
        let ev = Event::new(Crossing::Falling, |_t, y: &[f64; 2]| y[0]);
        let (traj, stop) = Dopri5::default().integrate(&sys, 0.0, [1.0, 0.0], 10.0, &[ev]).unwrap();
        assert_eq!(stop, Stop::Event(0));
        assert!((traj.t_end() - std::f64::consts::FRAC_PI_2).abs() < 1e-11);
    }

    #[test]
    fn event_at_start_is_ignored() {
        let sys = |_t: f64, y: &[f64; 2]| [y[1], -y[0]];
        // sin starts at zero, rises, first falls through zero at pi.
        let ev = Event::new(Crossing::Either, |_t, y: &[f64; 2]| y[0]);
        let (traj, _) = Dopri5::default().integrate(&sys, 0.0, [0.0, 1.0], 10.0, &[ev]).unwrap();
        assert!((traj.t_end() - std::f64::consts::PI).abs() < 1e-11);
    }

    #[test]
    fn rejects_backward_span() {
        let sys = |_t: f64, y: &[f64; 1]| [y[0]];
        assert!(Dopri5::default().integrate(&sys, 1.0, [1.0], 0.0, &[]).is_err());
    }
}
