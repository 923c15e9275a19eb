//! Scalar root bracketing over functions that may be undefined on parts of
//! their domain. Undefined evaluations carry only a sign.

/// One evaluation of a shooting residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sample {
    Value(f64),
    /// The residual is undefined here; only its side is known.
    Marker(f64),
}

impl Sample {
    pub fn sign(self) -> f64 {
        match self {
            Sample::Value(v) | Sample::Marker(v) => {
                if v > 0.0 {
                    1.0
                } else if v < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            Sample::Value(v) => Some(v),
            Sample::Marker(_) => None,
        }
    }
}

/// Evaluate `f` on `grid` and return the brackets `[x_i, x_{i+1}]` across
/// which the sign changes, plus grid points that are exact zeros.
pub fn brackets<F: FnMut(f64) -> Sample>(f: &mut F, grid: &[f64]) -> Vec<((f64, Sample), (f64, Sample))> {
    let samples: Vec<(f64, Sample)> = grid.iter().map(|&x| (x, f(x))).collect();
    let mut out = Vec::new();
    for (i, &(x, s)) in samples.iter().enumerate() {
        if s == Sample::Value(0.0) {
            out.push(((x, s), (x, s)));
            continue;
        }
        if let Some(&(x1, s1)) = samples.get(i + 1) {
            if s.sign() * s1.sign() < 0.0 {
                out.push(((x, s), (x1, s1)));
            }
        }
    }
    out
}

/// Shrink a sign-change bracket. Uses Illinois steps while both ends are
/// finite and bisection otherwise. Returns the finite evaluation closest to
/// zero, if any.
pub fn refine<F: FnMut(f64) -> Sample>(
    f: &mut F,
    lo: (f64, Sample),
    hi: (f64, Sample),
    xtol: f64,
    ftol: f64,
) -> Option<(f64, f64)> {
    let ((mut a, mut fa), (mut b, mut fb)) = (lo, hi);
    let mut best: Option<(f64, f64)> = None;
    let keep = |x: f64, s: Sample, best: &mut Option<(f64, f64)>| {
        if let Sample::Value(v) = s {
            if best.is_none_or(|(_, bv)| v.abs() < bv.abs()) {
                *best = Some((x, v));
            }
        }
    };
    keep(a, fa, &mut best);
    keep(b, fb, &mut best);
    if a == b {
        return best;
    }
    let mut side = 0i8;
    // Illinois weights live apart from the samples so markers stay markers.
    let (mut wa, mut wb) = (1.0, 1.0);
    for _ in 0..200 {
        if best.is_some_and(|(_, v)| v.abs() <= ftol) || (b - a).abs() <= xtol {
            break;
        }
        let c = match (fa, fb) {
            (Sample::Value(va), Sample::Value(vb)) => {
                let (va, vb) = (va * wa, vb * wb);
                let c = (a * vb - b * va) / (vb - va);
                let lo_x = a.min(b);
                let hi_x = a.max(b);
                let margin = 1e-3 * (hi_x - lo_x);
                if c > lo_x + margin && c < hi_x - margin {
                    c
                } else {
                    0.5 * (a + b)
                }
            }
            _ => 0.5 * (a + b),
        };
        let fc = f(c);
        keep(c, fc, &mut best);
        if fc.sign() == 0.0 {
            break;
        }
        if fc.sign() == fb.sign() {
            b = c;
            fb = fc;
            wb = 1.0;
            if side == 1 {
                wa *= 0.5;
            }
            side = 1;
        } else {
            a = c;
            fa = fc;
            wa = 1.0;
            if side == -1 {
                wb *= 0.5;
            }
            side = -1;
        }
    }
    best
}

/// Plain bisection on a continuous function with `f(a) f(b) <= 0`.
pub fn bisect<F: FnMut(f64) -> f64>(f: &mut F, mut a: f64, mut b: f64, xtol: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        if (b - a).abs() <= xtol {
            break;
        }
        let c = 0.5 * (a + b);
        let fc = f(c);
        if fc == 0.0 {
            return c;
        }
        if (fc > 0.0) == (fa > 0.0) {
            a = c;
            fa = fc;
        } else {
            b = c;
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn refine_with_markers() {
        // Undefined below 0.2, root at 0.7.
        let mut f = |x: f64| if x < 0.2 { Sample::Marker(-1.0) } else { Sample::Value(x - 0.7) };
        let grid: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let br = brackets(&mut f, &grid);
        assert_eq!(br.len(), 1);
        let (x, v) = refine(&mut f, br[0].0, br[0].1, 1e-15, 1e-14).unwrap();
        assert!((x - 0.7).abs() < 1e-13 && v.abs() < 1e-13);
    }

    #[test]
    fn refine_rejects_jump() {
        // Sign change across a jump, no root.
        let mut f = |x: f64| if x < 0.5 { Sample::Value(1.0 + x) } else { Sample::Marker(-1.0) };
        let (lo, hi) = ((0.0, f(0.0)), (1.0, f(1.0)));
        let (_, v) = refine(&mut f, lo, hi, 1e-14, 1e-12).unwrap();
        assert!(v >= 1.0);
    }

    #[test]
    fn bisect_cubic() {
        let r = bisect(&mut |x: f64| x * x * x - 2.0, 0.0, 2.0, 1e-14);
        assert!((r - 2f64.cbrt()).abs() < 1e-13);
    }
}
