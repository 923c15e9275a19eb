//! Batch certification of the comparison inequalities on test manifolds.
//!
//! Every check produces a [`VerificationReport`] whose rows share the CSV
//! layout `id, a, b, c, angle_p, angle_p_model, slack_angle_p,
//! slack_angle_q, slack_gap`, optionally followed by check-specific columns.
//! A slack is oriented so that `>= -tol` means the inequality holds; for
//! equalities the slack is `-|deviation|`.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::format::sig12;
use crate::manifold::{
    boundary_segment, curvature_bound_certificate, integrate_manifold_geodesic, manifold_distance,
    open_triangle, Fiber, ManifoldGeodesicStatus, ManifoldOpenTriangle, ManifoldPoint, TestManifold,
};
use crate::model_surface::certify_sector;
use crate::triangle::{build_generalized_triangle, build_model_triangle, TriangleSides};
use crate::warping::{splitting_class, SplittingClass, WarpingFunction};

/// Range of boundary distances for sampled vertices.
pub const VERTEX_T_RANGE: (f64, f64) = (0.2, 3.0);
/// Smallest fiber offset between sampled vertices.
pub const MIN_OFFSET: f64 = 0.1;
/// Sector widths tried, widest first.
pub const SECTOR_WIDTHS: [f64; 5] = [2.0, 1.5, 1.0, 0.5, 0.25];
/// Heights tried for the sector certificate, highest first.
pub const SECTOR_HEIGHTS: [f64; 5] = [3.0, 2.5, 2.0, 1.5, 1.0];
/// Sampled triangles must keep both angles this far from 0 and pi.
pub const DEGENERACY_MARGIN: f64 = 1e-3;
/// Tolerance of the derivative identity for the scaled-triangle distance.
pub const DERIVATIVE_TOL: f64 = 1e-4;
/// Allowed change of the shortcut length when the subdivision is doubled.
pub const REFINEMENT_TOL: f64 = 1e-4;

/// Sampling parameters shared by the randomized checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sampling {
    pub n: usize,
    pub seed: u64,
}

impl Sampling {
    pub fn new(n: usize, seed: u64) -> Self {
        Self { n, seed }
    }

    /// Independent stream for sample `id`.
    pub fn rng(&self, id: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(id as u64);
        rng
    }
}

/// One CSV row. Empty cells are `None`.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SampleRow {
    pub id: usize,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub c: Option<f64>,
    pub angle_p: Option<f64>,
    pub angle_p_model: Option<f64>,
    pub slack_angle_p: Option<f64>,
    pub slack_angle_q: Option<f64>,
    pub slack_gap: Option<f64>,
    /// Check-specific columns, same names on every row of a report.
    pub extra: Vec<(&'static str, f64)>,
    /// Slacks that count towards the minimum but have no column.
    #[serde(skip)]
    pub hidden_slacks: Vec<f64>,
}

impl SampleRow {
    fn failed(id: usize) -> Self {
        Self { id, hidden_slacks: vec![f64::NEG_INFINITY], ..Self::default() }
    }

    fn slacks(&self) -> impl Iterator<Item = f64> + '_ {
        [self.slack_angle_p, self.slack_angle_q, self.slack_gap]
            .into_iter()
            .flatten()
            .chain(self.hidden_slacks.iter().copied())
    }

    fn min_slack(&self) -> f64 {
        self.slacks().fold(f64::INFINITY, f64::min)
    }
}

/// Aggregated result of one check.
#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub check: String,
    pub rows: Vec<SampleRow>,
    pub min_slack: f64,
    pub tol: f64,
    pub pass: bool,
    #[serde(skip)]
    pub runtime: Duration,
    pub notes: Vec<String>,
}

/// JSON summary of a report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportSummary {
    pub check: String,
    pub n: usize,
    pub min_slack: f64,
    pub tol: f64,
    pub pass: bool,
}

impl VerificationReport {
    fn finish(check: &str, rows: Vec<SampleRow>, tol: f64, notes: Vec<String>, start: Instant) -> Self {
        let min_slack = rows.iter().map(SampleRow::min_slack).fold(f64::INFINITY, f64::min);
        Self {
            check: check.to_string(),
            pass: min_slack >= -tol,
            rows,
            min_slack,
            tol,
            runtime: start.elapsed(),
            notes,
        }
    }

    pub fn summary(&self) -> ReportSummary {
        ReportSummary {
            check: self.check.clone(),
            n: self.rows.len(),
            min_slack: self.min_slack,
            tol: self.tol,
            pass: self.pass,
        }
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(&self.summary()).expect("summary serializes")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("id,a,b,c,angle_p,angle_p_model,slack_angle_p,slack_angle_q,slack_gap");
        if let Some(first) = self.rows.first() {
            for (name, _) in &first.extra {
                out.push(',');
                out.push_str(name);
            }
        }
        out.push('\n');
        let cell = |x: Option<f64>| x.map(sig12).unwrap_or_default();
        for r in &self.rows {
            let _ = write!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.id,
                cell(r.a),
                cell(r.b),
                cell(r.c),
                cell(r.angle_p),
                cell(r.angle_p_model),
                cell(r.slack_angle_p),
                cell(r.slack_angle_q),
                cell(r.slack_gap)
            );
            for (_, v) in &r.extra {
                out.push(',');
                out.push_str(&sig12(*v));
            }
            out.push('\n');
        }
        out
    }

    /// Largest absolute slack over the rows.
    pub fn max_abs_slack(&self) -> f64 {
        self.rows.iter().flat_map(|r| r.slacks().collect::<Vec<_>>()).map(f64::abs).fold(0.0, f64::max)
    }

    /// Column `name` among the extra columns, row by row.
    pub fn column(&self, name: &str) -> Vec<f64> {
        self.rows
            .iter()
            .filter_map(|r| r.extra.iter().find(|(n, _)| *n == name).map(|(_, v)| *v))
            .collect()
    }
}

fn run_rows<F>(ids: std::ops::Range<usize>, f: F) -> (Vec<SampleRow>, Vec<String>)
where
    F: Fn(usize) -> Result<SampleRow> + Sync,
{
    let results: Vec<(usize, Result<SampleRow>)> = ids.into_par_iter().map(|i| (i, f(i))).collect();
    let mut rows = Vec::with_capacity(results.len());
    let mut notes = Vec::new();
    for (i, r) in results {
        match r {
            Ok(row) => rows.push(row),
            Err(e) => {
                notes.push(format!("sample {i}: {e}"));
                rows.push(SampleRow::failed(i));
            }
        }
    }
    (rows, notes)
}

/// Sector of the model in which sampled triangles are placed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SamplingRegion {
    /// Certified sector width.
    pub theta0: f64,
    /// Largest vertex height.
    pub t_max: f64,
}

/// Highest entry of [`SECTOR_HEIGHTS`] (capped by `t_max`) and widest entry
/// of [`SECTOR_WIDTHS`] that the model certifies.
pub fn certified_region(w: &WarpingFunction, t_max: f64) -> Result<SamplingRegion> {
    for &h in SECTOR_HEIGHTS.iter().filter(|&&h| h <= t_max) {
        for &theta0 in &SECTOR_WIDTHS {
            if certify_sector(w, theta0, h, 4)?.pass {
                return Ok(SamplingRegion { theta0, t_max: h });
            }
        }
    }
    Err(Error::HypothesisRegime(format!("no certified sector for model {}", w.name())))
}

fn non_degenerate(t: &ManifoldOpenTriangle) -> bool {
    [t.angle_p, t.angle_q].iter().all(|&x| x > DEGENERACY_MARGIN && x < PI - DEGENERACY_MARGIN)
}

/// Draw a non-degenerate open triangle with vertex heights in
/// `[VERTEX_T_RANGE.0, region.t_max]` and offset in
/// `[MIN_OFFSET, 0.8 region.theta0]`.
pub fn sample_triangle(m: &TestManifold, rng: &mut ChaCha8Rng, region: &SamplingRegion) -> Result<ManifoldOpenTriangle> {
    let (lo, hi) = (VERTEX_T_RANGE.0, region.t_max);
    let max_offset = 0.8 * region.theta0;
    for _ in 0..64 {
        let t1 = rng.gen_range(lo..=hi);
        let t2 = rng.gen_range(lo..=hi);
        let r = rng.gen_range(MIN_OFFSET..=max_offset);
        let dir = match m.fiber {
            Fiber::Line => [if rng.gen_bool(0.5) { 1.0 } else { -1.0 }, 0.0],
            Fiber::Plane => {
                let phi: f64 = rng.gen_range(0.0..2.0 * PI);
                [phi.cos(), phi.sin()]
            }
        };
        let p = ManifoldPoint::new(t1, 0.0, 0.0);
        let q = ManifoldPoint::new(t2, r * dir[0], r * dir[1]);
        let tri = open_triangle(m, p, q)?;
        if non_degenerate(&tri) {
            return Ok(tri);
        }
    }
    Err(Error::Precondition("no non-degenerate triangle in 64 draws".into()))
}

fn triangle_row(id: usize, tri: &ManifoldOpenTriangle, w: &WarpingFunction, equality: bool) -> Result<SampleRow> {
    let model = build_model_triangle(TriangleSides::new(tri.a, tri.b, tri.c), w).map_err(|e| {
        Error::Unrealizable(format!("model triangle from manifold data failed (a bug, not a data error): {e}"))
    })?;
    let dp = tri.angle_p - model.angle_p;
    let dq = tri.angle_q - model.angle_q;
    let dg = tri.foot_gap - model.base_gap;
    let s = |x: f64| Some(if equality { -x.abs() } else { x });
    Ok(SampleRow {
        id,
        a: Some(tri.a),
        b: Some(tri.b),
        c: Some(tri.c),
        angle_p: Some(tri.angle_p),
        angle_p_model: Some(model.angle_p),
        slack_angle_p: s(dp),
        slack_angle_q: s(dq),
        slack_gap: s(dg),
        extra: vec![
            ("angle_q", tri.angle_q),
            ("angle_q_model", model.angle_q),
            ("foot_gap", tri.foot_gap),
            ("foot_gap_model", model.base_gap),
        ],
        hidden_slacks: Vec::new(),
    })
}

fn sector_for(m: &TestManifold, notes: &mut Vec<String>) -> Result<SamplingRegion> {
    let region = certified_region(&m.model, VERTEX_T_RANGE.1)?;
    notes.push(format!(
        "certified sector width {} up to height {}; offsets sampled in [{MIN_OFFSET}, {}]",
        region.theta0,
        region.t_max,
        0.8 * region.theta0
    ));
    Ok(region)
}

/// Angle and foot-gap comparison of sampled manifold triangles against the
/// model triangles with the same side lengths.
pub fn toponogov_check(m: &TestManifold, sampling: &Sampling, tol: f64) -> Result<VerificationReport> {
    let start = Instant::now();
    let cert = curvature_bound_certificate(m, VERTEX_T_RANGE.1 + 2.0, 501)?;
    if !cert.pass {
        return Err(Error::HypothesisRegime(format!(
            "radial curvature of {} falls below the model by {}",
            m.name, -cert.min_slack
        )));
    }
    let mut notes = Vec::new();
    let region = sector_for(m, &mut notes)?;
    let (rows, mut failures) = run_rows(0..sampling.n, |i| {
        let mut rng = sampling.rng(i);
        let tri = sample_triangle(m, &mut rng, &region)?;
        triangle_row(i, &tri, &m.model, false)
    });
    notes.append(&mut failures);
    Ok(VerificationReport::finish("toponogov", rows, tol, notes, start))
}

fn same_warping(a: &WarpingFunction, b: &WarpingFunction, horizon: f64) -> bool {
    (0..=400).all(|i| {
        let t = horizon * i as f64 / 400.0;
        let (x, y) = (a.eval(t), b.eval(t));
        (x.m - y.m).abs() <= 1e-12 * (1.0 + x.m.abs()) && (x.dm - y.dm).abs() <= 1e-12 * (1.0 + x.dm.abs())
    })
}

/// Sampled triangles on a manifold whose warping is the model's: angles and
/// foot gaps agree with the model triangle.
pub fn equality_case_check(m: &TestManifold, sampling: &Sampling, tol: f64) -> Result<VerificationReport> {
    let start = Instant::now();
    if !same_warping(&m.warping, &m.model, VERTEX_T_RANGE.1 + 2.0) {
        return Err(Error::Precondition(format!("{} does not carry the warping of its model", m.name)));
    }
    let mut notes = Vec::new();
    let region = sector_for(m, &mut notes)?;
    let (rows, mut failures) = run_rows(0..sampling.n, |i| {
        let mut rng = sampling.rng(i);
        let tri = sample_triangle(m, &mut rng, &region)?;
        triangle_row(i, &tri, &m.model, true)
    });
    notes.append(&mut failures);
    Ok(VerificationReport::finish("equality", rows, tol, notes, start))
}

/// Shortcut data of one subdivided triangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainMeasure {
    pub pieces: usize,
    pub endpoint_distance: f64,
    pub shortcut_length: f64,
    pub chain_length: f64,
    pub angle_p: f64,
    pub angle_q: f64,
}

/// Cut the opposite side of `tri` into `k` equal pieces and build the
/// generalized model triangle of the resulting chain.
pub fn subdivide(m: &TestManifold, tri: &ManifoldOpenTriangle, k: usize) -> Result<ChainMeasure> {
    if k == 0 {
        return Err(Error::Precondition("subdivision needs at least one piece".into()));
    }
    let step = tri.b / k as f64;
    let heights: Vec<f64> = (0..=k)
        .map(|i| match i {
            0 => tri.a,
            _ if i == k => tri.c,
            _ => m.boundary_distance(&tri.side.point_at(step * i as f64)),
        })
        .collect();
    let pieces: Vec<TriangleSides> = heights
        .windows(2)
        .map(|h| TriangleSides::new(h[0], step.max((h[1] - h[0]).abs()), h[1]))
        .collect();
    let gen = build_generalized_triangle(&pieces, &m.model)
        .map_err(|e| Error::Precondition(format!("subdivision into {k} pieces failed: {e}")))?;
    Ok(ChainMeasure {
        pieces: k,
        endpoint_distance: gen.endpoint_distance,
        shortcut_length: gen.shortcut_length,
        chain_length: gen.chain_length,
        angle_p: gen.angle_p,
        angle_q: gen.angle_q,
    })
}

/// Number of pieces for a side of length `b`: at least `min_pieces`, and
/// pieces no longer than `max_step`.
pub fn piece_count(b: f64, min_pieces: usize, max_step: f64) -> usize {
    min_pieces.max((b / max_step).ceil() as usize).max(1)
}

/// Weak-form comparison on subdivided triangles: the chain of model pieces
/// must satisfy `c - a <= d(p^, q^) <= L(shortcut) <= b` and its angles stay
/// below the manifold's. The shortcut length must also be stable when the
/// subdivision is doubled.
pub fn weak_form_check(
    m: &TestManifold,
    sampling: &Sampling,
    min_pieces: usize,
    max_step: f64,
    tol: f64,
) -> Result<VerificationReport> {
    let start = Instant::now();
    let mut notes = Vec::new();
    let region = sector_for(m, &mut notes)?;
    let (rows, mut failures) = run_rows(0..sampling.n, |i| {
        let mut rng = sampling.rng(i);
        let tri = sample_triangle(m, &mut rng, &region)?;
        let pieces = piece_count(tri.b, min_pieces, max_step);
        let coarse = subdivide(m, &tri, pieces)?;
        let fine = subdivide(m, &tri, 2 * pieces)?;
        let lower = coarse.endpoint_distance - (tri.c - tri.a);
        let middle = coarse.shortcut_length - coarse.endpoint_distance;
        let upper = tri.b - coarse.shortcut_length;
        let change = (fine.shortcut_length - coarse.shortcut_length).abs();
        Ok(SampleRow {
            id: i,
            a: Some(tri.a),
            b: Some(tri.b),
            c: Some(tri.c),
            angle_p: Some(tri.angle_p),
            angle_p_model: Some(coarse.angle_p),
            slack_angle_p: Some(tri.angle_p - coarse.angle_p),
            slack_angle_q: Some(tri.angle_q - coarse.angle_q),
            slack_gap: Some(lower.min(middle).min(upper)),
            extra: vec![
                ("pieces", pieces as f64),
                ("endpoint_distance", coarse.endpoint_distance),
                ("shortcut_length", coarse.shortcut_length),
                ("refined_shortcut_length", fine.shortcut_length),
                ("refinement_change", change),
            ],
            hidden_slacks: vec![REFINEMENT_TOL - change],
        })
    });
    notes.append(&mut failures);
    Ok(VerificationReport::finish("weak", rows, tol, notes, start))
}

/// One point of the scaled-triangle family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScaledPoint {
    pub t: f64,
    pub distance: f64,
    pub model_gap: f64,
    pub angle_p: f64,
    pub angle_p_model: f64,
    /// Central difference of the distance in `t`.
    pub derivative: f64,
    /// `a cos(angle_p) + c cos(angle_q)` of the scaled triangle.
    pub derivative_formula: f64,
}

fn scaled_vertex(m: &TestManifold, v: ManifoldPoint, t: f64) -> Result<ManifoldPoint> {
    let (foot, _) = boundary_segment(m, v)?;
    let dir = if foot.t == 0.0 { 1.0 } else { -1.0 };
    Ok(ManifoldPoint { t: foot.t + dir * (v.t - foot.t).abs() * t, u: v.u })
}

/// Evaluate the scaled triangle `(boundary, mu_p(a t), mu_q(c t))`.
pub fn scaled_point(m: &TestManifold, tri: &ManifoldOpenTriangle, t: f64, h: f64) -> Result<ScaledPoint> {
    let p = scaled_vertex(m, tri.p, t)?;
    let q = scaled_vertex(m, tri.q, t)?;
    let scaled = open_triangle(m, p, q)?;
    let model = build_model_triangle(TriangleSides::new(scaled.a, scaled.b, scaled.c), &m.model)?;
    let dist = |s: f64| -> Result<f64> {
        Ok(manifold_distance(m, scaled_vertex(m, tri.p, s)?, scaled_vertex(m, tri.q, s)?)?.0)
    };
    let derivative = (dist(t + h)? - dist(t - h)?) / (2.0 * h);
    Ok(ScaledPoint {
        t,
        distance: scaled.b,
        model_gap: model.base_gap,
        angle_p: scaled.angle_p,
        angle_p_model: model.angle_p,
        derivative,
        derivative_formula: tri.a * scaled.angle_p.cos() + tri.c * scaled.angle_q.cos(),
    })
}

fn alexandrov_rows(m: &TestManifold, tri: &ManifoldOpenTriangle, grid_n: usize) -> (Vec<SampleRow>, Vec<String>) {
    let ts: Vec<f64> = (1..=grid_n).map(|i| i as f64 / grid_n as f64).collect();
    let h = 1e-4 / grid_n as f64;
    let points: Vec<Result<ScaledPoint>> = ts.par_iter().map(|&t| scaled_point(m, tri, t, h)).collect();
    let mut notes = Vec::new();
    let mut rows = Vec::with_capacity(grid_n);
    for (i, pt) in points.iter().enumerate() {
        let pt = match pt {
            Ok(pt) => pt,
            Err(e) => {
                notes.push(format!("grid point {i}: {e}"));
                rows.push(SampleRow::failed(i));
                continue;
            }
        };
        // Monotonicity against the next grid point.
        let step = match points.get(i + 1) {
            Some(Ok(next)) => Some(pt.model_gap - next.model_gap),
            Some(Err(_)) => Some(f64::NEG_INFINITY),
            None => None,
        };
        let deriv_err = (pt.derivative - pt.derivative_formula).abs();
        rows.push(SampleRow {
            id: i,
            a: Some(tri.a * pt.t),
            b: Some(pt.distance),
            c: Some(tri.c * pt.t),
            angle_p: Some(pt.angle_p),
            angle_p_model: Some(pt.angle_p_model),
            slack_angle_p: None,
            slack_angle_q: None,
            slack_gap: step,
            extra: vec![
                ("t", pt.t),
                ("model_gap", pt.model_gap),
                ("derivative", pt.derivative),
                ("derivative_formula", pt.derivative_formula),
            ],
            hidden_slacks: vec![DERIVATIVE_TOL - deriv_err],
        });
    }
    (rows, notes)
}

/// Scaled-triangle monotonicity: the model foot gap of the triangle family
/// `(boundary, mu_p(a t), mu_q(c t))` must not increase in `t` on a grid of
/// `(0, 1]`, and the distance derivative must match the first-variation
/// formula. Violations are re-examined on a grid twice as dense; they count
/// only if they persist.
pub fn alexandrov_check(m: &TestManifold, tri: &ManifoldOpenTriangle, grid_n: usize, tol: f64) -> Result<VerificationReport> {
    let start = Instant::now();
    if !non_degenerate(tri) {
        return Err(Error::Precondition("degenerate triangle".into()));
    }
    if grid_n < 2 {
        return Err(Error::Precondition("grid needs at least two points".into()));
    }
    let (mut rows, mut notes) = alexandrov_rows(m, tri, grid_n);
    let violated = rows.iter().any(|r| r.slack_gap.is_some_and(|s| s < -tol));
    if violated {
        let (fine, fine_notes) = alexandrov_rows(m, tri, 2 * grid_n);
        notes.push(format!("monotonicity violation on {grid_n} points; refined to {}", 2 * grid_n));
        notes.extend(fine_notes);
        rows = fine;
    }
    Ok(VerificationReport::finish("alexandrov", rows, tol, notes, start))
}

/// Sample triangles as in [`toponogov_check`] and run [`alexandrov_check`]
/// on each; rows are concatenated with ids `triangle * grid_n + point`.
pub fn alexandrov_batch(m: &TestManifold, sampling: &Sampling, grid_n: usize, tol: f64) -> Result<VerificationReport> {
    let start = Instant::now();
    let mut notes = Vec::new();
    let region = sector_for(m, &mut notes)?;
    let mut rows = Vec::new();
    for i in 0..sampling.n {
        let mut rng = sampling.rng(i);
        let tri = sample_triangle(m, &mut rng, &region)?;
        let rep = alexandrov_check(m, &tri, grid_n, tol)?;
        notes.extend(rep.notes.into_iter().map(|n| format!("triangle {i}: {n}")));
        let base = rows.len();
        rows.extend(rep.rows.into_iter().map(|mut r| {
            r.id += base;
            r.extra.insert(0, ("triangle", i as f64));
            r
        }));
    }
    Ok(VerificationReport::finish("alexandrov", rows, tol, notes, start))
}

/// Near-minimal boundary hits found by shooting downwards from `p`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FootSearch {
    pub min_length: f64,
    pub basins: usize,
    /// Largest fiber distance between feet of near-minimal basins.
    pub foot_spread: f64,
}

const FOOT_STARTS: usize = 64;

/// Multi-start shooting for boundary segments from `p` in the plane of
/// `d/dt` and the fiber direction `e`; every local minimum of the hit length
/// over the heading is refined by golden-section search.
pub fn foot_search(m: &TestManifold, p: ManifoldPoint, e: [f64; 2]) -> Result<FootSearch> {
    let cap = 2.0 * m.boundary_distance(&p) + 1.0;
    let hit = |theta: f64| -> Result<(f64, ManifoldPoint)> {
        let v = m.unit_direction(&p, theta, e);
        let g = integrate_manifold_geodesic(m, p, v, cap)?;
        Ok(match g.status {
            ManifoldGeodesicStatus::BoundaryHit => (g.total_length, g.end()),
            ManifoldGeodesicStatus::Complete => (f64::INFINITY, g.end()),
        })
    };
    // Headings from just below horizontal through straight down and back.
    let thetas: Vec<f64> = (1..FOOT_STARTS)
        .map(|j| 0.5 * PI + PI * j as f64 / FOOT_STARTS as f64)
        .collect();
    let lens: Vec<f64> = thetas.iter().map(|&th| hit(th).map(|h| h.0)).collect::<Result<_>>()?;
    let mut basins: Vec<(f64, ManifoldPoint)> = Vec::new();
    for j in 0..lens.len() {
        let left = if j > 0 { lens[j - 1] } else { f64::INFINITY };
        let right = lens.get(j + 1).copied().unwrap_or(f64::INFINITY);
        if !(lens[j].is_finite() && lens[j] <= left && lens[j] <= right) {
            continue;
        }
        let lo = if j > 0 { thetas[j - 1] } else { 0.5 * PI };
        let hi = thetas.get(j + 1).copied().unwrap_or(1.5 * PI);
        let th = golden_min(|x| hit(x).map(|h| h.0).unwrap_or(f64::INFINITY), lo, hi, 1e-10);
        basins.push(hit(th)?);
    }
    let min_length = basins.iter().map(|b| b.0).fold(f64::INFINITY, f64::min);
    if !min_length.is_finite() {
        return Err(Error::NoGeodesic(format!("no boundary hit from {p:?}")));
    }
    let near: Vec<&(f64, ManifoldPoint)> = basins.iter().filter(|b| b.0 <= min_length + 1e-9).collect();
    let mut spread: f64 = 0.0;
    for x in &near {
        for y in &near {
            spread = spread.max(x.1.fiber_distance(&y.1));
        }
    }
    Ok(FootSearch { min_length, basins: near.len(), foot_spread: spread })
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Splitting conclusions for the model's class.
///
/// ST1: the boundary is totally geodesic, the radial curvature equals the
/// model's and the warping is the model's on a grid. ST2: sampled interior
/// points have a single nearest boundary point. Otherwise no conclusion is
/// drawn and the report passes with a note.
pub fn splitting_check(m: &TestManifold, sampling: &Sampling, tol: f64) -> Result<VerificationReport> {
    let start = Instant::now();
    let class = splitting_class(&m.model, m.model.domain_max, 1e-6);
    let mut notes = vec![format!("model {} classified {class}", m.model.name())];
    let rows = match class {
        SplittingClass::St1 => {
            let horizon = VERTEX_T_RANGE.1 + 2.0;
            let eig = m.boundary_shape_eigenvalue();
            (0..=sampling.n.max(1))
                .map(|i| {
                    let t = horizon * i as f64 / sampling.n.max(1) as f64;
                    let k = m.warping.radial_curvature(t)?;
                    let g = m.model.radial_curvature(t)?;
                    let dm = (m.warping.m(t) - m.model.m(t)).abs();
                    Ok(SampleRow {
                        id: i,
                        a: Some(t),
                        slack_gap: Some(-(k - g).abs()),
                        extra: vec![("curvature", k), ("model_curvature", g), ("warping_deviation", dm)],
                        hidden_slacks: vec![-dm, -eig.abs()],
                        ..SampleRow::default()
                    })
                })
                .collect::<Result<Vec<_>>>()?
        }
        SplittingClass::St2 => {
            let (rows, mut failures) = run_rows(0..sampling.n, |i| {
                let mut rng = sampling.rng(i);
                let top = m.slab.map_or(VERTEX_T_RANGE.1, |l| 0.5 * l);
                let t = rng.gen_range(VERTEX_T_RANGE.0.min(top)..=top);
                let phi: f64 = rng.gen_range(0.0..2.0 * PI);
                let e = match m.fiber {
                    Fiber::Line => [1.0, 0.0],
                    Fiber::Plane => [phi.cos(), phi.sin()],
                };
                let p = ManifoldPoint::new(t, 0.0, 0.0);
                let found = foot_search(m, p, e)?;
                let unique = if found.basins == 1 { 0.0 } else { f64::NEG_INFINITY };
                Ok(SampleRow {
                    id: i,
                    a: Some(t),
                    b: Some(found.min_length),
                    slack_gap: Some(-found.foot_spread),
                    extra: vec![("basins", found.basins as f64), ("foot_spread", found.foot_spread)],
                    hidden_slacks: vec![unique, -(found.min_length - m.boundary_distance(&p)).abs()],
                    ..SampleRow::default()
                })
            });
            notes.append(&mut failures);
            rows
        }
        SplittingClass::Neither | SplittingClass::Inconclusive => {
            notes.push("no splitting conclusion".into());
            Vec::new()
        }
    };
    Ok(VerificationReport::finish("splitting", rows, tol, notes, start))
}

/// Length over which level-set geodesics are followed in [`slab_check`].
pub const LEVEL_RUN_LENGTH: f64 = 5.0;

/// Flat slab `[0, l] x fiber`: boundary distance is `min(t, l - t)`, the two
/// boundary distances agree exactly on the middle level, level sets are
/// totally geodesic and distances follow the product metric.
pub fn slab_check(width: f64, fiber: Fiber, sampling: &Sampling, tol: f64) -> Result<VerificationReport> {
    let start = Instant::now();
    let m = TestManifold::slab(width, fiber)?;
    let mid = 0.5 * width;
    let (rows, notes) = run_rows(0..sampling.n, |i| {
        let mut rng = sampling.rng(i);
        let point = |rng: &mut ChaCha8Rng| {
            let t = rng.gen_range(0.0..=width);
            let u1 = rng.gen_range(-2.0..=2.0);
            let u2 = if fiber == Fiber::Plane { rng.gen_range(-2.0..=2.0) } else { 0.0 };
            ManifoldPoint::new(t, u1, u2)
        };
        // Every fourth sample sits on the middle level.
        let mut p = point(&mut rng);
        if i % 4 == 0 {
            p.t = mid;
        }
        let q = point(&mut rng);

        // Boundary distance and its segment.
        let (foot, d_boundary) = boundary_segment(&m, p)?;
        let expected = p.t.min(width - p.t);
        let to_foot = if foot.t == 0.0 { -1.0 } else { 1.0 };
        let seg_end = if d_boundary > 0.0 {
            integrate_manifold_geodesic(&m, p, [to_foot, 0.0, 0.0], d_boundary)?.end()
        } else {
            p
        };
        let seg_miss = (seg_end.t - foot.t).abs() + seg_end.fiber_distance(&foot);
        let half_width = (mid - d_boundary).min(0.0);

        // Equidistance from both boundary components.
        let gap = (p.t - (width - p.t)).abs();
        let on_middle = (p.t - mid).abs() <= tol;
        let equidistant = gap <= 2.0 * tol;
        let middle_ok = if on_middle == equidistant { 0.0 } else { f64::NEG_INFINITY };

        // Level-set geodesic.
        let c = rng.gen_range(0.05 * width..=0.95 * width);
        let phi: f64 = rng.gen_range(0.0..2.0 * PI);
        let e = match fiber {
            Fiber::Line => [1.0, 0.0],
            Fiber::Plane => [phi.cos(), phi.sin()],
        };
        let base = ManifoldPoint::new(c, 0.0, 0.0);
        let g = integrate_manifold_geodesic(&m, base, m.unit_direction(&base, 0.5 * PI, e), LEVEL_RUN_LENGTH)?;
        let level_drift = g.samples().map(|(_, pt)| (pt.t - c).abs()).fold(0.0, f64::max);

        // Product-metric distance.
        let (d, _) = manifold_distance(&m, p, q)?;
        let flat = ((q.t - p.t).powi(2) + p.fiber_distance(&q).powi(2)).sqrt();

        Ok(SampleRow {
            id: i,
            a: Some(p.t),
            b: Some(d),
            c: Some(q.t),
            slack_gap: Some(-(d - flat).abs()),
            extra: vec![
                ("boundary_distance", d_boundary),
                ("level", c),
                ("level_drift", level_drift),
                ("product_distance", flat),
            ],
            hidden_slacks: vec![-(d_boundary - expected).abs(), -seg_miss, half_width, middle_ok, -level_drift],
            ..SampleRow::default()
        })
    });
    Ok(VerificationReport::finish("slab", rows, tol, notes, start))
}

/// Resolve a check name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CheckKind {
    Toponogov,
    Equality,
    Weak,
    Alexandrov,
    Splitting,
    Slab,
}

impl CheckKind {
    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "toponogov" => Self::Toponogov,
            "equality" => Self::Equality,
            "weak" | "weak_form" => Self::Weak,
            "alexandrov" => Self::Alexandrov,
            "splitting" => Self::Splitting,
            "slab" => Self::Slab,
            other => return Err(Error::Config(format!("unknown check '{other}'"))),
        })
    }
}

/// Defaults used when a check runs without explicit parameters.
pub const DEFAULT_WEAK_PIECES: usize = 8;
pub const DEFAULT_WEAK_STEP: f64 = 0.04;
pub const DEFAULT_ALEXANDROV_GRID: usize = 50;

/// Run a check by kind on `m`.
pub fn run_check(kind: CheckKind, m: &TestManifold, sampling: &Sampling, tol: f64) -> Result<VerificationReport> {
    match kind {
        CheckKind::Toponogov => toponogov_check(m, sampling, tol),
        CheckKind::Equality => equality_case_check(m, sampling, tol),
        CheckKind::Weak => weak_form_check(m, sampling, DEFAULT_WEAK_PIECES, DEFAULT_WEAK_STEP, tol),
        CheckKind::Alexandrov => alexandrov_batch(m, sampling, DEFAULT_ALEXANDROV_GRID, tol),
        CheckKind::Splitting => splitting_check(m, sampling, tol),
        CheckKind::Slab => slab_check(m.slab.unwrap_or(2.0), m.fiber, sampling, tol),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat3(model: WarpingFunction) -> TestManifold {
        TestManifold::from_name("flat3", model).unwrap()
    }

    #[test]
    fn streams_are_independent_of_order() {
        let s = Sampling::new(4, 7);
        let a: f64 = s.rng(3).gen();
        let _: f64 = s.rng(1).gen();
        let b: f64 = s.rng(3).gen();
        assert_eq!(a, b);
        assert_ne!(a, s.rng(2).gen::<f64>());
    }

    #[test]
    fn degenerate_triangle_has_zero_slack() {
        let m = flat3(WarpingFunction::hyperbolic());
        let tri = open_triangle(&m, ManifoldPoint::new(1.0, 0.0, 0.0), ManifoldPoint::new(2.0, 0.0, 0.0)).unwrap();
        let row = triangle_row(0, &tri, &m.model, false).unwrap();
        assert!(row.min_slack().abs() < 1e-12, "{row:?}");
    }

    #[test]
    fn flat_equality_case() {
        let m = flat3(WarpingFunction::euclidean());
        let rep = equality_case_check(&m, &Sampling::new(8, 3), 1e-6).unwrap();
        assert!(rep.pass, "{:?}", rep.notes);
        assert!(rep.max_abs_slack() < 1e-8);
    }

    #[test]
    fn flat_vs_hyperbolic_is_strict() {
        let m = flat3(WarpingFunction::hyperbolic());
        let rep = toponogov_check(&m, &Sampling::new(8, 11), 1e-6).unwrap();
        assert!(rep.pass, "{:?}", rep.notes);
        assert!(rep.min_slack > 0.0);
    }

    #[test]
    fn csv_layout() {
        let m = flat3(WarpingFunction::euclidean());
        let rep = equality_case_check(&m, &Sampling::new(2, 1), 1e-6).unwrap();
        let csv = rep.to_csv();
        let mut lines = csv.lines();
        assert!(lines.next().unwrap().starts_with("id,a,b,c,angle_p,angle_p_model,slack_angle_p,slack_angle_q,slack_gap"));
        assert_eq!(lines.count(), 2);
        let json: serde_json::Value = serde_json::from_str(&rep.summary_json()).unwrap();
        assert_eq!(json["check"], "equality");
        assert_eq!(json["n"], 2);
    }

    #[test]
    fn golden_section_finds_minimum() {
        let x = golden_min(|x| (x - 0.3).powi(2), -1.0, 2.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-8);
    }

    #[test]
    fn unknown_check_is_config_error() {
        assert!(matches!(CheckKind::parse("nope"), Err(Error::Config(_))));
    }
}
