//! Command-line front-end for the opentri toolkit.
//!
//! Exit codes: 0 on success or a passing report, 1 when a verification
//! report fails, 2 on any configuration or input error.

pub mod config;

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use opentri_core::format::sig12;
use opentri_core::jacobi::{first_zero, solve_jacobi};
use opentri_core::manifold::{integrate_manifold_geodesic, ManifoldPoint, TestManifold};
use opentri_core::model_surface::{integrate_geodesic, ModelPoint};
use opentri_core::triangle::{build_model_triangle, theta, TriangleSides};
use opentri_core::verify::{
    alexandrov_batch, run_check, slab_check, weak_form_check, CheckKind, Sampling, VerificationReport,
};
use opentri_core::warping::{splitting_class, CurvatureProfile, WarpingFunction};
use opentri_core::{Error, Result};

use config::{FileConfig, Overrides, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "opentri", version, about = "Comparison geometry of open triangles on model surfaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
struct Common {
    /// Model warping: euclidean, hyperbolic or gauss.
    #[arg(long)]
    model: Option<String>,
    /// Test manifold: flat2, flat3, cosh2, cosh3, gauss2, gauss3, slab2, slab3.
    #[arg(long)]
    manifold: Option<String>,
    /// Number of samples.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tol: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses all cores.
    #[arg(long)]
    workers: Option<usize>,
    /// TOML config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate a model or manifold geodesic and dump its samples.
    Geodesic {
        #[command(flatten)]
        common: Common,
        /// Start: distance to the boundary.
        #[arg(long, default_value_t = 1.0)]
        x: f64,
        /// Start: first fiber coordinate.
        #[arg(long, default_value_t = 0.0)]
        y: f64,
        /// Start: second fiber coordinate (plane fibers only).
        #[arg(long, default_value_t = 0.0)]
        z: f64,
        /// Angle to the outward normal; its sign picks the fiber side.
        #[arg(long, allow_hyphen_values = true)]
        angle: f64,
        #[arg(long)]
        length: f64,
        /// Direction in a plane fiber, as an angle.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        fiber_angle: f64,
    },
    /// Realize the model triangle with the given sides.
    Triangle {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b: f64,
        #[arg(long)]
        c: f64,
    },
    /// Foot gap of model triangles; each side is a value or `lo:hi:count`.
    Theta {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long)]
        c: String,
    },
    /// Solve the Jacobi equation with the model's radial curvature.
    Jacobi {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        f0: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        fp0: f64,
        #[arg(long, default_value_t = 5.0)]
        horizon: f64,
    },
    /// Splitting class of a model warping.
    Classify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        horizon: Option<f64>,
    },
    /// Run a verification check: toponogov, equality, weak, alexandrov,
    /// splitting or slab.
    Verify {
        check: Option<String>,
        #[command(flatten)]
        common: Common,
        /// Grid size for the alexandrov check.
        #[arg(long, default_value_t = opentri_core::verify::DEFAULT_ALEXANDROV_GRID)]
        grid: usize,
        /// Minimum piece count for the weak check.
        #[arg(long, default_value_t = opentri_core::verify::DEFAULT_WEAK_PIECES)]
        pieces: usize,
        /// Longest piece for the weak check.
        #[arg(long, default_value_t = opentri_core::verify::DEFAULT_WEAK_STEP)]
        step: f64,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Geodesic { common, .. }
            | Command::Triangle { common, .. }
            | Command::Theta { common, .. }
            | Command::Jacobi { common, .. }
            | Command::Classify { common, .. }
            | Command::Verify { common, .. } => common,
        }
    }
}

fn resolve(common: &Common) -> Result<RunConfig> {
    let file = match &common.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let flags = Overrides {
        model: common.model.clone(),
        manifold: common.manifold.clone(),
        n: common.n,
        seed: common.seed,
        tol: common.tol,
        out: common.out.clone(),
        workers: common.workers,
    };
    RunConfig::resolve(file, flags)
}

/// Parse `argv` (including the program name), run, and return the exit code.
/// Standard output and error receive the results and diagnostics.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let cfg = match resolve(cli.command.common()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return EXIT_CONFIG;
        }
    };
    let mut stdout = std::io::stdout().lock();
    match pool.install(|| dispatch(&cli.command, &cfg)) {
        Ok(outcome) => {
            let _ = stdout.write_all(outcome.stdout.as_bytes());
            for note in &outcome.notes {
                eprintln!("{note}");
            }
            if outcome.pass {
                EXIT_OK
            } else {
                EXIT_FAILED
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    }
}

struct Outcome {
    stdout: String,
    notes: Vec<String>,
    pass: bool,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Self { stdout, notes: Vec::new(), pass: true }
    }
}

fn model(cfg: &RunConfig) -> Result<WarpingFunction> {
    WarpingFunction::from_tag(&cfg.model)
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Config(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))
}

/// Print to stdout, or write `<out>/<name>` when an output directory is set.
fn emit(cfg: &RunConfig, name: &str, contents: String) -> Result<Outcome> {
    match &cfg.out {
        Some(dir) => {
            write_file(dir, name, &contents)?;
            Ok(Outcome::ok(format!("{}\n", dir.join(name).display())))
        }
        None => Ok(Outcome::ok(contents)),
    }
}

/// `value` or `lo:hi:count`.
fn parse_axis(name: &str, text: &str) -> Result<Vec<f64>> {
    let bad = || Error::Config(format!("--{name}: expected a number or lo:hi:count, got '{text}'"));
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [v] => Ok(vec![v.trim().parse().map_err(|_| bad())?]),
        [lo, hi, n] => {
            let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
            let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
            let n: usize = n.trim().parse().map_err(|_| bad())?;
            match n {
                0 => Err(bad()),
                1 => Ok(vec![lo]),
                _ => Ok((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()),
            }
        }
        _ => Err(bad()),
    }
}

fn dispatch(cmd: &Command, cfg: &RunConfig) -> Result<Outcome> {
    match cmd {
        Command::Geodesic { x, y, z, angle, length, fiber_angle, .. } => {
            let w = model(cfg)?;
            let csv = match &cfg.manifold {
                None => integrate_geodesic(ModelPoint::new(*x, *y), *angle, *length, &w)?.to_csv(),
                Some(name) => {
                    let m = TestManifold::from_name(name, w)?;
                    let p = ManifoldPoint::new(*x, *y, *z);
                    let e = [fiber_angle.cos(), fiber_angle.sin()];
                    let g = integrate_manifold_geodesic(&m, p, m.unit_direction(&p, *angle, e), *length)?;
                    let mut out = String::from("s,t,u1,u2\n");
                    for (s, pt) in g.samples() {
                        let _ = writeln!(out, "{},{},{},{}", sig12(s), sig12(pt.t), sig12(pt.u[0]), sig12(pt.u[1]));
                    }
                    out
                }
            };
            emit(cfg, "geodesic.csv", csv)
        }
        Command::Triangle { a, b, c, .. } => {
            let r = build_model_triangle(TriangleSides::new(*a, *b, *c), &model(cfg)?)?.record();
            let csv = format!(
                "a,b,c,angle_p,angle_q,theta,degenerate\n{},{},{},{},{},{},{}\n",
                sig12(r.a),
                sig12(r.b),
                sig12(r.c),
                sig12(r.angle_p),
                sig12(r.angle_q),
                sig12(r.theta),
                r.degenerate
            );
            emit(cfg, "triangle.csv", csv)
        }
        Command::Theta { a, b, c, .. } => {
            let w = model(cfg)?;
            let (aa, bb, cc) = (parse_axis("a", a)?, parse_axis("b", b)?, parse_axis("c", c)?);
            if aa.len() == 1 && bb.len() == 1 && cc.len() == 1 {
                let v = theta(TriangleSides::new(aa[0], bb[0], cc[0]), &w)?;
                return emit(cfg, "theta.csv", format!("{}\n", sig12(v)));
            }
            let mut out = String::from("a,b,c,theta\n");
            for &x in &aa {
                for &y in &bb {
                    for &z in &cc {
                        let cell = match theta(TriangleSides::new(x, y, z), &w) {
                            Ok(v) => sig12(v),
                            Err(Error::InvalidSides { .. }) => String::new(),
                            Err(e) => return Err(e),
                        };
                        let _ = writeln!(out, "{},{},{},{}", sig12(x), sig12(y), sig12(z), cell);
                    }
                }
            }
            emit(cfg, "theta.csv", out)
        }
        Command::Jacobi { f0, fp0, horizon, .. } => {
            let w = model(cfg)?;
            let sol = solve_jacobi(&CurvatureProfile::OfWarping(w), *f0, *fp0, *horizon)?;
            let mut out = emit(cfg, "jacobi.csv", sol.to_csv())?;
            out.notes.push(match first_zero(&sol) {
                Some(z) => format!("first zero: {}", sig12(z)),
                None => format!("no zero on [0, {}]", sig12(*horizon)),
            });
            Ok(out)
        }
        Command::Classify { horizon, .. } => {
            let w = model(cfg)?;
            let h = horizon.unwrap_or(w.domain_max);
            Ok(Outcome::ok(format!("{}\n", splitting_class(&w, h, cfg.tol.unwrap_or(1e-6)))))
        }
        Command::Verify { check, grid, pieces, step, .. } => {
            let name = check
                .clone()
                .or_else(|| cfg.check.clone())
                .ok_or_else(|| Error::Config("verify needs a check name".into()))?;
            let kind = CheckKind::parse(&name)?;
            let report = verify(kind, cfg, *grid, *pieces, *step)?;
            let dir = cfg.out_dir();
            write_file(&dir, "samples.csv", &report.to_csv())?;
            let summary = report.summary_json();
            write_file(&dir, "summary.json", &summary)?;
            let mut notes = report.notes.clone();
            notes.push(format!("runtime: {:.3} s", report.runtime.as_secs_f64()));
            Ok(Outcome { stdout: format!("{summary}\n"), notes, pass: report.pass })
        }
    }
}

fn default_tol(kind: CheckKind) -> f64 {
    match kind {
        CheckKind::Slab => 1e-9,
        CheckKind::Splitting => 1e-8,
        _ => 1e-6,
    }
}

fn verify(kind: CheckKind, cfg: &RunConfig, grid: usize, pieces: usize, step: f64) -> Result<VerificationReport> {
    let tol = cfg.tol.unwrap_or_else(|| default_tol(kind));
    let sampling = Sampling::new(cfg.n, cfg.seed);
    let w = model(cfg)?;
    let default_manifold = match kind {
        CheckKind::Slab => "slab3",
        CheckKind::Equality | CheckKind::Splitting => match cfg.model.as_str() {
            "hyperbolic" | "cosh" => "cosh3",
            "gauss" => "gauss3",
            _ => "flat3",
        },
        _ => "flat3",
    };
    let m = TestManifold::from_name(cfg.manifold.as_deref().unwrap_or(default_manifold), w)?;
    match kind {
        CheckKind::Alexandrov => alexandrov_batch(&m, &sampling, grid, tol),
        CheckKind::Weak => weak_form_check(&m, &sampling, pieces, step, tol),
        CheckKind::Slab => slab_check(m.slab.unwrap_or(2.0), m.fiber, &sampling, tol),
        _ => run_check(kind, &m, &sampling, tol),
    }
}
