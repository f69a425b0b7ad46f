use std::path::Path;
use std::time::{Duration, Instant};

use anyhow::anyhow;
use eikonal_core::field::{percent_error, GridSpec, ScalarField, SourceSet};
use eikonal_core::fixtures;
use eikonal_core::io::{self, GrayImage};
use eikonal_core::kernels::{ConvMode, ConvPolicy};
use eikonal_core::perturb::{scaled_solve, FtildeStrategy, Phi0Kernel, PerturbConfig};
use eikonal_core::plan::{backtrack, maze_to_forcing, BacktrackConfig, PathStatus};
use eikonal_core::report::fmt_f64;
use eikonal_core::sfs::{gradient_error, render_lambertian, sfs_reconstruct, LuminanceImage, SfsBackend};
use eikonal_core::sparse::{sparse_eikonal, LinearSolver, SourceScaling, SparseConfig};
use eikonal_core::sweep::{sweep_solve, SweepConfig};
use eikonal_core::{Backend, SolveReport};

use crate::args::{BackendArg, CompareArgs, ConvArg, Phi0Arg, PlanArgs, ScalingArg, Seed, SfsArgs, SolveArgs, SolverArg, SolverOpts};
use crate::{Fail, Outcome, Tag};

/// Everything a command produces; nothing touches the disk until it is complete.
#[derive(Default)]
pub struct Artifacts {
    pub files: Vec<(String, Vec<u8>)>,
    pub params: Vec<(String, String)>,
    pub timings: Vec<(String, Duration)>,
    /// Starts whose path did not reach the source.
    pub stalled: Vec<String>,
    pub stdout: String,
}

impl Artifacts {
    fn param(&mut self, k: &str, v: impl ToString) {
        self.params.push((k.to_string(), v.to_string()));
    }
}

fn positive(flag: &str, v: f64) -> Outcome<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Fail::Usage(anyhow!("{flag}: {v} must be positive")))
    }
}

fn load_field(flag: &str, path: &Path) -> Outcome<ScalarField> {
    io::load_field(path).usage(flag)
}

fn field_bytes(f: &ScalarField) -> Vec<u8> {
    let mut buf = Vec::new();
    io::write_field(&mut buf, f).expect("writing to memory");
    buf
}

fn seeds_to_sources(grid: &GridSpec, flag: &str, seeds: &[Seed]) -> Outcome<SourceSet> {
    let pts: Vec<[f64; 2]> = seeds.iter().map(|s| [s.x, s.y]).collect();
    let heights = if seeds.iter().any(|s| s.height.is_some()) {
        Some(seeds.iter().map(|s| s.height.unwrap_or(0.0)).collect())
    } else {
        None
    };
    SourceSet::from_world(grid, &pts, heights).usage(flag)
}

fn sources_param(grid: &GridSpec, s: &SourceSet) -> String {
    s.world_points(grid)
        .iter()
        .zip(s.values())
        .map(|(p, h)| format!("{},{},{}", fmt_f64(p[0]), fmt_f64(p[1]), fmt_f64(*h)))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Solver settings after fixture defaults are applied.
struct Resolved {
    hbar: f64,
    terms: usize,
    tau: f64,
    conv: ConvMode,
    tol: f64,
}

fn resolve(opts: &SolverOpts, hbar: Option<f64>, terms: usize, tau: f64, conv: ConvMode, tol: f64) -> Outcome<Resolved> {
    let hbar = opts
        .hbar
        .or(hbar)
        .ok_or_else(|| Fail::Usage(anyhow!("--hbar: required for this input")))?;
    let tau = opts.tau.unwrap_or(tau);
    if tau < 1.0 || !tau.is_finite() {
        return Err(Fail::Usage(anyhow!("--tau: {tau} must be at least 1")));
    }
    if let Some(v) = opts.ftilde {
        positive("--ftilde", v)?;
    }
    if opts.sweeps == 0 {
        return Err(Fail::Usage(anyhow!("--sweeps: must be at least 1")));
    }
    Ok(Resolved {
        hbar: positive("--hbar", hbar)?,
        terms: opts.terms.unwrap_or(terms),
        tau,
        conv: opts.conv.map_or(conv, |c| match c {
            ConvArg::ZeroPadded => ConvMode::ZeroPaddedLinear,
            ConvArg::Circular => ConvMode::Circular,
            ConvArg::Direct => ConvMode::Direct,
        }),
        tol: positive("--tol", opts.tol.unwrap_or(tol))?,
    })
}

fn perturb_config(opts: &SolverOpts, r: &Resolved) -> PerturbConfig {
    let mut cfg = PerturbConfig::new(r.hbar, r.terms);
    cfg.tau = r.tau;
    cfg.conv = ConvPolicy {
        mode: r.conv,
        ..ConvPolicy::default()
    };
    if let Some(v) = opts.ftilde {
        cfg.ftilde = FtildeStrategy::Fixed(v);
    }
    cfg.phi0 = match opts.phi0 {
        Phi0Arg::Modified => Phi0Kernel::Modified,
        Phi0Arg::Exact => Phi0Kernel::Exact,
    };
    cfg
}

fn sparse_config(opts: &SolverOpts, r: &Resolved) -> SparseConfig {
    let mut cfg = SparseConfig::new(r.hbar);
    cfg.tol = r.tol;
    cfg.max_iter = opts.max_iter;
    cfg.solver = match opts.solver {
        SolverArg::Auto => LinearSolver::Auto,
        SolverArg::Cg => LinearSolver::ConjugateGradient,
        SolverArg::LogGs => LinearSolver::LogGaussSeidel,
        SolverArg::Rescaled => LinearSolver::Rescaled,
    };
    cfg.assemble.scaling = match opts.scaling {
        ScalingArg::Kronecker => SourceScaling::Kronecker,
        ScalingArg::Delta => SourceScaling::Delta,
        ScalingArg::Series => SourceScaling::Series(opts.ftilde.map_or(FtildeStrategy::Optimal, FtildeStrategy::Fixed)),
    };
    cfg
}

fn record_solver(out: &mut Artifacts, backend: BackendArg, opts: &SolverOpts, r: &Resolved) {
    out.param("backend", format!("{backend:?}").to_lowercase());
    match backend {
        BackendArg::Perturb => {
            out.param("hbar", fmt_f64(r.hbar));
            out.param("terms", r.terms);
            out.param("tau", fmt_f64(r.tau));
            out.param("ftilde", opts.ftilde.map_or("optimal".into(), fmt_f64));
            out.param("conv", format!("{:?}", r.conv));
            out.param("phi0", format!("{:?}", opts.phi0));
        }
        BackendArg::Sparse => {
            out.param("hbar", fmt_f64(r.hbar));
            out.param("solver", format!("{:?}", opts.solver));
            out.param("scaling", format!("{:?}", opts.scaling));
            out.param("tol", fmt_f64(r.tol));
            out.param("max_iter", opts.max_iter);
        }
        BackendArg::Sweep => out.param("sweeps", opts.sweeps),
    }
}

fn run_backend(backend: BackendArg, opts: &SolverOpts, r: &Resolved, f: &ScalarField, sources: &SourceSet) -> Outcome<SolveReport> {
    match backend {
        BackendArg::Perturb => scaled_solve(f, sources, &perturb_config(opts, r)).solver(),
        BackendArg::Sparse => sparse_eikonal(f, sources, &sparse_config(opts, r)).solver(),
        BackendArg::Sweep => {
            let start = Instant::now();
            let cfg = SweepConfig {
                sweeps: opts.sweeps,
                convergence_tol: 0.0,
            };
            let s = sweep_solve(f, sources, &cfg).solver()?;
            let mut rep = SolveReport::new(Backend::Sweep, s);
            rep.solver_iterations = Some(opts.sweeps);
            rep.wall_time = start.elapsed();
            Ok(rep)
        }
    }
}

pub fn solve(a: &SolveArgs) -> Outcome<Artifacts> {
    let mut out = Artifacts::default();
    let fixture_name = a.fixture.clone().or_else(|| {
        a.f.clone()
            .filter(|s| !Path::new(s).exists() && fixtures::FIELD_FIXTURES.contains(&s.as_str()))
    });
    let (f, fixture) = match (&fixture_name, &a.f) {
        (Some(name), _) => {
            let fx = fixtures::by_name(name).usage(if a.fixture.is_some() { "--fixture" } else { "--f" })?;
            out.param("fixture", name);
            (fx.f.clone(), Some(fx))
        }
        (None, Some(path)) => {
            out.param("f", path);
            (load_field("--f", Path::new(path))?, None)
        }
        (None, None) => return Err(Fail::Usage(anyhow!("--fixture or --f: one of them is required"))),
    };
    let grid = f.grid().clone();
    let sources = if !a.sources.is_empty() {
        seeds_to_sources(&grid, "--source", &a.sources)?
    } else if let Some(fx) = &fixture {
        fx.sources.clone()
    } else {
        return Err(Fail::Usage(anyhow!("--source: at least one source is required")));
    };
    out.param("sources", sources_param(&grid, &sources));
    let reference = match (&a.reference, &fixture) {
        (Some(p), _) => {
            let r = load_field("--reference", p)?;
            grid.ensure_same(r.grid()).usage("--reference")?;
            out.param("reference", p.display());
            Some(r)
        }
        (None, Some(fx)) => fx.reference.clone(),
        (None, None) => None,
    };
    let r = match &fixture {
        Some(fx) => resolve(&a.solver, Some(fx.hbar), fx.terms, fx.tau, fx.conv_mode, 1e-10)?,
        None if a.backend == BackendArg::Sweep => resolve(&a.solver, Some(1.0), 6, 1.0, ConvMode::ZeroPaddedLinear, 1e-10)?,
        None => resolve(&a.solver, None, 6, 1.0, ConvMode::ZeroPaddedLinear, 1e-10)?,
    };
    record_solver(&mut out, a.backend, &a.solver, &r);

    let rep = run_backend(a.backend, &a.solver, &r, &f, &sources)?;
    out.timings.push(("solve".into(), rep.wall_time));
    let mut text = rep.to_key_values();
    if let Some(reference) = &reference {
        let e = percent_error(&rep.s_star, reference, Some(&sources)).solver()?;
        text.push_str(&format!("percent_error = {}\nmax_abs_diff = {}\n", fmt_f64(e.percent), fmt_f64(e.max_abs_diff)));
        out.stdout = format!("percent_error {:.6} max_abs_diff {:.6}\n", e.percent, e.max_abs_diff);
    }
    out.files.push(("s_star.eikf".into(), field_bytes(&rep.s_star)));
    if a.csv {
        let mut buf = Vec::new();
        io::write_csv(&mut buf, &rep.s_star).solver()?;
        out.files.push(("s_star.csv".into(), buf));
    }
    out.files.push(("report.txt".into(), text.into_bytes()));
    Ok(out)
}

pub fn compare(a: &CompareArgs) -> Outcome<Artifacts> {
    let fa = load_field("a", &a.a)?;
    let fb = load_field("b", &a.b)?;
    fa.grid().ensure_same(fb.grid()).usage("b")?;
    let exclude = if a.sources.is_empty() {
        None
    } else {
        Some(seeds_to_sources(fa.grid(), "--source", &a.sources)?)
    };
    let e = percent_error(&fa, &fb, exclude.as_ref()).usage("b")?;
    Ok(Artifacts {
        stdout: format!("{:.6} {:.6}\n", e.percent, e.max_abs_diff),
        ..Artifacts::default()
    })
}

pub fn plan(a: &PlanArgs) -> Outcome<Artifacts> {
    let mut out = Artifacts::default();
    let (image, fixture): (GrayImage, _) = match (&a.fixture, &a.maze) {
        (Some(name), _) => {
            let fx = fixtures::maze_by_name(name).usage("--fixture")?;
            out.param("fixture", name);
            (fx.image.clone(), Some(fx))
        }
        (None, Some(path)) => {
            out.param("maze", path.display());
            (io::load_pgm(path).usage("--maze")?, None)
        }
        (None, None) => return Err(Fail::Usage(anyhow!("--fixture or --maze: one of them is required"))),
    };
    let source = a
        .source
        .or(fixture.as_ref().map(|fx| fx.source))
        .ok_or_else(|| Fail::Usage(anyhow!("--source: a source pixel is required")))?;
    let starts = if !a.starts.is_empty() {
        a.starts.clone()
    } else {
        fixture.as_ref().map(|fx| fx.starts.clone()).unwrap_or_default()
    };
    if starts.is_empty() {
        return Err(Fail::Usage(anyhow!("--start: at least one start pixel is required")));
    }
    let inside = |p: [usize; 2]| p[0] < image.height && p[1] < image.width;
    if !inside(source) {
        return Err(Fail::Usage(anyhow!("--source: pixel {source:?} lies outside the {}x{} image", image.height, image.width)));
    }
    if let Some(p) = starts.iter().find(|&&p| !inside(p)) {
        return Err(Fail::Usage(anyhow!("--start: pixel {p:?} lies outside the {}x{} image", image.height, image.width)));
    }
    positive("--step", a.step)?;
    let cost = maze_to_forcing(&image, a.lo, a.hi, a.threshold)
        .usage("--lo/--hi/--maze")?
        .with_cost_at(&[source], a.lo)
        .usage("--source")?;
    let hbar = fixture.as_ref().map_or(8.0, |fx| fx.hbar);
    let r = resolve(&a.solver, Some(hbar), 6, 1.0, ConvMode::ZeroPaddedLinear, 1e-6)?;
    out.param("source", format!("{},{}", source[0], source[1]));
    out.param(
        "starts",
        starts.iter().map(|p| format!("{},{}", p[0], p[1])).collect::<Vec<_>>().join(" "),
    );
    out.param("lo", fmt_f64(a.lo));
    out.param("hi", fmt_f64(a.hi));
    out.param("threshold", a.threshold);
    out.param("step", fmt_f64(a.step));
    out.param("max_steps", a.max_steps);
    record_solver(&mut out, a.backend, &a.solver, &r);

    let sources = SourceSet::new(vec![source]).usage("--source")?;
    let rep = run_backend(a.backend, &a.solver, &r, &cost.field, &sources)?;
    out.timings.push(("solve".into(), rep.wall_time));
    let cfg = BacktrackConfig {
        step: a.step,
        eps: 1.0,
        max_steps: a.max_steps,
    };
    let mut text = rep.to_key_values();
    let t = Instant::now();
    for (i, p) in starts.iter().enumerate() {
        let path = backtrack(&rep.s_star, [p[0] as f64, p[1] as f64], &sources, &cfg).solver()?;
        let off = path
            .points
            .iter()
            .filter(|q| !cost.is_free([q[0].round() as usize, q[1].round() as usize]))
            .count();
        text.push_str(&format!(
            "path.{i}.start = {},{}\npath.{i}.status = {}\npath.{i}.points = {}\npath.{i}.length = {}\npath.{i}.wall_points = {off}\n",
            p[0],
            p[1],
            path.status.name(),
            path.points.len(),
            fmt_f64(path.length()),
        ));
        out.stdout.push_str(&format!("path {i}: {} after {} points\n", path.status.name(), path.points.len()));
        if path.status != PathStatus::ReachedSource {
            out.stalled.push(format!("start {},{} ended {}", p[0], p[1], path.status.name()));
        }
        let mut buf = Vec::new();
        io::write_path_csv(&mut buf, &path).solver()?;
        out.files.push((format!("path_{i}.csv"), buf));
    }
    out.timings.push(("backtrack".into(), t.elapsed()));
    out.files.insert(0, ("s_star.eikf".into(), field_bytes(&rep.s_star)));
    out.files.push(("report.txt".into(), text.into_bytes()));
    Ok(out)
}

fn surface(name: &str, n: Option<usize>) -> eikonal_core::Result<fixtures::SurfaceFixture> {
    match (name, n) {
        (_, None) => fixtures::surface_by_name(name),
        ("cone", Some(n)) => fixtures::cone(n),
        ("hemisphere", Some(n)) => fixtures::hemisphere(n),
        ("plane", Some(n)) => fixtures::plane(n),
        ("vase", Some(n)) => fixtures::vase(n),
        _ => fixtures::surface_by_name(name),
    }
}

pub fn sfs(a: &SfsArgs) -> Outcome<Artifacts> {
    let mut out = Artifacts::default();
    let (lum, seeds, truth, hbar) = match (&a.fixture, &a.image) {
        (Some(name), _) => {
            let fx = surface(name, a.resolution).usage("--fixture/--resolution")?;
            out.param("fixture", name);
            out.param("resolution", fx.truth.grid().dims()[1]);
            let lum = render_lambertian(&fx.truth).solver()?;
            let seeds = if a.seeds.is_empty() {
                fx.seeds.clone()
            } else {
                seeds_to_sources(fx.truth.grid(), "--seed", &a.seeds)?
            };
            (lum, seeds, Some(fx.truth), fx.hbar)
        }
        (None, Some(path)) => {
            let spacing = positive("--spacing", a.spacing)?;
            let img = io::load_pgm(path).usage("--image")?;
            let grid = GridSpec::new_2d([img.height, img.width], [0.0, 0.0], [spacing, spacing]).usage("--image")?;
            let values = img.pixels.iter().map(|&v| v as f64 / img.maxval as f64).collect();
            let lum = LuminanceImage::new(ScalarField::new(grid.clone(), values).usage("--image")?).usage("--image")?;
            if a.seeds.is_empty() {
                return Err(Fail::Usage(anyhow!("--seed: at least one seed height is required")));
            }
            let seeds = seeds_to_sources(&grid, "--seed", &a.seeds)?;
            let truth = match &a.truth {
                Some(p) => {
                    let t = load_field("--truth", p)?;
                    grid.ensure_same(t.grid()).usage("--truth")?;
                    Some(t)
                }
                None => None,
            };
            out.param("image", path.display());
            out.param("spacing", fmt_f64(spacing));
            (lum, seeds, truth, spacing)
        }
        (None, None) => return Err(Fail::Usage(anyhow!("--fixture or --image: one of them is required"))),
    };
    let r = resolve(&a.solver, Some(hbar), 6, 1.0, ConvMode::ZeroPaddedLinear, 1e-10)?;
    let backend = match a.backend {
        BackendArg::Perturb => SfsBackend::Perturb(perturb_config(&a.solver, &r)),
        BackendArg::Sparse => SfsBackend::Sparse(sparse_config(&a.solver, &r)),
        BackendArg::Sweep => return Err(Fail::Usage(anyhow!("--backend: sfs supports perturb and sparse"))),
    };
    out.param("seeds", sources_param(lum.field().grid(), &seeds));
    record_solver(&mut out, a.backend, &a.solver, &r);

    let rep = sfs_reconstruct(&lum, &seeds, &backend, truth.as_ref()).solver()?;
    out.timings.push(("solve".into(), rep.wall_time));
    let mut text = rep.to_key_values();
    if let (Some(t), Some(err)) = (&truth, rep.gradient_error) {
        let zero = ScalarField::constant(t.grid().clone(), 0.0).solver()?;
        let baseline = gradient_error(&zero, t).solver()?;
        text.push_str(&format!("baseline_error = {}\nimprovement = {}\n", fmt_f64(baseline), fmt_f64(baseline / err)));
        out.stdout = format!("gradient_error {err:.6} baseline {baseline:.6}\n");
    }
    out.files.push(("height.eikf".into(), field_bytes(&rep.s_star)));
    let mut pgm = Vec::new();
    io::write_pgm(&mut pgm, &lum.to_image().solver()?).solver()?;
    out.files.push(("luminance.pgm".into(), pgm));
    out.files.push(("report.txt".into(), text.into_bytes()));
    Ok(out)
}
