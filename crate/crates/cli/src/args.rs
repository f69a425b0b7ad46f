use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "eikonal", version, about = "Eikonal solvers via the screened Poisson linearization")]
pub struct Cli {
    /// Worker threads for FFTs and stencil products; 1 gives reproducible runs, 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve |grad S| = f for a forcing field and write S*.
    Solve(SolveArgs),
    /// Percent error and largest absolute difference of two fields.
    Compare(CompareArgs),
    /// Plan shortest paths through a maze image.
    Plan(PlanArgs),
    /// Recover a height field from a shaded image.
    Sfs(SfsArgs),
    /// Re-run a command from its manifest.
    Replay(ReplayArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Perturb,
    Sparse,
    Sweep,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SolverArg {
    Auto,
    Cg,
    LogGs,
    Rescaled,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ConvArg {
    ZeroPadded,
    Circular,
    Direct,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Phi0Arg {
    Modified,
    Exact,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ScalingArg {
    Kronecker,
    Delta,
    Series,
}

/// Settings shared by the perturbation and sparse backends.
#[derive(Debug, Args)]
pub struct SolverOpts {
    /// Planck parameter; defaults to the fixture's value.
    #[arg(long)]
    pub hbar: Option<f64>,

    /// Number of series terms T after phi_0.
    #[arg(long)]
    pub terms: Option<usize>,

    /// Grid scale-down factor for the perturbation backend.
    #[arg(long)]
    pub tau: Option<f64>,

    /// Fixed reference forcing instead of the optimal one.
    #[arg(long)]
    pub ftilde: Option<f64>,

    /// Convolution mode for the perturbation backend.
    #[arg(long, value_enum)]
    pub conv: Option<ConvArg>,

    /// Kernel of the zeroth term.
    #[arg(long, value_enum, default_value = "modified")]
    pub phi0: Phi0Arg,

    /// Linear solver for the sparse backend.
    #[arg(long, value_enum, default_value = "auto")]
    pub solver: SolverArg,

    /// Right-hand side of the sparse system.
    #[arg(long, value_enum, default_value = "kronecker")]
    pub scaling: ScalingArg,

    /// Sparse solver tolerance.
    #[arg(long)]
    pub tol: Option<f64>,

    /// Iteration cap for the sparse solver.
    #[arg(long, default_value_t = 100_000)]
    pub max_iter: usize,

    /// Passes of the fast-sweeping backend.
    #[arg(long, default_value_t = 15)]
    pub sweeps: usize,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Built-in problem: example1, example2, example3, example4.
    #[arg(long, conflicts_with = "f")]
    pub fixture: Option<String>,

    /// Forcing field as an EIKF file, or a fixture name.
    #[arg(long)]
    pub f: Option<String>,

    /// Source `x,y` or `x,y,height` in world coordinates (repeatable).
    #[arg(long = "source", value_parser = parse_seed, allow_hyphen_values = true)]
    pub sources: Vec<Seed>,

    #[arg(long, value_enum, default_value = "perturb")]
    pub backend: BackendArg,

    #[command(flatten)]
    pub solver: SolverOpts,

    /// Reference field (EIKF) for the percent error; fixtures with a closed form supply their own.
    #[arg(long)]
    pub reference: Option<PathBuf>,

    /// Also write S* as CSV.
    #[arg(long)]
    pub csv: bool,

    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Estimate (EIKF).
    pub a: PathBuf,
    /// Reference (EIKF).
    pub b: PathBuf,
    /// Nodes to leave out, `x,y` in world coordinates (repeatable).
    #[arg(long = "source", value_parser = parse_seed, allow_hyphen_values = true)]
    pub sources: Vec<Seed>,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    /// Built-in maze: spiral-maze, open-room.
    #[arg(long, conflicts_with = "maze")]
    pub fixture: Option<String>,

    /// Maze image (PGM); black is free space, white is wall.
    #[arg(long)]
    pub maze: Option<PathBuf>,

    /// Source pixel `row,col`.
    #[arg(long, value_parser = parse_pixel)]
    pub source: Option<[usize; 2]>,

    /// Start pixel `row,col` (repeatable).
    #[arg(long = "start", value_parser = parse_pixel)]
    pub starts: Vec<[usize; 2]>,

    #[arg(long, value_enum, default_value = "sparse")]
    pub backend: BackendArg,

    #[command(flatten)]
    pub solver: SolverOpts,

    /// Cost of free pixels.
    #[arg(long, default_value_t = eikonal_core::plan::DEFAULT_LO)]
    pub lo: f64,

    /// Cost of wall pixels.
    #[arg(long, default_value_t = eikonal_core::plan::DEFAULT_HI)]
    pub hi: f64,

    /// Pixels at or above this level (0-255) are walls.
    #[arg(long, default_value_t = eikonal_core::plan::DEFAULT_THRESHOLD)]
    pub threshold: u8,

    /// Backtracking step in pixels.
    #[arg(long, default_value_t = 0.5)]
    pub step: f64,

    #[arg(long, default_value_t = 1_000_000)]
    pub max_steps: usize,

    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SfsArgs {
    /// Built-in surface: cone, hemisphere, plane, vase.
    #[arg(long, conflicts_with = "image")]
    pub fixture: Option<String>,

    /// Nodes per side for the fixture (odd).
    #[arg(long, requires = "fixture")]
    pub resolution: Option<usize>,

    /// Luminance image (PGM).
    #[arg(long)]
    pub image: Option<PathBuf>,

    /// Pixel spacing of the image.
    #[arg(long, default_value_t = 1.0)]
    pub spacing: f64,

    /// Seed `x,y,height` in world coordinates (repeatable).
    #[arg(long = "seed", value_parser = parse_seed, allow_hyphen_values = true)]
    pub seeds: Vec<Seed>,

    /// Ground-truth height field (EIKF) for the error report.
    #[arg(long)]
    pub truth: Option<PathBuf>,

    #[arg(long, value_enum, default_value = "sparse")]
    pub backend: BackendArg,

    #[command(flatten)]
    pub solver: SolverOpts,

    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// Manifest written by an earlier run.
    pub manifest: PathBuf,

    /// Output directory; defaults to the one recorded in the manifest.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Seed {
    pub x: f64,
    pub y: f64,
    pub height: Option<f64>,
}

fn numbers(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| {
            let v: f64 = t.trim().parse().map_err(|_| format!("`{t}` is not a number"))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(format!("`{t}` is not finite"))
            }
        })
        .collect()
}

pub fn parse_seed(s: &str) -> Result<Seed, String> {
    match numbers(s)?[..] {
        [x, y] => Ok(Seed { x, y, height: None }),
        [x, y, h] => Ok(Seed { x, y, height: Some(h) }),
        _ => Err(format!("expected `x,y` or `x,y,height`, got `{s}`")),
    }
}

pub fn parse_pixel(s: &str) -> Result<[usize; 2], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected `row,col`, got `{s}`"));
    }
    let p = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("`{t}` is not a pixel index"));
    Ok([p(parts[0])?, p(parts[1])?])
}
