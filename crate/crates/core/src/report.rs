//! Solver output plus diagnostics, and its `key = value` text form.

use std::fmt::Write as _;
use std::time::Duration;

use crate::field::ScalarField;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backend {
    Perturb,
    Sparse,
    Sweep,
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Backend::Perturb => "perturb",
            Backend::Sparse => "sparse",
            Backend::Sweep => "sweep",
        }
    }
}

impl std::str::FromStr for Backend {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "perturb" => Ok(Backend::Perturb),
            "sparse" => Ok(Backend::Sparse),
            "sweep" => Ok(Backend::Sweep),
            other => Err(crate::Error::Parse(format!("unknown backend `{other}`"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub backend: Backend,
    pub s_star: ScalarField,
    /// The wave function before the logarithm (absent for sweeping).
    pub phi: Option<ScalarField>,
    pub hbar: Option<f64>,
    pub ftilde: Option<f64>,
    pub c0_bound: Option<f64>,
    /// l2 norm of each series term, `terms + 1` entries.
    pub term_norms: Vec<f64>,
    pub viscosity_residual_rms: Option<f64>,
    /// Flat indices where `phi` was clamped up to the positivity floor.
    pub floored: Vec<usize>,
    pub solver_iterations: Option<usize>,
    pub solver_residual: Option<f64>,
    /// Mean `| |grad S*| - |grad S_true| |` when a ground truth was supplied.
    pub gradient_error: Option<f64>,
    /// `S*` from the partial sums `phi_0 .. phi_i`, kept only on request.
    pub iterates: Vec<ScalarField>,
    pub warnings: Vec<String>,
    pub wall_time: Duration,
}

impl SolveReport {
    pub fn new(backend: Backend, s_star: ScalarField) -> Self {
        Self {
            backend,
            s_star,
            phi: None,
            hbar: None,
            ftilde: None,
            c0_bound: None,
            term_norms: Vec::new(),
            viscosity_residual_rms: None,
            floored: Vec::new(),
            solver_iterations: None,
            solver_residual: None,
            gradient_error: None,
            iterates: Vec::new(),
            warnings: Vec::new(),
            wall_time: Duration::ZERO,
        }
    }

    /// Deterministic `key = value` lines. Wall time is left out so that
    /// replayed runs produce identical files; it belongs in the run manifest.
    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("backend", self.backend.name().into());
        let dims: Vec<String> = self.s_star.grid().dims().iter().map(|d| d.to_string()).collect();
        kv("dims", dims.join(" "));
        let opt = |v: Option<f64>| v.map_or_else(|| "none".to_string(), fmt_f64);
        kv("hbar", opt(self.hbar));
        kv("ftilde", opt(self.ftilde));
        kv("c0_bound", opt(self.c0_bound));
        let norms: Vec<String> = self.term_norms.iter().map(|&v| fmt_f64(v)).collect();
        kv("term_norms", norms.join(" "));
        kv("viscosity_residual_rms", opt(self.viscosity_residual_rms));
        kv("floored_nodes", self.floored.len().to_string());
        kv(
            "solver_iterations",
            self.solver_iterations.map_or_else(|| "none".into(), |n| n.to_string()),
        );
        kv("solver_residual", opt(self.solver_residual));
        kv("gradient_error", opt(self.gradient_error));
        kv("s_min", fmt_f64(self.s_star.min()));
        kv("s_max", fmt_f64(self.s_star.max()));
        for (i, w) in self.warnings.iter().enumerate() {
            kv(&format!("warning.{i}"), w.replace('\n', " "));
        }
        out
    }
}

/// Shortest decimal form that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}
