//! Perturbation-series solver for `-hbar^2 lap phi + f^2 phi = sum_k delta(x - y_k)`.
//!
//! With a constant reference forcing `ftilde` the operator splits as
//! `(-hbar^2 lap + ftilde^2)(1 + L)`, and `(1 + L)^-1` is expanded as a
//! geometric series. Each term is one Green's-function convolution:
//!
//! ```text
//! phi_i = G * [(f^2 - ftilde^2) phi_{i-1}] * cell,    phi = sum (-1)^i phi_i
//! ```
//!
//! and the eikonal estimate is `S* = -hbar log phi`.

#[cfg(not(target_arch = "wasm32"))]
use std::time::Instant;

#[cfg(target_arch = "wasm32")]
use web_time::Instant;

use crate::error::{Error, Result};
use crate::field::{viscosity_residual_rms, GridSpec, ResidualMask, ScalarField, SourceSet};
use crate::kernels::{
    exact_green, kernel_field, modified_green, ConvMode, ConvPolicy, Convolver, KernelKind, KernelParams,
    KernelSupport, OriginRegularization,
};
use crate::report::{Backend, SolveReport};

/// Smallest admissible `phi` before the logarithm.
pub const PHI_FLOOR: f64 = 1e-300;

/// Source counts up to this use direct summation for `phi_0`.
pub const DIRECT_PHI0_MAX_SOURCES: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FtildeStrategy {
    /// `sqrt((f_min^2 + f_max^2) / 2)`.
    Optimal,
    Fixed(f64),
}

/// Kernel used for the zeroth term.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phi0Kernel {
    /// `exp(-ftilde r / hbar)`; keeps `S*(y_k) = h_k` at the seeds.
    Modified,
    /// The exact Green's function, so `phi` solves the PDE with Dirac sources.
    Exact,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phi0Route {
    /// Direct summation for few sources, convolution otherwise.
    Auto,
    Direct,
    Convolution,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PerturbConfig {
    pub hbar: f64,
    pub terms: usize,
    pub ftilde: FtildeStrategy,
    /// Grid scale-down factor used by [`scaled_solve`].
    pub tau: f64,
    pub conv: ConvPolicy,
    pub phi0: Phi0Kernel,
    /// Keep `S*` of every partial sum in the report.
    pub keep_iterates: bool,
}

impl PerturbConfig {
    pub fn new(hbar: f64, terms: usize) -> Self {
        Self {
            hbar,
            terms,
            ftilde: FtildeStrategy::Optimal,
            tau: 1.0,
            conv: ConvPolicy::default(),
            phi0: Phi0Kernel::Modified,
            keep_iterates: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.hbar > 0.0 && self.hbar.is_finite()) {
            return Err(Error::param("hbar", format!("{} must be positive", self.hbar)));
        }
        if let FtildeStrategy::Fixed(v) = self.ftilde {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param("ftilde", format!("{v} must be positive")));
            }
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::param("tau", format!("{} must be positive", self.tau)));
        }
        self.conv.validate()
    }
}

pub(crate) fn ensure_positive(f: &ScalarField) -> Result<()> {
    match f.values().iter().position(|&v| !(v > 0.0)) {
        Some(index) => Err(Error::NonPositiveForcing {
            index,
            value: f.values()[index],
        }),
        None => Ok(()),
    }
}

/// The reference forcing minimizing `sup |f^2 - ftilde^2| / ftilde^2`.
pub fn optimal_ftilde(f: &ScalarField) -> Result<f64> {
    ensure_positive(f)?;
    let (lo, hi) = (f.min(), f.max());
    Ok(((lo * lo + hi * hi) / 2.0).sqrt())
}

/// Upper bound `sup |f^2 - ftilde^2| / ftilde^2` on the norm of the perturbation operator.
pub fn c0_upper_bound(f: &ScalarField, ftilde: f64) -> Result<f64> {
    ensure_positive(f)?;
    if !(ftilde > 0.0) {
        return Err(Error::param("ftilde", format!("{ftilde} must be positive")));
    }
    let t2 = ftilde * ftilde;
    Ok(f.values().iter().map(|&v| (v * v - t2).abs()).fold(0.0, f64::max) / t2)
}

/// `phi_0 = sum_k exp(-ftilde |x - y_k| / hbar)` with unit source weights.
pub fn phi_zero(grid: &GridSpec, sources: &SourceSet, ftilde: f64, hbar: f64) -> Result<ScalarField> {
    let weights = vec![1.0; sources.len()];
    phi_zero_with(
        grid,
        sources,
        &weights,
        &KernelParams::new(hbar, ftilde, grid.ndim())?,
        Phi0Kernel::Modified,
        Phi0Route::Auto,
        &ConvPolicy::default(),
    )
}

/// Zeroth term `sum_k w_k K(|x - y_k|)` for kernel `K`, by the chosen route.
pub fn phi_zero_with(
    grid: &GridSpec,
    sources: &SourceSet,
    weights: &[f64],
    params: &KernelParams,
    kernel: Phi0Kernel,
    route: Phi0Route,
    policy: &ConvPolicy,
) -> Result<ScalarField> {
    sources.validate(grid)?;
    if weights.len() != sources.len() {
        return Err(Error::LengthMismatch {
            expected: sources.len(),
            got: weights.len(),
        });
    }
    let direct = match route {
        Phi0Route::Auto => sources.len() <= DIRECT_PHI0_MAX_SOURCES,
        Phi0Route::Direct => true,
        Phi0Route::Convolution => false,
    };
    if direct {
        let cell = grid.spacing().iter().copied().fold(f64::INFINITY, f64::min);
        let eval = |r: f64| -> Result<f64> {
            match kernel {
                Phi0Kernel::Modified => Ok(modified_green(r, params)),
                Phi0Kernel::Exact => {
                    if r == 0.0 && params.dimension() > 1 {
                        return match policy.origin {
                            OriginRegularization::HalfCell => exact_green(0.5 * cell, params),
                            OriginRegularization::FiniteCap(c) => Ok(c),
                        };
                    }
                    exact_green(r, params)
                }
            }
        };
        let pts = sources.points();
        let mut values = vec![0.0; grid.len()];
        for (k, v) in values.iter_mut().enumerate() {
            let idx = grid.unflat(k);
            let mut acc = 0.0;
            for (p, &w) in pts.iter().zip(weights) {
                let d0 = (idx[0] as f64 - p[0] as f64) * grid.spacing()[0];
                let d1 = if grid.ndim() == 2 {
                    (idx[1] as f64 - p[1] as f64) * grid.spacing()[1]
                } else {
                    0.0
                };
                acc += w * eval(d0.hypot(d1))?;
            }
            *v = acc;
        }
        return ScalarField::new(grid.clone(), values);
    }
    let which = match kernel {
        Phi0Kernel::Modified => KernelKind::Modified,
        Phi0Kernel::Exact => KernelKind::Exact,
    };
    let support = support_for(policy.mode);
    let kf = kernel_field(grid, params, which, policy, support)?;
    let delta = sources.kronecker(grid, |k| weights[k])?;
    let mut out = Convolver::new(grid, &kf, policy.mode, false)?.apply(&delta)?;
    // FFT round-off can leave tiny negative values far from every source
    out = out.map(|v| v.max(0.0))?;
    Ok(out)
}

fn support_for(mode: ConvMode) -> KernelSupport {
    match mode {
        ConvMode::Circular => KernelSupport::Grid,
        _ => KernelSupport::AllOffsets,
    }
}

/// Source weights `exp(-(h_k - h_min) / hbar)` and the shift `h_min`.
pub(crate) fn seed_weights(sources: &SourceSet, hbar: f64) -> (Vec<f64>, f64) {
    let h_min = sources.values().iter().copied().fold(f64::INFINITY, f64::min);
    let w = sources.values().iter().map(|&h| (-(h - h_min) / hbar).exp()).collect();
    (w, h_min)
}

/// Clamps `phi` to [`PHI_FLOOR`] and returns `-hbar log phi + shift` with
/// the indices that were clamped.
pub(crate) fn log_transform(phi: &mut [f64], hbar: f64, shift: f64) -> Result<(Vec<f64>, Vec<usize>)> {
    let mut floored = Vec::new();
    for (k, v) in phi.iter_mut().enumerate() {
        if !(*v > PHI_FLOOR) {
            *v = PHI_FLOOR;
            floored.push(k);
        }
    }
    if floored.len() == phi.len() {
        return Err(Error::Underflow);
    }
    let s = phi.iter().map(|&v| -hbar * v.ln() + shift).collect();
    Ok((s, floored))
}

fn residual_or_none(s: &ScalarField, f: &ScalarField, hbar: f64, sources: &SourceSet) -> Option<f64> {
    if s.grid().ndim() != 2 || s.grid().dims().iter().any(|&n| n < 3) {
        return None;
    }
    viscosity_residual_rms(s, f, hbar, sources, ResidualMask::default())
        .ok()
        .filter(|v| v.is_finite())
}

/// Runs the series for `cfg.terms` terms on `f`'s grid. `cfg.tau` is not
/// applied here; see [`scaled_solve`].
pub fn perturb_solve(f: &ScalarField, sources: &SourceSet, cfg: &PerturbConfig) -> Result<SolveReport> {
    let start = Instant::now();
    cfg.validate()?;
    ensure_positive(f)?;
    let grid = f.grid();
    sources.validate(grid)?;
    let ftilde = match cfg.ftilde {
        FtildeStrategy::Optimal => optimal_ftilde(f)?,
        FtildeStrategy::Fixed(v) => v,
    };
    let c0 = c0_upper_bound(f, ftilde)?;
    let mut warnings = Vec::new();
    if c0 >= 1.0 {
        warnings.push(format!(
            "c0 bound {c0} >= 1: the series is not guaranteed to converge"
        ));
    }
    let params = KernelParams::new(cfg.hbar, ftilde, grid.ndim())?;
    let (weights, shift) = seed_weights(sources, cfg.hbar);
    let phi0 = phi_zero_with(grid, sources, &weights, &params, cfg.phi0, Phi0Route::Auto, &cfg.conv)?;

    let mut phi = phi0.values().to_vec();
    let mut term_norms = vec![phi0.l2_norm()];
    let mut iterates = Vec::new();
    if cfg.keep_iterates {
        let (s, _) = log_transform(&mut phi.clone(), cfg.hbar, shift)?;
        iterates.push(ScalarField::new(grid.clone(), s)?);
    }
    if cfg.terms > 0 {
        let kernel = kernel_field(grid, &params, KernelKind::Exact, &cfg.conv, support_for(cfg.conv.mode))?;
        let conv = Convolver::new(grid, &kernel, cfg.conv.mode, true)?;
        let t2 = ftilde * ftilde;
        let dev: Vec<f64> = f.values().iter().map(|&v| v * v - t2).collect();
        let mut prev = phi0;
        for i in 1..=cfg.terms {
            let psi: Vec<f64> = prev.values().iter().zip(&dev).map(|(p, d)| p * d).collect();
            let term = conv.apply(&ScalarField::new(grid.clone(), psi)?)?;
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            for (acc, &t) in phi.iter_mut().zip(term.values()) {
                *acc += sign * t;
            }
            term_norms.push(term.l2_norm());
            if cfg.keep_iterates {
                let (s, _) = log_transform(&mut phi.clone(), cfg.hbar, shift)?;
                iterates.push(ScalarField::new(grid.clone(), s)?);
            }
            prev = term;
        }
    }
    let (s, floored) = log_transform(&mut phi, cfg.hbar, shift)?;
    if !floored.is_empty() {
        warnings.push(format!(
            "{} nodes fell below the positivity floor; consider tau scaling or a larger hbar",
            floored.len()
        ));
    }
    let s_star = ScalarField::new(grid.clone(), s)?;
    let mut report = SolveReport::new(Backend::Perturb, s_star);
    report.viscosity_residual_rms = residual_or_none(&report.s_star, f, cfg.hbar, sources);
    report.phi = Some(ScalarField::new(grid.clone(), phi)?);
    report.hbar = Some(cfg.hbar);
    report.ftilde = Some(ftilde);
    report.c0_bound = Some(c0);
    report.term_norms = term_norms;
    report.floored = floored;
    report.iterates = iterates;
    report.warnings = warnings;
    report.wall_time = start.elapsed();
    Ok(report)
}

/// Solves on the grid shrunk by `cfg.tau`, where `phi` stays representable
/// at small `hbar`, and multiplies `S*` back by `tau`. Seed heights are
/// scaled down with the grid.
pub fn scaled_solve(f: &ScalarField, sources: &SourceSet, cfg: &PerturbConfig) -> Result<SolveReport> {
    cfg.validate()?;
    if cfg.tau < 1.0 {
        return Err(Error::param("tau", format!("{} must be at least 1", cfg.tau)));
    }
    if cfg.tau == 1.0 {
        return perturb_solve(f, sources, cfg);
    }
    let start = Instant::now();
    let tau = cfg.tau;
    let grid = f.grid();
    let small = grid.scaled_down(tau)?;
    let f_small = ScalarField::new(small, f.values().to_vec())?;
    let seeds = SourceSet::with_values(
        sources.points().to_vec(),
        sources.values().iter().map(|h| h / tau).collect(),
    )?;
    let mut rep = perturb_solve(&f_small, &seeds, cfg)?;
    let rescale = |s: &ScalarField| ScalarField::new(grid.clone(), s.values().iter().map(|v| v * tau).collect());
    rep.s_star = rescale(&rep.s_star)?;
    rep.iterates = rep.iterates.iter().map(rescale).collect::<Result<_>>()?;
    if let Some(phi) = rep.phi.take() {
        rep.phi = Some(ScalarField::new(grid.clone(), phi.into_values())?);
    }
    // on the original grid S* carries viscosity tau * hbar
    rep.viscosity_residual_rms = residual_or_none(&rep.s_star, f, tau * cfg.hbar, sources);
    rep.wall_time = start.elapsed();
    Ok(rep)
}
