//! Five-point finite-difference discretization of
//! `-hbar^2 lap phi + f^2 phi = b` with zero Dirichlet data outside the grid.
//!
//! The matrix is never stored: each row is `diag[i]` on the node and one
//! coefficient per axis on the neighbours. Jacobi preconditioned conjugate
//! gradients solves for `phi` directly. Gauss-Seidel on `log phi` and a
//! rescaled BiCGSTAB solve for `log phi` instead, which stays representable
//! when `phi` spans more orders of magnitude than a double holds (long
//! mazes, small `hbar`).

#[cfg(not(target_arch = "wasm32"))]
use std::time::Instant;

#[cfg(target_arch = "wasm32")]
use web_time::Instant;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{viscosity_residual_rms, GridSpec, ResidualMask, ScalarField, SourceSet};
use crate::kernels::KernelParams;
use crate::perturb::{
    ensure_positive, log_transform, optimal_ftilde, phi_zero_with, seed_weights, FtildeStrategy, Phi0Kernel, Phi0Route,
    PHI_FLOOR,
};
use crate::report::{Backend, SolveReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum StencilVariant {
    /// `(hbar^2 / delta^2) L5 + diag(f^2)`, consistent with the PDE.
    #[default]
    Consistent,
    /// `L5 + diag(f)` on unit spacing with no `hbar` scaling.
    PaperLiteral,
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum SourceScaling {
    /// Unit entries at the seeds.
    #[default]
    Kronecker,
    /// Entries `1 / cell`, the grid approximation of a Dirac source.
    Delta,
    /// `b = (-hbar^2 L + ftilde^2) phi_0` with `phi_0 = sum_k w_k exp(-ftilde |x - y_k| / hbar)`
    /// and `L` the same Dirichlet five-point Laplacian. The solution is then
    /// `(1 + L)^-1 phi_0`, the quantity the perturbation series expands, so
    /// the two backends can be compared node by node.
    Series(FtildeStrategy),
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct AssembleOptions {
    pub variant: StencilVariant,
    pub scaling: SourceScaling,
}

/// Matrix-free symmetric five-point system.
#[derive(Clone, Debug)]
pub struct StencilSystem {
    grid: GridSpec,
    diag: Vec<f64>,
    /// Neighbour coefficient along axis 0 and axis 1 (negative).
    off: [f64; 2],
    rhs: Vec<f64>,
    /// Natural log of each right-hand-side entry, kept for the log-domain solver.
    log_rhs: Vec<f64>,
}

pub fn assemble(f: &ScalarField, sources: &SourceSet, hbar: f64) -> Result<StencilSystem> {
    assemble_with(f, sources, hbar, AssembleOptions::default())
}

pub fn assemble_with(f: &ScalarField, sources: &SourceSet, hbar: f64, opts: AssembleOptions) -> Result<StencilSystem> {
    let grid = f.grid();
    grid.ensure_2d()?;
    ensure_positive(f)?;
    sources.validate(grid)?;
    if !(hbar > 0.0 && hbar.is_finite()) {
        return Err(Error::param("hbar", format!("{hbar} must be positive")));
    }
    let (h0, h1) = (grid.spacing()[0], grid.spacing()[1]);
    let (c0, c1) = match opts.variant {
        StencilVariant::Consistent => (hbar * hbar / (h0 * h0), hbar * hbar / (h1 * h1)),
        StencilVariant::PaperLiteral => (1.0, 1.0),
    };
    let diag = f
        .values()
        .iter()
        .map(|&v| {
            2.0 * c0
                + 2.0 * c1
                + match opts.variant {
                    StencilVariant::Consistent => v * v,
                    StencilVariant::PaperLiteral => v,
                }
        })
        .collect();
    let (weights, _) = seed_weights(sources, hbar);
    let h_min = sources.values().iter().copied().fold(f64::INFINITY, f64::min);
    let mut rhs = vec![0.0; grid.len()];
    let mut log_rhs = vec![f64::NEG_INFINITY; grid.len()];
    let unit = match opts.scaling {
        SourceScaling::Kronecker | SourceScaling::Series(_) => 0.0,
        SourceScaling::Delta => -grid.cell_measure().ln(),
    };
    for (k, (&idx, &h)) in sources.flat_indices(grid).iter().zip(sources.values()).enumerate() {
        rhs[idx] = weights[k] * unit.exp();
        log_rhs[idx] = -(h - h_min) / hbar + unit;
    }
    let mut sys = StencilSystem {
        grid: grid.clone(),
        diag,
        off: [-c0, -c1],
        rhs,
        log_rhs,
    };
    if let SourceScaling::Series(strategy) = opts.scaling {
        let ftilde = match strategy {
            FtildeStrategy::Optimal => optimal_ftilde(f)?,
            FtildeStrategy::Fixed(v) => v,
        };
        let params = KernelParams::new(hbar, ftilde, 2)?;
        let phi0 = phi_zero_with(
            grid,
            sources,
            &weights,
            &params,
            Phi0Kernel::Modified,
            Phi0Route::Direct,
            &Default::default(),
        )?;
        // reference operator: same stencil, diagonal built from ftilde
        let ref_diag = 2.0 * c0
            + 2.0 * c1
            + match opts.variant {
                StencilVariant::Consistent => ftilde * ftilde,
                StencilVariant::PaperLiteral => ftilde,
            };
        let reference = StencilSystem {
            diag: vec![ref_diag; grid.len()],
            ..sys.clone()
        };
        let mut b = vec![0.0; grid.len()];
        reference.matvec(phi0.values(), &mut b);
        sys = sys.with_rhs(b)?;
    }
    Ok(sys)
}

impl StencilSystem {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn off_diagonal(&self) -> [f64; 2] {
        self.off
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    /// Replaces the right-hand side.
    pub fn with_rhs(mut self, rhs: Vec<f64>) -> Result<Self> {
        if rhs.len() != self.grid.len() {
            return Err(Error::LengthMismatch {
                expected: self.grid.len(),
                got: rhs.len(),
            });
        }
        self.log_rhs = rhs.iter().map(|&v| if v > 0.0 { v.ln() } else { f64::NEG_INFINITY }).collect();
        self.rhs = rhs;
        Ok(self)
    }

    fn row(&self, x: &[f64], i: usize, j: usize) -> f64 {
        let [n0, n1] = [self.grid.dims()[0], self.grid.dims()[1]];
        let k = i * n1 + j;
        let mut acc = self.diag[k] * x[k];
        if i > 0 {
            acc += self.off[0] * x[k - n1];
        }
        if i + 1 < n0 {
            acc += self.off[0] * x[k + n1];
        }
        if j > 0 {
            acc += self.off[1] * x[k - 1];
        }
        if j + 1 < n1 {
            acc += self.off[1] * x[k + 1];
        }
        acc
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        let n1 = self.grid.dims()[1];
        #[cfg(feature = "parallel")]
        y.par_chunks_mut(n1).enumerate().for_each(|(i, out)| {
            for (j, v) in out.iter_mut().enumerate() {
                *v = self.row(x, i, j);
            }
        });
        #[cfg(not(feature = "parallel"))]
        for (i, out) in y.chunks_mut(n1).enumerate() {
            for (j, v) in out.iter_mut().enumerate() {
                *v = self.row(x, i, j);
            }
        }
    }

    /// Dense row-major copy of `A`, for small grids.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.grid.len();
        let mut e = vec![0.0; n];
        let mut col = vec![0.0; n];
        let mut a = vec![vec![0.0; n]; n];
        for c in 0..n {
            e[c] = 1.0;
            self.matvec(&e, &mut col);
            for r in 0..n {
                a[r][c] = col[r];
            }
            e[c] = 0.0;
        }
        a
    }
}

/// Output of [`solve_cg`].
#[derive(Clone, Debug)]
pub struct CgOutcome {
    pub phi: ScalarField,
    pub iterations: usize,
    /// Final `|b - A x| / |b|`, recomputed from `x`.
    pub residual: f64,
    /// Relative residual of the recurrence after each iteration.
    pub history: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Jacobi-preconditioned conjugate gradients to `|b - A x| / |b| <= tol`.
pub fn solve_cg(sys: &StencilSystem, tol: f64, max_iter: usize) -> Result<CgOutcome> {
    if !(tol > 0.0) {
        return Err(Error::param("tol", format!("{tol} must be positive")));
    }
    let n = sys.grid.len();
    let b = &sys.rhs;
    let bnorm = dot(b, b).sqrt();
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(CgOutcome {
            phi: ScalarField::new(sys.grid.clone(), x)?,
            iterations: 0,
            residual: 0.0,
            history: Vec::new(),
        });
    }
    let inv_d: Vec<f64> = sys.diag.iter().map(|d| 1.0 / d).collect();
    let mut r = b.clone();
    let mut z: Vec<f64> = r.iter().zip(&inv_d).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut rel = 1.0;
    while rel > tol {
        if iterations == max_iter {
            return Err(Error::NotConverged {
                iterations,
                residual: rel,
            });
        }
        sys.matvec(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        iterations += 1;
        rel = dot(&r, &r).sqrt() / bnorm;
        history.push(rel);
        for k in 0..n {
            z[k] = r[k] * inv_d[k];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
    }
    sys.matvec(&x, &mut ap);
    let true_res = ap.iter().zip(b).map(|(a, b)| (b - a).powi(2)).sum::<f64>().sqrt() / bnorm;
    Ok(CgOutcome {
        phi: ScalarField::new(sys.grid.clone(), x)?,
        iterations,
        residual: true_res,
        history,
    })
}

/// Output of [`solve_log_gauss_seidel`].
#[derive(Clone, Debug)]
pub struct LogSolveOutcome {
    /// `log phi`; `-inf` where `phi` is exactly zero (unreachable nodes).
    pub log_phi: Vec<f64>,
    /// Gauss-Seidel sweeps, or Krylov iterations for [`solve_rescaled`].
    pub sweeps: usize,
    /// Largest change of `log phi` in the final sweep.
    pub last_change: f64,
}

/// Gauss-Seidel on `phi_i = (b_i - sum_j a_ij phi_j) / a_ii` evaluated on
/// `log phi` with log-sum-exp, cycling through the four sweep orderings.
/// All terms are positive, so there is no cancellation. Stops when no entry
/// of `log phi` moves by more than `tol`.
pub fn solve_log_gauss_seidel(sys: &StencilSystem, tol: f64, max_sweeps: usize) -> Result<LogSolveOutcome> {
    if !(tol > 0.0) {
        return Err(Error::param("tol", format!("{tol} must be positive")));
    }
    if sys.rhs.iter().any(|&v| v < 0.0) {
        return Err(Error::param(
            "solver",
            "log-domain Gauss-Seidel needs a nonnegative right-hand side",
        ));
    }
    let mut gs = LogSweeper::new(sys);
    let mut l = vec![f64::NEG_INFINITY; sys.diag.len()];
    let mut sweeps = 0;
    loop {
        let change = gs.sweep(&mut l, sweeps);
        sweeps += 1;
        // a full cycle of orderings must pass without change before stopping
        if change <= tol && sweeps >= 4 {
            return Ok(LogSolveOutcome {
                log_phi: l,
                sweeps,
                last_change: change,
            });
        }
        if sweeps >= max_sweeps {
            return Err(Error::NotConverged {
                iterations: sweeps,
                residual: change,
            });
        }
    }
}

/// One Gauss-Seidel pass on `log phi` per call; needs `b >= 0`.
struct LogSweeper<'a> {
    sys: &'a StencilSystem,
    log_c: [f64; 2],
    log_d: Vec<f64>,
}

impl<'a> LogSweeper<'a> {
    fn new(sys: &'a StencilSystem) -> Self {
        Self {
            sys,
            log_c: [(-sys.off[0]).ln(), (-sys.off[1]).ln()],
            log_d: sys.diag.iter().map(|d| d.ln()).collect(),
        }
    }

    /// Sweeps in ordering `order % 4` and returns the largest change.
    fn sweep(&mut self, l: &mut [f64], order: usize) -> f64 {
        const ORDERS: [(bool, bool); 4] = [(false, false), (true, true), (true, false), (false, true)];
        let sys = self.sys;
        let log_c = self.log_c;
        let [n0, n1] = [sys.grid.dims()[0], sys.grid.dims()[1]];
        let (rev0, rev1) = ORDERS[order % 4];
        let mut terms = [0.0_f64; 5];
        let mut change = 0.0_f64;
        for a in 0..n0 {
            let i = if rev0 { n0 - 1 - a } else { a };
            for b in 0..n1 {
                let j = if rev1 { n1 - 1 - b } else { b };
                let k = i * n1 + j;
                let mut m = 0;
                let mut push = |v: f64| {
                    if v > f64::NEG_INFINITY {
                        terms[m] = v;
                        m += 1;
                    }
                };
                push(sys.log_rhs[k]);
                if i > 0 {
                    push(log_c[0] + l[k - n1]);
                }
                if i + 1 < n0 {
                    push(log_c[0] + l[k + n1]);
                }
                if j > 0 {
                    push(log_c[1] + l[k - 1]);
                }
                if j + 1 < n1 {
                    push(log_c[1] + l[k + 1]);
                }
                if m == 0 {
                    continue;
                }
                let top = terms[..m].iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let sum: f64 = terms[..m].iter().map(|t| (t - top).exp()).sum();
                let new = top + sum.ln() - self.log_d[k];
                let old = l[k];
                let delta = if old == f64::NEG_INFINITY { f64::INFINITY } else { (new - old).abs() };
                change = change.max(delta);
                l[k] = new;
            }
        }
        change
    }
}

/// Initial estimate of `-log phi`: fast sweeping with the per-cell decay rate
/// of the discrete operator, seeded with `-log(b_i / d_i)` wherever `b_i > 0`.
fn initial_potential(sys: &StencilSystem) -> Vec<f64> {
    let [n0, n1] = [sys.grid.dims()[0], sys.grid.dims()[1]];
    let [h0, h1] = [sys.grid.spacing()[0], sys.grid.spacing()[1]];
    let c = [-sys.off[0], -sys.off[1]];
    let cost: Vec<f64> = sys
        .diag
        .iter()
        .map(|&d| {
            let m = (d - 2.0 * c[0] - 2.0 * c[1]).max(f64::MIN_POSITIVE);
            0.5 * ((1.0 + m / (2.0 * c[0])).acosh() / h0 + (1.0 + m / (2.0 * c[1])).acosh() / h1)
        })
        .collect();
    let mut u: Vec<f64> = sys
        .rhs
        .iter()
        .zip(&sys.diag)
        .map(|(&b, &d)| if b > 0.0 { -(b / d).ln() } else { f64::INFINITY })
        .collect();
    let free = vec![false; u.len()];
    super::sweep::sweep_in_place(&mut u, &free, &cost, [n0, n1], [h0, h1], 4, 0.0);
    u
}

/// `phi = exp(-u) psi` turns `A phi = b` into `(I - M) psi = r` with
/// `M_ij = (c_ij / d_i) exp(u_i - u_j)`, which is well scaled when `u` is
/// close to `-log phi`.
struct Rescaled {
    n1: usize,
    /// Neighbour weights: up, down, left, right.
    m: [Vec<f64>; 4],
}

impl Rescaled {
    fn new(sys: &StencilSystem, u: &[f64]) -> Self {
        let [n0, n1] = [sys.grid.dims()[0], sys.grid.dims()[1]];
        let n = n0 * n1;
        let c = [-sys.off[0], -sys.off[1]];
        let mut m = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        let w = |k: usize, j: usize, c: f64| c / sys.diag[k] * (u[k] - u[j]).min(700.0).exp();
        for i in 0..n0 {
            for j in 0..n1 {
                let k = i * n1 + j;
                if i > 0 {
                    m[0][k] = w(k, k - n1, c[0]);
                }
                if i + 1 < n0 {
                    m[1][k] = w(k, k + n1, c[0]);
                }
                if j > 0 {
                    m[2][k] = w(k, k - 1, c[1]);
                }
                if j + 1 < n1 {
                    m[3][k] = w(k, k + 1, c[1]);
                }
            }
        }
        Self { n1, m }
    }

    /// `y = (I - M) x`
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n1 = self.n1;
        let n0 = x.len() / n1;
        let [up, down, left, right] = &self.m;
        for i in 0..n0 {
            let row = i * n1..(i + 1) * n1;
            let (xr, yr) = (&x[row.clone()], &mut y[row.clone()]);
            for j in 0..n1 {
                let k = i * n1 + j;
                let mut acc = xr[j];
                if j > 0 {
                    acc -= left[k] * xr[j - 1];
                }
                if j + 1 < n1 {
                    acc -= right[k] * xr[j + 1];
                }
                yr[j] = acc;
            }
            if i > 0 {
                let xa = &x[(i - 1) * n1..i * n1];
                for j in 0..n1 {
                    yr[j] -= up[i * n1 + j] * xa[j];
                }
            }
            if i + 1 < n0 {
                let xb = &x[(i + 1) * n1..(i + 2) * n1];
                for j in 0..n1 {
                    yr[j] -= down[i * n1 + j] * xb[j];
                }
            }
        }
    }
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// BiCGSTAB from `x`, stopping once the max-norm residual is below `tol`.
/// Returns the iterations used.
fn bicgstab(op: &Rescaled, rhs: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> (usize, f64) {
    let n = rhs.len();
    let mut r = vec![0.0; n];
    op.apply(x, &mut r);
    for k in 0..n {
        r[k] = rhs[k] - r[k];
    }
    let mut res = max_abs(&r);
    if res <= tol {
        return (0, res);
    }
    let mut r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut p = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut t = vec![0.0; n];
    for it in 1..=max_iter {
        let rho_new = dot(&r_hat, &r);
        if rho_new == 0.0 || omega == 0.0 {
            // breakdown: restart the shadow residual
            r_hat.copy_from_slice(&r);
            p.iter_mut().for_each(|e| *e = 0.0);
            v.iter_mut().for_each(|e| *e = 0.0);
            rho = 1.0;
            alpha = 1.0;
            omega = 1.0;
            continue;
        }
        let beta = rho_new / rho * (alpha / omega);
        rho = rho_new;
        for k in 0..n {
            p[k] = r[k] + beta * (p[k] - omega * v[k]);
        }
        op.apply(&p, &mut v);
        let rv = dot(&r_hat, &v);
        if rv == 0.0 {
            omega = 0.0;
            continue;
        }
        alpha = rho / rv;
        for k in 0..n {
            s[k] = r[k] - alpha * v[k];
        }
        if max_abs(&s) <= tol {
            for k in 0..n {
                x[k] += alpha * p[k];
            }
            return (it, max_abs(&s));
        }
        op.apply(&s, &mut t);
        let tt = dot(&t, &t);
        omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
        for k in 0..n {
            x[k] += alpha * p[k] + omega * s[k];
            r[k] = s[k] - omega * t[k];
        }
        res = max_abs(&r);
        if res <= tol {
            return (it, res);
        }
    }
    (max_iter, res)
}

const MAX_OUTER: usize = 40;

/// Solves for `log phi` by repeated BiCGSTAB on the system rescaled by the
/// current estimate `u` of `-log phi`, updating `u <- u - log psi` after each
/// solve. Relative accuracy is uniform however far `phi` decays. Stops when an
/// update moves no entry of `log phi` by more than `tol`; `max_iter` bounds
/// the total Krylov iterations.
pub fn solve_rescaled(sys: &StencilSystem, tol: f64, max_iter: usize) -> Result<LogSolveOutcome> {
    if !(tol > 0.0) {
        return Err(Error::param("tol", format!("{tol} must be positive")));
    }
    let n = sys.diag.len();
    if sys.rhs.iter().all(|&b| b <= 0.0) {
        return Err(Error::param("solver", "the rescaled solver needs a positive right-hand side entry"));
    }
    let mut u = initial_potential(sys);
    if let Some(k) = u.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index: k, value: u[k] });
    }
    // Gauss-Seidel settles the strongly screened regions the eikonal
    // estimate gets wrong; the Krylov solves handle the smooth remainder
    let mut smoother = sys.rhs.iter().all(|&b| b >= 0.0).then(|| LogSweeper::new(sys));
    let smooth = |u: &mut Vec<f64>, smoother: &mut Option<LogSweeper>, passes: usize| {
        if let Some(gs) = smoother {
            u.iter_mut().for_each(|v| *v = -*v);
            for o in 0..passes {
                gs.sweep(u, o);
            }
            u.iter_mut().for_each(|v| *v = -*v);
        }
    };
    smooth(&mut u, &mut smoother, 8);
    let final_tol = (0.01 * tol).max(1e-14);
    let mut used = 0;
    let mut change = f64::INFINITY;
    let mut psi = vec![1.0; n];
    let mut rhs = vec![0.0; n];
    for _ in 0..MAX_OUTER {
        let op = Rescaled::new(sys, &u);
        for k in 0..n {
            let b = sys.rhs[k];
            rhs[k] = if b == 0.0 {
                0.0
            } else {
                b.signum() * ((b.abs() / sys.diag[k]).ln() + u[k]).min(700.0).exp()
            };
        }
        psi.iter_mut().for_each(|e| *e = 1.0);
        let inner_tol = final_tol;
        let (it, _) = bicgstab(&op, &rhs, &mut psi, inner_tol, max_iter - used);
        used += it;
        // entries below the solve's accuracy are only pushed down by it
        let floor = 10.0 * inner_tol;
        change = 0.0;
        for k in 0..n {
            let step = -psi[k].max(floor).ln();
            change = change.max(step.abs());
            u[k] += step;
        }
        if change <= tol && inner_tol <= final_tol {
            return Ok(LogSolveOutcome {
                log_phi: u.into_iter().map(|v| -v).collect(),
                sweeps: used,
                last_change: change,
            });
        }
        if used >= max_iter {
            break;
        }
        if change > 1.0 {
            smooth(&mut u, &mut smoother, 2);
        }
    }
    Err(Error::NotConverged {
        iterations: used,
        residual: change,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum LinearSolver {
    /// Conjugate gradients unless `phi` is expected to span more than
    /// [`AUTO_LOG_RANGE`] e-folds, then [`LinearSolver::Rescaled`].
    #[default]
    Auto,
    ConjugateGradient,
    /// [`solve_log_gauss_seidel`]; exact in relative terms but slow when the
    /// screening length spans many cells.
    LogGaussSeidel,
    /// [`solve_rescaled`].
    Rescaled,
}

/// Expected `log phi` range above which [`LinearSolver::Auto`] leaves CG,
/// whose absolute accuracy cannot resolve the far field.
pub const AUTO_LOG_RANGE: f64 = 18.0;

/// `max_x f_max * dist(x, nearest seed) / hbar`, the e-folds `phi` decays by.
pub fn expected_log_range(f: &ScalarField, sources: &SourceSet, hbar: f64) -> f64 {
    let grid = f.grid();
    let pts = sources.world_points(grid);
    let mut far = 0.0_f64;
    for k in 0..grid.len() {
        let [x, y] = grid.world(grid.unflat(k));
        let d = pts
            .iter()
            .map(|p| (x - p[0]).hypot(y - p[1]))
            .fold(f64::INFINITY, f64::min);
        far = far.max(d);
    }
    f.max() * far / hbar
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SparseConfig {
    pub hbar: f64,
    /// Relative residual for CG, largest `log phi` change for Gauss-Seidel.
    pub tol: f64,
    pub max_iter: usize,
    pub solver: LinearSolver,
    pub assemble: AssembleOptions,
    /// Shift `S*` by a constant so that it matches the seed heights on average.
    pub anchor: bool,
}

impl SparseConfig {
    pub fn new(hbar: f64) -> Self {
        Self {
            hbar,
            tol: 1e-10,
            max_iter: 100_000,
            solver: LinearSolver::Auto,
            assemble: AssembleOptions::default(),
            anchor: true,
        }
    }
}

/// Assemble, solve, and return `S* = -hbar log phi`.
pub fn sparse_eikonal(f: &ScalarField, sources: &SourceSet, cfg: &SparseConfig) -> Result<SolveReport> {
    let start = Instant::now();
    let sys = assemble_with(f, sources, cfg.hbar, cfg.assemble)?;
    let grid = f.grid().clone();
    let h_min = sources.values().iter().copied().fold(f64::INFINITY, f64::min);
    let mut warnings = Vec::new();
    let solver = match cfg.solver {
        LinearSolver::Auto if expected_log_range(f, sources, cfg.hbar) > AUTO_LOG_RANGE => LinearSolver::Rescaled,
        LinearSolver::Auto => LinearSolver::ConjugateGradient,
        other => other,
    };
    let (mut s, phi, floored, iterations, residual) = match solver {
        LinearSolver::Auto => unreachable!("resolved above"),
        LinearSolver::ConjugateGradient => {
            let out = solve_cg(&sys, cfg.tol, cfg.max_iter)?;
            let negative = out.phi.values().iter().filter(|&&v| v < 0.0).count();
            if negative > 0 {
                warnings.push(format!("{negative} nodes solved to negative phi; tighten the tolerance"));
            }
            let mut phi = out.phi.into_values();
            let (s, floored) = log_transform(&mut phi, cfg.hbar, h_min)?;
            (s, phi, floored, out.iterations, out.residual)
        }
        LinearSolver::LogGaussSeidel | LinearSolver::Rescaled => {
            let out = if solver == LinearSolver::Rescaled {
                solve_rescaled(&sys, cfg.tol, cfg.max_iter)?
            } else {
                solve_log_gauss_seidel(&sys, cfg.tol, cfg.max_iter)?
            };
            let mut floored = Vec::new();
            let mut s = Vec::with_capacity(out.log_phi.len());
            for (k, &l) in out.log_phi.iter().enumerate() {
                if l == f64::NEG_INFINITY {
                    floored.push(k);
                    s.push(-cfg.hbar * PHI_FLOOR.ln() + h_min);
                } else {
                    s.push(-cfg.hbar * l + h_min);
                }
            }
            if floored.len() == s.len() {
                return Err(Error::Underflow);
            }
            // phi itself may not be representable; report it clamped
            let phi = out.log_phi.iter().map(|&l| l.exp().max(PHI_FLOOR)).collect();
            (s, phi, floored, out.sweeps, out.last_change)
        }
    };
    if !floored.is_empty() {
        warnings.push(format!("{} nodes fell below the positivity floor", floored.len()));
    }
    if cfg.anchor {
        let idx = sources.flat_indices(&grid);
        let offset = idx
            .iter()
            .zip(sources.values())
            .map(|(&k, &h)| h - s[k])
            .sum::<f64>()
            / idx.len() as f64;
        for v in &mut s {
            *v += offset;
        }
    }
    let s_star = ScalarField::new(grid.clone(), s)?;
    let mut rep = SolveReport::new(Backend::Sparse, s_star);
    if grid.dims().iter().all(|&n| n >= 3) {
        rep.viscosity_residual_rms = viscosity_residual_rms(&rep.s_star, f, cfg.hbar, sources, ResidualMask::default())
            .ok()
            .filter(|v| v.is_finite());
    }
    rep.phi = Some(ScalarField::new(grid, phi)?);
    rep.hbar = Some(cfg.hbar);
    rep.floored = floored;
    rep.solver_iterations = Some(iterations);
    rep.solver_residual = Some(residual);
    rep.warnings = warnings;
    rep.wall_time = start.elapsed();
    Ok(rep)
}
