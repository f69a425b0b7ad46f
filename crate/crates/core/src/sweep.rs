//! Fast sweeping with the Godunov upwind update.

use crate::error::{Error, Result};
use crate::field::{ScalarField, SourceSet};
use crate::perturb::ensure_positive;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepConfig {
    /// Full passes over the four sweep orderings.
    pub sweeps: usize,
    /// Stop early once a pass changes no node by more than this.
    pub convergence_tol: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            sweeps: 15,
            convergence_tol: 0.0,
        }
    }
}

/// Solves `|grad S| = f` with `S = h_k` at the sources. One-dimensional
/// grids are treated as `n x 1`.
pub fn sweep_solve(f: &ScalarField, sources: &SourceSet, cfg: &SweepConfig) -> Result<ScalarField> {
    if cfg.sweeps == 0 {
        return Err(Error::param("sweeps", "must be at least 1"));
    }
    if !(cfg.convergence_tol >= 0.0) {
        return Err(Error::param("convergence_tol", "must be nonnegative"));
    }
    ensure_positive(f)?;
    let grid = f.grid();
    sources.validate(grid)?;
    let (n0, n1) = (grid.dims()[0], grid.cols());
    let h0 = grid.spacing()[0];
    let h1 = if grid.ndim() == 2 { grid.spacing()[1] } else { h0 };
    let fv = f.values();

    let mut s = vec![f64::INFINITY; grid.len()];
    let mut fixed = vec![false; grid.len()];
    for (k, &h) in sources.flat_indices(grid).iter().zip(sources.values()) {
        s[*k] = h;
        fixed[*k] = true;
    }

    sweep_in_place(&mut s, &fixed, fv, [n0, n1], [h0, h1], cfg.sweeps, cfg.convergence_tol);
    if let Some(k) = s.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index: k, value: s[k] });
    }
    ScalarField::new(grid.clone(), s)
}

/// Godunov passes over a row-major `n0 x n1` array. Nodes marked `fixed` keep
/// their value; every other node only ever decreases.
pub(crate) fn sweep_in_place(
    s: &mut [f64],
    fixed: &[bool],
    cost: &[f64],
    [n0, n1]: [usize; 2],
    [h0, h1]: [f64; 2],
    passes: usize,
    tol: f64,
) {
    let orders: [(bool, bool); 4] = [(false, false), (true, false), (true, true), (false, true)];
    for _ in 0..passes {
        let mut max_change = 0.0_f64;
        for &(rev0, rev1) in &orders {
            for a in 0..n0 {
                let i = if rev0 { n0 - 1 - a } else { a };
                for b in 0..n1 {
                    let j = if rev1 { n1 - 1 - b } else { b };
                    let k = i * n1 + j;
                    if fixed[k] {
                        continue;
                    }
                    let up = if i > 0 { s[k - n1] } else { f64::INFINITY };
                    let down = if i + 1 < n0 { s[k + n1] } else { f64::INFINITY };
                    let left = if j > 0 { s[k - 1] } else { f64::INFINITY };
                    let right = if j + 1 < n1 { s[k + 1] } else { f64::INFINITY };
                    let cand = godunov(up.min(down), left.min(right), cost[k], h0, h1);
                    if cand < s[k] {
                        if s[k].is_finite() {
                            max_change = max_change.max(s[k] - cand);
                        } else {
                            max_change = f64::INFINITY;
                        }
                        s[k] = cand;
                    }
                }
            }
        }
        if max_change <= tol {
            break;
        }
    }
}

/// Local solve of `((u - a)/h0)^2 + ((u - b)/h1)^2 = f^2` with upwind
/// neighbour values `a`, `b` (either may be infinite).
fn godunov(a: f64, b: f64, f: f64, h0: f64, h1: f64) -> f64 {
    let one_sided = (a + f * h0).min(b + f * h1);
    if !(a.is_finite() && b.is_finite()) || one_sided <= a.max(b) {
        return one_sided;
    }
    if h0 == h1 {
        let fd = f * h0;
        return 0.5 * (a + b + (2.0 * fd * fd - (a - b) * (a - b)).sqrt());
    }
    let (w0, w1) = (1.0 / (h0 * h0), 1.0 / (h1 * h1));
    let sw = w0 + w1;
    let m = w0 * a + w1 * b;
    let disc = m * m - sw * (w0 * a * a + w1 * b * b - f * f);
    (m + disc.max(0.0).sqrt()) / sw
}
