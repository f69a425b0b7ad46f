//! Green's functions of `-hbar^2 lap + ftilde^2` and grid convolution.
//!
//! The exact kernels are
//!
//! * 1D: `exp(-ftilde r / hbar) / (2 hbar ftilde)`
//! * 2D: `K0(ftilde r / hbar) / (2 pi hbar^2)`
//! * 3D: `exp(-ftilde r / hbar) / (4 pi hbar^2 r)`
//!
//! and the modified kernel `exp(-ftilde r / hbar)` drops the prefactors, which
//! only shift `-hbar log phi` by a constant that vanishes with `hbar`.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use crate::bessel;
use crate::error::{Error, Result};
use crate::fft::{next_fast_len, Fft2};
use crate::field::{GridSpec, ScalarField};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelParams {
    hbar: f64,
    f_const: f64,
    dimension: usize,
}

impl KernelParams {
    pub fn new(hbar: f64, f_const: f64, dimension: usize) -> Result<Self> {
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::param("hbar", format!("{hbar} must be positive")));
        }
        if !(f_const > 0.0 && f_const.is_finite()) {
            return Err(Error::param("ftilde", format!("{f_const} must be positive")));
        }
        if !(1..=3).contains(&dimension) {
            return Err(Error::param("dimension", format!("{dimension} is not 1, 2 or 3")));
        }
        Ok(Self {
            hbar,
            f_const,
            dimension,
        })
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn f_const(&self) -> f64 {
        self.f_const
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    fn expect_dim(&self, d: usize) -> Result<()> {
        if self.dimension != d {
            return Err(Error::WrongDimension {
                expected: d,
                got: self.dimension,
            });
        }
        Ok(())
    }
}

pub fn green_1d(r: f64, p: &KernelParams) -> Result<f64> {
    p.expect_dim(1)?;
    Ok((-p.f_const * r.abs() / p.hbar).exp() / (2.0 * p.hbar * p.f_const))
}

/// Exact 2D kernel. Singular at `r = 0`; see [`OriginRegularization`].
pub fn green_2d(r: f64, p: &KernelParams) -> Result<f64> {
    p.expect_dim(2)?;
    if r == 0.0 {
        return Err(Error::SingularKernel);
    }
    Ok(bessel::k0(p.f_const * r.abs() / p.hbar) / (2.0 * PI * p.hbar * p.hbar))
}

/// Large-argument form `exp(-z) / (2 hbar sqrt(2 pi hbar ftilde r))`, `z = ftilde r / hbar`.
pub fn green_2d_asymptotic(r: f64, p: &KernelParams) -> f64 {
    let z = p.f_const * r / p.hbar;
    (-z).exp() / (2.0 * p.hbar * (2.0 * PI * p.hbar * p.f_const * r).sqrt())
}

pub fn green_3d(r: f64, p: &KernelParams) -> Result<f64> {
    p.expect_dim(3)?;
    if r == 0.0 {
        return Err(Error::SingularKernel);
    }
    Ok((-p.f_const * r / p.hbar).exp() / (4.0 * PI * p.hbar * p.hbar * r))
}

/// `exp(-ftilde r / hbar)`, the exact kernel with its prefactor set to one.
pub fn modified_green(r: f64, p: &KernelParams) -> f64 {
    (-p.f_const * r.abs() / p.hbar).exp()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelKind {
    Modified,
    Exact,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConvMode {
    /// Both inputs zero-padded, no wraparound.
    ZeroPaddedLinear,
    /// Periodic FFT convolution on the grid itself.
    Circular,
    /// Spatial-domain summation, `O(N^2)`. Keeps full relative precision in
    /// the far field where FFT round-off swamps exponentially small values.
    Direct,
}

/// How the exact 2D/3D kernel is sampled at the zero offset.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OriginRegularization {
    /// Evaluate at `r = spacing / 2`.
    HalfCell,
    /// Use this value at the origin.
    FiniteCap(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvPolicy {
    pub mode: ConvMode,
    pub origin: OriginRegularization,
}

impl Default for ConvPolicy {
    fn default() -> Self {
        Self {
            mode: ConvMode::ZeroPaddedLinear,
            origin: OriginRegularization::HalfCell,
        }
    }
}

impl ConvPolicy {
    pub fn validate(&self) -> Result<()> {
        if let OriginRegularization::FiniteCap(c) = self.origin {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::param("origin cap", format!("{c} must be positive and finite")));
            }
        }
        Ok(())
    }
}

/// Extent of a sampled kernel.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelSupport {
    /// Same node count as the grid, centered on the grid's center node.
    Grid,
    /// Every offset between two grid nodes: `2n - 1` per axis.
    AllOffsets,
}

/// Samples a radial kernel on an offset grid whose center node is offset zero.
///
/// The returned field's grid has the input spacing and an origin placing the
/// center node (index `dims / 2`) at world coordinate 0.
pub fn kernel_field(
    grid: &GridSpec,
    p: &KernelParams,
    which: KernelKind,
    policy: &ConvPolicy,
    support: KernelSupport,
) -> Result<ScalarField> {
    policy.validate()?;
    if which == KernelKind::Exact && p.dimension() != grid.ndim() {
        return Err(Error::WrongDimension {
            expected: grid.ndim(),
            got: p.dimension(),
        });
    }
    let dims: Vec<usize> = grid
        .dims()
        .iter()
        .map(|&n| match support {
            KernelSupport::Grid => n,
            KernelSupport::AllOffsets => 2 * n - 1,
        })
        .collect();
    let origin: Vec<f64> = dims
        .iter()
        .zip(grid.spacing())
        .map(|(&n, &h)| -((n / 2) as f64) * h)
        .collect();
    let kgrid = GridSpec::new(dims, origin, grid.spacing().to_vec())?;
    let cell = grid.spacing().iter().copied().fold(f64::INFINITY, f64::min);
    let eval = |r: f64| -> Result<f64> {
        match which {
            KernelKind::Modified => Ok(modified_green(r, p)),
            KernelKind::Exact => {
                if r == 0.0 && p.dimension() > 1 {
                    return match policy.origin {
                        OriginRegularization::HalfCell => exact_green(0.5 * cell, p),
                        OriginRegularization::FiniteCap(c) => Ok(c),
                    };
                }
                exact_green(r, p)
            }
        }
    };
    let values = (0..kgrid.len())
        .map(|k| {
            // offsets from the centre node, so the field is exactly symmetric
            let idx = kgrid.unflat(k);
            let x = (idx[0] as f64 - (kgrid.dims()[0] / 2) as f64) * kgrid.spacing()[0];
            let y = if kgrid.ndim() == 2 {
                (idx[1] as f64 - (kgrid.dims()[1] / 2) as f64) * kgrid.spacing()[1]
            } else {
                0.0
            };
            eval(x.hypot(y))
        })
        .collect::<Result<Vec<_>>>()?;
    ScalarField::new(kgrid, values)
}

/// The exact kernel for `p.dimension()`.
pub fn exact_green(r: f64, p: &KernelParams) -> Result<f64> {
    match p.dimension() {
        1 => green_1d(r, p),
        2 => green_2d(r, p),
        _ => green_3d(r, p),
    }
}

/// Convolution with a fixed kernel; the kernel spectrum is computed once.
///
/// Computes `out[x] = sum_y a[y] k[x - y + c]` with `c` the kernel's center
/// index, optionally times the cell measure.
pub struct Convolver {
    grid: GridSpec,
    mode: ConvMode,
    kdims: [usize; 2],
    kcenter: [usize; 2],
    kernel: Vec<f64>,
    scale: f64,
    // plan, kernel spectrum, padded row length
    fft: Option<(Fft2, Vec<Complex64>, usize)>,
}

impl Convolver {
    pub fn new(grid: &GridSpec, kernel: &ScalarField, mode: ConvMode, scale_by_cell: bool) -> Result<Self> {
        let kg = kernel.grid();
        if kg.ndim() != grid.ndim() {
            return Err(Error::GridMismatch(format!(
                "{}D kernel for a {}D grid",
                kg.ndim(),
                grid.ndim()
            )));
        }
        let n = [grid.dims()[0], grid.cols()];
        let kdims = [kg.dims()[0], kg.cols()];
        if mode == ConvMode::Circular && kdims != n {
            return Err(Error::GridMismatch(
                "circular convolution needs a kernel with the grid's node count".into(),
            ));
        }
        let kcenter = [kdims[0] / 2, kdims[1] / 2];
        let scale = if scale_by_cell { grid.cell_measure() } else { 1.0 };
        let kernel_vals = kernel.values().to_vec();
        let fft = match mode {
            ConvMode::Direct => None,
            ConvMode::Circular => {
                let plan = Fft2::new(n[0], n[1]);
                let mut spec = vec![Complex64::new(0.0, 0.0); plan.len()];
                for m0 in 0..n[0] {
                    for m1 in 0..n[1] {
                        let s0 = (m0 + kcenter[0]) % n[0];
                        let s1 = (m1 + kcenter[1]) % n[1];
                        spec[m0 * n[1] + m1].re = kernel_vals[s0 * kdims[1] + s1];
                    }
                }
                plan.forward(&mut spec);
                Some((plan, spec, n[1]))
            }
            ConvMode::ZeroPaddedLinear => {
                let pad = [
                    next_fast_len(n[0] + kdims[0] - 1),
                    if n[1] == 1 { 1 } else { next_fast_len(n[1] + kdims[1] - 1) },
                ];
                let plan = Fft2::new(pad[0], pad[1]);
                let mut spec = vec![Complex64::new(0.0, 0.0); plan.len()];
                for m0 in 0..kdims[0] {
                    for m1 in 0..kdims[1] {
                        spec[m0 * pad[1] + m1].re = kernel_vals[m0 * kdims[1] + m1];
                    }
                }
                plan.forward(&mut spec);
                Some((plan, spec, pad[1]))
            }
        };
        Ok(Self {
            grid: grid.clone(),
            mode,
            kdims,
            kcenter,
            kernel: kernel_vals,
            scale,
            fft,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn apply(&self, a: &ScalarField) -> Result<ScalarField> {
        self.grid.ensure_same(a.grid())?;
        let out = match self.mode {
            ConvMode::Direct => self.apply_direct(a.values()),
            ConvMode::Circular | ConvMode::ZeroPaddedLinear => self.apply_fft(a.values())?,
        };
        ScalarField::new(self.grid.clone(), out)
    }

    fn apply_fft(&self, a: &[f64]) -> Result<Vec<f64>> {
        let (plan, spec, pcols) = self.fft.as_ref().expect("fft mode has a plan");
        let pcols = *pcols;
        let n = [self.grid.dims()[0], self.grid.cols()];
        let mut buf = vec![Complex64::new(0.0, 0.0); plan.len()];
        for i in 0..n[0] {
            for j in 0..n[1] {
                buf[i * pcols + j].re = a[i * n[1] + j];
            }
        }
        plan.forward(&mut buf);
        for (b, s) in buf.iter_mut().zip(spec) {
            *b *= s;
        }
        plan.inverse(&mut buf);
        let (shift0, shift1) = match self.mode {
            ConvMode::ZeroPaddedLinear => (self.kcenter[0], self.kcenter[1]),
            _ => (0, 0),
        };
        let mut out = vec![0.0; n[0] * n[1]];
        let (mut max_re, mut max_im) = (0.0_f64, 0.0_f64);
        for i in 0..n[0] {
            for j in 0..n[1] {
                let v = buf[(i + shift0) * pcols + j + shift1];
                out[i * n[1] + j] = v.re * self.scale;
                max_re = max_re.max(v.re.abs());
                max_im = max_im.max(v.im.abs());
            }
        }
        if max_re > 0.0 && max_im > 1e-9 * max_re {
            return Err(Error::ImaginaryResidue {
                ratio: max_im / max_re,
            });
        }
        Ok(out)
    }

    fn apply_direct(&self, a: &[f64]) -> Vec<f64> {
        let n = [self.grid.dims()[0], self.grid.cols()];
        let [k0, k1] = self.kdims;
        let [c0, c1] = self.kcenter;
        let mut out = vec![0.0; n[0] * n[1]];
        for y0 in 0..n[0] {
            for y1 in 0..n[1] {
                let w = a[y0 * n[1] + y1];
                if w == 0.0 {
                    continue;
                }
                // kernel index t = x - y + c must land in [0, k)
                let x0_lo = y0.saturating_sub(c0);
                let x0_hi = (y0 + k0 - c0).min(n[0]);
                let x1_lo = y1.saturating_sub(c1);
                let x1_hi = (y1 + k1 - c1).min(n[1]);
                for x0 in x0_lo..x0_hi {
                    let t0 = x0 + c0 - y0;
                    let krow = &self.kernel[t0 * k1..(t0 + 1) * k1];
                    let orow = &mut out[x0 * n[1]..(x0 + 1) * n[1]];
                    for x1 in x1_lo..x1_hi {
                        orow[x1] += w * krow[x1 + c1 - y1];
                    }
                }
            }
        }
        for v in &mut out {
            *v *= self.scale;
        }
        out
    }
}

/// One-shot convolution of `a` with a centered `kernel` (see [`Convolver`]).
pub fn convolve(a: &ScalarField, kernel: &ScalarField, policy: &ConvPolicy, scale_by_cell: bool) -> Result<ScalarField> {
    policy.validate()?;
    Convolver::new(a.grid(), kernel, policy.mode, scale_by_cell)?.apply(a)
}
