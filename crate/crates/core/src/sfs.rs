//! Shape from shading under overhead Lambertian light.
//!
//! With light along the viewing axis the luminance of a height field `S` is
//! `P = 1 / sqrt(|grad S|^2 + 1)`, so `|grad S| = sqrt(1/P^2 - 1)` is an
//! eikonal equation for the height, seeded with known heights.

use crate::error::{Error, Result};
use crate::field::{gradient_magnitude, ScalarField, SourceSet};
use crate::io::GrayImage;
use crate::perturb::{scaled_solve, PerturbConfig};
use crate::report::SolveReport;
use crate::sparse::{sparse_eikonal, SparseConfig};

/// Luminance below this is raised to it before inversion.
pub const P_MIN: f64 = 0.05;
/// Forcing where the surface faces the light (`P = 1`).
pub const F_FLOOR: f64 = 1e-3;

/// Luminance values clamped into `[P_MIN, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LuminanceImage {
    p: ScalarField,
}

impl LuminanceImage {
    pub fn new(p: ScalarField) -> Result<Self> {
        Ok(Self {
            p: p.map(|v| v.clamp(P_MIN, 1.0))?,
        })
    }

    /// Pixel level divided by maxval, one node per pixel with unit spacing.
    pub fn from_image(img: &GrayImage) -> Result<Self> {
        let values = img.pixels.iter().map(|&v| v as f64 / img.maxval as f64).collect();
        Self::new(ScalarField::new(img.pixel_grid()?, values)?)
    }

    pub fn field(&self) -> &ScalarField {
        &self.p
    }

    /// 8-bit raster of the luminance.
    pub fn to_image(&self) -> Result<GrayImage> {
        let g = self.p.grid();
        g.ensure_2d()?;
        let pixels = self.p.values().iter().map(|v| (v * 255.0).round() as u16).collect();
        GrayImage::new(g.dims()[1], g.dims()[0], 255, pixels)
    }
}

/// `f = sqrt(1/P^2 - 1)`, raised to [`F_FLOOR`].
pub fn sfs_forcing(p: &LuminanceImage) -> Result<ScalarField> {
    p.p.map(|v| (1.0 / (v * v) - 1.0).max(0.0).sqrt().max(F_FLOOR))
}

/// Luminance of a height field from central-difference gradients.
pub fn render_lambertian(s: &ScalarField) -> Result<LuminanceImage> {
    let g = gradient_magnitude(s)?;
    LuminanceImage::new(g.map(|m| 1.0 / (m * m + 1.0).sqrt())?)
}

/// Mean over nodes at least one cell from the edge of `| |grad a| - |grad b| |`.
pub fn gradient_error(estimate: &ScalarField, truth: &ScalarField) -> Result<f64> {
    let ga = gradient_magnitude(estimate)?;
    let gb = gradient_magnitude(truth)?;
    ga.grid().ensure_2d()?;
    ga.grid().ensure_same(gb.grid())?;
    let [n0, n1] = [ga.grid().dims()[0], ga.grid().dims()[1]];
    let (mut acc, mut n) = (0.0, 0usize);
    for i in 1..n0 - 1 {
        for j in 1..n1 - 1 {
            acc += (ga.at([i, j]) - gb.at([i, j])).abs();
            n += 1;
        }
    }
    Ok(acc / n as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub enum SfsBackend {
    Perturb(PerturbConfig),
    Sparse(SparseConfig),
}

/// Height field from luminance and seed heights. The seed heights enter as
/// source weights `exp(-h_k / hbar)`.
pub fn sfs_reconstruct(
    p: &LuminanceImage,
    seeds: &SourceSet,
    backend: &SfsBackend,
    truth: Option<&ScalarField>,
) -> Result<SolveReport> {
    if seeds.is_empty() {
        return Err(Error::InvalidSources("shape from shading needs a seed".into()));
    }
    let f = sfs_forcing(p)?;
    let mut report = match backend {
        SfsBackend::Perturb(cfg) => scaled_solve(&f, seeds, cfg)?,
        SfsBackend::Sparse(cfg) => sparse_eikonal(&f, seeds, cfg)?,
    };
    if let Some(t) = truth {
        report.gradient_error = Some(gradient_error(&report.s_star, t)?);
    }
    Ok(report)
}
