//! Browser demo: solve a fixture, plan a path through a small maze, and
//! recover a surface from its shading. Each entry point has a plain Rust
//! twin (`run_*`) so the logic is testable without a JavaScript host.

use eikonal_core::field::{percent_error, ScalarField, SourceSet};
use eikonal_core::io::GrayImage;
use eikonal_core::perturb::{scaled_solve, PerturbConfig};
use eikonal_core::plan::{backtrack, maze_to_forcing, BacktrackConfig, DEFAULT_HI, DEFAULT_LO, DEFAULT_THRESHOLD};
use eikonal_core::sfs::{gradient_error, render_lambertian, sfs_reconstruct, SfsBackend};
use eikonal_core::sparse::{sparse_eikonal, SparseConfig};
use eikonal_core::sweep::{sweep_solve, SweepConfig};
use eikonal_core::{fixtures, Error, Result};
use wasm_bindgen::prelude::*;

/// A 2D field for display, row-major, plus an optional path and a one-line summary.
#[wasm_bindgen]
#[derive(Clone, Debug)]
pub struct View {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    path: Vec<f64>,
    summary: String,
}

#[wasm_bindgen]
impl View {
    #[wasm_bindgen(getter)]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[wasm_bindgen(getter)]
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Field values, row-major.
    pub fn values(&self) -> Vec<f64> {
        self.values.clone()
    }

    /// Path as interleaved `row, col` pixel coordinates; empty when there is none.
    pub fn path(&self) -> Vec<f64> {
        self.path.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn summary(&self) -> String {
        self.summary.clone()
    }
}

impl View {
    /// `field` must be 2D, as every demo grid is.
    fn from_field(field: &ScalarField, summary: String) -> Self {
        Self {
            rows: field.grid().dims()[0],
            cols: field.grid().dims()[1],
            values: field.values().to_vec(),
            path: Vec::new(),
            summary,
        }
    }

    pub fn path_points(&self) -> Vec<[f64; 2]> {
        self.path.chunks_exact(2).map(|c| [c[0], c[1]]).collect()
    }
}

/// Solves a built-in fixture with the `perturb`, `sparse` or `sweep` backend.
pub fn run_fixture(name: &str, backend: &str) -> Result<View> {
    let fx = fixtures::by_name(name)?;
    let s = match backend {
        "perturb" => {
            let mut cfg = PerturbConfig::new(fx.hbar, fx.terms);
            cfg.tau = fx.tau;
            cfg.conv.mode = fx.conv_mode;
            scaled_solve(&fx.f, &fx.sources, &cfg)?.s_star
        }
        "sparse" => sparse_eikonal(&fx.f, &fx.sources, &SparseConfig::new(fx.hbar))?.s_star,
        "sweep" => sweep_solve(&fx.f, &fx.sources, &SweepConfig::default())?,
        other => return Err(Error::Parse(format!("unknown backend `{other}` (expected perturb, sparse or sweep)"))),
    };
    let summary = match &fx.reference {
        Some(r) => {
            let e = percent_error(&s, r, Some(&fx.sources))?;
            format!("{name} / {backend}: {:.3}% from the exact solution", e.percent)
        }
        None => format!("{name} / {backend}: S* from {:.4} to {:.4}", s.min(), s.max()),
    };
    Ok(View::from_field(&s, summary))
}

pub const MAZE_SIZE: usize = 48;
const MAZE_HBAR: f64 = 4.0;

/// Default 48 x 48 maze: three staggered walls, 0 = free, 255 = wall.
pub fn default_maze() -> Vec<u8> {
    let n = MAZE_SIZE;
    let mut px = vec![0u8; n * n];
    for (row, gap_left) in [(12, false), (24, true), (36, false)] {
        for r in row..row + 3 {
            for c in 0..n {
                let open = if gap_left { c < 8 } else { c >= n - 8 };
                if !open {
                    px[r * n + c] = 255;
                }
            }
        }
    }
    px
}

/// Shortest path from `start` to `source` (pixel `row, col`) through a
/// `size x size` maze, on the sparse backend.
pub fn run_maze(pixels: &[u8], size: usize, source: [usize; 2], start: [usize; 2]) -> Result<View> {
    let image = GrayImage::new(size, size, 255, pixels.iter().map(|&p| p as u16).collect())?;
    let cost = maze_to_forcing(&image, DEFAULT_LO, DEFAULT_HI, DEFAULT_THRESHOLD)?.with_cost_at(&[source], DEFAULT_LO)?;
    let sources = SourceSet::new(vec![source])?;
    let mut cfg = SparseConfig::new(MAZE_HBAR);
    cfg.tol = 1e-6;
    let s = sparse_eikonal(&cost.field, &sources, &cfg)?.s_star;
    let bt = BacktrackConfig {
        eps: 1.0,
        ..BacktrackConfig::for_spacing(1.0)
    };
    let path = backtrack(&s, [start[0] as f64, start[1] as f64], &sources, &bt)?;
    let summary = format!(
        "path {} after {} points, length {:.1} px",
        path.status.name(),
        path.points.len(),
        path.length()
    );
    let mut view = View::from_field(&s, summary);
    view.path = path.points.iter().flat_map(|p| [p[0], p[1]]).collect();
    Ok(view)
}

/// Renders a surface fixture under overhead light and reconstructs it.
pub fn run_sfs(surface: &str, resolution: usize) -> Result<View> {
    let fx = match surface {
        "cone" => fixtures::cone(resolution)?,
        "hemisphere" => fixtures::hemisphere(resolution)?,
        "plane" => fixtures::plane(resolution)?,
        "vase" => fixtures::vase(resolution)?,
        other => return Err(Error::Parse(format!("unknown surface `{other}`"))),
    };
    let lum = render_lambertian(&fx.truth)?;
    let rep = sfs_reconstruct(&lum, &fx.seeds, &SfsBackend::Sparse(SparseConfig::new(fx.hbar)), Some(&fx.truth))?;
    let zero = ScalarField::constant(fx.truth.grid().clone(), 0.0)?;
    let baseline = gradient_error(&zero, &fx.truth)?;
    let err = rep.gradient_error.unwrap_or(f64::NAN);
    let summary = format!("{surface}: gradient error {err:.4}, flat guess {baseline:.4}");
    Ok(View::from_field(&rep.s_star, summary))
}

fn js(e: Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen(js_name = solveFixture)]
pub fn solve_fixture(name: &str, backend: &str) -> std::result::Result<View, JsError> {
    run_fixture(name, backend).map_err(js)
}

#[wasm_bindgen(js_name = defaultMaze)]
pub fn default_maze_js() -> Vec<u8> {
    default_maze()
}

#[wasm_bindgen(js_name = planMaze)]
pub fn plan_maze(pixels: &[u8], size: usize, source_row: usize, source_col: usize, start_row: usize, start_col: usize) -> std::result::Result<View, JsError> {
    run_maze(pixels, size, [source_row, source_col], [start_row, start_col]).map_err(js)
}

#[wasm_bindgen(js_name = shapeFromShading)]
pub fn shape_from_shading(surface: &str, resolution: usize) -> std::result::Result<View, JsError> {
    run_sfs(surface, resolution).map_err(js)
}
