//! Built-in problem setups: the four benchmark forcings, synthetic height
//! fields for shape from shading, and synthetic mazes.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::field::{GridSpec, ScalarField, SourceSet};
use crate::io::GrayImage;
use crate::kernels::ConvMode;

/// A forcing function with seeds and the default solver parameters for it.
#[derive(Clone, Debug)]
pub struct Fixture {
    pub name: &'static str,
    pub f: ScalarField,
    pub sources: SourceSet,
    /// Closed-form solution when one exists.
    pub reference: Option<ScalarField>,
    pub hbar: f64,
    pub terms: usize,
    pub tau: f64,
    pub conv_mode: ConvMode,
}

pub const FIELD_FIXTURES: &[&str] = &["example1", "example2", "example3", "example4"];

pub fn by_name(name: &str) -> Result<Fixture> {
    match name {
        "example1" => example1(),
        "example2" => example2(),
        "example3" => example3(),
        "example4" => example4(),
        other => Err(Error::Parse(format!(
            "unknown fixture `{other}` (expected one of {})",
            FIELD_FIXTURES.join(", ")
        ))),
    }
}

/// Grid on `[-0.125, 0.125]^2` with spacing `2^-10` (257 x 257 nodes).
pub fn small_square() -> GridSpec {
    GridSpec::square(-0.125, 0.125, 1.0 / 1024.0).expect("static grid")
}

/// `f = exp(r)`, source at the origin; exact solution `exp(r) - 1`.
pub fn example1() -> Result<Fixture> {
    let grid = small_square();
    let f = ScalarField::from_fn(grid.clone(), |x, y| x.hypot(y).exp())?;
    let reference = ScalarField::from_fn(grid.clone(), |x, y| (x.hypot(y).exp() - 1.0).abs())?;
    Ok(Fixture {
        name: "example1",
        f,
        sources: SourceSet::from_world(&grid, &[[0.0, 0.0]], None)?,
        reference: Some(reference),
        hbar: 0.006,
        terms: 6,
        tau: 1.0,
        conv_mode: ConvMode::ZeroPaddedLinear,
    })
}

/// A positive and a negative Gaussian bump on a unit background.
pub fn example2() -> Result<Fixture> {
    let grid = small_square();
    let f = ScalarField::from_fn(grid.clone(), |x, y| {
        let a = (-2.0 * ((x + 0.05).powi(2) + (y + 0.05).powi(2))).exp();
        let b = (-2.0 * ((x - 0.05).powi(2) + (y - 0.05).powi(2))).exp();
        1.0 + 2.0 * (a - b)
    })?;
    Ok(Fixture {
        name: "example2",
        f,
        sources: SourceSet::from_world(&grid, &[[0.0, 0.0]], None)?,
        reference: None,
        hbar: 0.015,
        terms: 6,
        tau: 1.0,
        conv_mode: ConvMode::ZeroPaddedLinear,
    })
}

/// Sinusoidal forcing with four seeds on the small grid.
pub fn example3() -> Result<Fixture> {
    let grid = small_square();
    let h = 1.0 / 1024.0;
    let f = ScalarField::from_fn(grid.clone(), |x, y| 1.0 + (PI * (x - 0.05)).sin() * (PI * (y + 0.05)).sin())?;
    let pts = [[0.0, 0.0], [50.0 * h, 100.0 * h], [-25.0 * h, -75.0 * h], [30.0 * h, -40.0 * h]];
    Ok(Fixture {
        name: "example3",
        f,
        sources: SourceSet::from_world(&grid, &pts, None)?,
        reference: None,
        hbar: 0.0085,
        terms: 6,
        tau: 1.0,
        conv_mode: ConvMode::ZeroPaddedLinear,
    })
}

/// Sinusoidal forcing on `[-5, 5]^2` with spacing 0.25, solved with `tau = 100`.
pub fn example4() -> Result<Fixture> {
    let grid = GridSpec::square(-5.0, 5.0, 0.25)?;
    let f = ScalarField::from_fn(grid.clone(), |x, y| {
        1.0 + 0.3 * (PI * (x + 1.0)).sin() * (PI * (y - 2.0)).sin()
    })?;
    let pts = [[0.0, 0.0], [1.0, 1.0], [-2.0, -3.0], [3.0, -4.0]];
    Ok(Fixture {
        name: "example4",
        f,
        sources: SourceSet::from_world(&grid, &pts, None)?,
        reference: None,
        hbar: 0.001,
        terms: 6,
        tau: 100.0,
        // far-field values near exp(-70) are lost to FFT round-off
        conv_mode: ConvMode::Direct,
    })
}

/// A synthetic height field with seed heights taken from it.
#[derive(Clone, Debug)]
pub struct SurfaceFixture {
    pub name: &'static str,
    pub truth: ScalarField,
    pub seeds: SourceSet,
    pub hbar: f64,
}

pub const SURFACE_FIXTURES: &[&str] = &["cone", "hemisphere", "plane", "vase"];

/// Surface fixture at its default resolution.
pub fn surface_by_name(name: &str) -> Result<SurfaceFixture> {
    match name {
        "cone" => cone(101),
        "hemisphere" => hemisphere(101),
        "plane" => plane(101),
        "vase" => vase(121),
        other => Err(Error::Parse(format!(
            "unknown surface fixture `{other}` (expected one of {})",
            SURFACE_FIXTURES.join(", ")
        ))),
    }
}

fn odd(n: usize) -> Result<usize> {
    if n < 5 || n.is_multiple_of(2) {
        return Err(Error::param("n", format!("{n} must be odd and at least 5")));
    }
    Ok(n)
}

fn unit_square(n: usize) -> Result<GridSpec> {
    let n = odd(n)?;
    let h = 2.0 / (n - 1) as f64;
    GridSpec::new_2d([n, n], [-1.0, -1.0], [h, h])
}

fn seeded(name: &'static str, truth: ScalarField, points: Vec<[usize; 2]>) -> Result<SurfaceFixture> {
    let heights = points.iter().map(|&p| truth.at(p)).collect();
    let hbar = truth.grid().spacing()[0];
    Ok(SurfaceFixture {
        name,
        seeds: SourceSet::with_values(points, heights)?,
        truth,
        hbar,
    })
}

/// `S = r` on `[-1, 1]^2`, seeded at the apex.
pub fn cone(n: usize) -> Result<SurfaceFixture> {
    let grid = unit_square(n)?;
    let truth = ScalarField::from_fn(grid, |x, y| x.hypot(y))?;
    seeded("cone", truth, vec![[n / 2, n / 2]])
}

pub const BOWL_RADIUS: f64 = 1.5;

/// Lower half of a sphere of radius 1.5 on `[-1, 1]^2`, seeded at the bottom.
pub fn hemisphere(n: usize) -> Result<SurfaceFixture> {
    let grid = unit_square(n)?;
    let r2 = BOWL_RADIUS * BOWL_RADIUS;
    let truth = ScalarField::from_fn(grid, |x, y| BOWL_RADIUS - (r2 - x * x - y * y).sqrt())?;
    seeded("hemisphere", truth, vec![[n / 2, n / 2]])
}

/// `S = 0.6 x + 0.8 y`, seeded along the lower-left edges.
pub fn plane(n: usize) -> Result<SurfaceFixture> {
    let grid = unit_square(n)?;
    let truth = ScalarField::from_fn(grid, |x, y| 0.6 * x + 0.8 * y)?;
    seeded("plane", truth, vec![[0, 0]])
}

fn vase_radius(y: f64) -> f64 {
    1.0 + 0.25 * (2.5 * y).sin()
}

/// Depth of a surface of revolution about the y axis seen from the front,
/// `D = 1 - sqrt(rho(y)^2 - x^2)` on `[-0.6, 0.6] x [-1, 1]`, seeded along
/// the axis.
pub fn vase(n: usize) -> Result<SurfaceFixture> {
    let n = odd(n)?;
    let h = 2.0 / (n - 1) as f64;
    let nx = odd(((1.2 / h).round() as usize + 1) | 1)?;
    let grid = GridSpec::new_2d([nx, n], [-0.5 * (nx - 1) as f64 * h, -1.0], [h, h])?;
    let truth = ScalarField::from_fn(grid, |x, y| 1.0 - (vase_radius(y).powi(2) - x * x).sqrt())?;
    let points = (0..n).step_by(4).map(|j| [nx / 2, j]).collect();
    seeded("vase", truth, points)
}

/// A maze image with one source pixel and the pixels to plan from.
#[derive(Clone, Debug)]
pub struct MazeFixture {
    pub name: &'static str,
    pub image: GrayImage,
    /// `(row, col)` pixel.
    pub source: [usize; 2],
    pub starts: Vec<[usize; 2]>,
    pub hbar: f64,
}

pub const MAZE_FIXTURES: &[&str] = &["spiral-maze", "open-room"];

pub fn maze_by_name(name: &str) -> Result<MazeFixture> {
    match name {
        "spiral-maze" => spiral_maze(),
        "open-room" => open_room(),
        other => Err(Error::Parse(format!(
            "unknown maze fixture `{other}` (expected one of {})",
            MAZE_FIXTURES.join(", ")
        ))),
    }
}

pub const SPIRAL_SIZE: usize = 450;
const SPIRAL_HALF_WIDTH: usize = 30;
/// Corridor centre line `(row, col)`; corridors are 60 px wide, walls 30 px.
const SPIRAL_PATH: &[[usize; 2]] = &[
    [60, 60],
    [60, 390],
    [390, 390],
    [390, 60],
    [150, 60],
    [150, 300],
    [300, 300],
    [300, 150],
    [240, 150],
];

/// 450 x 450 rectangular spiral, black corridors on white, entered at the
/// top-left and ending near the centre.
pub fn spiral_maze() -> Result<MazeFixture> {
    let n = SPIRAL_SIZE;
    let mut pixels = vec![255u16; n * n];
    let w = SPIRAL_HALF_WIDTH;
    for seg in SPIRAL_PATH.windows(2) {
        let (r0, r1) = (seg[0][0].min(seg[1][0]), seg[0][0].max(seg[1][0]));
        let (c0, c1) = (seg[0][1].min(seg[1][1]), seg[0][1].max(seg[1][1]));
        for r in r0 - w..r1 + w {
            for c in c0 - w..c1 + w {
                pixels[r * n + c] = 0;
            }
        }
    }
    Ok(MazeFixture {
        name: "spiral-maze",
        image: GrayImage::new(n, n, 255, pixels)?,
        source: SPIRAL_PATH[0],
        starts: vec![SPIRAL_PATH[SPIRAL_PATH.len() - 1], [390, 240]],
        hbar: 8.0,
    })
}

/// 11 x 11 black room with a one-pixel white border.
pub fn open_room() -> Result<MazeFixture> {
    let n = 11;
    let pixels = (0..n * n)
        .map(|k| {
            let (r, c) = (k / n, k % n);
            if r == 0 || c == 0 || r == n - 1 || c == n - 1 {
                255
            } else {
                0
            }
        })
        .collect();
    Ok(MazeFixture {
        name: "open-room",
        image: GrayImage::new(n, n, 255, pixels)?,
        source: [2, 2],
        starts: vec![[8, 8]],
        hbar: 0.5,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids_and_sources() {
        let e1 = example1().unwrap();
        assert_eq!(e1.f.grid().dims(), &[257, 257]);
        assert_eq!(e1.sources.points(), &[[128, 128]]);
        assert_eq!(e1.reference.as_ref().unwrap().at([128, 128]), 0.0);
        let e3 = example3().unwrap();
        assert_eq!(e3.sources.points()[1], [178, 228]);
        let e4 = example4().unwrap();
        assert_eq!(e4.f.grid().dims(), &[41, 41]);
        assert_eq!(e4.sources.points()[3], [32, 4]);
        assert!(by_name("nope").is_err());
    }

    #[test]
    fn surfaces() {
        let c = cone(11).unwrap();
        assert_eq!(c.seeds.points(), &[[5, 5]]);
        assert_eq!(c.seeds.values(), &[0.0]);
        assert!(cone(10).is_err());
        let v = vase(121).unwrap();
        assert_eq!(v.truth.grid().dims(), &[73, 121]);
        assert_eq!(v.truth.grid().coord(0, 36), 0.0);
        for name in SURFACE_FIXTURES {
            assert!(surface_by_name(name).is_ok());
        }
    }

    #[test]
    fn spiral_layout() {
        let m = spiral_maze().unwrap();
        let img = &m.image;
        assert_eq!(img.get(m.source[0], m.source[1]), 0);
        for s in &m.starts {
            assert_eq!(img.get(s[0], s[1]), 0);
        }
        // border and the wall between the first two turns
        assert_eq!(img.get(0, 200), 255);
        assert_eq!(img.get(105, 60), 255);
        assert_eq!(img.get(89, 60), 0);
        assert_eq!(img.get(120, 60), 0);
    }
}
