//! Path planning: cost fields from maze images and gradient backtracking on `S*`.

use crate::error::{Error, Result};
use crate::field::{gradient_central, ScalarField, SourceSet};
use crate::io::GrayImage;

pub const DEFAULT_LO: f64 = 1.0;
pub const DEFAULT_HI: f64 = 1000.0;
pub const DEFAULT_THRESHOLD: u8 = 128;

/// Forcing built from a maze image: `lo` on free pixels, `hi` on walls.
#[derive(Clone, Debug)]
pub struct MazeCost {
    pub field: ScalarField,
    pub lo: f64,
    pub hi: f64,
}

impl MazeCost {
    /// Whether the node is free space.
    pub fn is_free(&self, idx: [usize; 2]) -> bool {
        self.field.at(idx) < self.hi
    }

    pub fn free_count(&self) -> usize {
        self.field.values().iter().filter(|&&v| v < self.hi).count()
    }

    /// Sets the forcing at the given nodes to `value`.
    pub fn with_cost_at(mut self, nodes: &[[usize; 2]], value: f64) -> Result<Self> {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::param("source cost", format!("{value} must be positive")));
        }
        let grid = self.field.grid().clone();
        let mut v = self.field.into_values();
        for &p in nodes {
            if !grid.contains_index(p) {
                return Err(Error::InvalidSources(format!("node {p:?} outside the image")));
            }
            v[grid.flat(p)] = value;
        }
        self.field = ScalarField::new(grid, v)?;
        Ok(self)
    }
}

/// White pixels (level `>= threshold`) become walls with cost `hi`, the rest `lo`.
pub fn maze_to_forcing(image: &GrayImage, lo: f64, hi: f64, threshold: u8) -> Result<MazeCost> {
    if !(lo > 0.0 && lo.is_finite()) {
        return Err(Error::param("lo", format!("{lo} must be positive")));
    }
    if !(hi > lo && hi.is_finite()) {
        return Err(Error::param("hi", format!("{hi} must exceed lo = {lo}")));
    }
    let grid = image.pixel_grid()?;
    let mut values = Vec::with_capacity(grid.len());
    for r in 0..image.height {
        for c in 0..image.width {
            values.push(if image.level(r, c) >= threshold as f64 { hi } else { lo });
        }
    }
    if values.iter().all(|&v| v == hi) {
        return Err(Error::NoTraversableRegion);
    }
    Ok(MazeCost {
        field: ScalarField::new(grid, values)?,
        lo,
        hi,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PathStatus {
    ReachedSource,
    MaxSteps,
    /// Gradient vanished or no step lowered `S*`.
    Stalled,
}

impl PathStatus {
    pub fn name(self) -> &'static str {
        match self {
            PathStatus::ReachedSource => "reached_source",
            PathStatus::MaxSteps => "max_steps",
            PathStatus::Stalled => "stalled",
        }
    }
}

impl std::str::FromStr for PathStatus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reached_source" => Ok(PathStatus::ReachedSource),
            "max_steps" => Ok(PathStatus::MaxSteps),
            "stalled" => Ok(PathStatus::Stalled),
            other => Err(Error::Parse(format!("unknown path status `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathPolyline {
    pub points: Vec<[f64; 2]>,
    pub status: PathStatus,
}

impl PathPolyline {
    pub fn length(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]))
            .sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BacktrackConfig {
    /// Step length in world units.
    pub step: f64,
    /// Stop once this close to a source.
    pub eps: f64,
    pub max_steps: usize,
}

impl BacktrackConfig {
    /// Half-cell steps and a one-cell arrival radius.
    pub fn for_spacing(h: f64) -> Self {
        Self {
            step: 0.5 * h,
            eps: h,
            max_steps: 1_000_000,
        }
    }
}

const STALL_GRADIENT: f64 = 1e-12;
const MAX_HALVINGS: usize = 40;

/// Descends `S` from `start` along `-grad S / |grad S|` until within `eps`
/// of a source. The gradient is the bilinear interpolant of central
/// differences. A step that would not lower the interpolated `S` is halved
/// until it does, so `S` strictly decreases along the returned points.
pub fn backtrack(s: &ScalarField, start: [f64; 2], sources: &SourceSet, cfg: &BacktrackConfig) -> Result<PathPolyline> {
    let grid = s.grid();
    grid.ensure_2d()?;
    if !(cfg.step > 0.0 && cfg.step.is_finite()) {
        return Err(Error::param("step", format!("{} must be positive", cfg.step)));
    }
    if !(cfg.eps > 0.0 && cfg.eps.is_finite()) {
        return Err(Error::param("eps", format!("{} must be positive", cfg.eps)));
    }
    if !grid.contains_point(start) {
        return Err(Error::OutsideGrid {
            x: start[0],
            y: start[1],
        });
    }
    sources.validate(grid)?;
    let targets = sources.world_points(grid);
    let grad = gradient_central(s)?;
    let near_source = |p: [f64; 2]| targets.iter().any(|t| (p[0] - t[0]).hypot(p[1] - t[1]) < cfg.eps);
    let sample = |p: [f64; 2]| s.sample_bilinear(p);

    let mut points = vec![start];
    let mut x = start;
    let mut sx = sample(x).expect("start is inside");
    for _ in 0..cfg.max_steps {
        if near_source(x) {
            return Ok(PathPolyline {
                points,
                status: PathStatus::ReachedSource,
            });
        }
        let g = [
            grad[0].sample_bilinear(x).expect("inside"),
            grad[1].sample_bilinear(x).expect("inside"),
        ];
        let norm = g[0].hypot(g[1]);
        if !(norm >= STALL_GRADIENT) {
            return Ok(PathPolyline {
                points,
                status: PathStatus::Stalled,
            });
        }
        let dir = [-g[0] / norm, -g[1] / norm];
        let mut h = cfg.step;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let y = [x[0] + h * dir[0], x[1] + h * dir[1]];
            if let Some(sy) = sample(y) {
                if sy < sx {
                    accepted = Some((y, sy));
                    break;
                }
            }
            h *= 0.5;
        }
        match accepted {
            Some((y, sy)) => {
                x = y;
                sx = sy;
                points.push(x);
            }
            None => {
                return Ok(PathPolyline {
                    points,
                    status: PathStatus::Stalled,
                })
            }
        }
    }
    let status = if near_source(x) {
        PathStatus::ReachedSource
    } else {
        PathStatus::MaxSteps
    };
    Ok(PathPolyline { points, status })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::GridSpec;

    #[test]
    fn checkerboard_and_all_black() {
        let img = GrayImage::new(2, 2, 255, vec![0, 255, 255, 0]).unwrap();
        let m = maze_to_forcing(&img, 1.0, 1000.0, 128).unwrap();
        assert_eq!(m.field.values(), &[1.0, 1000.0, 1000.0, 1.0]);
        let black = GrayImage::new(3, 2, 255, vec![0; 6]).unwrap();
        assert!(maze_to_forcing(&black, 2.0, 5.0, 128).unwrap().field.values().iter().all(|&v| v == 2.0));
        let white = GrayImage::new(2, 2, 255, vec![255; 4]).unwrap();
        assert!(matches!(maze_to_forcing(&white, 1.0, 10.0, 128), Err(Error::NoTraversableRegion)));
        assert!(maze_to_forcing(&img, 5.0, 1.0, 128).is_err());
    }

    #[test]
    fn start_at_source_is_one_point() {
        let g = GridSpec::new_2d([9, 9], [-4.0, -4.0], [1.0, 1.0]).unwrap();
        let s = ScalarField::from_fn(g.clone(), |x, y| x.hypot(y)).unwrap();
        let src = SourceSet::new(vec![[4, 4]]).unwrap();
        let p = backtrack(&s, [0.0, 0.0], &src, &BacktrackConfig::for_spacing(1.0)).unwrap();
        assert_eq!(p.points.len(), 1);
        assert_eq!(p.status, PathStatus::ReachedSource);
        assert!(backtrack(&s, [9.0, 0.0], &src, &BacktrackConfig::for_spacing(1.0)).is_err());
    }

    #[test]
    fn flat_field_stalls() {
        let g = GridSpec::new_2d([5, 5], [0.0, 0.0], [1.0, 1.0]).unwrap();
        let s = ScalarField::constant(g, 3.0).unwrap();
        let src = SourceSet::new(vec![[0, 0]]).unwrap();
        let p = backtrack(&s, [3.0, 3.0], &src, &BacktrackConfig::for_spacing(1.0)).unwrap();
        assert_eq!(p.status, PathStatus::Stalled);
    }
}
