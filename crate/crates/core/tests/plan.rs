use eikonal_core::field::{gradient_central, GridSpec, ScalarField, SourceSet};
use eikonal_core::fixtures;
use eikonal_core::io::GrayImage;
use eikonal_core::plan::*;
use eikonal_core::sparse::{sparse_eikonal, SparseConfig};
use eikonal_core::sweep::{sweep_solve, SweepConfig};
use proptest::prelude::*;

#[test]
fn spiral_wall_count_matches_pixel_scan() {
    let fx = fixtures::spiral_maze().unwrap();
    let cost = maze_to_forcing(&fx.image, DEFAULT_LO, DEFAULT_HI, DEFAULT_THRESHOLD).unwrap();
    let mut white = 0;
    for r in 0..fx.image.height {
        for c in 0..fx.image.width {
            if fx.image.pixels[r * fx.image.width + c] >= 128 {
                white += 1;
            }
        }
    }
    let walls = cost.field.values().iter().filter(|&&v| v == DEFAULT_HI).count();
    assert_eq!(walls, white);
    assert_eq!(cost.free_count() + walls, 450 * 450);
    assert_eq!(cost.field.grid().spacing(), &[1.0, 1.0]);
    assert!(cost.is_free(fx.source));
    assert!(fx.starts.iter().all(|&s| cost.is_free(s)));
}

#[test]
fn threshold_is_inclusive() {
    let img = GrayImage::new(3, 2, 255, vec![127, 128, 129, 0, 255, 60]).unwrap();
    let m = maze_to_forcing(&img, 1.0, 9.0, 128).unwrap();
    assert_eq!(m.field.values(), &[1.0, 9.0, 9.0, 1.0, 9.0, 1.0]);
    let row = GrayImage::new(3, 1, 255, vec![0, 0, 0]).unwrap();
    assert!(maze_to_forcing(&row, 1.0, 9.0, 128).is_err());
}

#[test]
fn with_cost_at_overrides_nodes() {
    let img = GrayImage::new(3, 3, 255, vec![0; 9]).unwrap();
    let m = maze_to_forcing(&img, 2.0, 9.0, 128).unwrap().with_cost_at(&[[1, 1]], 0.5).unwrap();
    assert_eq!(m.field.at([1, 1]), 0.5);
    assert_eq!(m.field.at([0, 1]), 2.0);
}

fn radial(n: usize) -> (ScalarField, SourceSet) {
    let grid = GridSpec::square(-1.0, 1.0, 2.0 / (n - 1) as f64).unwrap();
    let f = ScalarField::constant(grid, 1.0).unwrap();
    let src = SourceSet::new(vec![[n / 2, n / 2]]).unwrap();
    let mut cfg = SparseConfig::new(0.05);
    cfg.tol = 1e-8;
    (sparse_eikonal(&f, &src, &cfg).unwrap().s_star, src)
}

#[test]
fn radial_paths_are_straight() {
    let (s, src) = radial(65);
    let h = s.grid().spacing()[0];
    for start in [[0.7, 0.1], [-0.5, 0.5], [0.05, -0.8], [-0.3, -0.2]] {
        let p = backtrack(&s, start, &src, &BacktrackConfig::for_spacing(h)).unwrap();
        assert_eq!(p.status, PathStatus::ReachedSource);
        let straight = start[0].hypot(start[1]);
        assert!((p.length() - straight).abs() <= 0.10 * straight, "{start:?}: {} vs {straight}", p.length());
        // every point stays close to the segment towards the origin
        for q in &p.points {
            let cross = (q[0] * start[1] - q[1] * start[0]).abs() / straight;
            assert!(cross < 0.05, "{start:?}: {q:?}");
        }
    }
}

#[test]
fn path_descends_and_respects_step() {
    let (s, src) = radial(65);
    let h = s.grid().spacing()[0];
    let cfg = BacktrackConfig::for_spacing(h);
    let p = backtrack(&s, [0.9, -0.7], &src, &cfg).unwrap();
    let vals: Vec<f64> = p.points.iter().map(|&q| s.sample_bilinear(q).unwrap()).collect();
    for w in vals.windows(2) {
        assert!(w[1] < w[0]);
    }
    for w in p.points.windows(2) {
        assert!((w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]) <= cfg.step * (1.0 + 1e-12));
    }
}

#[test]
fn step_budget_and_bad_config() {
    let (s, src) = radial(33);
    let mut cfg = BacktrackConfig::for_spacing(s.grid().spacing()[0]);
    cfg.max_steps = 3;
    let p = backtrack(&s, [0.8, 0.8], &src, &cfg).unwrap();
    assert_eq!(p.status, PathStatus::MaxSteps);
    assert_eq!(p.points.len(), 4);
    cfg.step = 0.0;
    assert!(backtrack(&s, [0.8, 0.8], &src, &cfg).is_err());
    cfg.step = 0.1;
    cfg.eps = -1.0;
    assert!(backtrack(&s, [0.8, 0.8], &src, &cfg).is_err());
}

/// Room split by a wall with a gap at the bottom.
fn walled_room() -> (MazeCost, SourceSet, ScalarField) {
    let n = 16;
    let mut pixels = vec![0u16; n * n];
    for r in 0..12 {
        for c in 7..10 {
            pixels[r * n + c] = 255;
        }
    }
    let img = GrayImage::new(n, n, 255, pixels).unwrap();
    let cost = maze_to_forcing(&img, 1.0, 1000.0, 128).unwrap();
    let src = SourceSet::new(vec![[1, 3]]).unwrap();
    let mut cfg = SparseConfig::new(8.0);
    cfg.tol = 1e-8;
    let s = sparse_eikonal(&cost.field, &src, &cfg).unwrap().s_star;
    (cost, src, s)
}

#[test]
fn maze_paths_stay_on_black_pixels() {
    let (cost, src, s) = walled_room();
    for start in [[1.0, 12.0], [3.0, 14.0], [10.0, 11.0]] {
        let p = backtrack(&s, start, &src, &BacktrackConfig::for_spacing(1.0)).unwrap();
        assert_eq!(p.status, PathStatus::ReachedSource, "{start:?}");
        for q in &p.points {
            let node = s.grid().nearest_node(*q).unwrap();
            assert!(cost.is_free(node), "{start:?}: {q:?} is on a wall");
        }
        // the path has to go below the wall
        assert!(p.points.iter().any(|q| q[0] >= 11.5), "{start:?}");
    }
}

fn distance_to_polyline(q: [f64; 2], line: &[[f64; 2]]) -> f64 {
    line.windows(2)
        .map(|w| {
            let d = [w[1][0] - w[0][0], w[1][1] - w[0][1]];
            let len2 = d[0] * d[0] + d[1] * d[1];
            let t = if len2 == 0.0 {
                0.0
            } else {
                (((q[0] - w[0][0]) * d[0] + (q[1] - w[0][1]) * d[1]) / len2).clamp(0.0, 1.0)
            };
            (q[0] - w[0][0] - t * d[0]).hypot(q[1] - w[0][1] - t * d[1])
        })
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn paths_through_a_shared_corridor_merge() {
    let (_, src, s) = walled_room();
    let cfg = BacktrackConfig::for_spacing(1.0);
    let a = backtrack(&s, [1.0, 12.0], &src, &cfg).unwrap();
    let b = backtrack(&s, [2.0, 14.0], &src, &cfg).unwrap();
    // once `a` comes within one step of `b` it stays within one step
    let join = a
        .points
        .iter()
        .position(|&q| distance_to_polyline(q, &b.points) <= cfg.step)
        .expect("paths meet");
    assert!(join < a.points.len() / 2, "join at {join} of {}", a.points.len());
    for &q in &a.points[join..] {
        assert!(distance_to_polyline(q, &b.points) <= cfg.step, "{q:?}");
    }
}

fn assert_no_local_minima(s: &ScalarField, src: &SourceSet) {
    let grad = gradient_central(s).unwrap();
    let scale = s.values().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let grid = s.grid();
    let flat = src.flat_indices(grid);
    let [n0, n1] = [grid.dims()[0], grid.dims()[1]];
    for i in 1..n0 - 1 {
        for j in 1..n1 - 1 {
            if flat.contains(&grid.flat([i, j])) {
                continue;
            }
            let g = grad[0].at([i, j]).hypot(grad[1].at([i, j]));
            assert!(g > 1e-8 * scale, "flat gradient at {i},{j}");
        }
    }
}

#[test]
fn solver_outputs_have_no_flat_points() {
    let (s, src) = radial(65);
    assert_no_local_minima(&s, &src);
    let (_, src, s) = walled_room();
    assert_no_local_minima(&s, &src);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// On a sweep distance map every start descends to one of two sources.
    #[test]
    fn reaches_a_source_from_anywhere(x in -0.95..0.95f64, y in -0.95..0.95f64) {
        let grid = GridSpec::square(-1.0, 1.0, 0.05).unwrap();
        let f = ScalarField::constant(grid.clone(), 1.0).unwrap();
        let src = SourceSet::new(vec![[10, 5], [30, 35]]).unwrap();
        let s = sweep_solve(&f, &src, &SweepConfig::default()).unwrap();
        let p = backtrack(&s, [x, y], &src, &BacktrackConfig::for_spacing(0.05)).unwrap();
        prop_assert_eq!(p.status, PathStatus::ReachedSource);
        let end = *p.points.last().unwrap();
        let vals: Vec<f64> = p.points.iter().map(|&q| s.sample_bilinear(q).unwrap()).collect();
        prop_assert!(vals.windows(2).all(|w| w[1] < w[0]));
        let targets = src.world_points(&grid);
        let near = targets.iter().map(|t| (end[0] - t[0]).hypot(end[1] - t[1])).fold(f64::INFINITY, f64::min);
        prop_assert!(near < 0.05);
    }
}
