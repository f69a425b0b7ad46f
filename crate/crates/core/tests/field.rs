use approx::assert_abs_diff_eq;
use eikonal_core::field::{gradient_central, laplacian_5pt, percent_error, GridSpec, ScalarField, SourceSet};
use eikonal_core::sparse::assemble;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn grid5() -> GridSpec {
    GridSpec::new_2d([5, 5], [-2.0, -2.0], [1.0, 1.0]).unwrap()
}

#[test]
fn gradient_of_constant_is_zero() {
    let g = gradient_central(&ScalarField::constant(grid5(), 3.5).unwrap()).unwrap();
    assert!(g.iter().all(|c| c.values().iter().all(|&v| v == 0.0)));
}

#[test]
fn gradient_of_linear_1d_is_exact() {
    let grid = GridSpec::new_1d(9, -1.0, 0.25).unwrap();
    let values = (0..9).map(|i| 2.5 * grid.coord(0, i)).collect();
    let g = gradient_central(&ScalarField::new(grid, values).unwrap()).unwrap();
    assert_eq!(g.len(), 1);
    for &v in &g[0].values()[1..8] {
        assert_abs_diff_eq!(v, 2.5, epsilon = 1e-14);
    }
}

#[test]
fn gradient_of_quadratic() {
    let s = ScalarField::from_fn(grid5(), |x, y| x * x + y * y).unwrap();
    let g = gradient_central(&s).unwrap();
    assert_eq!([g[0].at([2, 2]), g[1].at([2, 2])], [0.0, 0.0]);
    assert_eq!([g[0].at([3, 2]), g[1].at([3, 2])], [2.0, 0.0]);
    // one-sided at the boundary: (v[1] - v[0]) / h
    assert_eq!(g[0].at([0, 2]), (s.at([1, 2]) - s.at([0, 2])) / 1.0);
}

#[test]
fn gradient_needs_three_nodes() {
    let grid = GridSpec::new_2d([2, 5], [0.0; 2], [1.0; 2]).unwrap();
    assert!(gradient_central(&ScalarField::constant(grid, 1.0).unwrap()).is_err());
}

#[test]
fn laplacian_examples() {
    let c = laplacian_5pt(&ScalarField::constant(grid5(), -7.0).unwrap()).unwrap();
    assert!(c.values().iter().all(|&v| v == 0.0));
    let q = laplacian_5pt(&ScalarField::from_fn(grid5(), |x, y| x * x + y * y).unwrap()).unwrap();
    for i in 1..4 {
        for j in 1..4 {
            assert_eq!(q.at([i, j]), 4.0);
        }
    }
    let line = GridSpec::new_1d(5, 0.0, 1.0).unwrap();
    assert!(laplacian_5pt(&ScalarField::constant(line, 1.0).unwrap()).is_err());
}

/// With `hbar = delta = 1` and `f = 1` the assembled matrix is `I - L5`
/// (zero Dirichlet), which agrees with the mirror-padded Laplacian on nodes
/// whose neighbours are all inside the grid.
#[test]
fn laplacian_matches_assembled_stencil() {
    let mut rng = StdRng::seed_from_u64(4);
    let grid = GridSpec::new_2d([4, 4], [0.0; 2], [1.0; 2]).unwrap();
    let v: Vec<f64> = (0..16).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let field = ScalarField::new(grid.clone(), v.clone()).unwrap();
    let sys = assemble(&ScalarField::constant(grid, 1.0).unwrap(), &SourceSet::new(vec![[0, 0]]).unwrap(), 1.0).unwrap();
    let dense = sys.to_dense();
    let lap = laplacian_5pt(&field).unwrap();
    for i in 1..3 {
        for j in 1..3 {
            let k = i * 4 + j;
            let av: f64 = dense[k].iter().zip(&v).map(|(a, x)| a * x).sum();
            assert_abs_diff_eq!(v[k] - av, lap.at([i, j]), epsilon = 1e-14);
        }
    }
}

#[test]
fn percent_error_examples() {
    let grid = GridSpec::new_2d([10, 10], [0.0; 2], [0.1; 2]).unwrap();
    let r = ScalarField::constant(grid.clone(), 2.0).unwrap();
    let e = ScalarField::constant(grid.clone(), 2.02).unwrap();
    let same = percent_error(&r, &r, None).unwrap();
    assert_eq!((same.percent, same.max_abs_diff), (0.0, 0.0));
    let p = percent_error(&e, &r, None).unwrap();
    assert_abs_diff_eq!(p.percent, 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(p.max_abs_diff, 0.02, epsilon = 1e-15);
    assert_eq!((p.included, p.excluded), (100, 0));
}

#[test]
fn percent_error_zero_reference() {
    let grid = GridSpec::new_2d([3, 3], [0.0; 2], [1.0; 2]).unwrap();
    let r = ScalarField::from_fn(grid.clone(), |x, y| x + y).unwrap();
    let e = ScalarField::constant(grid, 1.0).unwrap();
    let err = percent_error(&e, &r, None).unwrap_err().to_string();
    assert!(err.contains("node 0"), "{err}");
    let src = SourceSet::new(vec![[0, 0]]).unwrap();
    let p = percent_error(&e, &r, Some(&src)).unwrap();
    assert_eq!((p.included, p.excluded), (8, 1));
}

#[test]
fn sources_validate() {
    assert!(SourceSet::new(vec![]).is_err());
    assert!(SourceSet::new(vec![[1, 1], [1, 1]]).is_err());
    let src = SourceSet::new(vec![[9, 0]]).unwrap();
    assert!(src.validate(&grid5()).is_err());
    let w = SourceSet::from_world(&grid5(), &[[1.0, -2.0]], None).unwrap();
    assert_eq!(w.points(), &[[3, 0]]);
    assert_eq!(w.values(), &[0.0]);
}

#[test]
fn world_map() {
    let g = GridSpec::new_2d([257, 257], [-0.125, -0.125], [1.0 / 1024.0; 2]).unwrap();
    assert_eq!(g.world([128, 128]), [0.0, 0.0]);
    assert_eq!(g.world([0, 256]), [-0.125, 0.125]);
}

fn field_4x5() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0..10.0f64, 20)
}

proptest! {
    #[test]
    fn constant_gradient_zero(c in -1e6..1e6f64, h in 0.01..10.0f64) {
        let g = GridSpec::new_2d([4, 5], [0.0; 2], [h, 2.0 * h]).unwrap();
        let grad = gradient_central(&ScalarField::constant(g, c).unwrap()).unwrap();
        prop_assert!(grad.iter().all(|f| f.values().iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn laplacian_is_linear(u in field_4x5(), v in field_4x5(), a in -3.0..3.0f64, b in -3.0..3.0f64) {
        let g = GridSpec::new_2d([4, 5], [0.0; 2], [0.5, 0.5]).unwrap();
        let fu = ScalarField::new(g.clone(), u.clone()).unwrap();
        let fv = ScalarField::new(g.clone(), v.clone()).unwrap();
        let mix = ScalarField::new(g, u.iter().zip(&v).map(|(x, y)| a * x + b * y).collect()).unwrap();
        let (lu, lv, lm) = (laplacian_5pt(&fu).unwrap(), laplacian_5pt(&fv).unwrap(), laplacian_5pt(&mix).unwrap());
        for k in 0..20 {
            let want = a * lu.values()[k] + b * lv.values()[k];
            prop_assert!((lm.values()[k] - want).abs() <= 1e-12 * (1.0 + want.abs()));
        }
    }

    #[test]
    fn percent_error_positive_iff_different(r in prop::collection::vec(0.1..5.0f64, 20), k in 0usize..20, d in -1.0..1.0f64) {
        let g = GridSpec::new_2d([4, 5], [0.0; 2], [1.0; 2]).unwrap();
        let rf = ScalarField::new(g.clone(), r.clone()).unwrap();
        prop_assert_eq!(percent_error(&rf, &rf, None).unwrap().percent, 0.0);
        let mut e = r;
        e[k] += d;
        let ef = ScalarField::new(g, e).unwrap();
        let p = percent_error(&ef, &rf, None).unwrap();
        prop_assert_eq!(p.percent > 0.0, d != 0.0);
    }
}
