//! Regular-grid scalar fields, finite-difference operators and error metrics.
//!
//! Fields are stored row-major: for a 2D grid with `dims = [n0, n1]` the node
//! `(i, j)` lives at flat index `i * n1 + j`. Axis 0 is the first world
//! coordinate (`x`), axis 1 the second (`y`). Images map pixel rows onto
//! axis 0 and pixel columns onto axis 1.

use crate::error::{Error, Result};

/// Uniform 1D or 2D grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    dims: Vec<usize>,
    origin: Vec<f64>,
    spacing: Vec<f64>,
}

impl GridSpec {
    pub fn new(dims: Vec<usize>, origin: Vec<f64>, spacing: Vec<f64>) -> Result<Self> {
        let nd = dims.len();
        if nd == 0 || nd > 2 {
            return Err(Error::InvalidGrid(format!("{nd} axes (only 1D and 2D grids)")));
        }
        if origin.len() != nd || spacing.len() != nd {
            return Err(Error::InvalidGrid(
                "origin and spacing must have one entry per axis".into(),
            ));
        }
        for axis in 0..nd {
            if dims[axis] < 2 {
                return Err(Error::DimensionTooSmall {
                    axis,
                    len: dims[axis],
                    min: 2,
                });
            }
            if !(spacing[axis] > 0.0 && spacing[axis].is_finite()) {
                return Err(Error::InvalidGrid(format!(
                    "spacing {} on axis {axis} must be positive",
                    spacing[axis]
                )));
            }
            if !origin[axis].is_finite() {
                return Err(Error::InvalidGrid(format!("origin on axis {axis} is not finite")));
            }
        }
        Ok(Self {
            dims,
            origin,
            spacing,
        })
    }

    pub fn new_1d(n: usize, origin: f64, spacing: f64) -> Result<Self> {
        Self::new(vec![n], vec![origin], vec![spacing])
    }

    pub fn new_2d(dims: [usize; 2], origin: [f64; 2], spacing: [f64; 2]) -> Result<Self> {
        Self::new(dims.to_vec(), origin.to_vec(), spacing.to_vec())
    }

    /// Square 2D grid covering `[lo, hi]` on both axes with the given step.
    /// `(hi - lo) / step` must be (close to) an integer.
    pub fn square(lo: f64, hi: f64, step: f64) -> Result<Self> {
        let cells = (hi - lo) / step;
        let n = cells.round();
        if !(step > 0.0) || (cells - n).abs() > 1e-9 * n.max(1.0) {
            return Err(Error::InvalidGrid(format!(
                "[{lo}, {hi}] is not a whole number of {step} steps"
            )));
        }
        Self::new_2d([n as usize + 1; 2], [lo; 2], [step; 2])
    }

    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of nodes along axis 1 (1 for 1D grids).
    pub(crate) fn cols(&self) -> usize {
        if self.ndim() == 2 {
            self.dims[1]
        } else {
            1
        }
    }

    /// Cell length (1D) or area (2D).
    pub fn cell_measure(&self) -> f64 {
        self.spacing.iter().product()
    }

    /// Whether every axis has the same spacing.
    pub fn is_isotropic(&self) -> bool {
        self.spacing.iter().all(|&s| s == self.spacing[0])
    }

    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        self.origin[axis] + i as f64 * self.spacing[axis]
    }

    pub fn flat(&self, idx: [usize; 2]) -> usize {
        idx[0] * self.cols() + idx[1]
    }

    pub fn unflat(&self, flat: usize) -> [usize; 2] {
        let c = self.cols();
        [flat / c, flat % c]
    }

    pub fn contains_index(&self, idx: [usize; 2]) -> bool {
        idx[0] < self.dims[0] && (if self.ndim() == 2 { idx[1] < self.dims[1] } else { idx[1] == 0 })
    }

    /// World coordinates of a node; 1D grids report `y = 0`.
    pub fn world(&self, idx: [usize; 2]) -> [f64; 2] {
        let x = self.coord(0, idx[0]);
        let y = if self.ndim() == 2 { self.coord(1, idx[1]) } else { 0.0 };
        [x, y]
    }

    /// Continuous index coordinates of a world point.
    pub fn to_index_coords(&self, p: [f64; 2]) -> [f64; 2] {
        let u = (p[0] - self.origin[0]) / self.spacing[0];
        let v = if self.ndim() == 2 {
            (p[1] - self.origin[1]) / self.spacing[1]
        } else {
            0.0
        };
        [u, v]
    }

    /// Whether a world point lies inside the grid's bounding box.
    pub fn contains_point(&self, p: [f64; 2]) -> bool {
        let [u, v] = self.to_index_coords(p);
        let inside = |c: f64, n: usize| c >= -1e-9 && c <= (n - 1) as f64 + 1e-9;
        inside(u, self.dims[0]) && (self.ndim() == 1 || inside(v, self.dims[1]))
    }

    pub fn nearest_node(&self, p: [f64; 2]) -> Option<[usize; 2]> {
        if !self.contains_point(p) {
            return None;
        }
        let [u, v] = self.to_index_coords(p);
        let i = (u.round().max(0.0) as usize).min(self.dims[0] - 1);
        let j = if self.ndim() == 2 {
            (v.round().max(0.0) as usize).min(self.dims[1] - 1)
        } else {
            0
        };
        Some([i, j])
    }

    /// Same grid with every coordinate divided by `factor`.
    pub fn scaled_down(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.dims.clone(),
            self.origin.iter().map(|o| o / factor).collect(),
            self.spacing.iter().map(|s| s / factor).collect(),
        )
    }

    /// Errors with [`Error::GridMismatch`] unless the grids are identical.
    pub fn ensure_same(&self, other: &GridSpec) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!(
                "dims {:?}/{:?}, origin {:?}/{:?}, spacing {:?}/{:?}",
                self.dims, other.dims, self.origin, other.origin, self.spacing, other.spacing
            )));
        }
        Ok(())
    }

    pub(crate) fn ensure_2d(&self) -> Result<()> {
        if self.ndim() != 2 {
            return Err(Error::WrongDimension {
                expected: 2,
                got: self.ndim(),
            });
        }
        Ok(())
    }
}

/// One value per grid node, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(Self { grid, values })
    }

    /// Skips the finiteness scan; callers guarantee the invariant.
    pub(crate) fn from_parts(grid: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Self { grid, values }
    }

    pub fn constant(grid: GridSpec, value: f64) -> Result<Self> {
        let n = grid.len();
        Self::new(grid, vec![value; n])
    }

    /// Samples `f(x, y)` at every node (`y = 0` on 1D grids).
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = (0..grid.len())
            .map(|k| {
                let [x, y] = grid.world(grid.unflat(k));
                f(x, y)
            })
            .collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at(&self, idx: [usize; 2]) -> f64 {
        self.values[self.grid.flat(idx)]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn l2_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Bilinear interpolation at a world point, `None` outside the grid.
    pub fn sample_bilinear(&self, p: [f64; 2]) -> Option<f64> {
        if !self.grid.contains_point(p) {
            return None;
        }
        let [u, v] = self.grid.to_index_coords(p);
        let n0 = self.grid.dims[0];
        let i = (u.floor().max(0.0) as usize).min(n0 - 2);
        let tu = (u - i as f64).clamp(0.0, 1.0);
        if self.grid.ndim() == 1 {
            return Some(self.values[i] * (1.0 - tu) + self.values[i + 1] * tu);
        }
        let n1 = self.grid.dims[1];
        let j = (v.floor().max(0.0) as usize).min(n1 - 2);
        let tv = (v - j as f64).clamp(0.0, 1.0);
        let a = self.values[i * n1 + j];
        let b = self.values[i * n1 + j + 1];
        let c = self.values[(i + 1) * n1 + j];
        let d = self.values[(i + 1) * n1 + j + 1];
        Some((a * (1.0 - tv) + b * tv) * (1.0 - tu) + (c * (1.0 - tv) + d * tv) * tu)
    }
}

/// Seed nodes `y_k` with known values of the solution.
#[derive(Clone, Debug, PartialEq)]
pub struct SourceSet {
    points: Vec<[usize; 2]>,
    values: Vec<f64>,
}

impl SourceSet {
    /// Sources with boundary value 0.
    pub fn new(points: Vec<[usize; 2]>) -> Result<Self> {
        let n = points.len();
        Self::with_values(points, vec![0.0; n])
    }

    pub fn with_values(points: Vec<[usize; 2]>, values: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidSources("source set is empty".into()));
        }
        if points.len() != values.len() {
            return Err(Error::InvalidSources(format!(
                "{} points but {} boundary values",
                points.len(),
                values.len()
            )));
        }
        for (k, p) in points.iter().enumerate() {
            if points[..k].contains(p) {
                return Err(Error::InvalidSources(format!("duplicate source {p:?}")));
            }
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidSources(format!("boundary value {v} is not finite")));
        }
        Ok(Self { points, values })
    }

    /// Snaps world points to their nearest grid nodes.
    pub fn from_world(grid: &GridSpec, points: &[[f64; 2]], values: Option<Vec<f64>>) -> Result<Self> {
        let idx = points
            .iter()
            .map(|&p| {
                grid.nearest_node(p)
                    .ok_or(Error::OutsideGrid { x: p[0], y: p[1] })
            })
            .collect::<Result<Vec<_>>>()?;
        let values = values.unwrap_or_else(|| vec![0.0; idx.len()]);
        let set = Self::with_values(idx, values)?;
        set.validate(grid)?;
        Ok(set)
    }

    pub fn validate(&self, grid: &GridSpec) -> Result<()> {
        if let Some(p) = self.points.iter().find(|&&p| !grid.contains_index(p)) {
            return Err(Error::InvalidSources(format!(
                "source {p:?} outside grid of dims {:?}",
                grid.dims()
            )));
        }
        Ok(())
    }

    pub fn points(&self) -> &[[usize; 2]] {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn flat_indices(&self, grid: &GridSpec) -> Vec<usize> {
        self.points.iter().map(|&p| grid.flat(p)).collect()
    }

    pub fn world_points(&self, grid: &GridSpec) -> Vec<[f64; 2]> {
        self.points.iter().map(|&p| grid.world(p)).collect()
    }

    /// Kronecker-delta field: `weight(k)` at source `k`, zero elsewhere.
    pub fn kronecker(&self, grid: &GridSpec, weight: impl Fn(usize) -> f64) -> Result<ScalarField> {
        self.validate(grid)?;
        let mut values = vec![0.0; grid.len()];
        for (k, &p) in self.points.iter().enumerate() {
            values[grid.flat(p)] = weight(k);
        }
        ScalarField::new(grid.clone(), values)
    }
}

/// Central-difference gradient, one field per axis. Boundary nodes use
/// first-order one-sided differences.
pub fn gradient_central(field: &ScalarField) -> Result<Vec<ScalarField>> {
    let grid = field.grid();
    for (axis, &n) in grid.dims().iter().enumerate() {
        if n < 3 {
            return Err(Error::DimensionTooSmall { axis, len: n, min: 3 });
        }
    }
    let v = field.values();
    let cols = grid.cols();
    let (rows, stride_of) = (grid.dims()[0], |axis: usize| if axis == 0 { cols } else { 1 });
    let mut out = Vec::with_capacity(grid.ndim());
    for axis in 0..grid.ndim() {
        let n = grid.dims()[axis];
        let h = grid.spacing()[axis];
        let stride = stride_of(axis);
        let mut g = vec![0.0; v.len()];
        for r in 0..rows {
            for c in 0..cols {
                let k = r * cols + c;
                let pos = if axis == 0 { r } else { c };
                g[k] = if pos == 0 {
                    (v[k + stride] - v[k]) / h
                } else if pos == n - 1 {
                    (v[k] - v[k - stride]) / h
                } else {
                    (v[k + stride] - v[k - stride]) / (2.0 * h)
                };
            }
        }
        out.push(ScalarField::from_parts(grid.clone(), g));
    }
    Ok(out)
}

/// Gradient magnitude from central differences.
pub fn gradient_magnitude(field: &ScalarField) -> Result<ScalarField> {
    let g = gradient_central(field)?;
    let values = (0..field.values().len())
        .map(|k| g.iter().map(|c| c.values()[k].powi(2)).sum::<f64>().sqrt())
        .collect();
    ScalarField::new(field.grid().clone(), values)
}

/// Five-point Laplacian with mirror padding at the edges (ghost `v[-1] = v[1]`).
pub fn laplacian_5pt(field: &ScalarField) -> Result<ScalarField> {
    let grid = field.grid();
    grid.ensure_2d()?;
    let [n0, n1] = [grid.dims()[0], grid.dims()[1]];
    for (axis, n) in [n0, n1].into_iter().enumerate() {
        if n < 3 {
            return Err(Error::DimensionTooSmall { axis, len: n, min: 3 });
        }
    }
    let (h0, h1) = (grid.spacing()[0], grid.spacing()[1]);
    let v = field.values();
    let reflect = |i: isize, n: usize| -> usize {
        if i < 0 {
            (-i) as usize
        } else if i >= n as isize {
            2 * (n - 1) - i as usize
        } else {
            i as usize
        }
    };
    let mut out = vec![0.0; v.len()];
    for i in 0..n0 {
        let im = reflect(i as isize - 1, n0);
        let ip = reflect(i as isize + 1, n0);
        for j in 0..n1 {
            let jm = reflect(j as isize - 1, n1);
            let jp = reflect(j as isize + 1, n1);
            let c = v[i * n1 + j];
            out[i * n1 + j] = (v[ip * n1 + j] + v[im * n1 + j] - 2.0 * c) / (h0 * h0)
                + (v[i * n1 + jp] + v[i * n1 + jm] - 2.0 * c) / (h1 * h1);
        }
    }
    ScalarField::new(grid.clone(), out)
}

/// Result of [`percent_error`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PercentError {
    pub percent: f64,
    pub max_abs_diff: f64,
    pub included: usize,
    pub excluded: usize,
}

/// Mean relative deviation in percent, `100/N * sum |e - r| / |r|`, over all
/// nodes not in `exclude`, plus the maximum absolute deviation.
pub fn percent_error(
    estimate: &ScalarField,
    reference: &ScalarField,
    exclude: Option<&SourceSet>,
) -> Result<PercentError> {
    let grid = estimate.grid();
    grid.ensure_same(reference.grid())?;
    let mut skip = vec![false; grid.len()];
    if let Some(set) = exclude {
        set.validate(grid)?;
        for k in set.flat_indices(grid) {
            skip[k] = true;
        }
    }
    let (mut sum, mut max_abs, mut n) = (0.0, 0.0_f64, 0usize);
    for (k, (&e, &r)) in estimate.values().iter().zip(reference.values()).enumerate() {
        if skip[k] {
            continue;
        }
        if r == 0.0 {
            return Err(Error::ZeroReference { index: k });
        }
        let d = (e - r).abs();
        sum += d / r.abs();
        max_abs = max_abs.max(d);
        n += 1;
    }
    let excluded = skip.iter().filter(|&&s| s).count();
    Ok(PercentError {
        percent: if n == 0 { 0.0 } else { 100.0 * sum / n as f64 },
        max_abs_diff: max_abs,
        included: n,
        excluded,
    })
}

/// Which nodes enter [`viscosity_residual_rms`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResidualMask {
    /// Nodes closer than this many cells to any source are skipped.
    pub source_clearance_cells: f64,
    /// Nodes within this many cells of the grid edge are skipped.
    pub edge_margin: usize,
}

impl Default for ResidualMask {
    fn default() -> Self {
        Self {
            source_clearance_cells: 10.0,
            edge_margin: 2,
        }
    }
}

/// RMS over masked nodes of `(|grad S|^2 - hbar lap S - f^2) / f^2`, the
/// relative defect of the viscous eikonal identity. `NaN` if the mask is empty.
pub fn viscosity_residual_rms(
    s: &ScalarField,
    f: &ScalarField,
    hbar: f64,
    sources: &SourceSet,
    mask: ResidualMask,
) -> Result<f64> {
    let grid = s.grid();
    grid.ensure_same(f.grid())?;
    grid.ensure_2d()?;
    let grad = gradient_central(s)?;
    let lap = laplacian_5pt(s)?;
    let src = sources.world_points(grid);
    let h = grid.spacing()[0].max(grid.spacing()[1]);
    let clearance = mask.source_clearance_cells * h;
    let [n0, n1] = [grid.dims()[0], grid.dims()[1]];
    let m = mask.edge_margin;
    let (mut acc, mut count) = (0.0, 0usize);
    for i in m..n0.saturating_sub(m) {
        for j in m..n1.saturating_sub(m) {
            let [x, y] = grid.world([i, j]);
            if src.iter().any(|p| ((x - p[0]).powi(2) + (y - p[1]).powi(2)).sqrt() <= clearance) {
                continue;
            }
            let k = i * n1 + j;
            let g2 = grad[0].values()[k].powi(2) + grad[1].values()[k].powi(2);
            let f2 = f.values()[k].powi(2);
            let r = (g2 - hbar * lap.values()[k] - f2) / f2;
            acc += r * r;
            count += 1;
        }
    }
    Ok(if count == 0 { f64::NAN } else { (acc / count as f64).sqrt() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn grid5() -> GridSpec {
        GridSpec::new_2d([5, 5], [-2.0, -2.0], [1.0, 1.0]).unwrap()
    }

    #[test]
    fn grid_rejects_bad_specs() {
        assert!(GridSpec::new_2d([1, 5], [0.0; 2], [1.0; 2]).is_err());
        assert!(GridSpec::new_2d([5, 5], [0.0; 2], [0.0, 1.0]).is_err());
        assert!(GridSpec::new(vec![2, 2, 2], vec![0.0; 3], vec![1.0; 3]).is_err());
        assert!(GridSpec::square(-0.125, 0.125, 1.0 / 1024.0).unwrap().dims() == [257, 257]);
    }

    #[test]
    fn world_map_is_affine() {
        let g = GridSpec::new_2d([4, 3], [1.5, -2.0], [0.5, 0.25]).unwrap();
        assert_eq!(g.world([3, 2]), [3.0, -1.5]);
        assert_eq!(g.flat([3, 2]), 11);
        assert_eq!(g.unflat(11), [3, 2]);
        assert_eq!(g.nearest_node([2.6, -1.6]), Some([2, 2]));
        assert_eq!(g.nearest_node([9.0, 0.0]), None);
    }

    #[test]
    fn field_rejects_nan_and_length() {
        let g = grid5();
        assert!(ScalarField::new(g.clone(), vec![0.0; 24]).is_err());
        let mut v = vec![0.0; 25];
        v[3] = f64::NAN;
        assert!(matches!(ScalarField::new(g, v), Err(Error::NonFinite { index: 3, .. })));
    }

    #[test]
    fn sources_reject_duplicates_and_out_of_range() {
        assert!(SourceSet::new(vec![]).is_err());
        assert!(SourceSet::new(vec![[1, 1], [1, 1]]).is_err());
        let s = SourceSet::new(vec![[9, 0]]).unwrap();
        assert!(s.validate(&grid5()).is_err());
    }

    #[test]
    fn gradient_of_constant_is_zero() {
        let f = ScalarField::constant(grid5(), 3.25).unwrap();
        for g in gradient_central(&f).unwrap() {
            assert!(g.values().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn gradient_of_linear_1d_is_exact() {
        let g = GridSpec::new_1d(7, -1.0, 0.25).unwrap();
        let f = ScalarField::from_fn(g, |x, _| 2.5 * x - 1.0).unwrap();
        let d = gradient_central(&f).unwrap();
        assert_eq!(d.len(), 1);
        for &v in d[0].values() {
            assert_abs_diff_eq!(v, 2.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn gradient_of_paraboloid() {
        let f = ScalarField::from_fn(grid5(), |x, y| x * x + y * y).unwrap();
        let d = gradient_central(&f).unwrap();
        assert_eq!(d[0].at([2, 2]), 0.0);
        assert_eq!(d[1].at([2, 2]), 0.0);
        assert_eq!(d[0].at([3, 2]), 2.0);
        assert_eq!(d[1].at([3, 2]), 0.0);
    }

    #[test]
    fn gradient_needs_three_nodes() {
        let g = GridSpec::new_2d([2, 5], [0.0; 2], [1.0; 2]).unwrap();
        let f = ScalarField::constant(g, 1.0).unwrap();
        assert!(matches!(
            gradient_central(&f),
            Err(Error::DimensionTooSmall { axis: 0, .. })
        ));
    }

    #[test]
    fn laplacian_of_paraboloid_interior() {
        let f = ScalarField::from_fn(grid5(), |x, y| x * x + y * y).unwrap();
        let l = laplacian_5pt(&f).unwrap();
        for i in 1..4 {
            for j in 1..4 {
                assert_eq!(l.at([i, j]), 4.0);
            }
        }
        let c = ScalarField::constant(grid5(), -7.0).unwrap();
        assert!(laplacian_5pt(&c).unwrap().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn laplacian_rejects_1d() {
        let g = GridSpec::new_1d(5, 0.0, 1.0).unwrap();
        let f = ScalarField::constant(g, 0.0).unwrap();
        assert!(matches!(laplacian_5pt(&f), Err(Error::WrongDimension { .. })));
    }

    #[test]
    fn percent_error_cases() {
        let g = GridSpec::new_2d([10, 10], [0.0; 2], [1.0; 2]).unwrap();
        let r = ScalarField::constant(g.clone(), 2.0).unwrap();
        let same = percent_error(&r, &r, None).unwrap();
        assert_eq!((same.percent, same.max_abs_diff), (0.0, 0.0));
        let e = ScalarField::constant(g.clone(), 2.02).unwrap();
        let pe = percent_error(&e, &r, None).unwrap();
        assert_abs_diff_eq!(pe.percent, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(pe.max_abs_diff, 0.02, epsilon = 1e-12);
        assert_eq!(pe.included, 100);
    }

    #[test]
    fn percent_error_excludes_sources_and_names_zero_nodes() {
        let g = GridSpec::new_2d([3, 3], [0.0; 2], [1.0; 2]).unwrap();
        let r = ScalarField::from_fn(g.clone(), |x, y| x + y).unwrap();
        assert!(matches!(
            percent_error(&r, &r, None),
            Err(Error::ZeroReference { index: 0 })
        ));
        let src = SourceSet::new(vec![[0, 0]]).unwrap();
        let pe = percent_error(&r, &r, Some(&src)).unwrap();
        assert_eq!(pe.excluded, 1);
        assert_eq!(pe.included, 8);
    }

    #[test]
    fn bilinear_reproduces_linear_fields() {
        let g = GridSpec::new_2d([4, 5], [0.0, -1.0], [0.5, 0.5]).unwrap();
        let f = ScalarField::from_fn(g, |x, y| 3.0 * x - 2.0 * y + 1.0).unwrap();
        let v = f.sample_bilinear([0.8, 0.1]).unwrap();
        assert_abs_diff_eq!(v, 3.0 * 0.8 - 0.2 + 1.0, epsilon = 1e-12);
        assert!(f.sample_bilinear([5.0, 0.0]).is_none());
    }
}
