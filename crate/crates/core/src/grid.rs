//! Uniform grids, closed cubes in the uniform norm, cell sets and grid
//! functions.
//!
//! Everything in the crate lives on a [`Grid`]: a box in R^n (n ≤ 3) cut into
//! cubic cells of side `h`. Internally every index and point is padded to
//! three axes; unused axes have one cell and coordinate zero, so loops are
//! always three deep and row-major order is preserved.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 3;

/// A point of R^n padded with zeros to three coordinates.
pub type Point = [f64; MAX_DIM];

/// Multi-index of a cell, padded with zeros.
pub type Index = [usize; MAX_DIM];

/// Relative slack used for closed-cube membership tests.
const MEMBERSHIP_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n: usize,
    dims: Index,
    origin: Point,
    h: f64,
}

impl Grid {
    pub fn new(dims: &[usize], origin: &[f64], h: f64) -> Result<Grid> {
        let n = dims.len();
        if !(1..=MAX_DIM).contains(&n) {
            return Err(Error::InvalidGrid(format!("dimension {n} not in 1..=3")));
        }
        if origin.len() != n {
            return Err(Error::InvalidGrid("origin length differs from dims".into()));
        }
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidGrid("every axis needs at least one cell".into()));
        }
        if !(h > 0.0 && h.is_finite()) || origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidGrid("h must be positive and coordinates finite".into()));
        }
        let mut d = [1; MAX_DIM];
        let mut o = [0.0; MAX_DIM];
        d[..n].copy_from_slice(dims);
        o[..n].copy_from_slice(origin);
        Ok(Grid { n, dims: d, origin: o, h })
    }

    /// Grid with `cells` cells per axis covering the cube `[lo, hi]^n`.
    pub fn uniform(n: usize, cells: usize, lo: f64, hi: f64) -> Result<Grid> {
        Grid::new(&vec![cells; n], &vec![lo; n], (hi - lo) / cells as f64)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims[..self.n]
    }

    pub fn padded_dims(&self) -> Index {
        self.dims
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin[..self.n]
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.n as i32)
    }

    pub fn strides(&self) -> Index {
        [self.dims[1] * self.dims[2], self.dims[2], 1]
    }

    pub fn flat(&self, idx: &Index) -> usize {
        (idx[0] * self.dims[1] + idx[1]) * self.dims[2] + idx[2]
    }

    pub fn multi(&self, flat: usize) -> Index {
        let i2 = flat % self.dims[2];
        let rest = flat / self.dims[2];
        [rest / self.dims[1], rest % self.dims[1], i2]
    }

    /// Coordinate of the center of cell `c` along `axis`.
    pub fn axis_center(&self, axis: usize, c: usize) -> f64 {
        if axis >= self.n {
            0.0
        } else {
            self.origin[axis] + (c as f64 + 0.5) * self.h
        }
    }

    pub fn center_of(&self, idx: &Index) -> Point {
        let mut p = [0.0; MAX_DIM];
        for (a, v) in p.iter_mut().enumerate().take(self.n) {
            *v = self.axis_center(a, idx[a]);
        }
        p
    }

    pub fn center(&self, flat: usize) -> Point {
        self.center_of(&self.multi(flat))
    }

    pub fn box_lo(&self, axis: usize) -> f64 {
        self.origin[axis]
    }

    pub fn box_hi(&self, axis: usize) -> f64 {
        self.origin[axis] + self.dims[axis] as f64 * self.h
    }

    /// Half the uniform-norm diameter of the box: the largest radius any
    /// supremum over cubes is taken to.
    pub fn r_max(&self) -> f64 {
        0.5 * self.h * *self.dims[..self.n].iter().max().unwrap() as f64
    }

    /// Cell containing `x`, if `x` lies in the box.
    pub fn cell_of(&self, x: &[f64]) -> Option<Index> {
        let mut idx = [0; MAX_DIM];
        for a in 0..self.n {
            let s = ((x[a] - self.origin[a]) / self.h).floor();
            if s < 0.0 || s >= self.dims[a] as f64 {
                return None;
            }
            idx[a] = s as usize;
        }
        Some(idx)
    }

    /// Inclusive range of cells along `axis` whose centers lie in `[lo, hi]`.
    pub fn axis_center_range(&self, axis: usize, lo: f64, hi: f64) -> Option<(usize, usize)> {
        if axis >= self.n {
            return Some((0, 0));
        }
        let slack = MEMBERSHIP_SLACK;
        let a = ((lo - self.origin[axis]) / self.h - 0.5 - slack).ceil();
        let b = ((hi - self.origin[axis]) / self.h - 0.5 + slack).floor();
        let a = a.max(0.0);
        let b = b.min(self.dims[axis] as f64 - 1.0);
        if a > b {
            None
        } else {
            Some((a as usize, b as usize))
        }
    }

    /// Index box of the cells whose centers lie in the closed cube.
    pub fn cube_index_box(&self, cube: &Cube) -> Option<IndexBox> {
        let mut lo = [0; MAX_DIM];
        let mut hi = [0; MAX_DIM];
        for a in 0..self.n {
            let (l, h) =
                self.axis_center_range(a, cube.center[a] - cube.radius, cube.center[a] + cube.radius)?;
            lo[a] = l;
            hi[a] = h;
        }
        Some(IndexBox { lo, hi })
    }

    /// Index box of the cells whose centers keep a distance `margin` from
    /// every face of the box.
    pub fn inner_box(&self, margin: f64) -> Option<IndexBox> {
        let mut lo = [0; MAX_DIM];
        let mut hi = [0; MAX_DIM];
        for a in 0..self.n {
            let (l, h) = self.axis_center_range(a, self.box_lo(a) + margin, self.box_hi(a) - margin)?;
            lo[a] = l;
            hi[a] = h;
        }
        Some(IndexBox { lo, hi })
    }

    /// Visit every cell of an index box in flat order.
    pub fn for_each_in(&self, b: &IndexBox, mut f: impl FnMut(usize, &Index)) {
        for i0 in b.lo[0]..=b.hi[0] {
            for i1 in b.lo[1]..=b.hi[1] {
                let base = (i0 * self.dims[1] + i1) * self.dims[2];
                for i2 in b.lo[2]..=b.hi[2] {
                    f(base + i2, &[i0, i1, i2]);
                }
            }
        }
    }

    /// Same grid refined by an integer factor (each cell split `factor^n` ways).
    pub fn refined(&self, factor: usize) -> Grid {
        let dims: Vec<usize> = self.dims().iter().map(|d| d * factor).collect();
        Grid::new(&dims, self.origin(), self.h / factor as f64).expect("refinement of a valid grid")
    }
}

/// Inclusive box of cell multi-indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IndexBox {
    pub lo: Index,
    pub hi: Index,
}

impl IndexBox {
    pub fn count(&self) -> usize {
        (0..MAX_DIM).map(|a| self.hi[a] - self.lo[a] + 1).product()
    }
}

/// Closed cube `Q(x, r) = {y : |y - x|_inf <= r}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cube {
    pub center: Point,
    pub radius: f64,
}

impl Cube {
    pub fn new(center: &[f64], radius: f64) -> Cube {
        let mut c = [0.0; MAX_DIM];
        c[..center.len()].copy_from_slice(center);
        Cube { center: c, radius }
    }

    pub fn at(center: Point, radius: f64) -> Cube {
        Cube { center, radius }
    }

    pub fn diam(&self) -> f64 {
        2.0 * self.radius
    }

    pub fn volume(&self, n: usize) -> f64 {
        (2.0 * self.radius).powi(n as i32)
    }

    pub fn scale(&self, lambda: f64) -> Cube {
        Cube { center: self.center, radius: lambda * self.radius }
    }

    /// The enlarged cube `Q* = (9/8) Q`.
    pub fn star(&self) -> Cube {
        self.scale(9.0 / 8.0)
    }

    pub fn contains(&self, x: &Point, n: usize) -> bool {
        dist_inf(&self.center, x, n) <= self.radius * (1.0 + MEMBERSHIP_SLACK)
    }

    /// Whether two closed cubes share a point.
    pub fn meets(&self, other: &Cube, n: usize) -> bool {
        dist_inf(&self.center, &other.center, n) <= self.radius + other.radius
    }

    /// Uniform-norm distance between two cubes (zero if they meet).
    pub fn dist(&self, other: &Cube, n: usize) -> f64 {
        (dist_inf(&self.center, &other.center, n) - self.radius - other.radius).max(0.0)
    }

    /// Uniform-norm distance from a point to the cube.
    pub fn dist_to(&self, x: &Point, n: usize) -> f64 {
        (dist_inf(&self.center, x, n) - self.radius).max(0.0)
    }
}

pub fn dist_inf(a: &Point, b: &Point, n: usize) -> f64 {
    (0..n).map(|i| (a[i] - b[i]).abs()).fold(0.0, f64::max)
}

/// A set of cells of a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct CellSet {
    grid: Grid,
    mask: Vec<bool>,
}

impl CellSet {
    pub fn empty(grid: Grid) -> CellSet {
        CellSet { grid, mask: vec![false; grid.len()] }
    }

    pub fn full(grid: Grid) -> CellSet {
        CellSet { grid, mask: vec![true; grid.len()] }
    }

    pub fn from_mask(grid: Grid, mask: Vec<bool>) -> Result<CellSet> {
        if mask.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        Ok(CellSet { grid, mask })
    }

    /// Cells whose centers satisfy the predicate.
    pub fn from_centers(grid: Grid, pred: impl Fn(&Point) -> bool) -> CellSet {
        let mask = (0..grid.len()).map(|c| pred(&grid.center(c))).collect();
        CellSet { grid, mask }
    }

    pub fn from_cells(grid: Grid, cells: &[usize]) -> CellSet {
        let mut s = CellSet::empty(grid);
        for &c in cells {
            s.mask[c] = true;
        }
        s
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn contains(&self, cell: usize) -> bool {
        self.mask[cell]
    }

    pub fn insert(&mut self, cell: usize) {
        self.mask[cell] = true;
    }

    pub fn remove(&mut self, cell: usize) {
        self.mask[cell] = false;
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|&b| b)
    }

    pub fn measure(&self) -> f64 {
        self.count() as f64 * self.grid.cell_volume()
    }

    pub fn cells(&self) -> Vec<usize> {
        self.iter().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }

    fn zip(&self, other: &CellSet, op: impl Fn(bool, bool) -> bool) -> Result<CellSet> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let mask = self.mask.iter().zip(&other.mask).map(|(&a, &b)| op(a, b)).collect();
        Ok(CellSet { grid: self.grid, mask })
    }

    pub fn intersection(&self, other: &CellSet) -> Result<CellSet> {
        self.zip(other, |a, b| a && b)
    }

    pub fn union(&self, other: &CellSet) -> Result<CellSet> {
        self.zip(other, |a, b| a || b)
    }

    pub fn difference(&self, other: &CellSet) -> Result<CellSet> {
        self.zip(other, |a, b| a && !b)
    }

    pub fn complement(&self) -> CellSet {
        CellSet { grid: self.grid, mask: self.mask.iter().map(|b| !b).collect() }
    }

    pub fn is_subset(&self, other: &CellSet) -> bool {
        self.grid == other.grid && self.mask.iter().zip(&other.mask).all(|(&a, &b)| !a || b)
    }
}

/// One finite real per cell.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<GridFunction> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(GridFunction { grid, values })
    }

    pub fn zeros(grid: Grid) -> GridFunction {
        GridFunction { grid, values: vec![0.0; grid.len()] }
    }

    /// Samples `f` at every cell center. Non-finite samples are an error.
    pub fn from_fn(grid: Grid, f: impl Fn(&Point) -> f64) -> Result<GridFunction> {
        let values = (0..grid.len()).map(|c| f(&grid.center(c))).collect();
        GridFunction::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, cell: usize) -> f64 {
        self.values[cell]
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &GridFunction, b: f64) -> Result<GridFunction> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let values = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        GridFunction::new(self.grid, values)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<GridFunction> {
        GridFunction::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }
}

/// Cells whose centers lie in the closed cube; cells outside the box are
/// simply absent.
pub fn cube_cells(grid: &Grid, cube: &Cube) -> CellSet {
    let mut set = CellSet::empty(*grid);
    if let Some(b) = grid.cube_index_box(cube) {
        grid.for_each_in(&b, |c, _| set.mask[c] = true);
    }
    set
}

/// `(sum_{c in A} |f(c)|^u h^n)^{1/u}`, or the max of `|f|` over `A` for
/// `u = inf`. The empty set has norm 0.
pub fn lu_norm(f: &GridFunction, a: &CellSet, u: f64) -> f64 {
    lu_norm_cells(f.values(), a.iter(), u, a.grid().cell_volume())
}

pub fn lu_norm_cells(values: &[f64], cells: impl Iterator<Item = usize>, u: f64, vol: f64) -> f64 {
    if u.is_infinite() {
        cells.map(|c| values[c].abs()).fold(0.0, f64::max)
    } else if u == 1.0 {
        cells.map(|c| values[c].abs()).sum::<f64>() * vol
    } else if u == 2.0 {
        (cells.map(|c| values[c] * values[c]).sum::<f64>() * vol).sqrt()
    } else {
        (cells.map(|c| values[c].abs().powf(u)).sum::<f64>() * vol).powf(1.0 / u)
    }
}

pub fn measure(a: &CellSet) -> f64 {
    a.measure()
}

/// Overlap fractions of the cells of the grid with a cube.
///
/// `w[a][i]` is the fraction of the side of cell `lo[a] + i` along axis `a`
/// covered by the cube; the overlap volume of a cell is the product. Integrals
/// of cellwise constant data against these weights are exact.
#[derive(Clone, Debug)]
pub struct CubeWeights {
    pub lo: Index,
    pub hi: Index,
    pub w: [Vec<f64>; MAX_DIM],
}

/// Weights below this fraction are treated as no overlap.
const OVERLAP_FLOOR: f64 = 1e-12;

pub fn cube_weights(grid: &Grid, cube: &Cube) -> Option<CubeWeights> {
    let mut lo = [0; MAX_DIM];
    let mut hi = [0; MAX_DIM];
    let mut w: [Vec<f64>; MAX_DIM] = [vec![1.0], vec![1.0], vec![1.0]];
    let h = grid.h();
    for a in 0..grid.n() {
        let s0 = (cube.center[a] - cube.radius - grid.box_lo(a)) / h;
        let s1 = (cube.center[a] + cube.radius - grid.box_lo(a)) / h;
        let d = grid.dims[a] as f64;
        let (s0, s1) = (s0.max(0.0), s1.min(d));
        if s1 - s0 <= OVERLAP_FLOOR {
            return None;
        }
        let mut l = s0.floor() as usize;
        let mut u = (s1.ceil() as usize).saturating_sub(1).max(l);
        let frac = |c: usize| ((c + 1) as f64).min(s1) - (c as f64).max(s0);
        while l < u && frac(l) <= OVERLAP_FLOOR {
            l += 1;
        }
        while u > l && frac(u) <= OVERLAP_FLOOR {
            u -= 1;
        }
        lo[a] = l;
        hi[a] = u;
        w[a] = (l..=u).map(|c| frac(c).clamp(0.0, 1.0)).collect();
    }
    Some(CubeWeights { lo, hi, w })
}

/// Summed-area table of a per-cell quantity, with a leading zero layer on
/// every axis.
#[derive(Clone, Debug)]
pub struct SummedArea {
    grid: Grid,
    ext: Index,
    table: Vec<f64>,
}

impl SummedArea {
    pub fn new(grid: &Grid, values: &[f64]) -> SummedArea {
        let d = grid.padded_dims();
        let ext = [d[0] + 1, d[1] + 1, d[2] + 1];
        let mut table = vec![0.0; ext[0] * ext[1] * ext[2]];
        let at = |i: usize, j: usize, k: usize| (i * ext[1] + j) * ext[2] + k;
        for i in 0..d[0] {
            for j in 0..d[1] {
                for k in 0..d[2] {
                    table[at(i + 1, j + 1, k + 1)] = values[(i * d[1] + j) * d[2] + k];
                }
            }
        }
        for axis in 0..MAX_DIM {
            for i in 0..ext[0] {
                for j in 0..ext[1] {
                    for k in 0..ext[2] {
                        let idx = [i, j, k];
                        if idx[axis] == 0 {
                            continue;
                        }
                        let mut prev = idx;
                        prev[axis] -= 1;
                        table[at(i, j, k)] += table[at(prev[0], prev[1], prev[2])];
                    }
                }
            }
        }
        SummedArea { grid: *grid, ext, table }
    }

    fn corner(&self, i: usize, j: usize, k: usize) -> f64 {
        self.table[(i * self.ext[1] + j) * self.ext[2] + k]
    }

    /// Sum of the values over an inclusive index box.
    pub fn sum(&self, b: &IndexBox) -> f64 {
        let mut total = 0.0;
        for m in 0..8usize {
            let mut idx = [0; MAX_DIM];
            let mut sign = 1.0;
            for a in 0..MAX_DIM {
                if m >> a & 1 == 1 {
                    idx[a] = b.lo[a];
                    sign = -sign;
                } else {
                    idx[a] = b.hi[a] + 1;
                }
            }
            total += sign * self.corner(idx[0], idx[1], idx[2]);
        }
        total
    }

    /// Cumulative integral up to a continuous position given in cell units,
    /// interpolated multilinearly between table corners.
    fn cumulative(&self, s: &Point) -> f64 {
        let mut base = [0; MAX_DIM];
        let mut frac = [0.0; MAX_DIM];
        for a in 0..MAX_DIM {
            let top = (self.ext[a] - 1) as f64;
            let x = s[a].clamp(0.0, top);
            let f = x.floor().min(top - 1.0).max(0.0);
            base[a] = f as usize;
            frac[a] = x - f;
        }
        let mut v = 0.0;
        for m in 0..8usize {
            let mut wgt = 1.0;
            let mut idx = base;
            for a in 0..MAX_DIM {
                if m >> a & 1 == 1 {
                    idx[a] += 1;
                    wgt *= frac[a];
                } else {
                    wgt *= 1.0 - frac[a];
                }
            }
            if wgt != 0.0 {
                v += wgt * self.corner(idx[0], idx[1], idx[2]);
            }
        }
        v
    }

    /// Exact integral of the cellwise-constant data over the cube (the part
    /// outside the box contributes zero).
    pub fn integral(&self, cube: &Cube) -> f64 {
        let g = &self.grid;
        let mut lo = [0.0; MAX_DIM];
        let mut hi = [0.0; MAX_DIM];
        for a in 0..MAX_DIM {
            if a < g.n() {
                lo[a] = (cube.center[a] - cube.radius - g.box_lo(a)) / g.h();
                hi[a] = (cube.center[a] + cube.radius - g.box_lo(a)) / g.h();
            } else {
                lo[a] = 0.0;
                hi[a] = 1.0;
            }
        }
        let mut total = 0.0;
        for m in 0..8usize {
            let mut p = [0.0; MAX_DIM];
            let mut sign = 1.0;
            for a in 0..MAX_DIM {
                if m >> a & 1 == 1 {
                    p[a] = lo[a];
                    sign = -sign;
                } else {
                    p[a] = hi[a];
                }
            }
            total += sign * self.cumulative(&p);
        }
        total * g.cell_volume()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_and_multi_roundtrip() {
        let g = Grid::new(&[3, 4, 5], &[0.0, 0.0, 0.0], 0.5).unwrap();
        for c in 0..g.len() {
            assert_eq!(g.flat(&g.multi(c)), c);
        }
        assert_eq!(g.multi(1), [0, 0, 1]);
    }

    #[test]
    fn cube_cells_line() {
        let g = Grid::new(&[10], &[0.0], 0.1).unwrap();
        let s = cube_cells(&g, &Cube::new(&[0.5], 0.2));
        let centers: Vec<f64> = s.iter().map(|c| g.center(c)[0]).collect();
        assert_eq!(centers.len(), 4);
        assert!((centers[0] - 0.35).abs() < 1e-12 && (centers[3] - 0.65).abs() < 1e-12);
    }

    #[test]
    fn weights_cover_exact_volume() {
        let g = Grid::new(&[20, 20], &[0.0, 0.0], 0.05).unwrap();
        let q = Cube::new(&[0.43, 0.61], 0.137);
        let w = cube_weights(&g, &q).unwrap();
        let mut vol = 0.0;
        for (i, wi) in w.w[0].iter().enumerate() {
            for (j, wj) in w.w[1].iter().enumerate() {
                let _ = (i, j);
                vol += wi * wj;
            }
        }
        assert!((vol * g.cell_volume() - q.volume(2)).abs() < 1e-12);
    }

    #[test]
    fn summed_area_integral_matches_weights() {
        let g = Grid::new(&[7, 9], &[-1.0, 0.0], 0.25).unwrap();
        let vals: Vec<f64> = (0..g.len()).map(|c| (c as f64 * 0.37).sin()).collect();
        let sat = SummedArea::new(&g, &vals);
        let q = Cube::new(&[-0.3, 1.1], 0.61);
        let w = cube_weights(&g, &q).unwrap();
        let mut direct = 0.0;
        for (i, wi) in w.w[0].iter().enumerate() {
            for (j, wj) in w.w[1].iter().enumerate() {
                direct += wi * wj * vals[g.flat(&[w.lo[0] + i, w.lo[1] + j, 0])];
            }
        }
        direct *= g.cell_volume();
        assert!((sat.integral(&q) - direct).abs() < 1e-12);
        let b = IndexBox { lo: [1, 2, 0], hi: [4, 6, 0] };
        let mut s = 0.0;
        g.for_each_in(&b, |c, _| s += vals[c]);
        assert!((sat.sum(&b) - s).abs() < 1e-12);
    }
}
