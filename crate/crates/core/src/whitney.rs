//! Dyadic Whitney decomposition of the complement of S in the uniform norm,
//! neighbor queries and a smooth partition of unity.
//!
//! Cube geometry is exact: corners and sides are integers in units of
//! `h / UNITS_PER_CELL`, and distances to S are integers in the same unit
//! (S cell centers sit at half-cell positions). The dyadic tree starts from
//! root tiles of the box and refines below the cell size near S, down to
//! `h / 8`, so that complement cells touching S are still covered by cubes
//! satisfying the size/distance window.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Cube, Grid, Point, MAX_DIM};
use crate::regular_set::RegularSet;

/// Sub-cell resolution of the integer cube coordinates.
pub const UNITS_PER_CELL: i64 = 64;

/// Smallest cube side in units (`h / 8`).
const MIN_SIDE: i64 = UNITS_PER_CELL / 8;

/// Acceptance window on `dist(x_Q, S) / diam Q`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    /// Cubes are accepted once the ratio reaches `lo`.
    pub lo: f64,
    /// Root cubes above this ratio are flagged as too coarse.
    pub hi: f64,
}

impl Default for Window {
    fn default() -> Self {
        Window { lo: 1.5, hi: 6.0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WhitneyCube {
    pub cube: Cube,
    /// Min corner in units.
    pub corner: [i64; MAX_DIM],
    /// Side in units.
    pub side: i64,
    /// `dist(x_Q, S)` in units.
    pub center_dist: i64,
    /// `Q*` leaves the box, or a root cube is farther from S than the window
    /// allows.
    pub flagged: bool,
}

impl WhitneyCube {
    pub fn diam(&self) -> f64 {
        self.cube.diam()
    }

    /// `dist(Q, S)` in units.
    pub fn set_dist_units(&self) -> i64 {
        self.center_dist - self.side / 2
    }

    /// Twice the center in units (always an integer).
    fn center2(&self) -> [i64; MAX_DIM] {
        let mut c = [0; MAX_DIM];
        for a in 0..MAX_DIM {
            c[a] = 2 * self.corner[a] + self.side;
        }
        c
    }
}

#[derive(Clone, Debug)]
pub struct WhitneyDecomposition {
    grid: Grid,
    pub cubes: Vec<WhitneyCube>,
    /// Uniform-norm distance from each cell center to the nearest S center.
    pub dist: Vec<f64>,
    pub index: CubeIndex,
    pub window: Window,
}

/// Exact chessboard distance transform (in cells) from the cells of a mask.
///
/// Two raster passes propagate `d + 1` from all `3^n - 1` neighbors; for the
/// uniform norm this is exact.
pub fn chessboard_transform(grid: &Grid, mask: &[bool]) -> Vec<u32> {
    let d = grid.padded_dims();
    let inf = u32::MAX / 2;
    let mut out: Vec<u32> = mask.iter().map(|&b| if b { 0 } else { inf }).collect();
    let idx = |i: usize, j: usize, k: usize| (i * d[1] + j) * d[2] + k;
    let relax = |out: &mut Vec<u32>, i: usize, j: usize, k: usize, forward: bool| {
        let mut best = out[idx(i, j, k)];
        for di in -1i64..=1 {
            for dj in -1i64..=1 {
                for dk in -1i64..=1 {
                    let lin = (di * 9 + dj * 3 + dk) as i32;
                    if (forward && lin >= 0) || (!forward && lin <= 0) {
                        continue;
                    }
                    let (ni, nj, nk) = (i as i64 + di, j as i64 + dj, k as i64 + dk);
                    if ni < 0 || nj < 0 || nk < 0 || ni >= d[0] as i64 || nj >= d[1] as i64 || nk >= d[2] as i64 {
                        continue;
                    }
                    best = best.min(out[idx(ni as usize, nj as usize, nk as usize)] + 1);
                }
            }
        }
        out[idx(i, j, k)] = best;
    };
    for i in 0..d[0] {
        for j in 0..d[1] {
            for k in 0..d[2] {
                relax(&mut out, i, j, k, true);
            }
        }
    }
    for i in (0..d[0]).rev() {
        for j in (0..d[1]).rev() {
            for k in (0..d[2]).rev() {
                relax(&mut out, i, j, k, false);
            }
        }
    }
    out
}

/// Uniform-norm distance from every cell center to the nearest S cell
/// center.
pub fn distance_field(s: &RegularSet, grid: &Grid) -> Vec<f64> {
    chessboard_transform(grid, s.cells.mask()).iter().map(|&d| d as f64 * grid.h()).collect()
}

fn unit_to_coord(grid: &Grid, axis: usize, twice_units: i64) -> f64 {
    if axis >= grid.n() {
        0.0
    } else {
        grid.box_lo(axis) + twice_units as f64 * grid.h() / (2 * UNITS_PER_CELL) as f64
    }
}

/// Exact distance (in units) from a point given by twice its unit
/// coordinates to the nearest S cell center.
fn set_distance_units(s: &RegularSet, grid: &Grid, c2: &[i64; MAX_DIM]) -> i64 {
    let mut x: Point = [0.0; MAX_DIM];
    for (a, v) in x.iter_mut().enumerate() {
        *v = unit_to_coord(grid, a, c2[a]);
    }
    let (cell, _, _) = s.nearest(&x);
    let idx = grid.multi(cell);
    let mut d2 = 0i64;
    for a in 0..grid.n() {
        let s2 = (2 * idx[a] as i64 + 1) * UNITS_PER_CELL;
        d2 = d2.max((c2[a] - s2).abs());
    }
    // Cube sides are even and S centers sit at multiples of U / 2, so both
    // doubled coordinates are even and the halving is exact.
    d2 / 2
}

pub fn whitney_decompose(s: &RegularSet, grid: &Grid) -> Result<WhitneyDecomposition> {
    whitney_decompose_with(s, grid, Window::default())
}

pub fn whitney_decompose_with(s: &RegularSet, grid: &Grid, window: Window) -> Result<WhitneyDecomposition> {
    if s.grid() != grid {
        return Err(Error::GridMismatch);
    }
    let n = grid.n();
    let dims = grid.dims();
    let dist = distance_field(s, grid);
    let complement_cells: usize = s.cells.mask().iter().filter(|&&b| !b).count();

    // Root tiles: largest power of two dividing every axis length.
    let mut root = 1usize;
    while dims.iter().all(|d| d % (root * 2) == 0) {
        root *= 2;
    }
    let root_side = root as i64 * UNITS_PER_CELL;
    let mut tiles = [1usize; MAX_DIM];
    for a in 0..n {
        tiles[a] = dims[a] / root;
    }
    let box_units: Vec<i64> = dims.iter().map(|&d| d as i64 * UNITS_PER_CELL).collect();

    let mut cubes = Vec::new();
    if complement_cells > 0 {
        let mut stack: Vec<([i64; MAX_DIM], i64, bool)> = Vec::new();
        for i in (0..tiles[0]).rev() {
            for j in (0..tiles[1]).rev() {
                for k in (0..tiles[2]).rev() {
                    let t = [i, j, k];
                    let mut corner = [0i64; MAX_DIM];
                    for a in 0..n {
                        corner[a] = t[a] as i64 * root_side;
                    }
                    stack.push((corner, root_side, true));
                }
            }
        }
        while let Some((corner, side, is_root)) = stack.pop() {
            if !star_has_complement_center(grid, s, &corner, side) {
                continue;
            }
            let mut c2 = [0i64; MAX_DIM];
            for a in 0..n {
                c2[a] = 2 * corner[a] + side;
            }
            let dq = set_distance_units(s, grid, &c2);
            // diam Q = side.
            if dq as f64 >= window.lo * side as f64 {
                let mut center = [0.0; MAX_DIM];
                for (a, v) in center.iter_mut().enumerate() {
                    *v = unit_to_coord(grid, a, c2[a]);
                }
                let radius = side as f64 * grid.h() / (2 * UNITS_PER_CELL) as f64;
                let leaves_box = (0..n).any(|a| {
                    // Q* = 9/8 Q leaves the box iff 9 side / 16 exceeds the
                    // gap from the center to a face (scaled by 16).
                    let half = 9 * side;
                    8 * c2[a] - half < 0 || 8 * c2[a] + half > 16 * box_units[a]
                });
                // Only roots can land here: a child of a rejected parent
                // is within 3.5 diameters of S.
                let too_far = is_root && (dq - side / 2 > 4 * side || dq as f64 > window.hi * side as f64);
                cubes.push(WhitneyCube {
                    cube: Cube::at(center, radius),
                    corner,
                    side,
                    center_dist: dq,
                    flagged: leaves_box || too_far,
                });
            } else if side > MIN_SIDE {
                let half = side / 2;
                for m in (0..(1usize << n)).rev() {
                    let mut c = corner;
                    for (a, v) in c.iter_mut().enumerate().take(n) {
                        if m >> a & 1 == 1 {
                            *v += half;
                        }
                    }
                    stack.push((c, half, false));
                }
            }
        }
    }
    let index = CubeIndex::new(grid, &cubes);
    Ok(WhitneyDecomposition { grid: *grid, cubes, dist, index, window })
}

/// Whether `Q*` (closed) contains the center of some cell outside S.
fn star_has_complement_center(
    grid: &Grid,
    s: &RegularSet,
    corner: &[i64; MAX_DIM],
    side: i64,
) -> bool {
    let n = grid.n();
    let mut lo = [0usize; MAX_DIM];
    let mut hi = [0usize; MAX_DIM];
    for a in 0..n {
        // Q* spans [2c - 9 side/8, 2c + 9 side/8] in half units, i.e.
        // 16 * coordinate in [16 c - 9 side, 16 c + 9 side] with c in units.
        let c16 = 8 * (2 * corner[a] + side);
        let a16 = c16 - 9 * side;
        let b16 = c16 + 9 * side;
        // Cell m has center (2m + 1) * U / 2 units, i.e. 8 (2m + 1) U in
        // sixteenths.
        let u8 = 8 * UNITS_PER_CELL;
        let first = ((a16 - u8) as f64 / (2 * u8) as f64).ceil().max(0.0) as i64;
        let last = (((b16 - u8) as f64 / (2 * u8) as f64).floor() as i64).min(grid.dims()[a] as i64 - 1);
        if first > last {
            return false;
        }
        lo[a] = first as usize;
        hi[a] = last as usize;
    }
    let b = crate::grid::IndexBox { lo, hi };
    let mut found = false;
    grid.for_each_in(&b, |c, _| {
        if !found && !s.contains(c) {
            found = true;
        }
    });
    found
}

impl WhitneyDecomposition {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    /// Position of a cube in the family.
    pub fn find(&self, q: &Cube) -> Option<usize> {
        let n = self.grid.n();
        let cell = self.grid.cell_of(&q.center[..n])?;
        self.index.candidates(self.grid.flat(&cell)).iter().map(|&i| i as usize).find(|&i| {
            let c = &self.cubes[i].cube;
            (0..n).all(|a| (c.center[a] - q.center[a]).abs() <= 1e-12 * (1.0 + q.center[a].abs()))
                && (c.radius - q.radius).abs() <= 1e-12 * q.radius
        })
    }

    /// Indices of the cubes K with `K* ∩ Q* ≠ ∅` (including Q itself).
    pub fn neighbor_ids(&self, id: usize) -> Vec<usize> {
        let q = &self.cubes[id];
        let q2 = q.center2();
        let n = self.grid.n();
        let mut out = Vec::new();
        let star = q.cube.star();
        let mut seen = std::collections::HashSet::new();
        self.index.for_each_cell_meeting(&self.grid, &star, |cell| {
            for &k in self.index.candidates(cell) {
                let k = k as usize;
                if !seen.insert(k) {
                    continue;
                }
                let kc = &self.cubes[k];
                let k2 = kc.center2();
                // |x_Q - x_K| <= 9/8 (r_Q + r_K), in twice-units scaled by 8.
                let sep = (0..n).map(|a| (q2[a] - k2[a]).abs()).max().unwrap_or(0);
                if 8 * sep <= 9 * (q.side + kc.side) {
                    out.push(k);
                }
            }
        });
        out.sort_unstable();
        out
    }

    pub fn neighbors(&self, q: &Cube) -> Result<Vec<Cube>> {
        let id = self.find(q).ok_or(Error::NotInDecomposition)?;
        Ok(self.neighbor_ids(id).into_iter().map(|k| self.cubes[k].cube).collect())
    }

    /// Number of cubes whose closed cube contains the point.
    pub fn multiplicity(&self, x: &Point) -> usize {
        let n = self.grid.n();
        let Some(cell) = self.grid.cell_of(&x[..n]) else { return 0 };
        self.index
            .candidates(self.grid.flat(&cell))
            .iter()
            .filter(|&&k| self.cubes[k as usize].cube.contains(x, n))
            .count()
    }
}

/// For every cell, the cubes whose `Q*` meets the cell's closed region.
#[derive(Clone, Debug, Default)]
pub struct CubeIndex {
    offsets: Vec<u32>,
    ids: Vec<u32>,
}

impl CubeIndex {
    pub fn new(grid: &Grid, cubes: &[WhitneyCube]) -> CubeIndex {
        let mut counts = vec![0u32; grid.len() + 1];
        let mut pairs: Vec<(u32, u32)> = Vec::new();
        let tmp = CubeIndex::default();
        for (i, q) in cubes.iter().enumerate() {
            tmp.for_each_cell_meeting(grid, &q.cube.star(), |c| pairs.push((c as u32, i as u32)));
        }
        for &(c, _) in &pairs {
            counts[c as usize + 1] += 1;
        }
        for c in 0..grid.len() {
            counts[c + 1] += counts[c];
        }
        let mut ids = vec![0u32; pairs.len()];
        let mut fill = counts.clone();
        for &(c, i) in &pairs {
            ids[fill[c as usize] as usize] = i;
            fill[c as usize] += 1;
        }
        CubeIndex { offsets: counts, ids }
    }

    pub fn candidates(&self, cell: usize) -> &[u32] {
        &self.ids[self.offsets[cell] as usize..self.offsets[cell + 1] as usize]
    }

    /// Visits the cells whose closed region meets the closed cube.
    pub fn for_each_cell_meeting(&self, grid: &Grid, q: &Cube, mut f: impl FnMut(usize)) {
        let mut lo = [0usize; MAX_DIM];
        let mut hi = [0usize; MAX_DIM];
        for a in 0..grid.n() {
            let s0 = ((q.center[a] - q.radius - grid.box_lo(a)) / grid.h()).floor() as i64;
            let s1 = ((q.center[a] + q.radius - grid.box_lo(a)) / grid.h()).floor() as i64;
            // Flooring both ends registers a cube with every cell that
            // `Grid::cell_of` can return for a point of the cube.
            let s0 = s0.max(0);
            let s1 = s1.min(grid.dims()[a] as i64 - 1);
            if s0 > s1 {
                return;
            }
            lo[a] = s0 as usize;
            hi[a] = s1 as usize;
        }
        grid.for_each_in(&crate::grid::IndexBox { lo, hi }, |c, _| f(c));
    }
}

/// Smoothstep of order `2m + 1`: `0` at 0, `1` at 1, with `m` vanishing
/// derivatives at both ends.
pub fn smoothstep(m: usize, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 0..=m {
        let c = binom(m + j, j) * binom(2 * m + 1, m - j);
        sum += c * (-x).powi(j as i32);
    }
    x.powi(m as i32 + 1) * sum
}

fn binom(n: usize, k: usize) -> f64 {
    let mut r = 1.0;
    for i in 0..k {
        r = r * (n - i) as f64 / (i + 1) as f64;
    }
    r
}

/// Tensor-product bump equal to 1 on Q and vanishing outside `Q*`.
pub fn bump(q: &Cube, m: usize, x: &Point, n: usize) -> f64 {
    let band = q.radius / 8.0;
    let mut v = 1.0;
    for a in 0..n {
        let s = ((x[a] - q.center[a]).abs() - q.radius) / band;
        if s >= 1.0 {
            return 0.0;
        }
        if s > 0.0 {
            v *= 1.0 - smoothstep(m, s);
        }
    }
    v
}

/// Partition of unity subordinate to a Whitney family, tabulated at the
/// complement cell centers.
#[derive(Clone, Debug)]
pub struct PartitionOfUnity {
    pub m: usize,
    /// CSR over cells: `offsets[c]..offsets[c + 1]` index `entries`.
    offsets: Vec<u32>,
    entries: Vec<(u32, f64)>,
    normalize: bool,
}

impl PartitionOfUnity {
    /// `(cube id, phi_Q(x_c))` for the cubes whose bump is nonzero at cell c.
    pub fn at_cell(&self, cell: usize) -> &[(u32, f64)] {
        &self.entries[self.offsets[cell] as usize..self.offsets[cell + 1] as usize]
    }

    pub fn is_normalized(&self) -> bool {
        self.normalize
    }
}

pub fn partition_of_unity(w: &WhitneyDecomposition, s: &RegularSet, m: usize) -> PartitionOfUnity {
    build_partition(w, s, m, true)
}

/// Same tabulation with the normalization step optionally skipped; the
/// unnormalized table exists for fault-injection tests.
pub fn build_partition(w: &WhitneyDecomposition, s: &RegularSet, m: usize, normalize: bool) -> PartitionOfUnity {
    let grid = w.grid();
    let n = grid.n();
    let mut offsets = Vec::with_capacity(grid.len() + 1);
    let mut entries = Vec::new();
    offsets.push(0u32);
    for c in 0..grid.len() {
        if !s.contains(c) {
            let x = grid.center(c);
            let start = entries.len();
            let mut total = 0.0;
            for &k in w.index.candidates(c) {
                let v = bump(&w.cubes[k as usize].cube, m, &x, n);
                if v > 0.0 {
                    entries.push((k, v));
                    total += v;
                }
            }
            if normalize && total > 0.0 {
                for e in &mut entries[start..] {
                    e.1 /= total;
                }
            }
        }
        offsets.push(entries.len() as u32);
    }
    PartitionOfUnity { m, offsets, entries, normalize }
}

/// `phi_Q(x)` at an arbitrary point of the box outside S.
pub fn phi_at(w: &WhitneyDecomposition, m: usize, id: usize, x: &Point) -> f64 {
    let grid = w.grid();
    let n = grid.n();
    let Some(cell) = grid.cell_of(&x[..n]) else { return 0.0 };
    let mut total = 0.0;
    let mut mine = 0.0;
    for &k in w.index.candidates(grid.flat(&cell)) {
        let v = bump(&w.cubes[k as usize].cube, m, x, n);
        total += v;
        if k as usize == id {
            mine = v;
        }
    }
    if total > 0.0 {
        mine / total
    } else {
        0.0
    }
}
