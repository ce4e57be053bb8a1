//! Regular sets as cell masks: generation of the example sets, estimation of
//! the regularity constants and nearest-point queries.
//!
//! A set S is the union of the closed cells in its mask. Its measure is the
//! cell count times `h^n`; distances to S are measured to the centers of its
//! cells, so every nearest point is a cell center.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{dist_inf, CellSet, Cube, Grid, Index, Point, SummedArea};

/// Above this many cells the regularity scan subsamples its centers.
const FULL_SCAN_LIMIT: usize = 100_000;

/// Slack for closed-set membership of cell centers.
const SLACK: f64 = 1e-9;

/// Description of one of the example sets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SetSpec {
    /// Closed box `[lo, hi]`.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// `{x : x[axis] >= offset}`.
    HalfSpace { axis: usize, offset: f64 },
    /// Fat Cantor set on `[lo, hi]` (product over all axes when n > 1). At
    /// generation g the open middle gap removed from every piece has length
    /// `removals[g] * (hi - lo)`.
    FatCantor { lo: f64, hi: f64, removals: Vec<f64> },
    /// Fat Sierpinski carpet on the square `[lo, lo + side]^2`: every
    /// rectangle of generation g loses the open centered rectangle whose
    /// sides are `ratios[g]` times its own, and the eight surrounding pieces
    /// recurse.
    FatSierpinskiCarpet { lo: [f64; 2], side: f64, ratios: Vec<f64> },
    /// `{(x, y) : x_lo <= x <= x_hi, y_lo <= y <= g(x)}` in the plane, with
    /// `g` piecewise linear through equally spaced samples.
    LipschitzSubgraph { x_lo: f64, x_hi: f64, y_lo: f64, samples: Vec<f64> },
    Union { parts: Vec<SetSpec> },
}

/// Closed-form pieces of a spec, ready for point membership tests.
enum Shape {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    HalfSpace { axis: usize, offset: f64 },
    Cantor { pieces: Vec<(f64, f64)> },
    Carpet { outer: [f64; 4], holes: Vec<[f64; 4]> },
    Subgraph { x_lo: f64, x_hi: f64, y_lo: f64, samples: Vec<f64> },
    Union(Vec<Shape>),
}

fn in_closed(x: f64, a: f64, b: f64) -> bool {
    let s = SLACK * (1.0 + a.abs().max(b.abs()));
    x >= a - s && x <= b + s
}

fn in_open(x: f64, a: f64, b: f64) -> bool {
    let s = SLACK * (1.0 + a.abs().max(b.abs()));
    x > a + s && x < b - s
}

impl Shape {
    fn contains(&self, p: &Point, n: usize) -> bool {
        match self {
            Shape::Box { lo, hi } => (0..n).all(|a| in_closed(p[a], lo[a], hi[a])),
            Shape::HalfSpace { axis, offset } => p[*axis] >= offset - SLACK * (1.0 + offset.abs()),
            Shape::Cantor { pieces } => (0..n).all(|a| {
                let i = pieces.partition_point(|&(_, b)| b < p[a] - SLACK);
                i < pieces.len() && in_closed(p[a], pieces[i].0, pieces[i].1)
            }),
            Shape::Carpet { outer, holes } => {
                in_closed(p[0], outer[0], outer[1])
                    && in_closed(p[1], outer[2], outer[3])
                    && !holes.iter().any(|h| in_open(p[0], h[0], h[1]) && in_open(p[1], h[2], h[3]))
            }
            Shape::Subgraph { x_lo, x_hi, y_lo, samples } => {
                if !in_closed(p[0], *x_lo, *x_hi) {
                    return false;
                }
                let g = interp(samples, (p[0] - x_lo) / (x_hi - x_lo));
                in_closed(p[1], *y_lo, g)
            }
            Shape::Union(parts) => parts.iter().any(|s| s.contains(p, n)),
        }
    }
}

fn interp(samples: &[f64], s: f64) -> f64 {
    if samples.len() == 1 {
        return samples[0];
    }
    let m = (samples.len() - 1) as f64;
    let x = (s * m).clamp(0.0, m);
    let i = (x.floor() as usize).min(samples.len() - 2);
    let f = x - i as f64;
    samples[i] * (1.0 - f) + samples[i + 1] * f
}

fn cantor_pieces(lo: f64, hi: f64, removals: &[f64]) -> Result<Vec<(f64, f64)>> {
    let len = hi - lo;
    if !(len > 0.0) {
        return Err(Error::DegenerateSpec("fat Cantor needs lo < hi".into()));
    }
    let mut pieces = vec![(lo, hi)];
    for (g, &r) in removals.iter().enumerate() {
        let gap = r * len;
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::DegenerateSpec(format!("removal {r} at generation {g} not in (0,1)")));
        }
        let mut next = Vec::with_capacity(2 * pieces.len());
        for &(a, b) in &pieces {
            if gap >= b - a {
                return Err(Error::DegenerateSpec(format!("gap at generation {g} swallows a piece")));
            }
            let m = 0.5 * (a + b);
            next.push((a, m - 0.5 * gap));
            next.push((m + 0.5 * gap, b));
        }
        pieces = next;
    }
    Ok(pieces)
}

fn carpet_holes(lo: [f64; 2], side: f64, ratios: &[f64]) -> Result<Vec<[f64; 4]>> {
    let mut rects = vec![[lo[0], lo[0] + side, lo[1], lo[1] + side]];
    let mut holes = Vec::new();
    for (g, &rho) in ratios.iter().enumerate() {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::DegenerateSpec(format!("carpet ratio {rho} at generation {g} not in (0,1)")));
        }
        let mut next = Vec::with_capacity(8 * rects.len());
        for r in &rects {
            let split = |a: f64, b: f64| {
                let w = b - a;
                let e = 0.5 * (1.0 - rho) * w;
                [a, a + e, b - e, b]
            };
            let xs = split(r[0], r[1]);
            let ys = split(r[2], r[3]);
            holes.push([xs[1], xs[2], ys[1], ys[2]]);
            for i in 0..3 {
                for j in 0..3 {
                    if i == 1 && j == 1 {
                        continue;
                    }
                    next.push([xs[i], xs[i + 1], ys[j], ys[j + 1]]);
                }
            }
        }
        rects = next;
    }
    Ok(holes)
}

impl SetSpec {
    fn shape(&self, n: usize) -> Result<Shape> {
        Ok(match self {
            SetSpec::Box { lo, hi } => {
                if lo.len() != n || hi.len() != n {
                    return Err(Error::DegenerateSpec("box corner dimension differs from grid".into()));
                }
                Shape::Box { lo: lo.clone(), hi: hi.clone() }
            }
            SetSpec::HalfSpace { axis, offset } => {
                if *axis >= n {
                    return Err(Error::DegenerateSpec("half-space axis out of range".into()));
                }
                Shape::HalfSpace { axis: *axis, offset: *offset }
            }
            SetSpec::FatCantor { lo, hi, removals } => Shape::Cantor { pieces: cantor_pieces(*lo, *hi, removals)? },
            SetSpec::FatSierpinskiCarpet { lo, side, ratios } => {
                if n != 2 {
                    return Err(Error::DegenerateSpec("the carpet lives in the plane".into()));
                }
                Shape::Carpet { outer: [lo[0], lo[0] + side, lo[1], lo[1] + side], holes: carpet_holes(*lo, *side, ratios)? }
            }
            SetSpec::LipschitzSubgraph { x_lo, x_hi, y_lo, samples } => {
                if n != 2 {
                    return Err(Error::DegenerateSpec("the subgraph lives in the plane".into()));
                }
                if samples.is_empty() || !(x_hi > x_lo) {
                    return Err(Error::DegenerateSpec("subgraph needs samples and x_lo < x_hi".into()));
                }
                Shape::Subgraph { x_lo: *x_lo, x_hi: *x_hi, y_lo: *y_lo, samples: samples.clone() }
            }
            SetSpec::Union { parts } => {
                Shape::Union(parts.iter().map(|p| p.shape(n)).collect::<Result<Vec<_>>>()?)
            }
        })
    }

    /// Mask of the cells whose centers lie in the (truncated) set.
    pub fn rasterize(&self, grid: &Grid) -> Result<CellSet> {
        let shape = self.shape(grid.n())?;
        let n = grid.n();
        let set = CellSet::from_centers(*grid, |p| shape.contains(p, n));
        if set.is_empty() {
            return Err(Error::DegenerateSpec("the truncated construction has no cells on this grid".into()));
        }
        Ok(set)
    }

    /// Lebesgue measure of the truncated construction in closed form, when
    /// the set kind has one (unbounded and union kinds do not).
    pub fn nominal_measure(&self, n: usize) -> Option<f64> {
        match self {
            SetSpec::Box { lo, hi } => Some(lo.iter().zip(hi).map(|(a, b)| (b - a).max(0.0)).product()),
            SetSpec::FatCantor { lo, hi, removals } => {
                let len = hi - lo;
                let removed: f64 = removals.iter().enumerate().map(|(g, r)| 2f64.powi(g as i32) * r * len).sum();
                Some((len - removed).powi(n as i32))
            }
            SetSpec::FatSierpinskiCarpet { side, ratios, .. } => {
                Some(side * side * ratios.iter().map(|r| 1.0 - r * r).product::<f64>())
            }
            _ => None,
        }
    }
}

/// Regularity constants measured on a mask.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Regularity {
    pub theta: f64,
    pub delta: f64,
    pub centers_sampled: usize,
    pub stride: usize,
    pub radii: Vec<f64>,
    /// `(delta, theta(delta))` for every admissible candidate.
    pub profile: Vec<(f64, f64)>,
}

/// A closed set given by a cell mask together with its regularity constants.
#[derive(Clone, Debug)]
pub struct RegularSet {
    pub cells: CellSet,
    pub theta: f64,
    pub delta: f64,
    list: Vec<usize>,
    index: PointIndex,
}

impl RegularSet {
    /// Wraps a mask with given constants.
    pub fn new(cells: CellSet, theta: f64, delta: f64) -> Result<RegularSet> {
        if cells.is_empty() {
            return Err(Error::EmptySet);
        }
        let list = cells.cells();
        let index = PointIndex::new(&cells);
        Ok(RegularSet { cells, theta, delta, list, index })
    }

    /// Wraps a mask and estimates its constants on the default radius ladder.
    pub fn estimate(cells: CellSet) -> Result<RegularSet> {
        let radii = default_radii(cells.grid());
        let reg = estimate_regularity(&cells, &radii)?;
        RegularSet::new(cells, reg.theta, reg.delta)
    }

    pub fn grid(&self) -> &Grid {
        self.cells.grid()
    }

    pub fn contains(&self, cell: usize) -> bool {
        self.cells.contains(cell)
    }

    /// Cells of S in increasing flat order.
    pub fn cell_list(&self) -> &[usize] {
        &self.list
    }

    pub fn with_constants(&self, theta: f64, delta: f64) -> RegularSet {
        RegularSet { theta, delta, ..self.clone() }
    }

    /// Nearest cell of S to `x` in the uniform norm: `(cell, center, distance)`.
    pub fn nearest(&self, x: &Point) -> (usize, Point, f64) {
        self.index.nearest(x)
    }
}

/// Geometric radius ladder `h * 2^{j/2}` up to the box radius.
pub fn default_radii(grid: &Grid) -> Vec<f64> {
    let mut out = Vec::new();
    let mut j = 0;
    loop {
        let r = grid.h() * 2f64.powf(j as f64 / 2.0);
        if r > grid.r_max() * (1.0 + 1e-12) {
            break;
        }
        out.push(r);
        j += 1;
    }
    out
}

pub fn generate_set(spec: &SetSpec, grid: &Grid) -> Result<RegularSet> {
    RegularSet::estimate(spec.rasterize(grid)?)
}

/// Ratio cap applied when choosing delta: the largest candidate whose
/// theta stays within this factor of the finest-scale value is returned.
pub const DELTA_THETA_SLACK: f64 = 2.0;

/// Measures `theta(delta)` on a lattice of cube radii and picks the pair.
///
/// `theta(delta)` is the largest ratio `|Q| / |Q cap S|` over cubes centered at
/// (sampled) cells of S with radius in `radii` and at most `delta / 2`;
/// cube measures count cell centers inside the box, so the full box has
/// theta 1. Only candidates `delta >= 16 h` are admissible. Since
/// `theta(delta)` never decreases, the finest admissible scale gives the
/// smallest theta; the returned delta is the largest admissible one whose
/// theta is within [`DELTA_THETA_SLACK`] of that minimum.
pub fn estimate_regularity(s: &CellSet, radii: &[f64]) -> Result<Regularity> {
    estimate_regularity_with(s, radii, DELTA_THETA_SLACK)
}

pub fn estimate_regularity_with(s: &CellSet, radii: &[f64], slack: f64) -> Result<Regularity> {
    let cells = s.cells();
    if cells.is_empty() {
        return Err(Error::EmptySet);
    }
    let grid = s.grid();
    let mut radii: Vec<f64> = radii.iter().copied().filter(|r| *r > 0.0).collect();
    radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
    radii.dedup();
    let stride = cells.len().div_ceil(FULL_SCAN_LIMIT).max(1);
    let centers: Vec<usize> = cells.iter().step_by(stride).copied().collect();

    let ones = vec![1.0; grid.len()];
    let inside: Vec<f64> = s.mask().iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    let all = SummedArea::new(grid, &ones);
    let sat = SummedArea::new(grid, &inside);

    let mut profile = Vec::new();
    let mut theta_run = 1.0f64;
    for &r in &radii {
        let mut worst = 1.0f64;
        for &c in &centers {
            let q = Cube::at(grid.center(c), r);
            if let Some(b) = grid.cube_index_box(&q) {
                let total = all.sum(&b);
                let hit = sat.sum(&b);
                worst = worst.max(total / hit);
            }
        }
        theta_run = theta_run.max(worst);
        let delta = 2.0 * r;
        if delta >= 16.0 * grid.h() * (1.0 - 1e-12) {
            profile.push((delta, theta_run));
        }
    }
    if profile.is_empty() {
        return Err(Error::DegenerateSpec("no radius reaches the 16h floor for delta".into()));
    }
    let base = profile[0].1;
    let &(delta, theta) = profile.iter().rev().find(|(_, t)| *t <= slack * base).unwrap();
    Ok(Regularity { theta, delta, centers_sampled: centers.len(), stride, radii, profile })
}

/// Nearest-point queries against the cell centers of a mask.
///
/// A pyramid of occupancy counts is searched best-first; ties are broken in
/// favour of the smallest flat index, which is the lexicographically smallest
/// multi-index.
#[derive(Clone, Debug)]
pub struct PointIndex {
    grid: Grid,
    /// `levels[l]` counts set cells in blocks of side `2^l`.
    levels: Vec<(Index, Vec<u32>)>,
}

#[derive(PartialEq)]
struct Item {
    dist: f64,
    leaf: bool,
    key: usize,
    level: usize,
    block: Index,
}

impl Eq for Item {}

impl Ord for Item {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap: reverse everything.
        other
            .dist
            .partial_cmp(&self.dist)
            .unwrap()
            .then_with(|| self.leaf.cmp(&other.leaf).reverse())
            .then_with(|| other.key.cmp(&self.key))
    }
}

impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PointIndex {
    pub fn new(s: &CellSet) -> PointIndex {
        let grid = *s.grid();
        let d0 = grid.padded_dims();
        let mut levels = vec![(d0, s.mask().iter().map(|&b| b as u32).collect::<Vec<u32>>())];
        while levels.last().unwrap().0.iter().any(|&d| d > 1) {
            let (d, counts) = levels.last().unwrap();
            let nd = [d[0].div_ceil(2), d[1].div_ceil(2), d[2].div_ceil(2)];
            let mut next = vec![0u32; nd[0] * nd[1] * nd[2]];
            for i in 0..d[0] {
                for j in 0..d[1] {
                    for k in 0..d[2] {
                        next[((i / 2) * nd[1] + j / 2) * nd[2] + k / 2] += counts[(i * d[1] + j) * d[2] + k];
                    }
                }
            }
            levels.push((nd, next));
        }
        PointIndex { grid, levels }
    }

    fn block_bound(&self, level: usize, block: &Index, x: &Point) -> f64 {
        let g = &self.grid;
        let side = 1usize << level;
        let dims = g.padded_dims();
        let mut d = 0.0f64;
        for a in 0..g.n() {
            let lo = block[a] * side;
            let hi = ((block[a] + 1) * side).min(dims[a]) - 1;
            let clo = g.axis_center(a, lo);
            let chi = g.axis_center(a, hi);
            let gap = if x[a] < clo {
                clo - x[a]
            } else if x[a] > chi {
                x[a] - chi
            } else {
                0.0
            };
            d = d.max(gap);
        }
        d
    }

    pub fn nearest(&self, x: &Point) -> (usize, Point, f64) {
        let top = self.levels.len() - 1;
        let mut heap = BinaryHeap::new();
        let push_children = |heap: &mut BinaryHeap<Item>, level: usize, block: Index| {
            let (dims, counts) = &self.levels[level];
            let lo: Index = if level == top { [0; 3] } else { [block[0] * 2, block[1] * 2, block[2] * 2] };
            let hi: Index = if level == top {
                [dims[0] - 1, dims[1] - 1, dims[2] - 1]
            } else {
                [(lo[0] + 1).min(dims[0] - 1), (lo[1] + 1).min(dims[1] - 1), (lo[2] + 1).min(dims[2] - 1)]
            };
            for i in lo[0]..=hi[0] {
                for j in lo[1]..=hi[1] {
                    for k in lo[2]..=hi[2] {
                        let key = (i * dims[1] + j) * dims[2] + k;
                        if counts[key] == 0 {
                            continue;
                        }
                        let b = [i, j, k];
                        heap.push(Item { dist: self.block_bound(level, &b, x), leaf: level == 0, key, level, block: b });
                    }
                }
            }
        };
        push_children(&mut heap, top, [0; 3]);
        while let Some(item) = heap.pop() {
            if item.leaf {
                let c = item.key;
                return (c, self.grid.center(c), dist_inf(&self.grid.center(c), x, self.grid.n()));
            }
            push_children(&mut heap, item.level - 1, item.block);
        }
        panic!("nearest-point query on an empty index");
    }
}

/// Nearest point of S to `x`: the center of the closest S cell.
pub fn nearest_point(s: &RegularSet, x: &Point) -> Point {
    s.nearest(x).1
}

/// Cells of S whose centers lie in the cube.
pub fn set_cells_in(s: &RegularSet, cube: &Cube) -> Vec<usize> {
    let g = s.grid();
    let mut out = Vec::new();
    if let Some(b) = g.cube_index_box(cube) {
        g.for_each_in(&b, |c, _| {
            if s.contains(c) {
                out.push(c)
            }
        });
    }
    out
}
