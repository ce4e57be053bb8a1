//! Norm-like functionals: sharp maximal functions, Hardy-Littlewood maximal
//! functions, moduli of continuity, (k,p)-moduli and the intrinsic and
//! whole-space (semi)norms of the Sobolev, Triebel-Lizorkin and Besov scales.
//!
//! Every `dt/t` integral and every `sup_{t>0}` is taken over a geometric
//! radius ladder starting at the cell size. Integrals use the trapezoid rule
//! in `log t`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::approx::{CubeKernel, MAX_ORDER};
use crate::error::{Error, Result};
use crate::grid::{dist_inf, lu_norm_cells, CellSet, Cube, Grid, GridFunction, IndexBox, Point, SummedArea, MAX_DIM};

/// Smallest `q` for which results are considered validated.
pub const MIN_VALIDATED_Q: f64 = 0.25;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Space {
    Sobolev,
    #[serde(rename = "tl")]
    TriebelLizorkin,
    Besov,
}

impl std::str::FromStr for Space {
    type Err = Error;
    fn from_str(s: &str) -> Result<Space> {
        match s {
            "sobolev" | "w" => Ok(Space::Sobolev),
            "tl" | "f" => Ok(Space::TriebelLizorkin),
            "besov" | "b" => Ok(Space::Besov),
            other => Err(Error::Config(format!("unknown space {other:?}"))),
        }
    }
}

/// Smoothness `s`, order `k`, outer exponent `p`, fine index `q` and inner
/// exponent `u`. Infinite exponents are `f64::INFINITY`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceParams {
    pub s: f64,
    pub k: usize,
    pub p: f64,
    pub q: f64,
    pub u: f64,
}

fn inadmissible(msg: String) -> Error {
    Error::Inadmissible(msg)
}

impl SpaceParams {
    pub fn new(s: f64, k: usize, p: f64, q: f64, u: f64) -> SpaceParams {
        SpaceParams { s, k, p, q, u }
    }

    /// Parses `s,k,p,q,u`; `inf` is accepted for the exponents.
    pub fn parse(text: &str) -> Result<SpaceParams> {
        let parts: Vec<&str> = text.split(',').map(str::trim).collect();
        if parts.len() != 5 {
            return Err(Error::Config(format!("expected s,k,p,q,u, got {text:?}")));
        }
        let num = |x: &str| -> Result<f64> {
            match x {
                "inf" | "infinity" => Ok(f64::INFINITY),
                _ => x.parse::<f64>().map_err(|_| Error::Config(format!("bad number {x:?}"))),
            }
        };
        let k = parts[1].parse::<usize>().map_err(|_| Error::Config(format!("bad order {:?}", parts[1])))?;
        Ok(SpaceParams::new(num(parts[0])?, k, num(parts[2])?, num(parts[3])?, num(parts[4])?))
    }

    /// Ranges every functional needs.
    pub fn check_basic(&self) -> Result<()> {
        if !(self.s >= 0.0 && self.s.is_finite()) {
            return Err(inadmissible(format!("s = {} must be finite and >= 0", self.s)));
        }
        if self.k > MAX_ORDER {
            return Err(inadmissible(format!("k = {} exceeds {MAX_ORDER}", self.k)));
        }
        if !(self.p >= 1.0) {
            return Err(inadmissible(format!("p = {} must be >= 1", self.p)));
        }
        if !(self.q > 0.0) {
            return Err(inadmissible(format!("q = {} must be > 0", self.q)));
        }
        if !(self.u >= 1.0) {
            return Err(inadmissible(format!("u = {} must lie in [1, inf]", self.u)));
        }
        Ok(())
    }

    /// `0 <= s < k`, or `s <= k` when `q = inf`.
    pub fn check_sharp(&self) -> Result<()> {
        self.check_basic()?;
        let k = self.k as f64;
        if self.q.is_infinite() {
            if self.s > k {
                return Err(inadmissible(format!("s = {} > k = {} with q = inf", self.s, self.k)));
            }
        } else if self.s >= k {
            return Err(inadmissible(format!("s = {} >= k = {} with finite q", self.s, self.k)));
        }
        Ok(())
    }

    pub fn check(&self, space: Space) -> Result<()> {
        self.check_basic()?;
        match space {
            Space::Sobolev => {
                if self.k == 0 || self.s != self.k as f64 {
                    return Err(inadmissible(format!("Sobolev needs s = k >= 1, got s = {}, k = {}", self.s, self.k)));
                }
                if !(self.p > 1.0) {
                    return Err(inadmissible(format!("Sobolev needs p > 1, got {}", self.p)));
                }
                if !self.q.is_infinite() || self.u != 1.0 {
                    return Err(inadmissible("Sobolev needs q = inf and u = 1".into()));
                }
            }
            Space::TriebelLizorkin => {
                if !(self.s > 0.0 && self.s < self.k as f64) {
                    return Err(inadmissible(format!("TL needs 0 < s < k, got s = {}, k = {}", self.s, self.k)));
                }
                if !(self.p > 1.0 && self.p.is_finite()) {
                    return Err(inadmissible(format!("TL needs 1 < p < inf, got {}", self.p)));
                }
                if !(self.q >= 1.0) || self.u != 1.0 {
                    return Err(inadmissible(format!("TL needs q >= 1 and u = 1, got q = {}, u = {}", self.q, self.u)));
                }
            }
            Space::Besov => {
                if !(self.s > 0.0 && self.s < self.k as f64) {
                    return Err(inadmissible(format!("Besov needs 0 < s < k, got s = {}, k = {}", self.s, self.k)));
                }
                if self.u > self.p {
                    return Err(inadmissible(format!("Besov needs u <= p, got u = {}, p = {}", self.u, self.p)));
                }
            }
        }
        Ok(())
    }

    /// `q` below [`MIN_VALIDATED_Q`]: computed, but not validated.
    pub fn unvalidated(&self) -> bool {
        self.q < MIN_VALIDATED_Q
    }
}

/// Geometric radii `t_j = h 2^{j/m}` (m per octave) up to a cap.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiusLadder {
    pub t: Vec<f64>,
    pub per_octave: usize,
}

impl RadiusLadder {
    pub fn new(h: f64, cap: f64, per_octave: usize) -> RadiusLadder {
        let per_octave = per_octave.max(1);
        let mut t = Vec::new();
        let mut j = 0;
        loop {
            let r = h * 2f64.powf(j as f64 / per_octave as f64);
            if r > cap * (1.0 + 1e-9) {
                break;
            }
            t.push(r);
            j += 1;
        }
        RadiusLadder { t, per_octave }
    }

    /// Four radii per octave from `h` to the box radius.
    pub fn for_grid(grid: &Grid) -> RadiusLadder {
        RadiusLadder::new(grid.h(), grid.r_max(), 4)
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Number of leading radii not above `cap`.
    pub fn count_upto(&self, cap: f64) -> usize {
        self.t.iter().take_while(|&&t| t <= cap * (1.0 + 1e-9)).count()
    }

    /// Index of a radius on the ladder.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        self.t.iter().position(|&x| (x - t).abs() <= 1e-9 * t)
    }

    /// Same radii range, twice the density.
    pub fn doubled(&self) -> RadiusLadder {
        let h = self.t.first().copied().unwrap_or(1.0);
        let cap = self.t.last().copied().unwrap_or(h);
        RadiusLadder::new(h, cap, 2 * self.per_octave)
    }
}

/// `int g(t) dt/t` over the sample points by the trapezoid rule in `log t`.
pub fn log_trapezoid(t: &[f64], g: &[f64]) -> f64 {
    t.windows(2).zip(g.windows(2)).map(|(tw, gw)| 0.5 * (gw[0] + gw[1]) * (tw[1] / tw[0]).ln()).sum()
}

/// `(int (v(t) / t^s)^q dt/t)^{1/q}`, or `max v(t) / t^s` for `q = inf`.
pub fn lq_dt(t: &[f64], v: &[f64], s: f64, q: f64) -> f64 {
    if q.is_infinite() {
        return t.iter().zip(v).map(|(t, v)| v / t.powf(s)).fold(0.0, f64::max);
    }
    let g: Vec<f64> = t.iter().zip(v).map(|(t, v)| (v / t.powf(s)).powf(q)).collect();
    log_trapezoid(t, &g).powf(1.0 / q)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableOptions {
    /// Centers are evaluated on a sublattice of spacing at most
    /// `t / (stride_factor h)` cells and interpolated in between; 0 disables.
    pub stride_factor: f64,
}

impl Default for TableOptions {
    fn default() -> Self {
        TableOptions { stride_factor: 2.0 }
    }
}

/// Largest power of two not above `max(1, t / (c h))`.
fn stride_for(t: f64, h: f64, c: f64) -> usize {
    if c <= 0.0 {
        return 1;
    }
    let ratio = t / (c * h);
    let mut s = 1usize;
    while (2 * s) as f64 <= ratio {
        s *= 2;
    }
    s
}

/// `E_k(f; Q(x, t) ∩ S)_{L_u}` normalized by `|Q(x,t)|`, for every ladder
/// radius and every target cell `x` (cells of S, or the whole box).
#[derive(Clone, Debug)]
pub struct LocalApproxTable {
    pub k: usize,
    pub u: f64,
    pub t: Vec<f64>,
    grid: Grid,
    values: Vec<Vec<f64>>,
}

impl LocalApproxTable {
    pub fn build(f: &GridFunction, set: Option<&CellSet>, k: usize, u: f64, t: &[f64], opts: TableOptions) -> LocalApproxTable {
        let grid = *f.grid();
        let n = grid.n();
        let mask = set.map(|s| s.mask());
        let targets: Vec<usize> = match set {
            Some(s) => s.cells(),
            None => (0..grid.len()).collect(),
        };
        let mut kernel = CubeKernel::new(grid, k, u);
        let dims = grid.padded_dims();
        let mut values = Vec::with_capacity(t.len());
        for &r in t {
            let mut rung = vec![0.0; grid.len()];
            let sigma = stride_for(r, grid.h(), opts.stride_factor);
            if sigma == 1 {
                for &c in &targets {
                    rung[c] = kernel.eval(f.values(), mask, &Cube::at(grid.center(c), r));
                }
            } else {
                // Sublattice per axis, always including the last index.
                let lattice: Vec<Vec<usize>> = (0..MAX_DIM)
                    .map(|a| {
                        if a >= n {
                            return vec![0];
                        }
                        let mut v: Vec<usize> = (0..dims[a]).step_by(sigma).collect();
                        if *v.last().unwrap() != dims[a] - 1 {
                            v.push(dims[a] - 1);
                        }
                        v
                    })
                    .collect();
                let ext = [lattice[0].len(), lattice[1].len(), lattice[2].len()];
                let mut coarse = vec![0.0; ext[0] * ext[1] * ext[2]];
                for i0 in 0..ext[0] {
                    for i1 in 0..ext[1] {
                        for i2 in 0..ext[2] {
                            let idx = [lattice[0][i0], lattice[1][i1], lattice[2][i2]];
                            let x = grid.center_of(&idx);
                            coarse[(i0 * ext[1] + i1) * ext[2] + i2] = kernel.eval(f.values(), mask, &Cube::at(x, r));
                        }
                    }
                }
                for &c in &targets {
                    let idx = grid.multi(c);
                    let mut base = [0usize; MAX_DIM];
                    let mut frac = [0.0; MAX_DIM];
                    for a in 0..n {
                        let pos = (idx[a] / sigma).min(ext[a] - 2);
                        let (lo, hi) = (lattice[a][pos], lattice[a][pos + 1]);
                        base[a] = pos;
                        frac[a] = (idx[a] - lo) as f64 / (hi - lo) as f64;
                    }
                    let mut v = 0.0;
                    for m in 0..(1usize << n) {
                        let mut wgt = 1.0;
                        let mut at = base;
                        for a in 0..n {
                            if m >> a & 1 == 1 {
                                at[a] += 1;
                                wgt *= frac[a];
                            } else {
                                wgt *= 1.0 - frac[a];
                            }
                        }
                        if wgt != 0.0 {
                            v += wgt * coarse[(at[0] * ext[1] + at[1]) * ext[2] + at[2]];
                        }
                    }
                    rung[c] = v;
                }
            }
            values.push(rung);
        }
        LocalApproxTable { k, u, t: t.to_vec(), grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn rung(&self, j: usize) -> &[f64] {
        &self.values[j]
    }

    pub fn at(&self, j: usize, cell: usize) -> f64 {
        self.values[j][cell]
    }

    /// Profile `t -> E(x, t)` at one cell over the first `count` radii.
    pub fn profile(&self, cell: usize, count: usize) -> Vec<f64> {
        self.values[..count].iter().map(|r| r[cell]).collect()
    }

    /// `(int_0^cap (E(x,t)/t^s)^q dt/t)^{1/q}` (max for `q = inf`) at each
    /// listed cell; other cells are 0.
    pub fn sharp(&self, cells: &[usize], s: f64, q: f64, cap: f64) -> Vec<f64> {
        let count = self.t.iter().take_while(|&&t| t <= cap * (1.0 + 1e-9)).count();
        let ts = &self.t[..count];
        let mut out = vec![0.0; self.grid.len()];
        let inv: Vec<f64> = ts.iter().map(|t| t.powf(-s)).collect();
        if q.is_infinite() {
            for &c in cells {
                out[c] = (0..count).map(|j| self.values[j][c] * inv[j]).fold(0.0, f64::max);
            }
            return out;
        }
        // Trapezoid weights in log t, so the integral is a weighted sum.
        let mut w = vec![0.0; count];
        for j in 1..count {
            let l = 0.5 * (ts[j] / ts[j - 1]).ln();
            w[j - 1] += l;
            w[j] += l;
        }
        for &c in cells {
            let mut acc = 0.0;
            for j in 0..count {
                let g = self.values[j][c] * inv[j];
                acc += w[j]
                    * if q == 1.0 {
                        g
                    } else if q == 2.0 {
                        g * g
                    } else {
                        g.powf(q)
                    };
            }
            out[c] = if q == 1.0 {
                acc
            } else if q == 2.0 {
                acc.sqrt()
            } else {
                acc.powf(1.0 / q)
            };
        }
        out
    }

    /// `||E(., t_j)||_{L_p}` over the listed cells, per radius.
    pub fn norm_profile(&self, cells: &[usize], p: f64) -> Vec<f64> {
        let vol = self.grid.cell_volume();
        self.values.iter().map(|r| lu_norm_cells(r, cells.iter().copied(), p, vol)).collect()
    }
}

/// Fractional sharp maximal function `sup_r r^{-alpha} E_k(f; Q(x,r))_{L_1(S)}`
/// at the cells of S, with `k` the least integer not below `alpha`.
pub fn sharp_maximal(f: &GridFunction, s: &CellSet, alpha: f64, ladder: &RadiusLadder, opts: TableOptions) -> Vec<f64> {
    let k = order_for(alpha);
    let table = LocalApproxTable::build(f, Some(s), k, 1.0, &ladder.t, opts);
    table.sharp(&s.cells(), alpha, f64::INFINITY, f64::INFINITY)
}

/// Order paired with a sharp-function smoothness: the greatest integer
/// strictly below `alpha + 1`.
pub fn order_for(alpha: f64) -> usize {
    (-(-alpha).floor()) as usize
}

/// Generalized sharp maximal function for `v = (s, k, q, u)` truncated at
/// `cap` (use infinity for no truncation).
pub fn generalized_sharp(
    f: &GridFunction,
    s: Option<&CellSet>,
    v: &SpaceParams,
    cap: f64,
    ladder: &RadiusLadder,
    opts: TableOptions,
) -> Result<Vec<f64>> {
    v.check_sharp()?;
    let table = LocalApproxTable::build(f, s, v.k, v.u, &ladder.t, opts);
    let cells = match s {
        Some(s) => s.cells(),
        None => (0..f.grid().len()).collect(),
    };
    Ok(table.sharp(&cells, v.s, v.q, cap))
}

/// Cube averages of `|g|^u` on the ladder, for pointwise maximal functions.
#[derive(Clone, Debug)]
pub struct HlMaximal {
    sat: SummedArea,
    u: f64,
    t: Vec<f64>,
    n: usize,
}

impl HlMaximal {
    pub fn new(g: &GridFunction, u: f64, ladder: &RadiusLadder) -> Result<HlMaximal> {
        if !(u >= 1.0 && u.is_finite()) {
            return Err(Error::Lp(format!("maximal exponent u = {u} must be finite and >= 1")));
        }
        let powered: Vec<f64> = g.values().iter().map(|v| v.abs().powf(u)).collect();
        Ok(HlMaximal { sat: SummedArea::new(g.grid(), &powered), u, t: ladder.t.clone(), n: g.grid().n() })
    }

    /// `M_u g(x)` over the ladder radii.
    pub fn at(&self, x: &Point) -> f64 {
        let best = self
            .t
            .iter()
            .map(|&r| {
                let q = Cube::at(*x, r);
                self.sat.integral(&q).max(0.0) / q.volume(self.n)
            })
            .fold(0.0, f64::max);
        best.powf(1.0 / self.u)
    }
}

/// `M_u g = (M |g|^u)^{1/u}` at every cell center.
pub fn hl_maximal(g: &GridFunction, u: f64, ladder: &RadiusLadder) -> Result<GridFunction> {
    let m = HlMaximal::new(g, u, ladder)?;
    let grid = *g.grid();
    let vals = (0..grid.len()).map(|c| m.at(&grid.center(c))).collect();
    GridFunction::new(grid, vals)
}

/// Values on the cells of S, zero elsewhere.
pub fn zero_extend(f: &GridFunction, s: &CellSet) -> GridFunction {
    let vals = f.values().iter().enumerate().map(|(c, &v)| if s.contains(c) { v } else { 0.0 }).collect();
    GridFunction::new(*f.grid(), vals).expect("finite input stays finite")
}

fn binomial(k: usize, j: usize) -> f64 {
    (0..j).fold(1.0, |acc, i| acc * (k - i) as f64 / (i + 1) as f64)
}

/// Lattice directions: the axes and the diagonals, one per sign pair.
fn shift_directions(n: usize) -> Vec<[i64; MAX_DIM]> {
    let mut out = Vec::new();
    let total = 3usize.pow(n as u32);
    for code in 0..total {
        let mut d = [0i64; MAX_DIM];
        let mut c = code;
        for slot in d.iter_mut().take(n) {
            *slot = (c % 3) as i64 - 1;
            c /= 3;
        }
        // Keep the representative whose first nonzero entry is positive.
        match d.iter().find(|&&x| x != 0) {
            Some(&first) if first > 0 => out.push(d),
            _ => {}
        }
    }
    out
}

/// `||Delta^k_{m e} f||_{L_p}` over the cells where all `k + 1` points lie in
/// `window` (the whole box when `None`).
fn difference_norm(f: &GridFunction, k: usize, p: f64, shift: &[i64; MAX_DIM], window: Option<&IndexBox>) -> f64 {
    let grid = f.grid();
    let n = grid.n();
    let dims = grid.padded_dims();
    let strides = grid.strides();
    let coef: Vec<f64> = (0..=k).map(|j| if (k - j) % 2 == 0 { binomial(k, j) } else { -binomial(k, j) }).collect();
    let mut lo = [0i64; MAX_DIM];
    let mut hi = [0i64; MAX_DIM];
    for a in 0..MAX_DIM {
        let reach = shift[a] * k as i64;
        let (wlo, whi) = match window {
            Some(b) => (b.lo[a] as i64, b.hi[a] as i64),
            None => (0, dims[a] as i64 - 1),
        };
        lo[a] = wlo + (-reach).max(0);
        hi[a] = whi - reach.max(0);
        if a >= n {
            lo[a] = 0;
            hi[a] = 0;
        }
        if hi[a] < lo[a] {
            return 0.0;
        }
    }
    let step: i64 = (0..n).map(|a| shift[a] * strides[a] as i64).sum();
    let vals = f.values();
    let mut acc = 0.0f64;
    for i0 in lo[0]..=hi[0] {
        for i1 in lo[1]..=hi[1] {
            for i2 in lo[2]..=hi[2] {
                let c = (i0 as usize) * strides[0] + (i1 as usize) * strides[1] + i2 as usize;
                let mut d = 0.0;
                for (j, cj) in coef.iter().enumerate() {
                    d += cj * vals[(c as i64 + j as i64 * step) as usize];
                }
                let d = d.abs();
                if p.is_infinite() {
                    acc = acc.max(d);
                } else {
                    acc += d.powf(p);
                }
            }
        }
    }
    if p.is_infinite() {
        acc
    } else {
        (acc * grid.cell_volume()).powf(1.0 / p)
    }
}

/// `omega_k(f; t)_{L_p}` for every `t` in `ts`: the max of the difference
/// norms over lattice shifts (axes and diagonals) of length `m h`, where
/// `m h` runs over the values of `ts` rounded to whole cells, not above `t`.
pub fn modulus_profile(f: &GridFunction, k: usize, p: f64, ts: &[f64]) -> Result<Vec<f64>> {
    modulus_profile_in(f, k, p, ts, None)
}

/// `modulus_profile` with the differences confined to `window`.
pub fn modulus_profile_in(f: &GridFunction, k: usize, p: f64, ts: &[f64], window: Option<&IndexBox>) -> Result<Vec<f64>> {
    let grid = f.grid();
    let h = grid.h();
    if let Some(&t) = ts.iter().find(|&&t| t < h * (1.0 - 1e-9)) {
        return Err(Error::RadiusTooSmall { t, floor: h });
    }
    let mut mags: Vec<i64> = ts.iter().map(|t| ((t / h) * (1.0 + 1e-9)).floor().max(1.0) as i64).collect();
    mags.sort_unstable();
    mags.dedup();
    let dirs = shift_directions(grid.n());
    let per_mag: Vec<(f64, f64)> = mags
        .iter()
        .map(|&m| {
            let best = dirs
                .iter()
                .map(|d| {
                    let mut sh = [0i64; MAX_DIM];
                    for a in 0..MAX_DIM {
                        sh[a] = d[a] * m;
                    }
                    difference_norm(f, k, p, &sh, window)
                })
                .fold(0.0, f64::max);
            (m as f64 * h, best)
        })
        .collect();
    Ok(ts
        .iter()
        .map(|&t| per_mag.iter().filter(|(len, _)| *len <= t * (1.0 + 1e-9)).map(|x| x.1).fold(0.0, f64::max))
        .collect())
}

pub fn modulus_continuity(f: &GridFunction, k: usize, p: f64, t: f64) -> Result<f64> {
    Ok(modulus_profile(f, k, p, &[t])?[0])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KpModulus {
    /// Greedy packing estimate (a lower bound for the supremum).
    pub packing: f64,
    /// `||E_k(f; Q(., t))_{L_u(S)}||_{L_p(S)}`.
    pub integral: f64,
    /// Cubes in the greedy packing.
    pub cubes: usize,
}

/// Greedy packing of cubes `Q(x, t/2)` centered at `centers`, by decreasing
/// score `|Q ∩ S| e(x)^p`; centers at uniform distance `< t` conflict.
/// Returns `(value, cubes)`.
pub fn greedy_packing(grid: &Grid, centers: &[usize], e_half: &[f64], meas: &[f64], t: f64, p: f64) -> (f64, usize) {
    let n = grid.n();
    if p.is_infinite() {
        let best = centers.iter().filter(|&&c| meas[c] > 0.0).map(|&c| e_half[c]).fold(0.0, f64::max);
        return (best, usize::from(best > 0.0));
    }
    let mut order: Vec<(f64, usize)> = centers
        .iter()
        .map(|&c| (if meas[c] > 0.0 { meas[c] * e_half[c].powf(p) } else { 0.0 }, c))
        .filter(|x| x.0 > 0.0)
        .collect();
    order.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    let key = |x: &Point| -> [i64; MAX_DIM] {
        let mut k = [0i64; MAX_DIM];
        for a in 0..n {
            k[a] = ((x[a] - grid.box_lo(a)) / t).floor() as i64;
        }
        k
    };
    let mut buckets: HashMap<[i64; MAX_DIM], Vec<Point>> = HashMap::new();
    let mut total = 0.0;
    let mut count = 0;
    let offsets: Vec<[i64; MAX_DIM]> = (0..3usize.pow(n as u32))
        .map(|code| {
            let mut d = [0i64; MAX_DIM];
            let mut c = code;
            for slot in d.iter_mut().take(n) {
                *slot = (c % 3) as i64 - 1;
                c /= 3;
            }
            d
        })
        .collect();
    for (score, c) in order {
        let x = grid.center(c);
        let kx = key(&x);
        let clash = offsets.iter().any(|o| {
            let mut kk = kx;
            for a in 0..n {
                kk[a] += o[a];
            }
            buckets.get(&kk).is_some_and(|v| v.iter().any(|y| dist_inf(&x, y, n) < t * (1.0 - 1e-9)))
        });
        if !clash {
            buckets.entry(kx).or_default().push(x);
            total += score;
            count += 1;
        }
    }
    (total.powf(1.0 / p), count)
}

/// `|Q(x, r) ∩ S|` at every cell, exact for the closed union of cells.
pub fn set_measure_field(grid: &Grid, s: Option<&CellSet>, r: f64) -> Vec<f64> {
    let ind: Vec<f64> = match s {
        Some(s) => s.mask().iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
        None => vec![1.0; grid.len()],
    };
    let sat = SummedArea::new(grid, &ind);
    (0..grid.len()).map(|c| sat.integral(&Cube::at(grid.center(c), r))).collect()
}

/// Both estimators of `Omega_{k,p}(f; t)_{L_u(S)}`; `s = None` is the whole box.
pub fn kp_modulus(f: &GridFunction, s: Option<&CellSet>, k: usize, p: f64, u: f64, t: f64) -> Result<KpModulus> {
    let grid = *f.grid();
    if t < 4.0 * grid.h() * (1.0 - 1e-9) {
        return Err(Error::RadiusTooSmall { t, floor: 4.0 * grid.h() });
    }
    let table = LocalApproxTable::build(f, s, k, u, &[t / 2.0, t], TableOptions { stride_factor: 0.0 });
    let cells = match s {
        Some(s) => s.cells(),
        None => (0..grid.len()).collect(),
    };
    let meas = set_measure_field(&grid, s, t / 2.0);
    let (packing, cubes) = greedy_packing(&grid, &cells, table.rung(0), &meas, t, p);
    let integral = lu_norm_cells(table.rung(1), cells.iter().copied(), p, grid.cell_volume());
    Ok(KpModulus { packing, integral, cubes })
}

/// Splits the doubled cubes `Q(x, 2r)` into packings greedily; returns the
/// number of packings used.
pub fn split_into_packings(centers: &[Point], r: f64, n: usize) -> usize {
    let mut packings: Vec<Vec<Point>> = Vec::new();
    for x in centers {
        let slot = packings.iter().position(|pk| pk.iter().all(|y| dist_inf(x, y, n) >= 4.0 * r * (1.0 - 1e-9)));
        match slot {
            Some(i) => packings[i].push(*x),
            None => packings.push(vec![*x]),
        }
    }
    packings.len()
}

/// A function together with its domain and the cached tables and moduli the
/// norm functionals need.
#[derive(Debug)]
pub struct Analysis {
    pub f: GridFunction,
    pub set: Option<CellSet>,
    pub ladder: RadiusLadder,
    pub opts: TableOptions,
    cells: Vec<usize>,
    window: Option<IndexBox>,
    tables: HashMap<(usize, u64), LocalApproxTable>,
    moduli: HashMap<(usize, u64), Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormParts {
    pub value: f64,
    pub lp: f64,
    pub seminorm: f64,
}

impl NormParts {
    fn new(lp: f64, seminorm: f64) -> NormParts {
        NormParts { value: lp + seminorm, lp, seminorm }
    }
}

impl Analysis {
    /// `f` on S (`set = Some`) or on the whole box (`None`).
    pub fn new(f: GridFunction, set: Option<CellSet>, ladder: RadiusLadder, opts: TableOptions) -> Analysis {
        let cells = match &set {
            Some(s) => s.cells(),
            None => (0..f.grid().len()).collect(),
        };
        Analysis { f, set, ladder, opts, cells, window: None, tables: HashMap::new(), moduli: HashMap::new() }
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    /// Confines the outer norms and the modulus to a sub-box; the local
    /// approximation tables still see the whole function. Only for whole-box
    /// analyses.
    pub fn restrict(&mut self, window: IndexBox) {
        let grid = *self.f.grid();
        let mut cells = Vec::with_capacity(window.count());
        grid.for_each_in(&window, |c, _| cells.push(c));
        self.cells = cells;
        self.window = Some(window);
        self.moduli.clear();
    }

    pub fn table(&mut self, k: usize, u: f64) -> &LocalApproxTable {
        let key = (k, u.to_bits());
        if !self.tables.contains_key(&key) {
            let t = LocalApproxTable::build(&self.f, self.set.as_ref(), k, u, &self.ladder.t, self.opts);
            self.tables.insert(key, t);
        }
        &self.tables[&key]
    }

    pub fn lp(&self, p: f64) -> f64 {
        lu_norm_cells(self.f.values(), self.cells.iter().copied(), p, self.f.grid().cell_volume())
    }

    /// Generalized sharp function for `v`, truncated at `cap`.
    pub fn sharp(&mut self, v: &SpaceParams, cap: f64) -> Vec<f64> {
        let cells = self.cells.clone();
        self.table(v.k, v.u).sharp(&cells, v.s, v.q, cap)
    }

    pub fn sharp_norm(&mut self, v: &SpaceParams, cap: f64, p: f64) -> f64 {
        let g = self.sharp(v, cap);
        lu_norm_cells(&g, self.cells.iter().copied(), p, self.f.grid().cell_volume())
    }

    /// `||E_k(f; Q(., t_j))_{L_u(S)}||_{L_p(S)}` per ladder radius.
    pub fn approx_profile(&mut self, k: usize, u: f64, p: f64) -> Vec<f64> {
        let cells = self.cells.clone();
        self.table(k, u).norm_profile(&cells, p)
    }

    /// `omega_k(f; t_j)_{L_p}` per ladder radius (whole box only).
    pub fn modulus(&mut self, k: usize, p: f64) -> Vec<f64> {
        let key = (k, p.to_bits());
        if !self.moduli.contains_key(&key) {
            let prof = modulus_profile_in(&self.f, k, p, &self.ladder.t, self.window.as_ref()).expect("ladder starts at h");
            self.moduli.insert(key, prof);
        }
        self.moduli[&key].clone()
    }

    /// Both estimators of `Omega_{k,p}(f; t_j)_{L_u}` at ladder index `j`,
    /// using the radius `t_j / 2` for the packing. Requires `t_j >= 4h`.
    pub fn kp(&mut self, k: usize, p: f64, u: f64, j: usize) -> Result<KpModulus> {
        let grid = *self.f.grid();
        let t = self.ladder.t[j];
        if t < 4.0 * grid.h() * (1.0 - 1e-9) {
            return Err(Error::RadiusTooSmall { t, floor: 4.0 * grid.h() });
        }
        let half = self
            .ladder
            .index_of(t / 2.0)
            .ok_or_else(|| Error::Lp(format!("t/2 = {} is not on the ladder", t / 2.0)))?;
        let meas = set_measure_field(&grid, self.set.as_ref(), t / 2.0);
        let cells = self.cells.clone();
        let table = self.table(k, u);
        let (packing, cubes) = greedy_packing(&grid, &cells, table.rung(half), &meas, t, p);
        let integral = lu_norm_cells(table.rung(j), cells.iter().copied(), p, grid.cell_volume());
        Ok(KpModulus { packing, integral, cubes })
    }

    /// Intrinsic functional of `f` on S for the given space.
    pub fn trace_norm(&mut self, space: Space, v: &SpaceParams) -> Result<NormParts> {
        v.check(space)?;
        let lp = self.lp(v.p);
        let semi = match space {
            Space::Sobolev => {
                let sv = SpaceParams::new(v.k as f64, v.k, v.p, f64::INFINITY, 1.0);
                self.sharp_norm(&sv, f64::INFINITY, v.p)
            }
            Space::TriebelLizorkin => {
                let sv = SpaceParams::new(v.s, v.k, v.p, v.q, 1.0);
                self.sharp_norm(&sv, 1.0, v.p)
            }
            Space::Besov => self.besov_localapprox(v),
        };
        Ok(NormParts::new(lp, semi))
    }

    fn besov_localapprox(&mut self, v: &SpaceParams) -> f64 {
        let count = self.ladder.count_upto(1.0);
        let prof = self.approx_profile(v.k, v.u, v.p);
        lq_dt(&self.ladder.t[..count], &prof[..count], v.s, v.q)
    }

    /// Whole-space functionals of `F` on the box; inadmissible entries are
    /// `None`.
    pub fn wholespace_norms(&mut self, v: &SpaceParams) -> WholeSpaceNorms {
        let lp = self.lp(v.p);
        let calderon = (v.k >= 1 && v.p > 1.0).then(|| {
            let sv = SpaceParams::new(v.k as f64, v.k, v.p, f64::INFINITY, 1.0);
            NormParts::new(lp, self.sharp_norm(&sv, f64::INFINITY, v.p))
        });
        let tl = v.check(Space::TriebelLizorkin).is_ok().then(|| {
            let sv = SpaceParams::new(v.s, v.k, v.p, v.q, 1.0);
            NormParts::new(lp, self.sharp_norm(&sv, 1.0, v.p))
        });
        let besov_ok = v.check(Space::Besov).is_ok();
        let besov_modulus = besov_ok.then(|| {
            let count = self.ladder.count_upto(1.0);
            let om = self.modulus(v.k, v.p);
            NormParts::new(lp, lq_dt(&self.ladder.t[..count], &om[..count], v.s, v.q))
        });
        let besov_localapprox = besov_ok.then(|| NormParts::new(lp, self.besov_localapprox(v)));
        WholeSpaceNorms { calderon, tl, besov_modulus, besov_localapprox }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WholeSpaceNorms {
    pub calderon: Option<NormParts>,
    pub tl: Option<NormParts>,
    pub besov_modulus: Option<NormParts>,
    pub besov_localapprox: Option<NormParts>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceNorms {
    pub sobolev: Option<NormParts>,
    pub tl: Option<NormParts>,
    pub besov: Option<NormParts>,
}

/// The three intrinsic trace functionals of `f` on S; inadmissible entries
/// are `None`.
pub fn trace_seminorms(f: &GridFunction, s: &CellSet, v: &SpaceParams, ladder: &RadiusLadder, opts: TableOptions) -> TraceNorms {
    let mut a = Analysis::new(f.clone(), Some(s.clone()), ladder.clone(), opts);
    TraceNorms {
        sobolev: a.trace_norm(Space::Sobolev, v).ok(),
        tl: a.trace_norm(Space::TriebelLizorkin, v).ok(),
        besov: a.trace_norm(Space::Besov, v).ok(),
    }
}

pub fn wholespace_norms(f: &GridFunction, v: &SpaceParams, ladder: &RadiusLadder, opts: TableOptions) -> Result<WholeSpaceNorms> {
    v.check_basic()?;
    let mut a = Analysis::new(f.clone(), None, ladder.clone(), opts);
    Ok(a.wholespace_norms(v))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ladder_shape() {
        let l = RadiusLadder::new(0.01, 1.0, 4);
        assert_eq!(l.t[0], 0.01);
        assert!(l.t.windows(2).all(|w| (w[1] / w[0] - 2f64.powf(0.25)).abs() < 1e-12));
        assert!(*l.t.last().unwrap() <= 1.0 + 1e-9);
        assert_eq!(l.index_of(0.02), Some(4));
    }

    #[test]
    fn trapezoid_is_exact_for_log_linear() {
        // int_1^e (log t) dt/t = 1/2.
        let t: Vec<f64> = (0..=100).map(|j| (j as f64 / 100.0).exp()).collect();
        let g: Vec<f64> = t.iter().map(|t| t.ln()).collect();
        assert!((log_trapezoid(&t, &g) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn directions_count() {
        assert_eq!(shift_directions(1).len(), 1);
        assert_eq!(shift_directions(2).len(), 4);
        assert_eq!(shift_directions(3).len(), 13);
    }

    #[test]
    fn stride_is_power_of_two() {
        assert_eq!(stride_for(1.0, 1.0, 2.0), 1);
        assert_eq!(stride_for(8.0, 1.0, 2.0), 4);
        assert_eq!(stride_for(9.0, 1.0, 2.0), 4);
        assert_eq!(stride_for(9.0, 1.0, 0.0), 1);
    }
}
