//! Local polynomial approximation: the least-squares projector onto
//! polynomials of degree `< k`, best approximation `E_k` in `L_u`, its
//! normalized form and the per-cube projectors used by the extension.

pub mod lp;
pub mod polynomial;

pub use polynomial::{dimension, exponents, Basis, Polynomial};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::{cube_weights, CellSet, Cube, Grid, GridFunction, Point, MAX_DIM};
use crate::quasicube::QuasiCubeFamily;
use crate::regular_set::RegularSet;
use crate::whitney::WhitneyDecomposition;

/// Largest polynomial order `k` handled by the cube kernel.
pub const MAX_ORDER: usize = 6;

/// Pivots below this fraction of the largest Gram diagonal are dropped.
pub const RANK_TOL: f64 = 1e-10;

/// Solves `G x = b` for a symmetric positive semidefinite `d x d` matrix by
/// Cholesky factorization with diagonal pivoting. Directions whose pivot
/// falls below `rel_tol * max diag` are dropped (their coefficients are zero).
/// Returns the solution and the numerical rank.
pub fn solve_psd(g: &[f64], b: &[f64], d: usize, rel_tol: f64) -> (Vec<f64>, usize) {
    let mut a = g.to_vec();
    let mut perm: Vec<usize> = (0..d).collect();
    let maxdiag = (0..d).map(|i| g[i * d + i]).fold(0.0, f64::max);
    let tol = rel_tol * maxdiag;
    let mut rank = 0;
    if maxdiag > 0.0 {
        for j in 0..d {
            // Pivot: largest remaining diagonal of the Schur complement.
            let (p, &best) = (j..d)
                .map(|i| (i, &a[perm[i] * d + perm[i]]))
                .max_by(|x, y| x.1.partial_cmp(y.1).unwrap())
                .unwrap();
            if best <= tol {
                break;
            }
            perm.swap(j, p);
            let pj = perm[j];
            let l = best.sqrt();
            a[pj * d + pj] = l;
            for &pi in &perm[j + 1..] {
                a[pi * d + pj] /= l;
            }
            for ii in j + 1..d {
                let pi = perm[ii];
                let lij = a[pi * d + pj];
                for &pk in &perm[j + 1..=ii] {
                    a[pi * d + pk] -= lij * a[pk * d + pj];
                }
            }
            // Keep the upper triangle in sync for the pivot search.
            for ii in j + 1..d {
                let pi = perm[ii];
                for &pk in &perm[j + 1..=ii] {
                    a[pk * d + pi] = a[pi * d + pk];
                }
            }
            rank += 1;
        }
    }
    let mut y = vec![0.0; rank];
    for i in 0..rank {
        let pi = perm[i];
        let mut s = b[pi];
        for (j, yj) in y.iter().enumerate().take(i) {
            s -= a[pi * d + perm[j]] * yj;
        }
        y[i] = s / a[pi * d + pi];
    }
    let mut x = vec![0.0; d];
    for i in (0..rank).rev() {
        let pi = perm[i];
        let mut s = y[i];
        for j in i + 1..rank {
            s -= a[perm[j] * d + pi] * x[perm[j]];
        }
        x[pi] = s / a[pi * d + pi];
    }
    (x, rank)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Fit {
    pub poly: Polynomial,
    pub rank: usize,
    /// The Gram matrix was rank deficient (or the set empty).
    pub deficient: bool,
}

/// Weighted least-squares polynomial of degree `< k` through the samples,
/// followed by one step of iterative refinement on the data residual.
pub fn fit_weighted(
    n: usize,
    k: usize,
    pts: &[Point],
    vals: &[f64],
    wts: &[f64],
    center: Point,
    scale: f64,
) -> Fit {
    let basis = Basis::new(n, k);
    let d = basis.len();
    let mut poly = Polynomial { n, k, center, scale, coeffs: vec![0.0; d] };
    if d == 0 {
        return Fit { poly, rank: 0, deficient: false };
    }
    if pts.is_empty() {
        return Fit { poly, rank: 0, deficient: true };
    }
    let mut design = vec![0.0; pts.len() * d];
    for (i, x) in pts.iter().enumerate() {
        let mut y = [0.0; MAX_DIM];
        for a in 0..n {
            y[a] = (x[a] - center[a]) / scale;
        }
        basis.fill(&y, &mut design[i * d..(i + 1) * d]);
    }
    let mut g = vec![0.0; d * d];
    for (i, row) in design.chunks_exact(d).enumerate() {
        let w = wts[i];
        for r in 0..d {
            let wr = w * row[r];
            for c in r..d {
                g[r * d + c] += wr * row[c];
            }
        }
    }
    for r in 0..d {
        for c in 0..r {
            g[r * d + c] = g[c * d + r];
        }
    }
    let rhs = |resid: &dyn Fn(usize) -> f64| {
        let mut b = vec![0.0; d];
        for (i, row) in design.chunks_exact(d).enumerate() {
            let wr = wts[i] * resid(i);
            for (bj, mj) in b.iter_mut().zip(row) {
                *bj += wr * mj;
            }
        }
        b
    };
    let b = rhs(&|i| vals[i]);
    let (mut coeffs, rank) = solve_psd(&g, &b, d, RANK_TOL);
    let eval = |c: &[f64], i: usize| design[i * d..(i + 1) * d].iter().zip(c).map(|(m, c)| m * c).sum::<f64>();
    let b2 = rhs(&|i| vals[i] - eval(&coeffs, i));
    let (corr, _) = solve_psd(&g, &b2, d, RANK_TOL);
    for (c, dc) in coeffs.iter_mut().zip(corr) {
        *c += dc;
    }
    poly.coeffs = coeffs;
    Fit { poly, rank, deficient: rank < d }
}

/// Center and half-side of the smallest cube containing the given cells.
pub fn bounding_cube(grid: &Grid, cells: &[usize]) -> (Point, f64) {
    let n = grid.n();
    let mut lo = [f64::INFINITY; MAX_DIM];
    let mut hi = [f64::NEG_INFINITY; MAX_DIM];
    for &c in cells {
        let x = grid.center(c);
        for a in 0..n {
            lo[a] = lo[a].min(x[a] - 0.5 * grid.h());
            hi[a] = hi[a].max(x[a] + 0.5 * grid.h());
        }
    }
    let mut center = [0.0; MAX_DIM];
    let mut r = 0.5 * grid.h();
    for a in 0..n {
        center[a] = 0.5 * (lo[a] + hi[a]);
        r = r.max(0.5 * (hi[a] - lo[a]));
    }
    (center, r)
}

/// Least-squares projection of `f` restricted to the cells onto polynomials
/// of degree `< k`, with respect to `sum_c f(c) g(c) h^n`.
pub fn projector_cells(f: &GridFunction, cells: &[usize], k: usize) -> Fit {
    let grid = f.grid();
    let (center, scale) = if cells.is_empty() { ([0.0; MAX_DIM], 1.0) } else { bounding_cube(grid, cells) };
    let pts: Vec<Point> = cells.iter().map(|&c| grid.center(c)).collect();
    let vals: Vec<f64> = cells.iter().map(|&c| f.value(c)).collect();
    let wts = vec![grid.cell_volume(); cells.len()];
    fit_weighted(grid.n(), k, &pts, &vals, &wts, center, scale)
}

pub fn projector(f: &GridFunction, a: &CellSet, k: usize) -> Fit {
    projector_cells(f, &a.cells(), k)
}

/// How `E_k` is computed for `u` other than 2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Error of the least-squares projector (near best in every `L_u`).
    Fast,
    /// Linear programming for `u = 1` and `u = inf`; other `u` fall back to
    /// the fast mode.
    Exact,
}

fn residual_norm(f: &GridFunction, cells: &[usize], p: &Polynomial, u: f64) -> f64 {
    let grid = f.grid();
    let r: Vec<f64> = cells.iter().map(|&c| f.value(c) - p.eval(&grid.center(c))).collect();
    crate::grid::lu_norm_cells(&r, 0..r.len(), u, grid.cell_volume())
}

/// `E_k(f; A)_{L_u}` together with the polynomial attaining (or nearly
/// attaining) it. The empty set gives 0 and the zero polynomial.
pub fn local_best_approx(f: &GridFunction, a: &CellSet, k: usize, u: f64, mode: Mode) -> Result<(f64, Polynomial)> {
    let cells = a.cells();
    let grid = f.grid();
    if cells.is_empty() {
        return Ok((0.0, Polynomial::zero(grid.n(), k)));
    }
    if mode == Mode::Exact && (u == 1.0 || u.is_infinite()) && k > 0 {
        let (center, scale) = bounding_cube(grid, &cells);
        let pts: Vec<Point> = cells.iter().map(|&c| grid.center(c)).collect();
        let vals: Vec<f64> = cells.iter().map(|&c| f.value(c)).collect();
        let wts = vec![grid.cell_volume(); cells.len()];
        return lp::lp_best_approx(grid.n(), k, &pts, &vals, &wts, u, center, scale);
    }
    let fit = projector_cells(f, &cells, k);
    Ok((residual_norm(f, &cells, &fit.poly, u), fit.poly))
}

/// Normalized local approximation `|Q|^{-1/u} E_k(f; Q ∩ S)_{L_u}` with
/// `|Q| = (2r)^n`.
///
/// Cells on the boundary of Q are weighted by the fraction of their volume
/// inside Q, so the integral of the cellwise-constant data over `Q ∩ S` is
/// exact and the value is continuous in the radius for finite `u`. The sup
/// norm (`u = inf`) is taken over the cells whose centers lie in Q, so a
/// barely touched neighbor cannot make it jump. For `k = 0` the polynomial
/// is 0.
pub fn normalized_local_approx(f: &GridFunction, q: &Cube, s: Option<&RegularSet>, k: usize, u: f64) -> f64 {
    let mut kernel = CubeKernel::new(*f.grid(), k, u);
    kernel.eval(f.values(), s.map(|s| s.cells.mask()), q)
}

/// Reusable buffers for repeated normalized local approximations on cubes.
#[derive(Clone, Debug)]
pub struct CubeKernel {
    grid: Grid,
    k: usize,
    u: f64,
    basis: Basis,
    g: Vec<f64>,
    b: Vec<f64>,
    m: Vec<f64>,
    planar: Planar,
}

/// Per-axis weights and scaled powers for the planar kernel.
#[derive(Clone, Debug, Default)]
struct Planar {
    ow: Vec<f64>,
    op: Vec<f64>,
    iw: Vec<f64>,
    ip: Vec<f64>,
    qt: Vec<f64>,
}

impl Planar {
    #[allow(clippy::too_many_arguments)]
    fn load(
        &mut self,
        grid: &Grid,
        cw: &crate::grid::CubeWeights,
        q: &Cube,
        inv_r: f64,
        o_axis: Option<usize>,
        i_axis: usize,
        md: usize,
    ) {
        let fill = |axis: Option<usize>, w: &mut Vec<f64>, p: &mut Vec<f64>| {
            w.clear();
            p.clear();
            match axis {
                None => {
                    w.push(1.0);
                    p.push(1.0);
                    p.extend(std::iter::repeat(0.0).take(md - 1));
                }
                Some(a) => {
                    for (i, &wi) in cw.w[a].iter().enumerate() {
                        w.push(wi);
                        let y = (grid.axis_center(a, cw.lo[a] + i) - q.center[a]) * inv_r;
                        let mut v = 1.0;
                        for _ in 0..md {
                            p.push(v);
                            v *= y;
                        }
                    }
                }
            }
        };
        fill(o_axis, &mut self.ow, &mut self.op);
        fill(Some(i_axis), &mut self.iw, &mut self.ip);
    }
}

impl CubeKernel {
    pub fn new(grid: Grid, k: usize, u: f64) -> CubeKernel {
        assert!(k <= MAX_ORDER, "order {k} above the supported maximum {MAX_ORDER}");
        let basis = Basis::new(grid.n(), k);
        let d = basis.len();
        CubeKernel { grid, k, u, basis, g: vec![0.0; d * d], b: vec![0.0; d], m: vec![0.0; d], planar: Planar::default() }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn u(&self) -> f64 {
        self.u
    }

    /// `E_k(f; Q ∩ S)_{L_u}` normalized by `|Q|`; `mask = None` means S is the
    /// whole box.
    pub fn eval(&mut self, values: &[f64], mask: Option<&[bool]>, q: &Cube) -> f64 {
        if self.grid.n() <= 2 {
            self.eval_planar(values, mask, q)
        } else {
            self.eval_direct(values, mask, q)
        }
    }

    /// Line and plane version of [`CubeKernel::eval`]: the moments are
    /// accumulated row by row, so each cell costs `O(k)` instead of `O(d^2)`.
    fn eval_planar(&mut self, values: &[f64], mask: Option<&[bool]>, q: &Cube) -> f64 {
        let grid = self.grid;
        let n = grid.n();
        let Some(cw) = cube_weights(&grid, q) else { return 0.0 };
        let k = self.k;
        let inv_r = 1.0 / q.radius;
        // Outer and inner axis; the inner one is contiguous in memory.
        let (o_axis, i_axis) = if n == 1 { (None, 0) } else { (Some(0), 1) };
        let strides = grid.strides();
        let md = (2 * k).max(2) - 1;
        let pl = &mut self.planar;
        pl.load(&grid, &cw, q, inv_r, o_axis, i_axis, md);
        let ni = pl.iw.len();
        let no = pl.ow.len();
        let o_stride = o_axis.map_or(0, |a| strides[a]);
        let o_lo = o_axis.map_or(0, |a| cw.lo[a]);
        let i_lo = cw.lo[i_axis];
        let inside = |c: usize| mask.map_or(true, |m| m[c]);

        let mut coeffs = [0.0f64; 64];
        let d = self.basis.len();
        if d > 0 {
            let mut mom = [[0.0f64; 12]; 12];
            let mut bmom = [[0.0f64; 6]; 6];
            let mut rm = [0.0f64; 12];
            let mut rf = [0.0f64; 6];
            let full_rm = if mask.is_none() {
                let mut acc = [0.0f64; 12];
                for ii in 0..ni {
                    let w = pl.iw[ii];
                    for (j, a) in acc.iter_mut().enumerate().take(md) {
                        *a += w * pl.ip[ii * md + j];
                    }
                }
                Some(acc)
            } else {
                None
            };
            for io in 0..no {
                let base = (o_lo + io) * o_stride + i_lo;
                rf[..k].iter_mut().for_each(|v| *v = 0.0);
                match full_rm {
                    Some(acc) => {
                        rm = acc;
                        for ii in 0..ni {
                            let wf = pl.iw[ii] * values[base + ii];
                            let pw = &pl.ip[ii * md..ii * md + k];
                            for (r, p) in rf.iter_mut().zip(pw) {
                                *r += wf * p;
                            }
                        }
                    }
                    None => {
                        rm[..md].iter_mut().for_each(|v| *v = 0.0);
                        for ii in 0..ni {
                            let c = base + ii;
                            if !inside(c) {
                                continue;
                            }
                            let w = pl.iw[ii];
                            let pw = &pl.ip[ii * md..(ii + 1) * md];
                            for (r, p) in rm.iter_mut().zip(pw) {
                                *r += w * p;
                            }
                            let wf = w * values[c];
                            for (r, p) in rf.iter_mut().zip(&pw[..k]) {
                                *r += wf * p;
                            }
                        }
                        if rm[0] == 0.0 {
                            continue;
                        }
                    }
                }
                let wo = pl.ow[io];
                let po = &pl.op[io * md..(io + 1) * md];
                for j0 in 0..md {
                    let a = wo * po[j0];
                    if a == 0.0 {
                        continue;
                    }
                    for j1 in 0..md - j0 {
                        mom[j0][j1] += a * rm[j1];
                    }
                    if j0 < k {
                        for j1 in 0..k - j0 {
                            bmom[j0][j1] += a * rf[j1];
                        }
                    }
                }
            }
            if mom[0][0] <= 0.0 {
                return 0.0;
            }
            let split = |e: &[usize; MAX_DIM]| if n == 1 { (0, e[0]) } else { (e[0], e[1]) };
            for (r, er) in self.basis.exps.iter().enumerate() {
                let (ro, ri) = split(er);
                self.b[r] = bmom[ro][ri];
                for (c, ec) in self.basis.exps.iter().enumerate() {
                    let (co, ci) = split(ec);
                    self.g[r * d + c] = mom[ro + co][ri + ci];
                }
            }
            let (x, _) = solve_psd(&self.g, &self.b, d, RANK_TOL);
            coeffs[..d].copy_from_slice(&x);
            // Inner-axis partial sums of the polynomial: qt[ii][j0].
            pl.qt.clear();
            pl.qt.resize(ni * k, 0.0);
            for ii in 0..ni {
                for (r, er) in self.basis.exps.iter().enumerate() {
                    let (ro, ri) = split(er);
                    pl.qt[ii * k + ro] += coeffs[r] * pl.ip[ii * md + ri];
                }
            }
        }

        // Residual norm. The sup norm only looks at cells whose centers lie
        // in the cube, unless there are none.
        let u = self.u;
        let sup_in = if u.is_infinite() {
            let near = |a: usize, lo: usize, m: usize| -> Vec<bool> {
                (0..m).map(|i| (grid.axis_center(a, lo + i) - q.center[a]).abs() <= q.radius * (1.0 + 1e-12)).collect()
            };
            let oi = o_axis.map_or(vec![true], |a| near(a, o_lo, no));
            let ii = near(i_axis, i_lo, ni);
            let any_in = (0..no).any(|io| {
                let base = (o_lo + io) * o_stride + i_lo;
                oi[io] && (0..ni).any(|i| ii[i] && inside(base + i))
            });
            any_in.then_some((oi, ii))
        } else {
            None
        };
        let mut acc = 0.0f64;
        let mut any = false;
        for io in 0..no {
            let base = (o_lo + io) * o_stride + i_lo;
            let wo = pl.ow[io];
            let po = &pl.op[io * md..io * md + k.max(1)];
            for ii in 0..ni {
                let c = base + ii;
                if !inside(c) {
                    continue;
                }
                if let Some((oi, iin)) = &sup_in {
                    if !(oi[io] && iin[ii]) {
                        continue;
                    }
                }
                any = true;
                let p = if k == 0 {
                    0.0
                } else {
                    let qt = &pl.qt[ii * k..(ii + 1) * k];
                    po.iter().zip(qt).map(|(a, b)| a * b).sum()
                };
                let r = (values[c] - p).abs();
                let w = wo * pl.iw[ii];
                if u.is_infinite() {
                    acc = acc.max(r);
                } else if u == 1.0 {
                    acc += w * r;
                } else if u == 2.0 {
                    acc += w * r * r;
                } else {
                    acc += w * r.powf(u);
                }
            }
        }
        if !any {
            return 0.0;
        }
        if u.is_infinite() {
            acc
        } else {
            let norm = grid.cell_volume() / q.volume(n);
            (acc * norm).powf(1.0 / u)
        }
    }

    /// Reference implementation for any dimension: one basis evaluation and
    /// a rank-one Gram update per cell.
    pub fn eval_direct(&mut self, values: &[f64], mask: Option<&[bool]>, q: &Cube) -> f64 {
        let grid = self.grid;
        let n = grid.n();
        let Some(cw) = cube_weights(&grid, q) else { return 0.0 };
        let d = self.basis.len();
        let inv_r = 1.0 / q.radius;
        let strides = grid.strides();
        let inside = |c: usize| mask.map_or(true, |m| m[c]);

        // Pass 1: moments.
        let mut coeffs = [0.0f64; 64];
        let mut total_w = 0.0;
        if d == 1 {
            let mut sw = 0.0;
            let mut sf = 0.0;
            for (i0, w0) in cw.w[0].iter().enumerate() {
                for (i1, w1) in cw.w[1].iter().enumerate() {
                    let w01 = w0 * w1;
                    let base = (cw.lo[0] + i0) * strides[0] + (cw.lo[1] + i1) * strides[1];
                    for (i2, w2) in cw.w[2].iter().enumerate() {
                        let c = base + cw.lo[2] + i2;
                        if inside(c) {
                            let w = w01 * w2;
                            sw += w;
                            sf += w * values[c];
                        }
                    }
                }
            }
            total_w = sw;
            if sw > 0.0 {
                coeffs[0] = sf / sw;
            }
        } else if d > 1 {
            self.g.iter_mut().for_each(|v| *v = 0.0);
            self.b.iter_mut().for_each(|v| *v = 0.0);
            for (i0, w0) in cw.w[0].iter().enumerate() {
                let y0 = (grid.axis_center(0, cw.lo[0] + i0) - q.center[0]) * inv_r;
                for (i1, w1) in cw.w[1].iter().enumerate() {
                    let y1 = if n > 1 { (grid.axis_center(1, cw.lo[1] + i1) - q.center[1]) * inv_r } else { 0.0 };
                    let w01 = w0 * w1;
                    let base = (cw.lo[0] + i0) * strides[0] + (cw.lo[1] + i1) * strides[1];
                    for (i2, w2) in cw.w[2].iter().enumerate() {
                        let c = base + cw.lo[2] + i2;
                        if !inside(c) {
                            continue;
                        }
                        let y2 = if n > 2 { (grid.axis_center(2, cw.lo[2] + i2) - q.center[2]) * inv_r } else { 0.0 };
                        let w = w01 * w2;
                        total_w += w;
                        self.basis.fill(&[y0, y1, y2], &mut self.m);
                        let fv = values[c];
                        for r in 0..d {
                            let wr = w * self.m[r];
                            self.b[r] += wr * fv;
                            for cc in r..d {
                                self.g[r * d + cc] += wr * self.m[cc];
                            }
                        }
                    }
                }
            }
            if total_w > 0.0 {
                for r in 0..d {
                    for cc in 0..r {
                        self.g[r * d + cc] = self.g[cc * d + r];
                    }
                }
                let (x, _) = solve_psd(&self.g, &self.b, d, RANK_TOL);
                coeffs[..d].copy_from_slice(&x);
            }
        } else {
            total_w = 1.0;
        }
        if total_w <= 0.0 {
            return 0.0;
        }

        // Pass 2: residual norm; the sup norm prefers cells centered in Q.
        let u = self.u;
        let centered = |c: usize| {
            let x = grid.center(c);
            (0..n).all(|a| (x[a] - q.center[a]).abs() <= q.radius * (1.0 + 1e-12))
        };
        let mut only_centered = false;
        if u.is_infinite() {
            'scan: for (i0, _) in cw.w[0].iter().enumerate() {
                for (i1, _) in cw.w[1].iter().enumerate() {
                    let base = (cw.lo[0] + i0) * strides[0] + (cw.lo[1] + i1) * strides[1];
                    for (i2, _) in cw.w[2].iter().enumerate() {
                        let c = base + cw.lo[2] + i2;
                        if inside(c) && centered(c) {
                            only_centered = true;
                            break 'scan;
                        }
                    }
                }
            }
        }
        let mut acc = 0.0f64;
        for (i0, w0) in cw.w[0].iter().enumerate() {
            let y0 = (grid.axis_center(0, cw.lo[0] + i0) - q.center[0]) * inv_r;
            for (i1, w1) in cw.w[1].iter().enumerate() {
                let y1 = if n > 1 { (grid.axis_center(1, cw.lo[1] + i1) - q.center[1]) * inv_r } else { 0.0 };
                let w01 = w0 * w1;
                let base = (cw.lo[0] + i0) * strides[0] + (cw.lo[1] + i1) * strides[1];
                for (i2, w2) in cw.w[2].iter().enumerate() {
                    let c = base + cw.lo[2] + i2;
                    if !inside(c) || (only_centered && !centered(c)) {
                        continue;
                    }
                    let p = match d {
                        0 => 0.0,
                        1 => coeffs[0],
                        _ => {
                            let y2 =
                                if n > 2 { (grid.axis_center(2, cw.lo[2] + i2) - q.center[2]) * inv_r } else { 0.0 };
                            self.basis.fill(&[y0, y1, y2], &mut self.m);
                            self.m.iter().zip(&coeffs[..d]).map(|(a, b)| a * b).sum()
                        }
                    };
                    let r = (values[c] - p).abs();
                    let w = w01 * w2;
                    if u.is_infinite() {
                        acc = acc.max(r);
                    } else if u == 1.0 {
                        acc += w * r;
                    } else if u == 2.0 {
                        acc += w * r * r;
                    } else {
                        acc += w * r.powf(u);
                    }
                }
            }
        }
        if u.is_infinite() {
            acc
        } else {
            // Weights are volume fractions of a cell: scale by h^n / (2r)^n.
            let norm = grid.cell_volume() / q.volume(n);
            (acc * norm).powf(1.0 / u)
        }
    }
}

/// Support used for `P_Q`: `H_Q`, or a widened piece of S around the anchor
/// when `H_Q` cannot carry the polynomial basis.
#[derive(Clone, Debug)]
pub struct Support {
    pub cells: Vec<usize>,
    pub center: Point,
    pub scale: f64,
    pub widened: bool,
    pub deficient: bool,
}

/// Per-cube projectors `P_Q`; `P_Q = 0` for cubes larger than delta.
#[derive(Clone, Debug)]
pub struct ProjectorMap {
    pub polys: Vec<Polynomial>,
    pub zero: Vec<bool>,
    pub deficient: Vec<bool>,
    pub widened: Vec<bool>,
}

impl ProjectorMap {
    pub fn deficiency_count(&self) -> usize {
        self.deficient.iter().filter(|&&d| d).count()
    }

    pub fn widened_count(&self) -> usize {
        self.widened.iter().filter(|&&d| d).count()
    }
}

/// Supports of the projectors, fixed by the geometry and `k` only.
///
/// When the Gram matrix on `H_Q` is rank deficient the support is widened
/// to `Q(a_Q, rho) ∩ S` with `rho` doubling from `max(eps r_Q, h)` until the
/// basis is resolved; such cubes are flagged.
pub fn projector_supports(s: &RegularSet, w: &WhitneyDecomposition, fam: &QuasiCubeFamily, k: usize) -> Vec<Option<Support>> {
    let grid = *s.grid();
    let n = grid.n();
    let d = dimension(n, k);
    let rank_of = |cells: &[usize]| -> (usize, Point, f64) {
        let (center, scale) = bounding_cube(&grid, cells);
        let zeros = vec![0.0; cells.len()];
        let pts: Vec<Point> = cells.iter().map(|&c| grid.center(c)).collect();
        let wts = vec![1.0; cells.len()];
        let fit = fit_weighted(n, k, &pts, &zeros, &wts, center, scale);
        (fit.rank, center, scale)
    };
    (0..w.cubes.len())
        .map(|q| {
            if !fam.small[q] {
                return None;
            }
            let h_q = &fam.entries[q];
            if !h_q.is_empty() {
                let (rank, center, scale) = rank_of(h_q);
                if rank == d {
                    return Some(Support { cells: h_q.clone(), center, scale, widened: false, deficient: false });
                }
            }
            let anchor = grid.center(fam.anchors[q]);
            let mut rho = (fam.epsilon * w.cubes[q].cube.radius).max(grid.h());
            loop {
                let cells = crate::regular_set::set_cells_in(s, &Cube::at(anchor, rho));
                let (rank, center, scale) = rank_of(&cells);
                if rank == d || rho > 2.0 * grid.r_max() {
                    return Some(Support { cells, center, scale, widened: true, deficient: rank < d });
                }
                rho *= 2.0;
            }
        })
        .collect()
}

pub fn assign_pq_with(f: &GridFunction, supports: &[Option<Support>], k: usize) -> ProjectorMap {
    let grid = f.grid();
    let n = grid.n();
    let m = supports.len();
    let mut map = ProjectorMap {
        polys: Vec::with_capacity(m),
        zero: vec![false; m],
        deficient: vec![false; m],
        widened: vec![false; m],
    };
    for (q, sup) in supports.iter().enumerate() {
        match sup {
            None => {
                map.polys.push(Polynomial::zero(n, k));
                map.zero[q] = true;
            }
            Some(sup) => {
                let pts: Vec<Point> = sup.cells.iter().map(|&c| grid.center(c)).collect();
                let vals: Vec<f64> = sup.cells.iter().map(|&c| f.value(c)).collect();
                let wts = vec![grid.cell_volume(); sup.cells.len()];
                let fit = fit_weighted(n, k, &pts, &vals, &wts, sup.center, sup.scale);
                map.deficient[q] = sup.deficient || fit.deficient;
                map.widened[q] = sup.widened;
                map.polys.push(fit.poly);
            }
        }
    }
    map
}

pub fn assign_pq(f: &GridFunction, s: &RegularSet, w: &WhitneyDecomposition, fam: &QuasiCubeFamily, k: usize) -> ProjectorMap {
    assign_pq_with(f, &projector_supports(s, w, fam, k), k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planar_kernel_matches_direct() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for n in [1usize, 2] {
            let grid = Grid::uniform(n, if n == 1 { 64 } else { 24 }, 0.0, 1.0).unwrap();
            let vals: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mask: Vec<bool> = (0..grid.len()).map(|_| rng.gen_bool(0.6)).collect();
            for k in 0..=4 {
                for u in [1.0, 2.0, 3.0, f64::INFINITY] {
                    let mut ker = CubeKernel::new(grid, k, u);
                    for _ in 0..20 {
                        let mut c = [0.0; MAX_DIM];
                        for a in 0..n {
                            c[a] = rng.gen_range(-0.1..1.1);
                        }
                        let q = Cube::at(c, rng.gen_range(0.02..0.6));
                        for m in [None, Some(mask.as_slice())] {
                            let a = ker.eval(&vals, m, &q);
                            let b = ker.eval_direct(&vals, m, &q);
                            assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()), "n={n} k={k} u={u}: {a} vs {b}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn psd_solve_full_and_deficient() {
        let g = [4.0, 2.0, 2.0, 3.0];
        let (x, r) = solve_psd(&g, &[2.0, 1.0], 2, 1e-12);
        assert_eq!(r, 2);
        assert!((4.0 * x[0] + 2.0 * x[1] - 2.0).abs() < 1e-12);
        assert!((2.0 * x[0] + 3.0 * x[1] - 1.0).abs() < 1e-12);
        let g = [1.0, 1.0, 1.0, 1.0];
        let (_, r) = solve_psd(&g, &[1.0, 1.0], 2, 1e-10);
        assert_eq!(r, 1);
    }
}
