//! Checks on the decomposition, the partition of unity, the quasi-cubes,
//! polynomial reproduction and the near-bestness of the projector.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::report::{bounded, errored, exact, CheckResult, RatioAcc, Status};
use super::{Config, Entry};
use crate::approx::lp::lp_best_approx;
use crate::approx::{bounding_cube, dimension, exponents, projector_cells};
use crate::grid::{lu_norm_cells, GridFunction, Point, MAX_DIM};
use crate::whitney::{build_partition, phi_at, UNITS_PER_CELL};

const REPRO: &str = "extension reproduces polynomials of degree < k near S";
const COVER: &str = "Whitney cubes cover the complement of S";
const WINDOW: &str = "Whitney cube size: diam Q <= dist(Q, S) <= 4 diam Q";
const OVERLAP: &str = "Whitney cubes overlap at most 2^n times";
const NEIGHBOR_SIZE: &str = "touching stretched cubes have comparable size (ratio within [1/4, 4])";
const NEIGHBOR_COUNT: &str = "each stretched cube meets at most N'(n) stretched cubes";
const PARTITION: &str = "partition of unity: 0 <= phi <= 1, supp phi_Q in Q*, sum phi = 1 off S";
const PARTITION_D: &str = "partition of unity derivative bound |D^j phi_Q| <= C diam(Q)^-j";
const QC_CONTAIN: &str = "quasi-cube H_Q lies in S and in 10Q";
const QC_EMPTY: &str = "quasi-cube H_Q is empty exactly when diam Q > delta";
const QC_DISJOINT: &str = "overlapping quasi-cubes have comparable size and do not subtract each other";
const QC_GAMMA1: &str = "quasi-cube measure bound |Q| <= gamma1 |H_Q|";
const QC_GAMMA2: &str = "quasi-cube overlap bounded by gamma2";
pub(crate) const NEAR_BEST: &str = "least-squares projector is near best in L_u on H_Q";

/// Bound on `#{K : K* ∩ Q* ≠ ∅}` for dyadic Whitney cubes whose neighbors
/// have sides in `[s/4, 4s]`: every such K meets `Q(x_Q, 13s/16)` and holds
/// a cube of side `s/4` inside `Q(x_Q, 17s/16)`, so a volume count gives
/// `floor(8.5^n)`.
pub fn neighbor_bound(n: usize) -> usize {
    8.5f64.powi(n as i32).floor() as usize
}

pub(crate) fn reproduction(e: &Entry, cfg: &Config) -> Vec<CheckResult> {
    let start = Instant::now();
    let grid = *e.s.grid();
    let n = grid.n();
    let dist = &e.op.whitney.dist;
    let zone: Vec<usize> = (0..grid.len()).filter(|&c| dist[c] <= e.s.delta / 2.0 + 1e-12).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(e.seed ^ 0x5eed_0001);
    let mut worst = 0.0f64;
    let mut worst_at = String::new();
    let mut samples = 0;
    let mut out = Vec::new();
    for &k in &cfg.sampling.reproduction_orders {
        if k == 0 {
            continue;
        }
        let op = e.op.with_order(k);
        let exps = exponents(n, k);
        let mut polys: Vec<Vec<f64>> = (0..exps.len())
            .map(|i| {
                let mut c = vec![0.0; exps.len()];
                c[i] = 1.0;
                c
            })
            .collect();
        polys.push((0..exps.len()).map(|_| rng.gen_range(-1.0..1.0)).collect());
        for coeffs in polys {
            let q = |x: &Point| -> f64 {
                exps.iter()
                    .zip(&coeffs)
                    .map(|(b, c)| c * (0..n).map(|a| x[a].powi(b[a] as i32)).product::<f64>())
                    .sum()
            };
            let f = match GridFunction::from_fn(grid, q) {
                Ok(f) => f,
                Err(err) => return vec![errored(e.name("reproduction"), REPRO, &err)],
            };
            let ext = match op.extend(&f) {
                Ok(x) => x,
                Err(err) => return vec![errored(e.name("reproduction"), REPRO, &err)],
            };
            let mut err = 0.0f64;
            let mut scale = 0.0f64;
            for &c in &zone {
                err = err.max((ext.value(c) - f.value(c)).abs());
                scale = scale.max(f.value(c).abs());
            }
            let rel = if scale > 0.0 { err / scale } else { err };
            samples += zone.len();
            if rel > worst {
                worst = rel;
                worst_at = format!("k={k}");
            }
        }
    }
    out.push(bounded(
        e.name("reproduction"),
        REPRO,
        worst,
        cfg.tolerances.reproduction,
        samples,
        format!("max relative error on dist <= delta/2 ({} cells), worst {worst_at}", zone.len()),
    ));
    let secs = start.elapsed().as_secs_f64();
    log::info!("{}: reproduction took {secs:.1} s", e.tag());
    let within = secs <= cfg.tolerances.reproduction_seconds;
    out.push(CheckResult {
        name: e.name("reproduction.runtime"),
        anchor: REPRO.into(),
        status: if within { Status::Pass } else { Status::Fail },
        measured_constant: None,
        samples: 1,
        tolerance: Some(cfg.tolerances.reproduction_seconds),
        details: if within { "within the time budget".into() } else { "time budget exceeded".into() },
    });
    out
}

pub(crate) fn whitney(e: &Entry, cfg: &Config) -> Vec<CheckResult> {
    let w = &e.op.whitney;
    let s = &e.s;
    let grid = *s.grid();
    let n = grid.n();
    let mut out = Vec::new();

    // Covering.
    let complement: Vec<usize> = (0..grid.len()).filter(|&c| !s.contains(c)).collect();
    let uncovered = complement.iter().filter(|&&c| w.multiplicity(&grid.center(c)) == 0).count();
    out.push(exact(e.name("whitney.covering"), COVER, uncovered, complement.len(), format!("{} cubes", w.len())));

    // Size window in exact integer units; root tiles farther away than the
    // window cannot be split further and are excluded.
    let mut bad = 0;
    let mut roots = 0;
    let mut checked = 0;
    for q in &w.cubes {
        let d = q.set_dist_units();
        let too_far_root = q.flagged && d > 4 * q.side;
        if too_far_root {
            roots += 1;
            continue;
        }
        checked += 1;
        if d < q.side || d > 4 * q.side {
            bad += 1;
        }
    }
    out.push(exact(
        e.name("whitney.distance_window"),
        WINDOW,
        bad,
        checked,
        format!("{roots} root tiles beyond the window excluded; units of h/{UNITS_PER_CELL}"),
    ));

    // Overlap at every complement cell center and at random points.
    let mut rng = ChaCha8Rng::seed_from_u64(e.seed ^ 0x5eed_0002);
    let mut max_mult = 0;
    for &c in &complement {
        max_mult = max_mult.max(w.multiplicity(&grid.center(c)));
    }
    let mut pts = 0;
    for _ in 0..cfg.sampling.overlap_points {
        let mut x = [0.0; MAX_DIM];
        for (a, v) in x.iter_mut().enumerate().take(n) {
            *v = rng.gen_range(grid.box_lo(a)..grid.box_hi(a));
        }
        max_mult = max_mult.max(w.multiplicity(&x));
        pts += 1;
    }
    let bound = 1usize << n;
    out.push(bounded(
        e.name("whitney.overlap"),
        OVERLAP,
        max_mult as f64,
        bound as f64,
        complement.len() + pts,
        format!("max multiplicity {max_mult}"),
    ));

    // Neighbor size ratios and counts.
    let mut bad = 0;
    let mut pairs = 0;
    let mut max_ratio = 1.0f64;
    let mut max_count = 0;
    for id in 0..w.len() {
        let nb = w.neighbor_ids(id);
        max_count = max_count.max(nb.len());
        for &k in &nb {
            let r = w.cubes[k].side as f64 / w.cubes[id].side as f64;
            max_ratio = max_ratio.max(r);
            pairs += 1;
            if !(0.25..=4.0).contains(&r) {
                bad += 1;
            }
        }
    }
    out.push(exact(
        e.name("whitney.neighbor_size"),
        NEIGHBOR_SIZE,
        bad,
        pairs,
        format!("max side ratio {max_ratio}"),
    ));
    let nb_bound = neighbor_bound(n);
    out.push(bounded(
        e.name("whitney.neighbor_count"),
        NEIGHBOR_COUNT,
        max_count as f64,
        nb_bound as f64,
        w.len(),
        format!("max count {max_count}, N'({n}) = {nb_bound}"),
    ));

    out.extend(partition(e, cfg, &complement));
    out
}

fn partition(e: &Entry, cfg: &Config, complement: &[usize]) -> Vec<CheckResult> {
    let w = &e.op.whitney;
    let grid = *e.s.grid();
    let n = grid.n();
    let normalize = cfg.fault.is_none();
    let table = if normalize {
        e.op.partition.clone()
    } else {
        build_partition(w, &e.s, e.op.partition.m, false)
    };
    let tol = cfg.tolerances.partition_sum;
    let mut range_bad = 0;
    let mut support_bad = 0;
    let mut sum_bad = 0;
    let mut max_dev = 0.0f64;
    for &c in complement {
        let x = grid.center(c);
        let mut sum = 0.0;
        for &(q, v) in table.at_cell(c) {
            if !(0.0..=1.0).contains(&v) {
                range_bad += 1;
            }
            if !w.cubes[q as usize].cube.star().contains(&x, n) {
                support_bad += 1;
            }
            sum += v;
        }
        let dev = (sum - 1.0).abs();
        max_dev = max_dev.max(dev);
        if dev > tol {
            sum_bad += 1;
        }
    }
    let mut out = vec![
        exact(e.name("whitney.partition_range"), PARTITION, range_bad, complement.len(), String::new()),
        exact(e.name("whitney.partition_support"), PARTITION, support_bad, complement.len(), String::new()),
    ];
    let mut sum = bounded(
        e.name("whitney.partition_sum"),
        PARTITION,
        max_dev,
        tol,
        complement.len(),
        format!("max |sum phi - 1| over {} complement cells", complement.len()),
    );
    if sum_bad > 0 {
        sum.status = Status::Fail;
        sum.details = format!("{sum_bad} cells off by more than {tol:e}; {}", sum.details);
    }
    out.push(sum);

    // Derivatives along the axes by central differences at sub-cell steps.
    let mut rng = ChaCha8Rng::seed_from_u64(e.seed ^ 0x5eed_0003);
    let m = e.op.partition.m;
    let order = m.clamp(1, 4);
    let mut c_max = 0.0f64;
    let mut samples = 0;
    if !w.is_empty() {
        for _ in 0..cfg.sampling.derivative_cubes {
            let id = rng.gen_range(0..w.len());
            let q = &w.cubes[id];
            let star = q.cube.star();
            let diam = q.diam();
            for _ in 0..4 {
                let mut x = [0.0; MAX_DIM];
                for (a, v) in x.iter_mut().enumerate().take(n) {
                    *v = star.center[a] + rng.gen_range(-1.0..1.0) * star.radius;
                }
                let eta = diam / 64.0;
                for a in 0..n {
                    for j in 1..=order {
                        // j-th central difference of phi_Q along axis a.
                        let mut acc = 0.0;
                        let mut ok = true;
                        for i in 0..=j {
                            let mut y = x;
                            y[a] += (i as f64 - j as f64 / 2.0) * eta;
                            if (0..n).any(|b| y[b] < grid.box_lo(b) || y[b] > grid.box_hi(b)) {
                                ok = false;
                                break;
                            }
                            let coef = binom(j, i) * if (j - i) % 2 == 0 { 1.0 } else { -1.0 };
                            acc += coef * phi_at(w, m, id, &y);
                        }
                        if ok {
                            let d = acc.abs() / eta.powi(j as i32) * diam.powi(j as i32);
                            c_max = c_max.max(d);
                            samples += 1;
                        }
                    }
                }
            }
        }
    }
    out.push(CheckResult {
        name: e.name("whitney.partition_derivatives"),
        anchor: PARTITION_D.into(),
        status: if c_max.is_finite() { Status::Pass } else { Status::Fail },
        measured_constant: Some(c_max),
        samples,
        tolerance: None,
        details: format!("axis derivatives of order 1..={order} by finite differences at step diam/64"),
    });
    out
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

pub(crate) fn quasicubes(e: &Entry) -> (Vec<CheckResult>, f64, f64) {
    let fam = &e.op.family;
    let w = &e.op.whitney;
    let m = fam.entries.len();
    let summary = format!(
        "eps = {}, {} of {} cubes visible",
        fam.epsilon,
        fam.visible.iter().filter(|&&v| v).count(),
        m
    );
    let small = fam.small.iter().filter(|&&s| s).count();
    let out = vec![
        exact(e.name("quasicube.containment"), QC_CONTAIN, fam.check_containment(&e.s, w), m, summary.clone()),
        exact(e.name("quasicube.emptiness"), QC_EMPTY, fam.check_emptiness_rule(), m, String::new()),
        exact(e.name("quasicube.disjointness"), QC_DISJOINT, fam.check_disjointness(w), m, String::new()),
        CheckResult {
            name: e.name("quasicube.gamma1"),
            anchor: QC_GAMMA1.into(),
            status: if fam.gamma1.is_finite() { Status::Pass } else { Status::Fail },
            measured_constant: Some(fam.gamma1),
            samples: small,
            tolerance: None,
            details: summary,
        },
        CheckResult {
            name: e.name("quasicube.gamma2"),
            anchor: QC_GAMMA2.into(),
            status: Status::Pass,
            measured_constant: Some(fam.gamma2 as f64),
            samples: e.s.cell_list().len(),
            tolerance: None,
            details: String::new(),
        },
    ];
    (out, fam.gamma1, fam.gamma2 as f64)
}

/// Least-squares residual by modified Gram-Schmidt on the sampled basis:
/// an independent route to the `L_2` best approximation.
fn mgs_residual(n: usize, k: usize, pts: &[Point], vals: &[f64], center: Point, scale: f64, vol: f64) -> f64 {
    let basis = crate::approx::Basis::new(n, k);
    let d = basis.len();
    let mut cols: Vec<Vec<f64>> = vec![Vec::with_capacity(pts.len()); d];
    let mut m = vec![0.0; d];
    for x in pts {
        let mut y = [0.0; MAX_DIM];
        for a in 0..n {
            y[a] = (x[a] - center[a]) / scale;
        }
        basis.fill(&y, &mut m);
        for j in 0..d {
            cols[j].push(m[j]);
        }
    }
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut ortho: Vec<Vec<f64>> = Vec::new();
    for mut c in cols {
        let norm0 = dot(&c, &c).sqrt();
        for _ in 0..2 {
            for q in &ortho {
                let p = dot(q, &c);
                for (ci, qi) in c.iter_mut().zip(q) {
                    *ci -= p * qi;
                }
            }
        }
        let norm = dot(&c, &c).sqrt();
        if norm > 1e-10 * norm0.max(1e-300) {
            c.iter_mut().for_each(|v| *v /= norm);
            ortho.push(c);
        }
    }
    let mut r = vals.to_vec();
    for _ in 0..2 {
        for q in &ortho {
            let p = dot(q, &r);
            for (ri, qi) in r.iter_mut().zip(q) {
                *ri -= p * qi;
            }
        }
    }
    (dot(&r, &r) * vol).sqrt()
}

/// Near-best ratios for random `(f, H_Q)` pairs, one accumulator per `u`
/// in `[1, 2, inf]`.
pub(crate) fn near_best(e: &Entry, cfg: &Config) -> [RatioAcc; 3] {
    let mut accs = [RatioAcc::new(), RatioAcc::new(), RatioAcc::new()];
    let fam = &e.op.family;
    let grid = *e.s.grid();
    let n = grid.n();
    let vol = grid.cell_volume();
    let funcs: Vec<&super::Func> = e.funcs.iter().filter(|f| f.degree.is_none()).collect();
    if funcs.is_empty() {
        return accs;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(e.seed ^ 0x5eed_0004);
    let mut candidates: Vec<usize> = (0..fam.entries.len())
        .filter(|&q| fam.small[q] && fam.entries[q].len() >= 2 && fam.entries[q].len() <= cfg.sampling.near_best_max_cells)
        .collect();
    candidates.sort_by_key(|&q| fam.entries[q].len());
    // Prefer the larger pieces: single cells carry no information.
    let pool: Vec<usize> = candidates.iter().rev().take(400.max(cfg.sampling.near_best_pairs)).copied().collect();
    if pool.is_empty() {
        return accs;
    }
    for _ in 0..cfg.sampling.near_best_pairs {
        let q = pool[rng.gen_range(0..pool.len())];
        let func = funcs[rng.gen_range(0..funcs.len())];
        let cells = &fam.entries[q];
        let k_max = (1..=3).rev().find(|&k| dimension(n, k) < cells.len()).unwrap_or(1);
        let k = rng.gen_range(1..=k_max);
        let fit = projector_cells(&func.f, cells, k);
        let pts: Vec<Point> = cells.iter().map(|&c| grid.center(c)).collect();
        let vals: Vec<f64> = cells.iter().map(|&c| func.f.value(c)).collect();
        let resid: Vec<f64> = pts.iter().zip(&vals).map(|(x, v)| v - fit.poly.eval(x)).collect();
        let (center, scale) = bounding_cube(&grid, cells);
        let label = || format!("{} on H_Q of {} cells, k={k}", func.name, cells.len());
        let tol = func.zero;
        for (slot, u) in [(0usize, 1.0), (2, f64::INFINITY)] {
            let ls = lu_norm_cells(&resid, 0..resid.len(), u, vol);
            let weights = vec![vol; cells.len()];
            match lp_best_approx(n, k, &pts, &vals, &weights, u, center, scale) {
                Ok((best, _)) => accs[slot].add(ls, best, tol * if u == 1.0 { cells.len() as f64 * vol } else { 1.0 }, label),
                Err(_) => accs[slot].skip(),
            }
        }
        let ls2 = lu_norm_cells(&resid, 0..resid.len(), 2.0, vol);
        let best2 = mgs_residual(n, k, &pts, &vals, center, scale, vol);
        accs[1].add(ls2, best2, tol * (cells.len() as f64 * vol).sqrt(), label);
    }
    accs
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neighbor_bound_values() {
        assert_eq!(neighbor_bound(1), 8);
        assert_eq!(neighbor_bound(2), 72);
    }

    #[test]
    fn mgs_matches_projector() {
        let pts: Vec<Point> = (0..50).map(|i| [i as f64 / 49.0, 0.0, 0.0]).collect();
        let vals: Vec<f64> = pts.iter().map(|x| (3.0 * x[0]).sin()).collect();
        let r = mgs_residual(1, 3, &pts, &vals, [0.5, 0.0, 0.0], 0.5, 1.0);
        let fit = crate::approx::fit_weighted(1, 3, &pts, &vals, &vec![1.0; 50], [0.5, 0.0, 0.0], 0.5);
        let r2: f64 = pts.iter().zip(&vals).map(|(x, v)| (v - fit.poly.eval(x)).powi(2)).sum::<f64>().sqrt();
        assert!((r - r2).abs() <= 1e-10 * r2);
    }
}
