//! Sampled checks of the extension's local behavior: preservation of local
//! approximation on cubes centered in S, the `L_u` bound, and the pointwise
//! localization estimate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Entry, Func, Measures};
use crate::approx::CubeKernel;
use crate::extension::{extend_norm_check, sees_all_of_s};
use crate::grid::{Cube, GridFunction, Point, MAX_DIM};

pub(crate) const PRESERVE: &str =
    "local approximation of the extension on K is bounded by that of f on 25K ∩ S (K centered in S, diam K <= delta/2)";
pub(crate) const LU_BOUND: &str = "||Ef||_{L_u(K)} <= C ||f||_{L_u(25K ∩ S)}";
pub(crate) const LOCALIZE: &str =
    "E_k(Ef; Q(x,t)) <= C t^k / (t^k + dist(x,S)^k) E_kappa(f; K(x,t))_{L_u(S)} with K(x,t) = Q(a_x, 50 max(80t, dist(x,S)))";

const US: [f64; 3] = [1.0, 2.0, f64::INFINITY];

fn inside_box(e: &Entry, q: &Cube) -> bool {
    let g = e.s.grid();
    (0..g.n()).all(|a| q.center[a] - q.radius >= g.box_lo(a) - 1e-12 && q.center[a] + q.radius <= g.box_hi(a) + 1e-12)
}

/// Cubes K centered at cells of S near uniform points of the bounding box
/// of S, with ladder radii `>= h0`, `diam K <= delta/2`, K inside the box
/// and `25K ∩ S` fully on the grid. Draws depend only on the set, so both
/// resolutions see the same cubes up to rounding. Returns the cubes and the
/// number of drawn centers with no admissible radius.
pub(crate) fn sample_cubes(e: &Entry, count: usize) -> (Vec<Cube>, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(e.set_seed ^ 0x5eed_0010);
    let g = *e.s.grid();
    let n = g.n();
    let (lo, hi) = bounding_box(e);
    let mut out = Vec::new();
    let mut skipped = 0;
    let mut attempts = 0;
    while out.len() < count && attempts < 20 * count {
        attempts += 1;
        let mut y = [0.0; MAX_DIM];
        for a in 0..n {
            y[a] = lo[a] + rng.gen::<f64>() * (hi[a] - lo[a]);
        }
        let pick: f64 = rng.gen();
        let (_, x, _) = e.s.nearest(&y);
        let radii: Vec<f64> = e
            .ladder
            .t
            .iter()
            .copied()
            .filter(|&t| t >= e.h0 * (1.0 - 1e-9) && 2.0 * t <= e.s.delta / 2.0 * (1.0 + 1e-12))
            .filter(|&t| {
                let k = Cube::at(x, t);
                inside_box(e, &k) && sees_all_of_s(&e.s, &k.scale(25.0))
            })
            .collect();
        if radii.is_empty() {
            skipped += 1;
            continue;
        }
        out.push(Cube::at(x, radii[((pick * radii.len() as f64) as usize).min(radii.len() - 1)]));
    }
    (out, skipped)
}

/// Range of the cell centers of S per axis.
fn bounding_box(e: &Entry) -> (Point, Point) {
    let g = e.s.grid();
    let mut lo = [f64::INFINITY; MAX_DIM];
    let mut hi = [f64::NEG_INFINITY; MAX_DIM];
    for &c in e.s.cell_list() {
        let x = g.center(c);
        for a in 0..g.n() {
            lo[a] = lo[a].min(x[a]);
            hi[a] = hi[a].max(x[a]);
        }
    }
    (lo, hi)
}

fn pick<T: Copy>(v: &[T], frac: f64) -> T {
    v[((frac * v.len() as f64) as usize).min(v.len() - 1)]
}

/// Preservation and `L_u` checks for one function; `exts[i]` is the
/// extension of order `ks[i]`.
pub(crate) fn preservation(
    e: &Entry,
    func: &Func,
    ks: &[usize],
    exts: &[GridFunction],
    cubes: &[Cube],
    skipped: usize,
    m: &mut Measures,
) {
    let g = *e.s.grid();
    let mask = e.s.cells.mask();
    for (&k, ext) in ks.iter().zip(exts) {
        for u in US {
            let mut kern = CubeKernel::new(g, k, u);
            let key = format!("local_approx_preservation.k={k},u={}", fmt_u(u));
            let acc = m.acc(&key, PRESERVE, None, true);
            for _ in 0..skipped {
                acc.skip();
            }
            for q in cubes {
                let lhs = kern.eval(ext.values(), None, q);
                let rhs = kern.eval(func.f.values(), Some(mask), &q.scale(25.0));
                acc.add(lhs, rhs, func.zero, || format!("{} r={:.3e}", func.name, q.radius));
            }
            let key = format!("lu_bound.u={}", fmt_u(u));
            let acc = m.acc(&key, LU_BOUND, None, true);
            for q in cubes {
                match extend_norm_check(&func.f, ext, &e.s, q, u) {
                    Some((lhs, rhs)) => {
                        let scale = if u.is_infinite() { 1.0 } else { q.volume(g.n()).powf(1.0 / u) };
                        acc.add(lhs, rhs, func.zero * scale, || format!("{} k={k} r={:.3e}", func.name, q.radius))
                    }
                    None => acc.skip(),
                }
            }
        }
    }
}

pub(crate) fn fmt_u(u: f64) -> String {
    if u.is_infinite() {
        "inf".into()
    } else {
        format!("{u}")
    }
}

/// Cells grouped by dyadic shells of `dist(x, S) / h0` (shell 0 is S), so
/// the shells are the same regions at every resolution.
pub(crate) fn shells(e: &Entry) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = Vec::new();
    for (c, &d) in e.op.whitney.dist.iter().enumerate() {
        let j = if d <= 0.0 { 0 } else { ((d / e.h0).log2().ceil().max(0.0) as usize) + 1 };
        if out.len() <= j {
            out.resize(j + 1, Vec::new());
        }
        out[j].push(c);
    }
    out.retain(|v| !v.is_empty());
    out
}

/// Cells drawn round-robin over the shells, at the same relative position
/// within each shell at every resolution.
pub(crate) fn stratified_cells(e: &Entry, count: usize, salt: u64) -> Vec<usize> {
    let sh = shells(e);
    let mut rng = ChaCha8Rng::seed_from_u64(e.set_seed ^ salt);
    (0..count).map(|i| pick(&sh[i % sh.len()], rng.gen())).collect()
}

/// A localization sample: cell, radius, order, exponent.
#[derive(Clone, Copy, Debug)]
pub(crate) struct LocSample {
    cell: usize,
    t: f64,
    k: usize,
    u: f64,
}

pub(crate) fn localization_samples(e: &Entry, ks: &[usize], count: usize) -> Vec<LocSample> {
    let g = *e.s.grid();
    let sh = shells(e);
    let mut rng = ChaCha8Rng::seed_from_u64(e.set_seed ^ 0x5eed_0011);
    let mut out = Vec::new();
    for i in 0..4 * count {
        if out.len() >= count {
            break;
        }
        let (a, b): (f64, f64) = (rng.gen(), rng.gen());
        let c = pick(&sh[i % sh.len()], a);
        let x = g.center(c);
        let ts: Vec<f64> = e
            .ladder
            .t
            .iter()
            .copied()
            .filter(|&t| t >= e.h0 * (1.0 - 1e-9) && inside_box(e, &Cube::at(x, t)))
            .collect();
        if ts.is_empty() {
            continue;
        }
        let j = out.len();
        out.push(LocSample {
            cell: c,
            t: pick(&ts, b),
            k: ks[j % ks.len()],
            u: if (j / ks.len()) % 2 == 0 { 1.0 } else { f64::INFINITY },
        });
    }
    out
}

/// Localization check on the samples assigned to this function.
pub(crate) fn localization(e: &Entry, func: &Func, ks: &[usize], exts: &[GridFunction], samples: &[LocSample], m: &mut Measures) {
    let g = *e.s.grid();
    let n = g.n();
    let mask = e.s.cells.mask();
    let acc = m.acc("localization", LOCALIZE, None, true);
    let whole_s_norm = |u: f64| -> f64 {
        crate::grid::lu_norm_cells(func.f.values(), e.s.cell_list().iter().copied(), u, g.cell_volume())
    };
    let norms = [whole_s_norm(1.0), whole_s_norm(f64::INFINITY)];
    let box_lo: Vec<f64> = (0..n).map(|a| g.box_lo(a)).collect();
    let box_hi: Vec<f64> = (0..n).map(|a| g.box_hi(a)).collect();
    for smp in samples {
        let Some(ki) = ks.iter().position(|&k| k == smp.k) else { continue };
        let x = g.center(smp.cell);
        let dist = e.op.whitney.dist[smp.cell];
        let q = Cube::at(x, smp.t);
        let lhs = CubeKernel::new(g, smp.k, smp.u).eval(exts[ki].values(), None, &q);
        let (_, a_x, _) = e.s.nearest(&x);
        let r = 50.0 * (80.0 * smp.t).max(dist);
        let kappa = if r <= e.s.delta { smp.k } else { 0 };
        let big = Cube::at(a_x, r);
        let covers_box = (0..n).all(|a| a_x[a] - r <= box_lo[a] && a_x[a] + r >= box_hi[a]);
        let rhs_e = if kappa == 0 && covers_box {
            let norm = if smp.u.is_infinite() { norms[1] } else { norms[0] };
            norm / big.volume(n).powf(1.0 / smp.u)
        } else {
            CubeKernel::new(g, kappa, smp.u).eval(func.f.values(), Some(mask), &big)
        };
        let tk = smp.t.powi(smp.k as i32);
        let factor = tk / (tk + dist.powi(smp.k as i32));
        let rhs = factor * rhs_e;
        acc.add(lhs, rhs, func.zero, || {
            format!("{} k={} u={} t={:.3e} dist={:.3e}", func.name, smp.k, fmt_u(smp.u), smp.t, dist)
        });
    }
}
