//! Maximal-function checks: the pointwise bound of the sharp function of
//! the extension, its norm form, and the Hardy-Littlewood-Wiener inequality.

use super::local::fmt_u;
use super::{Entry, Func, Measures};
use crate::functionals::{hl_maximal, lq_dt, zero_extend, Analysis, HlMaximal, SpaceParams};
use crate::grid::{lu_norm_cells, GridFunction};

pub(crate) const POINTWISE: &str =
    "(Ef)#_v(x) <= C (M((f#_{v,S})^) (x) + M_u(f^)(x)) pointwise, f^ the zero extension";
pub(crate) const NORM: &str = "||(Ef)#_{v,Delta}||_{L_p} <= C (||f#_{v,Delta,S}||_{L_p(S)} + ||f||_{L_p(S)}) for u < p";
pub(crate) const HLW: &str = "Hardy-Littlewood-Wiener: ||M_u g||_{L_p} <= C ||g||_{L_p} for u < p";

/// Parameter vectors `v = (s, k, q, u)` for the maximal checks.
pub(crate) fn vectors(ks: &[usize]) -> Vec<SpaceParams> {
    let all = [
        SpaceParams::new(0.5, 1, 2.0, f64::INFINITY, 1.0),
        SpaceParams::new(0.7, 1, 2.0, 2.0, 1.0),
        SpaceParams::new(0.3, 1, 2.0, 2.0, 2.0),
        SpaceParams::new(1.5, 2, 2.0, 1.0, 1.0),
        SpaceParams::new(2.0, 2, 2.0, f64::INFINITY, 1.0),
        SpaceParams::new(1.5, 2, 2.0, f64::INFINITY, 2.0),
    ];
    all.into_iter().filter(|v| ks.contains(&v.k)).collect()
}

/// `whole[i]` analyzes the extension of order `ks[i]` on the box.
pub(crate) fn pointwise(
    e: &Entry,
    func: &Func,
    trace: &mut Analysis,
    whole: &mut [Analysis],
    ks: &[usize],
    cells: &[usize],
    m: &mut Measures,
) {
    let g = *e.s.grid();
    let fz = zero_extend(&func.f, &e.s.cells);
    let full = e.ladder.len();
    for v in vectors(ks) {
        let ki = ks.iter().position(|&k| k == v.k).expect("filtered by ks");
        let sharp = trace.sharp(&v, f64::INFINITY);
        let sharp_fn = GridFunction::new(g, sharp).expect("finite");
        let (Ok(m1), Ok(mu)) = (HlMaximal::new(&sharp_fn, 1.0, &e.ladder), HlMaximal::new(&fz, v.u, &e.ladder)) else {
            continue;
        };
        let table = whole[ki].table(v.k, v.u);
        let acc = m.acc("maximal_pointwise", POINTWISE, None, true);
        for &c in cells {
            let prof = table.profile(c, full);
            let lhs = lq_dt(&e.ladder.t, &prof, v.s, v.q);
            let x = g.center(c);
            let rhs = m1.at(&x) + mu.at(&x);
            acc.add(lhs, rhs, func.zero, || {
                format!("{} v=({},{},{},{}) dist={:.3e}", func.name, v.s, v.k, fmt_u(v.q), fmt_u(v.u), e.op.whitney.dist[c])
            });
        }
        for p in [2.0, f64::INFINITY] {
            if !(v.u < p) {
                continue;
            }
            let lhs = whole[ki].sharp_norm(&v, 1.0, p);
            let rhs = trace.sharp_norm(&v, 1.0, p) + trace.lp(p);
            m.acc("maximal_norm", NORM, None, true).add(lhs, rhs, func.zero, || {
                format!("{} v=({},{},{},{}) p={}", func.name, v.s, v.k, fmt_u(v.q), fmt_u(v.u), fmt_u(p))
            });
        }
    }
}

pub(crate) const HLW_PAIRS: [(f64, f64); 3] = [(1.0, 2.0), (1.0, f64::INFINITY), (2.0, 4.0)];

/// HLW ratios for the zero extension of f and for `ext`.
pub(crate) fn hlw(e: &Entry, func: &Func, ext: Option<&GridFunction>, bound: f64, m: &mut Measures) {
    let g = *e.s.grid();
    let all: Vec<usize> = (0..g.len()).collect();
    let vol = g.cell_volume();
    let fz = zero_extend(&func.f, &e.s.cells);
    let mut gs = vec![("zero extension", fz)];
    if let Some(x) = ext {
        gs.push(("extension", x.clone()));
    }
    for (label, gf) in &gs {
        for u in [1.0, 2.0] {
            let Ok(mg) = hl_maximal(gf, u, &e.ladder) else { continue };
            for &(uu, p) in HLW_PAIRS.iter().filter(|(uu, _)| *uu == u) {
                let lhs = lu_norm_cells(mg.values(), all.iter().copied(), p, vol);
                let rhs = lu_norm_cells(gf.values(), all.iter().copied(), p, vol);
                let key = format!("hlw.u={},p={}", fmt_u(uu), fmt_u(p));
                m.acc(&key, HLW, Some(bound), true).add(lhs, rhs, func.zero, || format!("{} of {}", label, func.name));
            }
        }
    }
}
