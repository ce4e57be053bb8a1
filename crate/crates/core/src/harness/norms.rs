//! Trace versus whole-space functionals, and the quadrature consistency
//! checks on the radius ladder.

use super::config::ParamGrid;
use super::local::fmt_u;
use super::{Entry, Func, Measures};
use crate::functionals::{lq_dt, Analysis, Space, SpaceParams};

pub(crate) const SOBOLEV: &str =
    "Sobolev trace: ||f||_{L_p(S)} + ||f#_{k,S}||_{L_p(S)} is equivalent to the Calderon norm of the extension";
pub(crate) const TL: &str =
    "Triebel-Lizorkin trace: intrinsic sharp-function norm on S is equivalent to the whole-space norm of the extension";
pub(crate) const BESOV: &str =
    "Besov trace: intrinsic local-approximation norm on S is equivalent to the modulus-of-continuity norm of the extension";
pub(crate) const BESOV_LOCAL: &str =
    "Besov trace: intrinsic local-approximation norm on S is equivalent to the local-approximation norm of the extension";
pub(crate) const RESTRICT: &str = "restriction: the intrinsic functional of F|_S is bounded by C times that of F";
pub(crate) const TL_SOB: &str = "F^k_{p,2} = W^k_p: trace/extension ratios of both functionals agree within 2x";
pub(crate) const DENSITY: &str = "doubling the ladder density changes every reported functional by < 1%";
pub(crate) const Q_LARGE: &str = "generalized sharp function with q = 64 agrees pointwise with q = inf within 5%";

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum Kind {
    Sobolev,
    Tl,
    Besov,
    BesovLocal,
}

impl Kind {
    pub(crate) fn name(self) -> &'static str {
        match self {
            Kind::Sobolev => "sobolev",
            Kind::Tl => "triebel_lizorkin",
            Kind::Besov => "besov",
            Kind::BesovLocal => "besov_local",
        }
    }

    fn anchor(self) -> &'static str {
        match self {
            Kind::Sobolev => SOBOLEV,
            Kind::Tl => TL,
            Kind::Besov => BESOV,
            Kind::BesovLocal => BESOV_LOCAL,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct Combo {
    pub kind: Kind,
    pub v: SpaceParams,
}

/// Admissible combinations from the parameter grid.
pub(crate) fn combos(g: &ParamGrid) -> Vec<Combo> {
    let mut out = Vec::new();
    for &k in &g.k {
        for &p in &g.p {
            let v = SpaceParams::new(k as f64, k, p, f64::INFINITY, 1.0);
            if v.check(Space::Sobolev).is_ok() {
                out.push(Combo { kind: Kind::Sobolev, v });
            }
        }
    }
    for &s in &g.s {
        for &k in &g.k {
            for &p in &g.p {
                for &q in &g.q {
                    let v = SpaceParams::new(s, k, p, q, 1.0);
                    if v.check(Space::TriebelLizorkin).is_ok() {
                        out.push(Combo { kind: Kind::Tl, v });
                    }
                    let mut us = g.u.clone();
                    if g.u_equals_p && !us.contains(&p) {
                        us.push(p);
                    }
                    for u in us {
                        let v = SpaceParams::new(s, k, p, q, u);
                        if v.check(Space::Besov).is_ok() {
                            out.push(Combo { kind: Kind::Besov, v });
                            out.push(Combo { kind: Kind::BesovLocal, v });
                        }
                    }
                }
            }
        }
    }
    out
}

fn label(c: &Combo) -> String {
    let v = c.v;
    format!("{} s={} k={} p={} q={} u={}", c.kind.name(), v.s, v.k, fmt_u(v.p), fmt_u(v.q), fmt_u(v.u))
}

/// `(I, N)`: intrinsic functional of f on S and whole-space functional of
/// the extension. `whole` analyzes the extension of order `c.v.k`.
pub(crate) fn evaluate(c: &Combo, trace: &mut Analysis, whole: &mut Analysis) -> Option<(f64, f64)> {
    let v = c.v;
    let count = whole.ladder.count_upto(1.0);
    match c.kind {
        Kind::Sobolev => {
            let i = trace.trace_norm(Space::Sobolev, &v).ok()?.value;
            let sv = SpaceParams::new(v.k as f64, v.k, v.p, f64::INFINITY, 1.0);
            let n = whole.lp(v.p) + whole.sharp_norm(&sv, f64::INFINITY, v.p);
            Some((i, n))
        }
        Kind::Tl => {
            let i = trace.trace_norm(Space::TriebelLizorkin, &v).ok()?.value;
            let n = whole.lp(v.p) + whole.sharp_norm(&v, 1.0, v.p);
            Some((i, n))
        }
        Kind::Besov => {
            let i = trace.trace_norm(Space::Besov, &v).ok()?.value;
            let om = whole.modulus(v.k, v.p);
            let t = whole.ladder.t[..count].to_vec();
            let n = whole.lp(v.p) + lq_dt(&t, &om[..count], v.s, v.q);
            Some((i, n))
        }
        Kind::BesovLocal => {
            let i = trace.trace_norm(Space::Besov, &v).ok()?.value;
            let prof = whole.approx_profile(v.k, v.u, v.p);
            let t = whole.ladder.t[..count].to_vec();
            let n = whole.lp(v.p) + lq_dt(&t, &prof[..count], v.s, v.q);
            Some((i, n))
        }
    }
}

/// Every `(label, I, N)` for the combinations; `whole[i]` has order `ks[i]`.
pub(crate) fn all_values(cs: &[Combo], ks: &[usize], trace: &mut Analysis, whole: &mut [Analysis]) -> Vec<(String, f64, f64)> {
    cs.iter()
        .filter_map(|c| {
            let ki = ks.iter().position(|&k| k == c.v.k)?;
            let (i, n) = evaluate(c, trace, &mut whole[ki])?;
            Some((label(c), i, n))
        })
        .collect()
}

pub(crate) fn equivalence(
    func: &Func,
    cs: &[Combo],
    values: &[(String, f64, f64)],
    restriction_bound: f64,
    m: &mut Measures,
) {
    for (c, (lab, i, n)) in cs.iter().zip(values) {
        let key = format!("equivalence.{}", c.kind.name());
        let acc = m.acc(&key, c.kind.anchor(), None, true);
        acc.add(*n, *i, func.zero, || format!("N/I for {} {lab}", func.name));
        acc.add(*i, *n, func.zero, || format!("I/N for {} {lab}", func.name));
        let key = format!("equivalence.{}.restriction", c.kind.name());
        m.acc(&key, RESTRICT, Some(restriction_bound), true).add(*i, *n, func.zero, || format!("{} {lab}", func.name));
    }
}

/// Trace/extension ratio of the order-(k+1) TL functional with `s = k`,
/// `q = 2` against the Sobolev one, for `k = 1`, `p = 2`.
pub(crate) fn tl_vs_sobolev(func: &Func, trace: &mut Analysis, whole1: &mut Analysis, m: &mut Measures) {
    let p = 2.0;
    let tl = SpaceParams::new(1.0, 2, p, 2.0, 1.0);
    let sob = SpaceParams::new(1.0, 1, p, f64::INFINITY, 1.0);
    let i_tl = trace.lp(p) + trace.sharp_norm(&tl, 1.0, p);
    let n_tl = whole1.lp(p) + whole1.sharp_norm(&tl, 1.0, p);
    let i_sob = trace.lp(p) + trace.sharp_norm(&sob, f64::INFINITY, p);
    let n_sob = whole1.lp(p) + whole1.sharp_norm(&sob, f64::INFINITY, p);
    if i_tl <= func.zero || i_sob <= func.zero {
        return;
    }
    let (r_tl, r_sob) = (n_tl / i_tl, n_sob / i_sob);
    let acc = m.acc("equivalence.tl_sobolev", TL_SOB, Some(2.0), false);
    acc.add(r_tl, r_sob, 0.0, || format!("{} (TL {r_tl:.4}, Sobolev {r_sob:.4})", func.name));
    acc.add(r_sob, r_tl, 0.0, || format!("{} (TL {r_tl:.4}, Sobolev {r_sob:.4})", func.name));
}

/// Relative changes of every functional between two ladders.
pub(crate) fn density(func: &Func, a: &[(String, f64, f64)], b: &[(String, f64, f64)], bound: f64, m: &mut Measures) {
    let acc = m.acc("quadrature.ladder_density", DENSITY, Some(bound), false);
    for ((lab, i1, n1), (_, i2, n2)) in a.iter().zip(b) {
        acc.add((i2 - i1).abs(), i1.abs(), func.zero, || format!("I of {} {lab}", func.name));
        acc.add((n2 - n1).abs(), n1.abs(), func.zero, || format!("N of {} {lab}", func.name));
    }
}

pub(crate) fn q_large(e: &Entry, func: &Func, trace: &mut Analysis, ks: &[usize], bound: f64, m: &mut Measures) {
    let pairs = [(0.5, 1usize), (1.5, 2usize)];
    for (s, k) in pairs {
        if !ks.contains(&k) {
            continue;
        }
        let a = trace.sharp(&SpaceParams::new(s, k, 2.0, 64.0, 1.0), f64::INFINITY);
        let b = trace.sharp(&SpaceParams::new(s, k, 2.0, f64::INFINITY, 1.0), f64::INFINITY);
        let acc = m.acc("quadrature.q_large", Q_LARGE, Some(bound), false);
        for &c in e.s.cell_list() {
            acc.add((a[c] - b[c]).abs(), b[c], func.zero, || format!("{} s={s} k={k}", func.name));
        }
    }
}

/// Besov seminorms (`k = 1`, `p = q... = inf`, `q = 1`) at `s = 0.3` and
/// `s = 0.7` for the finiteness-boundary comparison.
pub(crate) fn besov_boundary(trace: &mut Analysis) -> (f64, f64) {
    let count = trace.ladder.count_upto(1.0);
    let prof = trace.approx_profile(1, f64::INFINITY, f64::INFINITY);
    let t = &trace.ladder.t[..count];
    (lq_dt(t, &prof[..count], 0.3, 1.0), lq_dt(t, &prof[..count], 0.7, 1.0))
}
