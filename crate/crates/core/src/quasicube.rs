//! Reflected quasi-cubes: for every Whitney cube Q a piece `H_Q` of S near Q
//! with measure comparable to `|Q|` and bounded overlap.
//!
//! `Q_eps = Q(a_Q, eps r_Q)` with `a_Q` the nearest point of S to the center
//! of Q. `H_Q` is `Q_eps ∩ S` minus the eps-cubes of the much smaller Whitney
//! cubes whose eps-cubes meet `Q_eps`. All sets are cell sets with center
//! membership.
//!
//! A cube is *visible* when `eps r_Q >= h / 2`, i.e. its eps-cube contains at
//! least one cell center. Smaller cubes cannot be resolved by the grid; their
//! `H_Q` is the single anchor cell and they are not subtracted from others.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{dist_inf, Cube};
use crate::regular_set::RegularSet;
use crate::whitney::WhitneyDecomposition;

/// Largest acceptable `gamma1` in the epsilon search.
pub const DEFAULT_GAMMA1_CAP: f64 = 1000.0;

#[derive(Clone, Debug)]
pub struct QuasiCubeFamily {
    pub epsilon: f64,
    /// Anchor cell `a_Q` per Whitney cube.
    pub anchors: Vec<usize>,
    /// `H_Q` as sorted cell lists; empty for cubes larger than delta.
    pub entries: Vec<Vec<usize>>,
    /// Whether `diam Q <= delta`.
    pub small: Vec<bool>,
    pub visible: Vec<bool>,
    /// `A_Q` (ids of subtracted cubes) per cube.
    pub subtracted: Vec<Vec<usize>>,
    pub gamma1: f64,
    pub gamma2: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuasiCubeSummary {
    pub epsilon: f64,
    pub gamma1: f64,
    pub gamma2: usize,
    pub cubes_total: usize,
    pub cubes_with_h: usize,
}

/// `min(1, (2 N 12^n theta)^(-1/n))`.
pub fn default_epsilon(theta: f64, n: usize, overlap: f64) -> f64 {
    let c1 = overlap * 12f64.powi(n as i32);
    (2.0 * c1 * theta).powf(-1.0 / n as f64).min(1.0)
}

fn is_visible(eps: f64, r: f64, h: f64) -> bool {
    eps * r >= 0.5 * h * (1.0 - 1e-12)
}

pub fn build_quasicubes(s: &RegularSet, w: &WhitneyDecomposition, eps: f64) -> Result<QuasiCubeFamily> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::Visibility(format!("epsilon {eps} not in (0, 1]")));
    }
    let grid = *s.grid();
    let h = grid.h();
    let n = grid.n();
    let delta = s.delta;
    if eps * delta / 2.0 < h * (1.0 - 1e-12) {
        return Err(Error::Visibility(format!(
            "eps * delta / 2 = {:.3e} is below the cell size {h:.3e}",
            eps * delta / 2.0
        )));
    }
    let m = w.cubes.len();
    let anchors: Vec<usize> = w.cubes.iter().map(|q| s.nearest(&q.cube.center).0).collect();
    let small: Vec<bool> = w.cubes.iter().map(|q| q.diam() <= delta * (1.0 + 1e-12)).collect();
    let visible: Vec<bool> = w.cubes.iter().map(|q| is_visible(eps, q.cube.radius, h)).collect();

    // Visible cubes grouped by anchor cell, for the A_Q search.
    let mut by_anchor: HashMap<usize, Vec<usize>> = HashMap::new();
    for k in 0..m {
        if visible[k] {
            by_anchor.entry(anchors[k]).or_default().push(k);
        }
    }

    let eps_cube = |k: usize| Cube::at(grid.center(anchors[k]), eps * w.cubes[k].cube.radius);
    let mut entries = vec![Vec::new(); m];
    let mut subtracted = vec![Vec::new(); m];
    for q in 0..m {
        if !small[q] {
            continue;
        }
        if !visible[q] {
            entries[q] = vec![anchors[q]];
            continue;
        }
        let qe = eps_cube(q);
        let rq = w.cubes[q].cube.radius;
        // Candidates: visible K with r_K <= eps r_Q whose anchor lies within
        // eps r_Q + eps r_K of a_Q.
        let reach = Cube::at(qe.center, qe.radius + eps * eps * rq);
        let mut a_q = Vec::new();
        if let Some(b) = grid.cube_index_box(&reach) {
            grid.for_each_in(&b, |c, _| {
                if let Some(ks) = by_anchor.get(&c) {
                    for &k in ks {
                        let rk = w.cubes[k].cube.radius;
                        if rk <= eps * rq * (1.0 + 1e-12) && eps_cube(k).meets(&qe, n) {
                            a_q.push(k);
                        }
                    }
                }
            });
        }
        a_q.sort_unstable();
        let Some(b) = grid.cube_index_box(&qe) else {
            subtracted[q] = a_q;
            continue;
        };
        let mut keep: Vec<(usize, bool)> = Vec::with_capacity(b.count());
        grid.for_each_in(&b, |c, _| keep.push((c, s.contains(c))));
        let ext = [b.hi[0] - b.lo[0] + 1, b.hi[1] - b.lo[1] + 1, b.hi[2] - b.lo[2] + 1];
        for &k in &a_q {
            let Some(kb) = grid.cube_index_box(&eps_cube(k)) else { continue };
            grid.for_each_in(&kb, |_, idx| {
                if (0..3).all(|a| idx[a] >= b.lo[a] && idx[a] <= b.hi[a]) {
                    let local = ((idx[0] - b.lo[0]) * ext[1] + idx[1] - b.lo[1]) * ext[2] + idx[2] - b.lo[2];
                    keep[local].1 = false;
                }
            });
        }
        entries[q] = keep.into_iter().filter(|x| x.1).map(|x| x.0).collect();
        subtracted[q] = a_q;
    }

    let mut gamma1 = 0.0f64;
    for q in 0..m {
        if small[q] {
            let hq = entries[q].len() as f64 * grid.cell_volume();
            let ratio = if hq > 0.0 { w.cubes[q].cube.volume(n) / hq } else { f64::INFINITY };
            gamma1 = gamma1.max(ratio);
        }
    }
    let mut counts = vec![0usize; grid.len()];
    for e in &entries {
        for &c in e {
            counts[c] += 1;
        }
    }
    let gamma2 = counts.into_iter().max().unwrap_or(0);
    Ok(QuasiCubeFamily { epsilon: eps, anchors, entries, small, visible, subtracted, gamma1, gamma2 })
}

impl QuasiCubeFamily {
    pub fn summary(&self) -> QuasiCubeSummary {
        QuasiCubeSummary {
            epsilon: self.epsilon,
            gamma1: self.gamma1,
            gamma2: self.gamma2,
            cubes_total: self.entries.len(),
            cubes_with_h: self.entries.iter().filter(|e| !e.is_empty()).count(),
        }
    }

    /// Property (i): every cell of `H_Q` lies in S and in `10 Q`.
    pub fn check_containment(&self, s: &RegularSet, w: &WhitneyDecomposition) -> usize {
        let g = s.grid();
        let mut bad = 0;
        for (q, e) in self.entries.iter().enumerate() {
            let ten = w.cubes[q].cube.scale(10.0);
            bad += e.iter().filter(|&&c| !s.contains(c) || !ten.contains(&g.center(c), g.n())).count();
        }
        bad
    }

    /// `H_Q` is empty exactly for the cubes larger than delta.
    pub fn check_emptiness_rule(&self) -> usize {
        self.entries.iter().zip(&self.small).filter(|(e, &sm)| e.is_empty() == sm).count()
    }

    /// Violations of the disjointness mechanism among visible cubes: two
    /// overlapping quasi-cubes must not subtract each other and must have
    /// radii within a factor eps of each other.
    pub fn check_disjointness(&self, w: &WhitneyDecomposition) -> usize {
        let mut owners: HashMap<usize, Vec<usize>> = HashMap::new();
        for (q, e) in self.entries.iter().enumerate() {
            if self.visible[q] {
                for &c in e {
                    owners.entry(c).or_default().push(q);
                }
            }
        }
        let mut bad = 0;
        let mut seen = std::collections::HashSet::new();
        for list in owners.values() {
            for (i, &a) in list.iter().enumerate() {
                for &b in &list[i + 1..] {
                    if !seen.insert((a, b)) {
                        continue;
                    }
                    let (ra, rb) = (w.cubes[a].cube.radius, w.cubes[b].cube.radius);
                    let ok = self.subtracted[a].binary_search(&b).is_err()
                        && self.subtracted[b].binary_search(&a).is_err()
                        && ra > self.epsilon * rb
                        && rb > self.epsilon * ra;
                    if !ok {
                        bad += 1;
                    }
                }
            }
        }
        bad
    }

    /// Ratio `|Q| / |H_Q|` per small cube.
    pub fn ratios(&self, w: &WhitneyDecomposition, cell_volume: f64, n: usize) -> Vec<f64> {
        (0..self.entries.len())
            .filter(|&q| self.small[q])
            .map(|q| w.cubes[q].cube.volume(n) / (self.entries[q].len() as f64 * cell_volume))
            .collect()
    }
}

/// Distance from the center of Q to its anchor, as a multiple of `r_Q`.
pub fn anchor_offset(fam: &QuasiCubeFamily, s: &RegularSet, w: &WhitneyDecomposition, q: usize) -> f64 {
    let g = s.grid();
    dist_inf(&w.cubes[q].cube.center, &g.center(fam.anchors[q]), g.n()) / w.cubes[q].cube.radius
}

/// Tries `eps0, eps0/2, ...` (at most eight halvings) and keeps the first
/// family with finite `gamma1 <= cap`; falls back to the worst-case formula.
pub fn auto_epsilon(
    s: &RegularSet,
    w: &WhitneyDecomposition,
    eps0: f64,
    gamma1_cap: f64,
) -> Result<(f64, QuasiCubeFamily)> {
    let mut diagnostics = Vec::new();
    let mut eps = eps0;
    for _ in 0..=8 {
        match build_quasicubes(s, w, eps) {
            Ok(fam) if fam.gamma1.is_finite() && fam.gamma1 <= gamma1_cap => return Ok((eps, fam)),
            Ok(fam) => diagnostics.push(format!("eps={eps:.4e}: gamma1={:.3e}", fam.gamma1)),
            Err(e) => diagnostics.push(format!("eps={eps:.4e}: {e}")),
        }
        eps /= 2.0;
    }
    let fallback = default_epsilon(s.theta, s.grid().n(), 1.0);
    match build_quasicubes(s, w, fallback) {
        Ok(fam) if fam.gamma1.is_finite() => Ok((fallback, fam)),
        Ok(fam) => {
            diagnostics.push(format!("fallback eps={fallback:.4e}: gamma1={:.3e}", fam.gamma1));
            Err(Error::EpsilonSearch(diagnostics.join("; ")))
        }
        Err(e) => {
            diagnostics.push(format!("fallback eps={fallback:.4e}: {e}"));
            Err(Error::EpsilonSearch(diagnostics.join("; ")))
        }
    }
}
