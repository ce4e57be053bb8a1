//! The Whitney-type extension: `f` on S, and off S the blend
//! `sum_Q phi_Q(x) P_Q f(x)` of the per-cube projectors.
//!
//! The operator depends on S and `k` only; no smoothness or integrability
//! parameter enters its construction.

use serde::{Deserialize, Serialize};

use crate::approx::{assign_pq_with, projector_supports, ProjectorMap, Support};
use crate::error::{Error, Result};
use crate::grid::{Cube, GridFunction};
use crate::quasicube::{auto_epsilon, QuasiCubeFamily, DEFAULT_GAMMA1_CAP};
use crate::regular_set::RegularSet;
use crate::whitney::{partition_of_unity, whitney_decompose_with, PartitionOfUnity, WhitneyDecomposition, Window};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtensionOptions {
    /// Starting ratio of the epsilon search.
    pub eps0: f64,
    pub gamma1_cap: f64,
    /// Smoothness order of the bumps; raised to at least `k`.
    pub smoothness: usize,
    pub window: Window,
}

impl Default for ExtensionOptions {
    fn default() -> Self {
        ExtensionOptions { eps0: 0.25, gamma1_cap: DEFAULT_GAMMA1_CAP, smoothness: 2, window: Window::default() }
    }
}

#[derive(Clone, Debug)]
pub struct ExtensionOperator {
    pub set: RegularSet,
    pub whitney: WhitneyDecomposition,
    pub partition: PartitionOfUnity,
    pub family: QuasiCubeFamily,
    pub k: usize,
    supports: Vec<Option<Support>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub epsilon: f64,
    pub gamma1: f64,
    pub gamma2: usize,
    pub deficiency_count: usize,
    pub widened_count: usize,
}

impl ExtensionOperator {
    pub fn build(s: &RegularSet, k: usize, opts: &ExtensionOptions) -> Result<ExtensionOperator> {
        let w = whitney_decompose_with(s, s.grid(), opts.window)?;
        let (_, fam) = auto_epsilon(s, &w, opts.eps0, opts.gamma1_cap)?;
        Ok(ExtensionOperator::from_parts(s, w, fam, k, opts.smoothness.max(k)))
    }

    pub fn from_parts(s: &RegularSet, w: WhitneyDecomposition, fam: QuasiCubeFamily, k: usize, m: usize) -> ExtensionOperator {
        let partition = partition_of_unity(&w, s, m);
        let supports = projector_supports(s, &w, &fam, k);
        ExtensionOperator { set: s.clone(), whitney: w, partition, family: fam, k, supports }
    }

    /// Same geometry, different order `k`.
    pub fn with_order(&self, k: usize) -> ExtensionOperator {
        let supports = projector_supports(&self.set, &self.whitney, &self.family, k);
        ExtensionOperator { k, supports, ..self.clone() }
    }

    pub fn projectors(&self, f: &GridFunction) -> ProjectorMap {
        assign_pq_with(f, &self.supports, self.k)
    }

    pub fn extend(&self, f: &GridFunction) -> Result<GridFunction> {
        Ok(self.extend_with_map(f)?.0)
    }

    pub fn extend_with_map(&self, f: &GridFunction) -> Result<(GridFunction, ProjectorMap)> {
        let grid = *self.set.grid();
        if f.grid() != &grid {
            return Err(Error::GridMismatch);
        }
        let map = self.projectors(f);
        let mut out = vec![0.0; grid.len()];
        for (c, v) in out.iter_mut().enumerate() {
            if self.set.contains(c) {
                *v = f.value(c);
            } else {
                let x = grid.center(c);
                *v = self
                    .partition
                    .at_cell(c)
                    .iter()
                    .filter(|(q, _)| !map.zero[*q as usize])
                    .map(|&(q, phi)| phi * map.polys[q as usize].eval(&x))
                    .sum();
            }
        }
        Ok((GridFunction::new(grid, out)?, map))
    }

    pub fn sidecar(&self, map: &ProjectorMap) -> Sidecar {
        Sidecar {
            epsilon: self.family.epsilon,
            gamma1: self.family.gamma1,
            gamma2: self.family.gamma2,
            deficiency_count: map.deficiency_count(),
            widened_count: map.widened_count(),
        }
    }
}

pub fn extend(f: &GridFunction, op: &ExtensionOperator) -> Result<GridFunction> {
    op.extend(f)
}

/// Whether every cell of S inside `cube` is a cell of the grid: the cube
/// stays in the box, or S has no cell on any box face the cube crosses.
pub fn sees_all_of_s(s: &RegularSet, cube: &Cube) -> bool {
    let g = s.grid();
    let n = g.n();
    let dims = g.dims();
    (0..n).all(|a| {
        let low = cube.center[a] - cube.radius < g.box_lo(a);
        let high = cube.center[a] + cube.radius > g.box_hi(a);
        !(low && touches_face(s, a, 0)) && !(high && touches_face(s, a, dims[a] - 1))
    })
}

fn touches_face(s: &RegularSet, axis: usize, layer: usize) -> bool {
    let g = s.grid();
    s.cell_list().iter().any(|&c| g.multi(c)[axis] == layer)
}

/// `(||Ef||_{L_u(K)}, ||f||_{L_u(25K ∩ S)})`, or `None` when K leaves the box
/// or `25K ∩ S` is not fully represented on the grid (see [`sees_all_of_s`]).
/// `ext` is the extension of `f`.
pub fn extend_norm_check(f: &GridFunction, ext: &GridFunction, s: &RegularSet, k: &Cube, u: f64) -> Option<(f64, f64)> {
    let g = s.grid();
    let big = k.scale(25.0);
    let k_inside = (0..g.n()).all(|a| k.center[a] - k.radius >= g.box_lo(a) && k.center[a] + k.radius <= g.box_hi(a));
    if !k_inside || !sees_all_of_s(s, &big) {
        return None;
    }
    let kcells = crate::grid::cube_cells(g, k);
    let lhs = crate::grid::lu_norm(ext, &kcells, u);
    let rhs_cells = crate::regular_set::set_cells_in(s, &big);
    let rhs = crate::grid::lu_norm_cells(f.values(), rhs_cells.into_iter(), u, g.cell_volume());
    Some((lhs, rhs))
}
