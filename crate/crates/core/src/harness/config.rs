//! Verification config: corpus, parameter grid, ladder, sampling sizes and
//! tolerances. Read from TOML; every field but `sets` has a default.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::corpus::{default_functions, FunctionSpec};
use super::report::Format;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::regular_set::SetSpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n: usize,
    /// Cells per axis at the coarsest resolution.
    pub cells: usize,
    pub lo: f64,
    pub hi: f64,
}

impl GridSpec {
    pub fn grid(&self, refinement: usize) -> Result<Grid> {
        Grid::uniform(self.n, self.cells * refinement.max(1), self.lo, self.hi)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetEntry {
    pub name: String,
    pub spec: SetSpec,
    pub grid: GridSpec,
    /// Overrides of the estimated regularity constants.
    #[serde(default)]
    pub theta: Option<f64>,
    #[serde(default)]
    pub delta: Option<f64>,
    /// Functions for this set; the default list when absent.
    #[serde(default)]
    pub functions: Option<Vec<FunctionSpec>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParamGrid {
    pub s: Vec<f64>,
    pub k: Vec<usize>,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub u: Vec<f64>,
    /// Also use `u = p` for every `p`.
    pub u_equals_p: bool,
}

impl Default for ParamGrid {
    fn default() -> Self {
        ParamGrid {
            s: vec![0.3, 0.7, 1.5],
            k: vec![1, 2],
            p: vec![2.0, f64::INFINITY],
            q: vec![1.0, 2.0, f64::INFINITY],
            u: vec![1.0, 2.0],
            u_equals_p: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Sampling {
    /// Orders `k` for the reproduction check.
    pub reproduction_orders: Vec<usize>,
    /// Stratified `x` samples for the pointwise maximal check.
    pub pointwise: usize,
    /// `(x, t)` samples for the localization check.
    pub localization: usize,
    /// Random `(f, H_Q)` pairs per corpus entry for the near-best check.
    pub near_best_pairs: usize,
    pub near_best_max_cells: usize,
    /// Cubes K per corpus entry for the local-approximation checks.
    pub local_cubes: usize,
    /// Random points for the overlap count (beyond the cell centers).
    pub overlap_points: usize,
    /// Cubes for the partition derivative bounds.
    pub derivative_cubes: usize,
    /// Run the ladder-density comparison at the coarsest resolution.
    pub quadrature: bool,
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling {
            reproduction_orders: vec![1, 2, 3, 4],
            pointwise: 1000,
            localization: 1000,
            near_best_pairs: 10,
            near_best_max_cells: 1000,
            local_cubes: 24,
            overlap_points: 10_000,
            derivative_cubes: 64,
            quadrature: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub reproduction: f64,
    pub reproduction_seconds: f64,
    pub partition_sum: f64,
    pub near_best: f64,
    pub near_best_l2: f64,
    /// Minimum number of near-best pairs over the corpus.
    pub near_best_min_pairs: usize,
    pub drift: f64,
    pub maximal_inequality: f64,
    pub restriction: f64,
    pub derived_corollary: f64,
    pub ladder_density: f64,
    pub q_large: f64,
    pub skip_cap: f64,
    /// Sides below `zero * (||f||_inf + 1)` count as zero.
    pub zero: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            reproduction: 1e-8,
            reproduction_seconds: 60.0,
            partition_sum: 1e-12,
            near_best: 10.0,
            near_best_l2: 1e-8,
            near_best_min_pairs: 50,
            drift: 2.0,
            maximal_inequality: 10.0,
            restriction: 10.0,
            derived_corollary: 0.01,
            ladder_density: 0.01,
            q_large: 0.05,
            skip_cap: 0.2,
            zero: 1e-9,
        }
    }
}

/// Deliberate corruption for fault-injection runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fault {
    SkipNormalization,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_per_octave")]
    pub ladder_per_octave: usize,
    #[serde(default = "default_stride")]
    pub stride_factor: f64,
    /// Grid refinement factors; the first is `h`, the second `h/2`.
    #[serde(default = "default_refinements")]
    pub refinements: Vec<usize>,
    /// Smoothness order of the partition of unity.
    #[serde(default = "default_smoothness")]
    pub smoothness: usize,
    /// Whole-space norms skip this fraction of the box side at every face.
    #[serde(default = "default_norm_margin")]
    pub norm_margin: f64,
    #[serde(default)]
    pub params: ParamGrid,
    #[serde(default)]
    pub sampling: Sampling,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
    #[serde(default)]
    pub fault: Option<Fault>,
    pub sets: Vec<SetEntry>,
}

fn default_seed() -> u64 {
    20_240_517
}

fn default_per_octave() -> usize {
    4
}

fn default_stride() -> f64 {
    2.0
}

fn default_refinements() -> Vec<usize> {
    vec![1, 2]
}

fn default_smoothness() -> usize {
    4
}

fn default_norm_margin() -> f64 {
    0.15
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Config> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Config> {
        Config::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.refinements.is_empty() || self.refinements.iter().any(|&r| r == 0) {
            return Err(Error::Config("refinements must be positive".into()));
        }
        if self.ladder_per_octave == 0 {
            return Err(Error::Config("ladder_per_octave must be positive".into()));
        }
        if !(0.0..0.5).contains(&self.norm_margin) {
            return Err(Error::Config("norm_margin must lie in [0, 1/2)".into()));
        }
        let mut names = std::collections::BTreeSet::new();
        for s in &self.sets {
            if !names.insert(s.name.as_str()) {
                return Err(Error::Config(format!("duplicate set name {:?}", s.name)));
            }
            if !(1..=3).contains(&s.grid.n) || s.grid.cells == 0 || !(s.grid.hi > s.grid.lo) {
                return Err(Error::Config(format!("bad grid for set {:?}", s.name)));
            }
        }
        Ok(())
    }

    /// Functions used on a set.
    pub fn functions_for(&self, set: &SetEntry) -> Vec<FunctionSpec> {
        set.functions.clone().unwrap_or_else(|| default_functions(set.grid.n, self.seed))
    }

    /// The default corpus: three sets on the line at 2048 and 4096 cells,
    /// three in the plane at 128^2 and 256^2.
    pub fn default_corpus() -> Config {
        let line = GridSpec { n: 1, cells: 2048, lo: -1.5, hi: 2.5 };
        let plane = GridSpec { n: 2, cells: 128, lo: -0.5, hi: 1.5 };
        let sets = vec![
            SetEntry {
                name: "fat_cantor".into(),
                spec: SetSpec::FatCantor { lo: 0.0, hi: 1.0, removals: vec![0.25, 0.0625, 0.015625, 0.00390625] },
                grid: line.clone(),
                theta: None,
                delta: None,
                functions: None,
            },
            SetEntry {
                name: "half_line".into(),
                spec: SetSpec::HalfSpace { axis: 0, offset: 0.0 },
                grid: line.clone(),
                theta: None,
                delta: None,
                functions: None,
            },
            SetEntry {
                name: "two_intervals".into(),
                spec: SetSpec::Union {
                    parts: vec![
                        SetSpec::Box { lo: vec![0.0], hi: vec![0.4] },
                        SetSpec::Box { lo: vec![0.6], hi: vec![1.0] },
                    ],
                },
                grid: line,
                theta: None,
                delta: None,
                functions: None,
            },
            SetEntry {
                name: "fat_carpet".into(),
                spec: SetSpec::FatSierpinskiCarpet { lo: [0.0, 0.0], side: 1.0, ratios: vec![0.4, 0.3, 0.3] },
                grid: plane.clone(),
                theta: None,
                delta: None,
                functions: None,
            },
            SetEntry {
                name: "square".into(),
                spec: SetSpec::Box { lo: vec![0.0, 0.0], hi: vec![1.0, 1.0] },
                grid: plane.clone(),
                theta: None,
                delta: None,
                functions: None,
            },
            SetEntry {
                name: "lipschitz_subgraph".into(),
                spec: SetSpec::LipschitzSubgraph {
                    x_lo: 0.0,
                    x_hi: 1.0,
                    y_lo: 0.0,
                    samples: vec![0.5, 0.7, 0.45, 0.8, 0.6, 0.3, 0.55, 0.65, 0.5],
                },
                grid: plane,
                theta: None,
                delta: None,
                functions: None,
            },
        ];
        Config {
            seed: default_seed(),
            ladder_per_octave: default_per_octave(),
            stride_factor: default_stride(),
            refinements: default_refinements(),
            smoothness: default_smoothness(),
            norm_margin: default_norm_margin(),
            params: ParamGrid::default(),
            sampling: Sampling::default(),
            tolerances: Tolerances::default(),
            output: None,
            format: Format::Json,
            fault: None,
            sets,
        }
    }
}
