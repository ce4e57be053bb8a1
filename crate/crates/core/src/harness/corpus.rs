//! Corpus functions: constants, coordinate monomials, cusps, sines and
//! seeded smooth noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction, Point, MAX_DIM};
use crate::regular_set::RegularSet;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FunctionSpec {
    Constant {
        value: f64,
    },
    /// `coeff * prod_a x_a^exponents[a]`.
    Monomial {
        exponents: Vec<u32>,
        #[serde(default = "one")]
        coeff: f64,
    },
    /// `|x - x0|^sigma` in the uniform norm; `x0` defaults to the point of S
    /// nearest the middle of its bounding box.
    Cusp {
        sigma: f64,
        #[serde(default)]
        center: Option<Vec<f64>>,
    },
    /// `sin(pi lambda (x_1 + ... + x_n))`.
    Sine {
        lambda: f64,
    },
    /// Cubic B-spline bumps on a lattice of the given spacing with
    /// coefficients uniform in `[-1, 1]`.
    Noise {
        seed: u64,
        #[serde(default = "default_spacing")]
        spacing: f64,
    },
}

fn one() -> f64 {
    1.0
}

fn default_spacing() -> f64 {
    0.125
}

impl FunctionSpec {
    pub fn name(&self) -> String {
        match self {
            FunctionSpec::Constant { value } => format!("const({value})"),
            FunctionSpec::Monomial { exponents, coeff } => {
                let e: Vec<String> = exponents.iter().map(|e| e.to_string()).collect();
                if *coeff == 1.0 {
                    format!("x^({})", e.join(","))
                } else {
                    format!("{coeff}*x^({})", e.join(","))
                }
            }
            FunctionSpec::Cusp { sigma, .. } => format!("cusp({sigma})"),
            FunctionSpec::Sine { lambda } => format!("sin({lambda})"),
            FunctionSpec::Noise { seed, .. } => format!("noise({seed})"),
        }
    }

    /// Degree when the function is a polynomial.
    pub fn degree(&self) -> Option<u32> {
        match self {
            FunctionSpec::Constant { .. } => Some(0),
            FunctionSpec::Monomial { exponents, .. } => Some(exponents.iter().sum()),
            _ => None,
        }
    }
}

/// The default function list for an `n`-dimensional set.
pub fn default_functions(n: usize, seed: u64) -> Vec<FunctionSpec> {
    let mut e1 = vec![0u32; n];
    e1[0] = 1;
    let mut e2 = vec![0u32; n];
    e2[0] = 2;
    if n > 1 {
        e2[0] = 1;
        e2[1] = 1;
    }
    vec![
        FunctionSpec::Constant { value: 1.0 },
        FunctionSpec::Monomial { exponents: e1, coeff: 1.0 },
        FunctionSpec::Monomial { exponents: e2, coeff: 1.0 },
        FunctionSpec::Cusp { sigma: 0.5, center: None },
        FunctionSpec::Cusp { sigma: 1.5, center: None },
        FunctionSpec::Sine { lambda: 1.0 },
        FunctionSpec::Sine { lambda: 4.0 },
        FunctionSpec::Noise { seed, spacing: 0.125 },
    ]
}

/// Cubic B-spline with support `[-2, 2]`.
fn bspline3(x: f64) -> f64 {
    let a = x.abs();
    if a >= 2.0 {
        0.0
    } else if a >= 1.0 {
        (2.0 - a).powi(3) / 6.0
    } else {
        (4.0 - 6.0 * a * a + 3.0 * a * a * a) / 6.0
    }
}

struct Noise {
    n: usize,
    lo: [f64; MAX_DIM],
    spacing: f64,
    dims: [usize; MAX_DIM],
    coeffs: Vec<f64>,
}

impl Noise {
    fn new(grid: &Grid, seed: u64, spacing: f64) -> Noise {
        let n = grid.n();
        let mut lo = [0.0; MAX_DIM];
        let mut dims = [1usize; MAX_DIM];
        for a in 0..n {
            lo[a] = grid.box_lo(a) - 2.0 * spacing;
            dims[a] = ((grid.box_hi(a) - lo[a]) / spacing).ceil() as usize + 3;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coeffs = (0..dims.iter().product::<usize>()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Noise { n, lo, spacing, dims, coeffs }
    }

    fn eval(&self, x: &Point) -> f64 {
        let mut base = [0i64; MAX_DIM];
        for a in 0..self.n {
            base[a] = ((x[a] - self.lo[a]) / self.spacing).floor() as i64 - 1;
        }
        let span = |a: usize| if a < self.n { 4 } else { 1 };
        let mut total = 0.0;
        for i in 0..span(0) {
            for j in 0..span(1) {
                for l in 0..span(2) {
                    let off = [i, j, l];
                    let mut w = 1.0;
                    let mut flat = 0usize;
                    let mut ok = true;
                    for a in 0..MAX_DIM {
                        let node = if a < self.n { base[a] + off[a] as i64 } else { 0 };
                        if node < 0 || node >= self.dims[a] as i64 {
                            ok = false;
                            break;
                        }
                        flat = flat * self.dims[a] + node as usize;
                        if a < self.n {
                            w *= bspline3((x[a] - self.lo[a]) / self.spacing - node as f64);
                        }
                    }
                    if ok {
                        total += w * self.coeffs[flat];
                    }
                }
            }
        }
        total
    }
}

/// Point of S nearest the middle of its bounding box.
pub fn default_cusp_center(s: &RegularSet) -> Point {
    let g = s.grid();
    let n = g.n();
    let mut lo = [f64::INFINITY; MAX_DIM];
    let mut hi = [f64::NEG_INFINITY; MAX_DIM];
    for &c in s.cell_list() {
        let x = g.center(c);
        for a in 0..n {
            lo[a] = lo[a].min(x[a]);
            hi[a] = hi[a].max(x[a]);
        }
    }
    let mut mid = [0.0; MAX_DIM];
    for a in 0..n {
        mid[a] = 0.5 * (lo[a] + hi[a]);
    }
    s.nearest(&mid).1
}

/// Samples the function at every cell center of the grid. `s` resolves a
/// missing cusp center.
pub fn generate_function(spec: &FunctionSpec, grid: &Grid, s: Option<&RegularSet>) -> Result<GridFunction> {
    let n = grid.n();
    match spec {
        FunctionSpec::Constant { value } => GridFunction::from_fn(*grid, |_| *value),
        FunctionSpec::Monomial { exponents, coeff } => {
            if exponents.len() != n {
                return Err(Error::Config(format!("monomial needs {n} exponents, got {}", exponents.len())));
            }
            GridFunction::from_fn(*grid, |x| coeff * (0..n).map(|a| x[a].powi(exponents[a] as i32)).product::<f64>())
        }
        FunctionSpec::Cusp { sigma, center } => {
            let x0: Point = match (center, s) {
                (Some(c), _) => {
                    if c.len() != n {
                        return Err(Error::Config(format!("cusp center needs {n} coordinates")));
                    }
                    let mut p = [0.0; MAX_DIM];
                    p[..n].copy_from_slice(c);
                    p
                }
                (None, Some(s)) => default_cusp_center(s),
                (None, None) => [0.0; MAX_DIM],
            };
            GridFunction::from_fn(*grid, |x| crate::grid::dist_inf(x, &x0, n).powf(*sigma))
        }
        FunctionSpec::Sine { lambda } => {
            GridFunction::from_fn(*grid, |x| (std::f64::consts::PI * lambda * x[..n].iter().sum::<f64>()).sin())
        }
        FunctionSpec::Noise { seed, spacing } => {
            if !(*spacing > 0.0) {
                return Err(Error::Config("noise spacing must be positive".into()));
            }
            let noise = Noise::new(grid, *seed, *spacing);
            GridFunction::from_fn(*grid, |x| noise.eval(x))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bspline_partition_of_unity() {
        for i in 0..20 {
            let x = i as f64 / 20.0;
            let s: f64 = (-3..=3).map(|j| bspline3(x - j as f64)).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn noise_is_deterministic_and_smooth() {
        let g = Grid::uniform(1, 256, 0.0, 1.0).unwrap();
        let spec = FunctionSpec::Noise { seed: 7, spacing: 0.125 };
        let a = generate_function(&spec, &g, None).unwrap();
        let b = generate_function(&spec, &g, None).unwrap();
        assert_eq!(a.values(), b.values());
        let jump = a.values().windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
        assert!(jump < 0.1);
    }
}
