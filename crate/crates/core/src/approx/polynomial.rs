use serde::{Deserialize, Serialize};

use crate::grid::{Point, MAX_DIM};

/// Exponents `beta` with `|beta| <= k - 1` in `n` variables, graded then
/// lexicographic. Empty for `k = 0`.
pub fn exponents(n: usize, k: usize) -> Vec<[usize; MAX_DIM]> {
    let mut out = Vec::new();
    if k == 0 {
        return out;
    }
    for deg in 0..k {
        let mut beta = [0usize; MAX_DIM];
        push_degree(n, deg, 0, &mut beta, &mut out);
    }
    out
}

fn push_degree(n: usize, left: usize, axis: usize, beta: &mut [usize; MAX_DIM], out: &mut Vec<[usize; MAX_DIM]>) {
    if axis + 1 == n {
        beta[axis] = left;
        out.push(*beta);
        beta[axis] = 0;
        return;
    }
    for e in (0..=left).rev() {
        beta[axis] = e;
        push_degree(n, left - e, axis + 1, beta, out);
    }
    beta[axis] = 0;
}

/// `dim P_{k-1}` in `n` variables: `C(n + k - 1, n)`.
pub fn dimension(n: usize, k: usize) -> usize {
    if k == 0 {
        return 0;
    }
    let mut r = 1usize;
    for i in 0..n {
        r = r * (k + i) / (i + 1);
    }
    r
}

/// Monomials `((x - center) / scale)^beta` for a fixed exponent list.
#[derive(Clone, Debug)]
pub struct Basis {
    pub n: usize,
    pub k: usize,
    pub exps: Vec<[usize; MAX_DIM]>,
}

impl Basis {
    pub fn new(n: usize, k: usize) -> Basis {
        Basis { n, k, exps: exponents(n, k) }
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }

    /// Fills `out[i]` with the i-th monomial at the already scaled point `y`.
    #[inline]
    pub fn fill(&self, y: &Point, out: &mut [f64]) {
        let mut pw = [[1.0f64; 8]; MAX_DIM];
        let top = self.k.saturating_sub(1).min(7);
        for a in 0..self.n {
            for e in 1..=top {
                pw[a][e] = pw[a][e - 1] * y[a];
            }
        }
        for (o, b) in out.iter_mut().zip(&self.exps) {
            *o = pw[0][b[0]] * pw[1][b[1]] * pw[2][b[2]];
        }
    }
}

/// Polynomial of degree at most `k - 1` in the shifted, scaled monomial basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    pub n: usize,
    pub k: usize,
    pub center: Point,
    pub scale: f64,
    pub coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn zero(n: usize, k: usize) -> Polynomial {
        Polynomial { n, k, center: [0.0; MAX_DIM], scale: 1.0, coeffs: vec![0.0; dimension(n, k)] }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    pub fn eval(&self, x: &Point) -> f64 {
        if self.coeffs.is_empty() {
            return 0.0;
        }
        let mut y = [0.0; MAX_DIM];
        for a in 0..self.n {
            y[a] = (x[a] - self.center[a]) / self.scale;
        }
        let exps = exponents(self.n, self.k);
        let mut pw = vec![[1.0f64; MAX_DIM]; self.k.max(1)];
        for e in 1..self.k {
            for a in 0..self.n {
                pw[e][a] = pw[e - 1][a] * y[a];
            }
        }
        self.coeffs.iter().zip(&exps).map(|(c, b)| c * pw[b[0]][0] * pw[b[1]][1] * pw[b[2]][2]).sum()
    }

    /// The monomial `x^beta` in absolute coordinates.
    pub fn monomial(n: usize, k: usize, beta: [usize; MAX_DIM]) -> Polynomial {
        let exps = exponents(n, k);
        let mut coeffs = vec![0.0; exps.len()];
        if let Some(i) = exps.iter().position(|e| *e == beta) {
            coeffs[i] = 1.0;
        }
        Polynomial { n, k, center: [0.0; MAX_DIM], scale: 1.0, coeffs }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_match_binomials() {
        for n in 1..=3 {
            for k in 0..=6 {
                assert_eq!(exponents(n, k).len(), dimension(n, k));
            }
        }
        assert_eq!(dimension(2, 3), 6);
    }

    #[test]
    fn eval_matches_expansion() {
        let p = Polynomial { n: 2, k: 3, center: [1.0, -1.0, 0.0], scale: 2.0, coeffs: vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0] };
        let x = [2.0, 0.5, 0.0];
        let (u, v) = (0.5, 0.75);
        // exponents: (0,0) (1,0) (0,1) (2,0) (1,1) (0,2)
        let expect = 1.0 + 2.0 * u + 3.0 * v + 4.0 * u * u + 5.0 * u * v + 6.0 * v * v;
        assert!((p.eval(&x) - expect).abs() < 1e-12);
    }
}
