//! Exact L1 and L-infinity best polynomial approximation as linear programs.
//! Only used on small sets, to measure how far the least-squares projector is
//! from optimal.

use microlp::{ComparisonOp, OptimizationDirection, Problem};

use super::polynomial::{Basis, Polynomial};
use crate::error::{Error, Result};
use crate::grid::Point;

/// Minimizes `sum w_i |f_i - P(x_i)|` (`u = 1`) or `max_i |f_i - P(x_i)|`
/// (`u = inf`) over `P` of degree `< k`. The polynomial is expressed around
/// `center` with the given `scale`.
pub fn lp_best_approx(
    n: usize,
    k: usize,
    pts: &[Point],
    vals: &[f64],
    weights: &[f64],
    u: f64,
    center: Point,
    scale: f64,
) -> Result<(f64, Polynomial)> {
    if !(u == 1.0 || u.is_infinite()) {
        return Err(Error::Lp(format!("exact mode supports u = 1 or inf, got {u}")));
    }
    let basis = Basis::new(n, k);
    let d = basis.len();
    if d == 0 || pts.is_empty() {
        let value = if u.is_infinite() {
            vals.iter().map(|v| v.abs()).fold(0.0, f64::max)
        } else {
            vals.iter().zip(weights).map(|(v, w)| v.abs() * w).sum()
        };
        let mut p = Polynomial::zero(n, k);
        p.center = center;
        p.scale = scale;
        return Ok((value, p));
    }
    // Scale the data so the solver's absolute tolerances are meaningful.
    let fscale = vals.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-300);
    let wscale = weights.iter().copied().fold(0.0, f64::max).max(1e-300);
    let mut prob = Problem::new(OptimizationDirection::Minimize);
    let coef: Vec<_> = (0..d).map(|_| prob.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY))).collect();
    let t = if u.is_infinite() { Some(prob.add_var(1.0, (0.0, f64::INFINITY))) } else { None };
    let mut m = vec![0.0; d];
    for (i, x) in pts.iter().enumerate() {
        let mut y = [0.0; 3];
        for a in 0..n {
            y[a] = (x[a] - center[a]) / scale;
        }
        basis.fill(&y, &mut m);
        let e = match t {
            Some(t) => t,
            None => prob.add_var(weights[i] / wscale, (0.0, f64::INFINITY)),
        };
        let f = vals[i] / fscale;
        // P(x_i) + e >= f_i and P(x_i) - e <= f_i.
        let mut lo: Vec<_> = coef.iter().zip(&m).map(|(&v, &c)| (v, c)).collect();
        lo.push((e, 1.0));
        prob.add_constraint(lo.as_slice(), ComparisonOp::Ge, f);
        let mut hi: Vec<_> = coef.iter().zip(&m).map(|(&v, &c)| (v, c)).collect();
        hi.push((e, -1.0));
        prob.add_constraint(hi.as_slice(), ComparisonOp::Le, f);
    }
    let sol = prob
        .solve()
        .map_err(|e| Error::Lp(e.to_string()))?
        .into_solution()
        .map_err(|_| Error::Lp("solve interrupted".into()))?;
    let coeffs: Vec<f64> = coef.iter().map(|&v| sol.var_value(v) * fscale).collect();
    let poly = Polynomial { n, k, center, scale, coeffs };
    // Report the objective recomputed from the data, not the solver's value.
    let mut value = 0.0f64;
    for (i, x) in pts.iter().enumerate() {
        let r = (vals[i] - poly.eval(x)).abs();
        if u.is_infinite() {
            value = value.max(r);
        } else {
            value += weights[i] * r;
        }
    }
    Ok((value, poly))
}
