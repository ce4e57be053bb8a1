use approx::assert_relative_eq;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use whitext::approx::*;
use whitext::grid::*;
use whitext::regular_set::RegularSet;

fn line(cells: usize, lo: f64, hi: f64) -> Grid {
    Grid::uniform(1, cells, lo, hi).unwrap()
}

/// Independent dense least squares through nalgebra's SVD.
fn dense_lsq(xs: &[[f64; 2]], vals: &[f64], k: usize) -> Vec<f64> {
    let exps: Vec<(usize, usize)> = (0..k).flat_map(|d| (0..=d).map(move |i| (d - i, i))).collect();
    let a = DMatrix::from_fn(xs.len(), exps.len(), |r, c| xs[r][0].powi(exps[c].0 as i32) * xs[r][1].powi(exps[c].1 as i32));
    let b = DVector::from_column_slice(vals);
    let sol = a.clone().svd(true, true).solve(&b, 1e-14).unwrap();
    (a * sol).iter().copied().collect()
}

#[test]
fn square_fit_of_parabola() {
    let g = line(2000, -1.0, 1.0);
    let f = GridFunction::from_fn(g, |x| x[0] * x[0]).unwrap();
    let fit = projector(&f, &CellSet::full(g), 2);
    assert!(!fit.deficient);
    let at = |x: f64| fit.poly.eval(&[x, 0.0, 0.0]);
    assert!((at(0.0) - 1.0 / 3.0).abs() < 1e-5);
    assert!((at(0.5) - at(-0.5)).abs() < 1e-9);
}

#[test]
fn projector_matches_dense_oracle_in_the_plane() {
    let g = Grid::uniform(2, 9, 0.0, 1.0).unwrap();
    let f = GridFunction::from_fn(g, |x| (3.0 * x[0]).sin() + x[1] * x[1] * x[0]).unwrap();
    let cells: Vec<usize> = (0..g.len()).filter(|c| c % 3 != 1).collect();
    let xs: Vec<[f64; 2]> = cells.iter().map(|&c| [g.center(c)[0], g.center(c)[1]]).collect();
    let vals: Vec<f64> = cells.iter().map(|&c| f.value(c)).collect();
    for k in 1..=3 {
        let fit = projector_cells(&f, &cells, k);
        let oracle = dense_lsq(&xs, &vals, k);
        for (i, &c) in cells.iter().enumerate() {
            assert_relative_eq!(fit.poly.eval(&g.center(c)), oracle[i], epsilon = 1e-9);
        }
    }
}

#[test]
fn chebyshev_line_for_parabola() {
    let g = line(200, -1.0, 1.0);
    let f = GridFunction::from_fn(g, |x| x[0] * x[0]).unwrap();
    let a = CellSet::full(g);
    let (e, _) = local_best_approx(&f, &a, 2, f64::INFINITY, Mode::Exact).unwrap();
    // Brute-force search over (slope, intercept).
    let xs: Vec<f64> = a.iter().map(|c| g.center(c)[0]).collect();
    let mut best = f64::INFINITY;
    for i in 0..=200 {
        for j in -20..=20 {
            let b = i as f64 / 200.0;
            let m = j as f64 / 200.0;
            let err = xs.iter().map(|x| (x * x - m * x - b).abs()).fold(0.0, f64::max);
            best = best.min(err);
        }
    }
    assert!(e <= best + 1e-9);
    assert!((e - 0.5).abs() < 1e-2, "E = {e}");
}

#[test]
fn indicator_has_half_l2_error() {
    let g = line(1000, 0.0, 1.0);
    let f = GridFunction::from_fn(g, |x| if x[0] <= 0.5 { 1.0 } else { 0.0 }).unwrap();
    let (e, p) = local_best_approx(&f, &CellSet::full(g), 1, 2.0, Mode::Fast).unwrap();
    assert_relative_eq!(p.eval(&[0.3, 0.0, 0.0]), 0.5, epsilon = 1e-9);
    assert_relative_eq!(e, 0.5, epsilon = 1e-9);
}

#[test]
fn normalized_l1_of_identity_is_half_radius() {
    let g = line(4000, -2.0, 2.0);
    let f = GridFunction::from_fn(g, |x| x[0]).unwrap();
    for r in [0.05, 0.2, 0.7] {
        let v = normalized_local_approx(&f, &Cube::new(&[0.1], r), None, 1, 1.0);
        assert!((v - r / 2.0).abs() < 1e-3 * r + 1e-4, "r {r}: {v}");
    }
    let s = RegularSet::new(CellSet::full(g), 1.0, 1.0).unwrap();
    let v = normalized_local_approx(&f, &Cube::new(&[0.0], 0.5), Some(&s), 1, 1.0);
    assert!((v - 0.25).abs() < 1e-3);
}

#[test]
fn empty_set_gives_zero() {
    let g = line(10, 0.0, 1.0);
    let f = GridFunction::from_fn(g, |x| x[0]).unwrap();
    let (e, p) = local_best_approx(&f, &CellSet::empty(g), 2, 1.0, Mode::Exact).unwrap();
    assert_eq!(e, 0.0);
    assert!(p.is_zero());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn projector_reproduces_polynomials(c in prop::collection::vec(-3.0f64..3.0, 6), k in 1usize..=3) {
        let g = Grid::uniform(2, 12, -1.0, 1.0).unwrap();
        let exps = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)];
        let m = [1, 3, 6][k - 1];
        let f = GridFunction::from_fn(g, |x| (0..m).map(|i| c[i] * x[0].powi(exps[i].0) * x[1].powi(exps[i].1)).sum()).unwrap();
        let cells: Vec<usize> = (0..g.len()).filter(|c| c % 5 != 0).collect();
        let fit = projector_cells(&f, &cells, k);
        for &cell in &cells {
            let want = f.value(cell);
            prop_assert!((fit.poly.eval(&g.center(cell)) - want).abs() < 1e-9 * (1.0 + want.abs()));
        }
    }

    #[test]
    fn projector_is_linear(a in -2.0f64..2.0, b in -2.0f64..2.0, seed in 0u64..1000) {
        let g = line(40, 0.0, 1.0);
        let f1 = GridFunction::from_fn(g, |x| ((seed as f64 + 1.0) * x[0]).sin()).unwrap();
        let f2 = GridFunction::from_fn(g, |x| (x[0] * 7.0).cos() * x[0]).unwrap();
        let mix = f1.combine(a, &f2, b).unwrap();
        let cells: Vec<usize> = (3..31).collect();
        let p1 = projector_cells(&f1, &cells, 3).poly;
        let p2 = projector_cells(&f2, &cells, 3).poly;
        let pm = projector_cells(&mix, &cells, 3).poly;
        for &c in &cells {
            let x = g.center(c);
            prop_assert!((pm.eval(&x) - a * p1.eval(&x) - b * p2.eval(&x)).abs() < 1e-9);
        }
    }

    #[test]
    fn exact_mode_never_beaten_by_projector(vals in prop::collection::vec(-1.0f64..1.0, 30), k in 1usize..=3, sup in any::<bool>()) {
        let g = line(30, 0.0, 1.0);
        let f = GridFunction::new(g, vals).unwrap();
        let a = CellSet::full(g);
        let u = if sup { f64::INFINITY } else { 1.0 };
        let (exact, _) = local_best_approx(&f, &a, k, u, Mode::Exact).unwrap();
        let (fast, _) = local_best_approx(&f, &a, k, u, Mode::Fast).unwrap();
        prop_assert!(exact <= fast * (1.0 + 1e-7) + 1e-9);
    }
}
