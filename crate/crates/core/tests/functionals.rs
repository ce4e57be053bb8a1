use approx::assert_relative_eq;
use proptest::prelude::*;
use whitext::approx::normalized_local_approx;
use whitext::functionals::*;
use whitext::grid::*;

fn line(cells: usize, lo: f64, hi: f64) -> Grid {
    Grid::uniform(1, cells, lo, hi).unwrap()
}

#[test]
fn sharp_of_identity_is_one_half() {
    let g = line(2048, 0.0, 4.0);
    let f = GridFunction::from_fn(g, |x| x[0]).unwrap();
    let s = CellSet::full(g);
    let ladder = RadiusLadder::new(g.h(), 1.0, 4);
    let sharp = sharp_maximal(&f, &s, 1.0, &ladder, TableOptions::default());
    let mid = g.cell_of(&[2.0]).unwrap()[0];
    assert!((sharp[mid] - 0.5).abs() < 5e-3, "{}", sharp[mid]);
}

#[test]
fn median_constant_by_brute_force() {
    // min_c (1/2r) int |y - c| dy over Q(x0, r), searched over c.
    let g = line(1000, 0.0, 1.0);
    let f = GridFunction::from_fn(g, |x| x[0]).unwrap();
    let q = Cube::new(&[0.5], 0.2);
    let cells = cube_cells(&g, &q);
    let mut best = f64::INFINITY;
    for i in 0..=400 {
        let c = 0.3 + 0.4 * i as f64 / 400.0;
        let e: f64 = cells.iter().map(|k| (f.value(k) - c).abs() * g.h()).sum();
        best = best.min(e / 0.4);
    }
    let v = normalized_local_approx(&f, &q, None, 1, 1.0);
    assert!((v - best).abs() < 1e-3);
    assert!((v - 0.1).abs() < 1e-3);
}

#[test]
fn constants_and_low_degree_have_no_sharp_part() {
    let g = line(256, 0.0, 1.0);
    let s = CellSet::full(g);
    let ladder = RadiusLadder::for_grid(&g);
    let c = GridFunction::from_fn(g, |_| 3.0).unwrap();
    assert!(sharp_maximal(&c, &s, 0.5, &ladder, TableOptions::default()).iter().all(|&v| v.abs() < 1e-12));
    let lin = GridFunction::from_fn(g, |x| 2.0 * x[0] - 1.0).unwrap();
    assert!(sharp_maximal(&lin, &s, 2.0, &ladder, TableOptions::default()).iter().all(|&v| v.abs() < 1e-9));
}

#[test]
fn generalized_sharp_with_q_inf_equals_sharp_maximal() {
    let g = line(512, 0.0, 1.0);
    let s = CellSet::from_centers(g, |x| x[0] < 0.3 || x[0] > 0.5);
    let f = GridFunction::from_fn(g, |x| (7.0 * x[0]).sin()).unwrap();
    let ladder = RadiusLadder::for_grid(&g);
    let a = sharp_maximal(&f, &s, 0.7, &ladder, TableOptions::default());
    let b = generalized_sharp(&f, Some(&s), &SpaceParams::new(0.7, 1, 2.0, f64::INFINITY, 1.0), f64::INFINITY, &ladder, TableOptions::default())
        .unwrap();
    let cells = s.cells();
    for (i, &c) in cells.iter().enumerate() {
        assert_eq!(a[i], b[i], "cell {c}");
    }
    assert!(generalized_sharp(&f, Some(&s), &SpaceParams::new(2.0, 1, 2.0, 1.0, 1.0), 1.0, &ladder, TableOptions::default())
        .is_err());
}

#[test]
fn hl_maximal_of_an_indicator() {
    let g = line(900, -4.0, 5.0);
    let ind = GridFunction::from_fn(g, |x| if (0.0..=1.0).contains(&x[0]) { 1.0 } else { 0.0 }).unwrap();
    let ladder = RadiusLadder::for_grid(&g);
    let m = HlMaximal::new(&ind, 1.0, &ladder).unwrap();
    assert!((m.at(&[0.5, 0.0, 0.0]) - 1.0).abs() < 1e-9);
    // Brute force over every radius on a fine scan.
    let x = [1.5, 0.0, 0.0];
    let want = ladder.t.iter().filter(|&&r| r >= 0.5).map(|&r| (r - 0.5).min(1.0) / (2.0 * r)).fold(0.0, f64::max);
    assert!((m.at(&x) - want).abs() < 2e-3, "{} vs {want}", m.at(&x));
    let mut scan = 0.0f64;
    for i in 1..=20_000 {
        let r = 4.5 * i as f64 / 20_000.0;
        scan = scan.max(((r - 0.5).max(0.0)).min(1.0) / (2.0 * r));
    }
    assert!(m.at(&x) <= scan + 2e-3);
    assert!(scan - m.at(&x) < 0.02);
    // Away from the box faces a constant is its own maximal function.
    let c = GridFunction::from_fn(g, |_| -2.0).unwrap();
    let short = RadiusLadder::new(g.h(), 1.0, 4);
    let mc = hl_maximal(&c, 2.0, &short).unwrap();
    for cell in 0..g.len() {
        let x = g.center(cell)[0];
        if x > -2.9 && x < 3.9 {
            assert!((mc.value(cell) - 2.0).abs() < 1e-9);
        }
    }
}

#[test]
fn moduli_of_simple_functions() {
    let g = line(1000, 0.0, 1.0);
    let lin = GridFunction::from_fn(g, |x| 3.0 * x[0] + 1.0).unwrap();
    let sq = GridFunction::from_fn(g, |x| x[0] * x[0]).unwrap();
    let id = GridFunction::from_fn(g, |x| x[0]).unwrap();
    for t in [0.01, 0.05, 0.2] {
        assert!(modulus_continuity(&lin, 2, f64::INFINITY, t).unwrap() < 1e-12);
        let m = (t / g.h()).floor() * g.h();
        assert_relative_eq!(modulus_continuity(&sq, 2, f64::INFINITY, t).unwrap(), 2.0 * m * m, epsilon = 1e-9);
        assert_relative_eq!(modulus_continuity(&id, 1, f64::INFINITY, t).unwrap(), m, epsilon = 1e-9);
    }
    assert!(modulus_continuity(&id, 1, 2.0, 0.5 * g.h()).is_err());
}

#[test]
fn kp_modulus_vanishes_on_polynomials() {
    let g = line(256, 0.0, 1.0);
    let lin = GridFunction::from_fn(g, |x| 1.0 - x[0]).unwrap();
    let m = kp_modulus(&lin, None, 2, 2.0, 1.0, 16.0 * g.h()).unwrap();
    assert!(m.packing < 1e-10 && m.integral < 1e-10);
    assert!(kp_modulus(&lin, None, 2, 2.0, 1.0, g.h()).is_err());
}

#[test]
fn trace_norms_of_constants() {
    let g = line(512, 0.0, 2.0);
    let s = CellSet::from_centers(g, |x| x[0] <= 1.0);
    let f = GridFunction::from_fn(g, |_| -1.5).unwrap();
    let ladder = RadiusLadder::for_grid(&g);
    let v = SpaceParams::new(0.5, 1, 2.0, 2.0, 1.0);
    let t = trace_seminorms(&f, &s, &v, &ladder, TableOptions::default());
    let want = 1.5 * measure(&s).sqrt();
    for part in [t.tl, t.besov] {
        assert_relative_eq!(part.unwrap().value, want, epsilon = 1e-9);
    }
    let w = wholespace_norms(&GridFunction::zeros(g), &v, &ladder, TableOptions::default()).unwrap();
    assert_eq!(w.besov_modulus.unwrap().value, 0.0);
    assert_eq!(w.tl.unwrap().value, 0.0);
}

#[test]
fn besov_of_identity_is_finite() {
    let g = line(1024, -0.5, 1.5);
    let s = CellSet::from_centers(g, |x| (0.0..=1.0).contains(&x[0]));
    let f = GridFunction::from_fn(g, |x| x[0]).unwrap();
    let ladder = RadiusLadder::for_grid(&g);
    let mut a = Analysis::new(f, Some(s), ladder, TableOptions::default());
    let mut last = 0.0;
    for sm in [0.2, 0.4, 0.6, 0.8] {
        let v = SpaceParams::new(sm, 1, f64::INFINITY, f64::INFINITY, f64::INFINITY);
        let semi = a.trace_norm(Space::Besov, &v).unwrap().seminorm;
        assert!(semi.is_finite() && semi >= last);
        last = semi;
    }
    // The best constant on a cube of radius t misses x by t in sup norm.
    let prof = a.approx_profile(1, f64::INFINITY, f64::INFINITY);
    let t = a.ladder.t[8];
    assert!((prof[8] / t - 1.0).abs() < 1e-9, "{}", prof[8] / t);
}

#[test]
fn ladder_invariants() {
    let l = RadiusLadder::new(0.01, 2.0, 4);
    assert_eq!(l.t[0], 0.01);
    assert!(l.t.windows(2).all(|w| w[1] > w[0]));
    let d = l.doubled();
    assert_eq!(d.per_octave, 8);
    assert!(l.t.iter().all(|t| d.index_of(*t).is_some()));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn hl_maximal_is_bounded_and_homogeneous(vals in prop::collection::vec(-3.0f64..3.0, 64), u in 1.0f64..3.0, lam in -4.0f64..4.0) {
        let g = line(64, 0.0, 1.0);
        let f = GridFunction::new(g, vals).unwrap();
        let ladder = RadiusLadder::for_grid(&g);
        let m = hl_maximal(&f, u, &ladder).unwrap();
        let top = f.values().iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let scaled = GridFunction::new(g, f.values().iter().map(|v| lam * v).collect()).unwrap();
        let ms = hl_maximal(&scaled, u, &ladder).unwrap();
        for c in 0..g.len() {
            prop_assert!(m.value(c) <= top * (1.0 + 1e-12));
            prop_assert!((ms.value(c) - lam.abs() * m.value(c)).abs() <= 1e-9 * (1.0 + m.value(c)));
        }
    }

    #[test]
    fn besov_seminorm_grows_with_s(w in 1.0f64..10.0, s1 in 0.05f64..0.9, ds in 0.0f64..0.9) {
        let g = line(256, 0.0, 1.0);
        let f = GridFunction::from_fn(g, |x| (w * x[0]).sin()).unwrap();
        let s = CellSet::full(g);
        let mut a = Analysis::new(f, Some(s), RadiusLadder::for_grid(&g), TableOptions::default());
        let s2 = (s1 + ds).min(0.95);
        let v1 = SpaceParams::new(s1, 1, 2.0, 2.0, 1.0);
        let v2 = SpaceParams::new(s2, 1, 2.0, 2.0, 1.0);
        let b1 = a.trace_norm(Space::Besov, &v1).unwrap().seminorm;
        let b2 = a.trace_norm(Space::Besov, &v2).unwrap().seminorm;
        prop_assert!(b1 <= b2 * (1.0 + 1e-12));
    }
}
