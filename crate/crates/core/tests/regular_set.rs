use proptest::prelude::*;
use whitext::grid::*;
use whitext::regular_set::*;
use whitext::whitney::distance_field;

#[test]
fn box_mask_is_cells_with_centers_inside() {
    let g = Grid::uniform(2, 30, -1.0, 2.0).unwrap();
    let s = generate_set(&SetSpec::Box { lo: vec![0.0, 0.0], hi: vec![1.0, 1.0] }, &g).unwrap();
    for c in 0..g.len() {
        let x = g.center(c);
        let inside = (0..2).all(|a| (0.0..=1.0).contains(&x[a]));
        assert_eq!(s.contains(c), inside, "cell {c}");
    }
}

#[test]
fn half_space_mask() {
    let g = Grid::uniform(1, 40, -1.0, 1.0).unwrap();
    let s = generate_set(&SetSpec::HalfSpace { axis: 0, offset: 0.0 }, &g).unwrap();
    for c in 0..g.len() {
        assert_eq!(s.contains(c), g.center(c)[0] >= 0.0);
    }
}

#[test]
fn fat_cantor_measure_matches_bookkeeping() {
    // Generation g removes 2^(g-1) gaps of length 4^-g: 1/4 + 1/8 + 1/16 + 1/32.
    let g = Grid::uniform(1, 4usize.pow(6), 0.0, 1.0).unwrap();
    let spec = SetSpec::FatCantor { lo: 0.0, hi: 1.0, removals: vec![0.25, 0.0625, 0.015625, 0.00390625] };
    let s = generate_set(&spec, &g).unwrap();
    let closed_form = 1.0 - (0.25 + 0.125 + 0.0625 + 0.03125);
    assert!((measure(&s.cells) - closed_form).abs() / closed_form < 0.02);
    assert!((spec.nominal_measure(1).unwrap() - closed_form).abs() < 1e-12);
}

#[test]
fn empty_truncation_is_degenerate() {
    let g = Grid::uniform(1, 16, 0.0, 1.0).unwrap();
    let spec = SetSpec::Box { lo: vec![5.0], hi: vec![6.0] };
    assert!(generate_set(&spec, &g).is_err());
}

/// Independent scan: worst ratio over every center and every radius up to
/// `delta / 2` on the lattice.
fn brute_theta(s: &CellSet, radii: &[f64], delta: f64) -> f64 {
    let g = *s.grid();
    let mut worst = 1.0f64;
    for c in s.iter() {
        for &r in radii.iter().filter(|&&r| r <= delta / 2.0 * (1.0 + 1e-12)) {
            let q = cube_cells(&g, &Cube::at(g.center(c), r));
            let inter = q.intersection(s).unwrap();
            worst = worst.max(Cube::at(g.center(c), r).volume(g.n()) / measure(&inter));
        }
    }
    worst
}

#[test]
fn half_line_theta_tends_to_two() {
    let g = Grid::uniform(1, 512, -1.0, 1.0).unwrap();
    let s = generate_set(&SetSpec::HalfSpace { axis: 0, offset: 0.0 }, &g).unwrap();
    assert!(s.theta > 1.8 && s.theta <= 2.0 + 1e-9, "theta {}", s.theta);
    let reg = estimate_regularity(&s.cells, &default_radii(&g)).unwrap();
    let brute = brute_theta(&s.cells, &reg.radii, reg.delta);
    assert!((brute - reg.theta).abs() < 1e-9, "{brute} vs {}", reg.theta);
}

#[test]
fn square_theta_tends_to_four() {
    let g = Grid::uniform(2, 64, -0.5, 1.5).unwrap();
    let s = generate_set(&SetSpec::Box { lo: vec![0.0, 0.0], hi: vec![1.0, 1.0] }, &g).unwrap();
    assert!(s.theta > 3.0 && s.theta <= 4.0 + 1e-9, "theta {}", s.theta);
    assert!(s.delta >= 16.0 * g.h());
}

#[test]
fn full_box_has_theta_one() {
    let g = Grid::uniform(1, 256, 0.0, 1.0).unwrap();
    let reg = estimate_regularity(&CellSet::full(g), &default_radii(&g)).unwrap();
    assert_eq!(reg.theta, 1.0);
}

#[test]
fn nearest_on_half_line() {
    let g = Grid::uniform(1, 40, -2.0, 2.0).unwrap();
    let s = generate_set(&SetSpec::HalfSpace { axis: 0, offset: 0.0 }, &g).unwrap();
    let a = nearest_point(&s, &[-1.5, 0.0, 0.0]);
    assert!((a[0] - 0.05).abs() < 1e-12);
    let inside = g.center(30);
    assert_eq!(nearest_point(&s, &inside), inside);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn nearest_matches_exhaustive_scan(mask in prop::collection::vec(prop::bool::weighted(0.2), 144), x in -0.5f64..1.5, y in -0.5f64..1.5) {
        let g = Grid::uniform(2, 12, 0.0, 1.0).unwrap();
        let cells = CellSet::from_mask(g, mask).unwrap();
        prop_assume!(!cells.is_empty());
        let s = RegularSet::new(cells.clone(), 1.0, 1.0).unwrap();
        let p = [x, y, 0.0];
        let (c, _, d) = s.nearest(&p);
        // Exhaustive scan with lexicographic (flat order) tie-break.
        let mut best = (f64::INFINITY, usize::MAX);
        for k in cells.iter() {
            let dk = dist_inf(&p, &g.center(k), 2);
            if dk < best.0 - 1e-12 {
                best = (dk, k);
            }
        }
        prop_assert!((d - best.0).abs() < 1e-12);
        prop_assert_eq!(c, best.1);
    }

    #[test]
    fn distance_field_agrees_with_nearest(mask in prop::collection::vec(prop::bool::weighted(0.3), 100)) {
        let g = Grid::uniform(2, 10, 0.0, 1.0).unwrap();
        let cells = CellSet::from_mask(g, mask).unwrap();
        prop_assume!(!cells.is_empty());
        let s = RegularSet::new(cells, 1.0, 1.0).unwrap();
        let d = distance_field(&s, &g);
        for c in 0..g.len() {
            let (_, _, dn) = s.nearest(&g.center(c));
            prop_assert!((d[c] - dn).abs() < 1e-9, "cell {} field {} nearest {}", c, d[c], dn);
        }
    }
}
