use proptest::prelude::*;
use whitext::extension::*;
use whitext::grid::*;
use whitext::regular_set::*;

fn two_intervals() -> RegularSet {
    let g = Grid::uniform(1, 1024, -1.5, 2.5).unwrap();
    let spec = SetSpec::Union {
        parts: vec![SetSpec::Box { lo: vec![0.0], hi: vec![0.4] }, SetSpec::Box { lo: vec![0.6], hi: vec![1.0] }],
    };
    generate_set(&spec, &g).unwrap()
}

fn square() -> RegularSet {
    let g = Grid::uniform(2, 64, -0.5, 1.5).unwrap();
    generate_set(&SetSpec::Box { lo: vec![0.0, 0.0], hi: vec![1.0, 1.0] }, &g).unwrap()
}

fn near_zone(op: &ExtensionOperator) -> Vec<usize> {
    let d = op.set.delta;
    (0..op.set.grid().len()).filter(|&c| op.whitney.dist[c] <= d / 2.0).collect()
}

#[test]
fn constants_extend_to_constants_near_s() {
    for s in [two_intervals(), square()] {
        let op = ExtensionOperator::build(&s, 2, &ExtensionOptions::default()).unwrap();
        let f = GridFunction::from_fn(*s.grid(), |_| 2.5).unwrap();
        let e = op.extend(&f).unwrap();
        for c in near_zone(&op) {
            assert!((e.value(c) - 2.5).abs() < 1e-10, "cell {c}: {}", e.value(c));
        }
    }
}

#[test]
fn affine_data_is_reproduced() {
    let s = square();
    let op = ExtensionOperator::build(&s, 2, &ExtensionOptions::default()).unwrap();
    let f = GridFunction::from_fn(*s.grid(), |x| 1.0 + 2.0 * x[0] - 3.0 * x[1]).unwrap();
    let e = op.extend(&f).unwrap();
    for c in near_zone(&op) {
        let want = f.value(c);
        assert!((e.value(c) - want).abs() <= 1e-8 * (1.0 + want.abs()));
    }
}

#[test]
fn far_zone_vanishes() {
    // A small delta makes the far cubes larger than delta.
    let s = two_intervals();
    let s = s.with_constants(s.theta, 32.0 * s.grid().h());
    let op = ExtensionOperator::build(&s, 1, &ExtensionOptions::default()).unwrap();
    let f = GridFunction::from_fn(*s.grid(), |_| 1.0).unwrap();
    let e = op.extend(&f).unwrap();
    let far: Vec<usize> = (0..s.grid().len()).filter(|&c| op.whitney.dist[c] > 5.0 * s.delta).collect();
    assert!(!far.is_empty());
    for c in far {
        assert_eq!(e.value(c), 0.0);
    }
}

#[test]
fn extension_keeps_values_on_s() {
    let s = two_intervals();
    let op = ExtensionOperator::build(&s, 3, &ExtensionOptions::default()).unwrap();
    let f = GridFunction::from_fn(*s.grid(), |x| (5.0 * x[0]).sin()).unwrap();
    let e = op.extend(&f).unwrap();
    for &c in s.cell_list() {
        assert_eq!(e.value(c), f.value(c));
    }
}

#[test]
fn norm_check_of_zero_and_one() {
    let s = two_intervals();
    let op = ExtensionOperator::build(&s, 1, &ExtensionOptions::default()).unwrap();
    let g = *s.grid();
    let k = Cube::new(&[0.2], 0.01);
    let zero = GridFunction::zeros(g);
    let ez = op.extend(&zero).unwrap();
    assert_eq!(extend_norm_check(&zero, &ez, &s, &k, 1.0), Some((0.0, 0.0)));
    let one = GridFunction::from_fn(g, |_| 1.0).unwrap();
    let e1 = op.extend(&one).unwrap();
    let (lhs, rhs) = extend_norm_check(&one, &e1, &s, &k, 2.0).unwrap();
    assert!((lhs - measure(&cube_cells(&g, &k)).sqrt()).abs() < 1e-12);
    assert!(lhs <= rhs);
    // K sticking out of the box is rejected.
    assert!(extend_norm_check(&one, &e1, &s, &Cube::new(&[2.4], 0.2), 1.0).is_none());
}

#[test]
fn grid_mismatch_is_an_error() {
    let s = two_intervals();
    let op = ExtensionOperator::build(&s, 1, &ExtensionOptions::default()).unwrap();
    let other = GridFunction::zeros(Grid::uniform(1, 512, -1.5, 2.5).unwrap());
    assert!(op.extend(&other).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn extension_is_linear(a in -2.0f64..2.0, b in -2.0f64..2.0, w in 1.0f64..9.0) {
        let s = two_intervals();
        let op = ExtensionOperator::build(&s, 2, &ExtensionOptions::default()).unwrap();
        let g = *s.grid();
        let f1 = GridFunction::from_fn(g, |x| (w * x[0]).sin()).unwrap();
        let f2 = GridFunction::from_fn(g, |x| x[0] * x[0] - 0.3).unwrap();
        let mix = f1.combine(a, &f2, b).unwrap();
        let e1 = op.extend(&f1).unwrap();
        let e2 = op.extend(&f2).unwrap();
        let em = op.extend(&mix).unwrap();
        for c in 0..g.len() {
            prop_assert!((em.value(c) - a * e1.value(c) - b * e2.value(c)).abs() < 1e-8);
        }
    }

    #[test]
    fn polynomials_of_low_degree_are_reproduced(c0 in -2.0f64..2.0, c1 in -2.0f64..2.0, c2 in -2.0f64..2.0) {
        let s = two_intervals();
        let op = ExtensionOperator::build(&s, 3, &ExtensionOptions::default()).unwrap();
        let f = GridFunction::from_fn(*s.grid(), |x| c0 + c1 * x[0] + c2 * x[0] * x[0]).unwrap();
        let e = op.extend(&f).unwrap();
        for c in near_zone(&op) {
            let want = f.value(c);
            prop_assert!((e.value(c) - want).abs() <= 1e-8 * (1.0 + want.abs()));
        }
    }
}
