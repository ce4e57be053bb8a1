use approx::assert_relative_eq;
use proptest::prelude::*;
use whitext::grid::*;
use whitext::io::{decode_function, decode_set, encode_function, encode_set};

fn line(cells: usize, lo: f64, hi: f64) -> Grid {
    Grid::uniform(1, cells, lo, hi).unwrap()
}

#[test]
fn cube_cells_picks_centers() {
    let g = line(10, 0.0, 1.0);
    let a = cube_cells(&g, &Cube::new(&[0.5], 0.2));
    let centers: Vec<f64> = a.iter().map(|c| g.center(c)[0]).collect();
    assert_eq!(centers.len(), 4);
    for (c, want) in centers.iter().zip([0.35, 0.45, 0.55, 0.65]) {
        assert_relative_eq!(*c, want, epsilon = 1e-12);
    }
}

#[test]
fn tiny_cube_is_one_cell_and_far_cube_is_empty() {
    let g = line(10, 0.0, 1.0);
    let a = cube_cells(&g, &Cube::new(&[0.35], 0.01));
    assert_eq!(a.count(), 1);
    assert!(cube_cells(&g, &Cube::new(&[5.0], 1.0)).is_empty());
}

#[test]
fn norms_of_constants() {
    let g = line(10, 0.0, 1.0);
    let a = CellSet::from_cells(g, &[0, 1, 2, 3, 4]);
    let one = GridFunction::from_fn(g, |_| 1.0).unwrap();
    assert_relative_eq!(lu_norm(&one, &a, 2.0), 0.5f64.sqrt(), epsilon = 1e-12);
    let c = GridFunction::from_fn(g, |_| -3.5).unwrap();
    assert_eq!(lu_norm(&c, &a, f64::INFINITY), 3.5);
    assert_eq!(lu_norm(&c, &CellSet::empty(g), 2.0), 0.0);
}

#[test]
fn riemann_sum_of_identity() {
    // Analytic value of the integral of x over [0, 1] is 1/2.
    let g = line(1000, 0.0, 1.0);
    let f = GridFunction::from_fn(g, |x| x[0]).unwrap();
    assert!((lu_norm(&f, &CellSet::full(g), 1.0) - 0.5).abs() < 1e-3);
}

#[test]
fn measures() {
    let g = Grid::uniform(2, 10, 0.0, 1.0).unwrap();
    assert_relative_eq!(measure(&CellSet::full(g)), 1.0, epsilon = 1e-12);
    assert_eq!(measure(&CellSet::empty(g)), 0.0);
    for n in 1..=2 {
        let g = Grid::uniform(n, 256, 0.0, 1.0).unwrap();
        let c = [0.5; 3];
        let m = measure(&cube_cells(&g, &Cube::new(&c[..n], 0.25)));
        // Exact count: 128 centers per axis fall in [0.25, 0.75].
        assert_relative_eq!(m, 0.5f64.powi(n as i32), epsilon = 2.0 * n as f64 / 256.0);
    }
}

#[test]
fn set_algebra_is_exact() {
    let g = line(8, 0.0, 1.0);
    let a = CellSet::from_cells(g, &[0, 1, 2, 3]);
    let b = CellSet::from_cells(g, &[2, 3, 4]);
    assert_eq!(a.intersection(&b).unwrap().cells(), vec![2, 3]);
    assert_eq!(a.union(&b).unwrap().cells(), vec![0, 1, 2, 3, 4]);
    assert_eq!(a.difference(&b).unwrap().cells(), vec![0, 1]);
    assert_eq!(a.complement().count(), 4);
}

#[test]
fn non_finite_values_are_rejected() {
    let g = line(4, 0.0, 1.0);
    assert!(GridFunction::new(g, vec![0.0, f64::NAN, 1.0, 2.0]).is_err());
    assert!(Grid::uniform(1, 0, 0.0, 1.0).is_err());
}

#[test]
fn file_formats_round_trip() {
    let g = Grid::uniform(2, 5, -1.0, 1.0).unwrap();
    let f = GridFunction::from_fn(g, |x| x[0] * 3.0 - x[1]).unwrap();
    let back = decode_function(&encode_function(&f)).unwrap();
    assert_eq!(back.values(), f.values());
    assert_eq!(back.grid(), f.grid());
    let s = CellSet::from_cells(g, &[0, 3, 7, 24]);
    let buf = encode_set(&s);
    assert_eq!(&buf[..4], b"SET1");
    assert_eq!(decode_set(&buf).unwrap().cells(), s.cells());
    assert!(decode_set(b"NOPE").is_err());
}

proptest! {
    #[test]
    fn nested_cubes_give_nested_cells(x in -0.2f64..1.2, y in -0.2f64..1.2, r1 in 0.0f64..0.5, dr in 0.0f64..0.5) {
        let g = Grid::uniform(2, 32, 0.0, 1.0).unwrap();
        let a = cube_cells(&g, &Cube::new(&[x, y], r1));
        let b = cube_cells(&g, &Cube::new(&[x, y], r1 + dr));
        prop_assert!(a.is_subset(&b));
        prop_assert!(measure(&a) <= measure(&b));
    }

    #[test]
    fn holder_between_exponents(vals in prop::collection::vec(-5.0f64..5.0, 16), u1 in 1.0f64..4.0, du in 0.0f64..4.0) {
        let g = line(16, 0.0, 1.0);
        let f = GridFunction::new(g, vals).unwrap();
        let a = CellSet::from_cells(g, &[1, 2, 3, 5, 8, 13]);
        let u2 = u1 + du;
        let lhs = lu_norm(&f, &a, u1);
        let rhs = measure(&a).powf(1.0 / u1 - 1.0 / u2) * lu_norm(&f, &a, u2);
        prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-14);
        let rinf = measure(&a).powf(1.0 / u1) * lu_norm(&f, &a, f64::INFINITY);
        prop_assert!(lhs <= rinf * (1.0 + 1e-12) + 1e-14);
    }

    #[test]
    fn measure_is_additive(mask in prop::collection::vec(any::<bool>(), 20)) {
        let g = line(20, 0.0, 2.0);
        let a = CellSet::from_mask(g, mask).unwrap();
        let b = a.complement();
        prop_assert!((measure(&a) + measure(&b) - 2.0).abs() < 1e-12);
    }
}
