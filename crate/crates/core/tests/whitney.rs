use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use whitext::grid::*;
use whitext::regular_set::*;
use whitext::whitney::*;

fn left_half_line() -> RegularSet {
    let g = Grid::uniform(1, 1024, -8.0, 8.0).unwrap();
    let cells = CellSet::from_centers(g, |x| x[0] <= 0.0);
    RegularSet::new(cells, 2.0, 1.0).unwrap()
}

fn find(w: &WhitneyDecomposition, lo: f64, hi: f64) -> Option<&WhitneyCube> {
    w.cubes
        .iter()
        .find(|q| (q.cube.center[0] - 0.5 * (lo + hi)).abs() < 1e-12 && (q.cube.radius - 0.5 * (hi - lo)).abs() < 1e-12)
}

#[test]
fn dyadic_family_of_a_half_line() {
    let s = left_half_line();
    let w = whitney_decompose(&s, s.grid()).unwrap();
    for (lo, hi) in [(0.5, 1.0), (1.0, 2.0), (2.0, 4.0)] {
        assert!(find(&w, lo, hi).is_some(), "[{lo}, {hi}] missing");
    }
    let q = find(&w, 1.0, 2.0).unwrap().cube;
    let nb = w.neighbors(&q).unwrap();
    let has = |lo: f64, hi: f64| nb.iter().any(|k| (k.center[0] - 0.5 * (lo + hi)).abs() < 1e-12 && (k.radius - 0.5 * (hi - lo)).abs() < 1e-12);
    assert!(has(0.5, 1.0) && has(2.0, 4.0));
    assert!(w.neighbors(&Cube::new(&[1.4], 0.5)).is_err());
}

fn square() -> RegularSet {
    let g = Grid::uniform(2, 64, -0.5, 1.5).unwrap();
    generate_set(&SetSpec::Box { lo: vec![0.0, 0.0], hi: vec![1.0, 1.0] }, &g).unwrap()
}

#[test]
fn covering_and_distance_window() {
    let s = square();
    let g = *s.grid();
    let w = whitney_decompose(&s, &g).unwrap();
    for c in 0..g.len() {
        let x = g.center(c);
        let m = w.multiplicity(&x);
        if s.contains(c) {
            assert_eq!(m, 0);
        } else {
            assert!(m >= 1, "cell {c} uncovered");
        }
    }
    for q in w.cubes.iter().filter(|q| !q.flagged) {
        let d = (q.set_dist_units() as f64) / UNITS_PER_CELL as f64 * g.h();
        assert!(d >= q.diam() * (1.0 - 1e-12), "cube {:?} too close", q.cube);
        assert!(d <= 4.0 * q.diam() * (1.0 + 1e-12), "cube {:?} too far", q.cube);
    }
}

#[test]
fn random_points_hit_at_most_two_to_the_n_cubes() {
    let s = square();
    let g = *s.grid();
    let w = whitney_decompose(&s, &g).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut outside, mut single) = (0, 0);
    for _ in 0..20_000 {
        let x = [rng.gen_range(-0.5..1.5), rng.gen_range(-0.5..1.5), 0.0];
        let m = w.multiplicity(&x);
        assert!(m <= 4);
        if !s.contains(g.flat(&g.cell_of(&x).unwrap())) {
            outside += 1;
            single += usize::from(m == 1);
        }
    }
    // Shared faces have measure zero.
    assert!(single as f64 > 0.99 * outside as f64, "{single} of {outside}");
}

#[test]
fn neighbors_have_comparable_size() {
    let s = square();
    let w = whitney_decompose(&s, s.grid()).unwrap();
    for id in 0..w.len() {
        for k in w.neighbor_ids(id) {
            let r = w.cubes[k].diam() / w.cubes[id].diam();
            assert!((0.25..=4.0).contains(&r), "ratio {r}");
            assert!(w.cubes[k].cube.star().meets(&w.cubes[id].cube.star(), 2));
        }
    }
}

#[test]
fn partition_properties() {
    let s = square();
    let g = *s.grid();
    let w = whitney_decompose(&s, &g).unwrap();
    let pu = partition_of_unity(&w, &s, 3);
    for c in 0..g.len() {
        if s.contains(c) {
            assert!(pu.at_cell(c).is_empty());
            continue;
        }
        let x = g.center(c);
        let mut total = 0.0;
        for &(k, v) in pu.at_cell(c) {
            assert!((0.0..=1.0 + 1e-15).contains(&v));
            assert!(w.cubes[k as usize].cube.star().contains(&x, 2));
            total += v;
        }
        assert!((total - 1.0).abs() < 1e-12, "sum {total} at cell {c}");
    }
}

#[test]
fn smoothstep_shape() {
    for m in 0..5 {
        assert_eq!(smoothstep(m, 0.0), 0.0);
        assert_eq!(smoothstep(m, 1.0), 1.0);
        assert!((smoothstep(m, 0.5) - 0.5).abs() < 1e-12);
    }
    let q = Cube::new(&[0.0], 1.0);
    assert_eq!(bump(&q, 2, &[0.5, 0.0, 0.0], 1), 1.0);
    assert_eq!(bump(&q, 2, &[1.125, 0.0, 0.0], 1), 0.0);
    assert!(bump(&q, 2, &[1.06, 0.0, 0.0], 1) > 0.0);
}

proptest! {
    #[test]
    fn smoothstep_is_monotone(m in 0usize..6, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(smoothstep(m, lo) <= smoothstep(m, hi) + 1e-15);
        prop_assert!((smoothstep(m, a) + smoothstep(m, 1.0 - a) - 1.0).abs() < 1e-12);
    }
}
