use approx::assert_relative_eq;
use whitext::grid::*;
use whitext::quasicube::*;
use whitext::regular_set::*;
use whitext::whitney::*;

#[test]
fn epsilon_formula() {
    assert_relative_eq!(default_epsilon(2.0, 1, 1.0), 1.0 / 48.0, epsilon = 1e-15);
    assert_relative_eq!(default_epsilon(1.0, 1, 1.0), 1.0 / 24.0, epsilon = 1e-15);
    assert!(default_epsilon(1e-6, 1, 1.0) <= 1.0);
}

fn right_half_line(cells: usize) -> RegularSet {
    let g = Grid::uniform(1, cells, -4.0, 4.0).unwrap();
    generate_set(&SetSpec::HalfSpace { axis: 0, offset: 0.0 }, &g).unwrap()
}

#[test]
fn half_line_cube_minus_smaller_eps_cubes() {
    let s = right_half_line(8192);
    let s = s.with_constants(2.0, 8.0);
    let w = whitney_decompose(&s, s.grid()).unwrap();
    let eps = 1.0 / 48.0;
    let fam = build_quasicubes(&s, &w, eps).unwrap();
    let g = *s.grid();
    let q = w.cubes.iter().position(|q| (q.cube.center[0] + 1.5).abs() < 1e-9 && (q.cube.radius - 0.5).abs() < 1e-9);
    let q = q.expect("[-2, -1] is a Whitney cube");
    let a = g.center(fam.anchors[q]);
    assert!(a[0] > 0.0 && a[0] < g.h());
    // Explicit 1-D bookkeeping: Q_eps ∩ S minus eps-cubes of the small cubes
    // anchored at the same point.
    let qe = Cube::at(a, eps * 0.5);
    let mut expected: Vec<usize> = cube_cells(&g, &qe).iter().filter(|&c| s.contains(c)).collect();
    for &k in &fam.subtracted[q] {
        let ke = Cube::at(g.center(fam.anchors[k]), eps * w.cubes[k].cube.radius);
        expected.retain(|&c| !ke.contains(&g.center(c), 1));
    }
    assert_eq!(fam.entries[q], expected);
    assert!(!expected.is_empty());
    let ratio = w.cubes[q].cube.volume(1) / (expected.len() as f64 * g.h());
    assert!(ratio.is_finite());
}

#[test]
fn structural_invariants_on_the_square() {
    let g = Grid::uniform(2, 64, -0.5, 1.5).unwrap();
    let s = generate_set(&SetSpec::Box { lo: vec![0.0, 0.0], hi: vec![1.0, 1.0] }, &g).unwrap();
    let w = whitney_decompose(&s, &g).unwrap();
    let (eps, fam) = auto_epsilon(&s, &w, 0.25, DEFAULT_GAMMA1_CAP).unwrap();
    assert!(eps > 0.0);
    assert_eq!(fam.check_containment(&s, &w), 0);
    assert_eq!(fam.check_emptiness_rule(), 0);
    assert_eq!(fam.check_disjointness(&w), 0);
    assert!(fam.gamma1.is_finite() && fam.gamma1 >= 1.0);
}

#[test]
fn half_space_accepts_the_first_epsilon() {
    let s = right_half_line(2048);
    let w = whitney_decompose(&s, s.grid()).unwrap();
    let (eps, fam) = auto_epsilon(&s, &w, 0.25, DEFAULT_GAMMA1_CAP).unwrap();
    assert_eq!(eps, 0.25);
    assert!(fam.gamma1 < 100.0);
}

#[test]
fn invisible_epsilon_is_an_error() {
    let s = right_half_line(256);
    let w = whitney_decompose(&s, s.grid()).unwrap();
    assert!(build_quasicubes(&s, &w, 1e-6).is_err());
    assert!(build_quasicubes(&s, &w, 0.0).is_err());
}
