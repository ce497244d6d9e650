mod common;

use common::boxed;
use pac_abstraction::synthesis::solve_relation;
use pac_abstraction::{
    build_abstraction, exact_abstraction_affine1d, required_sample_size, Affine1d, BlackBoxSystem, CellId, Grid64,
    InputSet64, Spec64, TransitionRelation,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn grid_strategy() -> impl Strategy<Value = Grid64> {
    prop::collection::vec((-50.0..50.0f64, 0.1..20.0f64, 1usize..12), 1..4).prop_map(|axes| {
        let iv: Vec<(f64, f64)> = axes.iter().map(|&(lo, w, _)| (lo, lo + w)).collect();
        Grid64::new(boxed(&iv), axes.iter().map(|a| a.2).collect()).unwrap()
    })
}

fn point_in(grid: &Grid64, t: &[f64]) -> Vec<f64> {
    let d = grid.domain();
    (0..grid.dim())
        .map(|i| d.lower()[i] + t[i % t.len()] * (d.upper()[i] - d.lower()[i]))
        .collect()
}

proptest! {
    #[test]
    fn quantizer_partitions_domain(grid in grid_strategy(), t in prop::collection::vec(0.0..=1.0f64, 3)) {
        let x = point_in(&grid, &t);
        let q = grid.quantize(&x).unwrap();
        let b = grid.cell_bounds(q).unwrap();
        let d = grid.domain();
        for i in 0..grid.dim() {
            let above = x[i] > b.lower()[i] || (x[i] == d.lower()[i] && b.lower()[i] == d.lower()[i]);
            prop_assert!(above && x[i] <= b.upper()[i]);
        }
    }

    #[test]
    fn center_distance_within_precision(grid in grid_strategy(), t in prop::collection::vec(0.0..=1.0f64, 3)) {
        let x = point_in(&grid, &t);
        let c = grid.cell_center(grid.quantize(&x).unwrap()).unwrap();
        let dist = x.iter().zip(&c).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        prop_assert!(dist <= grid.achieved_precision() * (1.0 + 1e-12));
    }

    #[test]
    fn flat_and_multi_index_are_inverse(grid in grid_strategy(), pick in 0.0..1.0f64) {
        let i = ((grid.n_x() as f64 * pick) as usize).min(grid.n_x() - 1);
        let multi = grid.multi_index(i).unwrap();
        prop_assert_eq!(grid.flat_index(&multi).unwrap(), i);
        prop_assert!(multi.iter().zip(grid.counts()).all(|(m, c)| m < c));
    }

    #[test]
    fn sample_size_is_monotone(
        mu in 0.01..0.5f64,
        delta in 1e-9..0.5f64,
        n_x in 1usize..5000,
        n_u in 1usize..100,
        shrink in 0.1..1.0f64,
        extra in 0usize..100,
    ) {
        let m = required_sample_size(mu, delta, n_x, n_u).unwrap();
        prop_assert!(required_sample_size(mu * shrink, delta, n_x, n_u).unwrap() >= m);
        prop_assert!(required_sample_size(mu, delta * shrink, n_x, n_u).unwrap() >= m);
        prop_assert!(required_sample_size(mu, delta, n_x + extra, n_u).unwrap() >= m);
        prop_assert!(required_sample_size(mu, delta, n_x, n_u + extra).unwrap() >= m);
    }

    #[test]
    fn more_transitions_never_grow_winning_set(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n_x = rng.gen_range(2..10);
        let n_u = rng.gen_range(1..4);
        let grid = Grid64::new(boxed(&[(0.0, n_x as f64)]), vec![n_x]).unwrap();
        let base: Vec<Vec<CellId>> = (0..n_x * n_u)
            .map(|_| vec![CellId::Cell(rng.gen_range(0..n_x))])
            .collect();
        let wider: Vec<Vec<CellId>> = base
            .iter()
            .map(|s| {
                let mut s = s.clone();
                if rng.gen_bool(0.4) {
                    s.push(CellId::Cell(rng.gen_range(0..n_x)));
                }
                if rng.gen_bool(0.05) {
                    s.push(CellId::OutOfDomain);
                }
                s.sort();
                s.dedup();
                s
            })
            .collect();
        let spec = Spec64::new(boxed(&[(n_x as f64 - 1.0, n_x as f64)]), vec![], rng.gen_range(1..8)).unwrap();
        let small = TransitionRelation::new(n_x, n_u, base).unwrap();
        let large = TransitionRelation::new(n_x, n_u, wider).unwrap();
        prop_assert!(small.is_subset_of(&large));
        let (w_small, _) = solve_relation(&grid, &small, &spec).unwrap();
        let (w_large, _) = solve_relation(&grid, &large, &spec).unwrap();
        for q in w_large.winning_set() {
            prop_assert!(w_small.is_winning(q));
            prop_assert!(w_small.time_to_go(q) <= w_large.time_to_go(q));
        }
    }

    #[test]
    fn sampled_affine_is_subset_of_exact(
        a in prop_oneof![-1.5..-0.1f64, 0.1..1.5f64],
        b in 0.2..2.0f64,
        cells in 2usize..15,
        seed in any::<u64>(),
    ) {
        let grid = Grid64::new(boxed(&[(0.0, 1.0)]), vec![cells]).unwrap();
        let inputs = InputSet64::grid(boxed(&[(-0.3, 0.6)]), &[3]).unwrap();
        let exact = exact_abstraction_affine1d(&grid, &inputs, a, b).unwrap();
        let sampled = build_abstraction(&Affine1d { a, b }, &grid, &inputs, 0.2, 0.01, seed).unwrap();
        prop_assert!(sampled.transitions.is_subset_of(&exact));
    }
}

#[test]
fn exact_oracle_is_sound_on_random_points() {
    let (a, b) = (0.7, 1.3);
    let grid = Grid64::new(boxed(&[(0.0, 1.0)]), vec![10]).unwrap();
    let inputs = InputSet64::grid(boxed(&[(-0.2, 0.4)]), &[4]).unwrap();
    let exact = exact_abstraction_affine1d(&grid, &inputs, a, b).unwrap();
    let sys = Affine1d { a, b };
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100_000 {
        let x = [rng.gen_range(0.0..=1.0)];
        let u = rng.gen_range(0..inputs.n_u());
        let q = grid.quantize(&x).unwrap().index().unwrap();
        let y = sys.step(&x, inputs.get(u).unwrap()).unwrap();
        let s = grid.quantize(&y).unwrap();
        assert!(exact.successors(q, u).unwrap().contains(&s), "x = {x:?}, u = {u}");
    }
}

fn branches_reach_target(
    rel: &TransitionRelation,
    ctrl: &pac_abstraction::Controller64,
    q: usize,
    steps: usize,
    budget: usize,
) -> bool {
    let classes = ctrl.classes();
    if classes.unsafe_[q] {
        return false;
    }
    if classes.target[q] {
        return true;
    }
    if budget == 0 {
        return false;
    }
    let Some(u) = ctrl.policy_lookup(CellId::Cell(q), steps) else {
        return false;
    };
    rel.successors(q, u).unwrap().iter().all(|s| match s {
        CellId::OutOfDomain => false,
        CellId::Cell(j) => branches_reach_target(rel, ctrl, *j, steps - 1, budget - 1),
    })
}

#[test]
fn every_branch_from_winning_cells_reaches_target() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let n_x = rng.gen_range(2..9);
        let n_u = rng.gen_range(1..4);
        let horizon = rng.gen_range(1..7);
        let grid = Grid64::new(boxed(&[(0.0, n_x as f64)]), vec![n_x]).unwrap();
        let lists = (0..n_x * n_u)
            .map(|_| {
                let mut s: Vec<CellId> = (0..rng.gen_range(1..3)).map(|_| CellId::Cell(rng.gen_range(0..n_x))).collect();
                s.sort();
                s.dedup();
                s
            })
            .collect();
        let rel = TransitionRelation::new(n_x, n_u, lists).unwrap();
        let obstacles = if rng.gen_bool(0.5) { vec![boxed(&[(0.3, 0.6)])] } else { vec![] };
        let spec = Spec64::new(boxed(&[(n_x as f64 - 1.0, n_x as f64)]), obstacles, horizon).unwrap();
        let (ctrl, _) = solve_relation(&grid, &rel, &spec).unwrap();
        for q in ctrl.winning_set() {
            let ttg = ctrl.time_to_go(q).unwrap();
            assert!(ttg <= horizon);
            assert!(branches_reach_target(&rel, &ctrl, q, horizon, ttg));
        }
    }
}

#[test]
fn f32_build_matches_shape() {
    let grid = pac_abstraction::Grid32::new(
        pac_abstraction::Hyperrect::from_intervals(&[(0.0f32, 1.0)]).unwrap(),
        vec![8],
    )
    .unwrap();
    let inputs = pac_abstraction::InputSet::new(vec![vec![0.1f32], vec![0.2]]).unwrap();
    let abs = build_abstraction(&Affine1d { a: 0.5f32, b: 1.0 }, &grid, &inputs, 0.2, 0.01, 3).unwrap();
    let exact = exact_abstraction_affine1d(&grid, &inputs, 0.5f32, 1.0).unwrap();
    assert!(abs.transitions.is_subset_of(&exact));
}
