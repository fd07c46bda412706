use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use dssbound::constraints;
use dssbound::entset::{self, Column, VarSet};
use dssbound::lp::{self, simplex, Mode, Route, Status};
use dssbound::rational::{frac, int, to_f64};
use dssbound::reduce::{self, ClosureOracle, NodePermutation};
use dssbound::verify::JointPmf;
use dssbound::{enumerate_universe, max_flow_bound, DssParams, Rational};

fn shapes() -> impl Strategy<Value = (u8, u8, u8)> {
    prop_oneof![Just((2, 1, 1)), Just((3, 1, 2)), Just((3, 2, 2)), Just((4, 2, 3)), Just((4, 3, 3)), Just((4, 2, 2))]
}

fn positive() -> impl Strategy<Value = Rational> {
    (1i64..=24, 1i64..=8).prop_map(|(p, q)| frac(p, q))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn closure_is_extensive_idempotent_monotone(shape in shapes(), a in any::<u64>(), b in any::<u64>()) {
        let universe = enumerate_universe(&DssParams::shape(shape.0, shape.1, shape.2).unwrap()).unwrap();
        let oracle = ClosureOracle::for_universe(&universe);
        let full = VarSet::full(universe.len()).bits();
        let s = VarSet(a & full);
        let t = VarSet((a | b) & full);
        let cs = oracle.closure(s);
        prop_assert!(s.is_subset(cs));
        prop_assert_eq!(oracle.closure(cs), cs);
        prop_assert!(cs.is_subset(oracle.closure(t)));
    }

    #[test]
    fn closure_commutes_with_relabeling(shape in shapes(), a in any::<u64>(), pick in any::<usize>()) {
        let universe = enumerate_universe(&DssParams::shape(shape.0, shape.1, shape.2).unwrap()).unwrap();
        let oracle = ClosureOracle::for_universe(&universe);
        let group = NodePermutation::all(shape.0);
        let sigma = reduce::induced_action(&group[pick % group.len()], &universe).unwrap();
        let s = VarSet(a & VarSet::full(universe.len()).bits());
        prop_assert_eq!(oracle.closure(sigma.apply_set(s)), sigma.apply_set(oracle.closure(s)));
    }

    #[test]
    fn max_flow_is_monotone_and_homogeneous(shape in shapes(), alpha in positive(), beta in positive(), step in positive(), scale in positive()) {
        let (n, k, d) = shape;
        let at = |a: &Rational, b: &Rational| max_flow_bound(&DssParams::new(n, k, d, a.clone(), b.clone()).unwrap()).unwrap();
        let base = at(&alpha, &beta);
        prop_assert!(at(&(&alpha + &step), &beta) >= base);
        prop_assert!(at(&alpha, &(&beta + &step)) >= base);
        prop_assert_eq!(at(&(&alpha * &scale), &(&beta * &scale)), &base * &scale);
    }

    #[test]
    fn reduced_equals_unreduced_on_small_systems(shape in prop_oneof![Just((2u8, 1u8, 1u8))], alpha in positive(), beta in positive()) {
        let p = DssParams::new(shape.0, shape.1, shape.2, alpha, beta).unwrap();
        let reduced = lp::solve_exact(&lp::build_rate_lp(&p, Mode::Reduced).unwrap());
        let unreduced = lp::solve_exact(&lp::build_rate_lp(&p, Mode::Unreduced).unwrap());
        prop_assert_eq!(reduced.value, unreduced.value);
    }
}

fn random_problem(seed: u64) -> simplex::Problem<Rational> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..5);
    let m = rng.gen_range(1..7);
    let rows = (0..m)
        .map(|_| simplex::Row {
            coeffs: (0..n)
                .filter_map(|j| rng.gen_bool(0.8).then(|| (j, int(rng.gen_range(-3..=4)))))
                .collect(),
            relation: [entset::Relation::Le, entset::Relation::Ge, entset::Relation::Eq][rng.gen_range(0..3)],
            rhs: int(rng.gen_range(-2..=6)),
        })
        .collect();
    simplex::Problem {
        n_vars: n,
        rows,
        objective: (0..n).map(|_| int(rng.gen_range(-2..=3))).collect(),
        maximize: rng.gen_bool(0.5),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn primal_and_dual_routes_agree(seed in any::<u64>()) {
        let p = random_problem(seed);
        let primal = simplex::solve(&p, Route::Primal);
        let dual = simplex::solve(&p, Route::Dual);
        prop_assert_eq!(primal.status, dual.status);
        if primal.status == Status::Optimal {
            prop_assert_eq!(&primal.value, &dual.value);
        }
    }
}

/// Entropies of an actual distribution satisfy every elemental inequality.
#[test]
fn random_distributions_satisfy_elemental_inequalities() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for n in 2..=4usize {
        for _ in 0..40 {
            let pmf = JointPmf::random(&mut rng, vec![3; n], 9);
            for e in entset::elemental_iter(n) {
                let lhs: f64 = e
                    .terms()
                    .iter()
                    .map(|(s, c)| *c as f64 * pmf.entropy(*s).unwrap())
                    .sum();
                assert!(lhs >= -1e-9, "{e:?} gives {lhs}");
            }
        }
    }
}

/// Requiring every superset of a k-set to determine the source changes
/// nothing: those rows already follow from the rest of the program.
#[test]
fn reconstruction_supersets_are_redundant() {
    for (n, k, d, a, b) in [(3, 2, 2, int(2), int(1)), (3, 2, 2, int(1), frac(1, 2)), (4, 3, 3, int(2), int(1))] {
        let p = DssParams::new(n, k, d, a, b).unwrap();
        let universe = enumerate_universe(&p).unwrap();
        let extra = constraints::reconstruction_superset_constraints(&universe);
        assert!(!extra.is_empty());
        let plain = lp::solve_exact(&lp::build_rate_lp(&p, Mode::Reduced).unwrap());
        let with = lp::solve_exact(&lp::build_rate_lp_with(&p, Mode::Reduced, extra).unwrap());
        assert_eq!(plain.value, with.value);
    }
}

#[test]
fn rate_program_objective_is_the_source() {
    let p = DssParams::new(3, 2, 2, int(2), int(1)).unwrap();
    let program = lp::build_rate_lp(&p, Mode::Reduced).unwrap();
    assert_eq!(program.objective.len(), 1);
    let (column, coeff) = program.objective.iter().next().unwrap();
    assert!(matches!(column, Column::Entropy(_)));
    assert_eq!(coeff, &int(1));
    let value = lp::solve_float(&program).value.unwrap();
    assert!((value - to_f64(&int(3))).abs() < 1e-9);
}
