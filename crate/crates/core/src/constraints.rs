//! The storage-system constraint families: encoding, capacity and decoding
//! requirements, as linear rows over entropy columns and as functional
//! dependencies.

use itertools::Itertools;
use num_traits::Zero;

use crate::entset::{Column, LinearConstraint, Provenance, Relation, VarSet};
use crate::model::{Universe, VarId};
use crate::rational::{self, Rational};

/// `H(determined | determiners) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FdRule {
    pub determiners: VarSet,
    pub determined: VarSet,
}

/// A capacity bound: a fixed constant or a free LP column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Capacity {
    Fixed(Rational),
    Free,
}

/// `H(determiners, determined) - H(determiners) = 0`.
fn zero_conditional(determiners: VarSet, determined: VarSet, provenance: Provenance) -> LinearConstraint {
    LinearConstraint::entropy(
        [(determiners.union(determined), 1), (determiners, -1)],
        Relation::Eq,
        Rational::zero(),
        provenance,
    )
}

fn repair_positions_of_helper(universe: &Universe, node: u8) -> impl Iterator<Item = usize> + '_ {
    universe
        .repair_positions()
        .filter(move |&p| matches!(universe.var(p), VarId::Repair { helper, .. } if *helper == node))
}

/// Every repair scenario `(j, D)` with the positions of `U_{D[j,D]}`.
fn repair_scenarios(universe: &Universe) -> Vec<(u8, VarSet)> {
    let mut out = Vec::new();
    for failed in universe.params().nodes() {
        for helpers in universe.helper_sets(failed) {
            let set = VarSet::from_positions(helpers.iter().map(|i| {
                universe
                    .position(&VarId::repair(i, failed, helpers.clone()))
                    .expect("repair variable present in universe")
            }));
            out.push((failed, set));
        }
    }
    out
}

fn reconstruction_sets(universe: &Universe, size: usize) -> Vec<VarSet> {
    universe
        .params()
        .nodes()
        .combinations(size)
        .map(|ks| VarSet::from_positions(ks.into_iter().map(|i| universe.storage(i))))
        .collect()
}

/// Storage encoding (`H(Y_i | S) = 0`) then repair encoding
/// (`H(U_{i[j,D]} | Y_i) = 0`).
pub fn encoding_constraints(universe: &Universe) -> Vec<LinearConstraint> {
    let source = VarSet::single(universe.source());
    let mut rows: Vec<_> = universe
        .storage_positions()
        .map(|y| zero_conditional(source, VarSet::single(y), Provenance::StorageEnc))
        .collect();
    for u in universe.repair_positions() {
        let VarId::Repair { helper, .. } = universe.var(u) else {
            unreachable!()
        };
        let y = VarSet::single(universe.storage(*helper));
        rows.push(zero_conditional(y, VarSet::single(u), Provenance::RepairEnc));
    }
    rows
}

/// `H(Y_i) <= alpha` per node and `H(U) <= beta` per repair variable; a
/// free capacity becomes `H(.) - col <= 0`.
pub fn capacity_constraints(universe: &Universe, alpha: &Capacity, beta: &Capacity) -> Vec<LinearConstraint> {
    let bound = |pos: usize, cap: &Capacity, col: Column, provenance: Provenance| {
        let h = (Column::Entropy(VarSet::single(pos)), rational::int(1));
        match cap {
            Capacity::Fixed(value) => LinearConstraint::new([h], Relation::Le, value.clone(), provenance),
            Capacity::Free => LinearConstraint::new(
                [h, (col, rational::int(-1))],
                Relation::Le,
                Rational::zero(),
                provenance,
            ),
        }
    };
    let mut rows: Vec<_> = universe
        .storage_positions()
        .map(|y| bound(y, alpha, Column::Alpha, Provenance::StorageCap))
        .collect();
    rows.extend(
        universe
            .repair_positions()
            .map(|u| bound(u, beta, Column::Beta, Provenance::RepairCap)),
    );
    rows
}

/// Exact repair (`H(Y_j | U_{D[j,D]}) = 0`, `|D| = d`) then reconstruction
/// (`H(S | Y_K) = 0`, `|K| = k`).
pub fn decoding_constraints(universe: &Universe) -> Vec<LinearConstraint> {
    let source = VarSet::single(universe.source());
    let mut rows: Vec<_> = repair_scenarios(universe)
        .into_iter()
        .map(|(failed, helpers)| {
            zero_conditional(helpers, VarSet::single(universe.storage(failed)), Provenance::RepairDec)
        })
        .collect();
    rows.extend(
        reconstruction_sets(universe, universe.params().k as usize)
            .into_iter()
            .map(|ys| zero_conditional(ys, source, Provenance::Reconstruct)),
    );
    rows
}

/// Reconstruction rows for every `K` with `|K| > k`. These are implied by
/// the `|K| = k` rows and only used to check that claim.
pub fn reconstruction_superset_constraints(universe: &Universe) -> Vec<LinearConstraint> {
    let source = VarSet::single(universe.source());
    let n = universe.params().n as usize;
    (universe.params().k as usize + 1..=n)
        .flat_map(|size| reconstruction_sets(universe, size))
        .map(|ys| zero_conditional(ys, source, Provenance::Reconstruct))
        .collect()
}

/// The four zero-conditional-entropy families as functional dependencies.
pub fn fd_rules(universe: &Universe) -> Vec<FdRule> {
    let source = VarSet::single(universe.source());
    let all_storage = VarSet::from_positions(universe.storage_positions());
    let mut rules = vec![FdRule {
        determiners: source,
        determined: all_storage,
    }];
    for node in universe.params().nodes() {
        let determined = VarSet::from_positions(repair_positions_of_helper(universe, node));
        rules.push(FdRule {
            determiners: VarSet::single(universe.storage(node)),
            determined,
        });
    }
    for (failed, helpers) in repair_scenarios(universe) {
        rules.push(FdRule {
            determiners: helpers,
            determined: VarSet::single(universe.storage(failed)),
        });
    }
    for ys in reconstruction_sets(universe, universe.params().k as usize) {
        rules.push(FdRule {
            determiners: ys,
            determined: source,
        });
    }
    rules
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{enumerate_universe, DssParams};
    use crate::rational::int;

    fn universe(n: u8, k: u8, d: u8) -> Universe {
        enumerate_universe(&DssParams::shape(n, k, d).unwrap()).unwrap()
    }

    fn count(rows: &[LinearConstraint], p: Provenance) -> usize {
        rows.iter().filter(|r| r.provenance == p).count()
    }

    fn set(u: &Universe, names: &[&str]) -> VarSet {
        VarSet::from_positions(names.iter().map(|n| u.position_by_name(n).unwrap()))
    }

    #[test]
    fn encoding_counts() {
        for ((n, k, d), (st, rp)) in [((3, 2, 2), (3, 6)), ((4, 3, 3), (4, 12)), ((2, 1, 1), (2, 2))] {
            let rows = encoding_constraints(&universe(n, k, d));
            assert_eq!(count(&rows, Provenance::StorageEnc), st);
            assert_eq!(count(&rows, Provenance::RepairEnc), rp);
            assert!(rows.iter().all(|r| r.relation == Relation::Eq));
        }
    }

    #[test]
    fn decoding_counts() {
        for ((n, k, d), (rd, rc)) in [((3, 2, 2), (3, 3)), ((4, 3, 3), (4, 4)), ((4, 2, 2), (12, 6))] {
            let rows = decoding_constraints(&universe(n, k, d));
            assert_eq!(count(&rows, Provenance::RepairDec), rd);
            assert_eq!(count(&rows, Provenance::Reconstruct), rc);
        }
    }

    #[test]
    fn capacity_rows() {
        let u = universe(3, 2, 2);
        let rows = capacity_constraints(&u, &Capacity::Fixed(int(2)), &Capacity::Fixed(int(1)));
        assert_eq!(count(&rows, Provenance::StorageCap), 3);
        assert_eq!(count(&rows, Provenance::RepairCap), 6);
        let y1 = &rows[0];
        assert_eq!(y1.relation, Relation::Le);
        assert_eq!(y1.rhs, int(2));
        assert_eq!(y1.coeffs[&Column::Entropy(set(&u, &["Y1"]))], int(1));

        let rows = capacity_constraints(&u, &Capacity::Free, &Capacity::Fixed(int(1)));
        assert_eq!(rows[0].coeffs[&Column::Alpha], int(-1));
        assert_eq!(rows[0].rhs, int(0));
        assert!(!rows[5].coeffs.contains_key(&Column::Beta));
    }

    #[test]
    fn encoding_row_shape() {
        let u = universe(3, 2, 2);
        let rows = encoding_constraints(&u);
        assert_eq!(rows[0].coeffs[&Column::Entropy(set(&u, &["S", "Y1"]))], int(1));
        assert_eq!(rows[0].coeffs[&Column::Entropy(set(&u, &["S"]))], int(-1));
    }

    #[test]
    fn fd_rules_322() {
        let u = universe(3, 2, 2);
        let rules = fd_rules(&u);
        let has = |from: &[&str], to: &[&str]| {
            rules.contains(&FdRule {
                determiners: set(&u, from),
                determined: set(&u, to),
            })
        };
        assert!(has(&["S"], &["Y1", "Y2", "Y3"]));
        assert!(has(&["U2[1]", "U3[1]"], &["Y1"]));
        assert!(has(&["Y1", "Y2"], &["S"]));
        assert!(has(&["Y1"], &["U1[2]", "U1[3]"]));
        assert_eq!(rules.len(), 1 + 3 + 3 + 3);
    }

    #[test]
    fn supersets_only_above_k() {
        let u = universe(4, 2, 3);
        // C(4,3) + C(4,4)
        assert_eq!(reconstruction_superset_constraints(&u).len(), 5);
    }
}
