//! Information-theoretic checks on explicit distributions and code tables.
//!
//! Entropies are in bits. A family `A` of variable subsets is "concatenated"
//! over a permutation group acting on the variables: `W_a` collects the
//! copy of `X_{g(a)}` from the `g`-th independent copy of the distribution,
//! one per group element `g`. Independence of the copies turns the joint
//! entropy of `(W_a, a in A)` into `sum_g H(X_{g(union A)})`.

pub mod code;
pub mod pmf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::entset::VarSet;
use crate::error::{Error, Result};
use crate::model::Node;
use crate::reduce::{NodePermutation, VarPermutation};

pub use code::{check_code, check_code_symmetry, CodeReport, CodeTable, CodeSymmetryReport, Violation};
pub use pmf::JointPmf;

/// Tolerance for comparing entropy sums computed in floating point.
pub const ENTROPY_TOL: f64 = 1e-9;

/// `H(X_s)` in bits; empty sets have entropy 0.
pub fn joint_entropy(pmf: &JointPmf, s: VarSet) -> Result<f64> {
    pmf.entropy(s)
}

fn union(family: &[VarSet]) -> VarSet {
    family.iter().fold(VarSet::EMPTY, |acc, s| acc.union(*s))
}

/// Joint entropy of the concatenated variables `(W_a, a in family)` under the
/// group given by `actions` (each a permutation of the pmf's variables).
pub fn concatenation_entropy_under(pmf: &JointPmf, family: &[VarSet], actions: &[VarPermutation]) -> Result<f64> {
    let all = union(family);
    if all.is_empty() {
        return Ok(0.0);
    }
    actions.iter().map(|g| pmf.entropy(g.apply_set(all))).sum()
}

/// Node permutations acting on pmf variables `0..n` (variable `i` is node `i + 1`).
pub fn node_actions(n: u8) -> Vec<VarPermutation> {
    NodePermutation::all(n).iter().map(|s| node_action(s)).collect()
}

fn node_action(sigma: &NodePermutation) -> VarPermutation {
    VarPermutation::from_map(sigma.images().iter().map(|&img| img as usize - 1).collect())
}

fn check_degree(pmf: &JointPmf, n: u8) -> Result<()> {
    if pmf.n_vars() != n as usize {
        return Err(Error::Param(format!(
            "permutation of {n} nodes applied to a distribution over {} variables",
            pmf.n_vars()
        )));
    }
    Ok(())
}

/// [`concatenation_entropy_under`] with the full symmetric group on the pmf's
/// variables.
pub fn concatenation_entropy(pmf: &JointPmf, family: &[VarSet]) -> Result<f64> {
    let n = u8::try_from(pmf.n_vars()).map_err(|_| Error::Param("too many variables".into()))?;
    concatenation_entropy_under(pmf, family, &node_actions(n))
}

#[derive(Debug, Clone, Serialize)]
pub struct SymmetryReport {
    pub lhs: f64,
    pub rhs: f64,
    pub equal: bool,
}

impl SymmetryReport {
    fn new(lhs: f64, rhs: f64) -> Self {
        SymmetryReport {
            lhs,
            rhs,
            equal: (lhs - rhs).abs() <= ENTROPY_TOL,
        }
    }
}

/// Compares `H(W_a, a in family)` with `H(W_a, a in sigma(family))`.
pub fn check_relabeling_symmetry(pmf: &JointPmf, family: &[VarSet], sigma: &NodePermutation) -> Result<SymmetryReport> {
    check_degree(pmf, sigma.degree())?;
    let action = node_action(sigma);
    let moved: Vec<VarSet> = family.iter().map(|s| action.apply_set(*s)).collect();
    let lhs = concatenation_entropy(pmf, family)?;
    let rhs = concatenation_entropy(pmf, &moved)?;
    Ok(SymmetryReport::new(lhs, rhs))
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialSummary {
    pub seed: u64,
    pub trials: usize,
    pub failures: usize,
    pub max_abs_difference: f64,
}

/// Randomized relabeling-symmetry checks on `n` binary variables: each trial
/// draws a rational pmf (integer weights up to 16), a family of one to three
/// nonempty subsets, and a permutation. Trial `t` uses its own ChaCha stream,
/// so results do not depend on evaluation order.
pub fn relabeling_trials(n: u8, seed: u64, trials: usize) -> Result<TrialSummary> {
    let group = NodePermutation::all(n);
    let full = (1u64 << n) - 1;
    let mut summary = TrialSummary {
        seed,
        trials,
        failures: 0,
        max_abs_difference: 0.0,
    };
    for t in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(t as u64);
        let pmf = JointPmf::random(&mut rng, vec![2; n as usize], 16);
        let family: Vec<VarSet> = (0..rng.gen_range(1..=3)).map(|_| VarSet(rng.gen_range(1..=full))).collect();
        let sigma = &group[rng.gen_range(0..group.len())];
        let report = check_relabeling_symmetry(&pmf, &family, sigma)?;
        summary.max_abs_difference = summary.max_abs_difference.max((report.lhs - report.rhs).abs());
        if !report.equal {
            summary.failures += 1;
        }
    }
    Ok(summary)
}

/// Variable subset of the pmf for a list of 1-based nodes.
pub fn nodes_to_set(nodes: &[Node]) -> VarSet {
    VarSet::from_positions(nodes.iter().map(|&i| i as usize - 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::frac;

    fn uniform_bits(n: usize) -> JointPmf {
        JointPmf::uniform_over(vec![2; n], pmf::all_outcomes(&vec![2; n])).unwrap()
    }

    #[test]
    fn concatenation_examples() {
        // two permutations: H(X1) + H(X2)
        let p = JointPmf::new(
            vec![2, 2],
            [(vec![0, 0], frac(1, 2)), (vec![0, 1], frac(1, 4)), (vec![1, 1], frac(1, 4))],
        )
        .unwrap();
        let h1 = p.entropy(VarSet(1)).unwrap();
        let h2 = p.entropy(VarSet(2)).unwrap();
        assert!((concatenation_entropy(&p, &[VarSet(1)]).unwrap() - (h1 + h2)).abs() < 1e-12);

        let bits = uniform_bits(3);
        let h = concatenation_entropy(&bits, &[VarSet(1), VarSet(2)]).unwrap();
        assert!((h - 12.0).abs() < 1e-12);
        assert_eq!(concatenation_entropy(&bits, &[]).unwrap(), 0.0);
    }

    #[test]
    fn relabeling_identity_and_adversarial() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let p = JointPmf::random(&mut rng, vec![2, 2, 2], 7);
        let fam = [VarSet(0b011), VarSet(0b100)];
        let id = check_relabeling_symmetry(&p, &fam, &NodePermutation::identity(3)).unwrap();
        assert!(id.equal);

        // X1 constant, X2 uniform, X3 = X2
        let adv = JointPmf::uniform_over(vec![2, 2, 2], vec![vec![0, 0, 0], vec![0, 1, 1]]).unwrap();
        for sigma in NodePermutation::all(3) {
            assert!(check_relabeling_symmetry(&adv, &[VarSet(0b001)], &sigma).unwrap().equal);
        }
    }

    #[test]
    fn relabeling_random() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let group = NodePermutation::all(3);
        for _ in 0..100 {
            let p = JointPmf::random(&mut rng, vec![2, 2, 2], 9);
            let fam: Vec<VarSet> = (0..rng.gen_range(1..=3)).map(|_| VarSet(rng.gen_range(1..8))).collect();
            let sigma = &group[rng.gen_range(0..group.len())];
            assert!(check_relabeling_symmetry(&p, &fam, sigma).unwrap().equal);
        }
    }

    #[test]
    fn trial_suite_is_reproducible() {
        let a = relabeling_trials(3, 42, 50).unwrap();
        let b = relabeling_trials(3, 42, 50).unwrap();
        assert_eq!(a.failures, 0);
        assert_eq!(a.max_abs_difference, b.max_abs_difference);
        assert_eq!(relabeling_trials(3, 42, 0).unwrap().trials, 0);
    }

    #[test]
    fn degree_mismatch_is_an_error() {
        let p = uniform_bits(2);
        assert!(check_relabeling_symmetry(&p, &[VarSet(1)], &NodePermutation::identity(3)).is_err());
    }
}
