//! Finite joint distributions with exact probabilities.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use rand::Rng;

use crate::entset::VarSet;
use crate::error::{Error, Result};
use crate::rational::{self, Rational};

/// Outcome of all variables, one symbol per variable.
pub type Outcome = Vec<u32>;

/// A joint distribution stored by its support.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPmf {
    alphabets: Vec<u32>,
    support: BTreeMap<Outcome, Rational>,
}

impl JointPmf {
    /// Zero-probability entries are dropped; repeated outcomes are summed.
    pub fn new(alphabets: Vec<u32>, entries: impl IntoIterator<Item = (Outcome, Rational)>) -> Result<Self> {
        if alphabets.len() > 64 {
            return Err(Error::Param("at most 64 variables".into()));
        }
        if alphabets.contains(&0) {
            return Err(Error::Param("empty alphabet".into()));
        }
        let mut support: BTreeMap<Outcome, Rational> = BTreeMap::new();
        for (outcome, p) in entries {
            if p.is_negative() {
                return Err(Error::Param("negative probability".into()));
            }
            if outcome.len() != alphabets.len() || outcome.iter().zip(&alphabets).any(|(s, a)| s >= a) {
                return Err(Error::Param(format!("outcome {outcome:?} outside the alphabets")));
            }
            if !p.is_zero() {
                *support.entry(outcome).or_insert_with(Rational::zero) += p;
            }
        }
        let total: Rational = support.values().fold(Rational::zero(), |a, b| a + b);
        if !total.is_one() {
            return Err(Error::Param(format!(
                "probabilities sum to {}, not 1",
                rational::to_fraction_string(&total)
            )));
        }
        Ok(JointPmf { alphabets, support })
    }

    /// Uniform distribution over the listed outcomes.
    pub fn uniform_over(alphabets: Vec<u32>, outcomes: Vec<Outcome>) -> Result<Self> {
        let p = rational::frac(1, outcomes.len().max(1) as i64);
        Self::new(alphabets, outcomes.into_iter().map(|o| (o, p.clone())))
    }

    /// Each cell gets an integer weight in `0..=max_weight`, then the table is
    /// normalized. At least one cell is positive.
    pub fn random<R: Rng>(rng: &mut R, alphabets: Vec<u32>, max_weight: u32) -> Self {
        let cells = all_outcomes(&alphabets);
        let mut weights: Vec<u32> = cells.iter().map(|_| rng.gen_range(0..=max_weight)).collect();
        if weights.iter().all(|w| *w == 0) {
            let i = rng.gen_range(0..weights.len());
            weights[i] = 1;
        }
        let total: i64 = weights.iter().map(|w| *w as i64).sum();
        let entries = cells
            .into_iter()
            .zip(weights)
            .map(|(o, w)| (o, rational::frac(w as i64, total)));
        Self::new(alphabets, entries).expect("normalized weights")
    }

    pub fn n_vars(&self) -> usize {
        self.alphabets.len()
    }

    pub fn alphabets(&self) -> &[u32] {
        &self.alphabets
    }

    pub fn support(&self) -> impl Iterator<Item = (&Outcome, &Rational)> {
        self.support.iter()
    }

    /// Exact marginal on the variables of `s`, keyed by their symbols in
    /// increasing position order.
    pub fn marginal(&self, s: VarSet) -> BTreeMap<Outcome, Rational> {
        let positions: Vec<usize> = s.positions().collect();
        let mut out: BTreeMap<Outcome, Rational> = BTreeMap::new();
        for (outcome, p) in &self.support {
            let key: Outcome = positions.iter().map(|&i| outcome[i]).collect();
            *out.entry(key).or_insert_with(Rational::zero) += p;
        }
        out
    }

    /// Joint entropy in bits of the variables in `s`; 0 for the empty set.
    pub fn entropy(&self, s: VarSet) -> Result<f64> {
        if s.positions().any(|i| i >= self.n_vars()) {
            return Err(Error::Param(format!("variable set {s:?} outside the distribution")));
        }
        if s.is_empty() {
            return Ok(0.0);
        }
        Ok(self
            .marginal(s)
            .values()
            .map(|p| {
                let p = rational::to_f64(p);
                -p * p.log2()
            })
            .sum())
    }
}

/// Every outcome of the given alphabets in lexicographic order.
pub fn all_outcomes(alphabets: &[u32]) -> Vec<Outcome> {
    let mut out = vec![Vec::new()];
    for &a in alphabets {
        out = out
            .into_iter()
            .flat_map(|prefix: Outcome| {
                (0..a).map(move |x| {
                    let mut o = prefix.clone();
                    o.push(x);
                    o
                })
            })
            .collect();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::frac;
    use rand::SeedableRng;

    fn set(bits: u64) -> VarSet {
        VarSet(bits)
    }

    #[test]
    fn entropy_examples() {
        let two_bits = JointPmf::uniform_over(vec![2, 2], vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]).unwrap();
        assert!((two_bits.entropy(set(0b11)).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(two_bits.entropy(VarSet::EMPTY).unwrap(), 0.0);

        let copy = JointPmf::uniform_over(vec![2, 2], vec![vec![0, 0], vec![1, 1]]).unwrap();
        assert!((copy.entropy(set(0b11)).unwrap() - 1.0).abs() < 1e-12);

        let three = JointPmf::uniform_over(vec![2, 2], vec![vec![0, 0], vec![0, 1], vec![1, 0]]).unwrap();
        let h = -(1.0f64 / 3.0) * (1.0f64 / 3.0).log2() - (2.0 / 3.0) * (2.0f64 / 3.0).log2();
        assert!((three.entropy(set(0b01)).unwrap() - h).abs() < 1e-12);
        assert!((h - 0.9183).abs() < 1e-4);
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(JointPmf::new(vec![2], [(vec![0], frac(1, 2))]).is_err());
        assert!(JointPmf::new(vec![2], [(vec![2], frac(1, 1))]).is_err());
        assert!(JointPmf::new(vec![2], [(vec![0], frac(3, 2)), (vec![1], frac(-1, 2))]).is_err());
        assert!(JointPmf::new(vec![2, 0], []).is_err());
        let p = JointPmf::new(vec![2], [(vec![0], frac(1, 2)), (vec![0], frac(1, 2))]).unwrap();
        assert_eq!(p.support().count(), 1);
        assert!(p.entropy(set(0b10)).is_err());
    }

    #[test]
    fn random_pmf_is_normalized_and_reproducible() {
        let mut a = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut b = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let p = JointPmf::random(&mut a, vec![2, 3, 2], 9);
        assert_eq!(p, JointPmf::random(&mut b, vec![2, 3, 2], 9));
        let total = p.support().fold(Rational::zero(), |acc, (_, q)| acc + q);
        assert!(total.is_one());
    }
}
