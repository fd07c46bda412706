//! Storage-system instances, the random-variable universe, and the cut-set bound.

use std::collections::HashMap;
use std::fmt;

use itertools::Itertools;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, Rational};

/// Node label, 1-based.
pub type Node = u8;

/// Largest node count accepted by [`DssParams::new`].
pub const MAX_NODES: u8 = 8;

/// An `(n, k, d, alpha, beta)` exact-repair storage instance.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DssParams {
    pub n: u8,
    pub k: u8,
    pub d: u8,
    #[serde(with = "rational::serde_str")]
    pub alpha: Rational,
    #[serde(with = "rational::serde_str")]
    pub beta: Rational,
}

impl DssParams {
    pub fn new(n: u8, k: u8, d: u8, alpha: Rational, beta: Rational) -> Result<Self> {
        let params = DssParams {
            n,
            k,
            d,
            alpha,
            beta,
        };
        params.validate()?;
        Ok(params)
    }

    /// Parameters with unit capacities, for code paths that only need `(n, k, d)`.
    pub fn shape(n: u8, k: u8, d: u8) -> Result<Self> {
        Self::new(n, k, d, rational::int(1), rational::int(1))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n > MAX_NODES {
            return Err(Error::Param(format!(
                "n = {} exceeds the supported maximum {MAX_NODES}",
                self.n
            )));
        }
        if !(1 <= self.k && self.k <= self.d && self.d < self.n) {
            return Err(Error::Param(format!(
                "need 1 <= k <= d <= n-1, got (n, k, d) = ({}, {}, {})",
                self.n, self.k, self.d
            )));
        }
        if self.alpha.is_negative() || self.beta.is_negative() {
            return Err(Error::Param(format!(
                "capacities must be nonnegative, got alpha = {}, beta = {}",
                self.alpha, self.beta
            )));
        }
        Ok(())
    }

    pub fn with_capacities(&self, alpha: Rational, beta: Rational) -> Result<Self> {
        Self::new(self.n, self.k, self.d, alpha, beta)
    }

    pub fn nodes(&self) -> impl Iterator<Item = Node> + Clone {
        1..=self.n
    }

    /// Helper sets are simplified to `U_i[j]` only when every other node helps.
    pub fn full_helper_sets(&self) -> bool {
        self.d + 1 == self.n
    }
}

/// Sorted set of helper nodes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HelperSet(Vec<Node>);

impl HelperSet {
    pub fn new(mut nodes: Vec<Node>) -> Self {
        nodes.sort_unstable();
        nodes.dedup();
        HelperSet(nodes)
    }

    pub fn contains(&self, node: Node) -> bool {
        self.0.binary_search(&node).is_ok()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = Node> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[Node] {
        &self.0
    }

    pub fn map(&self, f: impl Fn(Node) -> Node) -> HelperSet {
        HelperSet::new(self.0.iter().map(|&x| f(x)).collect())
    }
}

/// One random variable of a storage system.
///
/// The derived order is the canonical order used everywhere: the source,
/// then storage variables by node, then repair variables by
/// `(failed, helpers, helper)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VarId {
    Source,
    Storage(Node),
    Repair {
        failed: Node,
        helpers: HelperSet,
        helper: Node,
    },
}

impl VarId {
    pub fn repair(helper: Node, failed: Node, helpers: HelperSet) -> Self {
        VarId::Repair {
            failed,
            helpers,
            helper,
        }
    }

    /// Renders as `S`, `Y1`, `U1[2]` or `U1[2,{1,3}]`.
    pub fn display(&self, full_helper_sets: bool) -> VarDisplay<'_> {
        VarDisplay {
            var: self,
            short: full_helper_sets,
        }
    }
}

pub struct VarDisplay<'a> {
    var: &'a VarId,
    short: bool,
}

impl fmt::Display for VarDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.var {
            VarId::Source => write!(f, "S"),
            VarId::Storage(i) => write!(f, "Y{i}"),
            VarId::Repair {
                failed,
                helpers,
                helper,
            } => {
                if self.short {
                    write!(f, "U{helper}[{failed}]")
                } else {
                    write!(f, "U{helper}[{failed},{{{}}}]", helpers.iter().join(","))
                }
            }
        }
    }
}

/// All random variables of an instance, in canonical order.
#[derive(Debug, Clone)]
pub struct Universe {
    params: DssParams,
    vars: Vec<VarId>,
    index: HashMap<VarId, usize>,
    names: Vec<String>,
}

impl Universe {
    pub fn params(&self) -> &DssParams {
        &self.params
    }

    pub fn vars(&self) -> &[VarId] {
        &self.vars
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn position(&self, var: &VarId) -> Option<usize> {
        self.index.get(var).copied()
    }

    pub fn var(&self, pos: usize) -> &VarId {
        &self.vars[pos]
    }

    pub fn name(&self, pos: usize) -> &str {
        &self.names[pos]
    }

    /// Looks a variable up by its rendered name (`"Y2"`, `"U1[3]"`, ...).
    pub fn position_by_name(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn source(&self) -> usize {
        0
    }

    pub fn storage(&self, node: Node) -> usize {
        node as usize
    }

    pub fn storage_positions(&self) -> impl Iterator<Item = usize> + '_ {
        self.params.nodes().map(|i| self.storage(i))
    }

    pub fn repair_positions(&self) -> impl Iterator<Item = usize> + '_ {
        1 + self.params.n as usize..self.vars.len()
    }

    /// All helper sets `D` that may serve a failed node.
    pub fn helper_sets(&self, failed: Node) -> Vec<HelperSet> {
        helper_sets(&self.params, failed)
    }
}

fn helper_sets(params: &DssParams, failed: Node) -> Vec<HelperSet> {
    params
        .nodes()
        .filter(|&x| x != failed)
        .combinations(params.d as usize)
        .map(HelperSet::new)
        .collect()
}

/// Closed-form universe size `1 + n + n * C(n-1, d) * d`.
pub fn universe_size(params: &DssParams) -> usize {
    let n = params.n as usize;
    let d = params.d as usize;
    1 + n + n * binomial(n - 1, d) * d
}

pub(crate) fn binomial(n: usize, r: usize) -> usize {
    if r > n {
        return 0;
    }
    (0..r).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

pub fn enumerate_universe(params: &DssParams) -> Result<Universe> {
    params.validate()?;
    let mut vars = vec![VarId::Source];
    vars.extend(params.nodes().map(VarId::Storage));
    let mut repairs = Vec::new();
    for failed in params.nodes() {
        for helpers in helper_sets(params, failed) {
            for helper in helpers.iter() {
                repairs.push(VarId::repair(helper, failed, helpers.clone()));
            }
        }
    }
    repairs.sort();
    vars.extend(repairs);
    debug_assert!(vars.windows(2).all(|w| w[0] < w[1]));

    let short = params.full_helper_sets();
    let names = vars
        .iter()
        .map(|v| v.display(short).to_string())
        .collect();
    let index = vars.iter().cloned().enumerate().map(|(i, v)| (v, i)).collect();
    Ok(Universe {
        params: params.clone(),
        vars,
        index,
        names,
    })
}

/// `sum_{i=0}^{k-1} min(alpha, (d - i) beta)`.
pub fn max_flow_bound(params: &DssParams) -> Result<Rational> {
    params.validate()?;
    let mut total = BigRational::zero();
    for i in 0..params.k {
        let repair = &params.beta * rational::int(i64::from(params.d - i));
        total += std::cmp::min(params.alpha.clone(), repair);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{frac, int};

    fn params(n: u8, k: u8, d: u8, a: i64, b: i64) -> DssParams {
        DssParams::new(n, k, d, int(a), int(b)).unwrap()
    }

    #[test]
    fn universe_322_matches_listing() {
        let u = enumerate_universe(&params(3, 2, 2, 1, 1)).unwrap();
        let names: Vec<_> = (0..u.len()).map(|i| u.name(i).to_string()).collect();
        assert_eq!(
            names,
            [
                "S", "Y1", "Y2", "Y3", "U2[1]", "U3[1]", "U1[2]", "U3[2]", "U1[3]", "U2[3]"
            ]
        );
    }

    #[test]
    fn universe_sizes() {
        assert_eq!(enumerate_universe(&params(4, 3, 3, 1, 1)).unwrap().len(), 17);
        assert_eq!(enumerate_universe(&params(4, 2, 2, 1, 1)).unwrap().len(), 29);
        assert_eq!(enumerate_universe(&params(2, 1, 1, 1, 1)).unwrap().len(), 5);
    }

    #[test]
    fn general_helper_sets_render_with_set() {
        let u = enumerate_universe(&params(4, 2, 2, 1, 1)).unwrap();
        assert!(u.position_by_name("U1[2,{1,3}]").is_some());
        assert!(u.position_by_name("U1[2]").is_none());
    }

    #[test]
    fn universe_size_matches_triple_enumeration() {
        for n in 2..=6u8 {
            for d in 1..n {
                for k in 1..=d {
                    let p = params(n, k, d, 1, 1);
                    let u = enumerate_universe(&p).unwrap();
                    // count (i, j, D) triples directly over all subsets of nodes
                    let mut triples = 0;
                    for j in 1..=n {
                        for mask in 0u32..(1 << n) {
                            if mask.count_ones() != d as u32 || mask & (1 << (j - 1)) != 0 {
                                continue;
                            }
                            triples += mask.count_ones() as usize;
                        }
                    }
                    assert_eq!(u.len(), 1 + n as usize + triples);
                    assert_eq!(u.len(), universe_size(&p));
                }
            }
        }
    }

    #[test]
    fn rejects_bad_params() {
        assert!(DssParams::new(3, 3, 2, int(1), int(1)).is_err());
        assert!(DssParams::new(3, 2, 3, int(1), int(1)).is_err());
        assert!(DssParams::new(3, 0, 2, int(1), int(1)).is_err());
        assert!(DssParams::new(3, 2, 2, int(-1), int(1)).is_err());
    }

    #[test]
    fn max_flow_examples() {
        assert_eq!(max_flow_bound(&params(4, 3, 3, 3, 1)).unwrap(), int(6));
        assert_eq!(max_flow_bound(&params(3, 2, 2, 0, 7)).unwrap(), int(0));
        assert_eq!(max_flow_bound(&params(3, 2, 2, 2, 1)).unwrap(), int(3));
    }

    #[test]
    fn max_flow_regimes() {
        // alpha >= d beta: beta * sum (d - i)
        let p = DssParams::new(5, 3, 4, int(9), frac(1, 2)).unwrap();
        assert_eq!(max_flow_bound(&p).unwrap(), frac(1, 2) * int(4 + 3 + 2));
        // beta >= alpha / (d - k + 1): k alpha
        let p = DssParams::new(5, 3, 4, int(2), int(1)).unwrap();
        assert_eq!(max_flow_bound(&p).unwrap(), int(6));
    }
}
