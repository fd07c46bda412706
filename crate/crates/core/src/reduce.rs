//! Column-space reduction: functional-dependence closure and orbits of the
//! node-relabeling group.
//!
//! Every entropy column `H(A)` is replaced by `H(canon(A))`, where `canon(A)`
//! is the bitmask-least closed image of `A` under all node permutations. The
//! closure step is forced by the decoding and encoding equalities; the orbit
//! step is sound because averaging a feasible entropy vector over the group
//! stays feasible and leaves `H(S)` unchanged.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::RwLock;

use itertools::Itertools;
use num_traits::Zero;

use crate::constraints::{fd_rules, FdRule};
use crate::entset::{
    self, check_capacity, normalize_and_dedup, Column, Elemental, LinearConstraint, Provenance, Relation,
    VarSet,
};
use crate::error::{Error, Result};
use crate::model::{Node, Universe, VarId};
use crate::rational::{self, Rational};

/// Largest universe scanned exhaustively by [`irreducible_sets`].
pub const MAX_IRREDUCIBLE_SCAN: usize = 22;

pub struct ClosureOracle {
    rules: Vec<FdRule>,
    memo: RwLock<HashMap<VarSet, VarSet>>,
}

impl ClosureOracle {
    pub fn new(rules: Vec<FdRule>) -> Self {
        ClosureOracle {
            rules,
            memo: RwLock::new(HashMap::new()),
        }
    }

    pub fn for_universe(universe: &Universe) -> Self {
        Self::new(fd_rules(universe))
    }

    pub fn rules(&self) -> &[FdRule] {
        &self.rules
    }

    /// Least superset of `s` closed under every rule.
    pub fn closure(&self, s: VarSet) -> VarSet {
        if let Some(c) = self.memo.read().expect("closure memo poisoned").get(&s) {
            return *c;
        }
        let c = self.fixpoint(s);
        self.memo.write().expect("closure memo poisoned").insert(s, c);
        c
    }

    fn fixpoint(&self, s: VarSet) -> VarSet {
        let mut cur = s;
        loop {
            let mut next = cur;
            for rule in &self.rules {
                if rule.determiners.is_subset(next) {
                    next = next.union(rule.determined);
                }
            }
            if next == cur {
                return cur;
            }
            cur = next;
        }
    }

    pub fn is_closed(&self, s: VarSet) -> bool {
        self.closure(s) == s
    }
}

/// A bijection on nodes `1..=n`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodePermutation {
    images: Vec<Node>,
}

impl NodePermutation {
    /// `images[i - 1]` is the image of node `i`.
    pub fn from_images(images: Vec<Node>) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &x in &images {
            if x == 0 || x as usize > n || std::mem::replace(&mut seen[x as usize - 1], true) {
                return Err(Error::Param(format!("{images:?} is not a permutation of 1..={n}")));
            }
        }
        Ok(NodePermutation { images })
    }

    pub fn identity(n: u8) -> Self {
        NodePermutation {
            images: (1..=n).collect(),
        }
    }

    /// The permutation given by disjoint cycles, e.g. `&[&[1, 2, 3]]`.
    pub fn from_cycles(n: u8, cycles: &[&[Node]]) -> Result<Self> {
        let mut images: Vec<Node> = (1..=n).collect();
        for cycle in cycles {
            for (idx, &x) in cycle.iter().enumerate() {
                let y = cycle[(idx + 1) % cycle.len()];
                if x == 0 || x > n || y == 0 || y > n {
                    return Err(Error::Param(format!("cycle {cycle:?} leaves 1..={n}")));
                }
                images[x as usize - 1] = y;
            }
        }
        Self::from_images(images)
    }

    /// The full symmetric group, in lexicographic order of image lists.
    pub fn all(n: u8) -> Vec<Self> {
        (1..=n)
            .permutations(n as usize)
            .map(|images| NodePermutation { images })
            .collect()
    }

    pub fn degree(&self) -> u8 {
        self.images.len() as u8
    }

    pub fn apply(&self, node: Node) -> Node {
        self.images[node as usize - 1]
    }

    pub fn images(&self) -> &[Node] {
        &self.images
    }

    /// `self ∘ other`: apply `other`, then `self`.
    pub fn compose(&self, other: &NodePermutation) -> NodePermutation {
        NodePermutation {
            images: other.images.iter().map(|&x| self.apply(x)).collect(),
        }
    }

    pub fn inverse(&self) -> NodePermutation {
        let mut images = vec![0; self.images.len()];
        for (i, &x) in self.images.iter().enumerate() {
            images[x as usize - 1] = i as Node + 1;
        }
        NodePermutation { images }
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, &x)| x as usize == i + 1)
    }
}

impl fmt::Debug for NodePermutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.images.iter().join(" "))
    }
}

/// The permutation of universe positions induced by a node permutation.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VarPermutation {
    map: Vec<usize>,
}

impl VarPermutation {
    /// `map[p]` is the image of position `p`; must be a bijection.
    pub fn from_map(map: Vec<usize>) -> Self {
        debug_assert!({
            let mut seen = map.clone();
            seen.sort_unstable();
            seen.iter().enumerate().all(|(i, v)| i == *v)
        });
        VarPermutation { map }
    }

    pub fn apply(&self, pos: usize) -> usize {
        self.map[pos]
    }

    pub fn apply_set(&self, s: VarSet) -> VarSet {
        s.positions().fold(VarSet::EMPTY, |acc, p| acc.with(self.map[p]))
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }
}

/// `S -> S`, `Y_i -> Y_σ(i)`, `U_{i[j,D]} -> U_{σ(i)[σ(j),σ(D)]}`.
pub fn induced_action(sigma: &NodePermutation, universe: &Universe) -> Result<VarPermutation> {
    if sigma.degree() != universe.params().n {
        return Err(Error::Param(format!(
            "permutation of degree {} applied to a universe with n = {}",
            sigma.degree(),
            universe.params().n
        )));
    }
    let map = universe
        .vars()
        .iter()
        .map(|v| {
            let image = match v {
                VarId::Source => VarId::Source,
                VarId::Storage(i) => VarId::Storage(sigma.apply(*i)),
                VarId::Repair {
                    failed,
                    helpers,
                    helper,
                } => VarId::repair(sigma.apply(*helper), sigma.apply(*failed), helpers.map(|x| sigma.apply(x))),
            };
            universe
                .position(&image)
                .ok_or_else(|| Error::Consistency(format!("image of {v:?} missing from universe")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(VarPermutation { map })
}

pub fn group_actions(universe: &Universe) -> Result<Vec<VarPermutation>> {
    NodePermutation::all(universe.params().n)
        .iter()
        .map(|s| induced_action(s, universe))
        .collect()
}

/// Irreducible subsets: no proper subset determines the whole set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IrreducibleSets {
    /// Irreducible sets whose closure is the whole universe.
    pub maximal: Vec<VarSet>,
    pub nonmaximal: Vec<VarSet>,
}

impl IrreducibleSets {
    /// One maximal set (the bitmask-least) followed by every non-maximal
    /// irreducible set, ordered by size then bitmask.
    pub fn dimension_list(&self) -> Vec<VarSet> {
        let mut out: Vec<VarSet> = self.maximal.iter().min().copied().into_iter().collect();
        out.extend(self.nonmaximal.iter().copied());
        out
    }
}

fn by_size(a: &VarSet, b: &VarSet) -> std::cmp::Ordering {
    (a.len(), a.bits()).cmp(&(b.len(), b.bits()))
}

pub fn irreducible_sets(oracle: &ClosureOracle, universe: &Universe) -> Result<IrreducibleSets> {
    check_capacity(universe)?;
    if universe.len() > MAX_IRREDUCIBLE_SCAN {
        return Err(Error::Capacity {
            size: universe.len(),
            limit: MAX_IRREDUCIBLE_SCAN,
        });
    }
    let full = VarSet::full(universe.len());
    let mut maximal = Vec::new();
    let mut nonmaximal = Vec::new();
    for s in entset::subset_lattice(universe)? {
        // some proper subset covers s iff some element is implied by the rest
        let irreducible = s.positions().all(|p| !oracle.fixpoint(s.without(p)).contains(p));
        if !irreducible {
            continue;
        }
        if oracle.fixpoint(s) == full {
            maximal.push(s);
        } else {
            nonmaximal.push(s);
        }
    }
    maximal.sort_by(by_size);
    nonmaximal.sort_by(by_size);
    Ok(IrreducibleSets { maximal, nonmaximal })
}

/// Canonical closed representatives of a group-invariant domain.
#[derive(Debug, Clone)]
pub struct OrbitTable {
    canon: HashMap<VarSet, VarSet>,
    reps: Vec<VarSet>,
    generators: HashMap<VarSet, VarSet>,
    orbit_sizes: HashMap<VarSet, usize>,
}

impl OrbitTable {
    pub fn canon(&self, s: VarSet) -> Option<VarSet> {
        self.canon.get(&s).copied()
    }

    /// Distinct representatives in ascending bitmask order.
    pub fn reps(&self) -> &[VarSet] {
        &self.reps
    }

    /// The size-then-bitmask least domain member mapping to `rep`.
    pub fn generator(&self, rep: VarSet) -> Option<VarSet> {
        self.generators.get(&rep).copied()
    }

    /// Number of domain members mapping to `rep`.
    pub fn class_size(&self, rep: VarSet) -> usize {
        self.orbit_sizes.get(&rep).copied().unwrap_or(0)
    }

    pub fn domain_len(&self) -> usize {
        self.canon.len()
    }

    pub fn column_index(&self, rep: VarSet) -> Option<usize> {
        self.reps.binary_search(&rep).ok()
    }
}

pub fn orbit_table(
    oracle: &ClosureOracle,
    universe: &Universe,
    group: &[NodePermutation],
    domain: &[VarSet],
) -> Result<OrbitTable> {
    check_capacity(universe)?;
    let actions: Vec<VarPermutation> = group
        .iter()
        .map(|s| induced_action(s, universe))
        .collect::<Result<_>>()?;
    let members: HashSet<VarSet> = domain.iter().copied().collect();
    let mut canon = HashMap::with_capacity(domain.len());
    let mut generators: HashMap<VarSet, VarSet> = HashMap::new();
    let mut orbit_sizes: HashMap<VarSet, usize> = HashMap::new();
    for &s in domain {
        if canon.contains_key(&s) {
            continue;
        }
        let mut best: Option<VarSet> = None;
        for action in &actions {
            let image = action.apply_set(s);
            if !members.contains(&image) {
                return Err(Error::Consistency(format!(
                    "domain is not closed under the group: {} maps outside it",
                    s.render(universe)
                )));
            }
            let closed = oracle.closure(image);
            best = Some(best.map_or(closed, |b| b.min(closed)));
        }
        let rep = best.unwrap_or_else(|| oracle.closure(s));
        canon.insert(s, rep);
        *orbit_sizes.entry(rep).or_default() += 1;
        generators
            .entry(rep)
            .and_modify(|g| {
                if by_size(&s, g).is_lt() {
                    *g = s
                }
            })
            .or_insert(s);
    }
    let mut reps: Vec<VarSet> = orbit_sizes.keys().copied().collect();
    reps.sort();
    Ok(OrbitTable {
        canon,
        reps,
        generators,
        orbit_sizes,
    })
}

/// Orbit table over every nonempty subset, built from the instance's own
/// rules and full symmetric group.
pub fn full_orbit_table(universe: &Universe) -> Result<OrbitTable> {
    let oracle = ClosureOracle::for_universe(universe);
    let group = NodePermutation::all(universe.params().n);
    let domain: Vec<VarSet> = entset::subset_lattice(universe)?.collect();
    orbit_table(&oracle, universe, &group, &domain)
}

fn rewrite_column(table: &OrbitTable, col: Column, universe: Option<&Universe>) -> Result<Column> {
    match col {
        Column::Entropy(s) => table.canon(s).map(Column::Entropy).ok_or_else(|| {
            let shown = universe.map_or_else(|| format!("{s:?}"), |u| s.render(u));
            Error::Consistency(format!("column H{shown} is outside the orbit table domain"))
        }),
        other => Ok(other),
    }
}

/// Substitutes `H(A) -> H(canon(A))` in every row, then normalizes and
/// removes trivial and duplicate rows.
pub fn rewrite_constraints(constraints: &[LinearConstraint], table: &OrbitTable) -> Result<Vec<LinearConstraint>> {
    let rows = constraints
        .iter()
        .map(|row| {
            let terms = row
                .coeffs
                .iter()
                .map(|(col, c)| Ok((rewrite_column(table, *col, None)?, c.clone())))
                .collect::<Result<Vec<_>>>()?;
            Ok(LinearConstraint::new(terms, row.relation, row.rhs.clone(), row.provenance))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(normalize_and_dedup(rows))
}

/// [`rewrite_constraints`] applied to the elemental inequalities, streamed
/// with small-integer arithmetic so the unreduced list is never built.
/// Requires a table whose domain is every nonempty subset.
pub fn rewrite_elemental(universe: &Universe, table: &OrbitTable) -> Result<Vec<LinearConstraint>> {
    check_capacity(universe)?;
    let n = universe.len();
    if n > 30 {
        return Err(Error::Capacity { size: n, limit: 30 });
    }
    let mut lookup = vec![u32::MAX; 1usize << n];
    for s in entset::subset_lattice(universe)? {
        let rep = table.canon(s).ok_or_else(|| {
            Error::Consistency(format!("{} is outside the orbit table domain", s.render(universe)))
        })?;
        lookup[s.bits() as usize] = table.column_index(rep).expect("rep indexed") as u32;
    }

    let mut seen: HashSet<Vec<(u32, i64)>> = HashSet::new();
    let mut rows = Vec::new();
    let mut terms: Vec<(u32, i64)> = Vec::with_capacity(4);
    for e in entset::elemental_iter(n) {
        terms.clear();
        for (s, c) in e.terms() {
            let col = lookup[s.bits() as usize];
            match terms.iter_mut().find(|(k, _)| *k == col) {
                Some(t) => t.1 += c,
                None => terms.push((col, c)),
            }
        }
        terms.retain(|t| t.1 != 0);
        if terms.is_empty() {
            continue;
        }
        terms.sort_unstable();
        let g = terms.iter().fold(0i64, |g, t| num_integer::gcd(g, t.1));
        let sign = if terms[0].1 < 0 { -1 } else { 1 };
        for t in terms.iter_mut() {
            t.1 = t.1 / g * sign;
        }
        // encode the relation in the key: >= stays positive, flipped rows tagged
        let mut key = terms.clone();
        key.push((u32::MAX, sign));
        if seen.insert(key) {
            let relation = if sign < 0 { Relation::Le } else { Relation::Ge };
            rows.push(elemental_row(table, &terms, relation, &e));
        }
    }
    Ok(rows)
}

fn elemental_row(table: &OrbitTable, terms: &[(u32, i64)], relation: Relation, e: &Elemental) -> LinearConstraint {
    let coeffs = terms
        .iter()
        .map(|&(col, c)| (Column::Entropy(table.reps()[col as usize]), rational::int(c)))
        .collect();
    LinearConstraint {
        coeffs,
        relation,
        rhs: Rational::zero(),
        provenance: e.provenance(),
    }
}

/// Provenance-insensitive comparison helper for tests and reports.
pub fn provenance_counts(rows: &[LinearConstraint]) -> HashMap<Provenance, usize> {
    let mut out = HashMap::new();
    for r in rows {
        *out.entry(r.provenance).or_default() += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{enumerate_universe, DssParams};

    fn u322() -> Universe {
        enumerate_universe(&DssParams::shape(3, 2, 2).unwrap()).unwrap()
    }

    fn set(u: &Universe, names: &[&str]) -> VarSet {
        VarSet::from_positions(names.iter().map(|n| u.position_by_name(n).unwrap()))
    }

    #[test]
    fn closure_examples() {
        let u = u322();
        let oracle = ClosureOracle::for_universe(&u);
        let full = VarSet::full(u.len());
        assert_eq!(oracle.closure(set(&u, &["S"])), full);
        assert_eq!(oracle.closure(set(&u, &["Y1", "Y2"])), full);
        assert_eq!(oracle.closure(VarSet::EMPTY), VarSet::EMPTY);
        assert_eq!(
            oracle.closure(set(&u, &["Y1"])),
            set(&u, &["Y1", "U1[2]", "U1[3]"])
        );
    }

    #[test]
    fn permutation_algebra() {
        let s = NodePermutation::from_cycles(4, &[&[1, 2, 3]]).unwrap();
        let t = NodePermutation::from_cycles(4, &[&[3, 4]]).unwrap();
        assert!(s.compose(&s.inverse()).is_identity());
        assert_eq!(s.compose(&t).apply(3), s.apply(4));
        assert_eq!(NodePermutation::all(4).len(), 24);
        assert!(NodePermutation::from_images(vec![1, 1, 2]).is_err());
    }

    #[test]
    fn induced_action_examples() {
        let u = u322();
        let id = induced_action(&NodePermutation::identity(3), &u).unwrap();
        assert!((0..u.len()).all(|p| id.apply(p) == p));

        let swap = induced_action(&NodePermutation::from_cycles(3, &[&[1, 2]]).unwrap(), &u).unwrap();
        let pos = |n: &str| u.position_by_name(n).unwrap();
        assert_eq!(swap.apply(pos("U1[2]")), pos("U2[1]"));
        assert_eq!(swap.apply(pos("Y3")), pos("Y3"));

        let rot = induced_action(&NodePermutation::from_cycles(3, &[&[1, 2, 3]]).unwrap(), &u).unwrap();
        let cyc = set(&u, &["U1[2]", "U2[3]", "U3[1]"]);
        assert_eq!(rot.apply_set(cyc), cyc);
    }

    #[test]
    fn induced_action_is_homomorphism() {
        let u = enumerate_universe(&DssParams::shape(4, 2, 2).unwrap()).unwrap();
        let group = NodePermutation::all(4);
        for a in group.iter().step_by(5) {
            for b in group.iter().step_by(7) {
                let ab = induced_action(&a.compose(b), &u).unwrap();
                let pa = induced_action(a, &u).unwrap();
                let pb = induced_action(b, &u).unwrap();
                assert!((0..u.len()).all(|p| ab.apply(p) == pa.apply(pb.apply(p))));
            }
        }
    }

    #[test]
    fn orbit_sizes_of_simple_sets() {
        let u = u322();
        let oracle = ClosureOracle::for_universe(&u);
        let domain: Vec<VarSet> = entset::subset_lattice(&u).unwrap().collect();
        let table = orbit_table(&oracle, &u, &NodePermutation::all(3), &domain).unwrap();
        let y1 = table.canon(set(&u, &["Y1"])).unwrap();
        assert_eq!(table.canon(set(&u, &["Y2"])), Some(y1));
        assert_eq!(table.canon(set(&u, &["Y3"])), Some(y1));
        assert_ne!(table.canon(set(&u, &["U1[2]"])), Some(y1));
        // {S} is alone in its orbit; its closure class is every full-closure subset
        let s = table.canon(set(&u, &["S"])).unwrap();
        assert_eq!(s, VarSet::full(u.len()));
        let singleton_domain = [set(&u, &["S"])];
        let t = orbit_table(&oracle, &u, &NodePermutation::all(3), &singleton_domain).unwrap();
        assert_eq!(t.reps().len(), 1);
        assert_eq!(t.class_size(s), 1);
    }

    #[test]
    fn non_invariant_domain_rejected() {
        let u = u322();
        let oracle = ClosureOracle::for_universe(&u);
        let domain = [set(&u, &["Y1"])];
        assert!(orbit_table(&oracle, &u, &NodePermutation::all(3), &domain).is_err());
    }

    #[test]
    fn rewrite_examples() {
        let u = u322();
        let table = full_orbit_table(&u).unwrap();
        let enc = crate::constraints::encoding_constraints(&u);
        let rewritten = rewrite_constraints(&enc[..1], &table).unwrap();
        assert!(rewritten.is_empty(), "H(S,Y1) - H(S) = 0 collapses");

        let caps = crate::constraints::capacity_constraints(
            &u,
            &crate::constraints::Capacity::Fixed(rational::int(2)),
            &crate::constraints::Capacity::Fixed(rational::int(1)),
        );
        let rewritten = rewrite_constraints(&caps, &table).unwrap();
        assert_eq!(rewritten.len(), 2, "one storage and one repair row survive");
        let y1 = table.canon(set(&u, &["Y1"])).unwrap();
        assert_eq!(rewritten[0].coeffs.keys().next(), Some(&Column::Entropy(y1)));
    }

    #[test]
    fn fast_elemental_rewrite_matches_generic() {
        let u = u322();
        let table = full_orbit_table(&u).unwrap();
        let generic = rewrite_constraints(&entset::elemental_inequalities(&u).unwrap(), &table).unwrap();
        let fast = rewrite_elemental(&u, &table).unwrap();
        assert_eq!(generic, fast);
    }

    #[test]
    fn outside_domain_is_consistency_error() {
        let u = u322();
        let oracle = ClosureOracle::for_universe(&u);
        let table = orbit_table(&oracle, &u, &NodePermutation::all(3), &[set(&u, &["S"])]).unwrap();
        let caps = crate::constraints::capacity_constraints(
            &u,
            &crate::constraints::Capacity::Fixed(rational::int(2)),
            &crate::constraints::Capacity::Fixed(rational::int(1)),
        );
        assert!(matches!(rewrite_constraints(&caps, &table), Err(Error::Consistency(_))));
    }
}
