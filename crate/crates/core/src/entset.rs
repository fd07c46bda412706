//! Variable subsets, linear constraints over joint-entropy columns, and the
//! elemental Shannon inequalities.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Universe;
use crate::rational::{self, Rational};

pub const MAX_VARS: usize = 64;

/// A subset of the universe, bit `i` standing for universe position `i`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct VarSet(pub u64);

impl VarSet {
    pub const EMPTY: VarSet = VarSet(0);

    pub fn single(pos: usize) -> Self {
        VarSet(1 << pos)
    }

    /// The first `len` positions.
    pub fn full(len: usize) -> Self {
        if len >= 64 {
            VarSet(u64::MAX)
        } else {
            VarSet((1u64 << len) - 1)
        }
    }

    pub fn from_positions(positions: impl IntoIterator<Item = usize>) -> Self {
        positions.into_iter().fold(VarSet::EMPTY, |s, p| s.with(p))
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn contains(self, pos: usize) -> bool {
        self.0 >> pos & 1 == 1
    }

    pub fn with(self, pos: usize) -> Self {
        VarSet(self.0 | 1 << pos)
    }

    pub fn without(self, pos: usize) -> Self {
        VarSet(self.0 & !(1 << pos))
    }

    pub fn union(self, other: VarSet) -> Self {
        VarSet(self.0 | other.0)
    }

    pub fn intersection(self, other: VarSet) -> Self {
        VarSet(self.0 & other.0)
    }

    pub fn difference(self, other: VarSet) -> Self {
        VarSet(self.0 & !other.0)
    }

    pub fn is_subset(self, other: VarSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn positions(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                return None;
            }
            let p = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            Some(p)
        })
    }

    /// All subsets of `self` (including the empty set), ascending.
    pub fn subsets(self) -> impl Iterator<Item = VarSet> {
        let mask = self.0;
        let mut next = Some(0u64);
        std::iter::from_fn(move || {
            let cur = next?;
            next = if cur == mask {
                None
            } else {
                Some((cur.wrapping_sub(mask)) & mask)
            };
            Some(VarSet(cur))
        })
    }

    pub fn render(self, universe: &Universe) -> String {
        let names: Vec<&str> = self.positions().map(|p| universe.name(p)).collect();
        format!("{{{}}}", names.join(","))
    }
}

impl fmt::Debug for VarSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.positions()).finish()
    }
}

pub fn check_capacity(universe: &Universe) -> Result<()> {
    if universe.len() > MAX_VARS {
        return Err(Error::Capacity {
            size: universe.len(),
            limit: MAX_VARS,
        });
    }
    Ok(())
}

/// All nonempty subsets of the universe in ascending bitmask order.
pub fn subset_lattice(universe: &Universe) -> Result<impl Iterator<Item = VarSet>> {
    check_capacity(universe)?;
    Ok((1..=VarSet::full(universe.len()).0).map(VarSet))
}

/// An LP column: the joint entropy of a subset, or a free capacity parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Column {
    Entropy(VarSet),
    Alpha,
    Beta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Relation {
    Ge,
    Le,
    Eq,
}

impl Relation {
    pub fn flipped(self) -> Self {
        match self {
            Relation::Ge => Relation::Le,
            Relation::Le => Relation::Ge,
            Relation::Eq => Relation::Eq,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Ge => ">=",
            Relation::Le => "<=",
            Relation::Eq => "=",
        }
    }

    /// Whether `lhs rel rhs` holds.
    pub fn holds<T: PartialOrd>(self, lhs: &T, rhs: &T) -> bool {
        match self {
            Relation::Ge => lhs >= rhs,
            Relation::Le => lhs <= rhs,
            Relation::Eq => lhs == rhs,
        }
    }
}

/// The rule that generated a constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    ElementalH,
    ElementalI,
    StorageEnc,
    StorageCap,
    RepairEnc,
    RepairCap,
    RepairDec,
    Reconstruct,
    Rate,
}

impl Provenance {
    pub fn tag(self) -> &'static str {
        match self {
            Provenance::ElementalH => "elemental-H",
            Provenance::ElementalI => "elemental-I",
            Provenance::StorageEnc => "storage-enc",
            Provenance::StorageCap => "storage-cap",
            Provenance::RepairEnc => "repair-enc",
            Provenance::RepairCap => "repair-cap",
            Provenance::RepairDec => "repair-dec",
            Provenance::Reconstruct => "reconstruct",
            Provenance::Rate => "rate",
        }
    }
}

/// `sum coeffs[c] * c  (relation)  rhs`, with no zero coefficients stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearConstraint {
    pub coeffs: BTreeMap<Column, Rational>,
    pub relation: Relation,
    pub rhs: Rational,
    pub provenance: Provenance,
}

/// Result of normalizing a constraint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Normalized {
    Row(LinearConstraint),
    /// No coefficients and the relation holds: `0 >= 0` and the like.
    Trivial,
}

impl LinearConstraint {
    pub fn new(
        terms: impl IntoIterator<Item = (Column, Rational)>,
        relation: Relation,
        rhs: Rational,
        provenance: Provenance,
    ) -> Self {
        let mut coeffs = BTreeMap::new();
        for (col, c) in terms {
            *coeffs.entry(col).or_insert_with(Rational::zero) += c;
        }
        coeffs.retain(|_, c: &mut Rational| !c.is_zero());
        LinearConstraint {
            coeffs,
            relation,
            rhs,
            provenance,
        }
    }

    /// Integer-coefficient row over entropy columns.
    pub fn entropy(
        terms: impl IntoIterator<Item = (VarSet, i64)>,
        relation: Relation,
        rhs: Rational,
        provenance: Provenance,
    ) -> Self {
        Self::new(
            terms
                .into_iter()
                .filter(|(s, _)| !s.is_empty())
                .map(|(s, c)| (Column::Entropy(s), rational::int(c))),
            relation,
            rhs,
            provenance,
        )
    }

    /// Evaluates the left-hand side at a point given as a column lookup.
    pub fn lhs_at(&self, value: impl Fn(Column) -> Rational) -> Rational {
        self.coeffs
            .iter()
            .map(|(col, c)| c * value(*col))
            .fold(Rational::zero(), |a, b| a + b)
    }

    pub fn lhs_at_f64(&self, value: impl Fn(Column) -> f64) -> f64 {
        self.coeffs
            .iter()
            .map(|(col, c)| rational::to_f64(c) * value(*col))
            .sum()
    }

    /// Scales to a primitive integer row whose first coefficient is positive.
    pub fn normalize(mut self) -> Normalized {
        if self.coeffs.is_empty() {
            return if self.relation.holds(&Rational::zero(), &self.rhs) {
                Normalized::Trivial
            } else {
                // keep infeasible rows, in a canonical form
                let sign = if self.rhs.is_positive() { 1 } else { -1 };
                self.rhs = rational::int(sign);
                Normalized::Row(self)
            };
        }
        let lcm = rational::lcm_of_denominators(self.coeffs.values().chain([&self.rhs]));
        let scaled: Vec<Rational> = self
            .coeffs
            .values()
            .chain([&self.rhs])
            .map(|c| c * Rational::from_integer(lcm.clone()))
            .collect();
        let mut gcd = rational::gcd_of_numerators(scaled.iter());
        if gcd.is_zero() {
            gcd = BigInt::one();
        }
        let first_negative = self.coeffs.values().next().is_some_and(|c| c.is_negative());
        let factor = Rational::new(
            if first_negative { -lcm.clone() } else { lcm },
            gcd,
        );
        for c in self.coeffs.values_mut() {
            *c = &*c * &factor;
        }
        self.rhs = &self.rhs * &factor;
        if first_negative {
            self.relation = self.relation.flipped();
        }
        Normalized::Row(self)
    }

    fn key(&self) -> (Vec<(Column, Rational)>, Relation, Rational) {
        (
            self.coeffs.iter().map(|(c, v)| (*c, v.clone())).collect(),
            self.relation,
            self.rhs.clone(),
        )
    }
}

/// Normalizes every row, dropping trivial rows and duplicates (first wins).
pub fn normalize_and_dedup(rows: impl IntoIterator<Item = LinearConstraint>) -> Vec<LinearConstraint> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for row in rows {
        if let Normalized::Row(r) = row.normalize() {
            if seen.insert(r.key()) {
                out.push(r);
            }
        }
    }
    out
}

/// One elemental inequality, before conversion to a [`LinearConstraint`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Elemental {
    /// `H(V) - H(V - {var}) >= 0`.
    Conditional { var: usize, all: VarSet },
    /// `H(a, C) + H(b, C) - H(a, b, C) - H(C) >= 0`.
    MutualInfo { a: usize, b: usize, cond: VarSet },
}

impl Elemental {
    /// Entropy terms with integer coefficients; empty-set terms are omitted.
    pub fn terms(&self) -> Vec<(VarSet, i64)> {
        let mut out = Vec::with_capacity(4);
        match *self {
            Elemental::Conditional { var, all } => {
                out.push((all, 1));
                out.push((all.without(var), -1));
            }
            Elemental::MutualInfo { a, b, cond } => {
                out.push((cond.with(a), 1));
                out.push((cond.with(b), 1));
                out.push((cond.with(a).with(b), -1));
                out.push((cond, -1));
            }
        }
        out.retain(|(s, _)| !s.is_empty());
        out
    }

    pub fn provenance(&self) -> Provenance {
        match self {
            Elemental::Conditional { .. } => Provenance::ElementalH,
            Elemental::MutualInfo { .. } => Provenance::ElementalI,
        }
    }

    pub fn to_constraint(&self) -> LinearConstraint {
        LinearConstraint::entropy(self.terms(), Relation::Ge, Rational::zero(), self.provenance())
    }
}

/// `N + C(N, 2) 2^(N-2)`.
pub fn elemental_count(n_vars: usize) -> u128 {
    let n = n_vars as u128;
    if n < 2 {
        return n;
    }
    n + n * (n - 1) / 2 * (1u128 << (n - 2))
}

/// Streams the elemental inequalities of an `n_vars`-variable ground set in
/// a fixed order: conditional entropies by variable, then mutual
/// informations by pair `(a < b)` and ascending conditioning set.
pub fn elemental_iter(n_vars: usize) -> impl Iterator<Item = Elemental> {
    let all = VarSet::full(n_vars);
    let conditionals = (0..n_vars).map(move |var| Elemental::Conditional { var, all });
    let mutuals = (0..n_vars).flat_map(move |a| {
        (a + 1..n_vars).flat_map(move |b| {
            all.without(a)
                .without(b)
                .subsets()
                .map(move |cond| Elemental::MutualInfo { a, b, cond })
        })
    });
    conditionals.chain(mutuals)
}

pub fn elemental_inequalities(universe: &Universe) -> Result<Vec<LinearConstraint>> {
    check_capacity(universe)?;
    Ok(elemental_iter(universe.len())
        .map(|e| e.to_constraint())
        .collect())
}
