//! Assembly and solution of the rate and tradeoff linear programs.

pub mod export;
mod revised;
pub mod simplex;

use std::collections::{BTreeMap, HashMap};

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::constraints::{self, Capacity};
use crate::entset::{self, Column, LinearConstraint, Provenance, Relation, VarSet};
use crate::error::{Error, Result};
use crate::model::{enumerate_universe, DssParams, Universe};
use crate::rational::{self, Rational};
use crate::reduce::{self, OrbitTable};

pub use simplex::{Route, Status};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Closure and orbit merging applied to the column space.
    Reduced,
    /// One column per nonempty subset, every equality explicit.
    Unreduced,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arithmetic {
    Exact,
    Float,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FreeParam {
    Alpha,
    Beta,
}

/// A linear program over entropy and parameter columns. Every column is
/// bounded below by zero.
#[derive(Debug, Clone)]
pub struct LinProgram {
    pub columns: Vec<Column>,
    pub constraints: Vec<LinearConstraint>,
    pub objective: BTreeMap<Column, Rational>,
    pub sense: Sense,
    /// Universe used to name entropy columns.
    pub universe: Universe,
    pub title: String,
}

impl LinProgram {
    pub fn column_index(&self) -> HashMap<Column, usize> {
        self.columns.iter().enumerate().map(|(i, c)| (*c, i)).collect()
    }

    pub fn entropy_columns(&self) -> usize {
        self.columns
            .iter()
            .filter(|c| matches!(c, Column::Entropy(_)))
            .count()
    }

    pub fn validate(&self) -> Result<()> {
        let index = self.column_index();
        if index.len() != self.columns.len() {
            return Err(Error::Consistency("duplicate LP column".into()));
        }
        let known = |c: &Column| index.contains_key(c);
        for row in &self.constraints {
            if let Some(c) = row.coeffs.keys().find(|c| !known(c)) {
                return Err(Error::Consistency(format!("constraint uses unknown column {c:?}")));
            }
        }
        if let Some(c) = self.objective.keys().find(|c| !known(c)) {
            return Err(Error::Consistency(format!("objective uses unknown column {c:?}")));
        }
        Ok(())
    }

    pub fn column_name(&self, col: Column) -> String {
        match col {
            Column::Entropy(s) => format!("H{}", s.render(&self.universe)),
            Column::Alpha => "alpha".into(),
            Column::Beta => "beta".into(),
        }
    }

    pub fn to_problem<T: simplex::Scalar>(&self) -> simplex::Problem<T> {
        let index = self.column_index();
        let rows = self
            .constraints
            .iter()
            .map(|row| simplex::Row {
                coeffs: row
                    .coeffs
                    .iter()
                    .map(|(c, v)| (index[c], T::from_rational(v)))
                    .collect(),
                relation: row.relation,
                rhs: T::from_rational(&row.rhs),
            })
            .collect();
        let mut objective = vec![T::zero(); self.columns.len()];
        for (c, v) in &self.objective {
            objective[index[c]] = T::from_rational(v);
        }
        simplex::Problem {
            n_vars: self.columns.len(),
            rows,
            objective,
            maximize: self.sense == Sense::Maximize,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LpSolution<T> {
    pub status: Status,
    /// Objective value, present when optimal.
    pub value: Option<T>,
    /// Column values in [`LinProgram::columns`] order.
    pub primal: Vec<T>,
    /// Constraint multipliers; see [`simplex::RawSolution`] for signs.
    pub certificate: Vec<T>,
    pub pivots: usize,
}

#[derive(Debug, Clone)]
pub enum Solution {
    Exact(LpSolution<Rational>),
    Float(LpSolution<f64>),
}

impl Solution {
    pub fn status(&self) -> Status {
        match self {
            Solution::Exact(s) => s.status,
            Solution::Float(s) => s.status,
        }
    }

    pub fn value_f64(&self) -> Option<f64> {
        match self {
            Solution::Exact(s) => s.value.as_ref().map(rational::to_f64),
            Solution::Float(s) => s.value,
        }
    }

    pub fn exact_value(&self) -> Option<&Rational> {
        match self {
            Solution::Exact(s) => s.value.as_ref(),
            Solution::Float(_) => None,
        }
    }
}

impl<T: simplex::Scalar> LpSolution<T> {
    fn from_raw(raw: simplex::RawSolution<T>) -> Self {
        let optimal = raw.status == Status::Optimal;
        LpSolution {
            status: raw.status,
            value: optimal.then_some(raw.value),
            primal: if optimal { raw.x } else { Vec::new() },
            certificate: if optimal { raw.y } else { Vec::new() },
            pivots: raw.pivots,
        }
    }
}

/// Tableaus above this many cells are first solved in floating point and
/// then certified exactly.
const DIRECT_EXACT_CELLS: usize = 400_000;
const MAX_RECONSTRUCTED_DENOMINATOR: u64 = 1 << 20;

pub fn solve(lp: &LinProgram, arithmetic: Arithmetic) -> Solution {
    match arithmetic {
        Arithmetic::Exact => Solution::Exact(solve_exact(lp)),
        Arithmetic::Float => Solution::Float(solve_float(lp)),
    }
}

pub fn solve_float(lp: &LinProgram) -> LpSolution<f64> {
    LpSolution::from_raw(simplex::solve(&lp.to_problem::<f64>(), Route::Auto))
}

/// Exact rational solve. Large programs are pivoted in `f64` first; the
/// resulting point and multipliers are rounded to nearby rationals and kept
/// only if they pass [`check_certificate`] exactly. Failing that, the exact
/// problem is re-pivoted starting from the floating-point optimal basis, and
/// as a last resort the rational tableau is pivoted from scratch.
pub fn solve_exact(lp: &LinProgram) -> LpSolution<Rational> {
    let m = lp.constraints.len();
    let n = lp.columns.len();
    let cells = m.min(n) * (m + n);
    if cells > DIRECT_EXACT_CELLS {
        let raw = simplex::solve(&lp.to_problem::<f64>(), Route::Auto);
        let basis = raw.basis.clone();
        let float = LpSolution::from_raw(raw);
        if float.status == Status::Optimal {
            if let Some(exact) = certify_float(lp, &float) {
                return exact;
            }
            // re-pivot exactly from the floating-point optimal basis
            if let Some(raw) = simplex::resolve(&lp.to_problem::<Rational>(), Route::Auto, &basis) {
                let exact = LpSolution::from_raw(raw);
                if check_certificate(lp, &exact).is_ok() {
                    return exact;
                }
            }
        }
    }
    solve_exact_direct(lp, Route::Auto)
}

pub fn solve_exact_direct(lp: &LinProgram, route: Route) -> LpSolution<Rational> {
    LpSolution::from_raw(simplex::solve(&lp.to_problem::<Rational>(), route))
}

fn certify_float(lp: &LinProgram, float: &LpSolution<f64>) -> Option<LpSolution<Rational>> {
    let round = |v: &f64| rational::from_f64_bounded(*v, MAX_RECONSTRUCTED_DENOMINATOR);
    let primal: Vec<Rational> = float.primal.iter().map(round).collect::<Option<_>>()?;
    let certificate: Vec<Rational> = float.certificate.iter().map(round).collect::<Option<_>>()?;
    let value = objective_at(lp, &primal);
    let candidate = LpSolution {
        status: Status::Optimal,
        value: Some(value),
        primal,
        certificate,
        pivots: float.pivots,
    };
    check_certificate(lp, &candidate).ok()?;
    Some(candidate)
}

fn objective_at(lp: &LinProgram, primal: &[Rational]) -> Rational {
    let index = lp.column_index();
    lp.objective
        .iter()
        .map(|(c, v)| v * &primal[index[c]])
        .fold(Rational::zero(), |a, b| a + b)
}

/// Checks an exact optimal solution: primal feasibility, sign-correct
/// multipliers, dual feasibility, and zero duality gap.
pub fn check_certificate(lp: &LinProgram, sol: &LpSolution<Rational>) -> std::result::Result<(), String> {
    if sol.status != Status::Optimal {
        return Err(format!("status is {:?}", sol.status));
    }
    let value = sol.value.as_ref().ok_or("missing value")?;
    let index = lp.column_index();
    if sol.primal.len() != lp.columns.len() || sol.certificate.len() != lp.constraints.len() {
        return Err("solution has the wrong shape".into());
    }
    if let Some(j) = sol.primal.iter().position(|v| v.is_negative()) {
        return Err(format!("column {} is negative", lp.column_name(lp.columns[j])));
    }
    if &objective_at(lp, &sol.primal) != value {
        return Err("objective does not match the primal point".into());
    }
    let maximize = lp.sense == Sense::Maximize;
    let mut reduced: Vec<Rational> = vec![Rational::zero(); lp.columns.len()];
    let mut bound = Rational::zero();
    for (i, (row, y)) in lp.constraints.iter().zip(&sol.certificate).enumerate() {
        let lhs = row.lhs_at(|c| sol.primal[index[&c]].clone());
        if !row.relation.holds(&lhs, &row.rhs) {
            return Err(format!("constraint {i} violated"));
        }
        let sign_ok = match (row.relation, maximize) {
            (Relation::Eq, _) => true,
            (Relation::Le, true) | (Relation::Ge, false) => !y.is_negative(),
            (Relation::Ge, true) | (Relation::Le, false) => !y.is_positive(),
        };
        if !sign_ok {
            return Err(format!("multiplier {i} has the wrong sign"));
        }
        if y.is_zero() {
            continue;
        }
        for (c, a) in &row.coeffs {
            reduced[index[c]] += a * y;
        }
        bound += &row.rhs * y;
    }
    for (j, col) in lp.columns.iter().enumerate() {
        let c = lp.objective.get(col).cloned().unwrap_or_else(Rational::zero);
        let ok = if maximize { reduced[j] >= c } else { reduced[j] <= c };
        if !ok {
            return Err(format!("dual constraint for {} violated", lp.column_name(*col)));
        }
    }
    if &bound != value {
        return Err(format!(
            "duality gap: bound {} vs value {}",
            rational::to_fraction_string(&bound),
            rational::to_fraction_string(value)
        ));
    }
    Ok(())
}

/// Column space and row rewriting for one build mode.
struct Space {
    table: Option<OrbitTable>,
}

impl Space {
    fn new(universe: &Universe, mode: Mode) -> Result<Self> {
        entset::check_capacity(universe)?;
        let table = match mode {
            Mode::Reduced => Some(reduce::full_orbit_table(universe)?),
            Mode::Unreduced => None,
        };
        Ok(Space { table })
    }

    fn column(&self, s: VarSet) -> Column {
        match &self.table {
            Some(t) => Column::Entropy(t.canon(s).expect("table covers every subset")),
            None => Column::Entropy(s),
        }
    }

    fn entropy_columns(&self, universe: &Universe) -> Result<Vec<Column>> {
        Ok(match &self.table {
            Some(t) => t.reps().iter().map(|s| Column::Entropy(*s)).collect(),
            None => entset::subset_lattice(universe)?.map(Column::Entropy).collect(),
        })
    }

    fn rows(&self, universe: &Universe, system: Vec<LinearConstraint>) -> Result<Vec<LinearConstraint>> {
        match &self.table {
            Some(t) => {
                let mut rows = reduce::rewrite_elemental(universe, t)?;
                rows.extend(reduce::rewrite_constraints(&system, t)?);
                Ok(entset::normalize_and_dedup(rows))
            }
            None => {
                let mut rows = entset::elemental_inequalities(universe)?;
                rows.extend(system);
                Ok(rows)
            }
        }
    }
}

fn system_rows(universe: &Universe, alpha: &Capacity, beta: &Capacity) -> Vec<LinearConstraint> {
    let mut rows = constraints::encoding_constraints(universe);
    rows.extend(constraints::decoding_constraints(universe));
    rows.extend(constraints::capacity_constraints(universe, alpha, beta));
    rows
}

fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Reduced => "reduced",
        Mode::Unreduced => "unreduced",
    }
}

/// Maximize `H(S)` over the polymatroid region cut by the storage-system
/// constraints, with `alpha` and `beta` fixed.
pub fn build_rate_lp(params: &DssParams, mode: Mode) -> Result<LinProgram> {
    build_rate_lp_with(params, mode, Vec::new())
}

/// [`build_rate_lp`] with additional rows over raw subsets.
pub fn build_rate_lp_with(params: &DssParams, mode: Mode, extra: Vec<LinearConstraint>) -> Result<LinProgram> {
    let universe = enumerate_universe(params)?;
    let space = Space::new(&universe, mode)?;
    let mut system = system_rows(
        &universe,
        &Capacity::Fixed(params.alpha.clone()),
        &Capacity::Fixed(params.beta.clone()),
    );
    system.extend(extra);
    let constraints = space.rows(&universe, system)?;
    let columns = space.entropy_columns(&universe)?;
    let objective = BTreeMap::from([(space.column(VarSet::single(universe.source())), rational::int(1))]);
    let title = format!(
        "rate bound ({},{},{}) alpha={} beta={} mode={}",
        params.n,
        params.k,
        params.d,
        rational::to_fraction_string(&params.alpha),
        rational::to_fraction_string(&params.beta),
        mode_name(mode)
    );
    let lp = LinProgram {
        columns,
        constraints,
        objective,
        sense: Sense::Maximize,
        universe,
        title,
    };
    lp.validate()?;
    Ok(lp)
}

/// Minimize the free capacity subject to `H(S) >= rate`; the other capacity
/// is taken from `params`.
pub fn build_tradeoff_lp(params: &DssParams, rate: &Rational, free: FreeParam, mode: Mode) -> Result<LinProgram> {
    let universe = enumerate_universe(params)?;
    let space = Space::new(&universe, mode)?;
    let (alpha, beta, free_col) = match free {
        FreeParam::Alpha => (Capacity::Free, Capacity::Fixed(params.beta.clone()), Column::Alpha),
        FreeParam::Beta => (Capacity::Fixed(params.alpha.clone()), Capacity::Free, Column::Beta),
    };
    let mut system = system_rows(&universe, &alpha, &beta);
    system.push(LinearConstraint::entropy(
        [(VarSet::single(universe.source()), 1)],
        Relation::Ge,
        rate.clone(),
        Provenance::Rate,
    ));
    let constraints = space.rows(&universe, system)?;
    let mut columns = space.entropy_columns(&universe)?;
    columns.push(free_col);
    let objective = BTreeMap::from([(free_col, rational::int(1))]);
    let (fixed_name, fixed) = match free {
        FreeParam::Alpha => ("beta", &params.beta),
        FreeParam::Beta => ("alpha", &params.alpha),
    };
    let title = format!(
        "tradeoff ({},{},{}) rate={} {}={} minimize {} mode={}",
        params.n,
        params.k,
        params.d,
        rational::to_fraction_string(rate),
        fixed_name,
        rational::to_fraction_string(fixed),
        if free == FreeParam::Alpha { "alpha" } else { "beta" },
        mode_name(mode)
    );
    let lp = LinProgram {
        columns,
        constraints,
        objective,
        sense: Sense::Minimize,
        universe,
        title,
    };
    lp.validate()?;
    Ok(lp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{frac, int};

    fn params(a: Rational, b: Rational) -> DssParams {
        DssParams::new(3, 2, 2, a, b).unwrap()
    }

    fn toy(constraints: Vec<LinearConstraint>, objective: &[(Column, i64)], sense: Sense) -> LinProgram {
        let universe = enumerate_universe(&DssParams::shape(2, 1, 1).unwrap()).unwrap();
        let mut columns: Vec<Column> = constraints
            .iter()
            .flat_map(|r| r.coeffs.keys().copied())
            .chain(objective.iter().map(|(c, _)| *c))
            .collect();
        columns.sort();
        columns.dedup();
        LinProgram {
            columns,
            constraints,
            objective: objective.iter().map(|(c, v)| (*c, int(*v))).collect(),
            sense,
            universe,
            title: "toy".into(),
        }
    }

    fn x() -> Column {
        Column::Entropy(VarSet(1))
    }
    fn y() -> Column {
        Column::Entropy(VarSet(2))
    }

    #[test]
    fn toy_examples_exact_and_float() {
        let le = |terms: &[(Column, i64)], rhs| {
            LinearConstraint::new(terms.iter().map(|(c, v)| (*c, int(*v))), Relation::Le, int(rhs), Provenance::Rate)
        };
        let ge = |terms: &[(Column, i64)], rhs| {
            LinearConstraint::new(terms.iter().map(|(c, v)| (*c, int(*v))), Relation::Ge, int(rhs), Provenance::Rate)
        };
        let lp = toy(vec![le(&[(x(), 1)], 5)], &[(x(), 1)], Sense::Maximize);
        assert_eq!(solve_exact(&lp).value, Some(int(5)));
        assert_eq!(solve_float(&lp).value, Some(5.0));

        let lp = toy(vec![le(&[(x(), 1), (y(), 1)], 3), le(&[(x(), 1)], 2)], &[(x(), 1), (y(), 1)], Sense::Maximize);
        let s = solve_exact(&lp);
        assert_eq!(s.value, Some(int(3)));
        check_certificate(&lp, &s).unwrap();

        let lp = toy(vec![ge(&[(x(), 1)], 1), le(&[(x(), 1)], 0)], &[(x(), 1)], Sense::Maximize);
        assert_eq!(solve_exact(&lp).status, Status::Infeasible);
        assert_eq!(solve_float(&lp).status, Status::Infeasible);
    }

    #[test]
    fn certificate_rejects_tampering() {
        let lp = build_rate_lp(&params(int(2), int(1)), Mode::Reduced).unwrap();
        let mut s = solve_exact(&lp);
        check_certificate(&lp, &s).unwrap();
        s.value = Some(s.value.unwrap() + int(1));
        assert!(check_certificate(&lp, &s).is_err());
    }

    #[test]
    fn unreduced_shape() {
        let lp = build_rate_lp(&params(int(2), int(1)), Mode::Unreduced).unwrap();
        assert_eq!(lp.entropy_columns(), 1023);
        assert_eq!(lp.constraints.len(), 11530 + 9 + 6 + 9);
    }

    #[test]
    fn reduced_shape_and_value() {
        let lp = build_rate_lp(&params(int(2), int(1)), Mode::Reduced).unwrap();
        // one column per orbit of closed sets
        assert_eq!(lp.entropy_columns(), 10);
        let s = solve_exact(&lp);
        assert_eq!(s.status, Status::Optimal);
        assert_eq!(s.value, Some(int(3)));
    }

    #[test]
    fn zero_storage_gives_zero_rate() {
        for mode in [Mode::Reduced, Mode::Unreduced] {
            let lp = build_rate_lp(&params(int(0), int(1)), mode).unwrap();
            let s = solve(&lp, Arithmetic::Float);
            assert!(s.value_f64().unwrap().abs() < 1e-9);
        }
        let lp = build_rate_lp(&params(int(0), int(1)), Mode::Reduced).unwrap();
        assert_eq!(solve_exact(&lp).value, Some(int(0)));
    }

    #[test]
    fn tradeoff_examples() {
        // beta large: alpha bound is R / k
        let lp = build_tradeoff_lp(&params(int(1), int(10)), &int(1), FreeParam::Alpha, Mode::Reduced).unwrap();
        let s = solve_exact(&lp);
        assert_eq!(s.value, Some(frac(1, 2)));
        check_certificate(&lp, &s).unwrap();

        // beta = 0 admits no repair
        let lp = build_tradeoff_lp(&params(int(1), int(0)), &int(1), FreeParam::Alpha, Mode::Reduced).unwrap();
        assert_eq!(solve_exact(&lp).status, Status::Infeasible);

        // alpha = 1, beta free: the cut-set frontier gives 1/2 (min{1,2b} + min{1,b} >= 1)
        let lp = build_tradeoff_lp(&params(int(1), int(1)), &int(1), FreeParam::Beta, Mode::Reduced).unwrap();
        let s = solve_exact(&lp);
        let beta = s.value.unwrap();
        assert!(beta.is_positive());
        assert!(beta >= frac(1, 3));
    }

    #[test]
    fn route_choice_does_not_change_optimum() {
        let lp = build_rate_lp(&params(frac(3, 2), int(1)), Mode::Reduced).unwrap();
        let a = solve_exact_direct(&lp, Route::Primal);
        let b = solve_exact_direct(&lp, Route::Dual);
        assert_eq!(a.value, b.value);
        check_certificate(&lp, &a).unwrap();
        check_certificate(&lp, &b).unwrap();
    }
}
