//! Dense two-phase tableau simplex with Bland's rule, generic over the
//! scalar type so the same pivoting runs on exact rationals and on `f64`.

use std::fmt::Debug;

use num_traits::{One, Signed, Zero};

use crate::entset::Relation;
use crate::rational::{self, Rational};

/// Comparison tolerance for `f64` pivoting.
pub const FLOAT_EPS: f64 = 1e-9;
const FLOAT_SNAP: f64 = 1e-12;
/// Consecutive degenerate pivots tolerated before switching to Bland's rule.
const DEGENERATE_RUN: usize = 50;

pub trait Scalar: Clone + Debug + PartialOrd + Send + Sync {
    fn zero() -> Self;
    fn one() -> Self;
    fn from_rational(r: &Rational) -> Self;
    fn is_zero(&self) -> bool;
    fn is_positive(&self) -> bool;
    fn is_negative(&self) -> bool;
    fn neg(&self) -> Self;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn div(&self, other: &Self) -> Self;
    /// `self -= a * b`.
    fn sub_mul_assign(&mut self, a: &Self, b: &Self);
    /// Equality up to the type's tolerance.
    fn approx_eq(&self, other: &Self) -> bool;
    /// Right-hand-side offset added to `<=` row `index` before pivoting, or
    /// `None` to pivot on the problem as given.
    fn perturbation(index: usize) -> Option<Self>;
    /// Amount by which a basic variable may go negative in a ratio test.
    fn feasibility_tol() -> Self;
    /// Nearest `f64`, for pricing heuristics.
    fn approx(&self) -> f64;
    /// Smallest pivot element the basis-inverse engine accepts.
    fn pivot_tol() -> Self;
    /// Whether arithmetic is exact, so the basis inverse never needs to be
    /// recomputed from scratch.
    const EXACT: bool;
}

impl Scalar for Rational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn is_positive(&self) -> bool {
        Signed::is_positive(self)
    }
    fn is_negative(&self) -> bool {
        Signed::is_negative(self)
    }
    fn neg(&self) -> Self {
        -self
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn div(&self, other: &Self) -> Self {
        self / other
    }
    fn sub_mul_assign(&mut self, a: &Self, b: &Self) {
        *self -= a * b;
    }
    fn approx_eq(&self, other: &Self) -> bool {
        self == other
    }
    const EXACT: bool = true;
    fn approx(&self) -> f64 {
        rational::to_f64(self)
    }
    fn feasibility_tol() -> Self {
        <Rational as Scalar>::zero()
    }
    fn pivot_tol() -> Self {
        <Rational as Scalar>::zero()
    }
    fn perturbation(_index: usize) -> Option<Self> {
        None
    }
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_rational(r: &Rational) -> Self {
        rational::to_f64(r)
    }
    fn is_zero(&self) -> bool {
        self.abs() <= FLOAT_EPS
    }
    fn is_positive(&self) -> bool {
        *self > FLOAT_EPS
    }
    fn is_negative(&self) -> bool {
        *self < -FLOAT_EPS
    }
    fn neg(&self) -> Self {
        -*self
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn div(&self, other: &Self) -> Self {
        self / other
    }
    #[inline]
    fn sub_mul_assign(&mut self, a: &Self, b: &Self) {
        *self -= a * b;
        if self.abs() < FLOAT_SNAP {
            *self = 0.0;
        }
    }
    fn approx_eq(&self, other: &Self) -> bool {
        (self - other).abs() <= FLOAT_EPS * (1.0 + self.abs().max(other.abs()))
    }
    const EXACT: bool = false;
    fn approx(&self) -> f64 {
        *self
    }
    fn feasibility_tol() -> Self {
        FLOAT_EPS
    }
    fn pivot_tol() -> Self {
        1e-7
    }
    fn perturbation(index: usize) -> Option<Self> {
        // distinct offsets in [1e-6, 2e-6) so that ties between rows are rare
        let h = (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15) >> 11;
        Some(1e-6 * (1.0 + h as f64 / (1u64 << 53) as f64))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct Row<T> {
    pub coeffs: Vec<(usize, T)>,
    pub relation: Relation,
    pub rhs: T,
}

/// `max/min objective . x` subject to `rows`, `x >= 0`.
#[derive(Debug, Clone)]
pub struct Problem<T> {
    pub n_vars: usize,
    pub rows: Vec<Row<T>>,
    pub objective: Vec<T>,
    pub maximize: bool,
}

/// Solver output. For a maximization problem the certificate `y` satisfies
/// `y_i >= 0` on `<=` rows, `y_i <= 0` on `>=` rows, `A^T y >= c` and
/// `b . y = value`; for minimization all inequalities reverse.
#[derive(Debug, Clone)]
pub struct RawSolution<T> {
    pub status: Status,
    pub value: T,
    pub x: Vec<T>,
    pub y: Vec<T>,
    pub pivots: usize,
    /// Final basis of the pivoted problem (the dual when that route was
    /// taken), in the engine's internal column numbering. Empty unless
    /// optimal. See [`resolve`].
    pub basis: Vec<usize>,
}

impl<T: Scalar> RawSolution<T> {
    pub(crate) fn without_point(status: Status, n: usize, m: usize, pivots: usize) -> Self {
        RawSolution {
            status,
            value: T::zero(),
            x: vec![T::zero(); n],
            y: vec![T::zero(); m],
            pivots,
            basis: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    /// Pivot on the problem itself.
    Primal,
    /// Pivot on the explicit dual, then read the primal point from its
    /// multipliers. Cheaper when rows far outnumber columns.
    Dual,
    Auto,
}

fn uses_dual<T>(problem: &Problem<T>, route: Route) -> bool {
    match route {
        Route::Primal => false,
        Route::Dual => true,
        Route::Auto => problem.rows.len() > problem.n_vars,
    }
}

pub fn solve<T: Scalar>(problem: &Problem<T>, route: Route) -> RawSolution<T> {
    if uses_dual(problem, route) {
        solve_via_dual(problem)
    } else {
        run(problem)
    }
}

/// Re-solves `problem` starting from `basis`, typically the final basis of
/// a floating-point solve of the same problem with the same route. Returns
/// `None` if that basis is singular or infeasible in this arithmetic;
/// otherwise pivots on to an optimum, which in exact arithmetic takes few
/// or no pivots when the hint was right.
pub fn resolve<T: Scalar>(problem: &Problem<T>, route: Route, basis: &[usize]) -> Option<RawSolution<T>> {
    if uses_dual(problem, route) {
        let dual = DualForm::new(problem);
        let sol = warm(&dual.problem, basis)?;
        (sol.status == Status::Optimal).then(|| dual.primal_solution(problem, sol))
    } else {
        warm(problem, basis)
    }
}

/// Both engines number their columns the same way, so a basis from either
/// one can be loaded into the basis-inverse engine, whose per-pivot cost
/// does not grow with the column count.
fn warm<T: Scalar>(p: &Problem<T>, basis: &[usize]) -> Option<RawSolution<T>> {
    super::revised::warm(p, basis)
}

/// Tableau cells above which exact solves also use the basis-inverse
/// engine. Floating-point solves always do: its Devex pricing and periodic
/// refactorization hold up far better on degenerate programs.
const REVISED_CELLS: usize = 2_000_000;

fn uses_revised<T: Scalar>(p: &Problem<T>) -> bool {
    let m = p.rows.len();
    !T::EXACT || m * (p.n_vars + 2 * m) > REVISED_CELLS
}

fn run<T: Scalar>(p: &Problem<T>) -> RawSolution<T> {
    if uses_revised(p) {
        super::revised::solve(p)
    } else {
        Tableau::build(p, true).run(p)
    }
}

struct Tableau<T> {
    rows: Vec<Vec<T>>,
    rhs: Vec<T>,
    basis: Vec<usize>,
    /// Per-row column that started as the identity: slack or artificial.
    ident: Vec<usize>,
    row_sign: Vec<bool>,
    n_struct: usize,
    first_artificial: usize,
    n_cols: usize,
    cost: Vec<T>,
    pivots: usize,
    /// Offsets added to `<=` right-hand sides, by row.
    offsets: Vec<(usize, T)>,
}

enum Outcome {
    Optimal,
    Unbounded,
}

impl<T: Scalar> Tableau<T> {
    fn build(p: &Problem<T>, perturb: bool) -> Self {
        let m = p.rows.len();
        let n = p.n_vars;
        // flip rows so every rhs is nonnegative; `0 >= ...` rows become `<=`
        let mut flipped = Vec::with_capacity(m);
        let mut relations = Vec::with_capacity(m);
        for row in &p.rows {
            let flip = row.rhs.is_negative() || (row.rhs.is_zero() && row.relation == Relation::Ge);
            flipped.push(flip);
            relations.push(if flip { row.relation.flipped() } else { row.relation });
        }
        let n_slack = relations.iter().filter(|r| **r != Relation::Eq).count();
        let n_art = relations.iter().filter(|r| **r != Relation::Le).count();
        let first_artificial = n + n_slack;
        let n_cols = first_artificial + n_art;

        let mut rows = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let mut ident = Vec::with_capacity(m);
        let (mut next_slack, mut next_art) = (n, first_artificial);
        for (i, row) in p.rows.iter().enumerate() {
            let mut dense = vec![T::zero(); n_cols];
            for (j, c) in &row.coeffs {
                let v = if flipped[i] { c.neg() } else { c.clone() };
                dense[*j] = dense[*j].add(&v);
            }
            rhs.push(if flipped[i] { row.rhs.neg() } else { row.rhs.clone() });
            match relations[i] {
                Relation::Le => {
                    dense[next_slack] = T::one();
                    basis.push(next_slack);
                    ident.push(next_slack);
                    next_slack += 1;
                }
                Relation::Ge => {
                    dense[next_slack] = T::one().neg();
                    dense[next_art] = T::one();
                    basis.push(next_art);
                    ident.push(next_art);
                    next_slack += 1;
                    next_art += 1;
                }
                Relation::Eq => {
                    dense[next_art] = T::one();
                    basis.push(next_art);
                    ident.push(next_art);
                    next_art += 1;
                }
            }
            rows.push(dense);
        }
        let mut offsets = Vec::new();
        if perturb {
            for (i, rel) in relations.iter().enumerate() {
                if *rel == Relation::Le {
                    if let Some(e) = T::perturbation(i) {
                        rhs[i] = rhs[i].add(&e);
                        offsets.push((i, e));
                    }
                }
            }
        }
        Tableau {
            rows,
            rhs,
            basis,
            ident,
            row_sign: flipped,
            n_struct: n,
            first_artificial,
            n_cols,
            cost: Vec::new(),
            pivots: 0,
            offsets,
        }
    }

    /// Reduced costs for a cost vector over all columns.
    fn price(&mut self, costs: Vec<T>) {
        let mut d = costs.clone();
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = &costs[b];
            if cb.is_zero() {
                continue;
            }
            for (j, v) in self.rows[r].iter().enumerate() {
                if !v.is_zero() {
                    d[j].sub_mul_assign(cb, v);
                }
            }
        }
        self.cost = d;
    }

    fn objective_value(&self, costs: &[T]) -> T {
        self.basis
            .iter()
            .zip(&self.rhs)
            .fold(T::zero(), |acc, (&b, v)| acc.add(&costs[b].mul(v)))
    }

    fn pivot(&mut self, r: usize, c: usize) {
        self.pivots += 1;
        let mut prow = std::mem::take(&mut self.rows[r]);
        let inv = T::one().div(&prow[c]);
        let nz: Vec<usize> = (0..self.n_cols).filter(|&j| !prow[j].is_zero()).collect();
        for &j in &nz {
            prow[j] = prow[j].mul(&inv);
        }
        prow[c] = T::one();
        let prhs = self.rhs[r].mul(&inv);
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let f = self.rows[i][c].clone();
            if f.is_zero() {
                continue;
            }
            let row = &mut self.rows[i];
            for &j in &nz {
                row[j].sub_mul_assign(&f, &prow[j]);
            }
            row[c] = T::zero();
            self.rhs[i].sub_mul_assign(&f, &prhs);
        }
        let f = self.cost[c].clone();
        if !f.is_zero() {
            for &j in &nz {
                self.cost[j].sub_mul_assign(&f, &prow[j]);
            }
            self.cost[c] = T::zero();
        }
        self.rhs[r] = prhs;
        self.rows[r] = prow;
        self.basis[r] = c;
    }

    /// Largest-coefficient entering column while the objective keeps moving;
    /// after [`DEGENERATE_RUN`] consecutive degenerate pivots, Bland's rule
    /// (lowest-index improving column, ratio ties to the lowest-index basic
    /// column) takes over until the next nondegenerate pivot, which rules out
    /// cycling.
    fn iterate(&mut self, enterable: usize) -> Outcome {
        let mut degenerate_run = 0usize;
        loop {
            let entering = if degenerate_run < DEGENERATE_RUN {
                let mut best: Option<usize> = None;
                for j in 0..enterable {
                    if self.cost[j].is_negative() && best.map_or(true, |b| self.cost[j] < self.cost[b]) {
                        best = Some(j);
                    }
                }
                best
            } else {
                (0..enterable).find(|&j| self.cost[j].is_negative())
            };
            let Some(c) = entering else {
                return Outcome::Optimal;
            };
            let mut best: Option<(usize, T)> = None;
            for r in 0..self.rows.len() {
                let a = &self.rows[r][c];
                if !a.is_positive() {
                    continue;
                }
                let ratio = self.rhs[r].div(a);
                best = match best {
                    None => Some((r, ratio)),
                    Some((br, bratio)) => {
                        if ratio.approx_eq(&bratio) {
                            if self.basis[r] < self.basis[br] {
                                Some((r, bratio))
                            } else {
                                Some((br, bratio))
                            }
                        } else if ratio < bratio {
                            Some((r, ratio))
                        } else {
                            Some((br, bratio))
                        }
                    }
                };
            }
            match best {
                Some((r, ratio)) => {
                    if ratio.is_zero() {
                        degenerate_run += 1;
                    } else {
                        degenerate_run = 0;
                    }
                    self.pivot(r, c);
                }
                None => return Outcome::Unbounded,
            }
        }
    }

    /// Removes the right-hand-side offsets from an optimal basis and repairs
    /// any resulting infeasibility with dual simplex pivots (leaving row by
    /// lowest basic index). Returns false if the unperturbed problem is
    /// infeasible.
    fn restore(&mut self) -> bool {
        let offsets = std::mem::take(&mut self.offsets);
        for r in 0..self.rows.len() {
            for (i, e) in &offsets {
                let a = &self.rows[r][self.ident[*i]];
                if !a.is_zero() {
                    self.rhs[r].sub_mul_assign(a, e);
                }
            }
        }
        loop {
            let leaving = (0..self.rows.len())
                .filter(|&r| self.rhs[r].is_negative())
                .min_by_key(|&r| self.basis[r]);
            let Some(r) = leaving else {
                return true;
            };
            let mut best: Option<(usize, T)> = None;
            for j in 0..self.first_artificial {
                let a = &self.rows[r][j];
                if !a.is_negative() {
                    continue;
                }
                let ratio = self.cost[j].div(&a.neg());
                if best.as_ref().map_or(true, |(_, b)| ratio < *b && !ratio.approx_eq(b)) {
                    best = Some((j, ratio));
                }
            }
            match best {
                Some((c, _)) => self.pivot(r, c),
                None => return false,
            }
        }
    }

    fn run(mut self, p: &Problem<T>) -> RawSolution<T> {
        let m = p.rows.len();
        let n = p.n_vars;
        if self.first_artificial < self.n_cols {
            let phase1: Vec<T> = (0..self.n_cols)
                .map(|j| if j >= self.first_artificial { T::one() } else { T::zero() })
                .collect();
            self.price(phase1.clone());
            self.iterate(self.first_artificial);
            if !self.objective_value(&phase1).is_zero() {
                return RawSolution::without_point(Status::Infeasible, n, m, self.pivots);
            }
            // drive zero-level artificials out of the basis where possible
            for r in 0..m {
                if self.basis[r] < self.first_artificial {
                    continue;
                }
                if let Some(c) = (0..self.first_artificial).find(|&j| !self.rows[r][j].is_zero()) {
                    self.pivot(r, c);
                }
            }
        }
        self.finish(p)
    }

    /// Phase 2 from a feasible basis, then reads off the solution.
    fn finish(mut self, p: &Problem<T>) -> RawSolution<T> {
        let m = p.rows.len();
        let n = p.n_vars;
        let mut costs = vec![T::zero(); self.n_cols];
        for (j, c) in p.objective.iter().enumerate() {
            costs[j] = if p.maximize { c.neg() } else { c.clone() };
        }
        self.price(costs);
        if let Outcome::Unbounded = self.iterate(self.first_artificial) {
            if !self.offsets.is_empty() {
                // the relaxation may be feasible when the problem is not
                let plain = Tableau::build(p, false).run(p);
                return RawSolution {
                    pivots: plain.pivots + self.pivots,
                    ..plain
                };
            }
            return RawSolution::without_point(Status::Unbounded, n, m, self.pivots);
        }
        if !self.offsets.is_empty() && !self.restore() {
            return RawSolution::without_point(Status::Infeasible, n, m, self.pivots);
        }

        let mut x = vec![T::zero(); n];
        for (r, &b) in self.basis.iter().enumerate() {
            if b < self.n_struct {
                x[b] = self.rhs[r].clone();
            }
        }
        let value = x
            .iter()
            .zip(&p.objective)
            .fold(T::zero(), |acc, (xi, ci)| acc.add(&xi.mul(ci)));
        // multipliers of the internal minimization, then undo row flips and
        // the max -> min conversion
        let y = (0..m)
            .map(|i| {
                let mut v = self.cost[self.ident[i]].clone();
                if !self.row_sign[i] {
                    v = v.neg();
                }
                if p.maximize {
                    v = v.neg();
                }
                v
            })
            .collect();
        RawSolution {
            status: Status::Optimal,
            value,
            x,
            y,
            pivots: self.pivots,
            basis: self.basis,
        }
    }
}

/// Which dual variables stand for a primal row.
enum DualVar {
    Plain(usize),
    Negated(usize),
    Split(usize, usize),
}

/// The explicit dual `min b'.u` over `A'^T u >= c'`, `u >= 0`, of a problem
/// rewritten as a maximization with `<=` rows.
struct DualForm<T> {
    problem: Problem<T>,
    /// Dual columns standing for each primal row.
    map: Vec<DualVar>,
    /// Transposed rows, one per primal variable.
    columns: Vec<Vec<(usize, T)>>,
}

impl<T: Scalar> DualForm<T> {
    fn new(p: &Problem<T>) -> Self {
        let m = p.rows.len();
        let c: Vec<T> = if p.maximize {
            p.objective.clone()
        } else {
            p.objective.iter().map(|v| v.neg()).collect()
        };
        let mut dual_cost = Vec::new();
        let mut columns: Vec<Vec<(usize, T)>> = vec![Vec::new(); p.n_vars];
        let mut map = Vec::with_capacity(m);
        let mut push = |cost: T, negate: bool, row: &Row<T>, dual_cost: &mut Vec<T>| {
            let id = dual_cost.len();
            dual_cost.push(cost);
            for (j, a) in &row.coeffs {
                columns[*j].push((id, if negate { a.neg() } else { a.clone() }));
            }
            id
        };
        for row in &p.rows {
            let var = match row.relation {
                Relation::Le => DualVar::Plain(push(row.rhs.clone(), false, row, &mut dual_cost)),
                Relation::Ge => DualVar::Negated(push(row.rhs.neg(), true, row, &mut dual_cost)),
                Relation::Eq => {
                    let a = push(row.rhs.clone(), false, row, &mut dual_cost);
                    let b = push(row.rhs.neg(), true, row, &mut dual_cost);
                    DualVar::Split(a, b)
                }
            };
            map.push(var);
        }
        let problem = Problem {
            n_vars: dual_cost.len(),
            rows: Self::rows(&columns, &c),
            objective: dual_cost,
            maximize: false,
        };
        DualForm { problem, map, columns }
    }

    fn rows(columns: &[Vec<(usize, T)>], rhs: &[T]) -> Vec<Row<T>> {
        columns
            .iter()
            .zip(rhs)
            .map(|(coeffs, cj)| Row {
                coeffs: coeffs.clone(),
                relation: Relation::Ge,
                rhs: cj.clone(),
            })
            .collect()
    }

    /// Primal point and multipliers from an optimal dual solution.
    fn primal_solution(&self, p: &Problem<T>, sol: RawSolution<T>) -> RawSolution<T> {
        let mut y: Vec<T> = self
            .map
            .iter()
            .map(|v| match *v {
                DualVar::Plain(a) => sol.x[a].clone(),
                DualVar::Negated(a) => sol.x[a].neg(),
                DualVar::Split(a, b) => sol.x[a].sub(&sol.x[b]),
            })
            .collect();
        let mut value = sol.value;
        if !p.maximize {
            value = value.neg();
            y = y.iter().map(|v| v.neg()).collect();
        }
        RawSolution {
            status: Status::Optimal,
            value,
            x: sol.y,
            y,
            pivots: sol.pivots,
            basis: sol.basis,
        }
    }
}

fn solve_via_dual<T: Scalar>(p: &Problem<T>) -> RawSolution<T> {
    let (m, n) = (p.rows.len(), p.n_vars);
    let dual = DualForm::new(p);
    let sol = run(&dual.problem);
    match sol.status {
        Status::Optimal => dual.primal_solution(p, sol),
        Status::Unbounded => RawSolution::without_point(Status::Infeasible, n, m, sol.pivots),
        Status::Infeasible => {
            // the primal is infeasible or unbounded; a Farkas ray decides
            let zeros = vec![T::zero(); n];
            let farkas = Problem {
                n_vars: dual.problem.n_vars,
                rows: DualForm::rows(&dual.columns, &zeros),
                objective: dual.problem.objective.clone(),
                maximize: false,
            };
            let probe = run(&farkas);
            let status = if probe.status == Status::Unbounded {
                Status::Infeasible
            } else {
                Status::Unbounded
            };
            RawSolution::without_point(status, n, m, sol.pivots + probe.pivots)
        }
    }
}
