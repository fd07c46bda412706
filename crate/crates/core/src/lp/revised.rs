//! Two-phase simplex that keeps an explicit dense basis inverse instead of
//! the full tableau. It makes the same kind of pivots as the tableau code
//! but touches only `m x m` numbers per pivot, which pays off when a problem
//! has far more columns than rows.

use super::simplex::{Problem, RawSolution, Scalar, Status};
use crate::entset::Relation;

/// Consecutive degenerate pivots tolerated before switching to Bland's rule.
const DEGENERATE_RUN: usize = 50;
/// Pivots between recomputations of the duals from the basis inverse.
const REPRICE_EVERY: usize = 64;
/// Pivots between recomputations of `B^-1` in floating point.
const REFACTOR_EVERY: usize = 500;

struct Revised<T> {
    m: usize,
    /// Sparse columns: structural, then slack/surplus, then artificial.
    cols: Vec<Vec<(usize, T)>>,
    first_artificial: usize,
    n_struct: usize,
    rhs: Vec<T>,
    flipped: Vec<bool>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    /// Row-major `B^-1`.
    binv: Vec<Vec<T>>,
    /// Basic variable values `B^-1 b`.
    xb: Vec<T>,
    cost: Vec<T>,
    duals: Vec<T>,
    /// Devex reference weights.
    weights: Vec<f64>,
    offsets: Vec<(usize, T)>,
    pivots: usize,
}

enum Outcome {
    Optimal,
    Unbounded,
}

impl<T: Scalar> Revised<T> {
    fn build(p: &Problem<T>, perturb: bool) -> Self {
        let m = p.rows.len();
        let n = p.n_vars;
        let mut flipped = Vec::with_capacity(m);
        let mut relations = Vec::with_capacity(m);
        for row in &p.rows {
            let flip = row.rhs.is_negative() || (row.rhs.is_zero() && row.relation == Relation::Ge);
            flipped.push(flip);
            relations.push(if flip { row.relation.flipped() } else { row.relation });
        }
        let n_slack = relations.iter().filter(|r| **r != Relation::Eq).count();
        let first_artificial = n + n_slack;
        let mut cols: Vec<Vec<(usize, T)>> = vec![Vec::new(); n];
        let mut rhs = Vec::with_capacity(m);
        for (i, row) in p.rows.iter().enumerate() {
            for (j, c) in &row.coeffs {
                let v = if flipped[i] { c.neg() } else { c.clone() };
                match cols[*j].last_mut() {
                    Some((r, acc)) if *r == i => *acc = acc.add(&v),
                    _ => cols[*j].push((i, v)),
                }
            }
            rhs.push(if flipped[i] { row.rhs.neg() } else { row.rhs.clone() });
        }
        let mut ident = vec![0; m];
        for (i, rel) in relations.iter().enumerate() {
            match rel {
                Relation::Le => {
                    ident[i] = cols.len();
                    cols.push(vec![(i, T::one())]);
                }
                Relation::Ge => cols.push(vec![(i, T::one().neg())]),
                Relation::Eq => {}
            }
        }
        debug_assert_eq!(cols.len(), first_artificial);
        for (i, rel) in relations.iter().enumerate() {
            if *rel != Relation::Le {
                ident[i] = cols.len();
                cols.push(vec![(i, T::one())]);
            }
        }
        let mut offsets = Vec::new();
        if perturb {
            for (i, rel) in relations.iter().enumerate() {
                if *rel == Relation::Le {
                    if let Some(e) = T::perturbation(i) {
                        offsets.push((i, e));
                    }
                }
            }
        }
        let mut xb = rhs.clone();
        for (i, e) in &offsets {
            xb[*i] = xb[*i].add(e);
        }
        let mut is_basic = vec![false; cols.len()];
        for &b in ident.iter() {
            is_basic[b] = true;
        }
        let binv = (0..m)
            .map(|i| {
                let mut row = vec![T::zero(); m];
                row[i] = T::one();
                row
            })
            .collect();
        Revised {
            m,
            cols,
            first_artificial,
            n_struct: n,
            rhs,
            flipped,
            basis: ident,
            is_basic,
            binv,
            xb,
            cost: Vec::new(),
            duals: vec![T::zero(); m],
            weights: Vec::new(),
            offsets,
            pivots: 0,
        }
    }

    fn reprice(&mut self) {
        let mut duals = vec![T::zero(); self.m];
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = &self.cost[b];
            if cb.is_zero() {
                continue;
            }
            for (i, v) in self.binv[r].iter().enumerate() {
                if !v.is_zero() {
                    duals[i] = duals[i].add(&cb.mul(v));
                }
            }
        }
        self.duals = duals;
    }

    fn reduced_cost(&self, j: usize) -> T {
        self.cols[j]
            .iter()
            .fold(self.cost[j].clone(), |acc, (i, a)| acc.sub(&self.duals[*i].mul(a)))
    }

    /// `B^-1 a_j`.
    fn ftran(&self, j: usize) -> Vec<T> {
        let mut out = vec![T::zero(); self.m];
        for (i, a) in &self.cols[j] {
            for (r, row) in self.binv.iter().enumerate() {
                let v = &row[*i];
                if !v.is_zero() {
                    out[r] = out[r].add(&v.mul(a));
                }
            }
        }
        out
    }

    /// Row `r` of `B^-1 A` at column `j`.
    fn tableau_entry(&self, r: usize, j: usize) -> T {
        self.cols[j]
            .iter()
            .fold(T::zero(), |acc, (i, a)| acc.add(&self.binv[r][*i].mul(a)))
    }

    fn pivot(&mut self, r: usize, q: usize, alpha: &[T]) {
        self.pivots += 1;
        let inv = T::one().div(&alpha[r]);
        let mut prow = std::mem::take(&mut self.binv[r]);
        let nz: Vec<usize> = (0..self.m).filter(|&i| !prow[i].is_zero()).collect();
        for &i in &nz {
            prow[i] = prow[i].mul(&inv);
        }
        let xr = self.xb[r].mul(&inv);
        for (k, a) in alpha.iter().enumerate() {
            if k == r || a.is_zero() {
                continue;
            }
            let row = &mut self.binv[k];
            for &i in &nz {
                row[i].sub_mul_assign(a, &prow[i]);
            }
            self.xb[k].sub_mul_assign(a, &xr);
        }
        // duals move along the old pivot row of B^-1
        let dq = self.reduced_cost(q);
        if !dq.is_zero() {
            for &i in &nz {
                self.duals[i] = self.duals[i].add(&dq.mul(&prow[i]));
            }
        }
        self.binv[r] = prow;
        self.xb[r] = xr;
        self.is_basic[self.basis[r]] = false;
        self.is_basic[q] = true;
        self.basis[r] = q;
        if !T::EXACT && self.pivots % REFACTOR_EVERY == 0 {
            self.refactor();
        } else if self.pivots % REPRICE_EVERY == 0 {
            self.reprice();
        }
    }

    /// Recomputes `B^-1`, the basic values and the duals from the current
    /// basis by Gauss-Jordan elimination with partial pivoting.
    fn refactor(&mut self) {
        let m = self.m;
        let mut b = vec![vec![T::zero(); m]; m];
        for (r, &j) in self.basis.iter().enumerate() {
            for (i, a) in &self.cols[j] {
                b[*i][r] = a.clone();
            }
        }
        let mut inv: Vec<Vec<T>> = (0..m)
            .map(|i| {
                let mut row = vec![T::zero(); m];
                row[i] = T::one();
                row
            })
            .collect();
        let abs = |v: &T| if v.is_negative() { v.neg() } else { v.clone() };
        for c in 0..m {
            let p = (c..m).max_by(|&x, &y| abs(&b[x][c]).partial_cmp(&abs(&b[y][c])).unwrap()).unwrap();
            if b[p][c].is_zero() {
                // singular in working precision; keep the updated inverse
                return;
            }
            b.swap(c, p);
            inv.swap(c, p);
            let piv = T::one().div(&b[c][c]);
            let brow_nz: Vec<usize> = (c..m).filter(|&k| !b[c][k].is_zero()).collect();
            let irow_nz: Vec<usize> = (0..m).filter(|&k| !inv[c][k].is_zero()).collect();
            for &k in &brow_nz {
                b[c][k] = b[c][k].mul(&piv);
            }
            for &k in &irow_nz {
                inv[c][k] = inv[c][k].mul(&piv);
            }
            let (brow, irow) = (b[c].clone(), inv[c].clone());
            for r in 0..m {
                if r == c || b[r][c].is_zero() {
                    continue;
                }
                let f = b[r][c].clone();
                for &k in &brow_nz {
                    b[r][k].sub_mul_assign(&f, &brow[k]);
                }
                for &k in &irow_nz {
                    inv[r][k].sub_mul_assign(&f, &irow[k]);
                }
            }
        }
        self.binv = inv;
        let mut rhs = self.rhs.clone();
        for (i, e) in &self.offsets {
            rhs[*i] = rhs[*i].add(e);
        }
        for r in 0..m {
            self.xb[r] = self.binv[r]
                .iter()
                .zip(&rhs)
                .fold(T::zero(), |acc, (v, b)| if v.is_zero() { acc } else { acc.add(&v.mul(b)) });
        }
        self.reprice();
    }

    /// Same entering and leaving rules as the tableau: largest improvement
    /// until a run of degenerate pivots, then Bland's rule.
    fn iterate(&mut self) -> Outcome {
        let mut degenerate_run = 0usize;
        loop {
            let bland = degenerate_run >= DEGENERATE_RUN;
            let mut entering: Option<(usize, f64)> = None;
            for j in 0..self.first_artificial {
                if self.is_basic[j] {
                    continue;
                }
                let d = self.reduced_cost(j);
                if !d.is_negative() {
                    continue;
                }
                if bland {
                    entering = Some((j, 0.0));
                    break;
                }
                let d = d.approx();
                let score = d * d / self.weights[j];
                if entering.map_or(true, |(_, b)| score > b) {
                    entering = Some((j, score));
                }
            }
            let Some((q, _)) = entering else {
                return Outcome::Optimal;
            };
            let alpha = self.ftran(q);
            let Some((r, ratio)) = self.ratio_test(&alpha, bland) else {
                return Outcome::Unbounded;
            };
            self.update_weights(r, q, &alpha);
            if ratio.is_zero() {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.pivot(r, q, &alpha);
        }
    }

    /// Devex update after choosing pivot `(r, q)`, using row `r` of the
    /// current tableau.
    fn update_weights(&mut self, r: usize, q: usize, alpha: &[T]) {
        let arq = alpha[r].approx();
        let wq = self.weights[q];
        let mut max_w: f64 = 0.0;
        for j in 0..self.first_artificial {
            if self.is_basic[j] || j == q {
                continue;
            }
            let a = self.cols[j]
                .iter()
                .fold(0.0, |acc, (i, v)| acc + self.binv[r][*i].approx() * v.approx());
            if a != 0.0 {
                let ratio = a / arq;
                let w = &mut self.weights[j];
                *w = w.max(ratio * ratio * wq);
                max_w = max_w.max(*w);
            }
        }
        self.weights[self.basis[r]] = (wq / (arq * arq)).max(1.0);
        if max_w > 1e6 {
            self.weights.iter_mut().for_each(|w| *w = 1.0);
        }
    }

    /// Leaving row for an entering column with `B^-1 a = alpha`. Bland mode
    /// breaks ties by the lowest basic index. Otherwise a two-pass test picks
    /// the largest pivot among rows whose ratio is within the feasibility
    /// tolerance of the minimum, which keeps the basis inverse well scaled.
    fn ratio_test(&self, alpha: &[T], bland: bool) -> Option<(usize, T)> {
        let level = |r: usize| if self.xb[r].is_negative() { T::zero() } else { self.xb[r].clone() };
        let tiny = T::pivot_tol();
        let eligible = |a: &T| a.is_positive() && *a > tiny;
        if bland {
            let mut best: Option<(usize, T)> = None;
            for (r, a) in alpha.iter().enumerate() {
                if !eligible(a) {
                    continue;
                }
                let ratio = level(r).div(a);
                best = match best {
                    Some((br, bratio)) if ratio.approx_eq(&bratio) => {
                        Some(if self.basis[r] < self.basis[br] { (r, bratio) } else { (br, bratio) })
                    }
                    Some((br, bratio)) if bratio < ratio => Some((br, bratio)),
                    _ => Some((r, ratio)),
                };
            }
            return best;
        }
        let tol = T::feasibility_tol();
        let mut bound: Option<T> = None;
        for (r, a) in alpha.iter().enumerate() {
            if eligible(a) {
                let relaxed = level(r).add(&tol).div(a);
                if bound.as_ref().map_or(true, |b| relaxed < *b) {
                    bound = Some(relaxed);
                }
            }
        }
        let bound = bound?;
        let mut best: Option<usize> = None;
        for (r, a) in alpha.iter().enumerate() {
            if eligible(a) && level(r).div(a) <= bound && best.map_or(true, |b| alpha[b] < *a) {
                best = Some(r);
            }
        }
        best.map(|r| (r, level(r).div(&alpha[r])))
    }

    fn set_costs(&mut self, costs: Vec<T>) {
        self.cost = costs;
        self.weights = vec![1.0; self.cols.len()];
        self.reprice();
    }

    fn objective(&self) -> T {
        self.basis
            .iter()
            .zip(&self.xb)
            .fold(T::zero(), |acc, (&b, v)| acc.add(&self.cost[b].mul(v)))
    }

    /// Drops the right-hand-side offsets and repairs feasibility with dual
    /// simplex pivots. Returns false if the problem is infeasible.
    fn restore(&mut self) -> bool {
        self.offsets.clear();
        for r in 0..self.m {
            self.xb[r] = self.binv[r]
                .iter()
                .zip(&self.rhs)
                .fold(T::zero(), |acc, (v, b)| if v.is_zero() { acc } else { acc.add(&v.mul(b)) });
        }
        self.reprice();
        loop {
            let leaving = (0..self.m)
                .filter(|&r| self.xb[r].is_negative())
                .min_by_key(|&r| self.basis[r]);
            let Some(r) = leaving else {
                return true;
            };
            let mut best: Option<(usize, T)> = None;
            for j in 0..self.first_artificial {
                if self.is_basic[j] {
                    continue;
                }
                let a = self.tableau_entry(r, j);
                if !a.is_negative() {
                    continue;
                }
                let ratio = self.reduced_cost(j).div(&a.neg());
                if best.as_ref().map_or(true, |(_, b)| ratio < *b && !ratio.approx_eq(b)) {
                    best = Some((j, ratio));
                }
            }
            let Some((q, _)) = best else {
                return false;
            };
            let alpha = self.ftran(q);
            self.pivot(r, q, &alpha);
        }
    }

    fn run(mut self, p: &Problem<T>) -> RawSolution<T> {
        let (m, n) = (self.m, p.n_vars);
        let n_cols = self.cols.len();
        if self.first_artificial < n_cols {
            let phase1 = (0..n_cols)
                .map(|j| if j >= self.first_artificial { T::one() } else { T::zero() })
                .collect();
            self.set_costs(phase1);
            self.iterate();
            if !self.objective().is_zero() {
                return RawSolution::without_point(Status::Infeasible, n, m, self.pivots);
            }
            for r in 0..m {
                if self.basis[r] < self.first_artificial {
                    continue;
                }
                let found = (0..self.first_artificial).find(|&j| !self.is_basic[j] && !self.tableau_entry(r, j).is_zero());
                if let Some(q) = found {
                    let alpha = self.ftran(q);
                    self.pivot(r, q, &alpha);
                }
            }
        }
        self.finish(p)
    }

    /// Phase 2 from a feasible basis, then reads off the solution.
    fn finish(mut self, p: &Problem<T>) -> RawSolution<T> {
        let (m, n) = (self.m, p.n_vars);
        let n_cols = self.cols.len();
        let mut costs = vec![T::zero(); n_cols];
        for (j, c) in p.objective.iter().enumerate() {
            costs[j] = if p.maximize { c.neg() } else { c.clone() };
        }
        self.set_costs(costs);
        if let Outcome::Unbounded = self.iterate() {
            if !self.offsets.is_empty() {
                let plain = Revised::build(p, false).run(p);
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
        self.reprice();
        let mut x = vec![T::zero(); n];
        for (r, &b) in self.basis.iter().enumerate() {
            if b < self.n_struct {
                x[b] = self.xb[r].clone();
            }
        }
        let value = x
            .iter()
            .zip(&p.objective)
            .fold(T::zero(), |acc, (xi, ci)| acc.add(&xi.mul(ci)));
        let y = (0..m)
            .map(|i| {
                let mut v = self.duals[i].clone();
                if self.flipped[i] {
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

pub(crate) fn solve<T: Scalar>(p: &Problem<T>) -> RawSolution<T> {
    Revised::build(p, true).run(p)
}

/// Pivots into `basis` and continues from there if it is primal feasible.
pub(crate) fn warm<T: Scalar>(p: &Problem<T>, basis: &[usize]) -> Option<RawSolution<T>> {
    let mut s = Revised::build(p, false);
    s.cost = vec![T::zero(); s.cols.len()];
    if basis.len() != s.m || basis.iter().any(|&q| q >= s.cols.len()) {
        return None;
    }
    let mut wanted = vec![false; s.cols.len()];
    for &q in basis {
        wanted[q] = true;
    }
    for &q in basis {
        if s.is_basic[q] {
            continue;
        }
        let alpha = s.ftran(q);
        let r = (0..s.m).find(|&r| !wanted[s.basis[r]] && !alpha[r].is_zero())?;
        s.pivot(r, q, &alpha);
    }
    if !T::EXACT {
        s.refactor();
    }
    let feasible = (0..s.m).all(|r| !s.xb[r].is_negative() && (s.basis[r] < s.first_artificial || s.xb[r].is_zero()));
    feasible.then(|| s.finish(p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::simplex::{self, Route, Row};
    use crate::rational::{int, Rational};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_problem(rng: &mut ChaCha8Rng) -> Problem<Rational> {
        let n = rng.gen_range(1..6);
        let m = rng.gen_range(1..8);
        let rows = (0..m)
            .map(|_| Row {
                coeffs: (0..n)
                    .filter_map(|j| rng.gen_bool(0.7).then(|| (j, int(rng.gen_range(-3..=4)))))
                    .collect(),
                relation: [Relation::Le, Relation::Ge, Relation::Eq][rng.gen_range(0..3)],
                rhs: int(rng.gen_range(-2..=6)),
            })
            .collect();
        Problem {
            n_vars: n,
            rows,
            objective: (0..n).map(|_| int(rng.gen_range(-2..=3))).collect(),
            maximize: rng.gen_bool(0.5),
        }
    }

    fn to_float(p: &Problem<Rational>) -> Problem<f64> {
        Problem {
            n_vars: p.n_vars,
            rows: p
                .rows
                .iter()
                .map(|r| Row {
                    coeffs: r.coeffs.iter().map(|(j, c)| (*j, c.approx())).collect(),
                    relation: r.relation,
                    rhs: r.rhs.approx(),
                })
                .collect(),
            objective: p.objective.iter().map(|c| c.approx()).collect(),
            maximize: p.maximize,
        }
    }

    #[test]
    fn agrees_with_tableau_on_random_problems() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut optimal = 0;
        for _ in 0..300 {
            let p = random_problem(&mut rng);
            let reference = simplex::solve(&p, Route::Primal);
            let exact = solve(&p);
            assert_eq!(exact.status, reference.status, "{p:?}");
            let float = solve(&to_float(&p));
            assert_eq!(float.status, reference.status, "{p:?}");
            if reference.status == Status::Optimal {
                optimal += 1;
                assert_eq!(exact.value, reference.value);
                assert!((float.value - reference.value.approx()).abs() < 1e-7);
                // complementary certificate: b.y equals the optimum
                let by = p
                    .rows
                    .iter()
                    .zip(&exact.y)
                    .fold(int(0), |acc, (r, y)| acc + &r.rhs * y);
                assert_eq!(by, exact.value);
            }
        }
        assert!(optimal > 50);
    }

    #[test]
    fn warm_start_from_float_basis() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..300 {
            let p = random_problem(&mut rng);
            let float = simplex::solve(&to_float(&p), Route::Primal);
            if float.status != Status::Optimal {
                continue;
            }
            let exact = simplex::resolve(&p, Route::Primal, &float.basis).expect("float basis is exact-feasible");
            assert_eq!(exact.value, simplex::solve(&p, Route::Primal).value);
            let dual_route = simplex::solve(&to_float(&p), Route::Dual);
            let exact = simplex::resolve(&p, Route::Dual, &dual_route.basis).expect("dual basis loads");
            assert_eq!(exact.value, simplex::solve(&p, Route::Primal).value);
        }
    }
}
