//! Subcommand implementations. Each returns `Ok(true)` when every check
//! passed, `Ok(false)` when a check failed.

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use dssbound::entset::{self, VarSet};
use dssbound::lp::{self, export, Arithmetic, FreeParam, LinProgram, Mode, Solution, Status};
use dssbound::model::{enumerate_universe, max_flow_bound, DssParams, Universe, VarId};
use dssbound::rational::{self, Rational};
use dssbound::reduce::{self, ClosureOracle, NodePermutation};
use dssbound::verify::{self, code::PARITY_322_JSON, CodeReport, CodeTable, TrialSummary};

use crate::output::{emit, json, Number};
use crate::{BoundArgs, DimsArgs, ExportArgs, Format, Shape, TradeoffArgs, VerifyArgs};

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments, parameters or input files.
    Usage(String),
    /// A computation that should succeed did not.
    Failed(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Failed(m) => f.write_str(m),
        }
    }
}

impl From<dssbound::Error> for CliError {
    fn from(e: dssbound::Error) -> Self {
        use dssbound::Error as E;
        match e {
            E::Consistency(_) => CliError::Failed(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

type CmdResult = Result<bool, CliError>;

fn params(shape: &Shape, alpha: &Rational, beta: &Rational) -> Result<DssParams, CliError> {
    Ok(DssParams::new(shape.n, shape.k, shape.d, alpha.clone(), beta.clone())?)
}

fn parse(what: &str, text: &str) -> Result<Rational, CliError> {
    rational::parse(text).map_err(|e| CliError::Usage(format!("--{what}: {e}")))
}

#[derive(Serialize)]
struct ShapeOut {
    n: u8,
    k: u8,
    d: u8,
}

impl From<&Shape> for ShapeOut {
    fn from(s: &Shape) -> Self {
        ShapeOut { n: s.n, k: s.k, d: s.d }
    }
}

#[derive(Serialize)]
struct Dimensions {
    entropy_columns: usize,
    columns: usize,
    rows: usize,
}

impl From<&LinProgram> for Dimensions {
    fn from(lp: &LinProgram) -> Self {
        Dimensions {
            entropy_columns: lp.entropy_columns(),
            columns: lp.columns.len(),
            rows: lp.constraints.len(),
        }
    }
}

fn mode_name(m: Mode) -> &'static str {
    match m {
        Mode::Reduced => "reduced",
        Mode::Unreduced => "unreduced",
    }
}

fn arithmetic_name(a: Arithmetic) -> &'static str {
    match a {
        Arithmetic::Exact => "exact",
        Arithmetic::Float => "float",
    }
}

fn status_name(s: Status) -> &'static str {
    match s {
        Status::Optimal => "optimal",
        Status::Infeasible => "infeasible",
        Status::Unbounded => "unbounded",
    }
}

/// Optimal value and whether its certificate checked out (exact mode only).
fn solve(lp: &LinProgram, arithmetic: Arithmetic) -> (Solution, Option<bool>) {
    let sol = lp::solve(lp, arithmetic);
    let verified = match &sol {
        Solution::Exact(s) if s.status == Status::Optimal => Some(lp::check_certificate(lp, s).is_ok()),
        _ => None,
    };
    (sol, verified)
}

fn value_of(sol: &Solution) -> Option<Number> {
    match sol {
        Solution::Exact(s) => s.value.as_ref().map(Number::exact),
        Solution::Float(s) => s.value.map(Number::float),
    }
}

#[derive(Serialize)]
struct BoundReport {
    command: &'static str,
    params: DssParams,
    mode: &'static str,
    arithmetic: &'static str,
    status: &'static str,
    rate_bound: Option<Number>,
    max_flow: Number,
    gap: Option<Number>,
    dimensions: Dimensions,
    certificate_verified: Option<bool>,
}

pub fn bound(a: &BoundArgs) -> CmdResult {
    let alpha = parse("alpha", &a.alpha)?;
    let beta = parse("beta", &a.beta)?;
    let p = params(&a.shape, &alpha, &beta)?;
    let lp = lp::build_rate_lp(&p, a.solver.mode())?;
    let arithmetic = a.solver.arithmetic();
    let (sol, verified) = solve(&lp, arithmetic);
    let max_flow = max_flow_bound(&p)?;
    let gap = match &sol {
        Solution::Exact(s) => s.value.as_ref().map(|v| Number::exact(&(&max_flow - v))),
        Solution::Float(s) => s.value.map(|v| Number::float(rational::to_f64(&max_flow) - v)),
    };
    let report = BoundReport {
        command: "bound",
        mode: mode_name(a.solver.mode()),
        arithmetic: arithmetic_name(arithmetic),
        status: status_name(sol.status()),
        rate_bound: value_of(&sol),
        max_flow: Number::exact(&max_flow),
        gap,
        dimensions: Dimensions::from(&lp),
        certificate_verified: verified,
        params: p,
    };
    emit(&a.output, &json(&report))?;
    Ok(verified != Some(false))
}

/// `a,b,c` or `lo:hi:count` (evenly spaced, both ends included).
pub fn parse_grid(text: &str) -> Result<Vec<Rational>, CliError> {
    let bad = |m: &str| CliError::Usage(format!("--grid '{text}': {m}"));
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        let [lo, hi, count] = parts.as_slice() else {
            return Err(bad("expected lo:hi:count"));
        };
        let lo = rational::parse(lo.trim()).map_err(|e| bad(&e.to_string()))?;
        let hi = rational::parse(hi.trim()).map_err(|e| bad(&e.to_string()))?;
        let count: usize = count.trim().parse().map_err(|_| bad("count must be a positive integer"))?;
        match count {
            0 => Err(bad("count must be a positive integer")),
            1 => Ok(vec![lo]),
            _ => {
                let step = (&hi - &lo) / rational::int(count as i64 - 1);
                Ok((0..count).map(|i| &lo + &step * rational::int(i as i64)).collect())
            }
        }
    } else {
        let values: Vec<Rational> = text
            .split(',')
            .map(|v| rational::parse(v.trim()).map_err(|e| bad(&e.to_string())))
            .collect::<Result<_, _>>()?;
        if values.is_empty() {
            return Err(bad("empty grid"));
        }
        Ok(values)
    }
}

#[derive(Serialize)]
struct TradeoffRow {
    fixed: Number,
    free: Option<Number>,
    status: &'static str,
    certificate_verified: Option<bool>,
}

#[derive(Serialize)]
struct TradeoffReport {
    command: &'static str,
    params: ShapeOut,
    rate: Number,
    free: &'static str,
    fixed: &'static str,
    mode: &'static str,
    arithmetic: &'static str,
    rows: Vec<TradeoffRow>,
}

pub fn tradeoff(a: &TradeoffArgs) -> CmdResult {
    let rate = parse("rate", &a.rate)?;
    let grid = parse_grid(&a.grid)?;
    let free = FreeParam::from(a.free);
    let (free_name, fixed_name) = match free {
        FreeParam::Alpha => ("alpha", "beta"),
        FreeParam::Beta => ("beta", "alpha"),
    };
    let one = rational::int(1);
    let points: Vec<DssParams> = grid
        .iter()
        .map(|v| match free {
            FreeParam::Alpha => params(&a.shape, &one, v),
            FreeParam::Beta => params(&a.shape, v, &one),
        })
        .collect::<Result<_, _>>()?;
    let mode = a.solver.mode();
    let arithmetic = a.solver.arithmetic();
    let rows: Vec<TradeoffRow> = points
        .par_iter()
        .zip(grid.par_iter())
        .map(|(p, v)| -> Result<TradeoffRow, CliError> {
            let lp = lp::build_tradeoff_lp(p, &rate, free, mode)?;
            let (sol, verified) = solve(&lp, arithmetic);
            Ok(TradeoffRow {
                fixed: Number::exact(v),
                free: value_of(&sol),
                status: status_name(sol.status()),
                certificate_verified: verified,
            })
        })
        .collect::<Result<_, _>>()?;
    let all_verified = rows.iter().all(|r| r.certificate_verified != Some(false));
    let text = match a.format {
        Format::Json => json(&TradeoffReport {
            command: "tradeoff",
            params: ShapeOut::from(&a.shape),
            rate: Number::exact(&rate),
            free: free_name,
            fixed: fixed_name,
            mode: mode_name(mode),
            arithmetic: arithmetic_name(arithmetic),
            rows,
        }),
        Format::Csv => {
            let mut out = format!("{fixed_name},{fixed_name}_decimal,{free_name},{free_name}_decimal,status\n");
            for r in &rows {
                let (frac, dec) = match &r.free {
                    Some(v) => (v.fraction.clone().unwrap_or_default(), v.decimal.clone()),
                    None => (String::new(), String::new()),
                };
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    r.fixed.fraction.as_deref().unwrap_or_default(),
                    r.fixed.decimal,
                    frac,
                    dec,
                    r.status
                ));
            }
            out
        }
    };
    emit(&a.output, &text)?;
    Ok(all_verified)
}

#[derive(Serialize)]
struct SetList {
    count: usize,
    sets: Vec<String>,
}

impl SetList {
    fn new(sets: &[VarSet], universe: &Universe) -> Self {
        SetList {
            count: sets.len(),
            sets: sets.iter().map(|s| s.render(universe)).collect(),
        }
    }
}

#[derive(Serialize)]
struct DimsReport {
    command: &'static str,
    params: ShapeOut,
    variables: Vec<String>,
    unreduced_columns: u64,
    elemental_inequalities: String,
    maximal_irreducible: SetList,
    dimension_list: SetList,
    orbit_representatives: SetList,
    reduced_lp: Dimensions,
}

pub fn dims(a: &DimsArgs) -> CmdResult {
    let shape = DssParams::shape(a.shape.n, a.shape.k, a.shape.d)?;
    let universe = enumerate_universe(&shape)?;
    entset::check_capacity(&universe)?;
    let oracle = ClosureOracle::for_universe(&universe);
    let irreducible = reduce::irreducible_sets(&oracle, &universe)?;
    let table = reduce::full_orbit_table(&universe)?;
    let mut generators: Vec<VarSet> = table.reps().iter().filter_map(|r| table.generator(*r)).collect();
    generators.sort_by_key(|s| (s.len(), s.bits()));
    let lp = lp::build_rate_lp(&shape, Mode::Reduced)?;
    let report = DimsReport {
        command: "dims",
        params: ShapeOut::from(&a.shape),
        variables: (0..universe.len()).map(|p| universe.name(p).to_string()).collect(),
        unreduced_columns: (1u64 << universe.len()) - 1,
        elemental_inequalities: entset::elemental_count(universe.len()).to_string(),
        maximal_irreducible: SetList::new(&irreducible.maximal, &universe),
        dimension_list: SetList::new(&irreducible.dimension_list(), &universe),
        orbit_representatives: SetList::new(&generators, &universe),
        reduced_lp: Dimensions::from(&lp),
    };
    emit(&a.output, &json(&report))?;
    Ok(true)
}

#[derive(Serialize)]
struct SymmetrySummary {
    checks: usize,
    failures: usize,
    normalization_failures: usize,
}

#[derive(Serialize)]
struct RateCheck {
    rate_bits: f64,
    rate_bound: Number,
    within_bound: bool,
}

#[derive(Serialize)]
struct VerifyReport {
    command: &'static str,
    relabeling: TrialSummary,
    code_source: String,
    code: CodeReport,
    violations: Vec<String>,
    code_symmetry: Option<SymmetrySummary>,
    rate_check: Option<RateCheck>,
    passed: bool,
}

fn code_symmetry(code: &CodeTable) -> Result<SymmetrySummary, CliError> {
    let universe = enumerate_universe(&code.params)?;
    let n = code.params.n;
    let repair: Vec<VarId> = universe.repair_positions().map(|p| universe.var(p).clone()).collect();
    let deltas: Vec<Vec<VarId>> = std::iter::once(Vec::new()).chain(repair.into_iter().map(|v| vec![v])).collect();
    let group = NodePermutation::all(n);
    let mut summary = SymmetrySummary {
        checks: 0,
        failures: 0,
        normalization_failures: 0,
    };
    for mask in 0u32..(1 << n) {
        let gamma: Vec<u8> = (1..=n).filter(|i| mask & (1 << (i - 1)) != 0).collect();
        for delta in &deltas {
            for sigma in &group {
                let r = verify::check_code_symmetry(code, &gamma, delta, sigma)?;
                summary.checks += 1;
                summary.failures += usize::from(!r.symmetry.equal);
                summary.normalization_failures += usize::from(!r.normalization_ok);
            }
        }
    }
    Ok(summary)
}

pub fn verify(a: &VerifyArgs) -> CmdResult {
    if a.trials == 0 {
        eprintln!("warning: --trials 0 runs no randomized checks; the relabeling suite passes vacuously");
    }
    let relabeling = verify::relabeling_trials(3, a.seed, a.trials)?;
    let (code, code_source) = match &a.code {
        Some(path) => (CodeTable::load(path)?, path.display().to_string()),
        None => (CodeTable::from_json_str(PARITY_322_JSON)?, "built-in (3,2,2) parity code".to_string()),
    };
    let report = verify::check_code(&code)?;
    let violations: Vec<String> = report.violations.iter().map(|v| v.to_string()).collect();
    for v in &violations {
        eprintln!("violation: {v}");
    }
    let (symmetry, rate_check) = if report.admissible {
        let lp = lp::build_rate_lp(&code.params, Mode::Reduced)?;
        let bound = lp::solve_exact(&lp);
        let rate_check = bound.value.as_ref().map(|v| RateCheck {
            rate_bits: report.rate_bits,
            rate_bound: Number::exact(v),
            within_bound: report.rate_bits <= rational::to_f64(v) + verify::ENTROPY_TOL,
        });
        (Some(code_symmetry(&code)?), rate_check)
    } else {
        (None, None)
    };
    let passed = relabeling.failures == 0
        && report.admissible
        && symmetry.as_ref().is_some_and(|s| s.failures == 0 && s.normalization_failures == 0)
        && rate_check.as_ref().is_some_and(|r| r.within_bound);
    let out = VerifyReport {
        command: "verify",
        relabeling,
        code_source,
        code: report,
        violations,
        code_symmetry: symmetry,
        rate_check,
        passed,
    };
    emit(&a.output, &json(&out))?;
    Ok(passed)
}

pub fn export(a: &ExportArgs) -> CmdResult {
    let alpha = parse("alpha", &a.alpha)?;
    let beta = parse("beta", &a.beta)?;
    let p = params(&a.shape, &alpha, &beta)?;
    let mode = match a.mode {
        crate::ModeArg::Reduced => Mode::Reduced,
        crate::ModeArg::Unreduced => Mode::Unreduced,
    };
    let lp = match a.free {
        None => lp::build_rate_lp(&p, mode)?,
        Some(f) => lp::build_tradeoff_lp(&p, &parse("rate", &a.rate)?, f.into(), mode)?,
    };
    emit(&a.output, &export::to_lp_string(&lp))?;
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        let g = parse_grid("1/4, 1/2,1,2").unwrap();
        assert_eq!(g.len(), 4);
        assert_eq!(g[0], rational::frac(1, 4));
        let g = parse_grid("0:1:5").unwrap();
        assert_eq!(g, (0..5).map(|i| rational::frac(i, 4)).collect::<Vec<_>>());
        assert_eq!(parse_grid("3/10:3/10:1").unwrap(), vec![rational::frac(3, 10)]);
        assert!(parse_grid("0:1:0").is_err());
        assert!(parse_grid("1:2").is_err());
        assert!(parse_grid("x").is_err());
    }
}
