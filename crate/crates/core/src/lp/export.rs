//! CPLEX LP text format writer.

use std::fmt::Write as _;
use std::io;

use num_traits::{One, Signed, Zero};

use super::{LinProgram, Sense};
use crate::entset::{Column, Relation};
use crate::rational::{self, Rational};

/// LP-format identifier for a column. Brackets are not valid in names, so
/// `H{Y1,U1[2]}` becomes `H(Y1,U1(2))`.
pub fn lp_name(lp: &LinProgram, col: Column) -> String {
    match col {
        Column::Entropy(s) => {
            let inner: Vec<String> = s
                .positions()
                .map(|p| lp.universe.name(p).replace('[', "(").replace(']', ")").replace(['{', '}'], ""))
                .collect();
            format!("H({})", inner.join(","))
        }
        Column::Alpha => "alpha".into(),
        Column::Beta => "beta".into(),
    }
}

fn term(out: &mut String, first: bool, coef: &Rational, name: &str) {
    let sign = if coef.is_negative() { "-" } else if first { "" } else { "+" };
    let mag = coef.abs();
    if !first || coef.is_negative() {
        out.push(' ');
    }
    out.push_str(sign);
    if !first || coef.is_negative() {
        out.push(' ');
    }
    if !mag.is_one() {
        out.push_str(&rational::to_decimal_string(&mag));
        out.push(' ');
    }
    out.push_str(name);
}

fn expression(lp: &LinProgram, coeffs: impl Iterator<Item = (Column, Rational)>) -> String {
    let mut out = String::new();
    let mut first = true;
    for (c, v) in coeffs {
        if v.is_zero() {
            continue;
        }
        term(&mut out, first, &v, &lp_name(lp, c));
        first = false;
    }
    if first {
        out.push_str("0 ");
        out.push_str(&lp_name(lp, lp.columns[0]));
    }
    out
}

/// Renders the program. Coefficients are exact for integer-valued rows;
/// fractional capacities are written as 12-digit decimals.
pub fn to_lp_string(lp: &LinProgram) -> String {
    let mut out = String::new();
    writeln!(out, "\\ {}", lp.title).unwrap();
    writeln!(out, "\\ columns: {}  rows: {}", lp.columns.len(), lp.constraints.len()).unwrap();
    out.push_str(match lp.sense {
        Sense::Maximize => "Maximize\n",
        Sense::Minimize => "Minimize\n",
    });
    let obj = expression(lp, lp.objective.iter().map(|(c, v)| (*c, v.clone())));
    writeln!(out, " obj: {obj}").unwrap();
    out.push_str("Subject To\n");
    for (i, row) in lp.constraints.iter().enumerate() {
        let lhs = expression(lp, row.coeffs.iter().map(|(c, v)| (*c, v.clone())));
        let rel = match row.relation {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        };
        writeln!(
            out,
            " {}{}: {} {} {}",
            row.provenance.tag().replace('-', "_"),
            i + 1,
            lhs,
            rel,
            rational::to_decimal_string(&row.rhs)
        )
        .unwrap();
    }
    out.push_str("Bounds\n");
    for c in &lp.columns {
        writeln!(out, " {} >= 0", lp_name(lp, *c)).unwrap();
    }
    out.push_str("End\n");
    out
}

pub fn write_lp(lp: &LinProgram, mut w: impl io::Write) -> io::Result<()> {
    w.write_all(to_lp_string(lp).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::{build_rate_lp, build_tradeoff_lp, FreeParam, Mode};
    use crate::model::DssParams;
    use crate::rational::int;

    #[test]
    fn reduced_rate_program() {
        let p = DssParams::new(3, 2, 2, int(2), int(1)).unwrap();
        let lp = build_rate_lp(&p, Mode::Reduced).unwrap();
        let text = to_lp_string(&lp);
        assert!(text.starts_with("\\ rate bound (3,2,2)"));
        assert!(text.contains("Maximize\n obj: H("));
        assert!(text.ends_with("End\n"));
        let rows = text.lines().skip_while(|l| *l != "Subject To").skip(1).take_while(|l| *l != "Bounds");
        assert_eq!(rows.count(), lp.constraints.len());
        assert!(!text.contains('['));
        assert_eq!(text, to_lp_string(&lp));
    }

    #[test]
    fn tradeoff_program_has_parameter_column() {
        let p = DssParams::new(3, 2, 2, int(2), int(1)).unwrap();
        let lp = build_tradeoff_lp(&p, &int(1), FreeParam::Alpha, Mode::Reduced).unwrap();
        let text = to_lp_string(&lp);
        assert!(text.contains("Minimize\n obj: alpha\n"));
        assert!(text.contains(" alpha >= 0\n"));
        assert!(text.contains("- alpha <= 0"));
    }

    #[test]
    fn names() {
        let p = DssParams::shape(3, 2, 2).unwrap();
        let lp = build_rate_lp(&p, Mode::Unreduced).unwrap();
        let s = crate::entset::VarSet::from_positions([1, 6]);
        assert_eq!(lp_name(&lp, Column::Entropy(s)), "H(Y1,U1(2))");
    }
}
