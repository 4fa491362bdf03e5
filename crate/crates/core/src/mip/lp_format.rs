use std::fmt::Write as _;

use num_traits::{Signed, Zero};

use super::MipModel;
use crate::lp::Sense;
use crate::scalar::format_sig12;
use crate::Rational;

fn term(out: &mut String, first: bool, coef: &Rational, name: &str) {
    let sign = if coef.is_negative() { "-" } else if first { "" } else { "+" };
    let mag = coef.abs();
    if mag == Rational::from_integer(1.into()) {
        let _ = write!(out, " {sign} {name}");
    } else {
        let _ = write!(out, " {sign} {} {name}", format_sig12(&mag));
    }
}

/// CPLEX-LP-flavoured dump meant for reading, not for interchange.
pub fn export_lp(model: &MipModel) -> String {
    let mut out = String::from("\\ ");
    out.push_str(&model.name);
    out.push_str("\nMinimize\n obj:");
    let mut first = true;
    for (v, c) in model.variables.iter().zip(&model.objective) {
        if !c.is_zero() {
            term(&mut out, first, c, &v.name);
            first = false;
        }
    }
    if first {
        out.push_str(" 0");
    }
    out.push_str("\nSubject To\n");
    for c in &model.constraints {
        let _ = write!(out, " {}:", c.name);
        let mut first = true;
        for (j, a) in &c.coeffs {
            term(&mut out, first, a, &model.variables[*j].name);
            first = false;
        }
        match c.bounds() {
            (Some(lo), Some(hi)) if lo == hi => {
                let _ = writeln!(out, " = {}", format_sig12(&lo));
            }
            (Some(lo), Some(hi)) => {
                let _ = writeln!(out, " >= {}  \\ at most {}", format_sig12(&lo), format_sig12(&hi));
            }
            _ => {
                let op = match c.sense {
                    Sense::Le => "<=",
                    Sense::Ge => ">=",
                    Sense::Eq => "=",
                };
                let _ = writeln!(out, " {op} {}", format_sig12(&c.rhs));
            }
        }
    }
    out.push_str("Bounds\n");
    for v in &model.variables {
        let _ = writeln!(out, " {} <= {} <= {}", format_sig12(&v.lower), v.name, format_sig12(&v.upper));
    }
    let ints: Vec<&str> = model.variables.iter().filter(|v| v.integer).map(|v| v.name.as_str()).collect();
    if !ints.is_empty() {
        out.push_str("General\n");
        for chunk in ints.chunks(10) {
            let _ = writeln!(out, " {}", chunk.join(" "));
        }
    }
    out.push_str("End\n");
    out
}
