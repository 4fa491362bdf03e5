//! Fixed-format MPS writer and a whitespace-tolerant reader.

use std::collections::HashMap;
use std::fmt::Write as _;

use num_traits::{One, Signed, Zero};

use super::{Constraint, MipModel, VarRole, Variable};
use crate::error::{Error, Result};
use crate::lp::Sense;
use crate::scalar::{format_sig12, parse_rational};
use crate::Rational;

const OBJ_ROW: &str = "OBJ";

fn sense_code(s: Sense) -> char {
    match s {
        Sense::Le => 'L',
        Sense::Ge => 'G',
        Sense::Eq => 'E',
    }
}

fn entry(out: &mut String, field1: &str, name: &str, row: &str, value: &Rational) {
    let _ = writeln!(out, " {field1:<2} {name:<8}  {row:<8}  {:>12}", format_sig12(value));
}

pub fn export_mps(model: &MipModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "NAME          {}", model.name);
    out.push_str("ROWS\n");
    let _ = writeln!(out, " N  {OBJ_ROW}");
    for c in &model.constraints {
        let _ = writeln!(out, " {}  {}", sense_code(c.sense), c.name);
    }

    // column-major view of the rows
    let mut columns: Vec<Vec<(usize, &Rational)>> = vec![Vec::new(); model.num_vars()];
    for (r, c) in model.constraints.iter().enumerate() {
        for (j, a) in &c.coeffs {
            if !a.is_zero() {
                columns[*j].push((r, a));
            }
        }
    }
    out.push_str("COLUMNS\n");
    let mut in_int = false;
    for (j, v) in model.variables.iter().enumerate() {
        if v.integer != in_int {
            let marker = if v.integer { "'INTORG'" } else { "'INTEND'" };
            let _ = writeln!(out, "    MARKER                 'MARKER'                 {marker}");
            in_int = v.integer;
        }
        let obj = &model.objective[j];
        if !obj.is_zero() || columns[j].is_empty() {
            entry(&mut out, "", &v.name, OBJ_ROW, obj);
        }
        for (r, a) in &columns[j] {
            entry(&mut out, "", &v.name, &model.constraints[*r].name, a);
        }
    }
    if in_int {
        let _ = writeln!(out, "    MARKER                 'MARKER'                 'INTEND'");
    }

    out.push_str("RHS\n");
    if !model.objective_constant.is_zero() {
        entry(&mut out, "", "RHS", OBJ_ROW, &-model.objective_constant.clone());
    }
    for c in &model.constraints {
        if !c.rhs.is_zero() {
            entry(&mut out, "", "RHS", &c.name, &c.rhs);
        }
    }

    if model.constraints.iter().any(|c| c.range.is_some()) {
        out.push_str("RANGES\n");
        for c in &model.constraints {
            if let Some(r) = &c.range {
                entry(&mut out, "", "RNG", &c.name, r);
            }
        }
    }

    out.push_str("BOUNDS\n");
    for v in &model.variables {
        let line = |out: &mut String, kind: &str, value: Option<&Rational>| match value {
            Some(val) => entry(out, kind, "BND", &v.name, val),
            None => {
                let _ = writeln!(out, " {kind:<2} BND       {}", v.name);
            }
        };
        if v.is_binary() {
            line(&mut out, "BV", None);
        } else if v.lower == v.upper {
            line(&mut out, "FX", Some(&v.lower));
        } else {
            if !v.lower.is_zero() || v.integer {
                line(&mut out, "LO", Some(&v.lower));
            }
            line(&mut out, "UP", Some(&v.upper));
        }
    }
    out.push_str("ENDATA\n");
    out
}

#[derive(PartialEq, Clone, Copy)]
enum Section {
    None,
    Rows,
    Columns,
    Rhs,
    Ranges,
    Bounds,
}

struct PendingColumn {
    lower: Option<Rational>,
    upper: Option<Rational>,
    integer: bool,
    objective: Rational,
}

/// Reads MPS text written by [`export_mps`] or by other tools using the same
/// subset (N/L/G/E rows, integer markers, RHS, RANGES, UP/LO/FX/BV/MI/PL/LI/UI bounds).
/// Variable roles are recovered from the column names.
pub fn parse_mps(text: &str) -> Result<MipModel> {
    let err = |line: usize, message: String| Error::Mps { line, message };
    let mut name = String::new();
    let mut section = Section::None;
    let mut rows: Vec<Constraint> = Vec::new();
    let mut row_index: HashMap<String, Option<usize>> = HashMap::new();
    let mut obj_name: Option<String> = None;
    let mut cols: Vec<(String, PendingColumn)> = Vec::new();
    let mut col_index: HashMap<String, usize> = HashMap::new();
    let mut integer_block = false;
    let mut objective_constant = Rational::zero();
    let mut ended = false;

    for (lineno, raw) in text.lines().enumerate() {
        let ln = lineno + 1;
        if raw.trim().is_empty() || raw.starts_with('*') {
            continue;
        }
        if !raw.starts_with(' ') && !raw.starts_with('\t') {
            let mut parts = raw.split_whitespace();
            let head = parts.next().unwrap_or_default();
            section = match head {
                "NAME" => {
                    name = parts.collect::<Vec<_>>().join(" ");
                    Section::None
                }
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "RANGES" => Section::Ranges,
                "BOUNDS" => Section::Bounds,
                "ENDATA" => {
                    ended = true;
                    break;
                }
                other => return Err(err(ln, format!("unknown section {other:?}"))),
            };
            continue;
        }
        let f: Vec<&str> = raw.split_whitespace().collect();
        let num = |s: &str| parse_rational(s).map_err(|_| err(ln, format!("bad number {s:?}")));
        match section {
            Section::None => return Err(err(ln, "data line outside a section".into())),
            Section::Rows => {
                if f.len() != 2 {
                    return Err(err(ln, "ROWS entries need a type and a name".into()));
                }
                let sense = match f[0] {
                    "N" => {
                        if obj_name.is_none() {
                            obj_name = Some(f[1].to_string());
                        }
                        row_index.insert(f[1].to_string(), None);
                        continue;
                    }
                    "L" => Sense::Le,
                    "G" => Sense::Ge,
                    "E" => Sense::Eq,
                    other => return Err(err(ln, format!("unknown row type {other:?}"))),
                };
                if row_index.contains_key(f[1]) {
                    return Err(err(ln, format!("duplicate row {:?}", f[1])));
                }
                row_index.insert(f[1].to_string(), Some(rows.len()));
                rows.push(Constraint::new(f[1], Vec::new(), sense, Rational::zero()));
            }
            Section::Columns => {
                if f.len() >= 3 && f[1] == "'MARKER'" {
                    integer_block = match f[2] {
                        "'INTORG'" => true,
                        "'INTEND'" => false,
                        other => return Err(err(ln, format!("unknown marker {other}"))),
                    };
                    continue;
                }
                if f.len() != 3 && f.len() != 5 {
                    return Err(err(ln, "COLUMNS entries need a column and one or two row/value pairs".into()));
                }
                let col = match col_index.get(f[0]) {
                    Some(&k) => k,
                    None => {
                        col_index.insert(f[0].to_string(), cols.len());
                        cols.push((
                            f[0].to_string(),
                            PendingColumn {
                                lower: None,
                                upper: None,
                                integer: integer_block,
                                objective: Rational::zero(),
                            },
                        ));
                        cols.len() - 1
                    }
                };
                for pair in f[1..].chunks(2) {
                    let value = num(pair[1])?;
                    match row_index.get(pair[0]) {
                        Some(None) => {
                            if obj_name.as_deref() == Some(pair[0]) {
                                cols[col].1.objective += value;
                            }
                        }
                        Some(Some(r)) => {
                            if !value.is_zero() {
                                rows[*r].coeffs.push((col, value));
                            }
                        }
                        None => return Err(err(ln, format!("unknown row {:?}", pair[0]))),
                    }
                }
            }
            Section::Rhs | Section::Ranges => {
                let pairs = match f.len() {
                    3 | 5 => &f[1..],
                    2 | 4 => &f[..],
                    _ => return Err(err(ln, "malformed RHS/RANGES entry".into())),
                };
                for pair in pairs.chunks(2) {
                    let value = num(pair[1])?;
                    match row_index.get(pair[0]) {
                        Some(None) => {
                            if section == Section::Rhs && obj_name.as_deref() == Some(pair[0]) {
                                objective_constant = -value;
                            }
                        }
                        Some(Some(r)) => {
                            if section == Section::Rhs {
                                rows[*r].rhs = value;
                            } else {
                                rows[*r].range = Some(value);
                            }
                        }
                        None => return Err(err(ln, format!("unknown row {:?}", pair[0]))),
                    }
                }
            }
            Section::Bounds => {
                if f.len() < 3 {
                    return Err(err(ln, "malformed BOUNDS entry".into()));
                }
                let kind = f[0];
                let no_value = matches!(kind, "BV" | "MI" | "PL" | "FR");
                let (col_name, value) = if no_value {
                    (f[f.len() - 1], None)
                } else {
                    if f.len() != 4 {
                        return Err(err(ln, format!("{kind} bound needs a value")));
                    }
                    (f[2], Some(num(f[3])?))
                };
                let &k = col_index
                    .get(col_name)
                    .ok_or_else(|| err(ln, format!("bound on unknown column {col_name:?}")))?;
                let c = &mut cols[k].1;
                match kind {
                    "UP" | "UI" => {
                        c.upper = value;
                        c.integer |= kind == "UI";
                    }
                    "LO" | "LI" => {
                        c.lower = value;
                        c.integer |= kind == "LI";
                    }
                    "FX" => {
                        c.lower = value.clone();
                        c.upper = value;
                    }
                    "BV" => {
                        c.lower = Some(Rational::zero());
                        c.upper = Some(Rational::one());
                        c.integer = true;
                    }
                    "MI" | "PL" | "FR" => {
                        return Err(err(ln, format!("{kind} bounds are not supported; every variable must be bounded")))
                    }
                    other => return Err(err(ln, format!("unknown bound type {other:?}"))),
                }
            }
        }
    }
    if !ended {
        return Err(err(text.lines().count(), "missing ENDATA".into()));
    }

    let mut variables = Vec::with_capacity(cols.len());
    let mut objective = Vec::with_capacity(cols.len());
    for (col_name, c) in cols {
        let role = VarRole::from_name(&col_name)
            .ok_or_else(|| Error::MalformedModel(format!("column {col_name:?} does not name a known variable role")))?;
        let lower = c.lower.unwrap_or_else(Rational::zero);
        let upper = c
            .upper
            .ok_or_else(|| Error::MalformedModel(format!("column {col_name:?} has no upper bound")))?;
        if upper.is_negative() && lower.is_zero() && !c.integer {
            return Err(Error::MalformedModel(format!("column {col_name:?} has a negative upper bound and default lower bound")));
        }
        variables.push(Variable {
            name: col_name,
            role,
            lower,
            upper,
            integer: c.integer,
        });
        objective.push(c.objective);
    }
    let model = MipModel {
        name,
        variables,
        constraints: rows,
        objective,
        objective_constant,
    };
    model.validate()?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fairness::FairnessNotion;
    use crate::mip::{build, Problem, SideConstraints};
    use crate::model::Dataset;
    use crate::welfare::WelfareParams;

    fn tiny() -> MipModel {
        let ds = Dataset::from_integers(&[vec![1, 1], vec![1, 0]], vec![1, -1], vec![0, 1]).unwrap();
        build(&Problem::new(ds, WelfareParams::unit(2), FairnessNotion::Omr).with_uniform_omega(2)).unwrap()
    }

    #[test]
    fn round_trip_preserves_structure() {
        let m = tiny();
        let text = export_mps(&m);
        let back = parse_mps(&text).unwrap();
        assert_eq!(back.variables, m.variables);
        assert_eq!(back.constraints, m.constraints);
        assert_eq!(back.objective, m.objective);
        assert_eq!(export_mps(&back), text);
    }

    #[test]
    fn ranges_only_when_needed() {
        let m = tiny();
        assert!(!export_mps(&m).contains("RANGES"));
        let ds = Dataset::from_integers(&[vec![1, 1], vec![1, 0]], vec![1, -1], vec![0, 1]).unwrap();
        let mut side = SideConstraints::default();
        side.model_size = Some((Some(0), Some(1)));
        let m = build(&Problem::new(ds, WelfareParams::unit(2), FairnessNotion::Omr).with_side(side)).unwrap();
        let text = export_mps(&m);
        assert!(text.contains("RANGES\n    RNG       SIZE"));
        assert_eq!(parse_mps(&text).unwrap().constraints, m.constraints);
    }

    #[test]
    fn reader_errors() {
        assert!(matches!(parse_mps("NAME x\nROWS\n N OBJ\n"), Err(Error::Mps { .. })));
        assert!(matches!(parse_mps("NAME x\nROWS\n Q OBJ\nENDATA\n"), Err(Error::Mps { line: 3, .. })));
        let bad_col = "NAME x\nROWS\n N OBJ\nCOLUMNS\n    foo OBJ 1\nBOUNDS\n UP BND foo 1\nENDATA\n";
        assert!(matches!(parse_mps(bad_col), Err(Error::MalformedModel(_))));
    }

    #[test]
    fn two_pair_lines_are_accepted() {
        let text = "NAME t\nROWS\n N OBJ\n L R1\n G R2\nCOLUMNS\n    MARKER 'MARKER' 'INTORG'\n    w0 OBJ 1 R1 2\n    w0 R2 1\n    MARKER 'MARKER' 'INTEND'\nRHS\n    RHS R1 4 R2 1\nBOUNDS\n LO BND w0 -3\n UP BND w0 3\nENDATA\n";
        let m = parse_mps(text).unwrap();
        assert_eq!(m.constraints.len(), 2);
        assert_eq!(m.constraints[0].rhs, crate::scalar::ratio(4, 1));
        assert!(m.variables[0].integer);
    }
}
