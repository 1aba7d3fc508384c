//! Deterministic LP and MPS text emitters.
//!
//! Two emissions of the same model are byte-identical: variables, constraints
//! and objective terms are written in registration order, and numbers go
//! through a single formatter.

use super::{MilpModel, Sense, VarKind, VarRef};
use std::collections::HashSet;
use std::fmt::Write as _;

const LP_LINE_WIDTH: usize = 200;

/// Render with up to 12 significant digits, plain notation for magnitudes in
/// `[1e-4, 1e9)`, exponent notation outside that range.
pub(crate) fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let ax = x.abs();
    if (1e-4..1e9).contains(&ax) {
        let digits_before = ax.log10().floor() as i32 + 1;
        let decimals = (12 - digits_before).max(0) as usize;
        let s = format!("{:.*}", decimals, x);
        let trimmed = if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.')
        } else {
            &s
        };
        if trimmed == "-0" {
            "0".to_string()
        } else {
            trimmed.to_string()
        }
    } else {
        format!("{:e}", x)
    }
}

/// Append `terms` as ` + c name` / ` - c name` chunks, wrapping long lines.
fn push_terms(out: &mut String, terms: &[(VarRef, f64)], model: &MilpModel, mut line_len: usize) {
    let mut first = true;
    for &(v, c) in terms {
        let name = &model.var(v).name;
        let mag = c.abs();
        let chunk = if first {
            let sign = if c < 0.0 { "- " } else { "" };
            if mag == 1.0 {
                format!("{sign}{name}")
            } else {
                format!("{sign}{} {name}", fmt_num(mag))
            }
        } else {
            let sign = if c < 0.0 { "-" } else { "+" };
            if mag == 1.0 {
                format!(" {sign} {name}")
            } else {
                format!(" {sign} {} {name}", fmt_num(mag))
            }
        };
        if line_len + chunk.len() > LP_LINE_WIDTH {
            out.push_str("\n   ");
            line_len = 3;
        }
        out.push_str(&chunk);
        line_len += chunk.len();
        first = false;
    }
    if first {
        out.push('0');
    }
}

/// Emit the model in LP text format.
pub fn emit_lp(model: &MilpModel) -> String {
    let mut out = String::new();
    out.push_str("Maximize\n obj: ");
    push_terms(&mut out, model.objective(), model, " obj: ".len());
    out.push_str("\nSubject To\n");
    for c in model.constraints() {
        let head = format!(" {}: ", c.name);
        out.push_str(&head);
        push_terms(&mut out, &c.terms, model, head.len());
        let op = match c.sense {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        };
        let _ = write!(out, " {} {}\n", op, fmt_num(c.rhs));
    }
    let mut bounds = String::new();
    for (_, def) in model.vars() {
        let default = match def.kind {
            VarKind::Binary => (0.0, 1.0),
            VarKind::Continuous => (0.0, f64::INFINITY),
        };
        if (def.lower, def.upper) == default {
            continue;
        }
        if def.lower == f64::NEG_INFINITY && def.upper == f64::INFINITY {
            let _ = writeln!(bounds, " {} free", def.name);
        } else if def.lower == def.upper {
            let _ = writeln!(bounds, " {} = {}", def.name, fmt_num(def.lower));
        } else if def.lower == f64::NEG_INFINITY {
            let _ = writeln!(bounds, " -inf <= {} <= {}", def.name, fmt_num(def.upper));
        } else if def.upper == f64::INFINITY {
            let _ = writeln!(bounds, " {} >= {}", def.name, fmt_num(def.lower));
        } else {
            let _ = writeln!(
                bounds,
                " {} <= {} <= {}",
                fmt_num(def.lower),
                def.name,
                fmt_num(def.upper)
            );
        }
    }
    if !bounds.is_empty() {
        out.push_str("Bounds\n");
        out.push_str(&bounds);
    }
    let binaries: Vec<&str> = model
        .vars()
        .filter(|(_, d)| d.kind == VarKind::Binary)
        .map(|(_, d)| d.name.as_str())
        .collect();
    if !binaries.is_empty() {
        out.push_str("Binaries\n");
        for name in binaries {
            let _ = writeln!(out, " {name}");
        }
    }
    out.push_str("End\n");
    out
}

/// Shorten names to the 8 characters fixed-field MPS allows, keeping them
/// unique by replacing the tail with a counter on collision.
fn shorten_names(names: Vec<String>) -> Vec<String> {
    let mut used: HashSet<String> = HashSet::new();
    let mut out = Vec::with_capacity(names.len());
    for name in names {
        let mut candidate: String = name.chars().take(8).collect();
        let mut counter = 1usize;
        while !used.insert(candidate.clone()) {
            let suffix = counter.to_string();
            let keep = 8usize.saturating_sub(suffix.len());
            candidate = format!("{}{}", name.chars().take(keep).collect::<String>(), suffix);
            counter += 1;
        }
        out.push(candidate);
    }
    out
}

/// Emit fixed-field MPS together with the mapping from emitted column names
/// back to model variables, needed to decode solutions keyed by MPS names.
pub fn emit_mps_with_names(model: &MilpModel) -> (String, Vec<(String, VarRef)>) {
    let row_names = shorten_names(
        std::iter::once("obj".to_string())
            .chain(model.constraints().iter().map(|c| c.name.clone()))
            .collect(),
    );
    let col_names = shorten_names(model.vars().map(|(_, d)| d.name.clone()).collect());

    let mut out = String::new();
    out.push_str("NAME          MODEL\n");
    out.push_str("ROWS\n");
    let _ = writeln!(out, " N  {}", row_names[0]);
    for (c, rname) in model.constraints().iter().zip(row_names.iter().skip(1)) {
        let tag = match c.sense {
            Sense::Le => 'L',
            Sense::Ge => 'G',
            Sense::Eq => 'E',
        };
        let _ = writeln!(out, " {}  {}", tag, rname);
    }

    // Per-column entries: objective first, then constraint rows in order.
    let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); model.num_vars()];
    for &(v, c) in model.objective() {
        columns[v.index()].push((0, c));
    }
    for (ri, c) in model.constraints().iter().enumerate() {
        for &(v, coef) in &c.terms {
            columns[v.index()].push((ri + 1, coef));
        }
    }

    out.push_str("COLUMNS\n");
    let mut in_integer = false;
    for (var, def) in model.vars() {
        let is_int = def.kind == VarKind::Binary;
        if is_int != in_integer {
            let marker = if is_int { "'INTORG'" } else { "'INTEND'" };
            let _ = writeln!(
                out,
                "    MARKER                 'MARKER'                 {marker}"
            );
            in_integer = is_int;
        }
        for &(row, coef) in &columns[var.index()] {
            let _ = writeln!(
                out,
                "    {:<10}{:<10}{}",
                col_names[var.index()],
                row_names[row],
                fmt_num(coef)
            );
        }
    }
    if in_integer {
        out.push_str("    MARKER                 'MARKER'                 'INTEND'\n");
    }

    out.push_str("RHS\n");
    for (c, rname) in model.constraints().iter().zip(row_names.iter().skip(1)) {
        if c.rhs != 0.0 {
            let _ = writeln!(out, "    RHS       {:<10}{}", rname, fmt_num(c.rhs));
        }
    }

    out.push_str("BOUNDS\n");
    for (var, def) in model.vars() {
        let name = &col_names[var.index()];
        match def.kind {
            VarKind::Binary => {
                if def.lower == def.upper {
                    let _ = writeln!(out, " FX BND       {:<10}{}", name, fmt_num(def.lower));
                } else if (def.lower, def.upper) == (0.0, 1.0) {
                    let _ = writeln!(out, " BV BND       {:<10}", name);
                } else {
                    let _ = writeln!(out, " LO BND       {:<10}{}", name, fmt_num(def.lower));
                    let _ = writeln!(out, " UP BND       {:<10}{}", name, fmt_num(def.upper));
                }
            }
            VarKind::Continuous => {
                if def.lower == f64::NEG_INFINITY && def.upper == f64::INFINITY {
                    let _ = writeln!(out, " FR BND       {:<10}", name);
                } else if def.lower == def.upper {
                    let _ = writeln!(out, " FX BND       {:<10}{}", name, fmt_num(def.lower));
                } else {
                    if def.lower == f64::NEG_INFINITY {
                        let _ = writeln!(out, " MI BND       {:<10}", name);
                    } else if def.lower != 0.0 {
                        let _ =
                            writeln!(out, " LO BND       {:<10}{}", name, fmt_num(def.lower));
                    }
                    if def.upper != f64::INFINITY {
                        let _ =
                            writeln!(out, " UP BND       {:<10}{}", name, fmt_num(def.upper));
                    }
                }
            }
        }
    }
    out.push_str("ENDATA\n");

    let map = model
        .vars()
        .map(|(v, _)| (col_names[v.index()].clone(), v))
        .collect();
    (out, map)
}

/// Emit fixed-field MPS text.
pub fn emit_mps(model: &MilpModel) -> String {
    emit_mps_with_names(model).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mip::MilpModel;

    #[test]
    fn number_formatting() {
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(1.0), "1");
        assert_eq!(fmt_num(-1.2), "-1.2");
        assert_eq!(fmt_num(0.1), "0.1");
        assert_eq!(fmt_num(1000.0), "1000");
        assert_eq!(fmt_num(0.30000000000000004), "0.3");
        assert_eq!(fmt_num(123456789.5), "123456789.5");
        assert_eq!(fmt_num(1.0000000000001), "1");
        assert!(fmt_num(1e-9).contains('e'));
    }

    fn one_var_model() -> MilpModel {
        let mut m = MilpModel::new();
        let x = m.add_continuous("x", 0.0, f64::INFINITY).unwrap();
        m.set_objective(vec![(x, 1.0)]);
        m.add_constraint("c1", vec![(x, 1.0)], Sense::Le, 5.0);
        m
    }

    #[test]
    fn lp_one_variable() {
        let text = emit_lp(&one_var_model());
        assert!(text.contains("Maximize"));
        assert!(text.contains(" obj: x"));
        assert!(text.contains(" c1: x <= 5"));
        assert!(text.ends_with("End\n"));
        assert!(!text.contains("Binaries"));
    }

    #[test]
    fn lp_binary_section_and_determinism() {
        let mut m = one_var_model();
        m.add_binary("b").unwrap();
        let text = emit_lp(&m);
        assert!(text.contains("Binaries\n b\n"));
        assert_eq!(text, emit_lp(&m));
    }

    #[test]
    fn mps_sections_in_order() {
        let m = one_var_model();
        let text = emit_mps(&m);
        let rows = text.find("ROWS").unwrap();
        let cols = text.find("COLUMNS").unwrap();
        let end = text.find("ENDATA").unwrap();
        assert!(rows < cols && cols < end);
        assert_eq!(text, emit_mps(&m));
    }

    #[test]
    fn mps_integer_markers() {
        let mut m = one_var_model();
        m.add_binary("b").unwrap();
        let text = emit_mps(&m);
        let org = text.find("'INTORG'").unwrap();
        let endm = text.find("'INTEND'").unwrap();
        assert!(org < endm);
        assert!(text.contains(" BV BND"));
    }

    #[test]
    fn mps_name_shortening_unique() {
        let mut m = MilpModel::new();
        let a = m
            .add_continuous("very_long_variable_name_one", 0.0, 1.0)
            .unwrap();
        let b = m
            .add_continuous("very_long_variable_name_two", 0.0, 1.0)
            .unwrap();
        m.set_objective(vec![(a, 1.0), (b, 1.0)]);
        let (_, map) = emit_mps_with_names(&m);
        assert_eq!(map.len(), 2);
        assert_ne!(map[0].0, map[1].0);
        assert!(map.iter().all(|(n, _)| n.len() <= 8));
    }
}
