//! CPLEX LP text export.

use std::collections::HashSet;
use std::fmt::Write;

use crate::milp::{MilpModel, ObjSense, Objective, VarKind};

/// Formats like C's `%.17g`.
pub fn fmt_g17(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.16e}", v);
    let (mant, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if (-4..17).contains(&exp) {
        let decimals = (16 - exp).max(0) as usize;
        let s = format!("{:.*}", decimals, v);
        trim_zeros(&s)
    } else {
        let m = trim_zeros(mant);
        format!("{}e{}{:02}", m, if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

fn legal(c: char) -> bool {
    c.is_ascii_alphanumeric() || "_.()".contains(c)
}

/// LP-file names for the model's variables: brackets become underscores,
/// anything else outside the safe set is replaced, collisions get the
/// variable index appended.
pub fn lp_names(model: &MilpModel) -> Vec<String> {
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(model.num_vars());
    for (j, v) in model.vars().iter().enumerate() {
        let mut s: String = v.name.replace("][", "_").replace('[', "_").replace(']', "");
        s = s.chars().map(|c| if legal(c) { c } else { '_' }).collect();
        let first = s.chars().next();
        if first.map_or(true, |c| {
            c.is_ascii_digit() || c == '.' || c == 'e' || c == 'E'
        }) {
            s = format!("v_{s}");
        }
        if !seen.insert(s.clone()) {
            s = format!("{s}_{j}");
            seen.insert(s.clone());
        }
        out.push(s);
    }
    out
}

fn write_expr(out: &mut String, terms: &[(crate::milp::VarId, f64)], names: &[String]) {
    for (k, (v, a)) in terms.iter().enumerate() {
        let (sign, mag) = if *a < 0.0 { ("-", -a) } else { ("+", *a) };
        if k == 0 {
            if sign == "-" {
                out.push_str(" -");
            }
        } else {
            let _ = write!(out, " {sign}");
        }
        if mag == 1.0 {
            let _ = write!(out, " {}", names[v.0]);
        } else {
            let _ = write!(out, " {} {}", fmt_g17(mag), names[v.0]);
        }
    }
}

/// Writes the model (with `objective`, or the model's own) as CPLEX LP text.
pub fn export_lp_text(model: &MilpModel, objective: Option<&Objective>) -> String {
    let names = lp_names(model);
    let objective = objective.or(model.objective());
    let mut out = String::from("\\ polyreach model\n");
    let max = objective.map_or(false, |o| o.sense == ObjSense::Maximize);
    out.push_str(if max { "Maximize\n" } else { "Minimize\n" });
    out.push_str(" obj:");
    if let Some(o) = objective {
        let terms: Vec<_> = o.terms.iter().copied().filter(|(_, c)| *c != 0.0).collect();
        write_expr(&mut out, &terms, &names);
    }
    out.push('\n');
    out.push_str("Subject To\n");
    for (i, r) in model.rows().iter().enumerate() {
        let _ = write!(out, " c{}:", i + 1);
        if r.terms.is_empty() {
            match names.first() {
                Some(n) => {
                    let _ = write!(out, " 0 {n}");
                }
                None => continue,
            }
        }
        write_expr(&mut out, &r.terms, &names);
        let _ = writeln!(out, " {} {}", r.sense.symbol(), fmt_g17(r.rhs));
    }
    if model.num_vars() > 0 {
        out.push_str("Bounds\n");
        for (v, n) in model.vars().iter().zip(&names) {
            if v.lo == v.hi {
                let _ = writeln!(out, " {} = {}", n, fmt_g17(v.lo));
            } else if v.lo == f64::NEG_INFINITY && v.hi == f64::INFINITY {
                let _ = writeln!(out, " {n} free");
            } else if v.hi == f64::INFINITY {
                let _ = writeln!(out, " {} >= {}", n, fmt_g17(v.lo));
            } else {
                let _ = writeln!(out, " {} <= {} <= {}", fmt_g17(v.lo), n, fmt_g17(v.hi));
            }
        }
    }
    if model.num_binaries() > 0 {
        out.push_str("Binaries\n");
        for (v, n) in model.vars().iter().zip(&names) {
            if v.kind == VarKind::Binary {
                let _ = writeln!(out, " {n}");
            }
        }
    }
    out.push_str("End\n");
    out
}
