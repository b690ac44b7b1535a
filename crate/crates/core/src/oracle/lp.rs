//! Subproblems in the CPLEX LP file dialect.
//!
//! Variables are named `x1..xN` (1-based). A max-plus objective becomes
//! `minimize aux + G·x` with rows `aux - A·x >= a0` and `aux - B·x >= b0`.
//! Objective constants are not part of every LP reader's grammar, so they are
//! written as a `\ constant:` comment that [`objective_constant`] reads back.

use std::fmt::Write;

use super::{LinearForm, ObjectiveFn, Subproblem};

/// Name of the auxiliary continuous variable of max-plus objectives.
pub const AUX_VAR: &str = "aux";

fn terms(out: &mut String, coeffs: &[i64]) -> bool {
    let mut any = false;
    for (i, &c) in coeffs.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let sign = if c < 0 { '-' } else { '+' };
        if any || c < 0 {
            let _ = write!(out, " {sign} ");
        } else {
            out.push(' ');
        }
        if c.abs() != 1 {
            let _ = write!(out, "{} ", c.abs());
        }
        let _ = write!(out, "x{}", i + 1);
        any = true;
    }
    any
}

fn aux_row(out: &mut String, name: &str, form: &LinearForm) {
    let _ = write!(out, " {name}: {AUX_VAR}");
    let negated: Vec<i64> = form.coeffs.iter().map(|c| -c).collect();
    let mut body = String::new();
    if terms(&mut body, &negated) {
        if !body.trim_start().starts_with(['+', '-']) {
            out.push_str(" +");
        }
        out.push_str(&body);
    }
    let _ = writeln!(out, " >= {}", form.constant);
}

pub fn export_lp(sub: &Subproblem) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "\\ binary subproblem: {} variables, scale {}", sub.n_vars, sub.scale);
    let constant = match &sub.objective {
        ObjectiveFn::Linear(f) => f.constant,
        ObjectiveFn::MaxPlus { augment, .. } => augment.constant,
    };
    let _ = writeln!(out, "\\ constant: {constant}");
    out.push_str("Minimize\n obj:");
    match &sub.objective {
        ObjectiveFn::Linear(f) => {
            if !terms(&mut out, &f.coeffs) {
                out.push_str(" 0 x1");
            }
        }
        ObjectiveFn::MaxPlus { augment, .. } => {
            let _ = write!(out, " {AUX_VAR}");
            let mut body = String::new();
            if terms(&mut body, &augment.coeffs) {
                if !body.trim_start().starts_with(['+', '-']) {
                    out.push_str(" +");
                }
                out.push_str(&body);
            }
        }
    }
    out.push_str("\nSubject To\n");
    for (k, &(a, b)) in sub.implications.iter().enumerate() {
        let _ = writeln!(out, " imp{}: x{} - x{} >= 0", k + 1, a + 1, b + 1);
    }
    for (k, c) in sub.constraints.iter().enumerate() {
        let _ = write!(out, " row{}:", k + 1);
        if !terms(&mut out, &c.coeffs) {
            out.push_str(" 0 x1");
        }
        let _ = writeln!(out, " <= {}", c.bound);
    }
    if let ObjectiveFn::MaxPlus { a, b, .. } = &sub.objective {
        aux_row(&mut out, "maxa", a);
        aux_row(&mut out, "maxb", b);
        let _ = writeln!(out, "Bounds\n {AUX_VAR} free");
    }
    out.push_str("Binaries\n");
    for i in 0..sub.n_vars {
        let _ = writeln!(out, " x{}", i + 1);
    }
    out.push_str("End\n");
    out
}

/// Reads back the objective constant recorded by [`export_lp`].
pub fn objective_constant(lp: &str) -> Option<i64> {
    lp.lines().find_map(|l| l.strip_prefix("\\ constant: ")).and_then(|v| v.trim().parse().ok())
}
