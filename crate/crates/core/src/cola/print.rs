use std::fmt::Write as _;

use super::ast::*;

/// Renders a constitution in canonical CoLa syntax. Parsing the output
/// yields a structurally equal AST.
pub fn print(c: &Constitution) -> String {
    let mut out = String::new();
    if let Some(sm) = &c.star_map {
        writeln!(out, "star_map({}).", quote(sm)).unwrap();
    }
    for g in &c.parameter_groups {
        writeln!(out, "parameter {{{}}}.", g.options.join(", ")).unwrap();
    }
    for f in &c.continuous_facts {
        match f.distribution {
            Distribution::Normal { mean, std } => {
                writeln!(out, "{} ~ normal({}, {}).", f.name, num(mean), num(std)).unwrap()
            }
        }
    }
    for r in &c.rules {
        let field = if r.is_field { "field " } else { "" };
        writeln!(out, "{field}{} if {}.", r.head, expr(&r.body)).unwrap();
    }
    for o in &c.objectives {
        let scope = match o.scope {
            Scope::Field => "field",
            Scope::Path => "path",
        };
        match &o.source {
            ObjectiveSource::Rule => writeln!(out, "{scope} objective {}.", o.name),
            ObjectiveSource::Body(e) => {
                writeln!(out, "{scope} objective {} if {}.", o.name, expr(e))
            }
            ObjectiveSource::Model(m) => {
                writeln!(out, "{scope} objective {}({}).", o.name, quote(m))
            }
        }
        .unwrap();
    }
    out
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

fn num(v: f64) -> String {
    format!("{v:?}")
}

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Or(_) => 0,
        Expr::And(_) => 1,
        Expr::Not(_) => 2,
        _ => 3,
    }
}

fn child(e: &Expr, min: u8) -> String {
    let s = expr(e);
    if prec(e) < min {
        format!("({s})")
    } else {
        s
    }
}

/// Renders a body with the minimal parentheses.
pub fn expr(e: &Expr) -> String {
    match e {
        Expr::Or(v) => v
            .iter()
            .map(|c| child(c, 1))
            .collect::<Vec<_>>()
            .join(" or "),
        Expr::And(v) => v
            .iter()
            .map(|c| child(c, 2))
            .collect::<Vec<_>>()
            .join(" and "),
        Expr::Not(c) => format!("not {}", child(c, 2)),
        Expr::Atom(a) => a.clone(),
        Expr::Over(t) => format!("over({t})"),
        Expr::BareDistance(t) => format!("distance({t})"),
        Expr::Compare { term, op, value } => format!("{term} {} {}", op.symbol(), num(*value)),
    }
}
