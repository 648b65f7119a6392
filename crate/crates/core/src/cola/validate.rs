use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::ast::*;
use crate::starmap::{RelationKind, StarMap};

#[derive(Debug, Clone, PartialEq)]
pub enum Diagnostic {
    /// Rules that depend on themselves, listed along the cycle.
    Cycle(Vec<String>),
    MissingLayer {
        kind: RelationKind,
        tag: String,
    },
    /// An atom that names no rule head or parameter option.
    UnresolvedAtom {
        atom: String,
        context: String,
    },
    /// A comparison term that names no continuous fact.
    UndefinedTerm {
        name: String,
        context: String,
    },
    /// Continuous fact used as a boolean atom.
    FactAsAtom {
        name: String,
        context: String,
    },
    DuplicateOption(String),
    /// A name used in more than one category (head, option, fact).
    NameClash(String),
    /// `distance(tag)` without a comparison.
    BareDistance {
        tag: String,
        context: String,
    },
    /// Non-`field` rule that depends on spatial atoms.
    SpatialNonField(String),
    /// Path objectives must name a model; logic objectives must be fields.
    ObjectiveScope(String),
    NoObjectives,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::Cycle(names) => write!(f, "cyclic rule dependency: {}", names.join(" -> ")),
            Diagnostic::MissingLayer { kind, tag } => {
                write!(f, "relation {kind}({tag}) has no layer in the relational map")
            }
            Diagnostic::UnresolvedAtom { atom, context } => {
                write!(f, "`{atom}` in `{context}` is not a rule head or parameter option")
            }
            Diagnostic::UndefinedTerm { name, context } => {
                write!(f, "comparison on `{name}` in `{context}`, which is not a continuous fact")
            }
            Diagnostic::FactAsAtom { name, context } => {
                write!(f, "continuous fact `{name}` used as a truth value in `{context}`")
            }
            Diagnostic::DuplicateOption(o) => write!(f, "parameter option `{o}` appears in several groups"),
            Diagnostic::NameClash(n) => write!(f, "`{n}` is declared in more than one role"),
            Diagnostic::BareDistance { tag, context } => {
                write!(f, "distance({tag}) in `{context}` must be compared against a number")
            }
            Diagnostic::SpatialNonField(h) => {
                write!(f, "rule `{h}` depends on spatial relations but is not declared `field`")
            }
            Diagnostic::ObjectiveScope(o) => write!(
                f,
                "objective `{o}`: path objectives need a model reference and logic objectives must be field-scoped"
            ),
            Diagnostic::NoObjectives => f.write_str("no objective declared"),
        }
    }
}

/// Static checks of a constitution against a relational map. An empty
/// result means the program can be grounded.
pub fn validate(c: &Constitution, sm: &StarMap) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    if c.objectives.is_empty() {
        out.push(Diagnostic::NoObjectives);
    }

    // parameter options
    let mut seen_options = BTreeSet::new();
    for o in c.parameter_groups.iter().flat_map(|g| &g.options) {
        if !seen_options.insert(o.as_str()) {
            out.push(Diagnostic::DuplicateOption(o.clone()));
        }
    }
    let facts: BTreeSet<&str> = c.continuous_facts.iter().map(|f| f.name.as_str()).collect();

    // named definitions: rule heads and body objectives
    let mut defs: BTreeMap<&str, (&Expr, bool)> = BTreeMap::new();
    for r in &c.rules {
        defs.insert(&r.head, (&r.body, r.is_field));
    }
    for o in &c.objectives {
        if let ObjectiveSource::Body(e) = &o.source {
            defs.insert(&o.name, (e, true));
        }
    }
    for name in defs
        .keys()
        .filter(|n| seen_options.contains(*n) || facts.contains(*n))
    {
        out.push(Diagnostic::NameClash((*name).to_owned()));
    }
    for name in facts.iter().filter(|n| seen_options.contains(*n)) {
        out.push(Diagnostic::NameClash((*name).to_owned()));
    }

    // objectives
    for o in &c.objectives {
        let ok = match (&o.source, o.scope) {
            (ObjectiveSource::Model(_), _) => true,
            (_, Scope::Field) => true,
            (_, Scope::Path) => false,
        };
        if !ok {
            out.push(Diagnostic::ObjectiveScope(o.name.clone()));
        }
        if o.source == ObjectiveSource::Rule && !defs.contains_key(o.name.as_str()) {
            out.push(Diagnostic::UnresolvedAtom {
                atom: o.name.clone(),
                context: format!("objective {}", o.name),
            });
        }
    }

    // atoms, terms and relations in every body
    let mut missing_layers = BTreeSet::new();
    for (head, (body, _)) in &defs {
        body.walk(&mut |e| match e {
            Expr::Atom(a) => {
                if facts.contains(a.as_str()) {
                    out.push(Diagnostic::FactAsAtom {
                        name: a.clone(),
                        context: (*head).to_owned(),
                    });
                } else if !defs.contains_key(a.as_str()) && !seen_options.contains(a.as_str()) {
                    out.push(Diagnostic::UnresolvedAtom {
                        atom: a.clone(),
                        context: (*head).to_owned(),
                    });
                }
            }
            Expr::Compare {
                term: Term::Fact(name),
                ..
            } if !facts.contains(name.as_str()) => {
                out.push(Diagnostic::UndefinedTerm {
                    name: name.clone(),
                    context: (*head).to_owned(),
                });
            }
            Expr::BareDistance(tag) => {
                out.push(Diagnostic::BareDistance {
                    tag: tag.clone(),
                    context: (*head).to_owned(),
                });
            }
            _ => {}
        });
    }
    for (kind, tag) in c.relations() {
        if !sm.has_layer(kind, &tag) && missing_layers.insert((kind, tag.clone())) {
            out.push(Diagnostic::MissingLayer { kind, tag });
        }
    }

    // cycles
    out.extend(find_cycles(&defs).into_iter().map(Diagnostic::Cycle));

    // spatial dependence of non-field rules
    let mut spatial_memo: BTreeMap<&str, bool> = BTreeMap::new();
    for r in c.rules.iter().filter(|r| !r.is_field) {
        let mut visiting = BTreeSet::new();
        if is_spatial(&r.head, &defs, &mut spatial_memo, &mut visiting) {
            out.push(Diagnostic::SpatialNonField(r.head.clone()));
        }
    }
    out
}

fn is_spatial<'a>(
    name: &'a str,
    defs: &BTreeMap<&'a str, (&'a Expr, bool)>,
    memo: &mut BTreeMap<&'a str, bool>,
    visiting: &mut BTreeSet<&'a str>,
) -> bool {
    if let Some(&v) = memo.get(name) {
        return v;
    }
    let Some((body, _)) = defs.get(name) else {
        return false;
    };
    if !visiting.insert(name) {
        return false;
    }
    let mut direct = false;
    let mut deps = Vec::new();
    body.walk(&mut |e| match e {
        Expr::Over(_) | Expr::BareDistance(_) => direct = true,
        Expr::Compare {
            term: Term::Distance(_) | Term::Altitude,
            ..
        } => direct = true,
        Expr::Atom(a) => deps.push(a.as_str()),
        _ => {}
    });
    let v = direct
        || deps
            .into_iter()
            .any(|d| is_spatial(d, defs, memo, visiting));
    memo.insert(name, v);
    v
}

/// One cycle per strongly connected component that contains a cycle.
fn find_cycles(defs: &BTreeMap<&str, (&Expr, bool)>) -> Vec<Vec<String>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    fn visit<'a>(
        n: &'a str,
        defs: &BTreeMap<&'a str, (&'a Expr, bool)>,
        marks: &mut BTreeMap<&'a str, Mark>,
        stack: &mut Vec<&'a str>,
        cycles: &mut Vec<Vec<String>>,
    ) {
        marks.insert(n, Mark::Active);
        stack.push(n);
        let deps = defs[n].0.atoms();
        for d in deps {
            if !defs.contains_key(d) {
                continue;
            }
            match marks.get(d).copied().unwrap_or(Mark::New) {
                Mark::New => visit(d, defs, marks, stack, cycles),
                Mark::Active => {
                    let start = stack
                        .iter()
                        .position(|s| *s == d)
                        .expect("active node on stack");
                    let mut cyc: Vec<String> =
                        stack[start..].iter().map(|s| s.to_string()).collect();
                    cyc.push(d.to_owned());
                    cycles.push(cyc);
                }
                Mark::Done => {}
            }
        }
        stack.pop();
        marks.insert(n, Mark::Done);
    }
    let mut marks = BTreeMap::new();
    let mut cycles = Vec::new();
    for n in defs.keys() {
        if marks.get(n).copied().unwrap_or(Mark::New) == Mark::New {
            visit(n, defs, &mut marks, &mut Vec::new(), &mut cycles);
        }
    }
    cycles
}
