use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::normal::normal_interval;
use super::MissionSetting;
use crate::cola::{CmpOp, Constitution, Distribution, Expr, ObjectiveSource, Term};
use crate::error::{Error, Result};
use crate::starmap::{RelationKind, RelationParams, StarMap};

/// Distance layers with a spread below this are treated as point masses.
pub const POINT_MASS_STD: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct BernoulliFact {
    pub label: String,
    pub p: f64,
}

/// A continuous term discretized at its cut points. Interval `k` spans
/// `(cuts[k-1], cuts[k])` with the outer intervals unbounded.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalVar {
    pub label: String,
    pub cuts: Vec<f64>,
    pub masses: Vec<f64>,
}

/// Propositional structure over facts, interval literals and definitions.
#[derive(Debug, Clone, PartialEq)]
pub enum GExpr {
    Const(bool),
    Fact(usize),
    /// The variable's value lies below `cuts[cut]`.
    Below {
        var: usize,
        cut: usize,
    },
    Def(usize),
    And(Vec<GExpr>),
    Or(Vec<GExpr>),
    Not(Box<GExpr>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Definition {
    pub name: String,
    pub expr: GExpr,
}

/// A constitution grounded at one point under one mission setting.
/// Definitions are topologically ordered: each refers only to earlier ones.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundProgram {
    pub facts: Vec<BernoulliFact>,
    pub vars: Vec<IntervalVar>,
    pub definitions: Vec<Definition>,
    pub query: GExpr,
}

/// What a grounding answers.
#[derive(Debug, Clone, PartialEq)]
pub enum Query {
    /// A logic objective or rule head by name.
    Named(String),
    /// Conjunction of every logic field objective.
    AllLogicObjectives,
}

/// Point-independent preparation of a grounding: cut points, reachable
/// definitions and the query body. Reuse across many points.
#[derive(Debug, Clone)]
pub struct Grounder<'c> {
    c: &'c Constitution,
    setting: MissionSetting,
    cuts: BTreeMap<Term, Vec<f64>>,
    order: Vec<(&'c str, &'c Expr)>,
    query: Expr,
}

fn definitions(c: &Constitution) -> BTreeMap<&str, &Expr> {
    let mut defs: BTreeMap<&str, &Expr> =
        c.rules.iter().map(|r| (r.head.as_str(), &r.body)).collect();
    for o in &c.objectives {
        if let ObjectiveSource::Body(e) = &o.source {
            defs.insert(&o.name, e);
        }
    }
    defs
}

impl<'c> Grounder<'c> {
    pub fn new(c: &'c Constitution, setting: &MissionSetting, query: &Query) -> Result<Self> {
        let query = match query {
            Query::Named(name) => match c.objective(name) {
                Some(o) => o.logic_body().ok_or_else(|| {
                    Error::input(format!(
                        "objective `{name}` is model-sourced and has no logic query"
                    ))
                })?,
                None if c.rule(name).is_some() => Expr::Atom(name.clone()),
                None => {
                    return Err(Error::input(format!(
                        "`{name}` is neither a logic objective nor a rule"
                    )))
                }
            },
            Query::AllLogicObjectives => {
                let bodies: Vec<Expr> = c
                    .logic_objectives()
                    .filter_map(|o| o.logic_body())
                    .collect();
                match bodies.len() {
                    0 => return Err(Error::input("constitution declares no logic objective")),
                    1 => bodies.into_iter().next().expect("one body"),
                    _ => Expr::And(bodies),
                }
            }
        };

        let mut cuts: BTreeMap<Term, Vec<f64>> = BTreeMap::new();
        for body in c.bodies() {
            body.walk(&mut |e| {
                if let Expr::Compare { term, value, .. } = e {
                    if *term != Term::Altitude {
                        cuts.entry(term.clone()).or_default().push(*value);
                    }
                }
            });
        }
        for v in cuts.values_mut() {
            v.sort_by(f64::total_cmp);
            v.dedup();
        }

        let defs = definitions(c);
        let mut order = Vec::new();
        let mut state: BTreeMap<&str, bool> = BTreeMap::new();
        fn visit<'a>(
            name: &'a str,
            defs: &BTreeMap<&'a str, &'a Expr>,
            state: &mut BTreeMap<&'a str, bool>,
            order: &mut Vec<(&'a str, &'a Expr)>,
        ) -> Result<()> {
            match state.get(name) {
                Some(true) => return Ok(()),
                Some(false) => {
                    return Err(Error::input(format!("rule `{name}` depends on itself")))
                }
                None => {}
            }
            let Some(body) = defs.get(name) else {
                return Ok(());
            };
            state.insert(name, false);
            for a in body.atoms() {
                visit(a, defs, state, order)?;
            }
            state.insert(name, true);
            order.push((name, body));
            Ok(())
        }
        let roots: BTreeSet<&str> = query.atoms();
        for a in roots {
            // the key must outlive `query`, so look it up in the program
            if let Some((k, _)) = defs.get_key_value(a) {
                visit(k, &defs, &mut state, &mut order)?;
            } else if !c.is_parameter(a) {
                return Err(Error::input(format!("unresolved atom `{a}`")));
            }
        }
        Ok(Grounder {
            c,
            setting: setting.clone(),
            cuts,
            order,
            query,
        })
    }

    pub fn setting(&self) -> &MissionSetting {
        &self.setting
    }

    /// Grounds at `p = (x, y, z)`: relation parameters are interpolated at
    /// `(x, y)`, altitude comparisons become constants at `z`.
    pub fn ground(&self, sm: &StarMap, p: [f64; 3]) -> Result<GroundProgram> {
        let mut b = Builder {
            g: self,
            sm,
            p,
            facts: Vec::new(),
            fact_ix: BTreeMap::new(),
            vars: Vec::new(),
            var_ix: BTreeMap::new(),
            def_ix: BTreeMap::new(),
        };
        let mut definitions = Vec::with_capacity(self.order.len());
        for (name, body) in &self.order {
            let expr = b.lower(body)?;
            b.def_ix.insert(name, definitions.len());
            definitions.push(Definition {
                name: (*name).to_owned(),
                expr,
            });
        }
        let query = b.lower(&self.query)?;
        Ok(GroundProgram {
            facts: b.facts,
            vars: b.vars,
            definitions,
            query,
        })
    }
}

#[derive(Clone, Copy)]
enum TermValue {
    Var(usize),
    Known(f64),
}

struct Builder<'g, 'c> {
    g: &'g Grounder<'c>,
    sm: &'g StarMap,
    p: [f64; 3],
    facts: Vec<BernoulliFact>,
    fact_ix: BTreeMap<String, usize>,
    vars: Vec<IntervalVar>,
    var_ix: BTreeMap<Term, TermValue>,
    def_ix: BTreeMap<&'c str, usize>,
}

impl Builder<'_, '_> {
    fn lower(&mut self, e: &Expr) -> Result<GExpr> {
        Ok(match e {
            Expr::Or(v) => GExpr::Or(v.iter().map(|x| self.lower(x)).collect::<Result<_>>()?),
            Expr::And(v) => GExpr::And(v.iter().map(|x| self.lower(x)).collect::<Result<_>>()?),
            Expr::Not(x) => GExpr::Not(Box::new(self.lower(x)?)),
            Expr::Atom(a) => {
                if let Some(&i) = self.def_ix.get(a.as_str()) {
                    GExpr::Def(i)
                } else if self.g.c.is_parameter(a) {
                    GExpr::Const(self.g.setting.is_active(a))
                } else {
                    return Err(Error::input(format!("unresolved atom `{a}`")));
                }
            }
            Expr::Over(tag) => {
                if let Some(&i) = self.fact_ix.get(tag) {
                    GExpr::Fact(i)
                } else {
                    let p = match self
                        .sm
                        .params(RelationKind::Over, tag, [self.p[0], self.p[1]])?
                    {
                        RelationParams::Bernoulli { p } => p,
                        RelationParams::Gaussian { .. } => {
                            unreachable!("over layers are Bernoulli")
                        }
                    };
                    let i = self.facts.len();
                    self.facts.push(BernoulliFact {
                        label: format!("over({tag})"),
                        p,
                    });
                    self.fact_ix.insert(tag.clone(), i);
                    GExpr::Fact(i)
                }
            }
            Expr::BareDistance(tag) => {
                return Err(Error::input(format!(
                    "distance({tag}) is not compared against a number"
                )))
            }
            Expr::Compare {
                term: Term::Altitude,
                op,
                value,
            } => GExpr::Const(op.holds(self.p[2], *value)),
            Expr::Compare { term, op, value } => match self.term(term)? {
                TermValue::Known(x) => GExpr::Const(op.holds(x, *value)),
                TermValue::Var(var) => {
                    let cut = self.vars[var]
                        .cuts
                        .iter()
                        .position(|c| c == value)
                        .expect("every literal is a cut point");
                    let below = GExpr::Below { var, cut };
                    match op {
                        CmpOp::Lt | CmpOp::Le => below,
                        CmpOp::Gt | CmpOp::Ge => GExpr::Not(Box::new(below)),
                    }
                }
            },
        })
    }

    fn term(&mut self, term: &Term) -> Result<TermValue> {
        if !self.var_ix.contains_key(term) {
            let (mean, std) = match term {
                Term::Distance(tag) => {
                    match self
                        .sm
                        .params(RelationKind::Distance, tag, [self.p[0], self.p[1]])?
                    {
                        RelationParams::Gaussian { mean, std } => (mean, std),
                        RelationParams::Bernoulli { .. } => {
                            unreachable!("distance layers are Gaussian")
                        }
                    }
                }
                Term::Fact(name) => match self.g.c.fact(name) {
                    Some(f) => match f.distribution {
                        Distribution::Normal { mean, std } => (mean, std),
                    },
                    None => return Err(Error::input(format!("`{name}` is not a continuous fact"))),
                },
                Term::Altitude => unreachable!("altitude is always known"),
            };
            let value = if std < POINT_MASS_STD {
                TermValue::Known(mean)
            } else {
                let cuts = self.g.cuts.get(term).cloned().unwrap_or_default();
                let mut masses = Vec::with_capacity(cuts.len() + 1);
                let mut lo = f64::NEG_INFINITY;
                for &c in cuts.iter().chain(std::iter::once(&f64::INFINITY)) {
                    masses.push(normal_interval(mean, std, lo, c));
                    lo = c;
                }
                self.vars.push(IntervalVar {
                    label: term.to_string(),
                    cuts,
                    masses,
                });
                TermValue::Var(self.vars.len() - 1)
            };
            self.var_ix.insert(term.clone(), value);
        }
        Ok(self.var_ix[term])
    }
}

/// Grounds `query` of `c` at point `p` under `setting`.
pub fn ground_at(
    c: &Constitution,
    sm: &StarMap,
    p: [f64; 3],
    setting: &MissionSetting,
    query: &str,
) -> Result<GroundProgram> {
    Grounder::new(c, setting, &Query::Named(query.to_owned()))?.ground(sm, p)
}

fn fmt_expr(e: &GExpr, gp: &GroundProgram, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let list = |v: &[GExpr], sep: &str, f: &mut fmt::Formatter<'_>| -> fmt::Result {
        f.write_str("(")?;
        for (i, x) in v.iter().enumerate() {
            if i > 0 {
                f.write_str(sep)?;
            }
            fmt_expr(x, gp, f)?;
        }
        f.write_str(")")
    };
    match e {
        GExpr::Const(b) => write!(f, "{b}"),
        GExpr::Fact(i) => f.write_str(&gp.facts[*i].label),
        GExpr::Below { var, cut } => {
            let v = &gp.vars[*var];
            write!(f, "{} < {}", v.label, v.cuts[*cut])
        }
        GExpr::Def(i) => f.write_str(&gp.definitions[*i].name),
        GExpr::And(v) => list(v, " and ", f),
        GExpr::Or(v) => list(v, " or ", f),
        GExpr::Not(x) => {
            f.write_str("not ")?;
            fmt_expr(x, gp, f)
        }
    }
}

impl fmt::Display for GroundProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "facts:")?;
        for fact in &self.facts {
            writeln!(f, "  {} ~ Bernoulli({})", fact.label, fact.p)?;
        }
        writeln!(f, "intervals:")?;
        for v in &self.vars {
            let mut lo = f64::NEG_INFINITY;
            for (k, m) in v.masses.iter().enumerate() {
                let hi = v.cuts.get(k).copied().unwrap_or(f64::INFINITY);
                writeln!(f, "  {} in ({lo}, {hi}): {m:e}", v.label)?;
                lo = hi;
            }
        }
        writeln!(f, "definitions:")?;
        for d in &self.definitions {
            write!(f, "  {} := ", d.name)?;
            fmt_expr(&d.expr, self, f)?;
            writeln!(f)?;
        }
        write!(f, "query := ")?;
        fmt_expr(&self.query, self, f)?;
        writeln!(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cola::{bundled, parse};
    use crate::inference::fixtures::constant_map;

    #[test]
    fn example_light_drone_tail_mass() {
        let c = parse(bundled::EXAMPLE).unwrap();
        let sm = constant_map(&[], &[("pilot", 50.0, 5.0)]);
        let s = MissionSetting::first(&c);
        let gp = ground_at(&c, &sm, [10.0, 10.0, 20.0], &s, "light_drone").unwrap();
        assert!(gp.facts.is_empty());
        assert_eq!(gp.vars.len(), 1);
        let v = &gp.vars[0];
        assert_eq!(v.label, "take_off_mass");
        // cut points are shared across the whole program
        assert_eq!(v.cuts, vec![5.0, 10.0, 25.0]);
        let expected = 3.670_966_199_312_751e-51;
        assert!(
            (v.masses[0] / expected - 1.0).abs() < 1e-10,
            "{:e}",
            v.masses[0]
        );
        assert!((v.masses.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn over_becomes_one_fact() {
        let c = parse("field objective o if over(park).").unwrap();
        let sm = constant_map(&[("park", 0.3)], &[]);
        let gp = ground_at(&c, &sm, [0.0, 0.0, 0.0], &MissionSetting::first(&c), "o").unwrap();
        assert_eq!(
            gp.facts,
            vec![BernoulliFact {
                label: "over(park)".into(),
                p: 0.3
            }]
        );
        assert_eq!(gp.query, GExpr::Fact(0));
    }

    #[test]
    fn stadium_band_shares_one_variable() {
        let c = parse("field objective o if distance(stadium) > 50 and distance(stadium) < 150.")
            .unwrap();
        let sm = constant_map(&[], &[("stadium", 100.0, 50.0)]);
        let gp = ground_at(&c, &sm, [0.0, 0.0, 0.0], &MissionSetting::first(&c), "o").unwrap();
        assert_eq!(gp.vars.len(), 1);
        assert_eq!(gp.vars[0].cuts, vec![50.0, 150.0]);
        assert_eq!(gp.vars[0].masses.len(), 3);
        let m = &gp.vars[0].masses;
        assert!((m[0] - normal_interval(100.0, 50.0, f64::NEG_INFINITY, 50.0)).abs() < 1e-15);
        assert!(
            (m[1] - (normal_interval(100.0, 50.0, f64::NEG_INFINITY, 150.0) - m[0])).abs() < 1e-12
        );
    }

    #[test]
    fn altitude_and_parameters_are_constants() {
        let c = parse("parameter {a, b}.\nfield objective o if a and altitude < 100.").unwrap();
        let sm = constant_map(&[], &[]);
        let a = MissionSetting::new(&c, &["a"]).unwrap();
        let b = MissionSetting::new(&c, &["b"]).unwrap();
        let low = ground_at(&c, &sm, [0.0, 0.0, 50.0], &a, "o").unwrap();
        assert_eq!(
            low.query,
            GExpr::And(vec![GExpr::Const(true), GExpr::Const(true)])
        );
        let high = ground_at(&c, &sm, [0.0, 0.0, 150.0], &b, "o").unwrap();
        assert_eq!(
            high.query,
            GExpr::And(vec![GExpr::Const(false), GExpr::Const(false)])
        );
    }

    #[test]
    fn zero_spread_collapses_to_constant() {
        let c = parse("field objective o if distance(road) < 10.").unwrap();
        let sm = constant_map(&[], &[("road", 4.0, 0.0)]);
        let gp = ground_at(&c, &sm, [0.0, 0.0, 0.0], &MissionSetting::first(&c), "o").unwrap();
        assert!(gp.vars.is_empty());
        assert_eq!(gp.query, GExpr::Const(true));
    }

    #[test]
    fn errors() {
        let c = parse(bundled::EXAMPLE).unwrap();
        let sm = constant_map(&[], &[("pilot", 50.0, 5.0)]);
        let s = MissionSetting::first(&c);
        assert!(ground_at(&c, &sm, [10.0, 10.0, 0.0], &s, "radio").is_err());
        assert!(ground_at(&c, &sm, [10.0, 10.0, 0.0], &s, "nothing").is_err());
        let far = ground_at(&c, &sm, [1000.0, 10.0, 0.0], &s, "airspace").unwrap_err();
        assert!(matches!(far, Error::OutOfBounds { .. }), "{far}");
    }

    #[test]
    fn definitions_are_topologically_ordered() {
        let c = parse(bundled::URBAN).unwrap();
        let tags = [
            "primary",
            "secondary",
            "building",
            "stadium",
            "government",
            "embassy",
        ];
        let dist: Vec<(&str, f64, f64)> = tags.iter().map(|t| (*t, 100.0, 10.0)).collect();
        let sm = constant_map(&[("park", 0.5)], &dist);
        let s = MissionSetting::first(&c);
        let gp = ground_at(&c, &sm, [0.0, 0.0, 0.0], &s, "paris_limitations").unwrap();
        let names: Vec<&str> = gp.definitions.iter().map(|d| d.name.as_str()).collect();
        let pos = |n: &str| names.iter().position(|x| *x == n).unwrap();
        assert!(pos("low_flight_limitations") < pos("mid_flight_limitations"));
        assert!(pos("mid_flight_limitations") < pos("high_flight_limitations"));
        let dump = gp.to_string();
        assert!(dump.contains("over(park) ~ Bernoulli(0.5)"));
        assert!(dump.contains("query := "));
    }
}
