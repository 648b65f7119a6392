use std::collections::BTreeSet;
use std::fmt;

use crate::starmap::RelationKind;

/// A parsed rule program.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Constitution {
    pub star_map: Option<String>,
    pub parameter_groups: Vec<ParameterGroup>,
    pub continuous_facts: Vec<ContinuousFact>,
    pub rules: Vec<Rule>,
    pub objectives: Vec<ObjectiveDecl>,
}

/// Mutually exclusive options; exactly one is active in a mission setting.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterGroup {
    pub options: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Distribution {
    /// Second parameter is the standard deviation.
    Normal { mean: f64, std: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousFact {
    pub name: String,
    pub distribution: Distribution,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub head: String,
    /// `field` rules may vary over space.
    pub is_field: bool,
    pub body: Expr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CmpOp {
    Lt,
    Gt,
    Le,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Gt => ">",
            CmpOp::Le => "<=",
            CmpOp::Ge => ">=",
        }
    }

    /// Operator with swapped operands: `c < x` is `x > c`.
    pub fn flipped(self) -> Self {
        match self {
            CmpOp::Lt => CmpOp::Gt,
            CmpOp::Gt => CmpOp::Lt,
            CmpOp::Le => CmpOp::Ge,
            CmpOp::Ge => CmpOp::Le,
        }
    }

    pub fn holds(self, lhs: f64, rhs: f64) -> bool {
        match self {
            CmpOp::Lt => lhs < rhs,
            CmpOp::Gt => lhs > rhs,
            CmpOp::Le => lhs <= rhs,
            CmpOp::Ge => lhs >= rhs,
        }
    }
}

/// A continuous quantity that can be compared against a literal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Distance(String),
    Altitude,
    Fact(String),
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Distance(tag) => write!(f, "distance({tag})"),
            Term::Altitude => f.write_str("altitude"),
            Term::Fact(name) => f.write_str(name),
        }
    }
}

/// Rule body. `And`/`Or` are n-ary and never directly nest the same
/// operator.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Or(Vec<Expr>),
    And(Vec<Expr>),
    Not(Box<Expr>),
    /// Rule head or parameter option.
    Atom(String),
    Over(String),
    /// `distance(tag)` used without a comparison; rejected by validation.
    BareDistance(String),
    Compare {
        term: Term,
        op: CmpOp,
        value: f64,
    },
}

impl Expr {
    /// Visits every node depth-first, parents before children.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        match self {
            Expr::Or(v) | Expr::And(v) => v.iter().for_each(|e| e.walk(f)),
            Expr::Not(e) => e.walk(f),
            _ => {}
        }
    }

    pub fn atoms(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.walk(&mut |e| {
            if let Expr::Atom(a) = e {
                out.insert(a.as_str());
            }
        });
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    Field,
    Path,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ObjectiveSource {
    /// `field objective name.`: the rule with head `name`.
    Rule,
    /// `field objective name if body.`
    Body(Expr),
    /// `... objective name("reference")`: an external model.
    Model(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveDecl {
    pub scope: Scope,
    pub name: String,
    pub source: ObjectiveSource,
}

impl ObjectiveDecl {
    pub fn is_logic(&self) -> bool {
        !matches!(self.source, ObjectiveSource::Model(_))
    }

    /// The query body of a logic objective.
    pub fn logic_body(&self) -> Option<Expr> {
        match &self.source {
            ObjectiveSource::Rule => Some(Expr::Atom(self.name.clone())),
            ObjectiveSource::Body(e) => Some(e.clone()),
            ObjectiveSource::Model(_) => None,
        }
    }
}

impl Constitution {
    pub fn rule(&self, head: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| r.head == head)
    }

    pub fn fact(&self, name: &str) -> Option<&ContinuousFact> {
        self.continuous_facts.iter().find(|f| f.name == name)
    }

    pub fn objective(&self, name: &str) -> Option<&ObjectiveDecl> {
        self.objectives.iter().find(|o| o.name == name)
    }

    pub fn is_parameter(&self, name: &str) -> bool {
        self.parameter_groups
            .iter()
            .any(|g| g.options.iter().any(|o| o == name))
    }

    pub fn logic_objectives(&self) -> impl Iterator<Item = &ObjectiveDecl> {
        self.objectives.iter().filter(|o| o.is_logic())
    }

    /// Every body in the program: rule bodies and objective bodies.
    pub fn bodies(&self) -> impl Iterator<Item = &Expr> {
        self.rules
            .iter()
            .map(|r| &r.body)
            .chain(self.objectives.iter().filter_map(|o| match &o.source {
                ObjectiveSource::Body(e) => Some(e),
                _ => None,
            }))
    }

    /// Relations referenced anywhere in the program.
    pub fn relations(&self) -> BTreeSet<(RelationKind, String)> {
        let mut out = BTreeSet::new();
        for body in self.bodies() {
            body.walk(&mut |e| match e {
                Expr::Over(t) => {
                    out.insert((RelationKind::Over, t.clone()));
                }
                Expr::BareDistance(t)
                | Expr::Compare {
                    term: Term::Distance(t),
                    ..
                } => {
                    out.insert((RelationKind::Distance, t.clone()));
                }
                _ => {}
            });
        }
        out
    }
}
