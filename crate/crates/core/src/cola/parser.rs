use std::collections::BTreeSet;

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use crate::error::ParseError;

/// Parses CoLa source into a [`Constitution`]. Name resolution is left to
/// [`super::validate`]; duplicate definitions are rejected here.
pub fn parse(src: &str) -> Result<Constitution, ParseError> {
    let tokens = tokenize(src)?;
    let mut p = Parser { tokens, pos: 0 };
    let mut c = Constitution::default();
    let mut heads = BTreeSet::new();
    while p.peek() != &Tok::Eof {
        p.statement(&mut c, &mut heads)?;
    }
    if c.star_map.is_none()
        && c.parameter_groups.is_empty()
        && c.continuous_facts.is_empty()
        && c.rules.is_empty()
        && c.objectives.is_empty()
    {
        return Err(p.error("empty program", &["statement"]));
    }
    Ok(c)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

const CMP: [&str; 4] = ["<", ">", "<=", ">="];

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.tokens[self.pos].tok.clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn error(&self, message: impl Into<String>, expected: &[&str]) -> ParseError {
        let t = &self.tokens[self.pos];
        ParseError {
            line: t.line,
            column: t.column,
            message: message.into(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn unexpected(&self, expected: &[&str]) -> ParseError {
        self.error(format!("unexpected {}", self.peek().describe()), expected)
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&[tok.text()]))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.unexpected(&["identifier"])),
        }
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        match *self.peek() {
            Tok::Num(n) => {
                self.bump();
                Ok(n)
            }
            _ => Err(self.unexpected(&["number"])),
        }
    }

    fn string(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Str(s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.unexpected(&["string"])),
        }
    }

    fn define(
        &self,
        heads: &mut BTreeSet<String>,
        name: &str,
        at: usize,
    ) -> Result<(), ParseError> {
        if !heads.insert(name.to_owned()) {
            let t = &self.tokens[at];
            return Err(ParseError {
                line: t.line,
                column: t.column,
                message: format!("`{name}` is defined more than once"),
                expected: Vec::new(),
            });
        }
        Ok(())
    }

    fn statement(
        &mut self,
        c: &mut Constitution,
        heads: &mut BTreeSet<String>,
    ) -> Result<(), ParseError> {
        match self.peek().clone() {
            Tok::StarMap => {
                let at = self.pos;
                self.bump();
                self.expect(Tok::LParen)?;
                let path = self.string()?;
                self.expect(Tok::RParen)?;
                self.expect(Tok::Dot)?;
                if c.star_map.is_some() {
                    self.pos = at;
                    return Err(self.error("duplicate star_map declaration", &[]));
                }
                c.star_map = Some(path);
            }
            Tok::Parameter => {
                self.bump();
                self.expect(Tok::LBrace)?;
                let mut options = vec![self.ident()?];
                loop {
                    match self.peek() {
                        Tok::Comma => {
                            self.bump();
                            let at = self.pos;
                            let o = self.ident()?;
                            if options.contains(&o) {
                                self.pos = at;
                                return Err(
                                    self.error(format!("option `{o}` repeated in group"), &[])
                                );
                            }
                            options.push(o);
                        }
                        Tok::RBrace if options.len() >= 2 => break,
                        Tok::RBrace => {
                            return Err(
                                self.error("a parameter group needs at least two options", &[","])
                            )
                        }
                        _ => return Err(self.unexpected(&[",", "}"])),
                    }
                }
                self.expect(Tok::RBrace)?;
                self.expect(Tok::Dot)?;
                c.parameter_groups.push(ParameterGroup { options });
            }
            Tok::Field | Tok::Path => {
                let scope = if self.bump() == Tok::Field {
                    Scope::Field
                } else {
                    Scope::Path
                };
                if *self.peek() == Tok::Objective {
                    self.bump();
                    let at = self.pos;
                    let name = self.ident()?;
                    let source = match self.peek() {
                        Tok::If => {
                            self.bump();
                            // a body objective defines a queryable name
                            self.define(heads, &name, at)?;
                            ObjectiveSource::Body(self.body()?)
                        }
                        Tok::LParen => {
                            self.bump();
                            let r = self.string()?;
                            self.expect(Tok::RParen)?;
                            ObjectiveSource::Model(r)
                        }
                        Tok::Dot => ObjectiveSource::Rule,
                        _ => return Err(self.unexpected(&["if", "(", "."])),
                    };
                    self.end_statement()?;
                    if c.objective(&name).is_some() {
                        self.pos = at;
                        return Err(
                            self.error(format!("objective `{name}` declared more than once"), &[])
                        );
                    }
                    c.objectives.push(ObjectiveDecl {
                        scope,
                        name,
                        source,
                    });
                } else if scope == Scope::Field {
                    let at = self.pos;
                    let head = self.ident()?;
                    self.expect(Tok::If)?;
                    self.define(heads, &head, at)?;
                    let body = self.body()?;
                    self.end_statement()?;
                    c.rules.push(Rule {
                        head,
                        is_field: true,
                        body,
                    });
                } else {
                    return Err(self.unexpected(&["objective"]));
                }
            }
            Tok::Ident(name) => {
                let at = self.pos;
                self.bump();
                match self.peek() {
                    Tok::Tilde => {
                        self.bump();
                        let dist_at = self.pos;
                        let dist = self.ident()?;
                        self.expect(Tok::LParen)?;
                        let mut args = vec![self.number()?];
                        while *self.peek() == Tok::Comma {
                            self.bump();
                            args.push(self.number()?);
                        }
                        self.expect(Tok::RParen)?;
                        self.end_statement()?;
                        let distribution = match (dist.as_str(), args.as_slice()) {
                            ("normal", &[mean, std]) if std > 0.0 => {
                                Distribution::Normal { mean, std }
                            }
                            ("normal", &[_, _]) => {
                                self.pos = dist_at;
                                return Err(
                                    self.error("normal standard deviation must be positive", &[])
                                );
                            }
                            ("normal", _) => {
                                self.pos = dist_at;
                                return Err(self.error("normal takes (mean, std)", &[]));
                            }
                            (other, _) => {
                                self.pos = dist_at;
                                return Err(self.error(
                                    format!("unsupported distribution `{other}`; only normal(mean, std) is available"),
                                    &["normal"],
                                ));
                            }
                        };
                        self.define(heads, &name, at)?;
                        c.continuous_facts
                            .push(ContinuousFact { name, distribution });
                    }
                    Tok::If => {
                        self.bump();
                        self.define(heads, &name, at)?;
                        let body = self.body()?;
                        self.end_statement()?;
                        c.rules.push(Rule {
                            head: name,
                            is_field: false,
                            body,
                        });
                    }
                    _ => return Err(self.unexpected(&["~", "if"])),
                }
            }
            _ => {
                return Err(self.unexpected(&[
                    "star_map",
                    "parameter",
                    "field",
                    "path",
                    "identifier",
                ]));
            }
        }
        Ok(())
    }

    fn end_statement(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            Tok::Dot => {
                self.bump();
                Ok(())
            }
            _ => Err(self.error(
                format!(
                    "unexpected {}; statement must end with `.`",
                    self.peek().describe()
                ),
                &[".", "and", "or"],
            )),
        }
    }

    fn body(&mut self) -> Result<Expr, ParseError> {
        let mut terms = vec![self.conj()?];
        while *self.peek() == Tok::Or {
            self.bump();
            terms.push(self.conj()?);
        }
        Ok(flatten(terms, true))
    }

    fn conj(&mut self) -> Result<Expr, ParseError> {
        let mut terms = vec![self.unary()?];
        while *self.peek() == Tok::And {
            self.bump();
            terms.push(self.unary()?);
        }
        Ok(flatten(terms, false))
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Not {
            self.bump();
            return Ok(Expr::Not(Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn cmp_op(&self) -> Option<CmpOp> {
        Some(match self.peek() {
            Tok::Lt => CmpOp::Lt,
            Tok::Gt => CmpOp::Gt,
            Tok::Le => CmpOp::Le,
            Tok::Ge => CmpOp::Ge,
            _ => return None,
        })
    }

    fn tag_arg(&mut self) -> Result<String, ParseError> {
        self.expect(Tok::LParen)?;
        let tag = self.ident()?;
        self.expect(Tok::RParen)?;
        Ok(tag)
    }

    fn term_comparison(&mut self, term: Term) -> Result<Expr, ParseError> {
        let op = self.cmp_op().ok_or_else(|| self.unexpected(&CMP))?;
        self.bump();
        let value = self.number()?;
        Ok(Expr::Compare { term, op, value })
    }

    fn cterm(&mut self) -> Result<Term, ParseError> {
        match self.peek().clone() {
            Tok::Distance => {
                self.bump();
                Ok(Term::Distance(self.tag_arg()?))
            }
            Tok::Altitude => {
                self.bump();
                Ok(Term::Altitude)
            }
            Tok::Ident(name) => {
                self.bump();
                Ok(Term::Fact(name))
            }
            _ => Err(self.unexpected(&["distance", "altitude", "identifier"])),
        }
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                let e = self.body()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Over => {
                self.bump();
                Ok(Expr::Over(self.tag_arg()?))
            }
            Tok::Distance => {
                self.bump();
                let tag = self.tag_arg()?;
                if self.cmp_op().is_some() {
                    self.term_comparison(Term::Distance(tag))
                } else {
                    Ok(Expr::BareDistance(tag))
                }
            }
            Tok::Altitude => {
                self.bump();
                self.term_comparison(Term::Altitude)
            }
            Tok::Ident(name) => {
                self.bump();
                if self.cmp_op().is_some() {
                    self.term_comparison(Term::Fact(name))
                } else {
                    Ok(Expr::Atom(name))
                }
            }
            Tok::Num(value) => {
                // `literal op term` is normalized to `term op' literal`
                self.bump();
                let op = self.cmp_op().ok_or_else(|| self.unexpected(&CMP))?;
                self.bump();
                let term = self.cterm()?;
                Ok(Expr::Compare {
                    term,
                    op: op.flipped(),
                    value,
                })
            }
            _ => Err(self.unexpected(&[
                "(",
                "not",
                "over",
                "distance",
                "altitude",
                "identifier",
                "number",
            ])),
        }
    }
}

/// Builds an n-ary node, splicing children of the same operator.
fn flatten(terms: Vec<Expr>, is_or: bool) -> Expr {
    if terms.len() == 1 {
        return terms.into_iter().next().expect("one term");
    }
    let mut out = Vec::with_capacity(terms.len());
    for t in terms {
        match t {
            Expr::Or(v) if is_or => out.extend(v),
            Expr::And(v) if !is_or => out.extend(v),
            other => out.push(other),
        }
    }
    if is_or {
        Expr::Or(out)
    } else {
        Expr::And(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn atom(s: &str) -> Expr {
        Expr::Atom(s.into())
    }

    fn body_of(src: &str) -> Expr {
        parse(src).unwrap().rules.remove(0).body
    }

    #[test]
    fn precedence() {
        assert_eq!(
            body_of("x if a or b and c."),
            Expr::Or(vec![atom("a"), Expr::And(vec![atom("b"), atom("c")])])
        );
        assert_eq!(
            body_of("x if not a and b."),
            Expr::And(vec![Expr::Not(Box::new(atom("a"))), atom("b")])
        );
        assert_eq!(
            body_of("x if (a or b) and c."),
            Expr::And(vec![Expr::Or(vec![atom("a"), atom("b")]), atom("c")])
        );
        assert_eq!(
            body_of("x if (a and b) and c."),
            Expr::And(vec![atom("a"), atom("b"), atom("c")])
        );
    }

    #[test]
    fn comparisons_normalize() {
        assert_eq!(
            body_of("x if 50 < distance(stadium)."),
            Expr::Compare {
                term: Term::Distance("stadium".into()),
                op: CmpOp::Gt,
                value: 50.0
            }
        );
        assert_eq!(
            body_of("x if mass <= 2."),
            Expr::Compare {
                term: Term::Fact("mass".into()),
                op: CmpOp::Le,
                value: 2.0
            }
        );
        assert_eq!(body_of("x if distance(a)."), Expr::BareDistance("a".into()));
    }

    #[test]
    fn missing_period() {
        let e = parse("x if y").unwrap_err();
        assert_eq!((e.line, e.column), (1, 7));
        assert!(e.expected.contains(&".".to_string()));
    }

    #[test]
    fn syntax_errors_have_positions() {
        let e = parse("parameter {a}.").unwrap_err();
        assert_eq!(e.line, 1);
        let e = parse("a if b.\nc if altitude.").unwrap_err();
        assert_eq!((e.line, e.column), (2, 14));
        assert!(e.expected.iter().any(|x| x == "<"));
        assert!(parse("").is_err());
        assert!(parse("field objective o if a").is_err());
    }

    #[test]
    fn duplicates_and_distributions() {
        assert!(parse("a if b.\na if c.")
            .unwrap_err()
            .message
            .contains("more than once"));
        assert!(parse("m ~ normal(1.0, 2.0).\nm if a.").is_err());
        let e = parse("m ~ gamma(1.0, 2.0).").unwrap_err();
        assert!(e.message.contains("gamma"));
        assert!(parse("m ~ normal(1.0).").is_err());
        assert!(parse("m ~ normal(1.0, 0).").is_err());
        assert!(parse("parameter {a, a}.").is_err());
        assert!(parse("star_map(\"a\").\nstar_map(\"b\").").is_err());
    }

    #[test]
    fn objectives() {
        let c = parse(
            "field objective a.\nfield objective b if over(park).\npath objective energy(\"./e.py\").",
        )
        .unwrap();
        assert_eq!(c.objectives[0].source, ObjectiveSource::Rule);
        assert_eq!(
            c.objectives[1].source,
            ObjectiveSource::Body(Expr::Over("park".into()))
        );
        assert_eq!(c.objectives[2].scope, Scope::Path);
        assert_eq!(
            c.objectives[2].source,
            ObjectiveSource::Model("./e.py".into())
        );
        // undefined `b` parses; validation is a separate phase
        assert!(parse("field objective a if b.").is_ok());
    }
}
