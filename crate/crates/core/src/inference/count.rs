use super::ground::{GExpr, GroundProgram};
use crate::error::{Error, Result};

/// Default ceiling on the joint assignment space, in binary-equivalent bits.
pub const DEFAULT_BIT_LIMIT: f64 = 24.0;

/// One total assignment: a truth value per Bernoulli fact and an interval
/// index per interval variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment {
    pub facts: Vec<bool>,
    pub intervals: Vec<usize>,
}

/// Satisfying assignments of a ground program, read as a DNF.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ModelSet {
    pub models: Vec<Assignment>,
}

impl ModelSet {
    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }
}

impl GroundProgram {
    /// Size of the joint assignment space in bits (log2 of its cardinality).
    pub fn bits(&self) -> f64 {
        self.facts.len() as f64
            + self
                .vars
                .iter()
                .map(|v| (v.masses.len() as f64).log2())
                .sum::<f64>()
    }

    /// Truth of the query under `a`, evaluating definitions in order.
    pub fn satisfies(&self, a: &Assignment) -> bool {
        let mut defs = Vec::with_capacity(self.definitions.len());
        for d in &self.definitions {
            let v = self.eval(&d.expr, a, &defs);
            defs.push(v);
        }
        self.eval(&self.query, a, &defs)
    }

    /// Probability mass of `a` as the product of its independent factors.
    pub fn weight(&self, a: &Assignment) -> f64 {
        let facts = self
            .facts
            .iter()
            .zip(&a.facts)
            .map(|(f, &t)| if t { f.p } else { 1.0 - f.p });
        let intervals = self
            .vars
            .iter()
            .zip(&a.intervals)
            .map(|(v, &k)| v.masses[k]);
        facts.chain(intervals).product()
    }

    fn eval(&self, e: &GExpr, a: &Assignment, defs: &[bool]) -> bool {
        match e {
            GExpr::Const(b) => *b,
            GExpr::Fact(i) => a.facts[*i],
            // interval k lies below cut c exactly when k <= c
            GExpr::Below { var, cut } => a.intervals[*var] <= *cut,
            GExpr::Def(i) => defs[*i],
            GExpr::And(v) => v.iter().all(|x| self.eval(x, a, defs)),
            GExpr::Or(v) => v.iter().any(|x| self.eval(x, a, defs)),
            GExpr::Not(x) => !self.eval(x, a, defs),
        }
    }
}

/// Enumerates satisfying assignments under [`DEFAULT_BIT_LIMIT`].
pub fn enumerate_models(gp: &GroundProgram) -> Result<ModelSet> {
    enumerate_models_with_limit(gp, DEFAULT_BIT_LIMIT)
}

/// Exhaustively enumerates the joint assignment space of `gp`, keeping the
/// assignments that satisfy the query. Fails if the space exceeds `bits`.
pub fn enumerate_models_with_limit(gp: &GroundProgram, bits: f64) -> Result<ModelSet> {
    let need = gp.bits();
    if need > bits + 1e-9 {
        return Err(Error::Resource(format!(
            "grounded program needs {need:.1} bits of enumeration ({} facts, {} interval variables), limit is {bits}; \
             simplify the constitution or reduce the number of distinct thresholds",
            gp.facts.len(),
            gp.vars.len()
        )));
    }
    let mut a = Assignment {
        facts: vec![false; gp.facts.len()],
        intervals: vec![0; gp.vars.len()],
    };
    let mut models = Vec::new();
    loop {
        if gp.satisfies(&a) {
            models.push(a.clone());
        }
        if !advance(&mut a, gp) {
            break;
        }
    }
    Ok(ModelSet { models })
}

/// Mixed-radix increment, facts first. Returns false after the last state.
fn advance(a: &mut Assignment, gp: &GroundProgram) -> bool {
    for f in a.facts.iter_mut() {
        if *f {
            *f = false;
        } else {
            *f = true;
            return true;
        }
    }
    for (k, v) in a.intervals.iter_mut().zip(&gp.vars) {
        if *k + 1 < v.masses.len() {
            *k += 1;
            return true;
        }
        *k = 0;
    }
    false
}

/// Weighted model count: the probability that the query holds.
pub fn wmc(ms: &ModelSet, gp: &GroundProgram) -> f64 {
    let total: f64 = ms.models.iter().map(|a| gp.weight(a)).sum();
    total.clamp(0.0, 1.0)
}

/// Convenience for `wmc(enumerate_models(gp)?, gp)` without storing models.
pub fn probability(gp: &GroundProgram, bits: f64) -> Result<f64> {
    let ms = enumerate_models_with_limit(gp, bits)?;
    Ok(wmc(&ms, gp))
}
