//! Boolean lineage formulas and their exact probability valuation.
//!
//! A lineage expression is a formula over base-tuple variables, assumed to be
//! independent Bernoulli variables. The distinguished [`Lineage::Null`]
//! constant models the *absence* of a lineage (a window slot with no valid
//! tuples); it is not Boolean false and may only appear at the root.
//!
//! Windows concatenate lineages with three functions: [`land`] for
//! overlapping windows, [`land_not`] for negating windows, and [`lor_all`]
//! for per-timepoint disjunctions. None of them simplifies: equivalence is
//! semantic ([`equivalent`]), never syntactic, so rendered output stays
//! predictable.

use std::collections::BTreeSet;
use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Exhaustive probability enumeration refuses formulas over more variables
/// than this. Window-produced lineages are read-once, so the cap only guards
/// adversarial input.
pub const ENUMERATION_CAP: usize = 24;

/// Equivalence testing enumerates all assignments of the combined variable
/// set; refuse beyond this many.
pub const EQUIVALENCE_CAP: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Lineage {
    /// Absence of a lineage, printed `-`. Only valid at the root.
    Null,
    Var(Arc<str>),
    Not(Box<Lineage>),
    /// Conjunction over two or more children.
    And(Vec<Lineage>),
    /// Disjunction over two or more children.
    Or(Vec<Lineage>),
}

impl Lineage {
    pub fn var(name: &str) -> Lineage {
        Lineage::Var(Arc::from(name))
    }

    pub fn from_var(name: Arc<str>) -> Lineage {
        Lineage::Var(name)
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Lineage::Null)
    }

    /// Every variable occurring in the formula; empty for `Null`.
    pub fn vars(&self) -> BTreeSet<Arc<str>> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<Arc<str>>) {
        match self {
            Lineage::Null => {}
            Lineage::Var(v) => {
                out.insert(v.clone());
            }
            Lineage::Not(c) => c.collect_vars(out),
            Lineage::And(cs) | Lineage::Or(cs) => {
                for c in cs {
                    c.collect_vars(out);
                }
            }
        }
    }

    /// True when each variable occurs exactly once, which makes the
    /// compositional probability rules exact.
    pub fn is_read_once(&self) -> bool {
        let mut counts: HashMap<&str, usize> = HashMap::new();
        self.count_vars(&mut counts);
        counts.values().all(|&n| n == 1)
    }

    fn count_vars<'a>(&'a self, counts: &mut HashMap<&'a str, usize>) {
        match self {
            Lineage::Null => {}
            Lineage::Var(v) => *counts.entry(v).or_insert(0) += 1,
            Lineage::Not(c) => c.count_vars(counts),
            Lineage::And(cs) | Lineage::Or(cs) => {
                for c in cs {
                    c.count_vars(counts);
                }
            }
        }
    }

    fn eval(&self, truth: &dyn Fn(&str) -> bool) -> bool {
        match self {
            // Null is never evaluated as a formula; treat as false for the
            // degenerate root-only case.
            Lineage::Null => false,
            Lineage::Var(v) => truth(v),
            Lineage::Not(c) => !c.eval(truth),
            Lineage::And(cs) => cs.iter().all(|c| c.eval(truth)),
            Lineage::Or(cs) => cs.iter().any(|c| c.eval(truth)),
        }
    }
}

/// Marginal probabilities of base variables, all in `(0, 1]`.
#[derive(Debug, Clone, Default)]
pub struct ProbMap(HashMap<Arc<str>, f64>);

impl ProbMap {
    pub fn new() -> ProbMap {
        ProbMap::default()
    }

    pub fn insert(&mut self, var: Arc<str>, p: f64) {
        self.0.insert(var, p);
    }

    pub fn get(&self, var: &str) -> Option<f64> {
        self.0.get(var).copied()
    }

    pub fn of(entries: &[(&str, f64)]) -> ProbMap {
        let mut pm = ProbMap::new();
        for (v, p) in entries {
            pm.insert(Arc::from(*v), *p);
        }
        pm
    }
}

/// Conjunction used for overlapping windows. Flattens one level when an
/// argument is already a conjunction.
pub fn land(l: &Lineage, r: &Lineage) -> Result<Lineage> {
    if l.is_null() || r.is_null() {
        return Err(Error::NullLineage("land"));
    }
    let mut children = match l {
        Lineage::And(cs) => cs.clone(),
        other => vec![other.clone()],
    };
    match r {
        Lineage::And(cs) => children.extend(cs.iter().cloned()),
        other => children.push(other.clone()),
    }
    Ok(Lineage::And(children))
}

/// `l AND NOT r`, the concatenation for negating windows.
pub fn land_not(l: &Lineage, r: &Lineage) -> Result<Lineage> {
    if l.is_null() || r.is_null() {
        return Err(Error::NullLineage("land_not"));
    }
    Ok(Lineage::And(vec![
        l.clone(),
        Lineage::Not(Box::new(r.clone())),
    ]))
}

/// Disjunction of one or more lineages; a singleton is returned as-is.
pub fn lor_all(ls: &[Lineage]) -> Result<Lineage> {
    if ls.is_empty() {
        return Err(Error::EmptyDisjunction);
    }
    if ls.iter().any(Lineage::is_null) {
        return Err(Error::NullLineage("lor_all"));
    }
    if ls.len() == 1 {
        return Ok(ls[0].clone());
    }
    Ok(Lineage::Or(ls.to_vec()))
}

/// Semantic equivalence: the formulas agree on every assignment of their
/// combined variables. `Null` is equivalent only to `Null`.
pub fn equivalent(l: &Lineage, r: &Lineage) -> Result<bool> {
    match (l.is_null(), r.is_null()) {
        (true, true) => return Ok(true),
        (true, false) | (false, true) => return Ok(false),
        (false, false) => {}
    }
    let mut vars = l.vars();
    vars.extend(r.vars());
    let vars: Vec<Arc<str>> = vars.into_iter().collect();
    if vars.len() > EQUIVALENCE_CAP {
        return Err(Error::VarCap {
            what: "equivalence check",
            vars: vars.len(),
            cap: EQUIVALENCE_CAP,
        });
    }
    let index: HashMap<&str, usize> = vars
        .iter()
        .enumerate()
        .map(|(i, v)| (v.as_ref(), i))
        .collect();
    for mask in 0u64..(1u64 << vars.len()) {
        let truth = |name: &str| mask & (1 << index[name]) != 0;
        if l.eval(&truth) != r.eval(&truth) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Exact probability that the formula holds under independent variables.
///
/// Read-once formulas are valued compositionally (`p(and) = prod`,
/// `p(or) = 1 - prod(1-p)`, `p(not) = 1 - p`); anything else falls back to
/// exhaustive assignment enumeration up to [`ENUMERATION_CAP`] variables.
pub fn probability(l: &Lineage, pm: &ProbMap) -> Result<f64> {
    if l.is_null() {
        return Err(Error::NullLineage("probability"));
    }
    let vars: Vec<Arc<str>> = l.vars().into_iter().collect();
    for v in &vars {
        if pm.get(v).is_none() {
            return Err(Error::UncoveredVar(v.to_string()));
        }
    }
    if l.is_read_once() {
        // Clamp representation noise; a valuation never leaves [0, 1].
        return Ok(prob_read_once(l, pm).clamp(0.0, 1.0));
    }
    if vars.len() > ENUMERATION_CAP {
        return Err(Error::VarCap {
            what: "probability enumeration",
            vars: vars.len(),
            cap: ENUMERATION_CAP,
        });
    }
    let probs: Vec<f64> = vars.iter().map(|v| pm.get(v).unwrap()).collect();
    let index: HashMap<&str, usize> = vars
        .iter()
        .enumerate()
        .map(|(i, v)| (v.as_ref(), i))
        .collect();
    let mut total = 0.0;
    for mask in 0u64..(1u64 << vars.len()) {
        let truth = |name: &str| mask & (1 << index[name]) != 0;
        if l.eval(&truth) {
            let mut w = 1.0;
            for (i, p) in probs.iter().enumerate() {
                w *= if mask & (1 << i) != 0 { *p } else { 1.0 - *p };
            }
            total += w;
        }
    }
    Ok(total.clamp(0.0, 1.0))
}

fn prob_read_once(l: &Lineage, pm: &ProbMap) -> f64 {
    match l {
        Lineage::Null => 0.0,
        Lineage::Var(v) => pm.get(v).unwrap(),
        Lineage::Not(c) => 1.0 - prob_read_once(c, pm),
        Lineage::And(cs) => cs.iter().map(|c| prob_read_once(c, pm)).product(),
        Lineage::Or(cs) => {
            1.0 - cs
                .iter()
                .map(|c| 1.0 - prob_read_once(c, pm))
                .product::<f64>()
        }
    }
}

// ── Serialization ───────────────────────────────────────────────────────
//
// Grammar: expr := term ('|' term)*; term := factor ('&' factor)*;
//          factor := '!' factor | '(' expr ')' | IDENT; null := '-'.
// Children render in construction order; parentheses appear exactly where
// re-parsing needs them, so parse(render(l)) reproduces the tree.

impl fmt::Display for Lineage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Lineage::Null => f.write_str("-"),
            Lineage::Var(v) => f.write_str(v),
            Lineage::Not(c) => {
                f.write_str("!")?;
                if matches!(**c, Lineage::Var(_)) {
                    write!(f, "{c}")
                } else {
                    write!(f, "({c})")
                }
            }
            Lineage::And(cs) => {
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        f.write_str("&")?;
                    }
                    if matches!(c, Lineage::And(_) | Lineage::Or(_)) {
                        write!(f, "({c})")?;
                    } else {
                        write!(f, "{c}")?;
                    }
                }
                Ok(())
            }
            Lineage::Or(cs) => {
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        f.write_str("|")?;
                    }
                    if matches!(c, Lineage::Or(_)) {
                        write!(f, "({c})")?;
                    } else {
                        write!(f, "{c}")?;
                    }
                }
                Ok(())
            }
        }
    }
}

pub fn render_lineage(l: &Lineage) -> String {
    l.to_string()
}

pub fn parse_lineage(text: &str) -> Result<Lineage> {
    let mut p = Parser {
        bytes: text.as_bytes(),
        pos: 0,
    };
    p.skip_ws();
    if p.peek() == Some(b'-') {
        p.pos += 1;
        p.skip_ws();
        return match p.peek() {
            None => Ok(Lineage::Null),
            Some(_) => Err(p.err("`-` must stand alone")),
        };
    }
    let expr = p.expr()?;
    p.skip_ws();
    match p.peek() {
        None => Ok(expr),
        Some(c) => Err(p.err(&format!("unexpected `{}`", c as char))),
    }
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b' ' | b'\t')) {
            self.pos += 1;
        }
    }

    fn err(&self, message: &str) -> Error {
        Error::Syntax {
            pos: self.pos,
            message: message.to_string(),
        }
    }

    fn expr(&mut self) -> Result<Lineage> {
        let mut terms = vec![self.term()?];
        loop {
            self.skip_ws();
            if self.peek() == Some(b'|') {
                self.pos += 1;
                terms.push(self.term()?);
            } else {
                break;
            }
        }
        Ok(if terms.len() == 1 {
            terms.pop().unwrap()
        } else {
            Lineage::Or(terms)
        })
    }

    fn term(&mut self) -> Result<Lineage> {
        let mut factors = vec![self.factor()?];
        loop {
            self.skip_ws();
            if self.peek() == Some(b'&') {
                self.pos += 1;
                factors.push(self.factor()?);
            } else {
                break;
            }
        }
        Ok(if factors.len() == 1 {
            factors.pop().unwrap()
        } else {
            Lineage::And(factors)
        })
    }

    fn factor(&mut self) -> Result<Lineage> {
        self.skip_ws();
        match self.peek() {
            Some(b'!') => {
                self.pos += 1;
                Ok(Lineage::Not(Box::new(self.factor()?)))
            }
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.skip_ws();
                if self.peek() != Some(b')') {
                    return Err(self.err("expected `)`"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c == b'_' || c.is_ascii_alphabetic() => {
                let start = self.pos;
                while matches!(self.peek(), Some(c) if c == b'_' || c.is_ascii_alphanumeric()) {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
                Ok(Lineage::var(name))
            }
            Some(c) => Err(self.err(&format!("unexpected `{}`", c as char))),
            None => Err(self.err("unexpected end of input")),
        }
    }
}
