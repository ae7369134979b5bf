//! The join condition over pairs of facts: a conjunction of column
//! comparisons, resolved against the left and right schemas at parse time.
//!
//! Only conjunctions are supported; `true` is the empty conjunction.
//! Temporal overlap is never part of a condition here, the engine handles it.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::{ColumnType, Fact, Schema, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    fn name(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Operand {
    Col { side: Side, index: usize, name: String },
    Lit(Value),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    fn is_ordered(self) -> bool {
        matches!(self, CmpOp::Lt | CmpOp::Le | CmpOp::Gt | CmpOp::Ge)
    }

    fn text(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Comparison {
    lhs: Operand,
    op: CmpOp,
    rhs: Operand,
}

/// A validated condition; the empty conjunction is `true`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Theta {
    conjuncts: Vec<Comparison>,
}

impl Theta {
    /// The always-true condition.
    pub fn always() -> Theta {
        Theta { conjuncts: vec![] }
    }

    pub fn parse(text: &str, left: &Schema, right: &Schema) -> Result<Theta> {
        let mut p = CondParser {
            bytes: text.as_bytes(),
            pos: 0,
            left,
            right,
        };
        p.skip_ws();
        if p.rest().starts_with("true") {
            p.pos += 4;
            p.skip_ws();
            return if p.pos == p.bytes.len() {
                Ok(Theta::always())
            } else {
                Err(p.err("`true` must stand alone"))
            };
        }
        let mut conjuncts = vec![p.comparison()?];
        loop {
            p.skip_ws();
            if p.peek() == Some(b'&') {
                p.pos += 1;
                conjuncts.push(p.comparison()?);
            } else {
                break;
            }
        }
        if p.pos != p.bytes.len() {
            return Err(p.err("trailing input"));
        }
        Ok(Theta { conjuncts })
    }

    /// Evaluates the condition on a pair of facts that match the schemas the
    /// condition was parsed against.
    pub fn eval(&self, lf: &Fact, rf: &Fact) -> bool {
        self.conjuncts.iter().all(|c| {
            let lhs = resolve(&c.lhs, lf, rf);
            let rhs = resolve(&c.rhs, lf, rf);
            compare(lhs, c.op, rhs)
        })
    }

    /// Fixes one side's fact, yielding a predicate over the other side.
    pub fn instantiate(&self, side: Side, fact: &Fact) -> PartialPredicate {
        PartialPredicate {
            theta: self.clone(),
            side,
            fact: fact.clone(),
        }
    }

    /// The same condition with the relations swapped: every `l.` reference
    /// becomes `r.` and vice versa. Used when a pipeline runs with its
    /// arguments reversed.
    pub fn flipped(&self) -> Theta {
        let flip = |o: &Operand| match o {
            Operand::Col { side, index, name } => Operand::Col {
                side: match side {
                    Side::Left => Side::Right,
                    Side::Right => Side::Left,
                },
                index: *index,
                name: name.clone(),
            },
            other => other.clone(),
        };
        Theta {
            conjuncts: self
                .conjuncts
                .iter()
                .map(|c| Comparison {
                    lhs: flip(&c.lhs),
                    op: c.op,
                    rhs: flip(&c.rhs),
                })
                .collect(),
        }
    }

    /// Splits out `l.col = r.col` conjuncts usable as a hash-partition key;
    /// returns the key column pairs and the residual condition.
    pub fn equijoin_keys(&self) -> (Vec<(usize, usize)>, Theta) {
        let mut keys = Vec::new();
        let mut residual = Vec::new();
        for c in &self.conjuncts {
            match (&c.lhs, c.op, &c.rhs) {
                (
                    Operand::Col { side: Side::Left, index: li, .. },
                    CmpOp::Eq,
                    Operand::Col { side: Side::Right, index: ri, .. },
                ) => keys.push((*li, *ri)),
                (
                    Operand::Col { side: Side::Right, index: ri, .. },
                    CmpOp::Eq,
                    Operand::Col { side: Side::Left, index: li, .. },
                ) => keys.push((*li, *ri)),
                _ => residual.push(c.clone()),
            }
        }
        (keys, Theta { conjuncts: residual })
    }

    pub fn is_always_true(&self) -> bool {
        self.conjuncts.is_empty()
    }
}

impl fmt::Display for Theta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.conjuncts.is_empty() {
            return f.write_str("true");
        }
        for (i, c) in self.conjuncts.iter().enumerate() {
            if i > 0 {
                f.write_str(" & ")?;
            }
            let side = |o: &Operand| match o {
                Operand::Col { side, name, .. } => match side {
                    Side::Left => format!("l.{name}"),
                    Side::Right => format!("r.{name}"),
                },
                Operand::Lit(Value::Int(v)) => v.to_string(),
                Operand::Lit(Value::Str(s)) => format!("'{s}'"),
            };
            write!(f, "{} {} {}", side(&c.lhs), c.op.text(), side(&c.rhs))?;
        }
        Ok(())
    }
}

fn resolve<'a>(o: &'a Operand, lf: &'a Fact, rf: &'a Fact) -> &'a Value {
    match o {
        Operand::Col { side: Side::Left, index, .. } => &lf.values()[*index],
        Operand::Col { side: Side::Right, index, .. } => &rf.values()[*index],
        Operand::Lit(v) => v,
    }
}

fn compare(lhs: &Value, op: CmpOp, rhs: &Value) -> bool {
    match op {
        CmpOp::Eq => lhs == rhs,
        CmpOp::Ne => lhs != rhs,
        CmpOp::Lt => lhs < rhs,
        CmpOp::Le => lhs <= rhs,
        CmpOp::Gt => lhs > rhs,
        CmpOp::Ge => lhs >= rhs,
    }
}

/// One-fact predicate produced by [`Theta::instantiate`]: tests candidate
/// facts of the opposite relation.
#[derive(Debug, Clone)]
pub struct PartialPredicate {
    theta: Theta,
    side: Side,
    fact: Fact,
}

impl PartialPredicate {
    pub fn matches(&self, other: &Fact) -> bool {
        match self.side {
            Side::Left => self.theta.eval(&self.fact, other),
            Side::Right => self.theta.eval(other, &self.fact),
        }
    }
}

struct CondParser<'a> {
    bytes: &'a [u8],
    pos: usize,
    left: &'a Schema,
    right: &'a Schema,
}

impl<'a> CondParser<'a> {
    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn rest(&self) -> &str {
        std::str::from_utf8(&self.bytes[self.pos..]).unwrap_or("")
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

    fn comparison(&mut self) -> Result<Comparison> {
        let lhs = self.operand()?;
        self.skip_ws();
        let op = self.cmp_op()?;
        let rhs = self.operand()?;
        self.typecheck(&lhs, op, &rhs)?;
        Ok(Comparison { lhs, op, rhs })
    }

    fn cmp_op(&mut self) -> Result<CmpOp> {
        let two = |p: &mut Self, op| {
            p.pos += 2;
            Ok(op)
        };
        match (self.peek(), self.bytes.get(self.pos + 1).copied()) {
            (Some(b'!'), Some(b'=')) => two(self, CmpOp::Ne),
            (Some(b'<'), Some(b'=')) => two(self, CmpOp::Le),
            (Some(b'>'), Some(b'=')) => two(self, CmpOp::Ge),
            (Some(b'='), _) => {
                self.pos += 1;
                Ok(CmpOp::Eq)
            }
            (Some(b'<'), _) => {
                self.pos += 1;
                Ok(CmpOp::Lt)
            }
            (Some(b'>'), _) => {
                self.pos += 1;
                Ok(CmpOp::Gt)
            }
            _ => Err(self.err("expected a comparison operator")),
        }
    }

    fn operand(&mut self) -> Result<Operand> {
        self.skip_ws();
        let rest = self.rest();
        if rest.starts_with("l.") || rest.starts_with("r.") {
            let side = if rest.starts_with("l.") {
                Side::Left
            } else {
                Side::Right
            };
            self.pos += 2;
            let name = self.ident()?;
            let schema = match side {
                Side::Left => self.left,
                Side::Right => self.right,
            };
            let index = schema
                .index_of(&name)
                .ok_or_else(|| Error::UnknownColumn {
                    name: name.clone(),
                    side: side.name(),
                })?;
            return Ok(Operand::Col { side, index, name });
        }
        match self.peek() {
            Some(b'\'') => {
                self.pos += 1;
                let start = self.pos;
                while self.peek().is_some_and(|c| c != b'\'') {
                    self.pos += 1;
                }
                if self.peek() != Some(b'\'') {
                    return Err(self.err("unterminated string literal"));
                }
                let s = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
                self.pos += 1;
                Ok(Operand::Lit(Value::Str(Arc::from(s))))
            }
            Some(c) if c == b'-' || c.is_ascii_digit() => {
                let start = self.pos;
                if c == b'-' {
                    self.pos += 1;
                }
                while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                    self.pos += 1;
                }
                let text = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
                text.parse()
                    .map(|v| Operand::Lit(Value::Int(v)))
                    .map_err(|_| self.err("bad integer literal"))
            }
            _ => Err(self.err("expected l.<col>, r.<col>, an integer or a quoted string")),
        }
    }

    fn ident(&mut self) -> Result<String> {
        let start = self.pos;
        if !matches!(self.peek(), Some(c) if c == b'_' || c.is_ascii_alphabetic()) {
            return Err(self.err("expected a column name"));
        }
        while matches!(self.peek(), Some(c) if c == b'_' || c.is_ascii_alphanumeric()) {
            self.pos += 1;
        }
        Ok(std::str::from_utf8(&self.bytes[start..self.pos])
            .unwrap()
            .to_string())
    }

    fn operand_type(&self, o: &Operand) -> ColumnType {
        match o {
            Operand::Col { side, index, .. } => {
                let schema = match side {
                    Side::Left => self.left,
                    Side::Right => self.right,
                };
                schema.columns()[*index].ty
            }
            Operand::Lit(Value::Int(_)) => ColumnType::Int,
            Operand::Lit(Value::Str(_)) => ColumnType::Str,
        }
    }

    fn typecheck(&self, lhs: &Operand, op: CmpOp, rhs: &Operand) -> Result<()> {
        let (lt, rt) = (self.operand_type(lhs), self.operand_type(rhs));
        if lt != rt {
            return Err(Error::ConditionType(format!(
                "cannot compare {lt:?} with {rt:?}"
            )));
        }
        if op.is_ordered() && lt == ColumnType::Str {
            return Err(Error::ConditionType(format!(
                "ordered operator `{}` is not defined on strings",
                op.text()
            )));
        }
        Ok(())
    }
}
