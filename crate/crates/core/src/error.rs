//! Crate-wide error type.

use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed TSV input (bad header, wrong arity, unparsable field).
    #[error("{path}:{line}: {message}")]
    Load {
        path: PathBuf,
        line: usize,
        message: String,
    },

    /// Two tuples with the same fact have overlapping intervals.
    #[error("duplicate-free violation: tuples {first} and {second} carry fact ({fact}) over overlapping intervals")]
    DuplicateFree {
        first: String,
        second: String,
        fact: String,
    },

    #[error("duplicate variable identifier `{0}`")]
    DuplicateVar(String),

    #[error("probability {p} of tuple {var} outside (0, 1]")]
    ProbabilityRange { var: String, p: f64 },

    /// Syntax error in a lineage or theta expression, with byte offset.
    #[error("syntax error at offset {pos}: {message}")]
    Syntax { pos: usize, message: String },

    #[error("unknown column `{name}` on the {side} side")]
    UnknownColumn { name: String, side: &'static str },

    #[error("type error in condition: {0}")]
    ConditionType(String),

    #[error("null lineage passed to {0}")]
    NullLineage(&'static str),

    #[error("lor_all requires at least one operand")]
    EmptyDisjunction,

    #[error("variable `{0}` not covered by the probability map")]
    UncoveredVar(String),

    #[error("{what} over {vars} variables exceeds the {cap}-variable cap")]
    VarCap {
        what: &'static str,
        vars: usize,
        cap: usize,
    },

    /// A LAWA stream received input that violates its ordering contract.
    #[error("window stream contract violation: {0}")]
    StreamOrder(String),

    #[error("oracle time domain of {points} points exceeds the {cap}-point cap")]
    DomainCap { points: u64, cap: u64 },

    #[error("could not place a duplicate-free shifted interval after {0} attempts")]
    GenerationFailed(usize),

    #[error("{0} requires a nonempty relation")]
    EmptyRelation(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
