//! Temporal-probabilistic (TP) join engine.
//!
//! A TP relation annotates every tuple with a lineage variable, a half-open
//! validity interval and a marginal probability. This crate computes TP outer
//! and anti joins by deriving three disjoint sets of lineage-aware temporal
//! windows from a single conventional overlap join:
//!
//! - **overlapping** windows pair an `r` tuple with a condition-matching `s`
//!   tuple over the intersection of their intervals,
//! - **unmatched** windows cover the subintervals of an `r` tuple where no
//!   matching `s` tuple is valid,
//! - **negating** windows cover the subintervals where one or more matching
//!   `s` tuples are valid, carrying the disjunction of their lineages so the
//!   output can express "all matches are false".
//!
//! The window pipeline lives in [`windows`]; [`joins`] turns windows into
//! result tuples for anti, left outer, right outer and full outer joins.
//! Two independent reference implementations cross-check the engine: a
//! per-timepoint snapshot oracle ([`oracle`]) and a temporal-alignment
//! baseline ([`baseline_ta`]).

pub mod baseline_ta;
pub mod bench;
pub mod error;
pub mod fuzz;
pub mod joins;
pub mod lineage;
pub mod model;
pub mod oracle;
pub mod synth;
pub mod theta;
pub mod windows;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
pub use joins::{negation_join, JoinOp, OutputTuple};
pub use lineage::{Lineage, ProbMap};
pub use model::{Fact, Interval, Schema, TimePoint, TpRelation, TpTuple, Value};
pub use theta::Theta;
pub use windows::{Window, WindowClass, WindowSets};
