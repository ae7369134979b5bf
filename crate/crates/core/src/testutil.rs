//! Fixtures shared by the unit tests: the booking-website example relations
//! and small relation builders.

use std::sync::Arc;

use crate::lineage::ProbMap;
use crate::model::{ColumnType, Fact, Interval, Schema, TpRelation, TpTuple, Value};
use crate::theta::Theta;
use crate::windows::Window;

/// Relation `a`: who wants to visit which location, with prediction
/// probabilities.
pub fn visits() -> TpRelation {
    let schema = Schema::of(&[("Name", ColumnType::Str), ("Loc", ColumnType::Str)]);
    let rows = [
        (("Ann", "ZAK"), "a1", (2, 8), 0.7),
        (("Jim", "WEN"), "a2", (7, 10), 0.8),
    ];
    build(schema, &rows)
}

/// Relation `b`: hotel availability per location.
pub fn hotels() -> TpRelation {
    let schema = Schema::of(&[("Hotel", ColumnType::Str), ("Loc", ColumnType::Str)]);
    let rows = [
        (("hotel3", "SOR"), "b1", (1, 4), 0.9),
        (("hotel2", "ZAK"), "b2", (5, 8), 0.6),
        (("hotel1", "ZAK"), "b3", (4, 6), 0.7),
    ];
    build(schema, &rows)
}

type TwoColumnRow<'a> = ((&'a str, &'a str), &'a str, (i64, i64), f64);

fn build(schema: Schema, rows: &[TwoColumnRow]) -> TpRelation {
    let tuples = rows
        .iter()
        .map(|((c1, c2), var, (ts, te), p)| TpTuple {
            fact: Fact::new(vec![Value::str(c1), Value::str(c2)]),
            var: Arc::from(*var),
            interval: Interval::of(*ts, *te),
            p: *p,
        })
        .collect();
    TpRelation::new(schema, tuples).unwrap()
}

pub fn loc_eq() -> Theta {
    Theta::parse("l.Loc = r.Loc", visits().schema(), hotels().schema()).unwrap()
}

pub fn combined_probs() -> ProbMap {
    let mut pm = ProbMap::new();
    visits().prob_map_into(&mut pm);
    hotels().prob_map_into(&mut pm);
    pm
}

/// One `k:str` column; rows are `(fact value, var, ts, te, p)`.
pub fn single_column_relation(rows: &[(&str, &str, i64, i64, f64)]) -> TpRelation {
    let schema = Schema::of(&[("k", ColumnType::Str)]);
    let tuples = rows
        .iter()
        .map(|(value, var, ts, te, p)| TpTuple {
            fact: Fact::new(vec![Value::str(value)]),
            var: Arc::from(*var),
            interval: Interval::of(*ts, *te),
            p: *p,
        })
        .collect();
    TpRelation::new(schema, tuples).unwrap()
}

/// Compact one-line-per-window rendering for assertions.
pub fn windows_digest(windows: &[Window]) -> Vec<String> {
    windows
        .iter()
        .map(|w| {
            format!(
                "{} {} {} {} {} {}",
                w.class().tag(),
                w.f_r(),
                w.f_s().map(|f| f.render()).unwrap_or_else(|| "-".into()),
                w.lam_r(),
                w.lam_s(),
                w.interval()
            )
        })
        .collect()
}
