//! Deterministic synthetic data: benchmark-scale relations and the small
//! random instances the differential fuzz suite runs on.

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::model::{ColumnType, Fact, Interval, Schema, TpRelation, TpTuple, Value};
use crate::theta::Theta;

const PROB_CHOICES: [f64; 4] = [0.3, 0.5, 0.7, 0.9];

/// Version-history-shaped relation: one string fact column, roughly three
/// tuples per fact, each fact's tuples laid out on its own timeline with
/// random durations and gaps. Fact timelines start at random offsets over a
/// domain that grows with `n`, keeping the number of tuples valid per time
/// point moderate, and equality on `path` is selective.
pub fn webkit_like(n: usize, seed: u64) -> TpRelation {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let schema = Schema::of(&[("path", ColumnType::Str)]);
    let n_facts = (n / 3).max(1);
    let span = (n as i64 * 8).max(256);
    let mut cursors: Vec<i64> = (0..n_facts).map(|_| rng.gen_range(0..span)).collect();
    let mut tuples = Vec::with_capacity(n);
    for i in 0..n {
        let f = i % n_facts;
        let start = cursors[f] + rng.gen_range(0..=20);
        let len = rng.gen_range(1..=50);
        cursors[f] = start + len;
        tuples.push(TpTuple {
            fact: Fact::new(vec![Value::Str(Arc::from(format!("f{f}")))]),
            var: Arc::from(format!("w{i}")),
            interval: Interval::of(start, start + len),
            p: PROB_CHOICES[rng.gen_range(0..PROB_CHOICES.len())],
        });
    }
    TpRelation::new(schema, tuples).expect("per-fact timelines are disjoint")
}

/// Measurement-shaped relation: few facts (station, metric pairs), long
/// intervals, heavy temporal overlap across facts.
pub fn meteo_like(n: usize, seed: u64) -> TpRelation {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let schema = Schema::of(&[("Station_ID", ColumnType::Int), ("Value_ID", ColumnType::Int)]);
    const STATIONS: i64 = 80;
    const METRICS: i64 = 4;
    let n_facts = (STATIONS * METRICS) as usize;
    let span = (n as i64 * 16).max(1024);
    let mut cursors: Vec<i64> = (0..n_facts).map(|_| rng.gen_range(0..span / 4)).collect();
    let mut tuples = Vec::with_capacity(n);
    for i in 0..n {
        let f = i % n_facts;
        let (station, metric) = (f as i64 % STATIONS, f as i64 / STATIONS);
        let start = cursors[f] + rng.gen_range(0..=5);
        let len = rng.gen_range(20..=200);
        cursors[f] = start + len;
        tuples.push(TpTuple {
            fact: Fact::new(vec![Value::Int(station), Value::Int(metric)]),
            var: Arc::from(format!("m{i}")),
            interval: Interval::of(start, start + len),
            p: PROB_CHOICES[rng.gen_range(0..PROB_CHOICES.len())],
        });
    }
    TpRelation::new(schema, tuples).expect("per-fact timelines are disjoint")
}

/// The first `n` tuples of a relation; a prefix of a duplicate-free relation
/// is duplicate-free.
pub fn prefix(rel: &TpRelation, n: usize) -> TpRelation {
    let tuples: Vec<TpTuple> = rel.tuples().iter().take(n).cloned().collect();
    TpRelation::new(rel.schema().clone(), tuples).expect("prefix of a valid relation")
}

/// One randomly generated differential-test case.
#[derive(Debug, Clone)]
pub struct FuzzInstance {
    pub left: TpRelation,
    pub right: TpRelation,
    pub theta_text: String,
    pub theta: Theta,
}

impl FuzzInstance {
    /// Reproducer text: both relations plus the condition.
    pub fn dump(&self) -> String {
        let mut left = Vec::new();
        let mut right = Vec::new();
        self.left.write_tsv(&mut left).expect("in-memory write");
        self.right.write_tsv(&mut right).expect("in-memory write");
        format!(
            "theta: {}\n-- left --\n{}-- right --\n{}",
            self.theta_text,
            String::from_utf8(left).unwrap(),
            String::from_utf8(right).unwrap(),
        )
    }
}

/// Small instance over a 16-point domain: at most six tuples and two
/// distinct facts per side, probabilities from a four-value grid. Rich
/// enough to hit every sweep case and multi-expiry queue states while
/// staying inside the oracle caps.
pub fn random_instance(seed: u64) -> FuzzInstance {
    random_instance_with(seed, 6, 2, 16)
}

/// Denser variant for stress runs: still oracle-checkable (ten tuples per
/// side is twenty variables) but with longer overlap chains per group.
pub fn random_instance_stress(seed: u64) -> FuzzInstance {
    random_instance_with(seed, 10, 3, 64)
}

fn random_instance_with(seed: u64, max_tuples: usize, n_facts: usize, domain: i64) -> FuzzInstance {
    const FACTS: [&str; 4] = ["A", "B", "C", "D"];
    let facts = &FACTS[..n_facts];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let schema = Schema::of(&[("k", ColumnType::Str)]);

    let side = |prefix: &str, rng: &mut ChaCha8Rng| -> TpRelation {
        let n = rng.gen_range(0..=max_tuples);
        let mut placed: Vec<(usize, Interval)> = Vec::new();
        let mut tuples = Vec::new();
        for i in 0..n {
            let f = rng.gen_range(0..facts.len());
            let mut found = None;
            for _ in 0..16 {
                let ts = rng.gen_range(0..domain - 1);
                let te = rng.gen_range(ts + 1..=domain.min(ts + domain / 2));
                let cand = Interval::of(ts, te);
                if placed
                    .iter()
                    .all(|(pf, iv)| *pf != f || !iv.overlaps(&cand))
                {
                    found = Some(cand);
                    break;
                }
            }
            // Crowded fact: drop the tuple rather than violate
            // duplicate-freeness.
            let Some(interval) = found else { continue };
            placed.push((f, interval));
            tuples.push(TpTuple {
                fact: Fact::new(vec![Value::str(facts[f])]),
                var: Arc::from(format!("{prefix}{i}")),
                interval,
                p: PROB_CHOICES[rng.gen_range(0..PROB_CHOICES.len())],
            });
        }
        TpRelation::new(schema.clone(), tuples).expect("placement avoids overlap")
    };

    let left = side("a", &mut rng);
    let right = side("b", &mut rng);
    let theta_text = ["true", "l.k = r.k", "l.k != r.k"][rng.gen_range(0..3)].to_string();
    let theta = Theta::parse(&theta_text, left.schema(), right.schema()).expect("fixed grammar");
    FuzzInstance {
        left,
        right,
        theta_text,
        theta,
    }
}
