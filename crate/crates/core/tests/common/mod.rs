//! Shared helpers for the integration suites: the booking-website example
//! and deterministic random-formula generators.
//!
//! Each test binary compiles its own copy, so not every helper is used
//! everywhere.
#![allow(dead_code)]

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tpjoin_core::lineage::{Lineage, ProbMap};
use tpjoin_core::model::TpRelation;
use tpjoin_core::theta::Theta;
use tpjoin_core::windows::Window;

pub const VISITS_TSV: &str = "Name:str\tLoc:str\tvar\tts\tte\tp\n\
                              Ann\tZAK\ta1\t2\t8\t0.7\n\
                              Jim\tWEN\ta2\t7\t10\t0.8\n";

pub const HOTELS_TSV: &str = "Hotel:str\tLoc:str\tvar\tts\tte\tp\n\
                              hotel3\tSOR\tb1\t1\t4\t0.9\n\
                              hotel2\tZAK\tb2\t5\t8\t0.6\n\
                              hotel1\tZAK\tb3\t4\t6\t0.7\n";

pub fn visits() -> TpRelation {
    TpRelation::parse_tsv(VISITS_TSV, "visits.tsv").unwrap()
}

pub fn hotels() -> TpRelation {
    TpRelation::parse_tsv(HOTELS_TSV, "hotels.tsv").unwrap()
}

pub fn loc_eq() -> Theta {
    Theta::parse("l.Loc = r.Loc", visits().schema(), hotels().schema()).unwrap()
}


/// Random formula over `x0..x{pool}` with repetition allowed.
pub fn random_formula(rng: &mut ChaCha8Rng, pool: usize, depth: usize) -> Lineage {
    if depth == 0 || rng.gen_bool(0.35) {
        return Lineage::var(&format!("x{}", rng.gen_range(0..pool)));
    }
    match rng.gen_range(0..3) {
        0 => Lineage::Not(Box::new(random_formula(rng, pool, depth - 1))),
        1 => {
            let n = rng.gen_range(2..=3);
            Lineage::And((0..n).map(|_| random_formula(rng, pool, depth - 1)).collect())
        }
        _ => {
            let n = rng.gen_range(2..=3);
            Lineage::Or((0..n).map(|_| random_formula(rng, pool, depth - 1)).collect())
        }
    }
}

/// Random formula in which each of `n` fresh variables occurs exactly once.
pub fn random_read_once(rng: &mut ChaCha8Rng, n: usize) -> Lineage {
    let vars: Vec<Lineage> = (0..n).map(|i| Lineage::var(&format!("x{i}"))).collect();
    build_read_once(rng, &vars)
}

fn build_read_once(rng: &mut ChaCha8Rng, vars: &[Lineage]) -> Lineage {
    match vars.len() {
        0 => unreachable!("read-once formulas need at least one variable"),
        1 => {
            if rng.gen_bool(0.25) {
                Lineage::Not(Box::new(vars[0].clone()))
            } else {
                vars[0].clone()
            }
        }
        len => {
            let split = rng.gen_range(1..len);
            let (a, b) = vars.split_at(split);
            let (left, right) = (build_read_once(rng, a), build_read_once(rng, b));
            let node = if rng.gen_bool(0.5) {
                Lineage::And(vec![left, right])
            } else {
                Lineage::Or(vec![left, right])
            };
            if rng.gen_bool(0.2) {
                Lineage::Not(Box::new(node))
            } else {
                node
            }
        }
    }
}

/// Probabilities for `x0..x{pool}` on a deterministic grid.
pub fn grid_probs(pool: usize) -> ProbMap {
    let mut pm = ProbMap::new();
    for i in 0..pool {
        pm.insert(
            Arc::from(format!("x{i}")),
            0.05 + 0.9 * (i as f64 + 0.5) / pool as f64,
        );
    }
    pm
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One line per window: class, facts, lineages, interval.
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
