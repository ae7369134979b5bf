//! Benchmark harness: runs engine/operation matrices over synthetic shifted
//! data and reports wall time, operator counters and the per-stage runtime
//! breakdown as a versioned machine-readable table.
//!
//! Timing excludes file IO; relations are built in memory and only the
//! operator pipelines are measured.

use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use crate::baseline_ta::ta_join;
use crate::error::{Error, Result};
use crate::joins::{negation_join, JoinOp, JoinReport};
use crate::model::TpRelation;
use crate::synth;
use crate::theta::Theta;

/// Bump when the report columns change.
pub const REPORT_VERSION: u32 = 1;

pub const REPORT_COLUMNS: [&str; 12] = [
    "engine",
    "op",
    "size",
    "wall_ms",
    "join_execs",
    "windows_emitted",
    "output_rows",
    "clj_ms",
    "wu_ms",
    "wn_ms",
    "finalize_ms",
    "clj_fraction",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    Nj,
    Ta,
}

impl Engine {
    pub fn name(&self) -> &'static str {
        match self {
            Engine::Nj => "nj",
            Engine::Ta => "ta",
        }
    }
}

impl FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Engine> {
        match s {
            "nj" => Ok(Engine::Nj),
            "ta" => Ok(Engine::Ta),
            other => Err(Error::Syntax {
                pos: 0,
                message: format!("unknown engine `{other}` (nj|ta)"),
            }),
        }
    }
}

/// One measured run.
#[derive(Debug, Clone)]
pub struct BenchRecord {
    pub engine: Engine,
    pub op: JoinOp,
    pub size: usize,
    pub wall_ms: f64,
    pub join_execs: u64,
    pub windows_emitted: u64,
    pub output_rows: u64,
    pub clj_ms: f64,
    pub wu_ms: f64,
    pub wn_ms: f64,
    pub finalize_ms: f64,
}

impl BenchRecord {
    /// Fractions of wall time attributed to the four measured stages; sums
    /// to one up to the glue between stages.
    pub fn stage_fraction_sum(&self) -> f64 {
        (self.clj_ms + self.wu_ms + self.wn_ms + self.finalize_ms) / self.wall_ms
    }

    pub fn clj_fraction(&self) -> f64 {
        self.clj_ms / self.wall_ms
    }
}

/// Times one engine run on prepared relations.
pub fn run_once(
    engine: Engine,
    op: JoinOp,
    left: &TpRelation,
    right: &TpRelation,
    th: &Theta,
) -> Result<BenchRecord> {
    let start = Instant::now();
    let (tuples, report): (_, JoinReport) = match engine {
        Engine::Nj => negation_join(left, right, th, op)?,
        Engine::Ta => ta_join(left, right, th, op)?,
    };
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    drop(tuples);
    Ok(BenchRecord {
        engine,
        op,
        size: left.len(),
        wall_ms,
        join_execs: report.pipeline.join_execs,
        windows_emitted: report.pipeline.windows_emitted,
        output_rows: report.output_rows,
        clj_ms: report.pipeline.overlap_ms,
        wu_ms: report.pipeline.lawa_u_ms,
        wn_ms: report.pipeline.lawa_n_ms,
        finalize_ms: report.finalize_ms,
    })
}

/// Builds version-history-shaped data of the largest size, subsets a prefix
/// per requested size, derives the right side by interval shifting, and
/// times every (engine, op) combination.
pub fn run_matrix(
    sizes: &[usize],
    ops: &[JoinOp],
    engines: &[Engine],
    seed: u64,
) -> Result<Vec<BenchRecord>> {
    let max = sizes.iter().copied().max().unwrap_or(0);
    let base = synth::webkit_like(max, seed);
    let mut records = Vec::new();
    for &size in sizes {
        let left = synth::prefix(&base, size);
        let right = left.generate_shifted(seed.wrapping_add(1), "s")?;
        let th = Theta::parse("l.path = r.path", left.schema(), right.schema())?;
        for &engine in engines {
            for &op in ops {
                records.push(run_once(engine, op, &left, &right, &th)?);
            }
        }
    }
    Ok(records)
}

pub fn write_report(records: &[BenchRecord], out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "#tpjoin-bench-report\tv{REPORT_VERSION}")?;
    writeln!(out, "{}", REPORT_COLUMNS.join("\t"))?;
    for r in records {
        writeln!(
            out,
            "{}\t{}\t{}\t{:.3}\t{}\t{}\t{}\t{:.3}\t{:.3}\t{:.3}\t{:.3}\t{:.4}",
            r.engine.name(),
            r.op.name(),
            r.size,
            r.wall_ms,
            r.join_execs,
            r.windows_emitted,
            r.output_rows,
            r.clj_ms,
            r.wu_ms,
            r.wn_ms,
            r.finalize_ms,
            r.clj_fraction(),
        )?;
    }
    Ok(())
}
