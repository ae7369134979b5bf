//! `tpjoin`: compute temporal-probabilistic joins, inspect window sets,
//! validate and generate relations, fuzz the engines against the snapshot
//! oracle and run the benchmark matrix.
//!
//! Exit codes: 0 success, 1 assertion or mismatch, 2 usage or parse error.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tpjoin_core::baseline_ta::ta_join;
use tpjoin_core::bench::{run_matrix, write_report, Engine};
use tpjoin_core::joins::{negation_join, write_output_tsv, JoinOp, JoinReport, OutputTuple};
use tpjoin_core::model::TpRelation;
use tpjoin_core::oracle::snapshot_join;
use tpjoin_core::theta::Theta;
use tpjoin_core::windows::{window_sets, Window};
use tpjoin_core::{fuzz, Error};

#[derive(Parser)]
#[command(name = "tpjoin", version, about = "Temporal-probabilistic join engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct IoArgs {
    /// Left input relation (TSV).
    #[arg(long)]
    left: PathBuf,
    /// Right input relation (TSV).
    #[arg(long)]
    right: PathBuf,
    /// Join condition over the fact columns, e.g. "l.Loc = r.Loc".
    #[arg(long, default_value = "true")]
    theta: String,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a TP join (anti, left, right or full outer).
    Join {
        #[command(flatten)]
        io: IoArgs,
        /// anti | left | right | full
        #[arg(long)]
        op: String,
        /// nj | ta | oracle
        #[arg(long, default_value = "nj")]
        engine: String,
    },
    /// Dump the window sets of the left relation with respect to the right.
    Windows {
        #[command(flatten)]
        io: IoArgs,
        /// unmatched | overlapping | negating | all
        #[arg(long, default_value = "all")]
        set: String,
    },
    /// Check that relations load and satisfy every invariant.
    Validate {
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: Option<PathBuf>,
    },
    /// Derive a companion relation by shifting intervals.
    Gen {
        /// Base relation (TSV).
        #[arg(long)]
        base: PathBuf,
        #[arg(long)]
        seed: u64,
        /// Prefix for the fresh variable identifiers.
        #[arg(long, default_value = "s")]
        prefix: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Differential fuzzing of all engines on random small instances.
    Fuzz {
        #[arg(long, default_value_t = 100)]
        instances: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Benchmark matrix over synthetic shifted data.
    Bench {
        /// Comma-separated input sizes (tuples per side).
        #[arg(long)]
        sizes: String,
        /// Comma-separated ops: anti,left,right,full
        #[arg(long, default_value = "left")]
        ops: String,
        /// Comma-separated engines: nj,ta
        #[arg(long, default_value = "nj,ta")]
        engines: String,
        /// Report output path.
        #[arg(long)]
        report: PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CmdError::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CmdError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

enum CmdError {
    /// Assertion or mismatch: exit 1.
    Data(String),
    /// Usage or parse problem: exit 2.
    Usage(String),
}

impl From<Error> for CmdError {
    fn from(e: Error) -> CmdError {
        match e {
            Error::Io { .. }
            | Error::Load { .. }
            | Error::Syntax { .. }
            | Error::UnknownColumn { .. }
            | Error::ConditionType(_) => CmdError::Usage(e.to_string()),
            _ => CmdError::Data(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CmdError {
    fn from(e: std::io::Error) -> CmdError {
        CmdError::Data(format!("I/O error: {e}"))
    }
}

type CmdResult = Result<(), CmdError>;

fn run(command: Command) -> CmdResult {
    match command {
        Command::Join { io, op, engine } => cmd_join(io, &op, &engine),
        Command::Windows { io, set } => cmd_windows(io, &set),
        Command::Validate { left, right } => cmd_validate(&left, right.as_deref()),
        Command::Gen {
            base,
            seed,
            prefix,
            out,
        } => cmd_gen(&base, seed, &prefix, out),
        Command::Fuzz { instances, seed } => cmd_fuzz(instances, seed),
        Command::Bench {
            sizes,
            ops,
            engines,
            report,
            seed,
        } => cmd_bench(&sizes, &ops, &engines, &report, seed),
    }
}

fn load_pair(io: &IoArgs) -> Result<(TpRelation, TpRelation, Theta), CmdError> {
    let left = TpRelation::load(&io.left)?;
    let right = TpRelation::load(&io.right)?;
    let theta = Theta::parse(&io.theta, left.schema(), right.schema())?;
    Ok((left, right, theta))
}

fn open_out(path: &Option<PathBuf>) -> Result<Box<dyn Write>, CmdError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| {
            CmdError::Usage(format!("cannot create {}: {e}", p.display()))
        })?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn cmd_join(io: IoArgs, op: &str, engine: &str) -> CmdResult {
    let (left, right, theta) = load_pair(&io)?;
    let op: JoinOp = op.parse()?;
    let (tuples, report): (Vec<OutputTuple>, Option<JoinReport>) = match engine {
        "nj" => {
            let (t, r) = negation_join(&left, &right, &theta, op)?;
            (t, Some(r))
        }
        "ta" => {
            let (t, r) = ta_join(&left, &right, &theta, op)?;
            (t, Some(r))
        }
        "oracle" => (snapshot_join(&left, &right, &theta, op)?, None),
        other => {
            return Err(CmdError::Usage(format!(
                "unknown engine `{other}` (nj|ta|oracle)"
            )))
        }
    };
    let mut out = open_out(&io.out)?;
    write_output_tsv(&tuples, left.schema(), right.schema(), &mut out)?;
    out.flush()?;
    match report {
        Some(r) => eprintln!(
            "rows={} join_execs={} xrecords={} windows={} clj_ms={:.3} wu_ms={:.3} wn_ms={:.3} finalize_ms={:.3}",
            tuples.len(),
            r.pipeline.join_execs,
            r.pipeline.xrecords,
            r.pipeline.windows_emitted,
            r.pipeline.overlap_ms,
            r.pipeline.lawa_u_ms,
            r.pipeline.lawa_n_ms,
            r.finalize_ms,
        ),
        None => eprintln!("rows={} engine=oracle", tuples.len()),
    }
    Ok(())
}

fn write_windows(out: &mut dyn Write, windows: &[&Window]) -> std::io::Result<()> {
    writeln!(out, "class\tf_r\tf_s\tlam_r\tlam_s\tts\tte")?;
    for w in windows {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            w.class().tag(),
            w.f_r().render(),
            w.f_s().map(|f| f.render()).unwrap_or_else(|| "-".into()),
            w.lam_r(),
            w.lam_s(),
            w.interval().ts(),
            w.interval().te(),
        )?;
    }
    Ok(())
}

fn cmd_windows(io: IoArgs, set: &str) -> CmdResult {
    let (left, right, theta) = load_pair(&io)?;
    let sets = window_sets(&left, &right, &theta)?;
    let selected: Vec<&Window> = match set {
        "unmatched" => sets.unmatched.iter().collect(),
        "overlapping" => sets.overlapping.iter().collect(),
        "negating" => sets.negating.iter().collect(),
        "all" => sets
            .unmatched
            .iter()
            .chain(&sets.overlapping)
            .chain(&sets.negating)
            .collect(),
        other => {
            return Err(CmdError::Usage(format!(
                "unknown window set `{other}` (unmatched|overlapping|negating|all)"
            )))
        }
    };
    let mut out = open_out(&io.out)?;
    write_windows(&mut out, &selected)?;
    out.flush()?;
    eprintln!(
        "unmatched={} overlapping={} negating={}",
        sets.unmatched.len(),
        sets.overlapping.len(),
        sets.negating.len()
    );
    Ok(())
}

fn cmd_validate(left: &std::path::Path, right: Option<&std::path::Path>) -> CmdResult {
    for path in std::iter::once(left).chain(right) {
        let rel = TpRelation::load(path)?;
        let (mut lo, mut hi) = (i64::MAX, i64::MIN);
        for t in rel.tuples() {
            lo = lo.min(t.interval.ts().0);
            hi = hi.max(t.interval.te().0);
        }
        let domain = if rel.is_empty() {
            "empty".to_string()
        } else {
            format!("[{lo},{hi})")
        };
        println!(
            "{}: ok, {} tuples, {} columns, domain {domain}",
            path.display(),
            rel.len(),
            rel.schema().len(),
        );
    }
    Ok(())
}

fn cmd_gen(base: &std::path::Path, seed: u64, prefix: &str, out: Option<PathBuf>) -> CmdResult {
    let rel = TpRelation::load(base)?;
    let shifted = rel.generate_shifted(seed, prefix)?;
    let mut w = open_out(&out)?;
    shifted.write_tsv(&mut w)?;
    w.flush()?;
    eprintln!("generated {} tuples", shifted.len());
    Ok(())
}

fn cmd_fuzz(instances: u64, seed: u64) -> CmdResult {
    match fuzz::run(instances, seed) {
        Ok(summary) => {
            println!(
                "fuzz ok: {} instances, {} engine comparisons",
                summary.instances, summary.comparisons
            );
            Ok(())
        }
        Err(failure) => Err(CmdError::Data(failure.to_string())),
    }
}

fn cmd_bench(sizes: &str, ops: &str, engines: &str, report: &std::path::Path, seed: u64) -> CmdResult {
    let sizes: Vec<usize> = sizes
        .split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| CmdError::Usage(format!("bad size `{s}`")))
        })
        .collect::<Result<_, _>>()?;
    let ops: Vec<JoinOp> = ops
        .split(',')
        .map(|s| s.trim().parse().map_err(CmdError::from))
        .collect::<Result<_, _>>()?;
    let engines: Vec<Engine> = engines
        .split(',')
        .map(|s| s.trim().parse().map_err(CmdError::from))
        .collect::<Result<_, _>>()?;

    let records = run_matrix(&sizes, &ops, &engines, seed)?;
    let mut file = BufWriter::new(
        File::create(report)
            .map_err(|e| CmdError::Usage(format!("cannot create {}: {e}", report.display())))?,
    );
    write_report(&records, &mut file)?;
    file.flush()?;
    for r in &records {
        eprintln!(
            "{} {} size={} wall_ms={:.3} join_execs={} clj_fraction={:.3}",
            r.engine.name(),
            r.op.name(),
            r.size,
            r.wall_ms,
            r.join_execs,
            r.clj_fraction()
        );
    }
    Ok(())
}
