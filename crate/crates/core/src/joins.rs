//! TP joins with negation, built on the window pipeline.
//!
//! Every window finalizes into at most one output tuple: unmatched windows
//! pass `lam_r` through, negating windows produce `lam_r AND NOT lam_s`,
//! overlapping windows produce `lam_r AND lam_s` and are dropped entirely
//! for the anti join. The right outer join runs the pipeline with its
//! arguments reversed and swaps the fact slots back; the full outer join
//! adds a reversed anti pass to the left outer result so overlapping windows
//! are not produced twice.

use std::fmt::Write as _;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::lineage::{land, land_not, probability, Lineage, ProbMap};
use crate::model::{Fact, Interval, Schema, TpRelation};
use crate::theta::Theta;
use crate::windows::{window_pipeline, PipelineStats, Window, WindowClass};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum JoinOp {
    Anti,
    LeftOuter,
    RightOuter,
    FullOuter,
}

impl JoinOp {
    pub const ALL: [JoinOp; 4] = [
        JoinOp::Anti,
        JoinOp::LeftOuter,
        JoinOp::RightOuter,
        JoinOp::FullOuter,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            JoinOp::Anti => "anti",
            JoinOp::LeftOuter => "left",
            JoinOp::RightOuter => "right",
            JoinOp::FullOuter => "full",
        }
    }
}

impl FromStr for JoinOp {
    type Err = Error;

    fn from_str(s: &str) -> Result<JoinOp> {
        match s {
            "anti" => Ok(JoinOp::Anti),
            "left" => Ok(JoinOp::LeftOuter),
            "right" => Ok(JoinOp::RightOuter),
            "full" => Ok(JoinOp::FullOuter),
            other => Err(Error::Syntax {
                pos: 0,
                message: format!("unknown join op `{other}` (anti|left|right|full)"),
            }),
        }
    }
}

/// Which relation the window's `r` side corresponds to in the output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotSide {
    Forward,
    Reversed,
}

/// One result tuple. At least one fact slot is set and the lineage is never
/// null; `p` is its exact valuation under the base probabilities.
#[derive(Debug, Clone)]
pub struct OutputTuple {
    pub left: Option<Fact>,
    pub right: Option<Fact>,
    pub lam: Lineage,
    pub interval: Interval,
    pub p: f64,
}

/// Counters and timings of one join execution.
#[derive(Debug, Clone, Copy, Default)]
pub struct JoinReport {
    pub pipeline: PipelineStats,
    pub finalize_ms: f64,
    pub output_rows: u64,
}

/// Turns a window into an output tuple, or `None` when the window class is
/// filtered out by the operation (overlapping windows under an anti pass).
pub fn finalize_window(
    w: &Window,
    op: JoinOp,
    side: SlotSide,
    pm: &ProbMap,
) -> Result<Option<OutputTuple>> {
    let lam = match w.class() {
        WindowClass::Unmatched => w.lam_r().clone(),
        WindowClass::Negating => land_not(w.lam_r(), w.lam_s())?,
        WindowClass::Overlapping => {
            if op == JoinOp::Anti {
                return Ok(None);
            }
            land(w.lam_r(), w.lam_s())?
        }
    };
    let p = probability(&lam, pm)?;
    let (left, right) = match side {
        SlotSide::Forward => (Some(w.f_r().clone()), w.f_s().cloned()),
        SlotSide::Reversed => (w.f_s().cloned(), Some(w.f_r().clone())),
    };
    Ok(Some(OutputTuple {
        left,
        right,
        lam,
        interval: w.interval(),
        p,
    }))
}

#[allow(clippy::too_many_arguments)]
fn pipeline_pass(
    r: &TpRelation,
    s: &TpRelation,
    th: &Theta,
    op: JoinOp,
    side: SlotSide,
    pm: &ProbMap,
    report: &mut JoinReport,
    out: &mut Vec<OutputTuple>,
) -> Result<()> {
    let (windows, stats) = window_pipeline(r, s, th)?;
    report.pipeline.absorb(&stats);
    let t = Instant::now();
    for w in &windows {
        if let Some(tuple) = finalize_window(w, op, side, pm)? {
            out.push(tuple);
        }
    }
    drop(windows);
    report.finalize_ms += t.elapsed().as_secs_f64() * 1e3;
    Ok(())
}

/// Computes the TP join `op` of `r` and `s` under `th`. The result is a
/// valid TP relation over the combined fact slots: duplicate-free and
/// change-preserving.
pub fn negation_join(
    r: &TpRelation,
    s: &TpRelation,
    th: &Theta,
    op: JoinOp,
) -> Result<(Vec<OutputTuple>, JoinReport)> {
    let mut report = JoinReport::default();
    let t = Instant::now();
    let mut pm = ProbMap::new();
    r.prob_map_into(&mut pm);
    s.prob_map_into(&mut pm);
    report.finalize_ms += t.elapsed().as_secs_f64() * 1e3;

    let mut out = Vec::new();
    match op {
        JoinOp::Anti | JoinOp::LeftOuter => {
            pipeline_pass(r, s, th, op, SlotSide::Forward, &pm, &mut report, &mut out)?;
        }
        JoinOp::RightOuter => {
            // Mirrored pipeline; overlapping windows stay and slots swap back.
            pipeline_pass(
                s,
                r,
                &th.flipped(),
                op,
                SlotSide::Reversed,
                &pm,
                &mut report,
                &mut out,
            )?;
        }
        JoinOp::FullOuter => {
            pipeline_pass(r, s, th, op, SlotSide::Forward, &pm, &mut report, &mut out)?;
            // Second pass contributes the unmatched and negating windows of
            // `s`; running it as an anti pass keeps overlapping windows from
            // being copied again.
            pipeline_pass(
                s,
                r,
                &th.flipped(),
                JoinOp::Anti,
                SlotSide::Reversed,
                &pm,
                &mut report,
                &mut out,
            )?;
        }
    }
    let t = Instant::now();
    drop(pm);
    let out = output_relation(out);
    report.finalize_ms += t.elapsed().as_secs_f64() * 1e3;
    report.output_rows = out.len() as u64;
    Ok((out, report))
}

/// Deterministic result order: `(left fact, right fact, ts, te)`, with
/// absent slots first.
pub fn output_relation(mut tuples: Vec<OutputTuple>) -> Vec<OutputTuple> {
    tuples.sort_by(|a, b| {
        a.left
            .cmp(&b.left)
            .then(a.right.cmp(&b.right))
            .then(a.interval.ts().cmp(&b.interval.ts()))
            .then(a.interval.te().cmp(&b.interval.te()))
    });
    tuples
}

/// Header of the output TSV: left columns prefixed `l_`, right columns
/// prefixed `r_`, then lineage, interval and probability.
pub fn output_header(left: &Schema, right: &Schema) -> String {
    let mut cols: Vec<String> = left
        .columns()
        .iter()
        .map(|c| format!("l_{}", c.name))
        .collect();
    cols.extend(right.columns().iter().map(|c| format!("r_{}", c.name)));
    cols.extend(["lineage", "ts", "te", "p"].map(String::from));
    cols.join("\t")
}

/// Probabilities print with nine significant digits; golden comparisons are
/// numeric, not textual.
pub fn format_probability(p: f64) -> String {
    if p <= 0.0 {
        return format!("{p:.8}");
    }
    let exponent = p.log10().floor() as i32;
    let decimals = (8 - exponent).max(0) as usize;
    format!("{p:.decimals$}")
}

pub fn write_output_tsv(
    tuples: &[OutputTuple],
    left: &Schema,
    right: &Schema,
    out: &mut impl Write,
) -> std::io::Result<()> {
    writeln!(out, "{}", output_header(left, right))?;
    for t in tuples {
        let mut row = String::new();
        let fact_cells = |row: &mut String, fact: &Option<Fact>, width: usize| {
            match fact {
                Some(f) => {
                    for v in f.values() {
                        let _ = write!(row, "{v}\t");
                    }
                }
                None => {
                    for _ in 0..width {
                        row.push_str("-\t");
                    }
                }
            }
        };
        fact_cells(&mut row, &t.left, left.len());
        fact_cells(&mut row, &t.right, right.len());
        let _ = write!(
            row,
            "{}\t{}\t{}\t{}",
            t.lam,
            t.interval.ts(),
            t.interval.te(),
            format_probability(t.p)
        );
        writeln!(out, "{row}")?;
    }
    Ok(())
}

/// Checks change preservation: no two adjacent output tuples with equal fact
/// slots may have equivalent lineages (they would have to merge otherwise).
pub fn check_change_preserving(sorted: &[OutputTuple]) -> Result<()> {
    for w in sorted.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let adjacent =
            a.left == b.left && a.right == b.right && a.interval.te() == b.interval.ts();
        if adjacent && crate::lineage::equivalent(&a.lam, &b.lam)? {
            return Err(Error::StreamOrder(format!(
                "adjacent tuples {} and {} with equivalent lineages",
                a.interval, b.interval
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lineage::{equivalent, parse_lineage};
    use crate::testutil::{combined_probs, hotels, loc_eq, visits};

    fn digest(tuples: &[OutputTuple]) -> Vec<String> {
        tuples
            .iter()
            .map(|t| {
                format!(
                    "{}|{}|{}|{}",
                    t.left.as_ref().map(|f| f.render()).unwrap_or("-".into()),
                    t.right.as_ref().map(|f| f.render()).unwrap_or("-".into()),
                    t.lam,
                    t.interval
                )
            })
            .collect()
    }

    /// Expected rows as `(left, right, lineage, interval, p)`; lineage is
    /// compared by equivalence, probability within 1e-9.
    fn assert_rows(got: &[OutputTuple], expect: &[(&str, &str, &str, &str, f64)]) {
        assert_eq!(got.len(), expect.len(), "row count: {:?}", digest(got));
        for (t, (l, r, lam, iv, p)) in got.iter().zip(expect) {
            assert_eq!(&t.left.as_ref().map(|f| f.render()).unwrap_or("-".into()), l);
            assert_eq!(&t.right.as_ref().map(|f| f.render()).unwrap_or("-".into()), r);
            assert_eq!(&t.interval.to_string(), iv);
            let want = parse_lineage(lam).unwrap();
            assert!(
                equivalent(&t.lam, &want).unwrap(),
                "lineage {} !~ {}",
                t.lam,
                want
            );
            assert!((t.p - p).abs() < 1e-9, "p {} vs {}", t.p, p);
        }
    }

    #[test]
    fn left_outer_running_example() {
        let (out, report) =
            negation_join(&visits(), &hotels(), &loc_eq(), JoinOp::LeftOuter).unwrap();
        assert_rows(
            &out,
            &[
                ("Ann,ZAK", "-", "a1", "[2,4)", 0.70),
                ("Ann,ZAK", "-", "a1&!b3", "[4,5)", 0.21),
                ("Ann,ZAK", "-", "a1&!(b3|b2)", "[5,6)", 0.084),
                ("Ann,ZAK", "-", "a1&!b2", "[6,8)", 0.28),
                ("Ann,ZAK", "hotel1,ZAK", "a1&b3", "[4,6)", 0.49),
                ("Ann,ZAK", "hotel2,ZAK", "a1&b2", "[5,8)", 0.42),
                ("Jim,WEN", "-", "a2", "[7,10)", 0.80),
            ],
        );
        assert_eq!(report.pipeline.join_execs, 1);
        check_change_preserving(&out).unwrap();
    }

    #[test]
    fn anti_running_example() {
        let (out, report) = negation_join(&visits(), &hotels(), &loc_eq(), JoinOp::Anti).unwrap();
        assert_rows(
            &out,
            &[
                ("Ann,ZAK", "-", "a1", "[2,4)", 0.7),
                ("Ann,ZAK", "-", "a1&!b3", "[4,5)", 0.21),
                ("Ann,ZAK", "-", "a1&!(b3|b2)", "[5,6)", 0.084),
                ("Ann,ZAK", "-", "a1&!b2", "[6,8)", 0.28),
                ("Jim,WEN", "-", "a2", "[7,10)", 0.8),
            ],
        );
        assert_eq!(report.pipeline.join_execs, 1);
    }

    #[test]
    fn anti_is_contained_in_left_outer() {
        let (anti, _) = negation_join(&visits(), &hotels(), &loc_eq(), JoinOp::Anti).unwrap();
        let (left, _) = negation_join(&visits(), &hotels(), &loc_eq(), JoinOp::LeftOuter).unwrap();
        for a in &anti {
            assert!(left.iter().any(|l| {
                l.left == a.left
                    && l.right == a.right
                    && l.interval == a.interval
                    && equivalent(&l.lam, &a.lam).unwrap()
            }));
        }
    }

    #[test]
    fn finalize_window_cases() {
        let pm = combined_probs();
        let ann = visits().tuples()[0].fact.clone();
        let hotel1 = hotels().tuples()[2].fact.clone();
        let a1 = Lineage::var("a1");
        let b3 = Lineage::var("b3");

        let w5 = Window::negating(ann.clone(), a1.clone(), b3.clone(), Interval::of(4, 5));
        let t = finalize_window(&w5, JoinOp::Anti, SlotSide::Forward, &pm)
            .unwrap()
            .unwrap();
        assert_eq!(t.lam.to_string(), "a1&!b3");
        assert!((t.p - 0.21).abs() < 1e-12);

        let w3 = Window::overlapping(ann, hotel1, a1, b3, Interval::of(4, 6));
        assert!(finalize_window(&w3, JoinOp::Anti, SlotSide::Forward, &pm)
            .unwrap()
            .is_none());
        let t = finalize_window(&w3, JoinOp::LeftOuter, SlotSide::Forward, &pm)
            .unwrap()
            .unwrap();
        assert_eq!(t.lam.to_string(), "a1&b3");
        assert!((t.p - 0.49).abs() < 1e-12);
    }

    #[test]
    fn right_outer_mirrors_left_outer() {
        let th = loc_eq();
        let (right, report) =
            negation_join(&visits(), &hotels(), &th, JoinOp::RightOuter).unwrap();
        assert_eq!(report.pipeline.join_execs, 1);
        let (left_of_swapped, _) =
            negation_join(&hotels(), &visits(), &th.flipped(), JoinOp::LeftOuter).unwrap();
        assert_eq!(right.len(), left_of_swapped.len());
        let swapped: Vec<OutputTuple> = left_of_swapped
            .iter()
            .map(|t| OutputTuple {
                left: t.right.clone(),
                right: t.left.clone(),
                lam: t.lam.clone(),
                interval: t.interval,
                p: t.p,
            })
            .collect();
        for (a, b) in right.iter().zip(output_relation(swapped)) {
            assert_eq!(a.left, b.left);
            assert_eq!(a.right, b.right);
            assert_eq!(a.interval, b.interval);
            assert!(equivalent(&a.lam, &b.lam).unwrap());
        }
    }

    #[test]
    fn full_outer_adds_reversed_contributions() {
        let (full, report) =
            negation_join(&visits(), &hotels(), &loc_eq(), JoinOp::FullOuter).unwrap();
        assert_eq!(report.pipeline.join_execs, 2);
        // Left-outer rows are all present.
        let (left, _) = negation_join(&visits(), &hotels(), &loc_eq(), JoinOp::LeftOuter).unwrap();
        for l in &left {
            assert!(full.iter().any(|f| f.left == l.left
                && f.right == l.right
                && f.interval == l.interval
                && equivalent(&f.lam, &l.lam).unwrap()));
        }
        // Unmatched hotel3 contribution from the reversed pass.
        assert!(full.iter().any(|t| {
            t.left.is_none()
                && t.right.as_ref().is_some_and(|f| f.render() == "hotel3,SOR")
                && t.interval == Interval::of(1, 4)
                && t.lam.to_string() == "b1"
        }));
        // Reversed pass: hotel3 unmatched over [1,4), hotel1 negated over
        // [4,6), hotel2 negated over [5,8).
        assert_eq!(full.len(), left.len() + 3);
        check_change_preserving(&full).unwrap();
    }

    #[test]
    fn output_relation_orders_deterministically() {
        let (mut out, _) =
            negation_join(&visits(), &hotels(), &loc_eq(), JoinOp::LeftOuter).unwrap();
        let golden = digest(&out);
        out.reverse();
        let sorted = output_relation(out);
        assert_eq!(digest(&sorted), golden);
    }

    #[test]
    fn output_tsv_shape() {
        let (out, _) = negation_join(&visits(), &hotels(), &loc_eq(), JoinOp::Anti).unwrap();
        let mut buf = Vec::new();
        write_output_tsv(&out, visits().schema(), hotels().schema(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "l_Name\tl_Loc\tr_Hotel\tr_Loc\tlineage\tts\tte\tp"
        );
        assert_eq!(lines.next().unwrap(), "Ann\tZAK\t-\t-\ta1\t2\t4\t0.700000000");
        assert_eq!(text.lines().count(), 6);
    }
}
