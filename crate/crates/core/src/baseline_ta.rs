//! Temporal-alignment baseline: interval-adjustment operators and the
//! reduction query trees built on them, used to cross-validate the window
//! engine and as the comparison point for the benchmark counters.
//!
//! `align` replicates each left tuple once per matching overlapping right
//! tuple (interval = the pairwise intersection) plus once per maximal
//! subinterval with no match. `normalize` splits each left tuple at the
//! interior endpoints of its matching right tuples. The join reduction runs
//! one aligned branch for overlapping windows and one normalized branch for
//! negating windows, joins the streams on equal adjusted intervals plus the
//! condition, rebuilds per-segment lineage disjunctions by grouping, unions
//! the branches and drops the unmatched segments both branches computed.
//!
//! Every adjustment pass re-scans the inputs the way the corresponding
//! conventional join would, so `join_execs` counts each pass; the window
//! engine gets the same answers out of a single conventional join.

use std::collections::{HashMap, HashSet};

use std::time::Instant;

use crate::error::Result;
use crate::joins::{finalize_window, output_relation, JoinOp, JoinReport, OutputTuple, SlotSide};
use crate::lineage::{lor_all, Lineage, ProbMap};
use crate::model::{Fact, Interval, TimePoint, TpRelation, TpTuple, Value};
use crate::theta::Theta;
use crate::windows::Window;

/// A replica of an input tuple over an adjusted subinterval of its original
/// interval.
#[derive(Debug, Clone)]
pub struct AdjustedTuple {
    pub fact: Fact,
    pub lam: Lineage,
    pub interval: Interval,
    pub origin: Interval,
}

/// Candidate lookup for one adjustment pass: `s` tuples hash-partitioned on
/// the condition's equality keys, the way the conventional joins backing
/// these operators would be executed.
struct MatchIndex<'a> {
    s: &'a TpRelation,
    residual: Theta,
    r_cols: Vec<usize>,
    by_key: Option<HashMap<Vec<Value>, Vec<usize>>>,
}

impl<'a> MatchIndex<'a> {
    fn new(s: &'a TpRelation, th: &Theta) -> MatchIndex<'a> {
        let (keys, residual) = th.equijoin_keys();
        if keys.is_empty() {
            return MatchIndex {
                s,
                residual: th.clone(),
                r_cols: vec![],
                by_key: None,
            };
        }
        let (r_cols, s_cols): (Vec<usize>, Vec<usize>) = keys.iter().copied().unzip();
        let mut by_key: HashMap<Vec<Value>, Vec<usize>> = HashMap::new();
        for (j, st) in s.tuples().iter().enumerate() {
            let key: Vec<Value> = s_cols.iter().map(|&c| st.fact.values()[c].clone()).collect();
            by_key.entry(key).or_default().push(j);
        }
        MatchIndex {
            s,
            residual,
            r_cols,
            by_key: Some(by_key),
        }
    }

    /// Matching `s` tuples for one `r` fact, in relation order.
    fn matching(&self, fact: &Fact) -> Vec<&'a TpTuple> {
        match &self.by_key {
            Some(by_key) => {
                let key: Vec<Value> = self
                    .r_cols
                    .iter()
                    .map(|&c| fact.values()[c].clone())
                    .collect();
                by_key
                    .get(&key)
                    .map(|js| {
                        js.iter()
                            .map(|&j| &self.s.tuples()[j])
                            .filter(|st| self.residual.eval(fact, &st.fact))
                            .collect()
                    })
                    .unwrap_or_default()
            }
            None => self
                .s
                .tuples()
                .iter()
                .filter(|st| self.residual.eval(fact, &st.fact))
                .collect(),
        }
    }
}

/// Pairwise alignment: for each `r` tuple, one replica per matching
/// overlapping `s` tuple over the intersection, plus replicas covering the
/// maximal subintervals where no matching `s` tuple is valid.
pub fn align(r: &TpRelation, s: &TpRelation, th: &Theta) -> Vec<AdjustedTuple> {
    let index = MatchIndex::new(s, th);
    let mut out = Vec::new();
    for rt in r.tuples() {
        let lam = Lineage::from_var(rt.var.clone());
        let mut overlaps: Vec<Interval> = Vec::new();
        for st in index.matching(&rt.fact) {
            if let Some(o) = rt.interval.intersect(&st.interval) {
                out.push(AdjustedTuple {
                    fact: rt.fact.clone(),
                    lam: lam.clone(),
                    interval: o,
                    origin: rt.interval,
                });
                overlaps.push(o);
            }
        }
        for gap in complement(rt.interval, &mut overlaps) {
            out.push(AdjustedTuple {
                fact: rt.fact.clone(),
                lam: lam.clone(),
                interval: gap,
                origin: rt.interval,
            });
        }
    }
    out
}

/// Maximal subintervals of `host` not covered by `covered`.
fn complement(host: Interval, covered: &mut [Interval]) -> Vec<Interval> {
    covered.sort_by_key(|iv| iv.ts());
    let mut gaps = Vec::new();
    let mut position = host.ts();
    for iv in covered.iter() {
        if position < iv.ts() {
            gaps.push(Interval::new(position, iv.ts()));
        }
        position = position.max(iv.te());
    }
    if position < host.te() {
        gaps.push(Interval::new(position, host.te()));
    }
    gaps
}

/// Group normalization: each `r` tuple split at every interior start or end
/// point of a matching `s` tuple, yielding contiguous disjoint segments that
/// cover the original interval.
pub fn normalize(r: &TpRelation, s: &TpRelation, th: &Theta) -> Vec<AdjustedTuple> {
    let index = MatchIndex::new(s, th);
    let mut out = Vec::new();
    for rt in r.tuples() {
        let mut points = Vec::new();
        for st in index.matching(&rt.fact) {
            points.push(st.interval.ts());
            points.push(st.interval.te());
        }
        split_tuple(rt, &mut points, &mut out);
    }
    out
}

fn split_tuple(rt: &TpTuple, points: &mut Vec<TimePoint>, out: &mut Vec<AdjustedTuple>) {
    points.retain(|&p| rt.interval.ts() < p && p < rt.interval.te());
    points.sort_unstable();
    points.dedup();
    let lam = Lineage::from_var(rt.var.clone());
    let mut start = rt.interval.ts();
    for &p in points.iter().chain(std::iter::once(&rt.interval.te())) {
        out.push(AdjustedTuple {
            fact: rt.fact.clone(),
            lam: lam.clone(),
            interval: Interval::new(start, p),
            origin: rt.interval,
        });
        start = p;
    }
}

/// Splits every tuple of `rel` at all interior points of `points` (sorted,
/// deduplicated), the finest granularity both branch streams share.
fn split_at_all_points(rel: &TpRelation, points: &[TimePoint]) -> Vec<AdjustedTuple> {
    let mut out = Vec::new();
    for rt in rel.tuples() {
        let lo = points.partition_point(|&p| p <= rt.interval.ts());
        let hi = points.partition_point(|&p| p < rt.interval.te());
        let lam = Lineage::from_var(rt.var.clone());
        let mut start = rt.interval.ts();
        for &p in points[lo..hi].iter().chain(std::iter::once(&rt.interval.te())) {
            out.push(AdjustedTuple {
                fact: rt.fact.clone(),
                lam: lam.clone(),
                interval: Interval::new(start, p),
                origin: rt.interval,
            });
            start = p;
        }
    }
    out
}

fn endpoint_union(r: &TpRelation, s: &TpRelation) -> Vec<TimePoint> {
    let mut points: Vec<TimePoint> = r
        .tuples()
        .iter()
        .chain(s.tuples())
        .flat_map(|t| [t.interval.ts(), t.interval.te()])
        .collect();
    points.sort_unstable();
    points.dedup();
    points
}

/// Overlapping-and-unmatched branch: aligned streams joined on equal
/// adjusted intervals plus the condition. Subsumed duplicates (the same
/// pairing rediscovered over a fragment of its full intersection) are
/// dropped.
fn uo_branch(
    r: &TpRelation,
    s: &TpRelation,
    th: &Theta,
    report: &mut JoinReport,
    windows: &mut Vec<Window>,
) {
    let t0 = Instant::now();
    let left = align(r, s, th);
    let right = align(s, r, &th.flipped());
    report.pipeline.join_execs += 2;
    report.pipeline.xrecords += (left.len() + right.len()) as u64;
    report.pipeline.overlap_ms += t0.elapsed().as_secs_f64() * 1e3;

    let t1 = Instant::now();
    let mut by_interval: HashMap<Interval, Vec<&AdjustedTuple>> = HashMap::new();
    for b in &right {
        by_interval.entry(b.interval).or_default().push(b);
    }

    // (f_r, f_s, lam_r, lam_s) -> candidate intervals.
    let mut matched: HashMap<(Fact, Fact, String, String), Vec<Interval>> = HashMap::new();
    for a in &left {
        let partners: Vec<&&AdjustedTuple> = by_interval
            .get(&a.interval)
            .map(|bs| bs.iter().filter(|b| th.eval(&a.fact, &b.fact)).collect())
            .unwrap_or_default();
        if partners.is_empty() {
            windows.push(Window::unmatched(a.fact.clone(), a.lam.clone(), a.interval));
        } else {
            for b in partners {
                matched
                    .entry((
                        a.fact.clone(),
                        b.fact.clone(),
                        a.lam.to_string(),
                        b.lam.to_string(),
                    ))
                    .or_default()
                    .push(a.interval);
            }
        }
    }

    for ((f_r, f_s, lam_r, lam_s), mut intervals) in matched {
        // Longest first; keep an interval only if nothing kept contains it.
        intervals.sort_by_key(|iv| (iv.ts(), std::cmp::Reverse(iv.te())));
        let mut kept: Vec<Interval> = Vec::new();
        for iv in intervals {
            if !kept
                .iter()
                .any(|k| k.ts() <= iv.ts() && iv.te() <= k.te())
            {
                kept.push(iv);
            }
        }
        let lam_r = crate::lineage::parse_lineage(&lam_r).expect("round trip");
        let lam_s = crate::lineage::parse_lineage(&lam_s).expect("round trip");
        for iv in kept {
            windows.push(Window::overlapping(
                f_r.clone(),
                f_s.clone(),
                lam_r.clone(),
                lam_s.clone(),
                iv,
            ));
        }
    }
    drop(by_interval);
    drop(right);
    drop(left);
    report.pipeline.lawa_u_ms += t1.elapsed().as_secs_f64() * 1e3;
}

/// Negating-and-unmatched branch: both streams split at the union of all
/// endpoints so segments tile each other exactly, the condition join groups
/// the matching right segments per left segment into a lineage disjunction,
/// and adjacent segments with the same disjunction merge back into maximal
/// windows.
fn n_branch(
    r: &TpRelation,
    s: &TpRelation,
    th: &Theta,
    report: &mut JoinReport,
    windows: &mut Vec<Window>,
) {
    let t0 = Instant::now();
    let points = endpoint_union(r, s);
    let left = split_at_all_points(r, &points);
    let right = split_at_all_points(s, &points);
    report.pipeline.join_execs += 2;
    report.pipeline.xrecords += (left.len() + right.len()) as u64;
    report.pipeline.overlap_ms += t0.elapsed().as_secs_f64() * 1e3;

    let t1 = Instant::now();
    let mut by_interval: HashMap<Interval, Vec<&AdjustedTuple>> = HashMap::new();
    for b in &right {
        by_interval.entry(b.interval).or_default().push(b);
    }
    // (origin interval, fact, lam, partner vars, segment) of the open run.
    let mut run: Option<(Interval, Fact, Lineage, Vec<String>, Interval)> = None;
    let close = |run: &mut Option<(Interval, Fact, Lineage, Vec<String>, Interval)>,
                     windows: &mut Vec<Window>| {
        if let Some((_, fact, lam, vars, seg)) = run.take() {
            if vars.is_empty() {
                windows.push(Window::unmatched(fact, lam, seg));
            } else {
                let ds: Vec<Lineage> = vars.iter().map(|v| Lineage::var(v)).collect();
                windows.push(Window::negating(
                    fact,
                    lam,
                    lor_all(&ds).expect("nonempty"),
                    seg,
                ));
            }
        }
    };
    for a in &left {
        let mut partner_vars: Vec<String> = by_interval
            .get(&a.interval)
            .map(|bs| {
                bs.iter()
                    .filter(|b| th.eval(&a.fact, &b.fact))
                    .map(|b| b.lam.to_string())
                    .collect()
            })
            .unwrap_or_default();
        partner_vars.sort_unstable();
        let extend = matches!(
            &run,
            Some((origin, _, _, vars, seg))
                if *origin == a.origin && seg.te() == a.interval.ts() && *vars == partner_vars
        );
        if extend {
            if let Some((_, _, _, _, seg)) = &mut run {
                *seg = Interval::new(seg.ts(), a.interval.te());
            }
        } else {
            close(&mut run, windows);
            run = Some((
                a.origin,
                a.fact.clone(),
                a.lam.clone(),
                partner_vars,
                a.interval,
            ));
        }
    }
    close(&mut run, windows);
    drop(by_interval);
    drop(right);
    drop(left);
    report.pipeline.lawa_n_ms += t1.elapsed().as_secs_f64() * 1e3;
}

#[allow(clippy::too_many_arguments)]
fn ta_pass(
    r: &TpRelation,
    s: &TpRelation,
    th: &Theta,
    op: JoinOp,
    side: SlotSide,
    pm: &ProbMap,
    report: &mut JoinReport,
    out: &mut Vec<OutputTuple>,
) -> Result<()> {
    let mut windows = Vec::new();
    if op != JoinOp::Anti {
        uo_branch(r, s, th, report, &mut windows);
    }
    n_branch(r, s, th, report, &mut windows);

    // Both branches compute the unmatched segments; keep one copy.
    let t = Instant::now();
    let mut seen_unmatched: HashSet<(Fact, Interval)> = HashSet::new();
    for w in &windows {
        if w.lam_s().is_null() && !seen_unmatched.insert((w.f_r().clone(), w.interval())) {
            continue;
        }
        if let Some(tuple) = finalize_window(w, op, side, pm)? {
            report.pipeline.windows_emitted += 1;
            out.push(tuple);
        }
    }
    drop(seen_unmatched);
    drop(windows);
    report.finalize_ms += t.elapsed().as_secs_f64() * 1e3;
    Ok(())
}

/// The TP join computed by the alignment reduction. Agrees with
/// [`crate::joins::negation_join`] up to lineage equivalence on every valid
/// input; runs the interval-adjustment passes repeatedly where the window
/// engine runs one conventional join.
pub fn ta_join(
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
            ta_pass(r, s, th, op, SlotSide::Forward, &pm, &mut report, &mut out)?;
        }
        JoinOp::RightOuter => {
            ta_pass(
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
            ta_pass(r, s, th, op, SlotSide::Forward, &pm, &mut report, &mut out)?;
            ta_pass(
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::joins::negation_join;
    use crate::oracle::equal_up_to_equivalence;
    use crate::testutil::{hotels, loc_eq, single_column_relation, visits};
    use crate::windows::{window_sets, WindowClass};

    fn intervals_for(adjusted: &[AdjustedTuple], var: &str) -> Vec<String> {
        let mut ivs: Vec<String> = adjusted
            .iter()
            .filter(|a| a.lam.to_string() == var)
            .map(|a| a.interval.to_string())
            .collect();
        ivs.sort();
        ivs
    }

    #[test]
    fn align_running_example() {
        let al = align(&visits(), &hotels(), &loc_eq());
        assert_eq!(intervals_for(&al, "a1"), ["[2,4)", "[4,6)", "[5,8)"]);
        assert_eq!(intervals_for(&al, "a2"), ["[7,10)"]);

        // The adjusted intervals of a tuple are exactly its overlapping and
        // unmatched window intervals.
        let sets = window_sets(&visits(), &hotels(), &loc_eq()).unwrap();
        let mut from_windows: Vec<String> = sets
            .overlapping
            .iter()
            .chain(&sets.unmatched)
            .filter(|w| w.lam_r().to_string() == "a1")
            .map(|w| w.interval().to_string())
            .collect();
        from_windows.sort();
        assert_eq!(intervals_for(&al, "a1"), from_windows);
    }

    #[test]
    fn align_with_empty_reference_keeps_tuples_whole() {
        let r = visits();
        let empty = single_column_relation(&[]);
        let al = align(&r, &empty, &Theta::always());
        assert_eq!(al.len(), r.len());
        for (a, t) in al.iter().zip(r.tuples()) {
            assert_eq!(a.interval, t.interval);
            assert_eq!(a.origin, t.interval);
        }
    }

    #[test]
    fn align_identical_single_tuples() {
        let r = single_column_relation(&[("f", "v", 0, 5, 0.5)]);
        let s = single_column_relation(&[("f", "w", 0, 5, 0.5)]);
        let al = align(&r, &s, &Theta::always());
        assert_eq!(al.len(), 1);
        assert_eq!(al[0].interval, Interval::of(0, 5));
    }

    #[test]
    fn normalize_running_example() {
        let nm = normalize(&visits(), &hotels(), &loc_eq());
        assert_eq!(
            intervals_for(&nm, "a1"),
            ["[2,4)", "[4,5)", "[5,6)", "[6,8)"]
        );
        assert_eq!(intervals_for(&nm, "a2"), ["[7,10)"]);

        // Segments tile each origin exactly.
        let mut cursor = None;
        for seg in nm.iter().filter(|a| a.lam.to_string() == "a1") {
            if let Some(prev) = cursor {
                assert_eq!(seg.interval.ts(), prev);
            } else {
                assert_eq!(seg.interval.ts(), seg.origin.ts());
            }
            cursor = Some(seg.interval.te());
        }
        assert_eq!(cursor, Some(TimePoint(8)));
    }

    #[test]
    fn adjusted_segments_cover_their_origin() {
        let (a, b, th) = (visits(), hotels(), loc_eq());
        for adjusted in [align(&a, &b, &th), normalize(&a, &b, &th)] {
            for base in a.tuples() {
                let segs: Vec<Interval> = adjusted
                    .iter()
                    .filter(|x| x.lam.to_string() == base.var.as_ref())
                    .map(|x| x.interval)
                    .collect();
                for t in base.interval.ts().0..base.interval.te().0 {
                    let covered = segs.iter().any(|iv| iv.contains(TimePoint(t)));
                    assert!(covered, "{} uncovered at {t}", base.var);
                }
                assert!(segs.iter().all(|iv| iv.ts() >= base.interval.ts()
                    && iv.te() <= base.interval.te()));
            }
        }
        // Normalize segments never overlap one another.
        for base in a.tuples() {
            let mut segs: Vec<Interval> = normalize(&a, &b, &th)
                .iter()
                .filter(|x| x.lam.to_string() == base.var.as_ref())
                .map(|x| x.interval)
                .collect();
            segs.sort_by_key(|iv| iv.ts());
            for w in segs.windows(2) {
                assert!(w[0].te() <= w[1].ts());
            }
        }
    }

    #[test]
    fn normalize_with_empty_reference() {
        let r = visits();
        let empty = single_column_relation(&[]);
        let nm = normalize(&r, &empty, &Theta::always());
        assert_eq!(nm.len(), r.len());
        assert_eq!(nm[0].interval, r.tuples()[0].interval);
    }

    #[test]
    fn ta_left_outer_matches_engine() {
        let (ta, report) = ta_join(&visits(), &hotels(), &loc_eq(), JoinOp::LeftOuter).unwrap();
        let (nj, _) = negation_join(&visits(), &hotels(), &loc_eq(), JoinOp::LeftOuter).unwrap();
        assert_eq!(ta.len(), 7);
        equal_up_to_equivalence(&ta, &nj).unwrap();
        assert!(report.pipeline.join_execs >= 2, "{}", report.pipeline.join_execs);
    }

    #[test]
    fn ta_anti_matches_engine() {
        let (ta, report) = ta_join(&visits(), &hotels(), &loc_eq(), JoinOp::Anti).unwrap();
        let (nj, _) = negation_join(&visits(), &hotels(), &loc_eq(), JoinOp::Anti).unwrap();
        assert_eq!(ta.len(), 5);
        equal_up_to_equivalence(&ta, &nj).unwrap();
        assert!(report.pipeline.join_execs >= 2);
    }

    #[test]
    fn ta_right_and_full_match_engine() {
        for op in [JoinOp::RightOuter, JoinOp::FullOuter] {
            let (ta, _) = ta_join(&visits(), &hotels(), &loc_eq(), op).unwrap();
            let (nj, _) = negation_join(&visits(), &hotels(), &loc_eq(), op).unwrap();
            equal_up_to_equivalence(&ta, &nj).unwrap();
        }
    }

    #[test]
    fn n_branch_merges_segments_split_by_unrelated_tuples() {
        // A second r tuple's endpoints must not fragment the negating
        // windows of the first.
        let r = single_column_relation(&[("K", "r1", 0, 10, 0.5), ("X", "r2", 3, 7, 0.5)]);
        let s = single_column_relation(&[("K", "s1", 2, 9, 0.5)]);
        let th = Theta::parse("l.k = r.k", r.schema(), s.schema()).unwrap();
        let (ta, _) = ta_join(&r, &s, &th, JoinOp::Anti).unwrap();
        let (nj, _) = negation_join(&r, &s, &th, JoinOp::Anti).unwrap();
        equal_up_to_equivalence(&ta, &nj).unwrap();
        let negated: Vec<String> = ta
            .iter()
            .filter(|t| !matches!(t.lam, Lineage::Var(_)))
            .map(|t| t.interval.to_string())
            .collect();
        assert_eq!(negated, ["[2,9)"]);
    }

    #[test]
    fn uo_branch_drops_subsumed_fragments() {
        // r2 and s2 share the interval [2,6), which equals r1's intersection
        // with s1; the equal-interval join would otherwise rediscover
        // (r1, s2) over that fragment of their true overlap [0,10).
        let r = single_column_relation(&[("K", "r1", 0, 10, 0.5), ("K2", "r2", 2, 6, 0.5)]);
        let s = single_column_relation(&[("Ka", "s1", 2, 6, 0.5), ("Kb", "s2", 0, 10, 0.5)]);
        let th = Theta::always();
        let mut report = JoinReport::default();
        let mut windows = Vec::new();
        uo_branch(&r, &s, &th, &mut report, &mut windows);
        let overlaps: Vec<String> = windows
            .iter()
            .filter(|w| w.class() == WindowClass::Overlapping)
            .map(|w| format!("{}&{} {}", w.lam_r(), w.lam_s(), w.interval()))
            .collect();
        let count = |needle: &str| overlaps.iter().filter(|o| o.as_str() == needle).count();
        assert_eq!(count("r1&s2 [0,10)"), 1);
        assert_eq!(count("r1&s2 [2,6)"), 0);
        assert_eq!(count("r1&s1 [2,6)"), 1);

        let (ta, _) = ta_join(&r, &s, &th, JoinOp::LeftOuter).unwrap();
        let (nj, _) = negation_join(&r, &s, &th, JoinOp::LeftOuter).unwrap();
        equal_up_to_equivalence(&ta, &nj).unwrap();
    }
}
