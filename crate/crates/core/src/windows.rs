//! The window pipeline: a conventional overlap join feeding two incremental
//! sweeps.
//!
//! Stage one pairs every `r` tuple with every condition-matching,
//! interval-overlapping `s` tuple (plus one all-null record per `r` tuple
//! that matched nothing). Stage two (`lawa_u_stream`) walks each `r` tuple's
//! sorted overlap records left to right, copying them through as overlapping
//! windows and filling the gaps with unmatched windows. Stage three
//! (`lawa_n_stream`) copies everything through and, inside each run of
//! overlapping windows, emits negating windows whose boundaries fall exactly
//! where the set of valid matching `s` tuples changes; an expiry queue of
//! `(te, lineage)` pairs tracks that set.
//!
//! Windows classify into three disjoint sets:
//!
//! | class       | `f_s`  | `lam_s`  |
//! |-------------|--------|----------|
//! | unmatched   | null   | null     |
//! | negating    | null   | non-null |
//! | overlapping | fact   | non-null |
//!
//! No fourth combination is ever constructed.

use std::cmp::Ordering;
use std::cmp::Reverse;
use std::collections::{BinaryHeap, BTreeMap, HashMap};
use std::sync::Arc;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::lineage::{lor_all, Lineage};
use crate::model::{Fact, Interval, TimePoint, TpRelation, Value};
use crate::theta::Theta;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowClass {
    Unmatched,
    Overlapping,
    Negating,
}

impl WindowClass {
    pub fn tag(&self) -> &'static str {
        match self {
            WindowClass::Unmatched => "U",
            WindowClass::Overlapping => "O",
            WindowClass::Negating => "N",
        }
    }
}

/// One generalized lineage-aware temporal window.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    f_r: Fact,
    f_s: Option<Fact>,
    lam_r: Lineage,
    lam_s: Lineage,
    t: Interval,
}

impl Window {
    pub fn unmatched(f_r: Fact, lam_r: Lineage, t: Interval) -> Window {
        assert!(!lam_r.is_null());
        Window {
            f_r,
            f_s: None,
            lam_r,
            lam_s: Lineage::Null,
            t,
        }
    }

    pub fn overlapping(f_r: Fact, f_s: Fact, lam_r: Lineage, lam_s: Lineage, t: Interval) -> Window {
        assert!(!lam_r.is_null() && !lam_s.is_null());
        Window {
            f_r,
            f_s: Some(f_s),
            lam_r,
            lam_s,
            t,
        }
    }

    pub fn negating(f_r: Fact, lam_r: Lineage, lam_s: Lineage, t: Interval) -> Window {
        assert!(!lam_r.is_null() && !lam_s.is_null());
        Window {
            f_r,
            f_s: None,
            lam_r,
            lam_s,
            t,
        }
    }

    pub fn class(&self) -> WindowClass {
        match (&self.f_s, self.lam_s.is_null()) {
            (None, true) => WindowClass::Unmatched,
            (None, false) => WindowClass::Negating,
            (Some(_), false) => WindowClass::Overlapping,
            (Some(_), true) => unreachable!("window with a fact but no lineage on the s side"),
        }
    }

    pub fn f_r(&self) -> &Fact {
        &self.f_r
    }

    pub fn f_s(&self) -> Option<&Fact> {
        self.f_s.as_ref()
    }

    pub fn lam_r(&self) -> &Lineage {
        &self.lam_r
    }

    /// `Null` exactly for unmatched windows.
    pub fn lam_s(&self) -> &Lineage {
        &self.lam_s
    }

    pub fn interval(&self) -> Interval {
        self.t
    }
}

/// One row of the overlap-join result: an `(r, s)` pairing over the overlap
/// `o`, annotated with the full interval of the `r` tuple (`host`). Records
/// with no pairing carry `f_s = lam_s = o = null` and stand for `r` tuples
/// that matched nothing.
#[derive(Debug, Clone)]
pub struct XRecord {
    pub f_r: Fact,
    pub lam_r: Lineage,
    pub f_s: Option<Fact>,
    pub lam_s: Lineage,
    pub o: Option<Interval>,
    pub host: Interval,
    /// Variable of the paired `s` tuple; deterministic tie-break for records
    /// with equal overlap starts.
    pub s_var: Option<Arc<str>>,
}

/// Counters and per-stage wall times of one pipeline run.
#[derive(Debug, Clone, Copy, Default)]
pub struct PipelineStats {
    /// Conventional overlap-join executions.
    pub join_execs: u64,
    /// Overlap-join records produced (including all-null records).
    pub xrecords: u64,
    /// Windows emitted by the full pipeline (all three classes).
    pub windows_emitted: u64,
    pub overlap_ms: f64,
    pub lawa_u_ms: f64,
    pub lawa_n_ms: f64,
}

impl PipelineStats {
    pub fn absorb(&mut self, other: &PipelineStats) {
        self.join_execs += other.join_execs;
        self.xrecords += other.xrecords;
        self.windows_emitted += other.windows_emitted;
        self.overlap_ms += other.overlap_ms;
        self.lawa_u_ms += other.lawa_u_ms;
        self.lawa_n_ms += other.lawa_n_ms;
    }
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

// ── Stage one: conventional overlap join ───────────────────────────────

/// Computes, for every `r` tuple, its matching overlapping `s` tuples, as one
/// [`XRecord`] per pair with `o` set to the interval intersection; `r` tuples
/// with no match produce a single all-null record spanning their own
/// interval. The result is sorted by `(f_r, host, o.ts, s_var)` with null-`o`
/// records first, which is the grouping the sweeps rely on.
pub fn overlap_join(
    r: &TpRelation,
    s: &TpRelation,
    th: &Theta,
    stats: &mut PipelineStats,
) -> Vec<XRecord> {
    stats.join_execs += 1;
    let (keys, residual) = th.equijoin_keys();

    // Hash-partition both sides on the equality-key columns; tuples only
    // ever pair within a partition. With no equality conjuncts everything
    // lands in one partition and the per-partition sweep does the work.
    let key_of = |fact: &Fact, cols: &[usize]| -> Vec<Value> {
        cols.iter().map(|&i| fact.values()[i].clone()).collect()
    };
    let (r_cols, s_cols): (Vec<usize>, Vec<usize>) = keys.iter().copied().unzip();

    let mut partitions: HashMap<Vec<Value>, (Vec<usize>, Vec<usize>)> = HashMap::new();
    for (i, t) in r.tuples().iter().enumerate() {
        partitions
            .entry(key_of(&t.fact, &r_cols))
            .or_default()
            .0
            .push(i);
    }
    for (j, t) in s.tuples().iter().enumerate() {
        if let Some(part) = partitions.get_mut(&key_of(&t.fact, &s_cols)) {
            part.1.push(j);
        }
        // s tuples with no r-side key are irrelevant to this join direction.
    }

    let mut records = Vec::new();
    let mut matched = vec![false; r.len()];
    for (r_idx, s_idx) in partitions.into_values() {
        sweep_partition(r, s, &r_idx, &s_idx, &residual, &mut matched, &mut records);
    }
    for (i, t) in r.tuples().iter().enumerate() {
        if !matched[i] {
            records.push(XRecord {
                f_r: t.fact.clone(),
                lam_r: Lineage::from_var(t.var.clone()),
                f_s: None,
                lam_s: Lineage::Null,
                o: None,
                host: t.interval,
                s_var: None,
            });
        }
    }

    records.sort_by(xrecord_order);
    stats.xrecords += records.len() as u64;
    records
}

/// Endpoint sweep over one partition: a pair is reported exactly once, when
/// the later-starting tuple enters while the other is active.
fn sweep_partition(
    r: &TpRelation,
    s: &TpRelation,
    r_idx: &[usize],
    s_idx: &[usize],
    residual: &Theta,
    matched: &mut [bool],
    records: &mut Vec<XRecord>,
) {
    let mut r_sorted: Vec<usize> = r_idx.to_vec();
    r_sorted.sort_by_key(|&i| r.tuples()[i].interval.ts());
    let mut s_sorted: Vec<usize> = s_idx.to_vec();
    s_sorted.sort_by_key(|&j| s.tuples()[j].interval.ts());

    let mut active_r: Vec<usize> = Vec::new();
    let mut active_s: Vec<usize> = Vec::new();
    let (mut ri, mut si) = (0usize, 0usize);

    let pair = |records: &mut Vec<XRecord>, matched: &mut [bool], i: usize, j: usize| {
        let rt = &r.tuples()[i];
        let st = &s.tuples()[j];
        if !residual.eval(&rt.fact, &st.fact) {
            return;
        }
        let o = rt
            .interval
            .intersect(&st.interval)
            .expect("active tuples overlap");
        matched[i] = true;
        records.push(XRecord {
            f_r: rt.fact.clone(),
            lam_r: Lineage::from_var(rt.var.clone()),
            f_s: Some(st.fact.clone()),
            lam_s: Lineage::from_var(st.var.clone()),
            o: Some(o),
            host: rt.interval,
            s_var: Some(st.var.clone()),
        });
    };

    while ri < r_sorted.len() || si < s_sorted.len() {
        let r_next = r_sorted.get(ri).map(|&i| r.tuples()[i].interval.ts());
        let s_next = s_sorted.get(si).map(|&j| s.tuples()[j].interval.ts());
        let take_r = match (r_next, s_next) {
            (Some(a), Some(b)) => a <= b,
            (Some(_), None) => true,
            (None, _) => false,
        };
        if take_r {
            let i = r_sorted[ri];
            ri += 1;
            let ts = r.tuples()[i].interval.ts();
            active_s.retain(|&j| s.tuples()[j].interval.te() > ts);
            for &j in &active_s {
                pair(records, matched, i, j);
            }
            active_r.push(i);
        } else {
            let j = s_sorted[si];
            si += 1;
            let ts = s.tuples()[j].interval.ts();
            active_r.retain(|&i| r.tuples()[i].interval.te() > ts);
            for &i in &active_r {
                pair(records, matched, i, j);
            }
            active_s.push(j);
        }
    }
}

fn xrecord_order(a: &XRecord, b: &XRecord) -> Ordering {
    a.f_r
        .cmp(&b.f_r)
        .then(a.host.ts().cmp(&b.host.ts()))
        .then(a.host.te().cmp(&b.host.te()))
        .then(a.o.is_some().cmp(&b.o.is_some()))
        .then_with(|| match (&a.o, &b.o) {
            (Some(x), Some(y)) => x.ts().cmp(&y.ts()),
            _ => Ordering::Equal,
        })
        .then_with(|| a.s_var.cmp(&b.s_var))
}

// ── Stage two: unmatched windows ────────────────────────────────────────

/// Expands the sorted overlap-join result into the stream of overlapping and
/// unmatched windows, group by group and left to right.
///
/// For each `r` tuple (one group): every record with a non-null overlap is
/// emitted as an overlapping window over `o`; every maximal subinterval of
/// the host interval not covered by any overlap becomes an unmatched window;
/// an all-null group emits one unmatched window over the whole host.
pub fn lawa_u_stream(x: &[XRecord]) -> Result<Vec<Window>> {
    for w in x.windows(2) {
        if xrecord_order(&w[0], &w[1]) == Ordering::Greater {
            return Err(Error::StreamOrder(
                "overlap-join records are not sorted".to_string(),
            ));
        }
    }

    let mut out = Vec::with_capacity(x.len());
    let mut i = 0;
    while i < x.len() {
        let group_key = (&x[i].f_r, x[i].host);
        let mut j = i;
        while j < x.len() && (&x[j].f_r, x[j].host) == group_key {
            j += 1;
        }
        let group = &x[i..j];
        i = j;

        let head = &group[0];
        if head.o.is_none() {
            if group.len() > 1 {
                return Err(Error::StreamOrder(format!(
                    "group for fact ({}) mixes null and non-null overlaps",
                    head.f_r
                )));
            }
            out.push(Window::unmatched(
                head.f_r.clone(),
                head.lam_r.clone(),
                head.host,
            ));
            continue;
        }

        // Sweep: gaps are measured against the union of overlap intervals,
        // so a candidate window swallowed by an earlier, longer overlap is
        // discarded rather than emitted empty.
        let mut position = head.host.ts();
        for rec in group {
            let o = rec.o.ok_or_else(|| {
                Error::StreamOrder(format!(
                    "group for fact ({}) mixes null and non-null overlaps",
                    rec.f_r
                ))
            })?;
            if position < o.ts() {
                out.push(Window::unmatched(
                    rec.f_r.clone(),
                    rec.lam_r.clone(),
                    Interval::new(position, o.ts()),
                ));
            }
            out.push(Window::overlapping(
                rec.f_r.clone(),
                rec.f_s.clone().expect("overlap record has an s fact"),
                rec.lam_r.clone(),
                rec.lam_s.clone(),
                o,
            ));
            position = position.max(o.te());
        }
        if position < head.host.te() {
            out.push(Window::unmatched(
                head.f_r.clone(),
                head.lam_r.clone(),
                Interval::new(position, head.host.te()),
            ));
        }
    }
    Ok(out)
}

// ── Stage three: negating windows ───────────────────────────────────────

/// Matching `s` tuples currently valid during a negating sweep: an expiry
/// heap keyed by end point plus the lineages in arrival order, so emitted
/// disjunctions follow the overlap stream.
#[derive(Default)]
struct ActiveMatches {
    expiry: BinaryHeap<Reverse<(TimePoint, u64)>>,
    lineages: BTreeMap<u64, Lineage>,
    next_seq: u64,
}

impl ActiveMatches {
    fn insert(&mut self, te: TimePoint, lam: Lineage) {
        self.expiry.push(Reverse((te, self.next_seq)));
        self.lineages.insert(self.next_seq, lam);
        self.next_seq += 1;
    }

    fn is_empty(&self) -> bool {
        self.lineages.is_empty()
    }

    fn min_te(&self) -> Option<TimePoint> {
        self.expiry.peek().map(|Reverse((te, _))| *te)
    }

    /// Drops every entry expiring exactly at `te`; ties drain together.
    fn remove_expiring_at(&mut self, te: TimePoint) {
        while let Some(Reverse((top, seq))) = self.expiry.peek().copied() {
            if top != te {
                break;
            }
            self.expiry.pop();
            self.lineages.remove(&seq);
        }
    }

    fn disjunction(&self) -> Result<Lineage> {
        let ls: Vec<Lineage> = self.lineages.values().cloned().collect();
        lor_all(&ls)
    }
}

/// Copies every input window through unchanged and inserts the negating
/// windows: inside each group of overlapping windows that share the same `r`
/// tuple, one negating window per maximal subinterval with a constant set of
/// valid matching `s` tuples, carrying the disjunction of their lineages.
pub fn lawa_n_stream(y: &[Window]) -> Result<Vec<Window>> {
    let mut out = Vec::with_capacity(y.len());
    let mut i = 0;
    while i < y.len() {
        let group_key = (&y[i].f_r, &y[i].lam_r);
        let mut j = i;
        while j < y.len() && (&y[j].f_r, &y[j].lam_r) == group_key {
            if j > i && y[j].t.ts() < y[j - 1].t.ts() {
                return Err(Error::StreamOrder(format!(
                    "window stream for fact ({}) is not ordered by start",
                    y[j].f_r
                )));
            }
            j += 1;
        }
        sweep_group(&y[i..j], &mut out)?;
        i = j;
    }
    Ok(out)
}

fn sweep_group(group: &[Window], out: &mut Vec<Window>) -> Result<()> {
    let f_r = &group[0].f_r;
    let lam_r = &group[0].lam_r;
    let mut active = ActiveMatches::default();
    // Start of the negating window under construction; set whenever the
    // active set is nonempty.
    let mut pending: Option<TimePoint> = None;

    // Emits negating windows for every expiry before `limit` (all of them
    // when `limit` is None), resetting between disconnected overlap runs.
    let flush = |active: &mut ActiveMatches,
                 pending: &mut Option<TimePoint>,
                 limit: Option<TimePoint>,
                 out: &mut Vec<Window>|
     -> Result<()> {
        while let Some(top) = active.min_te() {
            if limit.is_some_and(|lim| top >= lim) {
                break;
            }
            let start = pending.expect("active set implies a pending start");
            if start < top {
                out.push(Window::negating(
                    f_r.clone(),
                    lam_r.clone(),
                    active.disjunction()?,
                    Interval::new(start, top),
                ));
            }
            *pending = Some(top);
            active.remove_expiring_at(top);
            if active.is_empty() {
                *pending = None;
            }
        }
        Ok(())
    };

    for w in group {
        match w.class() {
            WindowClass::Overlapping => {
                flush(&mut active, &mut pending, Some(w.t.ts()), out)?;
                if let Some(start) = pending {
                    if start < w.t.ts() {
                        out.push(Window::negating(
                            f_r.clone(),
                            lam_r.clone(),
                            active.disjunction()?,
                            Interval::new(start, w.t.ts()),
                        ));
                        pending = Some(w.t.ts());
                    }
                }
                out.push(w.clone());
                if pending.is_none() {
                    pending = Some(w.t.ts());
                }
                active.insert(w.t.te(), w.lam_s.clone());
            }
            WindowClass::Unmatched => {
                flush(&mut active, &mut pending, None, out)?;
                out.push(w.clone());
            }
            WindowClass::Negating => {
                return Err(Error::StreamOrder(
                    "negating window in the input of the negating sweep".to_string(),
                ));
            }
        }
    }
    flush(&mut active, &mut pending, None, out)
}

// ── Whole pipeline ──────────────────────────────────────────────────────

/// Overlap join, unmatched sweep and negating sweep in sequence, with
/// per-stage wall times and counters.
pub fn window_pipeline(
    r: &TpRelation,
    s: &TpRelation,
    th: &Theta,
) -> Result<(Vec<Window>, PipelineStats)> {
    let mut stats = PipelineStats::default();
    let t0 = Instant::now();
    let x = overlap_join(r, s, th, &mut stats);
    stats.overlap_ms = ms_since(t0);

    // Input buffers drop inside their consumer's timer so the stage times
    // account for the whole wall.
    let t1 = Instant::now();
    let y = lawa_u_stream(&x)?;
    drop(x);
    stats.lawa_u_ms = ms_since(t1);

    let t2 = Instant::now();
    let w = lawa_n_stream(&y)?;
    drop(y);
    stats.lawa_n_ms = ms_since(t2);

    stats.windows_emitted += w.len() as u64;
    Ok((w, stats))
}

/// The three window sets, in pipeline emission order within each set.
#[derive(Debug, Clone, Default)]
pub struct WindowSets {
    pub unmatched: Vec<Window>,
    pub overlapping: Vec<Window>,
    pub negating: Vec<Window>,
}

impl WindowSets {
    pub fn partition(windows: Vec<Window>) -> WindowSets {
        let mut sets = WindowSets::default();
        for w in windows {
            match w.class() {
                WindowClass::Unmatched => sets.unmatched.push(w),
                WindowClass::Overlapping => sets.overlapping.push(w),
                WindowClass::Negating => sets.negating.push(w),
            }
        }
        sets
    }

    pub fn len(&self) -> usize {
        self.unmatched.len() + self.overlapping.len() + self.negating.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Runs the pipeline and partitions its output by window class.
pub fn window_sets(r: &TpRelation, s: &TpRelation, th: &Theta) -> Result<WindowSets> {
    let (windows, _) = window_pipeline(r, s, th)?;
    Ok(WindowSets::partition(windows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{hotels, loc_eq, visits, windows_digest};

    #[test]
    fn overlap_join_produces_pairings_and_null_records() {
        let (a, b, th) = (visits(), hotels(), loc_eq());
        let mut stats = PipelineStats::default();
        let x = overlap_join(&a, &b, &th, &mut stats);
        assert_eq!(stats.join_execs, 1);
        assert_eq!(stats.xrecords, 3);

        let digest: Vec<String> = x
            .iter()
            .map(|r| {
                format!(
                    "{}|{}|{}|{}",
                    r.f_r,
                    r.f_s.as_ref().map(|f| f.render()).unwrap_or("-".into()),
                    r.o.map(|o| o.to_string()).unwrap_or("-".into()),
                    r.host
                )
            })
            .collect();
        assert_eq!(
            digest,
            vec![
                "Ann,ZAK|hotel1,ZAK|[4,6)|[2,8)",
                "Ann,ZAK|hotel2,ZAK|[5,8)|[2,8)",
                "Jim,WEN|-|-|[7,10)",
            ]
        );
    }

    #[test]
    fn overlap_join_disjoint_intervals_yields_all_null() {
        let a = crate::testutil::single_column_relation(&[("X", "v1", 0, 2, 0.5)]);
        let b = crate::testutil::single_column_relation(&[("X", "w1", 5, 9, 0.5)]);
        let mut stats = PipelineStats::default();
        let x = overlap_join(&a, &b, &Theta::always(), &mut stats);
        assert_eq!(x.len(), 1);
        assert!(x[0].o.is_none());
        assert_eq!(x[0].host, Interval::of(0, 2));
    }

    #[test]
    fn overlap_join_empty_left_is_empty() {
        let a = crate::testutil::single_column_relation(&[]);
        let b = hotels();
        let mut stats = PipelineStats::default();
        let th = Theta::always();
        assert!(overlap_join(&a, &b, &th, &mut stats).is_empty());
    }

    #[test]
    fn lawa_u_running_example() {
        let (a, b, th) = (visits(), hotels(), loc_eq());
        let mut stats = PipelineStats::default();
        let x = overlap_join(&a, &b, &th, &mut stats);
        let y = lawa_u_stream(&x).unwrap();
        assert_eq!(
            windows_digest(&y),
            vec![
                "U Ann,ZAK - a1 - [2,4)",
                "O Ann,ZAK hotel1,ZAK a1 b3 [4,6)",
                "O Ann,ZAK hotel2,ZAK a1 b2 [5,8)",
                "U Jim,WEN - a2 - [7,10)",
            ]
        );
    }

    #[test]
    fn lawa_u_gaps_follow_the_overlap_union() {
        // Overlaps [4,6) and [5,8) inside host [2,8): single gap [2,4).
        // Cross-checked against a per-timepoint complement of the union.
        let a = crate::testutil::single_column_relation(&[("K", "r1", 2, 8, 0.5)]);
        let b = crate::testutil::single_column_relation(&[
            ("K1", "s1", 4, 6, 0.5),
            ("K2", "s2", 5, 8, 0.5),
        ]);
        let mut stats = PipelineStats::default();
        let x = overlap_join(&a, &b, &Theta::always(), &mut stats);
        let y = lawa_u_stream(&x).unwrap();

        let unmatched: Vec<Interval> = y
            .iter()
            .filter(|w| w.class() == WindowClass::Unmatched)
            .map(|w| w.interval())
            .collect();
        let expected = complement_oracle(Interval::of(2, 8), &[Interval::of(4, 6), Interval::of(5, 8)]);
        assert_eq!(unmatched, expected);
        assert_eq!(unmatched, vec![Interval::of(2, 4)]);
    }

    #[test]
    fn lawa_u_exact_tiling_has_no_gaps() {
        let a = crate::testutil::single_column_relation(&[("K", "r1", 0, 6, 0.5)]);
        let b = crate::testutil::single_column_relation(&[
            ("K", "s1", 0, 3, 0.5),
            ("K", "s2", 3, 6, 0.5),
        ]);
        let mut stats = PipelineStats::default();
        let x = overlap_join(&a, &b, &Theta::always(), &mut stats);
        let y = lawa_u_stream(&x).unwrap();
        assert!(y.iter().all(|w| w.class() == WindowClass::Overlapping));
    }

    #[test]
    fn lawa_u_rejects_unsorted_input() {
        let (a, b, th) = (visits(), hotels(), loc_eq());
        let mut stats = PipelineStats::default();
        let mut x = overlap_join(&a, &b, &th, &mut stats);
        x.swap(0, 1);
        assert!(matches!(
            lawa_u_stream(&x),
            Err(Error::StreamOrder(_))
        ));
    }

    /// Independent oracle: the maximal subintervals of `host` not covered by
    /// any overlap, found by scanning chronons.
    fn complement_oracle(host: Interval, overlaps: &[Interval]) -> Vec<Interval> {
        let mut gaps = Vec::new();
        let mut start: Option<i64> = None;
        for t in host.ts().0..host.te().0 {
            let covered = overlaps.iter().any(|o| o.contains(TimePoint(t)));
            match (covered, start) {
                (false, None) => start = Some(t),
                (true, Some(s)) => {
                    gaps.push(Interval::of(s, t));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            gaps.push(Interval::of(s, host.te().0));
        }
        gaps
    }

    #[test]
    fn lawa_n_running_example() {
        let (a, b, th) = (visits(), hotels(), loc_eq());
        let (w, stats) = window_pipeline(&a, &b, &th).unwrap();
        assert_eq!(
            windows_digest(&w),
            vec![
                "U Ann,ZAK - a1 - [2,4)",
                "O Ann,ZAK hotel1,ZAK a1 b3 [4,6)",
                "N Ann,ZAK - a1 b3 [4,5)",
                "O Ann,ZAK hotel2,ZAK a1 b2 [5,8)",
                "N Ann,ZAK - a1 b3|b2 [5,6)",
                "N Ann,ZAK - a1 b2 [6,8)",
                "U Jim,WEN - a2 - [7,10)",
            ]
        );
        assert_eq!(stats.windows_emitted, 7);
        assert_eq!(stats.join_execs, 1);
    }

    #[test]
    fn lawa_n_single_overlap_mirrors_it() {
        let a = crate::testutil::single_column_relation(&[("K", "r1", 4, 6, 0.5)]);
        let b = crate::testutil::single_column_relation(&[("K", "s1", 4, 6, 0.5)]);
        let sets = window_sets(&a, &b, &Theta::always()).unwrap();
        assert!(sets.unmatched.is_empty());
        assert_eq!(sets.overlapping.len(), 1);
        assert_eq!(sets.negating.len(), 1);
        assert_eq!(sets.negating[0].interval(), Interval::of(4, 6));
        assert_eq!(sets.negating[0].lam_s().to_string(), "s1");
    }

    #[test]
    fn lawa_n_copies_unmatched_only_groups() {
        let a = crate::testutil::single_column_relation(&[("K", "r1", 0, 4, 0.5)]);
        let b = crate::testutil::single_column_relation(&[]);
        let sets = window_sets(&a, &b, &Theta::always()).unwrap();
        assert_eq!(sets.unmatched.len(), 1);
        assert!(sets.overlapping.is_empty());
        assert!(sets.negating.is_empty());
    }

    #[test]
    fn lawa_n_disconnected_overlap_runs_reset() {
        // Two disjoint overlaps inside one host: negating windows partition
        // the union of overlaps, not its convex hull.
        let a = crate::testutil::single_column_relation(&[("K", "r1", 0, 10, 0.5)]);
        let b = crate::testutil::single_column_relation(&[
            ("K", "s1", 1, 2, 0.5),
            ("K", "s2", 5, 6, 0.5),
        ]);
        let sets = window_sets(&a, &b, &Theta::always()).unwrap();
        let negating: Vec<String> = sets
            .negating
            .iter()
            .map(|w| format!("{} {}", w.lam_s(), w.interval()))
            .collect();
        assert_eq!(negating, vec!["s1 [1,2)", "s2 [5,6)"]);
        let unmatched: Vec<String> = sets
            .unmatched
            .iter()
            .map(|w| w.interval().to_string())
            .collect();
        assert_eq!(unmatched, vec!["[0,1)", "[2,5)", "[6,10)"]);
    }

    #[test]
    fn lawa_n_equal_expiries_drain_together() {
        let a = crate::testutil::single_column_relation(&[("K", "r1", 0, 8, 0.5)]);
        let b = crate::testutil::single_column_relation(&[
            ("K1", "s1", 1, 5, 0.5),
            ("K2", "s2", 2, 5, 0.5),
        ]);
        let sets = window_sets(&a, &b, &Theta::always()).unwrap();
        let negating: Vec<String> = sets
            .negating
            .iter()
            .map(|w| format!("{} {}", w.lam_s(), w.interval()))
            .collect();
        assert_eq!(negating, vec!["s1 [1,2)", "s1|s2 [2,5)"]);
    }

    #[test]
    fn window_sets_running_example_counts() {
        let sets = window_sets(&visits(), &hotels(), &loc_eq()).unwrap();
        assert_eq!(
            (sets.unmatched.len(), sets.overlapping.len(), sets.negating.len()),
            (2, 2, 3)
        );
    }

    #[test]
    fn window_sets_self_join_single_tuple() {
        let r = crate::testutil::single_column_relation(&[("f", "v", 0, 5, 0.5)]);
        let sets = window_sets(&r, &r, &Theta::always()).unwrap();
        assert!(sets.unmatched.is_empty());
        assert_eq!(windows_digest(&sets.overlapping), vec!["O f f v v [0,5)"]);
        assert_eq!(windows_digest(&sets.negating), vec!["N f - v v [0,5)"]);
    }

    #[test]
    fn window_sets_empty_inputs() {
        let empty = crate::testutil::single_column_relation(&[]);
        let sets = window_sets(&empty, &hotels(), &Theta::always()).unwrap();
        assert!(sets.is_empty());
    }
}
