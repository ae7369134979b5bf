//! Brute-force snapshot-reduction reference engine.
//!
//! Evaluates the probabilistic operation independently at every time point
//! of the active domain, then coalesces maximal runs of consecutive points
//! with equal facts and equivalent lineages. Deliberately simple and capped
//! to desk scale: this is a test instrument, not a production path.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::joins::{output_relation, JoinOp, OutputTuple};
use crate::lineage::{equivalent, land, land_not, lor_all, probability, Lineage, ProbMap};
use crate::model::{Fact, Interval, TimePoint, TpRelation, TpTuple};
use crate::theta::{PartialPredicate, Side, Theta};
use crate::windows::{Window, WindowSets};

/// Maximum number of time points the oracle will iterate.
pub const DOMAIN_CAP: i64 = 4096;
/// Maximum number of distinct base variables across both inputs.
pub const VAR_CAP: usize = 20;

/// Disjunction of the lineages of tuples valid at `t` that satisfy the
/// instantiated predicate; `Null` when there are none.
pub fn snapshot_lineage(rel: &TpRelation, pred: &PartialPredicate, t: TimePoint) -> Lineage {
    let ls: Vec<Lineage> = rel
        .tuples()
        .iter()
        .filter(|tp| tp.interval.contains(t) && pred.matches(&tp.fact))
        .map(|tp| Lineage::from_var(tp.var.clone()))
        .collect();
    if ls.is_empty() {
        Lineage::Null
    } else {
        lor_all(&ls).expect("non-null disjuncts")
    }
}

fn active_domain(r: &TpRelation, s: &TpRelation) -> Option<(i64, i64)> {
    let mut lo = i64::MAX;
    let mut hi = i64::MIN;
    for t in r.tuples().iter().chain(s.tuples()) {
        lo = lo.min(t.interval.ts().0);
        hi = hi.max(t.interval.te().0);
    }
    (lo < hi).then_some((lo, hi))
}

fn check_caps(r: &TpRelation, s: &TpRelation) -> Result<()> {
    if let Some((lo, hi)) = active_domain(r, s) {
        let points = (hi - lo) as u64;
        if points > DOMAIN_CAP as u64 {
            return Err(Error::DomainCap {
                points,
                cap: DOMAIN_CAP as u64,
            });
        }
    }
    let vars = r.len() + s.len();
    if vars > VAR_CAP {
        return Err(Error::VarCap {
            what: "oracle instance",
            vars,
            cap: VAR_CAP,
        });
    }
    Ok(())
}

type SlotKey = (Option<Fact>, Option<Fact>);

/// Per-timepoint result of the probabilistic operation: one lineage per
/// output fact pair.
fn atoms_at(
    r: &TpRelation,
    s: &TpRelation,
    th: &Theta,
    op: JoinOp,
    t: TimePoint,
) -> Result<BTreeMap<SlotKey, Lineage>> {
    let valid_r: Vec<&TpTuple> = r.snapshot(t);
    let valid_s: Vec<&TpTuple> = s.snapshot(t);
    let with_pairs = op != JoinOp::Anti;
    let with_left = op != JoinOp::RightOuter;
    let with_right = matches!(op, JoinOp::RightOuter | JoinOp::FullOuter);

    let mut atoms: BTreeMap<SlotKey, Lineage> = BTreeMap::new();
    let mut put = |key: SlotKey, lam: Lineage| {
        let previous = atoms.insert(key, lam);
        debug_assert!(previous.is_none(), "duplicate output fact pair at {t}");
    };

    for rt in &valid_r {
        let matches: Vec<&&TpTuple> = valid_s
            .iter()
            .filter(|st| th.eval(&rt.fact, &st.fact))
            .collect();
        let r_lam = Lineage::from_var(rt.var.clone());
        if with_pairs {
            for st in &matches {
                put(
                    (Some(rt.fact.clone()), Some(st.fact.clone())),
                    land(&r_lam, &Lineage::from_var(st.var.clone()))?,
                );
            }
        }
        if with_left {
            let lam = if matches.is_empty() {
                r_lam.clone()
            } else {
                let ds: Vec<Lineage> = matches
                    .iter()
                    .map(|st| Lineage::from_var(st.var.clone()))
                    .collect();
                land_not(&r_lam, &lor_all(&ds)?)?
            };
            put((Some(rt.fact.clone()), None), lam);
        }
    }
    if with_right {
        for st in &valid_s {
            let matches: Vec<&&TpTuple> = valid_r
                .iter()
                .filter(|rt| th.eval(&rt.fact, &st.fact))
                .collect();
            let s_lam = Lineage::from_var(st.var.clone());
            let lam = if matches.is_empty() {
                s_lam
            } else {
                let ds: Vec<Lineage> = matches
                    .iter()
                    .map(|rt| Lineage::from_var(rt.var.clone()))
                    .collect();
                land_not(&s_lam, &lor_all(&ds)?)?
            };
            put((None, Some(st.fact.clone())), lam);
        }
    }
    Ok(atoms)
}

/// Snapshot-reducible reference join: the operation applied at every time
/// point, coalesced change-preservingly, probabilities attached by
/// enumeration.
pub fn snapshot_join(
    r: &TpRelation,
    s: &TpRelation,
    th: &Theta,
    op: JoinOp,
) -> Result<Vec<OutputTuple>> {
    check_caps(r, s)?;
    let mut pm = ProbMap::new();
    r.prob_map_into(&mut pm);
    s.prob_map_into(&mut pm);

    let Some((lo, hi)) = active_domain(r, s) else {
        return Ok(Vec::new());
    };

    let mut open: BTreeMap<SlotKey, (TimePoint, Lineage)> = BTreeMap::new();
    let mut out = Vec::new();
    // One step past the domain closes every run.
    for t in lo..=hi {
        let now = TimePoint(t);
        let mut atoms = if t < hi {
            atoms_at(r, s, th, op, now)?
        } else {
            BTreeMap::new()
        };
        let mut still_open = BTreeMap::new();
        for (key, (start, lam)) in open {
            match atoms.get(&key) {
                Some(new_lam) if equivalent(&lam, new_lam)? => {
                    atoms.remove(&key);
                    still_open.insert(key, (start, lam));
                }
                _ => {
                    let p = probability(&lam, &pm)?;
                    out.push(OutputTuple {
                        left: key.0.clone(),
                        right: key.1.clone(),
                        lam,
                        interval: Interval::new(start, now),
                        p,
                    });
                }
            }
        }
        open = still_open;
        for (key, lam) in atoms {
            open.insert(key, (now, lam));
        }
    }
    debug_assert!(open.is_empty());
    Ok(output_relation(out))
}

/// Reconstructs the three window sets directly from their per-timepoint
/// definitions: for every `r` tuple, classify each point of its interval by
/// the disjunction of valid matching `s` lineages, then coalesce.
pub fn window_sets_bruteforce(r: &TpRelation, s: &TpRelation, th: &Theta) -> Result<WindowSets> {
    check_caps(r, s)?;
    let mut sets = WindowSets::default();
    for rt in r.tuples() {
        let pred = th.instantiate(Side::Left, &rt.fact);
        let lam_r = Lineage::from_var(rt.var.clone());

        // Overlapping: one window per matching overlapping s tuple.
        for st in s.tuples() {
            if let Some(o) = rt.interval.intersect(&st.interval) {
                if th.eval(&rt.fact, &st.fact) {
                    sets.overlapping.push(Window::overlapping(
                        rt.fact.clone(),
                        st.fact.clone(),
                        lam_r.clone(),
                        Lineage::from_var(st.var.clone()),
                        o,
                    ));
                }
            }
        }

        // Unmatched and negating: coalesce per-point lineages.
        let close = |sets: &mut WindowSets, start: TimePoint, end: TimePoint, lam: Lineage| {
            let iv = Interval::new(start, end);
            if lam.is_null() {
                sets.unmatched
                    .push(Window::unmatched(rt.fact.clone(), lam_r.clone(), iv));
            } else {
                sets.negating
                    .push(Window::negating(rt.fact.clone(), lam_r.clone(), lam, iv));
            }
        };
        let mut run: Option<(TimePoint, Lineage)> = None;
        for t in rt.interval.ts().0..rt.interval.te().0 {
            let now = TimePoint(t);
            let lam_s = snapshot_lineage(s, &pred, now);
            let extend = match &run {
                Some((_, prev)) => equivalent(prev, &lam_s)?,
                None => false,
            };
            if extend {
                continue;
            }
            if let Some((start, prev)) = run.take() {
                close(&mut sets, start, now, prev);
            }
            run = Some((now, lam_s));
        }
        if let Some((start, prev)) = run {
            close(&mut sets, start, rt.interval.te(), prev);
        }
    }
    Ok(sets)
}

fn slot_text(f: &Option<Fact>) -> String {
    f.as_ref().map(|f| f.render()).unwrap_or_else(|| "-".into())
}

/// True result comparison for the differential tests: a bijection matching
/// fact slots and intervals exactly, lineages up to equivalence and
/// probabilities within 1e-9. Returns a readable diff on failure.
pub fn equal_up_to_equivalence(
    x: &[OutputTuple],
    y: &[OutputTuple],
) -> std::result::Result<(), String> {
    let canon = |ts: &[OutputTuple]| output_relation(ts.to_vec());
    let (a, b) = (canon(x), canon(y));
    if a.len() != b.len() {
        return Err(format!("row counts differ: {} vs {}", a.len(), b.len()));
    }
    for (i, (l, r)) in a.iter().zip(&b).enumerate() {
        if l.left != r.left || l.right != r.right || l.interval != r.interval {
            return Err(format!(
                "row {i}: ({}, {}, {}) vs ({}, {}, {})",
                slot_text(&l.left),
                slot_text(&l.right),
                l.interval,
                slot_text(&r.left),
                slot_text(&r.right),
                r.interval
            ));
        }
        match equivalent(&l.lam, &r.lam) {
            Ok(true) => {}
            Ok(false) => {
                return Err(format!(
                    "row {i} ({}, {}, {}): lineage {} is not equivalent to {}",
                    slot_text(&l.left),
                    slot_text(&l.right),
                    l.interval,
                    l.lam,
                    r.lam
                ));
            }
            Err(e) => return Err(format!("row {i}: equivalence check failed: {e}")),
        }
        if (l.p - r.p).abs() > 1e-9 {
            return Err(format!(
                "row {i} ({}, {}, {}): probability {} vs {}",
                slot_text(&l.left),
                slot_text(&l.right),
                l.interval,
                l.p,
                r.p
            ));
        }
    }
    Ok(())
}

/// Multiset equality of window sets up to lineage equivalence, used to check
/// the sweep output against the per-timepoint reconstruction.
pub fn window_sets_equal(a: &WindowSets, b: &WindowSets) -> std::result::Result<(), String> {
    let canon = |ws: &[Window]| {
        let mut v = ws.to_vec();
        v.sort_by(|x, y| {
            x.f_r()
                .cmp(y.f_r())
                .then(x.f_s().cmp(&y.f_s()))
                .then(x.interval().cmp(&y.interval()))
        });
        v
    };
    for (name, xs, ys) in [
        ("unmatched", &a.unmatched, &b.unmatched),
        ("overlapping", &a.overlapping, &b.overlapping),
        ("negating", &a.negating, &b.negating),
    ] {
        let (xs, ys) = (canon(xs), canon(ys));
        if xs.len() != ys.len() {
            return Err(format!("{name}: {} vs {} windows", xs.len(), ys.len()));
        }
        for (i, (x, y)) in xs.iter().zip(&ys).enumerate() {
            let same = x.f_r() == y.f_r()
                && x.f_s() == y.f_s()
                && x.interval() == y.interval()
                && equivalent(x.lam_r(), y.lam_r()).map_err(|e| e.to_string())?
                && equivalent(x.lam_s(), y.lam_s()).map_err(|e| e.to_string())?;
            if !same {
                return Err(format!(
                    "{name} window {i}: ({}, {:?}, {}, {}, {}) vs ({}, {:?}, {}, {}, {})",
                    x.f_r(),
                    x.f_s().map(|f| f.render()),
                    x.lam_r(),
                    x.lam_s(),
                    x.interval(),
                    y.f_r(),
                    y.f_s().map(|f| f.render()),
                    y.lam_r(),
                    y.lam_s(),
                    y.interval()
                ));
            }
        }
    }
    Ok(())
}
