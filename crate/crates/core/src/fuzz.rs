//! Differential fuzzing: on seeded random instances, the window engine, the
//! alignment baseline and the snapshot oracle must produce the same relation
//! for all four operations, and the window sets must obey their laws.

use std::fmt;

use crate::baseline_ta::ta_join;
use crate::joins::{negation_join, JoinOp};
use crate::lineage::equivalent;
use crate::model::{TimePoint, TpRelation};
use crate::oracle::{snapshot_join, window_sets_bruteforce, window_sets_equal, equal_up_to_equivalence};
use crate::synth::{random_instance, FuzzInstance};
use crate::theta::Theta;
use crate::windows::{window_sets, WindowClass, WindowSets};

/// A reproducible disagreement between two engines (or a broken window law).
#[derive(Debug)]
pub struct FuzzFailure {
    pub seed: u64,
    pub op: Option<JoinOp>,
    pub check: String,
    pub diff: String,
    pub dump: String,
}

impl fmt::Display for FuzzFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "fuzz failure (instance seed {})", self.seed)?;
        if let Some(op) = self.op {
            writeln!(f, "operation: {}", op.name())?;
        }
        writeln!(f, "check: {}", self.check)?;
        writeln!(f, "diff: {}", self.diff)?;
        write!(f, "{}", self.dump)
    }
}

impl std::error::Error for FuzzFailure {}

/// Runs all engines over one instance and compares results for every
/// operation, then checks the window-set laws in both orientations.
pub fn check_instance(seed: u64, inst: &FuzzInstance) -> std::result::Result<(), Box<FuzzFailure>> {
    let fail = |op: Option<JoinOp>, check: &str, diff: String| {
        Box::new(FuzzFailure {
            seed,
            op,
            check: check.to_string(),
            diff,
            dump: inst.dump(),
        })
    };

    for op in JoinOp::ALL {
        let reference = snapshot_join(&inst.left, &inst.right, &inst.theta, op)
            .map_err(|e| fail(Some(op), "oracle", e.to_string()))?;
        let (nj, _) = negation_join(&inst.left, &inst.right, &inst.theta, op)
            .map_err(|e| fail(Some(op), "nj", e.to_string()))?;
        let (ta, _) = ta_join(&inst.left, &inst.right, &inst.theta, op)
            .map_err(|e| fail(Some(op), "ta", e.to_string()))?;
        equal_up_to_equivalence(&nj, &reference)
            .map_err(|diff| fail(Some(op), "nj vs oracle", diff))?;
        equal_up_to_equivalence(&ta, &reference)
            .map_err(|diff| fail(Some(op), "ta vs oracle", diff))?;
    }

    check_window_laws(&inst.left, &inst.right, &inst.theta)
        .map_err(|diff| fail(None, "window laws (forward)", diff))?;
    check_window_laws(&inst.right, &inst.left, &inst.theta.flipped())
        .map_err(|diff| fail(None, "window laws (reversed)", diff))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, Default)]
pub struct FuzzSummary {
    pub instances: u64,
    pub comparisons: u64,
}

/// Checks `instances` seeded instances derived from `seed`; stops at the
/// first failure with a reproducer.
pub fn run(instances: u64, seed: u64) -> std::result::Result<FuzzSummary, Box<FuzzFailure>> {
    let mut summary = FuzzSummary::default();
    for i in 0..instances {
        let instance_seed = seed.wrapping_add(i);
        let inst = random_instance(instance_seed);
        check_instance(instance_seed, &inst)?;
        summary.instances += 1;
        summary.comparisons += JoinOp::ALL.len() as u64 * 2;
    }
    Ok(summary)
}

/// The window-set laws of one orientation:
/// classes partition the stream, unmatched and overlapping intervals cover
/// each host tuple exactly, negating intervals cover exactly the overlapped
/// part, the overlapping set is symmetric, and no two adjacent same-class
/// windows of a group could merge.
pub fn check_window_laws(r: &TpRelation, s: &TpRelation, th: &Theta) -> std::result::Result<(), String> {
    let sets = window_sets(r, s, th).map_err(|e| e.to_string())?;

    // Per-point coverage per r tuple: inside the host interval, exactly one
    // of (unmatched, under-an-overlap); negating coverage equals overlap
    // coverage.
    for rt in r.tuples() {
        let of_tuple = |ws: &[crate::windows::Window]| -> Vec<crate::model::Interval> {
            ws.iter()
                .filter(|w| w.lam_r().to_string() == rt.var.as_ref())
                .map(|w| w.interval())
                .collect()
        };
        let unmatched = of_tuple(&sets.unmatched);
        let overlapping = of_tuple(&sets.overlapping);
        let negating = of_tuple(&sets.negating);
        for t in rt.interval.ts().0..rt.interval.te().0 {
            let p = TimePoint(t);
            let in_u = unmatched.iter().filter(|iv| iv.contains(p)).count();
            let in_o = overlapping.iter().any(|iv| iv.contains(p));
            let in_n = negating.iter().filter(|iv| iv.contains(p)).count();
            if in_u > 1 || in_n > 1 {
                return Err(format!("tuple {}: windows overlap at {p}", rt.var));
            }
            if (in_u == 1) == in_o {
                return Err(format!(
                    "tuple {}: point {p} covered by unmatched={in_u} overlap={in_o}",
                    rt.var
                ));
            }
            if (in_n == 1) != in_o {
                return Err(format!(
                    "tuple {}: negating coverage at {p} disagrees with overlaps",
                    rt.var
                ));
            }
        }
        // Windows never leave the host interval.
        for iv in unmatched.iter().chain(&overlapping).chain(&negating) {
            if iv.ts() < rt.interval.ts() || iv.te() > rt.interval.te() {
                return Err(format!("tuple {}: window {iv} escapes the host", rt.var));
            }
        }
    }

    // W_O symmetry: the mirrored overlapping set of (s; r).
    let reversed = window_sets(s, r, &th.flipped()).map_err(|e| e.to_string())?;
    let digest = |ws: &[crate::windows::Window], swap: bool| -> Vec<String> {
        let mut v: Vec<String> = ws
            .iter()
            .map(|w| {
                let (fr, fs) = if swap {
                    (w.f_s().unwrap().render(), w.f_r().render())
                } else {
                    (w.f_r().render(), w.f_s().unwrap().render())
                };
                let (lr, ls) = if swap {
                    (w.lam_s().to_string(), w.lam_r().to_string())
                } else {
                    (w.lam_r().to_string(), w.lam_s().to_string())
                };
                format!("{fr}|{fs}|{lr}|{ls}|{}", w.interval())
            })
            .collect();
        v.sort();
        v
    };
    if digest(&sets.overlapping, false) != digest(&reversed.overlapping, true) {
        return Err("overlapping windows are not symmetric".to_string());
    }

    check_maximality(&sets)?;

    // Table II conformance: the per-timepoint reconstruction agrees.
    let brute = window_sets_bruteforce(r, s, th).map_err(|e| e.to_string())?;
    window_sets_equal(&sets, &brute)?;
    Ok(())
}

/// Change preservation inside the window sets: adjacent same-class windows
/// of one group must differ in fact or lineage.
fn check_maximality(sets: &WindowSets) -> std::result::Result<(), String> {
    for (class, ws) in [
        (WindowClass::Unmatched, &sets.unmatched),
        (WindowClass::Overlapping, &sets.overlapping),
        (WindowClass::Negating, &sets.negating),
    ] {
        let mut sorted: Vec<_> = ws.iter().collect();
        sorted.sort_by(|a, b| {
            a.lam_r()
                .to_string()
                .cmp(&b.lam_r().to_string())
                .then(a.interval().ts().cmp(&b.interval().ts()))
        });
        for pair in sorted.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if a.lam_r() != b.lam_r() || a.interval().te() != b.interval().ts() {
                continue;
            }
            match class {
                WindowClass::Unmatched => {
                    return Err(format!(
                        "adjacent unmatched windows {} and {} were not merged",
                        a.interval(),
                        b.interval()
                    ));
                }
                WindowClass::Negating => {
                    if equivalent(a.lam_s(), b.lam_s()).map_err(|e| e.to_string())? {
                        return Err(format!(
                            "adjacent negating windows {} and {} carry equivalent lineages",
                            a.interval(),
                            b.interval()
                        ));
                    }
                }
                WindowClass::Overlapping => {
                    if a.f_s() == b.f_s()
                        && equivalent(a.lam_s(), b.lam_s()).map_err(|e| e.to_string())?
                    {
                        return Err(format!(
                            "adjacent overlapping windows {} and {} could merge",
                            a.interval(),
                            b.interval()
                        ));
                    }
                }
            }
        }
    }
    Ok(())
}
