//! Skew set-pair systems: the companion m-set recursion, system assembly,
//! the hypothesis verifier, and the binomial length bound.
//!
//! A skew (r,s)-system is an ordered list of (A_i, B_i) pairs with |A_i| = r,
//! |B_i| = s, A_i disjoint from B_i, and A_i meeting B_j whenever i < j; its
//! length is at most C(r+s, r). The pipeline derives one from the free pairs:
//! each owner's m-set starts as the complement of its set and swaps the used
//! kernel vertex for the anchor whenever a free pair retires.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decomposition::Decomposition;
use crate::freepairs::FreeMarking;
use crate::privatepairs::PairLedger;
use crate::setsystem::{binomial, VSet};

/// The m-sets M_i^(j), one row per owner, indexed by stage 0..=lifetime.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MSetTable {
    rows: Vec<Vec<VSet>>,
}

impl MSetTable {
    pub fn get(&self, owner: usize, stage: usize) -> Option<VSet> {
        self.rows.get(owner).and_then(|r| r.get(stage)).copied()
    }

    pub fn rows(&self) -> &[Vec<VSet>] {
        &self.rows
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[serde(tag = "code", rename_all = "snake_case")]
pub enum SkewError {
    /// A recursion step would remove an absent vertex or add a present one;
    /// indicates upstream corruption, reported as a finding.
    #[error("m-set recursion broke for owner {owner} at stage {stage}: {detail}")]
    RecursionSizeViolation {
        owner: usize,
        stage: usize,
        detail: String,
    },
    /// The m-set recursion is only defined for validated systems.
    #[error("m-sets require a decomposition of a validated system")]
    RequiresValidatedSystem,
    #[error("binomial C({n},{k}) overflows")]
    BoundOverflow { n: u64, k: u64 },
}

/// Builds every M_i^(j): M_i^(0) is the complement of N_i; a step to stage
/// j swaps x_i^(j-1) for the anchor g_i^(j-1) iff that pair is free. The
/// final kernel vertex x_i^(t_i) is never touched.
pub fn build_m_sets(
    d: &Decomposition,
    ledger: &PairLedger,
    marking: &FreeMarking,
) -> Result<MSetTable, SkewError> {
    let params = d.params().ok_or(SkewError::RequiresValidatedSystem)?;
    let n = d.family().n();
    let mut rows = Vec::with_capacity(d.family().len());
    for (i, set) in d.family().sets().iter().enumerate() {
        let t_i = d.lifetime(i);
        let mut row = Vec::with_capacity(t_i + 1);
        let mut current = set.complement(n);
        debug_assert_eq!(current.len(), params.m);
        row.push(current);
        for j in 1..=t_i {
            if marking.is_free(i, j - 1) {
                let x = d.kernel_vertex(i, j - 1).expect("owner alive at stage j-1");
                let g = ledger
                    .get(i, j - 1)
                    .expect("ledger covers every live stage")
                    .anchor;
                if !current.contains(x) {
                    return Err(SkewError::RecursionSizeViolation {
                        owner: i,
                        stage: j,
                        detail: format!("kernel vertex {x} already absent"),
                    });
                }
                if current.contains(g) {
                    return Err(SkewError::RecursionSizeViolation {
                        owner: i,
                        stage: j,
                        detail: format!("anchor {g} already present"),
                    });
                }
                let terminal = d.kernel_vertex(i, t_i).expect("owner alive at its lifetime");
                if x == terminal {
                    return Err(SkewError::RecursionSizeViolation {
                        owner: i,
                        stage: j,
                        detail: format!("terminal kernel vertex {x} would be removed"),
                    });
                }
                current.remove(x);
                current.insert(g);
            }
            if current.len() != params.m {
                return Err(SkewError::RecursionSizeViolation {
                    owner: i,
                    stage: j,
                    detail: format!("size {} instead of {}", current.len(), params.m),
                });
            }
            row.push(current);
        }
        rows.push(row);
    }
    Ok(MSetTable { rows })
}

// ---------------------------------------------------------------------------
// Set-pair systems
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetPairEntry {
    #[serde(rename = "a")]
    pub a_side: VSet,
    #[serde(rename = "b")]
    pub b_side: VSet,
}

/// An ordered set-pair system; the order carries the skew condition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetPairSystem {
    pub r: u32,
    pub s: u32,
    #[serde(rename = "pairs")]
    pub entries: Vec<SetPairEntry>,
}

impl SetPairSystem {
    pub fn h(&self) -> usize {
        self.entries.len()
    }

    /// Parses the set-pair JSON format:
    /// `{"r":int, "s":int, "pairs":[{"a":[...],"b":[...]},...]}`.
    pub fn from_json_str(text: &str) -> Result<SetPairSystem, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("set-pair serialization cannot fail")
    }
}

/// Assembles the skew (2,m)-system from the free pairs: entries are
/// (pair, M_i^(j)) ordered by stage, then owner.
pub fn assemble_skew_system(
    ledger: &PairLedger,
    marking: &FreeMarking,
    msets: &MSetTable,
    m: u32,
) -> SetPairSystem {
    let mut keyed: Vec<((usize, usize), SetPairEntry)> = Vec::new();
    for &(owner, time) in &marking.free_pairs {
        let pair = ledger
            .get(owner, time)
            .expect("free pairs come from the ledger");
        let mset = msets
            .get(owner, time)
            .expect("m-set table covers every live stage");
        keyed.push((
            (time, owner),
            SetPairEntry {
                a_side: pair.pair().as_set(),
                b_side: mset,
            },
        ));
    }
    keyed.sort_by_key(|(k, _)| *k);
    SetPairSystem {
        r: 2,
        s: m,
        entries: keyed.into_iter().map(|(_, e)| e).collect(),
    }
}

/// First violation found while checking the skew hypotheses, 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SkewWitness {
    SizeMismatch {
        index: usize,
        side: char,
        expected: u32,
        actual: u32,
    },
    NotDisjoint {
        index: usize,
    },
    NoIntersection {
        i: usize,
        j: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkewReport {
    pub valid: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<SkewWitness>,
}

/// Checks sizes, condition (a) A_i disjoint from B_i, and condition (b)
/// A_i meets B_j for i < j; reports the first violation.
pub fn verify_skew(sys: &SetPairSystem) -> SkewReport {
    let fail = |witness| SkewReport {
        valid: false,
        witness: Some(witness),
    };
    for (idx, e) in sys.entries.iter().enumerate() {
        let index = idx + 1;
        if e.a_side.len() != sys.r {
            return fail(SkewWitness::SizeMismatch {
                index,
                side: 'a',
                expected: sys.r,
                actual: e.a_side.len(),
            });
        }
        if e.b_side.len() != sys.s {
            return fail(SkewWitness::SizeMismatch {
                index,
                side: 'b',
                expected: sys.s,
                actual: e.b_side.len(),
            });
        }
        if !e.a_side.inter(e.b_side).is_empty() {
            return fail(SkewWitness::NotDisjoint { index });
        }
    }
    for i in 0..sys.entries.len() {
        for j in i + 1..sys.entries.len() {
            if sys.entries[i]
                .a_side
                .inter(sys.entries[j].b_side)
                .is_empty()
            {
                return fail(SkewWitness::NoIntersection { i: i + 1, j: j + 1 });
            }
        }
    }
    SkewReport {
        valid: true,
        witness: None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkewBoundReport {
    pub h: u64,
    /// C(r+s, r), exact.
    pub bound: u64,
    pub ok: bool,
    pub tight: bool,
}

/// Compares the system length against C(r+s, r).
pub fn skew_bound_check(sys: &SetPairSystem) -> Result<SkewBoundReport, SkewError> {
    let n = sys.r as u64 + sys.s as u64;
    let k = sys.r as u64;
    let bound = binomial(n, k).ok_or(SkewError::BoundOverflow { n, k })?;
    let h = sys.h() as u64;
    Ok(SkewBoundReport {
        h,
        bound,
        ok: h <= bound,
        tight: h == bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::{run_decomposition, Policy};
    use crate::freepairs::{build_digraph, max_independent_set_forest};
    use crate::privatepairs::select_private_pairs;
    use crate::setsystem::fixtures::*;
    use crate::setsystem::{validate_nm_system, SetFamily};

    fn vs(ids: &[u32]) -> VSet {
        VSet::from_ids(ids.iter().copied())
    }

    fn full_pipeline(
        fam: &SetFamily,
    ) -> (Decomposition, PairLedger, FreeMarking, MSetTable, SetPairSystem) {
        let sys = validate_nm_system(fam).unwrap();
        let d = run_decomposition(&sys, &Policy::default()).unwrap();
        let ledger = select_private_pairs(&d).unwrap();
        let g = build_digraph(&ledger, &d);
        let marking = max_independent_set_forest(&g).unwrap();
        let msets = build_m_sets(&d, &ledger, &marking).unwrap();
        let skew = assemble_skew_system(&ledger, &marking, &msets, sys.m());
        (d, ledger, marking, msets, skew)
    }

    #[test]
    fn fixture_n7_m_sets_are_complements() {
        let (_, _, _, msets, _) = full_pipeline(&fixture_n7());
        assert_eq!(msets.get(0, 0), Some(vs(&[1, 6, 7])));
        assert_eq!(msets.get(1, 0), Some(vs(&[2, 6, 7])));
        assert_eq!(msets.get(2, 0), Some(vs(&[3, 5, 7])));
        assert_eq!(msets.get(3, 0), Some(vs(&[4, 5, 6])));
        assert_eq!(msets.get(0, 1), None);
    }

    #[test]
    fn fixture_n7_skew_system() {
        let (_, _, _, _, skew) = full_pipeline(&fixture_n7());
        assert_eq!((skew.r, skew.s, skew.h()), (2, 3, 4));
        let expect = [
            (vs(&[2, 5]), vs(&[1, 6, 7])),
            (vs(&[1, 5]), vs(&[2, 6, 7])),
            (vs(&[1, 6]), vs(&[3, 5, 7])),
            (vs(&[1, 7]), vs(&[4, 5, 6])),
        ];
        for (e, (a, b)) in skew.entries.iter().zip(expect) {
            assert_eq!((e.a_side, e.b_side), (a, b));
        }
        assert!(verify_skew(&skew).valid);
        let bound = skew_bound_check(&skew).unwrap();
        assert_eq!((bound.h, bound.bound, bound.ok, bound.tight), (4, 10, true, false));
    }

    #[test]
    fn disjointness_violation_detected() {
        let sys = SetPairSystem {
            r: 2,
            s: 2,
            entries: vec![SetPairEntry {
                a_side: vs(&[1, 2]),
                b_side: vs(&[1, 3]),
            }],
        };
        let report = verify_skew(&sys);
        assert!(!report.valid);
        assert_eq!(report.witness, Some(SkewWitness::NotDisjoint { index: 1 }));
    }

    #[test]
    fn size_mismatch_detected() {
        let sys = SetPairSystem {
            r: 2,
            s: 3,
            entries: vec![SetPairEntry {
                a_side: vs(&[1, 2]),
                b_side: vs(&[3, 4]),
            }],
        };
        let report = verify_skew(&sys);
        assert_eq!(
            report.witness,
            Some(SkewWitness::SizeMismatch {
                index: 1,
                side: 'b',
                expected: 3,
                actual: 2
            })
        );
    }

    /// All 2-subsets of [n] paired with their complements form a tight skew
    /// system in any order: A_i ∩ B_j = A_i - A_j is empty iff A_i = A_j.
    pub(crate) fn complement_system(n: u32) -> SetPairSystem {
        let pool: Vec<u32> = (1..=n).collect();
        let mut entries = Vec::new();
        crate::setsystem::for_each_subset(&pool, 2, |a| {
            entries.push(SetPairEntry {
                a_side: a,
                b_side: a.complement(n),
            });
            true
        });
        SetPairSystem {
            r: 2,
            s: n - 2,
            entries,
        }
    }

    #[test]
    fn complement_families_are_tight() {
        for (n, expect_h) in [(4, 6u64), (5, 10u64)] {
            let sys = complement_system(n);
            assert!(verify_skew(&sys).valid, "n={n}");
            let bound = skew_bound_check(&sys).unwrap();
            assert_eq!((bound.h, bound.bound), (expect_h, expect_h));
            assert!(bound.tight);
        }
    }

    #[test]
    fn out_of_order_intersection_violation() {
        // reverse one complement entry so condition (b) fails:
        // put {3,4} (complement {1,2}) first, then {1,2} whose b-side {3,4}
        // meets {3,4}... instead make two entries with disjoint a/b cross.
        let sys = SetPairSystem {
            r: 2,
            s: 2,
            entries: vec![
                SetPairEntry {
                    a_side: vs(&[1, 2]),
                    b_side: vs(&[3, 4]),
                },
                SetPairEntry {
                    a_side: vs(&[3, 4]),
                    b_side: vs(&[1, 2]),
                },
                SetPairEntry {
                    a_side: vs(&[1, 3]),
                    b_side: vs(&[2, 4]),
                },
            ],
        };
        // entry 1 a = {1,2} vs entry 2 b = {1,2}: meets; entry 1 vs entry 3
        // b = {2,4}: meets; entry 2 a = {3,4} vs entry 3 b = {2,4}: meets.
        assert!(verify_skew(&sys).valid);
        let sys_bad = SetPairSystem {
            entries: vec![
                sys.entries[0].clone(),
                SetPairEntry {
                    a_side: vs(&[3, 4]),
                    b_side: vs(&[1, 2]),
                },
                SetPairEntry {
                    a_side: vs(&[1, 2]),
                    b_side: vs(&[3, 4]),
                },
            ],
            ..sys
        };
        // entry 2 a = {3,4} vs entry 3 b = {3,4}: fine; entry 1 a = {1,2}
        // vs entry 3 b = {3,4}: disjoint -> violation at (1,3)
        let report = verify_skew(&sys_bad);
        assert_eq!(
            report.witness,
            Some(SkewWitness::NoIntersection { i: 1, j: 3 })
        );
    }

    #[test]
    fn set_pair_json_roundtrip() {
        let sys = complement_system(4);
        let json = sys.to_json_string();
        let back = SetPairSystem::from_json_str(&json).unwrap();
        assert_eq!(back, sys);
        assert!(json.starts_with("{\"r\":2,\"s\":2,\"pairs\":[{\"a\":[1,2],\"b\":[3,4]}"));
    }

    #[test]
    fn empty_marking_gives_empty_system() {
        let (_, ledger, _, msets, _) = full_pipeline(&fixture_n7());
        let empty = FreeMarking {
            independent: vec![],
            free_pairs: vec![],
        };
        let sys = assemble_skew_system(&ledger, &empty, &msets, 3);
        assert_eq!(sys.h(), 0);
        assert!(verify_skew(&sys).valid);
        let bound = skew_bound_check(&sys).unwrap();
        assert!(bound.ok && !bound.tight);
    }

    #[test]
    fn m_set_sizes_match_m() {
        let (d, _, _, msets, _) = full_pipeline(&fixture_n7());
        let m = d.params().unwrap().m;
        for row in msets.rows() {
            for s in row {
                assert_eq!(s.len(), m);
            }
        }
    }

    /// Two-stage run: every free stage-0 pair triggers a swap, and each
    /// m-set stays inside the owner's complement plus its earlier anchors.
    #[test]
    fn two_stage_recursion_steps() {
        let (d, ledger, marking, msets, skew) = full_pipeline(&fixture_two_stage());
        assert_eq!(d.t(), 1);
        let n = d.family().n();
        for (i, set) in d.family().sets().iter().enumerate() {
            let complement = set.complement(n);
            assert_eq!(msets.get(i, 0), Some(complement));
            let p0 = ledger.get(i, 0).unwrap();
            let x0 = d.kernel_vertex(i, 0).unwrap();
            let expected = if marking.is_free(i, 0) {
                let mut next = complement;
                next.remove(x0);
                next.insert(p0.anchor);
                next
            } else {
                complement
            };
            assert_eq!(msets.get(i, 1), Some(expected));
            // containment invariant against complement + earlier anchors
            for j in 0..=d.lifetime(i) {
                let mut allowed = complement;
                if j > 0 {
                    allowed = allowed.union(ledger.anchors_up_to(i, j - 1));
                }
                assert!(msets.get(i, j).unwrap().is_subset_of(allowed));
            }
            // the terminal kernel vertex is never removed
            let terminal = d.kernel_vertex(i, d.lifetime(i)).unwrap();
            for j in 0..=d.lifetime(i) {
                assert!(msets.get(i, j).unwrap().contains(terminal));
            }
        }
        assert_eq!(skew.h(), marking.size());
        assert!(verify_skew(&skew).valid);
    }
}
