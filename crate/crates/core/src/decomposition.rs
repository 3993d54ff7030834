//! Staged kernel decomposition of a set family.
//!
//! Stage 0 takes the whole family and picks one kernel vertex per set from
//! the intersection of all other sets. Each later stage restricts to a
//! minimal drop-one-critical subfamily of the current remainders (the sets
//! with all earlier kernels removed) and picks fresh kernel vertices there.
//! The process stops when no qualifying subfamily of the required size is
//! left. Kernel vertices form the trace set A; everything else is garbage G.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::report::ClauseResult;
use crate::setsystem::{
    check_property_i, drop_one_intersections, NMSystem, PropertyIWitness, SetFamily, VSet,
};

/// How to pick among qualifying minimal subfamilies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubfamilyRule {
    /// Lexicographically smallest index subset (the default).
    LexSmallest,
    /// Lexicographically largest; exists to exercise the robustness claim
    /// that any qualifying choice yields a decomposition passing the checks.
    LexLargest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Policy {
    /// Minimum subfamily size per stage. The structural guarantees are only
    /// claimed at the default of 4; smaller values are for unit-testing the
    /// stage mechanics.
    pub min_stage_size: usize,
    pub subfamily_rule: SubfamilyRule,
}

impl Default for Policy {
    fn default() -> Self {
        Policy {
            min_stage_size: 4,
            subfamily_rule: SubfamilyRule::LexSmallest,
        }
    }
}

/// One stage of the decomposition: its member sets (original indices) and
/// the kernel vertex chosen for each member.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stage {
    pub j: usize,
    /// Original set indices, ascending.
    pub members: Vec<usize>,
    /// (member index, kernel vertex), aligned with `members`.
    pub kernel: Vec<(usize, u32)>,
}

impl Stage {
    pub fn ell(&self) -> usize {
        self.members.len()
    }

    pub fn kernel_of(&self, member: usize) -> Option<u32> {
        self.kernel
            .iter()
            .find(|(i, _)| *i == member)
            .map(|(_, x)| *x)
    }

    pub fn kernel_set(&self) -> VSet {
        VSet::from_ids(self.kernel.iter().map(|(_, x)| *x))
    }
}

/// Parameters carried over from a validated system; absent in mechanics mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenuineParams {
    pub k: u32,
    pub m: u32,
}

/// The completed decomposition. Immutable; every downstream phase reads it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decomposition {
    family: SetFamily,
    params: Option<GenuineParams>,
    stages: Vec<Stage>,
    /// Per stage, the member remainders N_i minus all kernels up to and
    /// including that stage; aligned with the stage's member list.
    remainders: Vec<Vec<VSet>>,
    /// Last stage each original set belongs to.
    lifetimes: Vec<usize>,
    kernel_vertices: VSet,
    garbage: VSet,
    vertex_union: VSet,
}

impl Decomposition {
    pub fn family(&self) -> &SetFamily {
        &self.family
    }

    /// `Some` iff the decomposition came from a validated system.
    pub fn params(&self) -> Option<GenuineParams> {
        self.params
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn remainders(&self) -> &[Vec<VSet>] {
        &self.remainders
    }

    /// Length of the iterative process (index of the last stage).
    pub fn t(&self) -> usize {
        self.stages.len() - 1
    }

    pub fn lifetime(&self, i: usize) -> usize {
        self.lifetimes[i]
    }

    pub fn lifetimes(&self) -> &[usize] {
        &self.lifetimes
    }

    /// The trace set A of all kernel vertices.
    pub fn kernel_vertices(&self) -> VSet {
        self.kernel_vertices
    }

    /// G = V - A.
    pub fn garbage(&self) -> VSet {
        self.garbage
    }

    /// V, the union of all member sets.
    pub fn vertex_union(&self) -> VSet {
        self.vertex_union
    }

    /// Kernel vertex x_i^(j), if set i belongs to stage j.
    pub fn kernel_vertex(&self, i: usize, j: usize) -> Option<u32> {
        self.stages.get(j).and_then(|s| s.kernel_of(i))
    }

    /// Reverse lookup: which (set, stage) a kernel vertex belongs to.
    /// Kernel vertices are pairwise distinct, so this is well defined.
    pub fn kernel_identity(&self, v: u32) -> Option<(usize, usize)> {
        for stage in &self.stages {
            for &(i, x) in &stage.kernel {
                if x == v {
                    return Some((i, stage.j));
                }
            }
        }
        None
    }

    /// The full original sets of the stage-j members, in member order.
    /// Cover counts are always taken against these, never the remainders.
    pub fn stage_sets(&self, j: usize) -> Vec<VSet> {
        self.stages[j]
            .members
            .iter()
            .map(|&i| self.family.sets()[i])
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[serde(tag = "code", rename_all = "snake_case")]
pub enum DecompositionError {
    #[error("family has {ell} sets, below the stage minimum {min}")]
    EllTooSmall { ell: usize, min: usize },
    /// The all-but-one remainder intersection for this member is empty: the
    /// input violated the drop-one condition at some remainder level. This
    /// cannot happen for a validated system and is reported, never patched.
    #[error("no kernel vertex available for member {member} at stage {stage}")]
    KernelChoiceImpossible { member: usize, stage: usize },
    #[error("mechanics input violates property (i): {witness:?}")]
    PropertyIFailed { witness: PropertyIWitness },
}

/// All index subsets S of `sets` with |S| >= min_size whose intersection is
/// empty while every drop-one intersection is nonempty, in lexicographic
/// order of the index subsets.
///
/// The search walks ascending index prefixes and prunes on two facts: once
/// the running intersection is empty no extension can keep its own drop-one
/// nonempty, and once some drop-one equals the running intersection it dies
/// exactly when the intersection does.
pub fn minimal_critical_subfamilies(sets: &[VSet], min_size: usize) -> Vec<Vec<usize>> {
    debug_assert!(min_size >= 2);
    // The union of all sets acts as the universe: intersecting it with any
    // member set is the identity, which is all the drop-one seeds need.
    let universe = sets.iter().fold(VSet::EMPTY, |acc, s| acc.union(*s));
    let mut out = Vec::new();
    let mut chosen: Vec<usize> = Vec::new();
    for start in 0..sets.len() {
        chosen.push(start);
        extend(
            sets,
            min_size,
            &mut chosen,
            sets[start],
            &mut vec![universe],
            &mut out,
        );
        chosen.pop();
    }
    return out;

    fn extend(
        sets: &[VSet],
        min_size: usize,
        chosen: &mut Vec<usize>,
        total: VSet,
        drops: &mut Vec<VSet>,
        out: &mut Vec<Vec<usize>>,
    ) {
        let last = *chosen.last().expect("nonempty prefix");
        for next in last + 1..sets.len() {
            let s = sets[next];
            let new_total = total.inter(s);
            if new_total == total {
                // s adds nothing toward emptying the intersection; its own
                // drop-one would then die together with the total.
                continue;
            }
            let mut new_drops: Vec<VSet> = drops.iter().map(|d| d.inter(s)).collect();
            new_drops.push(total);
            if new_drops.iter().any(|d| d.is_empty()) {
                continue;
            }
            chosen.push(next);
            if new_total.is_empty() {
                if chosen.len() >= min_size {
                    out.push(chosen.clone());
                }
                // No extension of a closed subfamily can qualify.
            } else if new_drops.iter().all(|d| *d != new_total) {
                extend(sets, min_size, chosen, new_total, &mut new_drops, out);
            }
            chosen.pop();
        }
    }
}

/// Runs the decomposition on a validated system.
pub fn run_decomposition(
    system: &NMSystem,
    policy: &Policy,
) -> Result<Decomposition, DecompositionError> {
    run_inner(
        system.family(),
        Some(GenuineParams {
            k: system.k(),
            m: system.m(),
        }),
        policy,
    )
}

/// Mechanics mode: runs the same stage machinery on any family satisfying
/// property (i), without requiring property (ii) or uniform set sizes. The
/// structural observations (a)-(c) still hold; the counting bounds do not.
pub fn run_decomposition_mechanics(
    family: &SetFamily,
    policy: &Policy,
) -> Result<Decomposition, DecompositionError> {
    let p1 = check_property_i(family);
    if !p1.holds {
        return Err(DecompositionError::PropertyIFailed {
            witness: p1.witness.expect("failed report carries a witness"),
        });
    }
    run_inner(family, None, policy)
}

fn run_inner(
    family: &SetFamily,
    params: Option<GenuineParams>,
    policy: &Policy,
) -> Result<Decomposition, DecompositionError> {
    let ell = family.len();
    if ell < policy.min_stage_size {
        return Err(DecompositionError::EllTooSmall {
            ell,
            min: policy.min_stage_size,
        });
    }
    let universe = VSet::full(family.n());
    let mut stages: Vec<Stage> = Vec::new();
    let mut remainders_per_stage: Vec<Vec<VSet>> = Vec::new();
    let mut members: Vec<usize> = (0..ell).collect();
    let mut removed = VSet::EMPTY;

    loop {
        let j = stages.len();
        // Current truncations of the member sets (full sets at stage 0).
        let truncated: Vec<VSet> = members
            .iter()
            .map(|&i| family.sets()[i].minus(removed))
            .collect();
        let drops = drop_one_intersections(&truncated, universe);
        let mut kernel = Vec::with_capacity(members.len());
        for (pos, &i) in members.iter().enumerate() {
            let x = drops[pos]
                .smallest()
                .ok_or(DecompositionError::KernelChoiceImpossible { member: i, stage: j })?;
            kernel.push((i, x));
        }
        let kernel_set = VSet::from_ids(kernel.iter().map(|(_, x)| *x));
        assert_eq!(
            kernel_set.len() as usize,
            kernel.len(),
            "kernel vertices must be pairwise distinct"
        );
        for &(i, x) in &kernel {
            assert!(
                !family.sets()[i].contains(x),
                "kernel vertex {x} of set {i} must avoid its own set"
            );
        }
        stages.push(Stage {
            j,
            members: members.clone(),
            kernel,
        });
        removed = removed.union(kernel_set);
        let rems: Vec<VSet> = members
            .iter()
            .map(|&i| family.sets()[i].minus(removed))
            .collect();
        remainders_per_stage.push(rems.clone());

        let subfamilies = minimal_critical_subfamilies(&rems, policy.min_stage_size);
        let Some(local) = (match policy.subfamily_rule {
            SubfamilyRule::LexSmallest => subfamilies.first(),
            SubfamilyRule::LexLargest => subfamilies.last(),
        }) else {
            break;
        };
        members = local.iter().map(|&pos| members[pos]).collect();
    }

    let mut lifetimes = vec![0usize; ell];
    for stage in &stages {
        for &i in &stage.members {
            lifetimes[i] = stage.j;
        }
    }
    let kernel_vertices = stages
        .iter()
        .fold(VSet::EMPTY, |acc, s| acc.union(s.kernel_set()));
    let vertex_union = family.vertex_union();
    Ok(Decomposition {
        family: family.clone(),
        params,
        stages,
        remainders: remainders_per_stage,
        lifetimes,
        kernel_vertices,
        garbage: vertex_union.minus(kernel_vertices),
        vertex_union,
    })
}

/// Structural observations about a completed decomposition:
/// (a) stage kernels are pairwise disjoint;
/// (b) every stage has at least `min` members (4 in the real pipeline);
/// (c) |N_i ∩ A^(r)| = ell_r - 1 for every member i alive at stage r;
/// (d) t < m;
/// (e) sum of stage sizes >= n - 3m.
/// (d) and (e) need the validated parameters and are skipped in mechanics
/// mode. Failures are findings, not errors.
pub fn verify_observations(d: &Decomposition) -> Vec<ClauseResult> {
    let mut clauses = Vec::new();

    let mut seen = VSet::EMPTY;
    let mut disjoint = ClauseResult::pass("kernel_sets_pairwise_disjoint");
    for stage in d.stages() {
        let ks = stage.kernel_set();
        let overlap = seen.inter(ks);
        if !overlap.is_empty() {
            disjoint = ClauseResult::fail(
                "kernel_sets_pairwise_disjoint",
                format!("stage {} reuses kernel vertices {overlap}", stage.j),
            );
            break;
        }
        seen = seen.union(ks);
    }
    clauses.push(disjoint);

    let min_size = d
        .stages()
        .iter()
        .map(Stage::ell)
        .min()
        .expect("at least one stage");
    clauses.push(if min_size >= 4 {
        ClauseResult::pass("stage_size_at_least_four")
    } else {
        ClauseResult::fail(
            "stage_size_at_least_four",
            format!("smallest stage has {min_size} members"),
        )
    });

    let mut trace = ClauseResult::pass("kernel_trace_in_member_sets");
    'outer: for stage in d.stages() {
        let ks = stage.kernel_set();
        let expect = stage.ell() as u32 - 1;
        for (i, set) in d.family().sets().iter().enumerate() {
            // set i is alive at stage r iff r <= t_i
            if d.lifetime(i) >= stage.j {
                let got = set.inter(ks).len();
                if got != expect {
                    trace = ClauseResult::fail(
                        "kernel_trace_in_member_sets",
                        format!(
                            "|N_{i} ∩ A^({j})| = {got}, expected {expect}",
                            j = stage.j
                        ),
                    );
                    break 'outer;
                }
            }
        }
    }
    clauses.push(trace);

    match d.params() {
        Some(p) => {
            let t = d.t();
            clauses.push(if (t as u64) < p.m as u64 {
                ClauseResult::pass("process_length_below_m")
            } else {
                ClauseResult::fail(
                    "process_length_below_m",
                    format!("t={t} but m={}", p.m),
                )
            });
            let total: i64 = d.stages().iter().map(|s| s.ell() as i64).sum();
            let floor = d.family().n() as i64 - 3 * p.m as i64;
            clauses.push(if total >= floor {
                ClauseResult::pass("stage_size_sum_lower_bound")
            } else {
                ClauseResult::fail(
                    "stage_size_sum_lower_bound",
                    format!("sum of stage sizes {total} < n - 3m = {floor}"),
                )
            });
        }
        None => {
            clauses.push(ClauseResult::skipped(
                "process_length_below_m",
                "mechanics mode: no validated parameters",
            ));
            clauses.push(ClauseResult::skipped(
                "stage_size_sum_lower_bound",
                "mechanics mode: no validated parameters",
            ));
        }
    }
    clauses
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::all_ok;
    use crate::setsystem::fixtures::*;
    use crate::setsystem::validate_nm_system;
    use std::collections::BTreeSet;

    fn vs(ids: &[u32]) -> VSet {
        VSet::from_ids(ids.iter().copied())
    }

    /// Exhaustive scan over all index subsets; the oracle for the pruned DFS.
    fn naive_minimal_subfamilies(sets: &[VSet], min_size: usize) -> Vec<Vec<usize>> {
        let ell = sets.len();
        let mut out = Vec::new();
        let mut subsets: Vec<Vec<usize>> = Vec::new();
        for mask in 1u64..(1 << ell) {
            let s: Vec<usize> = (0..ell).filter(|i| mask & (1 << i) != 0).collect();
            if s.len() >= min_size {
                subsets.push(s);
            }
        }
        subsets.sort();
        for s in subsets {
            let inter = |skip: Option<usize>| -> Option<VSet> {
                let mut acc: Option<VSet> = None;
                for &i in &s {
                    if Some(i) == skip {
                        continue;
                    }
                    acc = Some(match acc {
                        None => sets[i],
                        Some(a) => a.inter(sets[i]),
                    });
                }
                acc
            };
            let total_empty = inter(None).map(|v| v.is_empty()).unwrap_or(false);
            let drops_ok = s
                .iter()
                .all(|&i| inter(Some(i)).map(|v| !v.is_empty()).unwrap_or(true));
            if total_empty && drops_ok {
                out.push(s);
            }
        }
        out
    }

    #[test]
    fn minimal_subfamilies_examples() {
        let k4: Vec<VSet> = fixture_k4().sets().to_vec();
        assert_eq!(minimal_critical_subfamilies(&k4, 4), vec![vec![0, 1, 2, 3]]);

        let singles = vec![vs(&[5]), vs(&[5]), vs(&[6]), vs(&[7])];
        assert!(minimal_critical_subfamilies(&singles, 4).is_empty());

        let mixed = vec![vs(&[1]), vs(&[2]), vs(&[3]), vs(&[4]), vs(&[1, 2, 3, 4])];
        assert!(minimal_critical_subfamilies(&mixed, 4).is_empty());
    }

    #[test]
    fn minimal_subfamilies_match_naive_scan() {
        let cases: Vec<Vec<VSet>> = vec![
            fixture_k4().sets().to_vec(),
            fixture_n7().sets().to_vec(),
            vec![vs(&[5]), vs(&[5]), vs(&[6]), vs(&[7])],
            vec![vs(&[1]), vs(&[2]), vs(&[3]), vs(&[4]), vs(&[1, 2, 3, 4])],
            vec![vs(&[1, 2]), vs(&[2, 3]), vs(&[1, 3]), vs(&[1, 2, 3])],
            vec![
                vs(&[1, 2, 3]),
                vs(&[1, 2, 4]),
                vs(&[1, 3, 4]),
                vs(&[2, 3, 4]),
                vs(&[1, 5, 6]),
                vs(&[2, 5, 6]),
            ],
        ];
        for sets in cases {
            for min_size in 2..=4 {
                assert_eq!(
                    minimal_critical_subfamilies(&sets, min_size),
                    naive_minimal_subfamilies(&sets, min_size),
                    "sets={sets:?} min_size={min_size}"
                );
            }
        }
    }

    #[test]
    fn fixture_n7_decomposition() {
        let sys = validate_nm_system(&fixture_n7()).unwrap();
        let d = run_decomposition(&sys, &Policy::default()).unwrap();
        assert_eq!(d.t(), 0);
        let s0 = &d.stages()[0];
        assert_eq!(s0.members, vec![0, 1, 2, 3]);
        assert_eq!(s0.kernel, vec![(0, 1), (1, 2), (2, 3), (3, 4)]);
        assert_eq!(d.kernel_vertices(), vs(&[1, 2, 3, 4]));
        assert_eq!(d.garbage(), vs(&[5, 6, 7]));
        assert_eq!(
            d.remainders()[0],
            vec![vs(&[5]), vs(&[5]), vs(&[6]), vs(&[7])]
        );
        assert_eq!(d.lifetimes(), &[0, 0, 0, 0]);
    }

    #[test]
    fn two_set_system_is_too_small() {
        let sys = validate_nm_system(&fixture_disjoint_pair()).unwrap();
        let err = run_decomposition(&sys, &Policy::default()).unwrap_err();
        assert_eq!(err, DecompositionError::EllTooSmall { ell: 2, min: 4 });
    }

    #[test]
    fn k4_mechanics_run() {
        let d = run_decomposition_mechanics(&fixture_k4(), &Policy::default()).unwrap();
        assert_eq!(d.t(), 0);
        assert_eq!(d.kernel_vertices(), vs(&[1, 2, 3, 4]));
        assert!(d.garbage().is_empty());
        let clauses = verify_observations(&d);
        assert!(all_ok(&clauses));
        let skipped: Vec<&str> = clauses
            .iter()
            .filter(|c| c.status == crate::report::CheckStatus::Skipped)
            .map(|c| c.name.as_str())
            .collect();
        assert_eq!(
            skipped,
            vec!["process_length_below_m", "stage_size_sum_lower_bound"]
        );
    }

    #[test]
    fn mechanics_rejects_property_i_failure() {
        let fam = SetFamily::from_sets(4, &[&[1, 2], &[1, 3], &[1, 4], &[1, 2, 3]]);
        let err = run_decomposition_mechanics(&fam, &Policy::default()).unwrap_err();
        assert!(matches!(err, DecompositionError::PropertyIFailed { .. }));
    }

    #[test]
    fn fixture_n7_observations_all_pass() {
        let sys = validate_nm_system(&fixture_n7()).unwrap();
        let d = run_decomposition(&sys, &Policy::default()).unwrap();
        let clauses = verify_observations(&d);
        assert!(all_ok(&clauses));
        assert!(clauses.iter().all(|c| c.passed()));
    }

    #[test]
    fn lex_largest_policy_still_verifies() {
        let sys = validate_nm_system(&fixture_n7()).unwrap();
        let policy = Policy {
            subfamily_rule: SubfamilyRule::LexLargest,
            ..Policy::default()
        };
        let d = run_decomposition(&sys, &policy).unwrap();
        assert!(all_ok(&verify_observations(&d)));
    }

    #[test]
    fn determinism_identical_runs() {
        let sys = validate_nm_system(&fixture_n7()).unwrap();
        let a = run_decomposition(&sys, &Policy::default()).unwrap();
        let b = run_decomposition(&sys, &Policy::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn kernel_identity_lookup() {
        let sys = validate_nm_system(&fixture_n7()).unwrap();
        let d = run_decomposition(&sys, &Policy::default()).unwrap();
        assert_eq!(d.kernel_identity(3), Some((2, 0)));
        assert_eq!(d.kernel_identity(7), None);
        assert_eq!(d.kernel_vertex(2, 0), Some(3));
        assert_eq!(d.kernel_vertex(2, 1), None);
    }

    /// Sets over [12]: N_i drops i+1 from {1..4} and i+5 from {5..8} and
    /// carries the private vertex 9+i. Stage 0 kernels are {1,2,3,4}, the
    /// remainders form a critical subfamily again, stage 1 kernels are
    /// {5,6,7,8}, and the leftover singletons stop the process at t=1.
    pub(crate) fn two_stage_family() -> SetFamily {
        SetFamily::from_sets(
            12,
            &[
                &[2, 3, 4, 6, 7, 8, 9],
                &[1, 3, 4, 5, 7, 8, 10],
                &[1, 2, 4, 5, 6, 8, 11],
                &[1, 2, 3, 5, 6, 7, 12],
            ],
        )
    }

    #[test]
    fn stage_membership_is_nested() {
        let d = run_decomposition_mechanics(&two_stage_family(), &Policy::default()).unwrap();
        assert_eq!(d.t(), 1);
        assert_eq!(d.stages()[0].kernel, vec![(0, 1), (1, 2), (2, 3), (3, 4)]);
        assert_eq!(d.stages()[1].kernel, vec![(0, 5), (1, 6), (2, 7), (3, 8)]);
        for w in d.stages().windows(2) {
            let prev: BTreeSet<usize> = w[0].members.iter().copied().collect();
            assert!(w[1].members.iter().all(|i| prev.contains(i)));
        }
        assert!(all_ok(&verify_observations(&d)));
        assert_eq!(d.lifetimes(), &[1, 1, 1, 1]);
        assert_eq!(d.garbage(), VSet::from_ids([9, 10, 11, 12]));
    }
}
