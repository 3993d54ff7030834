//! Cover counting and the private-pair selection procedure.
//!
//! A pair inside a member set is single-covered at stage j when exactly one
//! of the stage's sets contains it. Selection walks stages in order and picks,
//! for each live member, the smallest single-covered pair avoiding that
//! member's earlier anchors; the garbage element becomes the anchor. Two
//! rewrite rules then push kernel non-anchors forward so that downstream
//! digraph arguments hold. Cover counts always run against the full original
//! sets of the stage's members, never against remainders.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decomposition::Decomposition;
use crate::report::ClauseResult;
use crate::setsystem::VSet;

/// An unordered vertex pair in canonical ascending order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pair {
    pub lo: u32,
    pub hi: u32,
}

impl Pair {
    pub fn new(a: u32, b: u32) -> Pair {
        assert_ne!(a, b, "a pair needs two distinct vertices");
        Pair {
            lo: a.min(b),
            hi: a.max(b),
        }
    }

    pub fn as_set(self) -> VSet {
        VSet::from_ids([self.lo, self.hi])
    }

    pub fn other(self, v: u32) -> u32 {
        debug_assert!(v == self.lo || v == self.hi);
        if v == self.lo {
            self.hi
        } else {
            self.lo
        }
    }
}

impl std::fmt::Display for Pair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{{},{}}}", self.lo, self.hi)
    }
}

/// Number of sets containing both elements of the pair.
pub fn cover_count(p: Pair, stage_sets: &[VSet]) -> usize {
    let ps = p.as_set();
    stage_sets.iter().filter(|s| ps.is_subset_of(**s)).count()
}

/// Which rewrite rule produced a non-anchor replacement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReplacementRule {
    /// Non-anchor was an earlier-stage kernel vertex; promoted to the same
    /// owner's kernel vertex at the current stage (or its last stage).
    PromoteEarlierKernel,
    /// Non-anchor was a current-stage kernel vertex whose owner and the pair
    /// owner both live on; shifted to the next stage's kernel vertex.
    ShiftSameStageKernel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleApplication {
    pub rule: ReplacementRule,
    pub from: u32,
    pub to: u32,
}

/// A selected private pair: anchor is the designated garbage element.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrivatePair {
    /// Original index of the owning set.
    pub owner: usize,
    /// Stage at which the pair was selected.
    pub time: usize,
    pub anchor: u32,
    pub non_anchor: u32,
    /// Rewrites applied after the initial choice, in order.
    pub rules: Vec<RuleApplication>,
}

impl PrivatePair {
    pub fn pair(&self) -> Pair {
        Pair::new(self.anchor, self.non_anchor)
    }
}

/// The complete selection: one pair per (owner, stage <= lifetime), ordered
/// by (time, owner).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairLedger {
    pairs: Vec<PrivatePair>,
}

impl PairLedger {
    pub fn pairs(&self) -> &[PrivatePair] {
        &self.pairs
    }

    /// All pairs selected at stage j.
    pub fn pairs_at(&self, j: usize) -> impl Iterator<Item = &PrivatePair> {
        self.pairs.iter().filter(move |p| p.time == j)
    }

    /// All pairs owned by set i, ascending by stage.
    pub fn pairs_of(&self, i: usize) -> impl Iterator<Item = &PrivatePair> {
        self.pairs.iter().filter(move |p| p.owner == i)
    }

    pub fn get(&self, owner: usize, time: usize) -> Option<&PrivatePair> {
        self.pairs
            .iter()
            .find(|p| p.owner == owner && p.time == time)
    }

    /// Anchors of owner i at stages 0..=j.
    pub fn anchors_up_to(&self, i: usize, j: usize) -> VSet {
        VSet::from_ids(
            self.pairs_of(i)
                .filter(|p| p.time <= j)
                .map(|p| p.anchor),
        )
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[serde(tag = "code", rename_all = "snake_case")]
pub enum PairError {
    /// Every candidate pair is double-covered: the input cannot be a genuine
    /// system (property (ii) would guarantee a private pair). A detection
    /// path, not a crash.
    #[error("no single-covered pair for set {owner} at stage {stage}")]
    NoPrivatePair { owner: usize, stage: usize },
    /// A rewrite produced a pair that is no longer single-covered or left
    /// its owner. Reported with the full witness, never suppressed.
    #[error("replacement {rule:?} broke privacy for set {owner} at stage {stage}: {from} -> {to}")]
    ReplacementBrokePrivacy {
        owner: usize,
        stage: usize,
        rule: ReplacementRule,
        from: u32,
        to: u32,
    },
    /// The selected pair has no garbage element. Impossible when every stage
    /// has at least four members; can only arise in mechanics runs with a
    /// smaller stage minimum.
    #[error("pair {lo},{hi} for set {owner} at stage {stage} contains no garbage vertex")]
    NoGarbageInPair {
        owner: usize,
        stage: usize,
        lo: u32,
        hi: u32,
    },
}

/// The lexicographically smallest pair within `pool` covered by exactly one
/// of `stage_sets`, if any.
pub fn smallest_single_covered_pair(pool: VSet, stage_sets: &[VSet]) -> Option<Pair> {
    let elems: Vec<u32> = pool.iter().collect();
    for a in 0..elems.len() {
        for b in a + 1..elems.len() {
            let p = Pair::new(elems[a], elems[b]);
            if cover_count(p, stage_sets) == 1 {
                return Some(p);
            }
        }
    }
    None
}

/// The lexicographically smallest pair in `N_i - y` single-covered with
/// respect to the full sets of stage j's members.
pub fn find_private_pair(
    d: &Decomposition,
    i: usize,
    j: usize,
    y: VSet,
) -> Result<Pair, PairError> {
    debug_assert!(d.stages()[j].members.contains(&i));
    debug_assert!(y.is_subset_of(d.family().sets()[i]));
    let stage_sets = d.stage_sets(j);
    smallest_single_covered_pair(d.family().sets()[i].minus(y), &stage_sets)
        .ok_or(PairError::NoPrivatePair { owner: i, stage: j })
}

/// Runs the full selection over all stages and members.
pub fn select_private_pairs(d: &Decomposition) -> Result<PairLedger, PairError> {
    let garbage = d.garbage();
    let mut pairs: Vec<PrivatePair> = Vec::new();
    for stage in d.stages() {
        let j = stage.j;
        let stage_sets = d.stage_sets(j);
        for &i in &stage.members {
            let owner_set = d.family().sets()[i];
            let y = VSet::from_ids(
                pairs
                    .iter()
                    .filter(|p| p.owner == i && p.time < j)
                    .map(|p| p.anchor),
            );
            let p = find_private_pair(d, i, j, y)?;
            let in_garbage = p.as_set().inter(garbage);
            let anchor = in_garbage.smallest().ok_or(PairError::NoGarbageInPair {
                owner: i,
                stage: j,
                lo: p.lo,
                hi: p.hi,
            })?;
            let mut non_anchor = p.other(anchor);
            let mut rules = Vec::new();

            let apply = |rule: ReplacementRule,
                             to: u32,
                             non_anchor: &mut u32,
                             rules: &mut Vec<RuleApplication>|
             -> Result<(), PairError> {
                let from = *non_anchor;
                let candidate = Pair::new(anchor, to);
                if !candidate.as_set().is_subset_of(owner_set)
                    || cover_count(candidate, &stage_sets) != 1
                {
                    return Err(PairError::ReplacementBrokePrivacy {
                        owner: i,
                        stage: j,
                        rule,
                        from,
                        to,
                    });
                }
                rules.push(RuleApplication { rule, from, to });
                *non_anchor = to;
                Ok(())
            };

            // Rule 1: non-anchor is a kernel vertex of an earlier stage.
            if let Some((a, b)) = d.kernel_identity(non_anchor) {
                if b < j {
                    let t_a = d.lifetime(a);
                    let target = if j <= t_a {
                        d.kernel_vertex(a, j).expect("owner alive at stage j")
                    } else {
                        d.kernel_vertex(a, t_a).expect("owner alive at its lifetime")
                    };
                    if target != non_anchor {
                        apply(
                            ReplacementRule::PromoteEarlierKernel,
                            target,
                            &mut non_anchor,
                            &mut rules,
                        )?;
                    }
                }
            }
            // Rule 2: non-anchor is a kernel vertex of this very stage and
            // both owners live past it.
            if let Some((a, b)) = d.kernel_identity(non_anchor) {
                if b == j && j < d.lifetime(a) && j < d.lifetime(i) {
                    let target = d
                        .kernel_vertex(a, j + 1)
                        .expect("owner alive at stage j+1");
                    apply(
                        ReplacementRule::ShiftSameStageKernel,
                        target,
                        &mut non_anchor,
                        &mut rules,
                    )?;
                }
            }

            pairs.push(PrivatePair {
                owner: i,
                time: j,
                anchor,
                non_anchor,
                rules,
            });
        }
    }
    Ok(PairLedger { pairs })
}

/// Structural checks over a completed ledger:
/// (a) pair sets of distinct stages are disjoint;
/// (b) pairs selected up to stage j stay at most single-covered at stage j;
/// (c) stage j holds exactly ell_j distinct pairs, one per member;
/// (d) the total pair count equals the stage size sum and meets n - 3m;
/// (e) a non-anchor from an earlier kernel is that owner's final kernel vertex;
/// (f) a same-stage kernel non-anchor only occurs at a lifetime end;
/// plus: every pair holds a garbage vertex, stays inside its owner, and the
/// anchors of one owner never repeat. Failures are findings.
pub fn verify_pair_lemmas(ledger: &PairLedger, d: &Decomposition) -> Vec<ClauseResult> {
    let mut clauses = Vec::new();
    let t = d.t();

    // (a) cross-stage disjointness of the selected pair sets
    let mut disjoint = ClauseResult::pass("stage_pair_sets_disjoint");
    'a: for j1 in 0..=t {
        for j2 in j1 + 1..=t {
            for p1 in ledger.pairs_at(j1) {
                for p2 in ledger.pairs_at(j2) {
                    if p1.pair() == p2.pair() {
                        disjoint = ClauseResult::fail(
                            "stage_pair_sets_disjoint",
                            format!("pair {} appears at stages {j1} and {j2}", p1.pair()),
                        );
                        break 'a;
                    }
                }
            }
        }
    }
    clauses.push(disjoint);

    // (b) earlier pairs remain at most single-covered later
    let mut single = ClauseResult::pass("pairs_stay_at_most_single_covered");
    'b: for j in 0..=t {
        let stage_sets = d.stage_sets(j);
        for p in ledger.pairs().iter().filter(|p| p.time <= j) {
            let c = cover_count(p.pair(), &stage_sets);
            if c > 1 {
                single = ClauseResult::fail(
                    "pairs_stay_at_most_single_covered",
                    format!(
                        "pair {} from stage {} is covered {c} times at stage {j}",
                        p.pair(),
                        p.time
                    ),
                );
                break 'b;
            }
        }
    }
    clauses.push(single);

    // (c) one pair per member per stage, all distinct within the stage
    let mut per_member = ClauseResult::pass("one_pair_per_live_member");
    'c: for stage in d.stages() {
        let stage_pairs: Vec<&PrivatePair> = ledger.pairs_at(stage.j).collect();
        let mut seen: Vec<Pair> = stage_pairs.iter().map(|p| p.pair()).collect();
        seen.sort();
        seen.dedup();
        if stage_pairs.len() != stage.ell() || seen.len() != stage.ell() {
            per_member = ClauseResult::fail(
                "one_pair_per_live_member",
                format!(
                    "stage {} has {} pairs ({} distinct), expected {}",
                    stage.j,
                    stage_pairs.len(),
                    seen.len(),
                    stage.ell()
                ),
            );
            break;
        }
        for &i in &stage.members {
            let owned = stage_pairs.iter().filter(|p| p.owner == i).count();
            if owned != 1 {
                per_member = ClauseResult::fail(
                    "one_pair_per_live_member",
                    format!("member {i} owns {owned} pairs at stage {}", stage.j),
                );
                break 'c;
            }
        }
    }
    clauses.push(per_member);

    // (d) |P| = sum of stage sizes >= n - 3m
    let stage_sum: usize = d.stages().iter().map(|s| s.ell()).sum();
    let mut all_pairs: Vec<Pair> = ledger.pairs().iter().map(|p| p.pair()).collect();
    all_pairs.sort();
    all_pairs.dedup();
    if all_pairs.len() != stage_sum {
        clauses.push(ClauseResult::fail(
            "pair_count_equals_stage_size_sum",
            format!("{} distinct pairs, stage sizes sum to {stage_sum}", all_pairs.len()),
        ));
    } else {
        clauses.push(ClauseResult::pass("pair_count_equals_stage_size_sum"));
    }
    match d.params() {
        Some(p) => {
            let floor = d.family().n() as i64 - 3 * p.m as i64;
            clauses.push(if all_pairs.len() as i64 >= floor {
                ClauseResult::pass("pair_count_lower_bound")
            } else {
                ClauseResult::fail(
                    "pair_count_lower_bound",
                    format!("|P| = {} < n - 3m = {floor}", all_pairs.len()),
                )
            });
        }
        None => clauses.push(ClauseResult::skipped(
            "pair_count_lower_bound",
            "mechanics mode: no validated parameters",
        )),
    }

    // (e) non-anchor from an earlier kernel must be a final kernel vertex
    let mut early = ClauseResult::pass("early_kernel_non_anchor_is_final");
    for p in ledger.pairs() {
        if let Some((a, b)) = d.kernel_identity(p.non_anchor) {
            if b < p.time && b != d.lifetime(a) {
                early = ClauseResult::fail(
                    "early_kernel_non_anchor_is_final",
                    format!(
                        "pair of set {} at stage {} keeps non-anchor {} from stage {b}, \
                         owner {a} lives to {}",
                        p.owner,
                        p.time,
                        p.non_anchor,
                        d.lifetime(a)
                    ),
                );
                break;
            }
        }
    }
    clauses.push(early);

    // (f) same-stage kernel non-anchor only at a lifetime end
    let mut same = ClauseResult::pass("same_stage_non_anchor_at_lifetime_end");
    for p in ledger.pairs() {
        if let Some((a, b)) = d.kernel_identity(p.non_anchor) {
            if b == p.time && p.time != d.lifetime(a) && p.time != d.lifetime(p.owner) {
                same = ClauseResult::fail(
                    "same_stage_non_anchor_at_lifetime_end",
                    format!(
                        "pair of set {} at stage {} has same-stage kernel non-anchor {}",
                        p.owner, p.time, p.non_anchor
                    ),
                );
                break;
            }
        }
    }
    clauses.push(same);

    // every private pair holds a garbage vertex
    let garbage = d.garbage();
    let mut has_garbage = ClauseResult::pass("pair_contains_garbage_vertex");
    for p in ledger.pairs() {
        if p.pair().as_set().inter(garbage).is_empty() {
            has_garbage = ClauseResult::fail(
                "pair_contains_garbage_vertex",
                format!("pair {} of set {} at stage {}", p.pair(), p.owner, p.time),
            );
            break;
        }
    }
    clauses.push(has_garbage);

    // pairs stay inside their owner; anchors of one owner never repeat
    let mut contained = ClauseResult::pass("pair_within_owner_set");
    for p in ledger.pairs() {
        if !p.pair().as_set().is_subset_of(d.family().sets()[p.owner]) {
            contained = ClauseResult::fail(
                "pair_within_owner_set",
                format!("pair {} leaves set {}", p.pair(), p.owner),
            );
            break;
        }
    }
    clauses.push(contained);

    let mut distinct_anchors = ClauseResult::pass("anchors_distinct_per_owner");
    for i in 0..d.family().len() {
        let anchors: Vec<u32> = ledger.pairs_of(i).map(|p| p.anchor).collect();
        let set = VSet::from_ids(anchors.iter().copied());
        if set.len() as usize != anchors.len() {
            distinct_anchors = ClauseResult::fail(
                "anchors_distinct_per_owner",
                format!("owner {i} repeats an anchor"),
            );
            break;
        }
    }
    clauses.push(distinct_anchors);

    clauses
}

/// Every pair of kernel vertices that lies together in some member set is
/// covered at least twice at every stage. The hinge that forces private
/// pairs to reach into the garbage set.
pub fn verify_double_cover(d: &Decomposition) -> ClauseResult {
    let kernel: Vec<u32> = d.kernel_vertices().iter().collect();
    for j in 0..=d.t() {
        let stage_sets = d.stage_sets(j);
        for a in 0..kernel.len() {
            for b in a + 1..kernel.len() {
                let p = Pair::new(kernel[a], kernel[b]);
                let ps = p.as_set();
                if !d.family().sets().iter().any(|s| ps.is_subset_of(*s)) {
                    // never jointly contained anywhere: outside the claim
                    continue;
                }
                let c = cover_count(p, &stage_sets);
                if c < 2 {
                    return ClauseResult::fail(
                        "kernel_pairs_double_covered",
                        format!("kernel pair {p} covered {c} times at stage {j}"),
                    );
                }
            }
        }
    }
    ClauseResult::pass("kernel_pairs_double_covered")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::{run_decomposition, run_decomposition_mechanics, Policy};
    use crate::report::all_ok;
    use crate::setsystem::fixtures::*;
    use crate::setsystem::{validate_nm_system, SetFamily};

    fn vs(ids: &[u32]) -> VSet {
        VSet::from_ids(ids.iter().copied())
    }

    #[test]
    fn cover_count_examples() {
        let sets = vec![vs(&[1, 2, 3]), vs(&[1, 2, 4]), vs(&[3, 4, 5])];
        assert_eq!(cover_count(Pair::new(1, 2), &sets), 2);
        assert_eq!(cover_count(Pair::new(3, 5), &sets), 1);
        assert_eq!(cover_count(Pair::new(1, 5), &sets), 0);
    }

    #[test]
    fn find_pair_prefers_lexicographic() {
        // {1,2} lies only in the first set and precedes every other
        // single-covered candidate.
        let sets = vec![vs(&[1, 2, 3]), vs(&[1, 4, 5])];
        let p = smallest_single_covered_pair(vs(&[1, 2, 3]), &sets).unwrap();
        assert_eq!(p, Pair::new(1, 2));
    }

    #[test]
    fn k4_has_no_private_pair() {
        let d = run_decomposition_mechanics(&fixture_k4(), &Policy::default()).unwrap();
        for i in 0..4 {
            let err = find_private_pair(&d, i, 0, VSet::EMPTY).unwrap_err();
            assert_eq!(err, PairError::NoPrivatePair { owner: i, stage: 0 });
        }
        let err = select_private_pairs(&d).unwrap_err();
        assert_eq!(err, PairError::NoPrivatePair { owner: 0, stage: 0 });
    }

    #[test]
    fn fixture_n7_third_set_pair() {
        let sys = validate_nm_system(&fixture_n7()).unwrap();
        let d = run_decomposition(&sys, &Policy::default()).unwrap();
        // 1-based N_3 = {1,2,4,6} is index 2
        let p = find_private_pair(&d, 2, 0, VSet::EMPTY).unwrap();
        assert_eq!(p, Pair::new(1, 6));
    }

    #[test]
    fn fixture_n7_ledger() {
        let sys = validate_nm_system(&fixture_n7()).unwrap();
        let d = run_decomposition(&sys, &Policy::default()).unwrap();
        let ledger = select_private_pairs(&d).unwrap();
        let expect = [
            (0, Pair::new(2, 5), 5, 2),
            (1, Pair::new(1, 5), 5, 1),
            (2, Pair::new(1, 6), 6, 1),
            (3, Pair::new(1, 7), 7, 1),
        ];
        assert_eq!(ledger.len(), 4);
        for (owner, pair, anchor, non_anchor) in expect {
            let p = ledger.get(owner, 0).unwrap();
            assert_eq!(p.pair(), pair);
            assert_eq!(p.anchor, anchor);
            assert_eq!(p.non_anchor, non_anchor);
            assert!(p.rules.is_empty(), "no rewrite can fire in a one-stage run");
        }
        assert!(all_ok(&verify_pair_lemmas(&ledger, &d)));
        assert!(verify_double_cover(&d).passed());
    }

    #[test]
    fn two_stage_ledger_fires_both_rules() {
        let fam = fixture_two_stage();
        let d = run_decomposition_mechanics(&fam, &Policy::default()).unwrap();
        assert_eq!(d.t(), 1);
        assert_eq!(d.garbage(), VSet::from_ids(9..=16));
        let ledger = select_private_pairs(&d).unwrap();
        assert_eq!(ledger.len(), 8);

        // stage 0: the smallest single-covered pair is {i+2, 9+i}-style with
        // the kernel non-anchor shifted to the next stage by rule 2
        let expect0 = [
            (0, 9, 6),
            (1, 10, 5),
            (2, 11, 5),
            (3, 12, 5),
        ];
        for (owner, anchor, non_anchor) in expect0 {
            let p = ledger.get(owner, 0).unwrap();
            assert_eq!((p.anchor, p.non_anchor), (anchor, non_anchor));
            assert_eq!(p.rules.len(), 1);
            assert_eq!(p.rules[0].rule, ReplacementRule::ShiftSameStageKernel);
        }
        // stage 1: the private vertex pairs up with an old kernel vertex,
        // promoted by rule 1 to the stage-1 kernel
        let expect1 = [
            (0, 13, 6),
            (1, 14, 5),
            (2, 15, 5),
            (3, 16, 5),
        ];
        for (owner, anchor, non_anchor) in expect1 {
            let p = ledger.get(owner, 1).unwrap();
            assert_eq!((p.anchor, p.non_anchor), (anchor, non_anchor));
            assert_eq!(p.rules.len(), 1);
            assert_eq!(p.rules[0].rule, ReplacementRule::PromoteEarlierKernel);
        }
        assert!(all_ok(&verify_pair_lemmas(&ledger, &d)));
        assert!(verify_double_cover(&d).passed());
    }

    #[test]
    fn anchors_accumulate_per_owner() {
        let fam = fixture_two_stage();
        let d = run_decomposition_mechanics(&fam, &Policy::default()).unwrap();
        let ledger = select_private_pairs(&d).unwrap();
        assert_eq!(ledger.anchors_up_to(0, 0), vs(&[9]));
        assert_eq!(ledger.anchors_up_to(0, 1), vs(&[9, 13]));
        assert_eq!(ledger.pairs_at(1).count(), 4);
        assert_eq!(ledger.pairs_of(2).count(), 2);
    }

    #[test]
    fn forged_duplicate_pair_fails_clause_c() {
        let sys = validate_nm_system(&fixture_n7()).unwrap();
        let d = run_decomposition(&sys, &Policy::default()).unwrap();
        let mut ledger = select_private_pairs(&d).unwrap();
        // forge: owner 1 copies owner 0's pair
        let forged = ledger.pairs[0].clone();
        ledger.pairs[1] = PrivatePair {
            owner: 1,
            ..forged
        };
        let clauses = verify_pair_lemmas(&ledger, &d);
        let c = clauses
            .iter()
            .find(|c| c.name == "one_pair_per_live_member")
            .unwrap();
        assert!(!c.ok());
        assert!(c.witness.is_some());
    }

    #[test]
    fn mechanics_selection_reports_missing_pairs_cleanly() {
        // Like the rich family but without the stage-1 private vertices for
        // sets 1..3, so stage 1 cannot find a pair for set 1.
        let fam = SetFamily::from_sets(
            13,
            &[
                &[2, 3, 4, 6, 7, 8, 9, 13],
                &[1, 3, 4, 5, 7, 8, 10],
                &[1, 2, 4, 5, 6, 8, 11],
                &[1, 2, 3, 5, 6, 7, 12],
            ],
        );
        let d = run_decomposition_mechanics(&fam, &Policy::default()).unwrap();
        assert_eq!(d.t(), 1);
        let err = select_private_pairs(&d).unwrap_err();
        assert_eq!(err, PairError::NoPrivatePair { owner: 1, stage: 1 });
    }
}
