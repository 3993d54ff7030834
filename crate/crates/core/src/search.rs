//! Desk-scale exhaustive and randomized generation of valid systems.
//!
//! Families are enumerated as strictly increasing lists of set bit masks,
//! which kills within-family permutations for free. A partial family is
//! extended only while its running intersection is nonempty and strictly
//! shrinking and every drop-one intersection strictly contains the running
//! intersection; the final set closes the intersection to empty. Candidates
//! then go through the full validator — the search never trusts its own
//! pruning. Work splits over the first-set choice; results merge in task
//! order, so output is independent of scheduling.

use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::setsystem::{binomial, validate_nm_system, SetFamily, VSet, MAX_UNIVERSE};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchSpec {
    pub n: u32,
    /// Common set size; all k in 3..n when absent.
    pub k: Option<u32>,
    pub ell_min: usize,
    pub ell_max: usize,
    /// Wall-clock budget; exhaustive when absent.
    #[serde(skip)]
    pub budget: Option<Duration>,
    /// Emit one representative per vertex-permutation class.
    pub canonicalize: bool,
    /// Seed for the randomized helpers; the exhaustive scan ignores it.
    pub seed: u64,
}

impl SearchSpec {
    pub fn exhaustive(n: u32, k: Option<u32>, ell_min: usize, ell_max: usize) -> SearchSpec {
        SearchSpec {
            n,
            k,
            ell_min,
            ell_max,
            budget: None,
            canonicalize: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResumePoint {
    pub k: u32,
    pub task: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchCount {
    pub k: u32,
    pub ell: usize,
    pub count: u64,
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    /// Valid systems in deterministic order (canonical forms when
    /// canonicalize is on).
    pub systems: Vec<SetFamily>,
    pub counts: Vec<SearchCount>,
    /// First system found, as the extremal witness for this n.
    pub max_n_witness: Option<SetFamily>,
    /// True iff the whole space was scanned within budget.
    pub exhausted: bool,
    /// Where to resume after a budget truncation.
    pub truncated_at: Option<ResumePoint>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SearchError {
    #[error("universe size {0} exceeds the supported maximum of {MAX_UNIVERSE}")]
    UniverseTooLarge(u32),
    #[error("m must be at least 1")]
    NonPositiveM,
    #[error("infeasible parameters: {0}")]
    InfeasibleParameters(String),
    #[error("C({n},{k}) candidate sets exceed the desk-scale pool limit")]
    SpaceTooLarge { n: u32, k: u32 },
}

/// Pool cap: candidate k-subsets are materialized per k.
const MAX_POOL: u64 = 1 << 22;
/// Budget polls happen every this many search nodes.
const BUDGET_STRIDE: u64 = 1 << 12;

struct TaskOutcome {
    families: Vec<Vec<u64>>,
    truncated: bool,
}

/// Enumerates all k-subset masks of [n] in ascending numeric order via
/// Gosper's hack (next mask of equal popcount).
fn subset_pool(n: u32, k: u32) -> Vec<u64> {
    let mut out = Vec::new();
    if k == 0 || k > n {
        return out;
    }
    let full = VSet::full(n).mask();
    let mut mask: u64 = if k == 64 { u64::MAX } else { (1u64 << k) - 1 };
    while mask & !full == 0 {
        out.push(mask);
        let c = mask & mask.wrapping_neg();
        let r = mask.wrapping_add(c);
        if r == 0 {
            break; // the block sat at the top of the word
        }
        mask = r | (((mask ^ r) >> 2) / c);
    }
    out
}

struct DfsCtx<'a> {
    pool: &'a [u64],
    n: u32,
    k: u32,
    ell_min: usize,
    ell_max: usize,
    /// Keep only families that are their own canonical form.
    canonical_only: bool,
    deadline: Option<Instant>,
    nodes: u64,
    truncated: bool,
    found: Vec<Vec<u64>>,
    stop_flag: Option<&'a AtomicBool>,
}

impl DfsCtx<'_> {
    fn over_budget(&mut self) -> bool {
        if self.truncated {
            return true;
        }
        self.nodes += 1;
        if self.nodes % BUDGET_STRIDE == 0 {
            if let Some(deadline) = self.deadline {
                if Instant::now() >= deadline {
                    self.truncated = true;
                }
            }
        }
        self.truncated
    }

    fn stopped(&self) -> bool {
        self.stop_flag
            .map(|f| f.load(Ordering::Relaxed))
            .unwrap_or(false)
    }

    /// Extends an open prefix. `chosen` are pool indices; `total` is the
    /// running intersection (nonempty), `drops` the drop-one intersections,
    /// `union` the coverage so far. `cands` holds the pool indices past the
    /// last chosen set that still met every monotone condition at the parent;
    /// conditions only narrow, so children rescan just this list.
    fn extend(
        &mut self,
        chosen: &mut Vec<usize>,
        total: u64,
        drops: &[u64],
        union: u64,
        cands: &[usize],
    ) {
        let full = VSet::full(self.n).mask();
        for (pos, &next) in cands.iter().enumerate() {
            if self.over_budget() || self.stopped() {
                return;
            }
            let s = self.pool[next];
            let new_total = total & s;
            if new_total == total {
                continue; // no shrink: the newcomer's drop-one dies with the total
            }
            if drops.iter().any(|&d| d & s == 0) {
                continue;
            }
            let new_union = union | s;
            let new_len = chosen.len() + 1;
            if new_total == 0 {
                // the closing set: the family is complete
                if new_len >= self.ell_min && new_len <= self.ell_max && new_union == full {
                    chosen.push(next);
                    let family: Vec<u64> = chosen.iter().map(|&i| self.pool[i]).collect();
                    self.emit(family);
                    chosen.pop();
                }
                continue;
            }
            // room for at least one more set, the eventual closer
            if new_len + 1 > self.ell_max {
                continue;
            }
            if drops.iter().any(|&d| d & s == new_total) {
                continue; // that drop-one would die exactly when the total does
            }
            // coverage: each future set adds at most k fresh vertices
            let deficit = (full & !new_union).count_ones() as u64;
            let slots = (self.ell_max - new_len) as u64 * self.k as u64;
            if deficit > slots {
                continue;
            }
            let mut new_drops: Vec<u64> = Vec::with_capacity(drops.len() + 1);
            new_drops.extend(drops.iter().map(|&d| d & s));
            new_drops.push(total);
            // keep only successors that can still serve as extender or closer
            let child_cands: Vec<usize> = cands[pos + 1..]
                .iter()
                .copied()
                .filter(|&c| {
                    let cs = self.pool[c];
                    cs & new_total != new_total && new_drops.iter().all(|&d| d & cs != 0)
                })
                .collect();
            chosen.push(next);
            self.extend(chosen, new_total, &new_drops, new_union, &child_cands);
            chosen.pop();
            if self.truncated {
                return;
            }
        }
    }

    fn emit(&mut self, family: Vec<u64>) {
        // final full check; the pruning is never trusted
        let sets: Vec<VSet> = family.iter().map(|&m| VSet::from_mask(m)).collect();
        let fam = SetFamily::new(self.n, sets).expect("masks lie inside the universe");
        if validate_nm_system(&fam).is_err() {
            return;
        }
        if self.canonical_only && !is_canonical_form(self.n, &family) {
            return;
        }
        self.found.push(family);
        if let Some(flag) = self.stop_flag {
            flag.store(true, Ordering::Relaxed);
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn run_task(
    pool: &[u64],
    n: u32,
    k: u32,
    ell_min: usize,
    ell_max: usize,
    canonical_only: bool,
    task: usize,
    deadline: Option<Instant>,
    stop_flag: Option<&AtomicBool>,
) -> TaskOutcome {
    let mut ctx = DfsCtx {
        pool,
        n,
        k,
        ell_min,
        ell_max,
        canonical_only,
        deadline,
        nodes: 0,
        truncated: false,
        found: Vec::new(),
        stop_flag,
    };
    let first = pool[task];
    let universe = VSet::full(n).mask();
    if !ctx.stopped() {
        // a single set can close the family only if ell_min <= 1; the
        // validator requires two sets anyway, so singletons never emit
        let mut chosen = vec![task];
        let drops = vec![universe];
        let cands: Vec<usize> = (task + 1..pool.len())
            .filter(|&c| pool[c] & first != first)
            .collect();
        ctx.extend(&mut chosen, first, &drops, first, &cands);
    }
    TaskOutcome {
        families: ctx.found,
        truncated: ctx.truncated,
    }
}

/// Lexicographically minimal sorted-mask image of the family over all
/// vertex permutations. Labels are assigned from the highest bit down with
/// prefix pruning against the incumbent.
pub fn canonical_form(n: u32, sets: &[u64]) -> Vec<u64> {
    let mut best: Vec<u64> = sets.to_vec();
    best.sort_unstable();

    struct State<'a> {
        n: u32,
        sets: &'a [u64],
        best: Vec<u64>,
        used: Vec<bool>,
    }

    fn descend(st: &mut State, images: &[u64], depth: u32) {
        if depth == st.n {
            let mut leaf = images.to_vec();
            leaf.sort_unstable();
            if leaf < st.best {
                st.best = leaf;
            }
            return;
        }
        let bit = st.n - 1 - depth;
        for old in 0..st.n {
            if st.used[old as usize] {
                continue;
            }
            let mut next: Vec<u64> = images.to_vec();
            for (idx, s) in st.sets.iter().enumerate() {
                if s & (1u64 << old) != 0 {
                    next[idx] |= 1u64 << bit;
                }
            }
            // sorted partial images against the incumbent's high bits: a
            // greater prefix can never recover, so prune it
            let mut cur = next.clone();
            cur.sort_unstable();
            let mask = !((1u64 << bit) - 1);
            let mut verdict = std::cmp::Ordering::Equal;
            for (c, b) in cur.iter().zip(st.best.iter()) {
                verdict = c.cmp(&(b & mask));
                if verdict != std::cmp::Ordering::Equal {
                    break;
                }
            }
            if verdict == std::cmp::Ordering::Greater {
                continue;
            }
            st.used[old as usize] = true;
            descend(st, &next, depth + 1);
            st.used[old as usize] = false;
        }
    }

    let mut st = State {
        n,
        sets,
        best,
        used: vec![false; n as usize],
    };
    let images = vec![0u64; sets.len()];
    descend(&mut st, &images, 0);
    st.best
}

/// Whether the sorted mask list is its own canonical form. Runs the same
/// label assignment as `canonical_form` but with the family itself as the
/// incumbent, returning early once any strictly smaller image shows up; for
/// non-canonical families that happens almost immediately.
pub fn is_canonical_form(n: u32, sorted_sets: &[u64]) -> bool {
    debug_assert!(sorted_sets.windows(2).all(|w| w[0] < w[1]));

    // returns true iff some image sorts strictly below the incumbent
    fn beaten(n: u32, sets: &[u64], incumbent: &[u64], used: &mut [bool], images: &[u64], depth: u32) -> bool {
        if depth == n {
            return false; // equal throughout: an automorphism
        }
        let bit = n - 1 - depth;
        let mask = !((1u64 << bit) - 1);
        for old in 0..n {
            if used[old as usize] {
                continue;
            }
            let mut next: Vec<u64> = images.to_vec();
            for (idx, s) in sets.iter().enumerate() {
                if s & (1u64 << old) != 0 {
                    next[idx] |= 1u64 << bit;
                }
            }
            let mut cur = next.clone();
            cur.sort_unstable();
            let mut verdict = std::cmp::Ordering::Equal;
            for (c, b) in cur.iter().zip(incumbent.iter()) {
                verdict = c.cmp(&(b & mask));
                if verdict != std::cmp::Ordering::Equal {
                    break;
                }
            }
            match verdict {
                std::cmp::Ordering::Less => return true,
                std::cmp::Ordering::Greater => continue,
                std::cmp::Ordering::Equal => {
                    used[old as usize] = true;
                    let hit = beaten(n, sets, incumbent, used, &next, depth + 1);
                    used[old as usize] = false;
                    if hit {
                        return true;
                    }
                }
            }
        }
        false
    }

    let mut used = vec![false; n as usize];
    let images = vec![0u64; sorted_sets.len()];
    !beaten(n, sorted_sets, sorted_sets, &mut used, &images, 0)
}

/// Applies a vertex permutation (old 0-based position -> new 0-based
/// position) to a mask family and returns the sorted image.
pub fn permute_family(sets: &[u64], perm: &[u32]) -> Vec<u64> {
    let mut out: Vec<u64> = sets
        .iter()
        .map(|s| {
            let mut img = 0u64;
            for (old, &new) in perm.iter().enumerate() {
                if s & (1u64 << old) != 0 {
                    img |= 1u64 << new;
                }
            }
            img
        })
        .collect();
    out.sort_unstable();
    out
}

pub fn enumerate_systems(spec: &SearchSpec) -> Result<SearchResult, SearchError> {
    enumerate_with_resume(spec, None, &[])
}

/// Enumeration entry with resume support: skips everything before `resume`
/// and seeds the isomorph filter with previously emitted families.
pub fn enumerate_with_resume(
    spec: &SearchSpec,
    resume: Option<ResumePoint>,
    already_emitted: &[SetFamily],
) -> Result<SearchResult, SearchError> {
    if spec.n > MAX_UNIVERSE {
        return Err(SearchError::UniverseTooLarge(spec.n));
    }
    if spec.n < 4 {
        // nothing below four vertices can satisfy both properties with k >= 3;
        // scan anyway so tiny spaces report exhausted cleanly
    }
    let ell_min = spec.ell_min.max(2);
    let deadline = spec.budget.map(|b| Instant::now() + b);
    let ks: Vec<u32> = match spec.k {
        Some(k) => {
            if k < 3 || k >= spec.n {
                return Err(SearchError::InfeasibleParameters(format!(
                    "k={k} outside 3..{}",
                    spec.n
                )));
            }
            vec![k]
        }
        None => (3..spec.n).collect(),
    };

    // emitted families are their own keys: canonical mode only ever emits
    // self-canonical mask lists
    let mut seen: std::collections::HashSet<Vec<u64>> = already_emitted
        .iter()
        .map(|f| f.sets().iter().map(|s| s.mask()).collect())
        .collect();

    let mut systems: Vec<SetFamily> = Vec::new();
    let mut counts: std::collections::BTreeMap<(u32, usize), u64> = std::collections::BTreeMap::new();
    let mut truncated_at: Option<ResumePoint> = None;

    'ks: for &k in &ks {
        // property (i) forces ell <= k + 1, so cap the range per k
        let ell_max = spec.ell_max.min(k as usize + 1);
        if ell_min > ell_max {
            continue;
        }
        let pool_size = binomial(spec.n as u64, k as u64).unwrap_or(u64::MAX);
        if pool_size > MAX_POOL {
            return Err(SearchError::SpaceTooLarge { n: spec.n, k });
        }
        let pool = subset_pool(spec.n, k);
        debug_assert_eq!(pool.len() as u64, pool_size);
        let start_task = match resume {
            Some(r) if r.k == k => r.task,
            Some(r) if r.k > k => continue 'ks,
            _ => 0,
        };
        if start_task >= pool.len() {
            continue;
        }
        let tasks: Vec<usize> = (start_task..pool.len()).collect();
        let outcomes: Vec<TaskOutcome> = tasks
            .par_iter()
            .map(|&task| {
                run_task(
                    &pool,
                    spec.n,
                    k,
                    ell_min,
                    ell_max,
                    spec.canonicalize,
                    task,
                    deadline,
                    None,
                )
            })
            .collect();
        for (offset, outcome) in outcomes.into_iter().enumerate() {
            if outcome.truncated {
                truncated_at = Some(ResumePoint {
                    k,
                    task: start_task + offset,
                });
                break 'ks;
            }
            for family in outcome.families {
                // canonical mode emits self-canonical members only, so the
                // family is already its class key
                if !seen.insert(family.clone()) {
                    continue;
                }
                let sets: Vec<VSet> = family.iter().map(|&m| VSet::from_mask(m)).collect();
                let fam = SetFamily::new(spec.n, sets).expect("masks lie inside the universe");
                *counts.entry((k, fam.len())).or_insert(0) += 1;
                systems.push(fam);
            }
        }
    }

    let max_n_witness = systems.first().cloned();
    Ok(SearchResult {
        systems,
        counts: counts
            .into_iter()
            .map(|((k, ell), count)| SearchCount { k, ell, count })
            .collect(),
        max_n_witness,
        exhausted: truncated_at.is_none(),
        truncated_at,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtremalScan {
    pub n: u32,
    pub found: bool,
    pub exhausted: bool,
}

#[derive(Debug, Clone)]
pub struct ExtremalReport {
    pub m: u32,
    pub best_n: Option<u32>,
    pub witness: Option<SetFamily>,
    pub conjectured: u64,
    pub certified: u64,
    /// Scan records for the universes visited, largest first.
    pub scans: Vec<ExtremalScan>,
}

/// Scans n from n_max downward with k = n - m until a witness turns up.
/// Nonexistence at a given n is only meaningful when its scan is exhausted.
pub fn extremal_n(
    m: u32,
    n_max: u32,
    budget: Option<Duration>,
) -> Result<ExtremalReport, SearchError> {
    if m == 0 {
        return Err(SearchError::NonPositiveM);
    }
    if n_max > MAX_UNIVERSE {
        return Err(SearchError::UniverseTooLarge(n_max));
    }
    let bounds = crate::setsystem::bounds_for_m(m as u64)
        .map_err(|_| SearchError::NonPositiveM)?;
    let deadline = budget.map(|b| Instant::now() + b);
    let mut scans = Vec::new();
    let mut best: Option<(u32, SetFamily)> = None;
    let n_min = (m + 3).max(4);
    let mut n = n_max;
    while n >= n_min {
        let k = n - m;
        let remaining = deadline.map(|d| d.saturating_duration_since(Instant::now()));
        let outcome = first_witness(n, k, remaining)?;
        scans.push(ExtremalScan {
            n,
            found: outcome.witness.is_some(),
            exhausted: outcome.exhausted,
        });
        if let Some(w) = outcome.witness {
            best = Some((n, w));
            break;
        }
        if n == n_min {
            break;
        }
        n -= 1;
    }
    Ok(ExtremalReport {
        m,
        best_n: best.as_ref().map(|(n, _)| *n),
        witness: best.map(|(_, w)| w),
        conjectured: bounds.conjectured,
        certified: bounds.certified,
        scans,
    })
}

struct WitnessOutcome {
    witness: Option<SetFamily>,
    exhausted: bool,
}

/// Stops at the first valid family; deterministic because results merge in
/// task order even though later tasks may flag the stop first.
fn first_witness(n: u32, k: u32, budget: Option<Duration>) -> Result<WitnessOutcome, SearchError> {
    if k < 3 || k >= n {
        return Ok(WitnessOutcome {
            witness: None,
            exhausted: true,
        });
    }
    let pool_size = binomial(n as u64, k as u64).unwrap_or(u64::MAX);
    if pool_size > MAX_POOL {
        return Err(SearchError::SpaceTooLarge { n, k });
    }
    let pool = subset_pool(n, k);
    let deadline = budget.map(|b| Instant::now() + b);
    let stop = AtomicBool::new(false);
    let outcomes: Vec<TaskOutcome> = (0..pool.len())
        .into_par_iter()
        .map(|task| {
            run_task(
                &pool,
                n,
                k,
                2,
                k as usize + 1,
                false,
                task,
                deadline,
                Some(&stop),
            )
        })
        .collect();
    let mut witness = None;
    let mut exhausted = true;
    for outcome in outcomes {
        if let Some(masks) = outcome.families.into_iter().next() {
            let sets: Vec<VSet> = masks.iter().map(|&m| VSet::from_mask(m)).collect();
            witness = Some(SetFamily::new(n, sets).expect("masks lie inside the universe"));
            break;
        }
        if outcome.truncated {
            exhausted = false;
            break;
        }
    }
    // a stop-flag abort in an earlier task counts as truncation only if no
    // witness was merged before it; with a witness the scan is decided
    Ok(WitnessOutcome {
        witness,
        exhausted,
    })
}

/// Builds a family satisfying property (i) by construction: distinct kernel
/// vertices sit in every set but their own, leftover vertices fill randomly
/// with coverage and empty-total-intersection repaired afterwards. Property
/// (ii) is left to chance. Deterministic per seed.
pub fn random_critical_family(n: u32, ell: usize, seed: u64) -> Result<SetFamily, SearchError> {
    if n > MAX_UNIVERSE {
        return Err(SearchError::UniverseTooLarge(n));
    }
    if ell < 2 || ell as u64 > n as u64 {
        return Err(SearchError::InfeasibleParameters(format!(
            "ell={ell} with n={n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vertices: Vec<u32> = (1..=n).collect();
    vertices.shuffle(&mut rng);
    let kernels = &vertices[..ell];
    let rest = &vertices[ell..];

    let mut sets: Vec<VSet> = (0..ell)
        .map(|i| {
            VSet::from_ids(
                kernels
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, &v)| v),
            )
        })
        .collect();
    for &v in rest {
        for set in sets.iter_mut() {
            if rng.gen_bool(0.5) {
                set.insert(v);
            }
        }
        // coverage: v must appear somewhere
        if !sets.iter().any(|s| s.contains(v)) {
            let idx = rng.gen_range(0..ell);
            sets[idx].insert(v);
        }
        // empty total intersection: v must be missing somewhere
        if sets.iter().all(|s| s.contains(v)) {
            let idx = rng.gen_range(0..ell);
            sets[idx].remove(v);
        }
    }
    SetFamily::new(n, sets).map_err(|e| SearchError::InfeasibleParameters(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::setsystem::check_property_i;
    use crate::setsystem::fixtures::*;

    #[test]
    fn subset_pool_is_sorted_and_complete() {
        let pool = subset_pool(5, 3);
        assert_eq!(pool.len(), 10);
        assert!(pool.windows(2).all(|w| w[0] < w[1]));
        let pool = subset_pool(7, 4);
        assert_eq!(pool.len(), 35);
        let pool = subset_pool(4, 4);
        assert_eq!(pool, vec![0b1111]);
    }

    #[test]
    fn finds_the_disjoint_pair_system() {
        let spec = SearchSpec::exhaustive(6, Some(3), 2, 6);
        let result = enumerate_systems(&spec).unwrap();
        assert!(result.exhausted);
        let target = fixture_disjoint_pair();
        let target_canon = canonical_form(
            6,
            &target.sets().iter().map(|s| s.mask()).collect::<Vec<_>>(),
        );
        assert!(
            result.systems.iter().any(|f| {
                canonical_form(6, &f.sets().iter().map(|s| s.mask()).collect::<Vec<_>>())
                    == target_canon
            }),
            "expected the two-triple system among {:?}",
            result.counts
        );
    }

    #[test]
    fn finds_the_n7_fixture_class() {
        let spec = SearchSpec::exhaustive(7, Some(4), 4, 7);
        let result = enumerate_systems(&spec).unwrap();
        assert!(result.exhausted);
        assert!(!result.systems.is_empty());
        let target = fixture_n7();
        let target_canon = canonical_form(
            7,
            &target.sets().iter().map(|s| s.mask()).collect::<Vec<_>>(),
        );
        assert!(result
            .systems
            .iter()
            .any(|f| f.sets().iter().map(|s| s.mask()).collect::<Vec<_>>() == target_canon));
    }

    #[test]
    fn k4_space_is_empty() {
        let spec = SearchSpec::exhaustive(4, Some(3), 2, 4);
        let result = enumerate_systems(&spec).unwrap();
        assert!(result.exhausted);
        assert!(result.systems.is_empty());
    }

    #[test]
    fn universe_too_large() {
        let spec = SearchSpec::exhaustive(70, Some(3), 2, 4);
        assert_eq!(
            enumerate_systems(&spec).unwrap_err(),
            SearchError::UniverseTooLarge(70)
        );
    }

    #[test]
    fn canonical_form_is_invariant_under_permutation() {
        let fam = fixture_n7();
        let masks: Vec<u64> = fam.sets().iter().map(|s| s.mask()).collect();
        let canon = canonical_form(7, &masks);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let mut perm: Vec<u32> = (0..7).collect();
            perm.shuffle(&mut rng);
            let image = permute_family(&masks, &perm);
            assert_eq!(canonical_form(7, &image), canon);
        }
        // and the canonical form is itself reachable by a permutation
        assert!(canon.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn random_families_satisfy_property_i() {
        for seed in 0..200 {
            let n = 4 + (seed % 9) as u32;
            let ell = 2 + (seed as usize % 3).min(n as usize - 2);
            let fam = random_critical_family(n, ell, seed).unwrap();
            assert!(
                check_property_i(&fam).holds,
                "seed={seed} n={n} ell={ell} family={:?}",
                fam.sets()
            );
            assert_eq!(fam.vertex_union(), VSet::full(n), "coverage");
        }
    }

    #[test]
    fn random_family_k4_shape() {
        let fam = random_critical_family(4, 4, 1).unwrap();
        // with no leftover vertices this is exactly the complement family
        let mut sizes: Vec<u32> = fam.sets().iter().map(|s| s.len()).collect();
        sizes.sort();
        assert_eq!(sizes, vec![3, 3, 3, 3]);
        assert!(check_property_i(&fam).holds);
    }

    #[test]
    fn random_family_infeasible_params() {
        assert!(matches!(
            random_critical_family(4, 5, 0),
            Err(SearchError::InfeasibleParameters(_))
        ));
        assert!(matches!(
            random_critical_family(4, 1, 0),
            Err(SearchError::InfeasibleParameters(_))
        ));
    }

    #[test]
    fn determinism_across_runs() {
        let spec = SearchSpec::exhaustive(7, Some(4), 4, 7);
        let a = enumerate_systems(&spec).unwrap();
        let b = enumerate_systems(&spec).unwrap();
        assert_eq!(a.systems, b.systems);
        assert_eq!(a.counts, b.counts);
        let fam_a = random_critical_family(9, 4, 42).unwrap();
        let fam_b = random_critical_family(9, 4, 42).unwrap();
        assert_eq!(fam_a, fam_b);
    }

    #[test]
    fn extremal_scan_m3() {
        let report = extremal_n(3, 7, None).unwrap();
        assert_eq!(report.best_n, Some(7));
        assert!(report.witness.is_some());
        assert_eq!((report.conjectured, report.certified), (10, 29));

        let report = extremal_n(3, 6, None).unwrap();
        assert_eq!(report.best_n, Some(6));

        assert_eq!(extremal_n(0, 6, None).unwrap_err(), SearchError::NonPositiveM);
    }

    #[test]
    fn resume_skips_completed_prefix() {
        let spec = SearchSpec::exhaustive(7, Some(4), 4, 7);
        let all = enumerate_systems(&spec).unwrap();
        // resume from task 0 with everything already emitted: nothing new
        let resumed = enumerate_with_resume(
            &spec,
            Some(ResumePoint { k: 4, task: 0 }),
            &all.systems,
        )
        .unwrap();
        assert!(resumed.systems.is_empty());
        // resume from scratch with no prior results reproduces the full set
        let fresh = enumerate_with_resume(&spec, Some(ResumePoint { k: 4, task: 0 }), &[])
            .unwrap();
        assert_eq!(fresh.systems, all.systems);
    }
}
