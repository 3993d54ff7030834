//! Independent certificate checker.
//!
//! Re-validates every claim in a certificate from the raw data alone:
//! properties of the input family, kernel membership, pair privacy, arc
//! conditions, independence of F, the m-set recursion, the skew conditions,
//! and the arithmetic. Deliberately shares no code with the pipeline — sets
//! are `BTreeSet<u32>` here, subsets and counts are recomputed from scratch —
//! so a construction bug cannot certify itself.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::certificate::{Certificate, CertificateStatus, CERTIFICATE_VERSION};
use crate::report::CheckStatus;

#[derive(Debug, Error)]
pub enum MalformedCertificate {
    #[error("unsupported certificate version {0}")]
    UnsupportedVersion(u32),
    #[error("certificate structure is unusable: {0}")]
    Structure(String),
}

type Set = BTreeSet<u32>;

struct Ctx {
    n: u32,
    sets: Vec<Set>,
}

impl Ctx {
    fn universe(&self) -> Set {
        (1..=self.n).collect()
    }
}

fn inter_all<'a>(mut iter: impl Iterator<Item = &'a Set>, universe: &Set) -> Set {
    let mut acc = universe.clone();
    for s in &mut iter {
        acc = acc.intersection(s).copied().collect();
        if acc.is_empty() {
            break;
        }
    }
    acc
}

/// All `size`-subsets of the slice, visited in lexicographic order; stops
/// when the visitor returns false.
fn for_each_combination(pool: &[u32], size: usize, f: &mut impl FnMut(&[u32]) -> bool) -> bool {
    fn go(pool: &[u32], size: usize, start: usize, cur: &mut Vec<u32>, f: &mut impl FnMut(&[u32]) -> bool) -> bool {
        if cur.len() == size {
            return f(cur);
        }
        for i in start..pool.len() {
            if pool.len() - i < size - cur.len() {
                break;
            }
            cur.push(pool[i]);
            if !go(pool, size, i + 1, cur, f) {
                cur.pop();
                return false;
            }
            cur.pop();
        }
        true
    }
    go(pool, size, 0, &mut Vec::new(), f)
}

fn checked_binomial(n: u64, k: u64) -> Option<u64> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    Some(acc)
}

/// Outcome of re-deriving the validation verdict.
enum Revalidation {
    Valid { k: u32, m: u32, ell: usize },
    Invalid { code: String },
}

fn revalidate(ctx: &Ctx) -> Revalidation {
    let k = ctx.sets[0].len() as u32;
    if ctx.sets.iter().any(|s| s.len() as u32 != k) {
        return Revalidation::Invalid {
            code: "non_uniform_sizes".to_string(),
        };
    }
    let mut used = Set::new();
    for s in &ctx.sets {
        used.extend(s.iter().copied());
    }
    if let Some(v) = ctx.universe().difference(&used).next() {
        return Revalidation::Invalid {
            code: format!("unused_vertex:{v}"),
        };
    }
    if k < 3 {
        return Revalidation::Invalid {
            code: format!("k_too_small:{k}"),
        };
    }
    let ell = ctx.sets.len();
    if ell < 2 {
        return Revalidation::Invalid {
            code: format!("ell_too_small:{ell}"),
        };
    }
    // property (i)
    let total = inter_all(ctx.sets.iter(), &ctx.universe());
    if let Some(v) = total.iter().next() {
        return Revalidation::Invalid {
            code: format!("property_i_failed:common_vertex:{v}"),
        };
    }
    for skip in 0..ell {
        let drop = inter_all(
            ctx.sets
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != skip)
                .map(|(_, s)| s),
            &ctx.universe(),
        );
        if drop.is_empty() {
            return Revalidation::Invalid {
                code: format!("property_i_failed:drop_one_empty:{skip}"),
            };
        }
    }
    // property (ii): every (k+1)-subset holds a triple inside no member set
    let pool: Vec<u32> = (1..=ctx.n).collect();
    let mut witness: Option<Vec<u32>> = None;
    for_each_combination(&pool, k as usize + 1, &mut |x| {
        let mut found = false;
        for_each_combination(x, 3, &mut |t| {
            let covered = ctx
                .sets
                .iter()
                .any(|s| t.iter().all(|v| s.contains(v)));
            if !covered {
                found = true;
                return false;
            }
            true
        });
        if found {
            true
        } else {
            witness = Some(x.to_vec());
            false
        }
    });
    if let Some(x) = witness {
        let ids: Vec<String> = x.iter().map(|v| v.to_string()).collect();
        return Revalidation::Invalid {
            code: format!("property_ii_failed:{}", ids.join(",")),
        };
    }
    Revalidation::Valid {
        k,
        m: ctx.n - k,
        ell,
    }
}

fn clauses_all_ok(clauses: &Option<Vec<crate::report::ClauseResult>>) -> bool {
    clauses
        .as_ref()
        .map(|cs| cs.iter().all(|c| c.status != CheckStatus::Fail))
        .unwrap_or(false)
}

/// Re-validates every recorded claim from the snapshot alone. Returns true
/// iff the certificate is truthful and (for pipeline certificates) every
/// re-check passes.
pub fn check_certificate(cert: &Certificate) -> Result<bool, MalformedCertificate> {
    if cert.version != CERTIFICATE_VERSION {
        return Err(MalformedCertificate::UnsupportedVersion(cert.version));
    }
    if cert.input.n == 0 || cert.input.n > 64 {
        return Err(MalformedCertificate::Structure(format!(
            "universe size {}",
            cert.input.n
        )));
    }
    if cert.input.sets.is_empty() {
        return Err(MalformedCertificate::Structure("no sets".to_string()));
    }
    let mut sets: Vec<Set> = Vec::with_capacity(cert.input.sets.len());
    for ids in &cert.input.sets {
        let set: Set = ids.iter().copied().collect();
        if set.len() != ids.len() || ids.iter().any(|v| *v < 1 || *v > cert.input.n) {
            return Ok(false); // duplicated or out-of-range ids cannot certify
        }
        sets.push(set);
    }
    let ctx = Ctx {
        n: cert.input.n,
        sets,
    };

    let revalidation = revalidate(&ctx);
    match cert.status {
        CertificateStatus::InvalidInput => {
            // truthful iff validation indeed fails with the recorded code
            let Revalidation::Invalid { code } = revalidation else {
                return Ok(false);
            };
            return Ok(!cert.ok
                && !cert.validation.valid
                && cert.validation.error.as_deref() == Some(code.as_str()));
        }
        CertificateStatus::Failed => return Ok(false),
        CertificateStatus::OutOfScopeEll | CertificateStatus::Complete => {}
    }

    let Revalidation::Valid { k, m, ell } = revalidation else {
        return Ok(false);
    };
    let Some(params) = cert.validation.params else {
        return Ok(false);
    };
    if !cert.validation.valid || params.k != k || params.m != m || params.ell != ell {
        return Ok(false);
    }

    // bounds arithmetic
    let Some(bounds) = cert.bounds else {
        return Ok(false);
    };
    let m64 = m as u64;
    let certified = m64 * m64 + 6 * m64 + 2;
    let Some(conjectured) = checked_binomial(m64 + 2, 2) else {
        return Ok(false);
    };
    if bounds.n != ctx.n
        || bounds.certified_bound != certified
        || bounds.conjectured_bound != conjectured
        || bounds.certified_ok != ((ctx.n as u64) <= certified)
        || bounds.conjectured_ok != ((ctx.n as u64) <= conjectured)
        || !bounds.certified_ok
    {
        return Ok(false);
    }

    if cert.status == CertificateStatus::OutOfScopeEll {
        return Ok(cert.ok && ell < cert.policy.min_stage_size && cert.decomposition.is_none());
    }

    // ---- complete pipeline ----
    if !cert.ok || ell < cert.policy.min_stage_size {
        return Ok(false);
    }
    let Some(dec) = &cert.decomposition else {
        return Ok(false);
    };
    if !clauses_all_ok(&cert.observations)
        || !clauses_all_ok(&cert.pair_lemmas)
        || !clauses_all_ok(&cert.digraph_checks)
        || cert
            .double_cover
            .as_ref()
            .map(|c| c.status == CheckStatus::Fail)
            .unwrap_or(true)
    {
        return Ok(false);
    }

    // decomposition structure
    if dec.stages.is_empty() || dec.t != dec.stages.len() - 1 {
        return Ok(false);
    }
    if dec.stages[0].members != (0..ell).collect::<Vec<_>>() {
        return Ok(false);
    }
    if dec.lifetimes.len() != ell {
        return Ok(false);
    }
    let mut removed: Set = Set::new();
    let mut all_kernels: Set = Set::new();
    for (j, stage) in dec.stages.iter().enumerate() {
        if stage.j != j {
            return Ok(false);
        }
        let members = &stage.members;
        if members.len() < cert.policy.min_stage_size || members.len() < 4 {
            return Ok(false);
        }
        if members.windows(2).any(|w| w[0] >= w[1])
            || members.iter().any(|&i| i >= ell)
        {
            return Ok(false);
        }
        if j > 0 {
            let prev: Set = dec.stages[j - 1].members.iter().map(|&i| i as u32).collect();
            if !members.iter().all(|&i| prev.contains(&(i as u32))) {
                return Ok(false);
            }
            // the chosen subfamily's remainders satisfy the critical pattern:
            // empty total intersection (drop-ones are witnessed by kernels)
            let total = inter_all(
                members
                    .iter()
                    .map(|&i| ctx.sets[i].difference(&removed).copied().collect::<Set>())
                    .collect::<Vec<_>>()
                    .iter(),
                &ctx.universe(),
            );
            if !total.is_empty() {
                return Ok(false);
            }
        }
        // kernel membership and distinctness
        if stage.kernel.len() != members.len() {
            return Ok(false);
        }
        for (pos, &(i, x)) in stage.kernel.iter().enumerate() {
            if i != members[pos] || x < 1 || x > ctx.n {
                return Ok(false);
            }
            if removed.contains(&x) || all_kernels.contains(&x) {
                return Ok(false);
            }
            if ctx.sets[i].contains(&x) {
                return Ok(false);
            }
            for &r in members {
                if r != i && !(ctx.sets[r].contains(&x) && !removed.contains(&x)) {
                    return Ok(false);
                }
            }
        }
        for &(_, x) in &stage.kernel {
            all_kernels.insert(x);
        }
        removed.extend(stage.kernel.iter().map(|&(_, x)| x));
        // recorded remainders
        if stage.remainders.len() != members.len() {
            return Ok(false);
        }
        for (pos, &i) in members.iter().enumerate() {
            let expect: Vec<u32> = ctx.sets[i].difference(&removed).copied().collect();
            if stage.remainders[pos] != expect {
                return Ok(false);
            }
        }
    }
    // lifetimes, trace set, garbage
    for i in 0..ell {
        let derived = dec
            .stages
            .iter()
            .filter(|s| s.members.contains(&i))
            .map(|s| s.j)
            .max();
        if derived != Some(dec.lifetimes[i]) {
            return Ok(false);
        }
    }
    let recorded_kernels: Set = dec.kernel_vertices.iter().copied().collect();
    if recorded_kernels != all_kernels
        || recorded_kernels.len() != dec.kernel_vertices.len()
    {
        return Ok(false);
    }
    let garbage: Set = ctx.universe().difference(&all_kernels).copied().collect();
    if dec.garbage.iter().copied().collect::<Set>() != garbage
        || dec.garbage.len() != garbage.len()
    {
        return Ok(false);
    }

    // observations (a)-(c) hold by the structure checks above; re-check the
    // counting clauses (b) was covered, (c), (d), (e)
    for stage in &dec.stages {
        let kernel_set: Set = stage.kernel.iter().map(|&(_, x)| x).collect();
        for i in 0..ell {
            if dec.lifetimes[i] >= stage.j {
                let got = ctx.sets[i].intersection(&kernel_set).count();
                if got != stage.members.len() - 1 {
                    return Ok(false);
                }
            }
        }
    }
    if dec.t as u64 >= m as u64 {
        return Ok(false);
    }
    let stage_sum: usize = dec.stages.iter().map(|s| s.members.len()).sum();
    if (stage_sum as i64) < ctx.n as i64 - 3 * m as i64 {
        return Ok(false);
    }

    // ---- pairs ----
    let Some(pairs) = &cert.pairs else {
        return Ok(false);
    };
    let cover = |a: u32, b: u32, members: &[usize]| -> usize {
        members
            .iter()
            .filter(|&&i| ctx.sets[i].contains(&a) && ctx.sets[i].contains(&b))
            .count()
    };
    let mut by_key: BTreeMap<(usize, usize), (u32, u32)> = BTreeMap::new();
    for p in pairs {
        if p.owner >= ell || p.time > dec.lifetimes[p.owner] {
            return Ok(false);
        }
        if p.anchor == p.non_anchor
            || by_key
                .insert((p.owner, p.time), (p.anchor, p.non_anchor))
                .is_some()
        {
            return Ok(false);
        }
    }
    for i in 0..ell {
        for j in 0..=dec.lifetimes[i] {
            if !by_key.contains_key(&(i, j)) {
                return Ok(false);
            }
        }
    }
    let kernel_identity: BTreeMap<u32, (usize, usize)> = kernel_of_map(dec);
    for p in pairs {
        let members = &dec.stages[p.time].members;
        if !garbage.contains(&p.anchor) {
            return Ok(false);
        }
        if !ctx.sets[p.owner].contains(&p.anchor) || !ctx.sets[p.owner].contains(&p.non_anchor) {
            return Ok(false);
        }
        if cover(p.anchor, p.non_anchor, members) != 1 {
            return Ok(false);
        }
        // disjoint from the owner's earlier anchors
        for q in pairs {
            if q.owner == p.owner
                && q.time < p.time
                && (q.anchor == p.anchor
                    || q.anchor == p.non_anchor)
            {
                return Ok(false);
            }
        }
        // observation (e): an earlier kernel non-anchor is a final vertex
        if let Some(&(a, b)) = kernel_identity.get(&p.non_anchor) {
            if b < p.time && b != dec.lifetimes[a] {
                return Ok(false);
            }
            // observation (f): same-stage kernel non-anchor at a lifetime end
            if b == p.time && p.time != dec.lifetimes[a] && p.time != dec.lifetimes[p.owner] {
                return Ok(false);
            }
        }
    }
    // stage pair sets are disjoint across stages and complete per stage
    let mut seen_pairs: BTreeSet<(u32, u32)> = BTreeSet::new();
    for p in pairs {
        let key = (p.anchor.min(p.non_anchor), p.anchor.max(p.non_anchor));
        if !seen_pairs.insert(key) {
            return Ok(false);
        }
    }
    if seen_pairs.len() != stage_sum {
        return Ok(false);
    }
    // earlier pairs stay at most single-covered at later stages
    for j in 0..dec.stages.len() {
        let members = &dec.stages[j].members;
        for p in pairs.iter().filter(|p| p.time <= j) {
            if cover(p.anchor, p.non_anchor, members) > 1 {
                return Ok(false);
            }
        }
    }
    // kernel pairs jointly inside a set are double-covered at every stage
    let kernel_list: Vec<u32> = all_kernels.iter().copied().collect();
    for j in 0..dec.stages.len() {
        let members = &dec.stages[j].members;
        for (ai, &a) in kernel_list.iter().enumerate() {
            for &b in &kernel_list[ai + 1..] {
                let jointly = ctx
                    .sets
                    .iter()
                    .any(|s| s.contains(&a) && s.contains(&b));
                if jointly && cover(a, b, members) < 2 {
                    return Ok(false);
                }
            }
        }
    }

    // ---- digraph ----
    let Some(dg) = &cert.digraph else {
        return Ok(false);
    };
    let mut expected_vertices: Vec<(usize, usize)> = Vec::new();
    for stage in &dec.stages {
        for &(i, _) in &stage.kernel {
            expected_vertices.push((i, stage.j));
        }
    }
    expected_vertices.sort();
    if dg.vertices != expected_vertices {
        return Ok(false);
    }
    let mut expected_arcs: BTreeSet<((usize, usize), (usize, usize))> = BTreeSet::new();
    for p in pairs {
        if let Some(&(i, j)) = kernel_identity.get(&p.non_anchor) {
            if j != dec.lifetimes[i] {
                expected_arcs.insert(((p.owner, p.time), (i, j)));
            }
        }
    }
    let recorded_arcs: BTreeSet<((usize, usize), (usize, usize))> =
        dg.arcs.iter().map(|a| (a.from, a.to)).collect();
    if recorded_arcs != expected_arcs || dg.arcs.len() != expected_arcs.len() {
        return Ok(false);
    }
    // arc conditions, out-degree, acyclicity, forest
    let mut out_of: BTreeMap<(usize, usize), (usize, usize)> = BTreeMap::new();
    for &(from, to) in &recorded_arcs {
        if from.1 > to.1 {
            return Ok(false);
        }
        if from.1 == to.1 && from.1 != dec.lifetimes[from.0] {
            return Ok(false);
        }
        if from == to || out_of.insert(from, to).is_some() {
            return Ok(false);
        }
    }
    // acyclic: follow out-arcs from each vertex; a repeat inside the walk is a cycle
    for &start in &dg.vertices {
        let mut slow = start;
        let mut seen = BTreeSet::new();
        while let Some(&next) = out_of.get(&slow) {
            if !seen.insert(slow) {
                return Ok(false);
            }
            slow = next;
        }
    }
    // out-degree <= 1 and acyclic imply a forest; re-check with a union-find
    {
        let idx: BTreeMap<(usize, usize), usize> = dg
            .vertices
            .iter()
            .enumerate()
            .map(|(i, &v)| (v, i))
            .collect();
        let mut parent: Vec<usize> = (0..dg.vertices.len()).collect();
        fn find(parent: &mut Vec<usize>, v: usize) -> usize {
            if parent[v] != v {
                let r = find(parent, parent[v]);
                parent[v] = r;
            }
            parent[v]
        }
        for &(from, to) in &recorded_arcs {
            let (a, b) = (idx[&from], idx[&to]);
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra == rb {
                return Ok(false); // an undirected cycle
            }
            parent[ra] = rb;
        }
    }

    // ---- free marking ----
    let Some(fm) = &cert.free_marking else {
        return Ok(false);
    };
    let f_set: BTreeSet<(usize, usize)> = fm.independent.iter().copied().collect();
    if f_set.len() != fm.independent.len() {
        return Ok(false);
    }
    if !f_set.iter().all(|v| dg.vertices.binary_search(v).is_ok()) {
        return Ok(false);
    }
    for &(from, to) in &recorded_arcs {
        if f_set.contains(&from) && f_set.contains(&to) {
            return Ok(false);
        }
    }
    let floor = dg.vertices.len().div_ceil(2);
    if fm.floor != floor || f_set.len() < floor {
        return Ok(false);
    }
    let Some(fc) = cert.free_count else {
        return Ok(false);
    };
    let floor_doubled = ctx.n as i64 - 3 * m as i64;
    if fc.free_pairs != f_set.len()
        || fc.floor_doubled != floor_doubled
        || fc.ok != (2 * fc.free_pairs as i64 >= floor_doubled)
        || !fc.ok
    {
        return Ok(false);
    }

    // ---- m-sets ----
    let Some(msets) = &cert.m_sets else {
        return Ok(false);
    };
    let mut mset_of: BTreeMap<(usize, usize), Set> = BTreeMap::new();
    for rec in msets {
        if mset_of
            .insert((rec.owner, rec.stage), rec.set.iter().copied().collect())
            .is_some()
        {
            return Ok(false);
        }
    }
    for i in 0..ell {
        for j in 0..=dec.lifetimes[i] {
            let Some(cur) = mset_of.get(&(i, j)) else {
                return Ok(false);
            };
            if cur.len() as u32 != m {
                return Ok(false);
            }
            if j == 0 {
                let complement: Set = ctx.universe().difference(&ctx.sets[i]).copied().collect();
                if *cur != complement {
                    return Ok(false);
                }
            } else {
                let prev = &mset_of[&(i, j - 1)];
                let expected: Set = if f_set.contains(&(i, j - 1)) {
                    let x = dec.stages[j - 1]
                        .kernel
                        .iter()
                        .find(|&&(o, _)| o == i)
                        .map(|&(_, x)| x);
                    let Some(x) = x else {
                        return Ok(false);
                    };
                    let Some(&(g, _)) = by_key.get(&(i, j - 1)) else {
                        return Ok(false);
                    };
                    if !prev.contains(&x) || prev.contains(&g) {
                        return Ok(false);
                    }
                    let mut next = prev.clone();
                    next.remove(&x);
                    next.insert(g);
                    next
                } else {
                    prev.clone()
                };
                if *cur != expected {
                    return Ok(false);
                }
            }
            // the terminal kernel vertex is never removed
            let t_i = dec.lifetimes[i];
            if let Some(term) = dec.stages[t_i]
                .kernel
                .iter()
                .find(|&&(o, _)| o == i)
                .map(|&(_, x)| x)
            {
                if !cur.contains(&term) {
                    return Ok(false);
                }
            } else {
                return Ok(false);
            }
        }
    }

    // ---- skew system ----
    let Some(sk) = &cert.skew_system else {
        return Ok(false);
    };
    if sk.r != 2 || sk.s != m {
        return Ok(false);
    }
    let mut expected_entries: Vec<(usize, usize)> =
        f_set.iter().map(|&(o, s)| (s, o)).collect();
    expected_entries.sort();
    if sk.entries.len() != expected_entries.len() {
        return Ok(false);
    }
    for (rec, &(stage, owner)) in sk.entries.iter().zip(&expected_entries) {
        if rec.owner != owner || rec.stage != stage {
            return Ok(false);
        }
        let Some(&(anchor, non_anchor)) = by_key.get(&(owner, stage)) else {
            return Ok(false);
        };
        let pair: Set = [anchor, non_anchor].into_iter().collect();
        if rec.a.iter().copied().collect::<Set>() != pair {
            return Ok(false);
        }
        if rec.b.iter().copied().collect::<Set>() != mset_of[&(owner, stage)] {
            return Ok(false);
        }
    }
    // skew conditions on the recorded entries
    let entry_sets: Vec<(Set, Set)> = sk
        .entries
        .iter()
        .map(|e| {
            (
                e.a.iter().copied().collect::<Set>(),
                e.b.iter().copied().collect::<Set>(),
            )
        })
        .collect();
    for (a, b) in &entry_sets {
        if a.len() != 2 || b.len() as u32 != m {
            return Ok(false);
        }
        if a.intersection(b).next().is_some() {
            return Ok(false);
        }
    }
    for i in 0..entry_sets.len() {
        for j in i + 1..entry_sets.len() {
            if entry_sets[i].0.intersection(&entry_sets[j].1).next().is_none() {
                return Ok(false);
            }
        }
    }
    let Some(sb) = cert.skew_bound else {
        return Ok(false);
    };
    let Some(skew_bound) = checked_binomial(2 + m as u64, 2) else {
        return Ok(false);
    };
    let h = entry_sets.len() as u64;
    if sb.h != h
        || sb.bound != skew_bound
        || sb.ok != (h <= skew_bound)
        || sb.tight != (h == skew_bound)
        || !sb.ok
    {
        return Ok(false);
    }
    if let Some(sc) = &cert.skew_check {
        if !sc.valid {
            return Ok(false);
        }
    } else {
        return Ok(false);
    }

    // ---- final chain ----
    let Some(chain) = cert.chain else {
        return Ok(false);
    };
    let (n_i, m_i, h_i) = (ctx.n as i64, m as i64, h as i64);
    let vacuous = n_i <= 3 * m_i;
    let lower_ok = vacuous || 2 * h_i >= n_i - 3 * m_i;
    let upper_ok = h_i <= conjectured as i64;
    let implied = 3 * m_i + 2 * conjectured as i64;
    let implies_certified = implied == certified as i64 && (vacuous || n_i <= implied);
    if chain.n != ctx.n
        || chain.m != m
        || chain.h != h
        || chain.vacuous != vacuous
        || chain.lower_ok != lower_ok
        || chain.upper_ok != upper_ok
        || chain.implies_certified != implies_certified
        || !(lower_ok && upper_ok && implies_certified)
    {
        return Ok(false);
    }

    Ok(true)
}

fn kernel_of_map(
    dec: &crate::certificate::DecompositionRecord,
) -> BTreeMap<u32, (usize, usize)> {
    let mut map = BTreeMap::new();
    for stage in &dec.stages {
        for &(i, x) in &stage.kernel {
            map.insert(x, (i, stage.j));
        }
    }
    map
}
