//! Kernel digraph and free-pair marking.
//!
//! Each kernel vertex x_a^(j) becomes a digraph node. A selected pair whose
//! non-anchor is some kernel vertex x_i^(j) with j short of i's lifetime
//! contributes the arc (owner, time) -> (i, j). The digraph has out-degree
//! at most one and is acyclic, so its underlying graph is a forest; an exact
//! maximum independent set F on that forest marks the free pairs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decomposition::Decomposition;
use crate::privatepairs::PairLedger;
use crate::report::ClauseResult;
use crate::setsystem::NMSystem;

/// Identifies kernel vertex x_owner^(stage).
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct KernelVertex {
    pub owner: usize,
    pub stage: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Arc {
    pub from: KernelVertex,
    pub to: KernelVertex,
}

/// The digraph on kernel vertices induced by the pair selection.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelDigraph {
    /// All kernel vertices, ascending by (owner, stage).
    pub vertices: Vec<KernelVertex>,
    /// Arcs sorted by source; at most one per source.
    pub arcs: Vec<Arc>,
}

impl KernelDigraph {
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }
}

/// Builds the digraph: one node per kernel vertex, one arc per pair whose
/// non-anchor is a kernel vertex that is not its owner's final one.
pub fn build_digraph(ledger: &PairLedger, d: &Decomposition) -> KernelDigraph {
    let mut vertices: Vec<KernelVertex> = Vec::new();
    for stage in d.stages() {
        for &(i, _) in &stage.kernel {
            vertices.push(KernelVertex {
                owner: i,
                stage: stage.j,
            });
        }
    }
    vertices.sort();
    let mut arcs = Vec::new();
    for p in ledger.pairs() {
        if let Some((i, j)) = d.kernel_identity(p.non_anchor) {
            if j != d.lifetime(i) {
                arcs.push(Arc {
                    from: KernelVertex {
                        owner: p.owner,
                        stage: p.time,
                    },
                    to: KernelVertex { owner: i, stage: j },
                });
            }
        }
    }
    arcs.sort_by_key(|a| a.from);
    KernelDigraph { vertices, arcs }
}

/// Per-arc and global digraph checks:
/// arcs never point to an earlier stage; a same-stage arc leaves a source at
/// its lifetime end; out-degree at most one; no self-loops; acyclic (a
/// topological order is included as the certificate). Failures are findings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DigraphReport {
    pub clauses: Vec<ClauseResult>,
    /// Present iff the digraph is acyclic.
    pub topological_order: Option<Vec<KernelVertex>>,
}

pub fn verify_digraph(g: &KernelDigraph, d: &Decomposition) -> DigraphReport {
    let mut clauses = Vec::new();

    let mut forward = ClauseResult::pass("arcs_never_point_backward");
    for a in &g.arcs {
        if a.from.stage > a.to.stage {
            forward = ClauseResult::fail(
                "arcs_never_point_backward",
                format!(
                    "arc ({},{}) -> ({},{})",
                    a.from.owner, a.from.stage, a.to.owner, a.to.stage
                ),
            );
            break;
        }
    }
    clauses.push(forward);

    let mut same_stage = ClauseResult::pass("same_stage_arc_ends_source_lifetime");
    for a in &g.arcs {
        if a.from.stage == a.to.stage && a.from.stage != d.lifetime(a.from.owner) {
            same_stage = ClauseResult::fail(
                "same_stage_arc_ends_source_lifetime",
                format!(
                    "arc ({},{}) -> ({},{}) but source lives to {}",
                    a.from.owner,
                    a.from.stage,
                    a.to.owner,
                    a.to.stage,
                    d.lifetime(a.from.owner)
                ),
            );
            break;
        }
    }
    clauses.push(same_stage);

    let mut out_degree = ClauseResult::pass("out_degree_at_most_one");
    for w in g.arcs.windows(2) {
        if w[0].from == w[1].from {
            out_degree = ClauseResult::fail(
                "out_degree_at_most_one",
                format!("vertex ({},{}) has two out-arcs", w[0].from.owner, w[0].from.stage),
            );
            break;
        }
    }
    clauses.push(out_degree);

    let mut loops = ClauseResult::pass("no_self_loops");
    for a in &g.arcs {
        if a.from == a.to {
            loops = ClauseResult::fail(
                "no_self_loops",
                format!("vertex ({},{})", a.from.owner, a.from.stage),
            );
            break;
        }
    }
    clauses.push(loops);

    let topo = topological_order(g);
    match &topo {
        Ok(order) => {
            clauses.push(ClauseResult::pass("acyclic"));
            DigraphReport {
                clauses,
                topological_order: Some(order.clone()),
            }
        }
        Err(cycle) => {
            let path: Vec<String> = cycle
                .iter()
                .map(|v| format!("({},{})", v.owner, v.stage))
                .collect();
            clauses.push(ClauseResult::fail(
                "acyclic",
                format!("cycle {}", path.join(" -> ")),
            ));
            DigraphReport {
                clauses,
                topological_order: None,
            }
        }
    }
}

/// Kahn's algorithm; on failure returns one directed cycle.
fn topological_order(g: &KernelDigraph) -> Result<Vec<KernelVertex>, Vec<KernelVertex>> {
    let index_of = |v: &KernelVertex| g.vertices.binary_search(v).expect("known vertex");
    let n = g.vertices.len();
    let mut in_deg = vec![0usize; n];
    let mut out_arc = vec![None::<usize>; n];
    for a in &g.arcs {
        let f = index_of(&a.from);
        let t = index_of(&a.to);
        in_deg[t] += 1;
        out_arc[f] = Some(t);
    }
    let mut queue: Vec<usize> = (0..n).filter(|&v| in_deg[v] == 0).collect();
    queue.sort();
    let mut order = Vec::with_capacity(n);
    let mut removed = vec![false; n];
    while let Some(v) = queue.pop() {
        removed[v] = true;
        order.push(g.vertices[v]);
        if let Some(t) = out_arc[v] {
            in_deg[t] -= 1;
            if in_deg[t] == 0 {
                queue.push(t);
            }
        }
    }
    if order.len() == n {
        return Ok(order);
    }
    // walk the out-arcs from any remaining vertex until a repeat closes a cycle
    let start = (0..n).find(|&v| !removed[v]).expect("cycle vertex exists");
    let mut seen_at = vec![None::<usize>; n];
    let mut path = Vec::new();
    let mut cur = start;
    loop {
        if let Some(pos) = seen_at[cur] {
            return Err(path[pos..].to_vec());
        }
        seen_at[cur] = Some(path.len());
        path.push(g.vertices[cur]);
        cur = out_arc[cur].expect("unremoved vertices sit on a cycle");
    }
}

/// A chosen maximum independent set and the pairs it frees.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FreeMarking {
    /// The independent set F, ascending by (owner, stage).
    pub independent: Vec<KernelVertex>,
    /// (owner, time) of each free pair; same order as `independent`.
    pub free_pairs: Vec<(usize, usize)>,
}

impl FreeMarking {
    pub fn is_free(&self, owner: usize, time: usize) -> bool {
        self.free_pairs.binary_search(&(owner, time)).is_ok()
    }

    pub fn size(&self) -> usize {
        self.independent.len()
    }
}

#[derive(Debug, Clone, Error, Serialize, Deserialize)]
pub enum ForestError {
    #[error("underlying graph is not a forest; cycle through {0:?}")]
    NotAForest(Vec<KernelVertex>),
}

/// Exact maximum independent set on the underlying forest, computed by tree
/// DP. Among maximum sets, returns the lexicographically smallest by sorted
/// vertex list. The 2-coloring floor `|F| >= ceil(|A|/2)` always holds for a
/// forest and is asserted.
pub fn max_independent_set_forest(g: &KernelDigraph) -> Result<FreeMarking, ForestError> {
    let n = g.vertices.len();
    let index_of = |v: &KernelVertex| g.vertices.binary_search(v).expect("known vertex");
    let mut adj = vec![Vec::<usize>::new(); n];
    for a in &g.arcs {
        let f = index_of(&a.from);
        let t = index_of(&a.to);
        adj[f].push(t);
        adj[t].push(f);
    }
    if let Some(cycle) = undirected_cycle(&adj) {
        return Err(ForestError::NotAForest(
            cycle.into_iter().map(|v| g.vertices[v]).collect(),
        ));
    }

    let max = forest_mis_size(&adj, &vec![None; n]).expect("unconstrained DP is feasible");
    // Greedy lexicographic refinement: force each vertex in, in id order,
    // and keep the choice iff the maximum is still attainable.
    let mut forced: Vec<Option<bool>> = vec![None; n];
    let mut chosen = Vec::new();
    for v in 0..n {
        forced[v] = Some(true);
        if forest_mis_size(&adj, &forced) == Some(max) {
            chosen.push(g.vertices[v]);
        } else {
            forced[v] = Some(false);
        }
    }
    assert_eq!(chosen.len(), max, "greedy refinement must reach the maximum");
    assert!(
        2 * max >= n,
        "forest independent set below the 2-coloring floor"
    );
    let free_pairs: Vec<(usize, usize)> = chosen.iter().map(|v| (v.owner, v.stage)).collect();
    Ok(FreeMarking {
        independent: chosen,
        free_pairs,
    })
}

/// Maximum independent set size under per-vertex forcing; None if the
/// constraints are unsatisfiable (two forced-in neighbors).
fn forest_mis_size(adj: &[Vec<usize>], forced: &[Option<bool>]) -> Option<usize> {
    let n = adj.len();
    let mut visited = vec![false; n];
    let mut total = 0usize;
    for root in 0..n {
        if visited[root] {
            continue;
        }
        // iterative post-order over the tree component
        let mut order = Vec::new();
        let mut parent = vec![usize::MAX; n];
        let mut stack = vec![root];
        visited[root] = true;
        while let Some(v) = stack.pop() {
            order.push(v);
            for &w in &adj[v] {
                if !visited[w] {
                    visited[w] = true;
                    parent[w] = v;
                    stack.push(w);
                }
            }
        }
        // dp[v] = (best with v excluded, best with v included); None = infeasible
        let mut dp_out = vec![Some(0usize); n];
        let mut dp_in = vec![Some(1usize); n];
        for &v in order.iter().rev() {
            match forced[v] {
                Some(true) => dp_out[v] = None,
                Some(false) => dp_in[v] = None,
                None => {}
            }
            let (mut best_out, mut best_in) = (dp_out[v], dp_in[v]);
            for &w in &adj[v] {
                if w == parent[v] {
                    continue;
                }
                // child w: if v is in, w must be out; if v is out, w is free
                best_in = match (best_in, dp_out[w]) {
                    (Some(a), Some(b)) => Some(a + b),
                    _ => None,
                };
                let w_best = match (dp_out[w], dp_in[w]) {
                    (Some(a), Some(b)) => Some(a.max(b)),
                    (Some(a), None) => Some(a),
                    (None, Some(b)) => Some(b),
                    (None, None) => None,
                };
                best_out = match (best_out, w_best) {
                    (Some(a), Some(b)) => Some(a + b),
                    _ => None,
                };
            }
            dp_out[v] = best_out;
            dp_in[v] = best_in;
        }
        let component_best = match (dp_out[root], dp_in[root]) {
            (Some(a), Some(b)) => a.max(b),
            (Some(a), None) => a,
            (None, Some(b)) => b,
            (None, None) => return None,
        };
        total += component_best;
    }
    Some(total)
}

/// DFS cycle detection on the undirected graph; returns a cycle if found.
fn undirected_cycle(adj: &[Vec<usize>]) -> Option<Vec<usize>> {
    let n = adj.len();
    let mut visited = vec![false; n];
    let mut parent_of = vec![usize::MAX; n];
    for root in 0..n {
        if visited[root] {
            continue;
        }
        let mut stack = vec![(root, usize::MAX)];
        visited[root] = true;
        while let Some((v, parent)) = stack.pop() {
            let mut skipped_parent_edge = false;
            for &w in &adj[v] {
                // one parallel edge back to the parent is the tree edge;
                // a second one is a genuine 2-cycle
                if w == parent && !skipped_parent_edge {
                    skipped_parent_edge = true;
                    continue;
                }
                if visited[w] {
                    // close the cycle: walk v up to w
                    let mut cycle = vec![v];
                    let mut cur = v;
                    while cur != w && parent_of[cur] != usize::MAX {
                        cur = parent_of[cur];
                        cycle.push(cur);
                    }
                    return Some(cycle);
                }
                visited[w] = true;
                parent_of[w] = v;
                stack.push((w, v));
            }
        }
    }
    None
}

/// Free-pair count against the (n-3m)/2 floor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FreeCountReport {
    pub free_pairs: usize,
    /// n - 3m; the floor is half of this, which may be negative.
    pub floor_doubled: i64,
    pub ok: bool,
}

pub fn count_free(marking: &FreeMarking, system: &NMSystem) -> FreeCountReport {
    let floor_doubled = system.n() as i64 - 3 * system.m() as i64;
    let ok = 2 * marking.size() as i64 >= floor_doubled;
    FreeCountReport {
        free_pairs: marking.size(),
        floor_doubled,
        ok,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::{run_decomposition, Policy};
    use crate::privatepairs::select_private_pairs;
    use crate::report::all_ok;
    use crate::setsystem::fixtures::*;
    use crate::setsystem::validate_nm_system;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn kv(owner: usize, stage: usize) -> KernelVertex {
        KernelVertex { owner, stage }
    }

    fn graph(vertices: &[(usize, usize)], arcs: &[((usize, usize), (usize, usize))]) -> KernelDigraph {
        let mut vertices: Vec<KernelVertex> =
            vertices.iter().map(|&(o, s)| kv(o, s)).collect();
        vertices.sort();
        let mut arcs: Vec<Arc> = arcs
            .iter()
            .map(|&(f, t)| Arc {
                from: kv(f.0, f.1),
                to: kv(t.0, t.1),
            })
            .collect();
        arcs.sort_by_key(|a| a.from);
        KernelDigraph { vertices, arcs }
    }

    #[test]
    fn fixture_n7_digraph_is_arcless() {
        let sys = validate_nm_system(&fixture_n7()).unwrap();
        let d = run_decomposition(&sys, &Policy::default()).unwrap();
        let ledger = select_private_pairs(&d).unwrap();
        let g = build_digraph(&ledger, &d);
        assert_eq!(g.vertex_count(), 4);
        assert!(g.arcs.is_empty());
        let report = verify_digraph(&g, &d);
        assert!(all_ok(&report.clauses));
        assert_eq!(report.topological_order.unwrap().len(), 4);

        let marking = max_independent_set_forest(&g).unwrap();
        assert_eq!(marking.size(), 4);
        assert_eq!(
            marking.free_pairs,
            vec![(0, 0), (1, 0), (2, 0), (3, 0)]
        );
        let report = count_free(&marking, &sys);
        assert!(report.ok);
        assert_eq!(report.floor_doubled, -2);
    }

    #[test]
    fn path_and_star_mis() {
        // path x - y - z
        let g = graph(
            &[(0, 0), (1, 0), (2, 0)],
            &[((0, 0), (1, 0)), ((1, 0), (2, 0))],
        );
        let m = max_independent_set_forest(&g).unwrap();
        assert_eq!(m.independent, vec![kv(0, 0), kv(2, 0)]);

        // star: center (0,0) with four leaves
        let g = graph(
            &[(0, 0), (1, 0), (2, 0), (3, 0), (4, 0)],
            &[
                ((1, 0), (0, 0)),
                ((2, 0), (0, 0)),
                ((3, 0), (0, 0)),
                ((4, 0), (0, 0)),
            ],
        );
        let m = max_independent_set_forest(&g).unwrap();
        assert_eq!(m.size(), 4);
        assert!(!m.independent.contains(&kv(0, 0)));
    }

    #[test]
    fn lexicographic_tie_break() {
        // single edge: both endpoints give size 1; the smaller id wins
        let g = graph(&[(0, 0), (1, 0)], &[((0, 0), (1, 0))]);
        let m = max_independent_set_forest(&g).unwrap();
        assert_eq!(m.independent, vec![kv(0, 0)]);
    }

    #[test]
    fn forged_two_cycle_is_detected() {
        let g = graph(
            &[(0, 0), (1, 0)],
            &[((0, 0), (1, 0)), ((1, 0), (0, 0))],
        );
        let report = verify_digraph(
            &g,
            &run_decomposition(
                &validate_nm_system(&fixture_n7()).unwrap(),
                &Policy::default(),
            )
            .unwrap(),
        );
        let acyclic = report.clauses.iter().find(|c| c.name == "acyclic").unwrap();
        assert!(!acyclic.ok());
        assert!(acyclic.witness.as_ref().unwrap().contains("cycle"));
        assert!(report.topological_order.is_none());
        assert!(matches!(
            max_independent_set_forest(&g),
            Err(ForestError::NotAForest(_))
        ));
    }

    #[test]
    fn backward_arc_is_flagged() {
        let sys = validate_nm_system(&fixture_n7()).unwrap();
        let d = run_decomposition(&sys, &Policy::default()).unwrap();
        let g = graph(&[(0, 0), (1, 1)], &[((1, 1), (0, 0))]);
        let report = verify_digraph(&g, &d);
        let c = report
            .clauses
            .iter()
            .find(|c| c.name == "arcs_never_point_backward")
            .unwrap();
        assert!(!c.ok());
    }

    #[test]
    fn same_stage_arc_rule_flagged() {
        // two-stage run: every lifetime is 1, so a stage-0 same-stage arc
        // cannot leave a source at its lifetime end
        let fam = crate::setsystem::SetFamily::from_sets(
            12,
            &[
                &[2, 3, 4, 6, 7, 8, 9],
                &[1, 3, 4, 5, 7, 8, 10],
                &[1, 2, 4, 5, 6, 8, 11],
                &[1, 2, 3, 5, 6, 7, 12],
            ],
        );
        let d = crate::decomposition::run_decomposition_mechanics(&fam, &Policy::default())
            .unwrap();
        assert_eq!(d.lifetime(0), 1);
        let g = graph(&[(0, 0), (1, 0)], &[((0, 0), (1, 0))]);
        let report = verify_digraph(&g, &d);
        let c = report
            .clauses
            .iter()
            .find(|c| c.name == "same_stage_arc_ends_source_lifetime")
            .unwrap();
        assert!(!c.ok());
    }

    /// Set 4 dies at stage 0 while sets 0..3 run to stage 1. Its pair keeps
    /// the stage-0 kernel non-anchor x_0^(0) (rule 2 needs the pair owner to
    /// live on), and since set 0 lives to stage 1 this induces the arc
    /// (4,0) -> (0,0).
    #[test]
    fn dying_member_induces_an_arc() {
        let sys = validate_nm_system(&fixture_arc()).unwrap();
        let d = run_decomposition(&sys, &Policy::default()).unwrap();
        assert_eq!(d.t(), 1);
        assert_eq!(d.lifetimes(), &[1, 1, 1, 1, 0]);
        let ledger = select_private_pairs(&d).unwrap();
        assert_eq!(ledger.len(), 9);
        let p4 = ledger.get(4, 0).unwrap();
        assert_eq!((p4.anchor, p4.non_anchor), (10, 1));
        assert!(p4.rules.is_empty());

        let g = build_digraph(&ledger, &d);
        assert_eq!(g.vertex_count(), 9);
        assert_eq!(
            g.arcs,
            vec![Arc {
                from: kv(4, 0),
                to: kv(0, 0),
            }]
        );
        let report = verify_digraph(&g, &d);
        assert!(all_ok(&report.clauses));

        let marking = max_independent_set_forest(&g).unwrap();
        assert_eq!(marking.size(), 8);
        assert!(marking.is_free(0, 0));
        assert!(!marking.is_free(4, 0));
        assert!(all_ok(&crate::privatepairs::verify_pair_lemmas(&ledger, &d)));
        assert!(crate::privatepairs::verify_double_cover(&d).passed());
    }

    /// Random forest via random parent links; compares the DP against an
    /// independent brute-force enumeration.
    #[test]
    fn mis_matches_brute_force_on_random_forests() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for case in 0..500 {
            let n: usize = rng.gen_range(1..=18);
            let mut edges = Vec::new();
            for v in 1..n {
                // root a new tree with probability 1/4
                if rng.gen_range(0..4) > 0 {
                    let p = rng.gen_range(0..v);
                    edges.push((v, p));
                }
            }
            let g = graph(
                &(0..n).map(|v| (v, 0)).collect::<Vec<_>>(),
                &edges
                    .iter()
                    .map(|&(a, b)| ((a, 0), (b, 0)))
                    .collect::<Vec<_>>(),
            );
            let dp = max_independent_set_forest(&g).unwrap();
            let brute = brute_force_mis(n, &edges);
            assert_eq!(dp.size(), brute, "case {case}: n={n} edges={edges:?}");
            assert!(2 * dp.size() >= n, "2-coloring floor violated");
            // verify independence
            for &(a, b) in &edges {
                assert!(
                    !(dp.independent.contains(&kv(a, 0)) && dp.independent.contains(&kv(b, 0))),
                    "adjacent vertices both chosen"
                );
            }
        }
    }

    fn brute_force_mis(n: usize, edges: &[(usize, usize)]) -> usize {
        let mut adj = vec![0u32; n];
        for &(a, b) in edges {
            adj[a] |= 1 << b;
            adj[b] |= 1 << a;
        }
        let mut best = 0;
        // recursive branch on the lowest undecided vertex
        fn go(v: usize, n: usize, chosen: u32, adj: &[u32], best: &mut u32) {
            if v == n {
                *best = (*best).max(chosen.count_ones());
                return;
            }
            // prune: even taking everything left cannot beat best
            if chosen.count_ones() + (n - v) as u32 <= *best {
                return;
            }
            if adj[v] & chosen == 0 {
                go(v + 1, n, chosen | (1 << v), adj, best);
            }
            go(v + 1, n, chosen, adj, best);
        }
        go(0, n, 0, &adj, &mut best);
        best as usize
    }
}
