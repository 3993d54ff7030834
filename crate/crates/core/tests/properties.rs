//! Property suites for the structural invariants: the two property-(ii)
//! code paths agree, triple sets shrink as families grow, decomposition and
//! selection are deterministic and policy-robust, and emitted search results
//! are pairwise non-isomorphic.

use proptest::prelude::*;

use nmsys::decomposition::{
    run_decomposition_mechanics, verify_observations, Policy, SubfamilyRule,
};
use nmsys::privatepairs::select_private_pairs;
use nmsys::report::CheckStatus;
use nmsys::search::{canonical_form, enumerate_systems, permute_family, random_critical_family, SearchSpec};
use nmsys::setsystem::{
    check_property_i, check_property_ii, uncovered_triples, validate_nm_system, SetFamily, VSet,
};

/// A raw random family over a small universe; no structural guarantees.
fn raw_family_strategy() -> impl Strategy<Value = SetFamily> {
    (4u32..=8, 1usize..=5).prop_flat_map(|(n, ell)| {
        let full: u64 = (1 << n) - 1;
        proptest::collection::vec(1u64..=full, ell)
            .prop_map(move |masks| {
                let sets = masks.into_iter().map(VSet::from_mask).collect();
                SetFamily::new(n, sets).expect("masks fit the universe")
            })
    })
}

/// The direct two-loop reading of property (ii): for every (k+1)-subset X,
/// scan the family per triple of X.
fn naive_property_ii(family: &SetFamily, k: u32) -> bool {
    let n = family.n();
    let size = k as usize + 1;
    if size > n as usize {
        return true;
    }
    let pool: Vec<u32> = (1..=n).collect();
    let mut idx: Vec<usize> = (0..size).collect();
    loop {
        let x: Vec<u32> = idx.iter().map(|&i| pool[i]).collect();
        let mut found = false;
        'triples: for a in 0..x.len() {
            for b in a + 1..x.len() {
                for c in b + 1..x.len() {
                    let t = VSet::from_ids([x[a], x[b], x[c]]);
                    if !family.sets().iter().any(|s| t.is_subset_of(*s)) {
                        found = true;
                        break 'triples;
                    }
                }
            }
        }
        if !found {
            return false;
        }
        // next combination
        let mut pos = size;
        loop {
            if pos == 0 {
                return true;
            }
            pos -= 1;
            if idx[pos] != pos + pool.len() - size {
                break;
            }
            if pos == 0 {
                return true;
            }
        }
        idx[pos] += 1;
        for p in pos + 1..size {
            idx[p] = idx[p - 1] + 1;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    /// The precomputing implementation and the direct scan agree.
    #[test]
    fn property_ii_two_code_paths_agree(fam in raw_family_strategy(), k in 3u32..=5) {
        prop_assume!(k < fam.n());
        let fast = check_property_ii(&fam, k).holds;
        let slow = naive_property_ii(&fam, k);
        prop_assert_eq!(fast, slow);
    }

    /// Adding a set never adds uncovered triples.
    #[test]
    fn uncovered_triples_shrink(fam in raw_family_strategy(), extra in 1u64..=255) {
        let full: u64 = (1 << fam.n()) - 1;
        let extra = extra & full;
        prop_assume!(extra != 0);
        let before = uncovered_triples(&fam).triples;
        let mut sets = fam.sets().to_vec();
        sets.push(VSet::from_mask(extra));
        let bigger = SetFamily::new(fam.n(), sets).unwrap();
        let after = uncovered_triples(&bigger).triples;
        for t in &after {
            prop_assert!(before.contains(t));
        }
    }

    /// Validated systems carry exactly the derived parameters.
    #[test]
    fn validated_parameters_are_exact(seed in 0u64..5000) {
        let n = 4 + (seed % 9) as u32;
        let ell = 2 + (seed as usize % 3);
        prop_assume!(ell <= n as usize);
        let fam = random_critical_family(n, ell, seed).unwrap();
        if let Ok(sys) = validate_nm_system(&fam) {
            prop_assert_eq!(sys.n(), fam.n());
            for s in fam.sets() {
                prop_assert_eq!(s.len(), sys.k());
            }
            prop_assert_eq!(sys.m(), sys.n() - sys.k());
            prop_assert_eq!(fam.vertex_union(), VSet::full(fam.n()));
        }
    }

    /// Identical seed, identical family; the decomposition and ledger are
    /// bytewise reproducible.
    #[test]
    fn pipeline_is_deterministic(seed in 0u64..5000) {
        let n = 5 + (seed % 8) as u32;
        let ell = 4usize.min(n as usize);
        let fam_a = random_critical_family(n, ell, seed).unwrap();
        let fam_b = random_critical_family(n, ell, seed).unwrap();
        prop_assert_eq!(&fam_a, &fam_b);
        let d_a = run_decomposition_mechanics(&fam_a, &Policy::default()).unwrap();
        let d_b = run_decomposition_mechanics(&fam_b, &Policy::default()).unwrap();
        prop_assert_eq!(format!("{d_a:?}"), format!("{d_b:?}"));
        match (select_private_pairs(&d_a), select_private_pairs(&d_b)) {
            (Ok(la), Ok(lb)) => {
                prop_assert_eq!(
                    serde_json::to_string(la.pairs()).unwrap(),
                    serde_json::to_string(lb.pairs()).unwrap()
                );
            }
            (Err(ea), Err(eb)) => prop_assert_eq!(ea, eb),
            (a, b) => prop_assert!(false, "diverged: {a:?} vs {b:?}"),
        }
    }

    /// Picking the lexicographically last subfamily still yields a
    /// decomposition whose structural observations hold.
    #[test]
    fn alternate_subfamily_policy_is_safe(seed in 0u64..2000) {
        let n = 6 + (seed % 7) as u32;
        let fam = random_critical_family(n, 4, seed).unwrap();
        prop_assume!(check_property_i(&fam).holds);
        let policy = Policy {
            subfamily_rule: SubfamilyRule::LexLargest,
            ..Policy::default()
        };
        let d = run_decomposition_mechanics(&fam, &policy).unwrap();
        for c in verify_observations(&d) {
            prop_assert_ne!(c.status, CheckStatus::Fail, "{:?}", c);
        }
    }
}

/// Randomized permutation probing: no two emitted canonical families are
/// images of one another.
#[test]
fn emitted_families_are_pairwise_non_isomorphic() {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let spec = SearchSpec {
        n: 8,
        k: None,
        ell_min: 4,
        ell_max: 64,
        budget: None,
        canonicalize: true,
        seed: 0,
    };
    let result = enumerate_systems(&spec).unwrap();
    assert!(result.exhausted);
    let families: Vec<Vec<u64>> = result
        .systems
        .iter()
        .map(|f| f.sets().iter().map(|s| s.mask()).collect())
        .collect();
    // canonical forms differ pairwise
    for i in 0..families.len() {
        for j in i + 1..families.len() {
            assert_ne!(
                canonical_form(8, &families[i]),
                canonical_form(8, &families[j])
            );
        }
    }
    // random probes: no permutation image of one equals another
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let i = (0..families.len()).collect::<Vec<_>>();
        let &a = i.choose(&mut rng).unwrap();
        let &b = i.choose(&mut rng).unwrap();
        if a == b {
            continue;
        }
        let mut perm: Vec<u32> = (0..8).collect();
        perm.shuffle(&mut rng);
        assert_ne!(permute_family(&families[a], &perm), families[b]);
    }
}
