//! Set-pair system toolkit for (n,m)-families of k-sets.
//!
//! The pipeline validates an input family, runs the staged kernel
//! decomposition, selects private pairs, marks free pairs through the kernel
//! digraph, assembles a skew (2,m) set-pair system, and certifies the bound
//! `n <= m^2 + 6m + 2` together with the conjectured `n <= C(m+2,2)`. A
//! self-contained certificate records every intermediate object and check;
//! an independent checker re-validates certificates without touching the
//! construction code. A desk-scale exhaustive search supplies witnesses.

pub mod certificate;
pub mod checker;
pub mod decomposition;
pub mod freepairs;
pub mod privatepairs;
pub mod report;
pub mod search;
pub mod setsystem;
pub mod skew;

pub use search::{
    canonical_form, enumerate_systems, enumerate_with_resume, extremal_n, permute_family,
    random_critical_family, ExtremalReport, ResumePoint, SearchCount, SearchError, SearchResult,
    SearchSpec,
};

pub use certificate::{certify, Certificate, CertificateStatus};
pub use checker::{check_certificate, MalformedCertificate};

pub use skew::{
    assemble_skew_system, build_m_sets, skew_bound_check, verify_skew, MSetTable, SetPairEntry,
    SetPairSystem, SkewBoundReport, SkewError, SkewReport, SkewWitness,
};

pub use freepairs::{
    build_digraph, count_free, max_independent_set_forest, verify_digraph, Arc, DigraphReport,
    ForestError, FreeCountReport, FreeMarking, KernelDigraph, KernelVertex,
};

pub use privatepairs::{
    cover_count, find_private_pair, select_private_pairs, verify_double_cover,
    verify_pair_lemmas, Pair, PairError, PairLedger, PrivatePair, ReplacementRule,
    RuleApplication,
};

pub use decomposition::{
    minimal_critical_subfamilies, run_decomposition, run_decomposition_mechanics,
    verify_observations, Decomposition, DecompositionError, GenuineParams, Policy, Stage,
    SubfamilyRule,
};

pub use report::{all_ok, CheckStatus, ClauseResult};
pub use setsystem::{
    binomial, bounds_for_m, check_property_i, check_property_ii, uncovered_triples,
    validate_nm_system, BoundTable, BoundsError, FamilyError, FamilyJsonError, NMSystem,
    PropertyIReport, PropertyIWitness, PropertyIiReport, SetFamily, TripleHypergraph,
    ValidationError, VSet, MAX_UNIVERSE,
};
