//! End-to-end certification: runs the whole pipeline and records every
//! intermediate object and check verdict in a self-contained certificate.
//!
//! Certificates hold plain sorted id lists rather than bit masks so that the
//! independent checker (see `checker`) can re-validate them without touching
//! any of the construction code. Field order is fixed; serialization is
//! byte-deterministic for identical inputs.

use serde::{Deserialize, Serialize};

use crate::decomposition::{run_decomposition, Policy, SubfamilyRule};
use crate::freepairs::{build_digraph, count_free, max_independent_set_forest, verify_digraph};
use crate::privatepairs::{select_private_pairs, verify_double_cover, verify_pair_lemmas};
use crate::report::{all_ok, ClauseResult};
use crate::setsystem::{binomial, validate_nm_system, SetFamily, ValidationError};
use crate::skew::{assemble_skew_system, build_m_sets, skew_bound_check, verify_skew};

pub const CERTIFICATE_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateStatus {
    /// Full pipeline ran and every check was recorded.
    Complete,
    /// Valid system with fewer sets than a stage needs; only the arithmetic
    /// bounds are checked.
    OutOfScopeEll,
    /// Input failed validation; no pipeline was run.
    InvalidInput,
    /// A pipeline step failed on a valid input; the failure is embedded.
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyRecord {
    pub min_stage_size: usize,
    pub subfamily_rule: SubfamilyRule,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputRecord {
    pub n: u32,
    pub sets: Vec<Vec<u32>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamsRecord {
    pub k: u32,
    pub m: u32,
    pub ell: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationRecord {
    pub valid: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params: Option<ParamsRecord>,
    /// Error code and witness rendering for invalid inputs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// The two headline comparisons for n.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundsRecord {
    pub n: u32,
    /// m^2 + 6m + 2; the bound the pipeline certifies.
    pub certified_bound: u64,
    pub certified_ok: bool,
    /// C(m+2,2); conjectured, reported alongside.
    pub conjectured_bound: u64,
    pub conjectured_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    pub j: usize,
    pub members: Vec<usize>,
    pub kernel: Vec<(usize, u32)>,
    /// Member remainders after removing all kernels up to this stage.
    pub remainders: Vec<Vec<u32>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecompositionRecord {
    pub t: usize,
    pub stages: Vec<StageRecord>,
    pub lifetimes: Vec<usize>,
    pub kernel_vertices: Vec<u32>,
    pub garbage: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleRecord {
    pub rule: String,
    pub from: u32,
    pub to: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairRecord {
    pub owner: usize,
    pub time: usize,
    pub anchor: u32,
    pub non_anchor: u32,
    pub rules: Vec<RuleRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArcRecord {
    pub from: (usize, usize),
    pub to: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DigraphRecord {
    pub vertices: Vec<(usize, usize)>,
    pub arcs: Vec<ArcRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FreeMarkingRecord {
    /// The independent set F as (owner, stage), ascending.
    pub independent: Vec<(usize, usize)>,
    /// ceil(|A| / 2), the 2-coloring floor F must meet.
    pub floor: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FreeCountRecord {
    pub free_pairs: usize,
    /// n - 3m (the floor is half of this).
    pub floor_doubled: i64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MSetRecord {
    pub owner: usize,
    pub stage: usize,
    pub set: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkewEntryRecord {
    pub owner: usize,
    pub stage: usize,
    pub a: Vec<u32>,
    pub b: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkewSystemRecord {
    pub r: u32,
    pub s: u32,
    pub entries: Vec<SkewEntryRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkewCheckRecord {
    pub valid: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkewBoundRecord {
    pub h: u64,
    pub bound: u64,
    pub ok: bool,
    pub tight: bool,
}

/// The arithmetic chain from the free-pair floor through the skew bound to
/// the headline inequality, recomputed rather than assumed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainRecord {
    pub n: u32,
    pub m: u32,
    pub h: u64,
    /// 2h >= n - 3m; vacuous (and true) when n <= 3m.
    pub lower_ok: bool,
    pub vacuous: bool,
    /// h <= C(m+2,2).
    pub upper_ok: bool,
    /// 3m + 2*C(m+2,2) equals m^2+6m+2 and n respects it.
    pub implies_certified: bool,
}

/// Self-contained transcript of one pipeline run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub version: u32,
    pub status: CertificateStatus,
    pub policy: PolicyRecord,
    pub input: InputRecord,
    pub validation: ValidationRecord,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bounds: Option<BoundsRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decomposition: Option<DecompositionRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub observations: Option<Vec<ClauseResult>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub double_cover: Option<ClauseResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pairs: Option<Vec<PairRecord>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pair_lemmas: Option<Vec<ClauseResult>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub digraph: Option<DigraphRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub digraph_checks: Option<Vec<ClauseResult>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub free_marking: Option<FreeMarkingRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub free_count: Option<FreeCountRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_sets: Option<Vec<MSetRecord>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skew_system: Option<SkewSystemRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skew_check: Option<SkewCheckRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skew_bound: Option<SkewBoundRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chain: Option<ChainRecord>,
    /// Pipeline failures and findings, in discovery order.
    pub findings: Vec<String>,
    /// True iff every recorded check passed (or was vacuous).
    pub ok: bool,
}

impl Certificate {
    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("certificate serialization cannot fail")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serialization cannot fail")
    }

    pub fn from_json_str(text: &str) -> Result<Certificate, serde_json::Error> {
        serde_json::from_str(text)
    }
}

fn bounds_record(n: u32, m: u32) -> BoundsRecord {
    let m64 = m as u64;
    let certified = m64 * m64 + 6 * m64 + 2;
    let conjectured = binomial(m64 + 2, 2).expect("small binomial");
    BoundsRecord {
        n,
        certified_bound: certified,
        certified_ok: (n as u64) <= certified,
        conjectured_bound: conjectured,
        conjectured_ok: (n as u64) <= conjectured,
    }
}

/// Runs validation and, when applicable, the full pipeline, recording every
/// object and verdict. Always returns a certificate; failures are embedded.
pub fn certify(family: &SetFamily, policy: &Policy) -> Certificate {
    let input = InputRecord {
        n: family.n(),
        sets: family.sets().iter().map(|s| s.to_vec()).collect(),
    };
    let policy_record = PolicyRecord {
        min_stage_size: policy.min_stage_size,
        subfamily_rule: policy.subfamily_rule,
    };
    let mut cert = Certificate {
        version: CERTIFICATE_VERSION,
        status: CertificateStatus::InvalidInput,
        policy: policy_record,
        input,
        validation: ValidationRecord {
            valid: false,
            params: None,
            error: None,
        },
        bounds: None,
        decomposition: None,
        observations: None,
        double_cover: None,
        pairs: None,
        pair_lemmas: None,
        digraph: None,
        digraph_checks: None,
        free_marking: None,
        free_count: None,
        m_sets: None,
        skew_system: None,
        skew_check: None,
        skew_bound: None,
        chain: None,
        findings: Vec::new(),
        ok: false,
    };

    let system = match validate_nm_system(family) {
        Ok(sys) => sys,
        Err(err) => {
            cert.validation.error = Some(validation_code(&err));
            cert.findings.push(err.to_string());
            return cert;
        }
    };
    cert.validation = ValidationRecord {
        valid: true,
        params: Some(ParamsRecord {
            k: system.k(),
            m: system.m(),
            ell: system.ell(),
        }),
        error: None,
    };
    let bounds = bounds_record(system.n(), system.m());
    cert.bounds = Some(bounds);

    if system.ell() < policy.min_stage_size {
        cert.status = CertificateStatus::OutOfScopeEll;
        cert.ok = bounds.certified_ok;
        if !bounds.certified_ok {
            cert.findings
                .push(format!("n={} exceeds the certified bound", system.n()));
        }
        return cert;
    }

    cert.status = CertificateStatus::Failed;
    let d = match run_decomposition(&system, policy) {
        Ok(d) => d,
        Err(err) => {
            cert.findings.push(err.to_string());
            return cert;
        }
    };
    cert.decomposition = Some(DecompositionRecord {
        t: d.t(),
        stages: d
            .stages()
            .iter()
            .zip(d.remainders())
            .map(|(s, rems)| StageRecord {
                j: s.j,
                members: s.members.clone(),
                kernel: s.kernel.clone(),
                remainders: rems.iter().map(|r| r.to_vec()).collect(),
            })
            .collect(),
        lifetimes: d.lifetimes().to_vec(),
        kernel_vertices: d.kernel_vertices().to_vec(),
        garbage: d.garbage().to_vec(),
    });
    let observations = verify_observations_record(&d);
    cert.observations = Some(observations.clone());
    cert.double_cover = Some(verify_double_cover(&d));

    let ledger = match select_private_pairs(&d) {
        Ok(l) => l,
        Err(err) => {
            cert.findings.push(err.to_string());
            return cert;
        }
    };
    cert.pairs = Some(
        ledger
            .pairs()
            .iter()
            .map(|p| PairRecord {
                owner: p.owner,
                time: p.time,
                anchor: p.anchor,
                non_anchor: p.non_anchor,
                rules: p
                    .rules
                    .iter()
                    .map(|r| RuleRecord {
                        rule: match r.rule {
                            crate::privatepairs::ReplacementRule::PromoteEarlierKernel => {
                                "promote_earlier_kernel".to_string()
                            }
                            crate::privatepairs::ReplacementRule::ShiftSameStageKernel => {
                                "shift_same_stage_kernel".to_string()
                            }
                        },
                        from: r.from,
                        to: r.to,
                    })
                    .collect(),
            })
            .collect(),
    );
    let pair_lemmas = verify_pair_lemmas(&ledger, &d);
    cert.pair_lemmas = Some(pair_lemmas.clone());

    let digraph = build_digraph(&ledger, &d);
    cert.digraph = Some(DigraphRecord {
        vertices: digraph
            .vertices
            .iter()
            .map(|v| (v.owner, v.stage))
            .collect(),
        arcs: digraph
            .arcs
            .iter()
            .map(|a| ArcRecord {
                from: (a.from.owner, a.from.stage),
                to: (a.to.owner, a.to.stage),
            })
            .collect(),
    });
    let digraph_report = verify_digraph(&digraph, &d);
    cert.digraph_checks = Some(digraph_report.clauses.clone());

    let marking = match max_independent_set_forest(&digraph) {
        Ok(m) => m,
        Err(err) => {
            cert.findings.push(err.to_string());
            return cert;
        }
    };
    cert.free_marking = Some(FreeMarkingRecord {
        independent: marking
            .independent
            .iter()
            .map(|v| (v.owner, v.stage))
            .collect(),
        floor: digraph.vertex_count().div_ceil(2),
    });
    let free = count_free(&marking, &system);
    cert.free_count = Some(FreeCountRecord {
        free_pairs: free.free_pairs,
        floor_doubled: free.floor_doubled,
        ok: free.ok,
    });

    let msets = match build_m_sets(&d, &ledger, &marking) {
        Ok(t) => t,
        Err(err) => {
            cert.findings.push(err.to_string());
            return cert;
        }
    };
    cert.m_sets = Some(
        msets
            .rows()
            .iter()
            .enumerate()
            .flat_map(|(owner, row)| {
                row.iter().enumerate().map(move |(stage, s)| MSetRecord {
                    owner,
                    stage,
                    set: s.to_vec(),
                })
            })
            .collect(),
    );

    let skew = assemble_skew_system(&ledger, &marking, &msets, system.m());
    // entry order is (stage, owner); free_pairs are sorted by (owner, stage)
    let mut entry_keys: Vec<(usize, usize)> = marking
        .free_pairs
        .iter()
        .map(|&(owner, stage)| (stage, owner))
        .collect();
    entry_keys.sort();
    cert.skew_system = Some(SkewSystemRecord {
        r: skew.r,
        s: skew.s,
        entries: entry_keys
            .iter()
            .zip(&skew.entries)
            .map(|(&(stage, owner), e)| SkewEntryRecord {
                owner,
                stage,
                a: e.a_side.to_vec(),
                b: e.b_side.to_vec(),
            })
            .collect(),
    });
    let skew_report = verify_skew(&skew);
    cert.skew_check = Some(SkewCheckRecord {
        valid: skew_report.valid,
        witness: skew_report.witness.as_ref().map(|w| format!("{w:?}")),
    });
    let skew_bound = match skew_bound_check(&skew) {
        Ok(b) => b,
        Err(err) => {
            cert.findings.push(err.to_string());
            return cert;
        }
    };
    cert.skew_bound = Some(SkewBoundRecord {
        h: skew_bound.h,
        bound: skew_bound.bound,
        ok: skew_bound.ok,
        tight: skew_bound.tight,
    });

    let (n, m, h) = (system.n() as i64, system.m() as i64, skew.h() as i64);
    let vacuous = n <= 3 * m;
    let lower_ok = vacuous || 2 * h >= n - 3 * m;
    let conjectured = bounds.conjectured_bound as i64;
    let upper_ok = h <= conjectured;
    // 3m + 2*C(m+2,2) = m^2 + 6m + 2, then chain the two inequalities
    let implied_bound = 3 * m + 2 * conjectured;
    let implies_certified =
        implied_bound == bounds.certified_bound as i64 && (vacuous || n <= implied_bound);
    cert.chain = Some(ChainRecord {
        n: system.n(),
        m: system.m(),
        h: h as u64,
        lower_ok,
        vacuous,
        upper_ok,
        implies_certified,
    });

    cert.status = CertificateStatus::Complete;
    let checks_ok = all_ok(&observations)
        && cert.double_cover.as_ref().map(|c| c.ok()).unwrap_or(false)
        && all_ok(&pair_lemmas)
        && all_ok(&digraph_report.clauses)
        && marking.size() >= digraph.vertex_count().div_ceil(2)
        && free.ok
        && skew_report.valid
        && skew_bound.ok
        && lower_ok
        && upper_ok
        && implies_certified
        && bounds.certified_ok;
    if !checks_ok && cert.findings.is_empty() {
        cert.findings
            .push("one or more recorded checks failed".to_string());
    }
    cert.ok = checks_ok;
    cert
}

fn verify_observations_record(d: &crate::decomposition::Decomposition) -> Vec<ClauseResult> {
    crate::decomposition::verify_observations(d)
}

/// Stable machine-readable code for a validation failure, used in
/// certificates and command output.
pub fn validation_code(err: &ValidationError) -> String {
    match err {
        ValidationError::NonUniformSizes => "non_uniform_sizes".to_string(),
        ValidationError::UnusedVertex { vertex } => format!("unused_vertex:{vertex}"),
        ValidationError::KTooSmall { k } => format!("k_too_small:{k}"),
        ValidationError::EllTooSmall { ell } => format!("ell_too_small:{ell}"),
        ValidationError::PropertyIFailed { witness } => match witness {
            crate::setsystem::PropertyIWitness::CommonVertex { vertex } => {
                format!("property_i_failed:common_vertex:{vertex}")
            }
            crate::setsystem::PropertyIWitness::DropOneEmpty { index } => {
                format!("property_i_failed:drop_one_empty:{index}")
            }
        },
        ValidationError::PropertyIIFailed { witness } => {
            let ids: Vec<String> = witness.iter().map(|v| v.to_string()).collect();
            format!("property_ii_failed:{}", ids.join(","))
        }
    }
}
