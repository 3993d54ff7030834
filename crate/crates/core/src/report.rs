//! Shared pass/fail reporting primitives used by the verification layers.
//!
//! Every structural lemma check in the pipeline produces a [`ClauseResult`];
//! certificates embed these verbatim so a reader can see exactly which clause
//! failed and on what witness.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    /// The clause does not apply to this input (e.g. bounds that need a
    /// validated system when running in mechanics mode).
    Skipped,
}

/// Outcome of one named check clause.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClauseResult {
    pub name: String,
    pub status: CheckStatus,
    /// Human-readable witness or reason; present for failures and skips.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

impl ClauseResult {
    pub fn pass(name: &str) -> Self {
        ClauseResult {
            name: name.to_string(),
            status: CheckStatus::Pass,
            witness: None,
        }
    }

    pub fn fail(name: &str, witness: impl Into<String>) -> Self {
        ClauseResult {
            name: name.to_string(),
            status: CheckStatus::Fail,
            witness: Some(witness.into()),
        }
    }

    pub fn skipped(name: &str, reason: impl Into<String>) -> Self {
        ClauseResult {
            name: name.to_string(),
            status: CheckStatus::Skipped,
            witness: Some(reason.into()),
        }
    }

    pub fn passed(&self) -> bool {
        self.status == CheckStatus::Pass
    }

    /// Pass unless failed; skipped clauses do not count against a report.
    pub fn ok(&self) -> bool {
        self.status != CheckStatus::Fail
    }
}

/// True iff no clause in the slice failed.
pub fn all_ok(clauses: &[ClauseResult]) -> bool {
    clauses.iter().all(|c| c.ok())
}
