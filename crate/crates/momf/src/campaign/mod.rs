//! The propose–measure–learn loop for benchmark and dataset campaigns.

mod config;
mod diagnostics;
mod export;
mod impute;
mod scan;
mod state;

use thiserror::Error;
use uuid::Uuid;

use crate::datastore::StoreError;

pub use config::{CampaignConfig, Imputation, Mode};
pub use diagnostics::{Diagnostics, FidelityCount};
pub use export::{observations_from_csv, ExportKind};
pub use impute::{impute, ImputeReport};
pub use scan::{benchmark_scan, BenchmarkScan};
pub use state::{Campaign, IterationRecord, Observation, Phase, Problem, Proposal, ProposalStatus, Summary};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CampaignError {
    #[error("invalid campaign config: {0}")]
    Config(String),
    #[error("{op} is not allowed while the campaign is {phase}")]
    Phase { op: &'static str, phase: Phase },
    #[error("{op} is only available in {needed:?} mode")]
    WrongMode { op: &'static str, needed: Mode },
    #[error("no proposal {0}")]
    UnknownProposal(Uuid),
    #[error("proposal {0} was already resolved")]
    AlreadyResolved(Uuid),
    #[error("expected {expected} objective values, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("measurements must be finite")]
    NonFinite,
    #[error("evaluation costing {cost} would exceed the remaining budget {remaining}")]
    BudgetExceeded { cost: f64, remaining: f64 },
    #[error("imputation failed: {0}")]
    Imputation(String),
    #[error("no iteration has been recorded yet")]
    EmptyLog,
    #[error("malformed CSV: {0}")]
    Csv(String),
    #[error("malformed snapshot: {0}")]
    Snapshot(String),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Numeric(#[from] momf_core::Error),
}

impl CampaignError {
    pub fn code(&self) -> &'static str {
        match self {
            CampaignError::Config(_) => "invalid_config",
            CampaignError::Phase { .. } => "invalid_phase",
            CampaignError::WrongMode { .. } => "wrong_mode",
            CampaignError::UnknownProposal(_) => "unknown_proposal",
            CampaignError::AlreadyResolved(_) => "already_resolved",
            CampaignError::Arity { .. } => "arity_mismatch",
            CampaignError::NonFinite => "non_finite",
            CampaignError::BudgetExceeded { .. } => "budget_exceeded",
            CampaignError::Imputation(_) => "imputation",
            CampaignError::EmptyLog => "empty_log",
            CampaignError::Csv(_) => "csv",
            CampaignError::Snapshot(_) => "snapshot",
            CampaignError::Store(e) => e.code(),
            CampaignError::Numeric(_) => "numeric",
        }
    }
}

/// Mixes a seed with a stream index; used for every per-iteration sub-seed.
pub(crate) fn mix(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15).rotate_left(17);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
