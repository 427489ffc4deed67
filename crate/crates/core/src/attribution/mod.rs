//! Brain-cluster attribution: randomized masking trials over the cluster
//! set, per-category accuracy under each mask, and ridge-regression
//! estimates of each cluster's marginal contribution.

mod campaign;
mod contribution;
mod ledger;
mod mask;
mod ridge;

pub use campaign::{
    run_masking_campaign, CampaignOutcome, CampaignParams, ExecProvider, HttpProvider,
    PredictionsProvider, TrialFailure,
};
pub use contribution::{
    contribution_map, export_contributions, sweep_lambda, CategoryContribution, ContributionMap,
    DEFAULT_LAMBDA,
};
pub use ledger::{assemble_design, LedgerMeta, MaskTrial, TrialLedger};
pub use mask::{sample_mask, MaskVector, DEFAULT_CLUSTER_COUNT, DEFAULT_MASK_DENSITY};
pub use ridge::{ridge_fit, RidgeFit};
