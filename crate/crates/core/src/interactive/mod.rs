//! Auditing of the multi-round mechanisms: mean feedback, distribution
//! separation and segmentation.

mod iterate;
mod mean;
mod separation;
mod skv;

pub use iterate::{audit_iterations, run_group, run_iterations, IterationAudit, IterationStep, IterationTrace};
pub use mean::{estimate_mean, MeanEstimate};
pub use separation::{
    audit_mean, audit_mean_eps, stage1_collect, stage2_separate, MeanRound, Separated, SeparationConfig,
};
pub use skv::{skv_audit, SkvConfig, SkvRound};
