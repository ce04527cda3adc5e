//! Non-interactive auditing: input construction, histogram collection and ε_lb estimation.

mod collect;
mod encode;
mod estimate;
mod histogram;
mod inputs;

pub use collect::{
    collect, collect_views, effective_ownership, extract_pair, hkv_collect, owns, simulate_group, vkv_collect,
    vkv_extract, vkv_positions, Auditor, View, CHUNK_USERS,
};
pub use encode::{canonical_decode, canonical_encode, encode_into};
pub use estimate::{estimate_eps_lb, estimate_with, intersect, AuditReport, Direction, Mode, OutcomeBound};
pub use histogram::{HistogramMeta, OutputHistogram};
pub use inputs::{construct_inputs, InputPairSpec, Target};
