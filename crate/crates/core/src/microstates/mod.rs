//! Microstate spaces: membership, volumes, normalized entropy and the
//! independent-join volume ratio.

mod join;
mod membership;
mod spec;
mod volume;

pub use join::{
    effective_sample_size, independent_join_ratio, independent_join_ratio_direct, JoinRatio, McmcConfig,
};
pub use membership::{existential_membership, is_microstate, ExistentialVerdict, MembershipConfig, Verdict};
pub use spec::{Constraint, NeighborhoodSpec, SpecKind};
pub(crate) use volume::{collect_hits, log_mean_exp, smoke_hits};
pub use volume::{
    covering_upper_bound, estimate_entropy, estimate_volume, EntropyEstimate, EntropyTrend, VolumeEstimate,
    DEFAULT_MAX_N, MAX_SAMPLES, MIN_SAMPLES, Z95,
};
