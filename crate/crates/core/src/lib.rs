//! Real interference alignment with joint receive-antenna processing for
//! constant-coefficient MIMO interference networks.
//!
//! The crate is organised bottom-up:
//!
//! * [`net_model`] holds network configurations and channel sampling.
//! * [`directions`] builds monomial transmit directions as exact exponent vectors.
//! * [`align`] turns directions into transmit signals and per-receiver generator
//!   matrices, and certifies alignment by exact exponent lookup.
//! * [`lattice`] picks code parameters, enumerates minimum distances and runs
//!   exhaustive maximum-likelihood decoding.
//! * [`regions`] computes achievable and outer DoF regions in exact rationals.
//! * [`sim`] runs power sweeps and estimates empirical DoF slopes.
//! * [`cli`] is the command-line front end used by the `rialign` binary.

pub mod align;
pub mod cli;
pub mod directions;
pub mod lattice;
pub mod net_model;
pub mod regions;
pub mod sim;
mod seeds;

pub use align::{
    allocate_streams, build_receive_model, encode, propagate, verify_alignment, AlignmentReport,
    Message, ReceiveModel, Scheme, StreamAllocation, SymbolVector, Weighting,
};
pub use directions::{
    build_directions, direction_counts, eval_direction, families, DeltaTag, Deltas, Direction,
    DirectionCounts, DirectionSet, Family, Generator, GeneratorIndex, SetKind,
};
pub use lattice::{
    choose_code_params, error_prob_bound, min_distance, min_distance_in, ml_decode,
    monte_carlo_error, whitened_matrix, CodeParams, Decoder, DistanceReport, ErrorBound,
    ErrorEstimate, SearchBox,
};
pub use net_model::{make_config, sample_channel, ChannelMatrix, ConfigFile, NetworkConfig, NetworkKind};
pub use regions::{
    inner_region, outer_region, outer_total_dof, total_dof_formulas, DofPoint, DofRegion,
    Rational,
};
pub use sim::{
    run_link_experiment, slope_estimate, BoxKind, ExperimentPlan, SlopeEstimate, SlopeReport,
};

/// Errors raised by every fallible operation in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("cap exceeded: {what} requires {required}, cap is {cap}")]
    CapExceeded {
        what: String,
        required: String,
        cap: String,
    },
    #[error("alignment violation: {0}")]
    AlignmentViolation(String),
    #[error("numeric overflow: {0}")]
    Overflow(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn cap(what: impl Into<String>, required: impl ToString, cap: impl ToString) -> Self {
        Error::CapExceeded {
            what: what.into(),
            required: required.to_string(),
            cap: cap.to_string(),
        }
    }
}
