//! Nice intervals, induced full-branch Markov maps and the measures they carry.

mod build;
mod returning;
mod transfer;

pub use build::{
    build_induced, markov_stats, pullback_components, InducedBranch, InducedHolder, InducedMarkovMap, MarkovStats,
    HOLDER_EXPONENT, MAX_RETURN_ORDER, ONTO_TOLERANCE,
};
pub use returning::{is_regularly_returning, periodic_points, tent_periodic_points, ReturnVerdict, RETURN_TOLERANCE};
pub use transfer::{spread_measure, transfer_density, transfer_step, TransferResult};
