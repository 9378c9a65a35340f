//! Estimators and classifiers for invariant measures: Lyapunov exponents,
//! integrability of `log|Df|`, entropy, local dimension and densities.

mod density;
mod dimension;
mod entropy;
mod integrability;
mod lyapunov;
mod series;

pub use density::{compare_exact, density_histogram, exact_masses, DensityEstimate};
pub use dimension::{geometric_radii, local_dimension, LocalDimensionEstimate, PointSlope, FRACTION_RANGE};
pub use entropy::{
    bernoulli_entropy, entropy_word_count, sample_bernoulli_measure, WordCountEstimate,
    BOUNDARY_NUDGE,
};
pub use integrability::{
    singular_integral_classify, ApproachSide, DecayModel, IntegrabilityVerdict, Verdict, Weight,
    ANNULUS_NODES,
};
pub use lyapunov::{birkhoff_lyapunov, LyapunovEstimate};
pub use series::{infinite_exponent_series, ruelle_check, SeriesReport, SeriesVerdict};
