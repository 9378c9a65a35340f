//! Numerical laboratory for cusp maps: piecewise-smooth interval maps whose
//! branches may end in flat critical points, cusps or poles.
//!
//! The crate is organised bottom-up:
//!
//! * [`maps`]: interval maps, the conjugacy kernel and the explicit families
//!   (tent, `g_alpha`, `f_alpha`, `g_b`), with extended-precision points.
//! * [`calculus`]: Hölder checks, distortion constants and iterate derivatives.
//! * [`ergodic`]: Birkhoff averages, integrability classification, entropy,
//!   local dimension, invariant densities.
//! * [`extension`]: backward orbits and pullback contraction.
//! * [`inducing`]: nice intervals, induced full Markov maps, transfer operators.

pub mod calculus;
pub mod ergodic;
pub mod error;
pub mod extension;
pub mod inducing;
pub mod maps;
pub mod numeric;

pub use error::{Error, Result};
pub use maps::{
    Branch, BoundaryTag, ConjugacyKernel, MapKind, OpenInterval, Orientation, PiecewiseMap, Point,
    Side, TentConjugacy,
};
