//! High-order flat-derivative calculus on discretized measure space.

pub mod derivative;
pub mod functional;
pub mod transport;

pub use derivative::{
    flat_derivative_field, mixed_directional_derivative, spike_direction, taylor_remainder,
    taylor_remainder_with, DerivativeTensor, DirectionConstraint, DEFAULT_PROBE_STEP,
};
pub use functional::{
    wrapped_gaussian, AnalyticFunctional, LinearFunctional, MeasureFunctional, PhiSpec,
    SquaredLinearFunctional,
};
pub use transport::{w1_distance, w1_distance_with_potential};
