//! Fokker–Planck, backward-dual, stationary and spectral kernels shared by
//! the forward/inverse pipelines.

pub mod eigen;
pub mod evolve;
pub mod neumann;
pub mod operators;

pub use eigen::{fp_eigensystem, real_eigenvalues, EigenSystem};
pub use evolve::{
    backward_dual_solve, evolve_operator, fp_solve, EvolutionField, LinearPropagator, TimeGrid,
};
pub use neumann::neumann_solution_operator;
pub use operators::{bernoulli, stationary_measure, DriftPotential, FpOperator};
