//! Forward solvers and constructive inverse-reconstruction pipelines for
//! evolutionary transport PDEs over discretized probability measures, with a
//! high-order derivative calculus on measure space as engine and test oracle.
//!
//! Module map:
//! - [`grid`]: uniform torus/interval grids, measures, fields.
//! - [`wcalculus`]: flat-derivative calculus, Taylor machinery, analytic
//!   functionals, Wasserstein-1 distance.
//! - [`pdesolve`]: Fokker–Planck and backward dual kernels, stationary
//!   measures, eigensystems, Neumann solution operators.
//! - [`mfc`]: the control value function, its linearization and fundamental
//!   solution, spectral running-cost recovery, the time-dependent
//!   non-uniqueness demonstration.
//! - [`mfg`]: coupled HJB/Fokker–Planck forward solver, static and
//!   quasi-static solutions, local-cost and Hamiltonian-coefficient recovery.
//! - [`boundary`]: Neumann-interval counterparts, boundary traces, semigroup
//!   drift recovery.
//! - [`cli`]: experiment configs, scenario runner, reports.

pub mod boundary;
pub mod cli;
pub mod error;
pub mod grid;
pub mod mfc;
pub mod mfg;
pub mod pdesolve;
pub mod spectral;
pub mod wcalculus;

pub use error::{MilError, Result};
pub use grid::{GridDomain, GridField, GridKind, GridMeasure};
