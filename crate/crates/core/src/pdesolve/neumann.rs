//! Time-T solution operator of the zero-flux drift–diffusion equation on the
//! interval.
//!
//! Assembled with backward Euler rather than the fourth-order propagator:
//! `(I + dt·A)⁻¹` is the inverse of an M-matrix, so every entry of the
//! assembled operator is nonnegative and the spectrum sits in `(0, 1]` with
//! a simple eigenvalue 1 — the discrete Perron structure the drift-recovery
//! pipeline relies on. Stationarity of `e^{−f}` is exact for any one-step
//! scheme, so the eigenvector at 1 is unaffected by the time integrator.

use crate::error::{MilError, Result};
use crate::grid::GridKind;
use nalgebra::DMatrix;

use super::operators::{DriftPotential, FpOperator};

/// Dense propagator mapping initial density samples to time-`t_final`
/// density samples, built from `steps` backward-Euler sweeps.
pub fn neumann_solution_operator(
    drift: &DriftPotential,
    t_final: f64,
    steps: usize,
) -> Result<DMatrix<f64>> {
    if drift.domain().kind() != GridKind::NeumannInterval {
        return Err(MilError::InvalidGrid(
            "Neumann solution operator requires an interval domain".into(),
        ));
    }
    if !(t_final > 0.0) || steps == 0 {
        return Err(MilError::InvalidGrid(format!(
            "need t_final > 0 and steps >= 1, got {t_final} / {steps}"
        )));
    }
    let n = drift.domain().len();
    let dt = t_final / steps as f64;
    let op = FpOperator::from_potential(drift);
    // A = −L, step matrix X = (I + dt A)⁻¹
    let lhs = DMatrix::<f64>::identity(n, n) - op.matrix() * dt;
    let x = lhs
        .lu()
        .try_inverse()
        .ok_or_else(|| MilError::LinearSolveFailure("backward Euler step singular".into()))?;
    Ok(matrix_power(&x, steps))
}

fn matrix_power(m: &DMatrix<f64>, mut exp: usize) -> DMatrix<f64> {
    let mut result = DMatrix::<f64>::identity(m.nrows(), m.ncols());
    let mut base = m.clone();
    while exp > 0 {
        if exp & 1 == 1 {
            result = &result * &base;
        }
        base = &base * &base;
        exp >>= 1;
    }
    result
}
