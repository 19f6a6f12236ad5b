//! Eigendecomposition of the discrete Fokker–Planck spatial operator.
//!
//! The negative generator `A = −L` is diagonally similar to a symmetric
//! positive-semidefinite matrix (see `operators`), so eigenvalues come out
//! real and nonnegative, the lowest one is zero with eigenvector `e^{−f}`,
//! and the biorthonormal left eigenvectors are the symmetrized eigenvectors
//! scaled back — all exact at the discrete level.

use crate::error::{MilError, Result};
use crate::grid::GridField;
use nalgebra::DMatrix;

use super::operators::{DriftPotential, FpOperator};

/// Biorthonormalized eigenpairs of the negative Fokker–Planck generator:
/// `A E_k = λ_k E_k`, `⟨Ê_j, E_k⟩ = δ_jk` under quadrature, `λ` ascending.
#[derive(Clone, Debug)]
pub struct EigenSystem {
    pub drift: DriftPotential,
    pub lambdas: Vec<f64>,
    pub modes: Vec<GridField>,
    pub duals: Vec<GridField>,
}

impl EigenSystem {
    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    pub fn pair(&self, k: usize) -> (f64, &GridField, &GridField) {
        (self.lambdas[k], &self.modes[k], &self.duals[k])
    }

    /// Worst biorthonormality defect `max |⟨Ê_j, E_k⟩ − δ_jk|`.
    pub fn biorthonormality_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for j in 0..self.len() {
            for k in 0..self.len() {
                let ip = self.duals[j].inner(&self.modes[k]).unwrap();
                let target = if j == k { 1.0 } else { 0.0 };
                worst = worst.max((ip - target).abs());
            }
        }
        worst
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "lambda": self.lambdas,
            "E": self.modes.iter().map(|m| m.values().to_vec()).collect::<Vec<_>>(),
            "E_dual": self.duals.iter().map(|m| m.values().to_vec()).collect::<Vec<_>>(),
        })
    }
}

const EIGEN_IMAG_TOL: f64 = 1e-9;

/// First `k_count` eigenpairs (ascending eigenvalue) of the discrete negative
/// Fokker–Planck generator for the given drift.
pub fn fp_eigensystem(drift: &DriftPotential, k_count: usize) -> Result<EigenSystem> {
    let domain = drift.domain().clone();
    let n = domain.len();
    if k_count > n {
        return Err(MilError::EigSolverFailure(format!(
            "requested {k_count} modes from an N={n} grid"
        )));
    }
    let op = FpOperator::from_potential(drift);
    let sym = op.symmetrized_negative()?;
    let s = op.symmetrizer()?;

    let decomp = nalgebra::SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| decomp.eigenvalues[a].partial_cmp(&decomp.eigenvalues[b]).unwrap());

    let mut lambdas = Vec::with_capacity(k_count);
    let mut modes = Vec::with_capacity(k_count);
    let mut duals = Vec::with_capacity(k_count);
    for &col in order.iter().take(k_count) {
        let lambda = decomp.eigenvalues[col];
        if !lambda.is_finite() {
            return Err(MilError::EigSolverFailure("non-finite eigenvalue".into()));
        }
        let v = decomp.eigenvectors.column(col);
        // sign convention: largest-magnitude entry of E positive
        let mut e: Vec<f64> = (0..n).map(|i| s[i] * v[i]).collect();
        let mut dual: Vec<f64> = (0..n).map(|i| v[i] / (s[i] * domain.weight(i))).collect();
        let (mut arg, mut best) = (0usize, 0.0f64);
        for (i, &val) in e.iter().enumerate() {
            if val.abs() > best {
                best = val.abs();
                arg = i;
            }
        }
        if e[arg] < 0.0 {
            e.iter_mut().for_each(|x| *x = -*x);
            dual.iter_mut().for_each(|x| *x = -*x);
        }
        lambdas.push(lambda);
        modes.push(GridField::new(domain.clone(), e)?);
        duals.push(GridField::new(domain.clone(), dual)?);
    }
    Ok(EigenSystem { drift: drift.clone(), lambdas, modes, duals })
}

/// Dense eigenvalues of a general real matrix (real Schur); errors out if
/// any eigenvalue carries a meaningful imaginary part.
pub fn real_eigenvalues(matrix: &DMatrix<f64>) -> Result<Vec<f64>> {
    let eig = matrix.clone().complex_eigenvalues();
    let mut out = Vec::with_capacity(eig.len());
    for c in eig.iter() {
        if c.im.abs() > EIGEN_IMAG_TOL * (1.0 + c.re.abs()) {
            return Err(MilError::ComplexEigenvalue { imag: c.im });
        }
        out.push(c.re);
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridDomain;
    use crate::pdesolve::evolve::{fp_solve, TimeGrid};
    use std::f64::consts::PI;

    #[test]
    fn flat_drift_gives_fourier_modes() {
        let d = GridDomain::torus(64).unwrap();
        let drift = DriftPotential::zero(d);
        let sys = fp_eigensystem(&drift, 6).unwrap();
        // discrete Laplacian eigenvalues for the exponential-fitted flux at
        // f = 0 reduce to the standard 3-point stencil values
        let n = 64.0;
        let disc = |k: f64| 4.0 * n * n * (PI * k / n).sin().powi(2);
        assert!(sys.lambdas[0].abs() < 1e-8);
        for k in [1, 2] {
            let expect = disc(k as f64);
            for idx in [2 * k - 1, 2 * k] {
                let rel = (sys.lambdas[idx] - expect).abs() / expect;
                assert!(rel < 1e-10, "mode {idx}: {} vs {expect}", sys.lambdas[idx]);
            }
        }
        assert!(sys.biorthonormality_defect() < 1e-9);
    }

    #[test]
    fn ground_mode_is_stationary_density() {
        let d = GridDomain::torus(64).unwrap();
        let drift = DriftPotential::new(d.sample(|x| (2.0 * PI * x).cos())).unwrap();
        let sys = fp_eigensystem(&drift, 4).unwrap();
        assert!(sys.lambdas[0].abs() < 1e-8);
        // E0 proportional to e^{-f}
        let e0 = &sys.modes[0];
        let stat = drift.stationary_measure();
        let scale = e0.values()[0] / stat.density()[0];
        for i in 0..64 {
            let expect = scale * stat.density()[i];
            assert!((e0.values()[i] - expect).abs() < 1e-8 * scale.abs());
        }
        // eigenvalues nonnegative
        for &l in &sys.lambdas {
            assert!(l > -1e-9);
        }
    }

    #[test]
    fn eigenmode_evolves_diagonally() {
        let d = GridDomain::torus(128).unwrap();
        let drift = DriftPotential::new(d.sample(|x| (2.0 * PI * x).cos())).unwrap();
        let sys = fp_eigensystem(&drift, 3).unwrap();
        let (lambda, mode, _) = sys.pair(1);
        let tg = TimeGrid::span(0.1, 256).unwrap();
        let ev = fp_solve(&drift, mode, tg).unwrap();
        let sup = mode.linf_norm();
        let mut worst = 0.0f64;
        for n in 0..=256 {
            let decay = (-lambda * tg.time(n)).exp();
            let snap = ev.snapshot(n);
            for i in 0..128 {
                worst = worst.max((snap[i] - decay * mode.values()[i]).abs());
            }
        }
        assert!(worst / sup < 1e-3, "diagonal evolution error {:e}", worst / sup);
    }
}
