//! Hamiltonians `H(x, p)` with uniformly elliptic momentum Hessians.

use crate::error::{MilError, Result};
use crate::grid::{GridDomain, GridField};

#[derive(Clone, Debug)]
pub enum Hamiltonian {
    /// `H(x,p) = ½ κ(x) p²`
    QuadraticKappa { kappa: GridField },
    /// `H(x,p) = c·(√(1+p²) − 1)`; `H_pp = c/(1+p²)^{3/2}` stays in `(0, c]`
    Relativistic { domain: GridDomain, c: f64 },
}

impl Hamiltonian {
    /// `H = ½|p|²`.
    pub fn quadratic(domain: GridDomain) -> Self {
        let kappa = GridField::constant(domain, 1.0);
        Hamiltonian::QuadraticKappa { kappa }
    }

    pub fn domain(&self) -> &GridDomain {
        match self {
            Hamiltonian::QuadraticKappa { kappa } => &kappa.domain,
            Hamiltonian::Relativistic { domain, .. } => domain,
        }
    }

    pub fn value(&self, i: usize, p: f64) -> f64 {
        match self {
            Hamiltonian::QuadraticKappa { kappa } => 0.5 * kappa.values()[i] * p * p,
            Hamiltonian::Relativistic { c, .. } => c * ((1.0 + p * p).sqrt() - 1.0),
        }
    }

    pub fn dp(&self, i: usize, p: f64) -> f64 {
        match self {
            Hamiltonian::QuadraticKappa { kappa } => kappa.values()[i] * p,
            Hamiltonian::Relativistic { c, .. } => c * p / (1.0 + p * p).sqrt(),
        }
    }

    pub fn dpp(&self, i: usize, p: f64) -> f64 {
        match self {
            Hamiltonian::QuadraticKappa { kappa } => kappa.values()[i],
            Hamiltonian::Relativistic { c, .. } => c / (1.0 + p * p).powf(1.5),
        }
    }

    /// Hessian independent of `p` (the recovery hypotheses need this).
    pub fn hessian_p_independent(&self) -> bool {
        matches!(self, Hamiltonian::QuadraticKappa { .. })
    }

    /// Check `0 < H_pp(x,p) ≤ C` over sampled momenta.
    pub fn ellipticity_check(&self, p_samples: &[f64], upper: f64) -> Result<()> {
        for i in 0..self.domain().len() {
            for &p in p_samples {
                let hpp = self.dpp(i, p);
                if !(hpp > 0.0) || hpp > upper {
                    return Err(MilError::InvalidGrid(format!(
                        "H_pp({i}, {p}) = {hpp} outside (0, {upper}]"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn value_field(&self, grad_u: &[f64]) -> Vec<f64> {
        grad_u.iter().enumerate().map(|(i, &p)| self.value(i, p)).collect()
    }

    pub fn dp_field(&self, grad_u: &[f64]) -> Vec<f64> {
        grad_u.iter().enumerate().map(|(i, &p)| self.dp(i, p)).collect()
    }

    pub fn dpp_field(&self, grad_u: &[f64]) -> Vec<f64> {
        grad_u.iter().enumerate().map(|(i, &p)| self.dpp(i, p)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_derivatives() {
        let d = GridDomain::torus(16).unwrap();
        let h = Hamiltonian::quadratic(d);
        assert_eq!(h.value(0, 2.0), 2.0);
        assert_eq!(h.dp(3, 2.0), 2.0);
        assert_eq!(h.dpp(5, -7.0), 1.0);
        assert!(h.hessian_p_independent());
        h.ellipticity_check(&[-3.0, 0.0, 3.0], 10.0).unwrap();
    }

    #[test]
    fn relativistic_hessian_bounded() {
        let d = GridDomain::torus(16).unwrap();
        let h = Hamiltonian::Relativistic { domain: d, c: 2.0 };
        h.ellipticity_check(&[-5.0, -1.0, 0.0, 1.0, 5.0], 2.0).unwrap();
        assert!(!h.hessian_p_independent());
    }
}
