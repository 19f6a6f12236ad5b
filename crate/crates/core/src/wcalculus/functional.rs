//! Functionals of measures and the analytic convolution family.
//!
//! The analytic family `F(m) = ∫ Φ(z, (ρ*m)(z)) dz` carries exact derivative
//! evaluators of every order and serves as the ground-truth oracle for the
//! probe-based calculus.

use crate::error::{MilError, Result};
use crate::grid::{GridDomain, GridField, GridKind};

/// A real-valued functional of a density field.
///
/// `eval_field` accepts arbitrary signed samples so that difference quotients
/// can step outside the probability simplex; implementations that are only
/// defined on genuine measures return `false` from [`signed_ok`] and the
/// probing machinery falls back to one-sided quotients with positivity checks.
///
/// [`signed_ok`]: MeasureFunctional::signed_ok
pub trait MeasureFunctional: Sync {
    fn domain(&self) -> &GridDomain;

    fn eval_field(&self, m: &GridField) -> Result<f64>;

    fn signed_ok(&self) -> bool {
        true
    }
}

/// `F(m) = ∫ ψ dm`.
pub struct LinearFunctional {
    pub psi: GridField,
}

impl MeasureFunctional for LinearFunctional {
    fn domain(&self) -> &GridDomain {
        &self.psi.domain
    }

    fn eval_field(&self, m: &GridField) -> Result<f64> {
        self.psi.inner(m)
    }
}

/// `F(m) = (∫ ψ dm)²`.
pub struct SquaredLinearFunctional {
    pub psi: GridField,
}

impl MeasureFunctional for SquaredLinearFunctional {
    fn domain(&self) -> &GridDomain {
        &self.psi.domain
    }

    fn eval_field(&self, m: &GridField) -> Result<f64> {
        Ok(self.psi.inner(m)?.powi(2))
    }
}

/// Scalar profile Φ(z,θ) with θ-partials of every available order.
#[derive(Clone, Debug)]
pub enum PhiSpec {
    /// Φ = θ
    Linear,
    /// Φ = θ²
    Quadratic,
    /// Φ = θ²/2
    HalfQuadratic,
    /// Φ = θ³/6
    CubicSixth,
    /// Φ = exp(θ)
    Exp,
    /// Restrict the available θ-derivative orders of an inner profile.
    Capped { inner: Box<PhiSpec>, max_order: usize },
}

impl PhiSpec {
    /// k-th θ-partial at θ (k = 0 is the value itself).
    pub fn theta_derivative(&self, theta: f64, k: usize) -> Result<f64> {
        match self {
            PhiSpec::Linear => Ok(match k {
                0 => theta,
                1 => 1.0,
                _ => 0.0,
            }),
            PhiSpec::Quadratic => Ok(match k {
                0 => theta * theta,
                1 => 2.0 * theta,
                2 => 2.0,
                _ => 0.0,
            }),
            PhiSpec::HalfQuadratic => Ok(match k {
                0 => 0.5 * theta * theta,
                1 => theta,
                2 => 1.0,
                _ => 0.0,
            }),
            PhiSpec::CubicSixth => Ok(match k {
                0 => theta * theta * theta / 6.0,
                1 => 0.5 * theta * theta,
                2 => theta,
                3 => 1.0,
                _ => 0.0,
            }),
            PhiSpec::Exp => Ok(theta.exp()),
            PhiSpec::Capped { inner, max_order } => {
                if k > *max_order {
                    Err(MilError::OrderUnavailable { requested: k, max: *max_order })
                } else {
                    inner.theta_derivative(theta, k)
                }
            }
        }
    }

    pub fn max_order(&self) -> Option<usize> {
        match self {
            PhiSpec::Capped { max_order, .. } => Some(*max_order),
            _ => None,
        }
    }
}

/// `F(m) = ∫ Φ(z, (ρ*m)(z)) dz` with `(ρ*m)(z) = ∫ ρ(y−z) dm(y)`.
///
/// The kernel lives on a torus so the shift `y−z` wraps. Exact derivative
/// tensors follow from differentiating under the integral:
/// `δᵏF/δmᵏ(m, y₁..y_k) = ∫ ∂ᵏ_θΦ(z, ρ*m(z)) ρ(y₁−z)⋯ρ(y_k−z) dz`.
#[derive(Clone, Debug)]
pub struct AnalyticFunctional {
    pub phi: PhiSpec,
    pub kernel: GridField,
}

impl AnalyticFunctional {
    pub fn new(phi: PhiSpec, kernel: GridField) -> Result<Self> {
        if kernel.domain.kind() != GridKind::PeriodicTorus {
            return Err(MilError::InvalidGrid(
                "analytic functional kernels require a torus domain".into(),
            ));
        }
        Ok(Self { phi, kernel })
    }

    /// `(ρ*m)(z)` at every node, by wrapped quadrature.
    pub fn convolve(&self, m: &GridField) -> Result<Vec<f64>> {
        self.kernel.domain.same_as(&m.domain)?;
        let n = m.domain.len();
        let rho = self.kernel.values();
        let mv = m.values();
        let h = m.domain.spacing();
        let mut out = vec![0.0; n];
        for z in 0..n {
            let mut acc = 0.0;
            for y in 0..n {
                let shift = (y + n - z) % n;
                acc += rho[shift] * mv[y];
            }
            out[z] = acc * h;
        }
        Ok(out)
    }

    /// Exact tensor entry `δᵏF/δmᵏ(m, idx)` (unnormalized representative).
    pub fn exact_derivative(&self, m: &GridField, idx: &[usize]) -> Result<f64> {
        let conv = self.convolve(m)?;
        self.exact_derivative_given_conv(&conv, idx)
    }

    fn exact_derivative_given_conv(&self, conv: &[f64], idx: &[usize]) -> Result<f64> {
        let n = self.kernel.domain.len();
        let h = self.kernel.domain.spacing();
        let rho = self.kernel.values();
        let k = idx.len();
        let mut acc = 0.0;
        for z in 0..n {
            let mut prod = self.phi.theta_derivative(conv[z], k)?;
            for &y in idx {
                prod *= rho[(y + n - z) % n];
            }
            acc += prod;
        }
        Ok(acc * h)
    }

    /// Full exact derivative tensor of order `k` (unnormalized).
    pub fn exact_tensor(&self, m: &crate::grid::GridMeasure, k: usize) -> Result<super::derivative::DerivativeTensor> {
        let conv = self.convolve(m.as_field())?;
        let n = self.kernel.domain.len();
        let mut tensor = super::derivative::DerivativeTensor::zeros(k, m.clone());
        let mut idx = vec![0usize; k];
        // fill by symmetric multisets
        super::derivative::for_each_multiset(n, k, |multiset| {
            idx.copy_from_slice(multiset);
            let val = self.exact_derivative_given_conv(&conv, &idx)?;
            tensor.set_symmetric(multiset, val);
            Ok(())
        })?;
        Ok(tensor)
    }
}

impl MeasureFunctional for AnalyticFunctional {
    fn domain(&self) -> &GridDomain {
        &self.kernel.domain
    }

    fn eval_field(&self, m: &GridField) -> Result<f64> {
        let conv = self.convolve(m)?;
        let h = m.domain.spacing();
        let mut acc = 0.0;
        for &theta in &conv {
            acc += self.phi.theta_derivative(theta, 0)?;
        }
        let val = acc * h;
        if !val.is_finite() {
            return Err(MilError::NonFinite);
        }
        Ok(val)
    }
}

/// Wrapped Gaussian bump of width `sigma`, normalized to unit integral.
pub fn wrapped_gaussian(domain: &GridDomain, sigma: f64) -> GridField {
    let norm = 1.0 / (sigma * (2.0 * std::f64::consts::PI).sqrt());
    domain.sample(|x| {
        let mut acc = 0.0;
        for wrap in -3..=3 {
            let d = x + wrap as f64;
            acc += norm * (-0.5 * (d / sigma).powi(2)).exp();
        }
        acc
    })
}
