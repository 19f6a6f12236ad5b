//! Running and terminal costs for the control value function.

use crate::error::{MilError, Result};
use crate::grid::{GridDomain, GridField};
use crate::wcalculus::{AnalyticFunctional, MeasureFunctional};

/// Measure functional with exact derivative evaluators where the form allows.
#[derive(Clone, Debug)]
pub enum Functional {
    Zero(GridDomain),
    Constant(GridDomain, f64),
    /// `∫ ψ dm`
    Linear { psi: GridField },
    /// `(∫ ψ dm)²`
    SquaredLinear { psi: GridField },
    /// `∫ Φ(z, (ρ*m)(z)) dz`
    Analytic(AnalyticFunctional),
}

impl Functional {
    pub fn domain(&self) -> &GridDomain {
        match self {
            Functional::Zero(d) | Functional::Constant(d, _) => d,
            Functional::Linear { psi } | Functional::SquaredLinear { psi } => &psi.domain,
            Functional::Analytic(f) => &f.kernel.domain,
        }
    }

    pub fn eval(&self, m: &GridField) -> Result<f64> {
        match self {
            Functional::Zero(_) => Ok(0.0),
            Functional::Constant(_, c) => Ok(*c),
            Functional::Linear { psi } => psi.inner(m),
            Functional::SquaredLinear { psi } => Ok(psi.inner(m)?.powi(2)),
            Functional::Analytic(f) => f.eval_field(m),
        }
    }

    /// Unnormalized first-derivative kernel `y ↦ δF/δm(m, y)`.
    pub fn derivative_field(&self, m: &GridField) -> Result<GridField> {
        match self {
            Functional::Zero(d) | Functional::Constant(d, _) => Ok(GridField::zeros(d.clone())),
            Functional::Linear { psi } => Ok(psi.clone()),
            Functional::SquaredLinear { psi } => Ok(psi.scale(2.0 * psi.inner(m)?)),
            Functional::Analytic(f) => {
                let conv = f.convolve(m)?;
                let d = &f.kernel.domain;
                let n = d.len();
                let h = d.spacing();
                let rho = f.kernel.values();
                let mut out = vec![0.0; n];
                for (y, slot) in out.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for z in 0..n {
                        acc += f.phi.theta_derivative(conv[z], 1)? * rho[(y + n - z) % n];
                    }
                    *slot = acc * h;
                }
                GridField::new(d.clone(), out)
            }
        }
    }

    /// `⟨δᵏF/δmᵏ(m), dir_1 ⊗ … ⊗ dir_k⟩` for the natural kernel
    /// representative; mean-zero directions make it representative-free.
    pub fn derivative_contract(&self, m: &GridField, dirs: &[&GridField]) -> Result<f64> {
        let k = dirs.len();
        assert!(k >= 1);
        match self {
            Functional::Zero(_) | Functional::Constant(_, _) => Ok(0.0),
            Functional::Linear { psi } => {
                if k == 1 {
                    psi.inner(dirs[0])
                } else {
                    Ok(0.0)
                }
            }
            Functional::SquaredLinear { psi } => match k {
                1 => Ok(2.0 * psi.inner(m)? * psi.inner(dirs[0])?),
                2 => Ok(2.0 * psi.inner(dirs[0])? * psi.inner(dirs[1])?),
                _ => Ok(0.0),
            },
            Functional::Analytic(f) => {
                let conv = f.convolve(m)?;
                let convs: Result<Vec<Vec<f64>>> =
                    dirs.iter().map(|dir| f.convolve(dir)).collect();
                let convs = convs?;
                let d = &f.kernel.domain;
                let h = d.spacing();
                let mut acc = 0.0;
                for z in 0..d.len() {
                    let mut term = f.phi.theta_derivative(conv[z], k)?;
                    for cj in &convs {
                        term *= cj[z];
                    }
                    acc += term;
                }
                Ok(acc * h)
            }
        }
    }

    /// Whether exact derivative evaluators exist up to `order`.
    pub fn has_exact_derivatives(&self, order: usize) -> bool {
        match self {
            Functional::Analytic(f) => f.phi.max_order().map_or(true, |m| order <= m),
            _ => true,
        }
    }
}

impl MeasureFunctional for Functional {
    fn domain(&self) -> &GridDomain {
        Functional::domain(self)
    }

    fn eval_field(&self, m: &GridField) -> Result<f64> {
        self.eval(m)
    }
}

/// Scalar time profile for separable running costs.
#[derive(Clone, Copy, Debug)]
pub enum TimeProfile {
    One,
    /// `g(t) = intercept + slope·t`
    Affine { intercept: f64, slope: f64 },
}

impl TimeProfile {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            TimeProfile::One => 1.0,
            TimeProfile::Affine { intercept, slope } => intercept + slope * t,
        }
    }

    pub fn is_time_dependent(&self) -> bool {
        match self {
            TimeProfile::One => false,
            TimeProfile::Affine { slope, .. } => *slope != 0.0,
        }
    }
}

/// Running cost `F(t, m) = g(t)·F₀(m)`.
#[derive(Clone, Debug)]
pub struct RunningCost {
    pub spatial: Functional,
    pub profile: TimeProfile,
}

impl RunningCost {
    pub fn time_independent(spatial: Functional) -> Self {
        Self { spatial, profile: TimeProfile::One }
    }

    /// `F(t, m) = g(t)` (measure-independent).
    pub fn profile_only(domain: GridDomain, profile: TimeProfile) -> Self {
        Self { spatial: Functional::Constant(domain, 1.0), profile }
    }

    pub fn evaluate(&self, t: f64, m: &GridField) -> Result<f64> {
        Ok(self.profile.value(t) * self.spatial.eval(m)?)
    }

    pub fn derivative_field(&self, t: f64, m: &GridField) -> Result<GridField> {
        Ok(self.spatial.derivative_field(m)?.scale(self.profile.value(t)))
    }

    pub fn is_time_dependent(&self) -> bool {
        self.profile.is_time_dependent()
    }
}

/// Terminal costs carry no time argument.
pub type TerminalCost = Functional;
