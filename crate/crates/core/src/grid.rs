//! Uniform 1-D grids and the discrete measure/field types built on them.
//!
//! Two domain kinds are supported: the unit torus (periodic, `N` cells of
//! width `1/N`) and the unit interval with Neumann ends (`N` nodes including
//! both endpoints, spacing `1/(N-1)`). Probability measures are stored as
//! density samples; integrals are quadrature sums against per-node weights
//! (uniform on the torus, trapezoid on the interval).

use crate::error::{MilError, Result};
use std::fmt;

const SPACING_TOL: f64 = 1e-14;
const MASS_TOL: f64 = 1e-10;
const DENSITY_FLOOR: f64 = -1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GridKind {
    PeriodicTorus,
    NeumannInterval,
}

impl fmt::Display for GridKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridKind::PeriodicTorus => write!(f, "torus"),
            GridKind::NeumannInterval => write!(f, "interval"),
        }
    }
}

/// Uniform grid on `[0,1)` (torus) or `[0,1]` (interval).
#[derive(Clone, Debug)]
pub struct GridDomain {
    kind: GridKind,
    n: usize,
    spacing: f64,
    coords: Vec<f64>,
}

impl PartialEq for GridDomain {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.n == other.n
    }
}

impl GridDomain {
    pub fn torus(n: usize) -> Result<Self> {
        if n < 8 {
            return Err(MilError::InvalidGrid(format!("need at least 8 points, got {n}")));
        }
        let spacing = 1.0 / n as f64;
        let coords = (0..n).map(|i| i as f64 * spacing).collect();
        let dom = Self { kind: GridKind::PeriodicTorus, n, spacing, coords };
        dom.check()?;
        Ok(dom)
    }

    pub fn interval(n: usize) -> Result<Self> {
        if n < 8 {
            return Err(MilError::InvalidGrid(format!("need at least 8 points, got {n}")));
        }
        let spacing = 1.0 / (n as f64 - 1.0);
        let coords = (0..n).map(|i| i as f64 * spacing).collect();
        let dom = Self { kind: GridKind::NeumannInterval, n, spacing, coords };
        dom.check()?;
        Ok(dom)
    }

    fn check(&self) -> Result<()> {
        let cells = match self.kind {
            GridKind::PeriodicTorus => self.n as f64,
            GridKind::NeumannInterval => self.n as f64 - 1.0,
        };
        if (self.spacing * cells - 1.0).abs() > SPACING_TOL {
            return Err(MilError::InvalidGrid(format!(
                "spacing {} times {} cells is not 1",
                self.spacing, cells
            )));
        }
        if self.coords.windows(2).any(|w| w[1] <= w[0]) {
            return Err(MilError::InvalidGrid("coordinates not strictly increasing".into()));
        }
        Ok(())
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn is_torus(&self) -> bool {
        self.kind == GridKind::PeriodicTorus
    }

    /// Quadrature weight of node `i`: `h` everywhere on the torus, trapezoid
    /// (`h/2` at the two endpoints) on the interval.
    pub fn weight(&self, i: usize) -> f64 {
        match self.kind {
            GridKind::PeriodicTorus => self.spacing,
            GridKind::NeumannInterval => {
                if i == 0 || i == self.n - 1 {
                    0.5 * self.spacing
                } else {
                    self.spacing
                }
            }
        }
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.weight(i)).collect()
    }

    pub fn quadrature(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.n);
        values.iter().enumerate().map(|(i, v)| self.weight(i) * v).sum()
    }

    /// Quadrature inner product of two node-sampled functions.
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), self.n);
        debug_assert_eq!(b.len(), self.n);
        (0..self.n).map(|i| self.weight(i) * a[i] * b[i]).sum()
    }

    /// Ground-metric distance between nodes `i` and `j`.
    pub fn node_distance(&self, i: usize, j: usize) -> f64 {
        let d = (self.coords[i] - self.coords[j]).abs();
        match self.kind {
            GridKind::PeriodicTorus => d.min(1.0 - d),
            GridKind::NeumannInterval => d,
        }
    }

    pub fn same_as(&self, other: &GridDomain) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(MilError::DomainMismatch {
                left: format!("{} N={}", self.kind, self.n),
                right: format!("{} N={}", other.kind, other.n),
            })
        }
    }

    /// Sample a scalar function at the grid nodes.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> GridField {
        GridField::new(self.clone(), self.coords.iter().map(|&x| f(x)).collect())
            .expect("sampled field is finite")
    }
}

/// Signed node-sampled function on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    pub domain: GridDomain,
    values: Vec<f64>,
}

impl GridField {
    pub fn new(domain: GridDomain, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.len() {
            return Err(MilError::InvalidGrid(format!(
                "field has {} values for an N={} grid",
                values.len(),
                domain.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(MilError::NonFinite);
        }
        Ok(Self { domain, values })
    }

    pub fn zeros(domain: GridDomain) -> Self {
        let n = domain.len();
        Self { domain, values: vec![0.0; n] }
    }

    pub fn constant(domain: GridDomain, c: f64) -> Self {
        let n = domain.len();
        Self { domain, values: vec![c; n] }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn quadrature(&self) -> f64 {
        self.domain.quadrature(&self.values)
    }

    pub fn inner(&self, other: &GridField) -> Result<f64> {
        self.domain.same_as(&other.domain)?;
        Ok(self.domain.inner(&self.values, &other.values))
    }

    pub fn linf_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn l2_norm(&self) -> f64 {
        self.domain.inner(&self.values, &self.values).sqrt()
    }

    pub fn scale(&self, s: f64) -> GridField {
        GridField {
            domain: self.domain.clone(),
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &GridField) -> Result<GridField> {
        self.domain.same_as(&other.domain)?;
        Ok(GridField {
            domain: self.domain.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &GridField) -> Result<GridField> {
        self.domain.same_as(&other.domain)?;
        Ok(GridField {
            domain: self.domain.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    /// CSV serialization: header `x,value`, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,value\n");
        for (x, v) in self.domain.coords().iter().zip(&self.values) {
            out.push_str(&format!("{:.16e},{:.16e}\n", x, v));
        }
        out
    }
}

/// Probability density on a grid: nonnegative samples with quadrature mass 1.
#[derive(Clone, Debug, PartialEq)]
pub struct GridMeasure {
    field: GridField,
}

impl GridMeasure {
    /// Validating constructor. Does not rescale: off-by-more-than-tolerance
    /// mass or a negative entry is an error.
    pub fn new(domain: GridDomain, raw: Vec<f64>) -> Result<Self> {
        if raw.len() != domain.len() {
            return Err(MilError::InvalidGrid(format!(
                "density has {} values for an N={} grid",
                raw.len(),
                domain.len()
            )));
        }
        let (mut min, mut argmin) = (f64::INFINITY, 0);
        for (i, &v) in raw.iter().enumerate() {
            if !v.is_finite() {
                return Err(MilError::NonFinite);
            }
            if v < min {
                min = v;
                argmin = i;
            }
        }
        if min < DENSITY_FLOOR {
            return Err(MilError::NegativeDensity { index: argmin, min });
        }
        let mass = domain.quadrature(&raw);
        if (mass - 1.0).abs() > MASS_TOL {
            return Err(MilError::NotNormalized { mass, excess: (mass - 1.0).abs() });
        }
        Ok(Self { field: GridField { domain, values: raw } })
    }

    /// Rescale a nonnegative field to unit mass, then validate.
    pub fn from_unnormalized(domain: GridDomain, raw: Vec<f64>) -> Result<Self> {
        let mass = domain.quadrature(&raw);
        if mass <= 0.0 || !mass.is_finite() {
            return Err(MilError::NotNormalized { mass, excess: (mass - 1.0).abs() });
        }
        Self::new(domain, raw.into_iter().map(|v| v / mass).collect())
    }

    pub fn uniform(domain: GridDomain) -> Self {
        let n = domain.len();
        let total: f64 = (0..n).map(|i| domain.weight(i)).sum();
        Self { field: GridField { domain, values: vec![1.0 / total; n] } }
    }

    pub fn domain(&self) -> &GridDomain {
        &self.field.domain
    }

    pub fn density(&self) -> &[f64] {
        self.field.values()
    }

    pub fn as_field(&self) -> &GridField {
        &self.field
    }

    pub fn to_field(&self) -> GridField {
        self.field.clone()
    }

    pub fn mass(&self) -> f64 {
        self.field.quadrature()
    }

    pub fn min_density(&self) -> f64 {
        self.field.values().iter().fold(f64::INFINITY, |a, &b| a.min(b))
    }

    /// `∫ g dm` by quadrature.
    pub fn integrate(&self, g: &GridField) -> Result<f64> {
        self.field.inner(g)
    }

    /// `m + s·h` as a raw field (useful for probing; may be signed).
    pub fn perturb(&self, direction: &GridField, s: f64) -> Result<GridField> {
        self.field.add(&direction.scale(s))
    }

    pub fn to_csv(&self) -> String {
        self.field.to_csv()
    }

    /// Stable hexadecimal identifier of the density samples (FNV-1a over the
    /// raw bits); used to tag derivative tensors with their base measure.
    pub fn content_id(&self) -> String {
        let mut hash: u64 = 0xcbf29ce484222325;
        for v in self.field.values() {
            for b in v.to_le_bits_bytes() {
                hash ^= b as u64;
                hash = hash.wrapping_mul(0x100000001b3);
            }
        }
        format!("{hash:016x}")
    }
}

trait ToLeBitsBytes {
    fn to_le_bits_bytes(&self) -> [u8; 8];
}

impl ToLeBitsBytes for f64 {
    fn to_le_bits_bytes(&self) -> [u8; 8] {
        self.to_bits().to_le_bytes()
    }
}
