//! Difference-quotient derivative calculus on measure space.
//!
//! Mixed directional derivatives are alternating-sign corner quotients over
//! the 2^k probe corners, Richardson-extrapolated over two step sizes.
//! Functionals that tolerate signed densities get two-sided corners
//! (O(s^4) after extrapolation); positivity-constrained ones get the
//! one-sided limit (O(s^2) after extrapolation).

use crate::error::{MilError, Result};
use crate::grid::{GridField, GridMeasure};
use rayon::prelude::*;

use super::functional::MeasureFunctional;

pub const DEFAULT_PROBE_STEP: f64 = 1e-3;

/// Whether probe directions must have zero quadrature mass.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DirectionConstraint {
    /// Directions must be mean-zero (perturbations stay on the simplex).
    MeanZero,
    /// Arbitrary directions; the functional must be defined off the simplex.
    Unconstrained,
}

fn check_positivity(values: &[f64], step: f64) -> Result<()> {
    if values.iter().any(|&v| v < -1e-14) {
        return Err(MilError::StepTooLarge { step });
    }
    Ok(())
}

/// Single corner quotient at fixed steps (no extrapolation).
fn corner_quotient(
    f: &dyn MeasureFunctional,
    m: &GridMeasure,
    directions: &[GridField],
    step: f64,
) -> Result<f64> {
    let k = directions.len();
    let two_sided = f.signed_ok();
    let mut acc = 0.0;
    for corner in 0..(1usize << k) {
        let mut probe = m.to_field();
        let mut sign = 1.0;
        for (j, dir) in directions.iter().enumerate() {
            let bit = (corner >> j) & 1;
            if two_sided {
                let eps = if bit == 1 { 1.0 } else { -1.0 };
                sign *= eps;
                probe = probe.add(&dir.scale(eps * step))?;
            } else {
                // one-sided corners carry sign (-1)^(k - |eps|)
                if bit == 1 {
                    probe = probe.add(&dir.scale(step))?;
                } else {
                    sign = -sign;
                }
            }
        }
        if !two_sided {
            check_positivity(probe.values(), step)?;
        }
        let val = f.eval_field(&probe)?;
        if !val.is_finite() {
            return Err(MilError::NonFinite);
        }
        acc += sign * val;
    }
    // one-sided k even: (-1)^(k-|eps|) accumulated above gives (-1)^k · parity;
    // the loop already folded parity into `sign`, but started from +1 at
    // |eps| = k, so the overall normalization is direct:
    let denom = if two_sided { (2.0 * step).powi(k as i32) } else { step.powi(k as i32) };
    Ok(acc / denom)
}

/// k-th order mixed directional derivative of `f` at `m` along `directions`,
/// Richardson-extrapolated over steps `(step, step/2)`.
pub fn mixed_directional_derivative(
    f: &dyn MeasureFunctional,
    m: &GridMeasure,
    directions: &[GridField],
    step: f64,
    constraint: DirectionConstraint,
) -> Result<f64> {
    if directions.is_empty() {
        return f.eval_field(m.as_field());
    }
    for dir in directions {
        m.domain().same_as(&dir.domain)?;
        if constraint == DirectionConstraint::MeanZero {
            let mass = dir.quadrature();
            if mass.abs() > 1e-10 * (1.0 + dir.linf_norm()) {
                return Err(MilError::InvalidGrid(format!(
                    "probe direction carries quadrature mass {mass:e}; pass Unconstrained to allow"
                )));
            }
        }
    }
    let coarse = corner_quotient(f, m, directions, step)?;
    let fine = corner_quotient(f, m, directions, step / 2.0)?;
    if f.signed_ok() {
        // central corners: error c2 s^2 + c4 s^4
        Ok((4.0 * fine - coarse) / 3.0)
    } else {
        // one-sided corners: error c1 s + c2 s^2
        Ok(2.0 * fine - coarse)
    }
}

/// Iterate over all nondecreasing multi-indices of length `k` over `0..n`.
pub fn for_each_multiset(
    n: usize,
    k: usize,
    mut visit: impl FnMut(&[usize]) -> Result<()>,
) -> Result<()> {
    let mut idx = vec![0usize; k];
    loop {
        visit(&idx)?;
        // advance
        let mut pos = k;
        loop {
            if pos == 0 {
                return Ok(());
            }
            pos -= 1;
            if idx[pos] + 1 < n {
                let v = idx[pos] + 1;
                for slot in idx.iter_mut().skip(pos) {
                    *slot = v;
                }
                break;
            }
        }
    }
}

fn multisets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for_each_multiset(n, k, |ms| {
        out.push(ms.to_vec());
        Ok(())
    })
    .expect("collection cannot fail");
    out
}

/// Dense symmetric derivative tensor of a functional at a base measure.
#[derive(Clone, Debug)]
pub struct DerivativeTensor {
    pub order: usize,
    pub base: GridMeasure,
    values: Vec<f64>,
    pub normalized: bool,
}

impl DerivativeTensor {
    pub fn zeros(order: usize, base: GridMeasure) -> Self {
        assert!(order >= 1);
        let n = base.domain().len();
        Self { order, base, values: vec![0.0; n.pow(order as u32)], normalized: false }
    }

    pub fn n(&self) -> usize {
        self.base.domain().len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn flat_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.order);
        let n = self.n();
        idx.iter().fold(0, |acc, &i| acc * n + i)
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.values[self.flat_index(idx)]
    }

    pub fn set(&mut self, idx: &[usize], val: f64) {
        let fi = self.flat_index(idx);
        self.values[fi] = val;
    }

    /// Write `val` into every permutation of a sorted multi-index.
    pub fn set_symmetric(&mut self, sorted_idx: &[usize], val: f64) {
        let mut perm = sorted_idx.to_vec();
        loop {
            self.set(&perm, val);
            if !next_permutation(&mut perm) {
                break;
            }
        }
    }

    /// Contraction of the first axis against the base density (quadrature);
    /// zero for normalized tensors.
    pub fn first_axis_contraction_max(&self) -> f64 {
        let n = self.n();
        let rest = self.values.len() / n;
        let w: Vec<f64> = (0..n).map(|i| self.base.domain().weight(i)).collect();
        let dens = self.base.density();
        let mut max = 0.0f64;
        for j in 0..rest {
            let mut acc = 0.0;
            for i in 0..n {
                acc += w[i] * dens[i] * self.values[i * rest + j];
            }
            max = max.max(acc.abs());
        }
        max
    }

    /// Center every axis against the base measure, producing the canonical
    /// representative with zero contraction on each slot.
    pub fn center(&mut self) {
        let n = self.n();
        let dens = self.base.density().to_vec();
        let w: Vec<f64> = (0..n).map(|i| self.base.domain().weight(i)).collect();
        for axis in 0..self.order {
            let stride: usize = n.pow((self.order - 1 - axis) as u32);
            let outer = n.pow(axis as u32);
            let block = stride * n;
            for o in 0..outer {
                for s in 0..stride {
                    let base_off = o * block + s;
                    let mut acc = 0.0;
                    for i in 0..n {
                        acc += w[i] * dens[i] * self.values[base_off + i * stride];
                    }
                    for i in 0..n {
                        self.values[base_off + i * stride] -= acc;
                    }
                }
            }
        }
        self.normalized = true;
    }

    /// Max asymmetry over adjacent-axis transpositions.
    pub fn symmetry_defect(&self) -> f64 {
        let n = self.n();
        if self.order < 2 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        let mut idx = vec![0usize; self.order];
        let total = self.values.len();
        for flat in 0..total {
            let mut rem = flat;
            for a in (0..self.order).rev() {
                idx[a] = rem % n;
                rem /= n;
            }
            for a in 0..self.order - 1 {
                idx.swap(a, a + 1);
                let other = self.get(&idx);
                idx.swap(a, a + 1);
                worst = worst.max((self.values[flat] - other).abs());
            }
        }
        worst
    }

    /// Full contraction against `order` direction fields by quadrature.
    pub fn contract(&self, directions: &[&GridField]) -> Result<f64> {
        assert_eq!(directions.len(), self.order);
        let n = self.n();
        let w: Vec<f64> = (0..n).map(|i| self.base.domain().weight(i)).collect();
        // contract last axis repeatedly
        let mut current = self.values.clone();
        for dir in directions.iter().rev() {
            self.base.domain().same_as(&dir.domain)?;
            let dv = dir.values();
            let rest = current.len() / n;
            let mut next = vec![0.0; rest];
            for (j, slot) in next.iter_mut().enumerate() {
                let mut acc = 0.0;
                for i in 0..n {
                    acc += current[j * n + i] * dv[i] * w[i];
                }
                *slot = acc;
            }
            current = next;
        }
        Ok(current[0])
    }

    /// Order-1 tensors are plain fields.
    pub fn as_field(&self) -> Option<GridField> {
        if self.order == 1 {
            Some(GridField::new(self.base.domain().clone(), self.values.clone()).unwrap())
        } else {
            None
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "order": self.order,
            "shape": vec![self.n(); self.order],
            "base_id": self.base.content_id(),
            "values": self.values,
        })
    }

    /// Relative L2 distance to another tensor of the same shape.
    pub fn rel_l2_error(&self, truth: &DerivativeTensor) -> f64 {
        let num: f64 = self
            .values
            .iter()
            .zip(&truth.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let den: f64 = truth.values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if den == 0.0 {
            num
        } else {
            num / den
        }
    }
}

fn next_permutation(arr: &mut [usize]) -> bool {
    let n = arr.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && arr[i - 1] >= arr[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while arr[j] <= arr[i - 1] {
        j -= 1;
    }
    arr.swap(i - 1, j);
    arr[i..].reverse();
    true
}

/// Quadrature delta at node `y`: unit-mass single-cell spike.
pub fn spike_direction(measure_domain: &crate::grid::GridDomain, y: usize) -> GridField {
    let n = measure_domain.len();
    let mut v = vec![0.0; n];
    v[y] = 1.0 / measure_domain.weight(y);
    GridField::new(measure_domain.clone(), v).unwrap()
}

/// Probe the full order-`k` derivative tensor of `f` at `m` with single-cell
/// spike directions, then center it per the normalization convention.
pub fn flat_derivative_field(
    f: &dyn MeasureFunctional,
    m: &GridMeasure,
    order: usize,
    step: Option<f64>,
) -> Result<DerivativeTensor> {
    let n = m.domain().len();
    let step = step.unwrap_or(DEFAULT_PROBE_STEP);
    let sets = multisets(n, order);
    let entries: Result<Vec<(Vec<usize>, f64)>> = sets
        .par_iter()
        .map(|ms| {
            let dirs: Vec<GridField> =
                ms.iter().map(|&y| spike_direction(m.domain(), y)).collect();
            let val = mixed_directional_derivative(
                f,
                m,
                &dirs,
                step,
                DirectionConstraint::Unconstrained,
            )?;
            Ok((ms.clone(), val))
        })
        .collect();
    let mut tensor = DerivativeTensor::zeros(order, m.clone());
    for (ms, val) in entries? {
        tensor.set_symmetric(&ms, val);
    }
    tensor.center();
    Ok(tensor)
}

/// Taylor expansion diagnostics: partial sums of the polynomial built from
/// derivative tensors at `m`, contracted against `(m'-m)^{⊗k}`, and the
/// residual `F(m') - F(m) - P_{N-1}`.
pub fn taylor_remainder_with(
    f: &dyn MeasureFunctional,
    m: &GridMeasure,
    m_prime: &GridMeasure,
    n_order: usize,
    tensors: &[DerivativeTensor],
) -> Result<(Vec<f64>, f64)> {
    assert!(n_order >= 1);
    assert!(tensors.len() >= n_order - 1);
    let delta = m_prime.as_field().sub(m.as_field())?;
    let f_m = f.eval_field(m.as_field())?;
    let f_mp = f.eval_field(m_prime.as_field())?;
    let mut partial_sums = Vec::with_capacity(n_order - 1);
    let mut poly = 0.0;
    let mut factorial = 1.0;
    for (k, tensor) in tensors.iter().take(n_order - 1).enumerate() {
        factorial *= (k + 1) as f64;
        let dirs: Vec<&GridField> = (0..=k).map(|_| &delta).collect();
        poly += tensor.contract(&dirs)? / factorial;
        partial_sums.push(poly);
    }
    Ok((partial_sums, f_mp - f_m - poly))
}

/// As [`taylor_remainder_with`], probing the tensors on the fly.
pub fn taylor_remainder(
    f: &dyn MeasureFunctional,
    m: &GridMeasure,
    m_prime: &GridMeasure,
    n_order: usize,
    step: Option<f64>,
) -> Result<(Vec<f64>, f64)> {
    let tensors: Result<Vec<_>> = (1..n_order)
        .map(|k| flat_derivative_field(f, m, k, step))
        .collect();
    taylor_remainder_with(f, m, m_prime, n_order, &tensors?)
}
