//! FFT-based differentiation on uniform grids.
//!
//! Torus fields use the classical trigonometric interpolant (Nyquist mode
//! zeroed in odd derivatives so real data stays real). Interval fields with
//! Neumann-compatible ends are differentiated through their even extension,
//! which is equivalent to a cosine-series derivative.

use crate::grid::{GridDomain, GridField, GridKind};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use std::f64::consts::PI;

/// Derivative of order `order` (1 or 2) of periodic samples with the given
/// period.
fn periodic_derivative(values: &[f64], period: f64, order: u32) -> Vec<f64> {
    let n = values.len();
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(n);
    let ifft = planner.plan_fft_inverse(n);

    let mut buf: Vec<Complex<f64>> = values.iter().map(|&v| Complex::new(v, 0.0)).collect();
    fft.process(&mut buf);

    for (j, c) in buf.iter_mut().enumerate() {
        // signed wavenumber index
        let k = if j <= n / 2 { j as i64 } else { j as i64 - n as i64 };
        let is_nyquist = n % 2 == 0 && j == n / 2;
        let omega = 2.0 * PI * k as f64 / period;
        let factor = match order {
            1 => {
                if is_nyquist {
                    Complex::new(0.0, 0.0)
                } else {
                    Complex::new(0.0, omega)
                }
            }
            2 => Complex::new(-omega * omega, 0.0),
            _ => unreachable!("only first and second derivatives are used"),
        };
        *c *= factor;
    }

    ifft.process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.iter().map(|c| c.re * scale).collect()
}

/// Even extension of interval samples onto a periodic grid of 2(N-1) points.
fn even_extension(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut ext = Vec::with_capacity(2 * (n - 1));
    ext.extend_from_slice(values);
    ext.truncate(2 * (n - 1));
    for j in (1..n - 1).rev() {
        ext.push(values[j]);
    }
    ext
}

pub fn derivative(field: &GridField, order: u32) -> GridField {
    let domain = field.domain.clone();
    let values = match domain.kind() {
        GridKind::PeriodicTorus => periodic_derivative(field.values(), 1.0, order),
        GridKind::NeumannInterval => {
            let ext = even_extension(field.values());
            let der = periodic_derivative(&ext, 2.0, order);
            der[..domain.len()].to_vec()
        }
    };
    GridField::new(domain, values).expect("spectral derivative is finite")
}

pub fn first_derivative(field: &GridField) -> GridField {
    derivative(field, 1)
}

pub fn second_derivative(field: &GridField) -> GridField {
    derivative(field, 2)
}

/// Dense matrix applying the spectral derivative; columns are the derivative
/// of the unit basis vectors, so matrix and FFT paths agree bitwise.
pub fn derivative_matrix(domain: &GridDomain, order: u32) -> nalgebra::DMatrix<f64> {
    let n = domain.len();
    let mut mat = nalgebra::DMatrix::zeros(n, n);
    for j in 0..n {
        let mut basis = vec![0.0; n];
        basis[j] = 1.0;
        let col = derivative(&GridField::new(domain.clone(), basis).unwrap(), order);
        for i in 0..n {
            mat[(i, j)] = col.values()[i];
        }
    }
    mat
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridDomain;
    use std::f64::consts::PI;

    #[test]
    fn torus_cosine_mode() {
        let d = GridDomain::torus(64).unwrap();
        let f = d.sample(|x| (2.0 * PI * x).cos());
        let df = first_derivative(&f);
        let exact = d.sample(|x| -2.0 * PI * (2.0 * PI * x).sin());
        let err = df.sub(&exact).unwrap().linf_norm();
        assert!(err < 1e-11, "err = {err:e}");

        let d2f = second_derivative(&f);
        let exact2 = d.sample(|x| -4.0 * PI * PI * (2.0 * PI * x).cos());
        assert!(d2f.sub(&exact2).unwrap().linf_norm() < 1e-9);
    }

    #[test]
    fn interval_neumann_mode() {
        let d = GridDomain::interval(65).unwrap();
        let f = d.sample(|x| (PI * x).cos());
        let df = first_derivative(&f);
        let exact = d.sample(|x| -PI * (PI * x).sin());
        assert!(df.sub(&exact).unwrap().linf_norm() < 1e-11);
        // Neumann compatibility: derivative vanishes at the endpoints.
        assert!(df.values()[0].abs() < 1e-11);
        assert!(df.values()[64].abs() < 1e-11);
    }

    #[test]
    fn matrix_matches_fft_path() {
        let d = GridDomain::torus(32).unwrap();
        let f = d.sample(|x| (2.0 * PI * x).sin() + 0.3 * (4.0 * PI * x).cos());
        let df = first_derivative(&f);
        let mat = derivative_matrix(&d, 1);
        let v = nalgebra::DVector::from_column_slice(f.values());
        let mv = &mat * v;
        for i in 0..32 {
            assert!((mv[i] - df.values()[i]).abs() < 1e-12);
        }
    }
}
