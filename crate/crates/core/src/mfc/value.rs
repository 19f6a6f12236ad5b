//! The control value function via its auxiliary representation, its
//! linearization, and the first-derivative field assembled by an adjoint
//! sweep.

use crate::error::Result;
use crate::grid::{GridField, GridMeasure};
use crate::pdesolve::{fp_solve, DriftPotential, EvolutionField, FpOperator, LinearPropagator, TimeGrid};

use super::cost::{RunningCost, TerminalCost};

/// `U(t0, m0) = G(m(T)) + ∫_{t0}^{T} F(s, m(s)) ds` along the flow
/// `∂ₜm = Δm + ∂ₓ(m f′)` started from `m0`.
pub fn dpe_value(
    running: &RunningCost,
    terminal: &TerminalCost,
    drift: &DriftPotential,
    m0: &GridMeasure,
    tg: TimeGrid,
) -> Result<f64> {
    let ev = fp_solve(drift, m0.as_field(), tg)?;
    value_along(running, terminal, &ev, tg)
}

fn value_along(
    running: &RunningCost,
    terminal: &TerminalCost,
    ev: &EvolutionField,
    tg: TimeGrid,
) -> Result<f64> {
    let mut samples = Vec::with_capacity(tg.steps + 1);
    for n in 0..=tg.steps {
        samples.push(running.evaluate(tg.time(n), &ev.snapshot_field(n))?);
    }
    Ok(terminal.eval(&ev.snapshot_field(tg.steps))? + tg.trapezoid(&samples))
}

/// Linearized value response: evolves the perturbation `μ` by the same
/// Fokker–Planck flow and integrates the derivative couplings,
/// `v(t) = ∫_t^T ⟨δF/δm(s, m(s)), μ(s)⟩ ds + ⟨δG/δm(m(T)), μ(T)⟩`.
///
/// Returns the time series `v(t_n)` together with the perturbation field.
pub fn dpe_linearized(
    running: &RunningCost,
    terminal: &TerminalCost,
    drift: &DriftPotential,
    m0: &GridMeasure,
    mu0: &GridField,
    tg: TimeGrid,
) -> Result<(Vec<f64>, EvolutionField)> {
    let m_ev = fp_solve(drift, m0.as_field(), tg)?;
    let mu_ev = fp_solve(drift, mu0, tg)?;
    let m_final = m_ev.snapshot_field(tg.steps);

    let mut coupling = Vec::with_capacity(tg.steps + 1);
    for n in 0..=tg.steps {
        let df = running.derivative_field(tg.time(n), &m_ev.snapshot_field(n))?;
        coupling.push(df.domain.inner(df.values(), mu_ev.snapshot(n)));
    }
    let dg = terminal.derivative_field(&m_final)?;
    let terminal_term = dg.domain.inner(dg.values(), mu_ev.snapshot(tg.steps));

    let dt = tg.dt();
    let mut v = vec![0.0; tg.steps + 1];
    v[tg.steps] = terminal_term;
    for n in (0..tg.steps).rev() {
        v[n] = v[n + 1] + 0.5 * dt * (coupling[n] + coupling[n + 1]);
    }
    Ok((v, mu_ev))
}

/// First-derivative field `y ↦ S(t0, m0, y)` of the value function,
/// normalized so `∫ S m0 dx = 0`.
///
/// Assembled by one adjoint sweep: by linearity of the response in `μ0`,
/// accumulating trapezoid-weighted adjoint evolutions of the coupling
/// fields reproduces the spike probe of every grid cell at once.
pub fn delta_u_field(
    running: &RunningCost,
    terminal: &TerminalCost,
    drift: &DriftPotential,
    m0: &GridMeasure,
    tg: TimeGrid,
) -> Result<GridField> {
    let domain = m0.domain().clone();
    let m_ev = fp_solve(drift, m0.as_field(), tg)?;
    let op = FpOperator::from_potential(drift);
    let adjoint = op.quadrature_adjoint();
    let prop = LinearPropagator::new(&adjoint, tg.dt())?;

    let dt = tg.dt();
    let weight = |n: usize| if n == 0 || n == tg.steps { 0.5 * dt } else { dt };

    let coupling_at = |n: usize| -> Result<GridField> {
        running.derivative_field(tg.time(n), &m_ev.snapshot_field(n))
    };

    let dg = terminal.derivative_field(&m_ev.snapshot_field(tg.steps))?;
    let mut acc = coupling_at(tg.steps)?.scale(weight(tg.steps)).add(&dg)?;
    for n in (0..tg.steps).rev() {
        let stepped = prop.step(&nalgebra::DVector::from_column_slice(acc.values()))?;
        acc = GridField::new(domain.clone(), stepped.data.into())?;
        acc = acc.add(&coupling_at(n)?.scale(weight(n)))?;
    }

    let mean = m0.integrate(&acc)?;
    Ok(acc.add(&GridField::constant(domain, -mean))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridDomain;
    use crate::mfc::cost::{Functional, TimeProfile};
    use std::f64::consts::PI;

    fn setup() -> (GridDomain, DriftPotential, TimeGrid) {
        let d = GridDomain::torus(64).unwrap();
        let drift = DriftPotential::new(d.sample(|x| 0.5 * (2.0 * PI * x).cos())).unwrap();
        let tg = TimeGrid::span(0.5, 128).unwrap();
        (d, drift, tg)
    }

    #[test]
    fn profile_only_value_is_time_integral() {
        let (d, drift, tg) = setup();
        let running = RunningCost::profile_only(
            d.clone(),
            TimeProfile::Affine { intercept: 0.0, slope: 2.0 },
        );
        let terminal = Functional::Zero(d.clone());
        let m0 = GridMeasure::uniform(d);
        let u = dpe_value(&running, &terminal, &drift, &m0, tg).unwrap();
        // ∫₀^T 2s ds = T², trapezoid is exact for affine integrands
        assert!((u - 0.25).abs() < 1e-13, "u = {u}");
    }

    #[test]
    fn zero_running_cost_returns_terminal() {
        let (d, drift, tg) = setup();
        let running = RunningCost::time_independent(Functional::Zero(d.clone()));
        let psi = d.sample(|x| (2.0 * PI * x).sin());
        let terminal = Functional::Linear { psi: psi.clone() };
        let m0 = GridMeasure::from_unnormalized(
            d.clone(),
            d.sample(|x| 1.0 + 0.4 * (2.0 * PI * x).cos()).into_values(),
        )
        .unwrap();
        let u = dpe_value(&running, &terminal, &drift, &m0, tg).unwrap();
        let ev = fp_solve(&drift, m0.as_field(), tg).unwrap();
        let expect = d.inner(psi.values(), ev.final_snapshot());
        assert!((u - expect).abs() < 1e-14);
    }

    #[test]
    fn stationary_start_gives_affine_in_horizon() {
        let (d, drift, _) = setup();
        let psi = d.sample(|x| (2.0 * PI * x).cos() + 0.3);
        let running = RunningCost::time_independent(Functional::Linear { psi: psi.clone() });
        let terminal = Functional::Zero(d.clone());
        let m_hat = drift.stationary_measure();
        let slope = m_hat.integrate(&psi).unwrap();
        for (t1, steps) in [(0.25, 64), (0.5, 128), (1.0, 256)] {
            let tg = TimeGrid::span(t1, steps).unwrap();
            let u = dpe_value(&running, &terminal, &drift, &m_hat, tg).unwrap();
            assert!((u - slope * t1).abs() < 1e-12, "T={t1}: {u} vs {}", slope * t1);
        }
    }

    #[test]
    fn linearized_vanishes_without_couplings() {
        let (d, drift, tg) = setup();
        let running = RunningCost::time_independent(Functional::Constant(d.clone(), 2.0));
        let terminal = Functional::Zero(d.clone());
        let m0 = GridMeasure::uniform(d.clone());
        let mu0 = d.sample(|x| (4.0 * PI * x).sin());
        let (v, _) = dpe_linearized(&running, &terminal, &drift, &m0, &mu0, tg).unwrap();
        assert!(v.iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn probing_with_base_measure_gives_zero_after_normalization() {
        // μ0 = m0 makes the normalized response vanish identically
        let (d, drift, tg) = setup();
        let rho = crate::wcalculus::wrapped_gaussian(&d, 0.1);
        let func = crate::wcalculus::AnalyticFunctional::new(
            crate::wcalculus::PhiSpec::Quadratic,
            rho,
        )
        .unwrap();
        let running = RunningCost::time_independent(Functional::Analytic(func));
        let terminal = Functional::Zero(d.clone());
        let m0 = drift.stationary_measure();
        let s = delta_u_field(&running, &terminal, &drift, &m0, tg).unwrap();
        let pairing = m0.integrate(&s).unwrap();
        assert!(pairing.abs() < 1e-12);
    }

    #[test]
    fn delta_field_consistent_with_linearized_pairing() {
        let (d, drift, tg) = setup();
        let psi = d.sample(|x| (2.0 * PI * x).cos());
        let running = RunningCost::time_independent(Functional::SquaredLinear { psi });
        let terminal = Functional::Linear { psi: d.sample(|x| 0.3 * (4.0 * PI * x).cos()) };
        let m0 = GridMeasure::from_unnormalized(
            d.clone(),
            d.sample(|x| 1.0 + 0.3 * (2.0 * PI * x).sin()).into_values(),
        )
        .unwrap();
        let s = delta_u_field(&running, &terminal, &drift, &m0, tg).unwrap();
        // mean-zero probe directions: pairing must match the linearized v(t0)
        for k in [1usize, 3] {
            let mu0 = d.sample(|x| (2.0 * PI * k as f64 * x).sin());
            let (v, _) = dpe_linearized(&running, &terminal, &drift, &m0, &mu0, tg).unwrap();
            let pairing = s.inner(&mu0).unwrap();
            assert!(
                (pairing - v[0]).abs() < 1e-9,
                "pairing {pairing} vs v(t0) {}",
                v[0]
            );
        }
    }

    #[test]
    fn delta_field_matches_central_difference() {
        let (d, drift, _) = setup();
        let tg = TimeGrid::span(0.3, 96).unwrap();
        let rho = crate::wcalculus::wrapped_gaussian(&d, 0.12);
        let func =
            crate::wcalculus::AnalyticFunctional::new(crate::wcalculus::PhiSpec::Quadratic, rho)
                .unwrap();
        let running = RunningCost::time_independent(Functional::Analytic(func));
        let terminal = Functional::Linear { psi: d.sample(|x| 0.2 * (2.0 * PI * x).cos()) };
        let m0 = GridMeasure::uniform(d.clone());
        let s = delta_u_field(&running, &terminal, &drift, &m0, tg).unwrap();

        let h_dir = d.sample(|x| (2.0 * PI * x).cos() - 0.5 * (6.0 * PI * x).sin());
        let step = 1e-3;
        let plus = GridMeasure::new(
            d.clone(),
            m0.perturb(&h_dir, step).unwrap().into_values(),
        )
        .unwrap();
        let minus = GridMeasure::new(
            d.clone(),
            m0.perturb(&h_dir, -step).unwrap().into_values(),
        )
        .unwrap();
        let quotient = (dpe_value(&running, &terminal, &drift, &plus, tg).unwrap()
            - dpe_value(&running, &terminal, &drift, &minus, tg).unwrap())
            / (2.0 * step);
        let pairing = s.inner(&h_dir).unwrap();
        assert!(
            (pairing - quotient).abs() < 1e-5,
            "pairing {pairing} vs quotient {quotient}"
        );
    }
}
