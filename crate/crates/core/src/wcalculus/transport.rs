//! Wasserstein-1 distance between grid measures.
//!
//! Measures are treated as atoms of mass `w_i ρ_i` at the grid nodes. On the
//! interval the distance is the integral of the CDF difference; on the torus
//! the circular ground metric `min(|x−y|, 1−|x−y|)` makes the optimal
//! potential offset a weighted median of the cumulative edge flows.

use crate::error::Result;
use crate::grid::{GridField, GridKind, GridMeasure};

/// W1 distance together with an optimal Kantorovich potential (1-Lipschitz
/// for the ground metric, `∫ψ d(m1−m2)` equal to the distance). The
/// potential doubles as an optimality certificate in tests.
pub fn w1_distance_with_potential(m1: &GridMeasure, m2: &GridMeasure) -> Result<(f64, GridField)> {
    m1.domain().same_as(m2.domain())?;
    let domain = m1.domain();
    let n = domain.len();
    let h = domain.spacing();

    // signed atom masses and cumulative difference over the edges
    let diff: Vec<f64> = (0..n)
        .map(|i| domain.weight(i) * (m1.density()[i] - m2.density()[i]))
        .collect();
    let mut cumulative = Vec::with_capacity(n);
    let mut acc = 0.0;
    for &d in &diff {
        acc += d;
        cumulative.push(acc);
    }

    let (value, offset) = match domain.kind() {
        GridKind::NeumannInterval => {
            // edges between nodes i and i+1 carry |F_i| · h
            let value = cumulative[..n - 1].iter().map(|f| f.abs() * h).sum();
            (value, 0.0)
        }
        GridKind::PeriodicTorus => {
            // Any point between the two middle order statistics minimizes
            // Σ|F_i − c|; evaluating both and taking the min keeps the value
            // exactly invariant under m1 ↔ m2 (which negates every flow).
            let mut sorted = cumulative.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let c_lo = sorted[(n - 1) / 2];
            let c_hi = sorted[n / 2];
            let cost = |c: f64| cumulative.iter().map(|f| (f - c).abs() * h).sum::<f64>();
            let (v_lo, v_hi) = (cost(c_lo), cost(c_hi));
            if v_lo <= v_hi {
                (v_lo, c_lo)
            } else {
                (v_hi, c_hi)
            }
        }
    };

    let psi = build_potential(domain, &cumulative, offset);
    Ok((value, GridField::new(domain.clone(), psi)?))
}

/// Potential with slope `-sgn(flow)` on each edge; on the torus, edges with
/// zero flow absorb a common balancing slope so the potential closes around
/// the loop.
fn build_potential(domain: &crate::grid::GridDomain, cumulative: &[f64], offset: f64) -> Vec<f64> {
    let n = cumulative.len();
    let h = domain.spacing();
    let edge_count = match domain.kind() {
        GridKind::NeumannInterval => n - 1,
        GridKind::PeriodicTorus => n,
    };
    let mut slopes = vec![0.0; edge_count];
    let (mut pos, mut neg, mut ties) = (0usize, 0usize, 0usize);
    for (i, slope) in slopes.iter_mut().enumerate() {
        let flow = cumulative[i] - offset;
        if flow > 0.0 {
            *slope = -1.0;
            pos += 1;
        } else if flow < 0.0 {
            *slope = 1.0;
            neg += 1;
        } else {
            ties += 1;
        }
    }
    if domain.is_torus() && ties > 0 {
        // close the loop: Σ slopes = 0
        let balance = (pos as f64 - neg as f64) / ties as f64;
        for (i, slope) in slopes.iter_mut().enumerate() {
            if cumulative[i] - offset == 0.0 {
                *slope = balance;
            }
        }
    }
    let mut psi = vec![0.0; n];
    for i in 0..n - 1 {
        psi[i + 1] = psi[i] + h * slopes[i];
    }
    psi
}

/// Kantorovich–Rubinstein distance `sup_{Lip ψ ≤ 1} ∫ ψ d(m1−m2)`.
pub fn w1_distance(m1: &GridMeasure, m2: &GridMeasure) -> Result<f64> {
    Ok(w1_distance_with_potential(m1, m2)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridDomain;
    use std::f64::consts::PI;

    fn spike(domain: &GridDomain, at: usize) -> GridMeasure {
        let mut v = vec![0.0; domain.len()];
        v[at] = 1.0 / domain.weight(at);
        GridMeasure::new(domain.clone(), v).unwrap()
    }

    #[test]
    fn identical_measures_are_zero() {
        let d = GridDomain::torus(64).unwrap();
        let m = GridMeasure::from_unnormalized(
            d.clone(),
            d.sample(|x| 1.0 + 0.5 * (2.0 * PI * x).cos()).into_values(),
        )
        .unwrap();
        assert_eq!(w1_distance(&m, &m).unwrap(), 0.0);
    }

    #[test]
    fn antipodal_spikes_on_torus() {
        let d = GridDomain::torus(64).unwrap();
        let m1 = spike(&d, 16); // x = 0.25
        let m2 = spike(&d, 48); // x = 0.75
        let w = w1_distance(&m1, &m2).unwrap();
        assert!((w - 0.5).abs() < 1e-12, "w = {w}");
    }

    #[test]
    fn nearby_spikes_use_circular_metric() {
        let d = GridDomain::torus(64).unwrap();
        let m1 = spike(&d, 1);
        let m2 = spike(&d, 62); // distance 3/64 around the wrap, 61/64 across
        let w = w1_distance(&m1, &m2).unwrap();
        assert!((w - 3.0 / 64.0).abs() < 1e-12, "w = {w}");
    }

    #[test]
    fn potential_certifies_optimality() {
        // dual feasibility + matching objective value is an exact LP
        // optimality certificate
        let d = GridDomain::torus(48).unwrap();
        let m1 = GridMeasure::from_unnormalized(
            d.clone(),
            d.sample(|x| 1.0 + (2.0 * PI * x).cos()).into_values(),
        )
        .unwrap();
        let m2 = GridMeasure::uniform(d.clone());
        let (w, psi) = w1_distance_with_potential(&m1, &m2).unwrap();
        // 1-Lipschitz w.r.t. the circular metric, all pairs
        for i in 0..48 {
            for j in 0..48 {
                let lhs = (psi.values()[i] - psi.values()[j]).abs();
                let rhs = d.node_distance(i, j);
                assert!(lhs <= rhs + 1e-12, "Lipschitz violated at ({i},{j})");
            }
        }
        // objective matches
        let mut pairing = 0.0;
        for i in 0..48 {
            pairing += psi.values()[i] * d.weight(i) * (m1.density()[i] - m2.density()[i]);
        }
        assert!((pairing - w).abs() < 1e-12, "pairing {pairing} vs value {w}");
        assert!(w > 0.0);
    }

    #[test]
    fn interval_cdf_distance() {
        let d = GridDomain::interval(65).unwrap();
        let m1 = spike(&d, 16);
        let m2 = spike(&d, 48);
        let w = w1_distance(&m1, &m2).unwrap();
        assert!((w - 0.5).abs() < 1e-12, "w = {w}");
    }

    #[test]
    fn metric_axioms_on_random_triples() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let d = GridDomain::torus(32).unwrap();
        for _ in 0..100 {
            let mk = |rng: &mut rand_chacha::ChaCha8Rng| {
                let raw: Vec<f64> = (0..32).map(|_| rng.gen_range(0.05..1.0)).collect();
                GridMeasure::from_unnormalized(d.clone(), raw).unwrap()
            };
            let (a, b, c) = (mk(&mut rng), mk(&mut rng), mk(&mut rng));
            let ab = w1_distance(&a, &b).unwrap();
            let ba = w1_distance(&b, &a).unwrap();
            assert_eq!(ab, ba, "symmetry must be exact");
            let ac = w1_distance(&a, &c).unwrap();
            let cb = w1_distance(&c, &b).unwrap();
            assert!(ab <= ac + cb + 1e-12, "triangle inequality violated");
        }
    }
}
