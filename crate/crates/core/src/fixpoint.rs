//! Least fixed point of the state-mass equations
//! `Z(q) = Σ_{q -> f(q1..qp) : w} w · Π Z(qi)`.
//!
//! The system is a monotone polynomial system. Iteration starts at `Z = 0`;
//! each step takes the componentwise maximum of the plain (Kleene) update
//! and a Newton step, so iterates never decrease and stay below the least
//! fixed point. Newton keeps the critical case (spectral radius exactly one)
//! from crawling at the `1/k` rate of plain iteration.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::wta::Wta;

/// Iteration stops with [`Error::Divergence`] once any mass exceeds this.
pub const DIVERGENCE_BOUND: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPoint {
    pub z: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// `F(z)` for every state.
pub fn kleene_step(a: &Wta, z: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.num_states()];
    for r in a.rules() {
        out[r.state] += r.children.iter().fold(r.weight, |acc, &c| acc * z[c]);
    }
    out
}

fn jacobian(a: &Wta, z: &[f64]) -> DMatrix<f64> {
    let n = a.num_states();
    let mut j = DMatrix::zeros(n, n);
    for r in a.rules() {
        for (i, &ci) in r.children.iter().enumerate() {
            let partial = r
                .children
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != i)
                .fold(r.weight, |acc, (_, &c)| acc * z[c]);
            j[(r.state, ci)] += partial;
        }
    }
    j
}

fn newton_step(a: &Wta, z: &[f64], fz: &[f64]) -> Option<Vec<f64>> {
    let n = z.len();
    let m = DMatrix::identity(n, n) - jacobian(a, z);
    let rhs = DVector::from_iterator(n, fz.iter().zip(z).map(|(f, x)| f - x));
    let delta = m.lu().solve(&rhs)?;
    let next: Vec<f64> = z.iter().zip(delta.iter()).map(|(x, d)| x + d).collect();
    next.iter().all(|v| v.is_finite()).then_some(next)
}

/// Iterates until the sup-norm change drops below `tol`, or `max_iter`
/// steps (returned with `converged = false`). Requires non-negative weights.
pub fn least_fixed_point(a: &Wta, tol: f64, max_iter: usize) -> Result<FixedPoint> {
    let n = a.num_states();
    let mut z = vec![0.0; n];
    for k in 1..=max_iter {
        let fz = kleene_step(a, &z);
        let mut next = fz.clone();
        if let Some(newton) = newton_step(a, &z, &fz) {
            for (v, nv) in next.iter_mut().zip(newton) {
                *v = v.max(nv);
            }
        }
        for (v, old) in next.iter_mut().zip(&z) {
            *v = v.max(*old);
        }
        if next.iter().any(|v| !v.is_finite() || *v > DIVERGENCE_BOUND) {
            return Err(Error::Divergence);
        }
        let change = next.iter().zip(&z).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        z = next;
        if change < tol {
            return Ok(FixedPoint {
                z,
                iterations: k,
                converged: true,
            });
        }
    }
    Ok(FixedPoint {
        z,
        iterations: max_iter,
        converged: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wta::fixtures::one_state;

    #[test]
    fn one_state_roots() {
        let z = least_fixed_point(&one_state(0.4, 0.6), 1e-14, 1000).unwrap();
        assert!(z.converged);
        assert!((z.z[0] - 1.0).abs() < 1e-12);
        let z = least_fixed_point(&one_state(0.6, 0.4), 1e-14, 1000).unwrap();
        assert!((z.z[0] - 2.0 / 3.0).abs() < 1e-12);
        // critical: plain iteration would need ~10^6 steps. The root is double,
        // so f64 cancellation in F(z) - z limits accuracy to about sqrt(eps).
        let z = least_fixed_point(&one_state(0.5, 0.5), 1e-13, 1000).unwrap();
        assert!(z.converged && z.iterations < 100, "{z:?}");
        assert!((z.z[0] - 1.0).abs() < 1e-7, "{z:?}");
    }

    #[test]
    fn divergence_detected() {
        // z = 0.5 + 2 z^2 has no real root
        assert_eq!(least_fixed_point(&one_state(2.0, 0.5), 1e-12, 10_000), Err(Error::Divergence));
    }

    #[test]
    fn matches_plain_iteration() {
        let a = one_state(0.8, 0.3);
        let fast = least_fixed_point(&a, 1e-15, 1000).unwrap().z[0];
        let mut z = vec![0.0];
        for _ in 0..10_000 {
            z = kleene_step(&a, &z);
        }
        assert!((fast - z[0]).abs() < 1e-12);
        assert!((fast - 0.5).abs() < 1e-12);
    }
}
