//! Properness of probabilistic tree automata.
//!
//! A PTA induces a multi-type branching process whose first-moment matrix
//! `M[q][q']` is the expected number of `q'`-children of a `q`-node. Spectral
//! radius below one is sufficient for the total mass over finite trees to be
//! one; the mass itself is computed as the least fixed point of the
//! state-mass equations and reported alongside.

use std::collections::VecDeque;
use std::fmt;

use crate::error::{Error, Result};
use crate::fixpoint::least_fixed_point;
use crate::wta::{check_pta, StateId, Wta};

pub const RADIUS_EPS: f64 = 1e-9;
pub const MASS_EPS: f64 = 1e-6;

/// States reachable top-down from the support of ρ through positive rules,
/// in declaration order.
pub fn reachable_states(a: &Wta) -> Vec<StateId> {
    let mut seen = vec![false; a.num_states()];
    let mut queue: VecDeque<StateId> = VecDeque::new();
    for (q, &r) in a.root_weights().iter().enumerate() {
        if r > 0.0 {
            seen[q] = true;
            queue.push_back(q);
        }
    }
    while let Some(q) = queue.pop_front() {
        for ri in a.rules_for_state(q) {
            let rule = a.rule(ri);
            if rule.weight <= 0.0 {
                continue;
            }
            for &c in &rule.children {
                if !seen[c] {
                    seen[c] = true;
                    queue.push_back(c);
                }
            }
        }
    }
    (0..a.num_states()).filter(|&q| seen[q]).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentMatrix {
    /// Row/column `i` stands for `states[i]`.
    pub states: Vec<StateId>,
    pub entries: Vec<Vec<f64>>,
}

impl MomentMatrix {
    pub fn dim(&self) -> usize {
        self.states.len()
    }
}

/// `M[q][q'] = Σ_{rules q -> f(q̄) : w} w · #{i : q̄ᵢ = q'}` over reachable
/// states. Requires a valid PTA.
pub fn moment_matrix(a: &Wta) -> Result<MomentMatrix> {
    check_pta(a).into_result()?;
    let states = reachable_states(a);
    let mut pos = vec![usize::MAX; a.num_states()];
    for (i, &q) in states.iter().enumerate() {
        pos[q] = i;
    }
    let mut entries = vec![vec![0.0; states.len()]; states.len()];
    for (i, &q) in states.iter().enumerate() {
        for ri in a.rules_for_state(q) {
            let rule = a.rule(ri);
            for &c in &rule.children {
                if pos[c] != usize::MAX {
                    entries[i][pos[c]] += rule.weight;
                }
            }
        }
    }
    Ok(MomentMatrix { states, entries })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadiusEstimate {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn power_iteration(m: &[Vec<f64>], shift: f64, tol: f64, max_iter: usize) -> RadiusEstimate {
    let n = m.len();
    let mut x = vec![1.0 / n as f64; n];
    let mut prev = f64::NAN;
    for k in 1..=max_iter {
        let y: Vec<f64> = (0..n)
            .map(|i| m[i].iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() + shift * x[i])
            .collect();
        let r: f64 = y.iter().map(|v| v.abs()).sum();
        if r == 0.0 {
            return RadiusEstimate {
                value: 0.0,
                iterations: k,
                converged: true,
            };
        }
        if (r - prev).abs() < tol {
            return RadiusEstimate {
                value: r - shift,
                iterations: k,
                converged: true,
            };
        }
        prev = r;
        x = y.into_iter().map(|v| v / r).collect();
    }
    RadiusEstimate {
        value: prev - shift,
        iterations: max_iter,
        converged: false,
    }
}

/// Power iteration from the all-ones vector with L1 normalization; the
/// estimate is `‖Mx‖₁` for the current unit iterate. A 1×1 matrix is
/// returned exactly. If the plain iteration oscillates (periodic matrices),
/// it is retried on `M + I` and the shift removed.
pub fn spectral_radius(m: &[Vec<f64>], tol: f64, max_iter: usize) -> RadiusEstimate {
    match m.len() {
        0 => RadiusEstimate {
            value: 0.0,
            iterations: 0,
            converged: true,
        },
        1 => RadiusEstimate {
            value: m[0][0].abs(),
            iterations: 0,
            converged: true,
        },
        _ => {
            let plain = power_iteration(m, 0.0, tol, max_iter);
            if plain.converged {
                return plain;
            }
            let shifted = power_iteration(m, 1.0, tol, max_iter);
            if shifted.converged {
                RadiusEstimate {
                    iterations: plain.iterations + shifted.iterations,
                    ..shifted
                }
            } else {
                plain
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub total: f64,
    pub per_state: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Least fixed point of `Z(q) = Σ w·Π Z(qᵢ)` from `Z = 0`, and
/// `Z_total = Σ ρ(q) Z(q)`. Requires a valid PTA.
pub fn partition(a: &Wta, tol: f64, max_iter: usize) -> Result<Partition> {
    check_pta(a).into_result()?;
    let fp = least_fixed_point(a, tol, max_iter)?;
    let total = a.root_weights().iter().zip(&fp.z).map(|(r, z)| r * z).sum();
    Ok(Partition {
        total,
        per_state: fp.z,
        iterations: fp.iterations,
        converged: fp.converged,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Consistent,
    Inconsistent,
    Critical,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Consistent => "Consistent",
            Verdict::Inconsistent => "Inconsistent",
            Verdict::Critical => "Critical",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport {
    pub verdict: Verdict,
    pub radius: RadiusEstimate,
    pub mass: f64,
    pub per_state: Vec<f64>,
}

impl fmt::Display for ConsistencyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "verdict={} radius={:?} mass={:?}",
            self.verdict, self.radius.value, self.mass
        )
    }
}

/// Consistent when the moment matrix has radius `< 1 - 1e-9`; otherwise
/// Inconsistent when the partition mass is `< 1 - 1e-6`, and Critical when
/// neither test decides.
pub fn check_consistency(a: &Wta) -> Result<ConsistencyReport> {
    let m = moment_matrix(a)?;
    let radius = spectral_radius(&m.entries, 1e-14, 100_000);
    let part = partition(a, 1e-14, 10_000)?;
    if !part.converged {
        return Err(Error::NotConverged(part.iterations));
    }
    let verdict = if radius.converged && radius.value < 1.0 - RADIUS_EPS {
        Verdict::Consistent
    } else if part.total < 1.0 - MASS_EPS {
        Verdict::Inconsistent
    } else {
        Verdict::Critical
    };
    Ok(ConsistencyReport {
        verdict,
        radius,
        mass: part.total,
        per_state: part.per_state,
    })
}
