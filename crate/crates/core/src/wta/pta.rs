//! Probabilistic tree automata: the generative normalization check,
//! seeded sampling, and conversion of non-negative automata by weight
//! pushing.

use std::fmt;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{StateId, Wta};
use crate::error::{Error, Result};
use crate::fixpoint::least_fixed_point;
use crate::semiring::SemiringKind;
use crate::tree::Tree;

/// Tolerance on every normalization sum.
pub const PTA_TOL: f64 = 1e-9;

/// Hard cap on sampled tree size; supercritical automata can otherwise grow
/// without bound before hitting the depth limit.
pub const MAX_SAMPLE_NODES: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq)]
pub enum PtaViolation {
    NotReal(SemiringKind),
    RootWeight { state: String, weight: f64 },
    RuleWeight { rule: String, weight: f64 },
    RootMass(f64),
    StateMass { state: String, sum: f64 },
    DeadState(String),
}

impl fmt::Display for PtaViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PtaViolation::NotReal(k) => write!(f, "semiring {k} is not real"),
            PtaViolation::RootWeight { state, weight } => {
                write!(f, "root weight of {state} is {weight:?}, outside [0,1]")
            }
            PtaViolation::RuleWeight { rule, weight } => {
                write!(f, "rule {rule} has weight {weight:?}, outside [0,1]")
            }
            PtaViolation::RootMass(sum) => write!(f, "root weights sum to {sum:?}"),
            PtaViolation::StateMass { state, sum } => write!(f, "state {state} sums to {sum:?}"),
            PtaViolation::DeadState(state) => write!(f, "state {state} has no rules"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PtaReport {
    pub violations: Vec<PtaViolation>,
}

impl PtaReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_valid() {
            Ok(())
        } else {
            let msgs: Vec<String> = self.violations.iter().map(ToString::to_string).collect();
            Err(Error::InvalidPta(msgs.join("; ")))
        }
    }
}

impl fmt::Display for PtaReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_valid() {
            return f.write_str("valid");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("\n")?;
            }
            write!(f, "violation: {v}")?;
        }
        Ok(())
    }
}

fn in_unit(w: f64) -> bool {
    (0.0..=1.0).contains(&w)
}

/// Checks the generative normalization: root weights form a distribution
/// and each state's rules form a distribution.
pub fn check_pta(a: &Wta) -> PtaReport {
    let mut violations = Vec::new();
    if !a.semiring().is_real() {
        violations.push(PtaViolation::NotReal(a.semiring()));
    }
    for (q, &w) in a.root_weights().iter().enumerate() {
        if !in_unit(w) {
            violations.push(PtaViolation::RootWeight {
                state: a.state_name(q).to_string(),
                weight: w,
            });
        }
    }
    for (i, r) in a.rules().iter().enumerate() {
        if !in_unit(r.weight) {
            violations.push(PtaViolation::RuleWeight {
                rule: a.describe_rule(i),
                weight: r.weight,
            });
        }
    }
    let root_sum: f64 = a.root_weights().iter().sum();
    if (root_sum - 1.0).abs() > PTA_TOL {
        violations.push(PtaViolation::RootMass(root_sum));
    }
    let mut sums = vec![0.0; a.num_states()];
    let mut has_rule = vec![false; a.num_states()];
    for r in a.rules() {
        sums[r.state] += r.weight;
        has_rule[r.state] = true;
    }
    for q in 0..a.num_states() {
        let state = a.state_name(q).to_string();
        if !has_rule[q] {
            violations.push(PtaViolation::DeadState(state));
        } else if (sums[q] - 1.0).abs() > PTA_TOL {
            violations.push(PtaViolation::StateMass { state, sum: sums[q] });
        }
    }
    PtaReport { violations }
}

/// Draws trees from a valid PTA: a root state from ρ, then each state is
/// expanded by a rule drawn from its rule distribution.
pub struct Sampler<'a> {
    pta: &'a Wta,
    rng: ChaCha8Rng,
    root: WeightedIndex<f64>,
    expansions: Vec<(Vec<usize>, WeightedIndex<f64>)>,
}

impl<'a> Sampler<'a> {
    pub fn new(pta: &'a Wta, seed: u64) -> Result<Self> {
        check_pta(pta).into_result()?;
        let dist = |ws: Vec<f64>| WeightedIndex::new(ws).map_err(|e| Error::InvalidPta(e.to_string()));
        let root = dist(pta.root_weights().to_vec())?;
        let mut expansions = Vec::with_capacity(pta.num_states());
        for q in 0..pta.num_states() {
            let rules: Vec<usize> = pta.rules_for_state(q).collect();
            let weights = rules.iter().map(|&i| pta.rule(i).weight).collect();
            expansions.push((rules, dist(weights)?));
        }
        Ok(Sampler {
            pta,
            rng: ChaCha8Rng::seed_from_u64(seed),
            root,
            expansions,
        })
    }

    /// One tree; the root sits at depth 0 and no node deeper than
    /// `max_depth` may be expanded.
    pub fn draw(&mut self, max_depth: usize) -> Result<Tree> {
        let mut preorder: Vec<(String, usize)> = Vec::new();
        let mut stack: Vec<(StateId, usize)> = vec![(self.root.sample(&mut self.rng), 0)];
        while let Some((q, depth)) = stack.pop() {
            if depth > max_depth {
                return Err(Error::DepthExceeded(max_depth));
            }
            if preorder.len() >= MAX_SAMPLE_NODES {
                return Err(Error::SizeExceeded(MAX_SAMPLE_NODES));
            }
            let (rules, dist) = &self.expansions[q];
            let rule = self.pta.rule(rules[dist.sample(&mut self.rng)]);
            preorder.push((rule.symbol.clone(), rule.children.len()));
            stack.extend(rule.children.iter().rev().map(|&c| (c, depth + 1)));
        }
        Ok(Tree::from_preorder(preorder).expect("well-formed pre-order"))
    }
}

/// Single draw with a fresh generator seeded by `seed`.
pub fn sample(pta: &Wta, seed: u64, max_depth: usize) -> Result<Tree> {
    Sampler::new(pta, seed)?.draw(max_depth)
}

/// Converts a non-negative real automaton into a PTA by weight pushing:
/// `w ↦ w·ΠZ(qi)/Z(q)` and `ρ(q) ↦ ρ(q)Z(q)/Σρ·Z`, where `Z` is the least
/// fixed point of the state-mass equations. States with `Z(q) = 0` are
/// dropped. The result computes `A(t) / Σ_t A(t)`.
pub fn to_pta(a: &Wta, tol: f64, max_iter: usize) -> Result<Wta> {
    if !a.semiring().is_real() {
        return Err(Error::WrongSemiring("real"));
    }
    if let Some(w) = a
        .rules()
        .iter()
        .map(|r| r.weight)
        .chain(a.root_weights().iter().copied())
        .find(|w| *w < 0.0)
    {
        return Err(Error::NegativeWeight(w));
    }
    let fp = least_fixed_point(a, tol, max_iter)?;
    if !fp.converged {
        return Err(Error::NotConverged(max_iter));
    }
    let z = fp.z;
    let mass: f64 = a.root_weights().iter().zip(&z).map(|(r, z)| r * z).sum();
    if mass <= 0.0 {
        return Err(Error::ZeroMass);
    }
    let kept: Vec<StateId> = (0..a.num_states()).filter(|&q| z[q] > 0.0).collect();
    let mut new_id = vec![None; a.num_states()];
    for (i, &q) in kept.iter().enumerate() {
        new_id[q] = Some(i);
    }
    let names: Vec<&str> = kept.iter().map(|&q| a.state_name(q)).collect();
    let mut out = Wta::new(SemiringKind::Real, a.alphabet().clone(), &names)?;
    for (i, &q) in kept.iter().enumerate() {
        out.set_root(i, a.root_weight(q) * z[q] / mass)?;
    }
    for r in a.rules() {
        let Some(lhs) = new_id[r.state] else { continue };
        let Some(kids) = r.children.iter().map(|&c| new_id[c]).collect::<Option<Vec<_>>>() else {
            continue;
        };
        let pushed = r.children.iter().fold(r.weight, |acc, &c| acc * z[c]) / z[r.state];
        out.add_rule(lhs, &r.symbol, &kids, pushed)?;
    }
    Ok(out)
}
