//! Expectation-maximization and Viterbi training with fixed rule structure.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::infer::{expected_counts, viterbi_path, ExpectedCounts};
use crate::sample::TreeSample;
use crate::wta::{StateId, Wta};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainOptions {
    pub max_iters: usize,
    pub rel_tol: f64,
    /// Additive smoothing δ added to every expected count.
    pub smoothing: f64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            max_iters: 50,
            rel_tol: 1e-9,
            smoothing: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EmStep {
    pub model: Wta,
    /// `Σ count(t)·ln p(t)` under the input model.
    pub loglik: f64,
    /// States whose rules received no count and kept their old weights.
    pub stale: Vec<StateId>,
}

fn check_input(a: &Wta, s: &TreeSample) -> Result<()> {
    if s.is_empty() {
        return Err(Error::EmptySample);
    }
    if !a.semiring().is_real() {
        return Err(Error::WrongSemiring("real"));
    }
    let mut weights = a.rules().iter().map(|r| r.weight).chain(a.root_weights().iter().copied());
    if let Some(w) = weights.find(|w| *w < 0.0) {
        return Err(Error::NegativeWeight(w));
    }
    Ok(())
}

/// New weights from accumulated counts: each state's rules get their
/// relative counts, roots get occupancy / N.
fn maximize(a: &Wta, rule_counts: &[f64], root_counts: &[f64], total: f64, delta: f64) -> (Wta, Vec<StateId>) {
    let mut out = a.clone();
    let mut stale = Vec::new();
    for q in 0..a.num_states() {
        let idx: Vec<usize> = a.rules_for_state(q).collect();
        if idx.is_empty() {
            continue;
        }
        let sum: f64 = idx.iter().map(|&i| rule_counts[i] + delta).sum();
        if sum > 0.0 {
            for &i in &idx {
                out.set_rule_weight(i, (rule_counts[i] + delta) / sum);
            }
        } else {
            stale.push(q);
        }
    }
    let denom = total + delta * a.num_states() as f64;
    for (q, &c) in root_counts.iter().enumerate() {
        out.set_root(q, (c + delta) / denom).expect("state exists");
    }
    (out, stale)
}

/// One Baum-Welch step. Per-tree expectations may be computed in parallel;
/// they are summed in sample order.
pub fn em_step(a: &Wta, s: &TreeSample, smoothing: f64) -> Result<EmStep> {
    check_input(a, s)?;
    let per_tree: Vec<Result<ExpectedCounts>> = s
        .items()
        .par_iter()
        .enumerate()
        .map(|(index, (t, _))| {
            expected_counts(a, t).map_err(|e| match e {
                Error::ZeroProbability { tree, .. } => Error::ZeroProbability { index, tree },
                other => other,
            })
        })
        .collect();
    let mut rule_counts = vec![0.0; a.rules().len()];
    let mut root_counts = vec![0.0; a.num_states()];
    let mut loglik = 0.0;
    for (ec, (_, count)) in per_tree.into_iter().zip(s.iter()) {
        let ec = ec?;
        let c = count as f64;
        for (acc, x) in rule_counts.iter_mut().zip(&ec.rules) {
            *acc += c * x;
        }
        for (acc, x) in root_counts.iter_mut().zip(&ec.roots) {
            *acc += c * x;
        }
        loglik += c * ec.log_p;
    }
    let (model, stale) = maximize(a, &rule_counts, &root_counts, s.total() as f64, smoothing);
    Ok(EmStep { model, loglik, stale })
}

fn max_change(a: &Wta, b: &Wta) -> f64 {
    let rules = a.rules().iter().zip(b.rules()).map(|(x, y)| (x.weight - y.weight).abs());
    let roots = a.root_weights().iter().zip(b.root_weights()).map(|(x, y)| (x - y).abs());
    rules.chain(roots).fold(0.0, f64::max)
}

#[derive(Debug, Clone)]
pub struct Trained {
    pub model: Wta,
    /// Log-likelihood of the sample before each step.
    pub trace: Vec<f64>,
    pub converged: bool,
}

/// Repeats [`em_step`] until the relative log-likelihood improvement or the
/// largest parameter change drops below `rel_tol`, or `max_iters` steps ran.
/// `on_iter(k, loglik)` is called after step `k` (1-based).
pub fn train(a: &Wta, s: &TreeSample, opts: &TrainOptions, mut on_iter: impl FnMut(usize, f64)) -> Result<Trained> {
    let mut model = a.clone();
    let mut trace: Vec<f64> = Vec::new();
    let mut converged = false;
    for k in 1..=opts.max_iters {
        let step = em_step(&model, s, opts.smoothing)?;
        on_iter(k, step.loglik);
        let flat = max_change(&model, &step.model) <= opts.rel_tol;
        let slow = trace
            .last()
            .is_some_and(|&prev| (step.loglik - prev) / prev.abs().max(f64::MIN_POSITIVE) < opts.rel_tol);
        trace.push(step.loglik);
        model = step.model;
        if flat || slow {
            converged = true;
            break;
        }
    }
    Ok(Trained { model, trace, converged })
}

/// Hard-count training: each tree contributes the rules of its Viterbi run.
/// The returned trace holds the Viterbi log-likelihood before each step.
pub fn viterbi_train(a: &Wta, s: &TreeSample, max_iters: usize) -> Result<Trained> {
    check_input(a, s)?;
    let mut model = a.clone();
    let mut trace = Vec::new();
    let mut converged = false;
    for _ in 0..max_iters {
        let paths: Vec<_> = s
            .items()
            .par_iter()
            .enumerate()
            .map(|(index, (t, _))| match viterbi_path(&model, t) {
                Ok(p) if p.weight > 0.0 => Ok(p),
                Ok(_) | Err(Error::NoRun) => Err(Error::ZeroProbability {
                    index,
                    tree: t.render(),
                }),
                Err(e) => Err(e),
            })
            .collect();
        let mut rule_counts = vec![0.0; model.rules().len()];
        let mut root_counts = vec![0.0; model.num_states()];
        let mut loglik = 0.0;
        for (path, (_, count)) in paths.into_iter().zip(s.iter()) {
            let path = path?;
            let c = count as f64;
            for &ri in &path.rules {
                rule_counts[ri] += c;
            }
            root_counts[path.states[0]] += c;
            loglik += c * path.weight.ln();
        }
        trace.push(loglik);
        let (next, _) = maximize(&model, &rule_counts, &root_counts, s.total() as f64, 0.0);
        let same = max_change(&model, &next) == 0.0;
        model = next;
        if same {
            converged = true;
            break;
        }
    }
    Ok(Trained { model, trace, converged })
}
