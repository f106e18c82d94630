//! Learning linear representations of tree series from Hankel values.
//!
//! Candidate trees are scanned in (size, text) order. A candidate whose
//! children are all basis trees joins the basis when its vector of values
//! over the contexts is farther than `rank_tol` (L2) from the span of the
//! basis vectors. For every symbol `f` and basis tuple `b̄`, `μ_f(b̄)` is the
//! least-squares coordinate vector of `f(b̄)` on the basis, and `λ` holds the
//! values of the basis trees, so the representation reproduces the series on
//! the basis exactly.

use std::collections::{BTreeSet, HashMap};

use indexmap::IndexMap;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::OrthoBasis;
use crate::linear::LinearRep;
use crate::sample::TreeSample;
use crate::stepwise::encode_stepwise;
use crate::tree::{Context, RankedAlphabet, Tree};
use crate::wta::Wta;

/// A function from trees to reals.
pub trait TreeSeries: Sync {
    fn value(&self, t: &Tree) -> f64;
}

impl<F: Fn(&Tree) -> f64 + Sync> TreeSeries for F {
    fn value(&self, t: &Tree) -> f64 {
        self(t)
    }
}

/// Trees outside the automaton's alphabet get 0.
impl TreeSeries for Wta {
    fn value(&self, t: &Tree) -> f64 {
        self.evaluate(t).unwrap_or(0.0)
    }
}

impl TreeSeries for LinearRep {
    fn value(&self, t: &Tree) -> f64 {
        self.eval_linear(t).unwrap_or(0.0)
    }
}

/// Relative frequencies `count(t) / N` of a sample.
#[derive(Debug, Clone)]
pub struct EmpiricalSeries {
    values: HashMap<Tree, f64>,
    total: u64,
}

impl EmpiricalSeries {
    pub fn new(s: &TreeSample) -> Result<Self> {
        let total = s.total();
        if total == 0 {
            return Err(Error::EmptySample);
        }
        let mut counts: HashMap<Tree, u64> = HashMap::new();
        for (t, c) in s.iter() {
            *counts.entry(t.clone()).or_default() += c;
        }
        let values = counts.into_iter().map(|(t, c)| (t, c as f64 / total as f64)).collect();
        Ok(EmpiricalSeries { values, total })
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn support(&self) -> impl Iterator<Item = &Tree> {
        self.values.keys()
    }
}

impl TreeSeries for EmpiricalSeries {
    fn value(&self, t: &Tree) -> f64 {
        self.values.get(t).copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HankelBlock {
    pub rows: Vec<Context>,
    pub cols: Vec<Tree>,
    /// `entries[i][j] = S(rows[i][cols[j]])`.
    pub entries: Vec<Vec<f64>>,
}

pub fn build_hankel(series: &dyn TreeSeries, contexts: &[Context], trees: &[Tree]) -> HankelBlock {
    let entries = contexts
        .par_iter()
        .map(|c| trees.iter().map(|t| series.value(&c.substitute(t))).collect())
        .collect();
    HankelBlock {
        rows: contexts.to_vec(),
        cols: trees.to_vec(),
        entries,
    }
}

fn column(series: &dyn TreeSeries, contexts: &[Context], t: &Tree) -> Vec<f64> {
    contexts.iter().map(|c| series.value(&c.substitute(t))).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearnParams {
    pub rank_tol: f64,
    pub max_dim: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct Learned {
    pub rep: LinearRep,
    pub basis: Vec<Tree>,
    /// The basis scan stopped at `max_dim`.
    pub truncated: bool,
}

fn sort_trees(trees: &mut [Tree]) {
    trees.sort_by_cached_key(|t| (t.size(), t.render()));
}

/// Greedy basis construction over the given contexts and candidate trees.
/// The contexts must include the hole; candidates are expected to be closed
/// under subtrees.
pub fn learn_rational_series(
    series: &dyn TreeSeries,
    alphabet: &RankedAlphabet,
    contexts: &[Context],
    candidates: &[Tree],
    params: LearnParams,
) -> Result<Learned> {
    if !contexts.contains(&Context::hole()) {
        return Err(Error::InvalidModel("contexts must include the hole".into()));
    }
    if candidates.is_empty() {
        return Err(Error::EmptySample);
    }
    for t in candidates {
        alphabet.check_tree(t)?;
    }
    let mut order = candidates.to_vec();
    sort_trees(&mut order);
    order.dedup();
    let columns: Vec<Vec<f64>> = order.par_iter().map(|t| column(series, contexts, t)).collect();

    let mut space = OrthoBasis::new(contexts.len());
    let mut basis: Vec<Tree> = Vec::new();
    let mut truncated = false;
    for (t, col) in order.iter().zip(&columns) {
        if !t.children.iter().all(|c| basis.contains(c)) {
            continue;
        }
        if params.max_dim.is_some_and(|m| basis.len() >= m) {
            if space.distance(col) > params.rank_tol {
                truncated = true;
                break;
            }
            continue;
        }
        if space.push_if_independent(col, params.rank_tol).0 {
            basis.push(t.clone());
        }
    }
    if basis.is_empty() {
        return Ok(Learned {
            rep: LinearRep::zero(alphabet.clone(), 1)?,
            basis,
            truncated,
        });
    }

    let d = basis.len();
    let mut mu = IndexMap::new();
    for (name, arity) in alphabet.iter() {
        let tuples = index_tuples(d, arity);
        let coords: Vec<Vec<f64>> = tuples
            .par_iter()
            .map(|tuple| {
                let t = Tree::node(name, tuple.iter().map(|&i| basis[i].clone()).collect());
                space.coordinates(&column(series, contexts, &t))
            })
            .collect();
        // entry (out, in_1..in_p) at out·d^p + flat(tuple)
        let block = tuples.len();
        let mut tensor = vec![0.0; d * block];
        for (k, x) in coords.iter().enumerate() {
            for (out, v) in x.iter().enumerate() {
                tensor[out * block + k] = *v;
            }
        }
        mu.insert(name.to_string(), tensor);
    }
    let lambda = basis.iter().map(|b| series.value(b)).collect();
    Ok(Learned {
        rep: LinearRep::new(alphabet.clone(), lambda, mu)?,
        basis,
        truncated,
    })
}

/// All tuples in `[0, d)^p`, last position varying fastest.
fn index_tuples(d: usize, p: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..p {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<usize>| {
                (0..d).map(move |i| {
                    let mut t = prefix.clone();
                    t.push(i);
                    t
                })
            })
            .collect();
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleLearnOptions {
    pub rank_tol: f64,
    pub max_dim: Option<usize>,
    /// Largest context (hole included) taken from the sample.
    pub context_size: usize,
    /// Largest candidate subtree taken from the sample.
    pub candidate_size: usize,
    /// Learn over stepwise encodings of unranked trees.
    pub unranked: bool,
}

impl Default for SampleLearnOptions {
    fn default() -> Self {
        SampleLearnOptions {
            rank_tol: 1e-2,
            max_dim: None,
            context_size: 9,
            candidate_size: 7,
            unranked: false,
        }
    }
}

/// Learns from relative frequencies, with contexts and candidates drawn from
/// the sample trees up to the configured sizes.
pub fn learn_from_sample(s: &TreeSample, opts: &SampleLearnOptions) -> Result<Learned> {
    if s.is_empty() {
        return Err(Error::EmptySample);
    }
    let encoded;
    let s = if opts.unranked {
        encoded = s.map_trees(encode_stepwise)?;
        &encoded
    } else {
        s
    };
    let alphabet = RankedAlphabet::infer(s.trees())?;
    let series = EmpiricalSeries::new(s)?;
    let mut contexts: BTreeSet<Context> = BTreeSet::new();
    let mut candidates: BTreeSet<Tree> = BTreeSet::new();
    for t in s.trees() {
        for c in Context::all_of(t) {
            if c.size() <= opts.context_size {
                contexts.insert(c);
            }
        }
        for sub in t.subtrees() {
            if sub.size() <= opts.candidate_size {
                candidates.insert(sub.clone());
            }
        }
    }
    let mut contexts: Vec<Context> = contexts.into_iter().collect();
    contexts.sort_by_cached_key(|c| (c.size(), c.to_string()));
    if !contexts.contains(&Context::hole()) {
        contexts.insert(0, Context::hole());
    }
    let candidates: Vec<Tree> = candidates.into_iter().collect();
    learn_rational_series(
        &series,
        &alphabet,
        &contexts,
        &candidates,
        LearnParams {
            rank_tol: opts.rank_tol,
            max_dim: opts.max_dim,
        },
    )
}

/// [`learn_from_sample`] followed by conversion; weights may be negative.
pub fn learn_wta(s: &TreeSample, opts: &SampleLearnOptions) -> Result<Wta> {
    Ok(learn_from_sample(s, opts)?.rep.to_wta())
}
