//! Weighted tree automata with generative root weights.
//!
//! A [`Wta`] stores its rule and root weights as linear-domain `f64`s; the
//! semiring tag decides how they are combined when evaluating.

mod pta;

pub use pta::{check_pta, sample, to_pta, PtaReport, PtaViolation, Sampler, MAX_SAMPLE_NODES, PTA_TOL};

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::semiring::{Boolean, LogReal, Real, Semiring, SemiringKind, ViterbiMaxTimes};
use crate::tree::{is_identifier, NodeTable, RankedAlphabet, Tree};

pub type StateId = usize;

#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub state: StateId,
    pub symbol: String,
    pub children: Vec<StateId>,
    pub weight: f64,
}

type RuleKey = (String, StateId, Vec<StateId>);

#[derive(Debug, Clone)]
pub struct Wta {
    semiring: SemiringKind,
    alphabet: RankedAlphabet,
    states: Vec<String>,
    state_ids: HashMap<String, StateId>,
    root: Vec<f64>,
    rules: Vec<Rule>,
    keys: HashMap<RuleKey, usize>,
    // rule indices per symbol, sorted by (state, children)
    by_symbol: HashMap<String, Vec<usize>>,
}

impl Wta {
    pub fn new<S: AsRef<str>>(semiring: SemiringKind, alphabet: RankedAlphabet, states: &[S]) -> Result<Self> {
        alphabet.validate()?;
        if states.is_empty() {
            return Err(Error::InvalidModel("automaton needs at least one state".into()));
        }
        let mut state_ids = HashMap::new();
        for (i, s) in states.iter().enumerate() {
            let s = s.as_ref();
            if !is_identifier(s) {
                return Err(Error::InvalidModel(format!("`{s}` is not a valid state name")));
            }
            if state_ids.insert(s.to_string(), i).is_some() {
                return Err(Error::InvalidModel(format!("state `{s}` declared twice")));
            }
        }
        Ok(Wta {
            semiring,
            alphabet,
            states: states.iter().map(|s| s.as_ref().to_string()).collect(),
            state_ids,
            root: vec![0.0; states.len()],
            rules: Vec::new(),
            keys: HashMap::new(),
            by_symbol: HashMap::new(),
        })
    }

    pub fn semiring(&self) -> SemiringKind {
        self.semiring
    }

    pub fn with_semiring(mut self, semiring: SemiringKind) -> Self {
        self.semiring = semiring;
        self
    }

    pub fn alphabet(&self) -> &RankedAlphabet {
        &self.alphabet
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn state_name(&self, q: StateId) -> &str {
        &self.states[q]
    }

    pub fn state_id(&self, name: &str) -> Result<StateId> {
        self.state_ids
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownState(name.to_string()))
    }

    pub fn root_weights(&self) -> &[f64] {
        &self.root
    }

    pub fn root_weight(&self, q: StateId) -> f64 {
        self.root[q]
    }

    /// Sets ρ(q); repeated calls for the same state are merged by ⊕.
    pub fn add_root(&mut self, q: StateId, weight: f64) -> Result<()> {
        self.check_state(q)?;
        self.root[q] = self.semiring.plus(self.root[q], weight);
        Ok(())
    }

    pub fn set_root(&mut self, q: StateId, weight: f64) -> Result<()> {
        self.check_state(q)?;
        self.root[q] = weight;
        Ok(())
    }

    fn check_state(&self, q: StateId) -> Result<()> {
        if q < self.states.len() {
            Ok(())
        } else {
            Err(Error::UnknownState(format!("#{q}")))
        }
    }

    /// Adds `q -> f(q1..qp) : w`; a rule with an existing key has its
    /// weight merged by ⊕. Returns the rule index.
    pub fn add_rule(&mut self, q: StateId, symbol: &str, children: &[StateId], weight: f64) -> Result<usize> {
        self.check_state(q)?;
        for &c in children {
            self.check_state(c)?;
        }
        match self.alphabet.arity(symbol) {
            None => return Err(Error::UnknownSymbol(symbol.to_string())),
            Some(a) if a != children.len() => {
                return Err(Error::ArityMismatch {
                    symbol: symbol.to_string(),
                    expected: a,
                    found: children.len(),
                })
            }
            Some(_) => {}
        }
        let key = (symbol.to_string(), q, children.to_vec());
        if let Some(&i) = self.keys.get(&key) {
            self.rules[i].weight = self.semiring.plus(self.rules[i].weight, weight);
            return Ok(i);
        }
        let idx = self.rules.len();
        self.rules.push(Rule {
            state: q,
            symbol: symbol.to_string(),
            children: children.to_vec(),
            weight,
        });
        self.keys.insert(key, idx);
        let list = self.by_symbol.entry(symbol.to_string()).or_default();
        let rules = &self.rules;
        let pos = list.partition_point(|&j| (rules[j].state, &rules[j].children) < (q, &rules[idx].children));
        list.insert(pos, idx);
        Ok(idx)
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn rule(&self, idx: usize) -> &Rule {
        &self.rules[idx]
    }

    pub fn set_rule_weight(&mut self, idx: usize, weight: f64) {
        self.rules[idx].weight = weight;
    }

    pub fn rule_index(&self, q: StateId, symbol: &str, children: &[StateId]) -> Option<usize> {
        self.keys.get(&(symbol.to_string(), q, children.to_vec())).copied()
    }

    /// Rule indices for `symbol`, ordered by `(state, children)`.
    pub fn rules_for_symbol(&self, symbol: &str) -> &[usize] {
        self.by_symbol.get(symbol).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Rule indices with left-hand side `q`, in insertion order.
    pub fn rules_for_state(&self, q: StateId) -> impl Iterator<Item = usize> + '_ {
        self.rules.iter().enumerate().filter(move |(_, r)| r.state == q).map(|(i, _)| i)
    }

    /// Copy of the automaton with every weight (rules and root) replaced.
    pub fn map_weights(&self, mut f: impl FnMut(f64) -> f64) -> Wta {
        let mut out = self.clone();
        for r in &mut out.rules {
            r.weight = f(r.weight);
        }
        for w in &mut out.root {
            *w = f(*w);
        }
        out
    }

    /// `q -> f(q1, q2)` in the text-format notation.
    pub fn describe_rule(&self, idx: usize) -> String {
        let r = &self.rules[idx];
        if r.children.is_empty() {
            format!("{} -> {}", self.states[r.state], r.symbol)
        } else {
            let kids: Vec<&str> = r.children.iter().map(|&c| self.states[c].as_str()).collect();
            format!("{} -> {}({})", self.states[r.state], r.symbol, kids.join(", "))
        }
    }

    /// Per-node inside vectors in the semiring `S`, indexed like
    /// [`NodeTable::new`] on `t`.
    pub fn inside_vectors<S: Semiring>(&self, t: &Tree) -> Result<Vec<Vec<S>>> {
        self.alphabet.check_tree(t)?;
        let table = NodeTable::new(t);
        let n = self.states.len();
        let mut beta: Vec<Vec<S>> = vec![Vec::new(); table.len()];
        for i in (0..table.len()).rev() {
            let mut v = vec![S::zero(); n];
            for &ri in self.rules_for_symbol(&table.nodes[i].label) {
                let rule = &self.rules[ri];
                let mut acc = S::from_weight(rule.weight);
                for (&c, &q) in table.children[i].iter().zip(&rule.children) {
                    acc = acc.times(beta[c][q]);
                }
                v[rule.state] = v[rule.state].plus(acc);
            }
            beta[i] = v;
        }
        Ok(beta)
    }

    /// `A(t)` in semiring `S`: ⊕_q ρ(q) ⊗ β(root)[q], bottom-up in one pass.
    pub fn evaluate_in<S: Semiring>(&self, t: &Tree) -> Result<S> {
        let beta = self.inside_vectors::<S>(t)?;
        Ok(self
            .root
            .iter()
            .zip(&beta[0])
            .fold(S::zero(), |acc, (&r, &b)| acc.plus(S::from_weight(r).times(b))))
    }

    /// `A(t)` in the automaton's own semiring, as a linear-domain number.
    pub fn evaluate(&self, t: &Tree) -> Result<f64> {
        Ok(match self.semiring {
            SemiringKind::Real => self.evaluate_in::<Real>(t)?.to_weight(),
            SemiringKind::Log => self.evaluate_in::<LogReal>(t)?.to_weight(),
            SemiringKind::Viterbi => self.evaluate_in::<ViterbiMaxTimes>(t)?.to_weight(),
            SemiringKind::Bool => self.evaluate_in::<Boolean>(t)?.to_weight(),
        })
    }

    /// `ln A(t)` computed in the log domain; for non-negative real weights on
    /// trees deep enough to underflow `f64`.
    pub fn log_evaluate(&self, t: &Tree) -> Result<f64> {
        if !self.semiring.is_real() {
            return Err(Error::WrongSemiring("real"));
        }
        if let Some(w) = self.rules.iter().map(|r| r.weight).chain(self.root.iter().copied()).find(|w| *w < 0.0) {
            return Err(Error::NegativeWeight(w));
        }
        Ok(self.evaluate_in::<LogReal>(t)?.0)
    }

    /// ⊗ of ρ(root state) and then every node's rule weight in pre-order.
    pub fn weight_of_run_in<S: Semiring>(&self, t: &Tree, run: &Run) -> Result<S> {
        self.check_state(run.state).map_err(|_| Error::UnknownState(format!("#{}", run.state)))?;
        let mut acc = S::from_weight(self.root[run.state]);
        let mut stack = vec![(t, run)];
        while let Some((node, r)) = stack.pop() {
            if node.children.len() != r.children.len() {
                return Err(Error::RunMismatch(format!(
                    "node `{}` has {} children but its run has {}",
                    node.label,
                    node.children.len(),
                    r.children.len()
                )));
            }
            if r.state >= self.states.len() {
                return Err(Error::UnknownState(format!("#{}", r.state)));
            }
            let kids: Vec<StateId> = r.children.iter().map(|c| c.state).collect();
            if let Some(&bad) = kids.iter().find(|&&c| c >= self.states.len()) {
                return Err(Error::UnknownState(format!("#{bad}")));
            }
            let idx = self.rule_index(r.state, &node.label, &kids).ok_or_else(|| {
                let names: Vec<&str> = kids.iter().map(|&c| self.states[c].as_str()).collect();
                Error::MissingRule(format!("{} -> {}({})", self.states[r.state], node.label, names.join(", ")))
            })?;
            acc = acc.times(S::from_weight(self.rules[idx].weight));
            for (c, rc) in node.children.iter().zip(&r.children).rev() {
                stack.push((c, rc));
            }
        }
        Ok(acc)
    }

    pub fn weight_of_run(&self, t: &Tree, run: &Run) -> Result<f64> {
        Ok(match self.semiring {
            SemiringKind::Real => self.weight_of_run_in::<Real>(t, run)?.to_weight(),
            SemiringKind::Log => self.weight_of_run_in::<LogReal>(t, run)?.to_weight(),
            SemiringKind::Viterbi => self.weight_of_run_in::<ViterbiMaxTimes>(t, run)?.to_weight(),
            SemiringKind::Bool => self.weight_of_run_in::<Boolean>(t, run)?.to_weight(),
        })
    }

    /// Every valid run on `t`, ordered lexicographically by the pre-order
    /// sequence of states (states compared by declaration order).
    pub fn enumerate_runs(&self, t: &Tree) -> Result<Vec<Run>> {
        const GUARD: u128 = 1_000_000;
        let size = t.size() as u32;
        let candidates = (self.states.len() as u128).checked_pow(size).unwrap_or(u128::MAX);
        if candidates > GUARD {
            return Err(Error::RunGuard(candidates));
        }
        self.alphabet.check_tree(t)?;
        let table = NodeTable::new(t);
        let mut runs: Vec<Vec<Run>> = vec![Vec::new(); table.len()];
        for i in (0..table.len()).rev() {
            let label = &table.nodes[i].label;
            let kids = &table.children[i];
            let mut here = Vec::new();
            for q in 0..self.states.len() {
                // first child varies slowest
                let mut partial: Vec<Vec<&Run>> = vec![vec![]];
                for &c in kids {
                    partial = partial
                        .into_iter()
                        .flat_map(|prefix| {
                            runs[c].iter().map(move |r| {
                                let mut p = prefix.clone();
                                p.push(r);
                                p
                            })
                        })
                        .collect();
                }
                for combo in partial {
                    let states: Vec<StateId> = combo.iter().map(|r| r.state).collect();
                    if self.rule_index(q, label, &states).is_some() {
                        here.push(Run {
                            state: q,
                            children: combo.into_iter().cloned().collect(),
                        });
                    }
                }
            }
            runs[i] = here;
        }
        Ok(std::mem::take(&mut runs[0]))
    }

    /// No two rules share `(f, q1..qp)` with different left-hand states.
    pub fn is_deterministic(&self) -> bool {
        let mut seen: HashMap<(&str, &[StateId]), StateId> = HashMap::new();
        for r in &self.rules {
            match seen.insert((r.symbol.as_str(), r.children.as_slice()), r.state) {
                Some(prev) if prev != r.state => return false,
                _ => {}
            }
        }
        true
    }

    /// Renders a run as the subject tree with `label:state` node labels.
    pub fn render_run(&self, t: &Tree, run: &Run) -> String {
        let mut out = String::new();
        enum Step<'a> {
            Open(&'a Tree, &'a Run),
            Text(&'static str),
        }
        let mut stack = vec![Step::Open(t, run)];
        while let Some(step) = stack.pop() {
            match step {
                Step::Text(s) => out.push_str(s),
                Step::Open(node, r) => {
                    out.push_str(&node.label);
                    out.push(':');
                    out.push_str(self.states.get(r.state).map(String::as_str).unwrap_or("?"));
                    if !node.children.is_empty() {
                        out.push('(');
                        stack.push(Step::Text(")"));
                        for (i, (c, rc)) in node.children.iter().zip(&r.children).enumerate().rev() {
                            stack.push(Step::Open(c, rc));
                            if i > 0 {
                                stack.push(Step::Text(","));
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

impl fmt::Display for Wta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::format::write_wta(self))
    }
}

/// Tree-shaped assignment of a state to every node.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Run {
    pub state: StateId,
    pub children: Vec<Run>,
}

impl Run {
    pub fn leaf(state: StateId) -> Self {
        Run {
            state,
            children: Vec::new(),
        }
    }

    pub fn node(state: StateId, children: Vec<Run>) -> Self {
        Run { state, children }
    }

    /// States in pre-order.
    pub fn states(&self) -> Vec<StateId> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(r) = stack.pop() {
            out.push(r.state);
            stack.extend(r.children.iter().rev());
        }
        out
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use crate::tree::{parse_tree, ParseMode};

    fn t(s: &str) -> Tree {
        parse_tree(s, ParseMode::Unranked).unwrap()
    }

    fn all_q(tree: &Tree) -> Run {
        Run::node(0, tree.children.iter().map(all_q).collect())
    }

    #[test]
    fn weight_of_run_examples() {
        let p1 = p1();
        assert_eq!(p1.weight_of_run(&t("a"), &Run::leaf(0)).unwrap(), 0.6);
        let fa = t("f(a,a)");
        assert!((p1.weight_of_run(&fa, &all_q(&fa)).unwrap() - 0.144).abs() < 1e-15);
        assert!(matches!(p1.weight_of_run(&t("a"), &Run::leaf(7)), Err(Error::UnknownState(_))));
        assert!(matches!(p1.weight_of_run(&fa, &Run::leaf(0)), Err(Error::RunMismatch(_))));
        let a2 = a2();
        let bad = Run::node(0, vec![Run::leaf(0), Run::leaf(0)]);
        assert!(matches!(a2.weight_of_run(&fa, &bad), Err(Error::MissingRule(_))));
    }

    #[test]
    fn enumerate_runs_examples() {
        let fa = t("f(a,a)");
        assert_eq!(p1().enumerate_runs(&fa).unwrap(), vec![all_q(&fa)]);
        assert_eq!(a2().enumerate_runs(&t("a")).unwrap(), vec![Run::leaf(0), Run::leaf(1)]);
        let mut no_leaf = Wta::new(SemiringKind::Real, fixtures::fa(), &["q"]).unwrap();
        no_leaf.set_root(0, 1.0).unwrap();
        no_leaf.add_rule(0, "f", &[0, 0], 0.4).unwrap();
        assert!(no_leaf.enumerate_runs(&t("a")).unwrap().is_empty());
    }

    #[test]
    fn enumerate_runs_order_and_guard() {
        let mut a = Wta::new(SemiringKind::Real, fixtures::fa(), &["x", "y"]).unwrap();
        for q in 0..2 {
            a.add_rule(q, "a", &[], 1.0).unwrap();
            for l in 0..2 {
                for r in 0..2 {
                    a.add_rule(q, "f", &[l, r], 1.0).unwrap();
                }
            }
        }
        let runs = a.enumerate_runs(&t("f(a,a)")).unwrap();
        let seqs: Vec<Vec<StateId>> = runs.iter().map(Run::states).collect();
        assert_eq!(seqs.len(), 8);
        let mut sorted = seqs.clone();
        sorted.sort();
        assert_eq!(seqs, sorted);
        // 2^21 candidates exceeds the guard
        let big = crate::enumerate::enumerate_trees(&fixtures::fa(), 21).pop().unwrap();
        assert!(matches!(a.enumerate_runs(&big), Err(Error::RunGuard(_))));
    }

    #[test]
    fn evaluate_examples() {
        let v = p1().evaluate(&t("f(a,f(a,a))")).unwrap();
        assert!((v - 0.03456).abs() < 1e-15);
        assert!((a2().evaluate(&t("a")).unwrap() - 0.25).abs() < 1e-15);
        let vit = a2().with_semiring(SemiringKind::Viterbi);
        assert!((vit.evaluate(&t("a")).unwrap() - 0.15).abs() < 1e-15);
        assert!(matches!(p1().evaluate(&t("g(a)")), Err(Error::UnknownSymbol(_))));
    }

    #[test]
    fn log_evaluate_deep_tree() {
        // a comb with 2000 f-nodes underflows in the linear domain
        let mut tree = Tree::leaf("a");
        for _ in 0..2000 {
            tree = Tree::node("f", vec![Tree::leaf("a"), tree]);
        }
        let p1 = p1();
        assert_eq!(p1.evaluate(&tree).unwrap(), 0.0);
        let expect = 2000.0 * 0.4f64.ln() + 2001.0 * 0.6f64.ln();
        assert!((p1.log_evaluate(&tree).unwrap() - expect).abs() < 1e-9);
    }

    #[test]
    fn determinism() {
        assert!(p1().is_deterministic());
        assert!(!a2().is_deterministic());
        let empty = Wta::new(SemiringKind::Real, fixtures::fa(), &["q"]).unwrap();
        assert!(empty.is_deterministic());
    }

    #[test]
    fn duplicate_rules_merge() {
        let mut a = Wta::new(SemiringKind::Real, fixtures::fa(), &["q"]).unwrap();
        let i = a.add_rule(0, "a", &[], 0.25).unwrap();
        let j = a.add_rule(0, "a", &[], 0.5).unwrap();
        assert_eq!(i, j);
        assert_eq!(a.rules().len(), 1);
        assert_eq!(a.rule(i).weight, 0.75);
        let mut v = a.with_semiring(SemiringKind::Viterbi);
        v.add_rule(0, "a", &[], 0.5).unwrap();
        assert_eq!(v.rule(0).weight, 0.75);
        assert!(matches!(v.add_rule(0, "f", &[0], 1.0), Err(Error::ArityMismatch { .. })));
        assert!(matches!(v.add_rule(0, "g", &[], 1.0), Err(Error::UnknownSymbol(_))));
        assert!(v.add_rule(3, "a", &[], 1.0).is_err());
    }

    #[test]
    fn render_run() {
        let fa = t("f(a,a)");
        assert_eq!(p1().render_run(&fa, &all_q(&fa)), "f:q(a:q,a:q)");
    }
}
