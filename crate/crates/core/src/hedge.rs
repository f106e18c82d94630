//! Weighted hedge automata over unranked trees.
//!
//! A hedge rule `f(L) -> q : w` reads the sequence of child states through a
//! weighted word automaton `L` whose alphabet is the set of hedge states.
//! The weight of applying the rule to children in states `u` is
//! `w ⊗ L(u)`.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::semiring::{Boolean, LogReal, Real, Semiring, SemiringKind, ViterbiMaxTimes};
use crate::stepwise::stepwise_alphabet;
use crate::tree::{is_identifier, NodeTable, Tree, ADJUNCTION};
use crate::wta::{StateId, Wta};

/// Name of the built-in horizontal automaton accepting only the empty word.
pub const EPS: &str = "EPS";

#[derive(Debug, Clone, PartialEq)]
pub struct WfaTransition {
    pub from: usize,
    /// A hedge state.
    pub symbol: StateId,
    pub to: usize,
    pub weight: f64,
}

/// Weighted word automaton over hedge states. Repeated transitions with the
/// same endpoints and symbol simply add up as parallel paths.
#[derive(Debug, Clone, PartialEq)]
pub struct Wfa {
    name: String,
    states: Vec<String>,
    alphabet_len: usize,
    init: Vec<f64>,
    finals: Vec<f64>,
    trans: Vec<WfaTransition>,
}

impl Wfa {
    pub fn new<S: AsRef<str>>(name: &str, states: &[S], alphabet_len: usize) -> Result<Self> {
        if !is_identifier(name) {
            return Err(Error::InvalidModel(format!("`{name}` is not a valid automaton name")));
        }
        if states.is_empty() {
            return Err(Error::InvalidModel(format!("word automaton {name} has no states")));
        }
        let mut seen = std::collections::HashSet::new();
        for s in states {
            if !is_identifier(s.as_ref()) || !seen.insert(s.as_ref()) {
                return Err(Error::InvalidModel(format!("bad or repeated state `{}` in {name}", s.as_ref())));
            }
        }
        Ok(Wfa {
            name: name.to_string(),
            states: states.iter().map(|s| s.as_ref().to_string()).collect(),
            alphabet_len,
            init: vec![0.0; states.len()],
            finals: vec![0.0; states.len()],
            trans: Vec::new(),
        })
    }

    /// Accepts only the empty word, with weight one.
    pub fn epsilon(alphabet_len: usize) -> Self {
        let mut w = Wfa::new(EPS, &["e"], alphabet_len).expect("valid");
        w.init[0] = 1.0;
        w.finals[0] = 1.0;
        w
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn alphabet_len(&self) -> usize {
        self.alphabet_len
    }

    pub fn state_id(&self, name: &str) -> Result<usize> {
        self.states
            .iter()
            .position(|s| s == name)
            .ok_or_else(|| Error::UnknownState(format!("{name} (in {})", self.name)))
    }

    pub fn init(&self) -> &[f64] {
        &self.init
    }

    pub fn finals(&self) -> &[f64] {
        &self.finals
    }

    pub fn transitions(&self) -> &[WfaTransition] {
        &self.trans
    }

    pub fn set_init(&mut self, p: usize, w: f64) -> Result<()> {
        *self.init.get_mut(p).ok_or_else(|| Error::UnknownState(format!("#{p}")))? = w;
        Ok(())
    }

    pub fn set_final(&mut self, p: usize, w: f64) -> Result<()> {
        *self.finals.get_mut(p).ok_or_else(|| Error::UnknownState(format!("#{p}")))? = w;
        Ok(())
    }

    pub fn add_transition(&mut self, from: usize, symbol: StateId, to: usize, weight: f64) -> Result<()> {
        if from >= self.states.len() || to >= self.states.len() {
            return Err(Error::UnknownState(format!("transition endpoint in {}", self.name)));
        }
        if symbol >= self.alphabet_len {
            return Err(Error::UnknownSymbol(format!("#{symbol}")));
        }
        self.trans.push(WfaTransition { from, symbol, to, weight });
        Ok(())
    }

    /// One forward step where position weights are given per hedge state:
    /// `v'[p'] = ⊕ v[p] ⊗ trans(p, q, p') ⊗ letter[q]`.
    pub fn step<S: Semiring>(&self, v: &[S], letter: &[S]) -> Vec<S> {
        let mut out = vec![S::zero(); self.states.len()];
        for t in &self.trans {
            let x = v[t.from].times(S::from_weight(t.weight)).times(letter[t.symbol]);
            out[t.to] = out[t.to].plus(x);
        }
        out
    }

    pub fn start<S: Semiring>(&self) -> Vec<S> {
        self.init.iter().map(|&w| S::from_weight(w)).collect()
    }

    /// Continues the forward vector `v` over a word.
    pub fn forward<S: Semiring>(&self, mut v: Vec<S>, word: &[StateId]) -> Result<Vec<S>> {
        for &q in word {
            if q >= self.alphabet_len {
                return Err(Error::UnknownSymbol(format!("#{q}")));
            }
            let mut letter = vec![S::zero(); self.alphabet_len];
            letter[q] = S::one();
            v = self.step(&v, &letter);
        }
        Ok(v)
    }

    pub fn finish<S: Semiring>(&self, v: &[S]) -> S {
        v.iter()
            .zip(&self.finals)
            .fold(S::zero(), |acc, (&x, &f)| acc.plus(x.times(S::from_weight(f))))
    }

    pub fn weight_in<S: Semiring>(&self, word: &[StateId]) -> Result<S> {
        let v = self.forward(self.start::<S>(), word)?;
        Ok(self.finish(&v))
    }
}

/// Weight of `word` under `w` in real arithmetic: the sum over accepting
/// paths of `init · Π trans · final`.
pub fn wfa_weight(w: &Wfa, word: &[StateId]) -> Result<f64> {
    Ok(w.weight_in::<Real>(word)?.to_weight())
}

#[derive(Debug, Clone, PartialEq)]
pub struct HedgeRule {
    pub symbol: String,
    pub wfa: usize,
    pub target: StateId,
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub struct Wha {
    semiring: SemiringKind,
    alphabet: Vec<String>,
    states: Vec<String>,
    state_ids: HashMap<String, StateId>,
    root: Vec<f64>,
    wfas: Vec<Wfa>,
    rules: Vec<HedgeRule>,
}

impl Wha {
    /// The built-in [`EPS`] automaton is always present at index 0.
    pub fn new<S: AsRef<str>, T: AsRef<str>>(semiring: SemiringKind, alphabet: &[S], states: &[T]) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::InvalidModel("hedge automaton needs at least one state".into()));
        }
        for a in alphabet {
            let a = a.as_ref();
            if a == ADJUNCTION {
                return Err(Error::ReservedName(a.to_string()));
            }
            if !is_identifier(a) {
                return Err(Error::InvalidModel(format!("`{a}` is not a valid symbol name")));
            }
        }
        let mut state_ids = HashMap::new();
        for (i, s) in states.iter().enumerate() {
            let s = s.as_ref();
            if !is_identifier(s) || state_ids.insert(s.to_string(), i).is_some() {
                return Err(Error::InvalidModel(format!("bad or repeated state `{s}`")));
            }
        }
        Ok(Wha {
            semiring,
            alphabet: alphabet.iter().map(|s| s.as_ref().to_string()).collect(),
            states: states.iter().map(|s| s.as_ref().to_string()).collect(),
            state_ids,
            root: vec![0.0; states.len()],
            wfas: vec![Wfa::epsilon(states.len())],
            rules: Vec::new(),
        })
    }

    pub fn semiring(&self) -> SemiringKind {
        self.semiring
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
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

    pub fn set_root(&mut self, q: StateId, w: f64) -> Result<()> {
        *self.root.get_mut(q).ok_or_else(|| Error::UnknownState(format!("#{q}")))? = w;
        Ok(())
    }

    pub fn wfas(&self) -> &[Wfa] {
        &self.wfas
    }

    pub fn wfa_id(&self, name: &str) -> Result<usize> {
        self.wfas
            .iter()
            .position(|w| w.name == name)
            .ok_or_else(|| Error::InvalidModel(format!("unknown word automaton `{name}`")))
    }

    pub fn add_wfa(&mut self, wfa: Wfa) -> Result<usize> {
        if self.wfas.iter().any(|w| w.name == wfa.name) {
            return Err(Error::InvalidModel(format!("word automaton `{}` declared twice", wfa.name)));
        }
        if wfa.alphabet_len != self.states.len() {
            return Err(Error::InvalidModel(format!(
                "word automaton `{}` reads {} symbols but there are {} hedge states",
                wfa.name,
                wfa.alphabet_len,
                self.states.len()
            )));
        }
        self.wfas.push(wfa);
        Ok(self.wfas.len() - 1)
    }

    pub fn rules(&self) -> &[HedgeRule] {
        &self.rules
    }

    /// Adds `target -> symbol [wfa] : weight`.
    pub fn add_rule(&mut self, target: StateId, symbol: &str, wfa: usize, weight: f64) -> Result<usize> {
        if target >= self.states.len() {
            return Err(Error::UnknownState(format!("#{target}")));
        }
        if !self.alphabet.iter().any(|a| a == symbol) {
            return Err(Error::UnknownSymbol(symbol.to_string()));
        }
        if wfa >= self.wfas.len() {
            return Err(Error::InvalidModel(format!("no word automaton #{wfa}")));
        }
        self.rules.push(HedgeRule {
            symbol: symbol.to_string(),
            wfa,
            target,
            weight,
        });
        Ok(self.rules.len() - 1)
    }

    /// Sum over state-annotated runs, bottom-up: each node's state vector is
    /// obtained by running every matching rule's word automaton over the
    /// children's state vectors.
    pub fn evaluate_in<S: Semiring>(&self, t: &Tree) -> Result<S> {
        let table = NodeTable::new(t);
        let n = self.states.len();
        let mut beta: Vec<Vec<S>> = vec![Vec::new(); table.len()];
        for i in (0..table.len()).rev() {
            let label = &table.nodes[i].label;
            if !self.alphabet.iter().any(|a| a == label) {
                return Err(Error::UnknownSymbol(label.clone()));
            }
            let mut v = vec![S::zero(); n];
            for r in self.rules.iter().filter(|r| &r.symbol == label) {
                let wfa = &self.wfas[r.wfa];
                let mut fwd = wfa.start::<S>();
                for &c in &table.children[i] {
                    fwd = wfa.step(&fwd, &beta[c]);
                }
                let x = S::from_weight(r.weight).times(wfa.finish(&fwd));
                v[r.target] = v[r.target].plus(x);
            }
            beta[i] = v;
        }
        Ok(self
            .root
            .iter()
            .zip(&beta[0])
            .fold(S::zero(), |acc, (&r, &b)| acc.plus(S::from_weight(r).times(b))))
    }

    pub fn evaluate(&self, t: &Tree) -> Result<f64> {
        Ok(match self.semiring {
            SemiringKind::Real => self.evaluate_in::<Real>(t)?.to_weight(),
            SemiringKind::Log => self.evaluate_in::<LogReal>(t)?.to_weight(),
            SemiringKind::Viterbi => self.evaluate_in::<ViterbiMaxTimes>(t)?.to_weight(),
            SemiringKind::Bool => self.evaluate_in::<Boolean>(t)?.to_weight(),
        })
    }

    /// Equivalent weighted stepwise tree automaton over `{@/2}` plus the
    /// symbols as constants. States are pairs (hedge rule `r`, word state
    /// `p`), named `r<index>_<p>`:
    ///
    /// * `f -> (r,p) : init_r(p)` for every rule `r` on `f`;
    /// * `@((r,p), (r',p')) -> (r,p2) : final_r'(p') ⊗ w_r' ⊗ trans_r(p, q_r', p2)`;
    /// * `ρ((r,p)) = final_r(p) ⊗ w_r ⊗ ρ(q_r)`.
    ///
    /// Requires a commutative semiring.
    pub fn to_wsta(&self) -> Result<Wta> {
        if !self.semiring.is_commutative() {
            return Err(Error::WrongSemiring("commutative"));
        }
        let k = self.semiring;
        let mut names = Vec::new();
        let mut offset = Vec::with_capacity(self.rules.len());
        for (ri, r) in self.rules.iter().enumerate() {
            offset.push(names.len());
            names.extend(self.wfas[r.wfa].states.iter().map(|p| format!("r{ri}_{p}")));
        }
        if names.is_empty() {
            return Err(Error::InvalidModel("hedge automaton has no rules".into()));
        }
        let alphabet = stepwise_alphabet(self.alphabet.iter().map(String::as_str))?;
        let mut out = Wta::new(k, alphabet, &names)?;
        for (ri, r) in self.rules.iter().enumerate() {
            let wfa = &self.wfas[r.wfa];
            for p in 0..wfa.num_states() {
                let s = offset[ri] + p;
                out.set_root(s, k.times(k.times(wfa.finals[p], r.weight), self.root[r.target]))?;
                if wfa.init[p] != 0.0 {
                    out.add_rule(s, &r.symbol, &[], wfa.init[p])?;
                }
            }
            for t in &wfa.trans {
                for (rj, child) in self.rules.iter().enumerate().filter(|(_, c)| c.target == t.symbol) {
                    let child_wfa = &self.wfas[child.wfa];
                    for (pj, &fin) in child_wfa.finals.iter().enumerate() {
                        if fin == 0.0 {
                            continue;
                        }
                        let w = k.times(k.times(fin, child.weight), t.weight);
                        out.add_rule(offset[ri] + t.to, ADJUNCTION, &[offset[ri] + t.from, offset[rj] + pj], w)?;
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Violations of the probabilistic hedge automaton conditions.
#[derive(Debug, Clone, PartialEq)]
pub enum PhaViolation {
    NotReal(SemiringKind),
    WeightOutOfRange { what: String, weight: f64 },
    RootMass(f64),
    StateMass { state: String, sum: f64 },
    DeadState(String),
    WfaInit { wfa: String, sum: f64 },
    WfaState { wfa: String, state: String, sum: f64 },
}

impl fmt::Display for PhaViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhaViolation::NotReal(k) => write!(f, "semiring {k} is not real"),
            PhaViolation::WeightOutOfRange { what, weight } => write!(f, "{what} has weight {weight:?}, outside [0,1]"),
            PhaViolation::RootMass(sum) => write!(f, "root weights sum to {sum:?}"),
            PhaViolation::StateMass { state, sum } => write!(f, "state {state} sums to {sum:?}"),
            PhaViolation::DeadState(state) => write!(f, "state {state} has no hedge rules"),
            PhaViolation::WfaInit { wfa, sum } => write!(f, "wfa {wfa} initial weights sum to {sum:?}"),
            PhaViolation::WfaState { wfa, state, sum } => write!(f, "wfa {wfa} state {state} sums to {sum:?}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PhaReport {
    pub violations: Vec<PhaViolation>,
}

impl PhaReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for PhaReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_valid() {
            return f.write_str("valid");
        }
        let lines: Vec<String> = self.violations.iter().map(|v| format!("violation: {v}")).collect();
        f.write_str(&lines.join("\n"))
    }
}

/// Generative normalization for hedge automata, with tolerance 1e-9: root
/// weights and the rules targeting each state are distributions, and every
/// word automaton is probabilistic (initial weights sum to one; at every
/// word state, stopping plus all outgoing transitions sum to one).
pub fn check_pha(h: &Wha) -> PhaReport {
    const TOL: f64 = 1e-9;
    let mut violations = Vec::new();
    let range = |what: String, weight: f64, out: &mut Vec<PhaViolation>| {
        if !(0.0..=1.0).contains(&weight) {
            out.push(PhaViolation::WeightOutOfRange { what, weight });
        }
    };
    if !h.semiring.is_real() {
        violations.push(PhaViolation::NotReal(h.semiring));
    }
    for (q, &w) in h.root.iter().enumerate() {
        range(format!("root {}", h.states[q]), w, &mut violations);
    }
    let root_sum: f64 = h.root.iter().sum();
    if (root_sum - 1.0).abs() > TOL {
        violations.push(PhaViolation::RootMass(root_sum));
    }
    let mut sums = vec![0.0; h.states.len()];
    let mut has_rule = vec![false; h.states.len()];
    for r in &h.rules {
        range(
            format!("hrule {} -> {} [{}]", h.states[r.target], r.symbol, h.wfas[r.wfa].name),
            r.weight,
            &mut violations,
        );
        sums[r.target] += r.weight;
        has_rule[r.target] = true;
    }
    for q in 0..h.states.len() {
        let state = h.states[q].clone();
        if !has_rule[q] {
            violations.push(PhaViolation::DeadState(state));
        } else if (sums[q] - 1.0).abs() > TOL {
            violations.push(PhaViolation::StateMass { state, sum: sums[q] });
        }
    }
    for wfa in &h.wfas {
        for (p, (&i, &f)) in wfa.init.iter().zip(&wfa.finals).enumerate() {
            range(format!("init {} of {}", wfa.states[p], wfa.name), i, &mut violations);
            range(format!("final {} of {}", wfa.states[p], wfa.name), f, &mut violations);
        }
        for t in &wfa.trans {
            range(format!("transition of {}", wfa.name), t.weight, &mut violations);
        }
        let init_sum: f64 = wfa.init.iter().sum();
        if (init_sum - 1.0).abs() > TOL {
            violations.push(PhaViolation::WfaInit {
                wfa: wfa.name.clone(),
                sum: init_sum,
            });
        }
        let mut out_mass = wfa.finals.clone();
        for t in &wfa.trans {
            out_mass[t.from] += t.weight;
        }
        for (p, &sum) in out_mass.iter().enumerate() {
            if (sum - 1.0).abs() > TOL {
                violations.push(PhaViolation::WfaState {
                    wfa: wfa.name.clone(),
                    state: wfa.states[p].clone(),
                    sum,
                });
            }
        }
    }
    PhaReport { violations }
}

pub fn evaluate_wha(h: &Wha, t: &Tree) -> Result<f64> {
    h.evaluate(t)
}

pub fn wha_to_wsta(h: &Wha) -> Result<Wta> {
    h.to_wsta()
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use crate::stepwise::encode_stepwise;
    use crate::tree::{parse_tree, ParseMode};

    fn t(s: &str) -> Tree {
        parse_tree(s, ParseMode::Unranked).unwrap()
    }

    #[test]
    fn wfa_examples() {
        let w = w1();
        assert_eq!(wfa_weight(&w, &[]).unwrap(), 0.5);
        assert_eq!(wfa_weight(&w, &[0, 0]).unwrap(), 0.125);
        assert_eq!(wfa_weight(&w, &[1]).unwrap(), 0.0);
        assert!(matches!(wfa_weight(&w, &[5]), Err(Error::UnknownSymbol(_))));
        let eps = Wfa::epsilon(2);
        assert_eq!(wfa_weight(&eps, &[]).unwrap(), 1.0);
        assert_eq!(wfa_weight(&eps, &[0]).unwrap(), 0.0);
    }

    #[test]
    fn forward_composes() {
        let mut w = Wfa::new("W", &["x", "y"], 2).unwrap();
        w.set_init(0, 0.7).unwrap();
        w.set_init(1, 0.3).unwrap();
        w.add_transition(0, 0, 1, 0.4).unwrap();
        w.add_transition(1, 1, 0, 0.9).unwrap();
        w.add_transition(0, 1, 0, 0.2).unwrap();
        w.add_transition(1, 0, 1, 0.6).unwrap();
        w.set_final(0, 0.1).unwrap();
        w.set_final(1, 0.5).unwrap();
        let u = [0, 1, 1];
        let v = [0, 0, 1];
        let uv: Vec<usize> = u.iter().chain(&v).copied().collect();
        let split = w.forward(w.forward(w.start::<Real>(), &u).unwrap(), &v).unwrap();
        let whole = w.forward(w.start::<Real>(), &uv).unwrap();
        for (a, b) in split.iter().zip(&whole) {
            assert!((a.0 - b.0).abs() < 1e-15);
        }
    }

    #[test]
    fn evaluate_examples() {
        let h = h1();
        assert_eq!(h.evaluate(&t("b()")).unwrap(), 0.5);
        assert_eq!(h.evaluate(&t("b(a)")).unwrap(), 0.25);
        assert_eq!(h.evaluate(&t("b(a,a)")).unwrap(), 0.125);
        assert_eq!(h.evaluate(&t("a")).unwrap(), 0.0);
        assert!(matches!(h.evaluate(&t("c")), Err(Error::UnknownSymbol(_))));
    }

    #[test]
    fn wsta_examples() {
        let h = h1();
        let wsta = h.to_wsta().unwrap();
        assert_eq!(wsta.evaluate(&encode_stepwise(&t("b")).unwrap()).unwrap(), 0.5);
        let enc = encode_stepwise(&t("b(a,a)")).unwrap();
        assert_eq!(enc.render(), "@(@(b,a),a)");
        assert_eq!(wsta.evaluate(&enc).unwrap(), 0.125);
    }

    #[test]
    fn zero_weight_rule_is_inert() {
        let mut h = h1();
        let base = h.to_wsta().unwrap();
        h.add_rule(0, "b", 0, 0.0).unwrap();
        let wsta = h.to_wsta().unwrap();
        assert!(wsta.rules().iter().filter(|r| r.symbol == ADJUNCTION).any(|r| r.weight == 0.0));
        for s in ["b", "b(a)", "b(a,a)", "b(b,a)", "a"] {
            let enc = encode_stepwise(&t(s)).unwrap();
            assert_eq!(wsta.evaluate(&enc).unwrap(), base.evaluate(&enc).unwrap());
        }
    }

    #[test]
    fn pha_checks() {
        assert!(check_pha(&h1()).is_valid());
        let mut bad = h1();
        bad.wfas[1].set_final(0, 0.6).unwrap();
        let v = check_pha(&bad).violations;
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].to_string(), "wfa W1 state s sums to 1.1");
        let mut split = Wha::new(SemiringKind::Real, &["a", "b"], &["qa", "qb"]).unwrap();
        split.set_root(1, 1.0).unwrap();
        split.add_rule(0, "a", 0, 1.0).unwrap();
        split.add_rule(1, "b", 0, 0.5).unwrap();
        split.add_rule(1, "b", 0, 0.4).unwrap();
        let msgs: Vec<String> = check_pha(&split).violations.iter().map(ToString::to_string).collect();
        assert_eq!(msgs, ["state qb sums to 0.9"]);
    }

    #[test]
    fn h1_mass_approaches_one() {
        // b(a^n) has mass 0.5^(n+1); partial sums increase towards 1
        let h = h1();
        let mut total = 0.0;
        let mut prev = 0.0;
        for n in 0..=10 {
            let tree = Tree::node("b", vec![Tree::leaf("a"); n]);
            total += h.evaluate(&tree).unwrap();
            assert!(total > prev && total <= 1.0);
            prev = total;
        }
        assert!((1.0 - total) < 1e-3);
    }

    #[test]
    fn wsta_of_valid_pha_is_not_a_pta() {
        // Observed: the encoding of H1 gives state r1_s rule mass 1 (b) + 0.5 (@).
        let wsta = h1().to_wsta().unwrap();
        assert!(!crate::wta::check_pta(&wsta).is_valid());
    }
}
