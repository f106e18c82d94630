//! Inside, outside and Viterbi computations for real-weighted automata.
//!
//! Node vectors are indexed like [`NodeTable::new`] (pre-order). Trees with
//! more than [`SCALE_THRESHOLD`] nodes are evaluated with a per-node scale
//! factor so that products of many small weights stay representable; the
//! exposed vectors are then the scaled ones and the scales are kept as logs.

use crate::error::{Error, Result};
use crate::tree::{NodeTable, Tree};
use crate::wta::{Run, StateId, Wta};

pub const SCALE_THRESHOLD: usize = 200;

#[derive(Debug, Clone)]
pub struct InsideTable {
    /// Scaled inside vectors `β̃(n)`.
    pub beta: Vec<Vec<f64>>,
    /// `ln s_n`, the scale divided out at node `n` itself.
    pub log_scale: Vec<f64>,
    /// `ln S_n`, the sum of `ln s` over the subtree of `n`: `β(n) = β̃(n)·S_n`.
    pub log_subtree_scale: Vec<f64>,
    /// `Σ_q ρ(q) β̃(root)[q]`.
    pub scaled_p: f64,
    pub log_p: f64,
    pub children: Vec<Vec<usize>>,
    pub rules_at: Vec<Vec<usize>>,
}

impl InsideTable {
    pub fn len(&self) -> usize {
        self.beta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beta.is_empty()
    }

    pub fn is_scaled(&self) -> bool {
        self.log_scale.iter().any(|&s| s != 0.0)
    }

    /// `p(t)`; may underflow to zero on scaled tables, see [`Self::log_p`].
    pub fn p(&self) -> f64 {
        if self.is_scaled() {
            self.scaled_p * self.log_subtree_scale[0].exp()
        } else {
            self.scaled_p
        }
    }

    /// Unscaled `β(n)`.
    pub fn beta(&self, n: usize) -> Vec<f64> {
        let f = self.log_subtree_scale[n].exp();
        self.beta[n].iter().map(|b| b * f).collect()
    }
}

fn check_real(a: &Wta) -> Result<()> {
    if !a.semiring().is_real() {
        return Err(Error::WrongSemiring("real"));
    }
    Ok(())
}

/// Bottom-up inside pass in real arithmetic; `p(t) = Σ_q ρ(q) β(root)[q]`.
pub fn inside(a: &Wta, t: &Tree) -> Result<InsideTable> {
    check_real(a)?;
    a.alphabet().check_tree(t)?;
    let table = NodeTable::new(t);
    let scaled = table.len() > SCALE_THRESHOLD;
    let n = a.num_states();
    let len = table.len();
    let mut beta = vec![Vec::new(); len];
    let mut log_scale = vec![0.0; len];
    let mut log_subtree_scale = vec![0.0; len];
    let mut rules_at = vec![Vec::new(); len];
    for i in (0..len).rev() {
        let mut v = vec![0.0; n];
        let rules = a.rules_for_symbol(&table.nodes[i].label);
        for &ri in rules {
            let r = a.rule(ri);
            let prod: f64 = table.children[i].iter().zip(&r.children).map(|(&c, &q)| beta[c][q]).product();
            v[r.state] += r.weight * prod;
        }
        rules_at[i] = rules.to_vec();
        let mut sub: f64 = table.children[i].iter().map(|&c| log_subtree_scale[c]).sum();
        if scaled {
            let m = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if m > 0.0 {
                v.iter_mut().for_each(|x| *x /= m);
                log_scale[i] = m.ln();
                sub += log_scale[i];
            }
        }
        log_subtree_scale[i] = sub;
        beta[i] = v;
    }
    let scaled_p: f64 = a.root_weights().iter().zip(&beta[0]).map(|(r, b)| r * b).sum();
    let log_p = scaled_p.ln() + log_subtree_scale[0];
    Ok(InsideTable {
        beta,
        log_scale,
        log_subtree_scale,
        scaled_p,
        log_p,
        children: table.children,
        rules_at,
    })
}

#[derive(Debug, Clone)]
pub struct OutsideTable {
    /// `α̂(n) = α(n)·S_n / S_root`; equal to `α` on unscaled tables.
    pub alpha: Vec<Vec<f64>>,
    log_ratio: Vec<f64>,
}

impl OutsideTable {
    /// Unscaled `α(n)`.
    pub fn alpha(&self, n: usize) -> Vec<f64> {
        let f = self.log_ratio[n].exp();
        self.alpha[n].iter().map(|x| x * f).collect()
    }
}

/// Top-down outside pass: `α(root) = ρ`, and a rule `(q, f, q₁…q_p, w)` at
/// node `n` adds `α(n)[q]·w·Π_{j≠i} β(c_j)[q_j]` to `α(c_i)[q_i]`.
pub fn outside(a: &Wta, ins: &InsideTable) -> OutsideTable {
    let len = ins.len();
    let mut alpha = vec![vec![0.0; a.num_states()]; len];
    alpha[0] = a.root_weights().to_vec();
    for n in 0..len {
        let kids = &ins.children[n];
        let s = ins.log_scale[n].exp();
        for &ri in &ins.rules_at[n] {
            let r = a.rule(ri);
            let top = alpha[n][r.state] * r.weight / s;
            if top == 0.0 {
                continue;
            }
            for (i, (&c, &qi)) in kids.iter().zip(&r.children).enumerate() {
                let others: f64 = kids
                    .iter()
                    .zip(&r.children)
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, (&cj, &qj))| ins.beta[cj][qj])
                    .product();
                alpha[c][qi] += top * others;
            }
        }
    }
    let root = ins.log_subtree_scale[0];
    let log_ratio = ins.log_subtree_scale.iter().map(|s| root - s).collect();
    OutsideTable { alpha, log_ratio }
}

/// Posterior expected usage of rules and root states for one tree.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedCounts {
    /// Indexed by rule index.
    pub rules: Vec<f64>,
    /// Root occupancy per state; sums to one.
    pub roots: Vec<f64>,
    pub log_p: f64,
}

/// `count(rule) = Σ_n α(n)[q]·w·Π β(children)[q̄] / p(t)` and
/// `root(q) = ρ(q) β(root)[q] / p(t)`.
pub fn expected_counts(a: &Wta, t: &Tree) -> Result<ExpectedCounts> {
    let ins = inside(a, t)?;
    if ins.scaled_p <= 0.0 {
        return Err(Error::ZeroProbability {
            index: 0,
            tree: t.render(),
        });
    }
    let out = outside(a, &ins);
    let mut rules = vec![0.0; a.rules().len()];
    for n in 0..ins.len() {
        let norm = ins.log_scale[n].exp() * ins.scaled_p;
        for &ri in &ins.rules_at[n] {
            let r = a.rule(ri);
            let prod: f64 = ins.children[n].iter().zip(&r.children).map(|(&c, &q)| ins.beta[c][q]).product();
            rules[ri] += out.alpha[n][r.state] * r.weight * prod / norm;
        }
    }
    let roots = a
        .root_weights()
        .iter()
        .zip(&ins.beta[0])
        .map(|(r, b)| r * b / ins.scaled_p)
        .collect();
    Ok(ExpectedCounts {
        rules,
        roots,
        log_p: ins.log_p,
    })
}

/// Best run as per-node states and rule indices (pre-order) plus its weight.
#[derive(Debug, Clone, PartialEq)]
pub struct ViterbiPath {
    pub states: Vec<StateId>,
    pub rules: Vec<usize>,
    pub weight: f64,
}

pub fn viterbi_path(a: &Wta, t: &Tree) -> Result<ViterbiPath> {
    check_real(a)?;
    a.alphabet().check_tree(t)?;
    let table = NodeTable::new(t);
    let len = table.len();
    let n = a.num_states();
    // best[i][q] = (score, rule index)
    let mut best: Vec<Vec<Option<(f64, usize)>>> = vec![Vec::new(); len];
    for i in (0..len).rev() {
        let mut v: Vec<Option<(f64, usize)>> = vec![None; n];
        'rules: for &ri in a.rules_for_symbol(&table.nodes[i].label) {
            let r = a.rule(ri);
            let mut score = r.weight;
            for (&c, &q) in table.children[i].iter().zip(&r.children) {
                match best[c][q] {
                    Some((s, _)) => score *= s,
                    None => continue 'rules,
                }
            }
            if v[r.state].is_none_or(|(s, _)| score > s) {
                v[r.state] = Some((score, ri));
            }
        }
        best[i] = v;
    }
    let mut top: Option<(f64, StateId)> = None;
    for (q, entry) in best[0].iter().enumerate() {
        if let Some((s, _)) = entry {
            let score = a.root_weight(q) * s;
            if top.is_none_or(|(b, _)| score > b) {
                top = Some((score, q));
            }
        }
    }
    let (weight, root_state) = top.ok_or(Error::NoRun)?;
    let mut states = vec![0; len];
    let mut rules = vec![0; len];
    states[0] = root_state;
    for i in 0..len {
        let ri = best[i][states[i]].expect("chosen state has a run").1;
        rules[i] = ri;
        for (&c, &q) in table.children[i].iter().zip(&a.rule(ri).children) {
            states[c] = q;
        }
    }
    Ok(ViterbiPath { states, rules, weight })
}

/// Maximum-weight run; ties go to the smallest state index, decided
/// bottom-up.
pub fn viterbi(a: &Wta, t: &Tree) -> Result<(Run, f64)> {
    let path = viterbi_path(a, t)?;
    let table = NodeTable::new(t);
    let mut built: Vec<Option<Run>> = vec![None; table.len()];
    for i in (0..table.len()).rev() {
        let children = table.children[i].iter().map(|&c| built[c].take().expect("built")).collect();
        built[i] = Some(Run::node(path.states[i], children));
    }
    Ok((built[0].take().expect("root"), path.weight))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumerate::enumerate_trees;
    use crate::semiring::SemiringKind;
    use crate::tree::{parse_tree, ParseMode};
    use crate::wta::fixtures::*;

    fn t(s: &str) -> Tree {
        parse_tree(s, ParseMode::Unranked).unwrap()
    }

    #[test]
    fn inside_examples() {
        let ins = inside(&p1(), &t("a")).unwrap();
        assert_eq!(ins.beta[0], [0.6]);
        assert_eq!(ins.p(), 0.6);
        let ins = inside(&p1(), &t("f(a,a)")).unwrap();
        assert!((ins.beta[0][0] - 0.144).abs() < 1e-15);
        assert!((ins.p() - 0.144).abs() < 1e-15);
        assert_eq!(inside(&one_state(0.0, 0.0), &t("f(a,a)")).unwrap().p(), 0.0);
        assert!(matches!(inside(&p1(), &t("b")), Err(Error::UnknownSymbol(_))));
    }

    #[test]
    fn outside_examples() {
        let a = p1();
        let ins = inside(&a, &t("a")).unwrap();
        assert_eq!(outside(&a, &ins).alpha(0), [1.0]);
        let ins = inside(&a, &t("f(a,a)")).unwrap();
        let out = outside(&a, &ins);
        assert!((out.alpha(1)[0] - 0.24).abs() < 1e-15);
    }

    #[test]
    fn node_marginals_match_p() {
        let mut a = Wta::new(SemiringKind::Real, fa(), &["x", "y"]).unwrap();
        a.set_root(0, 0.7).unwrap();
        a.set_root(1, 0.3).unwrap();
        a.add_rule(0, "f", &[0, 1], 0.3).unwrap();
        a.add_rule(0, "f", &[1, 1], 0.2).unwrap();
        a.add_rule(1, "f", &[0, 0], 0.4).unwrap();
        a.add_rule(0, "a", &[], 0.5).unwrap();
        a.add_rule(1, "a", &[], 0.6).unwrap();
        let tree = t("f(a,f(a,a))");
        let ins = inside(&a, &tree).unwrap();
        let out = outside(&a, &ins);
        let p = ins.p();
        assert!((p - a.evaluate(&tree).unwrap()).abs() < 1e-15);
        for n in 0..ins.len() {
            let m: f64 = out.alpha(n).iter().zip(ins.beta(n)).map(|(x, y)| x * y).sum();
            assert!((m - p).abs() <= 1e-9 * p, "node {n}: {m} vs {p}");
        }
    }

    #[test]
    fn scaled_inside_matches_log_evaluate() {
        let a = p1();
        let mut tree = Tree::leaf("a");
        for _ in 0..400 {
            tree = Tree::node("f", vec![Tree::leaf("a"), tree]);
        }
        let ins = inside(&a, &tree).unwrap();
        assert!(ins.is_scaled());
        let expected = a.log_evaluate(&tree).unwrap();
        assert!((ins.log_p - expected).abs() < 1e-9 * expected.abs());
        let out = outside(&a, &ins);
        let c = expected_counts(&a, &tree).unwrap();
        assert!((c.rules[a.rule_index(0, "f", &[0, 0]).unwrap()] - 400.0).abs() < 1e-9);
        assert!((c.rules[a.rule_index(0, "a", &[]).unwrap()] - 401.0).abs() < 1e-9);
        let m: f64 = out.alpha[7].iter().zip(&ins.beta[7]).map(|(x, y)| x * y).sum::<f64>() / ins.scaled_p;
        assert!((m - 1.0).abs() < 1e-9);
    }

    #[test]
    fn expected_count_examples() {
        let a = p1();
        let f = a.rule_index(0, "f", &[0, 0]).unwrap();
        let l = a.rule_index(0, "a", &[]).unwrap();
        let c = expected_counts(&a, &t("a")).unwrap();
        assert_eq!((c.rules[f], c.rules[l]), (0.0, 1.0));
        let c = expected_counts(&a, &t("f(a,a)")).unwrap();
        assert!((c.rules[f] - 1.0).abs() < 1e-12 && (c.rules[l] - 2.0).abs() < 1e-12);
        let c = expected_counts(&a2(), &t("a")).unwrap();
        assert!((c.roots[0] - 0.6).abs() < 1e-12 && (c.roots[1] - 0.4).abs() < 1e-12);
        assert!(matches!(
            expected_counts(&one_state(0.0, 0.0), &t("a")),
            Err(Error::ZeroProbability { .. })
        ));
    }

    #[test]
    fn viterbi_examples() {
        let (run, w) = viterbi(&a2(), &t("a")).unwrap();
        assert_eq!(run, Run::leaf(0));
        assert!((w - 0.15).abs() < 1e-15);
        let (run, w) = viterbi(&p1(), &t("f(a,a)")).unwrap();
        assert_eq!(run.states(), [0, 0, 0]);
        assert!((w - 0.144).abs() < 1e-15);
        let mut tie = a2();
        tie.set_rule_weight(1, 0.3);
        assert_eq!(viterbi(&tie, &t("a")).unwrap().0, Run::leaf(0));
        assert!(matches!(viterbi(&a2(), &t("f(a,a)")), Err(Error::NoRun)));
    }

    #[test]
    fn viterbi_matches_enumeration() {
        let mut a = Wta::new(SemiringKind::Real, fa(), &["x", "y"]).unwrap();
        a.set_root(0, 0.9).unwrap();
        a.set_root(1, 0.4).unwrap();
        a.add_rule(0, "f", &[0, 1], 0.3).unwrap();
        a.add_rule(1, "f", &[1, 0], 0.8).unwrap();
        a.add_rule(1, "f", &[1, 1], 0.5).unwrap();
        a.add_rule(0, "a", &[], 0.5).unwrap();
        a.add_rule(1, "a", &[], 0.7).unwrap();
        for tree in enumerate_trees(&fa(), 7) {
            let runs = a.enumerate_runs(&tree).unwrap();
            let best = runs.iter().map(|r| a.weight_of_run(&tree, r).unwrap()).fold(f64::NEG_INFINITY, f64::max);
            match viterbi(&a, &tree) {
                Ok((run, w)) => {
                    assert!((w - best).abs() <= 1e-12);
                    assert!((a.weight_of_run(&tree, &run).unwrap() - w).abs() <= 1e-12);
                }
                Err(Error::NoRun) => assert!(runs.is_empty()),
                Err(e) => panic!("{e}"),
            }
        }
    }
}
