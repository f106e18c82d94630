#![allow(dead_code)]

use indexmap::IndexMap;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use treeseries::hedge::{Wfa, Wha};
use treeseries::linear::LinearRep;
use treeseries::{RankedAlphabet, SemiringKind, Tree, Wta};

pub fn fa() -> RankedAlphabet {
    RankedAlphabet::new([("f", 2), ("a", 0)]).unwrap()
}

pub fn one_state(rho: f64, wf: f64, wa: f64) -> Wta {
    let mut a = Wta::new(SemiringKind::Real, fa(), &["q"]).unwrap();
    a.set_root(0, rho).unwrap();
    a.add_rule(0, "f", &[0, 0], wf).unwrap();
    a.add_rule(0, "a", &[], wa).unwrap();
    a
}

pub fn p1() -> Wta {
    one_state(1.0, 0.4, 0.6)
}

pub fn p_bad() -> Wta {
    one_state(1.0, 0.6, 0.4)
}

pub fn critical() -> Wta {
    one_state(1.0, 0.5, 0.5)
}

/// ρ(q)=2, q→a:0.3, q→f(q,q):0.8; Z(q)=0.5 and the series equals P1.
pub fn a_half() -> Wta {
    one_state(2.0, 0.8, 0.3)
}

pub fn r1() -> LinearRep {
    let mut mu = IndexMap::new();
    mu.insert("f".to_string(), vec![0.4]);
    mu.insert("a".to_string(), vec![0.6]);
    LinearRep::new(fa(), vec![1.0], mu).unwrap()
}

/// R1 embedded in dimension 2 with a zero second coordinate.
pub fn r1_padded() -> LinearRep {
    let mut f = vec![0.0; 8];
    f[0] = 0.4;
    let mut mu = IndexMap::new();
    mu.insert("f".to_string(), f);
    mu.insert("a".to_string(), vec![0.6, 0.0]);
    LinearRep::new(fa(), vec![1.0, 0.0], mu).unwrap()
}

pub fn h1() -> Wha {
    let mut h = Wha::new(SemiringKind::Real, &["a", "b"], &["qa", "qb"]).unwrap();
    h.set_root(1, 1.0).unwrap();
    let mut w = Wfa::new("W1", &["s"], 2).unwrap();
    w.set_init(0, 1.0).unwrap();
    w.add_transition(0, 0, 0, 0.5).unwrap();
    w.set_final(0, 0.5).unwrap();
    let w1 = h.add_wfa(w).unwrap();
    h.add_rule(0, "a", 0, 1.0).unwrap();
    h.add_rule(1, "b", w1, 1.0).unwrap();
    h
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random WTA over {f/2, a/0} with 1..=max_states states; each possible rule
/// is present with probability 0.6 and weights are uniform in [0, 1].
pub fn random_wta(rng: &mut ChaCha8Rng, max_states: usize) -> Wta {
    let n = rng.random_range(1..=max_states);
    let names: Vec<String> = (0..n).map(|i| format!("q{i}")).collect();
    let mut a = Wta::new(SemiringKind::Real, fa(), &names).unwrap();
    for q in 0..n {
        a.set_root(q, rng.random::<f64>()).unwrap();
        if rng.random_bool(0.8) {
            a.add_rule(q, "a", &[], rng.random::<f64>()).unwrap();
        }
        for l in 0..n {
            for r in 0..n {
                if rng.random_bool(0.6) {
                    a.add_rule(q, "f", &[l, r], rng.random::<f64>()).unwrap();
                }
            }
        }
    }
    a
}

/// Random PTA with every rule over {f/2, a/0} present and the branching
/// weight kept subcritical.
pub fn random_full_pta(rng: &mut ChaCha8Rng, n: usize) -> Wta {
    let names: Vec<String> = (0..n).map(|i| format!("q{i}")).collect();
    let mut a = Wta::new(SemiringKind::Real, fa(), &names).unwrap();
    let roots: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
    let rs: f64 = roots.iter().sum();
    for q in 0..n {
        a.set_root(q, roots[q] / rs).unwrap();
        let leaf = rng.random_range(0.55..0.9);
        let binary: Vec<f64> = (0..n * n).map(|_| rng.random_range(0.1..1.0)).collect();
        let bs: f64 = binary.iter().sum();
        a.add_rule(q, "a", &[], leaf).unwrap();
        for (k, w) in binary.iter().enumerate() {
            a.add_rule(q, "f", &[k / n, k % n], (1.0 - leaf) * w / bs).unwrap();
        }
    }
    a
}

/// Random WHA over symbols {a, b} with up to two hedge states and two word
/// automata of up to two states; weights uniform in [0, 1].
pub fn random_wha(rng: &mut ChaCha8Rng) -> Wha {
    let n = rng.random_range(1..=2);
    let states: Vec<String> = (0..n).map(|i| format!("h{i}")).collect();
    let mut h = Wha::new(SemiringKind::Real, &["a", "b"], &states).unwrap();
    for q in 0..n {
        h.set_root(q, rng.random::<f64>()).unwrap();
    }
    let mut ids = vec![0];
    for k in 0..rng.random_range(1..=2) {
        let m = rng.random_range(1..=2);
        let ws: Vec<String> = (0..m).map(|i| format!("s{i}")).collect();
        let mut w = Wfa::new(&format!("W{k}"), &ws, n).unwrap();
        for p in 0..m {
            w.set_init(p, rng.random::<f64>()).unwrap();
            w.set_final(p, rng.random::<f64>()).unwrap();
            for sym in 0..n {
                for p2 in 0..m {
                    if rng.random_bool(0.7) {
                        w.add_transition(p, sym, p2, rng.random::<f64>()).unwrap();
                    }
                }
            }
        }
        ids.push(h.add_wfa(w).unwrap());
    }
    for sym in ["a", "b"] {
        for q in 0..n {
            for &w in &ids {
                if rng.random_bool(0.5) {
                    h.add_rule(q, sym, w, rng.random::<f64>()).unwrap();
                }
            }
        }
    }
    if h.rules().is_empty() {
        h.add_rule(0, "a", 0, rng.random::<f64>()).unwrap();
    }
    h
}

/// Random unranked tree with at most `max_size` nodes.
pub fn random_unranked(rng: &mut ChaCha8Rng, symbols: &[&str], max_size: usize) -> Tree {
    let size = rng.random_range(1..=max_size);
    // attach node i (i >= 1) under a uniformly chosen earlier node
    let parents: Vec<usize> = (1..size).map(|i| rng.random_range(0..i)).collect();
    let labels: Vec<&str> = (0..size).map(|_| symbols[rng.random_range(0..symbols.len())]).collect();
    let mut kids: Vec<Vec<usize>> = vec![Vec::new(); size];
    for (i, &p) in parents.iter().enumerate() {
        kids[p].push(i + 1);
    }
    let mut built: Vec<Option<Tree>> = vec![None; size];
    for i in (0..size).rev() {
        let children = kids[i].iter().map(|&c| built[c].take().unwrap()).collect();
        built[i] = Some(Tree::node(labels[i], children));
    }
    built[0].take().unwrap()
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}
