//! Linear representations `(λ, μ)` of recognizable tree series over the
//! reals: each symbol of arity `p` maps to a multilinear map `V^p → V`,
//! stored as a dense tensor of `d^(p+1)` entries indexed
//! `(output, input_1, …, input_p)` in row-major order.

use indexmap::IndexMap;

use crate::error::{Error, Result};
use crate::linalg::{dot, OrthoBasis};
use crate::semiring::SemiringKind;
use crate::tree::{NodeTable, RankedAlphabet, Tree};
use crate::wta::Wta;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearRep {
    alphabet: RankedAlphabet,
    dim: usize,
    lambda: Vec<f64>,
    mu: IndexMap<String, Vec<f64>>,
}

fn tensor_len(dim: usize, arity: usize) -> usize {
    dim.pow(arity as u32 + 1)
}

/// All index tuples in `[0, k)^p`, last position varying fastest.
fn tuples(k: usize, p: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..p {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..k).map(move |i| {
                    let mut t = prefix.clone();
                    t.push(i);
                    t
                })
            })
            .collect();
    }
    out
}

impl LinearRep {
    /// Every alphabet symbol needs a tensor of exactly `d^(p+1)` entries.
    pub fn new(alphabet: RankedAlphabet, lambda: Vec<f64>, mu: IndexMap<String, Vec<f64>>) -> Result<Self> {
        alphabet.validate()?;
        let dim = lambda.len();
        if dim == 0 {
            return Err(Error::InvalidModel("dimension must be at least 1".into()));
        }
        for name in mu.keys() {
            if !alphabet.contains(name) {
                return Err(Error::UnknownSymbol(name.clone()));
            }
        }
        let mut ordered = IndexMap::new();
        for (name, arity) in alphabet.iter() {
            let t = mu
                .get(name)
                .ok_or_else(|| Error::InvalidModel(format!("no tensor for symbol `{name}`")))?;
            if t.len() != tensor_len(dim, arity) {
                return Err(Error::InvalidModel(format!(
                    "tensor for `{name}` has {} entries, expected {}",
                    t.len(),
                    tensor_len(dim, arity)
                )));
            }
            ordered.insert(name.to_string(), t.clone());
        }
        Ok(LinearRep {
            alphabet,
            dim,
            lambda,
            mu: ordered,
        })
    }

    /// The zero series in dimension `dim`.
    pub fn zero(alphabet: RankedAlphabet, dim: usize) -> Result<Self> {
        let mu = alphabet
            .iter()
            .map(|(n, a)| (n.to_string(), vec![0.0; tensor_len(dim, a)]))
            .collect();
        LinearRep::new(alphabet, vec![0.0; dim], mu)
    }

    pub fn alphabet(&self) -> &RankedAlphabet {
        &self.alphabet
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn mu(&self, symbol: &str) -> Option<&[f64]> {
        self.mu.get(symbol).map(Vec::as_slice)
    }

    pub fn tensors(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.mu.iter().map(|(n, t)| (n.as_str(), t.as_slice()))
    }

    /// `μ_f(x_1, …, x_p)`, contracting the last input first.
    pub fn apply(&self, symbol: &str, args: &[&[f64]]) -> Result<Vec<f64>> {
        let tensor = self.mu(symbol).ok_or_else(|| Error::UnknownSymbol(symbol.to_string()))?;
        let d = self.dim;
        let mut cur: Vec<f64> = tensor.to_vec();
        for x in args.iter().rev() {
            cur = cur.chunks_exact(d).map(|row| dot(row, x)).collect();
        }
        Ok(cur)
    }

    /// `μ(t)`, bottom-up.
    pub fn vector_of(&self, t: &Tree) -> Result<Vec<f64>> {
        self.alphabet.check_tree(t)?;
        let table = NodeTable::new(t);
        let mut vecs: Vec<Vec<f64>> = vec![Vec::new(); table.len()];
        for i in (0..table.len()).rev() {
            let args: Vec<&[f64]> = table.children[i].iter().map(|&c| vecs[c].as_slice()).collect();
            let v = self.apply(&table.nodes[i].label, &args)?;
            vecs[i] = v;
        }
        Ok(std::mem::take(&mut vecs[0]))
    }

    /// `S(t) = λ(μ(t))`.
    pub fn eval_linear(&self, t: &Tree) -> Result<f64> {
        Ok(dot(&self.lambda, &self.vector_of(t)?))
    }

    /// Reads states as basis vectors: `μ_f[q, q1…qp]` is the summed weight of
    /// `q -> f(q1…qp)` and `λ = ρ`.
    pub fn from_wta(a: &Wta) -> Result<Self> {
        if !a.semiring().is_real() {
            return Err(Error::WrongSemiring("real"));
        }
        let d = a.num_states();
        let mut mu: IndexMap<String, Vec<f64>> = a
            .alphabet()
            .iter()
            .map(|(n, p)| (n.to_string(), vec![0.0; tensor_len(d, p)]))
            .collect();
        for r in a.rules() {
            let idx = r.children.iter().fold(r.state, |acc, &c| acc * d + c);
            mu.get_mut(&r.symbol).expect("rule symbol in alphabet")[idx] += r.weight;
        }
        LinearRep::new(a.alphabet().clone(), a.root_weights().to_vec(), mu)
    }

    /// States `q0…q(d-1)`, one rule per nonzero tensor entry, `ρ = λ`.
    pub fn to_wta(&self) -> Wta {
        let d = self.dim;
        let names: Vec<String> = (0..d).map(|i| format!("q{i}")).collect();
        let mut a = Wta::new(SemiringKind::Real, self.alphabet.clone(), &names).expect("valid names");
        for (q, &w) in self.lambda.iter().enumerate() {
            a.set_root(q, w).expect("state in range");
        }
        for (name, arity) in self.alphabet.iter() {
            let tensor = &self.mu[name];
            for (idx, &w) in tensor.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                let mut rest = idx;
                let mut kids = vec![0; arity];
                for k in (0..arity).rev() {
                    kids[k] = rest % d;
                    rest /= d;
                }
                a.add_rule(rest, name, &kids, w).expect("symbol in alphabet");
            }
        }
        a
    }

    /// A representation of minimal dimension for the same series: restrict
    /// to the forward space `span{μ(t)}`, then quotient by the annihilator
    /// of the backward space spanned by `λ` composed with all contexts.
    ///
    /// Both spaces are built by closure with rank decisions at `tol`. A
    /// residual in `[tol/10, 10·tol]` makes the decision unreliable and is
    /// reported as [`Error::RankInstability`].
    pub fn minimize(&self, tol: f64) -> Result<LinearRep> {
        if self.mu.values().flatten().chain(&self.lambda).any(|x| !x.is_finite()) {
            return Err(Error::InvalidModel("non-finite entry".into()));
        }
        let check = |dist: f64| {
            if dist >= tol / 10.0 && dist <= tol * 10.0 {
                Err(Error::RankInstability(dist))
            } else {
                Ok(())
            }
        };

        // forward space
        let mut fwd = OrthoBasis::new(self.dim);
        for (name, arity) in self.alphabet.iter() {
            if arity == 0 {
                check(fwd.push_if_independent(&self.mu[name], tol).1)?;
            }
        }
        loop {
            let before = fwd.len();
            let snapshot = fwd.vectors().to_vec();
            for (name, arity) in self.alphabet.iter().filter(|(_, a)| *a > 0) {
                for tuple in tuples(snapshot.len(), arity) {
                    let args: Vec<&[f64]> = tuple.iter().map(|&i| snapshot[i].as_slice()).collect();
                    let v = self.apply(name, &args)?;
                    check(fwd.push_if_independent(&v, tol).1)?;
                }
            }
            if fwd.len() == before {
                break;
            }
        }
        if fwd.is_empty() {
            return LinearRep::zero(self.alphabet.clone(), 1);
        }
        let reachable = self.change_basis(fwd.vectors())?;

        // backward space of the reachable representation
        let k = reachable.dim;
        let mut bwd = OrthoBasis::new(k);
        check(bwd.push_if_independent(&reachable.lambda, tol).1)?;
        loop {
            let before = bwd.len();
            let snapshot = bwd.vectors().to_vec();
            for c in &snapshot {
                for (name, arity) in reachable.alphabet.iter().filter(|(_, a)| *a > 0) {
                    let tensor = &reachable.mu[name];
                    for pos in 0..arity {
                        for others in tuples(k, arity - 1) {
                            let mut u = vec![0.0; k];
                            for (m, um) in u.iter_mut().enumerate() {
                                let mut inputs = others.clone();
                                inputs.insert(pos, m);
                                let base = inputs.iter().fold(0, |acc, &i| acc * k + i);
                                let stride = k.pow(arity as u32);
                                *um = (0..k).map(|o| c[o] * tensor[o * stride + base]).sum();
                            }
                            check(bwd.push_if_independent(&u, tol).1)?;
                        }
                    }
                }
            }
            if bwd.len() == before {
                break;
            }
        }
        if bwd.is_empty() {
            return LinearRep::zero(self.alphabet.clone(), 1);
        }
        reachable.change_basis(bwd.vectors())
    }

    /// Restriction along orthonormal `basis`: `μ'_f[o, i…] = b_o·μ_f(b_i…)`
    /// and `λ'[o] = λ·b_o`.
    fn change_basis(&self, basis: &[Vec<f64>]) -> Result<LinearRep> {
        let k = basis.len();
        let mut mu = IndexMap::new();
        for (name, arity) in self.alphabet.iter() {
            let mut tensor = vec![0.0; tensor_len(k, arity)];
            let inputs = tuples(k, arity);
            for (j, tuple) in inputs.iter().enumerate() {
                let args: Vec<&[f64]> = tuple.iter().map(|&i| basis[i].as_slice()).collect();
                let v = self.apply(name, &args)?;
                for (o, b) in basis.iter().enumerate() {
                    tensor[o * inputs.len() + j] = dot(b, &v);
                }
            }
            mu.insert(name.to_string(), tensor);
        }
        let lambda = basis.iter().map(|b| dot(&self.lambda, b)).collect();
        LinearRep::new(self.alphabet.clone(), lambda, mu)
    }
}

/// Transcribes a real automaton into its linear representation.
pub fn wta_to_linear(a: &Wta) -> Result<LinearRep> {
    LinearRep::from_wta(a)
}

pub fn linear_to_wta(r: &LinearRep) -> Wta {
    r.to_wta()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumerate::enumerate_trees;
    use crate::tree::{parse_tree, ParseMode};
    use crate::wta::fixtures::{a2, fa, p1};

    fn t(s: &str) -> Tree {
        parse_tree(s, ParseMode::Unranked).unwrap()
    }

    fn r1() -> LinearRep {
        let mu = [("f".to_string(), vec![0.4]), ("a".to_string(), vec![0.6])].into_iter().collect();
        LinearRep::new(fa(), vec![1.0], mu).unwrap()
    }

    /// R1 with a second coordinate that nothing reaches or reads.
    fn r1_padded() -> LinearRep {
        let mut f = vec![0.0; 8];
        f[0] = 0.4;
        f[7] = 0.9;
        let mu = [("f".to_string(), f), ("a".to_string(), vec![0.6, 0.0])].into_iter().collect();
        LinearRep::new(fa(), vec![1.0, 0.0], mu).unwrap()
    }

    #[test]
    fn eval_examples() {
        assert!((r1().eval_linear(&t("a")).unwrap() - 0.6).abs() < 1e-15);
        assert!((r1().eval_linear(&t("f(a,a)")).unwrap() - 0.144).abs() < 1e-15);
        let zero = LinearRep::zero(fa(), 3).unwrap();
        assert_eq!(zero.eval_linear(&t("f(a,f(a,a))")).unwrap(), 0.0);
        assert!(matches!(r1().eval_linear(&t("g")), Err(Error::UnknownSymbol(_))));
    }

    #[test]
    fn shape_validation() {
        let mu: IndexMap<String, Vec<f64>> = [("f".to_string(), vec![0.4, 0.1]), ("a".to_string(), vec![0.6])]
            .into_iter()
            .collect();
        assert!(LinearRep::new(fa(), vec![1.0], mu).is_err());
        let missing: IndexMap<String, Vec<f64>> = [("a".to_string(), vec![0.6])].into_iter().collect();
        assert!(LinearRep::new(fa(), vec![1.0], missing).is_err());
    }

    #[test]
    fn transcription_examples() {
        assert_eq!(wta_to_linear(&p1()).unwrap(), r1());
        let r = wta_to_linear(&a2()).unwrap();
        assert_eq!(r.dim(), 2);
        assert_eq!(r.mu("a").unwrap(), [0.3, 0.2]);
        assert_eq!(r.lambda(), [0.5, 0.5]);
        assert!(r.mu("f").unwrap().iter().all(|&x| x == 0.0));
        // and back
        let back = linear_to_wta(&r1());
        assert_eq!(back.rules().len(), 2);
        let back2 = linear_to_wta(&r);
        assert!(back2.rules_for_symbol("f").is_empty());
        for tree in enumerate_trees(&fa(), 7) {
            assert!((back2.evaluate(&tree).unwrap() - a2().evaluate(&tree).unwrap()).abs() < 1e-15);
        }
    }

    #[test]
    fn apply_matches_index_layout() {
        // μ_f[o, i, j] = 100 o + 10 i + j over d = 2
        let mut f = vec![0.0; 8];
        for o in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    f[o * 4 + i * 2 + j] = (100 * o + 10 * i + j) as f64;
                }
            }
        }
        let mu = [("f".to_string(), f), ("a".to_string(), vec![1.0, 0.0])].into_iter().collect();
        let r = LinearRep::new(fa(), vec![1.0, 1.0], mu).unwrap();
        let v = r.apply("f", &[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        assert_eq!(v, vec![10.0, 110.0]);
    }

    #[test]
    fn minimize_examples() {
        let m = r1().minimize(1e-9).unwrap();
        assert_eq!(m.dim(), 1);
        let padded = r1_padded();
        let m = padded.minimize(1e-9).unwrap();
        assert_eq!(m.dim(), 1);
        for tree in enumerate_trees(&fa(), 7) {
            let drift = (m.eval_linear(&tree).unwrap() - padded.eval_linear(&tree).unwrap()).abs();
            assert!(drift <= 1e-9);
        }
        let zero = LinearRep::zero(fa(), 4).unwrap().minimize(1e-9).unwrap();
        assert_eq!(zero.dim(), 1);
        assert_eq!(zero.lambda(), [0.0]);
    }

    #[test]
    fn minimize_collapses_equivalent_states() {
        // two copies of P1 split the root weight: still rank 1
        let mut f = vec![0.0; 8];
        f[0] = 0.4; // q0 -> f(q0,q0)
        f[7] = 0.4; // q1 -> f(q1,q1)
        let mu = [("f".to_string(), f), ("a".to_string(), vec![0.6, 0.6])].into_iter().collect();
        let r = LinearRep::new(fa(), vec![0.3, 0.7], mu).unwrap();
        let m = r.minimize(1e-9).unwrap();
        assert_eq!(m.dim(), 1);
        assert_eq!(m.minimize(1e-9).unwrap().dim(), 1);
        for tree in enumerate_trees(&fa(), 7) {
            assert!((m.eval_linear(&tree).unwrap() - p1().evaluate(&tree).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn minimize_reports_instability() {
        let mu = [("f".to_string(), vec![0.0]), ("a".to_string(), vec![1e-9])].into_iter().collect();
        let r = LinearRep::new(fa(), vec![1.0], mu).unwrap();
        assert!(matches!(r.minimize(1e-9), Err(Error::RankInstability(_))));
    }
}
