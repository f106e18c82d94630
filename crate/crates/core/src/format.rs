//! Text formats for automata and linear representations.
//!
//! All formats are line based, start with a header line (`wta`, `linrep` or
//! `wha`) and allow `#` comments. Numbers are written in the shortest form
//! that parses back to the same `f64`.
//!
//! ```text
//! wta
//! semiring: real
//! alphabet: f/2, a/0
//! states: q
//! root: q 1.0
//! rule: q -> f(q, q) : 0.4
//! rule: q -> a : 0.6
//! ```

use std::fmt::Write as _;

use indexmap::IndexMap;

use crate::error::{Error, Result};
use crate::hedge::{Wfa, Wha, EPS};
use crate::linear::LinearRep;
use crate::semiring::SemiringKind;
use crate::tree::{RankedAlphabet, Symbol};
use crate::wta::Wta;

/// Shortest round-trip decimal form.
pub fn fmt_num(x: f64) -> String {
    format!("{x:?}")
}

#[derive(Debug, Clone)]
pub enum Model {
    Wta(Wta),
    Linear(LinearRep),
    Wha(Wha),
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Model::Wta(_) => "wta",
            Model::Linear(_) => "linrep",
            Model::Wha(_) => "wha",
        }
    }
}

struct Line<'a> {
    no: usize,
    text: &'a str,
}

impl Line<'_> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Format {
            line: self.no,
            msg: msg.into(),
        }
    }
}

fn lines(text: &str) -> Vec<Line<'_>> {
    text.lines()
        .enumerate()
        .filter_map(|(i, raw)| {
            let t = raw.split('#').next().unwrap_or("").trim();
            (!t.is_empty()).then_some(Line { no: i + 1, text: t })
        })
        .collect()
}

fn number(line: &Line<'_>, s: &str) -> Result<f64> {
    let s = s.trim();
    match s.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(line.err(format!("bad number `{s}`"))),
    }
}

fn names(s: &str) -> Vec<&str> {
    s.split(|c: char| c == ',' || c.is_whitespace()).filter(|x| !x.is_empty()).collect()
}

fn parse_alphabet(line: &Line<'_>, s: &str) -> Result<RankedAlphabet> {
    let mut alphabet = RankedAlphabet::default();
    for item in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
        let (name, arity) = item
            .split_once('/')
            .ok_or_else(|| line.err(format!("expected `name/arity`, found `{item}`")))?;
        let arity: usize = arity
            .trim()
            .parse()
            .map_err(|_| line.err(format!("bad arity in `{item}`")))?;
        alphabet.insert(Symbol::ranked(name.trim(), arity)?)?;
    }
    alphabet.validate()?;
    Ok(alphabet)
}

/// Splits `key: value`.
fn field<'a>(line: &Line<'a>) -> Result<(&'a str, &'a str)> {
    line.text
        .split_once(':')
        .map(|(k, v)| (k.trim(), v.trim()))
        .ok_or_else(|| line.err(format!("expected `key: value`, found `{}`", line.text)))
}

/// Reads the header word of the first non-comment line.
pub fn model_kind(text: &str) -> Result<&str> {
    let ls = lines(text);
    let first = ls.first().ok_or(Error::Format {
        line: 1,
        msg: "empty model file".into(),
    })?;
    match first.text {
        "wta" | "linrep" | "wha" => Ok(first.text),
        other => Err(first.err(format!("unknown model header `{other}`"))),
    }
}

pub fn parse_model(text: &str) -> Result<Model> {
    Ok(match model_kind(text)? {
        "wta" => Model::Wta(parse_wta(text)?),
        "linrep" => Model::Linear(parse_linrep(text)?),
        _ => Model::Wha(parse_wha(text)?),
    })
}

fn expect_header<'a>(text: &'a str, header: &str) -> Result<Vec<Line<'a>>> {
    let ls = lines(text);
    match ls.first() {
        Some(l) if l.text == header => Ok(ls),
        Some(l) => Err(l.err(format!("expected `{header}` header"))),
        None => Err(Error::Format {
            line: 1,
            msg: format!("expected `{header}` header"),
        }),
    }
}

pub fn parse_wta(text: &str) -> Result<Wta> {
    let ls = expect_header(text, "wta")?;
    let mut semiring = SemiringKind::Real;
    let mut alphabet = None;
    let mut states: Option<Vec<String>> = None;
    let mut roots = Vec::new();
    let mut rules = Vec::new();
    for line in &ls[1..] {
        let (key, value) = field(line)?;
        match key {
            "semiring" => semiring = value.parse()?,
            "alphabet" => alphabet = Some(parse_alphabet(line, value)?),
            "states" => states = Some(names(value).into_iter().map(String::from).collect()),
            "root" => roots.push(line),
            "rule" => rules.push(line),
            other => return Err(line.err(format!("unknown field `{other}`"))),
        }
    }
    let alphabet = alphabet.ok_or_else(|| ls[0].err("missing `alphabet:`"))?;
    let states = states.ok_or_else(|| ls[0].err("missing `states:`"))?;
    let mut a = Wta::new(semiring, alphabet, &states)?;
    for line in roots {
        let v = field(line)?.1;
        let (q, w) = v.split_once(char::is_whitespace).ok_or_else(|| line.err("expected `root: state weight`"))?;
        a.add_root(a.state_id(q)?, number(line, w)?)?;
    }
    for line in rules {
        let v = field(line)?.1;
        let (lhs, w) = v.rsplit_once(':').ok_or_else(|| line.err("expected `rule: q -> f(q1, ...) : weight`"))?;
        let (q, rhs) = lhs.split_once("->").ok_or_else(|| line.err("expected `->` in rule"))?;
        let rhs = rhs.trim();
        let (symbol, kids) = match rhs.split_once('(') {
            Some((f, rest)) => {
                let inner = rest.trim_end().strip_suffix(')').ok_or_else(|| line.err("unclosed `(` in rule"))?;
                (f.trim(), names(inner))
            }
            None => (rhs, Vec::new()),
        };
        let children = kids.iter().map(|k| a.state_id(k)).collect::<Result<Vec<_>>>()?;
        a.add_rule(a.state_id(q.trim())?, symbol, &children, number(line, w)?)?;
    }
    Ok(a)
}

pub fn write_wta(a: &Wta) -> String {
    let mut out = String::from("wta\n");
    let _ = writeln!(out, "semiring: {}", a.semiring());
    let _ = writeln!(out, "alphabet: {}", a.alphabet());
    let _ = writeln!(out, "states: {}", a.states().join(" "));
    for (q, &w) in a.root_weights().iter().enumerate() {
        if w != 0.0 {
            let _ = writeln!(out, "root: {} {}", a.state_name(q), fmt_num(w));
        }
    }
    for (i, r) in a.rules().iter().enumerate() {
        let _ = writeln!(out, "rule: {} : {}", a.describe_rule(i), fmt_num(r.weight));
    }
    out
}

pub fn parse_linrep(text: &str) -> Result<LinearRep> {
    let ls = expect_header(text, "linrep")?;
    let mut dim: Option<usize> = None;
    let mut lambda: Option<Vec<f64>> = None;
    let mut alphabet = RankedAlphabet::default();
    let mut mu: IndexMap<String, Vec<f64>> = IndexMap::new();
    let mut i = 1;
    let row = |line: &Line<'_>, s: &str| -> Result<Vec<f64>> {
        s.split_whitespace().map(|x| number(line, x)).collect()
    };
    while i < ls.len() {
        let line = &ls[i];
        i += 1;
        let (key, value) = field(line)?;
        if let Some(sym) = key.strip_prefix("mu ") {
            let d = dim.ok_or_else(|| line.err("`dim:` must precede `mu`"))?;
            let (name, arity) = sym
                .trim()
                .split_once('/')
                .ok_or_else(|| line.err(format!("expected `mu name/arity:`, found `{key}`")))?;
            let arity: usize = arity.parse().map_err(|_| line.err(format!("bad arity `{arity}`")))?;
            alphabet.insert(Symbol::ranked(name, arity)?)?;
            let width = d.pow(arity as u32);
            let tensor = if arity == 0 {
                row(line, value)?
            } else {
                if !value.is_empty() {
                    return Err(line.err("tensor rows go on the following lines"));
                }
                let mut t = Vec::with_capacity(d * width);
                for _ in 0..d {
                    let r = ls.get(i).ok_or_else(|| line.err(format!("`mu {sym}` needs {d} rows")))?;
                    i += 1;
                    let vals = row(r, r.text)?;
                    if vals.len() != width {
                        return Err(r.err(format!("expected {width} values, found {}", vals.len())));
                    }
                    t.extend(vals);
                }
                t
            };
            if mu.insert(name.to_string(), tensor).is_some() {
                return Err(line.err(format!("`mu {name}` given twice")));
            }
            continue;
        }
        match key {
            "dim" => dim = Some(value.parse().map_err(|_| line.err(format!("bad dimension `{value}`")))?),
            "lambda" => lambda = Some(row(line, value)?),
            "alphabet" => {
                for (name, arity) in parse_alphabet(line, value)?.iter() {
                    alphabet.insert(Symbol::ranked(name, arity)?)?;
                }
            }
            other => return Err(line.err(format!("unknown field `{other}`"))),
        }
    }
    let dim = dim.ok_or_else(|| ls[0].err("missing `dim:`"))?;
    let lambda = lambda.ok_or_else(|| ls[0].err("missing `lambda:`"))?;
    if lambda.len() != dim {
        return Err(ls[0].err(format!("lambda has {} entries, dim is {dim}", lambda.len())));
    }
    LinearRep::new(alphabet, lambda, mu)
}

pub fn write_linrep(r: &LinearRep) -> String {
    let d = r.dim();
    let join = |xs: &[f64]| xs.iter().map(|&x| fmt_num(x)).collect::<Vec<_>>().join(" ");
    let mut out = String::from("linrep\n");
    let _ = writeln!(out, "alphabet: {}", r.alphabet());
    let _ = writeln!(out, "dim: {d}");
    let _ = writeln!(out, "lambda: {}", join(r.lambda()));
    for (name, arity) in r.alphabet().iter() {
        let t = r.mu(name).expect("every symbol has a tensor");
        if arity == 0 {
            let _ = writeln!(out, "mu {name}/0: {}", join(t));
        } else {
            let _ = writeln!(out, "mu {name}/{arity}:");
            for chunk in t.chunks(t.len() / d) {
                let _ = writeln!(out, "  {}", join(chunk));
            }
        }
    }
    out
}

/// Splits the body of `wfa NAME { ... }` items, which may span lines.
fn wfa_blocks<'a>(ls: &'a [Line<'a>]) -> Result<(Vec<(&'a Line<'a>, String, Vec<String>)>, Vec<&'a Line<'a>>)> {
    let mut blocks = Vec::new();
    let mut rest = Vec::new();
    let mut i = 0;
    while i < ls.len() {
        let line = &ls[i];
        i += 1;
        let Some(after) = line.text.strip_prefix("wfa ") else {
            rest.push(line);
            continue;
        };
        let (name, body) = after
            .split_once('{')
            .ok_or_else(|| line.err("expected `wfa NAME { ... }`"))?;
        let mut body = body.to_string();
        while !body.contains('}') {
            let next = ls.get(i).ok_or_else(|| line.err("unclosed `{`"))?;
            i += 1;
            body.push(';');
            body.push_str(next.text);
        }
        let (inner, tail) = body.split_once('}').expect("contains }");
        if !tail.trim().is_empty() {
            return Err(line.err("unexpected text after `}`"));
        }
        let items = inner.split(';').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect();
        blocks.push((line, name.trim().to_string(), items));
    }
    Ok((blocks, rest))
}

pub fn parse_wha(text: &str) -> Result<Wha> {
    let ls = expect_header(text, "wha")?;
    let (blocks, rest) = wfa_blocks(&ls[1..])?;
    let mut semiring = SemiringKind::Real;
    let mut alphabet: Option<Vec<String>> = None;
    let mut states: Option<Vec<String>> = None;
    let mut roots = Vec::new();
    let mut hrules = Vec::new();
    for line in rest {
        let (key, value) = field(line)?;
        match key {
            "semiring" => semiring = value.parse()?,
            "alphabet" => alphabet = Some(names(value).into_iter().map(String::from).collect()),
            "states" => states = Some(names(value).into_iter().map(String::from).collect()),
            "root" => roots.push(line),
            "hrule" => hrules.push(line),
            other => return Err(line.err(format!("unknown field `{other}`"))),
        }
    }
    let alphabet = alphabet.ok_or_else(|| ls[0].err("missing `alphabet:`"))?;
    let states = states.ok_or_else(|| ls[0].err("missing `states:`"))?;
    let mut h = Wha::new(semiring, &alphabet, &states)?;
    for line in roots {
        let v = field(line)?.1;
        let (q, w) = v.split_once(char::is_whitespace).ok_or_else(|| line.err("expected `root: state weight`"))?;
        let q = h.state_id(q)?;
        h.set_root(q, semiring.plus(h.root_weights()[q], number(line, w)?))?;
    }
    for (line, name, items) in &blocks {
        let mut wfa_states = None;
        let mut entries = Vec::new();
        for item in items {
            let (k, v) = item
                .split_once(':')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| line.err(format!("bad wfa item `{item}`")))?;
            if k == "wfa-states" {
                wfa_states = Some(names(v).into_iter().map(String::from).collect::<Vec<_>>());
            } else {
                entries.push((k, v));
            }
        }
        let ws = wfa_states.ok_or_else(|| line.err(format!("wfa {name} lacks `wfa-states:`")))?;
        let mut w = Wfa::new(name, &ws, h.num_states())?;
        let mut init = vec![0.0; ws.len()];
        let mut fin = vec![0.0; ws.len()];
        for (k, v) in entries {
            let parts: Vec<&str> = v.split_whitespace().collect();
            match (k, parts.as_slice()) {
                ("init", [p, x]) => {
                    let p = w.state_id(p)?;
                    init[p] = semiring.plus(init[p], number(line, x)?);
                }
                ("final", [p, x]) => {
                    let p = w.state_id(p)?;
                    fin[p] = semiring.plus(fin[p], number(line, x)?);
                }
                ("trans", [p, q, p2, x]) => {
                    w.add_transition(w.state_id(p)?, h.state_id(q)?, w.state_id(p2)?, number(line, x)?)?;
                }
                _ => return Err(line.err(format!("bad wfa item `{k}: {v}`"))),
            }
        }
        for p in 0..ws.len() {
            w.set_init(p, init[p])?;
            w.set_final(p, fin[p])?;
        }
        h.add_wfa(w)?;
    }
    for line in hrules {
        let v = field(line)?.1;
        let (lhs, w) = v.rsplit_once(':').ok_or_else(|| line.err("expected `hrule: q -> f [W] : weight`"))?;
        let (q, rhs) = lhs.split_once("->").ok_or_else(|| line.err("expected `->` in hrule"))?;
        let (symbol, wfa) = rhs.split_once('[').ok_or_else(|| line.err("expected `[W]` in hrule"))?;
        let wfa = wfa.trim().strip_suffix(']').ok_or_else(|| line.err("unclosed `[` in hrule"))?;
        let q = h.state_id(q.trim())?;
        let wfa = h.wfa_id(wfa.trim())?;
        h.add_rule(q, symbol.trim(), wfa, number(line, w)?)?;
    }
    Ok(h)
}

pub fn write_wha(h: &Wha) -> String {
    let mut out = String::from("wha\n");
    let _ = writeln!(out, "semiring: {}", h.semiring());
    let _ = writeln!(out, "alphabet: {}", h.alphabet().join(", "));
    let _ = writeln!(out, "states: {}", h.states().join(", "));
    for (q, &w) in h.root_weights().iter().enumerate() {
        if w != 0.0 {
            let _ = writeln!(out, "root: {} {}", h.states()[q], fmt_num(w));
        }
    }
    for w in h.wfas().iter().filter(|w| w.name() != EPS) {
        let mut items = vec![format!("wfa-states: {}", w.states().join(" "))];
        for (p, &x) in w.init().iter().enumerate() {
            if x != 0.0 {
                items.push(format!("init: {} {}", w.states()[p], fmt_num(x)));
            }
        }
        for t in w.transitions() {
            items.push(format!(
                "trans: {} {} {} {}",
                w.states()[t.from],
                h.states()[t.symbol],
                w.states()[t.to],
                fmt_num(t.weight)
            ));
        }
        for (p, &x) in w.finals().iter().enumerate() {
            if x != 0.0 {
                items.push(format!("final: {} {}", w.states()[p], fmt_num(x)));
            }
        }
        let _ = writeln!(out, "wfa {} {{ {} }}", w.name(), items.join("; "));
    }
    for r in h.rules() {
        let _ = writeln!(
            out,
            "hrule: {} -> {} [{}] : {}",
            h.states()[r.target],
            r.symbol,
            h.wfas()[r.wfa].name(),
            fmt_num(r.weight)
        );
    }
    out
}

impl std::fmt::Display for LinearRep {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&write_linrep(self))
    }
}

impl std::fmt::Display for Wha {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&write_wha(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hedge::fixtures::h1;
    use crate::linear::wta_to_linear;
    use crate::tree::{parse_tree, ParseMode, Tree};
    use crate::wta::fixtures::*;

    fn t(s: &str) -> Tree {
        parse_tree(s, ParseMode::Unranked).unwrap()
    }

    const P1: &str = "wta\n# one state\nsemiring: real\nalphabet: f/2, a/0\nstates: q\nroot: q 1.0\n\
                      rule: q -> f(q, q) : 0.4\nrule: q -> a : 0.6\n";

    #[test]
    fn wta_roundtrip() {
        let a = parse_wta(P1).unwrap();
        assert_eq!(write_wta(&a), write_wta(&p1()));
        assert_eq!(write_wta(&a), P1.replace("# one state\n", ""));
        let b = parse_wta(&write_wta(&a2())).unwrap();
        assert_eq!(b.rules(), a2().rules());
        assert_eq!(b.root_weights(), a2().root_weights());
    }

    #[test]
    fn duplicates_merge() {
        let text = "wta\nalphabet: a/0\nstates: q\nroot: q 0.5\nroot: q 0.5\nrule: q -> a : 0.25\nrule: q -> a : 0.5\n";
        let a = parse_wta(text).unwrap();
        assert_eq!(a.root_weights(), [1.0]);
        assert_eq!(a.rules().len(), 1);
        assert_eq!(a.rule(0).weight, 0.75);
    }

    #[test]
    fn wta_errors() {
        assert!(matches!(parse_wta("wta\nalphabet f/2"), Err(Error::Format { line: 2, .. })));
        assert!(matches!(parse_wta("linrep\n"), Err(Error::Format { line: 1, .. })));
        let bad_state = "wta\nalphabet: a/0\nstates: q\nrule: r -> a : 1\n";
        assert!(matches!(parse_wta(bad_state), Err(Error::UnknownState(_))));
        let bad_arity = "wta\nalphabet: f/2, a/0\nstates: q\nrule: q -> f(q) : 1\n";
        assert!(matches!(parse_wta(bad_arity), Err(Error::ArityMismatch { .. })));
        let bad_num = "wta\nalphabet: a/0\nstates: q\nrule: q -> a : x\n";
        assert!(matches!(parse_wta(bad_num), Err(Error::Format { line: 4, .. })));
    }

    #[test]
    fn linrep_roundtrip() {
        let r = wta_to_linear(&a2()).unwrap();
        let text = write_linrep(&r);
        assert!(text.contains("mu f/2:\n"));
        assert_eq!(parse_linrep(&text).unwrap(), r);
        let bare = "linrep\ndim: 1\nlambda: 1.0\nmu f/2:\n  0.4\nmu a/0: 0.6\n";
        let r = parse_linrep(bare).unwrap();
        assert!((r.eval_linear(&t("f(a,a)")).unwrap() - 0.144).abs() < 1e-15);
        assert!(parse_linrep("linrep\ndim: 2\nlambda: 1 0\nmu a/0: 1\n").is_err());
    }

    #[test]
    fn wha_roundtrip() {
        let text = "wha\nalphabet: a, b\nstates: qa, qb\nroot: qb 1.0\n\
                    wfa W1 { wfa-states: s; init: s 1.0; trans: s qa s 0.5; final: s 0.5 }\n\
                    hrule: qb -> b [W1] : 1.0\nhrule: qa -> a [EPS] : 1.0\n";
        let h = parse_wha(text).unwrap();
        assert_eq!(h.evaluate(&t("b(a,a)")).unwrap(), 0.125);
        let again = parse_wha(&write_wha(&h)).unwrap();
        assert_eq!(write_wha(&again), write_wha(&h));
        assert_eq!(write_wha(&h1()).lines().count(), 8);
        let multi = "wha\nalphabet: a\nstates: q\nroot: q 1\nwfa L {\n wfa-states: s\n init: s 1\n final: s 1\n}\nhrule: q -> a [L] : 1\n";
        assert_eq!(parse_wha(multi).unwrap().evaluate(&t("a")).unwrap(), 1.0);
    }

    #[test]
    fn model_detection() {
        assert_eq!(parse_model(P1).unwrap().kind(), "wta");
        assert!(matches!(parse_model("# nothing\n"), Err(Error::Format { .. })));
        assert!(matches!(parse_model("pta\n"), Err(Error::Format { line: 1, .. })));
    }
}
