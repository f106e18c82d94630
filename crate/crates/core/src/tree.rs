//! Ordered node-labeled trees, their term syntax, and one-hole contexts.
//!
//! Trees are written `f(a,g(b))`. Every traversal in this module is
//! iterative so that very deep trees (long stepwise combs, sampled trees)
//! never exhaust the call stack.

use std::fmt;

use indexmap::IndexMap;

use crate::error::{Error, Result};

/// Label of the binary right-adjunction node in stepwise encodings.
pub const ADJUNCTION: &str = "@";
/// Text spelling of the context hole `□`.
pub const HOLE: &str = "_HOLE_";

/// True when `name` matches `[A-Za-z_][A-Za-z0-9_]*`.
pub fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// A symbol name with its arity; `arity` is `None` for unranked symbols.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Symbol {
    pub name: String,
    pub arity: Option<usize>,
}

impl Symbol {
    pub fn ranked(name: &str, arity: usize) -> Result<Self> {
        Self::check_name(name)?;
        Ok(Symbol {
            name: name.to_string(),
            arity: Some(arity),
        })
    }

    pub fn unranked(name: &str) -> Result<Self> {
        Self::check_name(name)?;
        Ok(Symbol {
            name: name.to_string(),
            arity: None,
        })
    }

    fn check_name(name: &str) -> Result<()> {
        if name == ADJUNCTION || is_identifier(name) {
            Ok(())
        } else {
            Err(Error::InvalidModel(format!("`{name}` is not a valid symbol name")))
        }
    }
}

/// A finite ranked alphabet, kept in declaration order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RankedAlphabet {
    arities: IndexMap<String, usize>,
}

impl RankedAlphabet {
    /// Builds an alphabet; fails on conflicting arities, on an empty set, or
    /// when there is no constant (arity-0) symbol.
    pub fn new<'a, I>(symbols: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, usize)>,
    {
        let mut alphabet = RankedAlphabet::default();
        for (name, arity) in symbols {
            alphabet.insert(Symbol::ranked(name, arity)?)?;
        }
        alphabet.validate()?;
        Ok(alphabet)
    }

    /// Adds a symbol; re-adding the same name with the same arity is a no-op.
    pub fn insert(&mut self, symbol: Symbol) -> Result<()> {
        let arity = symbol
            .arity
            .ok_or_else(|| Error::InvalidModel(format!("symbol `{}` has no arity", symbol.name)))?;
        match self.arities.get(&symbol.name) {
            Some(&a) if a != arity => Err(Error::InvalidModel(format!(
                "symbol `{}` declared with arities {a} and {arity}",
                symbol.name
            ))),
            Some(_) => Ok(()),
            None => {
                self.arities.insert(symbol.name, arity);
                Ok(())
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.arities.is_empty() {
            return Err(Error::InvalidModel("empty alphabet".into()));
        }
        if !self.arities.values().any(|&a| a == 0) {
            return Err(Error::InvalidModel("alphabet has no constant symbol".into()));
        }
        Ok(())
    }

    pub fn arity(&self, name: &str) -> Option<usize> {
        self.arities.get(name).copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.arities.contains_key(name)
    }

    pub fn len(&self) -> usize {
        self.arities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arities.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.arities.iter().map(|(n, &a)| (n.as_str(), a))
    }

    pub fn max_arity(&self) -> usize {
        self.arities.values().copied().max().unwrap_or(0)
    }

    /// Smallest alphabet covering every node of `trees`.
    pub fn infer<'a, I: IntoIterator<Item = &'a Tree>>(trees: I) -> Result<Self> {
        let mut alphabet = RankedAlphabet::default();
        for t in trees {
            for node in t.preorder() {
                alphabet.insert(Symbol {
                    name: node.label.clone(),
                    arity: Some(node.children.len()),
                })?;
            }
        }
        alphabet.validate()?;
        Ok(alphabet)
    }

    /// Checks that every node of `t` uses a declared symbol at its arity.
    pub fn check_tree(&self, t: &Tree) -> Result<()> {
        for node in t.preorder() {
            match self.arity(&node.label) {
                None => return Err(Error::UnknownSymbol(node.label.clone())),
                Some(a) if a != node.children.len() => {
                    return Err(Error::ArityMismatch {
                        symbol: node.label.clone(),
                        expected: a,
                        found: node.children.len(),
                    })
                }
                Some(_) => {}
            }
        }
        Ok(())
    }
}

impl fmt::Display for RankedAlphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (name, arity)) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{name}/{arity}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Tree {
    pub label: String,
    pub children: Vec<Tree>,
}

impl Tree {
    pub fn leaf(label: impl Into<String>) -> Self {
        Tree {
            label: label.into(),
            children: Vec::new(),
        }
    }

    pub fn node(label: impl Into<String>, children: Vec<Tree>) -> Self {
        Tree {
            label: label.into(),
            children,
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        self.preorder().count()
    }

    pub fn depth(&self) -> usize {
        let mut best = 0;
        let mut stack = vec![(self, 0usize)];
        while let Some((t, d)) = stack.pop() {
            best = best.max(d);
            stack.extend(t.children.iter().map(|c| (c, d + 1)));
        }
        best
    }

    /// Nodes in pre-order.
    pub fn preorder(&self) -> Preorder<'_> {
        Preorder { stack: vec![self] }
    }

    /// Every subtree (with repetition), in pre-order.
    pub fn subtrees(&self) -> impl Iterator<Item = &Tree> {
        self.preorder()
    }

    /// Rebuilds a tree from its pre-order `(label, child count)` listing.
    pub fn from_preorder<I>(items: I) -> Option<Tree>
    where
        I: IntoIterator<Item = (String, usize)>,
    {
        // Stack of partially built nodes with the number of children still owed.
        let mut stack: Vec<(String, usize, Vec<Tree>)> = Vec::new();
        let mut done = None;
        for (label, arity) in items {
            if done.is_some() {
                return None;
            }
            let mut finished = if arity == 0 {
                Some(Tree::leaf(label))
            } else {
                stack.push((label, arity, Vec::with_capacity(arity)));
                None
            };
            while let Some(t) = finished.take() {
                match stack.last_mut() {
                    None => done = Some(t),
                    Some((_, want, kids)) => {
                        kids.push(t);
                        if kids.len() == *want {
                            let (label, _, kids) = stack.pop().expect("non-empty");
                            finished = Some(Tree::node(label, kids));
                        }
                    }
                }
            }
        }
        if stack.is_empty() {
            done
        } else {
            None
        }
    }

    /// Canonical term syntax: no spaces, leaves without parentheses.
    pub fn render(&self) -> String {
        let mut out = String::new();
        enum Step<'a> {
            Open(&'a Tree),
            Text(&'static str),
        }
        let mut stack = vec![Step::Open(self)];
        while let Some(step) = stack.pop() {
            match step {
                Step::Text(s) => out.push_str(s),
                Step::Open(t) => {
                    out.push_str(&t.label);
                    if !t.children.is_empty() {
                        out.push('(');
                        stack.push(Step::Text(")"));
                        for (i, c) in t.children.iter().enumerate().rev() {
                            stack.push(Step::Open(c));
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

impl fmt::Display for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

pub struct Preorder<'a> {
    stack: Vec<&'a Tree>,
}

impl<'a> Iterator for Preorder<'a> {
    type Item = &'a Tree;

    fn next(&mut self) -> Option<&'a Tree> {
        let t = self.stack.pop()?;
        self.stack.extend(t.children.iter().rev());
        Some(t)
    }
}

/// Pre-order index of a tree: node `i`'s children all have indices `> i`, so
/// a reverse sweep visits children before parents.
#[derive(Debug)]
pub struct NodeTable<'a> {
    pub nodes: Vec<&'a Tree>,
    pub children: Vec<Vec<usize>>,
}

impl<'a> NodeTable<'a> {
    pub fn new(t: &'a Tree) -> Self {
        let mut nodes = Vec::new();
        let mut children: Vec<Vec<usize>> = Vec::new();
        // (node, parent index)
        let mut stack: Vec<(&Tree, Option<usize>)> = vec![(t, None)];
        while let Some((node, parent)) = stack.pop() {
            let id = nodes.len();
            nodes.push(node);
            children.push(Vec::with_capacity(node.children.len()));
            if let Some(p) = parent {
                children[p].push(id);
            }
            stack.extend(node.children.iter().rev().map(|c| (c, Some(id))));
        }
        NodeTable { nodes, children }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// How [`parse_tree`] checks symbols.
#[derive(Debug, Clone, Copy)]
pub enum ParseMode<'a> {
    Ranked(&'a RankedAlphabet),
    Unranked,
}

struct Lexer<'s> {
    src: &'s str,
    pos: usize,
}

impl<'s> Lexer<'s> {
    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    fn error(&self, msg: impl Into<String>) -> Error {
        Error::Syntax {
            pos: self.pos,
            msg: msg.into(),
        }
    }

    fn expect_ident(&mut self) -> Result<String> {
        match self.peek() {
            None => Err(self.error("unexpected end of input, expected a symbol")),
            Some('@') => {
                self.pos += 1;
                Ok(ADJUNCTION.to_string())
            }
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {
                let start = self.pos;
                let len = self.src[start..]
                    .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
                    .unwrap_or(self.src.len() - start);
                self.pos += len;
                Ok(self.src[start..start + len].to_string())
            }
            Some(c) => Err(self.error(format!("unexpected `{c}`, expected a symbol"))),
        }
    }
}

/// Parses `tree := ident | ident "(" tree ("," tree)* ")"`; `f()` is the
/// leaf `f`.
pub fn parse_tree(text: &str, mode: ParseMode<'_>) -> Result<Tree> {
    let mut lx = Lexer { src: text, pos: 0 };
    let mut stack: Vec<(String, Vec<Tree>)> = Vec::new();
    let result = 'outer: loop {
        let label = lx.expect_ident()?;
        let mut node = if lx.peek() == Some('(') {
            lx.pos += 1;
            if lx.peek() == Some(')') {
                lx.pos += 1;
                Tree::leaf(label)
            } else {
                stack.push((label, Vec::new()));
                continue;
            }
        } else {
            Tree::leaf(label)
        };
        loop {
            let Some(top) = stack.last_mut() else {
                break 'outer node;
            };
            top.1.push(node);
            match lx.peek() {
                Some(',') => {
                    lx.pos += 1;
                    continue 'outer;
                }
                Some(')') => {
                    lx.pos += 1;
                    let (label, kids) = stack.pop().expect("non-empty");
                    node = Tree::node(label, kids);
                }
                None => return Err(lx.error("unexpected end of input, expected `,` or `)`")),
                Some(c) => return Err(lx.error(format!("unexpected `{c}`, expected `,` or `)`"))),
            }
        }
    };
    if let Some(c) = lx.peek() {
        return Err(lx.error(format!("trailing input starting with `{c}`")));
    }
    if let ParseMode::Ranked(alphabet) = mode {
        alphabet.check_tree(&result)?;
    }
    Ok(result)
}

/// A tree with exactly one leaf labeled [`HOLE`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Context(Tree);

impl Context {
    /// The trivial context `□`.
    pub fn hole() -> Self {
        Context(Tree::leaf(HOLE))
    }

    pub fn new(t: Tree) -> Result<Self> {
        let holes = t.preorder().filter(|n| n.label == HOLE).count();
        if holes != 1 {
            return Err(Error::InvalidModel(format!(
                "context must contain exactly one hole, found {holes}"
            )));
        }
        if t.preorder().any(|n| n.label == HOLE && !n.is_leaf()) {
            return Err(Error::InvalidModel("hole must be a leaf".into()));
        }
        Ok(Context(t))
    }

    pub fn tree(&self) -> &Tree {
        &self.0
    }

    /// Node count, with the hole counted as one node.
    pub fn size(&self) -> usize {
        self.0.size()
    }

    /// `c[t]`: the hole replaced by `t`.
    pub fn substitute(&self, t: &Tree) -> Tree {
        let mut out = self.0.clone();
        let mut stack = vec![&mut out];
        while let Some(node) = stack.pop() {
            if node.label == HOLE {
                *node = t.clone();
                break;
            }
            stack.extend(node.children.iter_mut());
        }
        out
    }

    /// Every context `c` with `c[s] = t` for some subtree occurrence `s`.
    pub fn all_of(t: &Tree) -> Vec<Context> {
        let n = t.size();
        (0..n)
            .map(|target| {
                let mut out = t.clone();
                let mut index = 0;
                let mut stack = vec![&mut out];
                while let Some(node) = stack.pop() {
                    if index == target {
                        *node = Tree::leaf(HOLE);
                        break;
                    }
                    index += 1;
                    stack.extend(node.children.iter_mut().rev());
                }
                Context(out)
            })
            .collect()
    }
}

impl fmt::Display for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}
