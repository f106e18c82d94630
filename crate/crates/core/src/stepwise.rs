//! Stepwise (`@`) encoding of unranked trees as binary ranked trees, via
//! right adjunction: `f(t1,…,tn-1) @ tn = f(t1,…,tn)`.

use crate::error::{Error, Result};
use crate::tree::{NodeTable, RankedAlphabet, Tree, ADJUNCTION};

/// Encodes an unranked tree as a left comb of `@` nodes over constants.
pub fn encode_stepwise(t: &Tree) -> Result<Tree> {
    let table = NodeTable::new(t);
    if let Some(n) = table.nodes.iter().find(|n| n.label == ADJUNCTION) {
        return Err(Error::ReservedName(n.label.clone()));
    }
    let mut done: Vec<Option<Tree>> = vec![None; table.len()];
    for i in (0..table.len()).rev() {
        let mut acc = Tree::leaf(table.nodes[i].label.clone());
        for &c in &table.children[i] {
            let child = done[c].take().expect("children are encoded first");
            acc = Tree::node(ADJUNCTION, vec![acc, child]);
        }
        done[i] = Some(acc);
    }
    Ok(done[0].take().expect("root"))
}

/// Inverse of [`encode_stepwise`].
pub fn decode_stepwise(t: &Tree) -> Result<Tree> {
    let table = NodeTable::new(t);
    let mut done: Vec<Option<Tree>> = vec![None; table.len()];
    for i in (0..table.len()).rev() {
        let node = table.nodes[i];
        let decoded = if node.label == ADJUNCTION {
            let &[left, right] = table.children[i].as_slice() else {
                return Err(Error::MalformedEncoding(format!(
                    "`@` node with {} children",
                    node.children.len()
                )));
            };
            let mut head = done[left].take().expect("decoded");
            head.children.push(done[right].take().expect("decoded"));
            head
        } else if node.is_leaf() {
            Tree::leaf(node.label.clone())
        } else {
            return Err(Error::MalformedEncoding(format!(
                "internal node `{}` is not `@`",
                node.label
            )));
        };
        done[i] = Some(decoded);
    }
    Ok(done[0].take().expect("root"))
}

/// `{@/2}` plus every name in `symbols` as a constant.
pub fn stepwise_alphabet<'a, I: IntoIterator<Item = &'a str>>(symbols: I) -> Result<RankedAlphabet> {
    let mut pairs: Vec<(&str, usize)> = vec![(ADJUNCTION, 2)];
    for s in symbols {
        if s == ADJUNCTION {
            return Err(Error::ReservedName(s.to_string()));
        }
        pairs.push((s, 0));
    }
    RankedAlphabet::new(pairs)
}
