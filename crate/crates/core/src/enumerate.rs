//! Exhaustive enumeration of small trees and contexts, used as brute-force
//! oracles and for building Hankel blocks.

use crate::tree::{Context, RankedAlphabet, Tree, HOLE};

/// All compositions of `total` into `parts` positive integers, in
/// lexicographic order.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 0 {
        return if total == 0 { vec![vec![]] } else { vec![] };
    }
    if total < parts {
        return vec![];
    }
    let mut out = Vec::new();
    for first in 1..=total - (parts - 1) {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Cartesian product of `lists`, first factor varying slowest.
fn product<T: Clone>(lists: &[&[T]]) -> Vec<Vec<T>> {
    let mut acc: Vec<Vec<T>> = vec![vec![]];
    for list in lists {
        let mut next = Vec::with_capacity(acc.len() * list.len());
        for prefix in &acc {
            for item in list.iter() {
                let mut v = prefix.clone();
                v.push(item.clone());
                next.push(v);
            }
        }
        acc = next;
    }
    acc
}

fn sort_by_render(trees: &mut [Tree]) {
    trees.sort_by_cached_key(|t| t.render());
}

/// Every tree over `alphabet` with at most `max_size` nodes, ordered by
/// size and then by rendered text.
pub fn enumerate_trees(alphabet: &RankedAlphabet, max_size: usize) -> Vec<Tree> {
    by_size(alphabet, max_size).into_iter().flatten().collect()
}

/// `result[s]` lists the trees of exactly `s` nodes (index 0 is empty).
pub fn by_size(alphabet: &RankedAlphabet, max_size: usize) -> Vec<Vec<Tree>> {
    let mut sized: Vec<Vec<Tree>> = vec![Vec::new(); max_size + 1];
    for s in 1..=max_size {
        let mut here = Vec::new();
        for (name, arity) in alphabet.iter() {
            if arity == 0 {
                if s == 1 {
                    here.push(Tree::leaf(name));
                }
                continue;
            }
            for comp in compositions(s - 1, arity) {
                let lists: Vec<&[Tree]> = comp.iter().map(|&k| sized[k].as_slice()).collect();
                here.extend(product(&lists).into_iter().map(|kids| Tree::node(name, kids)));
            }
        }
        sort_by_render(&mut here);
        sized[s] = here;
    }
    sized
}

/// Every context (exactly one hole) over `alphabet` with at most `max_size`
/// nodes, the hole counting as one node. Ordered like [`enumerate_trees`].
pub fn enumerate_contexts(alphabet: &RankedAlphabet, max_size: usize) -> Vec<Context> {
    let closed = by_size(alphabet, max_size);
    let mut open: Vec<Vec<Tree>> = vec![Vec::new(); max_size + 1];
    for s in 1..=max_size {
        let mut here = Vec::new();
        if s == 1 {
            here.push(Tree::leaf(HOLE));
        }
        for (name, arity) in alphabet.iter() {
            if arity == 0 {
                continue;
            }
            for comp in compositions(s - 1, arity) {
                for hole_at in 0..arity {
                    let lists: Vec<&[Tree]> = comp
                        .iter()
                        .enumerate()
                        .map(|(i, &k)| if i == hole_at { open[k].as_slice() } else { closed[k].as_slice() })
                        .collect();
                    here.extend(product(&lists).into_iter().map(|kids| Tree::node(name, kids)));
                }
            }
        }
        sort_by_render(&mut here);
        open[s] = here;
    }
    open.into_iter()
        .flatten()
        .map(|t| Context::new(t).expect("exactly one hole by construction"))
        .collect()
}

/// Every unranked tree with labels from `symbols` and at most `max_size`
/// nodes, ordered by size and rendered text.
pub fn enumerate_unranked_trees(symbols: &[&str], max_size: usize) -> Vec<Tree> {
    let mut trees: Vec<Vec<Tree>> = vec![Vec::new(); max_size + 1];
    // forests[s]: ordered sequences of trees with s nodes in total
    let mut forests: Vec<Vec<Vec<Tree>>> = vec![vec![vec![]]];
    for s in 1..=max_size {
        let mut here: Vec<Tree> = symbols
            .iter()
            .flat_map(|name| forests[s - 1].iter().map(move |kids| Tree::node(*name, kids.clone())))
            .collect();
        sort_by_render(&mut here);
        trees[s] = here;
        let mut forest = Vec::new();
        for first in 1..=s {
            for head in &trees[first] {
                for tail in &forests[s - first] {
                    let mut f = Vec::with_capacity(tail.len() + 1);
                    f.push(head.clone());
                    f.extend(tail.iter().cloned());
                    forest.push(f);
                }
            }
        }
        forests.push(forest);
    }
    trees.into_iter().flatten().collect()
}
