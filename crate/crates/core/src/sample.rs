//! Multisets of trees with positive integer counts.

use std::fmt;

use crate::error::{Error, Result};
use crate::tree::{parse_tree, ParseMode, Tree};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TreeSample {
    items: Vec<(Tree, u64)>,
}

impl TreeSample {
    /// Counts must be positive. Repeated trees are kept as separate entries.
    pub fn new(items: Vec<(Tree, u64)>) -> Result<Self> {
        if let Some((t, _)) = items.iter().find(|(_, c)| *c == 0) {
            return Err(Error::InvalidModel(format!("tree `{t}` has count 0")));
        }
        Ok(TreeSample { items })
    }

    /// Groups equal trees, keeping first-occurrence order.
    pub fn from_trees<I: IntoIterator<Item = Tree>>(trees: I) -> Self {
        let mut index: std::collections::HashMap<Tree, usize> = std::collections::HashMap::new();
        let mut items: Vec<(Tree, u64)> = Vec::new();
        for t in trees {
            match index.get(&t) {
                Some(&i) => items[i].1 += 1,
                None => {
                    index.insert(t.clone(), items.len());
                    items.push((t, 1));
                }
            }
        }
        TreeSample { items }
    }

    /// One entry per line, either `tree` or `count<TAB>tree`; blank lines and
    /// lines starting with `#` are skipped.
    pub fn parse(text: &str, mode: ParseMode<'_>) -> Result<Self> {
        let mut items = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let format_err = |msg: String| Error::Format { line: i + 1, msg };
            let (count, tree) = match line.split_once('\t') {
                Some((c, t)) => {
                    let c: u64 = c
                        .trim()
                        .parse()
                        .map_err(|_| format_err(format!("bad count `{}`", c.trim())))?;
                    if c == 0 {
                        return Err(format_err("count must be positive".into()));
                    }
                    (c, t)
                }
                None => (1, line),
            };
            let t = parse_tree(tree, mode).map_err(|e| format_err(e.to_string()))?;
            items.push((t, count));
        }
        Ok(TreeSample { items })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Σ counts.
    pub fn total(&self) -> u64 {
        self.items.iter().map(|(_, c)| c).sum()
    }

    pub fn items(&self) -> &[(Tree, u64)] {
        &self.items
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Tree, u64)> {
        self.items.iter().map(|(t, c)| (t, *c))
    }

    pub fn trees(&self) -> impl Iterator<Item = &Tree> {
        self.items.iter().map(|(t, _)| t)
    }

    pub fn map_trees(&self, mut f: impl FnMut(&Tree) -> Result<Tree>) -> Result<TreeSample> {
        let items = self
            .items
            .iter()
            .map(|(t, c)| Ok((f(t)?, *c)))
            .collect::<Result<Vec<_>>>()?;
        Ok(TreeSample { items })
    }
}

impl fmt::Display for TreeSample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (t, c) in &self.items {
            writeln!(f, "{c}\t{t}")?;
        }
        Ok(())
    }
}
