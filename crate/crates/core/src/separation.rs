//! PMI-driven constituency parsing of noun compounds.
//!
//! A sliding three-element window starts at the right end of the segmented
//! compound and compares the PMI of its left pair against its right pair:
//! when the right pair binds tighter it is merged into one constituent and
//! the window shifts left, otherwise the window just shifts left. At the left
//! boundary the comparison flips: a tighter left pair is merged and the
//! window moves right. Passes repeat over the partially merged sequence until
//! two elements remain, which join into the root.
//!
//! The result is a complete binary tree over the words; hypernyms of the
//! entity are read off the rightmost root-to-leaf path.

use thiserror::Error;

use crate::pmi::PmiTable;
use crate::segment::Segmented;

#[derive(Debug, Error)]
pub enum SeparationError {
    #[error("cannot separate an empty word sequence")]
    EmptyCompound,
}

/// A node covering the contiguous word range `lo..=hi` of the compound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SepNode {
    lo: usize,
    hi: usize,
    children: Option<Box<(SepNode, SepNode)>>,
}

impl SepNode {
    fn leaf(i: usize) -> Self {
        SepNode {
            lo: i,
            hi: i,
            children: None,
        }
    }

    fn internal(left: SepNode, right: SepNode) -> Self {
        debug_assert_eq!(left.hi + 1, right.lo, "merged nodes must be adjacent");
        SepNode {
            lo: left.lo,
            hi: right.hi,
            children: Some(Box::new((left, right))),
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }

    pub fn children(&self) -> Option<(&SepNode, &SepNode)> {
        self.children.as_deref().map(|(l, r)| (l, r))
    }

    /// Inclusive word-index range covered by this node.
    pub fn word_range(&self) -> (usize, usize) {
        (self.lo, self.hi)
    }
}

/// Binary constituency tree whose in-order leaves are the compound's words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeparationTree {
    compound: Segmented,
    root: SepNode,
}

impl SeparationTree {
    pub fn root(&self) -> &SepNode {
        &self.root
    }

    pub fn compound(&self) -> &Segmented {
        &self.compound
    }

    /// The original text span a node covers; for merged nodes this is the
    /// concatenation of the children, separators included.
    pub fn node_text(&self, node: &SepNode) -> &str {
        self.compound.slice(node.lo, node.hi)
    }

    /// Canonical bracketing over leaf indices, e.g. `((0 1) (2 3))`.
    pub fn shape(&self) -> String {
        fn walk(node: &SepNode, out: &mut String) {
            match node.children() {
                None => out.push_str(&node.lo.to_string()),
                Some((l, r)) => {
                    out.push('(');
                    walk(l, out);
                    out.push(' ');
                    walk(r, out);
                    out.push(')');
                }
            }
        }
        let mut out = String::new();
        walk(&self.root, &mut out);
        out
    }
}

fn merge_at(elems: &mut Vec<SepNode>, i: usize) {
    let right = elems.remove(i + 1);
    let left = elems.remove(i);
    elems.insert(i, SepNode::internal(left, right));
}

/// Run the sliding-window procedure over a segmented compound.
///
/// Deterministic for a fixed table. Ties inside the window shift without
/// merging; a pass in which every decision ties falls back to merging the
/// rightmost pair so the procedure always reaches a single root.
pub fn separate(compound: &Segmented, table: &PmiTable) -> Result<SeparationTree, SeparationError> {
    let n = compound.len();
    if n == 0 {
        return Err(SeparationError::EmptyCompound);
    }
    let pair_pmi = |a: &SepNode, b: &SepNode| {
        table.pmi(compound.slice(a.lo, a.hi), compound.slice(b.lo, b.hi))
    };
    let mut elems: Vec<SepNode> = (0..n).map(SepNode::leaf).collect();
    let mut steps = 0usize;
    let budget = 8 * n * n + 16;
    while elems.len() > 2 {
        let mut merged_in_pass = false;
        let mut k = elems.len() - 3;
        loop {
            steps += 1;
            assert!(steps <= budget, "separation exceeded its O(n^2) step bound");
            let left = pair_pmi(&elems[k], &elems[k + 1]);
            let right = pair_pmi(&elems[k + 1], &elems[k + 2]);
            if left < right {
                // merge the right pair, then shift the window left
                merge_at(&mut elems, k + 1);
                merged_in_pass = true;
                if k == 0 || elems.len() < 3 {
                    break;
                }
                k -= 1;
            } else if k > 0 {
                // shift left without merging
                k -= 1;
            } else if left > right {
                // left boundary: merge the left pair, window moves right
                merge_at(&mut elems, 0);
                merged_in_pass = true;
                if elems.len() < 3 {
                    break;
                }
            } else {
                // tie at the leftmost window ends the pass
                break;
            }
        }
        if elems.len() > 2 && !merged_in_pass {
            // every decision tied; default to right-branching
            let m = elems.len();
            merge_at(&mut elems, m - 2);
        }
    }
    let root = if elems.len() == 2 {
        let right = elems.pop().expect("two elements");
        let left = elems.pop().expect("two elements");
        SepNode::internal(left, right)
    } else {
        elems.pop().expect("one element")
    };
    Ok(SeparationTree {
        compound: compound.clone(),
        root,
    })
}

/// Hypernyms of the compound: every node on the rightmost root-to-leaf path
/// except the root itself, ordered longest first, duplicates removed.
///
/// A single-word compound is its own hypernym (the root-exclusion rule is
/// waived for the degenerate tree).
pub fn extract_hypernyms(tree: &SeparationTree) -> Vec<String> {
    let root = tree.root();
    if root.is_leaf() {
        return vec![tree.node_text(root).to_string()];
    }
    let mut out: Vec<String> = Vec::new();
    let mut node = root;
    while let Some((_, right)) = node.children() {
        node = right;
        let text = tree.node_text(node);
        if !out.iter().any(|t| t == text) {
            out.push(text.to_string());
        }
    }
    out
}
