//! Decorated rooted trees and forests.
//!
//! Trees are unordered: children are kept sorted under the canonical order,
//! so structural equality is isomorphism of decorated rooted trees. Forests
//! are multisets of trees stored as sorted (tree, multiplicity) pairs.
//!
//! The canonical order is grade-first: smaller node count comes first, ties
//! are broken by decoration and then by the child list. Every deterministic
//! listing in the crate (enumeration, serialized maps, report rows) uses it.
//!
//! Text grammar: a tree is `dec[child child ...]`, so the 1-decorated leaf
//! is `1[]` and a 2-chain with decorations i over j is `i[j[]]`. Whitespace
//! between children is optional.

use crate::error::{Error, Result};
use std::cmp::Ordering;
use std::fmt;

/// Node decorations. 0 is reserved: it marks nodes produced by contracting
/// an extracted subtree, and the weight of a 0-decorated node is 1 - gamma
/// rather than gamma.
pub type Decoration = u8;

/// Cap on how many objects a single enumeration call may produce.
pub const ENUM_CAP: usize = 2_000_000;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Tree {
    dec: Decoration,
    children: Vec<Tree>,
    size: u32,
    zeros: u32,
}

impl Tree {
    pub fn leaf(dec: Decoration) -> Tree {
        Tree { dec, children: Vec::new(), size: 1, zeros: (dec == 0) as u32 }
    }

    /// Builds a node with the given children; sorts them into canonical form.
    pub fn node(dec: Decoration, mut children: Vec<Tree>) -> Tree {
        children.sort();
        let size = 1 + children.iter().map(|c| c.size).sum::<u32>();
        let zeros = (dec == 0) as u32 + children.iter().map(|c| c.zeros).sum::<u32>();
        Tree { dec, children, size, zeros }
    }

    /// Grafts the forest onto a new dec-decorated root.
    pub fn b_plus(dec: Decoration, forest: &Forest) -> Tree {
        Tree::node(dec, forest.expanded().cloned().collect())
    }

    /// Inverse of [`Tree::b_plus`]: root decoration and the forest of child
    /// subtrees.
    pub fn b_minus(&self) -> (Decoration, Forest) {
        (self.dec, Forest::from_trees(self.children.iter().cloned()))
    }

    pub fn dec(&self) -> Decoration {
        self.dec
    }

    pub fn children(&self) -> &[Tree] {
        &self.children
    }

    /// Node count.
    pub fn size(&self) -> u32 {
        self.size
    }

    /// Number of 0-decorated nodes.
    pub fn zeros(&self) -> u32 {
        self.zeros
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    pub fn max_dec(&self) -> Decoration {
        self.children.iter().map(|c| c.max_dec()).max().map_or(self.dec, |m| m.max(self.dec))
    }

    /// Same shape and children, root redecorated.
    pub fn redecorate_root(&self, dec: Decoration) -> Tree {
        Tree::node(dec, self.children.clone())
    }

    pub fn encode(&self) -> String {
        let mut out = String::new();
        self.encode_into(&mut out);
        out
    }

    fn encode_into(&self, out: &mut String) {
        out.push_str(&self.dec.to_string());
        out.push('[');
        for (i, c) in self.children.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            c.encode_into(out);
        }
        out.push(']');
    }

    /// Parses the `dec[child ...]` grammar. Errors carry the byte offset of
    /// the offending character. Decorations above `max_dec` are rejected.
    pub fn parse(text: &str, max_dec: Decoration) -> Result<Tree> {
        let bytes = text.as_bytes();
        let mut pos = 0usize;
        let tree = parse_tree(bytes, &mut pos, max_dec)?;
        skip_ws(bytes, &mut pos);
        if pos != bytes.len() {
            return Err(Error::Parse {
                offset: pos,
                message: "trailing input after tree".into(),
            });
        }
        Ok(tree)
    }
}

fn skip_ws(bytes: &[u8], pos: &mut usize) {
    while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
}

fn parse_tree(bytes: &[u8], pos: &mut usize, max_dec: Decoration) -> Result<Tree> {
    skip_ws(bytes, pos);
    let start = *pos;
    while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
        *pos += 1;
    }
    if *pos == start {
        return Err(Error::Parse {
            offset: start,
            message: "expected a decoration (decimal digits)".into(),
        });
    }
    let dec_text = std::str::from_utf8(&bytes[start..*pos]).expect("digits are ascii");
    let dec: Decoration = dec_text.parse().map_err(|_| Error::Parse {
        offset: start,
        message: format!("decoration {dec_text} does not fit in u8"),
    })?;
    if dec > max_dec {
        return Err(Error::DecorationRange { found: dec, max: max_dec });
    }
    skip_ws(bytes, pos);
    if *pos >= bytes.len() || bytes[*pos] != b'[' {
        return Err(Error::Parse {
            offset: *pos,
            message: "expected '[' after decoration".into(),
        });
    }
    *pos += 1;
    let mut children = Vec::new();
    loop {
        skip_ws(bytes, pos);
        if *pos >= bytes.len() {
            return Err(Error::Parse {
                offset: *pos,
                message: "unclosed '[': expected child tree or ']'".into(),
            });
        }
        if bytes[*pos] == b']' {
            *pos += 1;
            return Ok(Tree::node(dec, children));
        }
        children.push(parse_tree(bytes, pos, max_dec)?);
    }
}

impl Ord for Tree {
    fn cmp(&self, other: &Self) -> Ordering {
        self.size
            .cmp(&other.size)
            .then_with(|| self.dec.cmp(&other.dec))
            .then_with(|| self.children.cmp(&other.children))
    }
}

impl PartialOrd for Tree {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.encode())
    }
}

impl fmt::Display for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.encode())
    }
}

/// Multiset of trees. The empty forest is the unit of the forest product.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Forest {
    items: Vec<(Tree, u32)>,
}

impl Forest {
    pub fn empty() -> Forest {
        Forest { items: Vec::new() }
    }

    pub fn single(tree: Tree) -> Forest {
        Forest { items: vec![(tree, 1)] }
    }

    pub fn from_trees(trees: impl IntoIterator<Item = Tree>) -> Forest {
        let mut f = Forest::empty();
        for t in trees {
            f.push_tree(t, 1);
        }
        f
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Total node count.
    pub fn size(&self) -> u32 {
        self.items.iter().map(|(t, m)| t.size() * m).sum()
    }

    /// Total count of 0-decorated nodes.
    pub fn zeros(&self) -> u32 {
        self.items.iter().map(|(t, m)| t.zeros() * m).sum()
    }

    /// Number of trees, counted with multiplicity.
    pub fn tree_count(&self) -> u32 {
        self.items.iter().map(|(_, m)| m).sum()
    }

    pub fn max_dec(&self) -> Decoration {
        self.items.iter().map(|(t, _)| t.max_dec()).max().unwrap_or(0)
    }

    /// Distinct trees with multiplicities.
    pub fn iter(&self) -> impl Iterator<Item = (&Tree, u32)> {
        self.items.iter().map(|(t, m)| (t, *m))
    }

    /// Trees repeated by multiplicity.
    pub fn expanded(&self) -> impl Iterator<Item = &Tree> {
        self.items.iter().flat_map(|(t, m)| std::iter::repeat(t).take(*m as usize))
    }

    /// If the forest is a single tree with multiplicity 1, that tree.
    pub fn as_single_tree(&self) -> Option<&Tree> {
        match self.items.as_slice() {
            [(t, 1)] => Some(t),
            _ => None,
        }
    }

    pub fn push_tree(&mut self, tree: Tree, mult: u32) {
        if mult == 0 {
            return;
        }
        match self.items.binary_search_by(|(t, _)| t.cmp(&tree)) {
            Ok(i) => self.items[i].1 += mult,
            Err(i) => self.items.insert(i, (tree, mult)),
        }
    }

    /// Multiset union (the commutative forest product).
    pub fn product(&self, other: &Forest) -> Forest {
        let mut out = self.clone();
        for (t, m) in other.iter() {
            out.push_tree(t.clone(), m);
        }
        out
    }

    pub fn encode(&self) -> String {
        if self.is_empty() {
            return "1".into();
        }
        self.expanded().map(Tree::encode).collect::<Vec<_>>().join(" ")
    }

    /// Parses whitespace-separated trees; `1` denotes the empty forest.
    pub fn parse(text: &str, max_dec: Decoration) -> Result<Forest> {
        let trimmed = text.trim();
        if trimmed == "1" {
            return Ok(Forest::empty());
        }
        let bytes = text.as_bytes();
        let mut pos = 0usize;
        let mut forest = Forest::empty();
        loop {
            skip_ws(bytes, &mut pos);
            if pos == bytes.len() {
                break;
            }
            forest.push_tree(parse_tree(bytes, &mut pos, max_dec)?, 1);
        }
        if forest.is_empty() {
            return Err(Error::Parse { offset: 0, message: "empty forest input (use 1)".into() });
        }
        Ok(forest)
    }
}

impl Ord for Forest {
    fn cmp(&self, other: &Self) -> Ordering {
        self.size()
            .cmp(&other.size())
            .then_with(|| {
                let mut a = self.expanded();
                let mut b = other.expanded();
                loop {
                    match (a.next(), b.next()) {
                        (None, None) => return Ordering::Equal,
                        (None, Some(_)) => return Ordering::Less,
                        (Some(_), None) => return Ordering::Greater,
                        (Some(x), Some(y)) => match x.cmp(y) {
                            Ordering::Equal => continue,
                            ord => return ord,
                        },
                    }
                }
            })
    }
}

impl PartialOrd for Forest {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Forest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.encode())
    }
}

impl fmt::Display for Forest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.encode())
    }
}

impl FromIterator<Tree> for Forest {
    fn from_iter<I: IntoIterator<Item = Tree>>(iter: I) -> Forest {
        Forest::from_trees(iter)
    }
}

/// All trees with decorations in 0..=d, sizes 1..=n_max, in canonical order.
pub fn enumerate_trees(n_max: u32, d: Decoration) -> Result<Vec<Tree>> {
    enumerate_trees_capped(n_max, d, ENUM_CAP)
}

pub fn enumerate_trees_capped(n_max: u32, d: Decoration, cap: usize) -> Result<Vec<Tree>> {
    let mut by_size: Vec<Vec<Tree>> = vec![Vec::new()];
    let mut total = 0usize;
    for n in 1..=n_max {
        let mut level = Vec::new();
        // A tree of size n is a root over a forest of total size n-1.
        let forests = forests_of_size(n - 1, &by_size)?;
        for forest in &forests {
            for dec in 0..=d {
                level.push(Tree::b_plus(dec, forest));
                total += 1;
                if total > cap {
                    return Err(Error::Resource {
                        message: format!(
                            "tree enumeration up to size {n_max} with {} decorations exceeds cap {cap}",
                            d as u32 + 1
                        ),
                    });
                }
            }
        }
        level.sort();
        by_size.push(level);
    }
    Ok(by_size.into_iter().flatten().collect())
}

/// Multisets of the given total size drawn from trees of smaller sizes.
fn forests_of_size(total: u32, by_size: &[Vec<Tree>]) -> Result<Vec<Forest>> {
    // Pool in canonical order; choosing a non-decreasing index sequence
    // enumerates each multiset exactly once.
    let pool: Vec<&Tree> = by_size.iter().flatten().collect();
    let mut out = Vec::new();
    let mut stack: Vec<&Tree> = Vec::new();
    fn rec<'a>(
        pool: &[&'a Tree],
        from: usize,
        remaining: u32,
        stack: &mut Vec<&'a Tree>,
        out: &mut Vec<Forest>,
    ) {
        if remaining == 0 {
            out.push(Forest::from_trees(stack.iter().map(|t| (*t).clone())));
            return;
        }
        for i in from..pool.len() {
            if pool[i].size() > remaining {
                continue;
            }
            stack.push(pool[i]);
            rec(pool, i, remaining - pool[i].size(), stack, out);
            stack.pop();
        }
    }
    rec(&pool, 0, total, &mut stack, &mut out);
    out.sort();
    Ok(out)
}

/// All forests (including the empty one) with total size 0..=n_max, in
/// canonical order.
pub fn enumerate_forests(n_max: u32, d: Decoration) -> Result<Vec<Forest>> {
    enumerate_forests_capped(n_max, d, ENUM_CAP)
}

pub fn enumerate_forests_capped(n_max: u32, d: Decoration, cap: usize) -> Result<Vec<Forest>> {
    let trees = enumerate_trees_capped(n_max, d, cap)?;
    let mut by_size: Vec<Vec<Tree>> = vec![Vec::new(); n_max as usize + 1];
    for t in trees {
        by_size[t.size() as usize].push(t);
    }
    let mut out = Vec::new();
    for n in 0..=n_max {
        let mut level = forests_of_size(n, &by_size)?;
        out.append(&mut level);
        if out.len() > cap {
            return Err(Error::Resource {
                message: format!("forest enumeration up to size {n_max} exceeds cap {cap}"),
            });
        }
    }
    Ok(out)
}

/// The i-decorated single-node tree.
pub fn dot(dec: Decoration) -> Tree {
    Tree::leaf(dec)
}

/// The 2-chain with decoration `top` at the root and `low` below it.
pub fn chain2(top: Decoration, low: Decoration) -> Tree {
    Tree::node(top, vec![Tree::leaf(low)])
}

/// The 3-chain root..leaf decorated top, mid, low.
pub fn chain3(top: Decoration, mid: Decoration, low: Decoration) -> Tree {
    Tree::node(top, vec![chain2(mid, low)])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_node_trees_with_one_nonzero_decoration() {
        let trees = enumerate_trees(1, 1).unwrap();
        assert_eq!(trees, vec![dot(0), dot(1)]);
    }

    #[test]
    fn six_trees_up_to_size_two_with_one_nonzero_decoration() {
        let trees = enumerate_trees(2, 1).unwrap();
        assert_eq!(trees.len(), 6);
        assert_eq!(trees.iter().filter(|t| t.size() == 2).count(), 4);
    }

    #[test]
    fn tree_counts_match_decorated_catalan_like_series() {
        // d=1 (two decorations): 2, 4, 14, 52 trees of sizes 1..4.
        let trees = enumerate_trees(4, 1).unwrap();
        let count = |n: u32| trees.iter().filter(|t| t.size() == n).count();
        assert_eq!((count(1), count(2), count(3), count(4)), (2, 4, 14, 52));
        assert_eq!(trees.len(), 72);
    }

    #[test]
    fn undecorated_shape_counts_are_rooted_tree_numbers() {
        let trees = enumerate_trees(4, 0).unwrap();
        let count = |n: u32| trees.iter().filter(|t| t.size() == n).count();
        assert_eq!((count(1), count(2), count(3), count(4)), (1, 1, 2, 4));
    }

    #[test]
    fn forest_counts_with_one_nonzero_decoration() {
        // Sizes 0..4: 1, 2, 7, 26, 107 forests; 143 in total.
        let forests = enumerate_forests(4, 1).unwrap();
        let count = |n: u32| forests.iter().filter(|f| f.size() == n).count();
        assert_eq!(
            (count(0), count(1), count(2), count(3), count(4)),
            (1, 2, 7, 26, 107)
        );
        assert_eq!(forests.len(), 143);
    }

    #[test]
    fn enumeration_is_sorted_and_duplicate_free() {
        let trees = enumerate_trees(4, 1).unwrap();
        for w in trees.windows(2) {
            assert!(w[0] < w[1], "{} !< {}", w[0], w[1]);
        }
        let forests = enumerate_forests(3, 1).unwrap();
        for w in forests.windows(2) {
            assert!(w[0] < w[1], "{} !< {}", w[0], w[1]);
        }
    }

    #[test]
    fn children_are_canonically_sorted_regardless_of_input_order() {
        let a = Tree::node(1, vec![dot(1), dot(0)]);
        let b = Tree::node(1, vec![dot(0), dot(1)]);
        assert_eq!(a, b);
        assert_eq!(a.encode(), "1[0[] 1[]]");
    }

    #[test]
    fn parse_inverts_encode_and_ignores_whitespace() {
        let t = Tree::parse("1[ 0[]1[0[]] ]", 1).unwrap();
        assert_eq!(t.encode(), "1[0[] 1[0[]]]");
        assert_eq!(Tree::parse(&t.encode(), 1).unwrap(), t);
        assert_eq!(t.size(), 4);
        assert_eq!(t.zeros(), 2);
    }

    #[test]
    fn parse_errors_carry_byte_offsets() {
        match Tree::parse("1[0[]", 1) {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 5),
            other => panic!("expected parse error, got {other:?}"),
        }
        match Tree::parse("x[]", 1) {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 0),
            other => panic!("expected parse error, got {other:?}"),
        }
        match Tree::parse("1[] 0[]", 1) {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("expected parse error, got {other:?}"),
        }
        match Tree::parse("7[]", 1) {
            Err(Error::DecorationRange { found, max }) => {
                assert_eq!((found, max), (7, 1));
            }
            other => panic!("expected decoration error, got {other:?}"),
        }
    }

    #[test]
    fn forest_parse_handles_unit_and_multiplicities() {
        assert!(Forest::parse("1", 1).unwrap().is_empty());
        let f = Forest::parse("1[] 0[] 1[]", 1).unwrap();
        assert_eq!(f.encode(), "0[] 1[] 1[]");
        assert_eq!(f.tree_count(), 3);
        assert_eq!(f.iter().count(), 2);
        assert_eq!(Forest::parse(&f.encode(), 1).unwrap(), f);
    }

    #[test]
    fn order_is_grade_first() {
        let big_dot = dot(1);
        let small_chain = chain2(0, 0);
        assert!(big_dot < small_chain);
        assert!(dot(0) < dot(1));
        assert!(chain2(0, 1) < chain2(1, 0));
        // Forest order: empty first, then by total size.
        assert!(Forest::empty() < Forest::single(dot(0)));
        let two_dots = Forest::from_trees([dot(1), dot(1)]);
        assert!(Forest::single(chain2(1, 1)) > two_dots);
    }

    #[test]
    fn b_plus_b_minus_round_trip() {
        let f = Forest::from_trees([dot(1), chain2(0, 1)]);
        let t = Tree::b_plus(1, &f);
        let (dec, back) = t.b_minus();
        assert_eq!(dec, 1);
        assert_eq!(back, f);
    }

    #[test]
    fn enumeration_cap_is_enforced() {
        match enumerate_trees_capped(6, 3, 100) {
            Err(Error::Resource { .. }) => {}
            other => panic!("expected resource error, got {other:?}"),
        }
    }
}
