//! The Hopf algebra of decorated rooted forests.
//!
//! Product: disjoint union of forests. Coproduct on a tree, written with the
//! root factor on the left tensor slot:
//!
//!   coproduct(t) = 1 (x) t + (B+_i (x) id) coproduct(t_1 ... t_n)
//!
//! for t = B+_i(t_1 ... t_n), extended multiplicatively to forests. The left
//! slot of every non-unit term is the pruned part containing the root; the
//! right slot is the forest of cut branches.
//!
//! A second coproduct, [`extraction_coproduct`], sums over collections of
//! node-disjoint connected subgraphs: the collection is extracted into the
//! left slot and each subgraph is contracted to a single 0-decorated node in
//! the right slot. The two coproducts cointeract; see
//! [`check_cointeraction`].

use crate::comb::Comb;
use crate::error::{Error, Result};
use crate::scalar::{q_int, Q, Scalar};
use crate::trees::{Decoration, Forest, Tree};
use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};

pub type ForestComb = Comb<Forest, Q>;
pub type TensorComb = Comb<(Forest, Forest), Q>;
pub type Tensor3Comb = Comb<(Forest, Forest, Forest), Q>;

/// The unit forest with coefficient 1.
pub fn unit_comb() -> ForestComb {
    ForestComb::basis(Forest::empty())
}

/// Coefficient of the empty forest.
pub fn counit(c: &ForestComb) -> Q {
    c.coeff(&Forest::empty())
}

/// Bilinear extension of the forest product.
pub fn comb_product(a: &ForestComb, b: &ForestComb) -> ForestComb {
    let mut out = ForestComb::zero();
    for (fa, ca) in a.iter() {
        for (fb, cb) in b.iter() {
            out.add_term(fa.product(fb), ca * cb);
        }
    }
    out
}

/// Slotwise product of 2-tensors.
pub fn tensor_product(a: &TensorComb, b: &TensorComb) -> TensorComb {
    let mut out = TensorComb::zero();
    for ((la, ra), ca) in a.iter() {
        for ((lb, rb), cb) in b.iter() {
            out.add_term((la.product(lb), ra.product(rb)), ca * cb);
        }
    }
    out
}

/// Swaps the tensor slots.
pub fn flip(t: &TensorComb) -> TensorComb {
    t.map_keys(|(l, r)| (r.clone(), l.clone()))
}

/// Applies B+_dec to every forest term.
pub fn b_plus_comb(dec: Decoration, c: &ForestComb) -> ForestComb {
    c.map_keys(|f| Forest::single(Tree::b_plus(dec, f)))
}

thread_local! {
    static COPRODUCT_MEMO: RefCell<HashMap<Tree, TensorComb>> = RefCell::new(HashMap::new());
    static ANTIPODE_MEMO: RefCell<HashMap<Tree, ForestComb>> = RefCell::new(HashMap::new());
    static EXTRACTION_MEMO: RefCell<HashMap<Tree, TensorComb>> = RefCell::new(HashMap::new());
}

/// Coproduct of a single tree, root factor on the left slot.
pub fn coproduct_tree(t: &Tree) -> TensorComb {
    if let Some(hit) = COPRODUCT_MEMO.with(|m| m.borrow().get(t).cloned()) {
        return hit;
    }
    let (dec, children) = t.b_minus();
    let child_cop = coproduct_forest(&children);
    let mut out = TensorComb::term((Forest::empty(), Forest::single(t.clone())), q_int(1));
    for ((left, right), coeff) in child_cop.iter() {
        out.add_term(
            (Forest::single(Tree::b_plus(dec, left)), right.clone()),
            coeff.clone(),
        );
    }
    COPRODUCT_MEMO.with(|m| m.borrow_mut().insert(t.clone(), out.clone()));
    out
}

/// Coproduct of a forest (multiplicative extension).
pub fn coproduct_forest(f: &Forest) -> TensorComb {
    let mut out = TensorComb::basis((Forest::empty(), Forest::empty()));
    for t in f.expanded() {
        out = tensor_product(&out, &coproduct_tree(t));
    }
    out
}

pub fn coproduct_comb(c: &ForestComb) -> TensorComb {
    c.flat_map(coproduct_forest)
}

/// coproduct(f) - 1 (x) f - f (x) 1. Zero on single nodes and on the unit.
pub fn reduced_coproduct_forest(f: &Forest) -> TensorComb {
    if f.is_empty() {
        // The unit is grouplike: both removed terms are the same one.
        return TensorComb::zero();
    }
    let mut out = coproduct_forest(f);
    out.add_term((Forest::empty(), f.clone()), q_int(-1));
    out.add_term((f.clone(), Forest::empty()), q_int(-1));
    out
}

/// Antipode of a tree.
///
/// For a non-unit tree: A(t) = -t - sum A(f') f'' over the terms of the
/// reduced coproduct. Extended multiplicatively to forests.
pub fn antipode_tree(t: &Tree) -> ForestComb {
    if let Some(hit) = ANTIPODE_MEMO.with(|m| m.borrow().get(t).cloned()) {
        return hit;
    }
    let mut out = ForestComb::term(Forest::single(t.clone()), q_int(-1));
    for ((left, right), coeff) in reduced_coproduct_forest(&Forest::single(t.clone())).iter() {
        let rec = antipode_forest(left);
        out.add_scaled(&comb_product(&rec, &ForestComb::basis(right.clone())), &-coeff.clone());
    }
    ANTIPODE_MEMO.with(|m| m.borrow_mut().insert(t.clone(), out.clone()));
    out
}

pub fn antipode_forest(f: &Forest) -> ForestComb {
    let mut out = unit_comb();
    for t in f.expanded() {
        out = comb_product(&out, &antipode_tree(t));
    }
    out
}

pub fn antipode_comb(c: &ForestComb) -> ForestComb {
    c.flat_map(antipode_forest)
}

/// Flat array view of a tree used by the subgraph enumerations: decorations
/// and parent indices in depth-first order (node 0 is the root).
pub(crate) struct NodeTable {
    pub decs: Vec<Decoration>,
    pub parent: Vec<Option<usize>>,
}

pub(crate) fn node_table(t: &Tree) -> NodeTable {
    let mut decs = Vec::with_capacity(t.size() as usize);
    let mut parent = Vec::with_capacity(t.size() as usize);
    fn walk(t: &Tree, par: Option<usize>, decs: &mut Vec<Decoration>, parent: &mut Vec<Option<usize>>) {
        let idx = decs.len();
        decs.push(t.dec());
        parent.push(par);
        for c in t.children() {
            walk(c, Some(idx), decs, parent);
        }
    }
    walk(t, None, &mut decs, &mut parent);
    NodeTable { decs, parent }
}

/// Rebuilds a decorated tree from (decoration, parent) arrays restricted to
/// `root`'s component under the given child lists.
fn build_tree(root: usize, decs: &[Decoration], children: &[Vec<usize>]) -> Tree {
    let kids = children[root].iter().map(|&c| build_tree(c, decs, children)).collect();
    Tree::node(decs[root], kids)
}

/// Extraction and contraction coproduct of a tree.
///
/// Terms are indexed by a set S of nodes together with a set E' of tree
/// edges inside S; the connected components of (S, E') are the extracted
/// subtrees (left slot, as a forest) and each component is contracted to a
/// 0-decorated node in the remaining tree (right slot). The empty S gives
/// 1 (x) t; S = all nodes with all edges gives t (x) node_0-contraction.
pub fn extraction_coproduct_tree(t: &Tree) -> TensorComb {
    if let Some(hit) = EXTRACTION_MEMO.with(|m| m.borrow().get(t).cloned()) {
        return hit;
    }
    let n = t.size() as usize;
    assert!(n <= 24, "extraction enumeration is exponential; {n} nodes is past the supported range");
    let table = node_table(t);
    // Edges are identified by their child endpoint (1..n).
    let edges: Vec<(usize, usize)> =
        (1..n).map(|c| (c, table.parent[c].expect("non-root has a parent"))).collect();
    let mut out = TensorComb::zero();
    for s_mask in 0u32..(1 << n) {
        let in_s = |x: usize| s_mask >> x & 1 == 1;
        let inner: Vec<usize> =
            (0..edges.len()).filter(|&e| in_s(edges[e].0) && in_s(edges[e].1)).collect();
        for e_choice in 0u32..(1 << inner.len()) {
            let chosen: Vec<(usize, usize)> = inner
                .iter()
                .enumerate()
                .filter(|(i, _)| e_choice >> i & 1 == 1)
                .map(|(_, &e)| edges[e])
                .collect();
            out.add_term(extraction_term(&table, s_mask, &chosen), q_int(1));
        }
    }
    EXTRACTION_MEMO.with(|m| m.borrow_mut().insert(t.clone(), out.clone()));
    out
}

fn extraction_term(table: &NodeTable, s_mask: u32, chosen: &[(usize, usize)]) -> (Forest, Forest) {
    let n = table.decs.len();
    let in_s = |x: usize| s_mask >> x & 1 == 1;
    // Component representative within (S, E').
    let mut rep: Vec<usize> = (0..n).collect();
    fn find(rep: &mut Vec<usize>, x: usize) -> usize {
        if rep[x] != x {
            let r = find(rep, rep[x]);
            rep[x] = r;
            r
        } else {
            x
        }
    }
    for &(c, p) in chosen {
        let (a, b) = (find(&mut rep, c), find(&mut rep, p));
        if a != b {
            rep[a] = b;
        }
    }
    // Extracted forest: each component as a tree under E' alone.
    let mut part_children: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(c, p) in chosen {
        part_children[p].push(c);
    }
    let mut e_parent: Vec<Option<usize>> = vec![None; n];
    for &(c, p) in chosen {
        e_parent[c] = Some(p);
    }
    let mut extracted = Forest::empty();
    let mut part_root: Vec<usize> = (0..n).collect();
    for x in 0..n {
        if in_s(x) && e_parent[x].is_none() {
            let r = find(&mut rep, x);
            part_root[r] = x;
            extracted.push_tree(build_tree(x, &table.decs, &part_children), 1);
        }
    }
    // Contracted tree: components become fresh 0-decorated nodes; node x is
    // represented by its component root if extracted, by itself otherwise.
    let image = |rep: &mut Vec<usize>, x: usize| -> usize {
        if in_s(x) {
            let r = find(rep, x);
            part_root[r]
        } else {
            x
        }
    };
    let mut kept_children: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut decs = table.decs.clone();
    for x in 0..n {
        let img = image(&mut rep, x);
        if in_s(x) {
            decs[img] = 0;
        }
        if img != x {
            continue;
        }
        if let Some(p) = table.parent[x] {
            let pi = image(&mut rep, p);
            if pi != img {
                kept_children[pi].push(img);
            }
        }
    }
    let root_img = image(&mut rep, 0);
    let contracted = build_tree(root_img, &decs, &kept_children);
    (extracted, Forest::single(contracted))
}

/// Multiplicative extension to forests.
pub fn extraction_coproduct_forest(f: &Forest) -> TensorComb {
    let mut out = TensorComb::basis((Forest::empty(), Forest::empty()));
    for t in f.expanded() {
        out = tensor_product(&out, &extraction_coproduct_tree(t));
    }
    out
}

pub fn extraction_coproduct_comb(c: &ForestComb) -> TensorComb {
    c.flat_map(extraction_coproduct_forest)
}

/// Verifies the cointeraction of the two coproducts on a single forest:
///
///   m13 (extract (x) extract) coproduct(f)  ==  (id (x) coproduct) extract(f)
///
/// where m13 multiplies the first and third slots of the 4-tensor
/// (a (x) b (x) c (x) d -> ac (x) b (x) d). Returns the defect (zero when
/// the identity holds).
pub fn cointeraction_defect(f: &Forest) -> Tensor3Comb {
    let mut lhs = Tensor3Comb::zero();
    for ((a, b), c0) in coproduct_forest(f).iter() {
        for ((a1, a2), c1) in extraction_coproduct_forest(a).iter() {
            for ((b1, b2), c2) in extraction_coproduct_forest(b).iter() {
                lhs.add_term((a1.product(b1), a2.clone(), b2.clone()), c0 * c1 * c2);
            }
        }
    }
    let mut rhs = Tensor3Comb::zero();
    for ((e, g), c0) in extraction_coproduct_forest(f).iter() {
        for ((g1, g2), c1) in coproduct_forest(g).iter() {
            rhs.add_term((e.clone(), g1.clone(), g2.clone()), c0 * c1);
        }
    }
    lhs.sub(&rhs)
}

/// Checks cointeraction on every tree up to the given size; returns the
/// first failing tree, if any.
pub fn check_cointeraction(n_max: u32, d: Decoration) -> Result<()> {
    for t in crate::trees::enumerate_trees(n_max, d)? {
        let defect = cointeraction_defect(&Forest::single(t.clone()));
        if !defect.is_zero() {
            return Err(Error::NotAccepted {
                message: format!(
                    "coproduct cointeraction fails on {t}: defect has {} terms",
                    defect.len()
                ),
            });
        }
    }
    Ok(())
}

/// A multiplicative functional on forests, determined by its values on
/// trees. Values default to zero off the stored support; the unit forest
/// maps to 1.
#[derive(Clone, Debug, PartialEq)]
pub struct Character<S: Scalar> {
    trunc: u32,
    values: BTreeMap<Tree, S>,
}

impl<S: Scalar> Character<S> {
    /// The convolution identity: 1 on the unit forest, 0 on all trees.
    pub fn identity(trunc: u32) -> Character<S> {
        Character { trunc, values: BTreeMap::new() }
    }

    pub fn from_tree_values(trunc: u32, values: BTreeMap<Tree, S>) -> Result<Character<S>> {
        for (t, _) in values.iter() {
            if t.size() > trunc {
                return Err(Error::precondition(format!(
                    "character value on {t} exceeds truncation {trunc}"
                )));
            }
        }
        let mut c = Character { trunc, values };
        c.values.retain(|_, v| !v.is_zero());
        Ok(c)
    }

    pub fn trunc(&self) -> u32 {
        self.trunc
    }

    pub fn set(&mut self, tree: Tree, value: S) {
        assert!(tree.size() <= self.trunc, "tree past truncation");
        if value.is_zero() {
            self.values.remove(&tree);
        } else {
            self.values.insert(tree, value);
        }
    }

    pub fn tree_values(&self) -> &BTreeMap<Tree, S> {
        &self.values
    }

    pub fn on_tree(&self, t: &Tree) -> S {
        self.values.get(t).cloned().unwrap_or_else(S::zero)
    }

    pub fn on_forest(&self, f: &Forest) -> S {
        let mut out = S::one();
        for (t, m) in f.iter() {
            let v = self.on_tree(t);
            if v.is_zero() {
                return S::zero();
            }
            for _ in 0..m {
                out = out.mul(&v);
            }
        }
        out
    }

    pub fn on_comb(&self, c: &ForestComb) -> S {
        let mut out = S::zero();
        for (f, q) in c.iter() {
            let v = self.on_forest(f);
            out = out.add(&v.mul(&S::from_q(q)));
        }
        out
    }

    /// Convolution product: (self * other)(f) pairs self with the left
    /// coproduct slot and other with the right.
    pub fn convolve(&self, other: &Character<S>) -> Result<Character<S>> {
        if self.trunc != other.trunc {
            return Err(Error::TruncationMismatch { left: self.trunc, right: other.trunc });
        }
        let mut values = BTreeMap::new();
        for t in crate::trees::enumerate_trees(self.trunc, self.max_dec().max(other.max_dec()))? {
            let mut acc = S::zero();
            for ((l, r), q) in coproduct_tree(&t).iter() {
                let v = self.on_forest(l).mul(&other.on_forest(r));
                acc = acc.add(&v.mul(&S::from_q(q)));
            }
            if !acc.is_zero() {
                values.insert(t, acc);
            }
        }
        Ok(Character { trunc: self.trunc, values })
    }

    /// Convolution inverse: composition with the antipode.
    pub fn inverse(&self) -> Character<S> {
        let mut values = BTreeMap::new();
        for (t, _) in self.values.iter() {
            let _ = t;
        }
        // The inverse can be supported on trees where self vanishes, so walk
        // the full basis up to the truncation.
        let d = self.max_dec();
        for t in crate::trees::enumerate_trees(self.trunc, d).expect("enumeration within cap") {
            let v = self.on_comb(&antipode_tree(&t));
            if !v.is_zero() {
                values.insert(t, v);
            }
        }
        Character { trunc: self.trunc, values }
    }

    pub fn max_dec(&self) -> Decoration {
        self.values.keys().map(|t| t.max_dec()).max().unwrap_or(0)
    }
}

fn forest_encodings(f: &Forest) -> serde_json::Value {
    serde_json::Value::Array(
        f.expanded().map(|t| serde_json::Value::String(t.encode())).collect(),
    )
}

/// JSON form of a forest combination: an array of
/// `{forest: [tree-encodings], num, den}` with numerator and denominator as
/// decimal strings. Terms follow the canonical forest order.
pub fn comb_json(c: &ForestComb) -> serde_json::Value {
    serde_json::Value::Array(
        c.iter()
            .map(|(f, coeff)| {
                serde_json::json!({
                    "forest": forest_encodings(f),
                    "num": coeff.numer().to_string(),
                    "den": coeff.denom().to_string(),
                })
            })
            .collect(),
    )
}

/// JSON form of a two-slot tensor: an array of
/// `{left: [tree-encodings], right: [tree-encodings], num, den}`, each slot
/// encoded like the forests of [`comb_json`].
pub fn tensor_json(c: &TensorComb) -> serde_json::Value {
    serde_json::Value::Array(
        c.iter()
            .map(|((l, r), coeff)| {
                serde_json::json!({
                    "left": forest_encodings(l),
                    "right": forest_encodings(r),
                    "num": coeff.numer().to_string(),
                    "den": coeff.denom().to_string(),
                })
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{q, q_int};
    use crate::trees::{chain2, dot, enumerate_trees, Forest};

    fn ft(t: &Tree) -> Forest {
        Forest::single(t.clone())
    }

    #[test]
    fn single_node_is_primitive() {
        let t = dot(1);
        let cop = coproduct_tree(&t);
        assert_eq!(cop.len(), 2);
        assert_eq!(cop.coeff(&(Forest::empty(), ft(&t))), q_int(1));
        assert_eq!(cop.coeff(&(ft(&t), Forest::empty())), q_int(1));
    }

    #[test]
    fn coproduct_of_two_chain_has_root_on_left() {
        // t = 1 over 0: terms 1 (x) t, t (x) 1, dot1 (x) dot0.
        let t = chain2(1, 0);
        let cop = coproduct_tree(&t);
        assert_eq!(cop.len(), 3);
        assert_eq!(cop.coeff(&(ft(&dot(1)), ft(&dot(0)))), q_int(1));
        assert_eq!(cop.coeff(&(ft(&dot(0)), ft(&dot(1)))), q_int(0));
    }

    #[test]
    fn coproduct_counts_repeated_branches_with_multiplicity() {
        // Cherry B+_1(dot1 dot1): cutting one of the two equal branches
        // contributes coefficient 2.
        let t = Tree::b_plus(1, &Forest::from_trees([dot(1), dot(1)]));
        let cop = coproduct_tree(&t);
        assert_eq!(cop.coeff(&(ft(&chain2(1, 1)), ft(&dot(1)))), q_int(2));
        assert_eq!(
            cop.coeff(&(ft(&dot(1)), Forest::from_trees([dot(1), dot(1)]))),
            q_int(1)
        );
        assert_eq!(cop.len(), 4);
    }

    #[test]
    fn coproduct_of_three_chain() {
        let t = crate::trees::chain3(1, 0, 1);
        let cop = coproduct_tree(&t);
        assert_eq!(cop.len(), 4);
        assert_eq!(cop.coeff(&(ft(&dot(1)), ft(&chain2(0, 1)))), q_int(1));
        assert_eq!(cop.coeff(&(ft(&chain2(1, 0)), ft(&dot(1)))), q_int(1));
    }

    #[test]
    fn coproduct_is_coassociative_up_to_size_four() {
        for t in enumerate_trees(4, 1).unwrap() {
            let f = ft(&t);
            let mut lhs = Tensor3Comb::zero();
            for ((a, b), c0) in coproduct_forest(&f).iter() {
                for ((a1, a2), c1) in coproduct_forest(a).iter() {
                    lhs.add_term((a1.clone(), a2.clone(), b.clone()), c0 * c1);
                }
            }
            let mut rhs = Tensor3Comb::zero();
            for ((a, b), c0) in coproduct_forest(&f).iter() {
                for ((b1, b2), c1) in coproduct_forest(b).iter() {
                    rhs.add_term((a.clone(), b1.clone(), b2.clone()), c0 * c1);
                }
            }
            assert_eq!(lhs, rhs, "coassociativity fails on {t}");
        }
    }

    #[test]
    fn antipode_of_single_node_is_negation() {
        assert_eq!(antipode_tree(&dot(1)), ForestComb::term(ft(&dot(1)), q_int(-1)));
    }

    #[test]
    fn antipode_of_two_chain() {
        // A(t) = -t + dot1 dot0 for t = 1 over 0.
        let t = chain2(1, 0);
        let a = antipode_tree(&t);
        assert_eq!(a.coeff(&ft(&t)), q_int(-1));
        assert_eq!(a.coeff(&Forest::from_trees([dot(0), dot(1)])), q_int(1));
        assert_eq!(a.len(), 2);
    }

    #[test]
    fn antipode_is_a_convolution_inverse_up_to_size_four() {
        // m(A (x) id) coproduct(t) == 0 for every non-unit tree.
        for t in enumerate_trees(4, 1).unwrap() {
            let mut acc = ForestComb::zero();
            for ((l, r), c) in coproduct_tree(&t).iter() {
                acc.add_scaled(
                    &comb_product(&antipode_forest(l), &ForestComb::basis(r.clone())),
                    c,
                );
            }
            assert!(acc.is_zero(), "antipode identity fails on {t}: {acc:?}");
        }
    }

    #[test]
    fn extraction_of_single_node() {
        let t = dot(1);
        let ext = extraction_coproduct_tree(&t);
        assert_eq!(ext.len(), 2);
        assert_eq!(ext.coeff(&(Forest::empty(), ft(&t))), q_int(1));
        assert_eq!(ext.coeff(&(ft(&t), ft(&dot(0)))), q_int(1));
    }

    #[test]
    fn extraction_of_two_chain_has_five_terms() {
        // t = i over j with i=1, j=1: the five collections are
        // empty, {leaf}, {root}, {whole chain}, {root}+{leaf}.
        let t = chain2(1, 1);
        let ext = extraction_coproduct_tree(&t);
        assert_eq!(ext.coeff(&(Forest::empty(), ft(&t))), q_int(1));
        assert_eq!(ext.coeff(&(ft(&dot(1)), ft(&chain2(1, 0)))), q_int(1));
        assert_eq!(ext.coeff(&(ft(&dot(1)), ft(&chain2(0, 1)))), q_int(1));
        assert_eq!(ext.coeff(&(ft(&t), ft(&dot(0)))), q_int(1));
        assert_eq!(
            ext.coeff(&(Forest::from_trees([dot(1), dot(1)]), ft(&chain2(0, 0)))),
            q_int(1)
        );
        assert_eq!(ext.len(), 5);
    }

    #[test]
    fn extraction_with_distinct_decorations() {
        let t = chain2(2, 1);
        let ext = extraction_coproduct_tree(&t);
        assert_eq!(ext.coeff(&(ft(&dot(1)), ft(&chain2(2, 0)))), q_int(1));
        assert_eq!(ext.coeff(&(ft(&dot(2)), ft(&chain2(0, 1)))), q_int(1));
        assert_eq!(
            ext.coeff(&(Forest::from_trees([dot(1), dot(2)]), ft(&chain2(0, 0)))),
            q_int(1)
        );
        assert_eq!(ext.len(), 5);
    }

    #[test]
    fn coproducts_cointeract_up_to_size_four() {
        check_cointeraction(4, 1).unwrap();
    }

    #[test]
    fn characters_form_a_group_under_convolution() {
        let mut x = Character::<Q>::identity(3);
        x.set(dot(1), q(1, 2));
        x.set(chain2(1, 1), q(-1, 3));
        x.set(dot(0), q(2, 1));
        let inv = x.inverse();
        let e = x.convolve(&inv).unwrap();
        assert_eq!(e, Character::identity(3), "x * x^-1 != identity");
        let e2 = inv.convolve(&x).unwrap();
        assert_eq!(e2, Character::identity(3));
    }

    #[test]
    fn convolution_respects_truncation() {
        let x = Character::<Q>::identity(3);
        let y = Character::<Q>::identity(2);
        assert!(matches!(
            x.convolve(&y),
            Err(crate::error::Error::TruncationMismatch { left: 3, right: 2 })
        ));
    }

    #[test]
    fn character_on_forest_is_multiplicative() {
        let mut x = Character::<Q>::identity(3);
        x.set(dot(1), q(1, 2));
        x.set(dot(0), q(3, 1));
        let f = Forest::from_trees([dot(1), dot(1), dot(0)]);
        assert_eq!(x.on_forest(&f), q(3, 4));
        // A tree with no stored value kills the product.
        let g = Forest::from_trees([dot(1), chain2(1, 1)]);
        assert_eq!(x.on_forest(&g), q_int(0));
    }
}
