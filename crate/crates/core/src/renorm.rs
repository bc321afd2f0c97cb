//! Renormalisation maps on the forest algebra.
//!
//! Two constructions are provided: extraction/contraction maps driven by a
//! character on 0-free trees, and recursive maps driven by a root-level
//! rewriting rule. Either one is materialized as an exact matrix over the
//! forest basis, so multiplicativity, triangularity, adjoints and
//! composition are all matrix facts that can be audited directly.

use std::collections::BTreeMap;

use num::Zero;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::comb::Comb;
use crate::error::{Error, Result};
use crate::forest_hopf::{
    b_plus_comb, comb_product, coproduct_comb, coproduct_tree, extraction_coproduct_tree,
    node_table, reduced_coproduct_forest, unit_comb, ForestComb, TensorComb,
};
use crate::linalg::QMatrix;
use crate::scalar::{q_parse, q_render, Q};
use crate::trees::{enumerate_forests, enumerate_trees, Decoration, Forest, Tree};
use crate::tree_words::tree_to_words;
use crate::word_hopf::{deconcat_coproduct, tree_weight_exact, Word, WordComb};

pub type TreeComb = Comb<Tree, Q>;

/// (a) (x) (b) as an element of the tensor square.
fn outer(a: &ForestComb, b: &ForestComb) -> TensorComb {
    let mut out = TensorComb::zero();
    for (f, x) in a.iter() {
        for (g, y) in b.iter() {
            out.add_term((f.clone(), g.clone()), x * y);
        }
    }
    out
}

fn single(t: &Tree) -> Forest {
    Forest::single(t.clone())
}

fn forest_comb_of(c: &TreeComb) -> ForestComb {
    c.map_keys(single)
}

fn tree_comb_of(c: &ForestComb) -> Result<TreeComb> {
    let mut out = TreeComb::zero();
    for (f, coeff) in c.iter() {
        match f.as_single_tree() {
            Some(t) => out.add_term(t.clone(), coeff.clone()),
            None => {
                return Err(Error::format(format!(
                    "expected single-tree terms, found forest {f}"
                )))
            }
        }
    }
    Ok(out)
}

/// Grade-ordered basis of all forests within the truncation.
#[derive(Clone, Debug)]
pub struct ForestIndex {
    trunc: u32,
    d: Decoration,
    forests: Vec<Forest>,
    pos: BTreeMap<Forest, usize>,
}

impl ForestIndex {
    pub fn new(trunc: u32, d: Decoration) -> Result<ForestIndex> {
        let forests = enumerate_forests(trunc, d)?;
        let pos = forests.iter().cloned().enumerate().map(|(i, f)| (f, i)).collect();
        Ok(ForestIndex { trunc, d, forests, pos })
    }

    pub fn trunc(&self) -> u32 {
        self.trunc
    }

    pub fn dec_bound(&self) -> Decoration {
        self.d
    }

    pub fn len(&self) -> usize {
        self.forests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forests.is_empty()
    }

    pub fn forests(&self) -> &[Forest] {
        &self.forests
    }

    pub fn position(&self, f: &Forest) -> Result<usize> {
        self.pos.get(f).copied().ok_or_else(|| {
            Error::format(format!("forest {f} is outside the basis (trunc {})", self.trunc))
        })
    }

    pub fn comb_to_vec(&self, c: &ForestComb) -> Result<Vec<Q>> {
        let mut out = vec![Q::zero(); self.forests.len()];
        for (f, coeff) in c.iter() {
            out[self.position(f)?] = coeff.clone();
        }
        Ok(out)
    }

    pub fn vec_to_comb(&self, v: &[Q]) -> ForestComb {
        let mut out = ForestComb::zero();
        for (i, coeff) in v.iter().enumerate() {
            if !coeff.is_zero() {
                out.add_term(self.forests[i].clone(), coeff.clone());
            }
        }
        out
    }
}

/// A linear map on the truncated forest algebra, stored as an exact matrix.
///
/// Entry (r, c) is the coefficient of basis forest r in the image of basis
/// forest c. The adjoint (acting on character coordinates) is the
/// transpose.
#[derive(Clone, Debug)]
pub struct RenormMatrix {
    index: ForestIndex,
    mat: QMatrix,
}

impl RenormMatrix {
    pub fn identity(trunc: u32, d: Decoration) -> Result<RenormMatrix> {
        let index = ForestIndex::new(trunc, d)?;
        let mat = QMatrix::identity(index.len());
        Ok(RenormMatrix { index, mat })
    }

    /// Extends per-tree images multiplicatively to every basis forest.
    /// Trees missing from `images` map to themselves. Product terms that
    /// overflow the truncation are discarded; maps that never raise the
    /// node count (the only ones accepted downstream) lose nothing.
    pub fn from_tree_images(
        trunc: u32,
        d: Decoration,
        images: &BTreeMap<Tree, TreeComb>,
    ) -> Result<RenormMatrix> {
        let index = ForestIndex::new(trunc, d)?;
        let mut mat = QMatrix::zeros(index.len(), index.len());
        for (col, f) in index.forests().iter().enumerate() {
            let mut img = unit_comb();
            for t in f.expanded() {
                let t_img = match images.get(t) {
                    Some(c) => forest_comb_of(c),
                    None => ForestComb::basis(single(t)),
                };
                img = comb_product(&img, &t_img);
                img.retain(|g, _| g.size() <= trunc);
            }
            for (g, coeff) in img.iter() {
                mat.set(index.position(g)?, col, coeff.clone());
            }
        }
        Ok(RenormMatrix { index, mat })
    }

    pub fn trunc(&self) -> u32 {
        self.index.trunc()
    }

    pub fn dec_bound(&self) -> Decoration {
        self.index.dec_bound()
    }

    pub fn index(&self) -> &ForestIndex {
        &self.index
    }

    pub fn matrix(&self) -> &QMatrix {
        &self.mat
    }

    /// Coefficient of `image` in the image of `source`.
    pub fn entry(&self, image: &Forest, source: &Forest) -> Result<Q> {
        let r = self.index.position(image)?;
        let c = self.index.position(source)?;
        Ok(self.mat.get(r, c).clone())
    }

    /// Adds `delta` to one entry. Mutation hook for sensitivity tests.
    pub fn perturb(&mut self, image: &Forest, source: &Forest, delta: &Q) -> Result<()> {
        let r = self.index.position(image)?;
        let c = self.index.position(source)?;
        self.mat.add_to(r, c, delta);
        Ok(())
    }

    pub fn apply_forest(&self, f: &Forest) -> Result<ForestComb> {
        let c = self.index.position(f)?;
        let mut out = ForestComb::zero();
        for r in 0..self.index.len() {
            let coeff = self.mat.get(r, c);
            if !coeff.is_zero() {
                out.add_term(self.index.forests()[r].clone(), coeff.clone());
            }
        }
        Ok(out)
    }

    pub fn apply_comb(&self, c: &ForestComb) -> Result<ForestComb> {
        let mut out = ForestComb::zero();
        for (f, coeff) in c.iter() {
            out.add_scaled(&self.apply_forest(f)?, coeff);
        }
        Ok(out)
    }

    /// Image of a tree, required to be a combination of single trees.
    pub fn tree_image(&self, t: &Tree) -> Result<TreeComb> {
        tree_comb_of(&self.apply_forest(&single(t))?)
    }

    /// Transpose; the action on character coordinates.
    pub fn adjoint(&self) -> RenormMatrix {
        RenormMatrix { index: self.index.clone(), mat: self.mat.transpose() }
    }

    /// self after other (matrix product).
    pub fn compose(&self, other: &RenormMatrix) -> Result<RenormMatrix> {
        if self.trunc() != other.trunc() || self.dec_bound() != other.dec_bound() {
            return Err(Error::TruncationMismatch {
                left: self.trunc(),
                right: other.trunc(),
            });
        }
        Ok(RenormMatrix { index: self.index.clone(), mat: self.mat.mul(&other.mat)? })
    }

    pub fn is_unital(&self) -> Result<bool> {
        Ok(self.apply_forest(&Forest::empty())? == unit_comb())
    }

    /// First forest whose column differs from the product of its parts.
    pub fn multiplicativity_defect(&self) -> Result<Option<Forest>> {
        for f in self.index.forests() {
            if f.tree_count() < 2 {
                continue;
            }
            let mut parts = f.expanded();
            let head = parts.next().expect("nonempty forest").clone();
            let rest = Forest::from_trees(parts.cloned());
            let whole = self.apply_forest(f)?;
            let mut split = comb_product(&self.apply_forest(&single(&head))?, &self.apply_forest(&rest)?);
            split.retain(|g, _| g.size() <= self.trunc());
            if whole != split {
                return Ok(Some(f.clone()));
            }
        }
        Ok(None)
    }

    /// First entry whose image grade exceeds its source grade.
    pub fn triangularity_defect(&self) -> Option<(Forest, Forest)> {
        for (c, src) in self.index.forests().iter().enumerate() {
            for (r, img) in self.index.forests().iter().enumerate() {
                if !self.mat.get(r, c).is_zero() && img.size() > src.size() {
                    return Some((img.clone(), src.clone()));
                }
            }
        }
        None
    }
}

/// Character on 0-free trees, extended multiplicatively to forests and by
/// zero to anything containing a 0-decorated node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BphzCharacter {
    trunc: u32,
    d: Decoration,
    values: BTreeMap<Tree, Q>,
}

impl BphzCharacter {
    pub fn new(trunc: u32, d: Decoration, values: BTreeMap<Tree, Q>) -> Result<BphzCharacter> {
        for (t, _) in values.iter() {
            if t.zeros() > 0 {
                return Err(Error::precondition(format!(
                    "character value on 0-decorated tree {t}"
                )));
            }
            if t.size() > trunc {
                return Err(Error::precondition(format!(
                    "character key {t} exceeds truncation {trunc}"
                )));
            }
            if t.max_dec() > d {
                return Err(Error::DecorationRange { found: t.max_dec(), max: d });
            }
        }
        let values = values.into_iter().filter(|(_, v)| !v.is_zero()).collect();
        Ok(BphzCharacter { trunc, d, values })
    }

    pub fn trunc(&self) -> u32 {
        self.trunc
    }

    pub fn dec_bound(&self) -> Decoration {
        self.d
    }

    pub fn values(&self) -> &BTreeMap<Tree, Q> {
        &self.values
    }

    pub fn eval_tree(&self, t: &Tree) -> Q {
        if t.zeros() > 0 {
            return Q::zero();
        }
        self.values.get(t).cloned().unwrap_or_else(Q::zero)
    }

    pub fn eval_forest(&self, f: &Forest) -> Q {
        let mut acc = Q::from_integer(1.into());
        for (t, mult) in f.iter() {
            let v = self.eval_tree(t);
            if v.is_zero() {
                return Q::zero();
            }
            for _ in 0..mult {
                acc *= &v;
            }
        }
        acc
    }

    /// Seed-determined character: every 0-free tree within the truncation
    /// gets numerator in [-4, 4] and denominator in [1, 4].
    pub fn random(trunc: u32, d: Decoration, seed: u64) -> Result<BphzCharacter> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut values = BTreeMap::new();
        for t in enumerate_trees(trunc, d)? {
            if t.zeros() > 0 {
                continue;
            }
            let num = (rng.next_u64() % 9) as i64 - 4;
            let den = (rng.next_u64() % 4) as i64 + 1;
            if num != 0 {
                values.insert(t, Q::new(num.into(), den.into()));
            }
        }
        BphzCharacter::new(trunc, d, values)
    }

    pub fn to_json(&self) -> String {
        let mut map = serde_json::Map::new();
        for (t, v) in &self.values {
            map.insert(t.encode(), serde_json::Value::String(q_render(v)));
        }
        let mut text = serde_json::to_string_pretty(&serde_json::Value::Object(map))
            .expect("string map serializes");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str, trunc: u32, d: Decoration) -> Result<BphzCharacter> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let obj = value
            .as_object()
            .ok_or_else(|| Error::format("character file must be a JSON object"))?;
        let mut values = BTreeMap::new();
        for (key, val) in obj {
            let tree = Tree::parse(key, d)?;
            let raw = val
                .as_str()
                .ok_or_else(|| Error::format(format!("value for {key} must be a string")))?;
            values.insert(tree, q_parse(raw)?);
        }
        BphzCharacter::new(trunc, d, values)
    }
}

/// Extraction/contraction map of a character: each tree maps to the sum
/// over extracted subforests weighted by the character, with every
/// extracted component contracted to a 0-decorated node.
pub fn bphz_map(v: &BphzCharacter) -> Result<RenormMatrix> {
    let mut images = BTreeMap::new();
    for t in enumerate_trees(v.trunc(), v.dec_bound())? {
        let mut img = TreeComb::zero();
        for ((extracted, contracted), coeff) in extraction_coproduct_tree(&t).iter() {
            let weight = v.eval_forest(extracted);
            if weight.is_zero() {
                continue;
            }
            let tree = contracted
                .as_single_tree()
                .expect("contraction of a tree is a tree")
                .clone();
            img.add_term(tree, coeff * &weight);
        }
        images.insert(t, img);
    }
    RenormMatrix::from_tree_images(v.trunc(), v.dec_bound(), &images)
}

/// Root-level rewriting rule R(t) = t + corrections(t), a finite table.
///
/// Structural validation fixes the recursion's termination order: in
/// strict mode every correction term drops the node count; in loose mode
/// ties in node count are allowed when the term has strictly more
/// 0-decorated nodes. Every term must also keep at least the weight of
/// its source, so rewriting never lowers regularity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalRule {
    trunc: u32,
    d: Decoration,
    strict: bool,
    corrections: BTreeMap<Tree, TreeComb>,
}

impl LocalRule {
    pub fn identity(trunc: u32, d: Decoration) -> LocalRule {
        LocalRule { trunc, d, strict: true, corrections: BTreeMap::new() }
    }

    pub fn new(
        trunc: u32,
        d: Decoration,
        strict: bool,
        corrections: BTreeMap<Tree, TreeComb>,
        gamma: &Q,
    ) -> Result<LocalRule> {
        let one = Q::from_integer(1.into());
        if !(gamma > &Q::zero() && gamma < &one) {
            return Err(Error::precondition("weight parameter must lie in (0, 1)"));
        }
        let mut kept = BTreeMap::new();
        for (t, comb) in corrections {
            if t.size() > trunc {
                return Err(Error::RuleRejected {
                    tree: t.encode(),
                    message: format!("source exceeds truncation {trunc}"),
                });
            }
            if t.max_dec() > d {
                return Err(Error::DecorationRange { found: t.max_dec(), max: d });
            }
            let reject = |message: String| Error::RuleRejected { tree: t.encode(), message };
            for (term, _) in comb.iter() {
                if term.max_dec() > d {
                    return Err(Error::DecorationRange { found: term.max_dec(), max: d });
                }
                if term.size() > t.size() {
                    return Err(reject(format!("correction term {term} raises the node count")));
                }
                if term.size() == t.size() {
                    if strict {
                        return Err(reject(format!(
                            "correction term {term} ties the node count (strict mode)"
                        )));
                    }
                    if term.zeros() <= t.zeros() {
                        return Err(reject(format!(
                            "tied correction term {term} does not add 0-decorated nodes"
                        )));
                    }
                }
                if tree_weight_exact(term, gamma) < tree_weight_exact(&t, gamma) {
                    return Err(reject(format!("correction term {term} lowers the weight")));
                }
            }
            if !comb.is_zero() {
                kept.insert(t, comb);
            }
        }
        Ok(LocalRule { trunc, d, strict, corrections: kept })
    }

    pub fn trunc(&self) -> u32 {
        self.trunc
    }

    pub fn dec_bound(&self) -> Decoration {
        self.d
    }

    pub fn is_strict(&self) -> bool {
        self.strict
    }

    pub fn corrections(&self) -> &BTreeMap<Tree, TreeComb> {
        &self.corrections
    }

    pub fn apply(&self, t: &Tree) -> TreeComb {
        let mut out = TreeComb::basis(t.clone());
        if let Some(c) = self.corrections.get(t) {
            out = out.add(c);
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut map = serde_json::Map::new();
        for (t, comb) in &self.corrections {
            let mut inner = serde_json::Map::new();
            for (term, coeff) in comb.iter() {
                inner.insert(term.encode(), serde_json::Value::String(q_render(coeff)));
            }
            map.insert(t.encode(), serde_json::Value::Object(inner));
        }
        let mut text = serde_json::to_string_pretty(&serde_json::Value::Object(map))
            .expect("string map serializes");
        text.push('\n');
        text
    }

    pub fn from_json(
        text: &str,
        trunc: u32,
        d: Decoration,
        strict: bool,
        gamma: &Q,
    ) -> Result<LocalRule> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let obj =
            value.as_object().ok_or_else(|| Error::format("rule file must be a JSON object"))?;
        let mut corrections = BTreeMap::new();
        for (key, val) in obj {
            let tree = Tree::parse(key, d)?;
            let inner = val.as_object().ok_or_else(|| {
                Error::format(format!("corrections for {key} must be a JSON object"))
            })?;
            let mut comb = TreeComb::zero();
            for (term_key, coeff_val) in inner {
                let forest = Forest::parse(term_key, d)?;
                let term = forest
                    .as_single_tree()
                    .ok_or_else(|| {
                        Error::format(format!("correction term {term_key} is not a single tree"))
                    })?
                    .clone();
                let raw = coeff_val.as_str().ok_or_else(|| {
                    Error::format(format!("coefficient for {term_key} must be a string"))
                })?;
                comb.add_term(term, q_parse(raw)?);
            }
            corrections.insert(tree, comb);
        }
        LocalRule::new(trunc, d, strict, corrections, gamma)
    }
}

struct LocalCtx<'a> {
    rule: &'a LocalRule,
    m: BTreeMap<Tree, ForestComb>,
    ring: BTreeMap<Tree, ForestComb>,
}

impl<'a> LocalCtx<'a> {
    fn m_tree(&mut self, t: &Tree) -> ForestComb {
        if let Some(hit) = self.m.get(t) {
            return hit.clone();
        }
        let mut out = ForestComb::zero();
        for (term, coeff) in self.rule.apply(t).iter() {
            out.add_scaled(&self.ring_tree(term), coeff);
        }
        self.m.insert(t.clone(), out.clone());
        out
    }

    fn ring_tree(&mut self, t: &Tree) -> ForestComb {
        if let Some(hit) = self.ring.get(t) {
            return hit.clone();
        }
        let (dec, kids) = t.b_minus();
        let inner = self.m_forest(&kids);
        let out = b_plus_comb(dec, &inner);
        self.ring.insert(t.clone(), out.clone());
        out
    }

    fn m_forest(&mut self, f: &Forest) -> ForestComb {
        let mut out = unit_comb();
        for t in f.expanded() {
            let img = self.m_tree(t);
            out = comb_product(&out, &img);
        }
        out
    }
}

/// Builds the pair (M, M°) of a rule: M° pushes through the root grafting
/// and applies M to the branches; M rewrites at the root first. Returns
/// the matrices in that order.
pub fn local_map(rule: &LocalRule) -> Result<(RenormMatrix, RenormMatrix)> {
    let mut ctx = LocalCtx { rule, m: BTreeMap::new(), ring: BTreeMap::new() };
    let mut m_images = BTreeMap::new();
    let mut ring_images = BTreeMap::new();
    for t in enumerate_trees(rule.trunc(), rule.dec_bound())? {
        let m_img = tree_comb_of(&ctx.m_tree(&t))?;
        let ring_img = tree_comb_of(&ctx.ring_tree(&t))?;
        m_images.insert(t.clone(), m_img);
        ring_images.insert(t, ring_img);
    }
    let m = RenormMatrix::from_tree_images(rule.trunc(), rule.dec_bound(), &m_images)?;
    let ring = RenormMatrix::from_tree_images(rule.trunc(), rule.dec_bound(), &ring_images)?;
    Ok((m, ring))
}

/// Encodes an extraction character as a root-level rule: the corrections
/// of t sum v(s) * t/s over connected node sets s containing the root,
/// with s contracted to a 0-decorated node. Strict mode is used when the
/// table happens to avoid node-count ties.
pub fn root_extraction_rule(v: &BphzCharacter, gamma: &Q) -> Result<LocalRule> {
    let mut corrections = BTreeMap::new();
    let mut has_tie = false;
    for t in enumerate_trees(v.trunc(), v.dec_bound())? {
        let n = t.size() as usize;
        let table = node_table(&t);
        let children_full: Vec<Vec<usize>> = {
            let mut lists = vec![Vec::new(); n];
            for (i, p) in table.parent.iter().enumerate() {
                if let Some(p) = p {
                    lists[*p].push(i);
                }
            }
            lists
        };
        let mut comb = TreeComb::zero();
        for mask in 0u32..(1 << n) {
            if mask & 1 == 0 {
                continue;
            }
            let in_s = |x: usize| mask >> x & 1 == 1;
            let closed = (1..n)
                .all(|i| !in_s(i) || in_s(table.parent[i].expect("non-root has a parent")));
            if !closed {
                continue;
            }
            let extracted = build_in_mask(0, &table.decs, &children_full, &in_s);
            let weight = v.eval_tree(&extracted);
            if weight.is_zero() {
                continue;
            }
            let mut hanging = Vec::new();
            for i in 0..n {
                if !in_s(i) {
                    if let Some(p) = table.parent[i] {
                        if in_s(p) {
                            hanging.push(build_out_mask(i, &table.decs, &children_full));
                        }
                    }
                }
            }
            let contracted = Tree::node(0, hanging);
            if contracted.size() == t.size() {
                has_tie = true;
            }
            comb.add_term(contracted, weight);
        }
        if !comb.is_zero() {
            corrections.insert(t, comb);
        }
    }
    LocalRule::new(v.trunc(), v.dec_bound(), !has_tie, corrections, gamma)
}

fn build_in_mask(
    root: usize,
    decs: &[Decoration],
    children: &[Vec<usize>],
    in_s: &impl Fn(usize) -> bool,
) -> Tree {
    let kids = children[root]
        .iter()
        .filter(|&&c| in_s(c))
        .map(|&c| build_in_mask(c, decs, children, in_s))
        .collect();
    Tree::node(decs[root], kids)
}

fn build_out_mask(root: usize, decs: &[Decoration], children: &[Vec<usize>]) -> Tree {
    let kids = children[root].iter().map(|&c| build_out_mask(c, decs, children)).collect();
    Tree::node(decs[root], kids)
}

/// Compatibility of a map with the splitting coproduct.
#[derive(Clone, Debug)]
pub struct CointeractionReport {
    pub n_max: u32,
    pub ok: bool,
    pub counterexample: Option<(Tree, String)>,
}

/// Verifies Delta(M t) = (M (x) M) Delta(t) on all trees within n_max.
pub fn check_cointeraction(m: &RenormMatrix, n_max: u32) -> Result<CointeractionReport> {
    for t in enumerate_trees(n_max.min(m.trunc()), m.dec_bound())? {
        let lhs = coproduct_comb(&m.apply_forest(&single(&t))?);
        let mut rhs = TensorComb::zero();
        for ((l, r), coeff) in coproduct_tree(&t).iter() {
            rhs.add_scaled(&outer(&m.apply_forest(l)?, &m.apply_forest(r)?), coeff);
        }
        let defect = lhs.sub(&rhs);
        if !defect.is_zero() {
            return Ok(CointeractionReport {
                n_max,
                ok: false,
                counterexample: Some((t, format!("{defect:?}"))),
            });
        }
    }
    Ok(CointeractionReport { n_max, ok: true, counterexample: None })
}

/// Coproduct compatibilities of a rule's pair (M, M°).
///
/// Applying the counit to the left slot of Delta M = (M (x) M°) Delta
/// forces M = M° pointwise, and the same happens for
/// Delta M° = (M° (x) M°) Delta; for a nontrivial rule both mixed forms
/// necessarily fail, so they are evaluated as diagnostics only. The forms
/// with content, gated here, are the product form Delta M = (M (x) M)
/// Delta and the root unfolding of Delta M°, which places M° on the
/// root-side slot and M on the branch-side slot of the reduced coproduct.
#[derive(Clone, Debug)]
pub struct LocalPairReport {
    pub n_max: u32,
    pub product_form_ok: bool,
    pub unfold_ok: bool,
    pub mixed_form_m: bool,
    pub mixed_form_ring: bool,
    pub counterexample: Option<(Tree, String)>,
}

impl LocalPairReport {
    pub fn gated_ok(&self) -> bool {
        self.product_form_ok && self.unfold_ok
    }
}

pub fn check_local_pair(
    m: &RenormMatrix,
    ring: &RenormMatrix,
    n_max: u32,
) -> Result<LocalPairReport> {
    let product = check_cointeraction(m, n_max)?;
    let mut unfold_ok = true;
    let mut mixed_form_m = true;
    let mut mixed_form_ring = true;
    let mut counterexample = product.counterexample.clone();
    for t in enumerate_trees(n_max.min(m.trunc()), m.dec_bound())? {
        let f = single(&t);
        let ring_img = ring.apply_forest(&f)?;
        let lhs_ring = coproduct_comb(&ring_img);

        let mut unfold = outer(&unit_comb(), &ring_img);
        unfold = unfold.add(&outer(&ring_img, &unit_comb()));
        for ((l, r), coeff) in reduced_coproduct_forest(&f).iter() {
            unfold.add_scaled(&outer(&ring.apply_forest(l)?, &m.apply_forest(r)?), coeff);
        }
        if !lhs_ring.sub(&unfold).is_zero() {
            unfold_ok = false;
            if counterexample.is_none() {
                counterexample =
                    Some((t.clone(), format!("{:?}", lhs_ring.sub(&unfold))));
            }
        }

        let mut mixed_m = TensorComb::zero();
        let mut mixed_ring = TensorComb::zero();
        for ((l, r), coeff) in coproduct_tree(&t).iter() {
            mixed_m.add_scaled(&outer(&m.apply_forest(l)?, &ring.apply_forest(r)?), coeff);
            mixed_ring.add_scaled(&outer(&ring.apply_forest(l)?, &ring.apply_forest(r)?), coeff);
        }
        let lhs_m = coproduct_comb(&m.apply_forest(&f)?);
        if !lhs_m.sub(&mixed_m).is_zero() {
            mixed_form_m = false;
        }
        if !lhs_ring.sub(&mixed_ring).is_zero() {
            mixed_form_ring = false;
        }
    }
    Ok(LocalPairReport {
        n_max,
        product_form_ok: product.ok,
        unfold_ok,
        mixed_form_m,
        mixed_form_ring,
        counterexample,
    })
}

/// Regularity audit: every image term keeps at least the source weight
/// and never raises the node count.
#[derive(Clone, Debug)]
pub struct AnalyticReport {
    pub ok: bool,
    pub witnesses: Vec<(Tree, Tree, String)>,
}

pub fn check_analytic_condition(m: &RenormMatrix, gamma: &Q) -> Result<AnalyticReport> {
    let mut witnesses = Vec::new();
    for t in enumerate_trees(m.trunc(), m.dec_bound())? {
        let source_weight = tree_weight_exact(&t, gamma);
        for (term, _) in m.tree_image(&t)?.iter() {
            if term.size() > t.size() {
                witnesses.push((t.clone(), term.clone(), "node count grows".to_string()));
            } else if tree_weight_exact(term, gamma) < source_weight {
                witnesses.push((t.clone(), term.clone(), "weight drops".to_string()));
            }
        }
    }
    Ok(AnalyticReport { ok: witnesses.is_empty(), witnesses })
}

/// Nonzero translation coefficients of tau: pairs (tau_1, <M tau_1, tau>).
pub fn translation_coeffs(m: &RenormMatrix, tau: &Tree) -> Result<Vec<(Tree, Q)>> {
    let mut out = Vec::new();
    for t1 in enumerate_trees(m.trunc(), m.dec_bound())? {
        let c = m.entry(&single(tau), &single(&t1))?;
        if !c.is_zero() {
            out.push((t1, c));
        }
    }
    Ok(out)
}

/// Full acceptance audit of a map: unital, multiplicative, grade
/// triangular, coproduct compatible, and regularity preserving.
pub fn accept(m: &RenormMatrix, gamma: &Q) -> Result<()> {
    if !m.is_unital()? {
        return Err(Error::NotAccepted { message: "map does not fix the empty forest".into() });
    }
    if let Some(f) = m.multiplicativity_defect()? {
        return Err(Error::NotAccepted { message: format!("not multiplicative at {f}") });
    }
    if let Some((img, src)) = m.triangularity_defect() {
        return Err(Error::NotAccepted {
            message: format!("grade grows from {src} to {img}"),
        });
    }
    let co = check_cointeraction(m, m.trunc())?;
    if !co.ok {
        let at = co.counterexample.map(|(t, _)| t.encode()).unwrap_or_default();
        return Err(Error::NotAccepted { message: format!("coproduct compatibility fails at {at}") });
    }
    let an = check_analytic_condition(m, gamma)?;
    if !an.ok {
        let (t, term, why) = &an.witnesses[0];
        return Err(Error::NotAccepted {
            message: format!("regularity audit fails at {t} -> {term}: {why}"),
        });
    }
    Ok(())
}

/// Letterwise word-level map induced by a tree map: each letter is
/// replaced by its tree image and words multiply by concatenation.
#[derive(Clone, Debug)]
pub struct WordMap {
    trunc: u32,
    letter_images: BTreeMap<Tree, TreeComb>,
}

impl WordMap {
    pub fn trunc(&self) -> u32 {
        self.trunc
    }

    pub fn letter_image(&self, t: &Tree) -> Result<&TreeComb> {
        self.letter_images
            .get(t)
            .ok_or_else(|| Error::format(format!("letter {t} outside the truncation")))
    }

    pub fn apply_word(&self, w: &Word) -> Result<WordComb> {
        let mut acc = WordComb::basis(Word::empty());
        for letter in w.letters() {
            let img = self.letter_image(letter)?;
            let mut next = WordComb::zero();
            for (prefix, x) in acc.iter() {
                for (t, y) in img.iter() {
                    next.add_term(prefix.push(t.clone()), x * y);
                }
            }
            acc = next;
        }
        Ok(acc)
    }

    pub fn apply_comb(&self, c: &WordComb) -> Result<WordComb> {
        let mut out = WordComb::zero();
        for (w, coeff) in c.iter() {
            out.add_scaled(&self.apply_word(w)?, coeff);
        }
        Ok(out)
    }
}

/// Word-level companion of an accepted map.
pub fn bar_map(m: &RenormMatrix, gamma: &Q) -> Result<WordMap> {
    accept(m, gamma)?;
    let mut letter_images = BTreeMap::new();
    for t in enumerate_trees(m.trunc(), m.dec_bound())? {
        letter_images.insert(t.clone(), m.tree_image(&t)?);
    }
    Ok(WordMap { trunc: m.trunc(), letter_images })
}

/// First tree within n_max where psi(M t) differs from Mbar(psi(t)).
pub fn psi_commute_defect(
    m: &RenormMatrix,
    wm: &WordMap,
    n_max: u32,
) -> Result<Option<(Tree, String)>> {
    for t in enumerate_trees(n_max.min(m.trunc()), m.dec_bound())? {
        let mut lhs = WordComb::zero();
        for (term, coeff) in m.tree_image(&t)?.iter() {
            lhs.add_scaled(&tree_to_words(term), coeff);
        }
        let rhs = wm.apply_comb(&tree_to_words(&t))?;
        let defect = lhs.sub(&rhs);
        if !defect.is_zero() {
            return Ok(Some((t, format!("{defect:?}"))));
        }
    }
    Ok(None)
}

/// First word (over the given letters, within max_nodes) where the word
/// map fails to commute with deconcatenation.
pub fn word_map_deconcat_defect(
    wm: &WordMap,
    letters: &[Tree],
    max_nodes: u32,
) -> Result<Option<Word>> {
    for w in crate::word_hopf::enumerate_words(letters, max_nodes) {
        let mut lhs = Comb::<(Word, Word), Q>::zero();
        for (img, coeff) in wm.apply_word(&w)?.iter() {
            lhs.add_scaled(&deconcat_coproduct(img), coeff);
        }
        let mut rhs = Comb::<(Word, Word), Q>::zero();
        for ((u, v), coeff) in deconcat_coproduct(&w).iter() {
            let left = wm.apply_word(u)?;
            let right = wm.apply_word(v)?;
            for (lu, x) in left.iter() {
                for (rv, y) in right.iter() {
                    rhs.add_term((lu.clone(), rv.clone()), coeff * &(x * y));
                }
            }
        }
        if !lhs.sub(&rhs).is_zero() {
            return Ok(Some(w));
        }
    }
    Ok(None)
}

/// Empirical slot-by-slot audit of the rewriting rule against the
/// splitting coproduct. Each interpretation extends the rule to forests
/// multiplicatively (fixing the empty forest) and applies it to one
/// tensor slot of either the full or the reduced coproduct; the report
/// records the first counterexample per reading. Which reading a rule
/// satisfies is recorded, never assumed.
#[derive(Clone, Debug)]
pub struct AdmissibilityReport {
    pub n_max: u32,
    pub full_left: Option<Tree>,
    pub full_right: Option<Tree>,
    pub reduced_left: Option<Tree>,
    pub reduced_right: Option<Tree>,
}

impl AdmissibilityReport {
    pub fn reduced_left_holds(&self) -> bool {
        self.reduced_left.is_none()
    }
}

pub fn check_admissible(rule: &LocalRule, n_max: u32) -> Result<AdmissibilityReport> {
    let r_tree = |t: &Tree| forest_comb_of(&rule.apply(t));
    let r_forest = |f: &Forest| {
        let mut out = unit_comb();
        for t in f.expanded() {
            out = comb_product(&out, &r_tree(t));
        }
        out
    };
    let reduced_of_comb = |c: &ForestComb| {
        let mut out = TensorComb::zero();
        for (f, coeff) in c.iter() {
            out.add_scaled(&reduced_coproduct_forest(f), coeff);
        }
        out
    };

    let mut report = AdmissibilityReport {
        n_max,
        full_left: None,
        full_right: None,
        reduced_left: None,
        reduced_right: None,
    };
    for t in enumerate_trees(n_max.min(rule.trunc()), rule.dec_bound())? {
        let rt = r_tree(&t);
        let full_lhs = coproduct_comb(&rt);
        let reduced_lhs = reduced_of_comb(&rt);

        let mut full_left = TensorComb::zero();
        let mut full_right = TensorComb::zero();
        for ((l, r), coeff) in coproduct_tree(&t).iter() {
            full_left.add_scaled(&outer(&r_forest(l), &ForestComb::basis(r.clone())), coeff);
            full_right.add_scaled(&outer(&ForestComb::basis(l.clone()), &r_forest(r)), coeff);
        }
        let mut reduced_left = TensorComb::zero();
        let mut reduced_right = TensorComb::zero();
        for ((l, r), coeff) in reduced_coproduct_forest(&single(&t)).iter() {
            reduced_left.add_scaled(&outer(&r_forest(l), &ForestComb::basis(r.clone())), coeff);
            reduced_right.add_scaled(&outer(&ForestComb::basis(l.clone()), &r_forest(r)), coeff);
        }

        if report.full_left.is_none() && !full_lhs.sub(&full_left).is_zero() {
            report.full_left = Some(t.clone());
        }
        if report.full_right.is_none() && !full_lhs.sub(&full_right).is_zero() {
            report.full_right = Some(t.clone());
        }
        if report.reduced_left.is_none() && !reduced_lhs.sub(&reduced_left).is_zero() {
            report.reduced_left = Some(t.clone());
        }
        if report.reduced_right.is_none() && !reduced_lhs.sub(&reduced_right).is_zero() {
            report.reduced_right = Some(t.clone());
        }
    }
    Ok(report)
}

/// First tree within n_max where the root-rule encoding of a character
/// disagrees with its extraction map. Agreement is expected; any
/// discrepancy is reported as data, not repaired.
pub fn bphz_local_agreement(
    v: &BphzCharacter,
    gamma: &Q,
    n_max: u32,
) -> Result<Option<(Tree, String)>> {
    let rule = root_extraction_rule(v, gamma)?;
    let (m_local, _) = local_map(&rule)?;
    let m_extract = bphz_map(v)?;
    for t in enumerate_trees(n_max.min(v.trunc()), v.dec_bound())? {
        let lhs = m_local.tree_image(&t)?;
        let rhs = m_extract.tree_image(&t)?;
        let defect = lhs.sub(&rhs);
        if !defect.is_zero() {
            return Ok(Some((t, format!("{defect:?}"))));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{q, q_int};
    use crate::trees::{chain2, chain3, dot};

    fn gamma_default() -> Q {
        q(6, 25)
    }

    fn v_small() -> BphzCharacter {
        let mut values = BTreeMap::new();
        values.insert(dot(1), q(1, 2));
        values.insert(chain2(1, 1), q(-1, 3));
        BphzCharacter::new(3, 1, values).unwrap()
    }

    #[test]
    fn identity_map_is_accepted_and_trivial() {
        let m = RenormMatrix::identity(3, 1).unwrap();
        accept(&m, &gamma_default()).unwrap();
        assert_eq!(m.tree_image(&dot(1)).unwrap(), TreeComb::basis(dot(1)));
        assert!(m.adjoint().matrix() == m.matrix());
        let co = check_cointeraction(&m, 3).unwrap();
        assert!(co.ok);
    }

    #[test]
    fn extraction_map_on_single_nodes() {
        let m = bphz_map(&v_small()).unwrap();
        let mut expect = TreeComb::basis(dot(1));
        expect.add_term(dot(0), q(1, 2));
        assert_eq!(m.tree_image(&dot(1)).unwrap(), expect);
        assert_eq!(m.tree_image(&dot(0)).unwrap(), TreeComb::basis(dot(0)));
        assert_eq!(m.apply_forest(&Forest::empty()).unwrap(), unit_comb());
    }

    #[test]
    fn extraction_map_on_the_two_chain() {
        let m = bphz_map(&v_small()).unwrap();
        // All five extraction patterns of the chain contribute.
        let mut expect = TreeComb::basis(chain2(1, 1));
        expect.add_term(chain2(0, 1), q(1, 2));
        expect.add_term(chain2(1, 0), q(1, 2));
        expect.add_term(chain2(0, 0), q(1, 4));
        expect.add_term(dot(0), q(-1, 3));
        assert_eq!(m.tree_image(&chain2(1, 1)).unwrap(), expect);
    }

    #[test]
    fn extraction_map_is_accepted() {
        let m = bphz_map(&v_small()).unwrap();
        accept(&m, &gamma_default()).unwrap();
        accept(&m, &q(3, 10)).unwrap();
    }

    #[test]
    fn random_characters_are_seed_determined() {
        let a = BphzCharacter::random(3, 1, 7).unwrap();
        let b = BphzCharacter::random(3, 1, 7).unwrap();
        let c = BphzCharacter::random(3, 1, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.values().keys().all(|t| t.zeros() == 0));
    }

    #[test]
    fn character_json_round_trip() {
        let v = v_small();
        let text = v.to_json();
        let back = BphzCharacter::from_json(&text, 3, 1).unwrap();
        assert_eq!(v, back);
        assert_eq!(text, back.to_json());
    }

    #[test]
    fn rule_validation_modes() {
        let gamma = gamma_default();
        // A tie (one node to one node) needs loose mode and more zeros.
        let mut ties = BTreeMap::new();
        ties.insert(dot(1), TreeComb::term(dot(0), q(1, 2)));
        assert!(LocalRule::new(3, 1, true, ties.clone(), &gamma).is_err());
        let rule = LocalRule::new(3, 1, false, ties, &gamma).unwrap();
        assert!(!rule.is_strict());

        // Node count may never grow.
        let mut grows = BTreeMap::new();
        grows.insert(dot(0), TreeComb::term(chain2(0, 0), q_int(1)));
        assert!(LocalRule::new(3, 1, false, grows, &gamma).is_err());

        // A tie without extra zeros is rejected even in loose mode.
        let mut flat = BTreeMap::new();
        flat.insert(chain2(1, 1), TreeComb::term(chain2(1, 1), q_int(1)));
        assert!(LocalRule::new(3, 1, false, flat, &gamma).is_err());

        // Weight must not drop: replacing the chain by a 0-free node does.
        let mut light = BTreeMap::new();
        light.insert(chain2(1, 1), TreeComb::term(dot(1), q_int(1)));
        assert!(LocalRule::new(3, 1, false, light, &gamma).is_err());
    }

    #[test]
    fn rule_json_round_trip() {
        let gamma = gamma_default();
        let rule = root_extraction_rule(&v_small(), &gamma).unwrap();
        let text = rule.to_json();
        let back = LocalRule::from_json(&text, 3, 1, rule.is_strict(), &gamma).unwrap();
        assert_eq!(rule, back);
        assert_eq!(text, back.to_json());
    }

    #[test]
    fn single_correction_rule_matches_unfolding() {
        // R fixes everything except the 2-chain, which gains a 0-node term.
        let gamma = gamma_default();
        let lambda = q(2, 7);
        let mut corrections = BTreeMap::new();
        corrections.insert(chain2(1, 1), TreeComb::term(dot(0), lambda.clone()));
        let rule = LocalRule::new(3, 1, true, corrections, &gamma).unwrap();
        let (m, ring) = local_map(&rule).unwrap();

        let mut expect = TreeComb::basis(chain2(1, 1));
        expect.add_term(dot(0), lambda);
        assert_eq!(m.tree_image(&chain2(1, 1)).unwrap(), expect);
        // M° ignores the root correction of the tree itself.
        assert_eq!(ring.tree_image(&chain2(1, 1)).unwrap(), TreeComb::basis(chain2(1, 1)));
        // On the 3-chain the correction enters through the branch map.
        let mut expect3 = TreeComb::basis(chain3(1, 1, 1));
        expect3.add_term(chain2(1, 0), q(2, 7));
        assert_eq!(ring.tree_image(&chain3(1, 1, 1)).unwrap(), expect3);
    }

    #[test]
    fn root_rule_reproduces_extraction_map() {
        assert_eq!(bphz_local_agreement(&v_small(), &gamma_default(), 3).unwrap(), None);
    }

    #[test]
    fn local_pair_identities() {
        let gamma = gamma_default();
        let rule = root_extraction_rule(&v_small(), &gamma).unwrap();
        let (m, ring) = local_map(&rule).unwrap();
        accept(&m, &gamma).unwrap();
        let report = check_local_pair(&m, &ring, 3).unwrap();
        assert!(report.product_form_ok);
        assert!(report.unfold_ok);
        assert!(report.gated_ok());
        // Mixed-slot forms force M = M°, so they fail for this rule.
        assert!(!report.mixed_form_m);
        assert!(!report.mixed_form_ring);
    }

    #[test]
    fn local_pair_identities_trivial_rule() {
        let rule = LocalRule::identity(3, 1);
        let (m, ring) = local_map(&rule).unwrap();
        let report = check_local_pair(&m, &ring, 3).unwrap();
        assert!(report.gated_ok());
        assert!(report.mixed_form_m);
        assert!(report.mixed_form_ring);
    }

    #[test]
    fn admissibility_readings() {
        let gamma = gamma_default();
        let id_rule = LocalRule::identity(3, 1);
        let id_report = check_admissible(&id_rule, 3).unwrap();
        assert!(id_report.full_left.is_none());
        assert!(id_report.full_right.is_none());
        assert!(id_report.reduced_left.is_none());
        assert!(id_report.reduced_right.is_none());

        let rule = root_extraction_rule(&v_small(), &gamma).unwrap();
        let report = check_admissible(&rule, 3).unwrap();
        assert!(report.reduced_left.is_none());
        assert!(report.full_left.is_some());
        assert!(report.full_right.is_some());
        assert!(report.reduced_right.is_some());
    }

    #[test]
    fn cointeraction_mutation_is_detected() {
        let mut m = bphz_map(&v_small()).unwrap();
        assert!(check_cointeraction(&m, 3).unwrap().ok);
        m.perturb(&single(&dot(0)), &single(&chain2(1, 1)), &q(1, 5)).unwrap();
        let report = check_cointeraction(&m, 3).unwrap();
        assert!(!report.ok);
        // On the perturbed tree itself the defect cancels (the same column
        // feeds both sides), so the first witness sits one grade higher.
        assert_eq!(report.counterexample.unwrap().0.size(), 3);
    }

    #[test]
    fn analytic_condition_flags_growth() {
        let mut images = BTreeMap::new();
        images.insert(dot(0), TreeComb::basis(chain2(0, 0)));
        let m = RenormMatrix::from_tree_images(2, 1, &images).unwrap();
        let report = check_analytic_condition(&m, &q(3, 10)).unwrap();
        assert!(!report.ok);
        assert_eq!(report.witnesses[0].2, "node count grows");
        assert!(accept(&m, &q(3, 10)).is_err());
    }

    #[test]
    fn adjoint_and_translation_coefficients() {
        let v = v_small();
        let m = bphz_map(&v).unwrap();
        assert!(m.adjoint().adjoint().matrix() == m.matrix());
        // Every tree whose image reaches the 0-node contributes a pair.
        let coeffs = translation_coeffs(&m, &dot(0)).unwrap();
        assert_eq!(
            coeffs,
            vec![(dot(0), q_int(1)), (dot(1), q(1, 2)), (chain2(1, 1), q(-1, 3))]
        );
    }

    #[test]
    fn word_map_expands_letterwise() {
        let v = v_small();
        let m = bphz_map(&v).unwrap();
        let wm = bar_map(&m, &gamma_default()).unwrap();
        assert_eq!(
            wm.apply_word(&Word::empty()).unwrap(),
            WordComb::basis(Word::empty())
        );
        let w = Word::from_letters(vec![dot(1), dot(1)]);
        let img = wm.apply_word(&w).unwrap();
        assert_eq!(img.len(), 4);
        assert_eq!(img.coeff(&w), q_int(1));
        assert_eq!(img.coeff(&Word::from_letters(vec![dot(1), dot(0)])), q(1, 2));
        assert_eq!(img.coeff(&Word::from_letters(vec![dot(0), dot(1)])), q(1, 2));
        assert_eq!(img.coeff(&Word::from_letters(vec![dot(0), dot(0)])), q(1, 4));
    }

    #[test]
    fn word_map_commutes_with_tree_to_words() {
        let v = v_small();
        let m = bphz_map(&v).unwrap();
        let wm = bar_map(&m, &gamma_default()).unwrap();
        assert_eq!(psi_commute_defect(&m, &wm, 3).unwrap(), None);
        let letters = vec![dot(0), dot(1), chain2(1, 1)];
        assert_eq!(word_map_deconcat_defect(&wm, &letters, 3).unwrap(), None);
    }

    #[test]
    fn composition_is_matrix_product() {
        let v = v_small();
        let m = bphz_map(&v).unwrap();
        let id = RenormMatrix::identity(3, 1).unwrap();
        let left = m.compose(&id).unwrap();
        assert!(left.matrix() == m.matrix());
        // Composite of two accepted maps stays accepted.
        let w = BphzCharacter::random(3, 1, 11).unwrap();
        let n = bphz_map(&w).unwrap();
        let comp = m.compose(&n).unwrap();
        accept(&comp, &gamma_default()).unwrap();
    }

    #[test]
    fn truncation_mismatch_is_rejected() {
        let m = RenormMatrix::identity(3, 1).unwrap();
        let n = RenormMatrix::identity(2, 1).unwrap();
        assert!(m.compose(&n).is_err());
    }
}
