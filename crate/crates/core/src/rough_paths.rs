//! Grid rough paths: branched lifts of driver paths and their word-indexed
//! companions.
//!
//! Drivers are piecewise-polynomial on a dyadic grid, so every iterated
//! integral is a polynomial that can be computed exactly per cell. Longer
//! grid pairs are assembled from cell characters by convolution, which makes
//! Chen's rule hold by construction; the verification sweeps exist to catch
//! defects introduced later (renormalisation bugs, mutations, bad loads),
//! not to paper over construction error.
//!
//! Storage is one character per strictly increasing grid pair. Reversed
//! pairs are recovered through the antipode inverse, keeping the group
//! structure visible to tests instead of baking in a second copy.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::forest_hopf::{coproduct_tree, Character};
use crate::renorm::RenormMatrix;
use crate::scalar::{q, q_parse, q_render, Scalar, Q};
use crate::trees::{enumerate_trees, Decoration, Forest, Tree};
use crate::word_hopf::{
    concat_antipode, concat_series, shuffle_character_defect, tree_weight, WeightedAlphabet,
    Word, WordSeries,
};

/// Depth cap: pair storage grows as 4^depth, and depth 8 (257 grid points)
/// is already past any sensible desk scale.
const MAX_DEPTH: u32 = 8;

/// Dense univariate polynomial; `coeffs[j]` multiplies `u^j`. The zero
/// polynomial is the empty coefficient list.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial<S: Scalar> {
    coeffs: Vec<S>,
}

impl<S: Scalar> Polynomial<S> {
    pub fn zero() -> Polynomial<S> {
        Polynomial { coeffs: Vec::new() }
    }

    pub fn constant(c: S) -> Polynomial<S> {
        Polynomial::from_coeffs(vec![c])
    }

    /// a + b·u.
    pub fn linear(a: S, b: S) -> Polynomial<S> {
        Polynomial::from_coeffs(vec![a, b])
    }

    pub fn from_coeffs(coeffs: Vec<S>) -> Polynomial<S> {
        let mut coeffs = coeffs;
        while coeffs.last().map(|c| c.is_zero()).unwrap_or(false) {
            coeffs.pop();
        }
        Polynomial { coeffs }
    }

    pub fn coeffs(&self) -> &[S] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn eval(&self, u: &S) -> S {
        let mut acc = S::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(u).add(c);
        }
        acc
    }

    pub fn add(&self, other: &Polynomial<S>) -> Polynomial<S> {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = Vec::with_capacity(n);
        for j in 0..n {
            let a = self.coeffs.get(j).cloned().unwrap_or_else(S::zero);
            let b = other.coeffs.get(j).cloned().unwrap_or_else(S::zero);
            out.push(a.add(&b));
        }
        Polynomial::from_coeffs(out)
    }

    pub fn mul(&self, other: &Polynomial<S>) -> Polynomial<S> {
        if self.is_zero() || other.is_zero() {
            return Polynomial::zero();
        }
        let mut out = vec![S::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] = out[i + j].add(&a.mul(b));
            }
        }
        Polynomial::from_coeffs(out)
    }

    pub fn scale(&self, factor: &S) -> Polynomial<S> {
        Polynomial::from_coeffs(self.coeffs.iter().map(|c| c.mul(factor)).collect())
    }

    pub fn derivative(&self) -> Polynomial<S> {
        if self.coeffs.len() <= 1 {
            return Polynomial::zero();
        }
        let mut out = Vec::with_capacity(self.coeffs.len() - 1);
        for (j, c) in self.coeffs.iter().enumerate().skip(1) {
            out.push(c.mul(&S::from_q(&q(j as i64, 1))));
        }
        Polynomial::from_coeffs(out)
    }

    /// Antiderivative with zero constant term.
    pub fn antiderivative(&self) -> Polynomial<S> {
        if self.is_zero() {
            return Polynomial::zero();
        }
        let mut out = Vec::with_capacity(self.coeffs.len() + 1);
        out.push(S::zero());
        for (j, c) in self.coeffs.iter().enumerate() {
            out.push(c.mul(&S::from_q(&q(1, j as i64 + 1))));
        }
        Polynomial::from_coeffs(out)
    }
}

/// A driver on the dyadic grid {k/2^depth}: one polynomial per component and
/// cell, written in the global coordinate. Component 0 is the distinguished
/// direction paired with contracted (0-decorated) nodes.
#[derive(Clone, Debug)]
pub struct DriverPath<S: Scalar> {
    depth: u32,
    /// components[i][k] is x^i on the cell [k/2^depth, (k+1)/2^depth].
    components: Vec<Vec<Polynomial<S>>>,
}

pub(crate) fn check_depth(depth: u32) -> Result<()> {
    if depth == 0 {
        return Err(Error::precondition("grid depth must be at least 1"));
    }
    if depth > MAX_DEPTH {
        return Err(Error::Resource {
            message: format!("grid depth {depth} exceeds cap {MAX_DEPTH}"),
        });
    }
    Ok(())
}

fn check_dim(n_components: usize) -> Result<()> {
    if n_components == 0 {
        return Err(Error::precondition("driver needs at least component 0"));
    }
    if n_components > usize::from(Decoration::MAX) + 1 {
        return Err(Error::Resource {
            message: format!("{n_components} components exceed the decoration range"),
        });
    }
    Ok(())
}

impl<S: Scalar> DriverPath<S> {
    /// One global polynomial per component, repeated on every cell.
    pub fn from_global_polys(depth: u32, polys: Vec<Polynomial<S>>) -> Result<DriverPath<S>> {
        check_depth(depth)?;
        check_dim(polys.len())?;
        let cells = 1usize << depth;
        let components = polys.into_iter().map(|p| vec![p; cells]).collect();
        Ok(DriverPath { depth, components })
    }

    /// Linear interpolation of per-component samples at the grid points.
    pub fn piecewise_linear(depth: u32, samples: Vec<Vec<S>>) -> Result<DriverPath<S>> {
        check_depth(depth)?;
        check_dim(samples.len())?;
        let cells = 1usize << depth;
        let scale = S::from_q(&q(1i64 << depth, 1));
        let mut components = Vec::with_capacity(samples.len());
        for comp in &samples {
            if comp.len() != cells + 1 {
                return Err(Error::GridMismatch {
                    message: format!(
                        "expected {} samples at depth {depth}, got {}",
                        cells + 1,
                        comp.len()
                    ),
                });
            }
            let mut polys = Vec::with_capacity(cells);
            for k in 0..cells {
                let t_k = S::from_q(&grid_point(depth, k));
                let slope = comp[k + 1].sub(&comp[k]).mul(&scale);
                let intercept = comp[k].sub(&slope.mul(&t_k));
                polys.push(Polynomial::linear(intercept, slope));
            }
            components.push(polys);
        }
        Ok(DriverPath { depth, components })
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn n_cells(&self) -> usize {
        1usize << self.depth
    }

    pub fn n_points(&self) -> usize {
        self.n_cells() + 1
    }

    /// Largest decoration carried by the driver.
    pub fn dim(&self) -> Decoration {
        (self.components.len() - 1) as Decoration
    }

    pub fn cell(&self, component: Decoration, k: usize) -> &Polynomial<S> {
        &self.components[component as usize][k]
    }

    /// Driver value at grid point k.
    pub fn value(&self, component: Decoration, k: usize) -> S {
        let cell = k.min(self.n_cells() - 1);
        self.components[component as usize][cell].eval(&S::from_q(&grid_point(self.depth, k)))
    }

    pub fn increment(&self, component: Decoration, a: usize, b: usize) -> S {
        self.value(component, b).sub(&self.value(component, a))
    }
}

/// Grid point k/2^depth as an exact rational.
pub fn grid_point(depth: u32, k: usize) -> Q {
    q(k as i64, 1i64 << depth)
}

fn pair_count(points: usize) -> usize {
    points * (points - 1) / 2
}

/// Chen sweep outcome. `exact` records that every defect vanished
/// identically, which is the bar in rational mode; float mode compares
/// `max_abs_defect` against a tolerance.
#[derive(Clone, Debug)]
pub struct ChenReport<B> {
    pub triples: usize,
    pub max_abs_defect: f64,
    pub exact: bool,
    /// Worst triple (a, u, b) and the basis element realizing it.
    pub worst: Option<(usize, usize, usize, B)>,
}

impl<B> ChenReport<B> {
    pub fn passes(&self, tol: f64) -> bool {
        self.exact || self.max_abs_defect <= tol
    }
}

/// Hölder-quotient table: per basis element, the sup over grid pairs of
/// |value| / |t-s|^weight. Estimates, not proofs; there is no pass line.
#[derive(Clone, Debug)]
pub struct HolderReport<B> {
    rows: Vec<(B, f64)>,
}

impl<B: Ord> HolderReport<B> {
    pub fn from_rows(rows: Vec<(B, f64)>) -> HolderReport<B> {
        HolderReport { rows }
    }

    pub fn rows(&self) -> &[(B, f64)] {
        &self.rows
    }

    pub fn quotient(&self, basis: &B) -> Option<f64> {
        self.rows.iter().find(|(b, _)| b == basis).map(|(_, q)| *q)
    }
}

/// Worst per-element growth of the quotient table under grid deepening.
/// Vanishing pairs count as stable; a quotient appearing from zero is
/// reported as infinite.
pub fn deepening_ratio<B: Ord + Clone>(
    shallow: &HolderReport<B>,
    deep: &HolderReport<B>,
) -> f64 {
    let mut worst: f64 = 1.0;
    for (b, s) in shallow.rows() {
        let Some(d) = deep.quotient(b) else { continue };
        let ratio = if *s == 0.0 {
            if d == 0.0 {
                1.0
            } else {
                f64::INFINITY
            }
        } else {
            d / s
        };
        worst = worst.max(ratio);
    }
    worst
}

/// A branched rough path on the dyadic grid: one multiplicative character
/// per strictly increasing grid pair, values on the forest basis up to the
/// truncation. X_{tt} is the convolution identity and reversed pairs are the
/// antipode inverses of stored ones.
#[derive(Clone, Debug)]
pub struct BranchedRP<S: Scalar> {
    trunc: u32,
    d: Decoration,
    depth: u32,
    gamma: Q,
    /// Characters for pairs a < b, indexed by [`BranchedRP::pair_index`].
    chars: Vec<Character<S>>,
}

fn check_gamma(gamma: &Q) -> Result<()> {
    if !(&q(0, 1) < gamma && gamma < &q(1, 1)) {
        return Err(Error::Config { message: format!("gamma {} outside (0, 1)", q_render(gamma)) });
    }
    Ok(())
}

impl<S: Scalar> BranchedRP<S> {
    /// Canonical lift by iterated integrals: per cell, every tree integral
    /// is computed exactly as a polynomial; longer pairs are assembled by
    /// convolution, which is Chen's rule read as a construction.
    pub fn canonical_lift(x: &DriverPath<S>, trunc: u32, gamma: &Q) -> Result<BranchedRP<S>> {
        if trunc == 0 {
            return Err(Error::precondition("truncation must be at least 1"));
        }
        check_gamma(gamma)?;
        let d = x.dim();
        let trees = enumerate_trees(trunc, d)?;
        let points = x.n_points();
        let mut chars = vec![Character::identity(trunc); pair_count(points)];

        for k in 0..x.n_cells() {
            let germs = cell_germs(x, &trees, k);
            let end = S::from_q(&grid_point(x.depth(), k + 1));
            let mut values = BTreeMap::new();
            for t in &trees {
                values.insert(t.clone(), germs[t].eval(&end));
            }
            chars[pair_slot(points, k, k + 1)] = Character::from_tree_values(trunc, values)?;
        }
        for len in 2..points {
            for a in 0..points - len {
                let b = a + len;
                let earlier = &chars[pair_slot(points, a, b - 1)];
                let later = &chars[pair_slot(points, b - 1, b)];
                chars[pair_slot(points, a, b)] = earlier.convolve(later)?;
            }
        }
        Ok(BranchedRP { trunc, d, depth: x.depth(), gamma: gamma.clone(), chars })
    }

    pub fn trunc(&self) -> u32 {
        self.trunc
    }

    pub fn dec_bound(&self) -> Decoration {
        self.d
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn gamma(&self) -> &Q {
        &self.gamma
    }

    pub fn n_points(&self) -> usize {
        (1usize << self.depth) + 1
    }

    fn pair_index(&self, a: usize, b: usize) -> Result<usize> {
        let points = self.n_points();
        if a >= b || b >= points {
            return Err(Error::GridMismatch {
                message: format!("pair ({a}, {b}) not strictly increasing within {points} points"),
            });
        }
        Ok(pair_slot(points, a, b))
    }

    /// Character for the grid pair (a, b). Diagonal pairs give the identity;
    /// reversed pairs are derived through the antipode inverse.
    pub fn pair(&self, a: usize, b: usize) -> Result<Character<S>> {
        if a == b {
            if a >= self.n_points() {
                return Err(Error::GridMismatch {
                    message: format!("point {a} outside {} grid points", self.n_points()),
                });
            }
            return Ok(Character::identity(self.trunc));
        }
        if a < b {
            Ok(self.chars[self.pair_index(a, b)?].clone())
        } else {
            Ok(self.chars[self.pair_index(b, a)?].inverse())
        }
    }

    pub fn eval(&self, a: usize, b: usize, f: &Forest) -> Result<S> {
        self.value_forest(a, b, f)
    }

    /// Value on one tree, borrowing the stored character when a < b.
    pub fn value_tree(&self, a: usize, b: usize, t: &Tree) -> Result<S> {
        if a < b {
            return Ok(self.chars[self.pair_index(a, b)?].on_tree(t));
        }
        Ok(self.pair(a, b)?.on_tree(t))
    }

    /// Value on a forest, borrowing the stored character when a < b.
    pub fn value_forest(&self, a: usize, b: usize, f: &Forest) -> Result<S> {
        if a < b {
            return Ok(self.chars[self.pair_index(a, b)?].on_forest(f));
        }
        Ok(self.pair(a, b)?.on_forest(f))
    }

    /// Assembles a path from per-pair characters produced by a transfer.
    pub(crate) fn from_parts(
        trunc: u32,
        d: Decoration,
        depth: u32,
        gamma: Q,
        chars: Vec<Character<S>>,
    ) -> Result<BranchedRP<S>> {
        check_depth(depth)?;
        check_gamma(&gamma)?;
        let points = (1usize << depth) + 1;
        if chars.len() != pair_count(points) {
            return Err(Error::GridMismatch {
                message: format!(
                    "expected {} pair characters, got {}",
                    pair_count(points),
                    chars.len()
                ),
            });
        }
        Ok(BranchedRP { trunc, d, depth, gamma, chars })
    }

    fn basis(&self) -> Vec<Tree> {
        enumerate_trees(self.trunc, self.d).expect("basis enumerated at construction")
    }

    /// Max Chen defect |(X_{au} (x) X_{ub}) Delta tau - X_{ab} tau| over all
    /// grid triples a < u < b and basis trees. The root slot of the
    /// coproduct pairs with the earlier interval.
    pub fn check_chen(&self) -> ChenReport<Tree> {
        let cops: Vec<(Tree, Vec<((Forest, Forest), Q)>)> = self
            .basis()
            .into_iter()
            .map(|t| {
                let terms = coproduct_tree(&t)
                    .iter()
                    .map(|(k, v)| (k.clone(), v.clone()))
                    .collect();
                (t, terms)
            })
            .collect();
        let points = self.n_points();
        let mut report =
            ChenReport { triples: 0, max_abs_defect: 0.0, exact: true, worst: None };
        for a in 0..points {
            for u in a + 1..points {
                for b in u + 1..points {
                    report.triples += 1;
                    let earlier = &self.chars[pair_slot(points, a, u)];
                    let later = &self.chars[pair_slot(points, u, b)];
                    let whole = &self.chars[pair_slot(points, a, b)];
                    for (t, cop) in &cops {
                        let mut conv = S::zero();
                        for ((l, r), c) in cop {
                            let term = earlier.on_forest(l).mul(&later.on_forest(r));
                            conv = conv.add(&term.mul(&S::from_q(c)));
                        }
                        let defect = conv.sub(&whole.on_tree(t));
                        if !defect.is_zero() {
                            report.exact = false;
                        }
                        let mag = defect.to_f64().abs();
                        if mag > report.max_abs_defect {
                            report.max_abs_defect = mag;
                            report.worst = Some((a, u, b, t.clone()));
                        }
                    }
                }
            }
        }
        report
    }

    /// Hölder quotients at the stored gamma, one row per basis tree.
    pub fn holder_report(&self) -> HolderReport<Tree> {
        let gamma = Scalar::to_f64(&self.gamma);
        let points = self.n_points();
        let cell = 1.0 / (1u64 << self.depth) as f64;
        let mut rows = Vec::new();
        for t in self.basis() {
            let weight = tree_weight(&t, gamma);
            let mut sup: f64 = 0.0;
            for a in 0..points {
                for b in a + 1..points {
                    let dt = (b - a) as f64 * cell;
                    let v = self.chars[pair_slot(points, a, b)].on_tree(&t).to_f64().abs();
                    sup = sup.max(v / dt.powf(weight));
                }
            }
            rows.push((t, sup));
        }
        HolderReport { rows }
    }

    /// Pullback along an accepted renormalisation map: entrywise
    /// value'(tau) = value(M tau). Multiplicativity survives because M is an
    /// algebra morphism; Chen survives by the cointeraction identity.
    pub fn apply_renorm(&self, m: &RenormMatrix) -> Result<BranchedRP<S>> {
        if m.trunc() != self.trunc {
            return Err(Error::TruncationMismatch { left: m.trunc(), right: self.trunc });
        }
        if m.dec_bound() != self.d {
            return Err(Error::Config {
                message: format!(
                    "map decoration bound {} does not match path bound {}",
                    m.dec_bound(),
                    self.d
                ),
            });
        }
        crate::renorm::accept(m, &self.gamma)?;
        let images: Vec<(Tree, crate::forest_hopf::ForestComb)> = self
            .basis()
            .into_iter()
            .map(|t| {
                let img = m.apply_forest(&Forest::single(t.clone()))?;
                Ok((t, img))
            })
            .collect::<Result<_>>()?;
        let mut chars = Vec::with_capacity(self.chars.len());
        for old in &self.chars {
            let mut values = BTreeMap::new();
            for (t, img) in &images {
                let mut acc = S::zero();
                for (f, c) in img.iter() {
                    acc = acc.add(&old.on_forest(f).mul(&S::from_q(c)));
                }
                values.insert(t.clone(), acc);
            }
            chars.push(Character::from_tree_values(self.trunc, values)?);
        }
        Ok(BranchedRP {
            trunc: self.trunc,
            d: self.d,
            depth: self.depth,
            gamma: self.gamma.clone(),
            chars,
        })
    }

    /// Adds `delta` to one stored entry. Test hook for defect localisation.
    pub fn perturb(&mut self, a: usize, b: usize, tree: &Tree, delta: &S) -> Result<()> {
        if tree.size() > self.trunc || tree.max_dec() > self.d {
            return Err(Error::precondition(format!("tree {tree} outside the stored basis")));
        }
        let idx = self.pair_index(a, b)?;
        let cur = self.chars[idx].on_tree(tree);
        self.chars[idx].set(tree.clone(), cur.add(delta));
        Ok(())
    }

    /// Deterministic JSON dump: {grid_depth, truncation, gamma, entries},
    /// entries sorted by (s, t, basis encoding), zero values omitted.
    pub fn to_json(&self) -> String {
        let points = self.n_points();
        let mut entries = Vec::new();
        for a in 0..points {
            for b in a + 1..points {
                let ch = &self.chars[pair_slot(points, a, b)];
                for (t, v) in ch.tree_values() {
                    entries.push(serde_json::json!({
                        "s": a,
                        "t": b,
                        "basis": t.encode(),
                        "value": v.render(),
                    }));
                }
            }
        }
        let doc = serde_json::json!({
            "grid_depth": self.depth,
            "truncation": self.trunc,
            "gamma": q_render(&self.gamma),
            "entries": entries,
        });
        let mut text = serde_json::to_string_pretty(&doc).expect("serializable document");
        text.push('\n');
        text
    }

    /// Inverse of [`BranchedRP::to_json`]. The decoration bound is inferred
    /// from the entries; pairs with no entries load as the identity.
    pub fn from_json(text: &str) -> Result<BranchedRP<S>> {
        let doc: serde_json::Value = serde_json::from_str(text)?;
        let depth = doc["grid_depth"]
            .as_u64()
            .ok_or_else(|| Error::format("missing grid_depth"))? as u32;
        check_depth(depth)?;
        let trunc = doc["truncation"]
            .as_u64()
            .ok_or_else(|| Error::format("missing truncation"))? as u32;
        let gamma =
            q_parse(doc["gamma"].as_str().ok_or_else(|| Error::format("missing gamma"))?)?;
        check_gamma(&gamma)?;
        let entries =
            doc["entries"].as_array().ok_or_else(|| Error::format("missing entries"))?;
        let points = (1usize << depth) + 1;
        let mut values: Vec<BTreeMap<Tree, S>> = vec![BTreeMap::new(); pair_count(points)];
        let mut d: Decoration = 0;
        for e in entries {
            let s = e["s"].as_u64().ok_or_else(|| Error::format("entry missing s"))? as usize;
            let t = e["t"].as_u64().ok_or_else(|| Error::format("entry missing t"))? as usize;
            let basis =
                e["basis"].as_str().ok_or_else(|| Error::format("entry missing basis"))?;
            let value =
                e["value"].as_str().ok_or_else(|| Error::format("entry missing value"))?;
            if s >= t || t >= points {
                return Err(Error::GridMismatch {
                    message: format!("entry pair ({s}, {t}) invalid for {points} points"),
                });
            }
            let tree = Tree::parse(basis, Decoration::MAX)?;
            if tree.size() > trunc {
                return Err(Error::format(format!("entry tree {tree} past truncation {trunc}")));
            }
            d = d.max(tree.max_dec());
            values[pair_slot(points, s, t)].insert(tree, S::parse(value)?);
        }
        enumerate_trees(trunc, d)?;
        let mut chars = Vec::with_capacity(pair_count(points));
        for map in values {
            chars.push(Character::from_tree_values(trunc, map)?);
        }
        Ok(BranchedRP { trunc, d, depth, gamma, chars })
    }
}

fn pair_slot(points: usize, a: usize, b: usize) -> usize {
    a * (2 * points - a - 1) / 2 + (b - a - 1)
}

fn cell_germs<S: Scalar>(
    x: &DriverPath<S>,
    trees: &[Tree],
    k: usize,
) -> BTreeMap<Tree, Polynomial<S>> {
    let start = S::from_q(&grid_point(x.depth(), k));
    let dpolys: Vec<Polynomial<S>> =
        (0..=x.dim()).map(|i| x.cell(i, k).derivative()).collect();
    let mut memo: BTreeMap<Tree, Polynomial<S>> = BTreeMap::new();
    for t in trees {
        germ_poly(t, &dpolys, &start, &mut memo);
    }
    memo
}

fn germ_poly<S: Scalar>(
    t: &Tree,
    dpolys: &[Polynomial<S>],
    start: &S,
    memo: &mut BTreeMap<Tree, Polynomial<S>>,
) -> Polynomial<S> {
    if let Some(p) = memo.get(t) {
        return p.clone();
    }
    let (dec, forest) = t.b_minus();
    let mut integrand = dpolys[dec as usize].clone();
    for child in forest.expanded() {
        let cp = germ_poly(child, dpolys, start, memo);
        integrand = integrand.mul(&cp);
    }
    let anti = integrand.antiderivative();
    let offset = anti.eval(start).neg();
    let p = anti.add(&Polynomial::constant(offset));
    memo.insert(t.clone(), p.clone());
    p
}

/// An anisotropic rough path on the same grid: one word series per strictly
/// increasing pair, letters drawn from a weighted alphabet. Chen here is
/// concatenation with the earlier interval as prefix.
#[derive(Clone, Debug)]
pub struct AnisotropicRP<S: Scalar> {
    alphabet: WeightedAlphabet,
    node_trunc: u32,
    depth: u32,
    sigs: Vec<WordSeries<S>>,
}

impl<S: Scalar> AnisotropicRP<S> {
    /// Assembles the path from per-cell group elements (empty-word
    /// coefficient 1, letters within the alphabet).
    pub fn from_cell_group_likes(
        alphabet: WeightedAlphabet,
        node_trunc: u32,
        depth: u32,
        cells: Vec<WordSeries<S>>,
    ) -> Result<AnisotropicRP<S>> {
        check_depth(depth)?;
        let n_cells = 1usize << depth;
        if cells.len() != n_cells {
            return Err(Error::GridMismatch {
                message: format!("expected {n_cells} cell elements, got {}", cells.len()),
            });
        }
        for c in &cells {
            if c.coeff(&Word::empty()).sub(&S::one()) != S::zero() {
                return Err(Error::precondition(
                    "cell element must have coefficient 1 on the empty word",
                ));
            }
            for (w, _) in c.iter() {
                if w.node_count() > node_trunc {
                    return Err(Error::precondition(format!(
                        "cell word {} past the node truncation {node_trunc}",
                        w.encode()
                    )));
                }
                for l in w.letters() {
                    if alphabet.weight_of(l).is_none() {
                        return Err(Error::Inadmissible {
                            message: format!("cell word letter {l} not in the alphabet"),
                        });
                    }
                }
            }
        }
        let points = n_cells + 1;
        let mut sigs = vec![WordSeries::basis(Word::empty()); pair_count(points)];
        for (k, c) in cells.iter().enumerate() {
            sigs[pair_slot(points, k, k + 1)] = c.clone();
        }
        for len in 2..points {
            for a in 0..points - len {
                let b = a + len;
                let earlier = &sigs[pair_slot(points, a, b - 1)];
                let later = &sigs[pair_slot(points, b - 1, b)];
                sigs[pair_slot(points, a, b)] = concat_series(earlier, later, node_trunc);
            }
        }
        Ok(AnisotropicRP { alphabet, node_trunc, depth, sigs })
    }

    /// Assembles the path from explicit per-pair series (slot order: all
    /// (a, b) with a < b, b ascending within ascending a). No composition
    /// law is imposed; callers that claim Chen must verify it afterwards.
    pub(crate) fn from_pair_parts(
        alphabet: WeightedAlphabet,
        node_trunc: u32,
        depth: u32,
        sigs: Vec<WordSeries<S>>,
    ) -> Result<AnisotropicRP<S>> {
        check_depth(depth)?;
        let points = (1usize << depth) + 1;
        if sigs.len() != pair_count(points) {
            return Err(Error::GridMismatch {
                message: format!(
                    "expected {} pair series, got {}",
                    pair_count(points),
                    sigs.len()
                ),
            });
        }
        for s in &sigs {
            if s.coeff(&Word::empty()).sub(&S::one()) != S::zero() {
                return Err(Error::precondition(
                    "pair series must have coefficient 1 on the empty word",
                ));
            }
            for (w, _) in s.iter() {
                if w.node_count() > node_trunc {
                    return Err(Error::precondition(format!(
                        "pair word {} past the node truncation {node_trunc}",
                        w.encode()
                    )));
                }
                for l in w.letters() {
                    if alphabet.weight_of(l).is_none() {
                        return Err(Error::Inadmissible {
                            message: format!("pair word letter {l} not in the alphabet"),
                        });
                    }
                }
            }
        }
        Ok(AnisotropicRP { alphabet, node_trunc, depth, sigs })
    }

    pub fn alphabet(&self) -> &WeightedAlphabet {
        &self.alphabet
    }

    pub fn node_trunc(&self) -> u32 {
        self.node_trunc
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn n_points(&self) -> usize {
        (1usize << self.depth) + 1
    }

    fn pair_index(&self, a: usize, b: usize) -> Result<usize> {
        let points = self.n_points();
        if a >= b || b >= points {
            return Err(Error::GridMismatch {
                message: format!("pair ({a}, {b}) not strictly increasing within {points} points"),
            });
        }
        Ok(pair_slot(points, a, b))
    }

    /// Word series for the pair (a, b); diagonal pairs give the counit
    /// series and reversed pairs the concatenation antipode.
    pub fn pair(&self, a: usize, b: usize) -> Result<WordSeries<S>> {
        if a == b {
            if a >= self.n_points() {
                return Err(Error::GridMismatch {
                    message: format!("point {a} outside {} grid points", self.n_points()),
                });
            }
            return Ok(WordSeries::basis(Word::empty()));
        }
        if a < b {
            Ok(self.sigs[self.pair_index(a, b)?].clone())
        } else {
            Ok(concat_antipode(&self.sigs[self.pair_index(b, a)?]))
        }
    }

    pub fn value(&self, a: usize, b: usize, w: &Word) -> Result<S> {
        if a < b {
            return Ok(self.sigs[self.pair_index(a, b)?].coeff(w));
        }
        Ok(self.pair(a, b)?.coeff(w))
    }

    /// Max word-Chen defect |(X_{au} X_{ub})(w) - X_{ab}(w)| over triples.
    pub fn check_chen(&self) -> ChenReport<Word> {
        let points = self.n_points();
        let mut report =
            ChenReport { triples: 0, max_abs_defect: 0.0, exact: true, worst: None };
        for a in 0..points {
            for u in a + 1..points {
                for b in u + 1..points {
                    report.triples += 1;
                    let earlier = &self.sigs[pair_slot(points, a, u)];
                    let later = &self.sigs[pair_slot(points, u, b)];
                    let conv = concat_series(earlier, later, self.node_trunc);
                    let defect = conv.sub(&self.sigs[pair_slot(points, a, b)]);
                    for (w, v) in defect.iter() {
                        if !v.is_zero() {
                            report.exact = false;
                        }
                        let mag = v.to_f64().abs();
                        if mag > report.max_abs_defect {
                            report.max_abs_defect = mag;
                            report.worst = Some((a, u, b, w.clone()));
                        }
                    }
                }
            }
        }
        report
    }

    /// First stored pair violating the shuffle character property, if any.
    pub fn shuffle_defect(&self, tol: f64) -> Option<(usize, usize, (Word, Word), f64)> {
        let words = crate::word_hopf::enumerate_words(self.alphabet.letters(), self.node_trunc);
        let points = self.n_points();
        for a in 0..points {
            for b in a + 1..points {
                let sig = &self.sigs[pair_slot(points, a, b)];
                if let Some((pair, mag)) =
                    shuffle_character_defect(sig, &words, self.node_trunc, tol)
                {
                    return Some((a, b, pair, mag));
                }
            }
        }
        None
    }

    /// Hölder quotients with the alphabet weight as exponent, one row per
    /// non-empty word within the truncation.
    pub fn holder_report(&self) -> HolderReport<Word> {
        let words = crate::word_hopf::enumerate_words(self.alphabet.letters(), self.node_trunc);
        let points = self.n_points();
        let cell = 1.0 / (1u64 << self.depth) as f64;
        let mut rows = Vec::new();
        for w in words {
            if w.is_empty() {
                continue;
            }
            let weight = self.alphabet.word_weight(&w).expect("letters validated");
            let mut sup: f64 = 0.0;
            for a in 0..points {
                for b in a + 1..points {
                    let dt = (b - a) as f64 * cell;
                    let v = self.sigs[pair_slot(points, a, b)].coeff(&w).to_f64().abs();
                    sup = sup.max(v / dt.powf(weight));
                }
            }
            rows.push((w, sup));
        }
        HolderReport { rows }
    }

    /// Adds `delta` to one stored entry. Test hook for defect localisation.
    pub fn perturb(&mut self, a: usize, b: usize, w: &Word, delta: &S) -> Result<()> {
        if w.node_count() > self.node_trunc {
            return Err(Error::precondition(format!(
                "word {} outside the stored basis",
                w.encode()
            )));
        }
        let idx = self.pair_index(a, b)?;
        self.sigs[idx].add_term(w.clone(), delta.clone());
        Ok(())
    }

    /// Deterministic JSON dump mirroring the branched one: {grid_depth,
    /// truncation, entries} with word encodings as basis labels.
    pub fn to_json(&self) -> String {
        let points = self.n_points();
        let mut entries = Vec::new();
        for a in 0..points {
            for b in a + 1..points {
                let sig = &self.sigs[pair_slot(points, a, b)];
                for (w, v) in sig.iter() {
                    if w.is_empty() {
                        continue;
                    }
                    entries.push(serde_json::json!({
                        "s": a,
                        "t": b,
                        "basis": w.encode(),
                        "value": v.render(),
                    }));
                }
            }
        }
        let doc = serde_json::json!({
            "grid_depth": self.depth,
            "truncation": self.node_trunc,
            "entries": entries,
        });
        let mut text = serde_json::to_string_pretty(&doc).expect("serializable document");
        text.push('\n');
        text
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::renorm::{bphz_map, BphzCharacter, RenormMatrix};
    use crate::scalar::q_int;
    use crate::trees::{chain2, dot};
    use crate::word_hopf::concat_exp;

    fn gamma() -> Q {
        q(6, 25)
    }

    /// x^0 = t, x^1 = t^2 on [0, 1].
    fn poly_driver(depth: u32) -> DriverPath<Q> {
        DriverPath::from_global_polys(
            depth,
            vec![
                Polynomial::linear(q_int(0), q_int(1)),
                Polynomial::from_coeffs(vec![q_int(0), q_int(0), q_int(1)]),
            ],
        )
        .unwrap()
    }

    /// Both components equal to t.
    fn all_t_driver(depth: u32) -> DriverPath<Q> {
        let t = Polynomial::linear(q_int(0), q_int(1));
        DriverPath::from_global_polys(depth, vec![t.clone(), t]).unwrap()
    }

    #[test]
    fn polynomial_calculus_round_trips() {
        let p = Polynomial::from_coeffs(vec![q(1, 2), q_int(-3), q(2, 5)]);
        assert_eq!(p.antiderivative().derivative(), p);
        assert_eq!(p.eval(&q_int(2)), q(1, 2) + q_int(-6) + q(8, 5));
        let lin: Polynomial<f64> = Polynomial::linear(1.0, 2.0);
        assert_eq!(lin.mul(&lin).eval(&3.0), 49.0);
        assert!(Polynomial::<Q>::from_coeffs(vec![q_int(0)]).is_zero());
    }

    #[test]
    fn piecewise_linear_matches_samples() {
        let samples = vec![vec![q_int(0), q(1, 3), q(1, 4), q_int(2), q_int(1)]];
        let x = DriverPath::piecewise_linear(2, samples.clone()).unwrap();
        for (k, want) in samples[0].iter().enumerate() {
            assert_eq!(&x.value(0, k), want);
        }
        assert_eq!(x.increment(0, 1, 3), q_int(2) - q(1, 3));
    }

    #[test]
    fn first_level_is_the_increment() {
        let x = poly_driver(2);
        let lift = BranchedRP::canonical_lift(&x, 3, &gamma()).unwrap();
        for a in 0..5 {
            for b in 0..5 {
                let got0 = lift.eval(a, b, &Forest::single(dot(0))).unwrap();
                let got1 = lift.eval(a, b, &Forest::single(dot(1))).unwrap();
                assert_eq!(got0, x.increment(0, a, b));
                assert_eq!(got1, x.increment(1, a, b));
            }
        }
    }

    #[test]
    fn all_t_driver_gives_triangle_areas() {
        let lift = BranchedRP::canonical_lift(&all_t_driver(2), 2, &gamma()).unwrap();
        for (a, b) in [(0usize, 2usize), (0, 3), (1, 4), (2, 3)] {
            let dt = grid_point(2, b) - grid_point(2, a);
            let want = &dt * &dt / q_int(2);
            for i in 0..2u8 {
                for j in 0..2u8 {
                    let got = lift.eval(a, b, &Forest::single(chain2(i, j))).unwrap();
                    assert_eq!(got, want, "pair ({a}, {b}), tree B+_{i}(dot_{j})");
                }
            }
        }
    }

    #[test]
    fn diagonal_is_identity_and_reversal_inverts() {
        let lift = BranchedRP::canonical_lift(&poly_driver(2), 3, &gamma()).unwrap();
        let id = lift.pair(3, 3).unwrap();
        assert!(id.tree_values().is_empty());
        assert_eq!(id.on_forest(&Forest::empty()), q_int(1));
        let fwd = lift.pair(1, 4).unwrap();
        let back = lift.pair(4, 1).unwrap();
        let prod = fwd.convolve(&back).unwrap();
        assert!(prod.tree_values().is_empty());
    }

    #[test]
    fn chen_holds_exactly_for_polynomial_drivers() {
        let lift = BranchedRP::canonical_lift(&poly_driver(3), 4, &gamma()).unwrap();
        let report = lift.check_chen();
        assert_eq!(report.triples, 84);
        assert!(report.exact);
        assert!(report.worst.is_none());
    }

    #[test]
    fn chen_holds_to_tolerance_for_float_drivers() {
        let x: DriverPath<f64> = DriverPath::piecewise_linear(
            3,
            vec![
                (0..=8).map(|k| k as f64 / 8.0).collect(),
                vec![0.0, 0.2, -0.1, 0.3, 0.25, -0.4, 0.1, 0.0, 0.35],
            ],
        )
        .unwrap();
        let lift = BranchedRP::canonical_lift(&x, 4, &gamma()).unwrap();
        let report = lift.check_chen();
        assert!(report.passes(1e-10), "max defect {}", report.max_abs_defect);
    }

    #[test]
    fn perturbation_localizes_the_chen_defect() {
        let mut lift = BranchedRP::canonical_lift(&poly_driver(2), 2, &gamma()).unwrap();
        lift.perturb(1, 3, &chain2(1, 1), &q(1, 7)).unwrap();
        let report = lift.check_chen();
        assert!(!report.exact);
        let (a, u, b, _) = report.worst.unwrap();
        // Every offending triple must involve the perturbed pair.
        assert!((a, b) == (1, 3) || (a, u) == (1, 3) || (u, b) == (1, 3));
    }

    #[test]
    fn holder_quotients_match_the_linear_driver() {
        let lift = BranchedRP::canonical_lift(&all_t_driver(2), 2, &gamma()).unwrap();
        let report = lift.holder_report();
        // |t-s| / |t-s|^gamma maximises at the full interval, giving 1.
        assert!((report.quotient(&dot(1)).unwrap() - 1.0).abs() < 1e-12);
        // Weight-1 direction: |t-s| / |t-s| = 1 on every pair.
        assert!((report.quotient(&dot(0)).unwrap() - 1.0).abs() < 1e-12);
        let constant: DriverPath<Q> = DriverPath::from_global_polys(
            2,
            vec![Polynomial::constant(q_int(1)), Polynomial::constant(q(3, 7))],
        )
        .unwrap();
        let flat = BranchedRP::canonical_lift(&constant, 2, &gamma()).unwrap();
        for (_, quot) in flat.holder_report().rows() {
            assert_eq!(*quot, 0.0);
        }
    }

    #[test]
    fn deepening_ratio_compares_reports() {
        let shallow = BranchedRP::canonical_lift(&poly_driver(2), 2, &gamma()).unwrap();
        let deep = BranchedRP::canonical_lift(&poly_driver(3), 2, &gamma()).unwrap();
        let ratio = deepening_ratio(&shallow.holder_report(), &deep.holder_report());
        assert!(ratio.is_finite());
        assert!(ratio < 10.0, "deepening ratio {ratio}");
    }

    #[test]
    fn renorm_shifts_first_level_by_the_counterterm() {
        let lift = BranchedRP::canonical_lift(&poly_driver(2), 3, &gamma()).unwrap();
        let v = BphzCharacter::new(
            3,
            1,
            vec![(dot(1), q(1, 2)), (chain2(1, 1), q(-1, 3))].into_iter().collect(),
        )
        .unwrap();
        let m = bphz_map(&v).unwrap();
        let hat = lift.apply_renorm(&m).unwrap();
        for (a, b) in [(0usize, 4usize), (1, 2)] {
            let want = lift
                .eval(a, b, &Forest::single(dot(1)))
                .unwrap()
                + q(1, 2) * lift.eval(a, b, &Forest::single(dot(0))).unwrap();
            assert_eq!(hat.eval(a, b, &Forest::single(dot(1))).unwrap(), want);
        }
        let report = hat.check_chen();
        assert!(report.exact);
        // Identity map leaves the path untouched.
        let id = RenormMatrix::identity(3, 1).unwrap();
        let same = lift.apply_renorm(&id).unwrap();
        assert_eq!(same.pair(0, 3).unwrap(), lift.pair(0, 3).unwrap());
    }

    #[test]
    fn renorm_requires_matching_shape() {
        let lift = BranchedRP::canonical_lift(&poly_driver(2), 3, &gamma()).unwrap();
        let id = RenormMatrix::identity(2, 1).unwrap();
        assert!(lift.apply_renorm(&id).is_err());
    }

    #[test]
    fn branched_json_round_trips_bytewise() {
        let lift = BranchedRP::canonical_lift(&poly_driver(2), 2, &gamma()).unwrap();
        let dump = lift.to_json();
        let loaded = BranchedRP::<Q>::from_json(&dump).unwrap();
        assert_eq!(loaded.to_json(), dump);
        assert_eq!(loaded.pair(0, 4).unwrap(), lift.pair(0, 4).unwrap());

        let x: DriverPath<f64> = DriverPath::piecewise_linear(
            2,
            vec![vec![0.0, 0.25, 0.5, 0.75, 1.0], vec![0.0, 0.3, -0.2, 0.1, 0.4]],
        )
        .unwrap();
        let f = BranchedRP::canonical_lift(&x, 2, &gamma()).unwrap();
        let dump = f.to_json();
        let loaded = BranchedRP::<f64>::from_json(&dump).unwrap();
        assert_eq!(loaded.to_json(), dump);
    }

    fn letter_alphabet() -> WeightedAlphabet {
        WeightedAlphabet::from_trees(&[dot(0), dot(1)], 0.24).unwrap()
    }

    fn word_cells(depth: u32) -> Vec<WordSeries<Q>> {
        let n = 1usize << depth;
        (0..n)
            .map(|k| {
                let mut x: WordSeries<Q> = WordSeries::zero();
                x.add_term(Word::single(dot(0)), q(1, 1i64 << depth));
                x.add_term(Word::single(dot(1)), q(k as i64 + 1, 8));
                concat_exp(&x, 3).unwrap()
            })
            .collect()
    }

    #[test]
    fn word_path_chen_and_shuffle_hold() {
        let path =
            AnisotropicRP::from_cell_group_likes(letter_alphabet(), 3, 2, word_cells(2)).unwrap();
        let report = path.check_chen();
        assert_eq!(report.triples, 10);
        assert!(report.exact);
        assert!(path.shuffle_defect(0.0).is_none());
        // Diagonal is the counit series, reversal inverts by concatenation.
        let e = path.pair(2, 2).unwrap();
        assert_eq!(e, WordSeries::basis(Word::empty()));
        let fwd = path.pair(0, 3).unwrap();
        let back = path.pair(3, 0).unwrap();
        assert_eq!(concat_series(&fwd, &back, 3), WordSeries::basis(Word::empty()));
    }

    #[test]
    fn word_path_detects_perturbation() {
        let mut path =
            AnisotropicRP::from_cell_group_likes(letter_alphabet(), 3, 2, word_cells(2)).unwrap();
        path.perturb(0, 2, &Word::single(dot(1)), &q(1, 9)).unwrap();
        let report = path.check_chen();
        assert!(!report.exact);
        assert!(path.shuffle_defect(0.0).is_some());
        let (a, u, b, _) = report.worst.unwrap();
        assert!((a, b) == (0, 2) || (a, u) == (0, 2) || (u, b) == (0, 2));
    }

    #[test]
    fn word_holder_exponent_uses_alphabet_weights() {
        // Increments of 1/4 per cell in the weight-1 letter dot(0):
        // |X_{st}(dot(0))| = |t-s|, so the quotient is 1 on every pair.
        let cells: Vec<WordSeries<Q>> = (0..4)
            .map(|_| {
                let mut x: WordSeries<Q> = WordSeries::zero();
                x.add_term(Word::single(dot(0)), q(1, 4));
                concat_exp(&x, 2).unwrap()
            })
            .collect();
        let path =
            AnisotropicRP::from_cell_group_likes(letter_alphabet(), 2, 2, cells).unwrap();
        let report = path.holder_report();
        let quot = report.quotient(&Word::single(dot(0))).unwrap();
        assert!((quot - 1.0).abs() < 1e-12, "quotient {quot}");
    }

    #[test]
    fn word_json_dump_is_deterministic() {
        let path =
            AnisotropicRP::from_cell_group_likes(letter_alphabet(), 3, 2, word_cells(2)).unwrap();
        assert_eq!(path.to_json(), path.to_json());
        assert!(path.to_json().contains("\"grid_depth\": 2"));
    }

    #[test]
    fn cell_elements_are_validated() {
        let alphabet = letter_alphabet();
        let bad = vec![WordSeries::<Q>::zero(); 4];
        assert!(AnisotropicRP::from_cell_group_likes(alphabet.clone(), 3, 2, bad).is_err());
        let mut off = WordSeries::<Q>::basis(Word::empty());
        off.add_term(Word::single(chain2(1, 1)), q_int(1));
        let cells = vec![
            off,
            WordSeries::basis(Word::empty()),
            WordSeries::basis(Word::empty()),
            WordSeries::basis(Word::empty()),
        ];
        assert!(AnisotropicRP::from_cell_group_likes(alphabet, 3, 2, cells).is_err());
    }
}
