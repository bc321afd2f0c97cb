//! Extension of prescribed letter paths to anisotropic rough paths, the
//! branched-to-anisotropic transfer, the grid action of counterterm path
//! families, and the two formulas recovering that family from a
//! renormalisation map.
//!
//! The extension's free choice is fixed once and for all: on each elementary
//! interval the new Lie coordinates beyond the prescribed single letters are
//! zero. That choice is deterministic, keeps Chen and the shuffle character
//! property exact by construction, and preserves every prior word component.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::forest_hopf::{Character, ForestComb};
use crate::renorm::{accept, bar_map, RenormMatrix};
use crate::rough_paths::{check_depth, grid_point, AnisotropicRP, BranchedRP, HolderReport};
use crate::scalar::{q_render, Scalar, Q};
use crate::trees::{enumerate_trees, Decoration, Forest, Tree};
use crate::tree_words::{tree_to_words, tree_to_words_lower};
use crate::word_hopf::{
    concat_exp, concat_log, concat_series, lv_admissible, tree_weight, WeightedAlphabet, Word,
    WordComb, WordSeries,
};

/// A family of counterterm paths indexed by trees, sampled on the grid and
/// pinned to zero at time 0. Trees without a stored path count as zero.
#[derive(Clone, Debug, PartialEq)]
pub struct GFamily<S: Scalar> {
    trunc: u32,
    d: Decoration,
    depth: u32,
    paths: BTreeMap<Tree, Vec<S>>,
}

impl<S: Scalar> GFamily<S> {
    pub fn zero(trunc: u32, d: Decoration, depth: u32) -> Result<GFamily<S>> {
        check_depth(depth)?;
        if trunc == 0 {
            return Err(Error::precondition("truncation must be at least 1"));
        }
        Ok(GFamily { trunc, d, depth, paths: BTreeMap::new() })
    }

    pub fn from_paths(
        trunc: u32,
        d: Decoration,
        depth: u32,
        paths: BTreeMap<Tree, Vec<S>>,
    ) -> Result<GFamily<S>> {
        let mut out = GFamily::zero(trunc, d, depth)?;
        for (t, p) in paths {
            out.set_path(t, p)?;
        }
        Ok(out)
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

    pub fn n_points(&self) -> usize {
        (1usize << self.depth) + 1
    }

    pub fn set_path(&mut self, tree: Tree, path: Vec<S>) -> Result<()> {
        if tree.size() > self.trunc || tree.max_dec() > self.d {
            return Err(Error::precondition(format!("tree {tree} outside the family shape")));
        }
        if path.len() != self.n_points() {
            return Err(Error::GridMismatch {
                message: format!("expected {} samples, got {}", self.n_points(), path.len()),
            });
        }
        if !path[0].is_zero() {
            return Err(Error::precondition(format!("path for {tree} must start at 0")));
        }
        self.paths.insert(tree, path);
        Ok(())
    }

    pub fn path(&self, tree: &Tree) -> Option<&[S]> {
        self.paths.get(tree).map(|p| p.as_slice())
    }

    pub fn trees(&self) -> impl Iterator<Item = &Tree> {
        self.paths.keys()
    }

    pub fn value(&self, tree: &Tree, k: usize) -> S {
        self.paths.get(tree).map(|p| p[k].clone()).unwrap_or_else(S::zero)
    }

    pub fn increment(&self, tree: &Tree, a: usize, b: usize) -> S {
        self.value(tree, b).sub(&self.value(tree, a))
    }

    pub fn is_zero(&self) -> bool {
        self.paths.values().all(|p| p.iter().all(|v| v.is_zero()))
    }

    /// Pointwise sum; shapes must agree.
    pub fn add(&self, other: &GFamily<S>) -> Result<GFamily<S>> {
        if (self.trunc, self.d, self.depth) != (other.trunc, other.d, other.depth) {
            return Err(Error::GridMismatch { message: "family shapes differ".into() });
        }
        let mut out = self.clone();
        for (t, p) in &other.paths {
            let merged = match out.paths.get(t) {
                Some(mine) => mine.iter().zip(p).map(|(a, b)| a.add(b)).collect(),
                None => p.clone(),
            };
            out.paths.insert(t.clone(), merged);
        }
        Ok(out)
    }

    /// Largest |self - other| over shared shape, as f64.
    pub fn max_abs_diff(&self, other: &GFamily<S>) -> f64 {
        let mut worst: f64 = 0.0;
        let keys: std::collections::BTreeSet<&Tree> =
            self.paths.keys().chain(other.paths.keys()).collect();
        for t in keys {
            for k in 0..self.n_points().min(other.n_points()) {
                let d = self.value(t, k).sub(&other.value(t, k)).to_f64().abs();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Hölder quotients of the stored paths at exponent tree_weight.
    pub fn holder_report(&self, gamma: &Q) -> HolderReport<Tree> {
        let gamma_f = Scalar::to_f64(gamma);
        let cell = 1.0 / (1u64 << self.depth) as f64;
        let points = self.n_points();
        let mut rows = Vec::new();
        for (t, p) in &self.paths {
            let w = tree_weight(t, gamma_f);
            let mut sup: f64 = 0.0;
            for a in 0..points {
                for b in a + 1..points {
                    let dt = (b - a) as f64 * cell;
                    let v = p[b].sub(&p[a]).to_f64().abs();
                    sup = sup.max(v / dt.powf(w));
                }
            }
            rows.push((t.clone(), sup));
        }
        HolderReport::from_rows(rows)
    }

    /// CSV table (tree, t, g_value), rows sorted by tree then grid point.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("tree,t,g_value\n");
        for (t, p) in &self.paths {
            for (k, v) in p.iter().enumerate() {
                out.push_str(&format!(
                    "{},{},{}\n",
                    t.encode(),
                    q_render(&grid_point(self.depth, k)),
                    v.render()
                ));
            }
        }
        out
    }
}

/// Pairing of a rational word combination against one stored grid pair.
fn pair_eval<S: Scalar>(
    path: &AnisotropicRP<S>,
    a: usize,
    b: usize,
    c: &WordComb,
) -> Result<S> {
    let mut acc = S::zero();
    for (w, coef) in c.iter() {
        acc = acc.add(&path.value(a, b, w)?.mul(&S::from_q(coef)));
    }
    Ok(acc)
}

/// Extends prescribed letter paths over a prior anisotropic path.
///
/// Per elementary interval the concatenation-log of the prior group element
/// (zero for an empty prior) gets the new single-letter coordinates set to
/// the prescribed increments; every other new Lie coordinate stays zero. The
/// exponentials are then chained by ordered concatenation. Chen and the
/// shuffle character property hold by construction, and prior word values
/// are preserved verbatim.
///
/// The prior is gated by a Chen check over adjacent triples only; full
/// sweeps stay in the verification layer.
pub fn lv_extend<S: Scalar>(
    alphabet: &WeightedAlphabet,
    node_trunc: u32,
    depth: u32,
    prescribed: &BTreeMap<Tree, Vec<S>>,
    prior: Option<&AnisotropicRP<S>>,
    n_omega: u32,
    tol: f64,
) -> Result<AnisotropicRP<S>> {
    check_depth(depth)?;
    let scan = lv_admissible(alphabet, n_omega);
    if !scan.admissible {
        return Err(Error::Inadmissible {
            message: format!("alphabet resonates: {:?}", scan.resonance),
        });
    }
    let cells = 1usize << depth;
    let points = cells + 1;
    for (l, p) in prescribed {
        if alphabet.weight_of(l).is_none() {
            return Err(Error::Inadmissible {
                message: format!("prescribed letter {l} not in the alphabet"),
            });
        }
        if p.len() != points {
            return Err(Error::GridMismatch {
                message: format!("letter {l}: expected {points} samples, got {}", p.len()),
            });
        }
    }
    if let Some(pr) = prior {
        if pr.depth() != depth || pr.node_trunc() != node_trunc {
            return Err(Error::GridMismatch {
                message: "prior grid or truncation does not match".into(),
            });
        }
        for l in pr.alphabet().letters() {
            if alphabet.weight_of(l).is_none() {
                return Err(Error::Inadmissible {
                    message: format!("prior letter {l} missing from the alphabet"),
                });
            }
            if prescribed.contains_key(l) {
                return Err(Error::precondition(format!(
                    "letter {l} is prescribed but already lives in the prior"
                )));
            }
        }
        for j in 0..cells.saturating_sub(1) {
            let conv = concat_series(&pr.pair(j, j + 1)?, &pr.pair(j + 1, j + 2)?, node_trunc);
            let defect = conv.sub(&pr.pair(j, j + 2)?);
            let bad = if S::EXACT { !defect.is_zero() } else { defect.max_abs() > tol };
            if bad {
                return Err(Error::precondition(format!(
                    "prior violates Chen at cells ({j}, {})", j + 2
                )));
            }
        }
    }
    let mut cell_elements = Vec::with_capacity(cells);
    for k in 0..cells {
        let mut log = match prior {
            Some(pr) => concat_log(&pr.pair(k, k + 1)?, node_trunc)?,
            None => WordSeries::zero(),
        };
        for (l, p) in prescribed {
            // The prior log cannot carry new letters, so adding sets.
            log.add_term(Word::single(l.clone()), p[k + 1].sub(&p[k]));
        }
        cell_elements.push(concat_exp(&log, node_trunc)?);
    }
    AnisotropicRP::from_cell_group_likes(alphabet.clone(), node_trunc, depth, cell_elements)
}

/// Alphabet of all decorated trees up to `trunc` nodes, weighted at gamma.
pub fn tree_alphabet(trunc: u32, d: Decoration, gamma: &Q) -> Result<WeightedAlphabet> {
    let trees = enumerate_trees(trunc, d)?;
    WeightedAlphabet::from_trees(&trees, Scalar::to_f64(gamma))
}

/// One stage of the extension chain: the size-k trees join the alphabet as
/// letters with the given paths, on top of the prior stages.
fn chain_stage<S: Scalar>(
    all_trees: &[Tree],
    k: u32,
    node_trunc: u32,
    depth: u32,
    gamma_f: f64,
    paths: &BTreeMap<Tree, Vec<S>>,
    prior: Option<&AnisotropicRP<S>>,
    tol: f64,
) -> Result<AnisotropicRP<S>> {
    let alpha_trees: Vec<Tree> =
        all_trees.iter().filter(|t| t.size() <= k).cloned().collect();
    let alphabet = WeightedAlphabet::from_trees(&alpha_trees, gamma_f)?;
    let prescribed: BTreeMap<Tree, Vec<S>> = paths
        .iter()
        .filter(|(t, _)| t.size() == k)
        .map(|(t, p)| (t.clone(), p.clone()))
        .collect();
    lv_extend(&alphabet, node_trunc, depth, &prescribed, prior, node_trunc + 1, tol)
}

/// Runs the full extension chain over explicit letter paths (one per tree).
fn rebuild_chain<S: Scalar>(
    x: &BranchedRP<S>,
    paths: &BTreeMap<Tree, Vec<S>>,
    tol: f64,
) -> Result<AnisotropicRP<S>> {
    let all_trees = enumerate_trees(x.trunc(), x.dec_bound())?;
    let gamma_f = Scalar::to_f64(x.gamma());
    let mut prior: Option<AnisotropicRP<S>> = None;
    for k in 1..=x.trunc() {
        prior = Some(chain_stage(
            &all_trees,
            k,
            x.trunc(),
            x.depth(),
            gamma_f,
            paths,
            prior.as_ref(),
            tol,
        )?);
    }
    Ok(prior.expect("truncation is at least 1"))
}

/// Stagewise transfer: at stage k the trees of k nodes become new letters
/// whose paths are prefix sums of the elementary remainders
/// value(tau) - prior(psi_lower(tau)). Remainder additivity over adjacent
/// intervals is enforced; a failure there signals a Chen violation
/// upstream. Returns the word path and the letter paths that built it.
fn stagewise_with_paths<S: Scalar>(
    x: &BranchedRP<S>,
    tol: f64,
) -> Result<(AnisotropicRP<S>, BTreeMap<Tree, Vec<S>>)> {
    let n = x.trunc();
    let d = x.dec_bound();
    let gamma_f = Scalar::to_f64(x.gamma());
    let all_trees = enumerate_trees(n, d)?;
    let cells = x.n_points() - 1;
    let mut paths: BTreeMap<Tree, Vec<S>> = BTreeMap::new();
    let mut prior: Option<AnisotropicRP<S>> = None;
    for k in 1..=n {
        for t in all_trees.iter().filter(|t| t.size() == k) {
            let lower = tree_to_words_lower(t);
            let mut rem = Vec::with_capacity(cells);
            for j in 0..cells {
                let xv = x.value_tree(j, j + 1, t)?;
                let pv = match &prior {
                    Some(p) => pair_eval(p, j, j + 1, &lower)?,
                    None => S::zero(),
                };
                rem.push(xv.sub(&pv));
            }
            for j in 0..cells.saturating_sub(1) {
                let xv = x.value_tree(j, j + 2, t)?;
                let pv = match &prior {
                    Some(p) => pair_eval(p, j, j + 2, &lower)?,
                    None => S::zero(),
                };
                let direct = xv.sub(&pv);
                let defect = direct.sub(&rem[j].add(&rem[j + 1]));
                let bad = if S::EXACT { !defect.is_zero() } else { defect.to_f64().abs() > tol };
                if bad {
                    return Err(Error::precondition(format!(
                        "remainder for {t} not additive at cell {j}: defect {}",
                        defect.render()
                    )));
                }
            }
            let mut path = Vec::with_capacity(cells + 1);
            let mut acc = S::zero();
            path.push(acc.clone());
            for r in &rem {
                acc = acc.add(r);
                path.push(acc.clone());
            }
            paths.insert(t.clone(), path);
        }
        prior = Some(chain_stage(
            &all_trees,
            k,
            n,
            x.depth(),
            gamma_f,
            &paths,
            prior.as_ref(),
            tol,
        )?);
    }
    Ok((prior.expect("truncation is at least 1"), paths))
}

/// Word-side lift satisfying value(tau) = lift(psi(tau)) on every grid pair.
pub fn branched_to_anisotropic<S: Scalar>(
    x: &BranchedRP<S>,
    tol: f64,
) -> Result<AnisotropicRP<S>> {
    stagewise_with_paths(x, tol).map(|(bar, _)| bar)
}

/// Largest transfer-identity defect |value(tau) - lift(psi(tau))| over all
/// grid pairs and trees, with exactness tracking.
pub fn transfer_identity_defect<S: Scalar>(
    x: &BranchedRP<S>,
    xbar: &AnisotropicRP<S>,
) -> Result<(f64, bool)> {
    let trees = enumerate_trees(x.trunc(), x.dec_bound())?;
    let psis: Vec<(Tree, WordComb)> =
        trees.into_iter().map(|t| (t.clone(), tree_to_words(&t))).collect();
    let points = x.n_points();
    let mut worst: f64 = 0.0;
    let mut exact = true;
    for a in 0..points {
        for b in a + 1..points {
            for (t, psi) in &psis {
                let defect = x.value_tree(a, b, t)?.sub(&pair_eval(xbar, a, b, psi)?);
                if !defect.is_zero() {
                    exact = false;
                }
                worst = worst.max(defect.to_f64().abs());
            }
        }
    }
    Ok((worst, exact))
}

fn read_back_through_psi<S: Scalar>(
    bar: &AnisotropicRP<S>,
    template: &BranchedRP<S>,
) -> Result<BranchedRP<S>> {
    let trees = enumerate_trees(template.trunc(), template.dec_bound())?;
    let psis: Vec<(Tree, WordComb)> =
        trees.into_iter().map(|t| (t.clone(), tree_to_words(&t))).collect();
    let points = template.n_points();
    let mut chars = Vec::new();
    for a in 0..points {
        for b in a + 1..points {
            let mut values = BTreeMap::new();
            for (t, psi) in &psis {
                values.insert(t.clone(), pair_eval(bar, a, b, psi)?);
            }
            chars.push(Character::from_tree_values(template.trunc(), values)?);
        }
    }
    BranchedRP::from_parts(
        template.trunc(),
        template.dec_bound(),
        template.depth(),
        template.gamma().clone(),
        chars,
    )
}

/// Action of a counterterm family: rerun the extension chain with every
/// letter path shifted by g, then read tree components back through psi.
pub fn g_action<S: Scalar>(
    g: &GFamily<S>,
    x: &BranchedRP<S>,
    tol: f64,
) -> Result<BranchedRP<S>> {
    if (g.trunc(), g.dec_bound(), g.depth()) != (x.trunc(), x.dec_bound(), x.depth()) {
        return Err(Error::GridMismatch {
            message: "counterterm family shape does not match the path".into(),
        });
    }
    let (_, mut paths) = stagewise_with_paths(x, tol)?;
    for (t, p) in paths.iter_mut() {
        for (idx, v) in p.iter_mut().enumerate() {
            *v = v.add(&g.value(t, idx));
        }
    }
    let bar = rebuild_chain(x, &paths, tol)?;
    read_back_through_psi(&bar, x)
}

/// Recursive counterterm family: increments value(M tau) - lift(tau_letter)
/// - shifted_lift(psi_lower(tau)) along elementary intervals, by increasing
/// node count, pinned to zero at time 0. The shifted lift is rebuilt per
/// stage from the letter paths moved by the part of g already known.
pub fn g_from_renorm_recursive<S: Scalar>(
    m: &RenormMatrix,
    x: &BranchedRP<S>,
    tol: f64,
) -> Result<GFamily<S>> {
    check_renorm_shape(m, x)?;
    accept(m, x.gamma())?;
    let n = x.trunc();
    let d = x.dec_bound();
    let cells = x.n_points() - 1;
    let gamma_f = Scalar::to_f64(x.gamma());
    let all_trees = enumerate_trees(n, d)?;
    let (_, paths) = stagewise_with_paths(x, tol)?;
    let images: Vec<(Tree, ForestComb)> = all_trees
        .iter()
        .map(|t| Ok((t.clone(), m.apply_forest(&Forest::single(t.clone()))?)))
        .collect::<Result<_>>()?;
    let mut g = GFamily::zero(n, d, x.depth())?;
    let mut shifted_paths: BTreeMap<Tree, Vec<S>> = BTreeMap::new();
    let mut gprior: Option<AnisotropicRP<S>> = None;
    for k in 1..=n {
        for (t, img) in images.iter().filter(|(t, _)| t.size() == k) {
            let base = &paths[t];
            let lower = tree_to_words_lower(t);
            let mut path = Vec::with_capacity(cells + 1);
            let mut acc = S::zero();
            path.push(acc.clone());
            for j in 0..cells {
                let mut renormed = S::zero();
                for (f, c) in img.iter() {
                    renormed = renormed.add(&x.value_forest(j, j + 1, f)?.mul(&S::from_q(c)));
                }
                let shifted_lower = match &gprior {
                    Some(p) => pair_eval(p, j, j + 1, &lower)?,
                    None => S::zero(),
                };
                let inc = renormed
                    .sub(&base[j + 1].sub(&base[j]))
                    .sub(&shifted_lower);
                acc = acc.add(&inc);
                path.push(acc.clone());
            }
            g.set_path(t.clone(), path)?;
        }
        for (t, p) in paths.iter().filter(|(t, _)| t.size() == k) {
            let moved = p
                .iter()
                .enumerate()
                .map(|(idx, v)| v.add(&g.value(t, idx)))
                .collect();
            shifted_paths.insert(t.clone(), moved);
        }
        if k < n {
            gprior = Some(chain_stage(
                &all_trees,
                k,
                n,
                x.depth(),
                gamma_f,
                &shifted_paths,
                gprior.as_ref(),
                tol,
            )?);
        }
    }
    Ok(g)
}

/// Explicit counterterm family: lift the renormalised path, subtract the
/// letter components of the plain lift, accumulate from time 0.
pub fn g_from_renorm_explicit<S: Scalar>(
    m: &RenormMatrix,
    x: &BranchedRP<S>,
    tol: f64,
) -> Result<GFamily<S>> {
    check_renorm_shape(m, x)?;
    accept(m, x.gamma())?;
    let hat = x.apply_renorm(m)?;
    let hatbar = branched_to_anisotropic(&hat, tol)?;
    let xbar = branched_to_anisotropic(x, tol)?;
    let cells = x.n_points() - 1;
    let mut g = GFamily::zero(x.trunc(), x.dec_bound(), x.depth())?;
    for t in enumerate_trees(x.trunc(), x.dec_bound())? {
        let letter = Word::single(t.clone());
        let mut path = Vec::with_capacity(cells + 1);
        let mut acc = S::zero();
        path.push(acc.clone());
        for j in 0..cells {
            let inc = hatbar
                .value(j, j + 1, &letter)?
                .sub(&xbar.value(j, j + 1, &letter)?);
            acc = acc.add(&inc);
            path.push(acc.clone());
        }
        g.set_path(t, path)?;
    }
    Ok(g)
}

fn check_renorm_shape<S: Scalar>(m: &RenormMatrix, x: &BranchedRP<S>) -> Result<()> {
    if m.trunc() != x.trunc() {
        return Err(Error::TruncationMismatch { left: m.trunc(), right: x.trunc() });
    }
    if m.dec_bound() != x.dec_bound() {
        return Err(Error::Config {
            message: format!(
                "map decoration bound {} does not match path bound {}",
                m.dec_bound(),
                x.dec_bound()
            ),
        });
    }
    Ok(())
}

/// Exploratory comparison of the word-level candidate formula (the adjoint
/// of the letterwise word map applied to the lift) against the explicit
/// family. Reported only; no identity is claimed and none is asserted.
#[derive(Clone, Debug)]
pub struct WordLevelReport {
    pub max_abs_diff: f64,
    pub per_tree: Vec<(Tree, f64)>,
}

impl WordLevelReport {
    pub fn to_json(&self) -> String {
        let rows: Vec<serde_json::Value> = self
            .per_tree
            .iter()
            .map(|(t, d)| serde_json::json!({"tree": t.encode(), "max_abs_diff": d}))
            .collect();
        let doc = serde_json::json!({
            "max_abs_diff": self.max_abs_diff,
            "per_tree": rows,
        });
        let mut text = serde_json::to_string_pretty(&doc).expect("serializable document");
        text.push('\n');
        text
    }
}

pub fn word_level_g_comparison<S: Scalar>(
    m: &RenormMatrix,
    x: &BranchedRP<S>,
    tol: f64,
) -> Result<WordLevelReport> {
    let reference = g_from_renorm_explicit(m, x, tol)?;
    let xbar = branched_to_anisotropic(x, tol)?;
    let wm = bar_map(m, x.gamma())?;
    let cells = x.n_points() - 1;
    let mut per_tree = Vec::new();
    let mut overall: f64 = 0.0;
    for t in enumerate_trees(x.trunc(), x.dec_bound())? {
        let letter = Word::single(t.clone());
        let mapped = wm.apply_word(&letter)?;
        let mut worst: f64 = 0.0;
        for j in 0..cells {
            let candidate =
                pair_eval(&xbar, j, j + 1, &mapped)?.sub(&xbar.value(j, j + 1, &letter)?);
            let diff = candidate.sub(&reference.increment(&t, j, j + 1)).to_f64().abs();
            worst = worst.max(diff);
        }
        overall = overall.max(worst);
        per_tree.push((t, worst));
    }
    Ok(WordLevelReport { max_abs_diff: overall, per_tree })
}
