//! Dual side of the truncated forest Hopf algebra: the product dual to the
//! coproduct, a free generating set extracted degree by degree, the induced
//! word-side view of branched paths, and the word-level companion of a
//! renormalisation map together with its commutation check.
//!
//! The forest basis is paired orthonormally: <f*, g> = 1 iff f = g. Every
//! matrix here is exact rational; float mode never enters basis work.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use std::rc::Rc;

use crate::comb::Comb;
use crate::error::{Error, Result};
use crate::forest_hopf::{coproduct_forest, Character};
use crate::linalg::{QMatrix, RowSpace};
use crate::renorm::{accept, RenormMatrix};
use crate::rough_paths::{AnisotropicRP, BranchedRP};
use crate::scalar::{q_render, Scalar, Q};
use crate::trees::{enumerate_forests, enumerate_trees, Decoration, Forest, Tree};
use crate::word_hopf::{
    concat_series, enumerate_words, WeightedAlphabet, Word, WordComb, WordSeries,
};

/// Rational combination of dual-basis symbols f*, indexed by the canonical
/// forest f. Kept in the normal form of the underlying [`Comb`].
pub type DualComb = Comb<Forest, Q>;

/// The dual unit 1*.
pub fn dual_unit() -> DualComb {
    DualComb::basis(Forest::empty())
}

thread_local! {
    static STAR_MEMO: RefCell<HashMap<(u32, Decoration), Rc<BTreeMap<(Forest, Forest), DualComb>>>> =
        RefCell::new(HashMap::new());
}

/// Structure constants of the dual product up to size `n_max`:
/// table[(f, g)] = sum over h of <coproduct(h), f (x) g> h*.
fn star_table(n_max: u32, d: Decoration) -> Result<Rc<BTreeMap<(Forest, Forest), DualComb>>> {
    if let Some(hit) = STAR_MEMO.with(|m| m.borrow().get(&(n_max, d)).cloned()) {
        return Ok(hit);
    }
    let mut table: BTreeMap<(Forest, Forest), DualComb> = BTreeMap::new();
    for h in enumerate_forests(n_max, d)? {
        for ((l, r), c) in coproduct_forest(&h).iter() {
            table
                .entry((l.clone(), r.clone()))
                .or_insert_with(DualComb::zero)
                .add_term(h.clone(), c.clone());
        }
    }
    let rc = Rc::new(table);
    STAR_MEMO.with(|m| m.borrow_mut().insert((n_max, d), rc.clone()));
    Ok(rc)
}

/// Product dual to the coproduct: (a * b)(h) = (a (x) b)(coproduct h), kept
/// to forests of size at most `n_max` with decorations at most `d`.
///
/// Bilinear and associative with unit [`dual_unit`]; noncommutative because
/// the coproduct is not cocommutative. Input terms outside the truncation
/// pair to zero against every enumerated coproduct and drop silently.
pub fn star_product(a: &DualComb, b: &DualComb, n_max: u32, d: Decoration) -> Result<DualComb> {
    let table = star_table(n_max, d)?;
    let mut out = DualComb::zero();
    for (f, cf) in a.iter() {
        for (g, cg) in b.iter() {
            if f.size() + g.size() > n_max {
                continue;
            }
            if let Some(h) = table.get(&(f.clone(), g.clone())) {
                out.add_scaled(h, &(cf * cg));
            }
        }
    }
    Ok(out)
}

/// One chosen generator of the dual product: its dual element and, on the
/// preferred path, the single tree it is dual to.
#[derive(Clone, Debug, PartialEq)]
pub struct Generator {
    size: u32,
    tree: Option<Tree>,
    dual: DualComb,
}

impl Generator {
    pub fn size(&self) -> u32 {
        self.size
    }

    /// The tree whose dual this generator is; `None` only on the flagged
    /// fallback path.
    pub fn tree(&self) -> Option<&Tree> {
        self.tree.as_ref()
    }

    pub fn dual(&self) -> &DualComb {
        &self.dual
    }
}

/// Change of basis at one degree between forest duals and dual-product
/// monomials in the generators.
#[derive(Clone, Debug, PartialEq)]
struct DegreeBlock {
    /// Canonical forests of this exact size; the column order.
    forests: Vec<Forest>,
    /// Generator index sequences, one per row of `to_forest`. Length-one
    /// rows are the generators chosen at this degree, longer rows are
    /// products of earlier ones.
    monomials: Vec<Vec<usize>>,
    /// Monomial rows over forest columns.
    to_forest: QMatrix,
    /// Inverse of `to_forest`: forest rows over monomial columns.
    from_forest: QMatrix,
}

/// Free generating set of the dual product up to a size truncation, with
/// exact change-of-basis matrices per degree.
///
/// Generator sizes are non-decreasing and, within a degree, follow the
/// canonical tree order. The monomial basis property is certified during
/// construction: every composite monomial must enlarge the span, and each
/// degree must be completed exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorBasis {
    n_max: u32,
    d: Decoration,
    generators: Vec<Generator>,
    blocks: Vec<DegreeBlock>,
    flagged: bool,
}

/// All ways to write `total` as an ordered product of generators chosen in
/// earlier degrees (indices below `prior`), at least two factors, in
/// lexicographic index order.
fn composite_sequences(generators: &[Generator], prior: usize, total: u32) -> Vec<Vec<usize>> {
    fn rec(
        gens: &[Generator],
        prior: usize,
        remaining: u32,
        stack: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if remaining == 0 {
            if stack.len() >= 2 {
                out.push(stack.clone());
            }
            return;
        }
        for i in 0..prior {
            let s = gens[i].size;
            if s <= remaining {
                stack.push(i);
                rec(gens, prior, remaining - s, stack, out);
                stack.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(generators, prior, total, &mut Vec::new(), &mut out);
    out
}

fn monomial_value(
    gens: &[Generator],
    seq: &[usize],
    n_max: u32,
    d: Decoration,
) -> Result<DualComb> {
    let mut acc = dual_unit();
    for &i in seq {
        acc = star_product(&acc, &gens[i].dual, n_max, d)?;
    }
    Ok(acc)
}

/// Expands a homogeneous dual element over the degree's forest columns.
fn expand_row(value: &DualComb, index: &BTreeMap<Forest, usize>, dim: usize) -> Result<Vec<Q>> {
    let mut row = vec![Q::zero(); dim];
    for (f, c) in value.iter() {
        let slot = index
            .get(f)
            .ok_or_else(|| Error::precondition(format!("monomial term {f} lands off-degree")))?;
        row[*slot] = c.clone();
    }
    Ok(row)
}

/// Extracts the generating set greedily by degree.
///
/// At each size the composite monomials in earlier generators are inserted
/// first (a dependency among them voids the unique-decomposition property
/// and errors out), then single-tree duals in canonical order complete the
/// degree. If trees do not suffice the remaining gap is closed with forest
/// duals and the basis is flagged; word-level operations refuse a flagged
/// basis because their letters must be trees.
pub fn compute_basis(n_max: u32, d: Decoration) -> Result<GeneratorBasis> {
    if n_max == 0 {
        return Err(Error::precondition("basis truncation must be at least 1"));
    }
    let all_forests = enumerate_forests(n_max, d)?;
    let all_trees = enumerate_trees(n_max, d)?;
    let mut generators: Vec<Generator> = Vec::new();
    let mut blocks = Vec::new();
    let mut flagged = false;
    for n in 1..=n_max {
        let forests: Vec<Forest> =
            all_forests.iter().filter(|f| f.size() == n).cloned().collect();
        let dim = forests.len();
        let index: BTreeMap<Forest, usize> =
            forests.iter().enumerate().map(|(i, f)| (f.clone(), i)).collect();
        let mut space = RowSpace::new(dim);
        let mut monomials: Vec<Vec<usize>> = Vec::new();
        let mut rows: Vec<Vec<Q>> = Vec::new();
        let prior = generators.len();
        for seq in composite_sequences(&generators, prior, n) {
            let value = monomial_value(&generators, &seq, n_max, d)?;
            let row = expand_row(&value, &index, dim)?;
            if !space.insert(row.clone()) {
                return Err(Error::Precondition {
                    message: format!(
                        "composite monomial {seq:?} is dependent at degree {n}; \
                         the unique decomposition fails"
                    ),
                });
            }
            monomials.push(seq);
            rows.push(row);
        }
        for t in all_trees.iter().filter(|t| t.size() == n) {
            if space.rank() == dim {
                break;
            }
            let f = Forest::single(t.clone());
            let row = expand_row(&DualComb::basis(f.clone()), &index, dim)?;
            if space.insert(row.clone()) {
                generators.push(Generator {
                    size: n,
                    tree: Some(t.clone()),
                    dual: DualComb::basis(f),
                });
                monomials.push(vec![generators.len() - 1]);
                rows.push(row);
            }
        }
        for f in &forests {
            if space.rank() == dim {
                break;
            }
            let row = expand_row(&DualComb::basis(f.clone()), &index, dim)?;
            if space.insert(row.clone()) {
                flagged = true;
                generators.push(Generator {
                    size: n,
                    tree: None,
                    dual: DualComb::basis(f.clone()),
                });
                monomials.push(vec![generators.len() - 1]);
                rows.push(row);
            }
        }
        if space.rank() != dim || monomials.len() != dim {
            return Err(Error::Precondition {
                message: format!(
                    "degree {n} closed at rank {} of {dim} with {} monomials",
                    space.rank(),
                    monomials.len()
                ),
            });
        }
        let mut to_forest = QMatrix::zeros(dim, dim);
        for (r, row) in rows.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                to_forest.set(r, c, v.clone());
            }
        }
        let from_forest = to_forest.inverse()?;
        blocks.push(DegreeBlock { forests, monomials, to_forest, from_forest });
    }
    Ok(GeneratorBasis { n_max, d, generators, blocks, flagged })
}

impl GeneratorBasis {
    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    pub fn dec_bound(&self) -> Decoration {
        self.d
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    /// Whether the fallback path had to supply non-tree generators.
    pub fn flagged(&self) -> bool {
        self.flagged
    }

    /// Number of generators chosen at each degree 1..=n_max.
    pub fn generator_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_max as usize];
        for g in &self.generators {
            counts[g.size as usize - 1] += 1;
        }
        counts
    }

    /// Forest-dual dimension at each degree 1..=n_max.
    pub fn degree_dims(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.forests.len()).collect()
    }

    /// Re-derives the certification done during construction: per degree the
    /// monomial count must equal the forest-dual dimension and the two
    /// change-of-basis matrices must invert each other.
    pub fn audit(&self) -> Result<()> {
        if self.generators.is_empty() {
            return Err(Error::Config { message: "basis has no generators".into() });
        }
        for n in 1..=self.n_max {
            let block = self.block(n);
            let dim = block.forests.len();
            if block.monomials.len() != dim {
                return Err(Error::Config {
                    message: format!(
                        "degree {n}: {} monomials against {dim} forest duals",
                        block.monomials.len()
                    ),
                });
            }
            let forward = block.to_forest.mul(&block.from_forest)?;
            let backward = block.from_forest.mul(&block.to_forest)?;
            if !forward.is_identity() || !backward.is_identity() {
                return Err(Error::Config {
                    message: format!("degree {n}: change of basis is not mutually inverse"),
                });
            }
        }
        Ok(())
    }

    /// Single-entry tamper hook for sensitivity checks: adds `delta` to one
    /// entry of the monomial-to-forest matrix at the given degree.
    pub fn perturb_to_forest(
        &mut self,
        degree: u32,
        row: usize,
        col: usize,
        delta: &Q,
    ) -> Result<()> {
        if degree == 0 || degree > self.n_max {
            return Err(Error::precondition(format!(
                "degree {degree} outside 1..={}",
                self.n_max
            )));
        }
        let block = &mut self.blocks[degree as usize - 1];
        if row >= block.to_forest.rows() || col >= block.to_forest.cols() {
            return Err(Error::precondition(format!(
                "entry ({row}, {col}) outside the degree-{degree} block"
            )));
        }
        block.to_forest.add_to(row, col, delta);
        Ok(())
    }

    fn block(&self, n: u32) -> &DegreeBlock {
        &self.blocks[n as usize - 1]
    }

    /// The generators as word letters. Errors on a flagged basis.
    pub fn letter_trees(&self) -> Result<Vec<Tree>> {
        self.generators
            .iter()
            .map(|g| {
                g.tree.clone().ok_or_else(|| Error::Config {
                    message: "flagged basis carries non-tree generators; \
                              word-level operations are unavailable"
                        .into(),
                })
            })
            .collect()
    }

    fn word_of(&self, seq: &[usize]) -> Result<Word> {
        let mut letters = Vec::with_capacity(seq.len());
        for &i in seq {
            letters.push(self.generators[i].tree.clone().ok_or_else(|| Error::Config {
                message: "flagged basis carries non-tree generators; \
                          word-level operations are unavailable"
                    .into(),
            })?);
        }
        Ok(Word::from_letters(letters))
    }

    /// Word-side image of a dual element: each homogeneous piece is
    /// expanded in monomials of the generators and a monomial becomes the
    /// word of its letters. This is the isomorphism on arbitrary dual
    /// vectors; grid paths go through [`iso_psi`].
    pub fn word_image(&self, y: &DualComb) -> Result<WordComb> {
        let mut out = WordComb::zero();
        let unit = y.coeff(&Forest::empty());
        if !Scalar::is_zero(&unit) {
            out.add_term(Word::empty(), unit);
        }
        for n in 1..=self.n_max {
            let block = self.block(n);
            let dim = block.forests.len();
            let mut yvec = vec![Q::zero(); dim];
            let mut any = false;
            for (i, f) in block.forests.iter().enumerate() {
                let c = y.coeff(f);
                if !Scalar::is_zero(&c) {
                    any = true;
                }
                yvec[i] = c;
            }
            if !any {
                continue;
            }
            for (r, seq) in block.monomials.iter().enumerate() {
                let mut c = Q::zero();
                for (fcol, yf) in yvec.iter().enumerate() {
                    let m = block.from_forest.get(fcol, r);
                    if !Scalar::is_zero(m) && !Scalar::is_zero(yf) {
                        c = c + m * yf;
                    }
                }
                if !Scalar::is_zero(&c) {
                    out.add_term(self.word_of(seq)?, c);
                }
            }
        }
        for (f, c) in y.iter() {
            if f.size() > self.n_max && !Scalar::is_zero(c) {
                return Err(Error::TruncationMismatch { left: f.size(), right: self.n_max });
            }
        }
        Ok(out)
    }

    /// Deterministic JSON dump: generators and, per degree, the two
    /// mutually inverse change-of-basis matrices with rationals rendered as
    /// strings.
    pub fn to_json(&self) -> String {
        let generators: Vec<serde_json::Value> = self
            .generators
            .iter()
            .map(|g| {
                serde_json::json!({
                    "size": g.size,
                    "tree": g.tree.as_ref().map(|t| t.encode()),
                    "dual": g
                        .dual
                        .iter()
                        .map(|(f, c)| serde_json::json!([f.encode(), q_render(c)]))
                        .collect::<Vec<_>>(),
                })
            })
            .collect();
        let degrees: Vec<serde_json::Value> = self
            .blocks
            .iter()
            .enumerate()
            .map(|(i, b)| {
                serde_json::json!({
                    "degree": i + 1,
                    "forests": b.forests.iter().map(|f| f.encode()).collect::<Vec<_>>(),
                    "monomials": b.monomials,
                    "to_forest": matrix_strings(&b.to_forest),
                    "from_forest": matrix_strings(&b.from_forest),
                })
            })
            .collect();
        let doc = serde_json::json!({
            "truncation": self.n_max,
            "dec_bound": self.d,
            "flagged": self.flagged,
            "generators": generators,
            "degrees": degrees,
        });
        let mut text = serde_json::to_string_pretty(&doc).expect("serializable document");
        text.push('\n');
        text
    }
}

fn matrix_strings(m: &QMatrix) -> Vec<Vec<String>> {
    (0..m.rows())
        .map(|r| (0..m.cols()).map(|c| q_render(m.get(r, c))).collect())
        .collect()
}

/// Word-side view of a branched path: per grid pair, the character read as
/// a dual vector is expanded in monomials of the generators and the
/// monomial coefficient becomes the coefficient of the generator word.
///
/// The output is assembled pair by pair, so its composition and shuffle
/// properties are theorems about the construction, not consequences of the
/// storage layout; callers check them with the path's own reports.
pub fn iso_psi<S: Scalar>(x: &BranchedRP<S>, basis: &GeneratorBasis) -> Result<AnisotropicRP<S>> {
    if x.trunc() != basis.n_max {
        return Err(Error::TruncationMismatch { left: x.trunc(), right: basis.n_max });
    }
    if x.dec_bound() > basis.d {
        return Err(Error::precondition(format!(
            "path decorations up to {} exceed the basis bound {}",
            x.dec_bound(),
            basis.d
        )));
    }
    let letters = basis.letter_trees()?;
    let alphabet = WeightedAlphabet::from_trees(&letters, Scalar::to_f64(x.gamma()))?;
    let points = x.n_points();
    let mut sigs = Vec::new();
    for a in 0..points {
        for b in a + 1..points {
            let mut series = WordSeries::basis(Word::empty());
            for n in 1..=basis.n_max {
                let block = basis.block(n);
                let yvec: Vec<S> = block
                    .forests
                    .iter()
                    .map(|f| x.value_forest(a, b, f))
                    .collect::<Result<_>>()?;
                for (r, seq) in block.monomials.iter().enumerate() {
                    let mut c = S::zero();
                    for (fcol, yf) in yvec.iter().enumerate() {
                        let m = block.from_forest.get(fcol, r);
                        if !Scalar::is_zero(m) {
                            c = c.add(&yf.mul(&S::from_q(m)));
                        }
                    }
                    if !c.is_zero() {
                        series.add_term(basis.word_of(seq)?, c);
                    }
                }
            }
            sigs.push(series);
        }
    }
    AnisotropicRP::from_pair_parts(alphabet, basis.n_max, x.depth(), sigs)
}

/// Inverse of [`iso_psi`]: monomial-word coefficients recombine through the
/// forward change of basis into forest values, of which the single-tree
/// ones rebuild the characters.
pub fn iso_psi_inverse<S: Scalar>(
    xt: &AnisotropicRP<S>,
    basis: &GeneratorBasis,
    gamma: &Q,
) -> Result<BranchedRP<S>> {
    if xt.node_trunc() != basis.n_max {
        return Err(Error::TruncationMismatch { left: xt.node_trunc(), right: basis.n_max });
    }
    let points = xt.n_points();
    let mut chars = Vec::new();
    for a in 0..points {
        for b in a + 1..points {
            let mut values: BTreeMap<Tree, S> = BTreeMap::new();
            for n in 1..=basis.n_max {
                let block = basis.block(n);
                let cvec: Vec<S> = block
                    .monomials
                    .iter()
                    .map(|seq| Ok(xt.value(a, b, &basis.word_of(seq)?)?))
                    .collect::<Result<_>>()?;
                for (fcol, f) in block.forests.iter().enumerate() {
                    let trees: Vec<&Tree> = f.expanded().collect();
                    if trees.len() != 1 {
                        continue;
                    }
                    let mut v = S::zero();
                    for (r, c) in cvec.iter().enumerate() {
                        let m = block.to_forest.get(r, fcol);
                        if !Scalar::is_zero(m) {
                            v = v.add(&c.mul(&S::from_q(m)));
                        }
                    }
                    if !v.is_zero() {
                        values.insert(trees[0].clone(), v);
                    }
                }
            }
            chars.push(Character::from_tree_values(basis.n_max, values)?);
        }
    }
    BranchedRP::from_parts(basis.n_max, basis.d, xt.depth(), gamma.clone(), chars)
}

/// Adjoint of the map under the orthonormal forest pairing, evaluated on a
/// single-tree dual: M* t* = sum over forests g of <M g, t> g*.
fn adjoint_on_tree(m: &RenormMatrix, t: &Tree) -> Result<DualComb> {
    let target = Forest::single(t.clone());
    let mut out = DualComb::zero();
    for g in enumerate_forests(m.trunc(), m.dec_bound())? {
        let c = m.apply_forest(&g)?.coeff(&target);
        if !Scalar::is_zero(&c) {
            out.add_term(g, c);
        }
    }
    Ok(out)
}

/// Word-level companion of an accepted map: one word combination per
/// generator letter, extended multiplicatively over concatenation with the
/// node-count truncation applied.
#[derive(Clone, Debug)]
pub struct TildeMap {
    node_trunc: u32,
    images: BTreeMap<Tree, WordComb>,
}

impl TildeMap {
    pub fn node_trunc(&self) -> u32 {
        self.node_trunc
    }

    pub fn letter_image(&self, t: &Tree) -> Result<&WordComb> {
        self.images
            .get(t)
            .ok_or_else(|| Error::format(format!("letter {t} is not a basis generator")))
    }

    /// Single-entry tamper hook for sensitivity checks: adds `delta` to the
    /// coefficient of `w` in one letter image.
    pub fn perturb(&mut self, letter: &Tree, w: &Word, delta: &Q) -> Result<()> {
        if w.node_count() > self.node_trunc {
            return Err(Error::TruncationMismatch {
                left: w.node_count(),
                right: self.node_trunc,
            });
        }
        let image = self
            .images
            .get_mut(letter)
            .ok_or_else(|| Error::format(format!("letter {letter} is not a basis generator")))?;
        image.add_term(w.clone(), delta.clone());
        Ok(())
    }

    pub fn apply_word(&self, w: &Word) -> Result<WordComb> {
        let mut acc = WordComb::basis(Word::empty());
        for l in w.letters() {
            acc = concat_series(&acc, self.letter_image(l)?, self.node_trunc);
        }
        Ok(acc)
    }

    pub fn apply_series<S: Scalar>(&self, s: &WordSeries<S>) -> Result<WordSeries<S>> {
        let mut out = WordSeries::zero();
        for (w, c) in s.iter() {
            for (iw, ic) in self.apply_word(w)?.iter() {
                out.add_term(iw.clone(), c.mul(&S::from_q(ic)));
            }
        }
        Ok(out)
    }
}

/// Builds the word-level companion of `m`: on a generator letter the image
/// is the word-side expansion of the adjoint's value on that letter's dual.
pub fn tilde_map(m: &RenormMatrix, gamma: &Q, basis: &GeneratorBasis) -> Result<TildeMap> {
    accept(m, gamma)?;
    if m.trunc() != basis.n_max {
        return Err(Error::TruncationMismatch { left: m.trunc(), right: basis.n_max });
    }
    if m.dec_bound() > basis.d {
        return Err(Error::precondition(format!(
            "map decorations up to {} exceed the basis bound {}",
            m.dec_bound(),
            basis.d
        )));
    }
    let mut images = BTreeMap::new();
    for t in basis.letter_trees()? {
        let dual = adjoint_on_tree(m, &t)?;
        images.insert(t.clone(), basis.word_image(&dual)?);
    }
    Ok(TildeMap { node_trunc: basis.n_max, images })
}

/// Outcome of comparing the two routes from a branched path to a word path.
#[derive(Clone, Debug)]
pub struct CommuteReport {
    pub pairs: usize,
    pub words: usize,
    pub max_abs_defect: f64,
    /// Exact coefficient arithmetic; a pass requires the defect to be zero.
    pub exact: bool,
    pub worst: Option<(usize, usize, Word)>,
}

impl CommuteReport {
    pub fn passes(&self, tol: f64) -> bool {
        if self.exact {
            self.max_abs_defect == 0.0
        } else {
            self.max_abs_defect <= tol
        }
    }
}

fn commute_defect<S: Scalar>(
    renormed: &AnisotropicRP<S>,
    plain: &AnisotropicRP<S>,
    tm: &TildeMap,
    words: &[Word],
) -> Result<CommuteReport> {
    let points = renormed.n_points();
    let mut report = CommuteReport {
        pairs: 0,
        words: words.len(),
        max_abs_defect: 0.0,
        exact: S::EXACT,
        worst: None,
    };
    for a in 0..points {
        for b in a + 1..points {
            report.pairs += 1;
            let lhs = renormed.pair(a, b)?;
            let rhs = tm.apply_series(&plain.pair(a, b)?)?;
            for w in words {
                let defect = lhs.coeff(w).sub(&rhs.coeff(w));
                let mag = defect.to_f64().abs();
                if mag > report.max_abs_defect {
                    report.max_abs_defect = mag;
                    report.worst = Some((a, b, w.clone()));
                }
            }
        }
    }
    Ok(report)
}

/// Checks that renormalising before the word-side view agrees with applying
/// the word-level companion after it, on every grid pair and every word
/// within the truncation.
pub fn check_commute_iso<S: Scalar>(
    m: &RenormMatrix,
    x: &BranchedRP<S>,
    basis: &GeneratorBasis,
) -> Result<CommuteReport> {
    let tm = tilde_map(m, x.gamma(), basis)?;
    check_commute_against(m, x, basis, &tm)
}

/// Same sweep against a caller-supplied companion map; the hook for
/// sensitivity checks on tampered companions.
pub fn check_commute_against<S: Scalar>(
    m: &RenormMatrix,
    x: &BranchedRP<S>,
    basis: &GeneratorBasis,
    tm: &TildeMap,
) -> Result<CommuteReport> {
    let renormed = iso_psi(&x.apply_renorm(m)?, basis)?;
    let plain = iso_psi(x, basis)?;
    let words = enumerate_words(&basis.letter_trees()?, basis.n_max);
    commute_defect(&renormed, &plain, tm, &words)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::renorm::{bphz_map, BphzCharacter};
    use crate::scalar::{q, q_int};
    use crate::suites::{gamma_default, poly_driver_one, poly_driver_two};
    use crate::trees::{chain2, dot};
    use rand::{RngCore, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn basis3() -> GeneratorBasis {
        compute_basis(3, 1).unwrap()
    }

    fn lift3() -> BranchedRP<Q> {
        BranchedRP::canonical_lift(&poly_driver_one(2).unwrap(), 3, &gamma_default()).unwrap()
    }

    fn small_map() -> RenormMatrix {
        let values: BTreeMap<Tree, Q> =
            vec![(dot(1), q(1, 2)), (chain2(1, 1), q(-1, 3))].into_iter().collect();
        bphz_map(&BphzCharacter::new(3, 1, values).unwrap()).unwrap()
    }

    fn seeded_dual(rng: &mut ChaCha20Rng, forests: &[Forest]) -> DualComb {
        let mut out = DualComb::zero();
        for f in forests {
            let c = (rng.next_u64() % 7) as i64 - 3;
            if c != 0 {
                out.add_term(f.clone(), q_int(c));
            }
        }
        out
    }

    #[test]
    fn dual_unit_is_the_star_unit() {
        let forests = enumerate_forests(2, 1).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let a = seeded_dual(&mut rng, &forests);
        assert_eq!(star_product(&dual_unit(), &a, 3, 1).unwrap(), a);
        assert_eq!(star_product(&a, &dual_unit(), 3, 1).unwrap(), a);
    }

    #[test]
    fn single_node_products_match_the_coproduct_pairing() {
        for (i, j) in [(0u8, 1u8), (1, 0), (1, 1)] {
            let prod = star_product(
                &DualComb::basis(Forest::single(dot(i))),
                &DualComb::basis(Forest::single(dot(j))),
                3,
                1,
            )
            .unwrap();
            let mut expected = DualComb::zero();
            for h in enumerate_forests(2, 1).unwrap() {
                if h.size() != 2 {
                    continue;
                }
                let c = coproduct_forest(&h)
                    .coeff(&(Forest::single(dot(i)), Forest::single(dot(j))));
                if !Scalar::is_zero(&c) {
                    expected.add_term(h, c);
                }
            }
            assert_eq!(prod, expected, "products of dots {i}, {j}");
            let pair_coeff =
                prod.coeff(&Forest::from_trees(vec![dot(i), dot(j)]));
            assert_eq!(pair_coeff, if i == j { q_int(2) } else { q_int(1) });
            assert_eq!(prod.coeff(&Forest::single(chain2(i, j))), q_int(1));
        }
    }

    #[test]
    fn star_is_associative_on_seeded_triples() {
        let forests = enumerate_forests(3, 1).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(17);
        for _ in 0..20 {
            let a = seeded_dual(&mut rng, &forests);
            let b = seeded_dual(&mut rng, &forests);
            let c = seeded_dual(&mut rng, &forests);
            let left = star_product(&star_product(&a, &b, 3, 1).unwrap(), &c, 3, 1).unwrap();
            let right = star_product(&a, &star_product(&b, &c, 3, 1).unwrap(), 3, 1).unwrap();
            assert_eq!(left, right);
        }
    }

    #[test]
    fn basis_is_audited_and_deterministic() {
        let basis = basis3();
        assert_eq!(basis.degree_dims(), vec![2, 7, 26]);
        assert_eq!(basis.generator_counts(), vec![2, 3, 6]);
        assert!(!basis.flagged());
        let letters = basis.letter_trees().unwrap();
        assert_eq!(&letters[..2], &[dot(0), dot(1)]);
        for (i, block) in basis.blocks.iter().enumerate() {
            assert_eq!(block.monomials.len(), block.forests.len(), "degree {}", i + 1);
            assert!(block.to_forest.mul(&block.from_forest).unwrap().is_identity());
            assert!(block.from_forest.mul(&block.to_forest).unwrap().is_identity());
        }
        assert_eq!(basis, basis3());
        assert_eq!(basis.to_json(), basis3().to_json());
    }

    #[test]
    fn the_full_truncation_stays_tree_generated() {
        let basis = compute_basis(4, 1).unwrap();
        assert_eq!(basis.degree_dims(), vec![2, 7, 26, 107]);
        assert_eq!(basis.generator_counts(), vec![2, 3, 6, 22]);
        assert!(!basis.flagged());
    }

    #[test]
    fn word_image_inverts_on_generator_duals() {
        let basis = basis3();
        for g in basis.generators() {
            let w = basis.word_image(g.dual()).unwrap();
            let letter = Word::single(g.tree().unwrap().clone());
            assert_eq!(w, WordComb::basis(letter));
        }
    }

    #[test]
    fn transfer_keeps_level_one_and_passes_both_laws() {
        let basis = basis3();
        let x = lift3();
        let xt = iso_psi(&x, &basis).unwrap();
        let points = x.n_points();
        for a in 0..points {
            for b in a + 1..points {
                for i in 0..=1u8 {
                    assert_eq!(
                        xt.value(a, b, &Word::single(dot(i))).unwrap(),
                        x.value_tree(a, b, &dot(i)).unwrap()
                    );
                }
            }
        }
        let chen = xt.check_chen();
        assert!(chen.exact && chen.max_abs_defect == 0.0, "{:?}", chen.worst);
        assert!(xt.shuffle_defect(0.0).is_none());
    }

    #[test]
    fn transfer_round_trip_reproduces_every_forest_value() {
        let basis = basis3();
        let x = lift3();
        let back = iso_psi_inverse(&iso_psi(&x, &basis).unwrap(), &basis, x.gamma()).unwrap();
        let points = x.n_points();
        for f in enumerate_forests(3, 1).unwrap() {
            for a in 0..points {
                for b in a + 1..points {
                    assert_eq!(
                        back.value_forest(a, b, &f).unwrap(),
                        x.value_forest(a, b, &f).unwrap(),
                        "forest {f} on ({a}, {b})"
                    );
                }
            }
        }
    }

    #[test]
    fn identity_map_induces_the_identity_companion() {
        let basis = basis3();
        let id = RenormMatrix::identity(3, 1).unwrap();
        let tm = tilde_map(&id, &gamma_default(), &basis).unwrap();
        for t in basis.letter_trees().unwrap() {
            assert_eq!(
                tm.letter_image(&t).unwrap(),
                &WordComb::basis(Word::single(t.clone()))
            );
        }
        let w = Word::from_letters(vec![dot(1), dot(0), dot(1)]);
        assert_eq!(tm.apply_word(&w).unwrap(), WordComb::basis(w));
    }

    #[test]
    fn adjoint_matches_the_transposed_matrix() {
        let m = small_map();
        for t in basis3().letter_trees().unwrap() {
            let by_pairing = adjoint_on_tree(&m, &t).unwrap();
            let by_transpose = m.adjoint().apply_forest(&Forest::single(t.clone())).unwrap();
            assert_eq!(by_pairing, by_transpose, "adjoint on {t}");
        }
    }

    #[test]
    fn single_node_images_shift_only_the_zero_decorated_letter() {
        let basis = basis3();
        let m = small_map();
        let tm = tilde_map(&m, &gamma_default(), &basis).unwrap();
        // A contraction either erases a whole tree into a 0-decorated node
        // or leaves at least two nodes behind, so among the single-node
        // letters only dot(0) collects counterterms.
        assert_eq!(
            tm.letter_image(&dot(1)).unwrap(),
            &WordComb::basis(Word::single(dot(1)))
        );
        let img = tm.letter_image(&dot(0)).unwrap();
        let mut expected = WordComb::basis(Word::single(dot(0)));
        expected.add_term(Word::single(dot(1)), q(1, 2));
        expected.add_scaled(
            &basis.word_image(&DualComb::basis(Forest::single(chain2(1, 1)))).unwrap(),
            &q(-1, 3),
        );
        assert_eq!(img, &expected);
    }

    #[test]
    fn companion_is_concatenation_multiplicative() {
        let basis = basis3();
        let tm = tilde_map(&small_map(), &gamma_default(), &basis).unwrap();
        let letters = basis.letter_trees().unwrap();
        let words = enumerate_words(&letters, 2);
        for u in &words {
            for v in &words {
                let glued = tm.apply_word(&u.concat(v)).unwrap();
                let split = concat_series(
                    &tm.apply_word(u).unwrap(),
                    &tm.apply_word(v).unwrap(),
                    basis.n_max(),
                );
                assert_eq!(glued, split, "words {u} and {v}");
            }
        }
    }

    #[test]
    fn renormalisation_commutes_with_the_transfer() {
        let basis = basis3();
        for x in [
            lift3(),
            BranchedRP::canonical_lift(&poly_driver_two(2).unwrap(), 3, &gamma_default())
                .unwrap(),
        ] {
            let id = RenormMatrix::identity(3, 1).unwrap();
            let trivial = check_commute_iso(&id, &x, &basis).unwrap();
            assert!(trivial.exact && trivial.max_abs_defect == 0.0);
            let report = check_commute_iso(&small_map(), &x, &basis).unwrap();
            assert!(report.passes(0.0), "worst {:?}", report.worst);
            assert!(report.pairs > 0 && report.words > 0);
        }
    }

    #[test]
    fn dropping_an_image_term_breaks_commutation() {
        let basis = basis3();
        let x = lift3();
        let m = small_map();
        let mut tm = tilde_map(&m, &gamma_default(), &basis).unwrap();
        tm.perturb(&dot(0), &Word::single(dot(1)), &q(-1, 2)).unwrap();
        let report = check_commute_against(&m, &x, &basis, &tm).unwrap();
        assert!(report.max_abs_defect > 0.0);
    }

    #[test]
    fn a_tampered_matrix_entry_fails_the_audit() {
        let mut basis = basis3();
        basis.audit().unwrap();
        basis.perturb_to_forest(2, 0, 1, &q_int(1)).unwrap();
        assert!(basis.audit().is_err());
    }
}
