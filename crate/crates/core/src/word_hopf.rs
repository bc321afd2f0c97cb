//! Words over tree letters and their Hopf structures.
//!
//! The grading that matters is the total node count of a word's letters, not
//! its length: truncation at level N keeps the words whose letters' sizes
//! sum to at most N.
//!
//! Three coalgebra structures appear:
//!  - shuffle product with deconcatenation coproduct (signatures live here);
//!  - concatenation product with unshuffle coproduct (group-like elements
//!    and primitives live here: a series is a character of the shuffle
//!    algebra iff it is group-like for unshuffle, and logarithms of such
//!    series are unshuffle-primitive).

use crate::comb::Comb;
use crate::error::{Error, Result};
use crate::scalar::{q, q_int, Q, Scalar};
use crate::trees::{Decoration, Tree};
use std::cmp::Ordering;
use std::fmt;

/// Tolerance for the resonance scan over floating point letter weights.
pub const RESONANCE_TOL: f64 = 1e-12;

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Word {
    letters: Vec<Tree>,
}

impl Word {
    pub fn empty() -> Word {
        Word { letters: Vec::new() }
    }

    pub fn single(letter: Tree) -> Word {
        Word { letters: vec![letter] }
    }

    pub fn from_letters(letters: Vec<Tree>) -> Word {
        Word { letters }
    }

    pub fn letters(&self) -> &[Tree] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Total node count over all letters.
    pub fn node_count(&self) -> u32 {
        self.letters.iter().map(|t| t.size()).sum()
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut letters = self.letters.clone();
        letters.extend(other.letters.iter().cloned());
        Word { letters }
    }

    pub fn push(&self, letter: Tree) -> Word {
        let mut letters = self.letters.clone();
        letters.push(letter);
        Word { letters }
    }

    /// `e` for the empty word, otherwise letter encodings joined by commas.
    pub fn encode(&self) -> String {
        if self.is_empty() {
            return "e".into();
        }
        self.letters.iter().map(Tree::encode).collect::<Vec<_>>().join(",")
    }

    pub fn parse(text: &str, max_dec: Decoration) -> Result<Word> {
        let s = text.trim();
        if s == "e" {
            return Ok(Word::empty());
        }
        let mut letters = Vec::new();
        for part in s.split(',') {
            letters.push(Tree::parse(part, max_dec)?);
        }
        Ok(Word { letters })
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.node_count()
            .cmp(&other.node_count())
            .then_with(|| self.len().cmp(&other.len()))
            .then_with(|| self.letters.cmp(&other.letters))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.encode())
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.encode())
    }
}

pub type WordComb = Comb<Word, Q>;
/// Scalar-generic series of words (signatures, logarithms).
pub type WordSeries<S> = Comb<Word, S>;

/// JSON form of a word: the array of its letter encodings.
pub fn word_json(w: &Word) -> serde_json::Value {
    serde_json::Value::Array(
        w.letters().iter().map(|t| serde_json::Value::String(t.encode())).collect(),
    )
}

/// JSON form of a word combination: an array of `{word, num, den}` with the
/// word as in [`word_json`] and exact decimal-string coefficients.
pub fn word_comb_json(c: &WordComb) -> serde_json::Value {
    serde_json::Value::Array(
        c.iter()
            .map(|(w, coeff)| {
                serde_json::json!({
                    "word": word_json(w),
                    "num": coeff.numer().to_string(),
                    "den": coeff.denom().to_string(),
                })
            })
            .collect(),
    )
}

/// Shuffle product of two words.
pub fn shuffle(u: &Word, v: &Word) -> WordComb {
    if u.is_empty() {
        return WordComb::basis(v.clone());
    }
    if v.is_empty() {
        return WordComb::basis(u.clone());
    }
    let (u0, a) = (Word::from_letters(u.letters[..u.len() - 1].to_vec()), &u.letters[u.len() - 1]);
    let (v0, b) = (Word::from_letters(v.letters[..v.len() - 1].to_vec()), &v.letters[v.len() - 1]);
    let mut out = WordComb::zero();
    for (w, c) in shuffle(&u0, v).iter() {
        out.add_term(w.push(a.clone()), c.clone());
    }
    for (w, c) in shuffle(u, &v0).iter() {
        out.add_term(w.push(b.clone()), c.clone());
    }
    out
}

/// Bilinear extension of the shuffle product; terms past `trunc_nodes` are
/// dropped when a truncation is given.
pub fn shuffle_series<S: Scalar>(
    a: &WordSeries<S>,
    b: &WordSeries<S>,
    trunc_nodes: Option<u32>,
) -> WordSeries<S> {
    let mut out = WordSeries::zero();
    for (u, cu) in a.iter() {
        for (v, cv) in b.iter() {
            if let Some(n) = trunc_nodes {
                if u.node_count() + v.node_count() > n {
                    continue;
                }
            }
            let coeff = cu.mul(cv);
            for (w, q) in shuffle(u, v).iter() {
                out.add_term(w.clone(), coeff.mul(&S::from_q(q)));
            }
        }
    }
    out
}

/// All splits w = prefix . suffix, including the trivial ones.
pub fn deconcatenations(w: &Word) -> Vec<(Word, Word)> {
    (0..=w.len())
        .map(|i| {
            (
                Word::from_letters(w.letters[..i].to_vec()),
                Word::from_letters(w.letters[i..].to_vec()),
            )
        })
        .collect()
}

/// Deconcatenation coproduct.
pub fn deconcat_coproduct(w: &Word) -> Comb<(Word, Word), Q> {
    deconcatenations(w).into_iter().map(|p| (p, q_int(1))).collect()
}

/// Unshuffle coproduct: sum over subsets of positions, the chosen subword on
/// the left and its complement on the right.
pub fn unshuffle_coproduct(w: &Word) -> Comb<(Word, Word), Q> {
    let n = w.len();
    assert!(n <= 20, "unshuffle enumeration is exponential");
    let mut out = Comb::zero();
    for mask in 0u32..(1 << n) {
        let mut left = Vec::new();
        let mut right = Vec::new();
        for (i, letter) in w.letters.iter().enumerate() {
            if mask >> i & 1 == 1 {
                left.push(letter.clone());
            } else {
                right.push(letter.clone());
            }
        }
        out.add_term((Word::from_letters(left), Word::from_letters(right)), q_int(1));
    }
    out
}

/// Concatenation product of series, truncated by node count.
pub fn concat_series<S: Scalar>(
    a: &WordSeries<S>,
    b: &WordSeries<S>,
    trunc_nodes: u32,
) -> WordSeries<S> {
    let mut out = WordSeries::zero();
    for (u, cu) in a.iter() {
        if u.node_count() > trunc_nodes {
            continue;
        }
        for (v, cv) in b.iter() {
            if u.node_count() + v.node_count() > trunc_nodes {
                continue;
            }
            out.add_term(u.concat(v), cu.mul(cv));
        }
    }
    out
}

/// Truncated exponential for the concatenation product. The argument must
/// have no empty-word component; every letter carries at least one node, so
/// the series terminates at the truncation level.
pub fn concat_exp<S: Scalar>(x: &WordSeries<S>, trunc_nodes: u32) -> Result<WordSeries<S>> {
    if !x.coeff(&Word::empty()).is_zero() {
        return Err(Error::precondition(
            "exp argument must have zero coefficient on the empty word",
        ));
    }
    let mut out = WordSeries::basis(Word::empty());
    let mut power = WordSeries::basis(Word::empty());
    for k in 1..=trunc_nodes.max(1) {
        power = concat_series(&power, x, trunc_nodes).scale(&S::from_q(&q(1, k as i64)));
        if power.is_zero() {
            break;
        }
        out = out.add(&power);
    }
    Ok(out)
}

/// Truncated logarithm for the concatenation product. The argument must have
/// empty-word coefficient exactly 1.
pub fn concat_log<S: Scalar>(g: &WordSeries<S>, trunc_nodes: u32) -> Result<WordSeries<S>> {
    if g.coeff(&Word::empty()).sub(&S::one()) != S::zero() {
        return Err(Error::precondition(
            "log argument must have coefficient 1 on the empty word",
        ));
    }
    let mut y = g.clone();
    y.add_term(Word::empty(), S::one().neg());
    let mut out = WordSeries::zero();
    let mut power = WordSeries::basis(Word::empty());
    for k in 1..=trunc_nodes.max(1) {
        power = concat_series(&power, &y, trunc_nodes);
        if power.is_zero() {
            break;
        }
        let sign = if k % 2 == 1 { 1 } else { -1 };
        out.add_scaled(&power, &S::from_q(&q(sign, k as i64)));
    }
    Ok(out)
}

/// Antipode of the concatenation bialgebra: reverse each word and attach the
/// sign (-1)^length. On grouplike series this is the concatenation inverse.
pub fn concat_antipode<S: Scalar>(x: &WordSeries<S>) -> WordSeries<S> {
    let mut out = WordSeries::zero();
    for (w, c) in x.iter() {
        let mut letters: Vec<Tree> = w.letters().to_vec();
        letters.reverse();
        let signed = if w.len() % 2 == 1 { c.neg() } else { c.clone() };
        out.add_term(Word::from_letters(letters), signed);
    }
    out
}

/// Anisotropic weight of a tree letter: gamma per node plus an extra
/// (1 - gamma) for each 0-decorated node. A 0-free tree of size n has weight
/// n*gamma; the single 0-decorated node has weight 1 regardless of gamma.
pub fn tree_weight(t: &Tree, gamma: f64) -> f64 {
    gamma * t.size() as f64 + (1.0 - gamma) * t.zeros() as f64
}

/// Exact-rational version of [`tree_weight`].
pub fn tree_weight_exact(t: &Tree, gamma: &Q) -> Q {
    let size = q(t.size() as i64, 1);
    let zeros = q(t.zeros() as i64, 1);
    gamma * size + (q_int(1) - gamma) * zeros
}

pub fn word_weight(w: &Word, gamma: f64) -> f64 {
    w.letters().iter().map(|t| tree_weight(t, gamma)).sum()
}

/// An alphabet of tree letters with their weights.
///
/// Letters of weight >= 1 are Lipschitz directions: they cannot contribute
/// to a sub-unit resonance and are excluded from the admissibility scan (the
/// 0-decorated single node, of weight exactly 1, is the standard example).
#[derive(Clone, Debug)]
pub struct WeightedAlphabet {
    letters: Vec<Tree>,
    weights: Vec<f64>,
    gamma_hat: f64,
}

impl WeightedAlphabet {
    pub fn new(entries: Vec<(Tree, f64)>) -> Result<WeightedAlphabet> {
        let mut entries = entries;
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        for pair in entries.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(Error::Inadmissible {
                    message: format!("duplicate letter {}", pair[0].0),
                });
            }
        }
        for (t, w) in &entries {
            if !w.is_finite() || *w <= 0.0 {
                return Err(Error::Inadmissible {
                    message: format!("letter {t} has non-positive weight {w}"),
                });
            }
        }
        let scan: Vec<f64> =
            entries.iter().map(|(_, w)| *w).filter(|w| *w < 1.0 - RESONANCE_TOL).collect();
        let gamma_hat = scan
            .iter()
            .chain(entries.iter().map(|(_, w)| w))
            .cloned()
            .fold(f64::INFINITY, f64::min);
        let (letters, weights) = entries.into_iter().unzip();
        Ok(WeightedAlphabet { letters, weights, gamma_hat })
    }

    /// Alphabet of tree letters weighted by [`tree_weight`] at `gamma`.
    pub fn from_trees(trees: &[Tree], gamma: f64) -> Result<WeightedAlphabet> {
        if !(0.0 < gamma && gamma < 1.0) {
            return Err(Error::Inadmissible { message: format!("gamma {gamma} outside (0, 1)") });
        }
        WeightedAlphabet::new(trees.iter().map(|t| (t.clone(), tree_weight(t, gamma))).collect())
    }

    pub fn letters(&self) -> &[Tree] {
        &self.letters
    }

    pub fn weight_of(&self, t: &Tree) -> Option<f64> {
        self.letters.binary_search(t).ok().map(|i| self.weights[i])
    }

    /// Smallest letter weight; the scale against which word weights are
    /// normalised.
    pub fn gamma_hat(&self) -> f64 {
        self.gamma_hat
    }

    pub fn word_weight(&self, w: &Word) -> Result<f64> {
        let mut acc = 0.0;
        for t in w.letters() {
            acc += self.weight_of(t).ok_or_else(|| Error::Inadmissible {
                message: format!("letter {t} not in alphabet"),
            })?;
        }
        Ok(acc)
    }

    /// Normalised weight: word weight divided by the smallest letter weight.
    pub fn omega(&self, w: &Word) -> Result<f64> {
        Ok(self.word_weight(w)? / self.gamma_hat)
    }

    /// Distinct sub-unit weights, ascending.
    fn scan_weights(&self) -> Vec<f64> {
        let mut ws: Vec<f64> =
            self.weights.iter().cloned().filter(|w| *w < 1.0 - RESONANCE_TOL).collect();
        ws.sort_by(|a, b| a.partial_cmp(b).expect("finite weights"));
        ws.dedup();
        ws
    }

    /// Letters excluded from the resonance scan (weight >= 1).
    pub fn lipschitz_letters(&self) -> Vec<Tree> {
        self.letters
            .iter()
            .zip(&self.weights)
            .filter(|(_, w)| **w >= 1.0 - RESONANCE_TOL)
            .map(|(t, _)| t.clone())
            .collect()
    }
}

/// Result of the non-resonance scan.
#[derive(Clone, Debug)]
pub struct AdmissibilityScan {
    pub admissible: bool,
    /// A multiset of weights summing to 1, when one exists in range.
    pub resonance: Option<Vec<(f64, u32)>>,
    /// Letters excluded from the scan because their weight is >= 1.
    pub skipped: Vec<Tree>,
}

/// Scans for resonances: multisets of sub-unit letter weights with
/// normalised total weight at most `n_omega` whose sum equals 1 (up to
/// [`RESONANCE_TOL`]). The alphabet is admissible when none exists.
pub fn lv_admissible(alpha: &WeightedAlphabet, n_omega: u32) -> AdmissibilityScan {
    let weights = alpha.scan_weights();
    let bound = alpha.gamma_hat() * n_omega as f64 + RESONANCE_TOL;
    let mut counts: Vec<u32> = vec![0; weights.len()];
    let mut resonance: Option<Vec<(f64, u32)>> = None;

    fn rec(
        weights: &[f64],
        from: usize,
        sum: f64,
        bound: f64,
        counts: &mut Vec<u32>,
        hit: &mut Option<Vec<(f64, u32)>>,
    ) {
        if hit.is_some() {
            return;
        }
        if sum > RESONANCE_TOL && (sum - 1.0).abs() <= RESONANCE_TOL {
            *hit = Some(
                weights
                    .iter()
                    .zip(counts.iter())
                    .filter(|(_, c)| **c > 0)
                    .map(|(w, c)| (*w, *c))
                    .collect(),
            );
            return;
        }
        for i in from..weights.len() {
            if sum + weights[i] > bound {
                continue;
            }
            counts[i] += 1;
            rec(weights, i, sum + weights[i], bound, counts, hit);
            counts[i] -= 1;
        }
    }
    rec(&weights, 0, 0.0, bound, &mut counts, &mut resonance);
    AdmissibilityScan {
        admissible: resonance.is_none(),
        resonance,
        skipped: alpha.lipschitz_letters(),
    }
}

/// Enumerates words over the alphabet with node count at most `max_nodes`,
/// in canonical order.
pub fn enumerate_words(letters: &[Tree], max_nodes: u32) -> Vec<Word> {
    let mut out = vec![Word::empty()];
    let mut frontier = vec![Word::empty()];
    loop {
        let mut next = Vec::new();
        for w in &frontier {
            for l in letters {
                if w.node_count() + l.size() <= max_nodes {
                    next.push(w.push(l.clone()));
                }
            }
        }
        if next.is_empty() {
            break;
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out.sort();
    out.dedup();
    out
}

/// First pair (u, v) of non-empty words (node counts summing to at most
/// `trunc`) violating the shuffle character property, with the defect size.
pub fn shuffle_character_defect<S: Scalar>(
    series: &WordSeries<S>,
    words: &[Word],
    trunc: u32,
    tol: f64,
) -> Option<((Word, Word), f64)> {
    for (i, u) in words.iter().enumerate() {
        if u.is_empty() {
            continue;
        }
        for v in &words[i..] {
            if v.is_empty() || u.node_count() + v.node_count() > trunc {
                continue;
            }
            let lhs = series.coeff(u).mul(&series.coeff(v));
            let mut rhs = S::zero();
            for (w, c) in shuffle(u, v).iter() {
                rhs = rhs.add(&series.coeff(w).mul(&S::from_q(c)));
            }
            let defect = lhs.sub(&rhs);
            let bad = if S::EXACT { !defect.is_zero() } else { defect.to_f64().abs() > tol };
            if bad {
                return Some(((u.clone(), v.clone()), defect.to_f64().abs()));
            }
        }
    }
    None
}

/// Checks unshuffle-primitivity: the reduced unshuffle coproduct of a
/// primitive element vanishes. Returns the first offending word pair.
pub fn primitivity_defect<S: Scalar>(
    x: &WordSeries<S>,
    tol: f64,
) -> Option<((Word, Word), f64)> {
    let mut defects: Comb<(Word, Word), S> = Comb::zero();
    for (w, c) in x.iter() {
        for ((l, r), q) in unshuffle_coproduct(w).iter() {
            if l.is_empty() || r.is_empty() {
                continue;
            }
            defects.add_term((l.clone(), r.clone()), c.mul(&S::from_q(q)));
        }
    }
    for ((l, r), v) in defects.iter() {
        let bad = if S::EXACT { !v.is_zero() } else { v.to_f64().abs() > tol };
        if bad {
            return Some(((l.clone(), r.clone()), v.to_f64().abs()));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::q_int;
    use crate::trees::{chain2, dot};

    fn w(letters: &[Tree]) -> Word {
        Word::from_letters(letters.to_vec())
    }

    #[test]
    fn shuffle_of_two_singles() {
        let a = dot(0);
        let b = dot(1);
        let sh = shuffle(&Word::single(a.clone()), &Word::single(b.clone()));
        assert_eq!(sh.coeff(&w(&[a.clone(), b.clone()])), q_int(1));
        assert_eq!(sh.coeff(&w(&[b, a])), q_int(1));
        assert_eq!(sh.len(), 2);
    }

    #[test]
    fn shuffle_ab_with_c_gives_three_interleavings() {
        let (a, b, c) = (dot(0), dot(1), chain2(1, 1));
        let sh = shuffle(&w(&[a.clone(), b.clone()]), &Word::single(c.clone()));
        assert_eq!(sh.coeff(&w(&[a.clone(), b.clone(), c.clone()])), q_int(1));
        assert_eq!(sh.coeff(&w(&[a.clone(), c.clone(), b.clone()])), q_int(1));
        assert_eq!(sh.coeff(&w(&[c, a, b])), q_int(1));
        assert_eq!(sh.len(), 3);
    }

    #[test]
    fn shuffle_with_repeated_letter_accumulates_multiplicity() {
        let a = dot(1);
        let sh = shuffle(&Word::single(a.clone()), &Word::single(a.clone()));
        assert_eq!(sh.coeff(&w(&[a.clone(), a])), q_int(2));
        assert_eq!(sh.len(), 1);
    }

    #[test]
    fn shuffle_matches_interleaving_oracle() {
        let u = w(&[dot(0), dot(1), dot(0)]);
        let v = w(&[dot(1), chain2(0, 1)]);
        assert_eq!(shuffle(&u, &v), crate::oracle::shuffle_by_interleavings(&u, &v));
    }

    #[test]
    fn deconcatenation_lists_all_splits() {
        let word = w(&[dot(0), dot(1)]);
        let splits = deconcatenations(&word);
        assert_eq!(splits.len(), 3);
        assert_eq!(splits[0].0, Word::empty());
        assert_eq!(splits[2].1, Word::empty());
    }

    #[test]
    fn unshuffle_is_adjoint_to_shuffle() {
        // <unshuffle(w), u (x) v> == <w, shuffle(u, v)> on a spot check.
        let u = w(&[dot(0)]);
        let v = w(&[dot(1), dot(0)]);
        for (word, c) in shuffle(&u, &v).iter() {
            let un = unshuffle_coproduct(word);
            assert_eq!(un.coeff(&(u.clone(), v.clone())), c.clone(), "failed at {word}");
        }
    }

    #[test]
    fn exp_at_truncation_two() {
        // exp(a + b) truncated at node count 2: the empty word, both
        // letters, and all four 2-letter words with coefficient 1/2.
        let a = dot(0);
        let b = dot(1);
        let mut x: WordComb = WordComb::zero();
        x.add_term(Word::single(a.clone()), q_int(1));
        x.add_term(Word::single(b.clone()), q_int(1));
        let e = concat_exp(&x, 2).unwrap();
        assert_eq!(e.coeff(&Word::empty()), q_int(1));
        assert_eq!(e.coeff(&Word::single(a.clone())), q_int(1));
        assert_eq!(e.coeff(&w(&[a.clone(), b.clone()])), q(1, 2));
        assert_eq!(e.coeff(&w(&[a.clone(), a.clone()])), q(1, 2));
        assert_eq!(e.coeff(&w(&[b.clone(), b])), q(1, 2));
        assert_eq!(e.len(), 7);
    }

    #[test]
    fn log_inverts_exp() {
        let mut x: WordComb = WordComb::zero();
        x.add_term(Word::single(dot(0)), q(1, 2));
        x.add_term(Word::single(dot(1)), q(-1, 3));
        x.add_term(w(&[dot(1), dot(1)]), q(2, 1));
        x.add_term(Word::single(chain2(1, 0)), q(5, 1));
        let e = concat_exp(&x, 4).unwrap();
        let back = concat_log(&e, 4).unwrap();
        assert_eq!(back, x);
    }

    #[test]
    fn exp_log_preconditions_are_enforced() {
        let g: WordComb = WordComb::basis(Word::single(dot(0)));
        assert!(concat_log(&g, 3).is_err());
        let x: WordComb = WordComb::basis(Word::empty());
        assert!(concat_exp(&x, 3).is_err());
    }

    #[test]
    fn exp_of_letter_supported_series_is_shuffle_character() {
        let mut x: WordComb = WordComb::zero();
        x.add_term(Word::single(dot(0)), q(1, 2));
        x.add_term(Word::single(dot(1)), q(-2, 1));
        let e = concat_exp(&x, 3).unwrap();
        let words = enumerate_words(&[dot(0), dot(1)], 3);
        assert!(shuffle_character_defect(&e, &words, 3, 0.0).is_none());
        // And the log is unshuffle-primitive by construction.
        assert!(primitivity_defect(&x, 0.0).is_none());
    }

    #[test]
    fn concat_antipode_inverts_group_likes() {
        let mut x: WordComb = WordComb::zero();
        x.add_term(Word::single(dot(0)), q(1, 3));
        x.add_term(Word::single(dot(1)), q(5, 2));
        let e = concat_exp(&x, 3).unwrap();
        let inv = concat_antipode(&e);
        let prod = concat_series(&e, &inv, 3);
        assert_eq!(prod, WordComb::basis(Word::empty()));
    }

    #[test]
    fn group_like_fails_for_non_exponential_series() {
        let mut g: WordComb = WordComb::basis(Word::empty());
        g.add_term(w(&[dot(0), dot(1)]), q_int(1));
        let words = enumerate_words(&[dot(0), dot(1)], 2);
        assert!(shuffle_character_defect(&g, &words, 2, 0.0).is_some());
    }

    #[test]
    fn zero_decorated_nodes_weigh_one() {
        assert_eq!(tree_weight(&dot(0), 0.24), 1.0);
        assert!((tree_weight(&dot(1), 0.24) - 0.24).abs() < 1e-15);
        // Size-2 tree with one 0-node: gamma*2 + (1-gamma).
        assert!((tree_weight(&chain2(1, 0), 0.25) - 1.25).abs() < 1e-15);
        let g = q(6, 25);
        assert_eq!(tree_weight_exact(&chain2(1, 1), &g), q(12, 25));
    }

    #[test]
    fn weights_point_three_and_point_seven_resonate() {
        let alpha = WeightedAlphabet::new(vec![(dot(0), 0.3), (dot(1), 0.7)]).unwrap();
        let scan = lv_admissible(&alpha, 4);
        assert!(!scan.admissible);
        let hit = scan.resonance.unwrap();
        let total: f64 = hit.iter().map(|(w, c)| w * *c as f64).sum();
        assert!((total - 1.0).abs() <= RESONANCE_TOL);
    }

    #[test]
    fn default_gamma_alphabet_is_admissible() {
        let trees = crate::trees::enumerate_trees(4, 1).unwrap();
        let alpha = WeightedAlphabet::from_trees(&trees, 0.24).unwrap();
        let scan = lv_admissible(&alpha, 4);
        assert!(scan.admissible, "resonance: {:?}", scan.resonance);
        // The 0-decorated single node has weight 1 and sits out of the scan.
        assert!(scan.skipped.contains(&dot(0)));
    }

    #[test]
    fn quarter_gamma_resonates_at_level_four() {
        let alpha = WeightedAlphabet::new(vec![(dot(1), 0.25)]).unwrap();
        let scan = lv_admissible(&alpha, 4);
        assert!(!scan.admissible);
    }

    #[test]
    fn enumerate_words_counts_by_node_budget() {
        // Letters: two single nodes. Words of node count <= 2:
        // e, two singles, four pairs.
        let words = enumerate_words(&[dot(0), dot(1)], 2);
        assert_eq!(words.len(), 7);
        // Budget counts nodes, not letters: a size-2 letter fills it.
        let words = enumerate_words(&[dot(1), chain2(1, 1)], 2);
        assert_eq!(words.len(), 4);
    }
}
