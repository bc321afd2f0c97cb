//! Maps from the forest Hopf algebra into word algebras.
//!
//! [`tree_to_words`] unpacks a tree into words whose letters are trees: each
//! coproduct term whose right slot is a single tree contributes that tree as
//! a new last letter, recursively. It is a Hopf algebra morphism from
//! forests (with the pruning coproduct) to words with shuffle product and
//! deconcatenation, and on a tree t it reads
//!
//!   tree_to_words(t) = (t) + lower order,
//!
//! where (t) is the single-letter word and every letter in the lower-order
//! words has strictly fewer nodes than t. [`arborify`] is the analogous map
//! that only keeps single-node letters.

use crate::comb::Comb;
use crate::forest_hopf::{coproduct_tree, ForestComb};
use crate::scalar::{q_int, Q};
use crate::trees::{Forest, Tree};
use crate::word_hopf::{shuffle_series, Word, WordComb};
use std::cell::RefCell;
use std::collections::HashMap;

thread_local! {
    static TTW_MEMO: RefCell<HashMap<Tree, WordComb>> = RefCell::new(HashMap::new());
    static ARB_MEMO: RefCell<HashMap<Tree, WordComb>> = RefCell::new(HashMap::new());
}

fn unpack(t: &Tree, single_nodes_only: bool, memo: &'static std::thread::LocalKey<RefCell<HashMap<Tree, WordComb>>>) -> WordComb {
    if let Some(hit) = memo.with(|m| m.borrow().get(t).cloned()) {
        return hit;
    }
    let mut out = WordComb::zero();
    for ((left, right), coeff) in coproduct_tree(t).iter() {
        let Some(letter) = right.as_single_tree() else { continue };
        if single_nodes_only && letter.size() != 1 {
            continue;
        }
        // The left slot of a tree coproduct is the unit or a single tree.
        let prefix = match left.as_single_tree() {
            None => {
                debug_assert!(left.is_empty(), "left slot must be the unit or one tree");
                WordComb::basis(Word::empty())
            }
            Some(sub) => unpack(sub, single_nodes_only, memo),
        };
        for (w, c) in prefix.iter() {
            out.add_term(w.push(letter.clone()), c * coeff);
        }
    }
    memo.with(|m| m.borrow_mut().insert(t.clone(), out.clone()));
    out
}

/// Word expansion of a single tree.
pub fn tree_to_words(t: &Tree) -> WordComb {
    unpack(t, false, &TTW_MEMO)
}

/// The part of [`tree_to_words`] below the leading single-letter word.
/// All letters appearing here have fewer nodes than `t`.
pub fn tree_to_words_lower(t: &Tree) -> WordComb {
    let mut out = tree_to_words(t);
    let top = Word::single(t.clone());
    debug_assert_eq!(out.coeff(&top), q_int(1));
    out.add_term(top, q_int(-1));
    debug_assert!(
        out.keys().all(|w| w.letters().iter().all(|l| l.size() < t.size())),
        "lower-order words must use strictly smaller letters"
    );
    out
}

/// Multiplicative (shuffle) extension to forests.
pub fn forest_to_words(f: &Forest) -> WordComb {
    let mut out = WordComb::basis(Word::empty());
    for t in f.expanded() {
        out = shuffle_series(&out, &tree_to_words(t), None);
    }
    out
}

pub fn comb_to_words(c: &ForestComb) -> WordComb {
    c.flat_map(forest_to_words)
}

/// Arborification: like [`tree_to_words`] but keeping only the coproduct
/// terms whose right slot is a single node, so letters are single nodes.
pub fn arborify(t: &Tree) -> WordComb {
    unpack(t, true, &ARB_MEMO)
}

pub fn arborify_forest(f: &Forest) -> WordComb {
    let mut out = WordComb::basis(Word::empty());
    for t in f.expanded() {
        out = shuffle_series(&out, &arborify(t), None);
    }
    out
}

/// First tree (size at most `n_max`) where the morphism property
///
///   deconcat(tree_to_words(t)) == (tree_to_words (x) tree_to_words)(coproduct(t))
///
/// fails, with a printable defect. None when the property holds throughout.
pub fn morphism_defect(n_max: u32, d: u8) -> Option<(Tree, String)> {
    for t in crate::trees::enumerate_trees(n_max, d).expect("enumeration within cap") {
        let mut lhs: Comb<(Word, Word), Q> = Comb::zero();
        for (w, c) in tree_to_words(&t).iter() {
            for ((a, b), q) in crate::word_hopf::deconcat_coproduct(w).iter() {
                lhs.add_term((a.clone(), b.clone()), c * q);
            }
        }
        let mut rhs: Comb<(Word, Word), Q> = Comb::zero();
        for ((l, r), c) in coproduct_tree(&t).iter() {
            for (wl, cl) in forest_to_words(l).iter() {
                for (wr, cr) in forest_to_words(r).iter() {
                    rhs.add_term((wl.clone(), wr.clone()), c * cl * cr);
                }
            }
        }
        let defect = lhs.sub(&rhs);
        if !defect.is_zero() {
            return Some((t, format!("{defect:?}")));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::q_int;
    use crate::trees::{chain2, chain3, dot, Forest, Tree};

    fn w(letters: &[Tree]) -> Word {
        Word::from_letters(letters.to_vec())
    }

    #[test]
    fn single_node_becomes_its_letter() {
        let t = dot(1);
        assert_eq!(tree_to_words(&t), WordComb::basis(Word::single(t.clone())));
        assert_eq!(arborify(&t), WordComb::basis(Word::single(t)));
    }

    #[test]
    fn two_chain_unpacks_into_top_letter_plus_root_first_word() {
        let t = chain2(1, 0);
        let out = tree_to_words(&t);
        assert_eq!(out.coeff(&Word::single(t.clone())), q_int(1));
        assert_eq!(out.coeff(&w(&[dot(1), dot(0)])), q_int(1));
        assert_eq!(out.len(), 2);
    }

    #[test]
    fn arborification_of_two_chain_is_the_root_first_word() {
        let out = arborify(&chain2(1, 0));
        assert_eq!(out, WordComb::basis(w(&[dot(1), dot(0)])));
    }

    #[test]
    fn arborification_of_three_chain() {
        let out = arborify(&chain3(1, 0, 1));
        assert_eq!(out, WordComb::basis(w(&[dot(1), dot(0), dot(1)])));
    }

    #[test]
    fn cherry_unpacks_with_multiplicity_two() {
        // B+_1(dot1 dot1): (t) + 2 (chain, dot1) + 2 (dot1, dot1, dot1).
        let t = Tree::b_plus(1, &Forest::from_trees([dot(1), dot(1)]));
        let out = tree_to_words(&t);
        assert_eq!(out.coeff(&Word::single(t.clone())), q_int(1));
        assert_eq!(out.coeff(&w(&[chain2(1, 1), dot(1)])), q_int(2));
        assert_eq!(out.coeff(&w(&[dot(1), dot(1), dot(1)])), q_int(2));
        assert_eq!(out.len(), 3);
        // The two-tree right slot of the coproduct contributes nothing: the
        // word (dot1, dot1 dot1-as-letter) does not appear.
        let arb = arborify(&t);
        assert_eq!(arb.coeff(&w(&[dot(1), dot(1), dot(1)])), q_int(2));
        assert_eq!(arb.len(), 1);
    }

    #[test]
    fn lower_part_strips_the_leading_letter() {
        let t = chain2(1, 1);
        let lower = tree_to_words_lower(&t);
        assert_eq!(lower, WordComb::basis(w(&[dot(1), dot(1)])));
    }

    #[test]
    fn shuffle_morphism_into_words_up_to_size_four() {
        assert_eq!(morphism_defect(4, 1), None);
    }

    #[test]
    fn forest_extension_is_shuffle_multiplicative() {
        let f = Forest::from_trees([dot(0), dot(1)]);
        let out = forest_to_words(&f);
        assert_eq!(out.coeff(&w(&[dot(0), dot(1)])), q_int(1));
        assert_eq!(out.coeff(&w(&[dot(1), dot(0)])), q_int(1));
        assert_eq!(out.len(), 2);
    }
}
