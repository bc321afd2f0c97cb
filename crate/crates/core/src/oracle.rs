//! Reference implementations by direct enumeration.
//!
//! These are deliberately written against flat node/edge lists rather than
//! the structured recursions used elsewhere, so the two routes share no
//! logic. Tests compare them; keep it that way when editing.

use crate::comb::Comb;
use crate::forest_hopf::TensorComb;
use crate::scalar::q_int;
use crate::trees::{Decoration, Forest, Tree};
use crate::word_hopf::{Word, WordComb};

/// Coproduct of a tree by enumerating admissible edge cuts.
///
/// A cut is a set of edges no two of which lie on a common root path.
/// Cutting detaches the subtrees below the cut edges (right slot) and keeps
/// the part containing the root (left slot). The unit term 1 (x) t is added
/// separately.
pub fn coproduct_by_cuts(t: &Tree) -> TensorComb {
    // Flatten: decorations, parents, in depth-first order (0 = root).
    let mut decs: Vec<Decoration> = Vec::new();
    let mut parent: Vec<Option<usize>> = Vec::new();
    fn flatten(t: &Tree, par: Option<usize>, decs: &mut Vec<Decoration>, parent: &mut Vec<Option<usize>>) {
        let idx = decs.len();
        decs.push(t.dec());
        parent.push(par);
        for c in t.children() {
            flatten(c, Some(idx), decs, parent);
        }
    }
    flatten(t, None, &mut decs, &mut parent);
    let n = decs.len();
    assert!(n <= 24, "cut enumeration is exponential; {n} nodes is past the supported range");

    let is_ancestor = |a: usize, mut b: usize| -> bool {
        // Is a a strict ancestor of b?
        while let Some(p) = parent[b] {
            if p == a {
                return true;
            }
            b = p;
        }
        false
    };

    let mut out = TensorComb::term((Forest::empty(), Forest::single(t.clone())), q_int(1));
    // Edges are named by their child node 1..n.
    let edges: Vec<usize> = (1..n).collect();
    for mask in 0u32..(1 << edges.len()) {
        let cut: Vec<usize> = edges
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, &c)| c)
            .collect();
        let admissible = cut
            .iter()
            .all(|&c| cut.iter().all(|&d| c == d || !is_ancestor(c, d)));
        if !admissible {
            continue;
        }
        // Detached iff some ancestor-or-self edge is cut.
        let mut detached_under = vec![false; n];
        for x in 0..n {
            let mut y = x;
            loop {
                if cut.contains(&y) {
                    detached_under[x] = true;
                    break;
                }
                match parent[y] {
                    Some(p) => y = p,
                    None => break,
                }
            }
        }
        let rebuild = |root: usize, alive: &dyn Fn(usize) -> bool| -> Tree {
            fn go(
                root: usize,
                parent: &[Option<usize>],
                decs: &[Decoration],
                alive: &dyn Fn(usize) -> bool,
            ) -> Tree {
                let kids = (0..parent.len())
                    .filter(|&x| parent[x] == Some(root) && alive(x))
                    .map(|x| go(x, parent, decs, alive))
                    .collect();
                Tree::node(decs[root], kids)
            }
            go(root, &parent, &decs, alive)
        };
        let kept = rebuild(0, &|x| !detached_under[x]);
        let pruned: Forest = cut
            .iter()
            .map(|&c| {
                rebuild(c, &|x| {
                    // Alive within the branch below c: no cut edge strictly
                    // between x and c.
                    let mut y = x;
                    while y != c {
                        if cut.contains(&y) {
                            return false;
                        }
                        y = parent[y].expect("x lies below c");
                    }
                    true
                })
            })
            .collect();
        out.add_term((Forest::single(kept), pruned), q_int(1));
    }
    out
}

/// Shuffle product by enumerating interleavings: choose the positions of the
/// first word's letters among the result, order preserved in both factors.
pub fn shuffle_by_interleavings(u: &Word, v: &Word) -> WordComb {
    let m = u.len();
    let n = v.len();
    assert!(m + n <= 20, "interleaving enumeration is exponential");
    let mut out: WordComb = Comb::zero();
    for mask in 0u32..(1 << (m + n)) {
        if (mask.count_ones() as usize) != m {
            continue;
        }
        let mut ui = 0usize;
        let mut vi = 0usize;
        let mut letters = Vec::with_capacity(m + n);
        for pos in 0..(m + n) {
            if mask >> pos & 1 == 1 {
                letters.push(u.letters()[ui].clone());
                ui += 1;
            } else {
                letters.push(v.letters()[vi].clone());
                vi += 1;
            }
        }
        out.add_term(Word::from_letters(letters), q_int(1));
    }
    out
}
