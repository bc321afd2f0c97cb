//! Linear combinations with deterministic term order.
//!
//! `Comb<K, S>` is a finitely supported map from basis keys to scalars.
//! Zero coefficients are dropped eagerly, so equality of combinations is
//! equality as linear-algebra vectors.

use crate::scalar::Scalar;
use std::collections::BTreeMap;
use std::fmt;

#[derive(Clone, PartialEq, Eq)]
pub struct Comb<K: Ord + Clone, S: Scalar> {
    terms: BTreeMap<K, S>,
}

impl<K: Ord + Clone, S: Scalar> Default for Comb<K, S> {
    fn default() -> Self {
        Comb::zero()
    }
}

impl<K: Ord + Clone, S: Scalar> Comb<K, S> {
    pub fn zero() -> Self {
        Comb { terms: BTreeMap::new() }
    }

    pub fn term(key: K, coeff: S) -> Self {
        let mut c = Comb::zero();
        c.add_term(key, coeff);
        c
    }

    pub fn basis(key: K) -> Self {
        Comb::term(key, S::one())
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Coefficient of `key` (zero when absent).
    pub fn coeff(&self, key: &K) -> S {
        self.terms.get(key).cloned().unwrap_or_else(S::zero)
    }

    pub fn contains(&self, key: &K) -> bool {
        self.terms.contains_key(key)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&K, &S)> {
        self.terms.iter()
    }

    pub fn keys(&self) -> impl Iterator<Item = &K> {
        self.terms.keys()
    }

    pub fn into_iter_terms(self) -> impl Iterator<Item = (K, S)> {
        self.terms.into_iter()
    }

    pub fn add_term(&mut self, key: K, coeff: S) {
        if coeff.is_zero() {
            return;
        }
        match self.terms.entry(key) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(coeff);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let sum = e.get().add(&coeff);
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    pub fn add_scaled(&mut self, other: &Comb<K, S>, factor: &S) {
        if factor.is_zero() {
            return;
        }
        for (k, v) in other.iter() {
            self.add_term(k.clone(), v.mul(factor));
        }
    }

    pub fn add(&self, other: &Comb<K, S>) -> Comb<K, S> {
        let mut out = self.clone();
        out.add_scaled(other, &S::one());
        out
    }

    pub fn sub(&self, other: &Comb<K, S>) -> Comb<K, S> {
        let mut out = self.clone();
        out.add_scaled(other, &S::one().neg());
        out
    }

    pub fn scale(&self, factor: &S) -> Comb<K, S> {
        let mut out = Comb::zero();
        out.add_scaled(self, factor);
        out
    }

    pub fn neg(&self) -> Comb<K, S> {
        self.scale(&S::one().neg())
    }

    /// Applies a basis substitution and extends linearly.
    pub fn flat_map<K2: Ord + Clone>(&self, mut f: impl FnMut(&K) -> Comb<K2, S>) -> Comb<K2, S> {
        let mut out = Comb::zero();
        for (k, v) in self.iter() {
            out.add_scaled(&f(k), v);
        }
        out
    }

    pub fn map_keys<K2: Ord + Clone>(&self, mut f: impl FnMut(&K) -> K2) -> Comb<K2, S> {
        let mut out = Comb::zero();
        for (k, v) in self.iter() {
            out.add_term(f(k), v.clone());
        }
        out
    }

    pub fn retain(&mut self, mut keep: impl FnMut(&K, &S) -> bool) {
        self.terms.retain(|k, v| keep(k, v));
    }

    /// Largest coefficient magnitude, for defect reporting.
    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(|v| v.to_f64().abs()).fold(0.0, f64::max)
    }
}

impl<K: Ord + Clone + fmt::Debug, S: Scalar> fmt::Debug for Comb<K, S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (i, (k, v)) in self.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{}*({:?})", v.render(), k)?;
        }
        Ok(())
    }
}

impl<K: Ord + Clone, S: Scalar> FromIterator<(K, S)> for Comb<K, S> {
    fn from_iter<I: IntoIterator<Item = (K, S)>>(iter: I) -> Self {
        let mut out = Comb::zero();
        for (k, s) in iter {
            out.add_term(k, s);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{q, Q};

    #[test]
    fn cancelling_terms_vanish() {
        let mut c: Comb<u32, Q> = Comb::term(7, q(1, 2));
        c.add_term(7, q(-1, 2));
        assert!(c.is_zero());
        assert_eq!(c.coeff(&7), q(0, 1));
    }

    #[test]
    fn add_sub_scale_are_vector_operations() {
        let a: Comb<u32, Q> = [(1u32, q(1, 1)), (2, q(2, 1))].into_iter().collect();
        let b: Comb<u32, Q> = [(2u32, q(1, 1)), (3, q(5, 1))].into_iter().collect();
        let sum = a.add(&b);
        assert_eq!(sum.coeff(&2), q(3, 1));
        assert_eq!(sum.sub(&b), a);
        assert_eq!(a.scale(&q(0, 1)), Comb::zero());
        assert_eq!(a.neg().add(&a), Comb::zero());
    }

    #[test]
    fn flat_map_is_linear() {
        let a: Comb<u32, Q> = [(1u32, q(2, 1)), (2, q(1, 1))].into_iter().collect();
        // x -> x + (x+10)
        let image = a.flat_map(|k| {
            let mut c = Comb::basis(*k);
            c.add_term(k + 10, q(1, 1));
            c
        });
        assert_eq!(image.coeff(&11), q(2, 1));
        assert_eq!(image.coeff(&2), q(1, 1));
        assert_eq!(image.len(), 4);
    }
}
