//! Dense exact-rational matrices and an incremental row space.
//!
//! Just enough linear algebra for change-of-basis work and rank audits:
//! Gauss-Jordan over `Q` with exact pivots. Sizes stay in the hundreds,
//! so no fraction-free or sparse tricks are attempted.

use num::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::Q;

#[derive(Clone, PartialEq, Eq)]
pub struct QMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Q>,
}

impl QMatrix {
    pub fn zeros(rows: usize, cols: usize) -> QMatrix {
        QMatrix { rows, cols, data: vec![Q::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> QMatrix {
        let mut m = QMatrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Q::one());
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &Q {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, value: Q) {
        self.data[r * self.cols + c] = value;
    }

    pub fn add_to(&mut self, r: usize, c: usize, delta: &Q) {
        let cell = &mut self.data[r * self.cols + c];
        *cell = &*cell + delta;
    }

    pub fn transpose(&self) -> QMatrix {
        let mut out = QMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(c, r, self.get(r, c).clone());
            }
        }
        out
    }

    pub fn mul(&self, other: &QMatrix) -> Result<QMatrix> {
        if self.cols != other.rows {
            return Err(Error::precondition(format!(
                "matrix product shape mismatch: {}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = QMatrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a.is_zero() {
                    continue;
                }
                for c in 0..other.cols {
                    let b = other.get(k, c);
                    if !b.is_zero() {
                        out.add_to(r, c, &(a * b));
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[Q]) -> Result<Vec<Q>> {
        if v.len() != self.cols {
            return Err(Error::precondition(format!(
                "matrix-vector shape mismatch: {}x{} times {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        let mut out = vec![Q::zero(); self.rows];
        for r in 0..self.rows {
            let mut acc = Q::zero();
            for c in 0..self.cols {
                let a = self.get(r, c);
                if !a.is_zero() && !v[c].is_zero() {
                    acc += a * &v[c];
                }
            }
            out[r] = acc;
        }
        Ok(out)
    }

    pub fn is_identity(&self) -> bool {
        if self.rows != self.cols {
            return false;
        }
        for r in 0..self.rows {
            for c in 0..self.cols {
                let want = r == c;
                let cell = self.get(r, c);
                if want != cell.is_one() && (want || !cell.is_zero()) {
                    return false;
                }
            }
        }
        true
    }

    pub fn rank(&self) -> usize {
        let mut space = RowSpace::new(self.cols);
        for r in 0..self.rows {
            let row: Vec<Q> = (0..self.cols).map(|c| self.get(r, c).clone()).collect();
            space.insert(row);
        }
        space.rank()
    }

    /// Gauss-Jordan inverse; `Precondition` error on a singular matrix.
    pub fn inverse(&self) -> Result<QMatrix> {
        if self.rows != self.cols {
            return Err(Error::precondition("inverse of a non-square matrix"));
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = QMatrix::identity(n);
        for col in 0..n {
            let pivot_row = (col..n)
                .find(|&r| !a.get(r, col).is_zero())
                .ok_or_else(|| Error::precondition("singular matrix"))?;
            if pivot_row != col {
                for c in 0..n {
                    a.data.swap(pivot_row * n + c, col * n + c);
                    inv.data.swap(pivot_row * n + c, col * n + c);
                }
            }
            let pivot = a.get(col, col).clone();
            let pivot_inv = Q::one() / pivot;
            for c in 0..n {
                let v = a.get(col, c) * &pivot_inv;
                a.set(col, c, v);
                let v = inv.get(col, c) * &pivot_inv;
                inv.set(col, c, v);
            }
            for r in 0..n {
                if r == col || a.get(r, col).is_zero() {
                    continue;
                }
                let factor = a.get(r, col).clone();
                for c in 0..n {
                    let v = a.get(r, c) - &factor * a.get(col, c);
                    a.set(r, c, v);
                    let v = inv.get(r, c) - &factor * inv.get(col, c);
                    inv.set(r, c, v);
                }
            }
        }
        Ok(inv)
    }
}

impl std::fmt::Debug for QMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "QMatrix {}x{}", self.rows, self.cols)?;
        for r in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|c| self.get(r, c).to_string()).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

/// Row space under incremental reduced elimination.
///
/// Rows are kept reduced against each other; `insert` reports whether the
/// rank grew, which is exactly what a greedy basis completion needs.
pub struct RowSpace {
    cols: usize,
    /// Sorted by pivot column; each row is normalized to pivot 1 and reduced
    /// against all previously stored pivots.
    rows: Vec<(usize, Vec<Q>)>,
}

impl RowSpace {
    pub fn new(cols: usize) -> RowSpace {
        RowSpace { cols, rows: Vec::new() }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Residual of `v` after eliminating all stored pivots.
    pub fn reduce(&self, v: &[Q]) -> Vec<Q> {
        assert_eq!(v.len(), self.cols, "row length mismatch");
        let mut out = v.to_vec();
        for (pivot, row) in &self.rows {
            if out[*pivot].is_zero() {
                continue;
            }
            let factor = out[*pivot].clone();
            for c in *pivot..self.cols {
                let v = &out[c] - &factor * &row[c];
                out[c] = v;
            }
        }
        out
    }

    pub fn contains(&self, v: &[Q]) -> bool {
        self.reduce(v).iter().all(|x| x.is_zero())
    }

    /// Inserts `v` if it enlarges the span; returns whether it did.
    pub fn insert(&mut self, v: Vec<Q>) -> bool {
        let mut reduced = self.reduce(&v);
        let pivot = match reduced.iter().position(|x| !x.is_zero()) {
            Some(p) => p,
            None => return false,
        };
        let lead = reduced[pivot].clone();
        for c in pivot..self.cols {
            let v = &reduced[c] / &lead;
            reduced[c] = v;
        }
        // Back-substitute so stored rows stay mutually reduced.
        for (_, row) in self.rows.iter_mut() {
            if row[pivot].is_zero() {
                continue;
            }
            let factor = row[pivot].clone();
            for c in pivot..self.cols {
                let v = &row[c] - &factor * &reduced[c];
                row[c] = v;
            }
        }
        self.rows.push((pivot, reduced));
        self.rows.sort_by_key(|(p, _)| *p);
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::q;

    fn m2(entries: [[i64; 2]; 2]) -> QMatrix {
        let mut m = QMatrix::zeros(2, 2);
        for (r, row) in entries.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                m.set(r, c, q(*v, 1));
            }
        }
        m
    }

    #[test]
    fn inverse_round_trip() {
        let m = m2([[2, 1], [1, 1]]);
        let inv = m.inverse().unwrap();
        assert!(m.mul(&inv).unwrap().is_identity());
        assert!(inv.mul(&m).unwrap().is_identity());
    }

    #[test]
    fn singular_matrix_rejected() {
        let m = m2([[1, 2], [2, 4]]);
        assert!(m.inverse().is_err());
        assert_eq!(m.rank(), 1);
    }

    #[test]
    fn rank_and_row_space() {
        let mut space = RowSpace::new(3);
        assert!(space.insert(vec![q(1, 1), q(0, 1), q(1, 1)]));
        assert!(space.insert(vec![q(0, 1), q(1, 1), q(1, 1)]));
        assert!(!space.insert(vec![q(1, 1), q(1, 1), q(2, 1)]));
        assert_eq!(space.rank(), 2);
        assert!(space.contains(&[q(2, 1), q(-3, 1), q(-1, 1)]));
        assert!(!space.contains(&[q(0, 1), q(0, 1), q(1, 1)]));
    }

    #[test]
    fn mul_shapes_checked() {
        let m = QMatrix::zeros(2, 3);
        let n = QMatrix::zeros(2, 3);
        assert!(m.mul(&n).is_err());
        assert!(m.mul(&n.transpose()).is_ok());
    }
}
