//! Dense matrices over GF(2^w): rank, solve, inversion.
//!
//! Elimination is plain Gauss-Jordan with a deterministic pivot rule: in each
//! column the first nonzero entry at or below the current row is chosen.

use std::fmt;

use crate::error::{Error, Result};
use crate::gf::{FieldElem, FieldSpec};

#[derive(Clone, PartialEq, Eq)]
pub struct GfMatrix {
    rows: usize,
    cols: usize,
    data: Vec<FieldElem>,
    field: FieldSpec,
}

impl fmt::Debug for GfMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "GfMatrix {}x{} over {:?}", self.rows, self.cols, self.field)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", self.row(r))?;
        }
        Ok(())
    }
}

impl GfMatrix {
    pub fn zeros(field: &FieldSpec, rows: usize, cols: usize) -> GfMatrix {
        GfMatrix {
            rows,
            cols,
            data: vec![FieldElem::ZERO; rows * cols],
            field: field.clone(),
        }
    }

    pub fn identity(field: &FieldSpec, n: usize) -> GfMatrix {
        let mut m = GfMatrix::zeros(field, n, n);
        for i in 0..n {
            m.set(i, i, FieldElem::ONE);
        }
        m
    }

    pub fn from_fn(
        field: &FieldSpec,
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> FieldElem,
    ) -> GfMatrix {
        let mut m = GfMatrix::zeros(field, rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m.set(r, c, f(r, c));
            }
        }
        m
    }

    /// Builds a matrix from row vectors of raw values, checking they are in the field.
    pub fn from_rows(field: &FieldSpec, rows: &[Vec<u16>]) -> Result<GfMatrix> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut m = GfMatrix::zeros(field, rows.len(), cols);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::Dimension {
                    expected: format!("{cols} columns"),
                    actual: format!("{} in row {r}", row.len()),
                });
            }
            for (c, &v) in row.iter().enumerate() {
                m.set(r, c, field.elem(v as u32)?);
            }
        }
        Ok(m)
    }

    pub fn diag(field: &FieldSpec, d: &[FieldElem]) -> GfMatrix {
        let mut m = GfMatrix::zeros(field, d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> FieldElem {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: FieldElem) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[FieldElem] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<FieldElem> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| v.is_zero())
    }

    pub fn transpose(&self) -> GfMatrix {
        GfMatrix::from_fn(&self.field, self.cols, self.rows, |r, c| self.get(c, r))
    }

    pub fn select_columns(&self, cols: &[usize]) -> GfMatrix {
        GfMatrix::from_fn(&self.field, self.rows, cols.len(), |r, c| self.get(r, cols[c]))
    }

    pub fn select_rows(&self, rows: &[usize]) -> GfMatrix {
        GfMatrix::from_fn(&self.field, rows.len(), self.cols, |r, c| self.get(rows[r], c))
    }

    /// `[self | other]`.
    pub fn hstack(&self, other: &GfMatrix) -> Result<GfMatrix> {
        if self.rows != other.rows {
            return Err(Error::Dimension {
                expected: format!("{} rows", self.rows),
                actual: format!("{} rows", other.rows),
            });
        }
        Ok(GfMatrix::from_fn(
            &self.field,
            self.rows,
            self.cols + other.cols,
            |r, c| {
                if c < self.cols {
                    self.get(r, c)
                } else {
                    other.get(r, c - self.cols)
                }
            },
        ))
    }

    pub fn mul(&self, other: &GfMatrix) -> Result<GfMatrix> {
        if self.cols != other.rows {
            return Err(Error::Dimension {
                expected: format!("{} rows", self.cols),
                actual: format!("{} rows", other.rows),
            });
        }
        let mut out = GfMatrix::zeros(&self.field, self.rows, other.cols);
        for r in 0..self.rows {
            for i in 0..self.cols {
                let a = self.get(r, i);
                if a.is_zero() {
                    continue;
                }
                let (dst, src) = (r * out.cols, i * other.cols);
                let src_row = &other.data[src..src + other.cols];
                self.field
                    .mul_acc(&mut out.data[dst..dst + other.cols], src_row, a);
            }
        }
        Ok(out)
    }

    /// `self * v` for a column vector `v`.
    pub fn mul_vec(&self, v: &[FieldElem]) -> Result<Vec<FieldElem>> {
        if v.len() != self.cols {
            return Err(Error::Dimension {
                expected: format!("vector of length {}", self.cols),
                actual: format!("length {}", v.len()),
            });
        }
        Ok((0..self.rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(v)
                    .fold(FieldElem::ZERO, |acc, (&a, &b)| acc + self.field.mul(a, b))
            })
            .collect())
    }

    /// `v^T * self` for a row vector `v`.
    pub fn vec_mul(&self, v: &[FieldElem]) -> Result<Vec<FieldElem>> {
        if v.len() != self.rows {
            return Err(Error::Dimension {
                expected: format!("vector of length {}", self.rows),
                actual: format!("length {}", v.len()),
            });
        }
        let mut out = vec![FieldElem::ZERO; self.cols];
        for (r, &a) in v.iter().enumerate() {
            self.field.mul_acc(&mut out, self.row(r), a);
        }
        Ok(out)
    }

    /// Adds `c * row(src)` to `row(dst)`, starting at column `from`.
    fn add_scaled_row(&mut self, dst: usize, src: usize, c: FieldElem, from: usize) {
        let cols = self.cols;
        let (d, s) = if dst < src {
            let (lo, hi) = self.data.split_at_mut(src * cols);
            (&mut lo[dst * cols + from..(dst + 1) * cols], &hi[from..cols])
        } else {
            let (lo, hi) = self.data.split_at_mut(dst * cols);
            (&mut hi[from..cols], &lo[src * cols + from..(src + 1) * cols])
        };
        self.field.mul_acc(d, s, c);
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    fn scale_row(&mut self, r: usize, c: FieldElem, from: usize) {
        for v in &mut self.data[r * self.cols + from..(r + 1) * self.cols] {
            *v = self.field.mul(*v, c);
        }
    }

    /// In-place elimination over the first `pivot_cols` columns. With `full`
    /// the result is reduced row echelon form (pivots normalized to one and
    /// cleared above); otherwise only entries below pivots are cleared.
    /// Returns the pivot column of each pivot row, in order.
    fn row_reduce(&mut self, pivot_cols: usize, full: bool) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut prow = 0;
        for c in 0..pivot_cols.min(self.cols) {
            if prow == self.rows {
                break;
            }
            let Some(p) = (prow..self.rows).find(|&r| !self.get(r, c).is_zero()) else {
                continue;
            };
            self.swap_rows(prow, p);
            let inv = self
                .field
                .inv(self.get(prow, c))
                .expect("pivot entry is nonzero");
            self.scale_row(prow, inv, c);
            let start = if full { 0 } else { prow + 1 };
            for r in start..self.rows {
                if r == prow {
                    continue;
                }
                let e = self.get(r, c);
                if !e.is_zero() {
                    self.add_scaled_row(r, prow, e, c);
                }
            }
            pivots.push(c);
            prow += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        // Eliminating along the shorter dimension is cheaper.
        if self.cols > self.rows {
            self.transpose().rank()
        } else {
            self.clone().row_reduce(self.cols, false).len()
        }
    }

    /// Indices of a maximal set of linearly independent columns, chosen
    /// greedily from left to right.
    pub fn independent_columns(&self) -> Vec<usize> {
        self.clone().row_reduce(self.cols, false)
    }

    /// Solves `self * x = b`. Overdetermined systems are accepted when
    /// consistent and of full column rank.
    pub fn solve(&self, b: &[FieldElem]) -> Result<Vec<FieldElem>> {
        if b.len() != self.rows {
            return Err(Error::Dimension {
                expected: format!("right-hand side of length {}", self.rows),
                actual: format!("length {}", b.len()),
            });
        }
        let mut aug = GfMatrix::from_fn(&self.field, self.rows, self.cols + 1, |r, c| {
            if c < self.cols {
                self.get(r, c)
            } else {
                b[r]
            }
        });
        let pivots = aug.row_reduce(self.cols, true);
        let rank = pivots.len();
        if (rank..self.rows).any(|r| !aug.get(r, self.cols).is_zero()) {
            return Err(Error::Inconsistent);
        }
        if rank < self.cols {
            return Err(Error::NoUniqueSolution {
                rank,
                unknowns: self.cols,
            });
        }
        Ok((0..self.cols).map(|r| aug.get(r, self.cols)).collect())
    }

    /// Solves `self * X = B` column by column; same contract as [`Self::solve`].
    pub fn solve_matrix(&self, b: &GfMatrix) -> Result<GfMatrix> {
        if b.rows != self.rows {
            return Err(Error::Dimension {
                expected: format!("{} rows", self.rows),
                actual: format!("{} rows", b.rows),
            });
        }
        let mut aug = self.hstack(b)?;
        let pivots = aug.row_reduce(self.cols, true);
        let rank = pivots.len();
        for r in rank..self.rows {
            if aug.row(r)[self.cols..].iter().any(|v| !v.is_zero()) {
                return Err(Error::Inconsistent);
            }
        }
        if rank < self.cols {
            return Err(Error::NoUniqueSolution {
                rank,
                unknowns: self.cols,
            });
        }
        Ok(GfMatrix::from_fn(&self.field, self.cols, b.cols, |r, c| {
            aug.get(r, self.cols + c)
        }))
    }

    pub fn invert(&self) -> Result<GfMatrix> {
        if self.rows != self.cols {
            return Err(Error::Dimension {
                expected: "square matrix".into(),
                actual: format!("{}x{}", self.rows, self.cols),
            });
        }
        let n = self.rows;
        let mut aug = self.hstack(&GfMatrix::identity(&self.field, n))?;
        if aug.row_reduce(n, true).len() < n {
            return Err(Error::Singular);
        }
        Ok(GfMatrix::from_fn(&self.field, n, n, |r, c| aug.get(r, n + c)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, f: &FieldSpec, rows: usize, cols: usize) -> GfMatrix {
        let q = f.order() as u16;
        GfMatrix::from_fn(f, rows, cols, |_, _| FieldElem(rng.gen_range(0..q)))
    }

    fn random_invertible(rng: &mut ChaCha8Rng, f: &FieldSpec, n: usize) -> GfMatrix {
        loop {
            let m = random_matrix(rng, f, n, n);
            if m.rank() == n {
                return m;
            }
        }
    }

    fn random_vec(rng: &mut ChaCha8Rng, f: &FieldSpec, n: usize) -> Vec<FieldElem> {
        let q = f.order() as u16;
        (0..n).map(|_| FieldElem(rng.gen_range(0..q))).collect()
    }

    #[test]
    fn rank_of_identity_and_zero() {
        let f = FieldSpec::gf32();
        assert_eq!(GfMatrix::identity(&f, 7).rank(), 7);
        assert_eq!(GfMatrix::zeros(&f, 4, 6).rank(), 0);
        assert_eq!(GfMatrix::zeros(&f, 0, 0).rank(), 0);
    }

    #[test]
    fn solve_identity_returns_rhs() {
        let f = FieldSpec::gf32();
        let b: Vec<FieldElem> = (1..=5).map(FieldElem).collect();
        assert_eq!(GfMatrix::identity(&f, 5).solve(&b).unwrap(), b);
    }

    #[test]
    fn solve_round_trips_random_invertible() {
        let f = FieldSpec::gf32();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 1..12 {
            let a = random_invertible(&mut rng, &f, n);
            let x = random_vec(&mut rng, &f, n);
            let b = a.mul_vec(&x).unwrap();
            assert_eq!(a.solve(&b).unwrap(), x);
        }
    }

    #[test]
    fn solve_rank_deficient_reports_rank() {
        let f = FieldSpec::gf32();
        let a = GfMatrix::from_rows(&f, &[vec![1, 2], vec![2, 4]]).unwrap();
        // second row is 2 * first row
        assert_eq!(f.mul(FieldElem(2), FieldElem(2)), FieldElem(4));
        let b = a.mul_vec(&[FieldElem(3), FieldElem(5)]).unwrap();
        match a.solve(&b) {
            Err(Error::NoUniqueSolution { rank, unknowns }) => {
                assert_eq!((rank, unknowns), (1, 2));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn solve_inconsistent_overdetermined() {
        let f = FieldSpec::gf32();
        let a = GfMatrix::from_rows(&f, &[vec![1, 0], vec![0, 1], vec![1, 1]]).unwrap();
        let ok = a.solve(&[FieldElem(3), FieldElem(5), FieldElem(6)]).unwrap();
        assert_eq!(ok, vec![FieldElem(3), FieldElem(5)]);
        assert!(matches!(
            a.solve(&[FieldElem(3), FieldElem(5), FieldElem(7)]),
            Err(Error::Inconsistent)
        ));
    }

    #[test]
    fn invert_identity_diag_and_involution() {
        let f = FieldSpec::gf32();
        let i = GfMatrix::identity(&f, 6);
        assert_eq!(i.invert().unwrap(), i);

        let d: Vec<FieldElem> = (1..=6).map(FieldElem).collect();
        let dinv: Vec<FieldElem> = d.iter().map(|&v| f.inv(v).unwrap()).collect();
        assert_eq!(GfMatrix::diag(&f, &d).invert().unwrap(), GfMatrix::diag(&f, &dinv));

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in 1..10 {
            let a = random_invertible(&mut rng, &f, n);
            let ai = a.invert().unwrap();
            assert_eq!(a.mul(&ai).unwrap(), GfMatrix::identity(&f, n));
            assert_eq!(ai.invert().unwrap(), a);
        }
    }

    #[test]
    fn invert_singular_errors() {
        let f = FieldSpec::gf32();
        assert!(matches!(GfMatrix::zeros(&f, 3, 3).invert(), Err(Error::Singular)));
        assert!(matches!(GfMatrix::zeros(&f, 3, 2).invert(), Err(Error::Dimension { .. })));
    }

    #[test]
    fn independent_columns_span() {
        let f = FieldSpec::gf32();
        let a = GfMatrix::from_rows(&f, &[vec![1, 2, 0, 1], vec![0, 0, 1, 1]]).unwrap();
        assert_eq!(a.independent_columns(), vec![0, 2]);
    }

    proptest! {
        #[test]
        fn rank_equals_rank_of_transpose(seed in any::<u64>(), rows in 1usize..9, cols in 1usize..9) {
            let f = FieldSpec::new(3, 0b1011).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_matrix(&mut rng, &f, rows, cols);
            prop_assert_eq!(a.rank(), a.transpose().rank());
            prop_assert!(a.rank() <= rows.min(cols));
        }

        #[test]
        fn solve_agrees_with_inverse(seed in any::<u64>(), n in 1usize..10) {
            let f = FieldSpec::gf32();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_matrix(&mut rng, &f, n, n);
            let b = random_vec(&mut rng, &f, n);
            match a.invert() {
                Ok(ai) => prop_assert_eq!(a.solve(&b).unwrap(), ai.mul_vec(&b).unwrap()),
                Err(_) => prop_assert!(a.rank() < n),
            }
        }
    }
}
