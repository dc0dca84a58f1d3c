//! Row-compressed sparse operators with exact rational entries.
//!
//! Entries are stored as integer numerators over one common denominator and
//! a homogeneous power of the grid spacing: `value = num / den · h^{-order}`.
//! Products and sums are carried out in integers, so a composite that is
//! zero as a lattice identity comes out with no entries at all.

use std::collections::BTreeMap;
use std::io::Write;

use faer::sparse::{SparseColMat, Triplet};
use num_integer::Integer;

use crate::error::{LabError, Result};
use crate::stencil::Q;

#[derive(Clone, Debug, PartialEq)]
pub struct SparseOp {
    pub rows: usize,
    pub cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    num: Vec<i64>,
    den: i64,
    order: i32,
    h: f64,
}

impl SparseOp {
    /// Builds from `(row, col, value)` triplets, summing duplicates.
    pub fn from_entries(
        rows: usize,
        cols: usize,
        entries: impl IntoIterator<Item = (usize, usize, Q)>,
        order: i32,
        h: f64,
    ) -> SparseOp {
        let mut per_row: Vec<BTreeMap<usize, Q>> = vec![BTreeMap::new(); rows];
        for (r, c, v) in entries {
            assert!(r < rows && c < cols, "entry ({r},{c}) outside {rows}x{cols}");
            *per_row[r].entry(c).or_insert_with(|| Q::from_integer(0)) += v;
        }
        let den = per_row
            .iter()
            .flat_map(|m| m.values())
            .filter(|v| *v.numer() != 0)
            .fold(1i64, |acc, v| acc.lcm(v.denom()));
        let mut indptr = Vec::with_capacity(rows + 1);
        let mut indices = Vec::new();
        let mut num = Vec::new();
        indptr.push(0);
        for m in per_row {
            for (c, v) in m {
                if *v.numer() != 0 {
                    indices.push(c);
                    num.push(v.numer() * (den / v.denom()));
                }
            }
            indptr.push(indices.len());
        }
        SparseOp { rows, cols, indptr, indices, num, den, order, h }.normalized()
    }

    fn from_rows(rows: usize, cols: usize, row_maps: Vec<BTreeMap<usize, i64>>, den: i64, order: i32, h: f64) -> SparseOp {
        let mut indptr = Vec::with_capacity(rows + 1);
        let mut indices = Vec::new();
        let mut num = Vec::new();
        indptr.push(0);
        for m in row_maps {
            for (c, v) in m {
                if v != 0 {
                    indices.push(c);
                    num.push(v);
                }
            }
            indptr.push(indices.len());
        }
        SparseOp { rows, cols, indptr, indices, num, den, order, h }.normalized()
    }

    fn normalized(mut self) -> SparseOp {
        let g = self.num.iter().fold(self.den, |acc, v| acc.gcd(v));
        if g > 1 {
            self.den /= g;
            for v in &mut self.num {
                *v /= g;
            }
        }
        self
    }

    pub fn zeros(rows: usize, cols: usize, order: i32, h: f64) -> SparseOp {
        SparseOp { rows, cols, indptr: vec![0; rows + 1], indices: vec![], num: vec![], den: 1, order, h }
    }

    pub fn identity(n: usize, h: f64) -> SparseOp {
        SparseOp::from_entries(n, n, (0..n).map(|i| (i, i, Q::from_integer(1))), 0, h)
    }

    /// Pointwise operator `m ⊗ I_sites` in component-slowest layout.
    pub fn pointwise(m: &[Vec<Q>], sites: usize, h: f64) -> SparseOp {
        let rows = m.len();
        let cols = m.first().map_or(0, |r| r.len());
        let mut entries = Vec::new();
        for (r, row) in m.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                if *v.numer() != 0 {
                    entries.extend((0..sites).map(|s| (r * sites + s, c * sites + s, *v)));
                }
            }
        }
        SparseOp::from_entries(rows * sites, cols * sites, entries, 0, h)
    }

    pub fn nnz(&self) -> usize {
        self.num.len()
    }

    pub fn order(&self) -> i32 {
        self.order
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn den(&self) -> i64 {
        self.den
    }

    /// Factor turning a numerator into a value.
    pub fn unit(&self) -> f64 {
        self.h.powi(-self.order) / self.den as f64
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_empty()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, i64)> + '_ {
        let (a, b) = (self.indptr[r], self.indptr[r + 1]);
        self.indices[a..b].iter().copied().zip(self.num[a..b].iter().copied())
    }

    pub fn row_len(&self, r: usize) -> usize {
        self.indptr[r + 1] - self.indptr[r]
    }

    /// Floating point triplets.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let u = self.unit();
        let mut out = Vec::with_capacity(self.nnz());
        for r in 0..self.rows {
            for (c, v) in self.row(r) {
                out.push((r, c, v as f64 * u));
            }
        }
        out
    }

    pub fn rational(&self, r: usize, c: usize) -> Q {
        self.row(r)
            .find(|(cc, _)| *cc == c)
            .map_or(Q::from_integer(0), |(_, v)| Q::new(v, self.den))
    }

    pub fn max_abs(&self) -> f64 {
        self.num.iter().fold(0i64, |m, v| m.max(v.abs())) as f64 * self.unit().abs()
    }

    /// `self ∘ rhs`, exact.
    pub fn compose(&self, rhs: &SparseOp) -> SparseOp {
        assert_eq!(self.cols, rhs.rows, "operator shapes do not compose");
        let mut row_maps = Vec::with_capacity(self.rows);
        for r in 0..self.rows {
            let mut acc: BTreeMap<usize, i64> = BTreeMap::new();
            for (k, a) in self.row(r) {
                for (c, b) in rhs.row(k) {
                    let v = acc.entry(c).or_insert(0);
                    *v = v.checked_add(a.checked_mul(b).expect("numerator overflow")).expect("numerator overflow");
                }
            }
            row_maps.push(acc);
        }
        let h = if self.order != 0 { self.h } else { rhs.h };
        SparseOp::from_rows(self.rows, rhs.cols, row_maps, self.den * rhs.den, self.order + rhs.order, h)
    }

    pub fn scale(&self, s: Q) -> SparseOp {
        let mut out = self.clone();
        for v in &mut out.num {
            *v *= s.numer();
        }
        out.den *= s.denom();
        if *s.numer() == 0 {
            return SparseOp::zeros(self.rows, self.cols, self.order, self.h);
        }
        out.normalized()
    }

    pub fn add(&self, other: &SparseOp) -> Result<SparseOp> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(LabError::ShapeMismatch(format!(
                "{}x{} + {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        if self.is_zero() {
            return Ok(other.clone());
        }
        if other.is_zero() {
            return Ok(self.clone());
        }
        if self.order != other.order {
            return Err(LabError::ShapeMismatch(format!("orders {} and {}", self.order, other.order)));
        }
        let den = self.den.lcm(&other.den);
        let (fa, fb) = (den / self.den, den / other.den);
        let mut row_maps = Vec::with_capacity(self.rows);
        for r in 0..self.rows {
            let mut acc: BTreeMap<usize, i64> = BTreeMap::new();
            for (c, v) in self.row(r) {
                *acc.entry(c).or_insert(0) += v * fa;
            }
            for (c, v) in other.row(r) {
                *acc.entry(c).or_insert(0) += v * fb;
            }
            row_maps.push(acc);
        }
        Ok(SparseOp::from_rows(self.rows, self.cols, row_maps, den, self.order, self.h))
    }

    pub fn sub(&self, other: &SparseOp) -> Result<SparseOp> {
        self.add(&other.scale(Q::from_integer(-1)))
    }

    pub fn transpose(&self) -> SparseOp {
        let mut row_maps: Vec<BTreeMap<usize, i64>> = vec![BTreeMap::new(); self.cols];
        for r in 0..self.rows {
            for (c, v) in self.row(r) {
                row_maps[c].insert(r, v);
            }
        }
        SparseOp::from_rows(self.cols, self.rows, row_maps, self.den, self.order, self.h)
    }

    /// Row and column selection; `rows[i]` becomes row `i`.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> SparseOp {
        let mut col_map = vec![usize::MAX; self.cols];
        for (j, &c) in cols.iter().enumerate() {
            col_map[c] = j;
        }
        let row_maps = rows
            .iter()
            .map(|&r| {
                self.row(r)
                    .filter_map(|(c, v)| (col_map[c] != usize::MAX).then(|| (col_map[c], v)))
                    .collect::<BTreeMap<_, _>>()
            })
            .collect();
        SparseOp::from_rows(rows.len(), cols.len(), row_maps, self.den, self.order, self.h)
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        let u = self.unit();
        (0..self.rows)
            .map(|r| self.row(r).map(|(c, v)| v as f64 * x[c]).sum::<f64>() * u)
            .collect()
    }

    pub fn apply_transpose(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.rows);
        let u = self.unit();
        let mut out = vec![0.0; self.cols];
        for (r, yr) in y.iter().enumerate() {
            for (c, v) in self.row(r) {
                out[c] += v as f64 * yr;
            }
        }
        out.iter_mut().for_each(|v| *v *= u);
        out
    }

    pub fn to_faer(&self) -> SparseColMat<usize, f64> {
        let trip: Vec<_> = self.triplets().into_iter().map(|(r, c, v)| Triplet::new(r, c, v)).collect();
        SparseColMat::try_new_from_triplets(self.rows, self.cols, &trip).expect("valid triplets")
    }

    pub fn to_dense(&self) -> faer::Mat<f64> {
        let mut m = faer::Mat::zeros(self.rows, self.cols);
        for (r, c, v) in self.triplets() {
            m[(r, c)] = v;
        }
        m
    }

    /// Text export: `sparseop rows cols nnz` then `row col value` lines.
    pub fn write_triplets<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "sparseop {} {} {}", self.rows, self.cols, self.nnz())?;
        for (r, c, v) in self.triplets() {
            writeln!(w, "{r} {c} {v:e}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Q {
        Q::new(n, d)
    }

    #[test]
    fn duplicates_sum_and_zeros_vanish() {
        let a = SparseOp::from_entries(2, 2, vec![(0, 0, q(1, 2)), (0, 0, q(1, 2)), (1, 1, q(1, 3)), (1, 1, q(-1, 3))], 0, 1.0);
        assert_eq!(a.nnz(), 1);
        assert_eq!(a.rational(0, 0), q(1, 1));
    }

    #[test]
    fn composition_is_exact() {
        let a = SparseOp::from_entries(1, 2, vec![(0, 0, q(1, 3)), (0, 1, q(1, 3))], 1, 0.5);
        let b = SparseOp::from_entries(2, 1, vec![(0, 0, q(3, 1)), (1, 0, q(-3, 1))], 1, 0.5);
        let ab = a.compose(&b);
        assert!(ab.is_zero());
        assert_eq!(ab.order(), 2);
        let ba = b.compose(&a);
        assert_eq!(ba.rational(1, 0), q(-1, 1));
        assert_eq!(ba.max_abs(), 4.0);
    }

    #[test]
    fn select_and_transpose() {
        let a = SparseOp::from_entries(3, 3, vec![(0, 1, q(2, 1)), (2, 0, q(5, 7)), (1, 2, q(1, 1))], 0, 1.0);
        let t = a.transpose();
        assert_eq!(t.rational(1, 0), q(2, 1));
        assert_eq!(t.transpose(), a);
        let s = a.select(&[2, 0], &[0, 1]);
        assert_eq!(s.rational(0, 0), q(5, 7));
        assert_eq!(s.rational(1, 1), q(2, 1));
        assert_eq!(s.nnz(), 2);
        let y = a.apply(&[1.0, 1.0, 1.0]);
        assert!((y[2] - 5.0 / 7.0).abs() < 1e-15);
        let mut buf = Vec::new();
        a.write_triplets(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("sparseop 3 3 3\n"));
    }
}
