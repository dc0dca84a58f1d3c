//! Exact symbolic operators built from commuting forward differences.
//!
//! A [`Poly`] is a polynomial with rational coefficients in the forward
//! differences `∂ᵢ = (τᵢ - 1)/h`, where `τᵢ` shifts by one lattice step. A
//! [`SymOp`] is a matrix of such polynomials and is the symbol of a
//! componentwise differential operator. Expanding the differences gives the
//! shift form [`Stencil`], used to assemble operators on arbitrary DOF sets
//! and to read off the staggering of the output components.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::Ratio;

pub type Q = Ratio<i64>;

pub fn q(n: i64) -> Q {
    Q::from_integer(n)
}

pub fn qf(n: i64, d: i64) -> Q {
    Q::new(n, d)
}

fn qzero() -> Q {
    q(0)
}

/// Polynomial in the forward differences, keyed by exponent.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Poly {
    terms: BTreeMap<[u8; 3], Q>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn constant(c: Q) -> Self {
        let mut p = Poly::zero();
        p.add_term([0, 0, 0], c);
        p
    }

    pub fn partial(axis: usize) -> Self {
        let mut e = [0u8; 3];
        e[axis] = 1;
        let mut p = Poly::zero();
        p.add_term(e, q(1));
        p
    }

    fn add_term(&mut self, e: [u8; 3], c: Q) {
        if c == qzero() {
            return;
        }
        let slot = self.terms.entry(e).or_insert_with(qzero);
        *slot += c;
        if *slot == qzero() {
            self.terms.remove(&e);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u8; 3], &Q)> {
        self.terms.iter()
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut r = self.clone();
        for (e, c) in &other.terms {
            r.add_term(*e, *c);
        }
        r
    }

    pub fn scale(&self, c: Q) -> Poly {
        let mut r = Poly::zero();
        for (e, v) in &self.terms {
            r.add_term(*e, *v * c);
        }
        r
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut r = Poly::zero();
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                r.add_term([e1[0] + e2[0], e1[1] + e2[1], e1[2] + e2[2]], *c1 * *c2);
            }
        }
        r
    }

    /// Degree of the terms, `None` for the zero polynomial or mixed degrees.
    pub fn homogeneous_degree(&self) -> Option<u32> {
        let mut degs = self.terms.keys().map(|e| e.iter().map(|&a| a as u32).sum::<u32>());
        let first = degs.next()?;
        degs.all(|d| d == first).then_some(first)
    }

    /// Expansion into shifts, without the `h` factors.
    pub fn to_stencil(&self) -> Stencil {
        let mut s = Stencil::zero();
        for (e, c) in &self.terms {
            let mut part = BTreeMap::new();
            part.insert([0i32; 3], *c);
            for axis in 0..3 {
                for _ in 0..e[axis] {
                    let mut next = BTreeMap::new();
                    for (k, v) in &part {
                        let mut up = *k;
                        up[axis] += 1;
                        *next.entry(up).or_insert_with(qzero) += *v;
                        *next.entry(*k).or_insert_with(qzero) -= *v;
                    }
                    part = next;
                }
            }
            for (k, v) in part {
                s.add_term(k, v);
            }
        }
        s
    }
}

/// Shift stencil: `(S u)(x) = Σ c_s u(x + s)`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Stencil {
    terms: BTreeMap<[i32; 3], Q>,
}

impl Stencil {
    pub fn zero() -> Self {
        Stencil::default()
    }

    fn add_term(&mut self, s: [i32; 3], c: Q) {
        if c == qzero() {
            return;
        }
        let slot = self.terms.entry(s).or_insert_with(qzero);
        *slot += c;
        if *slot == qzero() {
            self.terms.remove(&s);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[i32; 3], &Q)> {
        self.terms.iter()
    }

    pub fn add(&self, other: &Stencil) -> Stencil {
        let mut r = self.clone();
        for (s, c) in &other.terms {
            r.add_term(*s, *c);
        }
        r
    }

    pub fn scale(&self, c: Q) -> Stencil {
        let mut r = Stencil::zero();
        for (s, v) in &self.terms {
            r.add_term(*s, *v * c);
        }
        r
    }

    /// `s ↦ -s`, the shift part of a lattice transpose.
    pub fn reflect(&self) -> Stencil {
        Stencil {
            terms: self.terms.iter().map(|(s, c)| ([-s[0], -s[1], -s[2]], *c)).collect(),
        }
    }

    /// `min + max` of the support per axis, i.e. twice the stencil centre.
    pub fn doubled_center(&self) -> Option<[i32; 3]> {
        let mut it = self.terms.keys();
        let first = *it.next()?;
        let (mut lo, mut hi) = (first, first);
        for s in it {
            for a in 0..3 {
                lo[a] = lo[a].min(s[a]);
                hi[a] = hi[a].max(s[a]);
            }
        }
        Some(std::array::from_fn(|a| lo[a] + hi[a]))
    }
}

/// Matrix of difference polynomials, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymOp {
    pub rows: usize,
    pub cols: usize,
    entries: Vec<Poly>,
}

impl SymOp {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        SymOp { rows, cols, entries: vec![Poly::zero(); rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> Poly) -> Self {
        let mut op = SymOp::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                op.entries[r * cols + c] = f(r, c);
            }
        }
        op
    }

    pub fn constant(m: &[Vec<Q>]) -> Self {
        let rows = m.len();
        let cols = m.first().map_or(0, |r| r.len());
        SymOp::from_fn(rows, cols, |r, c| Poly::constant(m[r][c]))
    }

    pub fn identity(n: usize) -> Self {
        SymOp::from_fn(n, n, |r, c| if r == c { Poly::constant(q(1)) } else { Poly::zero() })
    }

    pub fn entry(&self, r: usize, c: usize) -> &Poly {
        &self.entries[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, p: Poly) {
        self.entries[r * self.cols + c] = p;
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &SymOp) -> SymOp {
        assert_eq!(self.cols, other.rows, "symbol shapes do not compose");
        SymOp::from_fn(self.rows, other.cols, |r, c| {
            (0..self.cols).fold(Poly::zero(), |acc, k| {
                let a = self.entry(r, k);
                let b = other.entry(k, c);
                if a.is_zero() || b.is_zero() {
                    acc
                } else {
                    acc.add(&a.mul(b))
                }
            })
        })
    }

    pub fn add(&self, other: &SymOp) -> SymOp {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        SymOp::from_fn(self.rows, self.cols, |r, c| self.entry(r, c).add(other.entry(r, c)))
    }

    pub fn scale(&self, s: Q) -> SymOp {
        SymOp::from_fn(self.rows, self.cols, |r, c| self.entry(r, c).scale(s))
    }

    pub fn sub(&self, other: &SymOp) -> SymOp {
        self.add(&other.scale(q(-1)))
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Poly::is_zero)
    }

    /// Common degree of all nonzero entries; the zero symbol has order 0.
    pub fn order(&self) -> Option<u32> {
        let mut degs = self.entries.iter().filter(|p| !p.is_zero()).map(Poly::homogeneous_degree);
        match degs.next() {
            None => Some(0),
            Some(first) => {
                let first = first?;
                degs.all(|d| d == Some(first)).then_some(first)
            }
        }
    }

    pub fn to_stencils(&self) -> StencilOp {
        StencilOp {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(Poly::to_stencil).collect(),
            order: self.order().expect("operator symbols are homogeneous"),
        }
    }
}

/// Matrix of shift stencils carrying a homogeneous order `p` (factor `h^{-p}`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StencilOp {
    pub rows: usize,
    pub cols: usize,
    entries: Vec<Stencil>,
    pub order: u32,
}

impl StencilOp {
    pub fn entry(&self, r: usize, c: usize) -> &Stencil {
        &self.entries[r * self.cols + c]
    }

    /// Lattice adjoint `G_in⁻¹ Sᵀ G_out` with pointwise Gram matrices.
    pub fn formal_adjoint(&self, g_in_inv: &[Vec<Q>], g_out: &[Vec<Q>]) -> StencilOp {
        let mut entries = vec![Stencil::zero(); self.rows * self.cols];
        for i in 0..self.cols {
            for j in 0..self.rows {
                let mut acc = Stencil::zero();
                for a in 0..self.cols {
                    if g_in_inv[i][a] == qzero() {
                        continue;
                    }
                    for b in 0..self.rows {
                        if g_out[b][j] == qzero() {
                            continue;
                        }
                        let st = self.entry(b, a);
                        if !st.is_zero() {
                            acc = acc.add(&st.reflect().scale(g_in_inv[i][a] * g_out[b][j]));
                        }
                    }
                }
                entries[i * self.rows + j] = acc;
            }
        }
        StencilOp { rows: self.cols, cols: self.rows, entries, order: self.order }
    }

    /// Point reflection of every entry.
    pub fn reflected(&self) -> StencilOp {
        StencilOp { entries: self.entries.iter().map(Stencil::reflect).collect(), ..self.clone() }
    }

    pub fn scaled(&self, c: Q) -> StencilOp {
        StencilOp { entries: self.entries.iter().map(|e| e.scale(c)).collect(), ..self.clone() }
    }

    /// Doubled output offsets from doubled input offsets; `None` when the
    /// entries of a row disagree about where the output lives.
    pub fn output_offsets(&self, input: &[[i32; 3]]) -> Option<Vec<[i32; 3]>> {
        assert_eq!(input.len(), self.cols);
        (0..self.rows)
            .map(|r| {
                let mut found: Option<[i32; 3]> = None;
                for (c, off) in input.iter().enumerate() {
                    if let Some(ctr) = self.entry(r, c).doubled_center() {
                        let pos = std::array::from_fn(|a| off[a] + ctr[a]);
                        match found {
                            None => found = Some(pos),
                            Some(p) if p != pos => return None,
                            _ => {}
                        }
                    }
                }
                found
            })
            .collect()
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c}")?;
            for (a, &p) in e.iter().enumerate() {
                if p > 0 {
                    write!(f, "·∂{}", a + 1)?;
                    if p > 1 {
                        write!(f, "^{p}")?;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Exact inverse of a small rational matrix by Gauss-Jordan elimination.
pub fn inverse(m: &[Vec<Q>]) -> Option<Vec<Vec<Q>>> {
    let n = m.len();
    let mut a: Vec<Vec<Q>> = m.to_vec();
    let mut inv: Vec<Vec<Q>> = (0..n).map(|i| (0..n).map(|j| q((i == j) as i64)).collect()).collect();
    for col in 0..n {
        let piv = (col..n).find(|&r| a[r][col] != qzero())?;
        a.swap(col, piv);
        inv.swap(col, piv);
        let p = a[col][col];
        for j in 0..n {
            a[col][j] /= p;
            inv[col][j] /= p;
        }
        for r in 0..n {
            if r != col && a[r][col] != qzero() {
                let f = a[r][col];
                for j in 0..n {
                    let (ac, ic) = (a[col][j], inv[col][j]);
                    a[r][j] -= f * ac;
                    inv[r][j] -= f * ic;
                }
            }
        }
    }
    Some(inv)
}

pub fn to_rational(m: &[&[f64]]) -> Vec<Vec<Q>> {
    m.iter()
        .map(|row| row.iter().map(|&v| Q::approximate_float(v).expect("finite dyadic constant")).collect())
        .collect()
}

pub fn to_f64(m: &[Vec<Q>]) -> Vec<Vec<f64>> {
    m.iter().map(|row| row.iter().map(|v| *v.numer() as f64 / *v.denom() as f64).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn second_difference_expands_to_binomial_stencil() {
        let p = Poly::partial(0).mul(&Poly::partial(0));
        let st = p.to_stencil();
        let got: Vec<_> = st.terms().map(|(s, c)| (*s, *c)).collect();
        assert_eq!(got, vec![([0, 0, 0], q(1)), ([1, 0, 0], q(-2)), ([2, 0, 0], q(1))]);
        assert_eq!(st.doubled_center(), Some([2, 0, 0]));
    }

    #[test]
    fn partials_commute_symbolically() {
        let a = Poly::partial(0).mul(&Poly::partial(2));
        let b = Poly::partial(2).mul(&Poly::partial(0));
        assert_eq!(a, b);
        assert_eq!(a.homogeneous_degree(), Some(2));
    }

    #[test]
    fn inverse_of_dev_like_gram() {
        let m = vec![vec![q(2), q(1)], vec![q(1), q(2)]];
        let inv = inverse(&m).unwrap();
        assert_eq!(inv, vec![vec![qf(2, 3), qf(-1, 3)], vec![qf(-1, 3), qf(2, 3)]]);
        assert!(inverse(&[vec![q(1), q(1)], vec![q(1), q(1)]]).is_none());
    }

    #[test]
    fn formal_adjoint_of_difference_is_negative_backward_difference() {
        let d = SymOp::from_fn(1, 1, |_, _| Poly::partial(1)).to_stencils();
        let one = vec![vec![q(1)]];
        let adj = d.formal_adjoint(&one, &one);
        let got: Vec<_> = adj.entry(0, 0).terms().map(|(s, c)| (*s, *c)).collect();
        assert_eq!(got, vec![([0, -1, 0], q(1)), ([0, 0, 0], q(-1))]);
    }
}
