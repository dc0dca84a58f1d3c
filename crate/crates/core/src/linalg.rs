//! Floating point sparse matrices, block-diagonal mass matrices and the
//! eigen solvers used by the Hodge machinery.

use std::collections::BTreeMap;
use std::sync::Once;

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Par, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{LabError, Result};
use crate::sparse::SparseOp;

/// Totals above which dense factorizations are not attempted.
pub const DENSE_EIGEN_LIMIT: usize = 1200;

static THREADS: Once = Once::new();

/// Sequential unless `BIHLAB_THREADS` asks for more workers.
pub fn init_parallelism() {
    THREADS.call_once(|| {
        let n = std::env::var("BIHLAB_THREADS").ok().and_then(|v| v.parse::<usize>().ok()).unwrap_or(1);
        let par = if n > 1 { Par::rayon(n) } else { Par::Seq };
        faer::set_global_parallelism(par);
    });
}

#[derive(Clone, Debug, PartialEq)]
pub struct Csr {
    pub rows: usize,
    pub cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    vals: Vec<f64>,
}

impl Csr {
    pub fn from_triplets(rows: usize, cols: usize, trip: impl IntoIterator<Item = (usize, usize, f64)>) -> Csr {
        let mut per_row: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); rows];
        for (r, c, v) in trip {
            assert!(r < rows && c < cols);
            *per_row[r].entry(c).or_insert(0.0) += v;
        }
        Csr::from_row_maps(rows, cols, per_row)
    }

    fn from_row_maps(rows: usize, cols: usize, maps: Vec<BTreeMap<usize, f64>>) -> Csr {
        let mut indptr = Vec::with_capacity(rows + 1);
        let mut indices = Vec::new();
        let mut vals = Vec::new();
        indptr.push(0);
        for m in maps {
            for (c, v) in m {
                if v != 0.0 {
                    indices.push(c);
                    vals.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Csr { rows, cols, indptr, indices, vals }
    }

    pub fn from_op(op: &SparseOp) -> Csr {
        Csr::from_triplets(op.rows, op.cols, op.triplets())
    }

    pub fn identity(n: usize) -> Csr {
        Csr::from_triplets(n, n, (0..n).map(|i| (i, i, 1.0)))
    }

    pub fn zeros(rows: usize, cols: usize) -> Csr {
        Csr { rows, cols, indptr: vec![0; rows + 1], indices: vec![], vals: vec![] }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.indptr[r], self.indptr[r + 1]);
        self.indices[a..b].iter().copied().zip(self.vals[a..b].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn transpose(&self) -> Csr {
        let mut maps: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); self.cols];
        for (r, c, v) in self.triplets() {
            maps[c].insert(r, v);
        }
        Csr::from_row_maps(self.cols, self.rows, maps)
    }

    pub fn matmul(&self, rhs: &Csr) -> Csr {
        assert_eq!(self.cols, rhs.rows, "shapes do not compose");
        let mut maps = Vec::with_capacity(self.rows);
        for r in 0..self.rows {
            let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
            for (k, a) in self.row(r) {
                for (c, b) in rhs.row(k) {
                    *acc.entry(c).or_insert(0.0) += a * b;
                }
            }
            maps.push(acc);
        }
        Csr::from_row_maps(self.rows, rhs.cols, maps)
    }

    /// `a·self + b·other`
    pub fn combine(&self, a: f64, other: &Csr, b: f64) -> Csr {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut maps = Vec::with_capacity(self.rows);
        for r in 0..self.rows {
            let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
            for (c, v) in self.row(r) {
                *acc.entry(c).or_insert(0.0) += a * v;
            }
            for (c, v) in other.row(r) {
                *acc.entry(c).or_insert(0.0) += b * v;
            }
            maps.push(acc);
        }
        Csr::from_row_maps(self.rows, self.cols, maps)
    }

    pub fn scale(&self, s: f64) -> Csr {
        let mut out = self.clone();
        out.vals.iter_mut().for_each(|v| *v *= s);
        out
    }

    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Csr {
        let mut map = vec![usize::MAX; self.cols];
        for (j, &c) in cols.iter().enumerate() {
            map[c] = j;
        }
        let maps = rows
            .iter()
            .map(|&r| self.row(r).filter(|(c, _)| map[*c] != usize::MAX).map(|(c, v)| (map[c], v)).collect())
            .collect();
        Csr::from_row_maps(rows.len(), cols.len(), maps)
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|r| self.row(r).map(|(c, v)| v * x[c]).sum()).collect()
    }

    pub fn apply_transpose(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (r, c, v) in self.triplets() {
            out[c] += v * y[r];
        }
        out
    }

    pub fn apply_mat(&self, x: &Mat<f64>) -> Mat<f64> {
        let mut out = Mat::zeros(self.rows, x.ncols());
        for j in 0..x.ncols() {
            for r in 0..self.rows {
                out[(r, j)] = self.row(r).map(|(c, v)| v * x[(c, j)]).sum();
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Max absolute row sum, an upper bound for the spectral radius.
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows).map(|r| self.row(r).map(|(_, v)| v.abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    pub fn to_faer(&self) -> SparseColMat<usize, f64> {
        let trip: Vec<_> = self.triplets().map(|(r, c, v)| Triplet::new(r, c, v)).collect();
        SparseColMat::try_new_from_triplets(self.rows, self.cols, &trip).expect("valid triplets")
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let mut m = Mat::zeros(self.rows, self.cols);
        for (r, c, v) in self.triplets() {
            m[(r, c)] += v;
        }
        m
    }

    pub fn plus_diagonal(&self, d: f64) -> Csr {
        assert_eq!(self.rows, self.cols);
        self.combine(1.0, &Csr::identity(self.rows), d)
    }
}

/// One dense block acting on the listed indices, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Block {
    pub idx: Vec<usize>,
    pub m: Vec<f64>,
}

impl Block {
    fn k(&self) -> usize {
        self.idx.len()
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.m[i * self.k() + j]
    }

    /// Lower Cholesky factor, `None` unless positive definite.
    fn cholesky(&self) -> Option<Block> {
        let k = self.k();
        let mut l = vec![0.0; k * k];
        for i in 0..k {
            for j in 0..=i {
                let mut s = self.at(i, j);
                for p in 0..j {
                    s -= l[i * k + p] * l[j * k + p];
                }
                if i == j {
                    if !(s > 0.0) {
                        return None;
                    }
                    l[i * k + i] = s.sqrt();
                } else {
                    l[i * k + j] = s / l[j * k + j];
                }
            }
        }
        Some(Block { idx: self.idx.clone(), m: l })
    }

    fn lower_inverse(&self) -> Block {
        let k = self.k();
        let mut inv = vec![0.0; k * k];
        for c in 0..k {
            for i in c..k {
                let mut s = if i == c { 1.0 } else { 0.0 };
                for p in c..i {
                    s -= self.at(i, p) * inv[p * k + c];
                }
                inv[i * k + c] = s / self.at(i, i);
            }
        }
        Block { idx: self.idx.clone(), m: inv }
    }

    fn transpose(&self) -> Block {
        let k = self.k();
        Block { idx: self.idx.clone(), m: (0..k * k).map(|t| self.at(t % k, t / k)).collect() }
    }

    fn matmul(&self, other: &Block) -> Block {
        let k = self.k();
        let m = (0..k * k).map(|t| (0..k).map(|p| self.at(t / k, p) * other.at(p, t % k)).sum()).collect();
        Block { idx: self.idx.clone(), m }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let k = self.k();
        let a = Mat::from_fn(k, k, |i, j| self.at(i, j));
        a.self_adjoint_eigenvalues(Side::Lower).map(|v| v[0]).unwrap_or(f64::NAN)
    }
}

/// Block-diagonal matrix with disjoint index blocks covering `0..dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockDiag {
    dim: usize,
    pub blocks: Vec<Block>,
}

impl BlockDiag {
    pub fn new(dim: usize, blocks: Vec<Block>) -> BlockDiag {
        let mut seen = vec![false; dim];
        for b in &blocks {
            assert_eq!(b.m.len(), b.idx.len() * b.idx.len());
            for &i in &b.idx {
                assert!(!seen[i], "index {i} in two blocks");
                seen[i] = true;
            }
        }
        assert!(seen.iter().all(|&s| s), "blocks must cover every index");
        BlockDiag { dim, blocks }
    }

    pub fn identity(dim: usize) -> BlockDiag {
        BlockDiag { dim, blocks: (0..dim).map(|i| Block { idx: vec![i], m: vec![1.0] }).collect() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn scale(&self, s: f64) -> BlockDiag {
        let blocks = self
            .blocks
            .iter()
            .map(|b| Block { idx: b.idx.clone(), m: b.m.iter().map(|v| v * s).collect() })
            .collect();
        BlockDiag { dim: self.dim, blocks }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim];
        for b in &self.blocks {
            let k = b.k();
            for i in 0..k {
                y[b.idx[i]] = (0..k).map(|j| b.at(i, j) * x[b.idx[j]]).sum();
            }
        }
        y
    }

    pub fn inner(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(x, &self.apply(y))
    }

    pub fn cholesky(&self) -> Result<BlockDiag> {
        let blocks = self
            .blocks
            .iter()
            .enumerate()
            .map(|(n, b)| {
                b.cholesky().ok_or_else(|| LabError::WeightNotSPD { index: n, min_eig: b.min_eigenvalue() })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BlockDiag { dim: self.dim, blocks })
    }

    /// Inverse of a lower-triangular factor produced by [`BlockDiag::cholesky`].
    pub fn lower_inverse(&self) -> BlockDiag {
        BlockDiag { dim: self.dim, blocks: self.blocks.iter().map(Block::lower_inverse).collect() }
    }

    pub fn transpose(&self) -> BlockDiag {
        BlockDiag { dim: self.dim, blocks: self.blocks.iter().map(Block::transpose).collect() }
    }

    pub fn inverse(&self) -> Result<BlockDiag> {
        let linv = self.cholesky()?.lower_inverse();
        let blocks = linv.blocks.iter().map(|b| b.transpose().matmul(b)).collect();
        Ok(BlockDiag { dim: self.dim, blocks })
    }

    pub fn to_csr(&self) -> Csr {
        let mut trip = Vec::new();
        for b in &self.blocks {
            let k = b.k();
            for i in 0..k {
                for j in 0..k {
                    if b.at(i, j) != 0.0 {
                        trip.push((b.idx[i], b.idx[j], b.at(i, j)));
                    }
                }
            }
        }
        Csr::from_triplets(self.dim, self.dim, trip)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.blocks.iter().map(Block::min_eigenvalue).fold(f64::INFINITY, f64::min)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn column(m: &Mat<f64>, j: usize) -> Vec<f64> {
    (0..m.nrows()).map(|i| m[(i, j)]).collect()
}

pub fn from_columns(rows: usize, cols: &[Vec<f64>]) -> Mat<f64> {
    Mat::from_fn(rows, cols.len(), |i, j| cols[j][i])
}

/// Orthonormalizes the columns in place by modified Gram-Schmidt with one
/// reorthogonalization pass, dropping columns that fall below `drop_tol`
/// relative to their original norm.
pub fn orthonormalize(m: &Mat<f64>, drop_tol: f64) -> Mat<f64> {
    let n = m.nrows();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for j in 0..m.ncols() {
        let mut v = column(m, j);
        let n0 = norm(&v);
        if n0 == 0.0 {
            continue;
        }
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &v);
                axpy(-c, b, &mut v);
            }
        }
        let nv = norm(&v);
        if nv > drop_tol * n0 {
            v.iter_mut().for_each(|x| *x /= nv);
            basis.push(v);
        }
    }
    from_columns(n, &basis)
}

/// Ascending eigenvalues and eigenvectors of a dense symmetric matrix.
pub fn dense_eigh(a: &Mat<f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    init_parallelism();
    let sym = Mat::from_fn(a.nrows(), a.ncols(), |i, j| 0.5 * (a[(i, j)] + a[(j, i)]));
    let evd = sym
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| LabError::SolverDiverged { detail: format!("dense eigendecomposition: {e:?}") })?;
    let s = evd.S();
    let vals: Vec<f64> = (0..a.nrows()).map(|i| s[i]).collect();
    Ok((vals, evd.U().to_owned()))
}

pub fn dense_singular_values(a: &Mat<f64>) -> Result<Vec<f64>> {
    init_parallelism();
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(vec![]);
    }
    a.singular_values().map_err(|e| LabError::SolverDiverged { detail: format!("dense SVD: {e:?}") })
}

/// Sparse Cholesky factor of a symmetric positive definite matrix.
pub struct SpdSolver {
    llt: Option<faer::sparse::linalg::solvers::Llt<usize, f64>>,
    dense: Option<faer::linalg::solvers::Llt<f64>>,
    n: usize,
}

impl SpdSolver {
    pub fn new(a: &Csr) -> Result<SpdSolver> {
        init_parallelism();
        let n = a.rows;
        if n <= DENSE_EIGEN_LIMIT {
            let d = a.to_dense();
            let llt = d
                .llt(Side::Lower)
                .map_err(|e| LabError::SolverDiverged { detail: format!("dense Cholesky: {e:?}") })?;
            return Ok(SpdSolver { llt: None, dense: Some(llt), n });
        }
        let llt = a
            .to_faer()
            .sp_cholesky(Side::Lower)
            .map_err(|e| LabError::SolverDiverged { detail: format!("sparse Cholesky: {e:?}") })?;
        Ok(SpdSolver { llt: Some(llt), dense: None, n })
    }

    pub fn solve_mat(&self, rhs: &Mat<f64>) -> Mat<f64> {
        assert_eq!(rhs.nrows(), self.n);
        let mut x = rhs.clone();
        if let Some(l) = &self.llt {
            l.solve_in_place(x.as_mut());
        } else if let Some(l) = &self.dense {
            l.solve_in_place(x.as_mut());
        }
        x
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        column(&self.solve_mat(&from_columns(self.n, &[rhs.to_vec()])), 0)
    }
}

/// Largest eigenvalue estimate of a symmetric positive semidefinite matrix
/// by power iteration from a fixed start.
pub fn spectral_radius(a: &Csr) -> f64 {
    let n = a.rows;
    if n == 0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut x: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    let mut lam = 0.0;
    for _ in 0..60 {
        let nx = norm(&x);
        if nx == 0.0 {
            return 0.0;
        }
        x.iter_mut().for_each(|v| *v /= nx);
        let y = a.apply(&x);
        lam = dot(&x, &y);
        x = y;
    }
    lam.max(0.0)
}

#[derive(Clone, Debug)]
pub struct EigenOptions {
    /// Relative residual `‖Ax - λx‖ ≤ tol ‖A‖` for every requested pair.
    pub tol: f64,
    pub max_iter: usize,
    /// Shift `δ = shift·‖A‖` of the inverted operator.
    pub shift: f64,
    pub seed: u64,
    /// Largest size solved by dense eigendecomposition.
    pub dense_limit: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions { tol: 1e-12, max_iter: 2000, shift: 1e-10, seed: 7, dense_limit: DENSE_EIGEN_LIMIT }
    }
}

#[derive(Clone, Debug)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: Mat<f64>,
    /// Spectral radius estimate used for relative thresholds.
    pub scale: f64,
    pub dense: bool,
}

/// The `nev` smallest eigenpairs of a symmetric positive semidefinite matrix.
pub fn smallest_eigenpairs(a: &Csr, nev: usize, opts: &EigenOptions) -> Result<EigenPairs> {
    let n = a.rows;
    let nev = nev.min(n);
    if n == 0 || nev == 0 {
        return Ok(EigenPairs { values: vec![], vectors: Mat::zeros(n, 0), scale: 0.0, dense: true });
    }
    if n <= opts.dense_limit {
        let (vals, vecs) = dense_eigh(&a.to_dense())?;
        let scale = vals.last().copied().unwrap_or(0.0).max(0.0);
        let vectors = Mat::from_fn(n, nev, |i, j| vecs[(i, j)]);
        return Ok(EigenPairs { values: vals[..nev].to_vec(), vectors, scale, dense: true });
    }
    let scale = spectral_radius(a).max(a.max_abs());
    let solver = SpdSolver::new(&a.plus_diagonal(opts.shift * scale))?;
    let b = (nev + 8).max(2 * nev).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut x = Mat::from_fn(n, b, |_, _| rng.random::<f64>() - 0.5);
    let mut last = Vec::new();
    for _ in 0..opts.max_iter {
        let y = orthonormalize(&solver.solve_mat(&x), 1e-14);
        if y.ncols() < nev {
            return Err(LabError::SolverDiverged { detail: "subspace collapsed".into() });
        }
        let ay = a.apply_mat(&y);
        let h = y.transpose() * &ay;
        let (theta, w) = dense_eigh(&h)?;
        x = &y * &w;
        let ax = &ay * &w;
        let mut worst: f64 = 0.0;
        for j in 0..nev {
            let r: f64 = (0..n).map(|i| (ax[(i, j)] - theta[j] * x[(i, j)]).powi(2)).sum::<f64>().sqrt();
            worst = worst.max(r);
        }
        last = theta;
        if worst <= opts.tol * scale {
            let vectors = Mat::from_fn(n, nev, |i, j| x[(i, j)]);
            return Ok(EigenPairs { values: last[..nev].to_vec(), vectors, scale, dense: false });
        }
    }
    Err(LabError::SolverDiverged {
        detail: format!("subspace iteration did not reach tolerance; last Ritz values {:?}", &last[..nev.min(last.len())]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize) -> Csr {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        Csr::from_triplets(n, n, t)
    }

    #[test]
    fn csr_algebra() {
        let a = Csr::from_triplets(2, 3, vec![(0, 0, 1.0), (0, 2, 2.0), (1, 1, 3.0), (0, 0, 1.0)]);
        assert_eq!(a.apply(&[1.0, 1.0, 1.0]), vec![4.0, 3.0]);
        assert_eq!(a.transpose().apply(&[1.0, 1.0]), a.apply_transpose(&[1.0, 1.0]));
        let ata = a.transpose().matmul(&a);
        assert_eq!(ata.to_dense()[(0, 2)], 4.0);
        assert_eq!(a.select(&[1], &[1, 2]).to_dense()[(0, 0)], 3.0);
    }

    #[test]
    fn block_inverse_and_cholesky() {
        let m = BlockDiag::new(3, vec![Block { idx: vec![0, 2], m: vec![4.0, 1.0, 1.0, 3.0] }, Block { idx: vec![1], m: vec![2.0] }]);
        let inv = m.inverse().unwrap();
        let x = vec![0.3, -1.0, 2.0];
        let back = inv.apply(&m.apply(&x));
        for (a, b) in back.iter().zip(&x) {
            assert!((a - b).abs() < 1e-14);
        }
        let l = m.cholesky().unwrap();
        let llt = l.to_csr().matmul(&l.transpose().to_csr());
        assert!((llt.to_dense()[(0, 2)] - 1.0).abs() < 1e-14);
        let bad = BlockDiag::new(1, vec![Block { idx: vec![0], m: vec![-1.0] }]);
        assert!(matches!(bad.inverse(), Err(LabError::WeightNotSPD { .. })));
    }

    #[test]
    fn sparse_subspace_iteration_matches_closed_form() {
        let n = 1500;
        let a = laplacian_1d(n);
        let pairs = smallest_eigenpairs(&a, 3, &EigenOptions { tol: 1e-10, ..Default::default() }).unwrap();
        assert!(!pairs.dense);
        for (k, v) in pairs.values.iter().enumerate() {
            let exact = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
            assert!((v - exact).abs() <= 1e-9 * exact, "{v} vs {exact}");
        }
    }

    #[test]
    fn dense_path_for_small_problems() {
        let a = laplacian_1d(20);
        let pairs = smallest_eigenpairs(&a, 2, &EigenOptions::default()).unwrap();
        assert!(pairs.dense);
        let exact = 2.0 - 2.0 * (std::f64::consts::PI / 21.0).cos();
        assert!((pairs.values[0] - exact).abs() < 1e-13);
    }
}
