//! Weighted Hilbert complexes on masked DOF spaces, their duals, the
//! polynomial end terms and the weak boundary condition subspaces.

use std::collections::BTreeMap;

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{LabError, Result};
use crate::grid::{BoundaryPartition, FieldKind, GridSpec, Tag, VoxelDomain};
use crate::linalg::{self, Block, BlockDiag, Csr};
use crate::masks::{chain_geometry, classify_chain, ChainMasks, Closure, DofMask, Status};
use crate::ops::{assemble_on, restrict, symbols, weighted_adjoint, ChainOps, DofKey, Which};
use crate::sparse::SparseOp;
use crate::stencil::to_f64;

/// Largest admissible condition number of a random weight block.
pub const MAX_WEIGHT_CONDITION: f64 = 100.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Weight {
    Identity,
    /// Constant multiple of the identity.
    Scaled(f64),
    /// Seeded random SPD blocks, one per lattice site.
    Random { seed: u64 },
}

fn kind_tag(kind: FieldKind) -> u64 {
    match kind {
        FieldKind::Scalar => 1,
        FieldKind::Vector => 2,
        FieldKind::Sym => 3,
        FieldKind::Dev => 4,
    }
}

fn gram_f64(kind: FieldKind) -> Vec<Vec<f64>> {
    to_f64(&symbols::gram(kind))
}

/// Symmetric square root of a small SPD matrix.
fn spd_sqrt(g: &[Vec<f64>]) -> Mat<f64> {
    let k = g.len();
    let m = Mat::from_fn(k, k, |i, j| g[i][j]);
    let (vals, vecs) = linalg::dense_eigh(&m).expect("Gram matrices are symmetric");
    Mat::from_fn(k, k, |i, j| (0..k).map(|p| vecs[(i, p)] * vals[p].sqrt() * vecs[(j, p)]).sum::<f64>())
}

impl Weight {
    /// Per-site blocks in the compact basis of `kind`, row-major. The identity
    /// weight is the Gram matrix of the compact basis.
    pub fn blocks(&self, kind: FieldKind, sites: usize) -> Vec<Vec<f64>> {
        let g = gram_f64(kind);
        let k = g.len();
        let flat: Vec<f64> = g.iter().flatten().copied().collect();
        match *self {
            Weight::Identity => vec![flat; sites],
            Weight::Scaled(s) => vec![flat.iter().map(|v| v * s).collect(); sites],
            Weight::Random { seed } => {
                let root = spd_sqrt(&g);
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ kind_tag(kind));
                (0..sites)
                    .map(|_| {
                        let q = loop {
                            let m = Mat::from_fn(k, k, |_, _| rng.random::<f64>() - 0.5);
                            let q = linalg::orthonormalize(&m, 1e-6);
                            if q.ncols() == k {
                                break q;
                            }
                        };
                        let lam: Vec<f64> = (0..k).map(|_| 10f64.powf(2.0 * rng.random::<f64>())).collect();
                        let a = Mat::from_fn(k, k, |i, j| (0..k).map(|p| q[(i, p)] * lam[p] * q[(j, p)]).sum::<f64>());
                        let w = &root * &a * &root;
                        (0..k * k).map(|t| 0.5 * (w[(t / k, t % k)] + w[(t % k, t / k)])).collect()
                    })
                    .collect()
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Weight::Identity => "identity".into(),
            Weight::Scaled(s) => format!("scaled({s})"),
            Weight::Random { seed } => format!("random(seed={seed})"),
        }
    }
}

/// The two material weights: `eps` on symmetric, `mu` on deviatoric fields.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Weights {
    pub eps: Weight,
    pub mu: Weight,
}

impl Weights {
    pub fn identity() -> Weights {
        Weights { eps: Weight::Identity, mu: Weight::Identity }
    }

    pub fn random(seed: u64) -> Weights {
        Weights { eps: Weight::Random { seed }, mu: Weight::Random { seed: seed.wrapping_add(0x51ed) } }
    }
}

fn invert_block(m: &[f64], k: usize) -> Vec<f64> {
    let b = BlockDiag::new(k, vec![Block { idx: (0..k).collect(), m: m.to_vec() }]);
    let inv = b.inverse().expect("weight blocks are SPD");
    let mut out = vec![0.0; k * k];
    let blk = &inv.blocks[0];
    for i in 0..k {
        for j in 0..k {
            out[blk.idx[i] * k + blk.idx[j]] = blk.m[i * k + j];
        }
    }
    out
}

/// `G K⁻¹ G`, the product on flux variables `K x`.
fn flux_blocks(kind: FieldKind, weight: &Weight, sites: usize) -> Vec<Vec<f64>> {
    let g = gram_f64(kind);
    let k = g.len();
    weight
        .blocks(kind, sites)
        .into_iter()
        .map(|b| {
            let inv = invert_block(&b, k);
            (0..k * k)
                .map(|t| {
                    let (i, j) = (t / k, t % k);
                    (0..k).flat_map(|p| (0..k).map(move |q| (p, q))).map(|(p, q)| g[i][p] * inv[p * k + q] * g[q][j]).sum()
                })
                .collect()
        })
        .collect()
}

/// A masked level of a complex together with its mass matrix.
#[derive(Clone, Debug)]
pub struct DofSpace {
    pub kind: FieldKind,
    /// Full-box indices of the DOFs, ascending.
    pub indices: Vec<usize>,
    /// Doubled physical positions of the DOFs.
    pub positions: Vec<[i32; 3]>,
    pub mass: BlockDiag,
    pub min_weight_eig: f64,
}

impl DofSpace {
    pub fn dim(&self) -> usize {
        self.indices.len()
    }

    pub fn component(&self, i: usize, sites: usize) -> usize {
        self.indices[i] / sites
    }

    fn build(chain: &ChainOps, level: usize, mask: &DofMask, blocks: &[Vec<f64>]) -> Result<DofSpace> {
        let sites = chain.bx.len();
        let kind = chain.kinds[level];
        let k = kind.ncomp();
        let indices = mask.indices();
        let positions = indices.iter().map(|&i| chain.position(level, i)).collect();
        let mut by_site: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
        for (local, &i) in indices.iter().enumerate() {
            by_site.entry(i % sites).or_default().push((local, i / sites));
        }
        let h3 = chain.h.powi(3);
        let mut out = Vec::with_capacity(by_site.len());
        let mut min_eig = f64::INFINITY;
        for (site, comps) in by_site {
            let full = &blocks[site];
            let m: Vec<f64> =
                comps.iter().flat_map(|&(_, a)| comps.iter().map(move |&(_, b)| h3 * full[a * k + b])).collect();
            let blk = Block { idx: comps.iter().map(|c| c.0).collect(), m };
            let e = blk.min_eigenvalue() / h3;
            if !(e > 0.0) {
                return Err(LabError::WeightNotSPD { index: site, min_eig: e });
            }
            min_eig = min_eig.min(e);
            out.push(blk);
        }
        Ok(DofSpace { kind, positions, mass: BlockDiag::new(indices.len(), out), indices, min_weight_eig: min_eig })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PolyTag {
    P1,
    RT,
}

impl PolyTag {
    pub fn name(self) -> &'static str {
        match self {
            PolyTag::P1 => "P1",
            PolyTag::RT => "RT",
        }
    }
}

/// Affine kernel at an end of the long complex: `P¹` on scalars, `RT` on
/// vectors. Inactive (dimension 0) when the relevant boundary part is
/// non-empty.
#[derive(Clone, Debug)]
pub struct PolynomialSpace {
    pub tag: PolyTag,
    pub level: usize,
    pub active: bool,
    /// Samples of the four analytic basis functions.
    pub samples: Vec<Vec<f64>>,
    /// Mass-orthonormal basis of the span, empty when inactive.
    pub basis: Vec<Vec<f64>>,
}

impl PolynomialSpace {
    fn sample(tag: PolyTag, level: usize, space: &DofSpace, sites: usize, h: f64, active: bool) -> PolynomialSpace {
        let x = |i: usize, a: usize| space.positions[i][a] as f64 * 0.5 * h;
        let n = space.dim();
        let samples: Vec<Vec<f64>> = match tag {
            PolyTag::P1 => (0..4).map(|b| (0..n).map(|i| if b == 0 { 1.0 } else { x(i, b - 1) }).collect()).collect(),
            PolyTag::RT => (0..4)
                .map(|b| {
                    (0..n)
                        .map(|i| {
                            let c = space.component(i, sites);
                            if b == 0 {
                                x(i, c)
                            } else if c == b - 1 {
                                1.0
                            } else {
                                0.0
                            }
                        })
                        .collect()
                })
                .collect(),
        };
        let basis = if active { mass_orthonormalize(&samples, &space.mass) } else { vec![] };
        PolynomialSpace { tag, level, active, samples, basis }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Orthogonal projection in the weighted product.
    pub fn project(&self, x: &[f64], mass: &BlockDiag) -> Vec<f64> {
        let mx = mass.apply(x);
        let mut out = vec![0.0; x.len()];
        for b in &self.basis {
            linalg::axpy(linalg::dot(b, &mx), b, &mut out);
        }
        out
    }

    pub fn complement(&self, x: &[f64], mass: &BlockDiag) -> Vec<f64> {
        linalg::sub(x, &self.project(x, mass))
    }
}

fn mass_orthonormalize(vs: &[Vec<f64>], mass: &BlockDiag) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in vs {
        let mut v = v.clone();
        let n0 = mass.inner(&v, &v).sqrt();
        if n0 == 0.0 {
            continue;
        }
        for _ in 0..2 {
            for b in &basis {
                let c = mass.inner(b, &v);
                linalg::axpy(-c, b, &mut v);
            }
        }
        let nv = mass.inner(&v, &v).sqrt();
        if nv > 1e-10 * n0 {
            v.iter_mut().for_each(|t| *t /= nv);
            basis.push(v);
        }
    }
    basis
}

/// A four-level complex `d₀, d₁, d₂` between weighted DOF spaces.
#[derive(Clone, Debug)]
pub struct HilbertComplex {
    pub which: Which,
    pub dual: bool,
    pub grid: GridSpec,
    pub op_names: [String; 3],
    pub spaces: Vec<DofSpace>,
    /// Exact restricted operators; present on primal complexes only.
    pub exact: Option<Vec<SparseOp>>,
    pub d: Vec<Csr>,
    /// Lower Cholesky factors of the masses.
    pub factors: Vec<BlockDiag>,
    /// `L_{k+1}ᵀ d_k L_k⁻ᵀ`, the operators in orthonormal coordinates.
    pub whitened: Vec<Csr>,
    pub head: PolynomialSpace,
    pub tail: PolynomialSpace,
    pub demoted: usize,
    pub weights: Weights,
}

fn whiten_op(d: &Csr, lower_in: &BlockDiag, lower_out: &BlockDiag) -> Csr {
    lower_out.transpose().to_csr().matmul(d).matmul(&lower_in.lower_inverse().transpose().to_csr())
}

impl HilbertComplex {
    pub fn dims(&self) -> [usize; 4] {
        std::array::from_fn(|k| self.spaces[k].dim())
    }

    pub fn total_dofs(&self) -> usize {
        self.dims().iter().sum()
    }

    /// Orthonormal coordinates `Lᵀ x` of a level-`k` field.
    pub fn whiten(&self, k: usize, x: &[f64]) -> Vec<f64> {
        self.factors[k].transpose().apply(x)
    }

    pub fn unwhiten(&self, k: usize, y: &[f64]) -> Vec<f64> {
        self.factors[k].lower_inverse().transpose().apply(y)
    }

    pub fn inner(&self, k: usize, x: &[f64], y: &[f64]) -> f64 {
        self.spaces[k].mass.inner(x, y)
    }

    pub fn norm(&self, k: usize, x: &[f64]) -> f64 {
        self.inner(k, x, x).max(0.0).sqrt()
    }

    pub fn apply(&self, k: usize, x: &[f64]) -> Vec<f64> {
        self.d[k].apply(x)
    }

    /// Weighted adjoint `d_k*` (no sign convention).
    pub fn adjoint(&self, k: usize) -> Result<Csr> {
        weighted_adjoint(&self.d[k], &self.spaces[k].mass, &self.spaces[k + 1].mass)
    }

    /// Largest entry of `d_{k+1} d_k` for `k = 0, 1`; exact zero on primal
    /// complexes.
    pub fn composite_max(&self) -> [f64; 2] {
        match &self.exact {
            Some(ex) => std::array::from_fn(|k| ex[k + 1].compose(&ex[k]).max_abs()),
            None => std::array::from_fn(|k| self.d[k + 1].matmul(&self.d[k]).max_abs()),
        }
    }

    /// End kernel at level 0 or 3, if that level carries one.
    pub fn end_space(&self, level: usize) -> Option<&PolynomialSpace> {
        match level {
            0 => Some(&self.head),
            3 => Some(&self.tail),
            _ => None,
        }
    }

    /// Sign attached to the adjoint of operator `k` in the operator list:
    /// the adjoint of Div_T is `-devGrad` and vice versa.
    pub fn adjoint_sign(&self, k: usize) -> f64 {
        let divgrad = match (self.which, self.dual) {
            (Which::First, false) | (Which::Second, true) => 2,
            (Which::Second, false) | (Which::First, true) => 0,
        };
        if k == divgrad {
            -1.0
        } else {
            1.0
        }
    }
}

/// Strong boundary condition masks for the complex.
pub fn complex_masks(dom: &VoxelDomain, part: &BoundaryPartition, which: Which, widths: &[i32; 4]) -> Result<(ChainOps, ChainMasks)> {
    let chain = ChainOps::new(which, &dom.grid);
    let geo = chain_geometry(dom, part, &chain);
    let masks = classify_chain(&geo, &chain, widths, Tag::T, Closure::Demote)?;
    Ok((chain, masks))
}

/// Assembles the first (`Gradgrad, Rot_S, Div_T`) or second
/// (`devGrad, symRot_T, divDiv_S`) complex with strong conditions on `Γ_t`.
pub fn build_complex(
    which: Which,
    dom: &VoxelDomain,
    part: &BoundaryPartition,
    widths: &[i32; 4],
    weights: &Weights,
) -> Result<HilbertComplex> {
    let (chain, masks) = complex_masks(dom, part, which, widths)?;
    let sites = chain.bx.len();
    let exact: Vec<SparseOp> =
        (0..3).map(|k| restrict(&chain.full[k], &masks.levels[k], &masks.levels[k + 1])).collect::<Result<_>>()?;
    for k in 0..2 {
        if !exact[k + 1].compose(&exact[k]).is_zero() {
            return Err(LabError::IncompatibleWidths {
                widths: widths.to_vec(),
                detail: format!("restricted composite d{}d{} is not zero", k + 1, k),
            });
        }
    }
    let ident = |kind: FieldKind| Weight::Identity.blocks(kind, sites);
    let blocks: [Vec<Vec<f64>>; 4] = match which {
        Which::First => [
            ident(FieldKind::Scalar),
            weights.eps.blocks(FieldKind::Sym, sites),
            flux_blocks(FieldKind::Dev, &weights.mu, sites),
            ident(FieldKind::Vector),
        ],
        Which::Second => [
            ident(FieldKind::Vector),
            weights.mu.blocks(FieldKind::Dev, sites),
            flux_blocks(FieldKind::Sym, &weights.eps, sites),
            ident(FieldKind::Scalar),
        ],
    };
    let spaces: Vec<DofSpace> =
        (0..4).map(|k| DofSpace::build(&chain, k, &masks.levels[k], &blocks[k])).collect::<Result<_>>()?;
    let d: Vec<Csr> = exact.iter().map(Csr::from_op).collect();
    let factors: Vec<BlockDiag> = spaces.iter().map(|s| s.mass.cholesky()).collect::<Result<_>>()?;
    let whitened = (0..3).map(|k| whiten_op(&d[k], &factors[k], &factors[k + 1])).collect();
    let (head_tag, tail_tag) = match which {
        Which::First => (PolyTag::P1, PolyTag::RT),
        Which::Second => (PolyTag::RT, PolyTag::P1),
    };
    let h = dom.grid.h;
    let head = PolynomialSpace::sample(head_tag, 0, &spaces[0], sites, h, part.is_empty(Tag::T));
    let tail = PolynomialSpace::sample(tail_tag, 3, &spaces[3], sites, h, part.is_empty(Tag::N));
    Ok(HilbertComplex {
        which,
        dual: false,
        grid: dom.grid,
        op_names: which.op_names().map(String::from),
        spaces,
        exact: Some(exact),
        d,
        factors,
        whitened,
        head,
        tail,
        demoted: masks.demoted,
        weights: *weights,
    })
}

/// Levels reversed, operators replaced by their signed weighted adjoints.
pub fn dual_complex(c: &HilbertComplex) -> Result<HilbertComplex> {
    let mut d = Vec::with_capacity(3);
    for k in (0..3).rev() {
        d.push(c.adjoint(k)?.scale(c.adjoint_sign(k)));
    }
    let spaces: Vec<DofSpace> = c.spaces.iter().rev().cloned().collect();
    let factors: Vec<BlockDiag> = c.factors.iter().rev().cloned().collect();
    let whitened = (0..3).map(|k| whiten_op(&d[k], &factors[k], &factors[k + 1])).collect();
    let other = match c.which {
        Which::First => Which::Second,
        Which::Second => Which::First,
    };
    let mut head = c.tail.clone();
    head.level = 0;
    let mut tail = c.head.clone();
    tail.level = 3;
    Ok(HilbertComplex {
        which: c.which,
        dual: !c.dual,
        grid: c.grid,
        op_names: if c.dual { c.which.op_names() } else { other.op_names() }.map(String::from),
        spaces,
        exact: None,
        d,
        factors,
        whitened,
        head,
        tail,
        demoted: c.demoted,
        weights: c.weights,
    })
}

/// Projectors onto the polynomial end kernels and their complements.
pub fn end_projectors(c: &HilbertComplex) -> (&PolynomialSpace, &PolynomialSpace) {
    (&c.head, &c.tail)
}

/// Weak versus strong comparison for the domain of one operator.
#[derive(Clone, Debug)]
pub struct WeakStrongReport {
    pub which: Which,
    pub level: usize,
    pub op: String,
    pub weak_dim: usize,
    pub strong_dim: usize,
    /// Strong DOFs outside the unconstrained graph space.
    pub missing: usize,
    pub gap: f64,
    pub max_angle: f64,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct WeakSpace {
    pub level: usize,
    /// Full-box indices of the graph space coordinates.
    pub graph_indices: Vec<usize>,
    /// Orthonormal basis (in the Gram product) of the weak subspace.
    pub basis: Mat<f64>,
}

/// Shared classification data for weak/strong studies of one complex.
pub struct WeakStrongStudy {
    chain: ChainOps,
    dual: ChainOps,
    geo: crate::grid::Geometry,
    unconstrained: ChainMasks,
    strong: ChainMasks,
    natural: ChainMasks,
}

pub(crate) fn keys(chain: &ChainOps, idx: &[usize]) -> Vec<DofKey> {
    let n = chain.bx.len();
    idx.iter().map(|&i| (i / n, chain.bx.point(i % n))).collect()
}

fn dense_gram(chain: &ChainOps, level: usize, idx: &[usize]) -> Mat<f64> {
    let n = chain.bx.len();
    let g = to_f64(&chain.grams[level]);
    let mut by_site: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (local, &i) in idx.iter().enumerate() {
        by_site.entry(i % n).or_default().push(local);
    }
    let mut m = Mat::zeros(idx.len(), idx.len());
    for locs in by_site.values() {
        for &a in locs {
            for &b in locs {
                m[(a, b)] = g[idx[a] / n][idx[b] / n];
            }
        }
    }
    m
}

impl WeakStrongStudy {
    pub fn new(
        dom: &VoxelDomain,
        part: &BoundaryPartition,
        which: Which,
        widths: &[i32; 4],
        dual_widths: &[i32; 4],
    ) -> Result<WeakStrongStudy> {
        let chain = ChainOps::new(which, &dom.grid);
        let dual = chain.formal_dual();
        let geo = chain_geometry(dom, part, &chain);
        let unconstrained = classify_chain(&geo, &chain, &[0; 4], Tag::T, Closure::Raw)?;
        let strong = classify_chain(&geo, &chain, widths, Tag::T, Closure::Demote)?;
        let natural = classify_chain(&geo, &dual, dual_widths, Tag::N, Closure::Demote)?;
        Ok(WeakStrongStudy { chain, dual, geo, unconstrained, strong, natural })
    }

    /// Weak subspace of the domain of operator `level`: graph-space fields
    /// whose integration by parts against every `Γ_n` test field of the next
    /// level holds.
    pub fn weak_space(&self, level: usize, tol_sub: f64) -> Result<(WeakSpace, WeakStrongReport)> {
        let k = level;
        let chain = &self.chain;
        let u = self.unconstrained.levels[k].indices();
        let in_u: std::collections::HashSet<usize> = u.iter().copied().collect();
        let op = &chain.full[k];
        let dual_status = &self.natural.levels[2 - k].status;
        let psi: Vec<usize> = (0..op.rows)
            .filter(|&r| dual_status[r] != Status::Z && op.row(r).any(|(c, _)| in_u.contains(&c)))
            .collect();
        let d = op.select(&psi, &u).to_dense();
        let dd = assemble_on(&self.dual.stencils[2 - k], &keys(chain, &psi), &keys(chain, &u), chain.h).to_dense();
        let g_psi = dense_gram(chain, k + 1, &psi);
        let g_u = dense_gram(chain, k, &u);
        let ins: Vec<f64> =
            psi.iter().map(|&r| if self.geo.inside(chain.position(k + 1, r)) { 1.0 } else { 0.0 }).collect();
        let gd = &g_psi * &d;
        let ddg = dd.transpose() * &g_u;
        let r = Mat::from_fn(psi.len(), u.len(), |i, j| ins[i] * gd[(i, j)] - ddg[(i, j)]);
        let (null, gap) = null_space(&r, tol_sub)?;
        let strong_idx = self.strong.levels[k].indices();
        let pos_u: BTreeMap<usize, usize> = u.iter().enumerate().map(|(a, &i)| (i, a)).collect();
        let mut missing = 0;
        let mut es_cols = Vec::new();
        for i in &strong_idx {
            match pos_u.get(i) {
                Some(&a) => {
                    let mut e = vec![0.0; u.len()];
                    e[a] = 1.0;
                    es_cols.push(e);
                }
                None => missing += 1,
            }
        }
        let es = linalg::from_columns(u.len(), &es_cols);
        let lower = dense_cholesky(&g_u)?;
        let q1 = linalg::orthonormalize(&(lower.transpose() * &null), 1e-12);
        let q2 = linalg::orthonormalize(&(lower.transpose() * &es), 1e-12);
        let max_angle = principal_angle_max(&q1, &q2)?;
        let basis = lower_solve_transpose(&lower, &q1);
        let report = WeakStrongReport {
            which: chain.which,
            level: k,
            op: chain.which.op_names()[k].to_string(),
            weak_dim: null.ncols(),
            strong_dim: strong_idx.len(),
            missing,
            gap,
            max_angle,
            pass: null.ncols() == strong_idx.len() && missing == 0 && max_angle < 1e-6,
        };
        Ok((WeakSpace { level: k, graph_indices: u, basis }, report))
    }
}

/// Convenience wrapper for a single level.
pub fn weak_bc_space(
    dom: &VoxelDomain,
    part: &BoundaryPartition,
    which: Which,
    level: usize,
    widths: &[i32; 4],
    dual_widths: &[i32; 4],
    tol_sub: f64,
) -> Result<(WeakSpace, WeakStrongReport)> {
    WeakStrongStudy::new(dom, part, which, widths, dual_widths)?.weak_space(level, tol_sub)
}

/// Required ratio between the last kept and first discarded singular value.
pub const RANK_GAP: f64 = 1e2;

/// Right null space by SVD with a relative cut; errors when the cut is not
/// separated by [`RANK_GAP`].
pub fn null_space(a: &Mat<f64>, tol: f64) -> Result<(Mat<f64>, f64)> {
    let n = a.ncols();
    if a.nrows() == 0 || n == 0 {
        return Ok((Mat::identity(n, n), f64::INFINITY));
    }
    linalg::init_parallelism();
    let svd = a.svd().map_err(|e| LabError::SolverDiverged { detail: format!("SVD: {e:?}") })?;
    let s: Vec<f64> = (0..a.nrows().min(n)).map(|i| svd.S()[i]).collect();
    let top = s.first().copied().unwrap_or(0.0);
    let rank = if top > 0.0 { s.iter().filter(|&&v| v > tol * top).count() } else { 0 };
    let gap = if rank == 0 || rank == s.len() {
        f64::INFINITY
    } else {
        s[rank - 1] / s[rank].max(f64::MIN_POSITIVE)
    };
    if gap < RANK_GAP {
        return Err(LabError::RankDeficient { gap, required: RANK_GAP });
    }
    let v = svd.V();
    Ok((Mat::from_fn(n, n - rank, |i, j| v[(i, rank + j)]), gap))
}

fn dense_cholesky(g: &Mat<f64>) -> Result<Mat<f64>> {
    let n = g.nrows();
    let mut l = Mat::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut s = g[(i, j)];
            for p in 0..j {
                s -= l[(i, p)] * l[(j, p)];
            }
            if i == j {
                if !(s > 0.0) {
                    return Err(LabError::WeightNotSPD { index: i, min_eig: s });
                }
                l[(i, i)] = s.sqrt();
            } else {
                l[(i, j)] = s / l[(j, j)];
            }
        }
    }
    Ok(l)
}

/// Solves `Lᵀ X = B` for lower-triangular `L`.
fn lower_solve_transpose(l: &Mat<f64>, b: &Mat<f64>) -> Mat<f64> {
    let n = l.nrows();
    let mut x = b.clone();
    for c in 0..b.ncols() {
        for i in (0..n).rev() {
            let mut s = x[(i, c)];
            for p in i + 1..n {
                s -= l[(p, i)] * x[(p, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
    }
    x
}

/// Largest principal angle between two orthonormal column spans, taken over
/// the smaller span (computed through its sine for accuracy near zero).
pub fn principal_angle_max(q1: &Mat<f64>, q2: &Mat<f64>) -> Result<f64> {
    match (q1.ncols(), q2.ncols()) {
        (0, 0) => return Ok(0.0),
        (0, _) | (_, 0) => return Ok(std::f64::consts::FRAC_PI_2),
        _ => {}
    }
    let (small, large) = if q1.ncols() <= q2.ncols() { (q1, q2) } else { (q2, q1) };
    let resid = small - large * (large.transpose() * small);
    let sv = linalg::dense_singular_values(&resid)?;
    let largest = sv.iter().copied().fold(0.0, f64::max);
    Ok(largest.min(1.0).asin())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_domain, partition_boundary, DomainShape, FaceSelector};
    use crate::masks::MIN_WIDTHS;

    fn setup(n: usize, sel: FaceSelector) -> (VoxelDomain, BoundaryPartition) {
        let d = build_domain(GridSpec::cube(n, 1.0).unwrap(), &DomainShape::FullBox).unwrap();
        let p = partition_boundary(&d, &sel);
        (d, p)
    }

    #[test]
    fn random_weight_blocks_are_admissible() {
        for kind in [FieldKind::Sym, FieldKind::Dev] {
            let g = gram_f64(kind);
            let k = g.len();
            let root = spd_sqrt(&g);
            let flat: Vec<f64> = (0..k * k).map(|t| root[(t / k, t % k)]).collect();
            let inv = invert_block(&flat, k);
            let rinv = Mat::from_fn(k, k, |i, j| inv[i * k + j]);
            for b in (Weight::Random { seed: 3 }).blocks(kind, 20) {
                let w = Mat::from_fn(k, k, |i, j| b[i * k + j]);
                let (vals, _) = linalg::dense_eigh(&(&rinv * &w * &rinv)).unwrap();
                assert!(vals[0] >= 1.0 - 1e-9 && vals[k - 1] <= MAX_WEIGHT_CONDITION * (1.0 + 1e-9), "{vals:?}");
            }
        }
    }

    #[test]
    fn primal_complex_is_exact_and_dual_is_involutive() {
        let (d, p) = setup(5, FaceSelector::AllN);
        let c = build_complex(Which::First, &d, &p, &MIN_WIDTHS, &Weights::random(2)).unwrap();
        assert_eq!(c.composite_max(), [0.0, 0.0]);
        let dd = dual_complex(&dual_complex(&c).unwrap()).unwrap();
        for k in 0..3 {
            let diff = dd.d[k].combine(1.0, &c.d[k], -1.0).max_abs();
            assert!(diff <= 1e-12 * c.d[k].max_abs(), "level {k}: {diff}");
        }
    }

    #[test]
    fn end_terms_are_kernels() {
        let (d, p) = setup(5, FaceSelector::AllN);
        for which in [Which::First, Which::Second] {
            let c = build_complex(which, &d, &p, &MIN_WIDTHS, &Weights::identity()).unwrap();
            assert_eq!(c.head.dim(), 4);
            assert_eq!(c.tail.dim(), 0);
            for s in &c.head.samples {
                let img = c.apply(0, s);
                assert!(linalg::norm(&img) <= 1e-10 * linalg::norm(s), "{which:?}");
            }
            let mass = &c.spaces[0].mass;
            let x: Vec<f64> = (0..c.dims()[0]).map(|i| ((i * 7919) % 13) as f64).collect();
            let px = c.head.project(&x, mass);
            let ppx = c.head.project(&px, mass);
            assert!(linalg::norm(&linalg::sub(&px, &ppx)) <= 1e-12 * linalg::norm(&px));
        }
    }

    #[test]
    fn all_t_leaves_no_polynomials_at_the_head() {
        let (d, p) = setup(5, FaceSelector::AllT);
        let c = build_complex(Which::First, &d, &p, &MIN_WIDTHS, &Weights::identity()).unwrap();
        assert_eq!(c.head.dim(), 0);
        assert_eq!(c.tail.dim(), 4);
        // the range of Div_T is orthogonal to RT
        let t: Vec<f64> = (0..c.dims()[2]).map(|i| ((i * 31) % 17) as f64 - 8.0).collect();
        let y = c.apply(2, &t);
        let py = c.tail.project(&y, &c.spaces[3].mass);
        assert!(c.norm(3, &py) <= 1e-8 * c.norm(3, &y));
    }
}
