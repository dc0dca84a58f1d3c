//! Difference operators: the symbol catalog (vector calculus, pointwise
//! tensor algebra, the six biharmonic operators) and their assembly on a
//! lattice box or on explicit DOF sets.
//!
//! Full-box assembly realizes each monomial `∂^α` as the product of
//! one-sided truncated forward differences, whose last row along the axis is
//! zero. Those matrices commute, so every symbolic identity between
//! polynomials in `∂` holds exactly for the assembled matrices.

use std::collections::HashMap;

use crate::grid::{FieldKind, GridSpec, LatticeBox};
use crate::linalg::{BlockDiag, Csr};
use crate::masks::{DofMask, Status};
use crate::sparse::SparseOp;
use crate::stencil::{inverse, q, qf, Poly, StencilOp, SymOp, Q};
use crate::tensor::{DEV_COMPONENTS, DEV_GRAM, SYM_COMPONENTS, SYM_GRAM};
use crate::error::{LabError, Result};

/// Lattice margin around the node box. Stencils reach at most two steps and
/// offsets at most one and a half, so DOFs that can be active stay clear of
/// the truncated rows at the far face.
pub const MARGIN: usize = 4;

fn idx(i: usize, j: usize) -> usize {
    3 * i + j
}

fn levi(i: usize, j: usize, k: usize) -> i64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1,
        _ => 0,
    }
}

pub fn d(axis: usize) -> Poly {
    Poly::partial(axis)
}

pub mod symbols {
    //! Operator symbols. Matrix-valued fields use 9 row-major components;
    //! `Grad`, `Rot`, `Div` act row-wise.
    use super::*;

    pub fn grad() -> SymOp {
        SymOp::from_fn(3, 1, |i, _| d(i))
    }

    /// `rot = spn grad`, `(rot v)_i = ε_ijk ∂_j v_k`.
    pub fn rot() -> SymOp {
        SymOp::from_fn(3, 3, |i, k| {
            (0..3).fold(Poly::zero(), |acc, j| acc.add(&d(j).scale(q(levi(i, j, k)))))
        })
    }

    pub fn div() -> SymOp {
        SymOp::from_fn(1, 3, |_, j| d(j))
    }

    /// `(Grad v)_ij = ∂_j v_i`
    pub fn grad_rows() -> SymOp {
        let mut op = SymOp::zeros(9, 3);
        for i in 0..3 {
            for j in 0..3 {
                op.set(idx(i, j), i, d(j));
            }
        }
        op
    }

    /// `(Rot S)_ij = ε_jkl ∂_k S_il`
    pub fn rot_rows() -> SymOp {
        let mut op = SymOp::zeros(9, 9);
        for i in 0..3 {
            for j in 0..3 {
                for l in 0..3 {
                    let p = (0..3).fold(Poly::zero(), |acc, k| acc.add(&d(k).scale(q(levi(j, k, l)))));
                    op.set(idx(i, j), idx(i, l), p);
                }
            }
        }
        op
    }

    /// `(Div S)_i = ∂_j S_ij`
    pub fn div_rows() -> SymOp {
        let mut op = SymOp::zeros(3, 9);
        for i in 0..3 {
            for j in 0..3 {
                op.set(i, idx(i, j), d(j));
            }
        }
        op
    }

    pub fn sym_gram() -> Vec<Vec<Q>> {
        SYM_GRAM.iter().map(|r| r.iter().map(|&v| q(v as i64)).collect()).collect()
    }

    pub fn dev_gram() -> Vec<Vec<Q>> {
        DEV_GRAM.iter().map(|r| r.iter().map(|&v| q(v as i64)).collect()).collect()
    }

    pub fn identity_gram(n: usize) -> Vec<Vec<Q>> {
        (0..n).map(|i| (0..n).map(|j| q((i == j) as i64)).collect()).collect()
    }

    pub fn gram(kind: FieldKind) -> Vec<Vec<Q>> {
        match kind {
            FieldKind::Scalar => identity_gram(1),
            FieldKind::Vector => identity_gram(3),
            FieldKind::Sym => sym_gram(),
            FieldKind::Dev => dev_gram(),
        }
    }

    fn iota_s_matrix() -> Vec<Vec<Q>> {
        let mut m = vec![vec![q(0); 6]; 9];
        for (c, &(i, j)) in SYM_COMPONENTS.iter().enumerate() {
            m[idx(i, j)][c] = q(1);
            m[idx(j, i)][c] = q(1);
        }
        m
    }

    fn iota_t_matrix() -> Vec<Vec<Q>> {
        let mut m = vec![vec![q(0); 8]; 9];
        for (c, &(i, j)) in DEV_COMPONENTS.iter().enumerate() {
            m[idx(i, j)][c] = q(1);
        }
        m[idx(2, 2)][0] = q(-1);
        m[idx(2, 2)][4] = q(-1);
        m
    }

    fn gram_adjoint(embed: &[Vec<Q>], gram: &[Vec<Q>]) -> Vec<Vec<Q>> {
        let ginv = inverse(gram).expect("Gram matrices are invertible");
        let (rows, cols) = (embed[0].len(), embed.len());
        (0..rows)
            .map(|r| (0..cols).map(|c| (0..rows).map(|k| ginv[r][k] * embed[c][k]).sum()).collect())
            .collect()
    }

    pub fn iota_s() -> SymOp {
        SymOp::constant(&iota_s_matrix())
    }

    pub fn iota_s_adj() -> SymOp {
        SymOp::constant(&gram_adjoint(&iota_s_matrix(), &sym_gram()))
    }

    pub fn iota_t() -> SymOp {
        SymOp::constant(&iota_t_matrix())
    }

    pub fn iota_t_adj() -> SymOp {
        SymOp::constant(&gram_adjoint(&iota_t_matrix(), &dev_gram()))
    }

    fn pointwise9(f: impl Fn(usize, usize, usize, usize) -> Q) -> SymOp {
        let mut m = vec![vec![q(0); 9]; 9];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        m[idx(i, j)][idx(k, l)] = f(i, j, k, l);
                    }
                }
            }
        }
        SymOp::constant(&m)
    }

    fn delta(a: usize, b: usize) -> i64 {
        (a == b) as i64
    }

    pub fn sym() -> SymOp {
        pointwise9(|i, j, k, l| qf(delta(i, k) * delta(j, l) + delta(i, l) * delta(j, k), 2))
    }

    pub fn skw() -> SymOp {
        pointwise9(|i, j, k, l| qf(delta(i, k) * delta(j, l) - delta(i, l) * delta(j, k), 2))
    }

    pub fn transpose() -> SymOp {
        pointwise9(|i, j, k, l| q(delta(i, l) * delta(j, k)))
    }

    pub fn dev() -> SymOp {
        pointwise9(|i, j, k, l| q(delta(i, k) * delta(j, l)) - qf(delta(i, j) * delta(k, l), 3))
    }

    pub fn tr() -> SymOp {
        SymOp::from_fn(1, 9, |_, c| Poly::constant(q(((c % 4) == 0) as i64)))
    }

    /// `u ↦ u id`
    pub fn times_id() -> SymOp {
        SymOp::from_fn(9, 1, |r, _| Poly::constant(q(((r % 4) == 0) as i64)))
    }

    /// `v ↦ spn v`
    pub fn spn() -> SymOp {
        SymOp::from_fn(9, 3, |r, k| Poly::constant(q(-levi(r / 3, r % 3, k))))
    }

    /// `M ↦ spn⁻¹ skw M`
    pub fn spn_inv() -> SymOp {
        SymOp::from_fn(3, 9, |k, r| Poly::constant(qf(-levi(r / 3, r % 3, k), 2)))
    }

    pub fn gradgrad() -> SymOp {
        iota_s_adj().compose(&grad_rows()).compose(&grad())
    }

    pub fn rot_s() -> SymOp {
        iota_t_adj().compose(&rot_rows()).compose(&iota_s())
    }

    pub fn div_t() -> SymOp {
        div_rows().compose(&iota_t())
    }

    pub fn dev_grad() -> SymOp {
        iota_t_adj().compose(&grad_rows())
    }

    pub fn sym_rot_t() -> SymOp {
        iota_s_adj().compose(&rot_rows()).compose(&iota_t())
    }

    pub fn div_div_s() -> SymOp {
        div().compose(&div_rows()).compose(&iota_s())
    }
}

/// Entries `(y, c)` of the `a`-th power of the truncated forward difference
/// on `n` points, per row.
fn difference_power(n: usize, a: u8) -> Vec<Vec<(usize, i64)>> {
    (0..n)
        .map(|x| {
            let mut row = vec![0i64; n];
            row[x] = 1;
            for _ in 0..a {
                // row ← row · D, where (D u)(y) = u(y+1) - u(y) for y < n-1
                let mut next = vec![0i64; n];
                for y in 0..n {
                    if row[y] != 0 && y + 1 < n {
                        next[y + 1] += row[y];
                        next[y] -= row[y];
                    }
                }
                row = next;
            }
            row.into_iter().enumerate().filter(|(_, v)| *v != 0).collect()
        })
        .collect()
}

/// Full-box matrix of a symbol, component-slowest layout.
pub fn assemble(sym: &SymOp, bx: &LatticeBox, h: f64) -> SparseOp {
    let order = sym.order().expect("operator symbols are homogeneous") as i32;
    let n = bx.len();
    let mut powers: HashMap<(usize, u8), Vec<Vec<(usize, i64)>>> = HashMap::new();
    let mut entries = Vec::new();
    for r in 0..sym.rows {
        for c in 0..sym.cols {
            for (e, coef) in sym.entry(r, c).terms() {
                for a in 0..3 {
                    powers.entry((a, e[a])).or_insert_with(|| difference_power(bx.dims[a], e[a]));
                }
                let (px, py, pz) = (&powers[&(0, e[0])], &powers[&(1, e[1])], &powers[&(2, e[2])]);
                for site in 0..n {
                    let p = bx.point(site);
                    let l: [usize; 3] = std::array::from_fn(|a| (p[a] - bx.lo[a]) as usize);
                    for &(yz, cz) in &pz[l[2]] {
                        for &(yy, cy) in &py[l[1]] {
                            for &(yx, cx) in &px[l[0]] {
                                let col = (yz * bx.dims[1] + yy) * bx.dims[0] + yx;
                                entries.push((r * n + site, c * n + col, *coef * q(cx * cy * cz)));
                            }
                        }
                    }
                }
            }
        }
    }
    SparseOp::from_entries(sym.rows * n, sym.cols * n, entries, order, h)
}

/// Forward difference along `axis` (0-based) on the box.
pub fn partial(axis: usize, bx: &LatticeBox, h: f64) -> SparseOp {
    assemble(&SymOp::from_fn(1, 1, |_, _| d(axis)), bx, h)
}

pub struct VectorOps {
    pub grad: SparseOp,
    pub rot: SparseOp,
    pub div: SparseOp,
    pub grad_rows: SparseOp,
    pub rot_rows: SparseOp,
    pub div_rows: SparseOp,
}

pub fn assemble_vector_ops(bx: &LatticeBox, h: f64) -> VectorOps {
    VectorOps {
        grad: assemble(&symbols::grad(), bx, h),
        rot: assemble(&symbols::rot(), bx, h),
        div: assemble(&symbols::div(), bx, h),
        grad_rows: assemble(&symbols::grad_rows(), bx, h),
        rot_rows: assemble(&symbols::rot_rows(), bx, h),
        div_rows: assemble(&symbols::div_rows(), bx, h),
    }
}

pub struct BiharmonicOps {
    pub gradgrad: SparseOp,
    pub rot_s: SparseOp,
    pub div_t: SparseOp,
    pub dev_grad: SparseOp,
    pub sym_rot_t: SparseOp,
    pub div_div_s: SparseOp,
}

pub fn assemble_biharmonic_ops(bx: &LatticeBox, h: f64) -> BiharmonicOps {
    BiharmonicOps {
        gradgrad: assemble(&symbols::gradgrad(), bx, h),
        rot_s: assemble(&symbols::rot_s(), bx, h),
        div_t: assemble(&symbols::div_t(), bx, h),
        dev_grad: assemble(&symbols::dev_grad(), bx, h),
        sym_rot_t: assemble(&symbols::sym_rot_t(), bx, h),
        div_div_s: assemble(&symbols::div_div_s(), bx, h),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Which {
    First,
    Second,
}

impl Which {
    pub fn name(self) -> &'static str {
        match self {
            Which::First => "first",
            Which::Second => "second",
        }
    }

    pub fn parse(s: &str) -> Option<Which> {
        match s {
            "first" => Some(Which::First),
            "second" => Some(Which::Second),
            _ => None,
        }
    }

    pub fn kinds(self) -> [FieldKind; 4] {
        match self {
            Which::First => [FieldKind::Scalar, FieldKind::Sym, FieldKind::Dev, FieldKind::Vector],
            Which::Second => [FieldKind::Vector, FieldKind::Dev, FieldKind::Sym, FieldKind::Scalar],
        }
    }

    pub fn op_names(self) -> [&'static str; 3] {
        match self {
            Which::First => ["Gradgrad", "Rot_S", "Div_T"],
            Which::Second => ["devGrad", "symRot_T", "divDiv_S"],
        }
    }

    pub fn symbols(self) -> [SymOp; 3] {
        match self {
            Which::First => [symbols::gradgrad(), symbols::rot_s(), symbols::div_t()],
            Which::Second => [symbols::dev_grad(), symbols::sym_rot_t(), symbols::div_div_s()],
        }
    }

    /// Doubled offsets of the level-0 components. Scalars of the first
    /// complex sit at nodes; vectors of the second complex at the face
    /// centres `(1,1,1)/2 - e_i/2`.
    pub fn input_offsets(self) -> Vec<[i32; 3]> {
        match self {
            Which::First => vec![[0, 0, 0]],
            Which::Second => (0..3).map(|i| std::array::from_fn(|a| 1 - (a == i) as i32)).collect(),
        }
    }
}

/// Operators of one chain on the extended lattice box together with the
/// staggering of every level.
#[derive(Clone, Debug)]
pub struct ChainOps {
    pub which: Which,
    pub dual: bool,
    pub bx: LatticeBox,
    pub h: f64,
    pub kinds: [FieldKind; 4],
    pub stencils: Vec<StencilOp>,
    pub full: Vec<SparseOp>,
    pub offsets: Vec<Vec<[i32; 3]>>,
    pub grams: Vec<Vec<Vec<Q>>>,
}

impl ChainOps {
    pub fn new(which: Which, grid: &GridSpec) -> ChainOps {
        let bx = grid.extended_box(MARGIN);
        let syms = which.symbols();
        let stencils: Vec<StencilOp> = syms.iter().map(SymOp::to_stencils).collect();
        let full = syms.iter().map(|s| assemble(s, &bx, grid.h)).collect();
        let mut offsets = vec![which.input_offsets()];
        for st in &stencils {
            let next = st.output_offsets(offsets.last().unwrap()).expect("staggering is consistent");
            offsets.push(next);
        }
        let kinds = which.kinds();
        let grams = kinds.iter().map(|k| symbols::gram(*k)).collect();
        ChainOps { which, dual: false, bx, h: grid.h, kinds, stencils, full, offsets, grams }
    }

    /// The lattice adjoint chain `G_k⁻¹ d_kᵀ G_{k+1}`, levels reversed.
    pub fn formal_dual(&self) -> ChainOps {
        let n = self.bx.len();
        let mut stencils = Vec::new();
        let mut full = Vec::new();
        for k in (0..3).rev() {
            let ginv = inverse(&self.grams[k]).unwrap();
            stencils.push(self.stencils[k].formal_adjoint(&ginv, &self.grams[k + 1]));
            let left = SparseOp::pointwise(&ginv, n, self.h);
            let right = SparseOp::pointwise(&self.grams[k + 1], n, self.h);
            full.push(left.compose(&self.full[k].transpose()).compose(&right));
        }
        let mut kinds = self.kinds;
        kinds.reverse();
        ChainOps {
            which: self.which,
            dual: !self.dual,
            bx: self.bx,
            h: self.h,
            kinds,
            stencils,
            full,
            offsets: self.offsets.iter().rev().cloned().collect(),
            grams: self.grams.iter().rev().cloned().collect(),
        }
    }

    pub fn level_len(&self, k: usize) -> usize {
        self.kinds[k].ncomp() * self.bx.len()
    }

    /// Doubled physical position of full-box DOF `i` at level `k`.
    pub fn position(&self, k: usize, i: usize) -> [i32; 3] {
        let n = self.bx.len();
        let (c, site) = (i / n, i % n);
        let x = self.bx.point(site);
        std::array::from_fn(|a| 2 * x[a] + self.offsets[k][c][a])
    }

    /// Box of doubled positions covering every DOF of every level.
    pub fn doubled_region(&self) -> LatticeBox {
        let mut lo = [i32::MAX; 3];
        let mut hi = [i32::MIN; 3];
        for offs in &self.offsets {
            for o in offs {
                for a in 0..3 {
                    lo[a] = lo[a].min(2 * self.bx.lo[a] + o[a]);
                    hi[a] = hi[a].max(2 * self.bx.hi()[a] + o[a]);
                }
            }
        }
        LatticeBox { lo, dims: std::array::from_fn(|a| (hi[a] - lo[a] + 1) as usize) }
    }
}

/// DOF lookup for direct stencil assembly: `(component, lattice point)`.
pub type DofKey = (usize, [i32; 3]);

/// Assembles a stencil operator between explicit DOF sets, dropping terms
/// whose input DOF is not in `input`.
pub fn assemble_on(st: &StencilOp, input: &[DofKey], output: &[DofKey], h: f64) -> SparseOp {
    let lookup: HashMap<DofKey, usize> = input.iter().enumerate().map(|(i, k)| (*k, i)).collect();
    let mut entries = Vec::new();
    for (row, &(r, x)) in output.iter().enumerate() {
        for c in 0..st.cols {
            for (s, coef) in st.entry(r, c).terms() {
                let y = [x[0] + s[0], x[1] + s[1], x[2] + s[2]];
                if let Some(&col) = lookup.get(&(c, y)) {
                    entries.push((row, col, *coef));
                }
            }
        }
    }
    SparseOp::from_entries(output.len(), input.len(), entries, st.order as i32, h)
}

/// Row/column selection to kept DOFs, checking that no kept input reaches an
/// output DOF that is constrained to zero.
pub fn restrict(op: &SparseOp, mask_in: &DofMask, mask_out: &DofMask) -> Result<SparseOp> {
    if op.cols != mask_in.status.len() || op.rows != mask_out.status.len() {
        return Err(LabError::ShapeMismatch(format!(
            "operator {}x{} against masks {} and {}",
            op.rows,
            op.cols,
            mask_out.status.len(),
            mask_in.status.len()
        )));
    }
    for r in 0..op.rows {
        if mask_out.status[r] == Status::Z && op.row(r).any(|(c, _)| mask_in.status[c] == Status::D) {
            return Err(LabError::IncompatibleWidths {
                widths: vec![mask_in.width, mask_out.width],
                detail: format!("kept input reaches constrained output row {r}"),
            });
        }
    }
    Ok(op.select(&mask_out.indices(), &mask_in.indices()))
}

/// `M_in⁻¹ opᵀ M_out`, the adjoint in the weighted products.
pub fn weighted_adjoint(op: &Csr, m_in: &BlockDiag, m_out: &BlockDiag) -> Result<Csr> {
    if op.cols != m_in.dim() || op.rows != m_out.dim() {
        return Err(LabError::ShapeMismatch("weighted adjoint masses".into()));
    }
    let inv = m_in.inverse()?;
    Ok(inv.to_csr().matmul(&op.transpose()).matmul(&m_out.to_csr()))
}
