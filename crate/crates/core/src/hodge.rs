//! Harmonic fields, Helmholtz decompositions, potentials and Poincaré
//! constants of a weighted complex, all computed in orthonormal coordinates
//! `x̃ = Lᵀx` where `M = LLᵀ` is the level mass.

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::complex::{build_complex, HilbertComplex, Weights};
use crate::error::{LabError, Result};
use crate::grid::{BoundaryPartition, VoxelDomain};
use crate::linalg::{self, Csr, EigenOptions, SpdSolver};
use crate::ops::Which;

#[derive(Clone, Debug)]
pub struct HodgeOptions {
    /// Eigenvalues below `tol_harm·‖L‖` count as harmonic.
    pub tol_harm: f64,
    /// Required ratio between the first discarded and the last kept eigenvalue.
    pub gap_required: f64,
    /// Relative residual of the iteratively refined solves.
    pub tol_solver: f64,
    pub eigen: EigenOptions,
    /// Relative diagonal shift of the factorized Laplacians.
    pub shift: f64,
}

impl Default for HodgeOptions {
    fn default() -> Self {
        HodgeOptions { tol_harm: 1e-8, gap_required: 1e2, tol_solver: 1e-12, eigen: EigenOptions::default(), shift: 1e-9 }
    }
}

fn inverse_norm2(gram: &Csr) -> f64 {
    let r = linalg::spectral_radius(gram).max(gram.max_abs());
    if r > 0.0 {
        1.0 / r
    } else {
        1.0
    }
}

/// Coefficients `[α, β]` scaling both terms of the Laplacian to unit norm.
/// The kernel does not depend on them, but without them the first- and
/// second-order terms differ by `h⁻²` and the smallest nonzero eigenvalues
/// sink towards the harmonic threshold.
pub fn laplacian_balance(c: &HilbertComplex, k: usize) -> [f64; 2] {
    let alpha = if k < 3 { inverse_norm2(&c.whitened[k].transpose().matmul(&c.whitened[k])) } else { 0.0 };
    let beta = if k > 0 { inverse_norm2(&c.whitened[k - 1].transpose().matmul(&c.whitened[k - 1])) } else { 0.0 };
    [alpha, beta]
}

/// `αB_kᵀB_k + βB_{k-1}B_{k-1}ᵀ` in orthonormal coordinates, with the
/// coefficients of [`laplacian_balance`].
pub fn hodge_laplacian(c: &HilbertComplex, k: usize) -> (Csr, [f64; 2]) {
    let n = c.spaces[k].dim();
    let [alpha, beta] = laplacian_balance(c, k);
    let mut lap = Csr::zeros(n, n);
    if k < 3 {
        let b = &c.whitened[k];
        lap = lap.combine(1.0, &b.transpose().matmul(b), alpha);
    }
    if k > 0 {
        let b = &c.whitened[k - 1];
        lap = lap.combine(1.0, &b.matmul(&b.transpose()), beta);
    }
    (lap, [alpha, beta])
}

/// Null space of a positive semidefinite operator separated by a gap.
#[derive(Clone, Debug)]
pub struct NearNull {
    /// Orthonormal columns spanning the near-null space.
    pub vectors: Mat<f64>,
    /// Computed smallest eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    /// First eigenvalue above the threshold with its eigenvector.
    pub first_nonzero: Option<(f64, Vec<f64>)>,
    pub gap: f64,
    pub scale: f64,
    pub dense: bool,
}

impl NearNull {
    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }
}

/// Splits the low spectrum of `a` at `tol_harm·‖a‖`, enlarging the block
/// until an eigenvalue above the threshold is found.
pub fn near_null(a: &Csr, level: usize, opts: &HodgeOptions) -> Result<NearNull> {
    let n = a.rows;
    let mut nev = 6.min(n);
    loop {
        let pairs = linalg::smallest_eigenpairs(a, nev, &opts.eigen)?;
        let thr = opts.tol_harm * pairs.scale;
        let m = pairs.values.iter().filter(|&&v| v <= thr).count();
        if m == pairs.values.len() && nev < n {
            nev = (2 * nev).min(n);
            continue;
        }
        let first_nonzero = (m < pairs.values.len()).then(|| (pairs.values[m], linalg::column(&pairs.vectors, m)));
        let gap = match &first_nonzero {
            None => f64::INFINITY,
            Some((v, _)) => {
                // eigenvalues below the rounding floor are indistinguishable from 0
                let floor = n as f64 * f64::EPSILON * pairs.scale;
                let last = if m > 0 { pairs.values[m - 1] } else { 0.0 };
                v / last.max(floor).max(f64::MIN_POSITIVE)
            }
        };
        if gap < opts.gap_required {
            return Err(LabError::NoSpectralGap { level, gap, required: opts.gap_required });
        }
        let vectors = Mat::from_fn(n, m, |i, j| pairs.vectors[(i, j)]);
        return Ok(NearNull { vectors, eigenvalues: pairs.values, first_nonzero, gap, scale: pairs.scale, dense: pairs.dense });
    }
}

/// Orthonormal basis of the harmonic fields at one level.
#[derive(Clone, Debug)]
pub struct HarmonicBasis {
    pub level: usize,
    /// Mass-orthonormal fields in DOF coordinates.
    pub fields: Vec<Vec<f64>>,
    /// The same basis in orthonormal coordinates.
    pub whitened: Mat<f64>,
    pub eigenvalues: Vec<f64>,
    pub eigen_gap: f64,
    pub scale: f64,
    pub dense: bool,
}

impl HarmonicBasis {
    pub fn dim(&self) -> usize {
        self.fields.len()
    }

    /// Orthogonal projection of orthonormal coordinates onto the span.
    pub fn project_whitened(&self, y: &[f64]) -> Vec<f64> {
        project_columns(&self.whitened, y)
    }
}

fn project_columns(q: &Mat<f64>, y: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; y.len()];
    for j in 0..q.ncols() {
        let col = linalg::column(q, j);
        linalg::axpy(linalg::dot(&col, y), &col, &mut out);
    }
    out
}

/// Kernel of the Hodge Laplacian at `level` (0..=3). At the end levels this
/// is the kernel of `d₀` or the cokernel of `d₂`.
pub fn harmonic_fields(c: &HilbertComplex, level: usize, opts: &HodgeOptions) -> Result<HarmonicBasis> {
    let (lap, _) = hodge_laplacian(c, level);
    let nn = near_null(&lap, level, opts)?;
    let fields = (0..nn.dim()).map(|j| c.unwhiten(level, &linalg::column(&nn.vectors, j))).collect();
    Ok(HarmonicBasis {
        level,
        fields,
        whitened: nn.vectors,
        eigenvalues: nn.eigenvalues,
        eigen_gap: nn.gap,
        scale: nn.scale,
        dense: nn.dense,
    })
}

/// Factorized Hodge Laplacian of one level with its harmonic basis.
pub struct HodgeLevel<'a> {
    pub complex: &'a HilbertComplex,
    pub level: usize,
    pub lap: Csr,
    pub balance: [f64; 2],
    pub harmonic: HarmonicBasis,
    solver: SpdSolver,
    tol: f64,
}

#[derive(Clone, Debug)]
pub struct Decomposition {
    pub range_part: Vec<f64>,
    pub harmonic_part: Vec<f64>,
    pub corange_part: Vec<f64>,
    /// Relative reconstruction residual.
    pub residual: f64,
    /// Largest pairwise weighted inner product relative to `‖x‖²`.
    pub orthogonality_defect: f64,
}

impl<'a> HodgeLevel<'a> {
    pub fn new(c: &'a HilbertComplex, level: usize, opts: &HodgeOptions) -> Result<HodgeLevel<'a>> {
        let (lap, balance) = hodge_laplacian(c, level);
        let nn = near_null(&lap, level, opts)?;
        let fields = (0..nn.dim()).map(|j| c.unwhiten(level, &linalg::column(&nn.vectors, j))).collect();
        let harmonic = HarmonicBasis {
            level,
            fields,
            whitened: nn.vectors,
            eigenvalues: nn.eigenvalues,
            eigen_gap: nn.gap,
            scale: nn.scale,
            dense: nn.dense,
        };
        let solver = SpdSolver::new(&lap.plus_diagonal(opts.shift * nn.scale.max(f64::MIN_POSITIVE)))?;
        Ok(HodgeLevel { complex: c, level, lap, balance, harmonic, solver, tol: opts.tol_solver })
    }

    /// `L⁺r` for `r` orthogonal to the harmonic fields, by shifted solves
    /// with iterative refinement.
    pub fn pseudo_solve(&self, r: &[f64]) -> Result<Vec<f64>> {
        let nr = linalg::norm(r);
        let mut phi = vec![0.0; r.len()];
        if nr == 0.0 {
            return Ok(phi);
        }
        let mut last = f64::INFINITY;
        for _ in 0..60 {
            let lp = self.lap.apply(&phi);
            let mut res = linalg::sub(r, &lp);
            res = linalg::sub(&res, &self.harmonic.project_whitened(&res));
            let rn = linalg::norm(&res);
            if rn <= self.tol * nr {
                return Ok(phi);
            }
            if rn >= last && rn <= 1e3 * self.tol * nr {
                // stagnated at rounding level
                return Ok(phi);
            }
            last = rn;
            let step = self.solver.solve(&res);
            linalg::axpy(1.0, &step, &mut phi);
            phi = linalg::sub(&phi, &self.harmonic.project_whitened(&phi));
        }
        Err(LabError::SolverDiverged { detail: format!("refinement at level {} stalled", self.level) })
    }

    /// Helmholtz decomposition in orthonormal coordinates.
    pub fn decompose_whitened(&self, y: &[f64]) -> Result<[Vec<f64>; 3]> {
        let c = self.complex;
        let k = self.level;
        let harm = self.harmonic.project_whitened(y);
        let r = linalg::sub(y, &harm);
        let phi = self.pseudo_solve(&r)?;
        let range = if k > 0 {
            let b = &c.whitened[k - 1];
            b.apply(&b.apply_transpose(&phi)).iter().map(|v| v * self.balance[1]).collect()
        } else {
            vec![0.0; y.len()]
        };
        let corange = if k < 3 {
            let b = &c.whitened[k];
            b.apply_transpose(&b.apply(&phi)).iter().map(|v| v * self.balance[0]).collect()
        } else {
            vec![0.0; y.len()]
        };
        Ok([range, harm, corange])
    }

    /// Weighted-orthogonal splitting of a field into range, harmonic and
    /// co-range parts.
    pub fn decompose(&self, x: &[f64]) -> Result<Decomposition> {
        let c = self.complex;
        let k = self.level;
        if x.len() != c.spaces[k].dim() {
            return Err(LabError::ShapeMismatch(format!("field of length {} at level {k} of size {}", x.len(), c.spaces[k].dim())));
        }
        let y = c.whiten(k, x);
        let parts = self.decompose_whitened(&y)?;
        let ny2 = linalg::dot(&y, &y);
        let mut sum = parts[0].clone();
        linalg::axpy(1.0, &parts[1], &mut sum);
        linalg::axpy(1.0, &parts[2], &mut sum);
        let (residual, orthogonality_defect) = if ny2 == 0.0 {
            (0.0, 0.0)
        } else {
            let res = linalg::norm(&linalg::sub(&y, &sum)) / ny2.sqrt();
            let o = [(0, 1), (0, 2), (1, 2)]
                .iter()
                .map(|&(a, b)| linalg::dot(&parts[a], &parts[b]).abs() / ny2)
                .fold(0.0, f64::max);
            (res, o)
        };
        let [range, harm, corange] = parts;
        Ok(Decomposition {
            range_part: c.unwhiten(k, &range),
            harmonic_part: c.unwhiten(k, &harm),
            corange_part: c.unwhiten(k, &corange),
            residual,
            orthogonality_defect,
        })
    }

    /// Orthogonal projection onto the kernel of `d_k` (range plus harmonic).
    pub fn kernel_projection(&self, x: &[f64]) -> Result<Vec<f64>> {
        let d = self.decompose(x)?;
        let mut out = d.range_part;
        linalg::axpy(1.0, &d.harmonic_part, &mut out);
        Ok(out)
    }
}

pub fn helmholtz(c: &HilbertComplex, level: usize, x: &[f64], opts: &HodgeOptions) -> Result<Decomposition> {
    HodgeLevel::new(c, level, opts)?.decompose(x)
}

/// Minimal-norm solution of `d_k x = y`, orthogonal to `ker d_k`, using the
/// factorized Laplacian of level `k+1`.
pub fn potential_solve_with(target: &HodgeLevel, y: &[f64], tol: f64) -> Result<Vec<f64>> {
    let c = target.complex;
    let k = target.level.checked_sub(1).ok_or_else(|| LabError::ShapeMismatch("no operator into level 0".into()))?;
    if y.len() != c.spaces[k + 1].dim() {
        return Err(LabError::ShapeMismatch(format!("right-hand side of length {} for d{k}", y.len())));
    }
    let yt = c.whiten(k + 1, y);
    let ny = linalg::norm(&yt);
    if ny == 0.0 {
        return Ok(vec![0.0; c.spaces[k].dim()]);
    }
    let r = linalg::sub(&yt, &target.harmonic.project_whitened(&yt));
    let phi = target.pseudo_solve(&r)?;
    let b = &c.whitened[k];
    let xt: Vec<f64> = b.apply_transpose(&phi).iter().map(|v| v * target.balance[1]).collect();
    let residual = linalg::norm(&linalg::sub(&b.apply(&xt), &yt)) / ny;
    if residual > tol {
        return Err(LabError::NotInRange { residual });
    }
    Ok(c.unwhiten(k, &xt))
}

pub fn potential_solve(c: &HilbertComplex, k: usize, y: &[f64], tol: f64, opts: &HodgeOptions) -> Result<Vec<f64>> {
    if k > 2 {
        return Err(LabError::ShapeMismatch(format!("operator index {k}")));
    }
    let target = HodgeLevel::new(c, k + 1, opts)?;
    potential_solve_with(&target, y, tol)
}

#[derive(Clone, Debug)]
pub struct PoincareReport {
    /// Constants `c_k = 1/σ_min⁺(d_k)`.
    pub c: [f64; 3],
    pub sigma: [f64; 3],
    pub gaps: [f64; 3],
    /// Null spaces deflated for each constant: `ker d₀`, the harmonic
    /// fields of level 1, and `ker d₂*`.
    pub null_dims: [usize; 3],
    /// Attaining fields at level `k`, DOF coordinates, unit weighted norm.
    pub extremal: [Vec<f64>; 3],
    /// The same in orthonormal coordinates.
    pub extremal_whitened: [Vec<f64>; 3],
}

fn first_nonzero(nn: &NearNull, level: usize) -> Result<(f64, Vec<f64>)> {
    nn.first_nonzero
        .clone()
        .ok_or(LabError::NoSpectralGap { level, gap: 0.0, required: 0.0 })
}

pub fn poincare_constants(c: &HilbertComplex, opts: &HodgeOptions) -> Result<PoincareReport> {
    let b0 = &c.whitened[0];
    let b1 = &c.whitened[1];
    let b2 = &c.whitened[2];
    let l0 = b0.transpose().matmul(b0);
    let n0 = near_null(&l0, 0, opts)?;
    let (lam0, x0) = first_nonzero(&n0, 0)?;
    let norm1 = linalg::spectral_radius(&b1.transpose().matmul(b1)).max(b1.max_abs().powi(2));
    let gamma = 4.0 * norm1 / lam0;
    let a1 = b1.transpose().matmul(b1).combine(1.0, &b0.matmul(&b0.transpose()), gamma);
    let n1 = near_null(&a1, 1, opts)?;
    let (lam1, x1) = first_nonzero(&n1, 1)?;
    let l3 = b2.matmul(&b2.transpose());
    let n3 = near_null(&l3, 2, opts)?;
    let (lam2, y2) = first_nonzero(&n3, 2)?;
    let sigma = [lam0.sqrt(), lam1.sqrt(), lam2.sqrt()];
    let mut x2 = b2.apply_transpose(&y2);
    let nx2 = linalg::norm(&x2);
    x2.iter_mut().for_each(|v| *v /= nx2);
    let ext_w = [x0, x1, x2];
    let extremal = std::array::from_fn(|k| c.unwhiten(k, &ext_w[k]));
    Ok(PoincareReport {
        c: sigma.map(|s| 1.0 / s),
        sigma,
        gaps: [n0.gap, n1.gap, n3.gap],
        null_dims: [n0.dim(), n1.dim(), n3.dim()],
        extremal,
        extremal_whitened: ext_w,
    })
}

#[derive(Clone, Debug)]
pub struct CombinedReport {
    pub samples: usize,
    pub max_ratio: f64,
    /// Ratio at the extremal range field of the first constant.
    pub tightness: f64,
}

/// `‖S‖² ≤ c₁²‖d₁S‖² + c₀²‖d₀*S‖²` on harmonic-free level-1 fields.
pub fn combined_ratio(c: &HilbertComplex, p: &PoincareReport, y: &[f64]) -> f64 {
    let lhs = linalg::dot(y, y);
    if lhs == 0.0 {
        return 0.0;
    }
    let r1 = c.whitened[1].apply(y);
    let r0 = c.whitened[0].apply_transpose(y);
    let rhs = p.c[1].powi(2) * linalg::dot(&r1, &r1) + p.c[0].powi(2) * linalg::dot(&r0, &r0);
    lhs / rhs
}

pub fn combined_estimate_check(
    c: &HilbertComplex,
    p: &PoincareReport,
    harm1: &HarmonicBasis,
    samples: usize,
    seed: u64,
) -> CombinedReport {
    let n = c.spaces[1].dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_ratio: f64 = 0.0;
    for _ in 0..samples {
        let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        let y = linalg::sub(&x, &harm1.project_whitened(&x));
        max_ratio = max_ratio.max(combined_ratio(c, p, &y));
    }
    let ext = c.whitened[0].apply(&p.extremal_whitened[0]);
    let tightness = combined_ratio(c, p, &ext);
    CombinedReport { samples, max_ratio, tightness }
}

#[derive(Clone, Debug)]
pub struct PoincareSampleReport {
    pub level: usize,
    pub samples: usize,
    /// Largest `‖x‖ / (c_k‖d_k x‖)` over random `x ⊥ ker d_k`.
    pub max_ratio: f64,
    /// The same ratio at the extremal field.
    pub tightness: f64,
}

fn poincare_ratio(c: &HilbertComplex, p: &PoincareReport, k: usize, y: &[f64]) -> f64 {
    let ny = linalg::norm(y);
    if ny == 0.0 {
        return 0.0;
    }
    ny / (p.c[k] * linalg::norm(&c.whitened[k].apply(y)))
}

/// `‖x‖ ≤ c_k‖d_k x‖` on seeded random fields projected onto `(ker d_k)⊥`.
pub fn poincare_sample_check(
    c: &HilbertComplex,
    p: &PoincareReport,
    samples: usize,
    seed: u64,
    opts: &HodgeOptions,
) -> Result<Vec<PoincareSampleReport>> {
    let mut out = Vec::new();
    for k in 0..3 {
        let level = HodgeLevel::new(c, k, opts)?;
        let n = c.spaces[k].dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((k as u64 + 1) << 32));
        let mut max_ratio: f64 = 0.0;
        for _ in 0..samples {
            let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
            let [_, _, corange] = level.decompose_whitened(&x)?;
            max_ratio = max_ratio.max(poincare_ratio(c, p, k, &corange));
        }
        let tightness = poincare_ratio(c, p, k, &p.extremal_whitened[k]);
        out.push(PoincareSampleReport { level: k, samples, max_ratio, tightness });
    }
    Ok(out)
}

/// Ranks of the whitened operators from the chain of kernel dimensions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DimensionLedger {
    pub dims: [usize; 4],
    pub ranks: [usize; 3],
    /// Kernel of `d₀`, harmonic dimensions at levels 1 and 2, cokernel of `d₂`.
    pub cohomology: [usize; 4],
    /// Cokernel dimension implied by the ranks equals the computed one.
    pub consistent: bool,
}

pub fn dimension_ledger(c: &HilbertComplex, opts: &HodgeOptions) -> Result<DimensionLedger> {
    let coh: Vec<usize> = (0..4).map(|k| harmonic_fields(c, k, opts).map(|h| h.dim())).collect::<Result<_>>()?;
    let dims = c.dims();
    let r0 = dims[0] - coh[0];
    let r1 = dims[1] - r0 - coh[1];
    let r2 = dims[2] - r1 - coh[2];
    let consistent = dims[3] >= r2 && dims[3] - r2 == coh[3];
    Ok(DimensionLedger { dims, ranks: [r0, r1, r2], cohomology: [coh[0], coh[1], coh[2], coh[3]], consistent })
}

#[derive(Clone, Debug)]
pub struct AltProjectionReport {
    pub level: usize,
    pub kernel_dim: usize,
    pub harmonic_dim: usize,
    pub range_rank: usize,
    /// Smallest singular value of `⟨H, B⟩`; 1 when the pre-basis is the
    /// harmonic basis itself, `None` when both are empty.
    pub harmonic_vs_prebasis: Option<f64>,
    /// Largest relative distance of sampled `ker ∩ B⊥` fields to the range.
    pub max_distance_to_range: f64,
    pub pass: bool,
}

/// Checks that no harmonic field is orthogonal to the pre-basis and that
/// `ker d_k ∩ B⊥` coincides with the range of `d_{k-1}`.
pub fn alt_projection_check(level: &HodgeLevel, ledger: &DimensionLedger, samples: usize, seed: u64) -> Result<AltProjectionReport> {
    let k = level.level;
    let h = &level.harmonic.whitened;
    let n = level.lap.rows;
    let harmonic_vs_prebasis = if h.ncols() == 0 {
        None
    } else {
        let g = h.transpose() * h;
        let sv = linalg::dense_singular_values(&g)?;
        Some(sv.iter().copied().fold(f64::INFINITY, f64::min))
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        let [range, harm, _] = level.decompose_whitened(&x)?;
        let mut kern = range;
        linalg::axpy(1.0, &harm, &mut kern);
        let z = linalg::sub(&kern, &level.harmonic.project_whitened(&kern));
        let nz = linalg::norm(&z);
        if nz == 0.0 {
            continue;
        }
        let [_, zh, zc] = level.decompose_whitened(&z)?;
        worst = worst.max((linalg::norm(&zh) + linalg::norm(&zc)) / nz);
    }
    let kernel_dim = if k < 3 { ledger.dims[k] - ledger.ranks[k] } else { ledger.dims[3] };
    let range_rank = if k > 0 { ledger.ranks[k - 1] } else { 0 };
    let harmonic_dim = level.harmonic.dim();
    let pass = kernel_dim == range_rank + harmonic_dim
        && harmonic_vs_prebasis.map_or(true, |s| s > 0.5)
        && worst < 1e-6;
    Ok(AltProjectionReport {
        level: k,
        kernel_dim,
        harmonic_dim,
        range_rank,
        harmonic_vs_prebasis,
        max_distance_to_range: worst,
        pass,
    })
}

#[derive(Clone, Debug)]
pub struct WeightStudyRow {
    pub weights: String,
    pub harmonic: [usize; 2],
    pub gaps: [f64; 2],
}

#[derive(Clone, Debug)]
pub struct WeightStudy {
    pub which: Which,
    pub rows: Vec<WeightStudyRow>,
    pub all_equal: bool,
}

/// Harmonic dimensions for identity weights and seeded random weights.
pub fn weight_independence_study(
    dom: &VoxelDomain,
    part: &BoundaryPartition,
    which: Which,
    widths: &[i32; 4],
    seeds: &[u64],
    opts: &HodgeOptions,
) -> Result<WeightStudy> {
    let mut all = vec![Weights::identity()];
    all.extend(seeds.iter().map(|&s| Weights::random(s)));
    let mut rows = Vec::new();
    for w in all {
        let c = build_complex(which, dom, part, widths, &w)?;
        let h1 = harmonic_fields(&c, 1, opts)?;
        let h2 = harmonic_fields(&c, 2, opts)?;
        rows.push(WeightStudyRow {
            weights: format!("eps={} mu={}", w.eps.describe(), w.mu.describe()),
            harmonic: [h1.dim(), h2.dim()],
            gaps: [h1.eigen_gap, h2.eigen_gap],
        });
    }
    let all_equal = rows.windows(2).all(|w| w[0].harmonic == w[1].harmonic);
    Ok(WeightStudy { which, rows, all_equal })
}

/// Seeded random field in DOF coordinates.
pub fn random_field(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect()
}
