//! Dense reference computations for small complexes.

use faer::Mat;

use crate::complex::{HilbertComplex, RANK_GAP};
use crate::error::{LabError, Result};
use crate::linalg;

/// Total DOF count above which the dense oracle refuses to run.
pub const ORACLE_LIMIT: usize = 20_000;

/// Relative singular value cut separating the numerical kernel.
pub const RANK_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct OracleReport {
    pub dims: [usize; 4],
    pub ranks: [usize; 3],
    /// `ker d₀`, harmonic dimensions of levels 1 and 2, `coker d₂`.
    pub cohomology: [usize; 4],
    pub sigma_min: [f64; 3],
    pub c: [f64; 3],
    pub rank_gaps: [f64; 3],
}

fn check_size(c: &HilbertComplex) -> Result<()> {
    let total = c.total_dofs();
    if total > ORACLE_LIMIT {
        return Err(LabError::TooLarge { dofs: total, limit: ORACLE_LIMIT });
    }
    Ok(())
}

struct Spectrum {
    rank: usize,
    sigma_min: f64,
    gap: f64,
}

fn spectrum(s: &[f64]) -> Result<Spectrum> {
    let top = s.iter().copied().fold(0.0, f64::max);
    let rank = s.iter().filter(|&&v| v > RANK_TOL * top).count();
    let mut sorted = s.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let sigma_min = if rank > 0 { sorted[rank - 1] } else { 0.0 };
    let gap = if rank == 0 || rank == sorted.len() {
        f64::INFINITY
    } else {
        sorted[rank - 1] / sorted[rank].max(f64::MIN_POSITIVE)
    };
    if gap < RANK_GAP {
        return Err(LabError::RankDeficient { gap, required: RANK_GAP });
    }
    Ok(Spectrum { rank, sigma_min, gap })
}

/// Ranks, cohomology dimensions and Poincaré constants from dense SVDs.
pub fn dense_oracle(c: &HilbertComplex) -> Result<OracleReport> {
    check_size(c)?;
    let dims = c.dims();
    let mut sp = Vec::new();
    for k in 0..3 {
        let s = linalg::dense_singular_values(&c.whitened[k].to_dense())?;
        sp.push(spectrum(&s)?);
    }
    let ranks = [sp[0].rank, sp[1].rank, sp[2].rank];
    let cohomology = [
        dims[0] - ranks[0],
        dims[1] - ranks[0] - ranks[1],
        dims[2] - ranks[1] - ranks[2],
        dims[3] - ranks[2],
    ];
    let sigma_min = [sp[0].sigma_min, sp[1].sigma_min, sp[2].sigma_min];
    Ok(OracleReport {
        dims,
        ranks,
        cohomology,
        sigma_min,
        c: sigma_min.map(|s| 1.0 / s),
        rank_gaps: [sp[0].gap, sp[1].gap, sp[2].gap],
    })
}

/// Orthonormal bases of the column space and the row space of `a`.
fn range_bases(a: &Mat<f64>) -> Result<(Mat<f64>, Mat<f64>)> {
    linalg::init_parallelism();
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok((Mat::zeros(a.nrows(), 0), Mat::zeros(a.ncols(), 0)));
    }
    let svd = a.thin_svd().map_err(|e| LabError::SolverDiverged { detail: format!("thin SVD: {e:?}") })?;
    let m = a.nrows().min(a.ncols());
    let s: Vec<f64> = (0..m).map(|i| svd.S()[i]).collect();
    let r = spectrum(&s)?.rank;
    let u = svd.U();
    let v = svd.V();
    // faer orders singular values non-increasingly
    Ok((Mat::from_fn(a.nrows(), r, |i, j| u[(i, j)]), Mat::from_fn(a.ncols(), r, |i, j| v[(i, j)])))
}

fn project(q: &Mat<f64>, y: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; y.len()];
    for j in 0..q.ncols() {
        let col = linalg::column(q, j);
        linalg::axpy(linalg::dot(&col, y), &col, &mut out);
    }
    out
}

/// Range, harmonic and co-range parts by dense orthogonal projection.
pub fn dense_helmholtz(c: &HilbertComplex, level: usize, x: &[f64]) -> Result<[Vec<f64>; 3]> {
    check_size(c)?;
    let n = c.spaces[level].dim();
    let y = c.whiten(level, x);
    let range = if level > 0 {
        let (u, _) = range_bases(&c.whitened[level - 1].to_dense())?;
        project(&u, &y)
    } else {
        vec![0.0; n]
    };
    let corange = if level < 3 {
        let (_, v) = range_bases(&c.whitened[level].to_dense())?;
        project(&v, &y)
    } else {
        vec![0.0; n]
    };
    let harm = linalg::sub(&linalg::sub(&y, &range), &corange);
    Ok([c.unwhiten(level, &range), c.unwhiten(level, &harm), c.unwhiten(level, &corange)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::{build_complex, Weights};
    use crate::grid::{build_domain, partition_boundary, DomainShape, FaceSelector, GridSpec};
    use crate::masks::MIN_WIDTHS;
    use crate::ops::Which;

    #[test]
    fn cube_has_polynomial_ends_only() {
        let d = build_domain(GridSpec::cube(4, 1.0).unwrap(), &DomainShape::FullBox).unwrap();
        let p = partition_boundary(&d, &FaceSelector::AllN);
        let c = build_complex(Which::Second, &d, &p, &MIN_WIDTHS, &Weights::identity()).unwrap();
        let r = dense_oracle(&c).unwrap();
        assert_eq!(r.cohomology, [4, 0, 0, 0]);
    }

    #[test]
    fn refuses_large_problems() {
        let d = build_domain(GridSpec::cube(16, 1.0).unwrap(), &DomainShape::FullBox).unwrap();
        let p = partition_boundary(&d, &FaceSelector::AllN);
        let c = build_complex(Which::First, &d, &p, &MIN_WIDTHS, &Weights::identity()).unwrap();
        assert!(matches!(dense_oracle(&c), Err(LabError::TooLarge { .. })));
    }
}
