//! Staggered DOF classification realizing strong boundary conditions.
//!
//! Every full-box DOF of a chain level is either kept (`D`), constrained to
//! zero (`Z`), or outside the domain with a natural condition (`X`). Widths
//! are measured in doubled (half-cell) units.

use std::collections::BTreeSet;

use crate::error::{LabError, Result};
use crate::grid::{BoundaryPartition, FieldKind, Geometry, Nearest, Tag, VoxelDomain};
use crate::ops::{ChainOps, Which};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Status {
    D,
    Z,
    X,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DofMask {
    pub kind: FieldKind,
    pub status: Vec<Status>,
    pub width: i32,
}

impl DofMask {
    /// Full-box indices of the kept DOFs, ascending.
    pub fn indices(&self) -> Vec<usize> {
        self.status.iter().enumerate().filter(|(_, s)| **s == Status::D).map(|(i, _)| i).collect()
    }

    pub fn count(&self) -> usize {
        self.status.iter().filter(|s| **s == Status::D).count()
    }

    pub fn keep(&self, i: usize) -> bool {
        self.status[i] == Status::D
    }
}

/// Masks of one chain together with the number of demoted DOFs.
#[derive(Clone, Debug)]
pub struct ChainMasks {
    pub levels: Vec<DofMask>,
    pub demoted: usize,
    pub essential: Tag,
}

/// How constrained positions that still receive kept inputs are treated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Closure {
    /// Inputs feeding a tie position are constrained as well; anything else
    /// is an error.
    Demote,
    /// Classification as is, no chain check.
    Raw,
}

/// Exterior positions tied between a `t` and an `n` face count as `n`.
pub const TIE_TAG: Tag = Tag::N;

fn base_status(geo: &Geometry, p: [i32; 3], width: i32, essential: Tag) -> Status {
    if !geo.inside(p) {
        let ess = match geo.nearest(p) {
            Nearest::Only(t) => t == essential,
            Nearest::Tie => TIE_TAG == essential,
        };
        return if ess { Status::Z } else { Status::X };
    }
    if (geo.chebyshev(p, essential) as i64) < width as i64 {
        Status::Z
    } else {
        Status::D
    }
}

fn is_tie(geo: &Geometry, p: [i32; 3]) -> bool {
    !geo.inside(p) && geo.nearest(p) == Nearest::Tie
}

/// Classifies every level of `chain` for boundary conditions essential on the
/// faces tagged `essential`.
pub fn classify_chain(
    geo: &Geometry,
    chain: &ChainOps,
    widths: &[i32; 4],
    essential: Tag,
    closure: Closure,
) -> Result<ChainMasks> {
    let mut forced: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); 4];
    let mut demoted = 0;
    'rerun: loop {
        let mut levels: Vec<DofMask> = Vec::with_capacity(4);
        let status0 = (0..chain.level_len(0))
            .map(|i| {
                let s = base_status(geo, chain.position(0, i), widths[0], essential);
                if s == Status::D && forced[0].contains(&i) {
                    Status::Z
                } else {
                    s
                }
            })
            .collect();
        levels.push(DofMask { kind: chain.kinds[0], status: status0, width: widths[0] });
        for k in 0..3 {
            let prev = &levels[k].status;
            let op = &chain.full[k];
            let mut status = Vec::with_capacity(op.rows);
            let mut new_forced = Vec::new();
            for r in 0..op.rows {
                let p = chain.position(k + 1, r);
                let mut base = base_status(geo, p, widths[k + 1], essential);
                let was_forced = forced[k + 1].contains(&r);
                if base == Status::D && was_forced {
                    base = Status::Z;
                }
                if base == Status::D {
                    let mut s = Status::Z;
                    for (c, _) in op.row(r) {
                        match prev[c] {
                            Status::X => {
                                s = Status::X;
                                break;
                            }
                            Status::D => s = Status::D,
                            Status::Z => {}
                        }
                    }
                    status.push(s);
                    continue;
                }
                if base == Status::Z && closure == Closure::Demote {
                    let hits: Vec<usize> = op.row(r).map(|(c, _)| c).filter(|&c| prev[c] == Status::D).collect();
                    if !hits.is_empty() {
                        if !(is_tie(geo, p) || was_forced) {
                            return Err(LabError::IncompatibleWidths {
                                widths: widths.to_vec(),
                                detail: format!(
                                    "{} level {} position {:?} is constrained but receives {} kept inputs",
                                    chain.which.name(),
                                    k + 1,
                                    p,
                                    hits.len()
                                ),
                            });
                        }
                        new_forced.extend(hits);
                    }
                }
                status.push(base);
            }
            if !new_forced.is_empty() {
                for c in new_forced {
                    if forced[k].insert(c) {
                        demoted += 1;
                    }
                }
                continue 'rerun;
            }
            levels.push(DofMask { kind: chain.kinds[k + 1], status, width: widths[k + 1] });
        }
        return Ok(ChainMasks { levels, demoted, essential });
    }
}

/// Geometry over the doubled region of the chain lattice.
pub fn chain_geometry(dom: &VoxelDomain, part: &BoundaryPartition, chain: &ChainOps) -> Geometry {
    Geometry::new(dom, part, chain.doubled_region())
}

/// Strong boundary condition masks of one complex with `Γ_t` essential.
pub fn build_masks(
    dom: &VoxelDomain,
    part: &BoundaryPartition,
    which: Which,
    widths: &[i32; 4],
) -> Result<ChainMasks> {
    let chain = ChainOps::new(which, &dom.grid);
    let geo = chain_geometry(dom, part, &chain);
    classify_chain(&geo, &chain, widths, Tag::T, Closure::Demote)
}

/// Smallest widths accepted by both complexes.
pub const MIN_WIDTHS: [i32; 4] = [1, 0, 0, 0];
