//! Complex descriptor files.
//!
//! ```text
//! [grid]
//! dims = [8, 8, 8]
//! h = 0.125
//!
//! [domain]
//! shape = "box-minus-box"   # box | box-minus-box | mask
//! lo = [3, 3, 3]
//! hi = [5, 5, 5]
//!
//! [partition]
//! gamma_t = "half"          # all | none | half
//! axis = 0
//!
//! [weights]
//! weight_kind = "random"    # identity | random
//! weight_seed = 3
//!
//! [complex]
//! which = "first"           # first | second | both
//! widths = [1, 0, 0, 0]
//! ```
//!
//! A relative `mask` path is resolved against the descriptor's directory.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::complex::Weights;
use crate::error::{LabError, Result};
use crate::grid::{build_domain, parse_mask, partition_boundary, BoundaryPartition, DomainShape, FaceSelector, GridSpec, VoxelDomain};
use crate::masks::MIN_WIDTHS;
use crate::ops::Which;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    dims: [usize; 3],
    h: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDomain {
    shape: String,
    lo: Option<[usize; 3]>,
    hi: Option<[usize; 3]>,
    mask: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPartition {
    gamma_t: String,
    axis: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWeights {
    weight_kind: String,
    weight_seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawComplex {
    which: Option<String>,
    widths: Option<[i32; 4]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDescriptor {
    grid: RawGrid,
    domain: Option<RawDomain>,
    partition: Option<RawPartition>,
    weights: Option<RawWeights>,
    complex: Option<RawComplex>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum GammaT {
    All,
    None,
    Half { axis: usize },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WeightKind {
    Identity,
    Random { seed: u64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Descriptor {
    pub grid: GridSpec,
    pub shape: DomainShape,
    pub gamma_t: GammaT,
    pub weights: WeightKind,
    pub which: Vec<Which>,
    pub widths: [i32; 4],
}

fn cfg(msg: impl Into<String>) -> LabError {
    LabError::Config(msg.into())
}

impl Descriptor {
    pub fn parse(text: &str, base: Option<&Path>) -> Result<Descriptor> {
        let raw: RawDescriptor = toml::from_str(text).map_err(|e| cfg(e.to_string()))?;
        let dims = raw.grid.dims;
        let h = raw.grid.h.unwrap_or(1.0 / (dims.iter().max().copied().unwrap_or(2).max(2) - 1) as f64);
        let grid = GridSpec::new(dims, h)?;

        let shape = match raw.domain {
            None => DomainShape::FullBox,
            Some(d) => match d.shape.as_str() {
                "box" => DomainShape::FullBox,
                "box-minus-box" => {
                    let (lo, hi) = d.lo.zip(d.hi).ok_or_else(|| cfg("box-minus-box needs `lo` and `hi`"))?;
                    DomainShape::BoxMinusBox { lo, hi }
                }
                "mask" => {
                    let rel = PathBuf::from(d.mask.ok_or_else(|| cfg("mask shape needs a `mask` path"))?);
                    let path = match base {
                        Some(b) if rel.is_relative() => b.join(rel),
                        _ => rel,
                    };
                    let (mdims, mask) = parse_mask(&std::fs::read_to_string(&path)?)?;
                    if mdims != dims {
                        return Err(cfg(format!("mask dims {mdims:?} differ from grid dims {dims:?}")));
                    }
                    DomainShape::Mask(mask)
                }
                other => return Err(cfg(format!("unknown domain shape `{other}`"))),
            },
        };

        let gamma_t = match raw.partition {
            None => GammaT::None,
            Some(p) => match p.gamma_t.as_str() {
                "all" => GammaT::All,
                "none" => GammaT::None,
                "half" => {
                    let axis = p.axis.unwrap_or(0);
                    if axis > 2 {
                        return Err(cfg(format!("axis {axis} out of range")));
                    }
                    GammaT::Half { axis }
                }
                other => return Err(cfg(format!("unknown gamma_t `{other}`"))),
            },
        };

        let weights = match raw.weights {
            None => WeightKind::Identity,
            Some(w) => match w.weight_kind.as_str() {
                "identity" => WeightKind::Identity,
                "random" => WeightKind::Random { seed: w.weight_seed.unwrap_or(0) },
                other => return Err(cfg(format!("unknown weight_kind `{other}`"))),
            },
        };

        let (which, widths) = match raw.complex {
            None => (vec![Which::First, Which::Second], MIN_WIDTHS),
            Some(c) => {
                let which = match c.which.as_deref().unwrap_or("both") {
                    "both" => vec![Which::First, Which::Second],
                    s => vec![Which::parse(s).ok_or_else(|| cfg(format!("unknown complex `{s}`")))?],
                };
                (which, c.widths.unwrap_or(MIN_WIDTHS))
            }
        };
        if widths.iter().any(|&w| w < 0) {
            return Err(cfg(format!("widths {widths:?} must be non-negative")));
        }
        Ok(Descriptor { grid, shape, gamma_t, weights, which, widths })
    }

    pub fn load(path: &Path) -> Result<Descriptor> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| cfg(format!("cannot read descriptor {}: {e}", path.display())))?;
        Descriptor::parse(&text, path.parent())
    }

    pub fn domain(&self) -> Result<(VoxelDomain, BoundaryPartition)> {
        let dom = build_domain(self.grid, &self.shape)?;
        let sel = match self.gamma_t {
            GammaT::All => FaceSelector::AllT,
            GammaT::None => FaceSelector::AllN,
            GammaT::Half { axis } => FaceSelector::half_split(&self.grid, axis),
        };
        let part = partition_boundary(&dom, &sel);
        Ok((dom, part))
    }

    pub fn weights(&self) -> Weights {
        match self.weights {
            WeightKind::Identity => Weights::identity(),
            WeightKind::Random { seed } => Weights::random(seed),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_in() {
        let d = Descriptor::parse("[grid]\ndims = [5, 5, 5]\n", None).unwrap();
        assert_eq!(d.shape, DomainShape::FullBox);
        assert_eq!(d.gamma_t, GammaT::None);
        assert_eq!(d.which, vec![Which::First, Which::Second]);
        assert_eq!(d.widths, MIN_WIDTHS);
        assert_eq!(d.grid.h, 0.25);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = Descriptor::parse("[grid]\ndims = [5, 5, 5]\ncolour = 1\n", None).unwrap_err();
        assert!(matches!(err, LabError::Config(_)));
        let err = Descriptor::parse("[grid]\ndims = [5, 5, 5]\n[partition]\ngamma_t = \"some\"\n", None).unwrap_err();
        assert!(matches!(err, LabError::Config(_)));
    }
}
