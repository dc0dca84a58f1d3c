//! Voxel domains, boundary partitions and the boundary geometry queries used
//! to classify staggered DOF positions.
//!
//! Positions are handled in doubled integer coordinates: node `i` sits at
//! `2i`, cell centres at odd values. Every DOF of either complex lives at a
//! lattice point plus a fixed half-integer offset, so doubled coordinates
//! are exact.

use std::collections::VecDeque;
use std::path::Path;

use crate::error::{LabError, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub dims: [usize; 3],
    pub h: f64,
}

impl GridSpec {
    pub fn new(dims: [usize; 3], h: f64) -> Result<Self> {
        if dims.iter().any(|&d| d < 2) {
            return Err(LabError::Config(format!("grid dims {dims:?} must be at least 2 per axis")));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(LabError::Config(format!("grid spacing {h} must be positive")));
        }
        Ok(GridSpec { dims, h })
    }

    pub fn cube(n: usize, h: f64) -> Result<Self> {
        GridSpec::new([n; 3], h)
    }

    pub fn nodes(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn node_box(&self) -> LatticeBox {
        LatticeBox { lo: [0; 3], dims: self.dims }
    }

    /// Node box grown by `margin` lattice steps on every side.
    pub fn extended_box(&self, margin: usize) -> LatticeBox {
        let m = margin as i32;
        LatticeBox { lo: [-m; 3], dims: self.dims.map(|d| d + 2 * margin) }
    }
}

/// Axis-aligned block of lattice points, x-fastest linear order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LatticeBox {
    pub lo: [i32; 3],
    pub dims: [usize; 3],
}

impl LatticeBox {
    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, x: [i32; 3]) -> Option<usize> {
        let mut idx = 0usize;
        for a in (0..3).rev() {
            let t = x[a] - self.lo[a];
            if t < 0 || t as usize >= self.dims[a] {
                return None;
            }
            idx = idx * self.dims[a] + t as usize;
        }
        Some(idx)
    }

    pub fn point(&self, mut idx: usize) -> [i32; 3] {
        let mut p = [0i32; 3];
        for a in 0..3 {
            p[a] = self.lo[a] + (idx % self.dims[a]) as i32;
            idx /= self.dims[a];
        }
        p
    }

    pub fn hi(&self) -> [i32; 3] {
        std::array::from_fn(|a| self.lo[a] + self.dims[a] as i32 - 1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FieldKind {
    Scalar,
    Vector,
    Sym,
    Dev,
}

impl FieldKind {
    pub fn ncomp(self) -> usize {
        match self {
            FieldKind::Scalar => 1,
            FieldKind::Vector => 3,
            FieldKind::Sym => 6,
            FieldKind::Dev => 8,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FieldKind::Scalar => "scalar",
            FieldKind::Vector => "vector",
            FieldKind::Sym => "sym",
            FieldKind::Dev => "dev",
        }
    }

    pub fn parse(s: &str) -> Option<FieldKind> {
        match s {
            "scalar" => Some(FieldKind::Scalar),
            "vector" => Some(FieldKind::Vector),
            "sym" => Some(FieldKind::Sym),
            "dev" => Some(FieldKind::Dev),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum DomainShape {
    FullBox,
    /// Removes the nodes `lo ≤ i < hi` (per axis) from the box.
    BoxMinusBox { lo: [usize; 3], hi: [usize; 3] },
    /// Explicit node mask in x-fastest order.
    Mask(Vec<bool>),
}

#[derive(Clone, Debug)]
pub struct VoxelDomain {
    pub grid: GridSpec,
    active: Vec<bool>,
    voxels: Vec<bool>,
}

pub fn build_domain(grid: GridSpec, shape: &DomainShape) -> Result<VoxelDomain> {
    let nb = grid.node_box();
    let active: Vec<bool> = match shape {
        DomainShape::FullBox => vec![true; grid.nodes()],
        DomainShape::BoxMinusBox { lo, hi } => (0..grid.nodes())
            .map(|i| {
                let p = nb.point(i);
                !(0..3).all(|a| p[a] >= lo[a] as i32 && p[a] < hi[a] as i32)
            })
            .collect(),
        DomainShape::Mask(m) => {
            if m.len() != grid.nodes() {
                return Err(LabError::Config(format!(
                    "mask has {} entries, grid has {} nodes",
                    m.len(),
                    grid.nodes()
                )));
            }
            m.clone()
        }
    };
    let count = active.iter().filter(|&&a| a).count();
    if count == 0 {
        return Err(LabError::Empty);
    }
    let components = node_components(&nb, &active);
    if components != 1 {
        return Err(LabError::Disconnected { components });
    }
    let vb = LatticeBox { lo: [0; 3], dims: grid.dims.map(|d| d - 1) };
    let voxels = (0..vb.len())
        .map(|v| {
            let c = vb.point(v);
            (0..8).all(|k| {
                let q = [c[0] + (k & 1) as i32, c[1] + ((k >> 1) & 1) as i32, c[2] + ((k >> 2) & 1) as i32];
                active[nb.index(q).unwrap()]
            })
        })
        .collect::<Vec<bool>>();
    if !voxels.iter().any(|&v| v) {
        return Err(LabError::Empty);
    }
    Ok(VoxelDomain { grid, active, voxels })
}

fn node_components(nb: &LatticeBox, active: &[bool]) -> usize {
    let mut seen = vec![false; active.len()];
    let mut components = 0;
    for start in 0..active.len() {
        if !active[start] || seen[start] {
            continue;
        }
        components += 1;
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            let p = nb.point(i);
            for a in 0..3 {
                for s in [-1, 1] {
                    let mut q = p;
                    q[a] += s;
                    if let Some(j) = nb.index(q) {
                        if active[j] && !seen[j] {
                            seen[j] = true;
                            queue.push_back(j);
                        }
                    }
                }
            }
        }
    }
    components
}

impl VoxelDomain {
    pub fn active_nodes(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    pub fn is_active(&self, x: [i32; 3]) -> bool {
        self.grid.node_box().index(x).is_some_and(|i| self.active[i])
    }

    pub fn active_mask(&self) -> &[bool] {
        &self.active
    }

    pub fn voxel_box(&self) -> LatticeBox {
        LatticeBox { lo: [0; 3], dims: self.grid.dims.map(|d| d - 1) }
    }

    pub fn is_voxel(&self, c: [i32; 3]) -> bool {
        self.voxel_box().index(c).is_some_and(|i| self.voxels[i])
    }

    pub fn voxel_count(&self) -> usize {
        self.voxels.iter().filter(|&&v| v).count()
    }

    /// Whether the doubled position lies in the closed union of active voxels.
    pub fn contains_doubled(&self, p: [i32; 3]) -> bool {
        let cand = |t: i32| -> [i32; 2] {
            if t.rem_euclid(2) == 0 {
                [t.div_euclid(2) - 1, t.div_euclid(2)]
            } else {
                let c = t.div_euclid(2);
                [c, c]
            }
        };
        let (a, b, c) = (cand(p[0]), cand(p[1]), cand(p[2]));
        a.iter().any(|&i| b.iter().any(|&j| c.iter().any(|&k| self.is_voxel([i, j, k]))))
    }

    /// Boundary faces of the active voxel set, in a fixed order.
    pub fn boundary_faces(&self) -> Vec<BoundaryFace> {
        let vb = self.voxel_box();
        let mut faces = Vec::new();
        for v in 0..vb.len() {
            if !self.voxels[v] {
                continue;
            }
            let c = vb.point(v);
            for axis in 0..3 {
                for outward in [-1i8, 1] {
                    let mut nb = c;
                    nb[axis] += outward as i32;
                    if !self.is_voxel(nb) {
                        let plane = c[axis] + (outward > 0) as i32;
                        faces.push(BoundaryFace { axis, plane, cell: c, outward });
                    }
                }
            }
        }
        faces
    }
}

/// Parses the `voxmask nx ny nz` text format.
pub fn parse_mask(text: &str) -> Result<([usize; 3], Vec<bool>)> {
    let mut tokens = text.split_whitespace();
    if tokens.next() != Some("voxmask") {
        return Err(LabError::Config("mask file must start with `voxmask`".into()));
    }
    let mut dims = [0usize; 3];
    for d in &mut dims {
        *d = tokens
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| LabError::Config("mask header needs three sizes".into()))?;
    }
    let n: usize = dims.iter().product();
    let mut mask = Vec::with_capacity(n);
    for t in tokens {
        match t {
            "0" => mask.push(false),
            "1" => mask.push(true),
            other => return Err(LabError::Config(format!("bad mask token `{other}`"))),
        }
    }
    if mask.len() != n {
        return Err(LabError::Config(format!("mask has {} tokens, expected {n}", mask.len())));
    }
    Ok((dims, mask))
}

pub fn read_mask_file(path: &Path) -> Result<([usize; 3], Vec<bool>)> {
    parse_mask(&std::fs::read_to_string(path)?)
}

pub fn format_mask(dims: [usize; 3], mask: &[bool]) -> String {
    let mut s = format!("voxmask {} {} {}\n", dims[0], dims[1], dims[2]);
    let body: Vec<&str> = mask.iter().map(|&b| if b { "1" } else { "0" }).collect();
    s.push_str(&body.join(" "));
    s.push('\n');
    s
}

/// Unit square face of a voxel; `plane` is the node coordinate along `axis`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundaryFace {
    pub axis: usize,
    pub plane: i32,
    pub cell: [i32; 3],
    pub outward: i8,
}

impl BoundaryFace {
    pub fn doubled_center(&self) -> [i32; 3] {
        let mut c: [i32; 3] = std::array::from_fn(|a| 2 * self.cell[a] + 1);
        c[self.axis] = 2 * self.plane;
        c
    }

    /// Per-axis distances from a doubled position to the closed face.
    fn offsets(&self, p: [i32; 3]) -> [i32; 3] {
        std::array::from_fn(|a| {
            if a == self.axis {
                (p[a] - 2 * self.plane).abs()
            } else {
                let lo = 2 * self.cell[a];
                (lo - p[a]).max(0).max(p[a] - lo - 2)
            }
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Tag {
    T,
    N,
}

impl Tag {
    pub fn other(self) -> Tag {
        match self {
            Tag::T => Tag::N,
            Tag::N => Tag::T,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FaceSelector {
    /// `Γ_t = Γ`
    AllT,
    /// `Γ_t = ∅`
    AllN,
    /// Faces whose centre has coordinate `< at` along `axis` are `t`.
    HalfSplit { axis: usize, at: f64 },
}

impl FaceSelector {
    pub fn half_split(grid: &GridSpec, axis: usize) -> FaceSelector {
        FaceSelector::HalfSplit { axis, at: (grid.dims[axis] as f64 - 1.0) / 2.0 }
    }

    pub fn tag(&self, face: &BoundaryFace) -> Tag {
        match *self {
            FaceSelector::AllT => Tag::T,
            FaceSelector::AllN => Tag::N,
            FaceSelector::HalfSplit { axis, at } => {
                if (face.doubled_center()[axis] as f64) < 2.0 * at {
                    Tag::T
                } else {
                    Tag::N
                }
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct BoundaryPartition {
    pub faces: Vec<BoundaryFace>,
    pub tags: Vec<Tag>,
}

impl BoundaryPartition {
    pub fn count(&self, tag: Tag) -> usize {
        self.tags.iter().filter(|&&t| t == tag).count()
    }

    pub fn gamma_t(&self) -> impl Iterator<Item = &BoundaryFace> {
        self.faces.iter().zip(&self.tags).filter(|(_, t)| **t == Tag::T).map(|(f, _)| f)
    }

    pub fn gamma_n(&self) -> impl Iterator<Item = &BoundaryFace> {
        self.faces.iter().zip(&self.tags).filter(|(_, t)| **t == Tag::N).map(|(f, _)| f)
    }

    pub fn is_empty(&self, tag: Tag) -> bool {
        self.count(tag) == 0
    }
}

pub fn partition_boundary(dom: &VoxelDomain, selector: &FaceSelector) -> BoundaryPartition {
    let faces = dom.boundary_faces();
    let tags = faces.iter().map(|f| selector.tag(f)).collect();
    BoundaryPartition { faces, tags }
}

/// Nearest boundary part of an exterior position by Euclidean distance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Nearest {
    Only(Tag),
    Tie,
}

const SPLAT_RADIUS: i32 = 12;
const FAR: u32 = u32::MAX;

/// Precomputed boundary distances over a block of doubled positions.
#[derive(Clone, Debug)]
pub struct Geometry {
    region: LatticeBox,
    inside: Vec<bool>,
    cheb: [Vec<u16>; 2],
    eucl: [Vec<u32>; 2],
}

fn tag_slot(t: Tag) -> usize {
    match t {
        Tag::T => 0,
        Tag::N => 1,
    }
}

impl Geometry {
    /// `region` is a box in doubled coordinates.
    pub fn new(dom: &VoxelDomain, part: &BoundaryPartition, region: LatticeBox) -> Geometry {
        let n = region.len();
        let inside: Vec<bool> = (0..n).map(|i| dom.contains_doubled(region.point(i))).collect();
        let mut cheb = [vec![u16::MAX; n], vec![u16::MAX; n]];
        let mut eucl = [vec![FAR; n], vec![FAR; n]];
        let hi = region.hi();
        for (face, tag) in part.faces.iter().zip(&part.tags) {
            let s = tag_slot(*tag);
            let c = face.doubled_center();
            let lo: [i32; 3] = std::array::from_fn(|a| {
                let ext = if a == face.axis { 0 } else { 1 };
                (c[a] - ext - SPLAT_RADIUS).max(region.lo[a])
            });
            let up: [i32; 3] = std::array::from_fn(|a| {
                let ext = if a == face.axis { 0 } else { 1 };
                (c[a] + ext + SPLAT_RADIUS).min(hi[a])
            });
            for z in lo[2]..=up[2] {
                for y in lo[1]..=up[1] {
                    for x in lo[0]..=up[0] {
                        let p = [x, y, z];
                        let o = face.offsets(p);
                        let i = region.index(p).unwrap();
                        let ch = o[0].max(o[1]).max(o[2]) as u16;
                        let eu = (o[0] * o[0] + o[1] * o[1] + o[2] * o[2]) as u32;
                        cheb[s][i] = cheb[s][i].min(ch);
                        eucl[s][i] = eucl[s][i].min(eu);
                    }
                }
            }
        }
        // positions whose nearest face may lie beyond the splat radius
        let r2 = (SPLAT_RADIUS * SPLAT_RADIUS) as u32;
        for i in 0..n {
            if inside[i] || eucl[0][i].min(eucl[1][i]) <= r2 {
                continue;
            }
            let p = region.point(i);
            for (face, tag) in part.faces.iter().zip(&part.tags) {
                let s = tag_slot(*tag);
                let o = face.offsets(p);
                let ch = o[0].max(o[1]).max(o[2]).min(u16::MAX as i32) as u16;
                let eu = (o[0] as i64 * o[0] as i64 + o[1] as i64 * o[1] as i64 + o[2] as i64 * o[2] as i64)
                    .min(FAR as i64 - 1) as u32;
                cheb[s][i] = cheb[s][i].min(ch);
                eucl[s][i] = eucl[s][i].min(eu);
            }
        }
        Geometry { region, inside, cheb, eucl }
    }

    pub fn region(&self) -> &LatticeBox {
        &self.region
    }

    fn slot(&self, p: [i32; 3]) -> usize {
        self.region
            .index(p)
            .unwrap_or_else(|| panic!("doubled position {p:?} outside the geometry region"))
    }

    pub fn inside(&self, p: [i32; 3]) -> bool {
        self.inside[self.slot(p)]
    }

    /// Chebyshev distance (doubled units) to the closest face carrying `tag`.
    pub fn chebyshev(&self, p: [i32; 3], tag: Tag) -> u32 {
        let v = self.cheb[tag_slot(tag)][self.slot(p)];
        if v == u16::MAX {
            u32::MAX
        } else {
            v as u32
        }
    }

    pub fn nearest(&self, p: [i32; 3]) -> Nearest {
        let i = self.slot(p);
        let (t, n) = (self.eucl[0][i], self.eucl[1][i]);
        match t.cmp(&n) {
            std::cmp::Ordering::Less => Nearest::Only(Tag::T),
            std::cmp::Ordering::Greater => Nearest::Only(Tag::N),
            std::cmp::Ordering::Equal => Nearest::Tie,
        }
    }
}
