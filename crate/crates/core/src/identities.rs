//! Executable catalog of the pointwise and differential tensor identities,
//! the operator factorizations of the biharmonic operators, the complex
//! relations and the adjoint sign conventions.
//!
//! Each identity is a pair of operator expressions applied to seeded random
//! fields. The two sides go through different assemblies, so a wrong stencil
//! or sign shows up as a residual.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::complex::keys;
use crate::error::{LabError, Result};
use crate::grid::{BoundaryPartition, GridSpec, LatticeBox, Tag, VoxelDomain};
use crate::masks::{build_masks, chain_geometry, classify_chain, Closure, MIN_WIDTHS};
use crate::ops::{assemble, assemble_on, symbols, ChainOps, DofKey, Which};
use crate::sparse::SparseOp;
use crate::stencil::{q, to_f64, SymOp, Q};

/// Relative residual accepted for floating point identities.
pub const IDENTITY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    U,
    V,
    W,
    S,
    /// Symmetric field in compact storage.
    Sym,
    /// Deviatoric field in compact storage.
    Dev,
}

impl Var {
    const ALL: [Var; 6] = [Var::U, Var::V, Var::W, Var::S, Var::Sym, Var::Dev];

    pub fn ncomp(self) -> usize {
        match self {
            Var::U => 1,
            Var::V | Var::W => 3,
            Var::S => 9,
            Var::Sym => 6,
            Var::Dev => 8,
        }
    }
}

/// Operator expression over the input fields.
#[derive(Clone, Debug)]
pub enum Expr {
    Field(Var),
    Zero(usize),
    Apply(&'static str, Box<Expr>),
    Scale(Q, Box<Expr>),
    Sum(Box<Expr>, Box<Expr>),
    /// Pointwise matrix times vector.
    MatVec(Box<Expr>, Box<Expr>),
    Cross(Box<Expr>, Box<Expr>),
}

fn var(v: Var) -> Expr {
    Expr::Field(v)
}

/// `ap("dev Rot spn", v)` is `dev(Rot(spn v))`.
fn ap(names: &'static str, x: Expr) -> Expr {
    names.split_whitespace().rev().fold(x, |acc, n| Expr::Apply(n, Box::new(acc)))
}

fn sc(c: Q, x: Expr) -> Expr {
    Expr::Scale(c, Box::new(x))
}

fn neg(x: Expr) -> Expr {
    sc(q(-1), x)
}

fn add(a: Expr, b: Expr) -> Expr {
    Expr::Sum(Box::new(a), Box::new(b))
}

fn sub(a: Expr, b: Expr) -> Expr {
    add(a, neg(b))
}

fn matvec(a: Expr, b: Expr) -> Expr {
    Expr::MatVec(Box::new(a), Box::new(b))
}

fn cross(a: Expr, b: Expr) -> Expr {
    Expr::Cross(Box::new(a), Box::new(b))
}

/// Operator names understood by [`Expr::Apply`].
pub const OPERATORS: [&str; 24] = [
    "grad", "rot", "div", "Grad", "Rot", "Div", "sym", "skw", "T", "dev", "tr", "id", "spn", "spn⁻¹", "ι_S", "ι_S*", "ι_T",
    "ι_T*", "Gradgrad", "Rot_S", "Div_T", "devGrad", "symRot_T", "divDiv_S",
];

pub fn operator_symbol(name: &str) -> Option<SymOp> {
    use symbols::*;
    Some(match name {
        "grad" => grad(),
        "rot" => rot(),
        "div" => div(),
        "Grad" => grad_rows(),
        "Rot" => rot_rows(),
        "Div" => div_rows(),
        "sym" => sym(),
        "skw" => skw(),
        "T" => transpose(),
        "dev" => dev(),
        "tr" => tr(),
        "id" => times_id(),
        "spn" => spn(),
        // acts as spn⁻¹ skw
        "spn⁻¹" => spn_inv(),
        "ι_S" => iota_s(),
        "ι_S*" => iota_s_adj(),
        "ι_T" => iota_t(),
        "ι_T*" => iota_t_adj(),
        "Gradgrad" => gradgrad(),
        "Rot_S" => rot_s(),
        "Div_T" => div_t(),
        "devGrad" => dev_grad(),
        "symRot_T" => sym_rot_t(),
        "divDiv_S" => div_div_s(),
        _ => return None,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Hypothesis {
    None,
    /// `sym S = 0`
    Skew,
    /// `skw S = 0`
    Symmetric,
    /// `tr S = 0`
    Traceless,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    Algebraic,
    Differential,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Group {
    /// Bullet of the tensor identity catalog, numbered from 1.
    Catalog(u8),
    /// Direct symbol against its factorized definition.
    Factorization,
}

#[derive(Clone, Debug)]
pub struct IdentityRecord {
    pub id: &'static str,
    pub group: Group,
    pub statement: &'static str,
    pub lhs: Expr,
    pub rhs: Expr,
    pub hypothesis: Hypothesis,
}

impl IdentityRecord {
    pub fn scope(&self) -> Scope {
        if order(&self.lhs).max(order(&self.rhs)) > 0 {
            Scope::Differential
        } else {
            Scope::Algebraic
        }
    }
}

fn rec(id: &'static str, bullet: u8, statement: &'static str, lhs: Expr, rhs: Expr) -> IdentityRecord {
    IdentityRecord { id, group: Group::Catalog(bullet), statement, lhs, rhs, hypothesis: Hypothesis::None }
}

fn given(mut r: IdentityRecord, h: Hypothesis) -> IdentityRecord {
    r.hypothesis = h;
    r
}

fn fact(id: &'static str, statement: &'static str, direct: &'static str, path: &'static str, input: Var) -> IdentityRecord {
    IdentityRecord {
        id,
        group: Group::Factorization,
        statement,
        lhs: ap(direct, var(input)),
        rhs: ap(path, var(input)),
        hypothesis: Hypothesis::None,
    }
}

/// Number of bullets in the tensor identity catalog.
pub const CATALOG_GROUPS: usize = 16;

/// The registered identities in a fixed order.
pub fn registry() -> Vec<IdentityRecord> {
    use Var::*;
    let (u, v, w, s) = (|| var(U), || var(V), || var(W), || var(S));
    let two = q(2);
    vec![
        rec("spn-product", 1, "(spn v) w = v × w", matvec(ap("spn", v()), w()), cross(v(), w())),
        rec("cross-antisymmetry", 1, "v × w = -(spn w) v", cross(v(), w()), neg(matvec(ap("spn", w()), v()))),
        given(
            rec("spn-inverse-product", 1, "(spn v)(spn⁻¹ S) = -S v if sym S = 0", matvec(ap("spn", v()), ap("spn⁻¹", s())), neg(matvec(s(), v()))),
            Hypothesis::Skew,
        ),
        rec("sym-spn", 2, "sym spn v = 0", ap("sym spn", v()), Expr::Zero(9)),
        rec("dev-id", 2, "dev(u id) = 0", ap("dev id", u()), Expr::Zero(9)),
        rec("tr-grad", 3, "tr Grad v = div v", ap("tr Grad", v()), ap("div", v())),
        rec("skw-grad", 3, "2 skw Grad v = spn rot v", sc(two, ap("skw Grad", v())), ap("spn rot", v())),
        rec("div-id", 4, "Div(u id) = grad u", ap("Div id", u()), ap("grad", u())),
        rec("rot-id", 4, "Rot(u id) = -spn grad u", ap("Rot id", u()), neg(ap("spn grad", u()))),
        rec("rot-div-id", 4, "rot Div(u id) = 0", ap("rot Div id", u()), Expr::Zero(3)),
        rec("rot-spninv-rot-id", 4, "rot spn⁻¹ Rot(u id) = 0", ap("rot spn⁻¹ Rot id", u()), Expr::Zero(3)),
        rec("sym-rot-id", 4, "sym Rot(u id) = 0", ap("sym Rot id", u()), Expr::Zero(9)),
        rec("div-spn", 5, "Div spn v = -rot v", ap("Div spn", v()), neg(ap("rot", v()))),
        rec("div-skw", 5, "Div skw S = -rot spn⁻¹ skw S", ap("Div skw", s()), neg(ap("rot spn⁻¹ skw", s()))),
        rec("divdiv-skw", 5, "div Div skw S = 0", ap("div Div skw", s()), Expr::Zero(1)),
        rec(
            "rot-spn",
            6,
            "Rot spn v = (div v) id - (Grad v)ᵀ",
            ap("Rot spn", v()),
            sub(ap("id div", v()), ap("T Grad", v())),
        ),
        rec(
            "rot-skw",
            6,
            "Rot skw S = (div spn⁻¹ skw S) id - (Grad spn⁻¹ skw S)ᵀ",
            ap("Rot skw", s()),
            sub(ap("id div spn⁻¹ skw", s()), ap("T Grad spn⁻¹ skw", s())),
        ),
        rec("dev-rot-spn", 7, "dev Rot spn v = -(dev Grad v)ᵀ", ap("dev Rot spn", v()), neg(ap("T dev Grad", v()))),
        rec(
            "rot-sym-grad",
            8,
            "-2 Rot sym Grad v = 2 Rot skw Grad v",
            sc(q(-2), ap("Rot sym Grad", v())),
            sc(two, ap("Rot skw Grad", v())),
        ),
        rec("rot-skw-grad", 8, "2 Rot skw Grad v = -(Grad rot v)ᵀ", sc(two, ap("Rot skw Grad", v())), neg(ap("T Grad rot", v()))),
        rec(
            "skw-rot",
            9,
            "2 spn⁻¹ skw Rot S = Div Sᵀ - grad tr S",
            sc(two, ap("spn⁻¹ skw Rot", s())),
            sub(ap("Div T", s()), ap("grad tr", s())),
        ),
        rec(
            "div-transpose-trace",
            9,
            "Div Sᵀ - grad tr S = Div(S - (tr S) id)ᵀ",
            sub(ap("Div T", s()), ap("grad tr", s())),
            ap("Div T", sub(s(), ap("id tr", s()))),
        ),
        rec(
            "rot-div-transpose",
            9,
            "rot Div Sᵀ = 2 rot spn⁻¹ skw Rot S",
            ap("rot Div T", s()),
            sc(two, ap("rot spn⁻¹ skw Rot", s())),
        ),
        given(
            rec("skw-rot-traceless", 9, "2 skw Rot S = spn Div Sᵀ if tr S = 0", sc(two, ap("skw Rot", s())), ap("spn Div T", s())),
            Hypothesis::Traceless,
        ),
        rec("tr-rot", 10, "tr Rot S = 2 div spn⁻¹ skw S", ap("tr Rot", s()), sc(two, ap("div spn⁻¹ skw", s()))),
        given(rec("tr-rot-symmetric", 10, "tr Rot S = 0 if skw S = 0", ap("tr Rot", s()), Expr::Zero(1)), Hypothesis::Symmetric),
        rec("tr-rot-sym", 10, "tr Rot sym S = 0", ap("tr Rot sym", s()), Expr::Zero(1)),
        rec("tr-rot-skw", 10, "tr Rot skw S = tr Rot S", ap("tr Rot skw", s()), ap("tr Rot", s())),
        rec(
            "grad-spninv-skw",
            11,
            "2 (Grad spn⁻¹ skw S)ᵀ = (tr Rot skw S) id - 2 Rot skw S",
            sc(two, ap("T Grad spn⁻¹ skw", s())),
            sub(ap("id tr Rot skw", s()), sc(two, ap("Rot skw", s()))),
        ),
        rec("div-dev-grad", 12, "3 Div(dev Grad v)ᵀ = 2 grad div v", sc(q(3), ap("Div T dev Grad", v())), sc(two, ap("grad div", v()))),
        rec(
            "rot-sym-skw-grad",
            13,
            "2 Rot sym Grad v = -2 Rot skw Grad v",
            sc(two, ap("Rot sym Grad", v())),
            sc(q(-2), ap("Rot skw Grad", v())),
        ),
        rec("rot-skw-grad-spn", 13, "-2 Rot skw Grad v = -Rot spn rot v", sc(q(-2), ap("Rot skw Grad", v())), neg(ap("Rot spn rot", v()))),
        rec("rot-spn-rot", 13, "-Rot spn rot v = (Grad rot v)ᵀ", neg(ap("Rot spn rot", v())), ap("T Grad rot", v())),
        rec(
            "div-sym-rot",
            14,
            "2 Div sym Rot S = -2 Div skw Rot S",
            sc(two, ap("Div sym Rot", s())),
            sc(q(-2), ap("Div skw Rot", s())),
        ),
        rec("div-skw-rot", 14, "-2 Div skw Rot S = rot Div Sᵀ", sc(q(-2), ap("Div skw Rot", s())), ap("rot Div T", s())),
        rec("rot-rot-sym", 15, "Rot(Rot sym S)ᵀ = sym Rot(Rot S)ᵀ", ap("Rot T Rot sym", s()), ap("sym Rot T Rot", s())),
        rec("rot-rot-skw", 16, "Rot(Rot skw S)ᵀ = skw Rot(Rot S)ᵀ", ap("Rot T Rot skw", s()), ap("skw Rot T Rot", s())),
        fact("gradgrad-factor", "Gradgrad u = ι_S* Grad grad u", "Gradgrad", "ι_S* Grad grad", U),
        fact("rot-s-factor", "Rot_S S = ι_T* Rot ι_S S", "Rot_S", "ι_T* Rot ι_S", Sym),
        fact("div-t-factor", "Div_T T = Div ι_T T", "Div_T", "Div ι_T", Dev),
        fact("devgrad-factor", "devGrad v = ι_T* Grad v", "devGrad", "ι_T* Grad", V),
        fact("devgrad-dev", "ι_T devGrad v = dev Grad v", "ι_T devGrad", "dev Grad", V),
        fact("symrot-t-factor", "symRot_T T = ι_S* Rot ι_T T", "symRot_T", "ι_S* Rot ι_T", Dev),
        fact("symrot-t-sym", "ι_S symRot_T T = sym Rot ι_T T", "ι_S symRot_T", "sym Rot ι_T", Dev),
        fact("divdiv-s-factor", "divDiv_S S = div Div ι_S S", "divDiv_S", "div Div ι_S", Sym),
    ]
}

/// `d_{k+1} d_k = 0` for both chains and for their lattice adjoint chains.
#[derive(Clone, Copy, Debug)]
pub struct ComplexRelation {
    pub id: &'static str,
    pub statement: &'static str,
    pub which: Which,
    pub dual: bool,
    pub level: usize,
}

pub fn complex_relations() -> Vec<ComplexRelation> {
    let r = |id, statement, which, dual, level| ComplexRelation { id, statement, which, dual, level };
    vec![
        r("rot-gradgrad", "Rot_S Gradgrad = 0", Which::First, false, 0),
        r("div-rot", "Div_T Rot_S = 0", Which::First, false, 1),
        r("symrot-devgrad", "symRot_T devGrad = 0", Which::Second, false, 0),
        r("divdiv-symrot", "divDiv_S symRot_T = 0", Which::Second, false, 1),
        r("rot-adj-div-adj", "Rot_S* Div_T* = 0", Which::First, true, 0),
        r("gradgrad-adj-rot-adj", "Gradgrad* Rot_S* = 0", Which::First, true, 1),
        r("symrot-adj-divdiv-adj", "symRot_T* divDiv_S* = 0", Which::Second, true, 0),
        r("devgrad-adj-symrot-adj", "devGrad* symRot_T* = 0", Which::Second, true, 1),
    ]
}

fn order(e: &Expr) -> u32 {
    match e {
        Expr::Field(_) | Expr::Zero(_) => 0,
        Expr::Apply(n, x) => operator_symbol(n).and_then(|s| s.order()).unwrap_or(0) + order(x),
        Expr::Scale(_, x) => order(x),
        Expr::Sum(a, b) | Expr::MatVec(a, b) | Expr::Cross(a, b) => order(a).max(order(b)),
    }
}

/// Field values, component-slowest.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    pub ncomp: usize,
    pub values: Vec<f64>,
}

/// Assembled operators on one box.
pub struct Evaluator {
    pub bx: LatticeBox,
    pub h: f64,
    ops: HashMap<&'static str, SparseOp>,
}

impl Evaluator {
    pub fn new(grid: &GridSpec) -> Evaluator {
        let bx = grid.node_box();
        let ops = OPERATORS
            .par_iter()
            .map(|&n| (n, assemble(&operator_symbol(n).expect("registered operator"), &bx, grid.h)))
            .collect();
        Evaluator { bx, h: grid.h, ops }
    }

    pub fn eval(&self, e: &Expr, inputs: &BTreeMap<Var, Field>) -> Result<Field> {
        let n = self.bx.len();
        Ok(match e {
            Expr::Field(v) => inputs.get(v).cloned().ok_or_else(|| LabError::ShapeMismatch(format!("no input {v:?}")))?,
            Expr::Zero(c) => Field { ncomp: *c, values: vec![0.0; c * n] },
            Expr::Apply(name, x) => {
                let x = self.eval(x, inputs)?;
                let op = self.ops.get(name).ok_or_else(|| LabError::ShapeMismatch(format!("unknown operator {name}")))?;
                if op.cols != x.values.len() {
                    return Err(LabError::ShapeMismatch(format!("{name} expects {} components, got {}", op.cols / n, x.ncomp)));
                }
                Field { ncomp: op.rows / n, values: op.apply(&x.values) }
            }
            Expr::Scale(c, x) => {
                let x = self.eval(x, inputs)?;
                let f = *c.numer() as f64 / *c.denom() as f64;
                Field { ncomp: x.ncomp, values: x.values.iter().map(|v| v * f).collect() }
            }
            Expr::Sum(a, b) => {
                let (a, b) = (self.eval(a, inputs)?, self.eval(b, inputs)?);
                if a.ncomp != b.ncomp {
                    return Err(LabError::ShapeMismatch(format!("sum of {} and {} components", a.ncomp, b.ncomp)));
                }
                Field { ncomp: a.ncomp, values: a.values.iter().zip(&b.values).map(|(x, y)| x + y).collect() }
            }
            Expr::MatVec(a, b) => {
                let (a, b) = (self.eval(a, inputs)?, self.eval(b, inputs)?);
                if a.ncomp != 9 || b.ncomp != 3 {
                    return Err(LabError::ShapeMismatch("matrix-vector product needs 9 and 3 components".into()));
                }
                let mut out = vec![0.0; 3 * n];
                for s in 0..n {
                    for i in 0..3 {
                        out[i * n + s] = (0..3).map(|j| a.values[(3 * i + j) * n + s] * b.values[j * n + s]).sum();
                    }
                }
                Field { ncomp: 3, values: out }
            }
            Expr::Cross(a, b) => {
                let (a, b) = (self.eval(a, inputs)?, self.eval(b, inputs)?);
                if a.ncomp != 3 || b.ncomp != 3 {
                    return Err(LabError::ShapeMismatch("cross product needs vectors".into()));
                }
                let mut out = vec![0.0; 3 * n];
                for s in 0..n {
                    let x = |v: &Field, i: usize| v.values[i * n + s];
                    out[s] = x(&a, 1) * x(&b, 2) - x(&a, 2) * x(&b, 1);
                    out[n + s] = x(&a, 2) * x(&b, 0) - x(&a, 0) * x(&b, 2);
                    out[2 * n + s] = x(&a, 0) * x(&b, 1) - x(&a, 1) * x(&b, 0);
                }
                Field { ncomp: 3, values: out }
            }
        })
    }

    /// Sites at least `radius` steps away from every box face.
    pub fn interior(&self, radius: u32) -> Vec<usize> {
        let r = radius as i32;
        (0..self.bx.len())
            .filter(|&s| {
                let p = self.bx.point(s);
                (0..3).all(|a| p[a] - self.bx.lo[a] >= r && p[a] - self.bx.lo[a] <= self.bx.dims[a] as i32 - 1 - r)
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Status {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "FAIL")]
    Fail,
    #[serde(rename = "SKIPPED-EMPTY-INTERIOR")]
    SkippedEmptyInterior,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityResult {
    pub id: String,
    pub statement: String,
    pub residual: f64,
    pub status: Status,
}

fn random_inputs(n: usize, seed: u64, stream: u64) -> BTreeMap<Var, Field> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    Var::ALL
        .iter()
        .map(|&v| {
            let values = (0..v.ncomp() * n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            (v, Field { ncomp: v.ncomp(), values })
        })
        .collect()
}

fn project_hypothesis(ev: &Evaluator, h: Hypothesis, inputs: &mut BTreeMap<Var, Field>) -> Result<()> {
    let name = match h {
        Hypothesis::None => return Ok(()),
        Hypothesis::Skew => "skw",
        Hypothesis::Symmetric => "sym",
        Hypothesis::Traceless => "dev",
    };
    let s = ev.eval(&ap(name, var(Var::S)), inputs)?;
    inputs.insert(Var::S, s);
    Ok(())
}

/// Max-norm residual of `lhs - rhs` over the interior sites, with the
/// relative pass test against `max(‖lhs‖, ‖rhs‖, 1)`.
pub fn run_identity(ev: &Evaluator, rec: &IdentityRecord, seed: u64, stream: u64) -> Result<IdentityResult> {
    let result = |residual, status| IdentityResult {
        id: rec.id.to_string(),
        statement: rec.statement.to_string(),
        residual,
        status,
    };
    let radius = order(&rec.lhs).max(order(&rec.rhs));
    let sites = ev.interior(radius);
    if sites.is_empty() {
        return Ok(result(0.0, Status::SkippedEmptyInterior));
    }
    let mut inputs = random_inputs(ev.bx.len(), seed, stream);
    project_hypothesis(ev, rec.hypothesis, &mut inputs)?;
    let l = ev.eval(&rec.lhs, &inputs)?;
    let r = ev.eval(&rec.rhs, &inputs)?;
    if l.ncomp != r.ncomp {
        return Err(LabError::ShapeMismatch(format!("{}: sides have {} and {} components", rec.id, l.ncomp, r.ncomp)));
    }
    let n = ev.bx.len();
    let (mut res, mut nl, mut nr) = (0.0f64, 0.0f64, 0.0f64);
    for c in 0..l.ncomp {
        for &s in &sites {
            let (a, b) = (l.values[c * n + s], r.values[c * n + s]);
            res = res.max((a - b).abs());
            nl = nl.max(a.abs());
            nr = nr.max(b.abs());
        }
    }
    let scale = nl.max(nr).max(1.0);
    let status = if res <= IDENTITY_TOL * scale { Status::Pass } else { Status::Fail };
    Ok(result(res, status))
}

/// Exact composite of a complex relation on the extended box of `grid`.
pub fn run_relation(rel: &ComplexRelation, grid: &GridSpec) -> IdentityResult {
    let mut chain = ChainOps::new(rel.which, grid);
    if rel.dual {
        chain = chain.formal_dual();
    }
    let comp = chain.full[rel.level + 1].compose(&chain.full[rel.level]);
    let residual = comp.max_abs();
    IdentityResult {
        id: rel.id.to_string(),
        statement: rel.statement.to_string(),
        residual,
        status: if comp.is_zero() { Status::Pass } else { Status::Fail },
    }
}

/// Runs every registered identity and complex relation on an `n³` node box.
pub fn run_all(n: usize, seed: u64) -> Result<Vec<IdentityResult>> {
    let grid = GridSpec::cube(n, 1.0 / n as f64)?;
    let ev = Evaluator::new(&grid);
    let reg = registry();
    let mut out: Vec<IdentityResult> = reg
        .par_iter()
        .enumerate()
        .map(|(i, r)| run_identity(&ev, r, seed, i as u64))
        .collect::<Result<_>>()?;
    out.extend(complex_relations().par_iter().map(|r| run_relation(r, &grid)).collect::<Vec<_>>());
    Ok(out)
}

pub fn all_pass(results: &[IdentityResult]) -> bool {
    results.iter().all(|r| r.status != Status::Fail)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdjointCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub relative: f64,
    pub pass: bool,
}

fn random_on(len: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..len).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect()
}

/// `Σ_sites xᵀ G y` over vectors indexed by `keys`.
fn gram_pairing(keys: &[DofKey], g: &[Vec<f64>], x: &[f64], y: &[f64]) -> f64 {
    let mut by_site: BTreeMap<[i32; 3], Vec<(usize, usize)>> = BTreeMap::new();
    for (i, &(c, p)) in keys.iter().enumerate() {
        by_site.entry(p).or_default().push((c, i));
    }
    let mut acc = 0.0;
    for dofs in by_site.values() {
        for &(ca, a) in dofs {
            for &(cb, b) in dofs {
                acc += x[a] * g[ca][cb] * y[b];
            }
        }
    }
    acc
}

/// Integration by parts between the first complex with `Γ_t` conditions and
/// the formal adjoints with `Γ_n` conditions:
/// `⟨Div_T T, v⟩ = -⟨T, devGrad v⟩` and `⟨Gradgrad u, S⟩ = ⟨u, divDiv S⟩`.
///
/// The right-hand operators are the second-complex symbols taken as backward
/// differences, assembled independently of the left-hand ones.
pub fn adjoint_checks(dom: &VoxelDomain, part: &BoundaryPartition, samples: usize, seed: u64) -> Result<Vec<AdjointCheck>> {
    let chain = ChainOps::new(Which::First, &dom.grid);
    let dual = chain.formal_dual();
    let strong = build_masks(dom, part, Which::First, &MIN_WIDTHS)?;
    let geo = chain_geometry(dom, part, &chain);
    let natural = classify_chain(&geo, &dual, &MIN_WIDTHS, Tag::N, Closure::Demote)?;
    let h = dom.grid.h;
    let vol = h * h * h;

    let t_keys = keys(&chain, &strong.levels[2].indices());
    let v_keys = keys(&chain, &natural.levels[0].indices());
    let u_keys = keys(&chain, &strong.levels[0].indices());
    let s_keys = keys(&chain, &natural.levels[2].indices());

    // backward differences are the point reflection of forward ones up to (-1)^order
    let dev_grad_bwd = symbols::dev_grad().to_stencils().reflected().scaled(q(-1));
    let div_div_bwd = symbols::div_div_s().to_stencils().reflected();
    let div_t = assemble_on(&chain.stencils[2], &t_keys, &v_keys, h);
    let grad_v = assemble_on(&dev_grad_bwd, &v_keys, &t_keys, h);
    let gradgrad = assemble_on(&chain.stencils[0], &u_keys, &s_keys, h);
    let divdiv_s = assemble_on(&div_div_bwd, &s_keys, &u_keys, h);
    let g_dev = to_f64(&symbols::dev_gram());
    let g_sym = to_f64(&symbols::sym_gram());

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let check = |name: String, lhs: f64, rhs: f64| {
        let relative = (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE);
        AdjointCheck { name, lhs, rhs, relative, pass: relative <= IDENTITY_TOL }
    };
    for i in 0..samples {
        let t = random_on(t_keys.len(), &mut rng);
        let v = random_on(v_keys.len(), &mut rng);
        let lhs = vol * crate::linalg::dot(&div_t.apply(&t), &v);
        let rhs = -vol * gram_pairing(&t_keys, &g_dev, &t, &grad_v.apply(&v));
        out.push(check(format!("div_t-devgrad[{i}]"), lhs, rhs));

        let u = random_on(u_keys.len(), &mut rng);
        let s = random_on(s_keys.len(), &mut rng);
        let lhs = vol * gram_pairing(&s_keys, &g_sym, &gradgrad.apply(&u), &s);
        let rhs = vol * crate::linalg::dot(&u, &divdiv_s.apply(&s));
        out.push(check(format!("gradgrad-divdiv[{i}]"), lhs, rhs));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_counts() {
        let reg = registry();
        let mut bullets: Vec<u8> = reg
            .iter()
            .filter_map(|r| match r.group {
                Group::Catalog(b) => Some(b),
                _ => None,
            })
            .collect();
        bullets.dedup();
        assert_eq!(bullets, (1..=CATALOG_GROUPS as u8).collect::<Vec<_>>());
        assert_eq!(complex_relations().len(), 8);
        let mut ids: Vec<_> = reg.iter().map(|r| r.id).chain(complex_relations().iter().map(|r| r.id)).collect();
        let total = ids.len();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), total);
    }

    #[test]
    fn every_operator_has_a_symbol() {
        for n in OPERATORS {
            assert!(operator_symbol(n).is_some(), "{n}");
        }
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let grid = GridSpec::cube(3, 1.0).unwrap();
        let ev = Evaluator::new(&grid);
        let inputs = random_inputs(ev.bx.len(), 1, 0);
        let err = ev.eval(&ap("Rot", var(Var::V)), &inputs).unwrap_err();
        assert!(matches!(err, LabError::ShapeMismatch(_)));
    }
}
