//! Command-line front end. `run` returns the process exit code: 0 when every
//! check passes, 1 when a check fails, 2 on configuration errors.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::complex::{build_complex, HilbertComplex, WeakStrongStudy};
use crate::config::Descriptor;
use crate::error::{LabError, Result};
use crate::fieldio::{load_field, save_field, FieldFile};
use crate::grid::FieldKind;
use crate::hodge::{
    combined_estimate_check, dimension_ledger, harmonic_fields, poincare_constants, poincare_sample_check, random_field,
    weight_independence_study, HodgeLevel, HodgeOptions,
};
use crate::identities::{adjoint_checks, all_pass, run_all, IDENTITY_TOL};
use crate::masks::MIN_WIDTHS;
use crate::oracle::{dense_helmholtz, dense_oracle};
use crate::report::{to_json, write_spectrum, Check, PoincareJson, Report};

/// Default subspace tolerance of the weak/strong comparison.
pub const TOL_SUB: f64 = 1e-8;
/// Helmholtz residual and orthogonality tolerance.
pub const TOL_HELMHOLTZ: f64 = 1e-8;
/// Relative slack of the Poincaré inequalities.
pub const TOL_POINCARE: f64 = 1e-6;
/// Largest principal angle accepted between weak and strong subspaces.
pub const TOL_ANGLE: f64 = 1e-6;
/// Relative agreement required between the oracle and the iterative path.
pub const TOL_ORACLE: f64 = 1e-8;

#[derive(Debug, Parser)]
#[command(name = "lab", about = "Biharmonic complex laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Complex descriptor file.
    #[arg(long, global = true)]
    pub descriptor: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, global = true)]
    pub tol_harm: Option<f64>,
    #[arg(long, global = true)]
    pub tol_sub: Option<f64>,
    #[arg(long, global = true)]
    pub tol_solver: Option<f64>,
    /// Report path; standard output when absent.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the identity suite on an n³ box.
    Identities {
        #[arg(long, default_value_t = 8)]
        grid: usize,
    },
    /// Assemble and verify the complexes, print the dimension ledger.
    Build,
    /// Harmonic dimensions and the weight-independence study.
    Cohomology {
        /// Directory receiving `<complex>_level<k>.csv` spectra.
        #[arg(long)]
        spectrum: Option<PathBuf>,
    },
    /// Helmholtz decomposition of a field file or a seeded random field.
    Helmholtz {
        #[arg(long, default_value_t = 1)]
        level: usize,
        #[arg(long)]
        field: Option<PathBuf>,
        /// Directory receiving the range, harmonic and co-range parts.
        #[arg(long)]
        save_parts: Option<PathBuf>,
    },
    /// Poincaré constants, sampled inequalities and the combined estimate.
    Poincare {
        #[arg(long, default_value_t = 100)]
        samples: usize,
    },
    /// Weak against strong boundary condition subspaces.
    Weakstrong,
    /// Dense cross-check of dimensions, constants and projections.
    Oracle {
        /// Use the iterative eigensolver at every size.
        #[arg(long)]
        force_iterative: bool,
    },
}

pub struct Outcome {
    pub text: String,
    pub pass: bool,
}

/// Exit code of an error: numerical failures count as failed checks.
pub fn exit_code(e: &LabError) -> i32 {
    match e {
        LabError::NoSpectralGap { .. }
        | LabError::RankDeficient { .. }
        | LabError::SolverDiverged { .. }
        | LabError::NotInRange { .. }
        | LabError::Tensor(_) => 1,
        _ => 2,
    }
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(out) => {
            let written = match &cli.common.output {
                Some(p) => std::fs::write(p, &out.text).map_err(LabError::from),
                None => {
                    print!("{}", out.text);
                    Ok(())
                }
            };
            if let Err(e) = written {
                eprintln!("error: {e}");
                return 2;
            }
            if out.pass {
                0
            } else {
                eprintln!("one or more checks failed");
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn positive(name: &str, v: Option<f64>, default: f64) -> Result<f64> {
    match v {
        None => Ok(default),
        Some(x) if x > 0.0 && x.is_finite() => Ok(x),
        Some(x) => Err(LabError::Config(format!("--{name} must be positive, got {x}"))),
    }
}

fn hodge_options(c: &Common) -> Result<HodgeOptions> {
    let d = HodgeOptions::default();
    Ok(HodgeOptions {
        tol_harm: positive("tol-harm", c.tol_harm, d.tol_harm)?,
        tol_solver: positive("tol-solver", c.tol_solver, d.tol_solver)?,
        ..d
    })
}

fn descriptor(c: &Common) -> Result<Descriptor> {
    let path = c.descriptor.as_ref().ok_or_else(|| LabError::Config("--descriptor is required".into()))?;
    Descriptor::load(path)
}

fn complexes(d: &Descriptor) -> Result<Vec<HilbertComplex>> {
    let (dom, part) = d.domain()?;
    d.which.iter().map(|&w| build_complex(w, &dom, &part, &d.widths, &d.weights())).collect()
}

fn finish(reports: Vec<Report>) -> Outcome {
    let pass = reports.iter().all(Report::pass);
    Outcome { text: to_json(&reports), pass }
}

pub fn execute(cli: &Cli) -> Result<Outcome> {
    let common = &cli.common;
    let opts = hodge_options(common)?;
    let tol_sub = positive("tol-sub", common.tol_sub, TOL_SUB)?;
    match &cli.command {
        Command::Identities { grid } => {
            if *grid < 2 {
                return Err(LabError::Config(format!("--grid {grid} must be at least 2")));
            }
            let results = run_all(*grid, common.seed)?;
            Ok(Outcome { pass: all_pass(&results), text: to_json(&results) })
        }
        Command::Build => build(&descriptor(common)?, &opts, common.seed),
        Command::Cohomology { spectrum } => cohomology(&descriptor(common)?, &opts, common.seed, spectrum.as_deref()),
        Command::Helmholtz { level, field, save_parts } => {
            helmholtz(&descriptor(common)?, &opts, common.seed, *level, field.as_deref(), save_parts.as_deref())
        }
        Command::Poincare { samples } => poincare(&descriptor(common)?, &opts, common.seed, *samples),
        Command::Weakstrong => weakstrong(&descriptor(common)?, tol_sub),
        Command::Oracle { force_iterative } => {
            let mut opts = opts;
            if *force_iterative {
                opts.eigen.dense_limit = 0;
            }
            oracle(&descriptor(common)?, &opts, common.seed)
        }
    }
}

fn build(d: &Descriptor, opts: &HodgeOptions, seed: u64) -> Result<Outcome> {
    let (dom, part) = d.domain()?;
    let mut reports = Vec::new();
    for c in complexes(d)? {
        let mut r = Report::new("build", c.which.name(), c.dims());
        let comp = c.composite_max();
        r.checks.push(Check::equals("composite_01", comp[0], 0.0));
        r.checks.push(Check::equals("composite_12", comp[1], 0.0));
        let ledger = dimension_ledger(&c, opts)?;
        r.checks.push(Check::equals("ledger_consistent", ledger.consistent as u8 as f64, 1.0));
        r.detail("ranks", ledger.ranks);
        r.detail("cohomology", ledger.cohomology);
        r.detail("demoted", c.demoted);
        r.detail("operators", &c.op_names);
        r.detail("widths", d.widths);
        reports.push(r);
    }
    let mut r = Report::new("build", "adjoint", [0; 4]);
    for a in adjoint_checks(&dom, &part, 5, seed)? {
        r.checks.push(Check::at_most(a.name, a.relative, IDENTITY_TOL));
    }
    reports.push(r);
    Ok(finish(reports))
}

fn cohomology(d: &Descriptor, opts: &HodgeOptions, seed: u64, spectrum: Option<&Path>) -> Result<Outcome> {
    let (dom, part) = d.domain()?;
    let mut reports = Vec::new();
    for c in complexes(d)? {
        let mut r = Report::new("cohomology", c.which.name(), c.dims());
        let mut dims = [0usize; 4];
        let mut min_gap = f64::INFINITY;
        for k in 0..4 {
            let h = harmonic_fields(&c, k, opts)?;
            dims[k] = h.dim();
            min_gap = min_gap.min(h.eigen_gap);
            r.checks.push(Check::at_least(format!("eigen_gap_level{k}"), h.eigen_gap, opts.gap_required));
            if let Some(dir) = spectrum {
                let path = dir.join(format!("{}_level{k}.csv", c.which.name()));
                write_spectrum(std::io::BufWriter::new(std::fs::File::create(path)?), &h.eigenvalues)?;
            }
        }
        r.eigen_gap = Some(min_gap);
        r.detail("cohomology", dims);
        r.detail("harmonic", [dims[1], dims[2]]);
        let seeds = [seed, seed + 1, seed + 2];
        let study = weight_independence_study(&dom, &part, c.which, &d.widths, &seeds, opts)?;
        r.checks.push(Check::equals("weight_independent", study.all_equal as u8 as f64, 1.0));
        let rows: Vec<_> = study
            .rows
            .iter()
            .map(|w| serde_json::json!({"weights": w.weights, "harmonic": w.harmonic, "gaps": w.gaps}))
            .collect();
        r.detail("weight_study", rows);
        reports.push(r);
    }
    Ok(finish(reports))
}

fn rank_of(kind: FieldKind) -> u32 {
    match kind {
        FieldKind::Scalar => 0,
        FieldKind::Vector => 1,
        FieldKind::Sym | FieldKind::Dev => 2,
    }
}

fn helmholtz(
    d: &Descriptor,
    opts: &HodgeOptions,
    seed: u64,
    level: usize,
    field: Option<&Path>,
    save_parts: Option<&Path>,
) -> Result<Outcome> {
    if level > 3 {
        return Err(LabError::Config(format!("--level {level} must be 0..=3")));
    }
    if field.is_some() && d.which.len() != 1 {
        return Err(LabError::Config("a field file needs a descriptor naming one complex".into()));
    }
    let mut reports = Vec::new();
    for c in complexes(d)? {
        let n = c.spaces[level].dim();
        let rank = rank_of(c.spaces[level].kind);
        let x = match field {
            Some(p) => {
                let f = load_field(p, Some(rank))?;
                if f.values.len() != n {
                    return Err(LabError::HeaderMismatch(format!("{} values for a level of {n} DOFs", f.values.len())));
                }
                f.values
            }
            None => random_field(n, seed),
        };
        let dec = HodgeLevel::new(&c, level, opts)?.decompose(&x)?;
        let mut r = Report::new("helmholtz", c.which.name(), c.dims());
        r.level = Some(level);
        r.checks.push(Check::at_most("reconstruction", dec.residual, TOL_HELMHOLTZ));
        r.checks.push(Check::at_most("orthogonality", dec.orthogonality_defect, TOL_HELMHOLTZ));
        r.detail(
            "norms",
            [c.norm(level, &dec.range_part), c.norm(level, &dec.harmonic_part), c.norm(level, &dec.corange_part)],
        );
        if let Some(dir) = save_parts {
            for (name, part) in [("range", &dec.range_part), ("harmonic", &dec.harmonic_part), ("corange", &dec.corange_part)] {
                let f = FieldFile { rank, dims: c.grid.dims, h: c.grid.h, values: part.clone() };
                save_field(&dir.join(format!("{}_level{level}_{name}.bihf", c.which.name())), &f)?;
            }
        }
        reports.push(r);
    }
    Ok(finish(reports))
}

fn poincare(d: &Descriptor, opts: &HodgeOptions, seed: u64, samples: usize) -> Result<Outcome> {
    let mut reports = Vec::new();
    for c in complexes(d)? {
        let p = poincare_constants(&c, opts)?;
        let mut r = Report::new("poincare", c.which.name(), c.dims());
        r.poincare = Some(PoincareJson { c0: p.c[0], c1: p.c[1], c2: p.c[2] });
        r.eigen_gap = Some(p.gaps.iter().copied().fold(f64::INFINITY, f64::min));
        for s in poincare_sample_check(&c, &p, samples, seed, opts)? {
            r.checks.push(Check::at_most(format!("ratio_c{}", s.level), s.max_ratio, 1.0 + TOL_POINCARE));
            r.checks.push(Check::at_most(format!("tightness_c{}", s.level), (s.tightness - 1.0).abs(), TOL_POINCARE));
        }
        let harm1 = harmonic_fields(&c, 1, opts)?;
        let comb = combined_estimate_check(&c, &p, &harm1, samples, seed);
        r.checks.push(Check::at_most("combined_ratio", comb.max_ratio, 1.0 + TOL_POINCARE));
        r.checks.push(Check::at_most("combined_tightness", (comb.tightness - 1.0).abs(), TOL_POINCARE));
        r.detail("null_dims", p.null_dims);
        reports.push(r);
    }
    Ok(finish(reports))
}

fn weakstrong(d: &Descriptor, tol_sub: f64) -> Result<Outcome> {
    let (dom, part) = d.domain()?;
    let mut reports = Vec::new();
    for &which in &d.which {
        let study = WeakStrongStudy::new(&dom, &part, which, &d.widths, &MIN_WIDTHS)?;
        let c = build_complex(which, &dom, &part, &d.widths, &d.weights())?;
        let mut r = Report::new("weakstrong", which.name(), c.dims());
        let mut rows = Vec::new();
        for k in 0..3 {
            let (_, w) = study.weak_space(k, tol_sub)?;
            r.checks.push(Check::equals(format!("{}_dim", w.op), w.weak_dim as f64, w.strong_dim as f64));
            r.checks.push(Check::at_most(format!("{}_angle", w.op), w.max_angle, TOL_ANGLE));
            rows.push(serde_json::json!({
                "op": w.op, "weak_dim": w.weak_dim, "strong_dim": w.strong_dim,
                "missing": w.missing, "gap": w.gap, "max_angle": w.max_angle,
            }));
        }
        r.detail("levels", rows);
        reports.push(r);
    }
    Ok(finish(reports))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn oracle(d: &Descriptor, opts: &HodgeOptions, seed: u64) -> Result<Outcome> {
    let mut reports = Vec::new();
    for c in complexes(d)? {
        let o = dense_oracle(&c)?;
        let ledger = dimension_ledger(&c, opts)?;
        let p = poincare_constants(&c, opts)?;
        let mut r = Report::new("oracle", c.which.name(), c.dims());
        for k in 0..4 {
            r.checks.push(Check::equals(format!("cohomology_{k}"), ledger.cohomology[k] as f64, o.cohomology[k] as f64));
        }
        for k in 0..3 {
            r.checks.push(Check::at_most(format!("c{k}"), rel(p.c[k], o.c[k]), TOL_ORACLE));
        }
        for level in 1..3 {
            let x = random_field(c.spaces[level].dim(), seed + level as u64);
            let dec = HodgeLevel::new(&c, level, opts)?.decompose(&x)?;
            let dense = dense_helmholtz(&c, level, &x)?;
            let nx = c.norm(level, &x);
            for (name, it, de) in [
                ("range", &dec.range_part, &dense[0]),
                ("harmonic", &dec.harmonic_part, &dense[1]),
                ("corange", &dec.corange_part, &dense[2]),
            ] {
                let err = c.norm(level, &crate::linalg::sub(it, de)) / nx;
                r.checks.push(Check::at_most(format!("{name}_level{level}"), err, TOL_ORACLE));
            }
        }
        r.poincare = Some(PoincareJson { c0: o.c[0], c1: o.c[1], c2: o.c[2] });
        r.detail("oracle_cohomology", o.cohomology);
        r.detail("iterative_cohomology", ledger.cohomology);
        r.detail("rank_gaps", o.rank_gaps);
        reports.push(r);
    }
    Ok(finish(reports))
}
