use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TensorError {
    #[error("matrix is not skew: relative symmetric part {relative:.3e}")]
    NotSkew { relative: f64 },
}

#[derive(Debug, Error)]
pub enum LabError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("active node set is empty")]
    Empty,
    #[error("active node set has {components} face-connected components")]
    Disconnected { components: usize },
    #[error("incompatible widths {widths:?}: {detail}")]
    IncompatibleWidths { widths: Vec<i32>, detail: String },
    #[error("weight block at lattice index {index} is not SPD (min eigenvalue {min_eig:.3e})")]
    WeightNotSPD { index: usize, min_eig: f64 },
    #[error("numerical rank is ambiguous: spectral gap {gap:.3e} below {required:.1e}")]
    RankDeficient { gap: f64, required: f64 },
    #[error("no spectral gap at level {level}: gap {gap:.3e} below {required:.1e}")]
    NoSpectralGap { level: usize, gap: f64, required: f64 },
    #[error("solver did not converge: {detail}")]
    SolverDiverged { detail: String },
    #[error("right-hand side is not in the range: relative residual {residual:.3e}")]
    NotInRange { residual: f64 },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("problem too large for the dense oracle: {dofs} DOFs exceeds {limit}")]
    TooLarge { dofs: usize, limit: usize },
    #[error("header mismatch: {0}")]
    HeaderMismatch(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, LabError>;
