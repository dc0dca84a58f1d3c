//! Discrete laboratory for the Gradgrad/divDiv biharmonic Hilbert complexes
//! with mixed boundary conditions on voxel domains.

pub mod cli;
pub mod complex;
pub mod config;
pub mod error;
pub mod fieldio;
pub mod grid;
pub mod hodge;
pub mod identities;
pub mod linalg;
pub mod masks;
pub mod ops;
pub mod oracle;
pub mod report;
pub mod sparse;
pub mod stencil;
pub mod tensor;

pub use error::{LabError, Result};
