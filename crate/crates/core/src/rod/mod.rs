//! One-dimensional clamped rod: finite-element spaces, static axial/torsion solves,
//! bending residuals and the linearized spectrum.

mod spaces;
mod system;

pub use spaces::{HermiteShape, P2Shape, RodMesh1D, GAUSS_POINTS, GAUSS_WEIGHTS};
pub use system::{RodState, RodSystem, Spectrum, StaticSolution};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RodError {
    #[error("rod length must be positive and finite, got {0}")]
    InvalidLength(f64),
    #[error("need at least 2 elements, got {0}")]
    TooFewElements(usize),
    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("{0} matrix is singular or not positive definite (zero stiffness entry?)")]
    Singular(&'static str),
    #[error("requested {requested} eigenvalues but the space has dimension {dim}")]
    TooManyModes { requested: usize, dim: usize },
    #[error("component must be 2 or 3, got {0}")]
    Component(usize),
}
