//! Rescaled displacements, slice rotations and stress diagnostics of sampled 3D deformations,
//! and convergence studies in the thickness `h`.

mod analysis;
mod field;
mod study;

pub use analysis::{
    polar_rotation, rescaled_displacements, rotational_stress_b, scaled_gradients, slice_rotations,
    torsion_diagnostic, RescaledDisplacements, SliceAnalysis, SliceRotationField, TorsionDiagnostic,
};
pub use field::{manufactured_field, Field3D, LimitFields, ManufacturedOptions};
pub use study::{
    convergence_study, exact_floor, fitted_rate, limit_b, ManufacturedFamily, Rate, RateRow, RateTable, EXACT_TOL,
};

use thiserror::Error;

use crate::cross_section::{CellError, MeshError};
use crate::material::MaterialError;

#[derive(Debug, Error)]
pub enum RescaleError {
    #[error("{path}: {reason}")]
    Parse { path: String, reason: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cross-section is not normalized (centroid, principal axes, unit area)")]
    NotNormalized,
    #[error("average gradient on slice {slice} is singular")]
    Degenerate { slice: usize },
    #[error("need at least {needed} slices, got {got}")]
    TooFewSlices { needed: usize, got: usize },
    #[error("not enough samples: got {0}")]
    TooFewSamples(usize),
    #[error("inconsistent data: {0}")]
    Mismatch(String),
    #[error("field contains non-finite values")]
    NonFinite,
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Cell(#[from] CellError),
    #[error(transparent)]
    Material(#[from] MaterialError),
}
