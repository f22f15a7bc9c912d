//! Cross-section geometry and the cell problem that yields the effective rod stiffness.

pub mod cell;
pub mod mesh;

pub use cell::{
    effective_stiffness, solve_correctors, strain_column, CellError, CorrectorBasis, CorrectorDiagnostics,
    EffectiveStiffness, StressMoments, LOAD_NAMES,
};
pub use mesh::{BuiltinShape, CrossSectionMesh, GeometricReport, MeshError, SectionSpec};
