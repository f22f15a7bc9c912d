//! Dimensionally reduced dynamic von Kármán rods.
//!
//! * [`material`]: stored energy, stress and the linearization `ℒ = D²W(Id)`.
//! * [`cross_section`]: section meshes, the cell problem and the effective stiffness `Q_eff`.
//! * [`rod`]: 1D finite elements on `(0, L)`, the static axial/torsion solves and the bending operator.
//! * [`dynamics`]: implicit-midpoint time integration of the transverse wave equations with an energy ledger.
//! * [`rescale`]: rescaled displacements, slice rotations and stress diagnostics of sampled 3D fields.
//! * [`cli`]: configuration, pipelines and the `vkrod` command line.

pub mod cli;
pub mod cross_section;
pub mod dynamics;
pub mod material;
pub mod profile;
pub mod rescale;
pub mod rod;
pub mod sparse;

pub use cross_section::{CorrectorBasis, CrossSectionMesh, EffectiveStiffness};
pub use material::{MaterialModel, StressMode};
