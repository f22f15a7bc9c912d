//! Frame-indifferent stored energy densities and their linearization at the identity.
//!
//! The nonlinear density is Saint Venant–Kirchhoff,
//! `W(F) = ½ ℂ(E) : E` with the Green strain `E = ½(FᵀF − Id)`, so that
//! `W(RF) = W(F)`, `W(R) = 0` on rotations and `DW(F) = F ℂ(E)`.
//! The elasticity tensor `ℂ` is either isotropic (Lamé `lambda`, `mu`) or a
//! user-supplied symmetric positive semi-definite 6×6 Voigt matrix. In both
//! cases `ℒ = D²W(Id)` acts as `ℒA = ℂ(sym A)`.

use nalgebra::{Matrix3, Matrix6, SymmetricEigen, Vector6};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MaterialError {
    #[error("non-finite input matrix")]
    NonFinite,
    #[error("invalid material parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("Voigt elasticity matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("Voigt elasticity matrix is not positive semi-definite (min eigenvalue {0:e})")]
    NotPositiveSemidefinite(f64),
}

/// How `stress` evaluates `DW`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StressMode {
    /// Exact derivative of the Saint Venant–Kirchhoff density.
    #[default]
    Nonlinear,
    /// `DW(F)` replaced by `ℒ(F − Id)`, which satisfies `|DW(Id + A)| ≤ C|A|` globally.
    Linearized,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Elasticity {
    Isotropic { lambda: f64, mu: f64 },
    /// Voigt order (11, 22, 33, 23, 13, 12) with engineering shear strains.
    Voigt(Matrix6<f64>),
}

/// Material block of configuration files: Lamé parameters or a Voigt matrix.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialSpec {
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub mu: Option<f64>,
    #[serde(default)]
    pub stress_mode: StressMode,
    #[serde(default)]
    pub voigt: Option<[[f64; 6]; 6]>,
}

impl MaterialSpec {
    pub fn isotropic(lambda: f64, mu: f64) -> Self {
        Self {
            lambda: Some(lambda),
            mu: Some(mu),
            ..Self::default()
        }
    }

    pub fn build(&self) -> Result<MaterialModel, MaterialError> {
        let model = match (self.voigt, self.lambda, self.mu) {
            (Some(rows), None, None) => MaterialModel::from_voigt(Matrix6::from_fn(|i, j| rows[i][j]))?,
            (Some(_), _, _) => {
                return Err(MaterialError::InvalidParameter {
                    name: "voigt",
                    reason: "give either `voigt` or `lambda`/`mu`, not both".into(),
                })
            }
            (None, Some(lambda), Some(mu)) => MaterialModel::isotropic(lambda, mu)?,
            (None, None, _) => {
                return Err(MaterialError::InvalidParameter {
                    name: "lambda",
                    reason: "missing (required unless `voigt` is given)".into(),
                })
            }
            (None, _, None) => {
                return Err(MaterialError::InvalidParameter {
                    name: "mu",
                    reason: "missing (required unless `voigt` is given)".into(),
                })
            }
        };
        Ok(model.with_mode(self.stress_mode))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialModel {
    elasticity: Elasticity,
    mode: StressMode,
}

impl MaterialModel {
    /// Isotropic material; requires `mu > 0` and `lambda ≥ 0`.
    pub fn isotropic(lambda: f64, mu: f64) -> Result<Self, MaterialError> {
        if !mu.is_finite() || mu <= 0.0 {
            return Err(MaterialError::InvalidParameter {
                name: "mu",
                reason: format!("must be finite and > 0, got {mu}"),
            });
        }
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(MaterialError::InvalidParameter {
                name: "lambda",
                reason: format!("must be finite and >= 0, got {lambda}"),
            });
        }
        Ok(Self {
            elasticity: Elasticity::Isotropic { lambda, mu },
            mode: StressMode::Nonlinear,
        })
    }

    /// General linearization given as a 6×6 Voigt matrix, validated symmetric and PSD.
    pub fn from_voigt(c: Matrix6<f64>) -> Result<Self, MaterialError> {
        if c.iter().any(|v| !v.is_finite()) {
            return Err(MaterialError::NonFinite);
        }
        let scale = c.amax().max(f64::MIN_POSITIVE);
        let asym = (c - c.transpose()).amax();
        if asym > 1e-12 * scale {
            return Err(MaterialError::NotSymmetric(asym));
        }
        let sym = (c + c.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);
        let min = eig.eigenvalues.min();
        if min < -1e-12 * scale {
            return Err(MaterialError::NotPositiveSemidefinite(min));
        }
        Ok(Self {
            elasticity: Elasticity::Voigt(sym),
            mode: StressMode::Nonlinear,
        })
    }

    pub fn with_mode(mut self, mode: StressMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn mode(&self) -> StressMode {
        self.mode
    }

    pub fn elasticity(&self) -> &Elasticity {
        &self.elasticity
    }

    /// Young's modulus `mu(3 lambda + 2 mu)/(lambda + mu)` for isotropic materials.
    pub fn young_modulus(&self) -> Option<f64> {
        match self.elasticity {
            Elasticity::Isotropic { lambda, mu } => Some(mu * (3.0 * lambda + 2.0 * mu) / (lambda + mu)),
            Elasticity::Voigt(_) => None,
        }
    }

    /// Poisson ratio `lambda / (2(lambda + mu))` for isotropic materials.
    pub fn poisson_ratio(&self) -> Option<f64> {
        match self.elasticity {
            Elasticity::Isotropic { lambda, mu } => Some(lambda / (2.0 * (lambda + mu))),
            Elasticity::Voigt(_) => None,
        }
    }

    /// `ℂ(e)` for a symmetric strain `e`.
    fn elastic_stress(&self, e: &Matrix3<f64>) -> Matrix3<f64> {
        match self.elasticity {
            Elasticity::Isotropic { lambda, mu } => e * (2.0 * mu) + Matrix3::identity() * (lambda * e.trace()),
            Elasticity::Voigt(c) => voigt_to_stress(&(c * strain_to_voigt(e))),
        }
    }

    /// Stored energy `W(F)`; nonnegative, zero exactly on rotations.
    pub fn energy_density(&self, f: &Matrix3<f64>) -> Result<f64, MaterialError> {
        check_finite(f)?;
        let e = green_strain(f);
        Ok(0.5 * self.elastic_stress(&e).dot(&e))
    }

    /// First Piola–Kirchhoff stress `DW(F)` (or `ℒ(F − Id)` in linearized mode).
    pub fn stress(&self, f: &Matrix3<f64>) -> Result<Matrix3<f64>, MaterialError> {
        check_finite(f)?;
        Ok(self.stress_unchecked(f))
    }

    pub(crate) fn stress_unchecked(&self, f: &Matrix3<f64>) -> Matrix3<f64> {
        match self.mode {
            StressMode::Nonlinear => f * self.elastic_stress(&green_strain(f)),
            StressMode::Linearized => self.apply_l(&(f - Matrix3::identity())),
        }
    }

    /// `ℒA = D²W(Id)[A, ·]`; kills skew matrices and returns a symmetric matrix.
    pub fn apply_l(&self, a: &Matrix3<f64>) -> Matrix3<f64> {
        self.elastic_stress(&a.symmetric_part())
    }

    /// `Q(A) = ℒA : A`.
    pub fn quadratic_form(&self, a: &Matrix3<f64>) -> f64 {
        self.apply_l(a).dot(a)
    }
}

fn check_finite(f: &Matrix3<f64>) -> Result<(), MaterialError> {
    if f.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(MaterialError::NonFinite)
    }
}

pub fn green_strain(f: &Matrix3<f64>) -> Matrix3<f64> {
    (f.transpose() * f - Matrix3::identity()) * 0.5
}

fn strain_to_voigt(e: &Matrix3<f64>) -> Vector6<f64> {
    Vector6::new(
        e[(0, 0)],
        e[(1, 1)],
        e[(2, 2)],
        e[(1, 2)] + e[(2, 1)],
        e[(0, 2)] + e[(2, 0)],
        e[(0, 1)] + e[(1, 0)],
    )
}

fn voigt_to_stress(s: &Vector6<f64>) -> Matrix3<f64> {
    Matrix3::new(s[0], s[5], s[4], s[5], s[1], s[3], s[4], s[3], s[2])
}

/// Voigt matrix of an isotropic material, handy for cross-checking the general path.
pub fn isotropic_voigt(lambda: f64, mu: f64) -> Matrix6<f64> {
    let mut c = Matrix6::zeros();
    for i in 0..3 {
        for j in 0..3 {
            c[(i, j)] = lambda;
        }
        c[(i, i)] += 2.0 * mu;
        c[(i + 3, i + 3)] = mu;
    }
    c
}
