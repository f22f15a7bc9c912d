use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Matrix3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    manufactured_field, rescaled_displacements, rotational_stress_b, Field3D, LimitFields, ManufacturedOptions,
    RescaleError,
};
use crate::cross_section::{solve_correctors, CorrectorBasis, SectionSpec};
use crate::material::{MaterialModel, MaterialSpec};

/// Errors at or below this level are reported as exact.
pub const EXACT_TOL: f64 = 1e-12;

/// Rescaled axial displacements divide coordinate differences by `h²`, so their rounding floor is
/// about `ε/h²`; errors below `max(EXACT_TOL, exact_floor(h))` are rounding, not discretization.
pub fn exact_floor(h: f64) -> f64 {
    EXACT_TOL.max(32.0 * f64::EPSILON / (h * h))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rate {
    Exact,
    Fitted(f64),
}

impl Rate {
    pub fn value(&self) -> Option<f64> {
        match self {
            Rate::Exact => None,
            Rate::Fitted(r) => Some(*r),
        }
    }

    /// Exact, or a fitted rate of at least `min`.
    pub fn at_least(&self, min: f64) -> bool {
        match self {
            Rate::Exact => true,
            Rate::Fitted(r) => *r >= min,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub quantity: String,
    pub errors: Vec<f64>,
    pub rate: Rate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateTable {
    pub h: Vec<f64>,
    pub rows: Vec<RateRow>,
}

impl RateTable {
    pub fn row(&self, quantity: &str) -> Option<&RateRow> {
        self.rows.iter().find(|r| r.quantity == quantity)
    }

    /// Columns `quantity, rate, err_h=<h>...`; exact rows print `exact`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("quantity,rate");
        for h in &self.h {
            let _ = write!(s, ",err_h={h:.16e}");
        }
        s.push('\n');
        for row in &self.rows {
            s.push_str(&row.quantity);
            match row.rate {
                Rate::Exact => s.push_str(",exact"),
                Rate::Fitted(r) => {
                    let _ = write!(s, ",{r:.16e}");
                }
            }
            for e in &row.errors {
                let _ = write!(s, ",{e:.16e}");
            }
            s.push('\n');
        }
        s
    }
}

/// Least-squares slope of `log e` against `log h`, or exact when every error is at rounding level.
pub fn fitted_rate(h: &[f64], errors: &[f64]) -> Rate {
    if h.iter().zip(errors).all(|(h, e)| *e <= exact_floor(*h)) {
        return Rate::Exact;
    }
    let pts: Vec<(f64, f64)> = h
        .iter()
        .zip(errors)
        .map(|(h, e)| (h.ln(), e.max(f64::MIN_POSITIVE).ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Rate::Fitted(sxy / sxx)
}

/// `A(x₁) E⁰(x₁)` from the limit fields and the cell stress moments.
pub fn limit_b(limit: &LimitFields, basis: &CorrectorBasis, x1: f64) -> Matrix3<f64> {
    limit.rotation_generator(x1) * basis.stress_and_moments(&limit.strain(x1)).e0
}

/// Errors of `u^h, v^h₂, v^h₃, w^h` (max over slices) and optionally `B^h`
/// (max entrywise, relative to `max |A E⁰|`) against the limit fields, one field per `h`.
pub fn convergence_study(
    family: &[Field3D],
    limit: &LimitFields,
    stress: Option<(&MaterialModel, &CorrectorBasis)>,
) -> Result<RateTable, RescaleError> {
    if family.len() < 3 {
        return Err(RescaleError::TooFewSamples(family.len()));
    }
    let first = &family[0];
    for f in family {
        if f.nv() != first.nv() || f.mesh() != first.mesh() || f.length() != first.length() {
            return Err(RescaleError::Mismatch("fields of the family use different meshes".into()));
        }
    }
    let h: Vec<f64> = family.iter().map(Field3D::h).collect();
    let per_h: Vec<Result<Vec<f64>, RescaleError>> = family
        .par_iter()
        .map(|field| {
            let r = rescaled_displacements(field)?;
            let mut errs = [0.0f64; 4];
            for (i, &x) in r.x1.iter().enumerate() {
                let exact = limit.values(x);
                let got = [r.u[i], r.v2[i], r.v3[i], r.w[i]];
                for k in 0..4 {
                    errs[k] = errs[k].max((got[k] - exact[k]).abs());
                }
            }
            let mut out = errs.to_vec();
            if let Some((material, basis)) = stress {
                let b = rotational_stress_b(field, material)?;
                let mut err = 0.0f64;
                let mut scale = 0.0f64;
                for (i, bi) in b.iter().enumerate() {
                    let target = limit_b(limit, basis, field.x1(i));
                    err = err.max((bi - target).amax());
                    scale = scale.max(target.amax());
                }
                out.push(if scale > 0.0 { err / scale } else { err });
            }
            Ok(out)
        })
        .collect();
    let per_h = per_h.into_iter().collect::<Result<Vec<_>, _>>()?;
    let names = ["u", "v2", "v3", "w", "B"];
    let rows = (0..per_h[0].len())
        .map(|k| {
            let errors: Vec<f64> = per_h.iter().map(|e| e[k]).collect();
            RateRow {
                quantity: names[k].to_string(),
                rate: fitted_rate(&h, &errors),
                errors,
            }
        })
        .collect();
    Ok(RateTable { h, rows })
}

fn default_length() -> f64 {
    1.0
}

/// Manufactured family description read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManufacturedFamily {
    pub section: SectionSpec,
    #[serde(default = "default_length")]
    pub length: f64,
    pub n1: usize,
    pub h: Vec<f64>,
    pub limit: LimitFields,
    #[serde(default)]
    pub options: ManufacturedOptions,
    /// Needed for the corrector and the `B^h` row.
    #[serde(default)]
    pub material: Option<MaterialSpec>,
}

impl ManufacturedFamily {
    pub fn load(path: &Path) -> Result<Self, RescaleError> {
        let text = std::fs::read_to_string(path).map_err(|source| RescaleError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let de = &mut serde_json::Deserializer::from_str(&text);
        serde_path_to_error::deserialize(de).map_err(|e| RescaleError::Parse {
            path: path.display().to_string(),
            reason: format!("at `{}`: {}", e.path(), e.inner()),
        })
    }

    /// Generates every member and runs the study. Relative mesh paths resolve against `base_dir`.
    pub fn run(&self, base_dir: &Path) -> Result<RateTable, RescaleError> {
        for (name, p) in [("u", &self.limit.u), ("v2", &self.limit.v2), ("v3", &self.limit.v3), ("w", &self.limit.w)] {
            p.validate()
                .map_err(|e| RescaleError::Invalid(format!("limit.{name}: {e}")))?;
        }
        let (mesh, _) = self.section.build(base_dir)?;
        let material = self.material.as_ref().map(MaterialSpec::build).transpose()?;
        let basis = material.as_ref().map(|m| solve_correctors(&mesh, m)).transpose()?;
        let fields: Vec<Field3D> = self
            .h
            .par_iter()
            .map(|&h| manufactured_field(&mesh, &self.limit, h, self.n1, self.length, &self.options, basis.as_ref()))
            .collect::<Result<_, _>>()?;
        let stress = material.as_ref().zip(basis.as_ref());
        convergence_study(&fields, &self.limit, stress)
    }
}
