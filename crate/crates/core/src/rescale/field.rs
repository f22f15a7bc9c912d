use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Matrix3, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use super::RescaleError;
use crate::cross_section::{CorrectorBasis, CrossSectionMesh};
use crate::profile::Profile;

/// Samples of a scaled deformation `y(x₁, x′)` on `n₁` uniform slices of `[0, L]`
/// times the nodes of a cross-section mesh, optionally with `∂ₜy`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field3D {
    mesh: CrossSectionMesh,
    length: f64,
    h: f64,
    n1: usize,
    values: Vec<Vector3<f64>>,
    velocities: Option<Vec<Vector3<f64>>>,
}

impl Field3D {
    /// `values` are slice-major: entry `i·nv + a` belongs to slice `i`, node `a`.
    pub fn new(
        mesh: CrossSectionMesh,
        length: f64,
        h: f64,
        values: Vec<Vector3<f64>>,
        velocities: Option<Vec<Vector3<f64>>>,
    ) -> Result<Self, RescaleError> {
        let nv = mesh.nodes().len();
        if !(length.is_finite() && length > 0.0) {
            return Err(RescaleError::Invalid(format!("length must be positive, got {length}")));
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(RescaleError::Invalid(format!("h must be positive, got {h}")));
        }
        if values.is_empty() || values.len() % nv != 0 {
            return Err(RescaleError::Mismatch(format!(
                "{} values do not fill whole slices of {nv} nodes",
                values.len()
            )));
        }
        let n1 = values.len() / nv;
        if n1 < 2 {
            return Err(RescaleError::TooFewSlices { needed: 2, got: n1 });
        }
        if let Some(v) = &velocities {
            if v.len() != values.len() {
                return Err(RescaleError::Mismatch("velocity count differs from value count".into()));
            }
        }
        let finite = |v: &Vec<Vector3<f64>>| v.iter().all(|x| x.iter().all(|c| c.is_finite()));
        if !finite(&values) || velocities.as_ref().is_some_and(|v| !finite(v)) {
            return Err(RescaleError::NonFinite);
        }
        Ok(Self {
            mesh,
            length,
            h,
            n1,
            values,
            velocities,
        })
    }

    pub fn mesh(&self) -> &CrossSectionMesh {
        &self.mesh
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn nv(&self) -> usize {
        self.mesh.nodes().len()
    }

    pub fn x1(&self, i: usize) -> f64 {
        self.length * i as f64 / (self.n1 - 1) as f64
    }

    pub fn x1_grid(&self) -> Vec<f64> {
        (0..self.n1).map(|i| self.x1(i)).collect()
    }

    pub fn slice(&self, i: usize) -> &[Vector3<f64>] {
        let nv = self.nv();
        &self.values[i * nv..(i + 1) * nv]
    }

    pub fn velocity_slice(&self, i: usize) -> Option<&[Vector3<f64>]> {
        let nv = self.nv();
        self.velocities.as_ref().map(|v| &v[i * nv..(i + 1) * nv])
    }

    pub fn has_velocity(&self) -> bool {
        self.velocities.is_some()
    }

    pub fn values(&self) -> &[Vector3<f64>] {
        &self.values
    }

    /// Replaces the velocity samples.
    pub fn with_velocities(self, velocities: Vec<Vector3<f64>>) -> Result<Self, RescaleError> {
        Self::new(self.mesh, self.length, self.h, self.values, Some(velocities))
    }

    /// Applies `f` to every sampled value; velocities are dropped.
    pub fn map_values(&self, f: impl Fn(&Vector3<f64>) -> Vector3<f64>) -> Self {
        Self {
            values: self.values.iter().map(f).collect(),
            velocities: None,
            ..self.clone()
        }
    }

    /// Pointwise sum of two fields on the same grid.
    pub fn add(&self, other: &Field3D) -> Result<Self, RescaleError> {
        if self.n1 != other.n1 || self.nv() != other.nv() {
            return Err(RescaleError::Mismatch("fields live on different grids".into()));
        }
        let velocities = match (&self.velocities, &other.velocities) {
            (Some(a), Some(b)) => Some(a.iter().zip(b).map(|(x, y)| x + y).collect()),
            _ => None,
        };
        Ok(Self {
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
            velocities,
            ..self.clone()
        })
    }

    /// Parses the header `n1 nv h has_velocity` followed by `n1` blocks of `nv` lines
    /// `y1 y2 y3 [vy1 vy2 vy3]`.
    pub fn parse(text: &str, mesh: CrossSectionMesh, length: f64, origin: &str) -> Result<Self, RescaleError> {
        let err = |reason: String| RescaleError::Parse {
            path: origin.to_string(),
            reason,
        };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (ln, header) = lines.next().ok_or_else(|| err("empty file".into()))?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        let [n1, nv, h, hv] = parts[..] else {
            return Err(err(format!("line {ln}: header must be `n1 nv h has_velocity`")));
        };
        let bad = |what: &str| err(format!("line {ln}: bad {what} in header"));
        let n1: usize = n1.parse().map_err(|_| bad("n1"))?;
        let nv: usize = nv.parse().map_err(|_| bad("nv"))?;
        let h: f64 = h.parse().map_err(|_| bad("h"))?;
        let has_velocity = match hv {
            "0" => false,
            "1" => true,
            _ => return Err(bad("has_velocity (expected 0 or 1)")),
        };
        if nv != mesh.nodes().len() {
            return Err(RescaleError::Mismatch(format!(
                "field has {nv} nodes per slice but the mesh has {}",
                mesh.nodes().len()
            )));
        }
        let width = if has_velocity { 6 } else { 3 };
        let mut values = Vec::with_capacity(n1 * nv);
        let mut velocities = has_velocity.then(|| Vec::with_capacity(n1 * nv));
        for _ in 0..n1 * nv {
            let (ln, line) = lines.next().ok_or_else(|| err("unexpected end of data".into()))?;
            let v: Vec<f64> = line
                .split_whitespace()
                .map(str::parse)
                .collect::<Result<_, _>>()
                .map_err(|e| err(format!("line {ln}: {e}")))?;
            if v.len() != width {
                return Err(err(format!("line {ln}: expected {width} numbers, got {}", v.len())));
            }
            values.push(Vector3::new(v[0], v[1], v[2]));
            if let Some(vel) = velocities.as_mut() {
                vel.push(Vector3::new(v[3], v[4], v[5]));
            }
        }
        if let Some((ln, _)) = lines.next() {
            return Err(err(format!("line {ln}: trailing data")));
        }
        Self::new(mesh, length, h, values, velocities)
    }

    pub fn load(path: &Path, mesh: CrossSectionMesh, length: f64) -> Result<Self, RescaleError> {
        let text = std::fs::read_to_string(path).map_err(|source| RescaleError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text, mesh, length, &path.display().to_string())
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "{} {} {:.16e} {}\n",
            self.n1,
            self.nv(),
            self.h,
            u8::from(self.has_velocity())
        );
        for (k, y) in self.values.iter().enumerate() {
            let _ = write!(s, "{:.16e} {:.16e} {:.16e}", y[0], y[1], y[2]);
            if let Some(v) = &self.velocities {
                let _ = write!(s, " {:.16e} {:.16e} {:.16e}", v[k][0], v[k][1], v[k][2]);
            }
            s.push('\n');
        }
        s
    }
}

/// Limit displacements `(u, v₂, v₃, w)` as analytic profiles on `[0, L]`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitFields {
    #[serde(default)]
    pub u: Profile,
    #[serde(default)]
    pub v2: Profile,
    #[serde(default)]
    pub v3: Profile,
    #[serde(default)]
    pub w: Profile,
}

impl LimitFields {
    /// `ε = (u′ + ½(v₂′² + v₃′²), v₂″, v₃″, w′)`.
    pub fn strain(&self, x: f64) -> Vector4<f64> {
        let (a, b) = (self.v2.derivative(1, x), self.v3.derivative(1, x));
        Vector4::new(
            self.u.derivative(1, x) + 0.5 * (a * a + b * b),
            self.v2.derivative(2, x),
            self.v3.derivative(2, x),
            self.w.derivative(1, x),
        )
    }

    /// The skew field `A` with `A₂₁ = v₂′`, `A₃₁ = v₃′`, `A₃₂ = w`.
    pub fn rotation_generator(&self, x: f64) -> Matrix3<f64> {
        let (a, b, w) = (self.v2.derivative(1, x), self.v3.derivative(1, x), self.w.value(x));
        Matrix3::new(0.0, -a, -b, a, 0.0, -w, b, w, 0.0)
    }

    pub fn values(&self, x: f64) -> [f64; 4] {
        [self.u.value(x), self.v2.value(x), self.v3.value(x), self.w.value(x)]
    }
}

/// Optional additions to the manufactured field.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManufacturedOptions {
    /// Amplitude of the `h³ sin(πx₁/L)(1 + x₂², 1 − x₃, 1 + x₂)` perturbation.
    #[serde(default)]
    pub perturbation: f64,
    /// Amplitude `a` of the torsional oscillation `h² a sin(x₁/h)(0, −x₃, x₂)`.
    #[serde(default)]
    pub oscillation: f64,
    /// Adds the `h³` cross-section corrector, which makes the sampled strain match the
    /// limiting strain so that `B^h` converges to `A E⁰`.
    #[serde(default)]
    pub corrector: bool,
}

/// Samples
/// `y = (x₁ + h²(u − x₂v₂′ − x₃v₃′), h x₂ + h v₂ − h² x₃ w, h x₃ + h v₃ + h² x₂ w)`
/// on `n1` slices, plus the requested options.
///
/// With `corrector`, `h³(α(ε) + c)` is added, where `α(ε)` combines the cell correctors and
/// `c` is the affine field cancelling the `½AᵀA` part of the Green strain, shifted by an
/// infinitesimal in-plane rotation so that it carries no torsional moment.
pub fn manufactured_field(
    mesh: &CrossSectionMesh,
    limit: &LimitFields,
    h: f64,
    n1: usize,
    length: f64,
    options: &ManufacturedOptions,
    basis: Option<&CorrectorBasis>,
) -> Result<Field3D, RescaleError> {
    if n1 < 2 {
        return Err(RescaleError::TooFewSlices { needed: 2, got: n1 });
    }
    let basis = match (options.corrector, basis) {
        (true, Some(b)) => {
            if b.mesh().nodes().len() != mesh.nodes().len() {
                return Err(RescaleError::Mismatch("corrector basis lives on a different mesh".into()));
            }
            Some(b)
        }
        (true, None) => return Err(RescaleError::Invalid("corrector requested without a material".into())),
        (false, _) => None,
    };
    let geo = mesh.moments();
    let nodes = mesh.nodes();
    let (h2, h3) = (h * h, h * h * h);
    let mut values = Vec::with_capacity(n1 * nodes.len());
    for i in 0..n1 {
        let x1 = length * i as f64 / (n1 - 1) as f64;
        let [u, v2, v3, w] = limit.values(x1);
        let (a, b) = (limit.v2.derivative(1, x1), limit.v3.derivative(1, x1));
        let alpha = basis.map(|bs| bs.combine(&limit.strain(x1)));
        let gamma = -0.5 * a * b * (geo.i3 - geo.i2) / geo.mu_s;
        let s = (std::f64::consts::PI * x1 / length).sin();
        let osc = options.oscillation * (x1 / h).sin();
        for (k, p) in nodes.iter().enumerate() {
            let (x2, x3) = (p[0], p[1]);
            let mut y = Vector3::new(
                x1 + h2 * (u - x2 * a - x3 * b),
                h * x2 + h * v2 - h2 * x3 * w,
                h * x3 + h * v3 + h2 * x2 * w,
            );
            if let Some(al) = &alpha {
                let c = Vector3::new(
                    -b * w * x2 + a * w * x3,
                    -0.5 * (a * a + w * w) * x2 - 0.5 * a * b * x3 - gamma * x3,
                    -0.5 * a * b * x2 - 0.5 * (b * b + w * w) * x3 + gamma * x2,
                );
                y += h3 * (Vector3::from(al[k]) + c);
            }
            if options.perturbation != 0.0 {
                y += h3 * options.perturbation * s * Vector3::new(1.0 + x2 * x2, 1.0 - x3, 1.0 + x2);
            }
            if osc != 0.0 {
                y += h2 * osc * Vector3::new(0.0, -x3, x2);
            }
            values.push(y);
        }
    }
    Field3D::new(mesh.clone(), length, h, values, None)
}
