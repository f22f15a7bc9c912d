use nalgebra::{Matrix3, Vector3};

use super::{Field3D, RescaleError};
use crate::cross_section::{cell::NORMALIZATION_TOL, CrossSectionMesh};
use crate::material::MaterialModel;

/// Exact P1 section integrals: `∫φ_a`, `∫x₂φ_a`, `∫x₃φ_a`, plus per-element data.
struct SectionWeights {
    lumped: Vec<f64>,
    x2: Vec<f64>,
    x3: Vec<f64>,
    mu: f64,
    areas: Vec<f64>,
    centroids: Vec<[f64; 2]>,
    /// `∇φ_a` for the three vertices of each element.
    grads: Vec<[[f64; 2]; 3]>,
}

impl SectionWeights {
    fn new(mesh: &CrossSectionMesh) -> Self {
        let n = mesh.nodes().len();
        let nt = mesh.triangles().len();
        let mut w = Self {
            lumped: vec![0.0; n],
            x2: vec![0.0; n],
            x3: vec![0.0; n],
            mu: mesh.moments().mu_s,
            areas: Vec::with_capacity(nt),
            centroids: Vec::with_capacity(nt),
            grads: Vec::with_capacity(nt),
        };
        for (t, tri) in mesh.triangles().iter().enumerate() {
            let p = mesh.triangle_coords(t);
            let area = mesh.triangle_area(t);
            let s2 = p[0][0] + p[1][0] + p[2][0];
            let s3 = p[0][1] + p[1][1] + p[2][1];
            let mut g = [[0.0; 2]; 3];
            for a in 0..3 {
                let (b, c) = ((a + 1) % 3, (a + 2) % 3);
                g[a] = [
                    (p[b][1] - p[c][1]) / (2.0 * area),
                    (p[c][0] - p[b][0]) / (2.0 * area),
                ];
                let node = tri[a];
                w.lumped[node] += area / 3.0;
                w.x2[node] += area / 12.0 * (p[a][0] + s2);
                w.x3[node] += area / 12.0 * (p[a][1] + s3);
            }
            w.areas.push(area);
            w.centroids.push([s2 / 3.0, s3 / 3.0]);
            w.grads.push(g);
        }
        w
    }

    /// `(1/h²μ) ∫ (x₂ y₃ − x₃ y₂)`.
    fn torsion(&self, y: &[Vector3<f64>], h: f64) -> f64 {
        let s: f64 = (0..y.len()).map(|a| self.x2[a] * y[a][2] - self.x3[a] * y[a][1]).sum();
        s / (h * h * self.mu)
    }
}

fn check_normalized(mesh: &CrossSectionMesh) -> Result<(), RescaleError> {
    if mesh.is_normalized(NORMALIZATION_TOL) {
        Ok(())
    } else {
        Err(RescaleError::NotNormalized)
    }
}

/// `u^h, v^h₂, v^h₃, w^h` at the slice positions.
#[derive(Debug, Clone, PartialEq)]
pub struct RescaledDisplacements {
    pub x1: Vec<f64>,
    pub u: Vec<f64>,
    pub v2: Vec<f64>,
    pub v3: Vec<f64>,
    pub w: Vec<f64>,
}

/// Cross-section integrals of the four rescaled displacements on every slice.
/// The integrands are exactly linear or quadratic in the P1 samples, so the quadrature is exact.
pub fn rescaled_displacements(field: &Field3D) -> Result<RescaledDisplacements, RescaleError> {
    check_normalized(field.mesh())?;
    let sw = SectionWeights::new(field.mesh());
    let h = field.h();
    let n1 = field.n1();
    let mut out = RescaledDisplacements {
        x1: field.x1_grid(),
        u: Vec::with_capacity(n1),
        v2: Vec::with_capacity(n1),
        v3: Vec::with_capacity(n1),
        w: Vec::with_capacity(n1),
    };
    for i in 0..n1 {
        let y = field.slice(i);
        let x1 = field.x1(i);
        let mut m = Vector3::zeros();
        for (a, ya) in y.iter().enumerate() {
            m += sw.lumped[a] * ya;
        }
        let area: f64 = sw.lumped.iter().sum();
        out.u.push((m[0] - area * x1) / (h * h));
        out.v2.push(m[1] / h);
        out.v3.push(m[2] / h);
        out.w.push(sw.torsion(y, h));
    }
    Ok(out)
}

/// Fourth-order finite differences of `y` along `x₁` at every grid point.
fn x1_derivatives(field: &Field3D) -> Result<Vec<Vec<Vector3<f64>>>, RescaleError> {
    let n = field.n1();
    if n < 5 {
        return Err(RescaleError::TooFewSlices { needed: 5, got: n });
    }
    let d = field.length() / (n - 1) as f64;
    let s = |i: usize| field.slice(i);
    let nv = field.nv();
    let stencil = |i: usize, a: usize| -> Vector3<f64> {
        let f = |k: usize| s(k)[a];
        let v = match i {
            0 => -25.0 * f(0) + 48.0 * f(1) - 36.0 * f(2) + 16.0 * f(3) - 3.0 * f(4),
            1 => -3.0 * f(0) - 10.0 * f(1) + 18.0 * f(2) - 6.0 * f(3) + f(4),
            _ if i == n - 2 => {
                3.0 * f(n - 1) + 10.0 * f(n - 2) - 18.0 * f(n - 3) + 6.0 * f(n - 4) - f(n - 5)
            }
            _ if i == n - 1 => {
                25.0 * f(n - 1) - 48.0 * f(n - 2) + 36.0 * f(n - 3) - 16.0 * f(n - 4) + 3.0 * f(n - 5)
            }
            _ => f(i - 2) - 8.0 * f(i - 1) + 8.0 * f(i + 1) - f(i + 2),
        };
        v / (12.0 * d)
    };
    Ok((0..n).map(|i| (0..nv).map(|a| stencil(i, a)).collect()).collect())
}

/// `D_h y = (∂₁y | ∂₂y/h | ∂₃y/h)` per slice and element; the `x₁` column is the element mean.
pub fn scaled_gradients(field: &Field3D) -> Result<Vec<Vec<Matrix3<f64>>>, RescaleError> {
    let d1 = x1_derivatives(field)?;
    let sw = SectionWeights::new(field.mesh());
    let h = field.h();
    let tris = field.mesh().triangles();
    Ok((0..field.n1())
        .map(|i| {
            let y = field.slice(i);
            tris.iter()
                .enumerate()
                .map(|(t, tri)| {
                    let mut c1 = Vector3::zeros();
                    let mut c2 = Vector3::zeros();
                    let mut c3 = Vector3::zeros();
                    for (a, &node) in tri.iter().enumerate() {
                        c1 += d1[i][node] / 3.0;
                        c2 += y[node] * sw.grads[t][a][0];
                        c3 += y[node] * sw.grads[t][a][1];
                    }
                    Matrix3::from_columns(&[c1, c2 / h, c3 / h])
                })
                .collect()
        })
        .collect())
}

/// Closest rotation to `m` in the Frobenius norm, or `None` if `m` is numerically singular.
pub fn polar_rotation(m: &Matrix3<f64>) -> Option<Matrix3<f64>> {
    if m.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let svd = m.svd(true, true);
    let (mut u, vt) = (svd.u?, svd.v_t?);
    let sv = svd.singular_values;
    let smax = sv.max();
    let (imin, smin) = sv.argmin();
    if !(smax > 0.0) || smin <= 1e-12 * smax {
        return None;
    }
    if (u * vt).determinant() < 0.0 {
        let col = -u.column(imin);
        u.set_column(imin, &col);
    }
    Some(u * vt)
}

/// Per-slice rotations `R(x₁)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceRotationField {
    pub x1: Vec<f64>,
    pub rotations: Vec<Matrix3<f64>>,
}

impl SliceRotationField {
    /// `max_i ‖RᵢᵀRᵢ − Id‖_max` and `min_i det Rᵢ`.
    pub fn orthogonality(&self) -> (f64, f64) {
        let mut err = 0.0f64;
        let mut det = f64::INFINITY;
        for r in &self.rotations {
            err = err.max((r.transpose() * r - Matrix3::identity()).amax());
            det = det.min(r.determinant());
        }
        (err, det)
    }
}

#[derive(Debug, Clone)]
pub struct SliceAnalysis {
    pub rotations: SliceRotationField,
    /// `A^h = (R − Id)/h` per slice.
    pub a: Vec<Matrix3<f64>>,
    /// `G^h = (Rᵀ D_h y − Id)/h²` per slice and element.
    pub g: Vec<Vec<Matrix3<f64>>>,
    /// Area-weighted least-squares fit `G^h₁₁ ≈ c₀ + c₂x₂ + c₃x₃` per slice, as `[c₀, c₂, c₃]`.
    pub axial_fit: Vec<[f64; 3]>,
}

/// Polar projection of the section-averaged scaled gradient on every slice.
pub fn slice_rotations(field: &Field3D) -> Result<SliceAnalysis, RescaleError> {
    check_normalized(field.mesh())?;
    let grads = scaled_gradients(field)?;
    let sw = SectionWeights::new(field.mesh());
    let h = field.h();
    let mut rotations = Vec::with_capacity(field.n1());
    let mut a = Vec::with_capacity(field.n1());
    let mut g = Vec::with_capacity(field.n1());
    let mut axial_fit = Vec::with_capacity(field.n1());
    // normal matrix of the affine fit, shared by all slices
    let mut normal = Matrix3::zeros();
    for (t, c) in sw.centroids.iter().enumerate() {
        let phi = Vector3::new(1.0, c[0], c[1]);
        normal += sw.areas[t] * phi * phi.transpose();
    }
    let normal_lu = normal.lu();
    for (i, slice) in grads.iter().enumerate() {
        let mean: Matrix3<f64> = slice.iter().zip(&sw.areas).map(|(f, w)| f * *w).sum();
        let area: f64 = sw.areas.iter().sum();
        let r = polar_rotation(&(mean / area)).ok_or(RescaleError::Degenerate { slice: i })?;
        let gi: Vec<Matrix3<f64>> = slice
            .iter()
            .map(|f| (r.transpose() * f - Matrix3::identity()) / (h * h))
            .collect();
        let mut rhs = Vector3::zeros();
        for (t, c) in sw.centroids.iter().enumerate() {
            rhs += sw.areas[t] * gi[t][(0, 0)] * Vector3::new(1.0, c[0], c[1]);
        }
        let coef = normal_lu.solve(&rhs).ok_or(RescaleError::Degenerate { slice: i })?;
        axial_fit.push([coef[0], coef[1], coef[2]]);
        a.push((r - Matrix3::identity()) / h);
        g.push(gi);
        rotations.push(r);
    }
    Ok(SliceAnalysis {
        rotations: SliceRotationField {
            x1: field.x1_grid(),
            rotations,
        },
        a,
        g,
        axial_fit,
    })
}

/// `B^h = h⁻³ [∫(Id − D_h yᵀ)] [∫DW(D_h y)]` per slice.
pub fn rotational_stress_b(field: &Field3D, material: &MaterialModel) -> Result<Vec<Matrix3<f64>>, RescaleError> {
    let grads = scaled_gradients(field)?;
    let sw = SectionWeights::new(field.mesh());
    let h3 = field.h().powi(3);
    grads
        .iter()
        .map(|slice| {
            let mut left = Matrix3::zeros();
            let mut right = Matrix3::zeros();
            for (f, w) in slice.iter().zip(&sw.areas) {
                left += (Matrix3::identity() - f.transpose()) * *w;
                right += material.stress(f)? * *w;
            }
            Ok(left * right / h3)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TorsionDiagnostic {
    /// `D = ∫ ‖∂ₜw^h‖_{L²(0,L)} dt`.
    pub value: f64,
    pub times: Vec<f64>,
    /// `‖∂ₜw^h(tₙ)‖_{L²(0,L)}` per sample.
    pub norms: Vec<f64>,
    /// Whether `∂ₜw^h` came from velocity samples rather than finite differences in time.
    pub from_velocities: bool,
}

/// L² norm on `[0, L]` of the piecewise-linear interpolant of grid values.
fn l2_norm_p1(values: &[f64], dx: f64) -> f64 {
    values
        .windows(2)
        .map(|w| dx / 3.0 * (w[0] * w[0] + w[0] * w[1] + w[1] * w[1]))
        .sum::<f64>()
        .sqrt()
}

/// Moderate-torsion surrogate: trapezoidal time integral of `‖∂ₜw^h‖_{L²(0,L)}`.
/// Uses velocity samples when every field carries them, otherwise central differences of
/// `w^h` in time (one-sided at the ends).
pub fn torsion_diagnostic(series: &[(f64, Field3D)]) -> Result<TorsionDiagnostic, RescaleError> {
    if series.len() < 2 {
        return Err(RescaleError::TooFewSamples(series.len()));
    }
    let first = &series[0].1;
    check_normalized(first.mesh())?;
    for (k, w) in series.windows(2).enumerate() {
        if !(w[1].0 > w[0].0) {
            return Err(RescaleError::Invalid(format!("sample times must increase (sample {})", k + 1)));
        }
        if w[1].1.n1() != first.n1() || w[1].1.nv() != first.nv() {
            return Err(RescaleError::Mismatch(format!("sample {} lives on a different grid", k + 1)));
        }
    }
    let sw = SectionWeights::new(first.mesh());
    let n1 = first.n1();
    let dx = first.length() / (n1 - 1) as f64;
    let times: Vec<f64> = series.iter().map(|(t, _)| *t).collect();
    let from_velocities = series.iter().all(|(_, f)| f.has_velocity());
    let rates: Vec<Vec<f64>> = if from_velocities {
        series
            .iter()
            .map(|(_, f)| {
                (0..n1)
                    .map(|i| sw.torsion(f.velocity_slice(i).expect("velocities present"), f.h()))
                    .collect()
            })
            .collect()
    } else {
        let w: Vec<Vec<f64>> = series
            .iter()
            .map(|(_, f)| (0..n1).map(|i| sw.torsion(f.slice(i), f.h())).collect())
            .collect();
        let m = series.len();
        (0..m)
            .map(|k| {
                let (a, b) = if k == 0 {
                    (0, 1)
                } else if k == m - 1 {
                    (m - 2, m - 1)
                } else {
                    (k - 1, k + 1)
                };
                let dt = times[b] - times[a];
                (0..n1).map(|i| (w[b][i] - w[a][i]) / dt).collect()
            })
            .collect()
    };
    let norms: Vec<f64> = rates.iter().map(|r| l2_norm_p1(r, dx)).collect();
    let value = times
        .windows(2)
        .zip(norms.windows(2))
        .map(|(t, n)| 0.5 * (t[1] - t[0]) * (n[0] + n[1]))
        .sum();
    Ok(TorsionDiagnostic {
        value,
        times,
        norms,
        from_velocities,
    })
}
