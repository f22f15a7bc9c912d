//! The cross-section cell problem.
//!
//! For a generalized strain `ε = (r, κ₂, κ₃, τ)` the cell problem minimizes
//!
//! ```text
//! ψ ↦ ∫_S Q( g(ε, x′) | ∂₂ψ | ∂₃ψ ) dx′,   g(ε, x′) = (r − κ₂x₂ − κ₃x₃, −τx₃, τx₂)ᵀ,
//! ```
//!
//! over `ψ ∈ H¹(S; ℝ³)` with `∫ψ = 0` and `∫ψ·(0, −x₃, x₂) = 0`. The first
//! column `g` is `r e₁ + ∂ₓ₁A (0, x′)ᵀ` for the skew infinitesimal rotation
//! `A` built from `(∂ₓ₁v₂, ∂ₓ₁v₃, w)`.
//!
//! Discretization: vector P1 elements and the four linear constraints with
//! their Lagrange multipliers. The loads are orthogonal to the kernel, so the
//! saddle system is solved by pinning four dofs, one sparse Cholesky
//! factorization shared by the four unit loads, and a projection. Integrands are at most quadratic, so the edge-midpoint rule
//! is exact.
//!
//! Sign convention for the stress moments, from `∂q/∂ε = 2 Q_eff ε`:
//! `E⁰₁₁ = (Q_eff ε)₁`, `E²₁₁ = −(Q_eff ε)₂`, `E³₁₁ = −(Q_eff ε)₃`,
//! `E²₃₁ − E³₂₁ = (Q_eff ε)₄`.

use nalgebra::{Matrix3, Matrix4, SymmetricEigen, Vector3, Vector4};
use serde::Serialize;
use thiserror::Error;

use super::mesh::{CrossSectionMesh, GeometricReport};
use crate::material::MaterialModel;
use crate::sparse::{SparseError, SparseMatrix};

#[derive(Debug, Error)]
pub enum CellError {
    #[error("cross-section mesh is not normalized (centroid at origin, principal axes, unit area)")]
    NotNormalized,
    #[error("singular cell saddle system (rank-deficient constraints or disconnected mesh): {0}")]
    Singular(#[from] SparseError),
    #[error("effective stiffness is not positive definite (smallest eigenvalue {0:e})")]
    NotPositiveDefinite(f64),
    #[error("effective stiffness is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("corrector basis has {got} nodes but the mesh has {expected}")]
    Mismatch { expected: usize, got: usize },
}

/// Names of the four unit loads, in order.
pub const LOAD_NAMES: [&str; 4] = ["stretch", "curvature2", "curvature3", "twist"];

/// Tolerance on `|∫c|`, `|∫x₂|`, `|∫x₃|`, `|∫x₂x₃|` and `|area − 1|` for a section to count as normalized.
pub const NORMALIZATION_TOL: f64 = 1e-10;

/// First column of the cell strain for generalized strain `eps` at `x = (x₂, x₃)`.
pub fn strain_column(eps: &Vector4<f64>, x: [f64; 2]) -> Vector3<f64> {
    Vector3::new(eps[0] - eps[1] * x[0] - eps[2] * x[1], -eps[3] * x[1], eps[3] * x[0])
}

/// Gradients `(∂₂φ, ∂₃φ)` of the three P1 basis functions on a triangle.
fn p1_gradients(p: &[[f64; 2]; 3], area: f64) -> [[f64; 2]; 3] {
    let mut g = [[0.0; 2]; 3];
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        g[i] = [(p[j][1] - p[k][1]) / (2.0 * area), (p[k][0] - p[j][0]) / (2.0 * area)];
    }
    g
}

/// Edge midpoints: exact for quadratics with equal weights `area/3`.
fn midpoints(p: &[[f64; 2]; 3]) -> [[f64; 2]; 3] {
    let mid = |a: [f64; 2], b: [f64; 2]| [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
    [mid(p[0], p[1]), mid(p[1], p[2]), mid(p[2], p[0])]
}

fn centroid(p: &[[f64; 2]; 3]) -> [f64; 2] {
    [(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0]
}

/// Strain `(col | ∂₂ψ | ∂₃ψ)` on one element.
fn cell_strain(col: &Vector3<f64>, d2: &Vector3<f64>, d3: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::from_columns(&[*col, *d2, *d3])
}

/// Constant in-plane gradient columns `(∂₂ψ, ∂₃ψ)` of a nodal field on element `t`.
fn element_gradient(mesh: &CrossSectionMesh, t: usize, field: &[[f64; 3]]) -> (Vector3<f64>, Vector3<f64>) {
    let p = mesh.triangle_coords(t);
    let g = p1_gradients(&p, mesh.triangle_area(t));
    let mut d2 = Vector3::zeros();
    let mut d3 = Vector3::zeros();
    for (a, &node) in mesh.triangles()[t].iter().enumerate() {
        let v = Vector3::from(field[node]);
        d2 += v * g[a][0];
        d3 += v * g[a][1];
    }
    (d2, d3)
}

#[derive(Debug, Clone, Serialize)]
pub struct CorrectorDiagnostics {
    /// `max(|∫ψ|, |∫ψ·(0,−x₃,x₂)|)` per unit load.
    pub constraint_residual: [f64; 4],
    /// `‖Kψ + F‖∞ / (‖K‖∞‖ψ‖∞ + maxₖ‖Fₖ‖∞)` per unit load: normwise backward error of the
    /// discrete weak Euler–Lagrange equations against every test field.
    pub euler_lagrange_residual: [f64; 4],
    pub dofs: usize,
}

/// Correctors of the four unit generalized strains on a normalized section.
#[derive(Debug, Clone)]
pub struct CorrectorBasis {
    mesh: CrossSectionMesh,
    material: MaterialModel,
    correctors: [Vec<[f64; 3]>; 4],
    multipliers: [[f64; 4]; 4],
    diagnostics: CorrectorDiagnostics,
}

struct Assembly {
    stiffness: Vec<(usize, usize, f64)>,
    loads: [Vec<f64>; 4],
    constraints: [Vec<f64>; 4],
}

fn assemble(mesh: &CrossSectionMesh, material: &MaterialModel) -> Assembly {
    let n = mesh.nodes().len();
    let mut stiffness = Vec::with_capacity(81 * mesh.triangles().len());
    let mut loads: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; 3 * n]);
    let mut constraints: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; 3 * n]);
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let p = mesh.triangle_coords(t);
        let area = mesh.triangle_area(t);
        let g = p1_gradients(&p, area);
        // B_{a,i}: row i holds (0, ∂₂φ_a, ∂₃φ_a)
        let mut basis = [[Matrix3::zeros(); 3]; 3];
        let mut l_basis = [[Matrix3::zeros(); 3]; 3];
        for a in 0..3 {
            for i in 0..3 {
                let mut b = Matrix3::zeros();
                b[(i, 1)] = g[a][0];
                b[(i, 2)] = g[a][1];
                l_basis[a][i] = material.apply_l(&b);
                basis[a][i] = b;
            }
        }
        for a in 0..3 {
            for i in 0..3 {
                for b in 0..3 {
                    for j in 0..3 {
                        let v = area * l_basis[a][i].dot(&basis[b][j]);
                        stiffness.push((3 * tri[a] + i, 3 * tri[b] + j, v));
                    }
                }
            }
        }
        let c = centroid(&p);
        for (m, load) in loads.iter_mut().enumerate() {
            let col = strain_column(&Vector4::ith(m, 1.0), c);
            let l0 = material.apply_l(&cell_strain(&col, &Vector3::zeros(), &Vector3::zeros()));
            for a in 0..3 {
                for i in 0..3 {
                    load[3 * tri[a] + i] += area * l0.dot(&basis[a][i]);
                }
            }
        }
        let (sx, sy) = (p[0][0] + p[1][0] + p[2][0], p[0][1] + p[1][1] + p[2][1]);
        for a in 0..3 {
            let node = tri[a];
            for (i, row) in constraints.iter_mut().take(3).enumerate() {
                row[3 * node + i] += area / 3.0;
            }
            // ∫ x φ_a = A/12 (x_a + Σx)
            let x2 = area / 12.0 * (p[a][0] + sx);
            let x3 = area / 12.0 * (p[a][1] + sy);
            constraints[3][3 * node + 1] -= x3;
            constraints[3][3 * node + 2] += x2;
        }
    }
    Assembly {
        stiffness,
        loads,
        constraints,
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn amax(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Three displacement components of the node nearest the centroid, and the `x₂` component of
/// the node farthest from it in `x₃`; this removes the translations and the in-plane rotation.
fn pinned_dofs(mesh: &CrossSectionMesh) -> [usize; 4] {
    let nodes = mesh.nodes();
    let r2 = |x: &[f64; 2]| x[0] * x[0] + x[1] * x[1];
    let p0 = (0..nodes.len())
        .min_by(|&a, &b| r2(&nodes[a]).total_cmp(&r2(&nodes[b])))
        .expect("nonempty mesh");
    let x3 = nodes[p0][1];
    let p1 = (0..nodes.len())
        .max_by(|&a, &b| (nodes[a][1] - x3).abs().total_cmp(&(nodes[b][1] - x3).abs()))
        .expect("nonempty mesh");
    let mut out = [3 * p0, 3 * p0 + 1, 3 * p0 + 2, 3 * p1 + 1];
    out.sort_unstable();
    out
}

/// Nodal fields `e₁, e₂, e₃, (0, −x₃, x₂)`.
fn kernel_fields(mesh: &CrossSectionMesh) -> [Vec<f64>; 4] {
    let n = mesh.nodes().len();
    let mut k: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; 3 * n]);
    for (i, x) in mesh.nodes().iter().enumerate() {
        for c in 0..3 {
            k[c][3 * i + c] = 1.0;
        }
        k[3][3 * i + 1] = -x[1];
        k[3][3 * i + 2] = x[0];
    }
    k
}

/// Solves the cell problem for the four unit generalized strains.
pub fn solve_correctors(mesh: &CrossSectionMesh, material: &MaterialModel) -> Result<CorrectorBasis, CellError> {
    if !mesh.is_normalized(NORMALIZATION_TOL) {
        return Err(CellError::NotNormalized);
    }
    let n = mesh.nodes().len();
    let ndof = 3 * n;
    let asm = assemble(mesh, material);

    // The loads annihilate the 4-dimensional kernel (translations and the in-plane rotation),
    // so the saddle problem is equivalent to a pinned SPD solve followed by projection onto
    // the constraints, with zero multipliers.
    let pinned = pinned_dofs(mesh);
    let mut reduced = vec![usize::MAX; ndof];
    let mut next = 0;
    for (dof, slot) in reduced.iter_mut().enumerate() {
        if !pinned.contains(&dof) {
            *slot = next;
            next += 1;
        }
    }
    let entries: Vec<(usize, usize, f64)> = asm
        .stiffness
        .iter()
        .filter(|&&(r, c, _)| reduced[r] != usize::MAX && reduced[c] != usize::MAX)
        .map(|&(r, c, v)| (reduced[r], reduced[c], v))
        .collect();
    let system = SparseMatrix::from_triplets(next, entries);
    let rhs: Vec<Vec<f64>> = asm
        .loads
        .iter()
        .map(|f| {
            (0..ndof)
                .filter(|&d| reduced[d] != usize::MAX)
                .map(|d| -f[d])
                .collect()
        })
        .collect();
    let sol = system.solve_spd(&rhs, 2)?;

    let kernel = kernel_fields(mesh);
    let gram = Matrix4::from_fn(|k, j| dot(&asm.constraints[k], &kernel[j]));
    let gram_lu = gram.lu();
    let cct = Matrix4::from_fn(|k, j| dot(&asm.constraints[k], &asm.constraints[j]));
    let cct_lu = cct.lu();

    let stiffness = SparseMatrix::from_triplets(ndof, asm.stiffness);
    let knorm = stiffness.norm_inf();
    // A load can vanish by symmetry (torsion of a disk), so all four share the largest load norm.
    let load_scale = asm.loads.iter().map(|f| amax(f)).fold(0.0, f64::max);
    let mut correctors: [Vec<[f64; 3]>; 4] = Default::default();
    let mut multipliers = [[0.0; 4]; 4];
    let mut constraint_residual = [0.0; 4];
    let mut euler_lagrange_residual = [0.0; 4];
    for m in 0..4 {
        let mut psi = vec![0.0; ndof];
        for (d, &r) in reduced.iter().enumerate() {
            if r != usize::MAX {
                psi[d] = sol[m][r];
            }
        }
        let c = Vector4::from_fn(|k, _| dot(&asm.constraints[k], &psi));
        let coef = gram_lu.solve(&c).ok_or(CellError::Singular(SparseError::Singular))?;
        for (j, field) in kernel.iter().enumerate() {
            for (p, kv) in psi.iter_mut().zip(field) {
                *p -= coef[j] * kv;
            }
        }
        correctors[m] = psi.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        constraint_residual[m] = asm.constraints.iter().map(|c| dot(c, &psi).abs()).fold(0.0, f64::max);
        let kpsi = stiffness.matvec(&psi);
        let resid: Vec<f64> = kpsi.iter().zip(&asm.loads[m]).map(|(a, b)| a + b).collect();
        let scale = knorm * amax(&psi) + load_scale;
        euler_lagrange_residual[m] = amax(&resid) / scale.max(f64::MIN_POSITIVE);
        // Least-squares multipliers from Cᵀλ = −(Kψ + F).
        let ct_r = Vector4::from_fn(|k, _| -dot(&asm.constraints[k], &resid));
        let lambda = cct_lu.solve(&ct_r).ok_or(CellError::Singular(SparseError::Singular))?;
        multipliers[m] = [lambda[0], lambda[1], lambda[2], lambda[3]];
    }
    Ok(CorrectorBasis {
        mesh: mesh.clone(),
        material: *material,
        correctors,
        multipliers,
        diagnostics: CorrectorDiagnostics {
            constraint_residual,
            euler_lagrange_residual,
            dofs: ndof + 4,
        },
    })
}

impl CorrectorBasis {
    pub fn mesh(&self) -> &CrossSectionMesh {
        &self.mesh
    }

    pub fn material(&self) -> &MaterialModel {
        &self.material
    }

    /// Nodal corrector of unit load `m` (0 stretch, 1 and 2 curvatures, 3 twist).
    pub fn corrector(&self, m: usize) -> &[[f64; 3]] {
        &self.correctors[m]
    }

    /// Lagrange multipliers of unit load `m` (three mean-value constraints, one rotation).
    pub fn multipliers(&self, m: usize) -> [f64; 4] {
        self.multipliers[m]
    }

    pub fn diagnostics(&self) -> &CorrectorDiagnostics {
        &self.diagnostics
    }

    /// `α = Σ ε_m ψ_m` at the nodes.
    pub fn combine(&self, eps: &Vector4<f64>) -> Vec<[f64; 3]> {
        (0..self.mesh.nodes().len())
            .map(|i| {
                let mut v = [0.0; 3];
                for m in 0..4 {
                    for (c, vc) in v.iter_mut().enumerate() {
                        *vc += eps[m] * self.correctors[m][i][c];
                    }
                }
                v
            })
            .collect()
    }

    /// Direct quadrature of `∫_S Q(g(ε) | ∂₂ψ | ∂₃ψ)` for an arbitrary nodal field `psi`.
    pub fn cell_energy_of(&self, eps: &Vector4<f64>, psi: &[[f64; 3]]) -> f64 {
        let mut total = 0.0;
        for t in 0..self.mesh.triangles().len() {
            let p = self.mesh.triangle_coords(t);
            let area = self.mesh.triangle_area(t);
            let (d2, d3) = element_gradient(&self.mesh, t, psi);
            for q in midpoints(&p) {
                let g = cell_strain(&strain_column(eps, q), &d2, &d3);
                total += area / 3.0 * self.material.quadratic_form(&g);
            }
        }
        total
    }

    /// Minimal cell energy `q(ε)` evaluated at the combined corrector.
    pub fn cell_energy(&self, eps: &Vector4<f64>) -> f64 {
        self.cell_energy_of(eps, &self.combine(eps))
    }

    fn stiffness_matrix(&self) -> Matrix4<f64> {
        let mut q = Matrix4::zeros();
        for t in 0..self.mesh.triangles().len() {
            let p = self.mesh.triangle_coords(t);
            let area = self.mesh.triangle_area(t);
            let grads: [(Vector3<f64>, Vector3<f64>); 4] =
                std::array::from_fn(|m| element_gradient(&self.mesh, t, &self.correctors[m]));
            for x in midpoints(&p) {
                let strains: [Matrix3<f64>; 4] = std::array::from_fn(|m| {
                    cell_strain(&strain_column(&Vector4::ith(m, 1.0), x), &grads[m].0, &grads[m].1)
                });
                let stresses = strains.map(|g| self.material.apply_l(&g));
                for m in 0..4 {
                    for k in 0..4 {
                        q[(m, k)] += area / 3.0 * stresses[m].dot(&strains[k]);
                    }
                }
            }
        }
        q
    }

    /// Limiting stress `E = ℒ(θ | ∂₂α | ∂₃α)` per element (centroid values) and its moments.
    pub fn stress_and_moments(&self, eps: &Vector4<f64>) -> StressMoments {
        let alpha = self.combine(eps);
        let mut per_element = Vec::with_capacity(self.mesh.triangles().len());
        let (mut e0, mut e2, mut e3) = (Matrix3::zeros(), Matrix3::zeros(), Matrix3::zeros());
        for t in 0..self.mesh.triangles().len() {
            let p = self.mesh.triangle_coords(t);
            let area = self.mesh.triangle_area(t);
            let (d2, d3) = element_gradient(&self.mesh, t, &alpha);
            let stress_at = |x: [f64; 2]| self.material.apply_l(&cell_strain(&strain_column(eps, x), &d2, &d3));
            let ec = stress_at(centroid(&p));
            e0 += ec * area;
            for x in midpoints(&p) {
                let e = stress_at(x);
                e2 += e * (area / 3.0 * x[0]);
                e3 += e * (area / 3.0 * x[1]);
            }
            per_element.push(ec);
        }
        StressMoments {
            per_element,
            e0,
            e2,
            e3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct StressMoments {
    /// `E` at each element centroid (equal to its element mean: `E` is affine per element).
    pub per_element: Vec<Matrix3<f64>>,
    pub e0: Matrix3<f64>,
    pub e2: Matrix3<f64>,
    pub e3: Matrix3<f64>,
}

impl StressMoments {
    /// Generalized forces `(E⁰₁₁, −E²₁₁, −E³₁₁, E²₃₁ − E³₂₁)`, equal to `Q_eff ε`.
    pub fn generalized_forces(&self) -> Vector4<f64> {
        Vector4::new(
            self.e0[(0, 0)],
            -self.e2[(0, 0)],
            -self.e3[(0, 0)],
            self.e2[(2, 0)] - self.e3[(1, 0)],
        )
    }
}

/// Symmetric positive-definite 4×4 stiffness over `ε = (r, κ₂, κ₃, τ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EffectiveStiffness {
    #[serde(serialize_with = "serialize_matrix4")]
    matrix: Matrix4<f64>,
    geometry: Option<GeometricReport>,
}

fn serialize_matrix4<S: serde::Serializer>(m: &Matrix4<f64>, s: S) -> Result<S::Ok, S::Error> {
    let rows: Vec<[f64; 4]> = (0..4).map(|i| [m[(i, 0)], m[(i, 1)], m[(i, 2)], m[(i, 3)]]).collect();
    serde::Serialize::serialize(&rows, s)
}

impl EffectiveStiffness {
    /// Wraps a given matrix after checking symmetry and positive definiteness.
    pub fn from_matrix(matrix: Matrix4<f64>) -> Result<Self, CellError> {
        let asym = (matrix - matrix.transpose()).amax();
        if asym > 1e-12 * matrix.amax() {
            return Err(CellError::NotSymmetric(asym));
        }
        let min = SymmetricEigen::new(matrix).eigenvalues.min();
        if !(min > 0.0) {
            return Err(CellError::NotPositiveDefinite(min));
        }
        Ok(Self { matrix, geometry: None })
    }

    /// `diag(E_Y, E_Y I₂, E_Y I₃, μ_shear J)`, the decoupled form used by isotropic doubly symmetric sections.
    pub fn diagonal(stretch: f64, bend2: f64, bend3: f64, twist: f64) -> Result<Self, CellError> {
        Self::from_matrix(Matrix4::from_diagonal(&Vector4::new(stretch, bend2, bend3, twist)))
    }

    pub fn from_basis(basis: &CorrectorBasis) -> Result<Self, CellError> {
        let q = basis.stiffness_matrix();
        let q = (q + q.transpose()) * 0.5;
        let mut s = Self::from_matrix(q)?;
        s.geometry = Some(basis.mesh.moments());
        Ok(s)
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.matrix
    }

    pub fn geometry(&self) -> Option<&GeometricReport> {
        self.geometry.as_ref()
    }

    /// `q(ε) = εᵀ Q_eff ε`.
    pub fn energy(&self, eps: &Vector4<f64>) -> f64 {
        eps.dot(&(self.matrix * eps))
    }

    /// Multiplies every entry by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self, CellError> {
        let mut s = Self::from_matrix(self.matrix * factor)?;
        s.geometry = self.geometry;
        Ok(s)
    }

    /// Largest off-diagonal magnitude relative to the smallest diagonal entry.
    pub fn coupling_ratio(&self) -> f64 {
        let dmin = (0..4).map(|i| self.matrix[(i, i)]).fold(f64::INFINITY, f64::min);
        let mut off = 0.0f64;
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    off = off.max(self.matrix[(i, j)].abs());
                }
            }
        }
        off / dmin
    }
}

/// Corrector solve followed by assembly of `Q_eff`.
pub fn effective_stiffness(
    mesh: &CrossSectionMesh,
    material: &MaterialModel,
) -> Result<(EffectiveStiffness, CorrectorBasis), CellError> {
    let basis = solve_correctors(mesh, material)?;
    Ok((EffectiveStiffness::from_basis(&basis)?, basis))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cross_section::mesh::BuiltinShape;

    fn normalized(shape: BuiltinShape) -> CrossSectionMesh {
        CrossSectionMesh::generate(shape).unwrap().normalize().unwrap().0
    }

    #[test]
    fn zero_load_gives_zero_corrector() {
        let mesh = normalized(BuiltinShape::Square { resolution: 4 });
        let basis = solve_correctors(&mesh, &MaterialModel::isotropic(1.0, 1.0).unwrap()).unwrap();
        let alpha = basis.combine(&Vector4::zeros());
        assert!(alpha.iter().flatten().all(|v| *v == 0.0));
        let sm = basis.stress_and_moments(&Vector4::zeros());
        assert_eq!(sm.e0, Matrix3::zeros());
        assert!(sm.per_element.iter().all(|e| *e == Matrix3::zeros()));
    }

    #[test]
    fn stretch_corrector_is_poisson_contraction() {
        let mesh = normalized(BuiltinShape::Rectangle { resolution: 3, aspect: 1.5 });
        let basis = solve_correctors(&mesh, &MaterialModel::isotropic(1.0, 1.0).unwrap()).unwrap();
        for (x, psi) in mesh.nodes().iter().zip(basis.corrector(0)) {
            assert!(psi[0].abs() < 1e-10);
            assert!((psi[1] + 0.25 * x[0]).abs() < 1e-10);
            assert!((psi[2] + 0.25 * x[1]).abs() < 1e-10);
        }
    }

    #[test]
    fn unnormalized_mesh_is_rejected() {
        let mesh = CrossSectionMesh::generate(BuiltinShape::Rectangle { resolution: 2, aspect: 2.0 }).unwrap();
        assert!(matches!(
            solve_correctors(&mesh, &MaterialModel::isotropic(1.0, 1.0).unwrap()),
            Err(CellError::NotNormalized)
        ));
    }

    #[test]
    fn moments_reproduce_stiffness_rows() {
        let mesh = normalized(BuiltinShape::Rectangle { resolution: 4, aspect: 0.7 });
        let material = MaterialModel::isotropic(0.4, 1.3).unwrap();
        let (q, basis) = effective_stiffness(&mesh, &material).unwrap();
        let eps = Vector4::new(0.3, -1.1, 0.7, 2.0);
        let forces = basis.stress_and_moments(&eps).generalized_forces();
        let expect = q.matrix() * eps;
        assert!((forces - expect).amax() < 1e-12 * expect.amax());
    }
}
