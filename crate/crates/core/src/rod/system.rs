use nalgebra::{Cholesky, DMatrix, DVector, Dyn, Matrix4, SymmetricEigen, Vector4};

use super::spaces::{HermiteShape, P2Shape, RodMesh1D, GAUSS_POINTS, GAUSS_WEIGHTS};
use super::RodError;
use crate::cross_section::EffectiveStiffness;
use crate::profile::Profile;

/// Local unknowns per element: 4 Hermite for each of v₂, v₃, then 3 P2 for each of u, w.
const LOCAL: usize = 14;

/// Coefficient vectors of the rod fields. `u` and `w` are slaved to `v` through the static solves.
#[derive(Debug, Clone, PartialEq)]
pub struct RodState {
    pub u: Vec<f64>,
    pub v2: Vec<f64>,
    pub v3: Vec<f64>,
    pub w: Vec<f64>,
    pub vel2: Vec<f64>,
    pub vel3: Vec<f64>,
}

impl RodState {
    pub fn zeros(mesh: &RodMesh1D) -> Self {
        let (m, p) = (mesh.hermite_dim(), mesh.p2_dim());
        Self {
            u: vec![0.0; p],
            v2: vec![0.0; m],
            v3: vec![0.0; m],
            w: vec![0.0; p],
            vel2: vec![0.0; m],
            vel3: vec![0.0; m],
        }
    }

    pub fn check(&self, mesh: &RodMesh1D) -> Result<(), RodError> {
        let (m, p) = (mesh.hermite_dim(), mesh.p2_dim());
        for (what, len, expected) in [
            ("u", self.u.len(), p),
            ("v2", self.v2.len(), m),
            ("v3", self.v3.len(), m),
            ("w", self.w.len(), p),
            ("vel2", self.vel2.len(), m),
            ("vel3", self.vel3.len(), m),
        ] {
            check_len(what, len, expected)?;
        }
        Ok(())
    }

    /// Concatenated `[v₂ | v₃]`.
    pub fn bending(&self) -> Vec<f64> {
        [self.v2.as_slice(), self.v3.as_slice()].concat()
    }

    pub fn velocity(&self) -> Vec<f64> {
        [self.vel2.as_slice(), self.vel3.as_slice()].concat()
    }
}

/// Output of the static axial and torsion solves.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticSolution {
    pub u: Vec<f64>,
    pub w: Vec<f64>,
    /// Axial force `(Q ε)₁` at the mesh nodes.
    pub axial_force: Vec<f64>,
    /// Torque `(Q ε)₄` at the mesh nodes.
    pub torque: Vec<f64>,
}

impl StaticSolution {
    pub fn mean_axial_force(&self) -> f64 {
        self.axial_force.iter().sum::<f64>() / self.axial_force.len() as f64
    }
}

/// Generalized eigenpairs, ascending. Modes are `[v₂ | v₃]` vectors, mass-normalized.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub modes: Vec<Vec<f64>>,
}

struct ElementEval {
    dofs: [Option<usize>; LOCAL],
    energy: f64,
    grad: [f64; LOCAL],
    hess: [[f64; LOCAL]; LOCAL],
}

/// Discrete rod energy `½∫ ε·Q ε dx₁` with
/// `ε = (u′ + Π(½|v′|²), v₂″, v₃″, w′)`, where `Π` is the element-wise L² projection onto
/// linears. Every strain component is then piecewise linear, so the axial force of a decoupled
/// section is exactly constant and the assembled residual is the exact energy gradient.
#[derive(Debug, Clone)]
pub struct RodSystem {
    mesh: RodMesh1D,
    q: Matrix4<f64>,
    kirchhoff: bool,
    hermite: [HermiteShape; 4],
    p2: [P2Shape; 4],
    mass: DMatrix<f64>,
    mass_chol: Cholesky<f64, Dyn>,
    static_chol: Cholesky<f64, Dyn>,
}

fn check_len(what: &'static str, got: usize, expected: usize) -> Result<(), RodError> {
    if got == expected {
        Ok(())
    } else {
        Err(RodError::DimensionMismatch { what, expected, got })
    }
}

/// Element-wise L² projection onto span{1, ξ−½}, evaluated back at the Gauss points.
fn project_linear(vals: &[f64; 4]) -> [f64; 4] {
    let (a0, a1) = projection_coeffs(vals);
    GAUSS_POINTS.map(|xi| a0 + a1 * (xi - 0.5))
}

fn projection_coeffs(vals: &[f64; 4]) -> (f64, f64) {
    let mut a0 = 0.0;
    let mut a1 = 0.0;
    for q in 0..4 {
        a0 += GAUSS_WEIGHTS[q] * vals[q];
        a1 += 12.0 * GAUSS_WEIGHTS[q] * (GAUSS_POINTS[q] - 0.5) * vals[q];
    }
    (a0, a1)
}

impl RodSystem {
    /// `kirchhoff = false` drops the membrane term `Π(½|v′|²)` (linear regime).
    pub fn new(mesh: RodMesh1D, stiffness: &EffectiveStiffness, kirchhoff: bool) -> Result<Self, RodError> {
        let h = mesh.h();
        let hermite = GAUSS_POINTS.map(|xi| HermiteShape::at(xi, h));
        let p2 = GAUSS_POINTS.map(|xi| P2Shape::at(xi, h));
        let m = mesh.hermite_dim();
        let mut mass = DMatrix::zeros(m, m);
        for e in 0..mesh.n_elem() {
            let dofs = mesh.hermite_dofs(e);
            for q in 0..4 {
                let wq = GAUSS_WEIGHTS[q] * h;
                for (a, da) in dofs.iter().enumerate() {
                    for (b, db) in dofs.iter().enumerate() {
                        if let (Some(i), Some(j)) = (da, db) {
                            mass[(*i, *j)] += wq * hermite[q].n[a] * hermite[q].n[b];
                        }
                    }
                }
            }
        }
        let mass_chol = Cholesky::new(mass.clone()).ok_or(RodError::Singular("mass"))?;
        let mut sys = Self {
            mesh,
            q: *stiffness.matrix(),
            kirchhoff,
            hermite,
            p2,
            mass,
            mass_chol,
            static_chol: Cholesky::new(DMatrix::identity(1, 1)).expect("identity"),
        };
        let n = sys.dim();
        let full = sys.hessian_dense(&vec![0.0; n]);
        let s0 = 2 * m;
        let kss = full.view((s0, s0), (n - s0, n - s0)).into_owned();
        sys.static_chol = Cholesky::new(kss).ok_or(RodError::Singular("static"))?;
        Ok(sys)
    }

    pub fn mesh(&self) -> &RodMesh1D {
        &self.mesh
    }

    pub fn stiffness(&self) -> &Matrix4<f64> {
        &self.q
    }

    pub fn is_kirchhoff(&self) -> bool {
        self.kirchhoff
    }

    /// Hermite mass matrix (one component).
    pub fn mass(&self) -> &DMatrix<f64> {
        &self.mass
    }

    pub fn dim_bending(&self) -> usize {
        2 * self.mesh.hermite_dim()
    }

    pub fn dim_static(&self) -> usize {
        2 * self.mesh.p2_dim()
    }

    /// Size of the packed vector `[v₂ | v₃ | u | w]`.
    pub fn dim(&self) -> usize {
        self.dim_bending() + self.dim_static()
    }

    pub(crate) fn pack(&self, v: &[f64], s: &[f64]) -> Vec<f64> {
        [v, s].concat()
    }

    fn local_dofs(&self, e: usize) -> [Option<usize>; LOCAL] {
        let m = self.mesh.hermite_dim();
        let p = self.mesh.p2_dim();
        let hd = self.mesh.hermite_dofs(e);
        let pd = self.mesh.p2_dofs(e);
        let mut out = [None; LOCAL];
        for a in 0..4 {
            out[a] = hd[a];
            out[4 + a] = hd[a].map(|d| m + d);
        }
        for b in 0..3 {
            out[8 + b] = pd[b].map(|d| 2 * m + d);
            out[11 + b] = pd[b].map(|d| 2 * m + p + d);
        }
        out
    }

    fn slopes(&self, c: &[f64; LOCAL]) -> [[f64; 4]; 2] {
        let mut s = [[0.0; 4]; 2];
        for q in 0..4 {
            for a in 0..4 {
                s[0][q] += c[a] * self.hermite[q].dn[a];
                s[1][q] += c[4 + a] * self.hermite[q].dn[a];
            }
        }
        s
    }

    fn eval_element(&self, e: usize, z: &[f64], want_hess: bool) -> ElementEval {
        let dofs = self.local_dofs(e);
        let c: [f64; LOCAL] = dofs.map(|d| d.map_or(0.0, |g| z[g]));
        let h = self.mesh.h();
        let slope = self.slopes(&c);
        let mut var = [[Vector4::<f64>::zeros(); 4]; LOCAL];
        let mut eps = [Vector4::<f64>::zeros(); 4];
        for q in 0..4 {
            let hs = &self.hermite[q];
            let ps = &self.p2[q];
            for a in 0..4 {
                eps[q][1] += c[a] * hs.ddn[a];
                eps[q][2] += c[4 + a] * hs.ddn[a];
                var[a][q][1] = hs.ddn[a];
                var[4 + a][q][2] = hs.ddn[a];
            }
            for b in 0..3 {
                eps[q][0] += c[8 + b] * ps.dn[b];
                eps[q][3] += c[11 + b] * ps.dn[b];
                var[8 + b][q][0] = ps.dn[b];
                var[11 + b][q][3] = ps.dn[b];
            }
        }
        if self.kirchhoff {
            let g = [0, 1, 2, 3].map(|q| 0.5 * (slope[0][q] * slope[0][q] + slope[1][q] * slope[1][q]));
            let pg = project_linear(&g);
            for q in 0..4 {
                eps[q][0] += pg[q];
            }
            for comp in 0..2 {
                for a in 0..4 {
                    let prod = [0, 1, 2, 3].map(|q| slope[comp][q] * self.hermite[q].dn[a]);
                    let pp = project_linear(&prod);
                    for q in 0..4 {
                        var[4 * comp + a][q][0] = pp[q];
                    }
                }
            }
        }
        let stress = eps.map(|e| self.q * e);
        let mut energy = 0.0;
        let mut grad = [0.0; LOCAL];
        for q in 0..4 {
            let wq = GAUSS_WEIGHTS[q] * h;
            energy += 0.5 * wq * eps[q].dot(&stress[q]);
            for i in 0..LOCAL {
                grad[i] += wq * var[i][q].dot(&stress[q]);
            }
        }
        let mut hess = [[0.0; LOCAL]; LOCAL];
        if want_hess {
            for q in 0..4 {
                let wq = GAUSS_WEIGHTS[q] * h;
                let qvar: Vec<Vector4<f64>> = (0..LOCAL).map(|j| self.q * var[j][q]).collect();
                for i in 0..LOCAL {
                    for j in 0..LOCAL {
                        hess[i][j] += wq * var[i][q].dot(&qvar[j]);
                    }
                }
                if self.kirchhoff {
                    let hs = &self.hermite[q];
                    for comp in 0..2 {
                        for a in 0..4 {
                            for b in 0..4 {
                                hess[4 * comp + a][4 * comp + b] += wq * stress[q][0] * hs.dn[a] * hs.dn[b];
                            }
                        }
                    }
                }
            }
        }
        ElementEval {
            dofs,
            energy,
            grad,
            hess,
        }
    }

    /// Elastic energy and its gradient with respect to the packed vector.
    pub(crate) fn energy_gradient(&self, z: &[f64]) -> (f64, Vec<f64>) {
        let mut g = vec![0.0; self.dim()];
        let mut energy = 0.0;
        for e in 0..self.mesh.n_elem() {
            let ev = self.eval_element(e, z, false);
            energy += ev.energy;
            for (i, d) in ev.dofs.iter().enumerate() {
                if let Some(gi) = d {
                    g[*gi] += ev.grad[i];
                }
            }
        }
        (energy, g)
    }

    pub(crate) fn hessian_triplets(&self, z: &[f64], out: &mut Vec<(usize, usize, f64)>) {
        for e in 0..self.mesh.n_elem() {
            let ev = self.eval_element(e, z, true);
            for (i, di) in ev.dofs.iter().enumerate() {
                let Some(gi) = di else { continue };
                for (j, dj) in ev.dofs.iter().enumerate() {
                    if let Some(gj) = dj {
                        if ev.hess[i][j] != 0.0 {
                            out.push((*gi, *gj, ev.hess[i][j]));
                        }
                    }
                }
            }
        }
    }

    pub(crate) fn hessian_dense(&self, z: &[f64]) -> DMatrix<f64> {
        let n = self.dim();
        let mut trips = Vec::new();
        self.hessian_triplets(z, &mut trips);
        let mut h = DMatrix::zeros(n, n);
        for (i, j, v) in trips {
            h[(i, j)] += v;
        }
        h
    }

    /// `∫ f N_a dx₁` over the Hermite basis.
    pub fn load_value(&self, f: &Profile) -> Vec<f64> {
        self.hermite_load(f, |s| s.n)
    }

    /// `∫ f N_a′ dx₁` over the Hermite basis.
    pub fn load_slope(&self, f: &Profile) -> Vec<f64> {
        self.hermite_load(f, |s| s.dn)
    }

    fn hermite_load(&self, f: &Profile, pick: impl Fn(&HermiteShape) -> [f64; 4]) -> Vec<f64> {
        let h = self.mesh.h();
        let mut out = vec![0.0; self.mesh.hermite_dim()];
        if f.is_zero() {
            return out;
        }
        for e in 0..self.mesh.n_elem() {
            let x0 = self.mesh.node(e);
            for q in 0..4 {
                let fq = GAUSS_WEIGHTS[q] * h * f.value(x0 + GAUSS_POINTS[q] * h);
                let shape = pick(&self.hermite[q]);
                for (a, d) in self.mesh.hermite_dofs(e).iter().enumerate() {
                    if let Some(g) = d {
                        out[*g] += fq * shape[a];
                    }
                }
            }
        }
        out
    }

    /// `∫ f L_a dx₁` over the P2 basis.
    pub fn load_p2(&self, f: &Profile) -> Vec<f64> {
        let h = self.mesh.h();
        let mut out = vec![0.0; self.mesh.p2_dim()];
        if f.is_zero() {
            return out;
        }
        for e in 0..self.mesh.n_elem() {
            let x0 = self.mesh.node(e);
            for q in 0..4 {
                let fq = GAUSS_WEIGHTS[q] * h * f.value(x0 + GAUSS_POINTS[q] * h);
                for (b, d) in self.mesh.p2_dofs(e).iter().enumerate() {
                    if let Some(g) = d {
                        out[*g] += fq * self.p2[q].n[b];
                    }
                }
            }
        }
        out
    }

    /// L² projection onto the clamped Hermite space.
    pub fn project_l2(&self, f: &Profile) -> Vec<f64> {
        let b = DVector::from_vec(self.load_value(f));
        self.mass_chol.solve(&b).as_slice().to_vec()
    }

    /// Solves the first and fourth limit equations for `(u, w)` given `v`.
    /// `sigma` is the assembled torsion source `∫σ L_a` (P2 length), `None` for zero.
    pub fn solve_static(&self, v2: &[f64], v3: &[f64], sigma: Option<&[f64]>) -> Result<StaticSolution, RodError> {
        let m = self.mesh.hermite_dim();
        let p = self.mesh.p2_dim();
        check_len("v2", v2.len(), m)?;
        check_len("v3", v3.len(), m)?;
        if let Some(s) = sigma {
            check_len("sigma", s.len(), p)?;
        }
        let s = self.static_unknowns(&[v2, v3].concat(), sigma);
        let (u, w) = s.split_at(p);
        Ok(self.static_solution(v2, v3, u.to_vec(), w.to_vec()))
    }

    /// Packed `[u | w]` minimizing the energy at fixed `v = [v₂ | v₃]`.
    pub(crate) fn static_unknowns(&self, v: &[f64], sigma: Option<&[f64]>) -> Vec<f64> {
        let p = self.mesh.p2_dim();
        let z = self.pack(v, &vec![0.0; 2 * p]);
        let (_, g) = self.energy_gradient(&z);
        let mut rhs = DVector::from_iterator(2 * p, g[v.len()..].iter().map(|x| -x));
        if let Some(s) = sigma {
            for (i, si) in s.iter().enumerate() {
                rhs[p + i] -= si;
            }
        }
        self.static_chol.solve(&rhs).as_slice().to_vec()
    }

    pub(crate) fn static_solution(&self, v2: &[f64], v3: &[f64], u: Vec<f64>, w: Vec<f64>) -> StaticSolution {
        let z = [v2, v3, &u, &w].concat();
        let forces = self.nodal_forces(&z);
        StaticSolution {
            axial_force: forces.iter().map(|f| f[0]).collect(),
            torque: forces.iter().map(|f| f[3]).collect(),
            u,
            w,
        }
    }

    /// Strain `ε` on element `e` at local coordinate `xi`.
    fn strain_at(&self, e: usize, z: &[f64], xi: f64) -> Vector4<f64> {
        let dofs = self.local_dofs(e);
        let c: [f64; LOCAL] = dofs.map(|d| d.map_or(0.0, |g| z[g]));
        let hs = HermiteShape::at(xi, self.mesh.h());
        let ps = P2Shape::at(xi, self.mesh.h());
        let mut eps = Vector4::zeros();
        for a in 0..4 {
            eps[1] += c[a] * hs.ddn[a];
            eps[2] += c[4 + a] * hs.ddn[a];
        }
        for b in 0..3 {
            eps[0] += c[8 + b] * ps.dn[b];
            eps[3] += c[11 + b] * ps.dn[b];
        }
        if self.kirchhoff {
            let s = self.slopes(&c);
            let g = [0, 1, 2, 3].map(|q| 0.5 * (s[0][q] * s[0][q] + s[1][q] * s[1][q]));
            let (a0, a1) = projection_coeffs(&g);
            eps[0] += a0 + a1 * (xi - 0.5);
        }
        eps
    }

    /// `Q ε` at the nodes; interior nodes average the two adjacent element limits.
    pub(crate) fn nodal_forces(&self, z: &[f64]) -> Vec<Vector4<f64>> {
        let n = self.mesh.n_elem();
        (0..=n)
            .map(|i| {
                let left = (i > 0).then(|| self.q * self.strain_at(i - 1, z, 1.0));
                let right = (i < n).then(|| self.q * self.strain_at(i, z, 0.0));
                match (left, right) {
                    (Some(l), Some(r)) => 0.5 * (l + r),
                    (Some(l), None) => l,
                    (None, Some(r)) => r,
                    (None, None) => unreachable!(),
                }
            })
            .collect()
    }

    /// `−∂J/∂v + load` for `v = [v₂ | v₃]`, where `load = (f, φ) − (ρ, φ′)` has length `2m`.
    pub fn bending_residual(&self, state: &RodState, load: Option<&[f64]>) -> Result<Vec<f64>, RodError> {
        state.check(&self.mesh)?;
        let nb = self.dim_bending();
        if let Some(l) = load {
            check_len("load", l.len(), nb)?;
        }
        let z = [&state.v2[..], &state.v3, &state.u, &state.w].concat();
        let (_, g) = self.energy_gradient(&z);
        Ok((0..nb).map(|i| -g[i] + load.map_or(0.0, |l| l[i])).collect())
    }

    /// `½∫ ε·Q ε dx₁` for the given fields.
    pub fn elastic_energy(&self, v2: &[f64], v3: &[f64], u: &[f64], w: &[f64]) -> f64 {
        let z = [v2, v3, u, w].concat();
        (0..self.mesh.n_elem()).map(|e| self.eval_element(e, &z, false).energy).sum()
    }

    /// `½ (vel₂ᵀ M vel₂ + vel₃ᵀ M vel₃)`.
    pub fn kinetic_energy(&self, vel2: &[f64], vel3: &[f64]) -> f64 {
        0.5 * (self.mass_norm2(vel2) + self.mass_norm2(vel3))
    }

    fn mass_norm2(&self, x: &[f64]) -> f64 {
        let v = DVector::from_column_slice(x);
        v.dot(&(&self.mass * &v))
    }

    /// Applies the block-diagonal bending mass to `[a | b]`.
    pub(crate) fn mass_apply(&self, x: &[f64]) -> Vec<f64> {
        let m = self.mesh.hermite_dim();
        let mut out = Vec::with_capacity(2 * m);
        for half in x.chunks(m) {
            out.extend((&self.mass * DVector::from_column_slice(half)).iter());
        }
        out
    }

    /// Hessian of the energy with `u, w` eliminated, at the given packed state.
    pub fn reduced_hessian(&self, v: &[f64], s: &[f64]) -> Result<DMatrix<f64>, RodError> {
        check_len("v", v.len(), self.dim_bending())?;
        check_len("static unknowns", s.len(), self.dim_static())?;
        let nb = self.dim_bending();
        let ns = self.dim_static();
        let h = self.hessian_dense(&self.pack(v, s));
        let hvv = h.view((0, 0), (nb, nb));
        let hvs = h.view((0, nb), (nb, ns));
        let hsv = h.view((nb, 0), (ns, nb)).into_owned();
        let x = self.static_chol.solve(&hsv);
        Ok(hvv - hvs * x)
    }

    /// Lowest `count` eigenpairs of (reduced stiffness at rest, mass).
    /// `component = Some(2 | 3)` restricts to one transverse direction.
    pub fn linearized_spectrum(&self, count: usize, component: Option<usize>) -> Result<Spectrum, RodError> {
        let m = self.mesh.hermite_dim();
        let nb = self.dim_bending();
        let hred = self.reduced_hessian(&vec![0.0; nb], &vec![0.0; self.dim_static()])?;
        let (k, offset) = match component {
            None => (hred, None),
            Some(2) => (hred.view((0, 0), (m, m)).into_owned(), Some(0)),
            Some(3) => (hred.view((m, m), (m, m)).into_owned(), Some(m)),
            Some(c) => return Err(RodError::Component(c)),
        };
        let dim = k.nrows();
        if count > dim {
            return Err(RodError::TooManyModes { requested: count, dim });
        }
        let l = self.mass_chol.l();
        let blocks = dim / m;
        let mut lfull = DMatrix::zeros(dim, dim);
        for b in 0..blocks {
            lfull.view_mut((b * m, b * m), (m, m)).copy_from(&l);
        }
        // A = L⁻¹ K L⁻ᵀ
        let y = lfull.solve_lower_triangular(&k).ok_or(RodError::Singular("mass"))?;
        let a = lfull
            .solve_lower_triangular(&y.transpose())
            .ok_or(RodError::Singular("mass"))?;
        let a = 0.5 * (&a + a.transpose());
        let eig = SymmetricEigen::new(a);
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let lt = lfull.transpose();
        let mut values = Vec::with_capacity(count);
        let mut modes = Vec::with_capacity(count);
        for &i in order.iter().take(count) {
            values.push(eig.eigenvalues[i]);
            let c = lt
                .solve_upper_triangular(&eig.eigenvectors.column(i).into_owned())
                .ok_or(RodError::Singular("mass"))?;
            let mut full = vec![0.0; nb];
            match offset {
                None => full.copy_from_slice(c.as_slice()),
                Some(o) => full[o..o + m].copy_from_slice(c.as_slice()),
            }
            modes.push(full);
        }
        Ok(Spectrum { values, modes })
    }
}
