//! Uniform meshes on `(0, L)` with clamped Hermite-cubic and P2 spaces.

use super::RodError;
use crate::profile::Profile;

/// 4-point Gauss–Legendre rule on `[0, 1]`.
pub const GAUSS_POINTS: [f64; 4] = [
    0.069_431_844_202_973_71,
    0.330_009_478_207_571_87,
    0.669_990_521_792_428_1,
    0.930_568_155_797_026_3,
];
pub const GAUSS_WEIGHTS: [f64; 4] = [
    0.173_927_422_568_726_93,
    0.326_072_577_431_273_07,
    0.326_072_577_431_273_07,
    0.173_927_422_568_726_93,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RodMesh1D {
    length: f64,
    n_elem: usize,
}

impl RodMesh1D {
    pub fn new(length: f64, n_elem: usize) -> Result<Self, RodError> {
        if !length.is_finite() || length <= 0.0 {
            return Err(RodError::InvalidLength(length));
        }
        if n_elem < 2 {
            return Err(RodError::TooFewElements(n_elem));
        }
        Ok(Self { length, n_elem })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n_elem(&self) -> usize {
        self.n_elem
    }

    pub fn h(&self) -> f64 {
        self.length / self.n_elem as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.n_elem).map(|i| self.length * i as f64 / self.n_elem as f64).collect()
    }

    pub fn node(&self, i: usize) -> f64 {
        self.length * i as f64 / self.n_elem as f64
    }

    /// Dimension of the clamped Hermite space (value and slope at interior nodes).
    pub fn hermite_dim(&self) -> usize {
        2 * (self.n_elem - 1)
    }

    /// Dimension of P2 with homogeneous Dirichlet conditions.
    pub fn p2_dim(&self) -> usize {
        2 * self.n_elem - 1
    }

    /// Global Hermite dofs of element `e` in local order (value₀, slope₀, value₁, slope₁).
    pub fn hermite_dofs(&self, e: usize) -> [Option<usize>; 4] {
        let node = |i: usize| (i > 0 && i < self.n_elem).then(|| 2 * (i - 1));
        let (a, b) = (node(e), node(e + 1));
        [a, a.map(|d| d + 1), b, b.map(|d| d + 1)]
    }

    /// Global P2 dofs of element `e` in local order (left, midpoint, right).
    pub fn p2_dofs(&self, e: usize) -> [Option<usize>; 3] {
        let node = |k: usize| (k > 0 && k < 2 * self.n_elem).then(|| k - 1);
        [node(2 * e), node(2 * e + 1), node(2 * e + 2)]
    }

    /// Hermite interpolant (values and slopes at interior nodes); boundary data are dropped.
    pub fn hermite_interpolate(&self, profile: &Profile) -> Vec<f64> {
        let mut c = vec![0.0; self.hermite_dim()];
        for i in 1..self.n_elem {
            let x = self.node(i);
            c[2 * (i - 1)] = profile.value(x);
            c[2 * (i - 1) + 1] = profile.derivative(1, x);
        }
        c
    }

    /// P2 nodal interpolant (vertices and midpoints), boundary values dropped.
    pub fn p2_interpolate(&self, profile: &Profile) -> Vec<f64> {
        (1..2 * self.n_elem)
            .map(|k| profile.value(0.5 * self.h() * k as f64))
            .collect()
    }

    /// Value of a Hermite field at `x`, with derivative order `k ≤ 2`.
    pub fn hermite_eval(&self, coeffs: &[f64], k: usize, x: f64) -> f64 {
        let (e, xi) = self.locate(x);
        let dofs = self.hermite_dofs(e);
        let shape = HermiteShape::at(xi, self.h());
        let table = match k {
            0 => shape.n,
            1 => shape.dn,
            _ => shape.ddn,
        };
        dofs.iter()
            .zip(table)
            .map(|(d, s)| d.map_or(0.0, |g| coeffs[g]) * s)
            .sum()
    }

    /// Value of a P2 field at `x`, with derivative order `k ≤ 1`.
    pub fn p2_eval(&self, coeffs: &[f64], k: usize, x: f64) -> f64 {
        let (e, xi) = self.locate(x);
        let shape = P2Shape::at(xi, self.h());
        let table = if k == 0 { shape.n } else { shape.dn };
        self.p2_dofs(e)
            .iter()
            .zip(table)
            .map(|(d, s)| d.map_or(0.0, |g| coeffs[g]) * s)
            .sum()
    }

    /// Element index and local coordinate in `[0, 1]`.
    pub fn locate(&self, x: f64) -> (usize, f64) {
        let s = (x / self.h()).clamp(0.0, self.n_elem as f64);
        let e = (s.floor() as usize).min(self.n_elem - 1);
        (e, s - e as f64)
    }
}

/// Hermite cubic shape functions and their `x`-derivatives at one local coordinate.
#[derive(Debug, Clone, Copy)]
pub struct HermiteShape {
    pub n: [f64; 4],
    pub dn: [f64; 4],
    pub ddn: [f64; 4],
}

impl HermiteShape {
    pub fn at(xi: f64, h: f64) -> Self {
        let (x2, x3) = (xi * xi, xi * xi * xi);
        Self {
            n: [1.0 - 3.0 * x2 + 2.0 * x3, h * (xi - 2.0 * x2 + x3), 3.0 * x2 - 2.0 * x3, h * (x3 - x2)],
            dn: [
                (-6.0 * xi + 6.0 * x2) / h,
                1.0 - 4.0 * xi + 3.0 * x2,
                (6.0 * xi - 6.0 * x2) / h,
                3.0 * x2 - 2.0 * xi,
            ],
            ddn: [
                (-6.0 + 12.0 * xi) / (h * h),
                (-4.0 + 6.0 * xi) / h,
                (6.0 - 12.0 * xi) / (h * h),
                (-2.0 + 6.0 * xi) / h,
            ],
        }
    }
}

/// Quadratic Lagrange shape functions (left, midpoint, right).
#[derive(Debug, Clone, Copy)]
pub struct P2Shape {
    pub n: [f64; 3],
    pub dn: [f64; 3],
}

impl P2Shape {
    pub fn at(xi: f64, h: f64) -> Self {
        Self {
            n: [2.0 * (xi - 0.5) * (xi - 1.0), 4.0 * xi * (1.0 - xi), 2.0 * xi * (xi - 0.5)],
            dn: [(4.0 * xi - 3.0) / h, (4.0 - 8.0 * xi) / h, (4.0 * xi - 1.0) / h],
        }
    }
}
