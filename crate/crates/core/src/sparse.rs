//! Assembled sparse matrices with direct solvers.
//!
//! Factorizations are delegated to faer's sparse LU (partial pivoting) and Cholesky, built
//! without its rayon feature so that results are bit-reproducible.

use faer::prelude::*;
use faer::Side;
use faer::sparse::{SparseColMat, Triplet};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SparseError {
    #[error("sparse matrix construction failed: {0}")]
    Build(String),
    #[error("sparse factorization failed: {0}")]
    Factor(String),
    #[error("system is numerically singular (solution not finite)")]
    Singular,
}

/// Square sparse matrix in coordinate form with duplicates merged.
#[derive(Debug, Clone)]
pub struct SparseMatrix {
    n: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl SparseMatrix {
    /// Entries with equal `(row, col)` are summed in insertion order.
    pub fn from_triplets(n: usize, mut entries: Vec<(usize, usize, f64)>) -> Self {
        entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(entries.len());
        for (r, c, v) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        Self { n, entries: merged }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        let mut rows = vec![0.0f64; self.n];
        for &(r, _, v) in &self.entries {
            rows[r] += v.abs();
        }
        rows.into_iter().fold(0.0, f64::max)
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for &(r, c, v) in &self.entries {
            y[r] += v * x[c];
        }
        y
    }

    /// Solves `A x = b` for each right-hand side by sparse LU, with `refinements` steps of
    /// iterative refinement.
    pub fn solve(&self, rhs: &[Vec<f64>], refinements: usize) -> Result<Vec<Vec<f64>>, SparseError> {
        let a = self.to_faer()?;
        let lu = a.sp_lu().map_err(|e| SparseError::Factor(format!("{e:?}")))?;
        self.refined(rhs, refinements, |m| lu.solve_in_place(m))
    }

    /// Like [`solve`](Self::solve) for a symmetric positive-definite matrix, by sparse Cholesky.
    pub fn solve_spd(&self, rhs: &[Vec<f64>], refinements: usize) -> Result<Vec<Vec<f64>>, SparseError> {
        let a = self.to_faer()?;
        let llt = a
            .sp_cholesky(Side::Lower)
            .map_err(|e| SparseError::Factor(format!("{e:?}")))?;
        self.refined(rhs, refinements, |m| llt.solve_in_place(m))
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, f64>, SparseError> {
        let trips: Vec<Triplet<usize, usize, f64>> =
            self.entries.iter().map(|&(r, c, v)| Triplet::new(r, c, v)).collect();
        SparseColMat::<usize, f64>::try_new_from_triplets(self.n, self.n, &trips)
            .map_err(|e| SparseError::Build(format!("{e:?}")))
    }

    fn refined(
        &self,
        rhs: &[Vec<f64>],
        refinements: usize,
        solve_in_place: impl Fn(MatMut<'_, f64>),
    ) -> Result<Vec<Vec<f64>>, SparseError> {
        let apply = |b: &[Vec<f64>]| -> Vec<Vec<f64>> {
            let mut m = Mat::<f64>::from_fn(self.n, b.len(), |i, j| b[j][i]);
            solve_in_place(m.as_mut());
            (0..b.len()).map(|j| (0..self.n).map(|i| m[(i, j)]).collect()).collect()
        };
        let mut x = apply(rhs);
        for _ in 0..refinements {
            let resid: Vec<Vec<f64>> = x
                .iter()
                .zip(rhs)
                .map(|(xi, bi)| {
                    let ax = self.matvec(xi);
                    bi.iter().zip(ax).map(|(b, a)| b - a).collect()
                })
                .collect();
            let dx = apply(&resid);
            for (xi, di) in x.iter_mut().zip(dx) {
                for (a, d) in xi.iter_mut().zip(di) {
                    *a += d;
                }
            }
        }
        if x.iter().flatten().any(|v| !v.is_finite()) {
            return Err(SparseError::Singular);
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_saddle_system() {
        // [2 1 1; 1 2 0; 1 0 0] x = [1 2 3]
        let a = SparseMatrix::from_triplets(
            3,
            vec![
                (0, 0, 1.0),
                (0, 0, 1.0),
                (0, 1, 1.0),
                (1, 0, 1.0),
                (1, 1, 2.0),
                (0, 2, 1.0),
                (2, 0, 1.0),
            ],
        );
        assert_eq!(a.nnz(), 6);
        let x = a.solve(&[vec![1.0, 2.0, 3.0]], 1).unwrap();
        let r = a.matvec(&x[0]);
        for (ri, bi) in r.iter().zip([1.0, 2.0, 3.0]) {
            assert!((ri - bi).abs() < 1e-14);
        }
    }

    #[test]
    fn spd_solve_matches_lu() {
        let a = SparseMatrix::from_triplets(
            3,
            vec![(0, 0, 4.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 3.0), (1, 2, -1.0), (2, 1, -1.0), (2, 2, 2.0)],
        );
        let b = vec![vec![1.0, -2.0, 0.5]];
        let x = a.solve_spd(&b, 1).unwrap();
        let y = a.solve(&b, 1).unwrap();
        for (p, q) in x[0].iter().zip(&y[0]) {
            assert!((p - q).abs() < 1e-14);
        }
    }

    #[test]
    fn singular_system_is_reported() {
        let a = SparseMatrix::from_triplets(2, vec![(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)]);
        assert!(a.solve(&[vec![1.0, 0.0]], 0).is_err());
    }
}
