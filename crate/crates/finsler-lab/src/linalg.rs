//! Small dense containers and jet-valued linear solves.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::jet::Jet;

/// Dense rank-3 array of f64 with explicit dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    dims: (usize, usize, usize),
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(d0: usize, d1: usize, d2: usize) -> Tensor3 {
        Tensor3 {
            dims: (d0, d1, d2),
            data: vec![0.0; d0 * d1 * d2],
        }
    }

    pub fn from_fn(
        d0: usize,
        d1: usize,
        d2: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Tensor3 {
        let mut t = Tensor3::zeros(d0, d1, d2);
        for i in 0..d0 {
            for j in 0..d1 {
                for k in 0..d2 {
                    t[(i, j, k)] = f(i, j, k);
                }
            }
        }
        t
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.dims
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Nested representation for JSON output, index order [i][j][k].
    pub fn to_nested(&self) -> Vec<Vec<Vec<f64>>> {
        (0..self.dims.0)
            .map(|i| {
                (0..self.dims.1)
                    .map(|j| (0..self.dims.2).map(|k| self[(i, j, k)]).collect())
                    .collect()
            })
            .collect()
    }
}

impl std::ops::Index<(usize, usize, usize)> for Tensor3 {
    type Output = f64;
    fn index(&self, (i, j, k): (usize, usize, usize)) -> &f64 {
        debug_assert!(i < self.dims.0 && j < self.dims.1 && k < self.dims.2);
        &self.data[(i * self.dims.1 + j) * self.dims.2 + k]
    }
}

impl std::ops::IndexMut<(usize, usize, usize)> for Tensor3 {
    fn index_mut(&mut self, (i, j, k): (usize, usize, usize)) -> &mut f64 {
        debug_assert!(i < self.dims.0 && j < self.dims.1 && k < self.dims.2);
        &mut self.data[(i * self.dims.1 + j) * self.dims.2 + k]
    }
}

/// Max absolute difference between two matrices.
pub fn mat_max_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Inverse of a symmetric positive-definite matrix together with its
/// eigenvalue range; errors on convexity or conditioning failure.
pub fn spd_inverse(g: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64, f64)> {
    let eig = g.clone().symmetric_eigen();
    let min_eig = eig
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let max_eig = eig
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    if min_eig <= 1e-10 {
        return Err(Error::NotConvex { min_eig });
    }
    let cond = max_eig / min_eig;
    if cond > 1e12 {
        return Err(Error::SingularMetric { cond });
    }
    let inv = g
        .clone()
        .try_inverse()
        .ok_or(Error::SingularMetric { cond })?;
    Ok((inv, min_eig, max_eig))
}

/// Solve A x = b for jet-valued square systems by Gaussian elimination.
///
/// Pivoting compares coefficient values only, so the branch is locally
/// constant and the jet derivatives of the solution stay exact.
pub fn jet_solve(a: &[Vec<Jet>], b: &[Jet]) -> Result<Vec<Jet>> {
    let n = a.len();
    assert!(n > 0 && a.iter().all(|row| row.len() == n) && b.len() == n);
    let mut m: Vec<Vec<Jet>> = a.to_vec();
    let mut rhs: Vec<Jet> = b.to_vec();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r1, &r2| {
                m[r1][col]
                    .value()
                    .abs()
                    .partial_cmp(&m[r2][col].value().abs())
                    .unwrap()
            })
            .unwrap();
        if m[pivot][col].value().abs() < 1e-300 {
            return Err(Error::SingularTransition);
        }
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        let inv = m[col][col].recip();
        for r in (col + 1)..n {
            let factor = &m[r][col] * &inv;
            for c in col..n {
                m[r][c] = &m[r][c] - &(&factor * &m[col][c]);
            }
            rhs[r] = &rhs[r] - &(&factor * &rhs[col]);
        }
    }
    for col in (0..n).rev() {
        let mut acc = rhs[col].clone();
        for c in (col + 1)..n {
            acc = &acc - &(&m[col][c] * &rhs[c]);
        }
        rhs[col] = &acc / &m[col][col];
    }
    Ok(rhs)
}

/// Solve A X = B column by column for jet-valued matrices.
pub fn jet_solve_matrix(a: &[Vec<Jet>], b: &[Vec<Jet>]) -> Result<Vec<Vec<Jet>>> {
    let n = a.len();
    let cols = b[0].len();
    let mut out: Vec<Vec<Jet>> = vec![Vec::with_capacity(cols); n];
    for c in 0..cols {
        let rhs: Vec<Jet> = (0..n).map(|r| b[r][c].clone()).collect();
        let x = jet_solve(a, &rhs)?;
        for (r, xi) in x.into_iter().enumerate() {
            out[r].push(xi);
        }
    }
    Ok(out)
}
