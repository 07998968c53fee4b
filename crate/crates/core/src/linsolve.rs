//! Sparse direct solves with a residual contract.
//!
//! The backend is a sparse LU with partial pivoting (faer). Whatever the
//! backend, a returned solution satisfies
//! `||A x - b|| <= RESIDUAL_TOL * max(||b||, eps)`.

use faer::prelude::Solve;
use faer::sparse::{SparseColMat, Triplet};

use crate::error::{Error, Result};
use crate::sparse::{norm2, SparseMatrix};

pub const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct LinearSystem {
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
}

impl LinearSystem {
    pub fn new(matrix: SparseMatrix, rhs: Vec<f64>) -> Result<Self> {
        matrix.check_square()?;
        if rhs.len() != matrix.nrows() {
            return Err(Error::invalid(format!(
                "right-hand side has length {}, matrix has {} rows",
                rhs.len(),
                matrix.nrows()
            )));
        }
        if rhs.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("right-hand side is not finite"));
        }
        Ok(LinearSystem { matrix, rhs })
    }

    pub fn relative_residual(&self, x: &[f64]) -> f64 {
        let ax = self.matrix.mul_vec(x);
        let r: Vec<f64> = ax.iter().zip(&self.rhs).map(|(a, b)| a - b).collect();
        norm2(&r) / norm2(&self.rhs).max(f64::EPSILON)
    }
}

pub fn solve_sparse(system: &LinearSystem) -> Result<Vec<f64>> {
    let n = system.matrix.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let triplets: Vec<Triplet<usize, usize, f64>> = system
        .matrix
        .iter()
        .map(|(i, j, v)| Triplet::new(i, j, v))
        .collect();
    let a = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
        .map_err(|e| Error::invalid(format!("sparse matrix construction failed: {e:?}")))?;
    let lu = a.sp_lu().map_err(|e| Error::Singular(format!("{e:?}")))?;
    let rhs = faer::Col::<f64>::from_fn(n, |i| system.rhs[i]);
    let mut x: Vec<f64> = lu.solve(&rhs).iter().copied().collect();
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular("factorization produced non-finite values".into()));
    }

    // One step of iterative refinement tightens the residual on badly scaled
    // saddle-point systems.
    let mut res = system.relative_residual(&x);
    if res > RESIDUAL_TOL * 1e-3 {
        let ax = system.matrix.mul_vec(&x);
        let r = faer::Col::<f64>::from_fn(n, |i| system.rhs[i] - ax[i]);
        let dx = lu.solve(&r);
        let refined: Vec<f64> = x.iter().zip(dx.iter()).map(|(a, d)| a + d).collect();
        let res2 = system.relative_residual(&refined);
        if res2 < res {
            x = refined;
            res = res2;
        }
    }
    if !res.is_finite() {
        return Err(Error::Singular("residual is not finite".into()));
    }
    if res > RESIDUAL_TOL {
        // A large residual after pivoted LU means the matrix is numerically
        // singular.
        return Err(if res > 1e-4 {
            Error::Singular(format!("relative residual {res:.3e}"))
        } else {
            Error::ResidualContract(res)
        });
    }
    Ok(x)
}
