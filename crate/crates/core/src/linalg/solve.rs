use faer::sparse::{SparseColMat, Triplet};
use faer::prelude::Solve;
use faer::Mat;

use super::sparse::{SparseSymMatrix, TripletBuilder};
use crate::error::{Error, Result};

/// Matrix, right-hand side and the dofs pinned to zero.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub matrix: SparseSymMatrix,
    pub rhs: Vec<f64>,
    pub constrained: Vec<usize>,
}

impl LinearSystem {
    pub fn new(matrix: SparseSymMatrix, rhs: Vec<f64>) -> Self {
        LinearSystem { matrix, rhs, constrained: Vec::new() }
    }

    pub fn with_constraints(mut self, constrained: Vec<usize>) -> Self {
        self.constrained = constrained;
        self
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// Symmetric elimination of the constraints: constrained rows and
    /// columns are zeroed, their diagonal set to one and their rhs to zero.
    pub fn constrained_parts(&self) -> (SparseSymMatrix, Vec<f64>) {
        if self.constrained.is_empty() {
            return (self.matrix.clone(), self.rhs.clone());
        }
        let n = self.dim();
        let mut fixed = vec![false; n];
        for &i in &self.constrained {
            fixed[i] = true;
        }
        let mut t = TripletBuilder::new(n);
        for (i, j, v) in self.matrix.triplets() {
            if !fixed[i] && !fixed[j] {
                t.push(i, j, v);
            }
        }
        let mut rhs = self.rhs.clone();
        for i in (0..n).filter(|&i| fixed[i]) {
            t.push(i, i, 1.0);
            rhs[i] = 0.0;
        }
        (t.build(), rhs)
    }

    /// Indices not constrained.
    pub fn free_dofs(&self) -> Vec<usize> {
        let mut fixed = vec![false; self.dim()];
        for &i in &self.constrained {
            fixed[i] = true;
        }
        (0..self.dim()).filter(|&i| !fixed[i]).collect()
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Direct sparse LU solve with partial pivoting (the operators are
/// symmetric indefinite, so Cholesky does not apply).
///
/// The result satisfies `||Ax - r|| <= 1e-9 (||A||_max ||x|| + ||r||)` or an
/// error is returned.
pub fn solve(system: &LinearSystem) -> Result<Vec<f64>> {
    let n = system.dim();
    if system.rhs.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: system.rhs.len() });
    }
    let (a, r) = system.constrained_parts();
    if n == 0 {
        return Ok(Vec::new());
    }
    let trips: Vec<Triplet<usize, usize, f64>> = a.triplets().map(|(i, j, v)| Triplet::new(i, j, v)).collect();
    let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &trips)
        .map_err(|e| Error::SingularMatrix(format!("{e:?}")))?;
    let lu = mat.sp_lu().map_err(|e| Error::SingularMatrix(format!("{e:?}")))?;
    let b = Mat::<f64>::from_fn(n, 1, |i, _| r[i]);
    let sol = lu.solve(&b);
    let mut x: Vec<f64> = (0..n).map(|i| sol[(i, 0)]).collect();
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularMatrix("non-finite solution".into()));
    }
    for &i in &system.constrained {
        x[i] = 0.0;
    }
    let ax = a.mul_vec(&x);
    let res: Vec<f64> = ax.iter().zip(&r).map(|(p, q)| p - q).collect();
    let bound = 1e-9 * (a.max_abs() * norm(&x) + norm(&r));
    if norm(&res) > bound {
        return Err(Error::SingularMatrix(format!("residual {:e} exceeds {:e}", norm(&res), bound)));
    }
    Ok(x)
}
