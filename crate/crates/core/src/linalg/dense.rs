use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Largest dimension accepted by the dense diagnostics.
pub const DENSE_LIMIT: usize = 2000;

/// Default relative kernel tolerance.
pub const KERNEL_TOL: f64 = 1e-8;

/// Rejects dense problems beyond [`DENSE_LIMIT`].
pub fn check_dense_size(n: usize) -> Result<()> {
    if n > DENSE_LIMIT {
        return Err(Error::SizeLimit { n, limit: DENSE_LIMIT });
    }
    Ok(())
}

fn sym_part(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Orthonormal basis (columns) of the numerical kernel of a symmetric
/// matrix: eigenvectors with `|lambda| <= tol * ||M||_2`.
pub fn dense_nullspace(matrix: &DMatrix<f64>, tol: f64) -> Result<DMatrix<f64>> {
    let n = matrix.nrows();
    check_dense_size(n)?;
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let eig = SymmetricEigen::new(sym_part(matrix));
    let norm = eig.eigenvalues.amax();
    let cols: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i].abs() <= tol * norm).collect();
    let mut out = DMatrix::zeros(n, cols.len());
    for (k, &i) in cols.iter().enumerate() {
        out.set_column(k, &eig.eigenvectors.column(i));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlConstant {
    /// `min_{w in W_h} b(w, w) / a(w, w)`.
    pub c_bh: f64,
    /// `(c_bh - 1) / (c_bh + 1)` when `c_bh > 1`.
    pub c_hat: Option<f64>,
    /// `dim V_h = dim ker B`.
    pub kernel_dim: usize,
    /// `dim W_h`.
    pub complement_dim: usize,
}

/// Smallest ratio `w^T B w / w^T A w` over the `A`-orthogonal complement
/// `W = A^{-1} (ker B)^perp` of `V = ker B`.
///
/// With `B = Y Lambda Y^T` restricted to its range, the generalized
/// eigenproblem on `W` reduces to the symmetric matrix
/// `Lambda^{1/2} Y^T A^{-1} Y Lambda^{1/2}`, whose smallest eigenvalue is
/// returned.
pub fn estimate_control_constant(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> Result<ControlConstant> {
    let n = a.nrows();
    check_dense_size(n)?;
    if b.nrows() != n {
        return Err(Error::DimensionMismatch { expected: n, got: b.nrows() });
    }
    let chol = sym_part(a)
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("a_h Gram matrix has no Cholesky factor".into()))?;
    let eig = SymmetricEigen::new(sym_part(b));
    let norm = eig.eigenvalues.amax();
    let range: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i].abs() > tol * norm).collect();
    let kernel_dim = n - range.len();
    if range.is_empty() {
        return Ok(ControlConstant { c_bh: f64::INFINITY, c_hat: Some(1.0), kernel_dim, complement_dim: 0 });
    }
    let mut y = DMatrix::zeros(n, range.len());
    let mut sqrt_lambda = Vec::with_capacity(range.len());
    for (k, &i) in range.iter().enumerate() {
        y.set_column(k, &eig.eigenvectors.column(i));
        let l = eig.eigenvalues[i];
        if l < 0.0 {
            return Err(Error::Precondition(format!("b_h Gram matrix is indefinite (eigenvalue {l:e})")));
        }
        sqrt_lambda.push(l.sqrt());
    }
    let ainv_y = chol.solve(&y);
    let mut s = y.transpose() * ainv_y;
    for i in 0..s.nrows() {
        for j in 0..s.ncols() {
            s[(i, j)] *= sqrt_lambda[i] * sqrt_lambda[j];
        }
    }
    let mu = SymmetricEigen::new(sym_part(&s)).eigenvalues;
    let c_bh = mu.min();
    let c_hat = (c_bh > 1.0).then(|| (c_bh - 1.0) / (c_bh + 1.0));
    Ok(ControlConstant { c_bh, c_hat, kernel_dim, complement_dim: range.len() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nullspace_examples() {
        let z = DMatrix::<f64>::zeros(3, 3);
        assert_eq!(dense_nullspace(&z, KERNEL_TOL).unwrap().ncols(), 3);
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 0.0, 2.0]));
        let k = dense_nullspace(&d, KERNEL_TOL).unwrap();
        assert_eq!(k.ncols(), 1);
        assert!((k[(1, 0)].abs() - 1.0).abs() < 1e-14);
        assert!(matches!(
            dense_nullspace(&DMatrix::zeros(DENSE_LIMIT + 1, DENSE_LIMIT + 1), KERNEL_TOL),
            Err(Error::SizeLimit { .. })
        ));
    }

    #[test]
    fn control_constant_examples() {
        let a = DMatrix::<f64>::identity(2, 2);
        let b = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.0, 4.0]));
        let c = estimate_control_constant(&a, &b, KERNEL_TOL).unwrap();
        assert!((c.c_bh - 4.0).abs() < 1e-14);
        assert!((c.c_hat.unwrap() - 0.6).abs() < 1e-14);
        assert_eq!(c.kernel_dim, 1);

        let c2 = estimate_control_constant(&a, &(a.clone() * 2.0), KERNEL_TOL).unwrap();
        assert!((c2.c_bh - 2.0).abs() < 1e-14);
        assert_eq!(c2.kernel_dim, 0);
    }

    #[test]
    fn control_constant_matches_brute_force_on_a_coupled_example() {
        // A not diagonal: W is not Euclidean-orthogonal to V
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 0.5, 0.1, 0.5, 1.5, 0.2, 0.1, 0.2, 1.0]);
        let b = DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 3.0]);
        let c = estimate_control_constant(&a, &b, KERNEL_TOL).unwrap();
        assert_eq!(c.kernel_dim, 1);
        // V = span (1, -1, 0); W = {w : v^T A w = 0}; sample W densely
        let v = nalgebra::DVector::from_vec(vec![1.0, -1.0, 0.0]);
        let av = &a * &v;
        let w1 = nalgebra::DVector::from_vec(vec![av[1], -av[0], 0.0]);
        let w2 = nalgebra::DVector::from_vec(vec![av[2], 0.0, -av[0]]);
        let mut best = f64::INFINITY;
        for k in 0..20000 {
            let t = k as f64 / 20000.0 * std::f64::consts::PI;
            let w = &w1 * t.cos() + &w2 * t.sin();
            best = best.min(w.dot(&(&b * &w)) / w.dot(&(&a * &w)));
        }
        assert!((c.c_bh - best).abs() < 1e-6 * best, "{} vs {best}", c.c_bh);
    }

    #[test]
    fn scaling_invariance() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let c1 = estimate_control_constant(&a, &b, KERNEL_TOL).unwrap();
        let c2 = estimate_control_constant(&(a * 7.5), &(b * 7.5), KERNEL_TOL).unwrap();
        assert!((c1.c_bh - c2.c_bh).abs() <= 1e-9 * c1.c_bh);
    }

    #[test]
    fn rejects_indefinite_a() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let b = DMatrix::<f64>::identity(2, 2);
        assert!(matches!(estimate_control_constant(&a, &b, KERNEL_TOL), Err(Error::NotPositiveDefinite(_))));
    }
}
