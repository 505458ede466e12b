//! Gauss rules on the reference segment `[0, 1]` and the reference triangle
//! `{x, y >= 0, x + y <= 1}`.
//!
//! Triangle rules are collapsed tensor products of a Gauss-Legendre rule and
//! a Gauss-Jacobi rule with weight `(1 - v)` (Duffy transform), so they exist
//! for every order without tabulated data. Nodes and weights come from the
//! Golub-Welsch eigenvalue construction.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Highest exactness order served by [`triangle_rule`] and [`segment_rule`].
pub const MAX_ORDER: usize = 40;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule<const D: usize> {
    pub points: Vec<[f64; D]>,
    pub weights: Vec<f64>,
    pub exactness_order: usize,
}

pub type SegmentRule = QuadratureRule<1>;
pub type TriangleRule = QuadratureRule<2>;

impl<const D: usize> QuadratureRule<D> {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64; D], f64)> + '_ {
        self.points.iter().zip(self.weights.iter().copied())
    }

    pub fn integrate<F: FnMut(&[f64; D]) -> f64>(&self, mut f: F) -> f64 {
        self.iter().map(|(x, w)| w * f(x)).sum()
    }
}

/// Gauss-Jacobi nodes and weights on `[-1, 1]` for the weight
/// `(1 - x)^alpha (1 + x)^beta`, restricted to integer `alpha, beta`.
fn gauss_jacobi(n: usize, alpha: f64, beta: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let ab = alpha + beta;
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        let diag = if k == 0 {
            (beta - alpha) / (ab + 2.0)
        } else {
            (beta * beta - alpha * alpha) / ((2.0 * kf + ab) * (2.0 * kf + ab + 2.0))
        };
        jac[(k, k)] = diag;
        if k + 1 < n {
            let m = kf + 1.0;
            let num = 4.0 * m * (m + alpha) * (m + beta) * (m + ab);
            let t = 2.0 * m + ab;
            let den = t * t * (t + 1.0) * (t - 1.0);
            let off = (num / den).sqrt();
            jac[(k, k + 1)] = off;
            jac[(k + 1, k)] = off;
        }
    }
    // mu0 = 2^(a+b+1) Γ(a+1) Γ(b+1) / Γ(a+b+2) for integer a, b
    let fact = |k: f64| (1..=k as u64).map(|i| i as f64).product::<f64>();
    let mu0 = 2f64.powf(ab + 1.0) * fact(alpha) * fact(beta) / fact(ab + 1.0);

    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

fn check_order(order: usize) -> Result<()> {
    if order > MAX_ORDER {
        return Err(Error::UnsupportedQuadratureOrder { requested: order, max: MAX_ORDER });
    }
    Ok(())
}

/// Gauss-Legendre rule on `[0, 1]` exact for polynomials of degree `<= order`.
pub fn segment_rule(order: usize) -> Result<SegmentRule> {
    check_order(order)?;
    let n = (order + 2) / 2;
    let (x, w) = gauss_jacobi(n, 0.0, 0.0);
    Ok(QuadratureRule {
        points: x.iter().map(|&t| [0.5 * (t + 1.0)]).collect(),
        weights: w.iter().map(|&wi| 0.5 * wi).collect(),
        exactness_order: 2 * n - 1,
    })
}

/// Collapsed Gauss rule on the reference triangle, exact for total degree
/// `<= order`.
pub fn triangle_rule(order: usize) -> Result<TriangleRule> {
    check_order(order)?;
    let n = (order + 2) / 2;
    let (xu, wu) = gauss_jacobi(n, 0.0, 0.0);
    // weight (1 - v) on [0, 1] corresponds to (1 - x) on [-1, 1] scaled by 1/4
    let (xv, wv) = gauss_jacobi(n, 1.0, 0.0);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for (tv, wvj) in xv.iter().zip(&wv) {
        let v = 0.5 * (tv + 1.0);
        for (tu, wui) in xu.iter().zip(&wu) {
            let u = 0.5 * (tu + 1.0);
            points.push([u * (1.0 - v), v]);
            weights.push(0.5 * wui * 0.25 * wvj);
        }
    }
    Ok(QuadratureRule { points, weights, exactness_order: 2 * n - 1 })
}
