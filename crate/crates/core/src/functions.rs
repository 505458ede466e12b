//! Closed-form fields evaluated at physical points.

use std::sync::Arc;

use nalgebra::Matrix2;

use crate::mesh::Point;

pub type ScalarFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(Point) -> [f64; 2] + Send + Sync>;
/// `grad[(i, j)] = d u_i / d x_j`
pub type TensorFn = Arc<dyn Fn(Point) -> Matrix2<f64> + Send + Sync>;

pub fn constant_scalar(c: f64) -> ScalarFn {
    Arc::new(move |_| c)
}

pub fn constant_vector(c: [f64; 2]) -> VectorFn {
    Arc::new(move |_| c)
}

/// A smooth vector field with its gradient; the divergence is the trace.
#[derive(Clone)]
pub struct ExactSolution {
    pub value: VectorFn,
    pub grad: TensorFn,
}

impl ExactSolution {
    pub fn new(value: VectorFn, grad: TensorFn) -> Self {
        ExactSolution { value, grad }
    }

    pub fn zero() -> Self {
        ExactSolution { value: constant_vector([0.0, 0.0]), grad: Arc::new(|_| Matrix2::zeros()) }
    }

    pub fn div(&self, x: Point) -> f64 {
        (self.grad)(x).trace()
    }
}

impl std::fmt::Debug for ExactSolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("ExactSolution { .. }")
    }
}
