//! Reference bases, global spaces and dof maps for the four method families.

mod field;
pub mod reference;
mod space;

pub use field::{bdm_interpolate, interpolate, interpolate_scalar, l2_project, DiscreteField};
pub use space::{build_space, Family, FeSpace, ScalarShapes, VectorShapes};

/// Volume quadrature order for degree `p` on geometry of order `g`.
pub fn default_quadrature_order(p: usize, g: usize) -> usize {
    2 * p + 2 * (g - 1) + 2
}
