use std::sync::Arc;

use super::assemble::{assemble_a_dg, assemble_a_volume, assemble_b_dg, assemble_b_volume, assemble_rhs};
use super::m2::assemble_m2_system;
use super::{CoefficientSet, Method};
use crate::error::{Error, Result};
use crate::fespace::{build_space, DiscreteField, FeSpace};
use crate::functions::VectorFn;
use crate::linalg::{solve, LinearSystem, SparseSymMatrix};
use crate::mesh::Mesh;

/// An assembled discretization `-a_h + b_h = <f, .>` ready to solve.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub method: Method,
    pub space: Arc<FeSpace>,
    /// Pseudo-pressure space (M2 only).
    pub pressure: Option<Arc<FeSpace>>,
    pub coeffs: CoefficientSet,
    pub system: LinearSystem,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub method: Method,
    pub velocity: DiscreteField,
    pub pressure: Option<DiscreteField>,
    pub coeffs: CoefficientSet,
}

/// Gram matrices `(a_h, b_h)` of a method on its velocity space. M2 has no
/// sparse `b_h`; see [`super::assemble_bpp_dense`].
pub fn method_grams(
    method: Method,
    space: &FeSpace,
    coeffs: &CoefficientSet,
) -> Result<(SparseSymMatrix, SparseSymMatrix)> {
    if space.family != method.family() {
        return Err(Error::InvalidMethod(format!("{method} needs a {:?} space, got {:?}", method.family(), space.family)));
    }
    match method {
        Method::M1 => Ok((assemble_a_volume(space, coeffs)?, assemble_b_dg(space, coeffs)?)),
        Method::M2 => Err(Error::InvalidMethod("M2 has no sparse b_h Gram matrix".into())),
        Method::M3 => Ok((assemble_a_dg(space, coeffs)?, assemble_b_volume(space, coeffs)?)),
        Method::M4 => Ok((assemble_a_dg(space, coeffs)?, assemble_b_dg(space, coeffs)?)),
    }
}

pub fn assemble_method(
    method: Method,
    mesh: Arc<Mesh>,
    p: usize,
    coeffs: &CoefficientSet,
    f: &VectorFn,
) -> Result<Discretization> {
    method.check_degree(p)?;
    coeffs.validate(&mesh)?;
    let space = Arc::new(build_space(method.family(), mesh.clone(), p)?);
    if method == Method::M2 {
        let pp = Arc::new(FeSpace::pseudo_pressure(mesh, p)?);
        let m2 = assemble_m2_system(&space, &pp, coeffs, f)?;
        return Ok(Discretization { method, space, pressure: Some(pp), coeffs: coeffs.clone(), system: m2.system });
    }
    let (a, b) = method_grams(method, &space, coeffs)?;
    let matrix = a.lin_comb(-1.0, &b, 1.0);
    let rhs = assemble_rhs(&space, f)?;
    let system = LinearSystem::new(matrix, rhs).with_constraints(space.constrained_dofs().to_vec());
    Ok(Discretization { method, space, pressure: None, coeffs: coeffs.clone(), system })
}

impl Discretization {
    pub fn solve(&self) -> Result<Solution> {
        let x = solve(&self.system)?;
        let nu = self.space.ndof();
        let velocity = DiscreteField::new(self.space.clone(), x[..nu].to_vec());
        let pressure = self.pressure.as_ref().map(|pp| DiscreteField::new(pp.clone(), x[nu..].to_vec()));
        Ok(Solution { method: self.method, velocity, pressure, coeffs: self.coeffs.clone() })
    }
}
