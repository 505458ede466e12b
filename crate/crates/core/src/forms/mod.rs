//! Bilinear forms, load vectors, the four discretizations and error norms.
//!
//! All forms are written for the operator `-a_h + b_h` with
//!
//! ```text
//! a(u, v) = (rho d_b u, d_b v) + |b|_inf^2 (rho u, v)
//! b(u, v) = (rho c^2 div u, div v)
//! ```
//!
//! plus symmetric interior penalty facet terms for the DG variants.

mod assemble;
mod m2;
mod method;
mod norms;
mod trace;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

pub use assemble::{
    assemble_a_dg, assemble_a_facets, assemble_a_volume, assemble_b_dg, assemble_b_facets, assemble_b_volume,
    assemble_rhs, FacetFilter,
};
pub use m2::{assemble_bpp_dense, assemble_m2_system, M2System};
pub use method::{assemble_method, method_grams, Discretization, Solution};
pub use norms::{error_norms, ErrorNorms};
pub use trace::{FacetTrace, TracePoint};

use crate::error::{Error, Result};
use crate::fespace::Family;
use crate::functions::{constant_scalar, ScalarFn, VectorFn};
use crate::mesh::Mesh;
use crate::quadrature::{segment_rule, triangle_rule};

/// Material and flow coefficients plus penalty parameters.
#[derive(Clone)]
pub struct CoefficientSet {
    pub rho: ScalarFn,
    pub c_s: ScalarFn,
    pub b_flow: VectorFn,
    /// The global constant `|b|_inf` weighting the zeroth-order term.
    pub b_inf: f64,
    pub lambda_b: f64,
    pub lambda_n: f64,
}

impl fmt::Debug for CoefficientSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientSet")
            .field("b_inf", &self.b_inf)
            .field("lambda_b", &self.lambda_b)
            .field("lambda_n", &self.lambda_n)
            .finish_non_exhaustive()
    }
}

/// Angular speed of the rotating background flow `b = 0.1 (-y, x)`.
pub const FLOW_SPEED: f64 = 0.1;

impl CoefficientSet {
    /// `rho = 1`, `c_s^2 = cs2`, `b = 0.1 (-y, x)` with `|b|_inf = 0.1` on the unit disc.
    pub fn rotating_flow(cs2: f64, lambda_b: f64, lambda_n: f64) -> Self {
        CoefficientSet {
            rho: constant_scalar(1.0),
            c_s: constant_scalar(cs2.sqrt()),
            b_flow: Arc::new(|x| [-FLOW_SPEED * x[1], FLOW_SPEED * x[0]]),
            b_inf: FLOW_SPEED,
            lambda_b,
            lambda_n,
        }
    }

    /// Rejects coefficient sets that make `a` or `b` degenerate: `rho` and
    /// `c_s` must be positive at every volume quadrature point, `|b|_inf`
    /// positive and the penalties non-negative.
    pub fn validate(&self, mesh: &Mesh) -> Result<()> {
        if !(self.b_inf > 0.0) || !self.b_inf.is_finite() {
            return Err(Error::Precondition(format!(
                "|b|_inf = {} must be positive, otherwise a_h is only semidefinite",
                self.b_inf
            )));
        }
        if !(self.lambda_b >= 0.0 && self.lambda_n >= 0.0) {
            return Err(Error::Precondition("penalty parameters must be non-negative".into()));
        }
        let rule = triangle_rule(2 * mesh.geom_order + 2)?;
        for e in 0..mesh.num_triangles() {
            for xi in &rule.points {
                let x = mesh.map(e).point(*xi);
                let (rho, c) = ((self.rho)(x), (self.c_s)(x));
                if !(rho > 0.0 && c > 0.0) {
                    return Err(Error::Precondition(format!("rho = {rho}, c_s = {c} at {x:?} must be positive")));
                }
            }
        }
        Ok(())
    }

    /// Largest `|b . n|` over boundary facet quadrature points. Zero up to the
    /// geometry error of the discrete boundary for tangential flows.
    pub fn boundary_flux_defect(&self, mesh: &Mesh) -> Result<f64> {
        let rule = segment_rule(2 * mesh.geom_order + 4)?;
        let mut max: f64 = 0.0;
        for (f, facet) in mesh.facets.iter().enumerate() {
            if !facet.is_boundary() {
                continue;
            }
            for s in &rule.points {
                let fp = mesh.facet_point(f, 0, s[0]);
                let b = (self.b_flow)(fp.x);
                max = max.max((b[0] * fp.normal[0] + b[1] * fp.normal[1]).abs());
            }
        }
        Ok(max)
    }
}

/// The four discretizations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    /// H1-conforming: `-a + b_dg` on continuous `[P^p]^2`.
    M1,
    /// H1-conforming with a Taylor-Hood pseudo-pressure.
    M2,
    /// H(div)-conforming DG: `-a_dg + b` on BDM with strong `u . n = 0`.
    M3,
    /// Fully discontinuous: `-a_dg + b_dg`.
    M4,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::M1, Method::M2, Method::M3, Method::M4];

    pub fn family(self) -> Family {
        match self {
            Method::M1 | Method::M2 => Family::VectorLagrange,
            Method::M3 => Family::HdivBdm,
            Method::M4 => Family::VectorDg,
        }
    }

    /// Column suffix used in report headers.
    pub fn label(self) -> &'static str {
        match self {
            Method::M1 => "H1",
            Method::M2 => "H1pp",
            Method::M3 => "Hdiv",
            Method::M4 => "DG",
        }
    }

    pub fn min_degree(self) -> usize {
        match self {
            Method::M2 => 2,
            _ => 1,
        }
    }

    pub fn check_degree(self, p: usize) -> Result<()> {
        if !(1..=4).contains(&p) {
            return Err(Error::UnsupportedDegree(p));
        }
        if p < self.min_degree() {
            return Err(Error::InvalidMethod(format!("{self} needs p >= {}, got p = {p}", self.min_degree())));
        }
        Ok(())
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Method::M1 => "M1",
            Method::M2 => "M2",
            Method::M3 => "M3",
            Method::M4 => "M4",
        };
        f.write_str(s)
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "M1" | "H1" => Ok(Method::M1),
            "M2" | "H1PP" => Ok(Method::M2),
            "M3" | "HDIV" => Ok(Method::M3),
            "M4" | "DG" => Ok(Method::M4),
            _ => Err(Error::InvalidMethod(format!("unknown method '{s}'"))),
        }
    }
}

/// Quadrature order for load vectors and error norms: the matrix order plus a
/// margin for non-polynomial data.
pub(crate) fn data_quadrature_order(p: usize, g: usize) -> usize {
    crate::fespace::default_quadrature_order(p, g) + 4
}
