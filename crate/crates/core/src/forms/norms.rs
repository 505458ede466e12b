use std::sync::Arc;

use nalgebra::Vector2;

use super::method::Solution;
use super::{data_quadrature_order, CoefficientSet, Method};
use crate::error::{Error, Result};
use crate::fespace::{DiscreteField, FeSpace};
use crate::functions::ExactSolution;
use crate::linalg::{solve, LinearSystem, TripletBuilder};
use crate::mesh::Point;
use crate::quadrature::{segment_rule, triangle_rule};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorNorms {
    /// `|u_h - u|_{L2}`
    pub l2_error: f64,
    /// Triple norm `(a_h(e, e) + b_h(e, e))^{1/2}` of the error `e = u_h - u`.
    pub xh_error: f64,
    /// `|u_h|_{L2}` (broken over elements).
    pub l2_norm: f64,
}

impl Solution {
    pub fn error_norms(&self, exact: &ExactSolution) -> Result<ErrorNorms> {
        error_norms(self.method, &self.velocity, exact, &self.coeffs)
    }
}

fn vec2(v: [f64; 2]) -> Vector2<f64> {
    Vector2::new(v[0], v[1])
}

/// Error norms of `u_h` against `exact` in the triple norm of `method`.
///
/// Facet terms are evaluated on `e = u_h - u`; as `u` is smooth its jumps
/// are those of `u_h` while averages subtract the exact traces. The triple
/// norm is clamped at zero since the symmetric flux terms make the facet
/// contributions indefinite away from the discrete space.
pub fn error_norms(
    method: Method,
    u_h: &DiscreteField,
    exact: &ExactSolution,
    coeffs: &CoefficientSet,
) -> Result<ErrorNorms> {
    let space = &u_h.space;
    if space.family != method.family() {
        return Err(Error::InvalidMethod(format!("{method} field must live in a {:?} space", method.family())));
    }
    let mesh = &space.mesh;
    let order = data_quadrature_order(space.degree, mesh.geom_order);
    let tri = triangle_rule(order)?;
    let seg = segment_rule(order)?;
    let b2 = coeffs.b_inf * coeffs.b_inf;

    let (mut l2, mut norm, mut a_h, mut b_h) = (0.0, 0.0, 0.0, 0.0);
    for e in 0..mesh.num_triangles() {
        let vals = u_h.eval_vector(e, &tri.points);
        let geo = space.map_evals(e, &tri.points);
        for (q, (v, g, d)) in vals.into_iter().enumerate() {
            let x = geo[q].x;
            let dx = tri.weights[q] * geo[q].det.abs();
            let err = v - vec2((exact.value)(x));
            let gerr = g - (exact.grad)(x);
            let derr = d - exact.div(x);
            let b = vec2((coeffs.b_flow)(x));
            let rho = (coeffs.rho)(x);
            let c = (coeffs.c_s)(x);
            l2 += dx * err.norm_squared();
            norm += dx * v.norm_squared();
            a_h += dx * rho * ((gerr * b).norm_squared() + b2 * err.norm_squared());
            b_h += dx * rho * c * c * derr * derr;
        }
    }

    let with_a_facets = matches!(method, Method::M3 | Method::M4);
    let with_b_facets = matches!(method, Method::M1 | Method::M4);
    if with_a_facets || with_b_facets {
        for (f, facet) in mesh.facets.iter().enumerate() {
            let boundary = facet.is_boundary();
            let sides = if boundary { 1 } else { 2 };
            let h = mesh.facet_diameter(f);
            let traces: Vec<Vec<_>> = (0..sides)
                .map(|side| {
                    let xis: Vec<Point> = seg.points.iter().map(|s| mesh.facet_point(f, side, s[0]).xi).collect();
                    u_h.eval_vector(facet.side(side).element, &xis)
                })
                .collect();
            for (q, s) in seg.points.iter().enumerate() {
                let fp = mesh.facet_point(f, 0, s[0]);
                let x = fp.x;
                let n = vec2(fp.normal);
                let w = seg.weights[q] * fp.ds;
                let b = vec2((coeffs.b_flow)(x));
                let rho = (coeffs.rho)(x);
                let c = (coeffs.c_s)(x);
                let gu = (exact.grad)(x);
                let (v0, g0, d0) = traces[0][q];
                if boundary {
                    if with_b_facets {
                        let jn = (v0 - vec2((exact.value)(x))).dot(&n);
                        let avg_div = d0 - gu.trace();
                        b_h += w * rho * c * c * (coeffs.lambda_n / h * jn * jn - 2.0 * avg_div * jn);
                    }
                    continue;
                }
                let (v1, g1, d1) = traces[1][q];
                if with_a_facets {
                    let jb = (v0 - v1) * b.dot(&n);
                    let avg_dbu = (g0 + g1) * b * 0.5 - gu * b;
                    a_h += w * rho * (coeffs.lambda_b / h * jb.norm_squared() - 2.0 * avg_dbu.dot(&jb));
                }
                if with_b_facets {
                    let jn = (v0 - v1).dot(&n);
                    let avg_div = 0.5 * (d0 + d1) - gu.trace();
                    b_h += w * rho * c * c * (coeffs.lambda_n / h * jn * jn - 2.0 * avg_div * jn);
                }
            }
        }
    }
    if method == Method::M2 {
        b_h = projected_b(u_h, exact, coeffs)?;
    }
    Ok(ErrorNorms { l2_error: l2.sqrt(), xh_error: (a_h + b_h).max(0.0).sqrt(), l2_norm: norm.sqrt() })
}

/// `b_pp(e, e)` with `Pi div e` obtained from the weighted mass system on
/// the pseudo-pressure space.
fn projected_b(u_h: &DiscreteField, exact: &ExactSolution, coeffs: &CoefficientSet) -> Result<f64> {
    let space = &u_h.space;
    let mesh = &space.mesh;
    let pp = Arc::new(FeSpace::pseudo_pressure(mesh.clone(), space.degree)?);
    let order = data_quadrature_order(space.degree, mesh.geom_order);
    let tri = triangle_rule(order)?;
    let seg = segment_rule(order)?;
    let weight = |x: Point| {
        let c = (coeffs.c_s)(x);
        (coeffs.rho)(x) * c * c
    };
    let np = pp.ndof();
    let mut mass = TripletBuilder::new(np);
    let mut rhs = vec![0.0; np];
    for e in 0..mesh.num_triangles() {
        let geo = pp.map_evals(e, &tri.points);
        let ps = pp.eval_scalar(e, &tri.points, &geo);
        let vals = u_h.eval_vector(e, &tri.points);
        let dofs = pp.element_dofs(e);
        for q in 0..tri.len() {
            let x = geo[q].x;
            let w = tri.weights[q] * geo[q].det.abs() * weight(x);
            let derr = vals[q].2 - exact.div(x);
            for a in 0..ps.nbasis {
                let pa = ps.value[ps.idx(q, a)];
                rhs[dofs[a]] += w * derr * pa;
                for b in 0..ps.nbasis {
                    mass.push(dofs[a], dofs[b], w * pa * ps.value[ps.idx(q, b)]);
                }
            }
        }
    }
    let pi = DiscreteField::new(pp.clone(), solve(&LinearSystem::new(mass.build(), rhs.clone()))?);
    // (rho c^2 Pi div e, Pi div e) = pi . rhs since pi solves the mass system
    let mut value: f64 = pi.coeffs.iter().zip(&rhs).map(|(a, b)| a * b).sum();
    for (f, facet) in mesh.facets.iter().enumerate() {
        if !facet.is_boundary() {
            continue;
        }
        let h = mesh.facet_diameter(f);
        let e = facet.owner.element;
        let fps: Vec<_> = seg.points.iter().map(|s| mesh.facet_point(f, 0, s[0])).collect();
        let xis: Vec<Point> = fps.iter().map(|fp| fp.xi).collect();
        let vals = u_h.eval_vector(e, &xis);
        let pis = pi.eval_scalar(e, &xis);
        for (q, fp) in fps.iter().enumerate() {
            let w = seg.weights[q] * fp.ds * weight(fp.x);
            let en = (vals[q].0 - vec2((exact.value)(fp.x))).dot(&vec2(fp.normal));
            value += w * (coeffs.lambda_n / h * en * en - 2.0 * pis[q].0 * en);
        }
    }
    Ok(value)
}
