use std::sync::Arc;

use nalgebra::{Matrix2, Vector2};

use super::reference::edge_test;
use super::space::{Family, FeSpace, Piola};
use crate::error::{Error, Result};
use crate::linalg::{solve, LinearSystem, TripletBuilder};
use crate::mesh::Point;
use crate::quadrature::{segment_rule, triangle_rule};

/// Coefficient vector over a finite element space.
#[derive(Debug, Clone)]
pub struct DiscreteField {
    pub space: Arc<FeSpace>,
    pub coeffs: Vec<f64>,
}

impl DiscreteField {
    pub fn new(space: Arc<FeSpace>, coeffs: Vec<f64>) -> Self {
        assert_eq!(coeffs.len(), space.ndof());
        DiscreteField { space, coeffs }
    }

    pub fn zero(space: Arc<FeSpace>) -> Self {
        let n = space.ndof();
        DiscreteField { space, coeffs: vec![0.0; n] }
    }

    /// Value, gradient and divergence at reference points of `element`.
    pub fn eval_vector(&self, element: usize, points: &[Point]) -> Vec<(Vector2<f64>, Matrix2<f64>, f64)> {
        let geo = self.space.map_evals(element, points);
        let sh = self.space.eval_vector(element, points, &geo);
        let dofs = self.space.element_dofs(element);
        (0..points.len())
            .map(|q| {
                let mut v = Vector2::zeros();
                let mut g = Matrix2::zeros();
                let mut d = 0.0;
                for (a, &dof) in dofs.iter().enumerate() {
                    let c = self.coeffs[dof];
                    let i = sh.idx(q, a);
                    v += sh.value[i] * c;
                    g += sh.grad[i] * c;
                    d += sh.div[i] * c;
                }
                (v, g, d)
            })
            .collect()
    }

    pub fn eval_scalar(&self, element: usize, points: &[Point]) -> Vec<(f64, Vector2<f64>)> {
        let geo = self.space.map_evals(element, points);
        let sh = self.space.eval_scalar(element, points, &geo);
        let dofs = self.space.element_dofs(element);
        (0..points.len())
            .map(|q| {
                let mut v = 0.0;
                let mut g = Vector2::zeros();
                for (a, &dof) in dofs.iter().enumerate() {
                    let i = sh.idx(q, a);
                    v += sh.value[i] * self.coeffs[dof];
                    g += sh.grad[i] * self.coeffs[dof];
                }
                (v, g)
            })
            .collect()
    }

    /// Vector value at a physical point, if it lies in the mesh.
    pub fn value_at(&self, x: Point) -> Option<[f64; 2]> {
        let (e, xi) = self.space.mesh.locate(x)?;
        let (v, _, _) = self.eval_vector(e, &[xi])[0];
        Some([v[0], v[1]])
    }

    /// Sets the constrained dofs of the space to zero.
    pub fn zero_constrained(&mut self) {
        for &i in self.space.constrained_dofs() {
            self.coeffs[i] = 0.0;
        }
    }
}

/// Nodal interpolation for Lagrange/DG vector spaces, BDM interpolation for
/// the H(div) space.
pub fn interpolate(space: &Arc<FeSpace>, f: &dyn Fn(Point) -> [f64; 2]) -> Result<DiscreteField> {
    match space.family {
        Family::HdivBdm => bdm_interpolate(space, f),
        Family::VectorLagrange | Family::VectorDg => {
            let el = space.lagrange_element().expect("Lagrange element");
            let ns = el.dim();
            let piola = space.family == Family::VectorDg;
            let mut coeffs = vec![0.0; space.ndof()];
            for e in 0..space.mesh.num_triangles() {
                let map = space.mesh.map(e);
                let dofs = space.element_dofs(e);
                for (a, node) in el.nodes.iter().enumerate() {
                    let ev = map.eval(*node);
                    let mut v = Vector2::from(f(ev.x));
                    if piola {
                        v = Piola::new(&ev).pull_back(&v);
                    }
                    coeffs[dofs[a]] = v[0];
                    coeffs[dofs[ns + a]] = v[1];
                }
            }
            Ok(DiscreteField::new(space.clone(), coeffs))
        }
        Family::ScalarLagrange => Err(Error::Precondition("vector interpolation into a scalar space".into())),
    }
}

pub fn interpolate_scalar(space: &Arc<FeSpace>, f: &dyn Fn(Point) -> f64) -> Result<DiscreteField> {
    if space.family != Family::ScalarLagrange {
        return Err(Error::Precondition("scalar interpolation into a vector space".into()));
    }
    let el = space.lagrange_element().expect("Lagrange element");
    let mut coeffs = vec![0.0; space.ndof()];
    for e in 0..space.mesh.num_triangles() {
        let map = space.mesh.map(e);
        for (a, node) in el.nodes.iter().enumerate() {
            coeffs[space.element_dofs(e)[a]] = f(map.point(*node));
        }
    }
    Ok(DiscreteField::new(space.clone(), coeffs))
}

/// Element-wise BDM interpolation: matches the normal moments of `v` against
/// `P^p` on every facet and the interior moments against `N^{p-2}`.
///
/// Constrained boundary dofs keep their interpolated values; call
/// [`DiscreteField::zero_constrained`] to impose `u . n = 0` strongly.
pub fn bdm_interpolate(space: &Arc<FeSpace>, v: &dyn Fn(Point) -> [f64; 2]) -> Result<DiscreteField> {
    let el = space
        .bdm_element()
        .ok_or_else(|| Error::Precondition("bdm_interpolate needs an HdivBdm space".into()))?;
    let mesh = &space.mesh;
    let p = space.degree;
    let g = mesh.geom_order;
    let order = 2 * p + 2 * g + 4;
    let seg = segment_rule(order)?;
    let tri = triangle_rule(order)?;
    let ni = el.num_interior();
    let ne = el.num_edge_dofs();
    let mut coeffs = vec![0.0; space.ndof()];
    for e in 0..mesh.num_triangles() {
        let map = mesh.map(e);
        let dofs = space.element_dofs(e);
        let signs = space.element_signs(e);
        for (k, &f) in mesh.element_facets[e].iter().enumerate() {
            if mesh.facets[f].owner.element != e {
                continue;
            }
            for j in 0..ne {
                let mut m = 0.0;
                for (s, w) in seg.iter() {
                    let fp = map.edge_point(k, s[0]);
                    let val = v(fp.x);
                    m += w * (val[0] * fp.normal[0] + val[1] * fp.normal[1]) * fp.ds * edge_test(j, s[0]);
                }
                let a = k * ne + j;
                coeffs[dofs[a]] = signs[a] * m;
            }
        }
        let mut moments = vec![0.0; ni];
        for (xi, w) in tri.iter() {
            let ev = map.eval(*xi);
            if ev.det <= 0.0 {
                return Err(Error::SingularLocalMatrix { element: e });
            }
            if ev.jac.try_inverse().is_none() {
                return Err(Error::SingularLocalMatrix { element: e });
            }
            let vr = Piola::new(&ev).pull_back(&Vector2::from(v(ev.x)));
            for (r, phi) in el.interior_test_values(*xi).into_iter().enumerate() {
                moments[r] += w * (vr[0] * phi[0] + vr[1] * phi[1]);
            }
        }
        for (r, m) in moments.into_iter().enumerate() {
            let a = 3 * ne + r;
            coeffs[dofs[a]] = signs[a] * m;
        }
    }
    Ok(DiscreteField::new(space.clone(), coeffs))
}

/// Weighted L2 projection of a scalar function onto a scalar Lagrange space:
/// `(w u_h, q) = (w f, q)` for all `q`.
pub fn l2_project(
    space: &Arc<FeSpace>,
    f: &dyn Fn(Point) -> f64,
    weight: &dyn Fn(Point) -> f64,
) -> Result<DiscreteField> {
    if space.family != Family::ScalarLagrange {
        return Err(Error::Precondition("l2_project needs a scalar Lagrange space".into()));
    }
    let mesh = &space.mesh;
    let order = 2 * space.degree + 2 * mesh.geom_order + 4;
    let rule = triangle_rule(order)?;
    let n = space.ndof();
    let mut mass = TripletBuilder::new(n);
    let mut rhs = vec![0.0; n];
    for e in 0..mesh.num_triangles() {
        let geo = space.map_evals(e, &rule.points);
        let sh = space.eval_scalar(e, &rule.points, &geo);
        let dofs = space.element_dofs(e);
        for (q, w) in rule.weights.iter().enumerate() {
            let x = geo[q].x;
            let dx = w * geo[q].det.abs() * weight(x);
            let fx = f(x);
            for a in 0..sh.nbasis {
                let va = sh.value[sh.idx(q, a)];
                rhs[dofs[a]] += dx * fx * va;
                for b in 0..sh.nbasis {
                    mass.push(dofs[a], dofs[b], dx * va * sh.value[sh.idx(q, b)]);
                }
            }
        }
    }
    let x = solve(&LinearSystem::new(mass.build(), rhs))?;
    Ok(DiscreteField::new(space.clone(), x))
}
