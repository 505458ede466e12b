use std::sync::Arc;

use nalgebra::DMatrix;

use super::assemble::{assemble_a_volume, assemble_rhs, element_quad};
use super::CoefficientSet;
use crate::error::{Error, Result};
use crate::fespace::{default_quadrature_order, Family, FeSpace};
use crate::functions::VectorFn;
use crate::linalg::{LinearSystem, TripletBuilder, DENSE_LIMIT};
use crate::mesh::Point;
use crate::quadrature::{segment_rule, triangle_rule};

/// Pseudo-pressure block system in the unknowns `(u_h, p_h)`, velocity first.
#[derive(Debug, Clone)]
pub struct M2System {
    pub velocity: Arc<FeSpace>,
    pub pressure: Arc<FeSpace>,
    pub system: LinearSystem,
}

impl M2System {
    pub fn num_velocity(&self) -> usize {
        self.velocity.ndof()
    }
}

type Triplets = Vec<(usize, usize, f64)>;

/// Sparse pieces of the block system.
struct Blocks {
    /// `<rho c^2 lambda_n / h (u . n), v . n>` on the boundary.
    nitsche: Triplets,
    /// `D[q, u] = (rho c^2 div u, q)`.
    div: Triplets,
    /// `E[q, u] = <rho c^2 u . n, q>` on the boundary.
    trace: Triplets,
    /// `M[q, r] = (rho c^2 q, r)`.
    mass: Triplets,
}

fn check_pair(vel: &FeSpace, pp: &FeSpace) -> Result<()> {
    if vel.family != Family::VectorLagrange || pp.family != Family::ScalarLagrange {
        return Err(Error::InvalidMethod("pseudo-pressure system needs VectorLagrange x ScalarLagrange".into()));
    }
    if vel.degree < 2 {
        return Err(Error::DegreeTooLow { what: "Taylor-Hood velocity", degree: vel.degree, min: 2 });
    }
    if pp.degree + 1 != vel.degree {
        return Err(Error::InvalidMethod(format!(
            "pseudo-pressure degree {} must be velocity degree {} minus one",
            pp.degree, vel.degree
        )));
    }
    let same = |a: &crate::mesh::Mesh, b: &crate::mesh::Mesh| a.vertices == b.vertices && a.triangles == b.triangles;
    if !Arc::ptr_eq(&vel.mesh, &pp.mesh) && !same(&vel.mesh, &pp.mesh) {
        return Err(Error::InvalidMethod("velocity and pseudo-pressure live on different meshes".into()));
    }
    Ok(())
}

fn weight(coeffs: &CoefficientSet, x: Point) -> f64 {
    let c = (coeffs.c_s)(x);
    (coeffs.rho)(x) * c * c
}

fn blocks(vel: &FeSpace, pp: &FeSpace, coeffs: &CoefficientSet) -> Result<Blocks> {
    let mesh = &vel.mesh;
    let order = default_quadrature_order(vel.degree, mesh.geom_order);
    let tri = triangle_rule(order)?;
    let seg = segment_rule(order)?;
    let mut out = Blocks { nitsche: Vec::new(), div: Vec::new(), trace: Vec::new(), mass: Vec::new() };
    for e in 0..mesh.num_triangles() {
        let eq = element_quad(vel, e, &tri);
        let ps = pp.eval_scalar(e, &tri.points, &eq.geo);
        let (ud, pd) = (vel.element_dofs(e), pp.element_dofs(e));
        for q in 0..eq.dx.len() {
            let w = weight(coeffs, eq.geo[q].x) * eq.dx[q];
            for (i, &qd) in pd.iter().enumerate() {
                let pv = ps.value[ps.idx(q, i)];
                for (a, &u) in ud.iter().enumerate() {
                    out.div.push((qd, u, w * pv * eq.shapes.div[eq.shapes.idx(q, a)]));
                }
                for (j, &rd) in pd.iter().enumerate() {
                    out.mass.push((qd, rd, w * pv * ps.value[ps.idx(q, j)]));
                }
            }
        }
    }
    for (f, facet) in mesh.facets.iter().enumerate() {
        if !facet.is_boundary() {
            continue;
        }
        let e = facet.owner.element;
        let fps: Vec<_> = seg.points.iter().map(|s| mesh.facet_point(f, 0, s[0])).collect();
        let xis: Vec<Point> = fps.iter().map(|fp| fp.xi).collect();
        let geo = vel.map_evals(e, &xis);
        let vs = vel.eval_vector(e, &xis, &geo);
        let ps = pp.eval_scalar(e, &xis, &geo);
        let (ud, pd) = (vel.element_dofs(e), pp.element_dofs(e));
        let pen = coeffs.lambda_n / mesh.facet_diameter(f);
        for (q, fp) in fps.iter().enumerate() {
            let w = weight(coeffs, fp.x) * seg.weights[q] * fp.ds;
            let un: Vec<f64> = (0..ud.len())
                .map(|a| {
                    let v = vs.value[vs.idx(q, a)];
                    v[0] * fp.normal[0] + v[1] * fp.normal[1]
                })
                .collect();
            for (a, &u) in ud.iter().enumerate() {
                for (b, &v) in ud.iter().enumerate() {
                    out.nitsche.push((u, v, w * pen * un[a] * un[b]));
                }
                for (i, &qd) in pd.iter().enumerate() {
                    out.trace.push((qd, u, w * un[a] * ps.value[ps.idx(q, i)]));
                }
            }
        }
    }
    Ok(out)
}

/// Assembles
///
/// ```text
/// [ -A + N     D^T - E^T ] [u]   [f]
/// [  D - E       -M      ] [p] = [0]
/// ```
///
/// with `A` the volume `a`-Gram matrix, `N` the boundary normal penalty, `D`
/// the weighted divergence coupling, `E` its boundary counterpart and `M`
/// the weighted pseudo-pressure mass matrix.
pub fn assemble_m2_system(
    vel: &Arc<FeSpace>,
    pp: &Arc<FeSpace>,
    coeffs: &CoefficientSet,
    f: &VectorFn,
) -> Result<M2System> {
    check_pair(vel, pp)?;
    let nu = vel.ndof();
    let n = nu + pp.ndof();
    let a = assemble_a_volume(vel, coeffs)?;
    let bl = blocks(vel, pp, coeffs)?;
    let mut tb = TripletBuilder::new(n);
    for (i, j, v) in a.triplets() {
        tb.push(i, j, -v);
    }
    for (i, j, v) in bl.nitsche {
        tb.push(i, j, v);
    }
    for (q, u, v) in bl.div {
        tb.push(nu + q, u, v);
        tb.push(u, nu + q, v);
    }
    for (q, u, v) in bl.trace {
        tb.push(nu + q, u, -v);
        tb.push(u, nu + q, -v);
    }
    for (q, r, v) in bl.mass {
        tb.push(nu + q, nu + r, -v);
    }
    let mut rhs = assemble_rhs(vel, f)?;
    rhs.resize(n, 0.0);
    Ok(M2System { velocity: vel.clone(), pressure: pp.clone(), system: LinearSystem::new(tb.build(), rhs) })
}

fn dense(rows: usize, cols: usize, t: &Triplets) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(rows, cols);
    for &(i, j, v) in t {
        m[(i, j)] += v;
    }
    m
}

/// Dense Gram matrix of
///
/// ```text
/// b_pp(u, v) = (rho c^2 Pi div u, Pi div v) + <rho c^2 lambda_n / h u.n, v.n>
///            - <rho c^2 Pi div u, v.n> - <rho c^2 Pi div v, u.n>
/// ```
///
/// with `Pi` the `rho c^2`-weighted projection onto the pseudo-pressure space.
pub fn assemble_bpp_dense(vel: &Arc<FeSpace>, pp: &Arc<FeSpace>, coeffs: &CoefficientSet) -> Result<DMatrix<f64>> {
    check_pair(vel, pp)?;
    let (nu, np) = (vel.ndof(), pp.ndof());
    if nu > DENSE_LIMIT {
        return Err(Error::SizeLimit { n: nu, limit: DENSE_LIMIT });
    }
    let bl = blocks(vel, pp, coeffs)?;
    let d = dense(np, nu, &bl.div);
    let e = dense(np, nu, &bl.trace);
    let m = dense(np, np, &bl.mass);
    let chol = m.cholesky().ok_or_else(|| Error::NotPositiveDefinite("pseudo-pressure mass matrix".into()))?;
    let mid = chol.solve(&d);
    let cross = e.transpose() * &mid;
    Ok(d.transpose() * &mid + dense(nu, nu, &bl.nitsche) - &cross - cross.transpose())
}
