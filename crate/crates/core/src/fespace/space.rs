use std::sync::Arc;

use nalgebra::{Matrix2, Vector2};

use super::reference::{BdmElement, LagrangeElement};
use crate::error::{Error, Result};
use crate::mesh::{MapEval, Mesh, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// Continuous `[P^p]^2` (M1, M2 velocity).
    VectorLagrange,
    /// Continuous `P^p` (M2 pseudo-pressure).
    ScalarLagrange,
    /// Fully discontinuous `[P^p]^2`, Piola-mapped on curved elements (M4).
    VectorDg,
    /// Normal-continuous BDM space with `u . n = 0` on the boundary (M3).
    HdivBdm,
}

impl Family {
    pub fn is_vector(self) -> bool {
        !matches!(self, Family::ScalarLagrange)
    }
}

#[derive(Debug, Clone)]
enum RefElement {
    Lagrange(LagrangeElement),
    Bdm(BdmElement),
}

/// Global finite element space on a mesh.
///
/// `eval_vector` and `eval_scalar` return the restrictions of the *global*
/// basis functions to one element, so orientation signs of BDM edge moments
/// are already applied.
#[derive(Debug, Clone)]
pub struct FeSpace {
    pub family: Family,
    pub degree: usize,
    pub mesh: Arc<Mesh>,
    nloc: usize,
    ndof: usize,
    dofs: Vec<usize>,
    signs: Vec<f64>,
    constrained: Vec<usize>,
    reference: RefElement,
}

/// Physical values of vector basis functions at a set of points, indexed
/// `[point * nbasis + basis]`.
#[derive(Debug, Clone)]
pub struct VectorShapes {
    pub nbasis: usize,
    pub npoints: usize,
    pub value: Vec<Vector2<f64>>,
    /// `grad[(i, j)] = d v_i / d x_j`
    pub grad: Vec<Matrix2<f64>>,
    pub div: Vec<f64>,
}

impl VectorShapes {
    #[inline]
    pub fn idx(&self, point: usize, basis: usize) -> usize {
        point * self.nbasis + basis
    }
}

#[derive(Debug, Clone)]
pub struct ScalarShapes {
    pub nbasis: usize,
    pub npoints: usize,
    pub value: Vec<f64>,
    pub grad: Vec<Vector2<f64>>,
}

impl ScalarShapes {
    #[inline]
    pub fn idx(&self, point: usize, basis: usize) -> usize {
        point * self.nbasis + basis
    }
}

impl FeSpace {
    pub fn new(family: Family, mesh: Arc<Mesh>, degree: usize) -> Result<Self> {
        if degree == 0 || degree > 4 {
            return Err(Error::UnsupportedDegree(degree));
        }
        match family {
            Family::VectorLagrange | Family::ScalarLagrange => Ok(Self::lagrange(family, mesh, degree)),
            Family::VectorDg => Ok(Self::dg(mesh, degree)),
            Family::HdivBdm => Ok(Self::bdm(mesh, degree)),
        }
    }

    /// Scalar Lagrange space of degree `p - 1` paired with a degree-`p`
    /// velocity (Taylor-Hood).
    pub fn pseudo_pressure(mesh: Arc<Mesh>, velocity_degree: usize) -> Result<Self> {
        if velocity_degree < 2 {
            return Err(Error::DegreeTooLow { what: "Taylor-Hood pseudo-pressure", degree: velocity_degree, min: 2 });
        }
        Self::new(Family::ScalarLagrange, mesh, velocity_degree - 1)
    }

    fn lagrange(family: Family, mesh: Arc<Mesh>, k: usize) -> Self {
        let el = LagrangeElement::new(k);
        let ns = el.dim();
        let (nv, nf) = (mesh.num_vertices(), mesh.num_facets());
        let ni = el.num_interior();
        let nscalar = nv + nf * (k - 1) + mesh.num_triangles() * ni;
        let ncomp = if family == Family::VectorLagrange { 2 } else { 1 };
        let nloc = ncomp * ns;
        let mut dofs = Vec::with_capacity(mesh.num_triangles() * nloc);
        for (e, tri) in mesh.triangles.iter().enumerate() {
            let mut scalar = Vec::with_capacity(ns);
            scalar.extend_from_slice(tri);
            for (le, &f) in mesh.element_facets[e].iter().enumerate() {
                let aligned = local_edge_aligned(&mesh, e, le, f);
                for j in 0..k - 1 {
                    let jg = if aligned { j } else { k - 2 - j };
                    scalar.push(nv + f * (k - 1) + jg);
                }
            }
            for i in 0..ni {
                scalar.push(nv + nf * (k - 1) + e * ni + i);
            }
            for c in 0..ncomp {
                dofs.extend(scalar.iter().map(|&d| c * nscalar + d));
            }
        }
        let signs = vec![1.0; dofs.len()];
        FeSpace {
            family,
            degree: k,
            mesh,
            nloc,
            ndof: ncomp * nscalar,
            dofs,
            signs,
            constrained: Vec::new(),
            reference: RefElement::Lagrange(el),
        }
    }

    fn dg(mesh: Arc<Mesh>, k: usize) -> Self {
        let el = LagrangeElement::new(k);
        let nloc = 2 * el.dim();
        let nt = mesh.num_triangles();
        FeSpace {
            family: Family::VectorDg,
            degree: k,
            nloc,
            ndof: nt * nloc,
            dofs: (0..nt * nloc).collect(),
            signs: vec![1.0; nt * nloc],
            constrained: Vec::new(),
            reference: RefElement::Lagrange(el),
            mesh,
        }
    }

    fn bdm(mesh: Arc<Mesh>, p: usize) -> Self {
        let el = BdmElement::new(p);
        let ne = el.num_edge_dofs();
        let ni = el.num_interior();
        let nloc = el.dim();
        let nf = mesh.num_facets();
        let mut dofs = Vec::with_capacity(mesh.num_triangles() * nloc);
        let mut signs = Vec::with_capacity(mesh.num_triangles() * nloc);
        for e in 0..mesh.num_triangles() {
            for (le, &f) in mesh.element_facets[e].iter().enumerate() {
                let facet = &mesh.facets[f];
                let side = if facet.owner.element == e { 0 } else { 1 };
                debug_assert_eq!(facet.side(side).local_edge, le);
                // global normal points out of the lower-index owner
                let normal_sign = if side == 0 { 1.0 } else { -1.0 };
                let aligned = mesh.facet_aligned(f, side);
                for j in 0..ne {
                    dofs.push(f * ne + j);
                    let orient = if aligned || j % 2 == 0 { 1.0 } else { -1.0 };
                    signs.push(normal_sign * orient);
                }
            }
            for i in 0..ni {
                dofs.push(nf * ne + e * ni + i);
                signs.push(1.0);
            }
        }
        let ndof = nf * ne + mesh.num_triangles() * ni;
        let constrained = mesh
            .facets
            .iter()
            .enumerate()
            .filter(|(_, f)| f.is_boundary())
            .flat_map(|(fi, _)| (0..ne).map(move |j| fi * ne + j))
            .collect();
        FeSpace {
            family: Family::HdivBdm,
            degree: p,
            mesh,
            nloc,
            ndof,
            dofs,
            signs,
            constrained,
            reference: RefElement::Bdm(el),
        }
    }

    pub fn ndof(&self) -> usize {
        self.ndof
    }

    pub fn num_local(&self) -> usize {
        self.nloc
    }

    pub fn element_dofs(&self, element: usize) -> &[usize] {
        &self.dofs[element * self.nloc..(element + 1) * self.nloc]
    }

    pub fn element_signs(&self, element: usize) -> &[f64] {
        &self.signs[element * self.nloc..(element + 1) * self.nloc]
    }

    /// Dofs pinned to zero (boundary normal moments of the BDM space).
    pub fn constrained_dofs(&self) -> &[usize] {
        &self.constrained
    }

    pub fn lagrange_element(&self) -> Option<&LagrangeElement> {
        match &self.reference {
            RefElement::Lagrange(l) => Some(l),
            RefElement::Bdm(_) => None,
        }
    }

    pub fn bdm_element(&self) -> Option<&BdmElement> {
        match &self.reference {
            RefElement::Bdm(b) => Some(b),
            RefElement::Lagrange(_) => None,
        }
    }

    pub fn map_evals(&self, element: usize, points: &[Point]) -> Vec<MapEval> {
        let map = self.mesh.map(element);
        points.iter().map(|&xi| map.eval(xi)).collect()
    }

    /// Physical values, gradients and divergences of the vector basis
    /// functions on `element` at reference `points` with geometry `geo`.
    pub fn eval_vector(&self, element: usize, points: &[Point], geo: &[MapEval]) -> VectorShapes {
        assert!(self.family.is_vector(), "eval_vector on a scalar space");
        let n = self.nloc;
        let np = points.len();
        let mut out = VectorShapes {
            nbasis: n,
            npoints: np,
            value: vec![Vector2::zeros(); n * np],
            grad: vec![Matrix2::zeros(); n * np],
            div: vec![0.0; n * np],
        };
        let signs = self.element_signs(element);
        match &self.reference {
            RefElement::Lagrange(el) if self.family == Family::VectorLagrange => {
                let ns = el.dim();
                for (q, (&xi, g)) in points.iter().zip(geo).enumerate() {
                    let jinv_t = g.jac.try_inverse().expect("nonsingular Jacobian").transpose();
                    let (v, dv) = el.eval(xi);
                    for a in 0..ns {
                        let gp = jinv_t * Vector2::new(dv[a][0], dv[a][1]);
                        for c in 0..2 {
                            let i = out.idx(q, c * ns + a);
                            out.value[i][c] = v[a];
                            out.grad[i][(c, 0)] = gp[0];
                            out.grad[i][(c, 1)] = gp[1];
                            out.div[i] = gp[c];
                        }
                    }
                }
            }
            RefElement::Lagrange(el) => {
                // discontinuous: reference [P^p]^2 under the contravariant Piola map
                let ns = el.dim();
                for (q, (&xi, g)) in points.iter().zip(geo).enumerate() {
                    let piola = Piola::new(g);
                    let (v, dv) = el.eval(xi);
                    for a in 0..ns {
                        for c in 0..2 {
                            let mut vr = Vector2::zeros();
                            vr[c] = v[a];
                            let mut dvr = Matrix2::zeros();
                            dvr[(c, 0)] = dv[a][0];
                            dvr[(c, 1)] = dv[a][1];
                            let i = out.idx(q, c * ns + a);
                            (out.value[i], out.grad[i], out.div[i]) = piola.apply(&vr, &dvr, 1.0);
                        }
                    }
                }
            }
            RefElement::Bdm(el) => {
                for (q, (&xi, g)) in points.iter().zip(geo).enumerate() {
                    let piola = Piola::new(g);
                    let (v, dv) = el.eval(xi);
                    for a in 0..n {
                        let i = out.idx(q, a);
                        (out.value[i], out.grad[i], out.div[i]) = piola.apply(&v[a], &dv[a], signs[a]);
                    }
                }
            }
        }
        out
    }

    pub fn eval_scalar(&self, element: usize, points: &[Point], geo: &[MapEval]) -> ScalarShapes {
        assert_eq!(self.family, Family::ScalarLagrange, "eval_scalar on a vector space");
        debug_assert!(element < self.mesh.num_triangles());
        let el = self.lagrange_element().expect("Lagrange reference element");
        let n = self.nloc;
        let np = points.len();
        let mut out = ScalarShapes {
            nbasis: n,
            npoints: np,
            value: vec![0.0; n * np],
            grad: vec![Vector2::zeros(); n * np],
        };
        for (q, (&xi, g)) in points.iter().zip(geo).enumerate() {
            let jinv_t = g.jac.try_inverse().expect("nonsingular Jacobian").transpose();
            let (v, dv) = el.eval(xi);
            for a in 0..n {
                let i = out.idx(q, a);
                out.value[i] = v[a];
                out.grad[i] = jinv_t * Vector2::new(dv[a][0], dv[a][1]);
            }
        }
        out
    }
}

/// Contravariant Piola map `v = J v_ref / det J` at one point, with the
/// physical gradient including the derivatives of `J` on curved elements.
pub(crate) struct Piola {
    jac: Matrix2<f64>,
    jinv: Matrix2<f64>,
    det: f64,
    /// `dj[m][(i, k)] = d^2 x_i / dxi_k dxi_m`
    dj: [Matrix2<f64>; 2],
    ddet: [f64; 2],
}

impl Piola {
    pub(crate) fn new(g: &MapEval) -> Self {
        let jinv = g.jac.try_inverse().expect("nonsingular Jacobian");
        let dj = [0, 1].map(|m| Matrix2::new(g.hess[0][(0, m)], g.hess[0][(1, m)], g.hess[1][(0, m)], g.hess[1][(1, m)]));
        let ddet = [0, 1].map(|m| g.det * (jinv * dj[m]).trace());
        Piola { jac: g.jac, jinv, det: g.det, dj, ddet }
    }

    /// Value, gradient and divergence of `sign * P(v_ref)`; `dv_ref[(i, m)] = d v_ref_i / dxi_m`.
    pub(crate) fn apply(&self, v: &Vector2<f64>, dv: &Matrix2<f64>, sign: f64) -> (Vector2<f64>, Matrix2<f64>, f64) {
        let det = self.det;
        let jv = self.jac * v;
        let mut dref = Matrix2::zeros();
        for m in 0..2 {
            let col = self.dj[m] * v / det + self.jac * dv.column(m) / det - jv * self.ddet[m] / (det * det);
            dref.set_column(m, &col);
        }
        (jv * (sign / det), dref * self.jinv * sign, sign * dv.trace() / det)
    }

    /// Reference field whose image is the physical vector `v`.
    pub(crate) fn pull_back(&self, v: &Vector2<f64>) -> Vector2<f64> {
        self.jinv * v * self.det
    }
}

fn local_edge_aligned(mesh: &Mesh, element: usize, local_edge: usize, facet: usize) -> bool {
    let f = &mesh.facets[facet];
    let side = if f.owner.element == element && f.owner.local_edge == local_edge { 0 } else { 1 };
    mesh.facet_aligned(facet, side)
}

pub fn build_space(family: Family, mesh: Arc<Mesh>, degree: usize) -> Result<FeSpace> {
    FeSpace::new(family, mesh, degree)
}
