use rayon::prelude::*;

use super::trace::FacetTrace;
use super::{data_quadrature_order, CoefficientSet};
use crate::error::{Error, Result};
use crate::fespace::{default_quadrature_order, FeSpace, VectorShapes};
use crate::functions::VectorFn;
use crate::linalg::{SparseSymMatrix, TripletBuilder};
use crate::mesh::MapEval;
use crate::quadrature::{segment_rule, triangle_rule, TriangleRule};

/// Which facets a facet-term assembly visits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FacetFilter {
    All,
    Interior,
    Boundary,
}

impl FacetFilter {
    fn accepts(self, boundary: bool) -> bool {
        match self {
            FacetFilter::All => true,
            FacetFilter::Interior => !boundary,
            FacetFilter::Boundary => boundary,
        }
    }
}

type Triplets = Vec<(usize, usize, f64)>;

fn require_vector(space: &FeSpace) -> Result<()> {
    if space.family.is_vector() {
        Ok(())
    } else {
        Err(Error::Precondition("vector-valued space required".into()))
    }
}

pub(crate) struct ElementQuad {
    pub geo: Vec<MapEval>,
    pub shapes: VectorShapes,
    /// Quadrature weight times `|det J|`.
    pub dx: Vec<f64>,
}

pub(crate) fn element_quad(space: &FeSpace, element: usize, rule: &TriangleRule) -> ElementQuad {
    let geo = space.map_evals(element, &rule.points);
    let shapes = space.eval_vector(element, &rule.points, &geo);
    let dx = rule.weights.iter().zip(&geo).map(|(w, g)| w * g.det.abs()).collect();
    ElementQuad { geo, shapes, dx }
}

/// Element loop in parallel; triplets are concatenated in element order so
/// the result does not depend on scheduling.
fn assemble_elements<F>(space: &FeSpace, rule: &TriangleRule, local: F) -> SparseSymMatrix
where
    F: Fn(&ElementQuad, usize, usize, &mut [f64]) + Sync,
{
    let n = space.num_local();
    let parts: Vec<Triplets> = (0..space.mesh.num_triangles())
        .into_par_iter()
        .map(|e| {
            let eq = element_quad(space, e, rule);
            let mut k = vec![0.0; n * n];
            for q in 0..eq.dx.len() {
                local(&eq, q, n, &mut k);
            }
            let dofs = space.element_dofs(e);
            let mut out = Vec::with_capacity(n * n);
            for a in 0..n {
                for b in 0..n {
                    out.push((dofs[a], dofs[b], k[a * n + b]));
                }
            }
            out
        })
        .collect();
    collect(space.ndof(), parts)
}

fn collect(n: usize, parts: Vec<Triplets>) -> SparseSymMatrix {
    let mut tb = TripletBuilder::new(n);
    for part in parts {
        for (i, j, v) in part {
            tb.push(i, j, v);
        }
    }
    tb.build()
}

fn volume_rule(space: &FeSpace) -> Result<TriangleRule> {
    triangle_rule(default_quadrature_order(space.degree, space.mesh.geom_order))
}

/// `sum_T int_T rho [d_b u . d_b v + |b|_inf^2 u . v]`.
pub fn assemble_a_volume(space: &FeSpace, coeffs: &CoefficientSet) -> Result<SparseSymMatrix> {
    require_vector(space)?;
    let rule = volume_rule(space)?;
    let b2 = coeffs.b_inf * coeffs.b_inf;
    Ok(assemble_elements(space, &rule, |eq, q, n, k| {
        let x = eq.geo[q].x;
        let rho = (coeffs.rho)(x) * eq.dx[q];
        let bf = (coeffs.b_flow)(x);
        let b = nalgebra::Vector2::new(bf[0], bf[1]);
        let sh = &eq.shapes;
        let dbu: Vec<_> = (0..n).map(|a| sh.grad[sh.idx(q, a)] * b).collect();
        for a in 0..n {
            let va = sh.value[sh.idx(q, a)];
            for c in 0..n {
                let vc = sh.value[sh.idx(q, c)];
                k[a * n + c] += rho * (dbu[a].dot(&dbu[c]) + b2 * va.dot(&vc));
            }
        }
    }))
}

/// `sum_T int_T rho c^2 div u div v`.
pub fn assemble_b_volume(space: &FeSpace, coeffs: &CoefficientSet) -> Result<SparseSymMatrix> {
    require_vector(space)?;
    let rule = volume_rule(space)?;
    Ok(assemble_elements(space, &rule, |eq, q, n, k| {
        let x = eq.geo[q].x;
        let c = (coeffs.c_s)(x);
        let w = (coeffs.rho)(x) * c * c * eq.dx[q];
        let sh = &eq.shapes;
        for a in 0..n {
            let da = sh.div[sh.idx(q, a)];
            for b in 0..n {
                k[a * n + b] += w * da * sh.div[sh.idx(q, b)];
            }
        }
    }))
}

fn assemble_facets<F>(space: &FeSpace, coeffs: &CoefficientSet, filter: FacetFilter, local: F) -> Result<SparseSymMatrix>
where
    F: Fn(&FacetTrace, usize, &mut [f64]) + Sync,
{
    require_vector(space)?;
    let rule = segment_rule(default_quadrature_order(space.degree, space.mesh.geom_order))?;
    let mesh = &space.mesh;
    let parts: Vec<Triplets> = (0..mesh.num_facets())
        .into_par_iter()
        .filter(|&f| filter.accepts(mesh.facets[f].is_boundary()))
        .map(|f| {
            let tr = FacetTrace::new(space, coeffs, f, &rule);
            let n = tr.dofs.len();
            let mut k = vec![0.0; n * n];
            for q in 0..tr.points.len() {
                local(&tr, q, &mut k);
            }
            let mut out = Vec::with_capacity(n * n);
            for a in 0..n {
                for b in 0..n {
                    out.push((tr.dofs[a], tr.dofs[b], k[a * n + b]));
                }
            }
            out
        })
        .collect();
    Ok(collect(space.ndof(), parts))
}

/// Streamline interior penalty terms
/// `rho lambda_b / h [[u]]_b . [[v]]_b - rho {d_b u} . [[v]]_b - rho {d_b v} . [[u]]_b`.
pub fn assemble_a_facets(space: &FeSpace, coeffs: &CoefficientSet, filter: FacetFilter) -> Result<SparseSymMatrix> {
    assemble_facets(space, coeffs, filter, |tr, q, k| {
        let tp = &tr.points[q];
        let n = tr.dofs.len();
        let rho = (coeffs.rho)(tp.x) * tp.weight;
        let pen = coeffs.lambda_b / tr.h;
        for a in 0..n {
            for b in 0..n {
                k[a * n + b] += rho
                    * (pen * tp.jump_b[a].dot(&tp.jump_b[b])
                        - tp.avg_dbu[a].dot(&tp.jump_b[b])
                        - tp.avg_dbu[b].dot(&tp.jump_b[a]));
            }
        }
    })
}

/// Normal-jump penalty and Nitsche terms
/// `rho c^2 (lambda_n / h [[u]]_n [[v]]_n - {div u} [[v]]_n - {div v} [[u]]_n)`.
pub fn assemble_b_facets(space: &FeSpace, coeffs: &CoefficientSet, filter: FacetFilter) -> Result<SparseSymMatrix> {
    assemble_facets(space, coeffs, filter, |tr, q, k| {
        let tp = &tr.points[q];
        let n = tr.dofs.len();
        let c = (coeffs.c_s)(tp.x);
        let w = (coeffs.rho)(tp.x) * c * c * tp.weight;
        let pen = coeffs.lambda_n / tr.h;
        for a in 0..n {
            for b in 0..n {
                k[a * n + b] +=
                    w * (pen * tp.jump_n[a] * tp.jump_n[b] - tp.avg_div[a] * tp.jump_n[b] - tp.avg_div[b] * tp.jump_n[a]);
            }
        }
    })
}

/// Volume terms of `a` plus streamline penalty terms on interior facets. On
/// the boundary `b . n = 0`, so boundary facets contribute nothing.
pub fn assemble_a_dg(space: &FeSpace, coeffs: &CoefficientSet) -> Result<SparseSymMatrix> {
    let vol = assemble_a_volume(space, coeffs)?;
    let fac = assemble_a_facets(space, coeffs, FacetFilter::Interior)?;
    Ok(vol.lin_comb(1.0, &fac, 1.0))
}

/// Volume terms of `b` plus normal-jump and Nitsche terms on all facets.
pub fn assemble_b_dg(space: &FeSpace, coeffs: &CoefficientSet) -> Result<SparseSymMatrix> {
    let vol = assemble_b_volume(space, coeffs)?;
    let fac = assemble_b_facets(space, coeffs, FacetFilter::All)?;
    Ok(vol.lin_comb(1.0, &fac, 1.0))
}

/// Load vector `<f, v>` for every basis function.
pub fn assemble_rhs(space: &FeSpace, f: &VectorFn) -> Result<Vec<f64>> {
    require_vector(space)?;
    let rule = triangle_rule(data_quadrature_order(space.degree, space.mesh.geom_order))?;
    let n = space.num_local();
    let parts: Vec<Vec<f64>> = (0..space.mesh.num_triangles())
        .into_par_iter()
        .map(|e| {
            let eq = element_quad(space, e, &rule);
            let mut local = vec![0.0; n];
            for q in 0..eq.dx.len() {
                let fx = f(eq.geo[q].x);
                for (a, l) in local.iter_mut().enumerate() {
                    let v = eq.shapes.value[eq.shapes.idx(q, a)];
                    *l += eq.dx[q] * (fx[0] * v[0] + fx[1] * v[1]);
                }
            }
            local
        })
        .collect();
    let mut rhs = vec![0.0; space.ndof()];
    for (e, local) in parts.into_iter().enumerate() {
        for (a, &d) in space.element_dofs(e).iter().enumerate() {
            rhs[d] += local[a];
        }
    }
    Ok(rhs)
}
