use nalgebra::Vector2;

use super::CoefficientSet;
use crate::fespace::FeSpace;
use crate::mesh::Point;
use crate::quadrature::SegmentRule;

/// Traces of all basis functions supported on one facet.
///
/// `dofs` lists the owner's local dofs followed by the neighbour's. With
/// `n+` the owner normal and `sigma = +1` on the owner, `-1` on the
/// neighbour, a basis function `v` living on side `sigma` has
///
/// ```text
/// [[v]]_b = sigma (b . n+) v      [[v]]_n = sigma v . n+
/// {v} = v / 2                     ({v} = v on boundary facets)
/// ```
#[derive(Debug, Clone)]
pub struct FacetTrace {
    pub facet: usize,
    pub boundary: bool,
    /// Facet diameter used in the penalty terms.
    pub h: f64,
    pub dofs: Vec<usize>,
    /// Number of dofs contributed by the owner side.
    pub owner_dofs: usize,
    pub points: Vec<TracePoint>,
}

#[derive(Debug, Clone)]
pub struct TracePoint {
    pub x: Point,
    /// Quadrature weight times the facet line element.
    pub weight: f64,
    /// Owner outward unit normal.
    pub normal: Vector2<f64>,
    pub b: Vector2<f64>,
    pub avg_value: Vec<Vector2<f64>>,
    /// Average of the streamline derivative `(grad v) b`.
    pub avg_dbu: Vec<Vector2<f64>>,
    pub avg_div: Vec<f64>,
    pub jump_b: Vec<Vector2<f64>>,
    pub jump_n: Vec<f64>,
}

impl FacetTrace {
    pub fn new(space: &FeSpace, coeffs: &CoefficientSet, facet: usize, rule: &SegmentRule) -> FacetTrace {
        let mesh = &space.mesh;
        let f = &mesh.facets[facet];
        let boundary = f.is_boundary();
        let avg = if boundary { 1.0 } else { 0.5 };
        let sides: Vec<usize> = if boundary { vec![0] } else { vec![0, 1] };
        let nloc = space.num_local();
        let mut dofs = Vec::with_capacity(sides.len() * nloc);
        for &side in &sides {
            dofs.extend_from_slice(space.element_dofs(f.side(side).element));
        }
        let nb = dofs.len();
        let mut points: Vec<TracePoint> = rule
            .points
            .iter()
            .zip(&rule.weights)
            .map(|(s, w)| {
                let fp = mesh.facet_point(facet, 0, s[0]);
                let b = (coeffs.b_flow)(fp.x);
                TracePoint {
                    x: fp.x,
                    weight: w * fp.ds,
                    normal: Vector2::new(fp.normal[0], fp.normal[1]),
                    b: Vector2::new(b[0], b[1]),
                    avg_value: vec![Vector2::zeros(); nb],
                    avg_dbu: vec![Vector2::zeros(); nb],
                    avg_div: vec![0.0; nb],
                    jump_b: vec![Vector2::zeros(); nb],
                    jump_n: vec![0.0; nb],
                }
            })
            .collect();
        for &side in &sides {
            let element = f.side(side).element;
            let sigma = if side == 0 { 1.0 } else { -1.0 };
            let xis: Vec<Point> = rule.points.iter().map(|s| mesh.facet_point(facet, side, s[0]).xi).collect();
            let geo = space.map_evals(element, &xis);
            let sh = space.eval_vector(element, &xis, &geo);
            for (q, tp) in points.iter_mut().enumerate() {
                let bn = tp.b.dot(&tp.normal);
                for a in 0..nloc {
                    let i = sh.idx(q, a);
                    let k = side * nloc + a;
                    let v = sh.value[i];
                    tp.avg_value[k] = v * avg;
                    tp.avg_dbu[k] = sh.grad[i] * tp.b * avg;
                    tp.avg_div[k] = sh.div[i] * avg;
                    tp.jump_b[k] = v * (sigma * bn);
                    tp.jump_n[k] = sigma * v.dot(&tp.normal);
                }
            }
        }
        FacetTrace { facet, boundary, h: mesh.facet_diameter(facet), dofs, owner_dofs: nloc, points }
    }

    /// `([[u]]_b, [[u]]_n)` of the field with global coefficients `coeffs`
    /// at every quadrature point.
    pub fn field_jumps(&self, coeffs: &[f64]) -> Vec<(Vector2<f64>, f64)> {
        self.points
            .iter()
            .map(|tp| {
                let mut jb = Vector2::zeros();
                let mut jn = 0.0;
                for (k, &d) in self.dofs.iter().enumerate() {
                    jb += tp.jump_b[k] * coeffs[d];
                    jn += tp.jump_n[k] * coeffs[d];
                }
                (jb, jn)
            })
            .collect()
    }
}
