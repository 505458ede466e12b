//! Simplicial meshes of the unit disc and the unit square.
//!
//! The disc is built from a hexagon fan and red refinement, with new boundary
//! vertices projected radially onto the circle. Elements with a boundary edge
//! carry a polynomial geometry map of degree `geom_order`: the affine map plus
//! an edge correction interpolating the circular arc at `geom_order + 1`
//! uniformly spaced arc-length points. All other elements stay affine.

use std::collections::HashMap;
use std::io::Write;

use nalgebra::{DMatrix, Matrix2, Vector2};

use crate::quadrature::triangle_rule;

pub type Point = [f64; 2];

/// Reference triangle vertices.
pub const REF_VERTICES: [Point; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

/// Local edge `k` is opposite local vertex `k` and runs from `LOCAL_EDGES[k][0]`
/// to `LOCAL_EDGES[k][1]` (counterclockwise).
pub const LOCAL_EDGES: [[usize; 2]; 3] = [[1, 2], [2, 0], [0, 1]];

const BARY_GRADS: [[f64; 2]; 3] = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    UnitDisc,
    UnitSquare,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FacetOwner {
    pub element: usize,
    pub local_edge: usize,
}

/// An edge of the mesh. `vertices` is sorted ascending and fixes the global
/// orientation of the facet parameter; `owner` has the lower element index.
#[derive(Debug, Clone, PartialEq)]
pub struct Facet {
    pub vertices: [usize; 2],
    pub owner: FacetOwner,
    pub neighbor: Option<FacetOwner>,
}

impl Facet {
    pub fn is_boundary(&self) -> bool {
        self.neighbor.is_none()
    }

    pub fn owners(&self) -> impl Iterator<Item = FacetOwner> + '_ {
        std::iter::once(self.owner).chain(self.neighbor)
    }

    pub fn side(&self, side: usize) -> FacetOwner {
        match side {
            0 => self.owner,
            _ => self.neighbor.expect("boundary facet has a single owner"),
        }
    }
}

/// Polynomial map from the reference triangle to one physical element.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometryMap {
    pub vertices: [Point; 3],
    corrections: Vec<EdgeCorrection>,
}

/// Edge bubble `sum_k c_k la lb^k`, `k = 1..g-1`, for the local edge `(a, b)`.
///
/// Term `k` has degree `k + 1` and, for a smooth boundary, a coefficient of
/// size `h^(k+1)`, so the `m`-th derivatives of the map stay `O(h^m)`.
/// Homogeneous lifts of degree `g` lose this scaling and the optimal rates.
#[derive(Debug, Clone, PartialEq)]
struct EdgeCorrection {
    edge: usize,
    coeffs: Vec<Point>,
}

#[derive(Debug, Clone, Copy)]
pub struct MapEval {
    pub x: Point,
    pub jac: Matrix2<f64>,
    pub det: f64,
    /// `hess[i]` is the Hessian of physical coordinate `i` w.r.t. the
    /// reference coordinates.
    pub hess: [Matrix2<f64>; 2],
}

/// Geometry of one facet quadrature point as seen from one owner element.
#[derive(Debug, Clone, Copy)]
pub struct FacetPoint {
    /// Reference coordinates in the owner element.
    pub xi: Point,
    pub x: Point,
    /// Unit outward normal of the owner element.
    pub normal: Point,
    /// `|dx/ds|` for the facet parameter `s in [0, 1]`.
    pub ds: f64,
}

fn pw(x: f64, n: i32) -> f64 {
    if n < 0 {
        0.0
    } else {
        x.powi(n)
    }
}

impl GeometryMap {
    pub fn affine(vertices: [Point; 3]) -> Self {
        GeometryMap { vertices, corrections: Vec::new() }
    }

    pub fn is_affine(&self) -> bool {
        self.corrections.is_empty()
    }

    /// Adds a correction so that local edge `edge` follows `curve(s)`,
    /// `s in [0, 1]` running from its first to its second local vertex,
    /// interpolated at `degree + 1` uniform parameter values.
    fn add_curved_edge(&mut self, edge: usize, degree: usize, curve: impl Fn(f64) -> Point) {
        if degree < 2 {
            return;
        }
        let [a, b] = LOCAL_EDGES[edge];
        let (va, vb) = (self.vertices[a], self.vertices[b]);
        let m = degree - 1;
        let mut mat = DMatrix::<f64>::zeros(m, m);
        let mut rhs = DMatrix::<f64>::zeros(m, 2);
        for j in 0..m {
            let s = (j + 1) as f64 / degree as f64;
            for k in 0..m {
                let kk = (k + 1) as i32;
                mat[(j, k)] = (1.0 - s) * s.powi(kk);
            }
            let c = curve(s);
            for d in 0..2 {
                rhs[(j, d)] = c[d] - ((1.0 - s) * va[d] + s * vb[d]);
            }
        }
        let sol = mat.lu().solve(&rhs).expect("edge interpolation matrix is nonsingular");
        let coeffs = (0..m).map(|k| [sol[(k, 0)], sol[(k, 1)]]).collect();
        self.corrections.push(EdgeCorrection { edge, coeffs });
    }

    pub fn point(&self, xi: Point) -> Point {
        self.eval(xi).x
    }

    pub fn eval(&self, xi: Point) -> MapEval {
        let lam = [1.0 - xi[0] - xi[1], xi[0], xi[1]];
        let v = &self.vertices;
        let mut x = [0.0; 2];
        for d in 0..2 {
            x[d] = lam[0] * v[0][d] + lam[1] * v[1][d] + lam[2] * v[2][d];
        }
        let mut jac = Matrix2::new(
            v[1][0] - v[0][0],
            v[2][0] - v[0][0],
            v[1][1] - v[0][1],
            v[2][1] - v[0][1],
        );
        let mut hess = [Matrix2::zeros(), Matrix2::zeros()];
        for corr in &self.corrections {
            let [a, b] = LOCAL_EDGES[corr.edge];
            let (la, lb) = (lam[a], lam[b]);
            let ga = Vector2::from(BARY_GRADS[a]);
            let gb = Vector2::from(BARY_GRADS[b]);
            for (k, c) in corr.coeffs.iter().enumerate() {
                let beta = k as i32 + 1;
                let alpha = 1;
                let (af, bf) = (alpha as f64, beta as f64);
                let m = pw(la, alpha) * pw(lb, beta);
                let grad = ga * (af * pw(la, alpha - 1) * pw(lb, beta))
                    + gb * (bf * pw(la, alpha) * pw(lb, beta - 1));
                let h2 = ga * ga.transpose() * (af * (af - 1.0) * pw(la, alpha - 2) * pw(lb, beta))
                    + (ga * gb.transpose() + gb * ga.transpose())
                        * (af * bf * pw(la, alpha - 1) * pw(lb, beta - 1))
                    + gb * gb.transpose() * (bf * (bf - 1.0) * pw(la, alpha) * pw(lb, beta - 2));
                for d in 0..2 {
                    x[d] += c[d] * m;
                    jac[(d, 0)] += c[d] * grad[0];
                    jac[(d, 1)] += c[d] * grad[1];
                    hess[d] += h2 * c[d];
                }
            }
        }
        MapEval { x, jac, det: jac.determinant(), hess }
    }

    /// Geometry at the point of local edge `edge` with local parameter `s`.
    pub fn edge_point(&self, edge: usize, s: f64) -> FacetPoint {
        let [a, b] = LOCAL_EDGES[edge];
        let (ra, rb) = (REF_VERTICES[a], REF_VERTICES[b]);
        let xi = [ra[0] + s * (rb[0] - ra[0]), ra[1] + s * (rb[1] - ra[1])];
        let ev = self.eval(xi);
        let t = ev.jac * Vector2::new(rb[0] - ra[0], rb[1] - ra[1]);
        let len = t.norm();
        FacetPoint { xi, x: ev.x, normal: [t[1] / len, -t[0] / len], ds: len }
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<Point>,
    pub triangles: Vec<[usize; 3]>,
    pub facets: Vec<Facet>,
    /// Facet index of each local edge.
    pub element_facets: Vec<[usize; 3]>,
    pub geom_order: usize,
    pub domain: Domain,
    /// Interior arc nodes (global facet orientation) of curved boundary
    /// facets; empty for straight facets.
    pub curved_edge_nodes: Vec<Vec<Point>>,
    maps: Vec<GeometryMap>,
}

fn arc_between(a: Point, b: Point) -> impl Fn(f64) -> Point {
    let ta = a[1].atan2(a[0]);
    let mut d = b[1].atan2(b[0]) - ta;
    if d > std::f64::consts::PI {
        d -= 2.0 * std::f64::consts::PI;
    } else if d <= -std::f64::consts::PI {
        d += 2.0 * std::f64::consts::PI;
    }
    move |s| {
        let t = ta + s * d;
        [t.cos(), t.sin()]
    }
}

fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

impl Mesh {
    fn build(vertices: Vec<Point>, triangles: Vec<[usize; 3]>, domain: Domain, geom_order: usize) -> Mesh {
        assert!(geom_order >= 1);
        let mut index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut facets: Vec<Facet> = Vec::new();
        let mut element_facets = Vec::with_capacity(triangles.len());
        for (e, tri) in triangles.iter().enumerate() {
            let mut ef = [0; 3];
            for (k, &[a, b]) in LOCAL_EDGES.iter().enumerate() {
                let (va, vb) = (tri[a], tri[b]);
                let key = (va.min(vb), va.max(vb));
                let owner = FacetOwner { element: e, local_edge: k };
                let f = *index.entry(key).or_insert_with(|| {
                    facets.push(Facet { vertices: [key.0, key.1], owner, neighbor: None });
                    facets.len() - 1
                });
                if facets[f].owner != owner {
                    assert!(facets[f].neighbor.is_none(), "non-manifold edge");
                    facets[f].neighbor = Some(owner);
                }
                ef[k] = f;
            }
            element_facets.push(ef);
        }

        let mut maps: Vec<GeometryMap> = triangles
            .iter()
            .map(|t| GeometryMap::affine([vertices[t[0]], vertices[t[1]], vertices[t[2]]]))
            .collect();
        let mut curved_edge_nodes = vec![Vec::new(); facets.len()];
        if domain == Domain::UnitDisc && geom_order >= 2 {
            for (fi, facet) in facets.iter().enumerate().filter(|(_, f)| f.is_boundary()) {
                let FacetOwner { element, local_edge } = facet.owner;
                let [a, b] = LOCAL_EDGES[local_edge];
                let (va, vb) = (triangles[element][a], triangles[element][b]);
                maps[element].add_curved_edge(local_edge, geom_order, arc_between(vertices[va], vertices[vb]));
                let arc = arc_between(vertices[facet.vertices[0]], vertices[facet.vertices[1]]);
                curved_edge_nodes[fi] = (1..geom_order).map(|j| arc(j as f64 / geom_order as f64)).collect();
            }
        }

        Mesh { vertices, triangles, facets, element_facets, geom_order, domain, curved_edge_nodes, maps }
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_facets(&self) -> usize {
        self.facets.len()
    }

    pub fn map(&self, element: usize) -> &GeometryMap {
        &self.maps[element]
    }

    pub fn is_curved(&self, element: usize) -> bool {
        !self.maps[element].is_affine()
    }

    /// Chord length of a facet.
    pub fn facet_diameter(&self, facet: usize) -> f64 {
        let [a, b] = self.facets[facet].vertices;
        dist(self.vertices[a], self.vertices[b])
    }

    pub fn element_diameter(&self, element: usize) -> f64 {
        let t = self.triangles[element];
        let p = |i: usize| self.vertices[t[i]];
        dist(p(0), p(1)).max(dist(p(1), p(2))).max(dist(p(2), p(0)))
    }

    /// Maximum element diameter over straight vertices.
    pub fn mesh_size(&self) -> f64 {
        (0..self.num_triangles()).map(|e| self.element_diameter(e)).fold(0.0, f64::max)
    }

    /// Local edge parameter of owner `side` corresponding to the global facet
    /// parameter `s`.
    pub fn local_edge_param(&self, facet: usize, side: usize, s: f64) -> f64 {
        let f = &self.facets[facet];
        let o = f.side(side);
        let first = self.triangles[o.element][LOCAL_EDGES[o.local_edge][0]];
        if first == f.vertices[0] {
            s
        } else {
            1.0 - s
        }
    }

    /// Whether the local edge of owner `side` runs along the global facet
    /// orientation.
    pub fn facet_aligned(&self, facet: usize, side: usize) -> bool {
        self.local_edge_param(facet, side, 0.0) == 0.0
    }

    pub fn facet_point(&self, facet: usize, side: usize, s: f64) -> FacetPoint {
        let o = self.facets[facet].side(side);
        self.maps[o.element].edge_point(o.local_edge, self.local_edge_param(facet, side, s))
    }

    /// Area of the (possibly curved) elements.
    pub fn area(&self) -> f64 {
        let rule = triangle_rule(2 * self.geom_order).expect("supported order");
        self.maps.iter().map(|m| rule.integrate(|xi| m.eval(*xi).det)).sum()
    }

    /// Minimum interior angle (radians) over straight triangles.
    pub fn min_angle(&self) -> f64 {
        let mut min = f64::INFINITY;
        for t in &self.triangles {
            for i in 0..3 {
                let p = self.vertices[t[i]];
                let q = self.vertices[t[(i + 1) % 3]];
                let r = self.vertices[t[(i + 2) % 3]];
                let u = [q[0] - p[0], q[1] - p[1]];
                let v = [r[0] - p[0], r[1] - p[1]];
                let c = (u[0] * v[0] + u[1] * v[1]) / (dist(p, q) * dist(p, r));
                min = min.min(c.clamp(-1.0, 1.0).acos());
            }
        }
        min
    }

    /// Reference coordinates of `x` in `element`, by Newton iteration on the
    /// geometry map. `None` if the iteration leaves the element.
    pub fn inverse_map(&self, element: usize, x: Point) -> Option<Point> {
        let map = &self.maps[element];
        let v = map.vertices;
        let a = Matrix2::new(v[1][0] - v[0][0], v[2][0] - v[0][0], v[1][1] - v[0][1], v[2][1] - v[0][1]);
        let mut xi = a.try_inverse()? * Vector2::new(x[0] - v[0][0], x[1] - v[0][1]);
        for _ in 0..30 {
            let ev = map.eval([xi[0], xi[1]]);
            let r = Vector2::new(ev.x[0] - x[0], ev.x[1] - x[1]);
            if r.norm() < 1e-15 {
                break;
            }
            xi -= ev.jac.try_inverse()? * r;
        }
        let tol = 1e-10;
        let inside = xi[0] >= -tol && xi[1] >= -tol && xi[0] + xi[1] <= 1.0 + tol;
        let ev = map.eval([xi[0], xi[1]]);
        let converged = dist(ev.x, x) < 1e-12;
        (inside && converged).then_some([xi[0], xi[1]])
    }

    /// First element containing `x` with its reference coordinates.
    pub fn locate(&self, x: Point) -> Option<(usize, Point)> {
        (0..self.num_triangles()).find_map(|e| self.inverse_map(e, x).map(|xi| (e, xi)))
    }

    /// Uniform red refinement; new boundary vertices of disc meshes are
    /// projected onto the unit circle.
    pub fn refine(&self) -> Mesh {
        let mut vertices = self.vertices.clone();
        let mut mid: Vec<usize> = Vec::with_capacity(self.facets.len());
        for f in &self.facets {
            let [a, b] = f.vertices;
            let (pa, pb) = (self.vertices[a], self.vertices[b]);
            let mut m = [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])];
            if f.is_boundary() && self.domain == Domain::UnitDisc {
                let r = (m[0] * m[0] + m[1] * m[1]).sqrt();
                m = [m[0] / r, m[1] / r];
            }
            vertices.push(m);
            mid.push(vertices.len() - 1);
        }
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        for (e, t) in self.triangles.iter().enumerate() {
            let ef = self.element_facets[e];
            // midpoint opposite vertex k lies on local edge k
            let (m12, m20, m01) = (mid[ef[0]], mid[ef[1]], mid[ef[2]]);
            triangles.push([t[0], m01, m20]);
            triangles.push([m01, t[1], m12]);
            triangles.push([m20, m12, t[2]]);
            triangles.push([m01, m12, m20]);
        }
        Mesh::build(vertices, triangles, self.domain, self.geom_order)
    }

    /// Plain-text dump: a header line followed by one line per vertex,
    /// triangle and facet.
    pub fn write_dump<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "vertices {} triangles {} facets {} geom_order {}",
            self.num_vertices(),
            self.num_triangles(),
            self.num_facets(),
            self.geom_order
        )?;
        for v in &self.vertices {
            writeln!(w, "{} {}", v[0], v[1])?;
        }
        for t in &self.triangles {
            writeln!(w, "{} {} {}", t[0], t[1], t[2])?;
        }
        for f in &self.facets {
            let (ne, nl) = f.neighbor.map_or((-1, -1), |o| (o.element as i64, o.local_edge as i64));
            writeln!(
                w,
                "{} {} {} {} {} {} {}",
                f.vertices[0],
                f.vertices[1],
                f.owner.element,
                f.owner.local_edge,
                ne,
                nl,
                u8::from(f.is_boundary())
            )?;
        }
        Ok(())
    }
}

/// Hexagon fan refined `level` times.
pub fn make_unit_disc_mesh(level: usize, geom_order: usize) -> Mesh {
    let mut vertices = vec![[0.0, 0.0]];
    for k in 0..6 {
        let t = k as f64 * std::f64::consts::PI / 3.0;
        vertices.push([t.cos(), t.sin()]);
    }
    let triangles = (0..6).map(|k| [0, 1 + k, 1 + (k + 1) % 6]).collect();
    let mut mesh = Mesh::build(vertices, triangles, Domain::UnitDisc, geom_order);
    for _ in 0..level {
        mesh = mesh.refine();
    }
    mesh
}

/// `n x n` squares, each split along its `(0,0)-(1,1)` diagonal.
pub fn make_unit_square_mesh(n: usize) -> Mesh {
    assert!(n >= 1);
    let h = 1.0 / n as f64;
    let idx = |i: usize, j: usize| j * (n + 1) + i;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push([i as f64 * h, j as f64 * h]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (v00, v10, v01, v11) = (idx(i, j), idx(i + 1, j), idx(i, j + 1), idx(i + 1, j + 1));
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }
    Mesh::build(vertices, triangles, Domain::UnitSquare, 1)
}

pub fn refine(mesh: &Mesh) -> Mesh {
    mesh.refine()
}

pub fn mesh_size(mesh: &Mesh) -> f64 {
    mesh.mesh_size()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::segment_rule;

    #[test]
    fn disc_level0() {
        let m = make_unit_disc_mesh(0, 1);
        assert_eq!(m.num_vertices(), 7);
        assert_eq!(m.num_triangles(), 6);
        assert_eq!(m.num_facets(), 12);
        assert_eq!(m.facets.iter().filter(|f| f.is_boundary()).count(), 6);
        assert!((m.mesh_size() - 1.0).abs() < 1e-14);
        assert_eq!(make_unit_disc_mesh(1, 1).num_triangles(), 24);
    }

    #[test]
    fn square_counts_and_sizes() {
        let m = make_unit_square_mesh(1);
        assert_eq!(m.num_triangles(), 2);
        assert_eq!(m.num_facets(), 5);
        assert_eq!(m.facets.iter().filter(|f| f.is_boundary()).count(), 4);
        assert_eq!(make_unit_square_mesh(2).num_triangles(), 8);
        assert!((make_unit_square_mesh(2).mesh_size() - 2f64.sqrt() / 2.0).abs() < 1e-14);
        assert!((make_unit_square_mesh(4).mesh_size() - 2f64.sqrt() / 4.0).abs() < 1e-14);
        assert_eq!(m.refine().num_triangles(), 8);
    }

    #[test]
    fn refine_matches_direct_construction() {
        for g in 1..=3 {
            let a = make_unit_disc_mesh(0, g).refine();
            let b = make_unit_disc_mesh(1, g);
            assert_eq!(a.vertices, b.vertices);
            assert_eq!(a.triangles, b.triangles);
            assert_eq!(a.curved_edge_nodes, b.curved_edge_nodes);
        }
    }

    #[test]
    fn refinement_halves_square_mesh_size() {
        let mut m = make_unit_square_mesh(3);
        for _ in 0..3 {
            let r = m.refine();
            assert!(r.mesh_size() <= 0.51 * m.mesh_size());
            m = r;
        }
    }

    #[test]
    fn mesh_size_matches_brute_force() {
        let m = make_unit_disc_mesh(1, 1);
        let mut brute: f64 = 0.0;
        for t in &m.triangles {
            for &i in t {
                for &j in t {
                    brute = brute.max(dist(m.vertices[i], m.vertices[j]));
                }
            }
        }
        assert_eq!(m.mesh_size(), brute);
    }

    #[test]
    fn topology_invariants() {
        for m in [make_unit_disc_mesh(2, 3), make_unit_square_mesh(3)] {
            for f in &m.facets {
                assert_eq!(f.owners().count(), if f.is_boundary() { 1 } else { 2 });
                for o in f.owners() {
                    let t = m.triangles[o.element];
                    let [a, b] = LOCAL_EDGES[o.local_edge];
                    let mut e = [t[a], t[b]];
                    e.sort();
                    assert_eq!(e, f.vertices);
                    assert_eq!(m.element_facets[o.element][o.local_edge], (&m.facets[..]).iter().position(|g| g == f).unwrap());
                }
                if let Some(n) = f.neighbor {
                    assert!(n.element > f.owner.element);
                }
            }
            assert_eq!(m.facets.len() * 2 - m.facets.iter().filter(|f| f.is_boundary()).count(), 3 * m.num_triangles());
            for e in 0..m.num_triangles() {
                let g = GeometryMap::affine([
                    m.vertices[m.triangles[e][0]],
                    m.vertices[m.triangles[e][1]],
                    m.vertices[m.triangles[e][2]],
                ]);
                assert!(g.eval([0.2, 0.2]).det > 0.0);
            }
        }
    }

    #[test]
    fn disc_nodes_on_circle() {
        let m = make_unit_disc_mesh(2, 3);
        for f in m.facets.iter().filter(|f| f.is_boundary()) {
            for &v in &f.vertices {
                let p = m.vertices[v];
                assert!(((p[0] * p[0] + p[1] * p[1]).sqrt() - 1.0).abs() <= 1e-12);
            }
        }
        let mut count = 0;
        for nodes in &m.curved_edge_nodes {
            for c in nodes {
                count += 1;
                assert!(((c[0] * c[0] + c[1] * c[1]).sqrt() - 1.0).abs() <= 1e-12);
            }
        }
        assert_eq!(count, 2 * 24);
    }

    #[test]
    fn curved_map_interpolates_arc_and_has_positive_jacobian() {
        let rule = triangle_rule(12).unwrap();
        for g in 2..=4 {
            let m = make_unit_disc_mesh(1, g);
            for e in 0..m.num_triangles() {
                for (xi, _) in rule.iter() {
                    assert!(m.map(e).eval(*xi).det > 0.0);
                }
            }
            for (fi, f) in m.facets.iter().enumerate().filter(|(_, f)| f.is_boundary()) {
                for j in 1..g {
                    let s = j as f64 / g as f64;
                    let p = m.facet_point(fi, 0, s);
                    let c = m.curved_edge_nodes[fi][j - 1];
                    assert!(dist(p.x, c) < 1e-13);
                }
                let _ = f;
            }
        }
    }

    #[test]
    fn jacobian_and_hessian_match_finite_differences() {
        let m = make_unit_disc_mesh(0, 4);
        let map = m.map(0);
        let xi = [0.23, 0.31];
        let ev = map.eval(xi);
        let h = 1e-6;
        for k in 0..2 {
            let mut xp = xi;
            let mut xm = xi;
            xp[k] += h;
            xm[k] -= h;
            let (ep, em) = (map.eval(xp), map.eval(xm));
            for d in 0..2 {
                let fd = (ep.x[d] - em.x[d]) / (2.0 * h);
                assert!((fd - ev.jac[(d, k)]).abs() < 1e-8);
                for l in 0..2 {
                    let fd2 = (ep.jac[(d, l)] - em.jac[(d, l)]) / (2.0 * h);
                    assert!((fd2 - ev.hess[d][(l, k)]).abs() < 1e-7);
                }
            }
        }
    }

    #[test]
    fn interior_normals_are_antisymmetric() {
        let rule = segment_rule(10).unwrap();
        for m in [make_unit_disc_mesh(2, 3), make_unit_square_mesh(2)] {
            for (fi, _) in m.facets.iter().enumerate().filter(|(_, f)| !f.is_boundary()) {
                for (s, _) in rule.iter() {
                    let p0 = m.facet_point(fi, 0, s[0]);
                    let p1 = m.facet_point(fi, 1, s[0]);
                    assert!(dist(p0.x, p1.x) < 1e-12);
                    assert!((p0.normal[0] + p1.normal[0]).abs() < 1e-12);
                    assert!((p0.normal[1] + p1.normal[1]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn boundary_normals_point_outward() {
        let m = make_unit_disc_mesh(1, 3);
        for (fi, _) in m.facets.iter().enumerate().filter(|(_, f)| f.is_boundary()) {
            let p = m.facet_point(fi, 0, 0.37);
            let r = (p.x[0] * p.x[0] + p.x[1] * p.x[1]).sqrt();
            // the exact circle normal is x / |x|
            assert!((p.normal[0] * p.x[0] + p.normal[1] * p.x[1]) / r > 0.999);
        }
    }

    #[test]
    fn square_area_is_one() {
        for n in 1..=5 {
            assert!((make_unit_square_mesh(n).area() - 1.0).abs() < 1e-12);
        }
    }

    fn slope(h: &[f64], e: &[f64]) -> f64 {
        let n = h.len() as f64;
        let lx: Vec<f64> = h.iter().map(|v| v.ln()).collect();
        let ly: Vec<f64> = e.iter().map(|v| v.ln()).collect();
        let mx = lx.iter().sum::<f64>() / n;
        let my = ly.iter().sum::<f64>() / n;
        let num: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
        let den: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
        num / den
    }

    #[test]
    fn disc_area_converges_to_pi() {
        for g in 1..=3 {
            let (mut hs, mut errs) = (Vec::new(), Vec::new());
            let mut m = make_unit_disc_mesh(0, g);
            for _ in 0..4 {
                hs.push(m.mesh_size());
                errs.push((m.area() - std::f64::consts::PI).abs());
                m = m.refine();
            }
            let rate = if g == 1 { 2.0 } else { g as f64 + 1.0 };
            assert!(slope(&hs, &errs) >= rate - 0.3, "g = {g}: slope {}", slope(&hs, &errs));
        }
    }

    #[test]
    fn refinement_preserves_min_angle() {
        let mut m = make_unit_square_mesh(2);
        let a0 = m.min_angle();
        for _ in 0..3 {
            m = m.refine();
            assert!(m.min_angle() >= a0 - 1e-9);
        }
    }

    #[test]
    fn dump_header() {
        let m = make_unit_square_mesh(1);
        let mut buf = Vec::new();
        m.write_dump(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.lines().next().unwrap(), "vertices 4 triangles 2 facets 5 geom_order 1");
        assert_eq!(s.lines().count(), 1 + 4 + 2 + 5);
    }
}
