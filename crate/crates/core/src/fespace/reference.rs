//! Reference-element bases on the triangle `(0,0), (1,0), (0,1)`.

use nalgebra::{DMatrix, Matrix2, Vector2};

use crate::mesh::{Point, LOCAL_EDGES, REF_VERTICES};
use crate::quadrature::{segment_rule, triangle_rule};

fn pw(x: f64, n: i32) -> f64 {
    if n < 0 {
        0.0
    } else {
        x.powi(n)
    }
}

/// Exponents `(a, b)` of `x^a y^b` with `a + b <= degree`, by total degree.
pub fn monomial_exponents(degree: usize) -> Vec<(i32, i32)> {
    let mut out = Vec::new();
    for d in 0..=degree as i32 {
        for b in 0..=d {
            out.push((d - b, b));
        }
    }
    out
}

// Monomials in `3 xi - 1`, centred at the barycentre for better conditioning.
fn monomial_eval(exps: &[(i32, i32)], xi: Point) -> (Vec<f64>, Vec<[f64; 2]>) {
    let (x, y) = (3.0 * xi[0] - 1.0, 3.0 * xi[1] - 1.0);
    let vals = exps.iter().map(|&(a, b)| pw(x, a) * pw(y, b)).collect();
    let grads = exps
        .iter()
        .map(|&(a, b)| [3.0 * a as f64 * pw(x, a - 1) * pw(y, b), 3.0 * b as f64 * pw(x, a) * pw(y, b - 1)])
        .collect();
    (vals, grads)
}

/// Shifted Legendre polynomial `P_j(2s - 1)` on `[0, 1]`.
pub fn legendre01(j: usize, s: f64) -> f64 {
    let t = 2.0 * s - 1.0;
    let (mut p0, mut p1) = (1.0, t);
    if j == 0 {
        return p0;
    }
    for n in 1..j {
        let nf = n as f64;
        let p2 = ((2.0 * nf + 1.0) * t * p1 - nf * p0) / (nf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// Edge moment weight: Legendre polynomial normalised in `L^2(0, 1)`.
pub fn edge_test(j: usize, s: f64) -> f64 {
    ((2 * j + 1) as f64).sqrt() * legendre01(j, s)
}

/// Nodal scalar Lagrange element of degree `k`.
///
/// Node order: the three vertices, then `k - 1` nodes per local edge running
/// from its first to its second local vertex, then interior lattice nodes.
#[derive(Debug, Clone)]
pub struct LagrangeElement {
    pub degree: usize,
    pub nodes: Vec<Point>,
    exps: Vec<(i32, i32)>,
    /// `coeffs[(m, i)]`: coefficient of monomial `m` in basis function `i`.
    coeffs: DMatrix<f64>,
}

impl LagrangeElement {
    pub fn new(degree: usize) -> Self {
        assert!(degree >= 1);
        let k = degree;
        let kf = k as f64;
        let mut nodes: Vec<Point> = REF_VERTICES.to_vec();
        for &[a, b] in &LOCAL_EDGES {
            let (va, vb) = (REF_VERTICES[a], REF_VERTICES[b]);
            for j in 1..k {
                let s = j as f64 / kf;
                nodes.push([va[0] + s * (vb[0] - va[0]), va[1] + s * (vb[1] - va[1])]);
            }
        }
        for j in 1..k {
            for i in 1..k {
                if i + j < k {
                    nodes.push([i as f64 / kf, j as f64 / kf]);
                }
            }
        }
        let exps = monomial_exponents(k);
        let n = exps.len();
        assert_eq!(nodes.len(), n);
        let mut vand = DMatrix::<f64>::zeros(n, n);
        for (i, node) in nodes.iter().enumerate() {
            let (v, _) = monomial_eval(&exps, *node);
            for m in 0..n {
                vand[(i, m)] = v[m];
            }
        }
        // basis_i(node_l) = sum_m vand[l, m] coeffs[m, i] = delta_li
        let coeffs = vand.try_inverse().expect("Lagrange Vandermonde matrix is invertible");
        LagrangeElement { degree, nodes, exps, coeffs }
    }

    pub fn dim(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_interior(&self) -> usize {
        let k = self.degree;
        if k < 3 {
            0
        } else {
            (k - 1) * (k - 2) / 2
        }
    }

    /// Values and reference gradients of all basis functions at `xi`.
    pub fn eval(&self, xi: Point) -> (Vec<f64>, Vec<[f64; 2]>) {
        let (mv, mg) = monomial_eval(&self.exps, xi);
        let n = self.dim();
        let mut vals = vec![0.0; n];
        let mut grads = vec![[0.0; 2]; n];
        for m in 0..n {
            for i in 0..n {
                let c = self.coeffs[(m, i)];
                vals[i] += c * mv[m];
                grads[i][0] += c * mg[m][0];
                grads[i][1] += c * mg[m][1];
            }
        }
        (vals, grads)
    }
}

/// Brezzi-Douglas-Marini element of degree `p` on the reference triangle.
///
/// Degrees of freedom: on each local edge `k` the moments
/// `int_0^1 v . rot(t_k) L_j(s) ds`, `j = 0..=p`, with `t_k` the edge vector,
/// `rot(t) = (t_y, -t_x)` and `L_j` the shifted Legendre polynomials in the
/// local edge parameter; in the interior the moments `int_T v . phi` against
/// the first-kind Nedelec space `[P^{p-2}]^2 + P~^{p-2} (-y, x)`.
#[derive(Debug, Clone)]
pub struct BdmElement {
    pub degree: usize,
    exps: Vec<(i32, i32)>,
    /// `coeffs[(c * nm + m, i)]`: coefficient of monomial `m` in component `c` of basis `i`.
    coeffs: DMatrix<f64>,
    /// Row `r` combines the raw interior tests into an `L^2`-orthonormal set.
    interior: DMatrix<f64>,
}

/// Interior moment test function: `e_c x^a y^b` or `x^a y^b (-y, x)`.
#[derive(Debug, Clone, Copy)]
pub enum InteriorTest {
    Component { comp: usize, a: i32, b: i32 },
    Rotated { a: i32, b: i32 },
}

impl InteriorTest {
    pub fn eval(&self, xi: Point) -> [f64; 2] {
        match *self {
            InteriorTest::Component { comp, a, b } => {
                let v = pw(xi[0], a) * pw(xi[1], b);
                if comp == 0 {
                    [v, 0.0]
                } else {
                    [0.0, v]
                }
            }
            InteriorTest::Rotated { a, b } => {
                let v = pw(xi[0], a) * pw(xi[1], b);
                [-xi[1] * v, xi[0] * v]
            }
        }
    }
}

pub fn nedelec_tests(degree: usize) -> Vec<InteriorTest> {
    if degree < 2 {
        return Vec::new();
    }
    let q = degree - 2;
    let mut out = Vec::new();
    for comp in 0..2 {
        for (a, b) in monomial_exponents(q) {
            out.push(InteriorTest::Component { comp, a, b });
        }
    }
    for b in 0..=q as i32 {
        out.push(InteriorTest::Rotated { a: q as i32 - b, b });
    }
    out
}

fn combine(t: &DMatrix<f64>, r: usize, raw: &[[f64; 2]]) -> [f64; 2] {
    let mut v = [0.0; 2];
    for (c, phi) in raw.iter().enumerate().take(r + 1) {
        v[0] += t[(r, c)] * phi[0];
        v[1] += t[(r, c)] * phi[1];
    }
    v
}

/// Reference edge vector `V_b - V_a` of local edge `k`.
pub fn ref_edge_vector(k: usize) -> [f64; 2] {
    let [a, b] = LOCAL_EDGES[k];
    [REF_VERTICES[b][0] - REF_VERTICES[a][0], REF_VERTICES[b][1] - REF_VERTICES[a][1]]
}

impl BdmElement {
    pub fn new(degree: usize) -> Self {
        assert!(degree >= 1);
        let exps = monomial_exponents(degree);
        let nm = exps.len();
        let n = 2 * nm;
        let tests = nedelec_tests(degree);
        assert_eq!(3 * (degree + 1) + tests.len(), n);

        let seg = segment_rule(2 * degree).expect("supported order");
        let tri = triangle_rule(2 * degree).expect("supported order");
        let nt = tests.len();
        let mut gram = DMatrix::<f64>::zeros(nt, nt);
        for (xi, w) in tri.iter() {
            let phi: Vec<[f64; 2]> = tests.iter().map(|t| t.eval(*xi)).collect();
            for r in 0..nt {
                for c in 0..nt {
                    gram[(r, c)] += w * (phi[r][0] * phi[c][0] + phi[r][1] * phi[c][1]);
                }
            }
        }
        let interior = match gram.cholesky() {
            Some(ch) => ch.l().try_inverse().expect("triangular factor is invertible"),
            None => DMatrix::zeros(0, 0),
        };
        let mut dofs = DMatrix::<f64>::zeros(n, n);
        for k in 0..3 {
            let [a, _] = LOCAL_EDGES[k];
            let va = REF_VERTICES[a];
            let t = ref_edge_vector(k);
            let rot = [t[1], -t[0]];
            for (s, w) in seg.iter() {
                let xi = [va[0] + s[0] * t[0], va[1] + s[0] * t[1]];
                let (mv, _) = monomial_eval(&exps, xi);
                for j in 0..=degree {
                    let l = edge_test(j, s[0]) * w;
                    let row = k * (degree + 1) + j;
                    for m in 0..nm {
                        dofs[(row, m)] += l * mv[m] * rot[0];
                        dofs[(row, nm + m)] += l * mv[m] * rot[1];
                    }
                }
            }
        }
        for (xi, w) in tri.iter() {
            let (mv, _) = monomial_eval(&exps, *xi);
            let raw: Vec<[f64; 2]> = tests.iter().map(|t| t.eval(*xi)).collect();
            for r in 0..nt {
                let phi = combine(&interior, r, &raw);
                let row = 3 * (degree + 1) + r;
                for m in 0..nm {
                    dofs[(row, m)] += w * mv[m] * phi[0];
                    dofs[(row, nm + m)] += w * mv[m] * phi[1];
                }
            }
        }
        let coeffs = dofs.try_inverse().expect("BDM moment matrix is invertible");
        BdmElement { degree, exps, coeffs, interior }
    }

    pub fn dim(&self) -> usize {
        2 * self.exps.len()
    }

    pub fn num_edge_dofs(&self) -> usize {
        self.degree + 1
    }

    pub fn num_interior(&self) -> usize {
        self.dim() - 3 * self.num_edge_dofs()
    }

    /// Orthonormal interior test functions at a reference point.
    pub fn interior_test_values(&self, xi: Point) -> Vec<[f64; 2]> {
        let raw: Vec<[f64; 2]> = nedelec_tests(self.degree).iter().map(|t| t.eval(xi)).collect();
        (0..raw.len()).map(|r| combine(&self.interior, r, &raw)).collect()
    }

    /// Reference values and reference Jacobians `d v_i / d xi_j`.
    pub fn eval(&self, xi: Point) -> (Vec<Vector2<f64>>, Vec<Matrix2<f64>>) {
        let (mv, mg) = monomial_eval(&self.exps, xi);
        let nm = self.exps.len();
        let n = self.dim();
        let mut vals = vec![Vector2::zeros(); n];
        let mut grads = vec![Matrix2::zeros(); n];
        for c in 0..2 {
            for m in 0..nm {
                let row = c * nm + m;
                for i in 0..n {
                    let k = self.coeffs[(row, i)];
                    if k == 0.0 {
                        continue;
                    }
                    vals[i][c] += k * mv[m];
                    grads[i][(c, 0)] += k * mg[m][0];
                    grads[i][(c, 1)] += k * mg[m][1];
                }
            }
        }
        (vals, grads)
    }
}
