use std::sync::Arc;

use galbrun::fespace::{build_space, interpolate, l2_project, DiscreteField, Family, FeSpace};
use galbrun::forms::{
    assemble_a_dg, assemble_a_volume, assemble_b_dg, assemble_b_facets, assemble_b_volume, assemble_bpp_dense,
    assemble_m2_system, assemble_method, assemble_rhs, error_norms, method_grams, CoefficientSet, FacetFilter,
    FacetTrace, Method,
};
use galbrun::functions::{constant_scalar, constant_vector, ExactSolution, VectorFn};
use galbrun::linalg::{dense_nullspace, solve, SparseSymMatrix, KERNEL_TOL};
use galbrun::mesh::{make_unit_disc_mesh, make_unit_square_mesh, Mesh};
use galbrun::problems::convergence_problem;
use galbrun::quadrature::{segment_rule, triangle_rule};
use nalgebra::{DMatrix, DVector, Matrix2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn space(family: Family, mesh: &Arc<Mesh>, p: usize) -> Arc<FeSpace> {
    Arc::new(build_space(family, mesh.clone(), p).unwrap())
}

fn random_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn reference_coeffs(p: usize) -> CoefficientSet {
    let l = 10.0 * (p * p) as f64;
    CoefficientSet::rotating_flow(1.0, l, l)
}

fn disc(level: usize, g: usize) -> Arc<Mesh> {
    Arc::new(make_unit_disc_mesh(level, g))
}

fn min_eig(m: &SparseSymMatrix) -> f64 {
    m.to_dense().symmetric_eigen().eigenvalues.min()
}

/// Restriction of a matrix to the dofs not pinned by strong constraints.
fn free_block(m: &SparseSymMatrix, space: &FeSpace) -> DMatrix<f64> {
    let free: Vec<usize> = (0..space.ndof()).filter(|i| !space.constrained_dofs().contains(i)).collect();
    m.dense_submatrix(&free)
}

#[test]
fn a_volume_of_constants() {
    let m = disc(1, 2);
    let beta = 0.3;
    let coeffs = CoefficientSet {
        rho: constant_scalar(1.0),
        c_s: constant_scalar(1.0),
        b_flow: constant_vector([0.0, 0.0]),
        b_inf: beta,
        lambda_b: 0.0,
        lambda_n: 0.0,
    };
    for family in [Family::VectorLagrange, Family::VectorDg, Family::HdivBdm] {
        let s = space(family, &m, 2);
        let a = assemble_a_volume(&s, &coeffs).unwrap();
        let c = [0.7, -1.1];
        let u = interpolate(&s, &|_| c).unwrap();
        let expect = beta * beta * m.area() * (c[0] * c[0] + c[1] * c[1]);
        assert!((a.quad_form(&u.coeffs, &u.coeffs) - expect).abs() < 1e-12, "{family:?}");
    }
}

#[test]
fn gram_matrices_are_symmetric_and_semidefinite() {
    let m = disc(1, 2);
    let coeffs = reference_coeffs(2);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for family in [Family::VectorLagrange, Family::VectorDg, Family::HdivBdm] {
        let s = space(family, &m, 2);
        let a = assemble_a_volume(&s, &coeffs).unwrap();
        let b = assemble_b_volume(&s, &coeffs).unwrap();
        assert!(a.symmetry_defect() <= 1e-12 && b.symmetry_defect() <= 1e-12);
        assert!(a.is_structurally_symmetric());
        for _ in 0..20 {
            let x = random_vec(s.ndof(), &mut rng);
            assert!(a.quad_form(&x, &x) > 0.0);
            assert!(b.quad_form(&x, &x) >= -1e-12);
        }
    }
}

#[test]
fn b_volume_examples() {
    let m = Arc::new(make_unit_square_mesh(3));
    let coeffs = reference_coeffs(1);
    for p in 1..=3 {
        for family in [Family::VectorLagrange, Family::VectorDg, Family::HdivBdm] {
            let s = space(family, &m, p);
            let b = assemble_b_volume(&s, &coeffs).unwrap();
            let rot = interpolate(&s, &|x| [-x[1], x[0]]).unwrap();
            assert!(b.quad_form(&rot.coeffs, &rot.coeffs) <= 1e-12);
            let rad = interpolate(&s, &|x| [x[0], x[1]]).unwrap();
            assert!((b.quad_form(&rad.coeffs, &rad.coeffs) - 4.0).abs() < 1e-11);
        }
    }
}

#[test]
fn a_dg_reduces_to_volume_terms_for_continuous_fields() {
    // straight elements, so the interpolant of a quadratic is continuous
    for m in [disc(1, 1), Arc::new(make_unit_square_mesh(2))] {
        let coeffs = reference_coeffs(2);
        let s = space(Family::VectorDg, &m, 2);
        let u = interpolate(&s, &|x| [x[0] * x[0] - x[1], x[0] * x[1] + 1.0]).unwrap();
        let adg = assemble_a_dg(&s, &coeffs).unwrap();
        let avol = assemble_a_volume(&s, &coeffs).unwrap();
        let d = adg.quad_form(&u.coeffs, &u.coeffs) - avol.quad_form(&u.coeffs, &u.coeffs);
        assert!(d.abs() <= 1e-10, "{d}");
        assert!(adg.symmetry_defect() <= 1e-12);
    }
}

#[test]
fn a_dg_is_coercive_on_disc() {
    let m = disc(1, 2);
    let coeffs = reference_coeffs(2);
    for family in [Family::VectorDg, Family::HdivBdm] {
        let a = assemble_a_dg(&space(family, &m, 2), &coeffs).unwrap();
        assert!(min_eig(&a) >= -1e-10);
    }
}

#[test]
fn b_dg_examples() {
    let m = disc(1, 2);
    let p = 2;
    // interior terms vanish for continuous spaces
    let lag = space(Family::VectorLagrange, &m, p);
    let interior = assemble_b_facets(&lag, &reference_coeffs(p), FacetFilter::Interior).unwrap();
    assert!(interior.max_abs() <= 1e-11, "{}", interior.max_abs());
    let coeffs = CoefficientSet::rotating_flow(1.0, 10.0 * 4.0, 100.0 * 4.0);
    let dg = space(Family::VectorDg, &m, p);
    let b = assemble_b_dg(&dg, &coeffs).unwrap();
    assert!(b.symmetry_defect() <= 1e-12);
    assert!(min_eig(&b) >= -1e-10);
    assert!(assemble_b_dg(&lag, &coeffs).unwrap().symmetry_defect() <= 1e-12);
}

#[test]
fn rhs_examples() {
    let m = Arc::new(make_unit_square_mesh(1));
    let s = space(Family::VectorLagrange, &m, 1);
    let zero: VectorFn = constant_vector([0.0, 0.0]);
    assert!(assemble_rhs(&s, &zero).unwrap().iter().all(|&v| v == 0.0));
    let ex: VectorFn = constant_vector([1.0, 0.0]);
    let r = assemble_rhs(&s, &ex).unwrap();
    let nv = m.num_vertices();
    assert!((r[..nv].iter().sum::<f64>() - 1.0).abs() < 1e-14);
    assert!(r[nv..].iter().all(|v| v.abs() < 1e-15));
}

#[test]
fn facet_trace_jump_identities() {
    let m = disc(1, 3);
    let coeffs = reference_coeffs(3);
    let rule = segment_rule(8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for family in [Family::VectorLagrange, Family::HdivBdm, Family::VectorDg] {
        let s = space(family, &m, 3);
        let x = random_vec(s.ndof(), &mut rng);
        let (mut max_b, mut max_n): (f64, f64) = (0.0, 0.0);
        for f in 0..m.num_facets() {
            if m.facets[f].is_boundary() {
                continue;
            }
            for (jb, jn) in FacetTrace::new(&s, &coeffs, f, &rule).field_jumps(&x) {
                max_b = max_b.max(jb.norm());
                max_n = max_n.max(jn.abs());
            }
        }
        match family {
            Family::VectorLagrange => assert!(max_b <= 1e-11 && max_n <= 1e-11),
            Family::HdivBdm => assert!(max_n <= 1e-11 && max_b > 1e-6),
            _ => assert!(max_n > 1e-3 && max_b > 1e-6),
        }
    }
}

/// Dense Schur complement `K11 - K12 K22^{-1} K21` of the velocity block.
fn schur(k: &DMatrix<f64>, nu: usize) -> DMatrix<f64> {
    let n = k.nrows();
    let k11 = k.view((0, 0), (nu, nu));
    let k12 = k.view((0, nu), (nu, n - nu));
    let k22 = k.view((nu, nu), (n - nu, n - nu)).clone_owned();
    let sol = k22.lu().solve(&k.view((nu, 0), (n - nu, nu)).clone_owned()).unwrap();
    k11 - k12 * sol
}

/// b_pp(u, u) with Pi div u computed by an explicit weighted projection.
fn bpp_by_projection(u: &DiscreteField, pp: &Arc<FeSpace>, coeffs: &CoefficientSet) -> f64 {
    let m = &u.space.mesh;
    let w = |x: [f64; 2]| {
        let c = (coeffs.c_s)(x);
        (coeffs.rho)(x) * c * c
    };
    let pi = l2_project(
        pp,
        &|x| {
            let (e, xi) = m.locate(x).unwrap();
            u.eval_vector(e, &[xi])[0].2
        },
        &w,
    )
    .unwrap();
    let tri = triangle_rule(10).unwrap();
    let seg = segment_rule(10).unwrap();
    let mut v = 0.0;
    for e in 0..m.num_triangles() {
        let vals = pi.eval_scalar(e, &tri.points);
        for (q, (xi, wq)) in tri.iter().enumerate() {
            let ev = m.map(e).eval(*xi);
            v += wq * ev.det * w(ev.x) * vals[q].0 * vals[q].0;
        }
    }
    for (f, facet) in m.facets.iter().enumerate().filter(|(_, f)| f.is_boundary()) {
        let h = m.facet_diameter(f);
        for (s, wq) in seg.iter() {
            let fp = m.facet_point(f, 0, s[0]);
            let (uv, _, _) = u.eval_vector(facet.owner.element, &[fp.xi])[0];
            let un = uv[0] * fp.normal[0] + uv[1] * fp.normal[1];
            let pv = pi.eval_scalar(facet.owner.element, &[fp.xi])[0].0;
            v += wq * fp.ds * w(fp.x) * (coeffs.lambda_n / h * un * un - 2.0 * pv * un);
        }
    }
    v
}

#[test]
fn m2_block_system() {
    let m = Arc::new(make_unit_square_mesh(1));
    let p = 2;
    let coeffs = CoefficientSet::rotating_flow(3.0, 40.0, 40.0);
    let vel = space(Family::VectorLagrange, &m, p);
    let pp = Arc::new(FeSpace::pseudo_pressure(m.clone(), p).unwrap());
    let zero: VectorFn = constant_vector([0.0, 0.0]);
    let sys = assemble_m2_system(&vel, &pp, &coeffs, &zero).unwrap();
    assert!(sys.system.matrix.symmetry_defect() <= 1e-12);
    assert!(solve(&sys.system).unwrap().iter().all(|&v| v == 0.0));

    let nu = vel.ndof();
    let s = schur(&sys.system.matrix.to_dense(), nu);
    let a = assemble_a_volume(&vel, &coeffs).unwrap().to_dense();
    let bpp = assemble_bpp_dense(&vel, &pp, &coeffs).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);

    // fields with u.n = 0 on the square boundary: the elimination reproduces
    // -a + b_pp exactly
    let lag = vel.lagrange_element().unwrap();
    let ns = lag.dim();
    let nscalar = nu / 2;
    let mut tangential = vec![true; nu];
    for e in 0..m.num_triangles() {
        let map = m.map(e);
        let dofs = vel.element_dofs(e);
        for (a_, node) in lag.nodes.iter().enumerate() {
            let x = map.point(*node);
            if x[0].abs() < 1e-14 || (x[0] - 1.0).abs() < 1e-14 {
                tangential[dofs[a_]] = false;
            }
            if x[1].abs() < 1e-14 || (x[1] - 1.0).abs() < 1e-14 {
                tangential[dofs[ns + a_]] = false;
            }
        }
    }
    assert_eq!(tangential.len(), 2 * nscalar);
    for _ in 0..5 {
        let mut x = random_vec(nu, &mut rng);
        for (i, keep) in tangential.iter().enumerate() {
            if !keep {
                x[i] = 0.0;
            }
        }
        let xv = DVector::from_vec(x.clone());
        let lhs = (xv.transpose() * &s * &xv)[0];
        let field = DiscreteField::new(vel.clone(), x);
        let rhs = -(xv.transpose() * &a * &xv)[0] + bpp_by_projection(&field, &pp, &coeffs);
        assert!((lhs - rhs).abs() <= 1e-9, "{lhs} vs {rhs}");
        assert!(((xv.transpose() * &bpp * &xv)[0] - bpp_by_projection(&field, &pp, &coeffs)).abs() <= 1e-9);
    }

    // in general the elimination adds <rho c^2 g, g> with M g = E u
    let k = sys.system.matrix.to_dense();
    let mass = -k.view((nu, nu), (pp.ndof(), pp.ndof())).clone_owned();
    let coupling = k.view((nu, 0), (pp.ndof(), nu)).clone_owned();
    for _ in 0..5 {
        let xv = DVector::from_vec(random_vec(nu, &mut rng));
        let lhs = (xv.transpose() * &s * &xv)[0];
        // D u - E u = M Pi div u - M g, and M Pi div u is (bpp - nitsche)-independent:
        // recover g from the explicit projection
        let field = DiscreteField::new(vel.clone(), xv.as_slice().to_vec());
        let bpp_val = bpp_by_projection(&field, &pp, &coeffs);
        let chol = mass.clone().cholesky().unwrap();
        let proj = chol.solve(&(&coupling * &xv)); // Pi div u - g
        let pi = l2_project(
            &pp,
            &|x| {
                let (e, xi) = m.locate(x).unwrap();
                field.eval_vector(e, &[xi])[0].2
            },
            &|_| 3.0,
        )
        .unwrap();
        let g = DVector::from_vec(pi.coeffs.clone()) - proj;
        let extra = (g.transpose() * &mass * &g)[0];
        let rhs = -(xv.transpose() * &a * &xv)[0] + bpp_val + extra;
        assert!((lhs - rhs).abs() <= 1e-9, "{lhs} vs {rhs}");
    }
}

#[test]
fn m2_rejects_low_degree() {
    let m = Arc::new(make_unit_square_mesh(1));
    let f: VectorFn = constant_vector([0.0, 0.0]);
    assert!(assemble_method(Method::M2, m.clone(), 1, &reference_coeffs(1), &f).is_err());
    assert!(assemble_method(Method::M3, m.clone(), 5, &reference_coeffs(1), &f).is_err());
    assert!(assemble_method(Method::M1, m, 1, &reference_coeffs(1), &f).is_ok());
}

#[test]
fn every_method_is_symmetric_and_homogeneous() {
    let m = disc(1, 2);
    let p = 2;
    let zero: VectorFn = constant_vector([0.0, 0.0]);
    for method in Method::ALL {
        let d = assemble_method(method, m.clone(), p, &reference_coeffs(p), &zero).unwrap();
        assert!(d.system.matrix.symmetry_defect() <= 1e-12, "{method}");
        let sol = d.solve().unwrap();
        assert!(sol.velocity.coeffs.iter().all(|&v| v == 0.0), "{method}");
    }
}

#[test]
fn m3_and_m4_errors_are_comparable() {
    let p = 2;
    let pb = convergence_problem(p).unwrap();
    let exact = pb.exact.clone().unwrap();
    let m = disc(2, p);
    let err = |method| {
        let d = assemble_method(method, m.clone(), p, &pb.coeffs, &pb.forcing).unwrap();
        d.solve().unwrap().error_norms(&exact).unwrap().l2_error
    };
    let (e3, e4) = (err(Method::M3), err(Method::M4));
    assert!(e3 / e4 <= 3.0 && e4 / e3 <= 3.0, "{e3} {e4}");
}

#[test]
fn error_norm_examples() {
    let m = Arc::new(make_unit_square_mesh(2));
    let poly = ExactSolution::new(
        Arc::new(|x| [x[0] * x[0] - x[1], x[0] * x[1] + 1.0]),
        Arc::new(|x| Matrix2::new(2.0 * x[0], -1.0, x[1], x[0])),
    );
    let coeffs = reference_coeffs(2);
    for method in Method::ALL {
        let s = space(method.family(), &m, 2);
        let u = interpolate(&s, &|x| (poly.value)(x)).unwrap();
        let n = error_norms(method, &u, &poly, &coeffs).unwrap();
        assert!(n.l2_error <= 1e-12 && n.xh_error <= 1e-12 * 1e3, "{method}: {n:?}");
        assert!(n.l2_norm > 0.1);

        let one = ExactSolution::new(constant_vector([1.0, 0.0]), Arc::new(|_| Matrix2::zeros()));
        let z = DiscreteField::zero(s.clone());
        assert!((error_norms(method, &z, &one, &coeffs).unwrap().l2_error - 1.0).abs() < 1e-13);
    }
}

#[test]
fn l2_error_matches_refined_quadrature() {
    let p = 2;
    let pb = convergence_problem(p).unwrap();
    let exact = pb.exact.clone().unwrap();
    let m = disc(1, p);
    let sol = assemble_method(Method::M4, m.clone(), p, &pb.coeffs, &pb.forcing).unwrap().solve().unwrap();
    let fast = sol.error_norms(&exact).unwrap().l2_error;
    let tri = triangle_rule(30).unwrap();
    let mut acc = 0.0;
    for e in 0..m.num_triangles() {
        let vals = sol.velocity.eval_vector(e, &tri.points);
        for (q, (xi, w)) in tri.iter().enumerate() {
            let ev = m.map(e).eval(*xi);
            let u = (exact.value)(ev.x);
            acc += w * ev.det * ((vals[q].0[0] - u[0]).powi(2) + (vals[q].0[1] - u[1]).powi(2));
        }
    }
    assert!((fast - acc.sqrt()).abs() <= 5e-4 * fast);
}

#[test]
fn triple_norm_parts_are_nonnegative() {
    let m = disc(1, 2);
    let coeffs = reference_coeffs(2);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for method in [Method::M3, Method::M4] {
        let s = space(method.family(), &m, 2);
        let (a, b) = method_grams(method, &s, &coeffs).unwrap();
        for _ in 0..20 {
            let x = random_vec(s.ndof(), &mut rng);
            assert!(a.quad_form(&x, &x) >= -1e-10 && b.quad_form(&x, &x) >= -1e-10);
        }
    }
}

/// Mass matrix `(u, v)` of a vector space.
fn mass_matrix(s: &FeSpace) -> SparseSymMatrix {
    let unit = CoefficientSet {
        rho: constant_scalar(1.0),
        c_s: constant_scalar(1.0),
        b_flow: constant_vector([0.0, 0.0]),
        b_inf: 1.0,
        lambda_b: 0.0,
        lambda_n: 0.0,
    };
    assemble_a_volume(s, &unit).unwrap()
}

#[test]
fn gradients_are_orthogonal_to_discrete_kernel() {
    let grad_phi: VectorFn = Arc::new(|x| [6.0 * x[0].powi(5), 6.0 * x[1].powi(5)]);
    // |grad phi|_{L2} on the unit square: 36 * 2 / 11
    let grad_norm = (72.0f64 / 11.0).sqrt();
    let coeffs = reference_coeffs(1);
    for n in [1, 2] {
        let m = Arc::new(make_unit_square_mesh(n));
        for method in [Method::M3, Method::M4] {
            let s = space(method.family(), &m, 1);
            let (_, b) = method_grams(method, &s, &coeffs).unwrap();
            let free: Vec<usize> = (0..s.ndof()).filter(|i| !s.constrained_dofs().contains(i)).collect();
            let rhs = assemble_rhs(&s, &grad_phi).unwrap();
            let mass = mass_matrix(&s);
            let kernel = dense_nullspace(&free_block(&b, &s), KERNEL_TOL).unwrap();
            assert!(kernel.ncols() > 0, "{method} n={n}");
            for v in kernel.column_iter() {
                let mut full = vec![0.0; s.ndof()];
                for (k, &i) in free.iter().enumerate() {
                    full[i] = v[k];
                }
                let dot: f64 = full.iter().zip(&rhs).map(|(a, b)| a * b).sum();
                let vn = mass.quad_form(&full, &full).sqrt();
                assert!(dot.abs() <= 1e-9 * grad_norm * vn, "{method} n={n}: {dot}");
            }
        }
    }
}

fn slope(h: &[f64], e: &[f64]) -> f64 {
    let n = h.len() as f64;
    let lx: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let num: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    num / lx.iter().map(|x| (x - mx).powi(2)).sum::<f64>()
}

/// Dual norm of the residual of the interpolant, measured in the Gram matrix
/// of `a_h + b_h`.
fn residual_dual_norm(method: Method, mesh: Arc<Mesh>, p: usize) -> f64 {
    let pb = convergence_problem(p).unwrap();
    let exact = pb.exact.clone().unwrap();
    let d = assemble_method(method, mesh, p, &pb.coeffs, &pb.forcing).unwrap();
    let (a, b) = method_grams(method, &d.space, &pb.coeffs).unwrap();
    let iu = interpolate(&d.space, &|x| (exact.value)(x)).unwrap();
    let ku = d.system.matrix.mul_vec(&iu.coeffs);
    let free = d.system.free_dofs();
    let r = DVector::from_iterator(free.len(), free.iter().map(|&i| ku[i] - d.system.rhs[i]));
    let gram = a.lin_comb(1.0, &b, 1.0).dense_submatrix(&free);
    let z = gram.clone().cholesky().unwrap().solve(&r);
    r.dot(&z).sqrt()
}

#[test]
fn galerkin_residual_of_interpolant_decays() {
    for (method, p, levels) in [(Method::M3, 1, 0..3), (Method::M4, 1, 0..3), (Method::M3, 2, 1..4), (Method::M4, 2, 1..4)] {
        let (mut hs, mut rs) = (Vec::new(), Vec::new());
        for l in levels {
            let m = disc(l, p.max(2));
            hs.push(m.mesh_size());
            rs.push(residual_dual_norm(method, m, p));
        }
        let r = slope(&hs, &rs);
        assert!(r >= p as f64 - 0.5 - 0.3, "{method} p={p}: {r} {rs:?}");
    }
}

#[test]
fn galerkin_residual_m1_high_order() {
    let (mut hs, mut rs) = (Vec::new(), Vec::new());
    for l in 0..3 {
        let m = disc(l, 4);
        hs.push(m.mesh_size());
        rs.push(residual_dual_norm(Method::M1, m, 4));
    }
    let r = slope(&hs, &rs);
    assert!(r >= 4.0 - 0.5 - 0.3, "{r} {rs:?}");
}

#[test]
fn coefficient_validation() {
    let m = disc(0, 2);
    let mut c = reference_coeffs(1);
    c.b_inf = 0.0;
    assert!(c.validate(&m).is_err());
    let mut c = reference_coeffs(1);
    c.rho = constant_scalar(-1.0);
    assert!(c.validate(&m).is_err());
    assert!(reference_coeffs(1).validate(&m).is_ok());
    // geometric residue of b . n on the polynomial boundary shrinks with g
    let d2 = reference_coeffs(1).boundary_flux_defect(&make_unit_disc_mesh(2, 2)).unwrap();
    let d4 = reference_coeffs(1).boundary_flux_defect(&make_unit_disc_mesh(2, 4)).unwrap();
    assert!(d4 < d2 && d2 < 1e-2, "{d2} {d4}");
}
