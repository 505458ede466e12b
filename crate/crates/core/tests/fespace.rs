use std::sync::Arc;

use galbrun::fespace::{bdm_interpolate, build_space, interpolate, l2_project, DiscreteField, Family, FeSpace};
use galbrun::mesh::{make_unit_disc_mesh, make_unit_square_mesh, Mesh};
use galbrun::quadrature::{segment_rule, triangle_rule};
use nalgebra::{DMatrix, DVector, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn space(family: Family, mesh: &Arc<Mesh>, p: usize) -> Arc<FeSpace> {
    Arc::new(build_space(family, mesh.clone(), p).unwrap())
}

fn random_field(space: &Arc<FeSpace>, seed: u64) -> DiscreteField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs = (0..space.ndof()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    DiscreteField::new(space.clone(), coeffs)
}

#[test]
fn dof_counts_on_single_square() {
    let m = Arc::new(make_unit_square_mesh(1));
    // 4 vertices on the two-triangle square
    assert_eq!(space(Family::VectorLagrange, &m, 1).ndof(), 8);
    assert_eq!(space(Family::VectorDg, &m, 1).ndof(), 12);
    let bdm = space(Family::HdivBdm, &m, 1);
    assert_eq!(bdm.ndof(), 10);
    assert_eq!(bdm.num_local(), 6);
}

#[test]
fn dimension_formulas() {
    let meshes = [make_unit_square_mesh(1), make_unit_square_mesh(3), make_unit_disc_mesh(1, 2)];
    for m in meshes {
        let m = Arc::new(m);
        let (v, e, t) = (m.num_vertices(), m.num_facets(), m.num_triangles());
        for p in 1..=4 {
            for family in [Family::VectorLagrange, Family::VectorDg, Family::HdivBdm, Family::ScalarLagrange] {
                let s = space(family, &m, p);
                let expect = match family {
                    Family::VectorLagrange => 2 * (v + (p - 1) * e + (p - 1) * (p.saturating_sub(2)) / 2 * t),
                    Family::ScalarLagrange => v + (p - 1) * e + (p - 1) * (p.saturating_sub(2)) / 2 * t,
                    Family::VectorDg => t * (p + 1) * (p + 2),
                    Family::HdivBdm => (p + 1) * e + (p * p - 1) * t,
                };
                assert_eq!(s.ndof(), expect, "{family:?} p={p}");
                let max = (0..t).flat_map(|el| s.element_dofs(el).to_vec()).max().unwrap();
                assert_eq!(max + 1, expect);
            }
        }
    }
}

#[test]
fn taylor_hood_needs_degree_two() {
    let m = Arc::new(make_unit_square_mesh(1));
    assert!(FeSpace::pseudo_pressure(m.clone(), 1).is_err());
    assert_eq!(FeSpace::pseudo_pressure(m, 2).unwrap().degree, 1);
}

/// Values of a field on both sides of every interior facet at 5 points.
fn facet_samples(f: &DiscreteField) -> Vec<(Vector2<f64>, Vector2<f64>, [f64; 2])> {
    let mesh = &f.space.mesh;
    let mut out = Vec::new();
    for (fi, facet) in mesh.facets.iter().enumerate().filter(|(_, f)| !f.is_boundary()) {
        for k in 0..5 {
            let s = (k as f64 + 0.5) / 5.0;
            let p0 = mesh.facet_point(fi, 0, s);
            let p1 = mesh.facet_point(fi, 1, s);
            let v0 = f.eval_vector(facet.owner.element, &[p0.xi])[0].0;
            let v1 = f.eval_vector(facet.neighbor.unwrap().element, &[p1.xi])[0].0;
            out.push((v0, v1, p0.normal));
        }
    }
    out
}

#[test]
fn lagrange_fields_are_continuous() {
    for (mesh, p) in [(make_unit_square_mesh(2), 3), (make_unit_disc_mesh(1, 3), 3), (make_unit_disc_mesh(1, 4), 4)] {
        let m = Arc::new(mesh);
        let f = random_field(&space(Family::VectorLagrange, &m, p), 1);
        for (a, b, _) in facet_samples(&f) {
            assert!((a - b).norm() <= 1e-11);
        }
    }
}

#[test]
fn bdm_fields_are_normal_continuous_only() {
    for (mesh, p) in [(make_unit_square_mesh(2), 2), (make_unit_disc_mesh(1, 3), 3), (make_unit_disc_mesh(1, 2), 1)] {
        let m = Arc::new(mesh);
        let f = random_field(&space(Family::HdivBdm, &m, p), 2);
        let mut max_tangential: f64 = 0.0;
        for (a, b, n) in facet_samples(&f) {
            let n = Vector2::new(n[0], n[1]);
            assert!(((a - b).dot(&n)).abs() <= 1e-11, "normal jump {}", (a - b).dot(&n));
            max_tangential = max_tangential.max((a - b).norm());
        }
        assert!(max_tangential > 1e-3);
    }
}

#[test]
fn dg_fields_are_discontinuous() {
    let m = Arc::new(make_unit_square_mesh(2));
    let f = random_field(&space(Family::VectorDg, &m, 2), 3);
    assert!(facet_samples(&f).iter().any(|(a, b, _)| (a - b).norm() > 1e-3));
}

#[test]
fn constrained_bdm_has_zero_normal_trace() {
    for p in 1..=4 {
        let m = Arc::new(make_unit_disc_mesh(1, p.max(2)));
        let s = space(Family::HdivBdm, &m, p);
        let mut f = random_field(&s, 4);
        f.zero_constrained();
        let rule = segment_rule(2 * p + 6).unwrap();
        for (fi, facet) in m.facets.iter().enumerate().filter(|(_, f)| f.is_boundary()) {
            for (sp, _) in rule.iter() {
                let fp = m.facet_point(fi, 0, sp[0]);
                let v = f.eval_vector(facet.owner.element, &[fp.xi])[0].0;
                let vn = v[0] * fp.normal[0] + v[1] * fp.normal[1];
                assert!(vn.abs() <= 1e-11, "p={p} vn={vn}");
            }
        }
    }
}

#[test]
fn piola_gradients_match_finite_differences_on_curved_elements() {
    let m = Arc::new(make_unit_disc_mesh(0, 3));
    for family in [Family::HdivBdm, Family::VectorLagrange, Family::VectorDg] {
        let s = space(family, &m, 3);
        let f = random_field(&s, 5);
        for e in 0..m.num_triangles() {
            assert!(m.is_curved(e));
            let xi = [0.27, 0.41];
            let map = m.map(e);
            let jinv = map.eval(xi).jac.try_inverse().unwrap();
            let h = 1e-6;
            let mut dref = nalgebra::Matrix2::zeros();
            for k in 0..2 {
                let (mut a, mut b) = (xi, xi);
                a[k] += h;
                b[k] -= h;
                let d = (f.eval_vector(e, &[a])[0].0 - f.eval_vector(e, &[b])[0].0) / (2.0 * h);
                dref.set_column(k, &d);
            }
            let fd = dref * jinv;
            let (_, grad, div) = f.eval_vector(e, &[xi])[0];
            assert!((fd - grad).abs().max() < 1e-6 * (1.0 + grad.abs().max()), "{family:?}");
            assert!((grad.trace() - div).abs() < 1e-9 * (1.0 + div.abs()));
        }
    }
}

#[test]
fn bdm_interpolation_is_a_projection() {
    for (mesh, p) in [(make_unit_square_mesh(2), 2), (make_unit_disc_mesh(1, 3), 3)] {
        let m = Arc::new(mesh);
        let s = space(Family::HdivBdm, &m, p);
        let f = random_field(&s, 6);
        let g = bdm_interpolate(&s, &|x| f.value_at(x).expect("point in mesh")).unwrap();
        let diff = f.coeffs.iter().zip(&g.coeffs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(diff <= 1e-11, "p={p}: {diff}");
    }
}

#[test]
fn rotation_field_is_reproduced_divergence_free() {
    let m = Arc::new(make_unit_square_mesh(3));
    let rule = triangle_rule(6).unwrap();
    for p in 1..=4 {
        let s = space(Family::HdivBdm, &m, p);
        let f = bdm_interpolate(&s, &|x| [-x[1], x[0]]).unwrap();
        for e in 0..m.num_triangles() {
            for (v, _, div) in f.eval_vector(e, &rule.points) {
                assert!(div.abs() <= 1e-11, "p={p} e={e} div={div}");
                let _ = v;
            }
            for (xi, _) in rule.iter() {
                let x = m.map(e).point(*xi);
                let (v, _, _) = f.eval_vector(e, &[*xi])[0];
                assert!((v[0] + x[1]).abs() < 1e-11 && (v[1] - x[0]).abs() < 1e-11);
            }
        }
    }
}

#[test]
fn bdm_commuting_property() {
    let field = |x: [f64; 2]| [(2.0 * x[0]).sin() * x[1].exp(), (x[0] * x[1]).cos() + x[0].powi(3)];
    let div = |x: [f64; 2]| 2.0 * (2.0 * x[0]).cos() * x[1].exp() - x[0] * (x[0] * x[1]).sin();
    for (mesh, p) in [(make_unit_square_mesh(2), 1), (make_unit_square_mesh(2), 3), (make_unit_disc_mesh(1, 2), 2)] {
        let m = Arc::new(mesh);
        let s = space(Family::HdivBdm, &m, p);
        let f = bdm_interpolate(&s, &field).unwrap();
        let rule = triangle_rule(2 * p + 16).unwrap();
        for e in 0..m.num_triangles() {
            let vals = f.eval_vector(e, &rule.points);
            let map = m.map(e);
            // q in P^{p-1} in reference coordinates (equal to physical on affine elements)
            for a in 0..p as i32 {
                for b in 0..(p as i32 - a) {
                    let mut acc = 0.0;
                    for (q, (xi, w)) in rule.iter().enumerate() {
                        let ev = map.eval(*xi);
                        let qv = xi[0].powi(a) * xi[1].powi(b);
                        acc += w * ev.det * (vals[q].2 - div(ev.x)) * qv;
                    }
                    assert!(acc.abs() <= 1e-10, "p={p} e={e}: {acc}");
                }
            }
        }
    }
}

fn l2_error(f: &DiscreteField, exact: &dyn Fn([f64; 2]) -> [f64; 2]) -> f64 {
    let m = &f.space.mesh;
    let rule = triangle_rule(2 * f.space.degree + 2 * m.geom_order + 6).unwrap();
    let mut acc = 0.0;
    for e in 0..m.num_triangles() {
        let vals = f.eval_vector(e, &rule.points);
        for (q, (xi, w)) in rule.iter().enumerate() {
            let ev = m.map(e).eval(*xi);
            let u = exact(ev.x);
            acc += w * ev.det * ((vals[q].0[0] - u[0]).powi(2) + (vals[q].0[1] - u[1]).powi(2));
        }
    }
    acc.sqrt()
}

fn slope(h: &[f64], e: &[f64]) -> f64 {
    let n = h.len() as f64;
    let lx: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let num: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    num / lx.iter().map(|x| (x - mx).powi(2)).sum::<f64>()
}

#[test]
fn interpolation_converges_at_optimal_rate() {
    let u = |x: [f64; 2]| {
        let s = (std::f64::consts::PI * x[0]).sin() * (std::f64::consts::PI * x[1]).cos();
        [-x[1] * s, x[0] * s]
    };
    for p in 1..=3 {
        for family in [Family::VectorLagrange, Family::VectorDg, Family::HdivBdm] {
            let (mut hs, mut es) = (Vec::new(), Vec::new());
            let mut mesh = make_unit_disc_mesh(1, p.max(2));
            for _ in 0..3 {
                let m = Arc::new(mesh.clone());
                let s = space(family, &m, p);
                hs.push(m.mesh_size());
                es.push(l2_error(&interpolate(&s, &u).unwrap(), &u));
                mesh = mesh.refine();
            }
            let r = slope(&hs, &es);
            assert!(r >= p as f64 + 0.9 - 0.15, "{family:?} p={p}: slope {r}");
        }
    }
}

#[test]
fn interpolation_rate_does_not_degrade_with_geometry_order() {
    let u = |x: [f64; 2]| {
        let s = (std::f64::consts::PI * x[0]).sin() * (std::f64::consts::PI * x[1]).cos();
        [-x[1] * s, x[0] * s]
    };
    let p = 3;
    for g in [3, 5, 6] {
        for family in [Family::VectorLagrange, Family::HdivBdm] {
            let (mut hs, mut es) = (Vec::new(), Vec::new());
            for l in 1..=3 {
                let m = Arc::new(make_unit_disc_mesh(l, g));
                hs.push(m.mesh_size());
                es.push(l2_error(&interpolate(&space(family, &m, p), &u).unwrap(), &u));
            }
            let r = slope(&hs, &es);
            assert!(r >= p as f64 + 0.9 - 0.15, "{family:?} g={g}: slope {r}");
        }
    }
}

#[test]
fn l2_projection_examples() {
    let m = Arc::new(make_unit_square_mesh(2));
    for k in 1..=3 {
        let s = space(Family::ScalarLagrange, &m, k);
        let one = l2_project(&s, &|_| 1.0, &|x| 1.0 + x[0]).unwrap();
        assert!(one.coeffs.iter().all(|c| (c - 1.0).abs() < 1e-11));
        // a member of the space is reproduced
        let f = random_field(&s, 8);
        let g = l2_project(&s, &|x| {
            let (e, xi) = m.locate(x).unwrap();
            f.eval_scalar(e, &[xi])[0].0
        }, &|_| 2.0)
        .unwrap();
        for (a, b) in f.coeffs.iter().zip(&g.coeffs) {
            assert!((a - b).abs() < 1e-11);
        }
    }
}

#[test]
fn l2_projection_matches_least_squares_oracle() {
    let m = Arc::new(make_unit_square_mesh(1));
    let s = space(Family::ScalarLagrange, &m, 1);
    let proj = l2_project(&s, &|x| x[0] * x[0], &|_| 1.0).unwrap();
    // weighted least squares over exact quadrature samples
    let rule = triangle_rule(6).unwrap();
    let n = s.ndof();
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for e in 0..m.num_triangles() {
        let geo = s.map_evals(e, &rule.points);
        let sh = s.eval_scalar(e, &rule.points, &geo);
        for (q, w) in rule.weights.iter().enumerate() {
            let sw = (w * geo[q].det).sqrt();
            let mut row = vec![0.0; n];
            for a in 0..sh.nbasis {
                row[s.element_dofs(e)[a]] += sw * sh.value[sh.idx(q, a)];
            }
            rows.push(row);
            rhs.push(sw * geo[q].x[0] * geo[q].x[0]);
        }
    }
    let a = DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]);
    let b = DVector::from_vec(rhs);
    let svd = a.svd(true, true);
    let x = svd.solve(&b, 1e-14).unwrap();
    for i in 0..n {
        assert!((x[i] - proj.coeffs[i]).abs() < 1e-12);
    }
}
