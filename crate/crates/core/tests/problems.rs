use galbrun::problems::{
    convergence_problem, fd_gradient, fd_operator, gradrob_problem, locking_problem, sample_points, FD_STEP,
};

#[test]
fn convergence_solution_values() {
    let pb = convergence_problem(2).unwrap();
    let u = pb.exact.as_ref().unwrap();
    assert_eq!((u.value)([0.0, 0.0]), [0.0, 0.0]);
    let v = (u.value)([0.5, 0.0]);
    assert!(v[0].abs() < 1e-15 && (v[1] - 0.5).abs() < 1e-15);
    assert_eq!(pb.coeffs.lambda_b, 40.0);
    assert_eq!(pb.coeffs.lambda_n, 400.0);
}

#[test]
fn convergence_forcing_matches_finite_differences() {
    let pb = convergence_problem(1).unwrap();
    let u = pb.exact.as_ref().unwrap();
    let x = [0.3, 0.4];
    let fd = fd_operator(u, &pb.coeffs, x, FD_STEP);
    let f = (pb.forcing)(x);
    let scale = f[0].abs().max(f[1].abs());
    assert!((fd[0] - f[0]).abs() <= 1e-4 * scale && (fd[1] - f[1]).abs() <= 1e-4 * scale);
}

#[test]
fn all_problems_pass_their_gates() {
    for p in 1..=4 {
        let r = convergence_problem(p).unwrap().gate().unwrap();
        assert!(r.gradient <= 1e-6 && r.forcing <= 1e-4);
        for cs2 in [1.0, 10.0, 100.0, 1000.0] {
            locking_problem(p, cs2).unwrap().gate().unwrap();
            gradrob_problem(p, cs2).unwrap().gate().unwrap();
        }
    }
}

#[test]
fn locking_solution_is_divergence_free_and_tangential() {
    let pb = locking_problem(2, 1000.0).unwrap();
    let u = pb.exact.as_ref().unwrap();
    for x in sample_points(20, 0.99) {
        assert!(u.div(x).abs() <= 1e-10);
        let fd = fd_gradient(&u.value, x, FD_STEP);
        assert!(fd.trace().abs() <= 1e-8);
    }
    assert_eq!((u.value)([0.0, 0.0]), [0.0, 0.0]);
    for k in 0..12 {
        let t = k as f64 * 0.5;
        let x = [t.cos(), t.sin()];
        let v = (u.value)(x);
        assert!((v[0] * x[0] + v[1] * x[1]).abs() < 1e-15);
        // cos(pi) = -1
        assert!((v[0] - x[1]).abs() < 1e-12 && (v[1] + x[0]).abs() < 1e-12);
    }
}

#[test]
fn locking_forcing_is_independent_of_sound_speed() {
    let a = locking_problem(2, 1.0).unwrap();
    let b = locking_problem(2, 1000.0).unwrap();
    for x in sample_points(20, 0.95) {
        let (fa, fb) = ((a.forcing)(x), (b.forcing)(x));
        assert!((fa[0] - fb[0]).abs() <= 1e-14 && (fa[1] - fb[1]).abs() <= 1e-14);
        // f = -(beta^2 + |b|_inf^2) s r_perp = -0.02 cos(pi r^2) (-y, x)
        let s = (std::f64::consts::PI * (x[0] * x[0] + x[1] * x[1])).cos();
        assert!((fa[0] - 0.02 * s * x[1]).abs() < 1e-14 && (fa[1] + 0.02 * s * x[0]).abs() < 1e-14);
    }
}

#[test]
fn gradient_forcing() {
    let pb = gradrob_problem(3, 10.0).unwrap();
    assert!(pb.exact.is_none());
    assert_eq!((pb.forcing)([0.0, 0.0]), [0.0, 0.0]);
    assert_eq!((pb.forcing)([1.0, 1.0]), [6.0, 6.0]);
    for x in sample_points(20, 0.95) {
        let g = fd_gradient(&pb.forcing, x, FD_STEP);
        assert!((g[(1, 0)] - g[(0, 1)]).abs() <= 1e-10);
    }
}

#[test]
fn invalid_parameters_are_rejected() {
    assert!(convergence_problem(0).is_err());
    assert!(convergence_problem(5).is_err());
    assert!(locking_problem(2, 0.0).is_err());
    assert!(gradrob_problem(3, -1.0).is_err());
}

#[test]
fn background_flow_is_tangential_on_the_boundary() {
    for pb in [convergence_problem(2).unwrap(), locking_problem(2, 10.0).unwrap(), gradrob_problem(3, 10.0).unwrap()] {
        let mut worst: f64 = 0.0;
        for k in 0..256 {
            let t = std::f64::consts::TAU * k as f64 / 256.0;
            let n = [t.cos(), t.sin()];
            let b = (pb.coeffs.b_flow)(n);
            worst = worst.max((b[0] * n[0] + b[1] * n[1]).abs());
        }
        assert!(worst < 1e-14, "max |b.n| = {worst:e}");
    }
}
