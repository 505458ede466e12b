//! Manufactured problems for the convergence, locking and gradient-robustness
//! studies.
//!
//! All exact solutions have the form `u = s(x, y) r_perp` with
//! `r_perp = (-y, x)`, and all flows are `b = beta r_perp` with constant
//! `rho`, `c_s`. Writing `D = -y d_x + x d_y` for the derivative along
//! `r_perp` and `r = (x, y)`:
//!
//! ```text
//! div u          = D s = -y s_x + x s_y
//! grad div u     = (-y s_xx + s_y + x s_xy, -s_x - y s_xy + x s_yy)
//! D r_perp       = -r,   D r = r_perp
//! (b.grad) u     = beta ((D s) r_perp - s r)
//! (b.grad)^2 u   = beta^2 ((D^2 s - s) r_perp - 2 (D s) r)
//! D^2 s          = y^2 s_xx - 2 x y s_xy + x^2 s_yy - y s_y - x s_x
//! ```
//!
//! so that `f = -rho c^2 grad div u + rho (b.grad)^2 u - |b|_inf^2 rho u`.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{Matrix2, Vector2};

use crate::error::{Error, Result};
use crate::forms::{CoefficientSet, FLOW_SPEED};
use crate::functions::{ExactSolution, VectorFn};
use crate::mesh::Point;

/// A forcing term together with its coefficients and, when known, the exact
/// solution.
#[derive(Clone)]
pub struct ManufacturedProblem {
    pub name: &'static str,
    pub exact: Option<ExactSolution>,
    pub coeffs: CoefficientSet,
    pub forcing: VectorFn,
}

impl std::fmt::Debug for ManufacturedProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ManufacturedProblem")
            .field("name", &self.name)
            .field("coeffs", &self.coeffs)
            .finish_non_exhaustive()
    }
}

/// A scalar profile with derivatives up to second order.
#[derive(Debug, Clone, Copy)]
struct Jet {
    s: f64,
    sx: f64,
    sy: f64,
    sxx: f64,
    sxy: f64,
    syy: f64,
}

type Profile = fn(Point) -> Jet;

fn sin_cos(p: Point) -> Jet {
    let (sx, cx) = (PI * p[0]).sin_cos();
    let (sy, cy) = (PI * p[1]).sin_cos();
    let s = sx * cy;
    Jet { s, sx: PI * cx * cy, sy: -PI * sx * sy, sxx: -PI * PI * s, sxy: -PI * PI * cx * sy, syy: -PI * PI * s }
}

fn radial_cos(p: Point) -> Jet {
    let (x, y) = (p[0], p[1]);
    let (sn, cs) = (PI * (x * x + y * y)).sin_cos();
    Jet {
        s: cs,
        sx: -2.0 * PI * x * sn,
        sy: -2.0 * PI * y * sn,
        sxx: -2.0 * PI * sn - 4.0 * PI * PI * x * x * cs,
        sxy: -4.0 * PI * PI * x * y * cs,
        syy: -2.0 * PI * sn - 4.0 * PI * PI * y * y * cs,
    }
}

fn rotated_exact(profile: Profile) -> ExactSolution {
    ExactSolution::new(
        Arc::new(move |p| {
            let s = profile(p).s;
            [-p[1] * s, p[0] * s]
        }),
        Arc::new(move |p| {
            let j = profile(p);
            let (x, y) = (p[0], p[1]);
            Matrix2::new(-y * j.sx, -j.s - y * j.sy, j.s + x * j.sx, x * j.sy)
        }),
    )
}

/// Closed-form forcing for `u = s r_perp`, `b = beta r_perp`, constant
/// `rho`, `c^2`.
fn rotated_forcing(profile: Profile, rho: f64, c2: f64, beta: f64, b_inf: f64) -> VectorFn {
    Arc::new(move |p| {
        let j = profile(p);
        let (x, y) = (p[0], p[1]);
        let ds = -y * j.sx + x * j.sy;
        let d2s = y * y * j.sxx - 2.0 * x * y * j.sxy + x * x * j.syy - y * j.sy - x * j.sx;
        let grad_div = [-y * j.sxx + j.sy + x * j.sxy, -j.sx - y * j.sxy + x * j.syy];
        let rperp = [-y, x];
        let r = [x, y];
        let mut f = [0.0; 2];
        for k in 0..2 {
            let conv2 = beta * beta * ((d2s - j.s) * rperp[k] - 2.0 * ds * r[k]);
            f[k] = -rho * c2 * grad_div[k] + rho * conv2 - b_inf * b_inf * rho * j.s * rperp[k];
        }
        f
    })
}

fn check_degree(p: usize) -> Result<()> {
    if (1..=4).contains(&p) {
        Ok(())
    } else {
        Err(Error::UnsupportedDegree(p))
    }
}

fn penalty(p: usize, factor: f64) -> f64 {
    factor * (p * p) as f64
}

/// `u = sin(pi x) cos(pi y) (-y, x)` on the unit disc with `rho = c_s = 1`,
/// `b = 0.1 (-y, x)`, `lambda_b = 10 p^2`, `lambda_n = 100 p^2`.
pub fn convergence_problem(p: usize) -> Result<ManufacturedProblem> {
    check_degree(p)?;
    let coeffs = CoefficientSet::rotating_flow(1.0, penalty(p, 10.0), penalty(p, 100.0));
    Ok(ManufacturedProblem {
        name: "convergence",
        exact: Some(rotated_exact(sin_cos)),
        forcing: rotated_forcing(sin_cos, 1.0, 1.0, FLOW_SPEED, coeffs.b_inf),
        coeffs,
    })
}

/// Divergence-free `u = cos(pi (x^2 + y^2)) (-y, x)` with `c_s^2 = cs2` and
/// `lambda_b = lambda_n = 10 p^2`. Neither `u` nor `f` depend on `cs2`.
pub fn locking_problem(p: usize, cs2: f64) -> Result<ManufacturedProblem> {
    check_degree(p)?;
    check_cs2(cs2)?;
    let coeffs = CoefficientSet::rotating_flow(cs2, penalty(p, 10.0), penalty(p, 10.0));
    Ok(ManufacturedProblem {
        name: "locking",
        exact: Some(rotated_exact(radial_cos)),
        // div u = 0, so the grad-div term drops and f does not see cs2
        forcing: rotated_forcing(radial_cos, 1.0, 0.0, FLOW_SPEED, coeffs.b_inf),
        coeffs,
    })
}

/// Gradient forcing `f = grad(x^6 + y^6)` with the locking coefficients and
/// no known exact solution.
pub fn gradrob_problem(p: usize, cs2: f64) -> Result<ManufacturedProblem> {
    check_degree(p)?;
    check_cs2(cs2)?;
    Ok(ManufacturedProblem {
        name: "gradrob",
        exact: None,
        coeffs: CoefficientSet::rotating_flow(cs2, penalty(p, 10.0), penalty(p, 10.0)),
        forcing: Arc::new(|x| [6.0 * x[0].powi(5), 6.0 * x[1].powi(5)]),
    })
}

fn check_cs2(cs2: f64) -> Result<()> {
    if cs2 > 0.0 && cs2.is_finite() {
        Ok(())
    } else {
        Err(Error::Precondition(format!("c_s^2 = {cs2} must be positive")))
    }
}

/// Finite-difference step of the gate checks.
pub const FD_STEP: f64 = 1e-5;
/// Tolerance on the relative gradient discrepancy.
pub const GRADIENT_TOL: f64 = 1e-6;
/// Tolerance on the relative forcing discrepancy.
pub const FORCING_TOL: f64 = 1e-4;

/// `n` deterministic points spread over the disc of radius `radius`
/// (sunflower spiral).
pub fn sample_points(n: usize, radius: f64) -> Vec<Point> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let r = radius * ((i as f64 + 0.5) / n as f64).sqrt();
            let t = golden * i as f64;
            [r * t.cos(), r * t.sin()]
        })
        .collect()
}

/// Central-difference Jacobian of `u` at `x`.
pub fn fd_gradient(u: &VectorFn, x: Point, h: f64) -> Matrix2<f64> {
    let mut g = Matrix2::zeros();
    for j in 0..2 {
        let (mut a, mut b) = (x, x);
        a[j] += h;
        b[j] -= h;
        let (ua, ub) = (u(a), u(b));
        for i in 0..2 {
            g[(i, j)] = (ua[i] - ub[i]) / (2.0 * h);
        }
    }
    g
}

/// `-grad(rho c^2 div u) + d_b(rho d_b u) - |b|_inf^2 rho u` at `x`, with the
/// outer derivatives taken by central differences of the analytic inner
/// fields.
pub fn fd_operator(exact: &ExactSolution, coeffs: &CoefficientSet, x: Point, h: f64) -> [f64; 2] {
    let flux = |y: Point| {
        let c = (coeffs.c_s)(y);
        (coeffs.rho)(y) * c * c * exact.div(y)
    };
    let stream = |y: Point| {
        let b = (coeffs.b_flow)(y);
        (coeffs.rho)(y) * ((exact.grad)(y) * Vector2::new(b[0], b[1]))
    };
    let b = (coeffs.b_flow)(x);
    let grad_flux = [
        (flux([x[0] + h, x[1]]) - flux([x[0] - h, x[1]])) / (2.0 * h),
        (flux([x[0], x[1] + h]) - flux([x[0], x[1] - h])) / (2.0 * h),
    ];
    let conv = (stream([x[0] + h * b[0], x[1] + h * b[1]]) - stream([x[0] - h * b[0], x[1] - h * b[1]])) / (2.0 * h);
    let u = (exact.value)(x);
    let zeroth = coeffs.b_inf * coeffs.b_inf * (coeffs.rho)(x);
    [-grad_flux[0] + conv[0] - zeroth * u[0], -grad_flux[1] + conv[1] - zeroth * u[1]]
}

/// Largest relative discrepancies found by [`ManufacturedProblem::gate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateReport {
    pub gradient: f64,
    pub forcing: f64,
}

fn relative(pairs: &[(Vec<f64>, Vec<f64>)]) -> f64 {
    let num = pairs.iter().map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max));
    let den = pairs.iter().map(|(_, b)| b.iter().fold(0.0f64, |m, v| m.max(v.abs()))).fold(0.0, f64::max);
    num.fold(0.0, f64::max) / den.max(f64::MIN_POSITIVE)
}

impl ManufacturedProblem {
    /// Checks the analytic gradient and forcing against finite differences at
    /// 20 interior points. Discrepancies are measured relative to the largest
    /// analytic value over the sample. Problems without an exact solution
    /// instead check that the forcing is curl-free.
    pub fn gate(&self) -> Result<GateReport> {
        let pts = sample_points(20, 0.95);
        let h = FD_STEP;
        let Some(exact) = &self.exact else {
            let (mut curl, mut scale) = (0.0f64, 0.0f64);
            for &x in &pts {
                let g = fd_gradient(&self.forcing, x, h);
                curl = curl.max((g[(1, 0)] - g[(0, 1)]).abs());
                scale = scale.max(g.abs().max());
            }
            let report = GateReport { gradient: 0.0, forcing: curl / scale.max(f64::MIN_POSITIVE) };
            return check(report);
        };
        let grads: Vec<_> = pts
            .iter()
            .map(|&x| {
                let fd = fd_gradient(&exact.value, x, h);
                (fd.as_slice().to_vec(), (exact.grad)(x).as_slice().to_vec())
            })
            .collect();
        let forces: Vec<_> = pts
            .iter()
            .map(|&x| (fd_operator(exact, &self.coeffs, x, h).to_vec(), (self.forcing)(x).to_vec()))
            .collect();
        check(GateReport { gradient: relative(&grads), forcing: relative(&forces) })
    }
}

fn check(report: GateReport) -> Result<GateReport> {
    if report.gradient > GRADIENT_TOL || report.forcing > FORCING_TOL {
        return Err(Error::Precondition(format!(
            "manufactured problem fails finite-difference gate: gradient {:.2e}, forcing {:.2e}",
            report.gradient, report.forcing
        )));
    }
    Ok(report)
}
