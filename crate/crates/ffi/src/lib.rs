//! C ABI over the `galbrun` solver.
//!
//! Objects are opaque heap handles released with their `*_free` function.
//! Every fallible call returns a [`GalbrunStatus`]; on failure a message is
//! kept per thread and read with [`galbrun_last_error_message`]. Panics are
//! caught at the boundary and reported as `GALBRUN_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use galbrun::forms::{assemble_method, ErrorNorms, Method, Solution};
use galbrun::functions::ExactSolution;
use galbrun::mesh::{make_unit_disc_mesh, make_unit_square_mesh, Mesh};
use galbrun::problems::{convergence_problem, gradrob_problem, locking_problem};
use galbrun::study::{run_diagnostics, DiagnosticsConfig};
use galbrun::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GalbrunStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    UnsupportedDegree = 3,
    SingularMatrix = 4,
    SizeLimit = 5,
    Io = 6,
    Panic = 7,
    Internal = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GalbrunMethod {
    /// H1-conforming
    M1 = 1,
    /// Taylor-Hood with pseudo-pressure
    M2 = 2,
    /// H(div)-conforming BDM
    M3 = 3,
    /// Fully discontinuous
    M4 = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GalbrunProblem {
    /// Manufactured rotating solution, `c_s^2 = 1`
    Convergence = 0,
    /// Divergence-free solution with the given `c_s^2`
    Locking = 1,
    /// Gradient forcing with the given `c_s^2`, no exact solution
    Gradrob = 2,
}

/// Opaque mesh handle.
pub struct GalbrunMesh {
    mesh: Arc<Mesh>,
}

/// Opaque discrete solution handle.
pub struct GalbrunSolution {
    solution: Solution,
    exact: ExactSolution,
    has_exact: bool,
    ndof: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GalbrunErrorNorms {
    pub l2_error: f64,
    pub xh_error: f64,
    pub l2_norm: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GalbrunDiagnostics {
    pub c_bh: f64,
    /// `(c_bh - 1) / (c_bh + 1)`; meaningful only when `has_c_hat` is 1.
    pub c_hat: f64,
    pub has_c_hat: u8,
    pub kernel_dim: usize,
    pub complement_dim: usize,
    pub dim: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> GalbrunStatus {
    match e {
        Error::UnsupportedDegree(_) | Error::DegreeTooLow { .. } => GalbrunStatus::UnsupportedDegree,
        Error::SingularMatrix(_) | Error::NotPositiveDefinite(_) | Error::SingularLocalMatrix { .. } => {
            GalbrunStatus::SingularMatrix
        }
        Error::SizeLimit { .. } => GalbrunStatus::SizeLimit,
        Error::Io(_) | Error::Csv(_) => GalbrunStatus::Io,
        Error::InvalidMethod(_) | Error::Precondition(_) | Error::Parse(_) | Error::DimensionMismatch { .. } => {
            GalbrunStatus::InvalidArgument
        }
        Error::UnsupportedQuadratureOrder { .. } => GalbrunStatus::Internal,
    }
}

/// Runs `f` behind a panic guard and records the error message.
fn guard(f: impl FnOnce() -> Result<(), (GalbrunStatus, String)>) -> GalbrunStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            GalbrunStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(&format!("panic: {msg}"));
            GalbrunStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (GalbrunStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (GalbrunStatus, String) {
    (GalbrunStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> (GalbrunStatus, String) {
    (GalbrunStatus::InvalidArgument, msg.into())
}

fn method_of(m: GalbrunMethod) -> Method {
    match m {
        GalbrunMethod::M1 => Method::M1,
        GalbrunMethod::M2 => Method::M2,
        GalbrunMethod::M3 => Method::M3,
        GalbrunMethod::M4 => Method::M4,
    }
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn galbrun_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn galbrun_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => c"",
    };
    VERSION.as_ptr()
}

/// Unit-disc mesh after `level` red refinements with boundary geometry of
/// order `geom_order >= 1`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn galbrun_mesh_new_disc(level: usize, geom_order: usize, out: *mut *mut GalbrunMesh) -> GalbrunStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if geom_order == 0 || geom_order > 8 || level > 8 {
            return Err(invalid(format!("level {level} or geometry order {geom_order} out of range")));
        }
        let mesh = Arc::new(make_unit_disc_mesh(level, geom_order));
        *out = Box::into_raw(Box::new(GalbrunMesh { mesh }));
        Ok(())
    })
}

/// Unit-square mesh of `n x n` cells split into triangles.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn galbrun_mesh_new_square(n: usize, out: *mut *mut GalbrunMesh) -> GalbrunStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if n == 0 || n > 512 {
            return Err(invalid(format!("square subdivision {n} out of range")));
        }
        *out = Box::into_raw(Box::new(GalbrunMesh { mesh: Arc::new(make_unit_square_mesh(n)) }));
        Ok(())
    })
}

/// Releases a mesh. Null is ignored.
///
/// # Safety
/// `mesh` must be null or a handle returned by a `galbrun_mesh_new_*` call
/// that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn galbrun_mesh_free(mesh: *mut GalbrunMesh) {
    if !mesh.is_null() {
        drop(Box::from_raw(mesh));
    }
}

/// Triangle, vertex and facet counts and the mesh size `h`.
///
/// # Safety
/// `mesh` must be a live handle; each output pointer may be null.
#[no_mangle]
pub unsafe extern "C" fn galbrun_mesh_info(
    mesh: *const GalbrunMesh,
    num_triangles: *mut usize,
    num_vertices: *mut usize,
    num_facets: *mut usize,
    h: *mut f64,
) -> GalbrunStatus {
    guard(|| {
        let m = &mesh.as_ref().ok_or_else(|| null("mesh"))?.mesh;
        if !num_triangles.is_null() {
            *num_triangles = m.num_triangles();
        }
        if !num_vertices.is_null() {
            *num_vertices = m.num_vertices();
        }
        if !num_facets.is_null() {
            *num_facets = m.num_facets();
        }
        if !h.is_null() {
            *h = m.mesh_size();
        }
        Ok(())
    })
}

/// Assembles and solves one method of degree `p` for a built-in problem on
/// a disc mesh. `cs2` is ignored by the convergence problem.
///
/// # Safety
/// `mesh` must be a live handle and `out` valid storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn galbrun_solve(
    mesh: *const GalbrunMesh,
    method: GalbrunMethod,
    p: usize,
    problem: GalbrunProblem,
    cs2: f64,
    out: *mut *mut GalbrunSolution,
) -> GalbrunStatus {
    guard(|| {
        let m = mesh.as_ref().ok_or_else(|| null("mesh"))?.mesh.clone();
        if out.is_null() {
            return Err(null("out"));
        }
        if m.domain != galbrun::mesh::Domain::UnitDisc {
            return Err(invalid("the built-in problems live on the unit disc"));
        }
        let pb = match problem {
            GalbrunProblem::Convergence => convergence_problem(p),
            GalbrunProblem::Locking => locking_problem(p, cs2),
            GalbrunProblem::Gradrob => gradrob_problem(p, cs2),
        }
        .map_err(lib_err)?;
        let d = assemble_method(method_of(method), m, p, &pb.coeffs, &pb.forcing).map_err(lib_err)?;
        let solution = d.solve().map_err(lib_err)?;
        let has_exact = pb.exact.is_some();
        let exact = pb.exact.unwrap_or_else(ExactSolution::zero);
        *out = Box::into_raw(Box::new(GalbrunSolution { solution, exact, has_exact, ndof: d.system.dim() }));
        Ok(())
    })
}

/// Releases a solution. Null is ignored.
///
/// # Safety
/// `solution` must be null or a live handle from [`galbrun_solve`].
#[no_mangle]
pub unsafe extern "C" fn galbrun_solution_free(solution: *mut GalbrunSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// Number of unknowns of the solved system (velocity plus pseudo-pressure).
///
/// # Safety
/// `solution` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn galbrun_solution_ndof(solution: *const GalbrunSolution, out: *mut usize) -> GalbrunStatus {
    guard(|| {
        let s = solution.as_ref().ok_or_else(|| null("solution"))?;
        *out.as_mut().ok_or_else(|| null("out"))? = s.ndof;
        Ok(())
    })
}

/// Error norms against the exact solution. Without one (gradient problem)
/// the errors are taken against zero, so `l2_error == l2_norm`.
///
/// # Safety
/// `solution` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn galbrun_solution_error_norms(
    solution: *const GalbrunSolution,
    out: *mut GalbrunErrorNorms,
) -> GalbrunStatus {
    guard(|| {
        let s = solution.as_ref().ok_or_else(|| null("solution"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let ErrorNorms { l2_error, xh_error, l2_norm } = s.solution.error_norms(&s.exact).map_err(lib_err)?;
        *out = GalbrunErrorNorms { l2_error, xh_error, l2_norm };
        Ok(())
    })
}

/// Whether the solved problem has a known exact solution (1) or not (0).
///
/// # Safety
/// `solution` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn galbrun_solution_has_exact(solution: *const GalbrunSolution) -> u8 {
    solution.as_ref().map_or(0, |s| u8::from(s.has_exact))
}

/// Velocity at the physical point `(x, y)`, written to `out[0..2]`.
///
/// # Safety
/// `solution` must be a live handle and `out` point to two doubles.
#[no_mangle]
pub unsafe extern "C" fn galbrun_solution_eval(
    solution: *const GalbrunSolution,
    x: f64,
    y: f64,
    out: *mut f64,
) -> GalbrunStatus {
    guard(|| {
        let s = solution.as_ref().ok_or_else(|| null("solution"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let v = s.solution.velocity.value_at([x, y]).ok_or_else(|| invalid(format!("({x}, {y}) is outside the mesh")))?;
        *out = v[0];
        *out.add(1) = v[1];
        Ok(())
    })
}

/// Dense stability constants of `method` on the disc mesh of `level` with
/// the default coefficients. Fails with `GALBRUN_STATUS_SIZE_LIMIT` on large
/// problems.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn galbrun_diagnostics(
    method: GalbrunMethod,
    level: usize,
    p: usize,
    out: *mut GalbrunDiagnostics,
) -> GalbrunStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let r = run_diagnostics(&DiagnosticsConfig::new(method_of(method), level, p), None).map_err(lib_err)?;
        *out = GalbrunDiagnostics {
            c_bh: r.control.c_bh,
            c_hat: r.control.c_hat.unwrap_or(f64::NAN),
            has_c_hat: u8::from(r.control.c_hat.is_some()),
            kernel_dim: r.control.kernel_dim,
            complement_dim: r.control.complement_dim,
            dim: r.dim,
        };
        Ok(())
    })
}
