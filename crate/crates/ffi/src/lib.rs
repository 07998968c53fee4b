//! C ABI for the mixed-dbc library.
//!
//! Every object crosses the boundary as an opaque handle created by a
//! constructor function and released with the matching `*_free`.
//! Functions return an [`MdbcStatus`]; on failure a description is kept per
//! thread and can be read with [`mdbc_last_error`]. Array outputs follow the
//! two-call convention: pass a buffer with its capacity, the required length
//! is always written to `*len_out`, and [`MdbcStatus::BufferTooSmall`] is
//! returned when the capacity is insufficient.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mixed_dbc::estimator::{compute_indicators, dorfler_mark, IndicatorField, N_TERMS};
use mixed_dbc::mesh::{Mesh, Point};
use mixed_dbc::problems::{by_name, ControlProblem};
use mixed_dbc::solver::DiscreteSolution;
use mixed_dbc::verify::compute_errors;
use mixed_dbc::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MdbcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    MeshMismatch = 3,
    Singular = 4,
    UnknownProblem = 5,
    BufferTooSmall = 6,
    Internal = 7,
    Panic = 8,
}

/// Discrete field selector for [`mdbc_solution_field`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MdbcField {
    /// State flux, one value per edge.
    P = 0,
    /// State, one value per triangle.
    Y = 1,
    /// Adjoint flux, one value per edge.
    R = 2,
    /// Adjoint state, one value per triangle.
    Z = 3,
    /// Control, one value per vertex.
    U = 4,
}

/// Triangulation handle.
pub struct MdbcMesh(Mesh);

/// Control problem handle.
pub struct MdbcProblem(ControlProblem);

/// Discrete solution handle.
pub struct MdbcSolution(DiscreteSolution);

/// Error indicator handle.
pub struct MdbcIndicators(IndicatorField);

/// Number of global estimator aggregates.
pub const MDBC_N_AGGREGATES: usize = 16;

const _: () = assert!(MDBC_N_AGGREGATES == N_TERMS);

/// Errors against the exact solution of a manufactured problem.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MdbcErrorNorms {
    pub y_l2: f64,
    pub z_l2: f64,
    pub u_l2: f64,
    pub p_hdiv: f64,
    pub r_hdiv: f64,
    pub u_h1: f64,
    /// Sum of the control seminorm and the four state/adjoint errors.
    pub total: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> MdbcStatus {
    match e {
        Error::InvalidArgument(_) | Error::WrongSpace { .. } | Error::DegenerateTriangle(_) | Error::Config(_) => {
            MdbcStatus::InvalidArgument
        }
        Error::MeshMismatch(_) => MdbcStatus::MeshMismatch,
        Error::Singular(_) | Error::ResidualContract(_) => MdbcStatus::Singular,
        Error::UnknownProblem(_) => MdbcStatus::UnknownProblem,
        Error::AtLevel { source, .. } => status_of(source),
        Error::Io(_) => MdbcStatus::Internal,
    }
}

struct Fail(MdbcStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

type FfiResult = std::result::Result<(), Fail>;

/// Runs `f`, records any failure for [`mdbc_last_error`] and converts
/// panics into [`MdbcStatus::Panic`].
fn guard(f: impl FnOnce() -> FfiResult) -> MdbcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            MdbcStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(&format!("internal panic: {msg}"));
            MdbcStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(MdbcStatus::NullPointer, format!("{what} is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

/// Copies `src` into `(buf, cap)` and reports the required length.
unsafe fn copy_out<T: Copy>(src: &[T], buf: *mut T, cap: usize, len_out: *mut usize) -> FfiResult {
    *out_ptr(len_out, "len_out")? = src.len();
    if cap < src.len() {
        return Err(Fail(
            MdbcStatus::BufferTooSmall,
            format!("buffer holds {cap} values, {} needed", src.len()),
        ));
    }
    if !src.is_empty() {
        if buf.is_null() {
            return Err(null("buf"));
        }
        ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    }
    Ok(())
}

unsafe fn slice_in<'a, T>(p: *const T, n: usize, what: &str) -> Result<&'a [T], Fail> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

fn boxed<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

/// Message describing the last failed call on this thread, or an empty
/// string. Valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn mdbc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a NUL-terminated string with static lifetime.
#[no_mangle]
pub extern "C" fn mdbc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

// ---- meshes ----

/// Unit square split into `n x n` cells of two triangles each.
///
/// # Safety
/// `out` must be a valid pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn mdbc_mesh_unit_square(n: usize, out: *mut *mut MdbcMesh) -> MdbcStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = boxed(MdbcMesh(Mesh::unit_square(n)?));
        Ok(())
    })
}

/// Coarse L-shaped mesh of six triangles with the reentrant corner at the
/// origin.
///
/// # Safety
/// `out` must be a valid pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn mdbc_mesh_lshape(out: *mut *mut MdbcMesh) -> MdbcStatus {
    guard(|| {
        *out_ptr(out, "out")? = boxed(MdbcMesh(Mesh::lshape()));
        Ok(())
    })
}

/// Mesh from interleaved coordinates `xy` (`2 * n_vertices` values) and
/// counter-clockwise cells (`3 * n_triangles` vertex indices).
///
/// # Safety
/// `xy` and `cells` must point to arrays of the stated lengths; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn mdbc_mesh_from_arrays(
    xy: *const f64,
    n_vertices: usize,
    cells: *const usize,
    n_triangles: usize,
    out: *mut *mut MdbcMesh,
) -> MdbcStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let xy = slice_in(xy, 2 * n_vertices, "xy")?;
        let cells = slice_in(cells, 3 * n_triangles, "cells")?;
        let points = xy.chunks_exact(2).map(|c| Point::new(c[0], c[1])).collect();
        let cells: Vec<[usize; 3]> = cells.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        *out = boxed(MdbcMesh(Mesh::from_connectivity(points, &cells)?));
        Ok(())
    })
}

/// Releases a mesh. Null is ignored.
///
/// # Safety
/// `mesh` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mdbc_mesh_free(mesh: *mut MdbcMesh) {
    if !mesh.is_null() {
        drop(Box::from_raw(mesh));
    }
}

/// Vertex, edge and triangle counts. Any output pointer may be null.
///
/// # Safety
/// `mesh` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mdbc_mesh_counts(
    mesh: *const MdbcMesh,
    n_vertices: *mut usize,
    n_edges: *mut usize,
    n_triangles: *mut usize,
) -> MdbcStatus {
    guard(|| {
        let m = &deref(mesh, "mesh")?.0;
        if let Some(v) = n_vertices.as_mut() {
            *v = m.n_vertices();
        }
        if let Some(v) = n_edges.as_mut() {
            *v = m.n_edges();
        }
        if let Some(v) = n_triangles.as_mut() {
            *v = m.n_triangles();
        }
        Ok(())
    })
}

/// Interleaved vertex coordinates, `2 * n_vertices` values.
///
/// # Safety
/// `buf` must hold `cap` values; `len_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mdbc_mesh_coordinates(
    mesh: *const MdbcMesh,
    buf: *mut f64,
    cap: usize,
    len_out: *mut usize,
) -> MdbcStatus {
    guard(|| {
        let m = &deref(mesh, "mesh")?.0;
        let xy: Vec<f64> = m.points().iter().flat_map(|p| [p.x, p.y]).collect();
        copy_out(&xy, buf, cap, len_out)
    })
}

/// Triangle vertex indices, `3 * n_triangles` values.
///
/// # Safety
/// `buf` must hold `cap` values; `len_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mdbc_mesh_cells(
    mesh: *const MdbcMesh,
    buf: *mut usize,
    cap: usize,
    len_out: *mut usize,
) -> MdbcStatus {
    guard(|| {
        let m = &deref(mesh, "mesh")?.0;
        let cells: Vec<usize> = m.triangles().iter().flat_map(|t| t.vertices).collect();
        copy_out(&cells, buf, cap, len_out)
    })
}

/// Red refinement: every triangle split into four.
///
/// # Safety
/// `mesh` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mdbc_mesh_refine_uniform(mesh: *const MdbcMesh, out: *mut *mut MdbcMesh) -> MdbcStatus {
    guard(|| {
        let m = &deref(mesh, "mesh")?.0;
        *out_ptr(out, "out")? = boxed(MdbcMesh(m.uniform_refine()));
        Ok(())
    })
}

/// Newest-vertex bisection of the marked triangles plus conforming closure.
///
/// # Safety
/// `marked` must hold `n_marked` indices; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mdbc_mesh_refine_nvb(
    mesh: *const MdbcMesh,
    marked: *const usize,
    n_marked: usize,
    out: *mut *mut MdbcMesh,
) -> MdbcStatus {
    guard(|| {
        let m = &deref(mesh, "mesh")?.0;
        let out = out_ptr(out, "out")?;
        let marked = slice_in(marked, n_marked, "marked")?;
        *out = boxed(MdbcMesh(m.nvb_refine(marked)?));
        Ok(())
    })
}

// ---- problems ----

/// Built-in problem by name (`example1`, `example2`, `zero`). Pass NaN as
/// `alpha` to keep the problem's own regularization parameter.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mdbc_problem_by_name(name: *const c_char, alpha: f64, out: *mut *mut MdbcProblem) -> MdbcStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        if name.is_null() {
            return Err(null("name"));
        }
        let name = CStr::from_ptr(name)
            .to_str()
            .map_err(|_| Fail(MdbcStatus::InvalidArgument, "name is not UTF-8".into()))?;
        let alpha = (!alpha.is_nan()).then_some(alpha);
        *out = boxed(MdbcProblem(by_name(name, alpha)?));
        Ok(())
    })
}

/// Releases a problem. Null is ignored.
///
/// # Safety
/// `problem` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mdbc_problem_free(problem: *mut MdbcProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Coarse mesh of the problem's domain.
///
/// # Safety
/// `problem` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mdbc_problem_initial_mesh(problem: *const MdbcProblem, out: *mut *mut MdbcMesh) -> MdbcStatus {
    guard(|| {
        let p = &deref(problem, "problem")?.0;
        *out_ptr(out, "out")? = boxed(MdbcMesh(p.domain.initial_mesh()));
        Ok(())
    })
}

// ---- solutions ----

/// Solves the discrete optimality system of `problem` on `mesh`.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mdbc_solve(
    problem: *const MdbcProblem,
    mesh: *const MdbcMesh,
    out: *mut *mut MdbcSolution,
) -> MdbcStatus {
    guard(|| {
        let p = &deref(problem, "problem")?.0;
        let m = &deref(mesh, "mesh")?.0;
        let out = out_ptr(out, "out")?;
        *out = boxed(MdbcSolution(mixed_dbc::solve_optimality(p, m)?));
        Ok(())
    })
}

/// Releases a solution. Null is ignored.
///
/// # Safety
/// `solution` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mdbc_solution_free(solution: *mut MdbcSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// Coefficients of one discrete field.
///
/// # Safety
/// `buf` must hold `cap` values; `len_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mdbc_solution_field(
    solution: *const MdbcSolution,
    field: MdbcField,
    buf: *mut f64,
    cap: usize,
    len_out: *mut usize,
) -> MdbcStatus {
    guard(|| {
        let s = &deref(solution, "solution")?.0;
        let values = match field {
            MdbcField::P => s.p.values(),
            MdbcField::Y => s.y.values(),
            MdbcField::R => s.r.values(),
            MdbcField::Z => s.z.values(),
            MdbcField::U => s.u.values(),
        };
        copy_out(values, buf, cap, len_out)
    })
}

/// Errors against the exact solution; fails for problems without one.
///
/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mdbc_solution_errors(
    solution: *const MdbcSolution,
    problem: *const MdbcProblem,
    mesh: *const MdbcMesh,
    out: *mut MdbcErrorNorms,
) -> MdbcStatus {
    guard(|| {
        let s = &deref(solution, "solution")?.0;
        let p = &deref(problem, "problem")?.0;
        let m = &deref(mesh, "mesh")?.0;
        let out = out_ptr(out, "out")?;
        let exact = p
            .exact
            .as_ref()
            .ok_or_else(|| Fail(MdbcStatus::InvalidArgument, format!("problem `{}` has no exact solution", p.name)))?;
        let e = compute_errors(s, exact.as_ref(), m)?;
        *out = MdbcErrorNorms {
            y_l2: e.y_l2,
            z_l2: e.z_l2,
            u_l2: e.u_l2,
            p_hdiv: e.p_hdiv,
            r_hdiv: e.r_hdiv,
            u_h1: e.u_h1,
            total: e.total(),
        };
        Ok(())
    })
}

// ---- estimation and marking ----

/// Computes all estimator contributions for `solution`.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mdbc_estimate(
    solution: *const MdbcSolution,
    problem: *const MdbcProblem,
    mesh: *const MdbcMesh,
    out: *mut *mut MdbcIndicators,
) -> MdbcStatus {
    guard(|| {
        let s = &deref(solution, "solution")?.0;
        let p = &deref(problem, "problem")?.0;
        let m = &deref(mesh, "mesh")?.0;
        let out = out_ptr(out, "out")?;
        *out = boxed(MdbcIndicators(compute_indicators(s, p, m)?));
        Ok(())
    })
}

/// Releases an indicator field. Null is ignored.
///
/// # Safety
/// `indicators` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mdbc_indicators_free(indicators: *mut MdbcIndicators) {
    if !indicators.is_null() {
        drop(Box::from_raw(indicators));
    }
}

/// Total estimator value.
///
/// # Safety
/// `indicators` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mdbc_indicators_total(indicators: *const MdbcIndicators, out: *mut f64) -> MdbcStatus {
    guard(|| {
        let f = &deref(indicators, "indicators")?.0;
        *out_ptr(out, "out")? = f.total;
        Ok(())
    })
}

/// The `MDBC_N_AGGREGATES` global contributions, first six per element,
/// then five over interior edges, then five over boundary edges.
///
/// # Safety
/// `buf` must hold `cap` values; `len_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mdbc_indicators_aggregates(
    indicators: *const MdbcIndicators,
    buf: *mut f64,
    cap: usize,
    len_out: *mut usize,
) -> MdbcStatus {
    guard(|| {
        let f = &deref(indicators, "indicators")?.0;
        copy_out(&f.aggregates, buf, cap, len_out)
    })
}

/// Per-triangle marking indicator, one value per triangle.
///
/// # Safety
/// `buf` must hold `cap` values; `len_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mdbc_indicators_element(
    indicators: *const MdbcIndicators,
    buf: *mut f64,
    cap: usize,
    len_out: *mut usize,
) -> MdbcStatus {
    guard(|| {
        let f = &deref(indicators, "indicators")?.0;
        copy_out(&f.mu, buf, cap, len_out)
    })
}

/// Dörfler marking: the smallest set of triangles whose squared indicators
/// reach `theta` times the total, sorted ascending.
///
/// # Safety
/// `mu` must hold `n` values, `buf` `cap` values; `len_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mdbc_dorfler_mark(
    mu: *const f64,
    n: usize,
    theta: f64,
    buf: *mut usize,
    cap: usize,
    len_out: *mut usize,
) -> MdbcStatus {
    guard(|| {
        let mu = slice_in(mu, n, "mu")?;
        let marked = dorfler_mark(mu, theta)?;
        copy_out(&marked, buf, cap, len_out)
    })
}
