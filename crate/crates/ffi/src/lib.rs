//! C ABI over the `groundstate` library.
//!
//! Every entry point returns a [`GsStatus`]; results come back through out
//! pointers. Objects are opaque heap handles released with the matching
//! `gs_*_free`. A failing call stores a message retrievable on the same thread
//! with [`gs_last_error_message`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use groundstate::grid::{build_biradial_grid, build_radial_grid, Field, Grading, Grid};
use groundstate::nonlin::{m0_threshold, Nonlinearity};
use groundstate::pohozaev::{energy, reduced_level, sharp_constant, EnergyReport};
use groundstate::solver::{continuation, minimize, pde_residual, EpsSchedule, SolveOptions, SolveResult};
use groundstate::Error;

/// Outcome of a call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GsStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    EmptyAdmissibleSet = 3,
    LineSearchFailure = 4,
    NoGroundState = 5,
    Numerical = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GsGrading {
    Uniform = 0,
    Geometric = 1,
}

/// Integrals of one field, mirroring the library's energy report.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GsEnergyReport {
    pub dirichlet: f64,
    pub int_g_plus: f64,
    pub int_g_minus_eps: f64,
    pub j_eps: f64,
    pub pohozaev_residual: f64,
    pub eps: f64,
}

impl From<EnergyReport> for GsEnergyReport {
    fn from(r: EnergyReport) -> Self {
        GsEnergyReport {
            dirichlet: r.dirichlet,
            int_g_plus: r.int_g_plus,
            int_g_minus_eps: r.int_g_minus_eps,
            j_eps: r.j_eps,
            pohozaev_residual: r.pohozaev_residual,
            eps: r.eps,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GsSolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub rounds: usize,
}

pub struct GsNonlinearity(Nonlinearity);
pub struct GsGrid(Grid);
pub struct GsField(Field);
pub struct GsSolution(SolveResult);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> GsStatus {
    match e {
        Error::Domain(_) => GsStatus::Domain,
        Error::EmptyAdmissibleSet(_) => GsStatus::EmptyAdmissibleSet,
        Error::LineSearchFailure(_) => GsStatus::LineSearchFailure,
        Error::NoGroundState(_) => GsStatus::NoGroundState,
        Error::Numerical { .. } => GsStatus::Numerical,
    }
}

enum Fail {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

/// Runs `body`, translating errors and panics into a status.
fn guard<F: FnOnce() -> Result<(), Fail>>(body: F) -> GsStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => GsStatus::Ok,
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            GsStatus::NullPointer
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            GsStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn write<T>(out: *mut T, value: T, what: &'static str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn emit<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

fn options(opts: Option<&GsSolveOptions>) -> SolveOptions {
    let mut o = SolveOptions::default();
    if let Some(g) = opts {
        o.tol = g.tol;
        o.max_iter = g.max_iter;
        o.rounds = g.rounds;
    }
    o
}

/// Copies the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to `len`) and returns the full message length in bytes.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn gs_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gs_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => panic!("version has an interior NUL"),
    };
    VERSION.as_ptr()
}

#[no_mangle]
pub extern "C" fn gs_solve_options_default() -> GsSolveOptions {
    let o = SolveOptions::default();
    GsSolveOptions {
        tol: o.tol,
        max_iter: o.max_iter,
        rounds: o.rounds,
    }
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gs_nonlinearity_logarithmic(out: *mut *mut GsNonlinearity) -> GsStatus {
    guard(|| emit(out, GsNonlinearity(Nonlinearity::logarithmic())))
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gs_nonlinearity_cubic_quintic(
    dim: u32,
    p: f64,
    m: f64,
    out: *mut *mut GsNonlinearity,
) -> GsStatus {
    guard(|| emit(out, GsNonlinearity(Nonlinearity::cubic_quintic(dim as usize, p, m)?)))
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gs_nonlinearity_zero_mass(dim: u32, out: *mut *mut GsNonlinearity) -> GsStatus {
    guard(|| emit(out, GsNonlinearity(Nonlinearity::zero_mass(dim as usize)?)))
}

/// # Safety
/// `nl` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gs_nonlinearity_free(nl: *mut GsNonlinearity) {
    if !nl.is_null() {
        drop(Box::from_raw(nl));
    }
}

/// Writes `g(s)` and `G(s)`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn gs_nonlinearity_eval(
    nl: *const GsNonlinearity,
    s: f64,
    g: *mut f64,
    primitive: *mut f64,
) -> GsStatus {
    guard(|| {
        let v = borrow(nl, "nl")?.0.eval(s)?;
        write(g, v.g, "g")?;
        write(primitive, v.primitive, "primitive")
    })
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gs_m0_threshold(dim: u32, p: f64, out: *mut f64) -> GsStatus {
    guard(|| write(out, m0_threshold(dim as usize, p)?, "out"))
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gs_sharp_constant(dim: u32, level: f64, out: *mut f64) -> GsStatus {
    guard(|| write(out, sharp_constant(dim as usize, level)?, "out"))
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gs_grid_radial(
    dim: u32,
    r_max: f64,
    points: usize,
    grading: GsGrading,
    out: *mut *mut GsGrid,
) -> GsStatus {
    let grading = match grading {
        GsGrading::Uniform => Grading::Uniform,
        GsGrading::Geometric => Grading::Geometric,
    };
    guard(|| emit(out, GsGrid(build_radial_grid(dim as usize, r_max, points, grading)?)))
}

/// Antisymmetric biradial grid in dimension 4 with `points` nodes per polar axis.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gs_grid_biradial(r_max: f64, points: usize, out: *mut *mut GsGrid) -> GsStatus {
    guard(|| emit(out, GsGrid(build_biradial_grid(r_max, points)?)))
}

/// Number of nodes, or 0 for a null handle.
///
/// # Safety
/// `grid` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gs_grid_len(grid: *const GsGrid) -> usize {
    grid.as_ref().map_or(0, |g| g.0.len())
}

/// # Safety
/// `grid` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gs_grid_free(grid: *mut GsGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Builds a field from `len` node values, which must match the grid size.
///
/// # Safety
/// `values` must be valid for `len` reads.
#[no_mangle]
pub unsafe extern "C" fn gs_field_from_values(
    grid: *const GsGrid,
    values: *const f64,
    len: usize,
    out: *mut *mut GsField,
) -> GsStatus {
    guard(|| {
        let grid = borrow(grid, "grid")?;
        if values.is_null() {
            return Err(Fail::Null("values"));
        }
        let v = std::slice::from_raw_parts(values, len).to_vec();
        emit(out, GsField(Field::from_values(&grid.0, v)?))
    })
}

/// # Safety
/// `field` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gs_field_len(field: *const GsField) -> usize {
    field.as_ref().map_or(0, |f| f.0.values().len())
}

/// Copies up to `len` node values into `buf`.
///
/// # Safety
/// `buf` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn gs_field_values(field: *const GsField, buf: *mut f64, len: usize) -> GsStatus {
    guard(|| {
        let f = borrow(field, "field")?;
        if buf.is_null() {
            return Err(Fail::Null("buf"));
        }
        let v = f.0.values();
        std::ptr::copy_nonoverlapping(v.as_ptr(), buf, v.len().min(len));
        Ok(())
    })
}

/// # Safety
/// `field` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gs_field_free(field: *mut GsField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn gs_energy(
    field: *const GsField,
    nl: *const GsNonlinearity,
    eps: f64,
    out: *mut GsEnergyReport,
) -> GsStatus {
    guard(|| {
        let rep = energy(&borrow(field, "field")?.0, &borrow(nl, "nl")?.0, eps)?;
        write(out, rep.into(), "out")
    })
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn gs_reduced_level(
    field: *const GsField,
    nl: *const GsNonlinearity,
    eps: f64,
    out: *mut f64,
) -> GsStatus {
    guard(|| {
        let level = reduced_level(&borrow(field, "field")?.0, &borrow(nl, "nl")?.0, eps)?;
        write(out, level, "out")
    })
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn gs_pde_residual(field: *const GsField, nl: *const GsNonlinearity, out: *mut f64) -> GsStatus {
    guard(|| {
        let r = pde_residual(&borrow(field, "field")?.0, &borrow(nl, "nl")?.0);
        write(out, r, "out")
    })
}

/// Minimizes at a single `eps`; `opts` may be null for defaults.
///
/// # Safety
/// Pointers must be valid; `opts` may be null.
#[no_mangle]
pub unsafe extern "C" fn gs_minimize(
    grid: *const GsGrid,
    nl: *const GsNonlinearity,
    eps: f64,
    opts: *const GsSolveOptions,
    out: *mut *mut GsSolution,
) -> GsStatus {
    guard(|| {
        let res = minimize(&borrow(grid, "grid")?.0, &borrow(nl, "nl")?.0, eps, &options(opts.as_ref()))?;
        emit(out, GsSolution(res))
    })
}

/// Runs the eps schedule `eps[0..len]`, which must decrease to 0.
///
/// # Safety
/// `eps` must be valid for `len` reads; `opts` may be null.
#[no_mangle]
pub unsafe extern "C" fn gs_continuation(
    grid: *const GsGrid,
    nl: *const GsNonlinearity,
    eps: *const f64,
    len: usize,
    opts: *const GsSolveOptions,
    out: *mut *mut GsSolution,
) -> GsStatus {
    guard(|| {
        if eps.is_null() {
            return Err(Fail::Null("eps"));
        }
        let schedule = EpsSchedule::new(std::slice::from_raw_parts(eps, len).to_vec())?;
        let res = continuation(
            &borrow(grid, "grid")?.0,
            &borrow(nl, "nl")?.0,
            &schedule,
            &options(opts.as_ref()),
        )?;
        emit(out, GsSolution(res.result))
    })
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn gs_solution_level(sol: *const GsSolution, out: *mut f64) -> GsStatus {
    guard(|| write(out, borrow(sol, "solution")?.0.level, "out"))
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn gs_solution_report(sol: *const GsSolution, out: *mut GsEnergyReport) -> GsStatus {
    guard(|| write(out, borrow(sol, "solution")?.0.report.into(), "out"))
}

/// Writes 1 if the solve converged, else 0.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn gs_solution_converged(sol: *const GsSolution, out: *mut i32) -> GsStatus {
    guard(|| write(out, borrow(sol, "solution")?.0.converged as i32, "out"))
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn gs_solution_iterations(sol: *const GsSolution, out: *mut usize) -> GsStatus {
    guard(|| write(out, borrow(sol, "solution")?.0.iterations, "out"))
}

/// Returns a new handle owning a copy of the minimizer.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn gs_solution_field(sol: *const GsSolution, out: *mut *mut GsField) -> GsStatus {
    guard(|| {
        let field = borrow(sol, "solution")?.0.field.clone();
        emit(out, GsField(field))
    })
}

/// # Safety
/// `sol` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gs_solution_free(sol: *mut GsSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}
