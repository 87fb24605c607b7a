//! C ABI over `sfwkit`.
//!
//! Objects cross the boundary as opaque handles created by `*_new`/`*_parse`/
//! `*_load` style constructors and released with the matching `*_free`. Every
//! fallible call returns an [`SfwStatus`]; on failure a description is
//! available from [`sfw_last_error_message`] on the same thread.
//!
//! Absent optional values (the exact gap and table error when diagnostics are
//! off, the gap threshold when disabled) are represented as NaN.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use sfwkit::bench::parse_libsvm;
use sfwkit::solvers::{run_solver, RunOutput};
use sfwkit::{constraints, ConstraintSet, DesignMatrix, Error, LossKind, LossModel, Norm, Problem, RunConfig, SolverKind};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SfwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Io = 4,
    Capacity = 5,
    Internal = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SfwLoss {
    Logistic = 0,
    Squared = 1,
    GemanMcclure = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SfwSolver {
    Sfw = 0,
    Fw = 1,
    Mokhtari = 2,
    Lufreund = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SfwNorm {
    L1 = 0,
    L2 = 1,
    Linf = 2,
}

/// Settings of one solver run. Obtain defaults from [`sfw_run_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SfwRunOptions {
    pub solver: SfwSolver,
    /// Samples per iteration; 0 selects 1% of the samples (at least 1).
    pub batch_size: usize,
    /// Maximum number of per-sample derivative evaluations.
    pub grad_budget: u64,
    pub seed: u64,
    pub trace_every: u64,
    /// Stop once the stochastic gap falls below this value; NaN disables.
    pub gap_stop: f64,
    /// Evaluate the exact gap and table error at every trace row.
    pub exact_diagnostics: bool,
}

/// One trace checkpoint.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SfwTraceRow {
    pub t: u64,
    pub grad_calls: u64,
    pub objective: f64,
    pub stochastic_gap: f64,
    /// NaN when not computed.
    pub exact_gap: f64,
    /// NaN when not computed.
    pub h_error: f64,
    pub wall_nanos: u64,
}

/// A data matrix together with its loss. Opaque.
pub struct SfwProblem(Problem);

/// A constraint set. Opaque.
pub struct SfwConstraint(ConstraintSet);

/// The output of [`sfw_solve`]. Opaque.
pub struct SfwTrace(RunOutput);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).expect("interior NULs removed"));
}

fn status_of(err: &Error) -> SfwStatus {
    match err {
        Error::Usage(_) | Error::UndefinedStatistic(_) | Error::Degenerate(_) => SfwStatus::InvalidArgument,
        Error::Parse { .. } | Error::ParseCell { .. } | Error::Csv(_) | Error::Json(_) => SfwStatus::Parse,
        Error::Io { .. } => SfwStatus::Io,
        Error::Capacity { .. } => SfwStatus::Capacity,
        Error::Invariant(_) => SfwStatus::Internal,
    }
}

struct Fail(SfwStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(SfwStatus::NullPointer, format!("{what} is NULL"))
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SfwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SfwStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SfwStatus::Internal
        }
    }
}

/// # Safety
/// `p` is NULL or valid for reads of `len` elements.
unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// # Safety
/// `p` is NULL or points to a live `T`.
unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

/// # Safety
/// `out` is NULL or valid for one write.
unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

fn loss_kind(loss: SfwLoss) -> LossKind {
    match loss {
        SfwLoss::Logistic => LossKind::Logistic,
        SfwLoss::Squared => LossKind::Squared,
        SfwLoss::GemanMcclure => LossKind::GemanMcClure,
    }
}

fn solver_kind(s: SfwSolver) -> SolverKind {
    match s {
        SfwSolver::Sfw => SolverKind::Sfw,
        SfwSolver::Fw => SolverKind::Fw,
        SfwSolver::Mokhtari => SolverKind::Mokhtari,
        SfwSolver::Lufreund => SolverKind::LuFreund,
    }
}

fn norm_kind(n: SfwNorm) -> Norm {
    match n {
        SfwNorm::L1 => Norm::L1,
        SfwNorm::L2 => Norm::L2,
        SfwNorm::Linf => Norm::Linf,
    }
}

/// The message of the last failed call on this thread, or an empty string.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sfw_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sfw_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a problem from a row-major `n x d` matrix and `n` targets.
///
/// # Safety
/// `values` must hold `n * d` doubles, `targets` `n` doubles, and `out` must
/// be writable.
#[no_mangle]
pub unsafe extern "C" fn sfw_problem_from_dense(
    n: usize,
    d: usize,
    values: *const f64,
    targets: *const f64,
    loss: SfwLoss,
    out: *mut *mut SfwProblem,
) -> SfwStatus {
    guard(|| {
        let len = n.checked_mul(d).ok_or_else(|| Fail(SfwStatus::InvalidArgument, "n * d overflows".into()))?;
        let x = DesignMatrix::dense(n, d, slice(values, len, "values")?.to_vec())?;
        let model = LossModel::new(loss_kind(loss), slice(targets, n, "targets")?.to_vec())?;
        let problem = Problem::new(x, model)?;
        write_out(out, Box::into_raw(Box::new(SfwProblem(problem))))
    })
}

/// Builds a problem from CSR arrays: `offsets` has `n + 1` entries,
/// `indices` and `values` have `offsets[n]` entries.
///
/// # Safety
/// All arrays must be valid for the lengths above and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sfw_problem_from_csr(
    n: usize,
    d: usize,
    offsets: *const usize,
    indices: *const usize,
    values: *const f64,
    targets: *const f64,
    loss: SfwLoss,
    out: *mut *mut SfwProblem,
) -> SfwStatus {
    guard(|| {
        let offsets = slice(offsets, n + 1, "offsets")?.to_vec();
        let nnz = *offsets.last().expect("n + 1 >= 1 entries");
        let indices = slice(indices, nnz, "indices")?.to_vec();
        let values = slice(values, nnz, "values")?.to_vec();
        let x = DesignMatrix::csr(n, d, offsets, indices, values)?;
        let model = LossModel::new(loss_kind(loss), slice(targets, n, "targets")?.to_vec())?;
        write_out(out, Box::into_raw(Box::new(SfwProblem(Problem::new(x, model)?))))
    })
}

/// Reads a libsvm-format file. `d` of 0 infers the dimension.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sfw_problem_load_libsvm(
    path: *const c_char,
    d: usize,
    loss: SfwLoss,
    out: *mut *mut SfwProblem,
) -> SfwStatus {
    guard(|| {
        let path = CStr::from_ptr(deref(path, "path")?)
            .to_str()
            .map_err(|_| Fail(SfwStatus::InvalidArgument, "path is not UTF-8".into()))?;
        let file = std::fs::File::open(path).map_err(|e| Error::Io { path: Path::new(path).into(), source: e })?;
        let data = parse_libsvm(std::io::BufReader::new(file), (d > 0).then_some(d))?;
        write_out(out, Box::into_raw(Box::new(SfwProblem(data.problem(loss_kind(loss))?))))
    })
}

/// # Safety
/// `problem` is NULL or a handle from a `sfw_problem_*` constructor, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sfw_problem_free(problem: *mut SfwProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// # Safety
/// `problem` must be a live handle; `n` and `d` writable.
#[no_mangle]
pub unsafe extern "C" fn sfw_problem_dims(problem: *const SfwProblem, n: *mut usize, d: *mut usize) -> SfwStatus {
    guard(|| {
        let p = &deref(problem, "problem")?.0;
        write_out(n, p.n())?;
        write_out(d, p.d())
    })
}

/// Objective value at `w` (length `d`).
///
/// # Safety
/// `problem` must be a live handle, `w` valid for `len` reads, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sfw_problem_objective(
    problem: *const SfwProblem,
    w: *const f64,
    len: usize,
    out: *mut f64,
) -> SfwStatus {
    guard(|| {
        let p = &deref(problem, "problem")?.0;
        write_out(out, p.objective(slice(w, len, "w")?)?)
    })
}

/// Parses `l1:R`, `simplex:R` or `linf:R`.
///
/// # Safety
/// `spec` must be NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sfw_constraint_parse(spec: *const c_char, out: *mut *mut SfwConstraint) -> SfwStatus {
    guard(|| {
        let spec = CStr::from_ptr(deref(spec, "spec")?)
            .to_str()
            .map_err(|_| Fail(SfwStatus::InvalidArgument, "spec is not UTF-8".into()))?;
        let set: ConstraintSet = spec.parse()?;
        write_out(out, Box::into_raw(Box::new(SfwConstraint(set))))
    })
}

/// # Safety
/// `set` is NULL or a handle from [`sfw_constraint_parse`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sfw_constraint_free(set: *mut SfwConstraint) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// Column-sum to max-entry ratio of the data matrix.
///
/// # Safety
/// `problem` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sfw_kappa(problem: *const SfwProblem, out: *mut f64) -> SfwStatus {
    guard(|| {
        let p = &deref(problem, "problem")?.0;
        write_out(out, constraints::kappa(p.x())?)
    })
}

/// `max_{u, v in C} ||X(u - v)||_p`.
///
/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sfw_diameter(
    problem: *const SfwProblem,
    set: *const SfwConstraint,
    norm: SfwNorm,
    out: *mut f64,
) -> SfwStatus {
    guard(|| {
        let p = &deref(problem, "problem")?.0;
        let c = &deref(set, "constraint")?.0;
        write_out(out, c.diameter(p.x(), norm_kind(norm))?)
    })
}

/// Fills `out` with defaults: SFW, automatic batch, 50 passes, seed 0,
/// a row per iteration, no gap threshold, no exact diagnostics.
///
/// # Safety
/// `problem` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sfw_run_options_default(problem: *const SfwProblem, out: *mut SfwRunOptions) -> SfwStatus {
    guard(|| {
        let n = deref(problem, "problem")?.0.n() as u64;
        write_out(
            out,
            SfwRunOptions {
                solver: SfwSolver::Sfw,
                batch_size: 0,
                grad_budget: 50 * n,
                seed: 0,
                trace_every: 1,
                gap_stop: f64::NAN,
                exact_diagnostics: false,
            },
        )
    })
}

/// Runs one solver; the trace is returned through `out` and must be
/// released with [`sfw_trace_free`].
///
/// # Safety
/// Handles must be live, `options` readable and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sfw_solve(
    problem: *const SfwProblem,
    set: *const SfwConstraint,
    options: *const SfwRunOptions,
    out: *mut *mut SfwTrace,
) -> SfwStatus {
    guard(|| {
        let p = &deref(problem, "problem")?.0;
        let c = &deref(set, "constraint")?.0;
        let o = *deref(options, "options")?;
        let b = if o.batch_size == 0 { (p.n() / 100).max(1) } else { o.batch_size };
        let mut cfg = RunConfig::new(solver_kind(o.solver), b, o.grad_budget, o.seed);
        cfg.trace_every = o.trace_every;
        cfg.gap_stop = (!o.gap_stop.is_nan()).then_some(o.gap_stop);
        cfg.exact_diagnostics = o.exact_diagnostics;
        let output = run_solver(p, c, &cfg)?;
        write_out(out, Box::into_raw(Box::new(SfwTrace(output))))
    })
}

/// Number of rows in the trace, or 0 for NULL.
///
/// # Safety
/// `trace` is NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sfw_trace_len(trace: *const SfwTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.0.rows.len())
}

/// Copies row `index` into `out`.
///
/// # Safety
/// `trace` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sfw_trace_row(trace: *const SfwTrace, index: usize, out: *mut SfwTraceRow) -> SfwStatus {
    guard(|| {
        let rows = &deref(trace, "trace")?.0.rows;
        let r = rows
            .get(index)
            .ok_or_else(|| Fail(SfwStatus::InvalidArgument, format!("row {index} out of range ({})", rows.len())))?;
        write_out(
            out,
            SfwTraceRow {
                t: r.t,
                grad_calls: r.grad_calls,
                objective: r.objective,
                stochastic_gap: r.stochastic_gap,
                exact_gap: r.exact_gap.unwrap_or(f64::NAN),
                h_error: r.h_error.unwrap_or(f64::NAN),
                wall_nanos: r.wall_nanos,
            },
        )
    })
}

/// Copies the final iterate into `buf`. Fails with `Capacity` when `len` is
/// smaller than the dimension; `written` (if not NULL) receives the dimension
/// either way.
///
/// # Safety
/// `trace` must be a live handle, `buf` valid for `len` writes, `written`
/// NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn sfw_trace_final_w(
    trace: *const SfwTrace,
    buf: *mut f64,
    len: usize,
    written: *mut usize,
) -> SfwStatus {
    guard(|| {
        let w = &deref(trace, "trace")?.0.final_w;
        if !written.is_null() {
            written.write(w.len());
        }
        if len < w.len() {
            return Err(Fail(SfwStatus::Capacity, format!("buffer holds {len}, need {}", w.len())));
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        ptr::copy_nonoverlapping(w.as_ptr(), buf, w.len());
        Ok(())
    })
}

/// Whether the run ended on the gap threshold rather than the budget.
///
/// # Safety
/// `trace` is NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sfw_trace_stopped_by_gap(trace: *const SfwTrace) -> bool {
    trace.as_ref().is_some_and(|t| t.0.stopped_by_gap)
}

/// # Safety
/// `trace` is NULL or a handle from [`sfw_solve`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sfw_trace_free(trace: *mut SfwTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}
