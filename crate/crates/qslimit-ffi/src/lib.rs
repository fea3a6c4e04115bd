//! C ABI for the qslimit library.
//!
//! Conventions:
//! * Opaque handles (`QsCharFn`, `QsDensityGrid`) are created and destroyed
//!   by this library; callers never see their layout.
//! * Every fallible call returns a `QsStatus`; outputs go through pointers.
//! * On any non-`Ok` status a thread-local message is retrievable via
//!   [`qs_last_error`].
//! * All panics are caught at the boundary and reported as
//!   `QS_STATUS_INTERNAL`.
//!
//! The C header is generated by cbindgen at build time into
//! `include/qslimit.h`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use qslimit::charfn::{equation_residual, fit_decay, iterate_to_fixpoint, with_residual, GridCharFn};
use qslimit::density::{invert_density, DensityGrid};
use qslimit::laplace;
use qslimit::quicksim::simulate;
use qslimit::Complex;

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QsStatus {
    /// Success.
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// An argument was outside the documented domain.
    InvalidArgument = 2,
    /// The fixed-point iteration did not converge.
    NoConvergence = 3,
    /// Evaluation point outside the represented domain.
    OutOfDomain = 4,
    /// A numerical routine failed; see qs_last_error.
    NumericsFailure = 5,
    /// Invalid UTF-8 or malformed text input.
    BadInput = 6,
    /// Unexpected internal failure (caught panic).
    Internal = 7,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let sanitized: String = msg.chars().map(|c| if c == '\0' { ' ' } else { c }).collect();
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(sanitized).unwrap());
}

fn fail(status: QsStatus, msg: &str) -> QsStatus {
    set_error(msg);
    status
}

fn guard<F: FnOnce() -> QsStatus>(body: F) -> QsStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(s) => s,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(QsStatus::Internal, &msg)
        }
    }
}

/// Copy the last error message for this thread into `buf` (NUL-terminated,
/// truncated to `len` bytes). Returns the full message length in bytes,
/// excluding the NUL.
///
/// # Safety
/// `buf` must point to `len` writable bytes (or be null, in which case only
/// the length is returned).
#[no_mangle]
pub unsafe extern "C" fn qs_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Opaque handle: a converged characteristic-function grid.
pub struct QsCharFn {
    inner: GridCharFn,
}

/// Opaque handle: a density on a uniform x grid.
pub struct QsDensityGrid {
    inner: DensityGrid,
}

/// Run the fixed-point iteration for the characteristic function and return
/// a new handle through `out`. The handle carries a decay fit and equation
/// residual, so transform evaluations get tight tail budgets.
///
/// # Safety
/// `out` must be a valid pointer; the returned handle must be released with
/// [`qs_charfn_free`].
#[no_mangle]
pub unsafe extern "C" fn qs_charfn_iterate(
    t_max: f64,
    h: f64,
    max_iter: usize,
    tol: f64,
    out: *mut *mut QsCharFn,
) -> QsStatus {
    guard(|| {
        if out.is_null() {
            return fail(QsStatus::NullArgument, "out is null");
        }
        if !(t_max >= 10.0) || !(h > 0.0) || !(tol > 0.0) || max_iter == 0 {
            return fail(QsStatus::InvalidArgument, "need t_max >= 10, h > 0, tol > 0, max_iter > 0");
        }
        match iterate_to_fixpoint(t_max, h, max_iter, tol) {
            Ok((f, _)) => {
                let samples: Vec<f64> =
                    [1.0, 5.0, 10.0, 20.0].into_iter().filter(|&t| t <= t_max).collect();
                let f = match equation_residual(&f, &samples) {
                    Ok(r) => with_residual(f, r),
                    Err(e) => return fail(QsStatus::NumericsFailure, &e.to_string()),
                };
                let f = match fit_decay(&f, (0.15 * t_max, 0.75 * t_max)) {
                    Ok(fit) => f.with_decay_fit(fit),
                    Err(_) => f,
                };
                *out = Box::into_raw(Box::new(QsCharFn { inner: f }));
                QsStatus::Ok
            }
            Err(e) => fail(QsStatus::NoConvergence, &e.to_string()),
        }
    })
}

/// Parse a handle from CSV text in the `t,re_f,im_f` format written by
/// `qs_charfn_to_csv` / the CLI.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qs_charfn_from_csv(text: *const c_char, out: *mut *mut QsCharFn) -> QsStatus {
    guard(|| {
        if text.is_null() || out.is_null() {
            return fail(QsStatus::NullArgument, "text/out is null");
        }
        let Ok(text) = CStr::from_ptr(text).to_str() else {
            return fail(QsStatus::BadInput, "text is not valid UTF-8");
        };
        match GridCharFn::from_csv(text) {
            Ok(f) => {
                *out = Box::into_raw(Box::new(QsCharFn { inner: f }));
                QsStatus::Ok
            }
            Err(e) => fail(QsStatus::BadInput, &e.to_string()),
        }
    })
}

/// Release a characteristic-function handle. Null is a no-op.
///
/// # Safety
/// `f` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qs_charfn_free(f: *mut QsCharFn) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Evaluate f(t) (Hermitian-extended to t < 0); |t| must not exceed the grid.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn qs_charfn_eval(
    f: *const QsCharFn,
    t: f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> QsStatus {
    guard(|| {
        if f.is_null() || out_re.is_null() || out_im.is_null() {
            return fail(QsStatus::NullArgument, "null pointer");
        }
        match (*f).inner.eval(t) {
            Ok(v) => {
                *out_re = v.re;
                *out_im = v.im;
                QsStatus::Ok
            }
            Err(e) => fail(QsStatus::OutOfDomain, &e.to_string()),
        }
    })
}

/// Grid extent of a handle.
///
/// # Safety
/// `f` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn qs_charfn_t_max(f: *const QsCharFn) -> f64 {
    if f.is_null() {
        return f64::NAN;
    }
    (*f).inner.t_max()
}

/// Evaluate the Laplace-transform derivative ψ⁽ᵒʳᵈᵉʳ⁾(s) at
/// s = re_s + i·im_s (requires re_s ≥ 0.05, order ≤ 6). `out_err` receives
/// the modeled error budget and may be null.
///
/// # Safety
/// `f`, `out_re`, `out_im` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn qs_psi(
    f: *const QsCharFn,
    re_s: f64,
    im_s: f64,
    order: u32,
    out_re: *mut f64,
    out_im: *mut f64,
    out_err: *mut f64,
) -> QsStatus {
    guard(|| {
        if f.is_null() || out_re.is_null() || out_im.is_null() {
            return fail(QsStatus::NullArgument, "null pointer");
        }
        if order > 6 {
            return fail(QsStatus::InvalidArgument, "order must be <= 6");
        }
        match laplace::psi(Complex::new(re_s, im_s), &(*f).inner, order) {
            Ok(p) => {
                *out_re = p.value.re;
                *out_im = p.value.im;
                if !out_err.is_null() {
                    *out_err = p.err_est;
                }
                QsStatus::Ok
            }
            Err(laplace::LaplaceError::SigmaTooSmall { .. }) => {
                fail(QsStatus::InvalidArgument, "Re s below 0.05")
            }
            Err(e) => fail(QsStatus::NumericsFailure, &e.to_string()),
        }
    })
}

/// Invert the density on [x0, x1] with the given step; requires the handle
/// to carry a decay fit (handles from `qs_charfn_iterate` do).
///
/// # Safety
/// `f` and `out` must be valid pointers; release the result with
/// [`qs_density_free`].
#[no_mangle]
pub unsafe extern "C" fn qs_density_invert(
    f: *const QsCharFn,
    x0: f64,
    x1: f64,
    step: f64,
    out: *mut *mut QsDensityGrid,
) -> QsStatus {
    guard(|| {
        if f.is_null() || out.is_null() {
            return fail(QsStatus::NullArgument, "null pointer");
        }
        if !(x1 > x0) || !(step > 0.0) {
            return fail(QsStatus::InvalidArgument, "need x1 > x0 and step > 0");
        }
        match invert_density(&(*f).inner, x0, x1, step) {
            Ok(dg) => {
                *out = Box::into_raw(Box::new(QsDensityGrid { inner: dg }));
                QsStatus::Ok
            }
            Err(e) => fail(QsStatus::NumericsFailure, &e.to_string()),
        }
    })
}

/// Number of grid points in a density handle (0 for null).
///
/// # Safety
/// `dg` must be a valid handle or null.
#[no_mangle]
pub unsafe extern "C" fn qs_density_len(dg: *const QsDensityGrid) -> usize {
    if dg.is_null() {
        return 0;
    }
    (*dg).inner.len()
}

/// Read grid point `idx`: abscissa, density value, and combined error bound.
/// Output pointers may individually be null.
///
/// # Safety
/// `dg` must be a valid handle; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn qs_density_point(
    dg: *const QsDensityGrid,
    idx: usize,
    out_x: *mut f64,
    out_p: *mut f64,
    out_err: *mut f64,
) -> QsStatus {
    guard(|| {
        if dg.is_null() {
            return fail(QsStatus::NullArgument, "dg is null");
        }
        let inner = &(*dg).inner;
        if idx >= inner.len() {
            return fail(QsStatus::InvalidArgument, "index out of range");
        }
        if !out_x.is_null() {
            *out_x = inner.x(idx);
        }
        if !out_p.is_null() {
            *out_p = inner.p[idx];
        }
        if !out_err.is_null() {
            *out_err = inner.quad_err[idx] + inner.trunc_bound;
        }
        QsStatus::Ok
    })
}

/// Release a density handle. Null is a no-op.
///
/// # Safety
/// `dg` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qs_density_free(dg: *mut QsDensityGrid) {
    if !dg.is_null() {
        drop(Box::from_raw(dg));
    }
}

/// Simulate quicksort costs (exact comparison counts, normalized by n) and
/// return the empirical mean and variance of the normalized cost.
/// Requires n ≥ 2 and samples ≥ 1000; fully deterministic in `seed`.
///
/// # Safety
/// Non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn qs_simulate_moments(
    n: usize,
    samples: usize,
    seed: u64,
    out_mean: *mut f64,
    out_variance: *mut f64,
) -> QsStatus {
    guard(|| {
        if n < 2 || samples < 1000 {
            return fail(QsStatus::InvalidArgument, "need n >= 2 and samples >= 1000");
        }
        let summary = simulate(n, samples, seed);
        if !out_mean.is_null() {
            *out_mean = summary.empirical_mean;
        }
        if !out_variance.is_null() {
            *out_variance = summary.empirical_variance;
        }
        QsStatus::Ok
    })
}
