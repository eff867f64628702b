//! C ABI over the kernel analysis.
//!
//! Every fallible call returns an [`MpStatus`]; on failure a message is kept
//! per thread and can be fetched with [`mp_last_error_message`]. Analyses
//! are opaque handles released with [`mp_analysis_free`]. Strings handed out
//! by this library are released with [`mp_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use metaplectic::cli::Failure;
use metaplectic::io::{self, AnalysisReport, VerdictLabel};
use metaplectic::kernel::Amplitude;
use metaplectic::symplectic::{validate_symplectic, word_product, Tolerances};
use nalgebra::DMatrix;

/// Result codes. Values 2, 3 and 5 agree with the exit codes of the
/// command-line tool.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MpStatus {
    Ok = 0,
    InvalidInput = 2,
    RankAmbiguous = 3,
    Numerical = 5,
    NullPointer = 10,
    BufferTooSmall = 11,
    /// The requested quantity does not exist for this analysis.
    NotAvailable = 12,
    Panic = 13,
}

/// Numerical tolerances; start from [`mp_tolerances_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct MpTolerances {
    pub symplectic: f64,
    pub rank: f64,
    pub rank_gap_ratio: f64,
    pub null: f64,
    pub psd: f64,
    pub identity: f64,
    pub condition_cap: f64,
}

impl From<Tolerances> for MpTolerances {
    fn from(t: Tolerances) -> Self {
        Self {
            symplectic: t.symplectic,
            rank: t.rank,
            rank_gap_ratio: t.rank_gap_ratio,
            null: t.null,
            psd: t.psd,
            identity: t.identity,
            condition_cap: t.condition_cap,
        }
    }
}

impl From<MpTolerances> for Tolerances {
    fn from(t: MpTolerances) -> Self {
        Self {
            symplectic: t.symplectic,
            rank: t.rank,
            rank_gap_ratio: t.rank_gap_ratio,
            null: t.null,
            psd: t.psd,
            identity: t.identity,
            condition_cap: t.condition_cap,
        }
    }
}

/// Result of one analysis.
pub struct MpAnalysis {
    report: AnalysisReport,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<String>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg.into()));
}

fn fail(status: MpStatus, msg: impl Into<String>) -> MpStatus {
    set_error(msg);
    status
}

fn status_of(f: Failure) -> MpStatus {
    let status = match f.code {
        2 => MpStatus::InvalidInput,
        3 => MpStatus::RankAmbiguous,
        _ => MpStatus::Numerical,
    };
    fail(status, f.message)
}

fn guard(body: impl FnOnce() -> MpStatus) -> MpStatus {
    catch_unwind(AssertUnwindSafe(body)).unwrap_or_else(|_| fail(MpStatus::Panic, "internal panic"))
}

unsafe fn tolerances(tol: *const MpTolerances) -> Result<Tolerances, MpStatus> {
    let t: Tolerances = match tol.as_ref() {
        Some(t) => (*t).into(),
        None => return Ok(Tolerances::default()),
    };
    let all = [t.symplectic, t.rank, t.rank_gap_ratio, t.null, t.psd, t.identity, t.condition_cap];
    if all.iter().all(|v| v.is_finite() && *v > 0.0) {
        Ok(t)
    } else {
        Err(fail(MpStatus::InvalidInput, "tolerances must be positive and finite"))
    }
}

fn finish(
    s: Result<metaplectic::SymplecticMatrix, Failure>,
    tol: &Tolerances,
    out: *mut *mut MpAnalysis,
) -> MpStatus {
    let analysis = s.and_then(|s| io::analyze(&s, tol).map_err(Failure::from));
    match analysis {
        Ok(a) => {
            let handle = Box::new(MpAnalysis { report: a.report() });
            // SAFETY: callers checked `out` for null.
            unsafe { *out = Box::into_raw(handle) };
            MpStatus::Ok
        }
        Err(f) => status_of(f),
    }
}

/// Default tolerances.
#[no_mangle]
pub extern "C" fn mp_tolerances_default() -> MpTolerances {
    Tolerances::default().into()
}

/// Analyze the `2d × 2d` symplectic matrix stored row-major at `data`.
/// `tol` may be null for defaults. On success `*out` receives a handle.
///
/// # Safety
/// `data` must point to `4d²` readable doubles; `tol` must be null or valid;
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mp_analyze_matrix(
    data: *const f64,
    d: usize,
    tol: *const MpTolerances,
    out: *mut *mut MpAnalysis,
) -> MpStatus {
    guard(|| {
        if data.is_null() || out.is_null() {
            return fail(MpStatus::NullPointer, "null argument");
        }
        *out = ptr::null_mut();
        if d == 0 || d > 64 {
            return fail(MpStatus::InvalidInput, format!("dimension {d} out of range"));
        }
        let tol = match tolerances(tol) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let n = 2 * d;
        let values = std::slice::from_raw_parts(data, n * n);
        if values.iter().any(|v| !v.is_finite()) {
            return fail(MpStatus::InvalidInput, "matrix has non-finite entries");
        }
        let m = DMatrix::from_row_slice(n, n, values);
        finish(validate_symplectic(m, tol.symplectic).map_err(Failure::from), &tol, out)
    })
}

/// Analyze the product of a generator word given as JSON (the format read by
/// the command-line tool). `default_dim` applies when the word does not fix
/// its dimension.
///
/// # Safety
/// `json` must be a NUL-terminated string; `tol` null or valid; `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn mp_analyze_word_json(
    json: *const c_char,
    default_dim: usize,
    tol: *const MpTolerances,
    out: *mut *mut MpAnalysis,
) -> MpStatus {
    guard(|| {
        if json.is_null() || out.is_null() {
            return fail(MpStatus::NullPointer, "null argument");
        }
        *out = ptr::null_mut();
        let tol = match tolerances(tol) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let Ok(text) = CStr::from_ptr(json).to_str() else {
            return fail(MpStatus::InvalidInput, "word is not valid UTF-8");
        };
        let s = io::parse_word(text, default_dim.max(1), &tol)
            .map_err(Failure::from)
            .and_then(|w| word_product(&w, &tol).map_err(Failure::from));
        finish(s, &tol, out)
    })
}

/// Release a handle; null is ignored.
///
/// # Safety
/// `a` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mp_analysis_free(a: *mut MpAnalysis) {
    if !a.is_null() {
        drop(Box::from_raw(a));
    }
}

/// Half the matrix size; 0 for a null handle.
///
/// # Safety
/// `a` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mp_analysis_dim(a: *const MpAnalysis) -> usize {
    a.as_ref().map_or(0, |a| a.report.d)
}

/// # Safety
/// `a` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mp_analysis_is_quasi_diagonal(a: *const MpAnalysis, out: *mut bool) -> MpStatus {
    let (Some(a), false) = (a.as_ref(), out.is_null()) else {
        return fail(MpStatus::NullPointer, "null argument");
    };
    *out = a.report.verdict == VerdictLabel::QuasiDiagonal;
    MpStatus::Ok
}

/// Dimension of the localization manifold.
///
/// # Safety
/// `a` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mp_analysis_gamma_dim(a: *const MpAnalysis, out: *mut usize) -> MpStatus {
    let (Some(a), false) = (a.as_ref(), out.is_null()) else {
        return fail(MpStatus::NullPointer, "null argument");
    };
    *out = a.report.gamma_basis.len();
    MpStatus::Ok
}

/// Copy the `2d × 2d` smoothed form, row-major, into `buf` (`len ≥ 4d²`).
///
/// # Safety
/// `a` must be a live handle and `buf` must have room for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn mp_analysis_qs(a: *const MpAnalysis, buf: *mut f64, len: usize) -> MpStatus {
    let (Some(a), false) = (a.as_ref(), buf.is_null()) else {
        return fail(MpStatus::NullPointer, "null argument");
    };
    let qs = &a.report.qs;
    if len < qs.len() {
        return fail(MpStatus::BufferTooSmall, format!("need {} doubles", qs.len()));
    }
    ptr::copy_nonoverlapping(qs.as_ptr(), buf, qs.len());
    MpStatus::Ok
}

/// Decay constant `ε`; `NotAvailable` unless the kernel is quasi-diagonal.
///
/// # Safety
/// `a` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mp_analysis_epsilon(a: *const MpAnalysis, out: *mut f64) -> MpStatus {
    let (Some(a), false) = (a.as_ref(), out.is_null()) else {
        return fail(MpStatus::NullPointer, "null argument");
    };
    match a.report.epsilon {
        Some(e) => {
            *out = e;
            MpStatus::Ok
        }
        None => fail(MpStatus::NotAvailable, "kernel is not quasi-diagonal"),
    }
}

/// Analytic amplitude `c`; `NotAvailable` when it has to be fitted.
///
/// # Safety
/// `a` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mp_analysis_amplitude(a: *const MpAnalysis, out: *mut f64) -> MpStatus {
    let (Some(a), false) = (a.as_ref(), out.is_null()) else {
        return fail(MpStatus::NullPointer, "null argument");
    };
    match a.report.amplitude {
        Amplitude::Known(c) => {
            *out = c;
            MpStatus::Ok
        }
        Amplitude::FitRequired(_) => fail(MpStatus::NotAvailable, "amplitude requires a fit"),
    }
}

/// Full report as JSON; null on failure. Free with [`mp_string_free`].
///
/// # Safety
/// `a` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mp_analysis_to_json(a: *const MpAnalysis) -> *mut c_char {
    let Some(a) = a.as_ref() else {
        set_error("null argument");
        return ptr::null_mut();
    };
    serde_json::to_string(&a.report)
        .ok()
        .and_then(|s| CString::new(s).ok())
        .map_or(ptr::null_mut(), CString::into_raw)
}

/// Copy of the calling thread's last error message, or null if there is
/// none. Free with [`mp_string_free`].
#[no_mangle]
pub extern "C" fn mp_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|e| {
        e.borrow()
            .as_deref()
            .and_then(|m| CString::new(m.replace('\0', " ")).ok())
            .map_or(ptr::null_mut(), CString::into_raw)
    })
}

/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version, statically allocated.
#[no_mangle]
pub extern "C" fn mp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
