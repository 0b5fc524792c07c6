//! C interface to `cvrobust`.
//!
//! States and solver reports are opaque handles owned by the caller and
//! released with the matching `*_free` function. Every fallible call returns a
//! [`CvrStatus`]; on failure the message is kept per thread and can be copied
//! out with [`cvr_last_error`]. Matrices cross the boundary as separate
//! row-major real and imaginary arrays.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use cvrobust::fock::make_state_with_cap;
use cvrobust::free_sets::{free_value, FreeSetTag};
use cvrobust::linalg::{CMatrix, C64};
use cvrobust::measures::closed_form;
use cvrobust::solver::sandwich;
use cvrobust::{CoherentGrid, Error, FreeSetModel, SolverConfig, SolverReport, State, StateSpec};

/// Result of every fallible call; zero is success.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CvrStatus {
    Ok = 0,
    /// Null pointer, bad UTF-8, unknown state label or out-of-range option.
    InvalidArgument = 1,
    /// Truncation too small for the requested tail cap.
    DimensionTooSmall = 2,
    /// Matrix is not a valid density operator or positive observable.
    InvalidMatrix = 3,
    /// The requested free set does not apply to the state.
    Unsupported = 4,
    /// The solver could not certify a result.
    SolverFailure = 5,
    /// Caller buffer too small; nothing was written.
    BufferTooSmall = 6,
    /// A Rust panic was caught at the boundary.
    Internal = 7,
}

/// Free set against which robustness is measured.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CvrFreeSet {
    Classical = 0,
    Incoherent = 1,
    Separable = 2,
}

impl From<CvrFreeSet> for FreeSetTag {
    fn from(f: CvrFreeSet) -> Self {
        match f {
            CvrFreeSet::Classical => FreeSetTag::Classical,
            CvrFreeSet::Incoherent => FreeSetTag::Incoherent,
            CvrFreeSet::Separable => FreeSetTag::Separable,
        }
    }
}

/// Solver and grid settings; start from [`cvr_options_default`].
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct CvrOptions {
    pub gap_tol: f64,
    pub cut_tol: f64,
    pub max_cuts: usize,
    pub max_refinements: usize,
    pub product_points: usize,
    pub seed: u64,
    /// Coherent grid for the classical set.
    pub grid_radius: f64,
    pub grid_step: f64,
    pub grid_angles: usize,
}

/// Opaque truncated state.
pub struct CvrState(State);

/// Opaque result of [`cvr_sandwich`].
pub struct CvrReport(SolverReport);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn status_of(e: &Error) -> CvrStatus {
    match e {
        Error::InvalidParameter(_) | Error::Config(_) | Error::ShapeMismatch(_) => CvrStatus::InvalidArgument,
        Error::DimensionTooSmall { .. } => CvrStatus::DimensionTooSmall,
        Error::NotPsd(_) | Error::InvalidState(_) => CvrStatus::InvalidMatrix,
        Error::NotBipartite => CvrStatus::Unsupported,
        _ => CvrStatus::SolverFailure,
    }
}

fn fail(status: CvrStatus, message: impl Into<String>) -> CvrStatus {
    LAST_ERROR.with(|m| *m.borrow_mut() = message.into());
    status
}

/// Runs `f`, recording errors and turning panics into [`CvrStatus::Internal`].
fn guard(f: impl FnOnce() -> Result<(), CvrStatus>) -> CvrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CvrStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => fail(CvrStatus::Internal, "panic inside cvrobust"),
    }
}

fn check(e: Error) -> CvrStatus {
    fail(status_of(&e), e.to_string())
}

fn not_null<T>(p: *const T, what: &str) -> Result<(), CvrStatus> {
    if p.is_null() {
        Err(fail(CvrStatus::InvalidArgument, format!("{what} is null")))
    } else {
        Ok(())
    }
}

unsafe fn label(s: *const c_char) -> Result<StateSpec, CvrStatus> {
    not_null(s, "state label")?;
    let s = CStr::from_ptr(s)
        .to_str()
        .map_err(|_| fail(CvrStatus::InvalidArgument, "state label is not UTF-8"))?;
    s.parse().map_err(check)
}

unsafe fn read_matrix(dim: usize, re: *const f64, im: *const f64) -> Result<CMatrix, CvrStatus> {
    not_null(re, "real part")?;
    let n = dim * dim;
    let re = std::slice::from_raw_parts(re, n);
    let im = (!im.is_null()).then(|| std::slice::from_raw_parts(im, n));
    Ok(CMatrix::from_fn(dim, dim, |i, j| {
        let k = i * dim + j;
        C64::new(re[k], im.map_or(0.0, |im| im[k]))
    }))
}

fn model(tag: FreeSetTag, state: &State, options: &CvrOptions) -> Result<FreeSetModel, CvrStatus> {
    Ok(match (tag, state.dims()) {
        (FreeSetTag::Classical, [_]) => {
            let grid = CoherentGrid::new(options.grid_radius, options.grid_step, options.grid_angles).map_err(check)?;
            FreeSetModel::classical(grid)
        }
        (FreeSetTag::Incoherent, _) => FreeSetModel::incoherent(),
        (FreeSetTag::Separable, [a, b]) => FreeSetModel::separable((*a, *b)),
        (tag, dims) => {
            return Err(fail(
                CvrStatus::Unsupported,
                format!("{} set does not apply to a state with {} modes", tag.name(), dims.len()),
            ))
        }
    })
}

/// Defaults matching the command-line tool.
#[no_mangle]
pub extern "C" fn cvr_options_default() -> CvrOptions {
    let s = SolverConfig::default();
    CvrOptions {
        gap_tol: s.gap_tol,
        cut_tol: s.cut_tol,
        max_cuts: s.max_cuts,
        max_refinements: s.max_refinements,
        product_points: s.product_points,
        seed: s.seed,
        grid_radius: 6.0,
        grid_step: 0.1,
        grid_angles: 64,
    }
}

/// Copies the calling thread's last error message, NUL-terminated, into
/// `buf`. Returns the message length without the terminator; when it is not
/// smaller than `len` the message was truncated.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn cvr_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|m| {
        let m = m.borrow();
        if !buf.is_null() && len > 0 {
            let n = m.len().min(len - 1);
            std::ptr::copy_nonoverlapping(m.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        m.len()
    })
}

/// Builds a named state, e.g. `"fock:3"`, `"cat+:1"`, `"tmsv:lambda=0.5"`,
/// truncated to `dim` levels per mode. `tail_cap` bounds the discarded
/// probability; pass 0 for the default.
///
/// # Safety
/// `spec` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cvr_state_new(
    spec: *const c_char,
    dim: usize,
    tail_cap: f64,
    out: *mut *mut CvrState,
) -> CvrStatus {
    guard(|| {
        not_null(out, "out")?;
        let spec = label(spec)?;
        let cap = if tail_cap > 0.0 {
            tail_cap
        } else {
            cvrobust::fock::DEFAULT_TAIL_CAP
        };
        let state = make_state_with_cap(&spec, dim, cap).map_err(check)?;
        *out = Box::into_raw(Box::new(CvrState(state)));
        Ok(())
    })
}

/// Single-mode state from a `dim × dim` density matrix. `im` may be null for
/// a real matrix.
///
/// # Safety
/// `re` (and `im` when non-null) must hold `dim * dim` values; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn cvr_state_from_matrix(
    dim: usize,
    re: *const f64,
    im: *const f64,
    out: *mut *mut CvrState,
) -> CvrStatus {
    guard(|| {
        not_null(out, "out")?;
        let m = read_matrix(dim, re, im)?;
        let rho = cvrobust::DensityOperator::single(m).map_err(check)?;
        *out = Box::into_raw(Box::new(CvrState(State::Mixed(rho))));
        Ok(())
    })
}

/// # Safety
/// `state` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cvr_state_free(state: *mut CvrState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Total Hilbert-space dimension (product over modes), 0 for null.
///
/// # Safety
/// `state` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cvr_state_dim(state: *const CvrState) -> usize {
    state.as_ref().map_or(0, |s| s.0.dims().iter().product())
}

/// Probability discarded by the truncation, NaN for null.
///
/// # Safety
/// `state` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cvr_state_tail_weight(state: *const CvrState) -> f64 {
    state.as_ref().map_or(f64::NAN, |s| s.0.tail_weight())
}

/// Exact robustness of a named family when a closed form is known.
///
/// # Safety
/// `spec` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cvr_closed_form(spec: *const c_char, free: CvrFreeSet, out: *mut f64) -> CvrStatus {
    guard(|| {
        not_null(out, "out")?;
        let spec = label(spec)?;
        let exact = closed_form(&spec, free.into()).map_err(check)?;
        *out = exact.bounds().upper;
        Ok(())
    })
}

/// Certified bracket on the robustness of `state`. `options` may be null
/// for the defaults.
///
/// # Safety
/// `state` must be a live handle, `options` null or valid, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn cvr_sandwich(
    state: *const CvrState,
    free: CvrFreeSet,
    options: *const CvrOptions,
    out: *mut *mut CvrReport,
) -> CvrStatus {
    guard(|| {
        not_null(state, "state")?;
        not_null(out, "out")?;
        let state = &(*state).0;
        let options = options.as_ref().copied().unwrap_or_else(|| cvr_options_default());
        let model = model(free.into(), state, &options)?;
        let config = SolverConfig {
            gap_tol: options.gap_tol,
            cut_tol: options.cut_tol,
            max_cuts: options.max_cuts,
            max_refinements: options.max_refinements,
            product_points: options.product_points,
            seed: options.seed,
            ..SolverConfig::default()
        };
        config.validate().map_err(check)?;
        let report = sandwich(&state.density(), &model, &config).map_err(check)?;
        *out = Box::into_raw(Box::new(CvrReport(report)));
        Ok(())
    })
}

/// # Safety
/// `report` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cvr_report_free(report: *mut CvrReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Lower and upper robustness bounds of a report.
///
/// # Safety
/// `report` must be a live handle; `lower` and `upper` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn cvr_report_bounds(report: *const CvrReport, lower: *mut f64, upper: *mut f64) -> CvrStatus {
    guard(|| {
        not_null(report, "report")?;
        not_null(lower, "lower")?;
        not_null(upper, "upper")?;
        let b = &(*report).0.bounds;
        *lower = b.lower;
        *upper = b.upper;
        Ok(())
    })
}

/// Whether the report's lower bound rests on an exact free value.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cvr_report_certified(report: *const CvrReport) -> bool {
    report.as_ref().is_some_and(|r| r.0.witness.is_certified())
}

/// Copies the rescaled witness (row-major, `dim * dim` entries each) into
/// `re` and `im`, where `dim` is [`cvr_state_dim`] of the solved state.
///
/// # Safety
/// `report` must be a live handle; `re` and `im` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn cvr_report_witness(
    report: *const CvrReport,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> CvrStatus {
    guard(|| {
        not_null(report, "report")?;
        not_null(re, "re")?;
        not_null(im, "im")?;
        let w = &(*report).0.witness.operator;
        let dim = w.nrows();
        if len < dim * dim {
            return Err(fail(
                CvrStatus::BufferTooSmall,
                format!("witness needs {} entries", dim * dim),
            ));
        }
        for i in 0..dim {
            for j in 0..dim {
                *re.add(i * dim + j) = w[(i, j)].re;
                *im.add(i * dim + j) = w[(i, j)].im;
            }
        }
        Ok(())
    })
}

/// Largest expectation of the `dim × dim` observable over the free set.
/// Only single-mode free sets are accepted here.
///
/// # Safety
/// `re` (and `im` when non-null) must hold `dim * dim` values; `options`
/// null or valid; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn cvr_free_value(
    dim: usize,
    re: *const f64,
    im: *const f64,
    free: CvrFreeSet,
    options: *const CvrOptions,
    out: *mut f64,
) -> CvrStatus {
    guard(|| {
        not_null(out, "out")?;
        let w = read_matrix(dim, re, im)?;
        let options = options.as_ref().copied().unwrap_or_else(|| cvr_options_default());
        let model = match free {
            CvrFreeSet::Classical => FreeSetModel::classical(
                CoherentGrid::new(options.grid_radius, options.grid_step, options.grid_angles).map_err(check)?,
            ),
            CvrFreeSet::Incoherent => FreeSetModel::incoherent(),
            CvrFreeSet::Separable => return Err(fail(CvrStatus::Unsupported, "separable needs a bipartite state")),
        };
        *out = free_value(&w, &model).map_err(check)?.value;
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CString;
    use std::ptr;

    fn last_error() -> String {
        let mut buf = vec![0 as c_char; 256];
        let n = unsafe { cvr_last_error(buf.as_mut_ptr(), buf.len()) };
        let s = unsafe { CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap().to_owned();
        assert_eq!(s.len(), n.min(255));
        s
    }

    #[test]
    fn closed_form_fock() {
        let spec = CString::new("fock:2").unwrap();
        let mut v = 0.0;
        assert_eq!(
            unsafe { cvr_closed_form(spec.as_ptr(), CvrFreeSet::Classical, &mut v) },
            CvrStatus::Ok
        );
        assert!((v - 2f64.exp() * 2.0 / 4.0).abs() < 1e-12);
    }

    #[test]
    fn bad_label_sets_message() {
        let spec = CString::new("banana:1").unwrap();
        let mut state = ptr::null_mut();
        let status = unsafe { cvr_state_new(spec.as_ptr(), 10, 0.0, &mut state) };
        assert_eq!(status, CvrStatus::InvalidArgument);
        assert!(state.is_null());
        assert!(last_error().contains("banana"));
    }

    #[test]
    fn null_pointers_are_rejected() {
        let mut v = 0.0;
        let status = unsafe { cvr_closed_form(ptr::null(), CvrFreeSet::Classical, &mut v) };
        assert_eq!(status, CvrStatus::InvalidArgument);
        unsafe {
            cvr_state_free(ptr::null_mut());
            cvr_report_free(ptr::null_mut());
        }
        assert_eq!(unsafe { cvr_state_dim(ptr::null()) }, 0);
    }

    #[test]
    fn sandwich_brackets_fock_one() {
        let spec = CString::new("fock:1").unwrap();
        let mut state = ptr::null_mut();
        assert_eq!(
            unsafe { cvr_state_new(spec.as_ptr(), 20, 0.0, &mut state) },
            CvrStatus::Ok
        );
        let mut options = cvr_options_default();
        options.grid_radius = 5.0;
        let mut report = ptr::null_mut();
        let status = unsafe { cvr_sandwich(state, CvrFreeSet::Classical, &options, &mut report) };
        assert_eq!(status, CvrStatus::Ok, "{}", last_error());
        let (mut lo, mut hi) = (0.0, 0.0);
        assert_eq!(unsafe { cvr_report_bounds(report, &mut lo, &mut hi) }, CvrStatus::Ok);
        let e = 1f64.exp();
        assert!(lo <= e * (1.0 + 1e-9) && hi >= lo && hi <= e * 1.01, "{lo} {hi}");
        assert!(unsafe { cvr_report_certified(report) });

        let n = unsafe { cvr_state_dim(state) };
        let mut re = vec![0.0; n * n];
        let mut im = vec![0.0; n * n];
        let short = unsafe { cvr_report_witness(report, re.as_mut_ptr(), im.as_mut_ptr(), 3) };
        assert_eq!(short, CvrStatus::BufferTooSmall);
        let status = unsafe { cvr_report_witness(report, re.as_mut_ptr(), im.as_mut_ptr(), n * n) };
        assert_eq!(status, CvrStatus::Ok);
        // the rescaled witness has free value one
        let mut f = 0.0;
        let status = unsafe { cvr_free_value(n, re.as_ptr(), im.as_ptr(), CvrFreeSet::Classical, &options, &mut f) };
        assert_eq!(status, CvrStatus::Ok, "{}", last_error());
        assert!((f - 1.0).abs() < 1e-6, "{f}");
        unsafe {
            cvr_report_free(report);
            cvr_state_free(state);
        }
    }

    #[test]
    fn classical_set_rejects_two_modes() {
        let spec = CString::new("tmsv:lambda=0.3").unwrap();
        let mut state = ptr::null_mut();
        assert_eq!(
            unsafe { cvr_state_new(spec.as_ptr(), 8, 1e-3, &mut state) },
            CvrStatus::Ok
        );
        let mut report = ptr::null_mut();
        let status = unsafe { cvr_sandwich(state, CvrFreeSet::Classical, ptr::null(), &mut report) };
        assert_eq!(status, CvrStatus::Unsupported);
        assert!(report.is_null());
        unsafe { cvr_state_free(state) };
    }

    #[test]
    fn matrix_states_are_validated() {
        let re = [1.0, 0.0, 0.0, -0.5];
        let mut state = ptr::null_mut();
        let status = unsafe { cvr_state_from_matrix(2, re.as_ptr(), ptr::null(), &mut state) };
        assert_ne!(status, CvrStatus::Ok);
        let re = [0.5, 0.5, 0.5, 0.5];
        let status = unsafe { cvr_state_from_matrix(2, re.as_ptr(), ptr::null(), &mut state) };
        assert_eq!(status, CvrStatus::Ok, "{}", last_error());
        let mut report = ptr::null_mut();
        let status = unsafe { cvr_sandwich(state, CvrFreeSet::Incoherent, ptr::null(), &mut report) };
        assert_eq!(status, CvrStatus::Ok, "{}", last_error());
        let (mut lo, mut hi) = (0.0, 0.0);
        unsafe { cvr_report_bounds(report, &mut lo, &mut hi) };
        // maximally coherent qubit: robustness 2
        assert!((lo - 2.0).abs() < 1e-6 && (hi - 2.0).abs() < 1e-3, "{lo} {hi}");
        unsafe {
            cvr_report_free(report);
            cvr_state_free(state);
        }
    }
}
