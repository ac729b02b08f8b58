//! C ABI over `bisac-core`.
//!
//! Scenarios and solutions are opaque heap handles released with their
//! `*_free` function. Every fallible call returns a [`BisacStatus`]; the
//! message of the last failure on the calling thread is available from
//! [`bisac_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use bisac_core::model::{detection_probability, BeamformingMatrix};
use bisac_core::optimizer::{alternating_solve, SolveReport};
use bisac_core::scenario::Scenario;
use bisac_core::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BisacStatus {
    Ok = 0,
    InvalidArgument = 1,
    Parse = 2,
    Validation = 3,
    Infeasible = 4,
    SolverFailure = 5,
    NullPointer = 6,
    Panic = 7,
    Io = 8,
}

/// Scenario handle.
pub struct BisacScenario {
    inner: Scenario,
}

/// Solved beamformer with its metrics.
pub struct BisacSolution {
    beam: BeamformingMatrix,
    report: SolveReport,
}

/// Metrics of a solution. SINRs are linear, power in mW.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct BisacMetrics {
    pub rate: f64,
    pub gamma_u: f64,
    pub gamma_t: f64,
    pub gamma_ap: f64,
    pub detection_probability: f64,
    pub power: f64,
    pub outer_iterations: usize,
    pub sca_iterations: usize,
    pub converged: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Vec<u8>> = const { RefCell::new(Vec::new()) };
}

fn set_error(msg: &str) {
    LAST_ERROR.with(|e| {
        let mut buf = e.borrow_mut();
        buf.clear();
        buf.extend(msg.bytes().filter(|&b| b != 0));
    });
}

fn status_of(e: &Error) -> BisacStatus {
    match e {
        Error::InvalidArgument(_) => BisacStatus::InvalidArgument,
        Error::Parse(_) => BisacStatus::Parse,
        Error::Validation(_) => BisacStatus::Validation,
        Error::InfeasibleScenario { .. } => BisacStatus::Infeasible,
        Error::Solver { .. } => BisacStatus::SolverFailure,
        Error::Io(_) | Error::Json(_) | Error::Csv(_) => BisacStatus::Io,
    }
}

fn fail(status: BisacStatus, msg: &str) -> BisacStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> BisacStatus) -> BisacStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(BisacStatus::Panic, "internal panic"),
    }
}

fn from_core<T>(r: bisac_core::Result<T>, ok: impl FnOnce(T)) -> BisacStatus {
    match r {
        Ok(v) => {
            ok(v);
            BisacStatus::Ok
        }
        Err(e) => fail(status_of(&e), &e.to_string()),
    }
}

unsafe fn text<'a>(p: *const c_char) -> Result<&'a str, BisacStatus> {
    if p.is_null() {
        return Err(fail(BisacStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(BisacStatus::InvalidArgument, "string is not valid UTF-8"))
}

/// New scenario with the reference defaults. Never returns null.
#[no_mangle]
pub extern "C" fn bisac_scenario_default() -> *mut BisacScenario {
    Box::into_raw(Box::new(BisacScenario { inner: Scenario::default() }))
}

/// Parse a scenario from TOML text; keys not given keep their defaults.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bisac_scenario_from_toml(toml: *const c_char, out: *mut *mut BisacScenario) -> BisacStatus {
    guard(|| {
        if out.is_null() {
            return fail(BisacStatus::NullPointer, "null output pointer");
        }
        *out = ptr::null_mut();
        let src = match text(toml) {
            Ok(s) => s,
            Err(s) => return s,
        };
        from_core(Scenario::from_toml_str(src), |inner| {
            *out = Box::into_raw(Box::new(BisacScenario { inner }));
        })
    })
}

/// Set one numeric scenario key, e.g. `p_t_dbm`. The scenario is left
/// unchanged on error.
///
/// # Safety
/// `scenario` must come from this library and `key` be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn bisac_scenario_set(
    scenario: *mut BisacScenario,
    key: *const c_char,
    value: f64,
) -> BisacStatus {
    guard(|| {
        let Some(s) = scenario.as_mut() else {
            return fail(BisacStatus::NullPointer, "null scenario");
        };
        let key = match text(key) {
            Ok(k) => k,
            Err(st) => return st,
        };
        from_core(s.inner.with_override(key, value), |next| s.inner = next)
    })
}

/// # Safety
/// `scenario` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bisac_scenario_free(scenario: *mut BisacScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Maximize the UE rate for a scenario.
///
/// # Safety
/// `scenario` must come from this library and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bisac_solve(scenario: *const BisacScenario, out: *mut *mut BisacSolution) -> BisacStatus {
    guard(|| {
        if out.is_null() {
            return fail(BisacStatus::NullPointer, "null output pointer");
        }
        *out = ptr::null_mut();
        let Some(s) = scenario.as_ref() else {
            return fail(BisacStatus::NullPointer, "null scenario");
        };
        let solved = s
            .inner
            .validate()
            .and_then(|_| s.inner.build())
            .and_then(|(cfg, ch)| alternating_solve(&s.inner.stopping_rule(), &ch, &cfg));
        from_core(solved, |(beam, _, report)| {
            *out = Box::into_raw(Box::new(BisacSolution { beam, report }));
        })
    })
}

/// # Safety
/// `solution` must come from this library and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bisac_solution_metrics(solution: *const BisacSolution, out: *mut BisacMetrics) -> BisacStatus {
    guard(|| {
        let (Some(sol), Some(out)) = (solution.as_ref(), out.as_mut()) else {
            return fail(BisacStatus::NullPointer, "null argument");
        };
        let r = &sol.report;
        *out = BisacMetrics {
            rate: r.rate,
            gamma_u: r.gamma_u,
            gamma_t: r.gamma_t,
            gamma_ap: r.gamma_ap,
            detection_probability: r.detection_probability,
            power: r.power,
            outer_iterations: r.outer_iterations,
            sca_iterations: r.sca_iterations,
            converged: r.converged,
        };
        BisacStatus::Ok
    })
}

/// Number of transmit antennas `N_t`; the beamformer has `N_t + 2` columns.
///
/// # Safety
/// `solution` must come from this library or be null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn bisac_solution_n_t(solution: *const BisacSolution) -> usize {
    solution.as_ref().map_or(0, |s| s.beam.n_t())
}

/// Copy the beamformer, column-major, into `re` and `im`, each holding
/// `len = N_t·(N_t + 2)` values. Columns are the UE stream, the tag stream
/// and then the probing streams.
///
/// # Safety
/// `re` and `im` must each point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn bisac_solution_beamformer(
    solution: *const BisacSolution,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> BisacStatus {
    guard(|| {
        let Some(sol) = solution.as_ref() else {
            return fail(BisacStatus::NullPointer, "null solution");
        };
        if re.is_null() || im.is_null() {
            return fail(BisacStatus::NullPointer, "null output buffer");
        }
        let m = sol.beam.matrix();
        if len != m.len() {
            return fail(BisacStatus::InvalidArgument, &format!("buffer length {len}, need {}", m.len()));
        }
        let re = std::slice::from_raw_parts_mut(re, len);
        let im = std::slice::from_raw_parts_mut(im, len);
        for (k, z) in m.iter().enumerate() {
            re[k] = z.re;
            im[k] = z.im;
        }
        BisacStatus::Ok
    })
}

/// # Safety
/// `solution` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bisac_solution_free(solution: *mut BisacSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// Closed-form detection probability for a linear echo SINR and a
/// false-alarm target in (0, 1).
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bisac_detection_probability(gamma_ap: f64, p_f: f64, out: *mut f64) -> BisacStatus {
    guard(|| {
        let Some(out) = out.as_mut() else {
            return fail(BisacStatus::NullPointer, "null output pointer");
        };
        from_core(detection_probability(gamma_ap, p_f), |v| *out = v)
    })
}

/// Copy the last error message of this thread into `buf` as a
/// NUL-terminated string, truncated to `len` bytes. Returns the length the
/// full message needs including the terminator. `buf` may be null to query.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn bisac_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len() + 1
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn bisac_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
