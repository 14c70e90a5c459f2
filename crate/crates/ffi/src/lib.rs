//! C ABI over the maneuver-optimization toolkit.
//!
//! Conventions: objects cross the boundary as opaque handles created and
//! released by the paired `_free` functions; strings are UTF-8 and owned by
//! the side that allocated them (`camopt_string_free` releases strings this
//! library returns); every fallible call returns a [`CamoptStatus`], with a
//! thread-local message available from `camopt_last_error_message` after a
//! failure.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use camopt::config::RunConfig;
use camopt::conjunction::{screen_situation, Conjunction};
use camopt::generator::{generate_indexed, GeneratorConfig};
use camopt::optimize::{solve, Algorithm, Solution};
use camopt::session::{DangerousSituation, Maneuver};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CamoptStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// JSON input could not be parsed.
    ParseError = 3,
    /// Input violated a documented invariant.
    InvalidInput = 4,
    /// The algorithm id is not one of the nine published identifiers.
    UnknownAlgorithm = 5,
    /// Simulation or optimization failed.
    DomainError = 6,
    /// The index passed to an accessor is out of range.
    OutOfRange = 7,
    /// The library panicked; state is unchanged but the call did nothing.
    Panic = 8,
}

/// One impulsive burn in the inertial frame (m/s components, epoch in days
/// mjd2000).
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CamoptManeuver {
    pub dvx: f64,
    pub dvy: f64,
    pub dvz: f64,
    pub epoch: f64,
}

/// Opaque handle to a dangerous situation.
pub struct CamoptSituation {
    inner: DangerousSituation,
}

/// Opaque handle to a solved situation: the maneuvers, the scored session
/// result, and the pre-maneuver conjunction list.
pub struct CamoptSolution {
    solution: Solution,
    conjunctions_before: Vec<Conjunction>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(e: &camopt::Error) -> CamoptStatus {
    match e {
        camopt::Error::UnknownAlgorithm(_) => CamoptStatus::UnknownAlgorithm,
        camopt::Error::InvalidInput(_) | camopt::Error::ChecksumMismatch { .. } => {
            CamoptStatus::InvalidInput
        }
        _ => CamoptStatus::DomainError,
    }
}

fn guard(body: impl FnOnce() -> CamoptStatus) -> CamoptStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            CamoptStatus::Panic
        }
    }
}

/// # Safety
/// `s` must be null or a valid NUL-terminated string.
unsafe fn utf8_arg<'a>(s: *const c_char) -> Result<Option<&'a str>, CamoptStatus> {
    if s.is_null() {
        return Ok(None);
    }
    match CStr::from_ptr(s).to_str() {
        Ok(text) => Ok(Some(text)),
        Err(_) => {
            set_error("argument is not valid UTF-8");
            Err(CamoptStatus::InvalidUtf8)
        }
    }
}

fn parse_config(json: Option<&str>) -> Result<RunConfig, CamoptStatus> {
    match json {
        None => Ok(RunConfig::default()),
        Some(text) => RunConfig::from_json(text).map_err(|e| {
            set_error(&e.to_string());
            CamoptStatus::ParseError
        }),
    }
}

fn out_string(out: *mut *mut c_char, text: String) -> CamoptStatus {
    match CString::new(text) {
        Ok(c) => {
            unsafe { *out = c.into_raw() };
            CamoptStatus::Ok
        }
        Err(_) => {
            set_error("output contained an interior NUL byte");
            CamoptStatus::DomainError
        }
    }
}

/// Message of the most recent failure on this thread; the pointer stays
/// valid until the next failing call on the same thread. Never null.
#[no_mangle]
pub extern "C" fn camopt_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn camopt_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr() as *const c_char
}

/// Parses a situation from its JSON document.
///
/// # Safety
/// `json` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn camopt_situation_from_json(
    json: *const c_char,
    out: *mut *mut CamoptSituation,
) -> CamoptStatus {
    if out.is_null() {
        return CamoptStatus::NullArgument;
    }
    *out = ptr::null_mut();
    guard(|| {
        let Some(text) = (match utf8_arg(json) {
            Ok(Some(t)) => Some(t),
            Ok(None) => {
                set_error("json argument is null");
                return CamoptStatus::NullArgument;
            }
            Err(status) => return status,
        }) else {
            return CamoptStatus::NullArgument;
        };
        let situation: DangerousSituation = match serde_json::from_str(text) {
            Ok(s) => s,
            Err(e) => {
                set_error(&format!("situation parse: {e}"));
                return CamoptStatus::ParseError;
            }
        };
        if let Err(e) = situation.validate() {
            set_error(&e.to_string());
            return CamoptStatus::InvalidInput;
        }
        *out = Box::into_raw(Box::new(CamoptSituation { inner: situation }));
        CamoptStatus::Ok
    })
}

/// Generates stream `index` of the seeded random situation family with
/// `n_debris` debris objects (0 keeps the default of 10).
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn camopt_situation_generate(
    seed: u64,
    index: u64,
    n_debris: u32,
    out: *mut *mut CamoptSituation,
) -> CamoptStatus {
    if out.is_null() {
        return CamoptStatus::NullArgument;
    }
    *out = ptr::null_mut();
    guard(|| {
        let mut cfg = GeneratorConfig {
            rng_seed: seed,
            ..Default::default()
        };
        if n_debris > 0 {
            cfg.n_debris = n_debris as usize;
        }
        match generate_indexed(&cfg, index) {
            Ok(situation) => {
                *out = Box::into_raw(Box::new(CamoptSituation { inner: situation }));
                CamoptStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                status_of(&e)
            }
        }
    })
}

/// Serializes a situation to pretty-printed JSON (free the string with
/// `camopt_string_free`).
///
/// # Safety
/// `situation` must be a live handle from this library, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn camopt_situation_to_json(
    situation: *const CamoptSituation,
    out: *mut *mut c_char,
) -> CamoptStatus {
    if situation.is_null() || out.is_null() {
        return CamoptStatus::NullArgument;
    }
    guard(|| {
        let sit = &(*situation).inner;
        match serde_json::to_string_pretty(sit) {
            Ok(json) => out_string(out, json),
            Err(e) => {
                set_error(&e.to_string());
                CamoptStatus::DomainError
            }
        }
    })
}

/// Number of debris objects in the situation.
///
/// # Safety
/// `situation` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn camopt_situation_debris_count(situation: *const CamoptSituation) -> usize {
    if situation.is_null() {
        return 0;
    }
    (*situation).inner.debris.len()
}

/// Releases a situation handle; null is ignored.
///
/// # Safety
/// `situation` must be null or a handle returned by this library, not yet
/// freed.
#[no_mangle]
pub unsafe extern "C" fn camopt_situation_free(situation: *mut CamoptSituation) {
    if !situation.is_null() {
        drop(Box::from_raw(situation));
    }
}

/// Runs one of the nine algorithms on the situation. `algorithm` is the
/// published identifier (for example "gs-ce"); `config_json` is an optional
/// configuration document (null for defaults).
///
/// # Safety
/// Pointers must be valid; `config_json` may be null.
#[no_mangle]
pub unsafe extern "C" fn camopt_solve(
    situation: *const CamoptSituation,
    algorithm: *const c_char,
    config_json: *const c_char,
    out: *mut *mut CamoptSolution,
) -> CamoptStatus {
    if situation.is_null() || out.is_null() {
        return CamoptStatus::NullArgument;
    }
    *out = ptr::null_mut();
    guard(|| {
        let algo_text = match utf8_arg(algorithm) {
            Ok(Some(t)) => t,
            Ok(None) => {
                set_error("algorithm argument is null");
                return CamoptStatus::NullArgument;
            }
            Err(status) => return status,
        };
        let algo = match Algorithm::parse(algo_text) {
            Ok(a) => a,
            Err(e) => {
                set_error(&e.to_string());
                return CamoptStatus::UnknownAlgorithm;
            }
        };
        let cfg = match utf8_arg(config_json).and_then(parse_config) {
            Ok(c) => c,
            Err(status) => return status,
        };
        let sit = &(*situation).inner;
        let screening = cfg.screening();
        let before = match screen_situation(sit, &[], &screening) {
            Ok(rows) => rows,
            Err(e) => {
                set_error(&e.to_string());
                return status_of(&e);
            }
        };
        match solve(
            sit,
            algo,
            &cfg.grid_search,
            &cfg.cross_entropy,
            &cfg.reward,
            &screening,
        ) {
            Ok(solution) => {
                *out = Box::into_raw(Box::new(CamoptSolution {
                    solution,
                    conjunctions_before: before,
                }));
                CamoptStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                status_of(&e)
            }
        }
    })
}

/// Total reward of the solution (NaN for a null handle).
///
/// # Safety
/// `solution` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn camopt_solution_reward(solution: *const CamoptSolution) -> f64 {
    if solution.is_null() {
        return f64::NAN;
    }
    (*solution).solution.result.reward.total
}

/// Total delta-v in m/s (NaN for a null handle).
///
/// # Safety
/// `solution` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn camopt_solution_fuel(solution: *const CamoptSolution) -> f64 {
    if solution.is_null() {
        return f64::NAN;
    }
    (*solution).solution.result.fuel
}

/// Combined collision probability after the maneuvers (NaN for null).
///
/// # Safety
/// `solution` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn camopt_solution_total_probability(solution: *const CamoptSolution) -> f64 {
    if solution.is_null() {
        return f64::NAN;
    }
    (*solution).solution.result.total_probability
}

/// Number of maneuvers in the solution.
///
/// # Safety
/// `solution` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn camopt_solution_maneuver_count(solution: *const CamoptSolution) -> usize {
    if solution.is_null() {
        return 0;
    }
    (*solution).solution.maneuvers.len()
}

/// Copies maneuver `index` into `out`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn camopt_solution_maneuver(
    solution: *const CamoptSolution,
    index: usize,
    out: *mut CamoptManeuver,
) -> CamoptStatus {
    if solution.is_null() || out.is_null() {
        return CamoptStatus::NullArgument;
    }
    let maneuvers = &(*solution).solution.maneuvers;
    let Some(m) = maneuvers.get(index) else {
        set_error(&format!(
            "maneuver index {index} out of range ({} available)",
            maneuvers.len()
        ));
        return CamoptStatus::OutOfRange;
    };
    *out = CamoptManeuver {
        dvx: m.dv.x,
        dvy: m.dv.y,
        dvz: m.dv.z,
        epoch: m.epoch,
    };
    CamoptStatus::Ok
}

/// Serializes the full solution (maneuvers, scored result, pre-maneuver
/// conjunctions) as pretty-printed JSON.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn camopt_solution_to_json(
    solution: *const CamoptSolution,
    out: *mut *mut c_char,
) -> CamoptStatus {
    if solution.is_null() || out.is_null() {
        return CamoptStatus::NullArgument;
    }
    guard(|| {
        let sol = &*solution;
        let document = serde_json::json!({
            "algorithm": sol.solution.algorithm,
            "maneuvers": sol.solution.maneuvers,
            "result": sol.solution.result,
            "conjunctions_before": sol.conjunctions_before,
        });
        match serde_json::to_string_pretty(&document) {
            Ok(json) => out_string(out, json),
            Err(e) => {
                set_error(&e.to_string());
                CamoptStatus::DomainError
            }
        }
    })
}

/// Releases a solution handle; null is ignored.
///
/// # Safety
/// `solution` must be null or a handle returned by this library, not yet
/// freed.
#[no_mangle]
pub unsafe extern "C" fn camopt_solution_free(solution: *mut CamoptSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// Screens the situation (optionally with a JSON maneuver list applied) and
/// returns the conjunction table as a JSON array.
///
/// # Safety
/// `situation` and `out` must be valid; `maneuvers_json` and `config_json`
/// may be null.
#[no_mangle]
pub unsafe extern "C" fn camopt_conjunctions_json(
    situation: *const CamoptSituation,
    maneuvers_json: *const c_char,
    config_json: *const c_char,
    out: *mut *mut c_char,
) -> CamoptStatus {
    if situation.is_null() || out.is_null() {
        return CamoptStatus::NullArgument;
    }
    guard(|| {
        let maneuvers: Vec<Maneuver> = match utf8_arg(maneuvers_json) {
            Ok(None) => Vec::new(),
            Ok(Some(text)) => match serde_json::from_str(text) {
                Ok(list) => list,
                Err(e) => {
                    set_error(&format!("maneuvers parse: {e}"));
                    return CamoptStatus::ParseError;
                }
            },
            Err(status) => return status,
        };
        let cfg = match utf8_arg(config_json).and_then(parse_config) {
            Ok(c) => c,
            Err(status) => return status,
        };
        match screen_situation(&(*situation).inner, &maneuvers, &cfg.screening()) {
            Ok(rows) => match serde_json::to_string_pretty(&rows) {
                Ok(json) => out_string(out, json),
                Err(e) => {
                    set_error(&e.to_string());
                    CamoptStatus::DomainError
                }
            },
            Err(e) => {
                set_error(&e.to_string());
                status_of(&e)
            }
        }
    })
}

/// Releases a string returned by this library; null is ignored.
///
/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn camopt_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
