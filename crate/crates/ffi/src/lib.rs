//! C ABI for the `ris-ce` simulation library.
//!
//! Configs and result sets are opaque handles created and destroyed through
//! this interface; every fallible call returns a [`RisceStatus`] and leaves a
//! human-readable message retrievable with [`risce_last_error`]. Strings
//! returned through `char **` out-parameters are owned by the caller and must
//! be released with [`risce_string_free`]; strings returned as `const char *`
//! borrow from the handle (or thread-local storage) and must not be freed.
//!
//! Handles are not synchronized: a given handle must be used from one thread
//! at a time. Distinct handles are independent, and the sweep itself
//! parallelizes internally.
//!
//! The generated header lives at `include/ris_ce.h`.

use libc::{c_char, c_double, size_t};
use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::path::Path;
use std::ptr;

use ris_ce::config::ScenarioConfig;
use ris_ce::harness::{self, ResultRow};

/// Status codes of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RisceStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// Configuration parsing or validation failed.
    ConfigError = 3,
    /// The simulation itself failed.
    RunError = 4,
    /// Reading or writing a file failed.
    IoError = 5,
    /// An index was out of range.
    OutOfRange = 6,
}

/// Opaque scenario configuration handle.
pub struct RisceConfig {
    inner: ScenarioConfig,
}

/// Opaque result-set handle.
pub struct RisceResults {
    rows: Vec<ResultRow>,
    // Borrowed-string storage for the accessors.
    metric_cache: RefCell<Option<CString>>,
    variant_cache: RefCell<Option<CString>>,
}

/// Numeric fields of one result row.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RisceRowNumbers {
    /// Sweep value of the row.
    pub value: c_double,
    /// Metric mean over the included trials.
    pub mean: c_double,
    /// Standard error of the mean.
    pub std_error: c_double,
    /// Number of trials included.
    pub trials: u64,
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

fn status_of(err: &ris_ce::Error) -> RisceStatus {
    match err {
        ris_ce::Error::Config(_) => RisceStatus::ConfigError,
        ris_ce::Error::Io(_) => RisceStatus::IoError,
        _ => RisceStatus::RunError,
    }
}

/// Last error message of the current thread; borrowed, valid until the next
/// failing call on this thread. Never null.
#[no_mangle]
pub extern "C" fn risce_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

// SAFETY helper: read a required C string argument.
unsafe fn read_str<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, RisceStatus> {
    if ptr.is_null() {
        set_error(&format!("{name} is null"));
        return Err(RisceStatus::NullArgument);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error(&format!("{name} is not valid UTF-8"));
        RisceStatus::InvalidUtf8
    })
}

fn deliver_config(
    config: ris_ce::Result<ScenarioConfig>,
    out: *mut *mut RisceConfig,
) -> RisceStatus {
    if out.is_null() {
        set_error("out is null");
        return RisceStatus::NullArgument;
    }
    match config {
        Ok(inner) => {
            let handle = Box::new(RisceConfig { inner });
            unsafe { *out = Box::into_raw(handle) };
            RisceStatus::Ok
        }
        Err(e) => {
            set_error(&e.to_string());
            unsafe { *out = ptr::null_mut() };
            status_of(&e)
        }
    }
}

/// Create a config from a built-in preset (`"scenario1"` or `"scenario2"`).
///
/// # Safety
/// `name` must be a valid NUL-terminated string; `out` must be a valid
/// pointer. On success `*out` owns the handle and must be released with
/// [`risce_config_free`].
#[no_mangle]
pub unsafe extern "C" fn risce_config_from_preset(
    name: *const c_char,
    out: *mut *mut RisceConfig,
) -> RisceStatus {
    let name = match read_str(name, "name") {
        Ok(s) => s,
        Err(status) => return status,
    };
    deliver_config(ScenarioConfig::preset(name), out)
}

/// Parse a config from TOML text.
///
/// # Safety
/// See [`risce_config_from_preset`].
#[no_mangle]
pub unsafe extern "C" fn risce_config_from_toml(
    text: *const c_char,
    out: *mut *mut RisceConfig,
) -> RisceStatus {
    let text = match read_str(text, "text") {
        Ok(s) => s,
        Err(status) => return status,
    };
    deliver_config(ScenarioConfig::from_toml_str(text), out)
}

/// Load and validate a config file.
///
/// # Safety
/// See [`risce_config_from_preset`].
#[no_mangle]
pub unsafe extern "C" fn risce_config_from_file(
    path: *const c_char,
    out: *mut *mut RisceConfig,
) -> RisceStatus {
    let path = match read_str(path, "path") {
        Ok(s) => s,
        Err(status) => return status,
    };
    deliver_config(ScenarioConfig::load(Path::new(path)), out)
}

/// Serialize a config to TOML. The returned string is owned by the caller.
///
/// # Safety
/// `config` must be a live handle from this library; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn risce_config_to_toml(
    config: *const RisceConfig,
    out: *mut *mut c_char,
) -> RisceStatus {
    if config.is_null() || out.is_null() {
        set_error("config or out is null");
        return RisceStatus::NullArgument;
    }
    match (*config).inner.to_toml() {
        Ok(text) => {
            let c = CString::new(text.replace('\0', " ")).unwrap_or_default();
            *out = c.into_raw();
            RisceStatus::Ok
        }
        Err(e) => {
            set_error(&e.to_string());
            status_of(&e)
        }
    }
}

/// Override the Monte Carlo trial count.
///
/// # Safety
/// `config` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn risce_config_set_trials(
    config: *mut RisceConfig,
    trials: u64,
) -> RisceStatus {
    if config.is_null() {
        set_error("config is null");
        return RisceStatus::NullArgument;
    }
    if trials == 0 {
        set_error("trials must be >= 1");
        return RisceStatus::ConfigError;
    }
    (*config).inner.run.trials = trials as usize;
    RisceStatus::Ok
}

/// Override the master seed.
///
/// # Safety
/// `config` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn risce_config_set_seed(
    config: *mut RisceConfig,
    seed: u64,
) -> RisceStatus {
    if config.is_null() {
        set_error("config is null");
        return RisceStatus::NullArgument;
    }
    (*config).inner.run.seed = seed;
    RisceStatus::Ok
}

/// Override the sweep variable (`k_db | d_r | rho_db | tau_2 | sigma_e`) and
/// its grid.
///
/// # Safety
/// `config` must be a live handle; `variable` a valid string; `grid` must
/// point to `grid_len` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn risce_config_set_sweep(
    config: *mut RisceConfig,
    variable: *const c_char,
    grid: *const c_double,
    grid_len: size_t,
) -> RisceStatus {
    if config.is_null() || grid.is_null() {
        set_error("config or grid is null");
        return RisceStatus::NullArgument;
    }
    let variable = match read_str(variable, "variable") {
        Ok(s) => s,
        Err(status) => return status,
    };
    let sweep: ris_ce::config::SweepVar = match variable.parse() {
        Ok(v) => v,
        Err(e) => {
            set_error(&e.to_string());
            return RisceStatus::ConfigError;
        }
    };
    let values = std::slice::from_raw_parts(grid, grid_len).to_vec();
    let cfg = &mut (*config).inner;
    cfg.run.sweep = sweep;
    cfg.run.grid = values;
    if let Err(e) = cfg.validate() {
        set_error(&e.to_string());
        return RisceStatus::ConfigError;
    }
    RisceStatus::Ok
}

/// Release a config handle. Null is ignored.
///
/// # Safety
/// `config` must be a handle created by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn risce_config_free(config: *mut RisceConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

fn deliver_results(
    rows: ris_ce::Result<Vec<ResultRow>>,
    out: *mut *mut RisceResults,
) -> RisceStatus {
    if out.is_null() {
        set_error("out is null");
        return RisceStatus::NullArgument;
    }
    match rows {
        Ok(rows) => {
            let handle = Box::new(RisceResults {
                rows,
                metric_cache: RefCell::new(None),
                variant_cache: RefCell::new(None),
            });
            unsafe { *out = Box::into_raw(handle) };
            RisceStatus::Ok
        }
        Err(e) => {
            set_error(&e.to_string());
            unsafe { *out = ptr::null_mut() };
            status_of(&e)
        }
    }
}

/// Run the configured Monte Carlo sweep. Deterministic per config and seed.
///
/// # Safety
/// `config` must be a live handle; `out` must be valid. On success `*out`
/// owns the result set and must be released with [`risce_results_free`].
#[no_mangle]
pub unsafe extern "C" fn risce_run_sweep(
    config: *const RisceConfig,
    out: *mut *mut RisceResults,
) -> RisceStatus {
    if config.is_null() {
        set_error("config is null");
        return RisceStatus::NullArgument;
    }
    deliver_results(harness::sweep(&(*config).inner), out)
}

/// Rank the modified-DFT design against the DFT design and `random_designs`
/// random designs at size `(n_prime, m)`.
///
/// # Safety
/// `out` must be a valid pointer; see [`risce_run_sweep`] for ownership.
#[no_mangle]
pub unsafe extern "C" fn risce_certify(
    n_prime: size_t,
    m: size_t,
    beta_bar: c_double,
    random_designs: size_t,
    seed: u64,
    out: *mut *mut RisceResults,
) -> RisceStatus {
    deliver_results(
        harness::certify(n_prime, m, beta_bar, random_designs, seed).map(|(_, rows)| rows),
        out,
    )
}

/// Number of rows in a result set.
///
/// # Safety
/// `results` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn risce_results_rows(results: *const RisceResults) -> size_t {
    if results.is_null() {
        return 0;
    }
    (*results).rows.len()
}

/// Numeric fields of row `index`.
///
/// # Safety
/// `results` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn risce_results_row_numbers(
    results: *const RisceResults,
    index: size_t,
    out: *mut RisceRowNumbers,
) -> RisceStatus {
    if results.is_null() || out.is_null() {
        set_error("results or out is null");
        return RisceStatus::NullArgument;
    }
    let rows = &(*results).rows;
    match rows.get(index) {
        Some(row) => {
            *out = RisceRowNumbers {
                value: row.value,
                mean: row.mean,
                std_error: row.stderr,
                trials: row.trials as u64,
            };
            RisceStatus::Ok
        }
        None => {
            set_error(&format!("row index {index} out of range ({})", rows.len()));
            RisceStatus::OutOfRange
        }
    }
}

unsafe fn cached_str(
    results: *const RisceResults,
    index: size_t,
    pick_variant: bool,
) -> *const c_char {
    if results.is_null() {
        return ptr::null();
    }
    let handle = &*results;
    match handle.rows.get(index) {
        Some(row) => {
            let text = if pick_variant { &row.variant } else { &row.metric };
            let c = CString::new(text.replace('\0', " ")).unwrap_or_default();
            let cache = if pick_variant {
                &handle.variant_cache
            } else {
                &handle.metric_cache
            };
            let mut slot = cache.borrow_mut();
            *slot = Some(c);
            slot.as_ref().unwrap().as_ptr()
        }
        None => ptr::null(),
    }
}

/// Metric name of row `index`; borrowed from the handle, valid until the next
/// call to this accessor on the same handle. Null when out of range.
///
/// # Safety
/// `results` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn risce_results_metric(
    results: *const RisceResults,
    index: size_t,
) -> *const c_char {
    cached_str(results, index, false)
}

/// Variant label of row `index`; same lifetime rules as
/// [`risce_results_metric`].
///
/// # Safety
/// `results` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn risce_results_variant(
    results: *const RisceResults,
    index: size_t,
) -> *const c_char {
    cached_str(results, index, true)
}

/// Render the result set as the canonical CSV document; owned by the caller.
///
/// # Safety
/// `results` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn risce_results_to_csv(
    results: *const RisceResults,
    out: *mut *mut c_char,
) -> RisceStatus {
    if results.is_null() || out.is_null() {
        set_error("results or out is null");
        return RisceStatus::NullArgument;
    }
    let text = harness::csv_string(&(*results).rows);
    let c = CString::new(text.replace('\0', " ")).unwrap_or_default();
    *out = c.into_raw();
    RisceStatus::Ok
}

/// Write the canonical CSV file.
///
/// # Safety
/// `results` must be a live handle; `path` a valid string.
#[no_mangle]
pub unsafe extern "C" fn risce_results_write_csv(
    results: *const RisceResults,
    path: *const c_char,
) -> RisceStatus {
    if results.is_null() {
        set_error("results is null");
        return RisceStatus::NullArgument;
    }
    let path = match read_str(path, "path") {
        Ok(s) => s,
        Err(status) => return status,
    };
    match harness::emit_csv(&(*results).rows, Path::new(path)) {
        Ok(()) => RisceStatus::Ok,
        Err(e) => {
            set_error(&e.to_string());
            status_of(&e)
        }
    }
}

/// Release a result-set handle. Null is ignored.
///
/// # Safety
/// `results` must be a handle created by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn risce_results_free(results: *mut RisceResults) {
    if !results.is_null() {
        drop(Box::from_raw(results));
    }
}

/// Release a string returned through a `char **` out-parameter. Null is
/// ignored.
///
/// # Safety
/// `s` must originate from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn risce_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
