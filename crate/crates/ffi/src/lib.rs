//! C interface to the dnlab experiment harness.
//!
//! Configurations and finished runs are opaque handles owned by the caller
//! and released with the matching `*_free` function. Every fallible call
//! returns a [`DnlabStatus`]; on failure a description is available from
//! [`dnlab_last_error`] on the same thread until the next failing call.
//! Strings returned as `char *` belong to the caller and are released with
//! [`dnlab_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::ptr;

use dnlab::harness::pipelines::Summary;
use dnlab::harness::{emit_report, run_experiment, ExperimentConfig, RunManifest, RunOptions, SUMMARY};
use dnlab::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DnlabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Rejected configuration or malformed input text.
    Config = 3,
    Io = 4,
    /// A solver, law or mesh check failed.
    Numerical = 5,
    /// The run started but a step failed; the handle is still produced.
    RunFailed = 6,
    NotFound = 7,
    Panic = 8,
}

/// Opaque experiment configuration.
pub struct DnlabConfig {
    inner: ExperimentConfig,
}

/// Opaque record of a finished (or failed) run.
pub struct DnlabRun {
    dir: PathBuf,
    manifest: RunManifest,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> DnlabStatus {
    match e {
        Error::Config(_) | Error::Parse { .. } | Error::Unsupported(_) | Error::Artifacts(_) => DnlabStatus::Config,
        Error::Io(_) | Error::Csv(_) | Error::Json(_) => DnlabStatus::Io,
        _ => DnlabStatus::Numerical,
    }
}

struct Fail(DnlabStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

/// Runs `f`, converting errors and panics into a status plus last-error text.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> DnlabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DnlabStatus::Ok,
        Ok(Err(Fail(s, msg))) => {
            set_error(&msg);
            s
        }
        Err(_) => {
            set_error("internal panic");
            DnlabStatus::Panic
        }
    }
}

unsafe fn cstr<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(DnlabStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail(DnlabStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| Fail(DnlabStatus::NullPointer, format!("{what} is null")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| Fail(DnlabStatus::NullPointer, format!("{what} is null")))
}

fn owned_string(s: &str) -> *mut c_char {
    CString::new(s.replace('\0', " ")).unwrap_or_default().into_raw()
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dnlab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Description of the last failure on this thread (empty if none). The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn dnlab_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn dnlab_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Creates a configuration holding the defaults.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn dnlab_config_default(out: *mut *mut DnlabConfig) -> DnlabStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = Box::into_raw(Box::new(DnlabConfig { inner: ExperimentConfig::default() }));
        Ok(())
    })
}

/// Parses configuration text (`key = value` lines).
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dnlab_config_parse(text: *const c_char, out: *mut *mut DnlabConfig) -> DnlabStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let inner = ExperimentConfig::parse(cstr(text, "text")?, "<ffi>")?;
        *out = Box::into_raw(Box::new(DnlabConfig { inner }));
        Ok(())
    })
}

/// Sets one configuration key.
///
/// # Safety
/// `config` must be a live handle; `key` and `value` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn dnlab_config_set(
    config: *mut DnlabConfig,
    key: *const c_char,
    value: *const c_char,
) -> DnlabStatus {
    guard(|| {
        let c = out_ptr(config, "config")?;
        c.inner.set(cstr(key, "key")?, cstr(value, "value")?)?;
        Ok(())
    })
}

/// Checks the configuration without running anything.
///
/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn dnlab_config_validate(config: *const DnlabConfig) -> DnlabStatus {
    guard(|| {
        handle(config, "config")?.inner.validate()?;
        Ok(())
    })
}

/// Canonical text of the configuration.
///
/// # Safety
/// `config` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dnlab_config_to_text(config: *const DnlabConfig, out: *mut *mut c_char) -> DnlabStatus {
    guard(|| {
        let c = handle(config, "config")?;
        *out_ptr(out, "out")? = owned_string(&c.inner.to_text());
        Ok(())
    })
}

/// SHA-256 of the canonical configuration text, as lowercase hex.
///
/// # Safety
/// `config` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dnlab_config_hash(config: *const DnlabConfig, out: *mut *mut c_char) -> DnlabStatus {
    guard(|| {
        let c = handle(config, "config")?;
        *out_ptr(out, "out")? = owned_string(&c.inner.hash());
        Ok(())
    })
}

/// # Safety
/// `config` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn dnlab_config_free(config: *mut DnlabConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Runs the configured pipeline, writing artifacts into `out_dir`.
/// `workers` = 0 uses the available parallelism.
///
/// Returns `Ok`, or `RunFailed` with a valid run handle when a step failed
/// after validation; any other status leaves `*out` null.
///
/// # Safety
/// `config` must be a live handle, `out_dir` NUL-terminated and `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn dnlab_run(
    config: *const DnlabConfig,
    out_dir: *const c_char,
    workers: usize,
    out: *mut *mut DnlabRun,
) -> DnlabStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let c = handle(config, "config")?;
        let dir = PathBuf::from(cstr(out_dir, "out_dir")?);
        let opts = RunOptions { workers: (workers > 0).then_some(workers) };
        let manifest = run_experiment(&c.inner, &dir, &opts)?;
        let failure = manifest.failure.as_ref().map(|f| format!("step '{}' failed: {}", f.step, f.message));
        *out = Box::into_raw(Box::new(DnlabRun { dir, manifest }));
        match failure {
            Some(msg) => Err(Fail(DnlabStatus::RunFailed, msg)),
            None => Ok(()),
        }
    })
}

/// Whether every step of the run completed.
///
/// # Safety
/// `run` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dnlab_run_succeeded(run: *const DnlabRun) -> bool {
    run.as_ref().is_some_and(|r| r.manifest.succeeded())
}

/// The run manifest as JSON.
///
/// # Safety
/// `run` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dnlab_run_manifest_json(run: *const DnlabRun, out: *mut *mut c_char) -> DnlabStatus {
    guard(|| {
        let r = handle(run, "run")?;
        let json = serde_json::to_string_pretty(&r.manifest).map_err(Error::from)?;
        *out_ptr(out, "out")? = owned_string(&json);
        Ok(())
    })
}

fn summary(dir: &Path) -> Result<Summary, Fail> {
    let text = std::fs::read_to_string(dir.join(SUMMARY)).map_err(Error::from)?;
    Ok(serde_json::from_str(&text).map_err(Error::from)?)
}

/// Reads one scalar metric from the run summary (`NotFound` if absent).
///
/// # Safety
/// `run` must be a live handle, `name` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dnlab_run_metric(run: *const DnlabRun, name: *const c_char, out: *mut f64) -> DnlabStatus {
    guard(|| {
        let r = handle(run, "run")?;
        let name = cstr(name, "name")?;
        let out = out_ptr(out, "out")?;
        let s = summary(&r.dir)?;
        *out = *s
            .metrics
            .get(name)
            .ok_or_else(|| Fail(DnlabStatus::NotFound, format!("metric '{name}' not in the summary")))?;
        Ok(())
    })
}

/// # Safety
/// `run` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn dnlab_run_free(run: *mut DnlabRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Text report over `count` run directories. `*all_passed` is set to
/// whether no pipeline failed its thresholds.
///
/// # Safety
/// `dirs` must point to `count` NUL-terminated strings; `out` and
/// `all_passed` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dnlab_report(
    dirs: *const *const c_char,
    count: usize,
    out: *mut *mut c_char,
    all_passed: *mut bool,
) -> DnlabStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let all_passed = out_ptr(all_passed, "all_passed")?;
        *out = ptr::null_mut();
        if dirs.is_null() && count > 0 {
            return Err(Fail(DnlabStatus::NullPointer, "dirs is null".into()));
        }
        let mut paths = Vec::with_capacity(count);
        for i in 0..count {
            paths.push(PathBuf::from(cstr(*dirs.add(i), "directory")?));
        }
        let r = emit_report(&paths)?;
        *all_passed = r.items.iter().all(|i| i.verdict != dnlab::harness::report::Verdict::Fail);
        *out = owned_string(&r.text);
        Ok(())
    })
}
