//! C ABI over the selfhwdebug library.
//!
//! Every function returns an [`HwdStatus`]. On failure a message is kept per
//! thread and can be read with [`hwd_last_error_message`]. Strings handed out
//! by this library must be released with [`hwd_string_free`]; corpus handles
//! with [`hwd_corpus_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use selfhwdebug::corpus::{load_corpus, Corpus};
use selfhwdebug::pipeline::{extract_code, load_run_dir};
use selfhwdebug::report::{aggregate, aggregate_outcomes, EfficacyReport, Format};
use selfhwdebug::rtlcheck::{evaluate_checks, parse_checks, VerdictStatus};
use serde::Deserialize;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HwdStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    NotFound = 3,
    InvalidArgument = 4,
    CorpusError = 5,
    ChecksError = 6,
    RunError = 7,
    Panic = 99,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HwdVerdict {
    Pass = 0,
    Fail = 1,
    Indeterminate = 2,
}

impl From<VerdictStatus> for HwdVerdict {
    fn from(s: VerdictStatus) -> Self {
        match s {
            VerdictStatus::Pass => HwdVerdict::Pass,
            VerdictStatus::Fail => HwdVerdict::Fail,
            VerdictStatus::Indeterminate => HwdVerdict::Indeterminate,
        }
    }
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HwdReportFormat {
    Markdown = 0,
    Csv = 1,
    Json = 2,
}

/// Loaded corpus. Opaque to C.
pub struct HwdCorpus {
    inner: Corpus,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(HwdStatus, String);

type FfiResult<T> = Result<T, Failure>;

fn fail<T>(status: HwdStatus, msg: impl Into<String>) -> FfiResult<T> {
    Err(Failure(status, msg.into()))
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

/// Runs `f`, records any error message and turns panics into `Panic`.
fn guard(f: impl FnOnce() -> FfiResult<()>) -> HwdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            HwdStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "unknown panic".into());
            set_error(&format!("internal panic: {msg}"));
            HwdStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return fail(HwdStatus::NullArgument, format!("{name} is null"));
    }
    CStr::from_ptr(p)
        .to_str()
        .or_else(|_| fail(HwdStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

fn out_arg<'a, T>(p: *mut T, name: &str) -> FfiResult<&'a mut T> {
    // SAFETY: the caller promises `p` is null or valid for writes.
    unsafe { p.as_mut() }.map_or_else(|| fail(HwdStatus::NullArgument, format!("{name} is null")), Ok)
}

fn corpus_arg<'a>(p: *const HwdCorpus) -> FfiResult<&'a Corpus> {
    // SAFETY: the caller passes a handle from `hwd_corpus_load` or null.
    unsafe { p.as_ref() }
        .map(|c| &c.inner)
        .map_or_else(|| fail(HwdStatus::NullArgument, "corpus is null"), Ok)
}

fn to_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).unwrap_or_default().into_raw()
}

fn json<T: serde::Serialize>(value: &T) -> FfiResult<String> {
    serde_json::to_string(value).or_else(|e| fail(HwdStatus::InvalidArgument, e.to_string()))
}

/// Loads a corpus directory. On success `*out` owns a new handle.
///
/// # Safety
/// `root` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hwd_corpus_load(root: *const c_char, out: *mut *mut HwdCorpus) -> HwdStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let root = str_arg(root, "root")?;
        let corpus = load_corpus(Path::new(root)).or_else(|e| fail(HwdStatus::CorpusError, e.to_string()))?;
        *out = Box::into_raw(Box::new(HwdCorpus { inner: corpus }));
        Ok(())
    })
}

/// Releases a corpus handle. Null is ignored.
///
/// # Safety
/// `corpus` must come from `hwd_corpus_load` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hwd_corpus_free(corpus: *mut HwdCorpus) {
    if !corpus.is_null() {
        drop(Box::from_raw(corpus));
    }
}

/// Number of CWE categories.
///
/// # Safety
/// `corpus` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hwd_corpus_category_count(corpus: *const HwdCorpus, out: *mut usize) -> HwdStatus {
    guard(|| {
        let n = corpus_arg(corpus)?.categories.len();
        *out_arg(out, "out")? = n;
        Ok(())
    })
}

/// Number of samples across all categories.
///
/// # Safety
/// `corpus` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hwd_corpus_sample_count(corpus: *const HwdCorpus, out: *mut usize) -> HwdStatus {
    guard(|| {
        let n = corpus_arg(corpus)?.sample_count();
        *out_arg(out, "out")? = n;
        Ok(())
    })
}

/// Category at `index` in manifest order as JSON:
/// `{"id", "title", "description", "samples": [{"sample_id", "role"}]}`.
///
/// # Safety
/// `corpus` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hwd_corpus_category_json(
    corpus: *const HwdCorpus,
    index: usize,
    out: *mut *mut c_char,
) -> HwdStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let corpus = corpus_arg(corpus)?;
        let Some(cat) = corpus.categories.get(index) else {
            return fail(
                HwdStatus::NotFound,
                format!("category index {index} out of range ({} categories)", corpus.categories.len()),
            );
        };
        let samples: Vec<_> = corpus
            .samples
            .get(&cat.id)
            .into_iter()
            .flatten()
            .map(|s| serde_json::json!({"sample_id": s.sample_id, "role": s.role}))
            .collect();
        let value = serde_json::json!({
            "id": cat.id,
            "title": cat.title,
            "description": cat.description,
            "samples": samples,
        });
        *out = to_c_string(json(&value)?);
        Ok(())
    })
}

/// Full sample record (code, checks, annotations) as JSON.
///
/// # Safety
/// `corpus` must be a live handle, `sample_id` a NUL-terminated string and
/// `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hwd_corpus_sample_json(
    corpus: *const HwdCorpus,
    sample_id: *const c_char,
    out: *mut *mut c_char,
) -> HwdStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let corpus = corpus_arg(corpus)?;
        let id = str_arg(sample_id, "sample_id")?;
        let Some(sample) = corpus.samples.values().flatten().find(|s| s.sample_id == id) else {
            return fail(HwdStatus::NotFound, format!("no sample `{id}`"));
        };
        *out = to_c_string(json(sample)?);
        Ok(())
    })
}

/// Evaluates a JSON array of checks against Verilog source. `verdict_json`
/// may be null; otherwise it receives the full verdict as JSON.
///
/// # Safety
/// String arguments must be NUL-terminated; `status` must be valid for
/// writes; `verdict_json` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hwd_evaluate_checks(
    source: *const c_char,
    checks_json: *const c_char,
    status: *mut HwdVerdict,
    verdict_json: *mut *mut c_char,
) -> HwdStatus {
    guard(|| {
        if !verdict_json.is_null() {
            *verdict_json = ptr::null_mut();
        }
        let status = out_arg(status, "status")?;
        let source = str_arg(source, "source")?;
        let checks = parse_checks(str_arg(checks_json, "checks_json")?)
            .or_else(|e| fail(HwdStatus::ChecksError, e.to_string()))?;
        let verdict = evaluate_checks(source, &checks);
        *status = verdict.status.into();
        if !verdict_json.is_null() {
            *verdict_json = to_c_string(json(&verdict)?);
        }
        Ok(())
    })
}

/// Extracts repaired Verilog from a model reply. Returns `NotFound` (with
/// `*out` null) when the reply holds no module.
///
/// # Safety
/// `reply` must be NUL-terminated; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hwd_extract_code(reply: *const c_char, out: *mut *mut c_char) -> HwdStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        match extract_code(str_arg(reply, "reply")?) {
            Some(code) => {
                *out = to_c_string(code);
                Ok(())
            }
            None => fail(HwdStatus::NotFound, "no Verilog module in reply"),
        }
    })
}

#[derive(Deserialize)]
struct Outcome {
    cwe_id: String,
    config_label: String,
    status: VerdictStatus,
}

fn render(report: &EfficacyReport, format: HwdReportFormat) -> FfiResult<String> {
    match format {
        HwdReportFormat::Markdown => Ok(report.render(Format::Markdown)),
        HwdReportFormat::Csv => Ok(report.render(Format::Csv)),
        HwdReportFormat::Json => json(report),
    }
}

/// Aggregates a JSON array of `{"cwe_id", "config_label", "status"}`
/// outcomes (status is "Pass", "Fail" or "Indeterminate") and renders the
/// efficacy table.
///
/// # Safety
/// `outcomes_json` must be NUL-terminated; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hwd_render_report(
    outcomes_json: *const c_char,
    format: HwdReportFormat,
    out: *mut *mut c_char,
) -> HwdStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let outcomes: Vec<Outcome> = serde_json::from_str(str_arg(outcomes_json, "outcomes_json")?)
            .or_else(|e| fail(HwdStatus::InvalidArgument, format!("outcomes: {e}")))?;
        let report = aggregate_outcomes(outcomes.into_iter().map(|o| (o.cwe_id, o.config_label, o.status)));
        *out = to_c_string(render(&report, format)?);
        Ok(())
    })
}

/// Re-renders the report of a finished run directory.
///
/// # Safety
/// `run_dir` must be NUL-terminated; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hwd_run_report(
    run_dir: *const c_char,
    format: HwdReportFormat,
    out: *mut *mut c_char,
) -> HwdStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let dir = str_arg(run_dir, "run_dir")?;
        let (_, attempts) = load_run_dir(Path::new(dir)).or_else(|e| fail(HwdStatus::RunError, e.to_string()))?;
        let report = aggregate(&attempts, |a| a.config_label.clone());
        *out = to_c_string(render(&report, format)?);
        Ok(())
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hwd_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version; static storage, do not free.
#[no_mangle]
pub extern "C" fn hwd_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}

/// Message for the last failed call on this thread, or null after a
/// successful call. Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn hwd_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}
