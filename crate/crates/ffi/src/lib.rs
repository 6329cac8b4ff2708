//! C ABI over ems-core.
//!
//! Objects from `*_new` functions are released with the matching `*_free`.
//! Strings returned through `char **` are released with `ems_string_free`.
//! Every call returns an `EmsStatus`; on failure `ems_last_error` holds a
//! message for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ems_core::dist::DistributionSpec;
use ems_core::gif::IntegralForm;
use ems_core::ranges::{self, RangesConfig};
use ems_core::seqcheck::{self, CheckConfig, Mode, Sequence};
use ems_core::{hoeffding, io, CheckReport, Error, Outcome};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    InvalidArgument = 4,
    IndexOutOfRange = 5,
    SequenceTooShort = 6,
    UnknownName = 7,
    Numerical = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmsMode {
    Float = 0,
    Extended = 1,
    Exact = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmsOutcome {
    AllPass = 0,
    AnyFail = 1,
    Inconclusive = 2,
}

pub struct EmsSequence(Sequence);

pub struct EmsDistribution(DistributionSpec);

pub struct EmsForm(IntegralForm);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(EmsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Parse(_) | Error::Io(_) => EmsStatus::Parse,
            Error::IndexOutOfRange { .. } => EmsStatus::IndexOutOfRange,
            Error::SequenceTooShort { .. } => EmsStatus::SequenceTooShort,
            Error::UnknownName(_) => EmsStatus::UnknownName,
            Error::InvalidParams(_) => EmsStatus::InvalidArgument,
            _ => EmsStatus::Numerical,
        };
        Failure(status, e.to_string())
    }
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> EmsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            EmsStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            EmsStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(EmsStatus::NullPointer, format!("{what} is null"))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure(EmsStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn opt_text<'a>(p: *const c_char, what: &str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        text(p, what).map(Some)
    }
}

unsafe fn get<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    let c = CString::new(s).map_err(|_| Failure(EmsStatus::Numerical, "output contains NUL".into()))?;
    put(out, c.into_raw(), "out")
}

fn outcome(o: Outcome) -> EmsOutcome {
    match o {
        Outcome::AllPass => EmsOutcome::AllPass,
        Outcome::AnyFail => EmsOutcome::AnyFail,
        Outcome::Inconclusive => EmsOutcome::Inconclusive,
    }
}

unsafe fn put_report(report: CheckReport, out_json: *mut *mut c_char, out_outcome: *mut EmsOutcome) -> Result<(), Failure> {
    if !out_outcome.is_null() {
        out_outcome.write(outcome(report.outcome()));
    }
    if !out_json.is_null() {
        put_string(out_json, report.to_json())?;
    }
    Ok(())
}

/// Message for the last failed call on this thread, or NULL. Owned by the library.
#[no_mangle]
pub extern "C" fn ems_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn ems_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must come from this library or be NULL.
#[no_mangle]
pub unsafe extern "C" fn ems_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Sequence from `len` doubles μ_1..μ_len. Exact mode reads each double through its shortest decimal.
///
/// # Safety
/// `values` must point to `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ems_sequence_new(values: *const f64, len: usize, mode: EmsMode, out: *mut *mut EmsSequence) -> EmsStatus {
    guard(|| {
        if values.is_null() && len > 0 {
            return Err(null("values"));
        }
        let v = if len == 0 { Vec::new() } else { std::slice::from_raw_parts(values, len).to_vec() };
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Failure(EmsStatus::InvalidArgument, "values must be finite".into()));
        }
        let seq = Sequence::float(v);
        let seq = match mode {
            EmsMode::Float => seq,
            EmsMode::Extended => seq.with_mode(Mode::ExtendedFloat)?,
            EmsMode::Exact => seq.with_mode(Mode::Exact)?,
        };
        put(out, Box::into_raw(Box::new(EmsSequence(seq))), "out")
    })
}

/// Sequence from JSON or CSV text, in the formats the command line accepts.
///
/// # Safety
/// `input` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ems_sequence_parse(input: *const c_char, out: *mut *mut EmsSequence) -> EmsStatus {
    guard(|| {
        let seq = io::parse_sequence(text(input, "input")?)?;
        put(out, Box::into_raw(Box::new(EmsSequence(seq))), "out")
    })
}

/// # Safety
/// `seq` must come from this library or be NULL.
#[no_mangle]
pub unsafe extern "C" fn ems_sequence_free(seq: *mut EmsSequence) {
    if !seq.is_null() {
        drop(Box::from_raw(seq));
    }
}

/// # Safety
/// `seq` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ems_sequence_len(seq: *const EmsSequence) -> usize {
    seq.as_ref().map_or(0, |s| s.0.len())
}

fn check_config(depth: usize) -> CheckConfig {
    CheckConfig { max_depth: (depth > 0).then_some(depth), ..CheckConfig::default() }
}

/// Expected-maxima conditions. `depth` 0 uses the mode default. Either output may be NULL.
///
/// # Safety
/// `seq` must be a live handle; non-NULL outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn ems_check_ems(seq: *const EmsSequence, depth: usize, out_json: *mut *mut c_char, out_outcome: *mut EmsOutcome) -> EmsStatus {
    guard(|| {
        let r = seqcheck::check_ems(&get(seq, "seq")?.0, &check_config(depth))?;
        put_report(r, out_json, out_outcome)
    })
}

/// Expected-ranges conditions. `depth` 0 uses the mode default. Either output may be NULL.
///
/// # Safety
/// `seq` must be a live handle; non-NULL outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn ems_check_ers(seq: *const EmsSequence, depth: usize, out_json: *mut *mut c_char, out_outcome: *mut EmsOutcome) -> EmsStatus {
    guard(|| {
        let r = seqcheck::check_ers(&get(seq, "seq")?.0, &check_config(depth))?;
        put_report(r, out_json, out_outcome)
    })
}

/// (−1)^{s+1} Δ^s μ_k as a double.
///
/// # Safety
/// `seq` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ems_forward_difference(seq: *const EmsSequence, s: usize, k: usize, out: *mut f64) -> EmsStatus {
    guard(|| {
        let v = seqcheck::forward_difference(&get(seq, "seq")?.0, s, k)?;
        put(out, v.approx, "out")
    })
}

/// β_{1,n} ≤ ... ≤ β_{n,n} as doubles into `out[0..n]`; `cap` is the buffer length.
///
/// # Safety
/// `seq` must be a live handle; `out` must hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn ems_beta_table(seq: *const EmsSequence, n: usize, out: *mut f64, cap: usize) -> EmsStatus {
    guard(|| {
        let t = hoeffding::beta_table(&get(seq, "seq")?.0, n)?;
        if out.is_null() {
            return Err(null("out"));
        }
        if cap < n {
            return Err(Failure(EmsStatus::BufferTooSmall, format!("need {n} slots, got {cap}")));
        }
        let betas = t.betas_f64();
        std::slice::from_raw_parts_mut(out, n).copy_from_slice(&betas);
        Ok(())
    })
}

/// Catalog distribution. `params` is JSON, a bare number, "p/q", or NULL for defaults.
///
/// # Safety
/// Strings must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ems_distribution_new(id: *const c_char, params: *const c_char, out: *mut *mut EmsDistribution) -> EmsStatus {
    guard(|| {
        let p = io::parse_params(opt_text(params, "params")?)?;
        let d = io::distribution(text(id, "id")?, &p, None)?;
        put(out, Box::into_raw(Box::new(EmsDistribution(d))), "out")
    })
}

/// # Safety
/// `d` must come from this library or be NULL.
#[no_mangle]
pub unsafe extern "C" fn ems_distribution_free(d: *mut EmsDistribution) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// Q(u) for 0 < u < 1.
///
/// # Safety
/// `d` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ems_quantile(d: *const EmsDistribution, u: f64, out: *mut f64) -> EmsStatus {
    guard(|| {
        if !(u > 0.0 && u < 1.0) {
            return Err(Failure(EmsStatus::InvalidArgument, format!("u = {u} is outside (0, 1)")));
        }
        put(out, get(d, "d")?.0.quantile(u), "out")
    })
}

/// E max, E min or E range of k draws: `which` is 0, 1 or 2.
///
/// # Safety
/// `d` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ems_expected(d: *const EmsDistribution, which: u32, k: usize, out: *mut f64) -> EmsStatus {
    guard(|| {
        let d = &get(d, "d")?.0;
        if k == 0 {
            return Err(Failure(EmsStatus::InvalidArgument, "k must be at least 1".into()));
        }
        let v = match which {
            0 => ems_core::dist::expected_max(d, k)?,
            1 => ems_core::dist::expected_min(d, k)?,
            2 => ems_core::dist::expected_range(d, k)?,
            _ => return Err(Failure(EmsStatus::InvalidArgument, format!("unknown statistic {which}"))),
        };
        put(out, v, "out")
    })
}

/// The symmetric distribution with the same expected ranges.
///
/// # Safety
/// `d` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ems_symmetrize(d: *const EmsDistribution, out: *mut *mut EmsDistribution) -> EmsStatus {
    guard(|| {
        let s = ranges::symmetrize(&get(d, "d")?.0);
        put(out, Box::into_raw(Box::new(EmsDistribution(s))), "out")
    })
}

/// Equal-expected-ranges check with default grid and tolerances, ranges compared up to `k_max`.
///
/// # Safety
/// Handles must be live; non-NULL outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn ems_compare_ranges(
    a: *const EmsDistribution,
    b: *const EmsDistribution,
    k_max: usize,
    out_json: *mut *mut c_char,
    out_outcome: *mut EmsOutcome,
) -> EmsStatus {
    guard(|| {
        let cfg = RangesConfig { k_max: k_max.max(2), ..RangesConfig::default() };
        let r = ranges::equal_ranges_check(&get(a, "a")?.0, &get(b, "b")?.0, &ranges::default_u_grid(), &cfg)?;
        put_report(r, out_json, out_outcome)
    })
}

/// Built-in integral form by id with parameters as for `ems_distribution_new`.
///
/// # Safety
/// Strings must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ems_form_new(id: *const c_char, params: *const c_char, out: *mut *mut EmsForm) -> EmsStatus {
    guard(|| {
        let p = io::parse_params(opt_text(params, "params")?)?;
        let f = io::form(text(id, "id")?, &p, None)?;
        put(out, Box::into_raw(Box::new(EmsForm(f))), "out")
    })
}

/// Kernel h1(y) of a catalog distribution's integral form.
///
/// # Safety
/// `d` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ems_form_from_distribution(d: *const EmsDistribution, out: *mut *mut EmsForm) -> EmsStatus {
    guard(|| {
        let f = ems_core::gif::h1_from_distribution(&get(d, "d")?.0)?;
        put(out, Box::into_raw(Box::new(EmsForm(f))), "out")
    })
}

/// # Safety
/// `f` must come from this library or be NULL.
#[no_mangle]
pub unsafe extern "C" fn ems_form_free(f: *mut EmsForm) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// g(x) for x ≥ 1.
///
/// # Safety
/// `f` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ems_form_evaluate(f: *const EmsForm, x: f64, out: *mut f64) -> EmsStatus {
    guard(|| put(out, ems_core::gif::evaluate_g(&get(f, "f")?.0, x)?, "out"))
}

/// h1(y).
///
/// # Safety
/// `f` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ems_form_h1(f: *const EmsForm, y: f64, out: *mut f64) -> EmsStatus {
    guard(|| put(out, get(f, "f")?.0.h1(y), "out"))
}

/// Symmetry criterion of the form on the default y grid.
///
/// # Safety
/// `f` must be a live handle; non-NULL outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn ems_form_symmetry(f: *const EmsForm, out_json: *mut *mut c_char, out_outcome: *mut EmsOutcome) -> EmsStatus {
    guard(|| {
        let r = ranges::symmetry_condition_4_6(&get(f, "f")?.0, &ranges::default_y_grid())?;
        put_report(r, out_json, out_outcome)
    })
}

/// Quantile rebuilt from a form with E X = mu1.
///
/// # Safety
/// `f` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ems_reconstruct(f: *const EmsForm, mu1: f64, out: *mut *mut EmsDistribution) -> EmsStatus {
    guard(|| {
        let d = ems_core::gif::reconstruct_quantile(&get(f, "f")?.0, mu1)?;
        put(out, Box::into_raw(Box::new(EmsDistribution(d))), "out")
    })
}
