//! C interface to qmsurf.
//!
//! Objects are opaque handles created by `qms_*_new`/`qms_*_from_json` and
//! released with the matching `qms_*_free`. Every fallible call returns a
//! [`QmsStatus`]; the message of the last failure on the calling thread is
//! available from [`qms_last_error`]. Strings handed out by the library must
//! be released with [`qms_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use qmsurf::counting::{genuineness_test, trace_table_with, Genuineness, TraceTable};
use qmsurf::curve::GenusTwoCurve;
use qmsurf::livne::{self, LivneConfig, Modulus};
use qmsurf::newform::{parse_newform, NewformRecord};
use qmsurf::quadfield::{parse_element, PrimeIdeal, QuadField};
use qmsurf::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QmsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Malformed input: curve, newform, field, prime or modulus.
    InvalidInput = 3,
    /// A mathematical check failed (trace mismatch, probe failure, ...).
    VerificationFailed = 4,
    /// Not enough eigenvalue or trace data to decide.
    IncompleteData = 5,
    /// Caller buffer too small; the required length was written.
    BufferTooSmall = 6,
    Panic = 7,
}

pub struct QmsCurve(GenusTwoCurve);
pub struct QmsTraceTable(TraceTable, QuadField);
pub struct QmsNewform(NewformRecord);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn status_of(e: &Error) -> QmsStatus {
    if e.is_verification_failure() {
        QmsStatus::VerificationFailed
    } else if e.is_incomplete_data() {
        QmsStatus::IncompleteData
    } else {
        QmsStatus::InvalidInput
    }
}

/// Run `f`, recording any error or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), QmsStatus>) -> QmsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QmsStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            QmsStatus::Panic
        }
    }
}

fn fail(e: Error) -> QmsStatus {
    set_error(e.to_string());
    status_of(&e)
}

unsafe fn str_arg<'a>(s: *const c_char) -> Result<&'a str, QmsStatus> {
    if s.is_null() {
        set_error("null string argument");
        return Err(QmsStatus::NullPointer);
    }
    CStr::from_ptr(s).to_str().map_err(|_| {
        set_error("argument is not UTF-8");
        QmsStatus::InvalidUtf8
    })
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, QmsStatus> {
    p.as_ref().ok_or_else(|| {
        set_error("null handle");
        QmsStatus::NullPointer
    })
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), QmsStatus> {
    if out.is_null() {
        set_error("null output pointer");
        return Err(QmsStatus::NullPointer);
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), QmsStatus> {
    if out.is_null() {
        set_error("null output pointer");
        return Err(QmsStatus::NullPointer);
    }
    *out = CString::new(s).map_err(|_| QmsStatus::Panic)?.into_raw();
    Ok(())
}

fn field_of(d: u32) -> Result<QuadField, QmsStatus> {
    QuadField::new(d).map_err(fail)
}

fn prime_of(field: QuadField, text: &str) -> Result<PrimeIdeal, QmsStatus> {
    let x = parse_element(field, text).map_err(fail)?;
    if !x.is_integral() {
        return Err(fail(Error::Parse(format!("`{text}` is not integral"))));
    }
    PrimeIdeal::from_generator(x.numer()).ok_or_else(|| fail(Error::Parse(format!("`{text}` is not prime"))))
}

/// Message for the last failed call on this thread; owned by the library
/// and valid until the next call on the thread.
#[no_mangle]
pub extern "C" fn qms_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
/// `s` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn qms_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parse a curve document `{"field": ..., "coeffs": [...]}`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qms_curve_from_json(json: *const c_char, out: *mut *mut QmsCurve) -> QmsStatus {
    guard(|| {
        let c = GenusTwoCurve::from_json(str_arg(json)?).map_err(fail)?;
        put(out, QmsCurve(c))
    })
}

/// # Safety
/// `curve` must come from `qms_curve_from_json` or be null.
#[no_mangle]
pub unsafe extern "C" fn qms_curve_free(curve: *mut QmsCurve) {
    if !curve.is_null() {
        drop(Box::from_raw(curve));
    }
}

/// Hex SHA-256 of the canonical curve document.
///
/// # Safety
/// Valid handle and output pointer.
#[no_mangle]
pub unsafe extern "C" fn qms_curve_hash(curve: *const QmsCurve, out: *mut *mut c_char) -> QmsStatus {
    guard(|| put_string(out, handle(curve)?.0.hash()))
}

/// Imaginary quadratic field `Q(sqrt(-d))` of the curve.
///
/// # Safety
/// Valid handle and output pointer.
#[no_mangle]
pub unsafe extern "C" fn qms_curve_field(curve: *const QmsCurve, d: *mut u32) -> QmsStatus {
    guard(|| {
        let c = handle(curve)?;
        if d.is_null() {
            return Err(QmsStatus::NullPointer);
        }
        *d = c.0.field().d();
        Ok(())
    })
}

/// Traces at all primes of norm up to `bound`; the square identity is
/// checked up to `square_check_bound`.
///
/// # Safety
/// Valid handle and output pointer.
#[no_mangle]
pub unsafe extern "C" fn qms_trace_table_new(
    curve: *const QmsCurve,
    bound: u64,
    square_check_bound: u64,
    parallel: bool,
    out: *mut *mut QmsTraceTable,
) -> QmsStatus {
    guard(|| {
        let c = handle(curve)?;
        put(out, QmsTraceTable(trace_table_with(&c.0, bound, square_check_bound, parallel), c.0.field()))
    })
}

/// # Safety
/// `table` must come from `qms_trace_table_new` or be null.
#[no_mangle]
pub unsafe extern "C" fn qms_trace_table_free(table: *mut QmsTraceTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

/// Number of good primes in the table.
///
/// # Safety
/// `table` must be a valid handle or null (which yields 0).
#[no_mangle]
pub unsafe extern "C" fn qms_trace_table_len(table: *const QmsTraceTable) -> usize {
    table.as_ref().map_or(0, |t| t.0.records.len())
}

/// Trace at the prime generated by `prime` (e.g. `"-3+w"`).
/// `IncompleteData` if the prime is bad or beyond the table bound.
///
/// # Safety
/// Valid handle, string and output pointer.
#[no_mangle]
pub unsafe extern "C" fn qms_trace_table_trace(table: *const QmsTraceTable, prime: *const c_char, out: *mut i64) -> QmsStatus {
    guard(|| {
        let t = handle(table)?;
        let p = prime_of(t.1, str_arg(prime)?)?;
        if out.is_null() {
            return Err(QmsStatus::NullPointer);
        }
        match t.0.trace(&p) {
            Some(a) => {
                *out = a;
                Ok(())
            }
            None => {
                set_error(format!("no good trace at {}", p.label()));
                Err(QmsStatus::IncompleteData)
            }
        }
    })
}

/// The table as a JSON document.
///
/// # Safety
/// Valid handle and output pointer.
#[no_mangle]
pub unsafe extern "C" fn qms_trace_table_json(table: *const QmsTraceTable, out: *mut *mut c_char) -> QmsStatus {
    guard(|| {
        let t = handle(table)?;
        let s = serde_json::to_string(&t.0.to_document()).map_err(|e| fail(e.into()))?;
        put_string(out, s)
    })
}

/// `Ok` with a witnessing split pair, `IncompleteData` when undecided.
///
/// # Safety
/// Valid handle.
#[no_mangle]
pub unsafe extern "C" fn qms_genuineness(table: *const QmsTraceTable) -> QmsStatus {
    guard(|| match genuineness_test(&handle(table)?.0).map_err(fail)? {
        Genuineness::Witnessed { .. } => Ok(()),
        Genuineness::Undecided => {
            set_error("no conjugate pair separates the traces");
            Err(QmsStatus::IncompleteData)
        }
    })
}

/// Parse a newform document.
///
/// # Safety
/// NUL-terminated string and valid output pointer.
#[no_mangle]
pub unsafe extern "C" fn qms_newform_from_json(json: *const c_char, out: *mut *mut QmsNewform) -> QmsStatus {
    guard(|| {
        let f = parse_newform(str_arg(json)?).map_err(fail)?;
        put(out, QmsNewform(f))
    })
}

/// # Safety
/// `form` must come from `qms_newform_from_json` or be null.
#[no_mangle]
pub unsafe extern "C" fn qms_newform_free(form: *mut QmsNewform) {
    if !form.is_null() {
        drop(Box::from_raw(form));
    }
}

/// Compare curve traces with newform eigenvalues at every good prime of
/// norm up to `bound`, then at the twist prime (`NULL` for the field
/// default). On success `report` receives the JSON report.
///
/// # Safety
/// Valid handles; `twist_prime` may be null; `report` may be null.
#[no_mangle]
pub unsafe extern "C" fn qms_livne_verify(
    table: *const QmsTraceTable,
    form: *const QmsNewform,
    bound: u64,
    twist_prime: *const c_char,
    report: *mut *mut c_char,
) -> QmsStatus {
    guard(|| {
        let (t, f) = (handle(table)?, handle(form)?);
        let mut cfg = LivneConfig::for_field(f.0.field);
        cfg.bound = bound;
        if !twist_prime.is_null() {
            cfg.twist_prime = Some(prime_of(f.0.field, str_arg(twist_prime)?)?);
        }
        let r = livne::livne_verify(&t.0, &f.0, &cfg).map_err(fail)?;
        if !report.is_null() {
            put_string(report, serde_json::to_string(&r).map_err(|e| fail(e.into()))?)?;
        }
        Ok(())
    })
}

/// Invariant factors of the ray class group of `modulus` (`"2^3,3+w,-5+2*w"`)
/// over `Q(sqrt(-d))`. Writes at most `cap` factors and their count to `len`.
///
/// # Safety
/// `modulus` NUL-terminated; `factors` valid for `cap` entries; `len` valid.
#[no_mangle]
pub unsafe extern "C" fn qms_ray_class_invariants(d: u32, modulus: *const c_char, factors: *mut u64, cap: usize, len: *mut usize) -> QmsStatus {
    guard(|| {
        let field = field_of(d)?;
        let m = Modulus::parse(field, str_arg(modulus)?).map_err(fail)?;
        let g = livne::ray_class_group(&m).map_err(fail)?;
        if len.is_null() || (factors.is_null() && cap > 0) {
            return Err(QmsStatus::NullPointer);
        }
        let inv = g.invariants();
        *len = inv.len();
        if inv.len() > cap {
            set_error(format!("need room for {} factors", inv.len()));
            return Err(QmsStatus::BufferTooSmall);
        }
        if !inv.is_empty() {
            ptr::copy_nonoverlapping(inv.as_ptr(), factors, inv.len());
        }
        Ok(())
    })
}
