use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use qmsurf_ffi::*;

fn fixture(rel: &str) -> CString {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(rel);
    CString::new(std::fs::read_to_string(p).unwrap()).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(qms_last_error()).to_string_lossy().into_owned() }
}

fn take(s: *mut std::ffi::c_char) -> String {
    let out = unsafe { CStr::from_ptr(s).to_string_lossy().into_owned() };
    unsafe { qms_string_free(s) };
    out
}

unsafe fn curve(name: &str) -> *mut QmsCurve {
    let mut c = ptr::null_mut();
    assert_eq!(qms_curve_from_json(fixture(&format!("curves/{name}.json")).as_ptr(), &mut c), QmsStatus::Ok);
    c
}

unsafe fn form(label: &str) -> *mut QmsNewform {
    let mut f = ptr::null_mut();
    assert_eq!(qms_newform_from_json(fixture(&format!("newforms/{label}.json")).as_ptr(), &mut f), QmsStatus::Ok);
    f
}

#[test]
fn curve_handle_lifecycle() {
    unsafe {
        let c = curve("c2");
        let mut d = 0;
        assert_eq!(qms_curve_field(c, &mut d), QmsStatus::Ok);
        assert_eq!(d, 3);
        let mut h = ptr::null_mut();
        assert_eq!(qms_curve_hash(c, &mut h), QmsStatus::Ok);
        assert_eq!(take(h).len(), 64);
        qms_curve_free(c);
        qms_curve_free(ptr::null_mut());
    }
}

#[test]
fn bad_input_reports_a_status_and_message() {
    unsafe {
        let mut c = ptr::null_mut();
        let junk = CString::new("{\"field\": 1}").unwrap();
        assert_eq!(qms_curve_from_json(junk.as_ptr(), &mut c), QmsStatus::InvalidInput);
        assert!(c.is_null());
        assert!(!last_error().is_empty());
        assert_eq!(qms_curve_from_json(ptr::null(), &mut c), QmsStatus::NullPointer);
        let mut h = ptr::null_mut();
        assert_eq!(qms_curve_hash(ptr::null(), &mut h), QmsStatus::NullPointer);
    }
}

#[test]
fn traces_through_the_table_handle() {
    unsafe {
        let c = curve("c2");
        let mut t = ptr::null_mut();
        assert_eq!(qms_trace_table_new(c, 200, 50, true, &mut t), QmsStatus::Ok);
        assert!(qms_trace_table_len(t) > 30);
        let mut a = 0;
        let p = CString::new("-7+3*w").unwrap();
        assert_eq!(qms_trace_table_trace(t, p.as_ptr(), &mut a), QmsStatus::Ok);
        assert_eq!(a, -4);
        // p13.2 divides the conductor
        let bad = CString::new("3+w").unwrap();
        assert_eq!(qms_trace_table_trace(t, bad.as_ptr(), &mut a), QmsStatus::IncompleteData);
        let composite = CString::new("7").unwrap();
        assert_eq!(qms_trace_table_trace(t, composite.as_ptr(), &mut a), QmsStatus::InvalidInput);
        assert_eq!(qms_genuineness(t), QmsStatus::Ok);
        let mut doc = ptr::null_mut();
        assert_eq!(qms_trace_table_json(t, &mut doc), QmsStatus::Ok);
        let v: serde_json::Value = serde_json::from_str(&take(doc)).unwrap();
        assert_eq!(v["bound"], 200);
        qms_trace_table_free(t);
        qms_curve_free(c);
    }
}

#[test]
fn livne_statuses() {
    unsafe {
        let c = curve("c2");
        let mut t = ptr::null_mut();
        assert_eq!(qms_trace_table_new(c, 3000, 0, true, &mut t), QmsStatus::Ok);
        let right = form("2.0.3.1-61009.1-a");
        let wrong = form("2.0.3.1-67081.3-a");
        let mut report = ptr::null_mut();
        assert_eq!(qms_livne_verify(t, wrong, 3000, ptr::null(), &mut report), QmsStatus::VerificationFailed);
        assert!(last_error().contains("trace mismatch"));
        assert_eq!(qms_livne_verify(t, right, 3000, ptr::null(), &mut report), QmsStatus::IncompleteData);
        assert!(report.is_null());
        assert_eq!(qms_livne_verify(t, right, 100, ptr::null(), &mut report), QmsStatus::InvalidInput);
        for p in [right, wrong] {
            qms_newform_free(p);
        }
        qms_trace_table_free(t);
        qms_curve_free(c);
    }
}

#[test]
fn ray_class_invariants() {
    unsafe {
        let m = CString::new("2^3,3+w,-5+2*w").unwrap();
        let mut buf = [0u64; 8];
        let mut len = 0;
        assert_eq!(qms_ray_class_invariants(3, m.as_ptr(), buf.as_mut_ptr(), buf.len(), &mut len), QmsStatus::Ok);
        assert_eq!(&buf[..len], &[2, 2, 12, 36]);
        assert_eq!(qms_ray_class_invariants(3, m.as_ptr(), buf.as_mut_ptr(), 2, &mut len), QmsStatus::BufferTooSmall);
        assert_eq!(len, 4);
        assert_eq!(qms_ray_class_invariants(5, m.as_ptr(), buf.as_mut_ptr(), 8, &mut len), QmsStatus::InvalidInput);
    }
}

fn header() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include/qmsurf.h")
}

#[test]
fn header_declares_the_interface() {
    let h = std::fs::read_to_string(header()).unwrap();
    for name in [
        "typedef struct QmsCurve QmsCurve;",
        "QMS_STATUS_VERIFICATION_FAILED = 4",
        "qms_curve_from_json",
        "qms_trace_table_new",
        "qms_livne_verify",
        "qms_ray_class_invariants",
        "qms_last_error",
    ] {
        assert!(h.contains(name), "{name}");
    }
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include "qmsurf.h"

int main(void) {
    size_t len = 0;
    uint64_t inv[8];
    if (qms_ray_class_invariants(3, "2^3,3+w,-5+2*w", inv, 8, &len) != QMS_STATUS_OK) return 10;
    for (size_t i = 0; i < len; i++) printf("%llu ", (unsigned long long)inv[i]);
    QmsCurve *c = NULL;
    if (qms_curve_from_json("not json", &c) != QMS_STATUS_INVALID_INPUT) return 11;
    printf("| %s\n", qms_last_error()[0] ? "message" : "empty");
    return 0;
}
"#;

/// The static library built next to this test binary.
fn static_lib() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().join("libqmsurf_ffi.a")
}

#[test]
fn c_program_links_against_the_static_library() {
    let lib = static_lib();
    assert!(lib.exists(), "{}", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    let bin = dir.path().join("main");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let status = Command::new("cc")
        .arg("-std=c11")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .arg("-o")
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "{:?}", out.status);
    assert_eq!(String::from_utf8_lossy(&out.stdout), "2 2 12 36 | message\n");
}
