use std::ffi::{c_char, CString};
use std::ptr;

use convex_mixing_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 256];
    let n = unsafe { cm_last_error_message(buf.as_mut_ptr(), buf.len()) };
    let bytes: Vec<u8> = buf[..n.min(255)].iter().map(|&c| c as u8).collect();
    String::from_utf8(bytes).unwrap()
}

fn body(json: &str) -> *mut CmBody {
    let text = CString::new(json).unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { cm_body_from_json(text.as_ptr(), &mut out) }, CmStatus::Ok);
    out
}

#[test]
fn body_lifecycle() {
    let b = body(r#"{"kind":"box","lo":[0,0],"hi":[3,4]}"#);
    unsafe {
        assert_eq!(cm_body_dimension(b), 2);
        let mut d = 0.0;
        assert_eq!(cm_body_diameter(b, &mut d), CmStatus::Ok);
        assert_eq!(d, 5.0);
        let p = [4.0, -1.0];
        let mut inside = true;
        assert_eq!(cm_body_contains(b, p.as_ptr(), 2, &mut inside), CmStatus::Ok);
        assert!(!inside);
        let mut q = [0.0; 2];
        assert_eq!(cm_body_project(b, p.as_ptr(), 2, q.as_mut_ptr()), CmStatus::Ok);
        assert_eq!(q, [3.0, 0.0]);
        assert_eq!(cm_body_contains(b, p.as_ptr(), 3, &mut inside), CmStatus::DimensionMismatch);
        cm_body_free(b);
        cm_body_free(ptr::null_mut());
    }
}

#[test]
fn errors_carry_codes_and_messages() {
    let text = CString::new(r#"{"kind":"ball","center":[0,0],"radius":-1}"#).unwrap();
    let mut out = ptr::null_mut();
    let status = unsafe { cm_body_from_json(text.as_ptr(), &mut out) };
    assert_ne!(status, CmStatus::Ok);
    assert!(out.is_null());
    assert!(!last_error().is_empty());

    let mut v = 0.0;
    assert_eq!(unsafe { cm_survival_f(-1.0, 1.0, 0.0, 1e-12, &mut v) }, CmStatus::InvalidArgument);
    assert!(last_error().contains("d"));
    assert_eq!(unsafe { cm_survival_f(1.0, 1.0, 0.0, 1e-12, ptr::null_mut()) }, CmStatus::NullPointer);
    assert_eq!(unsafe { cm_body_diameter(ptr::null(), &mut v) }, CmStatus::NullPointer);
    assert_eq!(unsafe { cm_survival_f(1.0, 1.0, 0.0, 1e-12, &mut v) }, CmStatus::Ok);
    assert_eq!(last_error(), "");
}

#[test]
fn scalar_functions_match_the_library() {
    let mut v = 0.0;
    unsafe {
        assert_eq!(cm_survival_f(1.0, 1.0, 0.0, 1e-12, &mut v), CmStatus::Ok);
        assert!((v - 0.3707774297995239).abs() < 1e-12);
        assert_eq!(cm_tv_bound_pair(1.0, 0.25, 1.0, 1e-12, &mut v), CmStatus::Ok);
        assert!((v - 0.3707774297995239).abs() < 1e-12);
        assert_eq!(cm_tv_bound_pair(1.0, 0.25, 0.0, 1e-12, &mut v), CmStatus::Ok);
        assert_eq!(v, 0.0);
        assert_eq!(cm_chernoff_bound(1.0, 1.0, 0.0, &mut v), CmStatus::Ok);
        assert!((v - 1.0).abs() < 1e-12);
        assert_eq!(cm_matthews_bound(1.0, 1.0, &mut v), CmStatus::Ok);
        assert!(v > 0.0);
        assert_eq!(cm_bebendorf_envelope(1.0, 1.0, 1.0, &mut v), CmStatus::Ok);
        assert!(v > 0.0);
        assert_eq!(cm_exact_tv_1d(1.0, 0.25, 0.0, &mut v), CmStatus::Ok);
        assert!(v > 0.1853887 && v < 0.3707775);
    }
}

#[test]
fn coupling_is_seed_deterministic() {
    let b = body(r#"{"kind":"interval","lo":0,"hi":1}"#);
    let run = || {
        let mut taus = [0.0; 64];
        let mut cens = [0u8; 64];
        let status = unsafe {
            cm_simulate_coupling(
                b,
                [0.0].as_ptr(),
                [1.0].as_ptr(),
                1,
                1e-4,
                0.5,
                CmDetection::Bridge,
                64,
                7,
                taus.as_mut_ptr(),
                cens.as_mut_ptr(),
            )
        };
        assert_eq!(status, CmStatus::Ok);
        (taus, cens)
    };
    let (a, ca) = run();
    let (b2, cb) = run();
    assert_eq!(a, b2);
    assert_eq!(ca, cb);
    assert!(a.iter().zip(&ca).all(|(t, c)| *t > 0.0 && (*c == 0 || *t >= 0.5)));
    unsafe { cm_body_free(b) };
}
