//! The C ABI driven from Rust.

use std::ffi::{CStr, CString};
use std::ptr;

use metaplectic_ffi::*;

fn analyze(m: &[f64], d: usize) -> (MpStatus, *mut MpAnalysis) {
    let mut h = ptr::null_mut();
    let s = unsafe { mp_analyze_matrix(m.as_ptr(), d, ptr::null(), &mut h) };
    (s, h)
}

fn last_error() -> String {
    let p = mp_last_error_message();
    assert!(!p.is_null());
    let s = unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned();
    unsafe { mp_string_free(p) };
    s
}

#[test]
fn fourier_analysis() {
    let (s, h) = analyze(&[0.0, 1.0, -1.0, 0.0], 1);
    assert_eq!(s, MpStatus::Ok);
    unsafe {
        assert_eq!(mp_analysis_dim(h), 1);
        let mut q = false;
        assert_eq!(mp_analysis_is_quasi_diagonal(h, &mut q), MpStatus::Ok);
        assert!(q);
        let mut g = 9;
        assert_eq!(mp_analysis_gamma_dim(h, &mut g), MpStatus::Ok);
        assert_eq!(g, 0);
        let mut qs = [0.0; 4];
        assert_eq!(mp_analysis_qs(h, qs.as_mut_ptr(), 4), MpStatus::Ok);
        for (a, b) in qs.iter().zip([0.5, 0.0, 0.0, 0.5]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(mp_analysis_qs(h, qs.as_mut_ptr(), 3), MpStatus::BufferTooSmall);
        let mut c = 0.0;
        assert_eq!(mp_analysis_amplitude(h, &mut c), MpStatus::Ok);
        assert!((c - 0.5f64.sqrt()).abs() < 1e-12);
        let mut eps = 0.0;
        assert_eq!(mp_analysis_epsilon(h, &mut eps), MpStatus::Ok);
        assert!(eps > 0.0);

        let json = mp_analysis_to_json(h);
        let text = CStr::from_ptr(json).to_str().unwrap();
        let v: serde_json::Value = serde_json::from_str(text).unwrap();
        assert_eq!(v["verdict"], "quasi-diagonal");
        mp_string_free(json);
        mp_analysis_free(h);
    }
}

#[test]
fn dilation_is_not_quasi_diagonal() {
    let (s, h) = analyze(&[0.5, 0.0, 0.0, 2.0], 1);
    assert_eq!(s, MpStatus::Ok);
    unsafe {
        let mut q = true;
        mp_analysis_is_quasi_diagonal(h, &mut q);
        assert!(!q);
        let mut eps = 0.0;
        assert_eq!(mp_analysis_epsilon(h, &mut eps), MpStatus::NotAvailable);
        mp_analysis_free(h);
    }
}

#[test]
fn errors_carry_codes_and_messages() {
    let (s, h) = analyze(&[2.0, 0.0, 0.0, 2.0], 1);
    assert_eq!(s, MpStatus::InvalidInput);
    assert!(h.is_null());
    assert!(!last_error().is_empty());

    let (s, _) = analyze(&[1.0, 1e-10, 0.0, 1.0], 1);
    assert_eq!(s, MpStatus::RankAmbiguous);

    let (s, _) = analyze(&[f64::NAN, 0.0, 0.0, 1.0], 1);
    assert_eq!(s, MpStatus::InvalidInput);

    let (s, _) = analyze(&[], 0);
    assert_eq!(s, MpStatus::InvalidInput);

    let mut h = ptr::null_mut();
    let s = unsafe { mp_analyze_matrix(ptr::null(), 1, ptr::null(), &mut h) };
    assert_eq!(s, MpStatus::NullPointer);

    let mut bad = mp_tolerances_default();
    bad.rank = -1.0;
    let m = [1.0, 0.0, 0.0, 1.0];
    let s = unsafe { mp_analyze_matrix(m.as_ptr(), 1, &bad, &mut h) };
    assert_eq!(s, MpStatus::InvalidInput);

    unsafe {
        let mut q = false;
        assert_eq!(mp_analysis_is_quasi_diagonal(ptr::null(), &mut q), MpStatus::NullPointer);
        assert_eq!(mp_analysis_dim(ptr::null()), 0);
        assert!(mp_analysis_to_json(ptr::null()).is_null());
        mp_analysis_free(ptr::null_mut());
        mp_string_free(ptr::null_mut());
    }
}

#[test]
fn word_json_matches_matrix() {
    // interchange Π₂ written as a word
    let word = CString::new(
        r#"{"d": 2, "factors": [
            {"type": "VP", "P": [[0, 0], [0, -1]]},
            {"type": "J"}, {"type": "J"}, {"type": "J"},
            {"type": "VP", "P": [[0, 0], [0, -1]]},
            {"type": "J"},
            {"type": "VP", "P": [[0, 0], [0, -1]]}]}"#,
    )
    .unwrap();
    let mut h = ptr::null_mut();
    let tol = mp_tolerances_default();
    let s = unsafe { mp_analyze_word_json(word.as_ptr(), 1, &tol, &mut h) };
    assert_eq!(s, MpStatus::Ok, "{}", last_error());
    let pi2 = [1., 0., 0., 0., 0., 0., 0., 1., 0., 0., 1., 0., 0., -1., 0., 0.];
    let (s, m) = analyze(&pi2, 2);
    assert_eq!(s, MpStatus::Ok);
    unsafe {
        let (mut a, mut b) = ([0.0; 16], [0.0; 16]);
        mp_analysis_qs(h, a.as_mut_ptr(), 16);
        mp_analysis_qs(m, b.as_mut_ptr(), 16);
        assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-12));
        let mut g = 0;
        mp_analysis_gamma_dim(h, &mut g);
        assert_eq!(g, 1);
        mp_analysis_free(h);
        mp_analysis_free(m);
    }

    let junk = CString::new("[{\"type\": \"X\"}]").unwrap();
    let s = unsafe { mp_analyze_word_json(junk.as_ptr(), 1, ptr::null(), &mut h) };
    assert_eq!(s, MpStatus::InvalidInput);
}

#[test]
fn version_is_static() {
    let v = unsafe { CStr::from_ptr(mp_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
