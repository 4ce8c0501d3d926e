use std::ffi::{CStr, CString};
use std::ptr;

use uniqset_ffi::*;

fn last_error() -> String {
    let p = uq_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn set_round_trip_and_queries() {
    let ns = [1u64, 7];
    let deltas = [0.1, 0.05];
    let mut set = ptr::null_mut();
    unsafe {
        assert_eq!(uq_set_new(ns.as_ptr(), deltas.as_ptr(), 2, &mut set), UqStatus::Ok);
        let mut m = 0.0;
        assert_eq!(uq_set_measure(set, &mut m), UqStatus::Ok);
        // The arc of N = 7 at 0 lies inside the wide arc; the other six are clear of it.
        assert!((m - (1.0 - 0.1 - 6.0 * 0.05 / 7.0)).abs() < 1e-14);
        let mut inside = true;
        assert_eq!(uq_set_contains(set, 0.0, &mut inside), UqStatus::Ok);
        assert!(!inside);
        let (mut exact, mut bound) = (0.0, 0.0);
        assert_eq!(uq_set_entropy(set, &mut exact, &mut bound), UqStatus::Ok);
        assert!(exact <= bound * (1.0 + 1e-12));

        let mut json = ptr::null_mut();
        assert_eq!(uq_set_to_json(set, &mut json), UqStatus::Ok);
        let mut again = ptr::null_mut();
        assert_eq!(uq_set_from_json(json, &mut again), UqStatus::Ok);
        let mut count = 0usize;
        assert_eq!(uq_set_generation_count(again, &mut count), UqStatus::Ok);
        assert_eq!(count, 2);
        uq_string_free(json);
        uq_set_free(again);
        uq_set_free(set);
    }
}

#[test]
fn errors_carry_codes_and_messages() {
    let deltas = [1.5];
    let ns = [3u64];
    let mut set = ptr::null_mut();
    unsafe {
        assert_eq!(uq_set_new(ns.as_ptr(), deltas.as_ptr(), 1, &mut set), UqStatus::InvalidArgument);
        assert!(set.is_null());
        assert!(last_error().contains("delta"));
        let mut m = 0.0;
        assert_eq!(uq_set_measure(ptr::null(), &mut m), UqStatus::NullPointer);
        let bad = CString::new("{not json").unwrap();
        assert_eq!(uq_set_from_json(bad.as_ptr(), &mut set), UqStatus::InvalidArgument);
        let cmd = CString::new("nope").unwrap();
        let dir = CString::new("/tmp").unwrap();
        let mut passed = false;
        assert_eq!(uq_run(cmd.as_ptr(), ptr::null(), dir.as_ptr(), &mut passed), UqStatus::InvalidArgument);
    }
}

#[test]
fn capacity_of_half_circle_is_sandwiched() {
    let (ns, deltas) = ([1u64], [0.5]);
    let mut set = ptr::null_mut();
    unsafe {
        assert_eq!(uq_set_new(ns.as_ptr(), deltas.as_ptr(), 1, &mut set), UqStatus::Ok);
        let (mut lo, mut hi) = (0.0, 0.0);
        assert_eq!(uq_capacity(set, 4.0, &mut lo, &mut hi), UqStatus::Ok);
        assert!(lo > 0.0 && lo <= hi && hi == 1.0);
        assert_eq!(uq_capacity(set, 1.5, &mut lo, &mut hi), UqStatus::InvalidArgument);
        uq_set_free(set);
    }
}

#[test]
fn outer_function_is_analytic_and_vanishes_at_origin() {
    let mut outer = ptr::null_mut();
    unsafe {
        assert_eq!(uq_outer_new(0.2, 0.1, &mut outer), UqStatus::Ok);
        let (mut re, mut im) = (1.0, 1.0);
        assert_eq!(uq_outer_coeff(outer, -3, &mut re, &mut im), UqStatus::Ok);
        assert_eq!((re, im), (0.0, 0.0));
        let (mut f0, mut sup) = (1.0, 1.0);
        assert_eq!(uq_outer_properties(outer, &mut f0, &mut sup), UqStatus::Ok);
        assert!(f0 < 1e-9 && sup <= 0.1 + 1e-9);
        let (mut lo, mut hi) = (0.0, 0.0);
        assert_eq!(uq_outer_a1(outer, &mut lo, &mut hi), UqStatus::Ok);
        assert!(lo > 1.0 && lo <= hi);
        uq_outer_free(outer);
    }
}

#[test]
fn run_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cmd = CString::new("transfer").unwrap();
    let cfg = CString::new(r#"{"points": 200}"#).unwrap();
    let out = CString::new(dir.path().to_str().unwrap()).unwrap();
    let mut passed = false;
    unsafe {
        assert_eq!(uq_run(cmd.as_ptr(), cfg.as_ptr(), out.as_ptr(), &mut passed), UqStatus::Ok);
    }
    assert!(passed);
    assert!(dir.path().join("manifest.json").exists());
}

#[test]
fn header_declares_every_entry_point() {
    let header = include_str!("../include/uniqset.h");
    for name in [
        "uq_version", "uq_last_error", "uq_set_new", "uq_set_from_json", "uq_set_build_main", "uq_set_free",
        "uq_set_measure", "uq_set_entropy", "uq_set_contains", "uq_set_to_json", "uq_string_free", "uq_capacity",
        "uq_outer_new", "uq_outer_free", "uq_outer_coeff", "uq_outer_a1", "uq_outer_properties", "uq_run",
    ] {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
    assert!(unsafe { CStr::from_ptr(uq_version()) }.to_str().unwrap() == env!("CARGO_PKG_VERSION"));
}
