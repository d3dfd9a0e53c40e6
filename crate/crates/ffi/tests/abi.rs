use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use qham_forge_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = qham_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn take_string(p: *mut std::ffi::c_char) -> String {
    let s = unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned();
    unsafe { qham_string_free(p) };
    s
}

#[test]
fn model_roundtrip() {
    unsafe {
        let mut m = ptr::null_mut();
        assert_eq!(qham_model_new(c("su2").as_ptr(), &mut m), QhamStatus::Ok);
        let mut d = 0usize;
        assert_eq!(qham_model_dim(m, &mut d), QhamStatus::Ok);
        assert_eq!(d, 3);
        let (mut f012, mut f102) = (0.0, 0.0);
        assert_eq!(qham_model_structure_constant(m, 0, 1, 2, &mut f012), QhamStatus::Ok);
        assert_eq!(qham_model_structure_constant(m, 1, 0, 2, &mut f102), QhamStatus::Ok);
        assert!(f012.abs() > 0.1);
        assert!((f012 + f102).abs() < 1e-14);
        let mut x = 0.0;
        assert_eq!(qham_model_structure_constant(m, 0, 1, 3, &mut x), QhamStatus::OutOfRange);
        let mut r = 1.0;
        assert_eq!(qham_psi_residual(m, &mut r), QhamStatus::Ok);
        assert!(r < 1e-12);
        qham_model_free(m);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut m = ptr::null_mut();
        assert_eq!(qham_model_new(c("e8").as_ptr(), &mut m), QhamStatus::UnsupportedModel);
        assert!(m.is_null());
        assert!(last_error().contains("e8"));
        assert_eq!(qham_model_new(ptr::null(), &mut m), QhamStatus::NullPointer);
        assert_eq!(qham_model_dim(ptr::null(), ptr::null_mut()), QhamStatus::NullPointer);
        let bad = [0xffu8, 0];
        assert_eq!(qham_model_new(bad.as_ptr().cast(), &mut m), QhamStatus::InvalidUtf8);
        qham_model_free(ptr::null_mut());
        qham_string_free(ptr::null_mut());
    }
}

#[test]
fn quiver_calls() {
    let json = r#"{"vertices":["in","v","out"],"edges":[{"id":"e1","src":"in","dst":"v"},{"id":"e2","src":"v","dst":"out"}]}"#;
    unsafe {
        let mut q = ptr::null_mut();
        assert_eq!(qham_quiver_from_json(c(json).as_ptr(), &mut q), QhamStatus::Ok);
        let mut inv = QhamQuiverInvariants::default();
        assert_eq!(qham_quiver_invariants(q, &mut inv), QhamStatus::Ok);
        assert_eq!((inv.n_edges, inv.n_interior, inv.n_incoming, inv.n_outgoing), (2, 1, 1, 1));
        assert_eq!((inv.genus, inv.dim_units), (0, 2));

        let (mut n, mut steps) = (ptr::null_mut(), 99usize);
        assert_eq!(qham_quiver_normalize(q, &mut n, &mut steps), QhamStatus::Ok);
        let mut ninv = QhamQuiverInvariants::default();
        assert_eq!(qham_quiver_invariants(n, &mut ninv), QhamStatus::Ok);
        assert_eq!((ninv.genus, ninv.n_incoming, ninv.n_outgoing), (0, 1, 1));
        assert_eq!(steps, 0);

        let mut s = ptr::null_mut();
        assert_eq!(qham_quiver_to_json(q, &mut s), QhamStatus::Ok);
        let text = take_string(s);
        assert!(text.contains("\"e2\""));
        qham_quiver_free(n);
        qham_quiver_free(q);

        assert_eq!(qham_quiver_from_json(c("{\"vertices\":").as_ptr(), &mut q), QhamStatus::Parse);
        let dangling = r#"{"vertices":["v"],"edges":[{"id":"e","src":"v","dst":"w"}]}"#;
        assert_eq!(qham_quiver_from_json(c(dangling).as_ptr(), &mut q), QhamStatus::InvalidQuiver);
        assert!(last_error().contains("unknown vertex"));
    }
}

#[test]
fn cobordism_calls() {
    unsafe {
        let mut m = ptr::null_mut();
        assert_eq!(qham_cob_parse(c("copants ; pants").as_ptr(), &mut m), QhamStatus::Ok);
        let (mut s, mut t, mut k) = (0, 0, 0);
        assert_eq!(qham_cob_shape(m, &mut s, &mut t, &mut k), QhamStatus::Ok);
        assert_eq!((s, t, k), (1, 1, 1));
        let mut g = ptr::null_mut();
        assert_eq!(qham_model_new(c("su2").as_ptr(), &mut g), QhamStatus::Ok);
        let mut out = ptr::null_mut();
        assert_eq!(qham_cob_functor_json(m, g, &mut out), QhamStatus::Ok);
        let v: serde_json::Value = serde_json::from_str(&take_string(out)).unwrap();
        assert_eq!(v["components"][0]["genus"], 1);
        assert_eq!(v["components"][0]["dim"], 12);
        qham_model_free(g);
        qham_cob_free(m);

        assert_eq!(qham_cob_parse(c("pants ; pants").as_ptr(), &mut m), QhamStatus::Parse);
        assert!(last_error().contains("line 1"));
    }
}

fn target_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_header() {
    let lib = target_dir().join("libqham_forge_ffi.a");
    assert!(lib.exists(), "missing {}", lib.display());
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let src = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/smoke.c");
    let bin = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("qham_smoke");
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .expect("cc runs");
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{stdout}{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout.contains("dim 3"), "{stdout}");
    assert!(stdout.contains("genus 1 dim_units 4"), "{stdout}");
}
