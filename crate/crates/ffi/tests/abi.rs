use std::ffi::CStr;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use oscitime_ffi::*;

fn last_error() -> String {
    let p = ot_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn galapon_ccr_through_handles() {
    unsafe {
        let mut op = ptr::null_mut();
        assert_eq!(ot_operator_galapon(128, &mut op), OtStatus::Ok);
        let mut phi = ptr::null_mut();
        assert_eq!(ot_vector_domain_sample(OtDomainKind::SumZero, 0.0, 0.0, 0, 3, 128, &mut phi), OtStatus::Ok);
        let mut r = OtCcrResult { residual: -1.0, budget: -1.0, verdict: OtVerdict::Fail };
        assert_eq!(ot_ccr_check(op, phi, 0.0, -1.0, 1e-13 * 128.0, &mut r), OtStatus::Ok);
        assert_eq!(r.verdict, OtVerdict::Pass);
        assert!(r.residual <= 1e-13 * 128.0);

        // the basis vector is outside the domain
        let mut xi0 = ptr::null_mut();
        assert_eq!(ot_vector_basis(0, 128, &mut xi0), OtStatus::Ok);
        assert_eq!(ot_ccr_check(op, xi0, 0.0, -1.0, 1e-10, &mut r), OtStatus::Ok);
        assert_eq!(r.verdict, OtVerdict::Fail);
        assert!(r.residual >= 0.5);

        let mut n = 0.0;
        assert_eq!(ot_operator_norm(op, &mut n), OtStatus::Ok);
        assert!(n > 3.0 && n <= std::f64::consts::PI + 1e-9);
        ot_vector_free(xi0);
        ot_vector_free(phi);
        ot_operator_free(op);
    }
}

#[test]
fn series_operators_and_coefficients() {
    unsafe {
        let mut t = ptr::null_mut();
        assert_eq!(ot_operator_time(0.0, 0.0, 1, 512, &mut t), OtStatus::Ok);
        let mut v = ptr::null_mut();
        assert_eq!(ot_vector_geometric(0.6, 0.0, 512, &mut v), OtStatus::Ok);
        let mut r = OtCcrResult { residual: 0.0, budget: 0.0, verdict: OtVerdict::Fail };
        // the geometric vector is an eigenvector of L, so [N, T] v = -i v
        assert_eq!(ot_ccr_check(t, v, 0.0, -1.0, 1e-8, &mut r), OtStatus::Ok);
        assert_eq!(r.verdict, OtVerdict::Pass, "{r:?}");

        let mut tv = ptr::null_mut();
        let mut budget = f64::NAN;
        assert_eq!(ot_operator_apply(t, v, &mut tv, &mut budget), OtStatus::Ok);
        assert!(budget.is_finite());
        let mut dim = 0;
        assert_eq!(ot_vector_dim(tv, &mut dim), OtStatus::Ok);
        assert_eq!(dim, 512);
        let (mut re, mut im) = (vec![0.0; dim], vec![0.0; dim]);
        assert_eq!(ot_vector_coeffs(tv, re.as_mut_ptr(), im.as_mut_ptr(), dim), OtStatus::Ok);
        // T v = i log(0.6) v
        let want = 0.6f64.ln();
        for n in 0..20 {
            let vn = 0.6f64.powi(n as i32);
            assert!(re[n].abs() < 1e-14 && (im[n] - want * vn).abs() < 1e-13, "{n}: {} {}", re[n], im[n]);
        }
        assert_eq!(ot_operator_norm(t, &mut 0.0), OtStatus::InvalidArgument);
        assert!(last_error().contains("banded"));

        let mut s = ptr::null_mut();
        assert_eq!(ot_operator_angle(false, 512, &mut s), OtStatus::Ok);
        let mut e = ptr::null_mut();
        assert_eq!(ot_vector_super_coherent(0.5, 0.0, 0, 512, &mut e), OtStatus::Ok);
        assert_eq!(ot_ccr_check(s, e, 0.0, -1.0, 1e-8, &mut r), OtStatus::Ok);
        assert_eq!(r.verdict, OtVerdict::Pass);
        for p in [v, tv, e] {
            ot_vector_free(p);
        }
        ot_operator_free(t);
        ot_operator_free(s);
    }
}

#[test]
fn errors_are_reported_not_raised() {
    unsafe {
        let mut v = ptr::null_mut();
        assert_eq!(ot_vector_super_coherent(1.0, 0.0, 0, 16, &mut v), OtStatus::Domain);
        assert!(v.is_null());
        assert!(last_error().contains("|beta| < 1"));
        assert_eq!(ot_vector_basis(9, 4, &mut v), OtStatus::InvalidArgument);
        assert_eq!(ot_vector_basis(0, 4, ptr::null_mut()), OtStatus::NullPointer);
        assert_eq!(ot_vector_norm(ptr::null(), &mut 0.0), OtStatus::NullPointer);
        assert_eq!(ot_operator_boundary(0.5, 0.0, 1, 16, &mut ptr::null_mut()), OtStatus::InvalidArgument);
        let mut op = ptr::null_mut();
        assert_eq!(ot_operator_galapon(0, &mut op), OtStatus::InvalidArgument);
        ot_vector_free(ptr::null_mut());
        ot_operator_free(ptr::null_mut());

        let re = [1.0, -1.0, 0.0];
        let im = [0.0; 3];
        assert_eq!(ot_vector_new(re.as_ptr(), im.as_ptr(), 3, &mut v), OtStatus::Ok);
        let mut norm = 0.0;
        assert_eq!(ot_vector_norm(v, &mut norm), OtStatus::Ok);
        assert!((norm - 2f64.sqrt()).abs() < 1e-15);
        let mut small = [0.0; 2];
        assert_eq!(ot_vector_coeffs(v, small.as_mut_ptr(), small.as_mut_ptr(), 2), OtStatus::InvalidArgument);
        ot_vector_free(v);
    }
}

#[test]
fn version_matches_package() {
    let v = unsafe { CStr::from_ptr(ot_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

/// `target/<profile>`, two levels above the test executable in `deps/`.
fn profile_dir() -> PathBuf {
    std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf()
}

fn cc() -> String {
    std::env::var("CC").unwrap_or_else(|_| "cc".into())
}

#[test]
fn header_is_valid_c_and_cpp() {
    let inc = crate_dir().join("include");
    let header = inc.join("oscitime.h");
    assert!(header.exists());
    for (compiler, lang) in [(cc(), "c"), ("c++".to_string(), "c++")] {
        let st = Command::new(&compiler)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang])
            .arg(&header)
            .status()
            .unwrap_or_else(|e| panic!("{compiler}: {e}"));
        assert!(st.success(), "{compiler} rejected the header");
    }
}

#[test]
fn c_program_links_against_the_static_library() {
    let lib = profile_dir().join("liboscitime_ffi.a");
    assert!(lib.exists(), "{} missing", lib.display());
    let tmp = tempfile::tempdir().unwrap();
    let exe = tmp.path().join("smoke");
    let src: &Path = &crate_dir().join("tests/c/smoke.c");
    let st = Command::new(cc())
        .args(["-std=c11", "-D_DEFAULT_SOURCE", "-Wall", "-Werror", "-I"])
        .arg(crate_dir().join("include"))
        .arg(src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(st.success(), "compile/link failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "{:?} {}", out.status, String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok 0.1.0 3."));
}
