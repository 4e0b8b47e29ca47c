use std::ffi::{CStr, CString};
use std::ptr;

use bhtree_ffi::*;

fn builtin(name: &str) -> *mut BhModel {
    let name = CString::new(name).unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { bh_model_builtin(name.as_ptr(), &mut m) }, BhStatus::Ok);
    assert!(!m.is_null());
    m
}

fn last_error() -> String {
    let p = bh_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn constants_and_survival() {
    let m = builtin("bin-lat");
    let mut c = BhConstants { mu: 0.0, sigma2: 0.0, b: 0.0, is_lattice: false };
    unsafe {
        assert_eq!(bh_model_constants(m, &mut c), BhStatus::Ok);
        assert!((c.b - 1.0 / 3.0).abs() < 1e-15);
        assert!(c.is_lattice);
        let mut q = 0.0;
        assert_eq!(bh_survival_prob(m, 2, &mut q), BhStatus::Ok);
        assert!((q - 31.0 / 64.0).abs() < 1e-15);
        bh_model_free(m);
    }
}

#[test]
fn geometric_oracle_coefficients() {
    let m = builtin("geo-det");
    let mut buf = vec![0.0; 65];
    let mut written = 0;
    unsafe {
        assert_eq!(bh_pgf_coefficients(m, 5, 64, buf.as_mut_ptr(), buf.len(), &mut written), BhStatus::Ok);
        assert_eq!(written, 65);
        // F_n(0) = n / (n + 1)
        assert!((buf[0] - 5.0 / 6.0).abs() < 1e-14);
        let mut small = [0.0; 3];
        assert_eq!(bh_pgf_coefficients(m, 5, 64, small.as_mut_ptr(), 3, &mut written), BhStatus::BufferTooSmall);
        assert_eq!(written, 65);
        bh_model_free(m);
    }
}

#[test]
fn errors_carry_messages() {
    let mut m = ptr::null_mut();
    let bad = CString::new("nope").unwrap();
    unsafe {
        assert_eq!(bh_model_builtin(bad.as_ptr(), &mut m), BhStatus::InvalidModel);
        assert!(last_error().contains("nope"));
        assert_eq!(bh_model_builtin(ptr::null(), &mut m), BhStatus::NullPointer);
        let json = CString::new(r#"{"offspring":{"pmf":[0.4,0.2,0.4]},"lifetime":{"kind":"lattice","pmf":{"2":1.0}}}"#).unwrap();
        assert_eq!(bh_model_from_json(json.as_ptr(), &mut m), BhStatus::InvalidModel);
        let geo = builtin("geo-exp");
        let mut q = 0.0;
        assert_eq!(bh_survival_prob(geo, 3, &mut q), BhStatus::Unsupported);
        let mut v = 0.0;
        assert_eq!(bh_theorem1_limit(0, 1.0, &mut v), BhStatus::InvalidArgument);
        assert_eq!(bh_theorem1_limit(1, 1.0, &mut v), BhStatus::Ok);
        assert!(bh_last_error_message().is_null());
        bh_model_free(geo);
    }
}

#[test]
fn limit_values() {
    let mut v = 0.0;
    unsafe {
        assert_eq!(bh_theorem2_limit(1, 0.5, 1.0, &mut v), BhStatus::Ok);
        assert!((v - 0.68394).abs() < 1e-5);
        assert_eq!(bh_corollary2_mrca(0.5, 1.0, &mut v), BhStatus::Ok);
        assert!((v - 0.68394).abs() < 1e-5);
        assert_eq!(bh_corollary1_mrca(1.0, &mut v), BhStatus::Ok);
        assert!((v - 0.63212).abs() < 1e-5);
    }
}

#[test]
fn conditioned_run() {
    let m = builtin("bin-lat");
    let event = CString::new("survival").unwrap();
    let grid = [1.0];
    let mut s = ptr::null_mut();
    unsafe {
        assert_eq!(bh_sample_run(m, 2.0, event.as_ptr(), grid.as_ptr(), 1, 4096, 3, 0, &mut s), BhStatus::Ok);
        let mut counts = BhSampleCounts { n_total: 0, n_accepted: 0, n_capped: 0 };
        assert_eq!(bh_sample_counts(s, &mut counts), BhStatus::Ok);
        assert_eq!(counts.n_total, 4096);
        let n = counts.n_accepted as usize;
        let mut z = vec![0.0; n];
        let mut r = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut w = 0;
        assert_eq!(bh_sample_population(s, z.as_mut_ptr(), n, &mut w), BhStatus::Ok);
        assert_eq!(bh_sample_reduced(s, 0, r.as_mut_ptr(), n, &mut w), BhStatus::Ok);
        assert_eq!(bh_sample_mrca_depth(s, d.as_mut_ptr(), n, &mut w), BhStatus::Ok);
        assert_eq!(w, n);
        for i in 0..n {
            assert!(z[i] >= 1.0 && r[i] >= 1.0 && r[i] <= z[i]);
        }
        assert_eq!(bh_sample_reduced(s, 1, r.as_mut_ptr(), n, &mut w), BhStatus::InvalidArgument);
        bh_sample_free(s);
        bh_model_free(m);
    }
}
