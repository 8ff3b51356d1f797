use std::ffi::CStr;
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use hhsketch_ffi::*;

#[test]
fn count_min_round_trip() {
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(hh_cm_new(1000, 0.1, 0.05, 7, &mut s), HhStatus::Ok);
        for _ in 0..50 {
            assert_eq!(hh_cm_update(s, 17, 1.0), HhStatus::Ok);
        }
        for i in 0..40 {
            assert_eq!(hh_cm_update(s, 100 + i, 1.0), HhStatus::Ok);
        }
        let mut est = 0.0;
        assert_eq!(hh_cm_estimate(s, 17, &mut est), HhStatus::Ok);
        assert!(est >= 50.0);
        let mut len = 0;
        assert_eq!(hh_cm_query(s, ptr::null_mut(), 0, &mut len), HhStatus::BufferTooSmall);
        let mut buf = vec![0usize; len];
        assert_eq!(hh_cm_query(s, buf.as_mut_ptr(), buf.len(), &mut len), HhStatus::Ok);
        assert_eq!(buf[0], 17);
        let mut space = 0;
        assert_eq!(hh_cm_space(s, &mut space), HhStatus::Ok);
        assert!(space > 0);
        assert_eq!(hh_cm_update(s, 1000, 1.0), HhStatus::IndexOutOfRange);
        hh_cm_free(s);
    }
}

#[test]
fn errors_are_codes() {
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(hh_cm_new(1000, 2.0, 0.05, 7, &mut s), HhStatus::InvalidParameter);
        assert!(s.is_null());
        assert_eq!(hh_cm_new(1000, 0.1, 0.05, 7, ptr::null_mut()), HhStatus::NullPointer);
        assert_eq!(hh_cm_update(ptr::null_mut(), 0, 1.0), HhStatus::NullPointer);
        let mut p = ptr::null_mut();
        assert_eq!(hh_pipeline_new(100, 4, 0.1, 9, 1, &mut p), HhStatus::InvalidParameter);
        hh_cm_free(ptr::null_mut());
        let msg = CStr::from_ptr(hh_status_message(HhStatus::BufferTooSmall));
        assert_eq!(msg.to_str().unwrap(), "output buffer too small");
    }
}

#[test]
fn dyadic_and_det_find_heavy_item() {
    unsafe {
        let mut d = ptr::null_mut();
        assert_eq!(hh_dyadic_new(4096, 0.1, 0.05, 3, &mut d), HhStatus::Ok);
        let mut g = ptr::null_mut();
        assert_eq!(hh_det_new(13, 2, 2, 2, 169, 0.75, 0.1, 2.25, &mut g), HhStatus::Ok);
        for _ in 0..30 {
            assert_eq!(hh_dyadic_update(d, 2049, 1.0), HhStatus::Ok);
            assert_eq!(hh_det_update(g, 77, 1.0), HhStatus::Ok);
        }
        assert_eq!(hh_det_update(g, 5, 3.0), HhStatus::Ok);
        let mut buf = vec![0usize; 1024];
        let mut len = 0;
        assert_eq!(hh_dyadic_query(d, buf.as_mut_ptr(), buf.len(), &mut len), HhStatus::Ok);
        assert!(buf[..len].contains(&2049));
        assert_eq!(hh_det_query(g, buf.as_mut_ptr(), buf.len(), &mut len), HhStatus::Ok);
        assert!(buf[..len].contains(&77));
        let mut est = 0.0;
        assert_eq!(hh_det_estimate(g, 77, &mut est), HhStatus::Ok);
        assert!(est >= 30.0);
        hh_dyadic_free(d);
        hh_det_free(g);
    }
}

#[test]
fn pipeline_recovers_sparse_signal() {
    unsafe {
        let n = 4096;
        let mut p = ptr::null_mut();
        assert_eq!(hh_pipeline_new(n, 4, 0.25, 0, 5, &mut p), HhStatus::Ok);
        let mut rows = 0;
        assert_eq!(hh_pipeline_rows(p, &mut rows), HhStatus::Ok);
        assert!(rows > 0 && rows < n);
        let mut x = vec![0.0; n];
        for (i, v) in [(10, 3.0), (999, -2.0), (2048, 4.0), (4000, 1.5)] {
            x[i] = v;
        }
        let mut idx = vec![0usize; 8];
        let mut val = vec![0.0; 8];
        let mut len = 0;
        let st = hh_pipeline_recover(p, x.as_ptr(), n, idx.as_mut_ptr(), val.as_mut_ptr(), 8, &mut len);
        assert_eq!(st, HhStatus::Ok);
        let mut err = x.clone();
        for j in 0..len {
            err[idx[j]] -= val[j];
        }
        assert!(err.iter().map(|e| e * e).sum::<f64>() < 1e-12);
        let st = hh_pipeline_recover(p, x.as_ptr(), n - 1, idx.as_mut_ptr(), val.as_mut_ptr(), 8, &mut len);
        assert_eq!(st, HhStatus::InvalidParameter);
        hh_pipeline_free(p);
    }
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/hhsketch.h")).unwrap();
    for sym in [
        "typedef struct HhCountMin HhCountMin",
        "HH_STATUS_BUFFER_TOO_SMALL",
        "hh_cm_new",
        "hh_dyadic_query",
        "hh_det_new",
        "hh_pipeline_recover",
        "hh_status_message",
    ] {
        assert!(header.contains(sym), "missing {sym}");
    }
}

/// Compiles and runs a C program against the header and the static library.
#[test]
fn c_program_links_and_runs() {
    let profile_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let tmp = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let mut lib = profile_dir.join("libhhsketch_ffi.a");
    if !lib.exists() {
        let target = tmp.join("staticlib");
        let status = Command::new(env!("CARGO"))
            .args(["build", "--offline", "-p", "hhsketch-ffi", "--lib", "--target-dir"])
            .arg(&target)
            .status()
            .expect("run cargo");
        assert!(status.success());
        lib = target.join("debug/libhhsketch_ffi.a");
    }
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let out = tmp.join("ffi_smoke");
    let status = Command::new("cc")
        .arg(manifest.join("tests/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&out)
        .status()
        .expect("run cc");
    assert!(status.success());
    let run = Command::new(&out).output().unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(String::from_utf8_lossy(&run.stdout).trim(), "heavy 42");
}
