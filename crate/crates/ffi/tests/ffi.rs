use std::ffi::{c_char, CStr};
use std::path::Path;
use std::ptr;

use rayleigh_stokes_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 512];
    let n = unsafe { rs_last_error_message(buf.as_mut_ptr(), buf.len()) };
    let s = unsafe { CStr::from_ptr(buf.as_ptr()) }
        .to_string_lossy()
        .into_owned();
    assert_eq!(n, s.len());
    s
}

fn diag123() -> *mut RsOperator {
    let m = [1.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 3.0];
    let mut op = ptr::null_mut();
    assert_eq!(
        unsafe { rs_operator_matrix(m.as_ptr(), 3, &mut op) },
        RsStatus::Ok
    );
    op
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(rs_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn operator_lifecycle() {
    let mut op = ptr::null_mut();
    assert_eq!(
        unsafe { rs_operator_interval(std::f64::consts::PI, 3, &mut op) },
        RsStatus::Ok
    );
    assert_eq!(unsafe { rs_operator_len(op) }, 3);
    let mut ev = [0.0; 3];
    assert_eq!(
        unsafe { rs_operator_eigenvalues(op, ev.as_mut_ptr(), 3) },
        RsStatus::Ok
    );
    for (l, k) in ev.iter().zip([1.0, 4.0, 9.0]) {
        assert!((l - k).abs() < 1e-12);
    }
    unsafe { rs_operator_free(op) };
    unsafe { rs_operator_free(ptr::null_mut()) };

    let mut rect = ptr::null_mut();
    assert_eq!(
        unsafe { rs_operator_rectangle(1.0, 2.0, 5, &mut rect) },
        RsStatus::Ok
    );
    assert_eq!(unsafe { rs_operator_len(rect) }, 5);
    unsafe { rs_operator_free(rect) };
}

#[test]
fn not_spd_reports_invalid_input() {
    let m = [1.0, 2.0, 2.0, 1.0];
    let mut op = ptr::null_mut();
    assert_eq!(
        unsafe { rs_operator_matrix(m.as_ptr(), 2, &mut op) },
        RsStatus::InvalidInput
    );
    assert!(op.is_null());
    assert!(last_error().contains("positive-definite"));
}

#[test]
fn kernel_values_and_errors() {
    let mut b = 0.0;
    assert_eq!(
        unsafe { rs_kernel_eval(2.0, 1.0, 0.5, 0.0, ptr::null(), &mut b) },
        RsStatus::Ok
    );
    assert!((b - 1.0).abs() < 1e-8);
    assert_eq!(last_error(), "");

    assert_eq!(
        unsafe { rs_kernel_eval(2.0, 1.0, 1.0, 1.0, ptr::null(), &mut b) },
        RsStatus::InvalidInput
    );
    assert!(last_error().contains("open interval (0, 1)"));

    assert_eq!(
        unsafe { rs_kernel_eval(2.0, 1.0, 0.5, 1.0, ptr::null(), ptr::null_mut()) },
        RsStatus::NullPointer
    );

    let cfg = rs_quadrature_default();
    let mut d = 0.0;
    assert_eq!(
        unsafe { rs_kernel_dbdt(2.0, 1.0, 0.5, 1.0, &cfg, &mut d) },
        RsStatus::Ok
    );
    assert!(d < 0.0);

    let bad = RsQuadrature {
        rel_tol: 0.0,
        ..cfg
    };
    assert_eq!(
        unsafe { rs_kernel_eval(2.0, 1.0, 0.5, 1.0, &bad, &mut b) },
        RsStatus::InvalidInput
    );
}

#[test]
fn sensitivity_breakdown() {
    let mut s = RsSensitivity::default();
    assert_eq!(
        unsafe { rs_kernel_dbdalpha(2.0, 1.0, 0.5, 50.0, 2.0, ptr::null(), &mut s) },
        RsStatus::Ok
    );
    let sum: f64 = s.near.iter().chain(&s.far).sum();
    assert_eq!(sum, s.total);
    assert!(s.total < 0.0 && s.cross_check_ok);
}

#[test]
fn threshold_scan_status() {
    let alphas = [0.3, 0.5, 0.7];
    let mut t0 = 0.0;
    assert_eq!(
        unsafe { rs_estimate_t0(1.0, 1.0, alphas.as_ptr(), 3, 1.0, 20, ptr::null(), &mut t0) },
        RsStatus::Ok
    );
    assert!(t0 >= 1.0);
    let small = [0.1];
    assert_eq!(
        unsafe { rs_estimate_t0(2.0, 1.0, small.as_ptr(), 1, 1.0, 10, ptr::null(), &mut t0) },
        RsStatus::NumericalFailure
    );
}

#[test]
fn recovery_round_trip() {
    let op = diag123();
    let c = [1.0, 0.5, 0.25];
    let t0 = 1e6;
    let mut d0 = 0.0;
    assert_eq!(
        unsafe {
            rs_observation_u(
                op,
                c.as_ptr(),
                3,
                0.4,
                0.5,
                t0,
                RsWeight::One,
                0.0,
                ptr::null(),
                &mut d0,
            )
        },
        RsStatus::Ok
    );
    let mut r = RsRecovery::default();
    let st = unsafe {
        rs_recover_alpha(
            op,
            c.as_ptr(),
            3,
            0.5,
            RsWeight::One,
            0.0,
            t0,
            d0,
            0.1,
            0.95,
            1e-8,
            1e-10,
            RsGate::Verify,
            30.0,
            ptr::null(),
            &mut r,
        )
    };
    assert_eq!(st, RsStatus::Ok, "{}", last_error());
    assert!((r.alpha_hat - 0.4).abs() < 1e-6);
    assert!(r.certified && r.t0_used <= t0);

    let st = unsafe {
        rs_recover_alpha(
            op,
            c.as_ptr(),
            3,
            0.5,
            RsWeight::One,
            0.0,
            t0,
            1.1 * r.u_max,
            0.1,
            0.95,
            1e-8,
            1e-10,
            RsGate::Unsafe,
            0.0,
            ptr::null(),
            &mut r,
        )
    };
    assert_eq!(st, RsStatus::NoSolution);

    let st = unsafe {
        rs_recover_alpha(
            op,
            c.as_ptr(),
            3,
            0.5,
            RsWeight::One,
            0.0,
            10.0,
            d0,
            0.1,
            0.95,
            1e-8,
            1e-10,
            RsGate::Precomputed,
            100.0,
            ptr::null(),
            &mut r,
        )
    };
    assert_eq!(st, RsStatus::CertificateFailure);

    let zero = [0.0; 3];
    let st = unsafe {
        rs_recover_alpha(
            op,
            zero.as_ptr(),
            3,
            0.5,
            RsWeight::Lambda,
            0.0,
            t0,
            d0,
            0.1,
            0.95,
            1e-8,
            1e-10,
            RsGate::Unsafe,
            0.0,
            ptr::null(),
            &mut r,
        )
    };
    assert_eq!(st, RsStatus::InvalidInput);
    assert!(last_error().contains("zero norm"));
    unsafe { rs_operator_free(op) };
}

#[test]
fn null_operator() {
    let mut u = 0.0;
    let st = unsafe {
        rs_observation_u(
            ptr::null(),
            ptr::null(),
            0,
            0.5,
            1.0,
            1.0,
            RsWeight::One,
            0.0,
            ptr::null(),
            &mut u,
        )
    };
    assert_eq!(st, RsStatus::NullPointer);
    assert!(last_error().contains("operator"));
}

fn header() -> String {
    std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/rayleigh_stokes.h"))
        .unwrap()
}

#[test]
fn header_declares_the_api() {
    let h = header();
    for name in [
        "rs_version",
        "rs_last_error_message",
        "rs_operator_interval",
        "rs_operator_rectangle",
        "rs_operator_matrix",
        "rs_operator_free",
        "rs_kernel_eval",
        "rs_kernel_dbdt",
        "rs_kernel_dbdalpha",
        "rs_observation_u",
        "rs_estimate_t0",
        "rs_recover_alpha",
        "typedef struct RsOperator RsOperator;",
        "RS_STATUS_NO_SOLUTION = 4",
        "RS_STATUS_CERTIFICATE_FAILURE = 5",
    ] {
        assert!(h.contains(name), "header lacks {name}");
    }
}

/// Compiles and runs a small C program against the static library when a C compiler exists.
#[test]
fn c_program_links() {
    let Some(cc) = ["cc", "gcc", "clang"].into_iter().find(|c| {
        std::process::Command::new(c)
            .arg("--version")
            .output()
            .is_ok()
    }) else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    // The test binary lives in target/<profile>/deps; the static library one level up.
    let exe = std::env::current_exe().unwrap();
    let lib_dir = exe.parent().unwrap().parent().unwrap();
    let lib = lib_dir.join("librayleigh_stokes_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built; skipping", lib.display());
        return;
    }
    let dir = tempfile_dir();
    let src = dir.join("smoke.c");
    std::fs::write(
        &src,
        r#"#include <stdio.h>
#include "rayleigh_stokes.h"
int main(void) {
    double b = 0.0;
    if (rs_kernel_eval(2.0, 1.0, 0.5, 1.0, NULL, &b) != RS_STATUS_OK) return 1;
    RsOperator *op = NULL;
    if (rs_operator_interval(3.141592653589793, 4, &op) != RS_STATUS_OK) return 2;
    size_t n = rs_operator_len(op);
    rs_operator_free(op);
    if (rs_kernel_eval(2.0, 1.0, 1.5, 1.0, NULL, &b) != RS_STATUS_INVALID_INPUT) return 3;
    char msg[256];
    rs_last_error_message(msg, sizeof msg);
    printf("%zu %.6f %s\n", n, b, msg);
    return 0;
}
"#,
    )
    .unwrap();
    let bin = dir.join("smoke");
    let status = std::process::Command::new(cc)
        .arg(&src)
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let out = std::process::Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "{:?}", out);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("4 0.0965"), "{text}");
    assert!(text.contains("open interval"));
}

fn tempfile_dir() -> std::path::PathBuf {
    let d = std::env::temp_dir().join(format!("rs-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}
