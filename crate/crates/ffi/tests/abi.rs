// SPDX-License-Identifier: MIT OR Apache-2.0

use std::ffi::CStr;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use cpfind_ffi::*;

fn header() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include").join("cpfind.h")
}

fn have_cc() -> bool {
    Command::new("cc").arg("--version").output().is_ok()
}

#[test]
fn sample_round_trip_and_tests() {
    let x: Vec<f64> = (0..400).map(|i| ((i * 37) % 101) as f64 / 25.0 - 2.0).collect();
    let y: Vec<f64> = x
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let e = ((i as f64 * 12.9898).sin() * 43758.5453).fract() - 0.5;
            if i < 200 { 0.5 * v + e } else { 0.5 * v + 3.0 + e }
        })
        .collect();
    let mut s = ptr::null_mut();
    unsafe {
        assert_eq!(cpf_sample_new(y.as_ptr(), x.as_ptr(), y.len(), &mut s), CpfStatus::Ok);
        assert_eq!(cpf_sample_len(s), 400);
        let mut o = CpfTestOutcome::default();
        assert_eq!(cpf_test(s, 200, CpfTarget::Mean, 0.05, &mut o), CpfStatus::Ok);
        assert!(o.reject);
        assert!(o.statistic > o.critical_value);
        assert!(o.nu_epsilon.is_nan());
        assert_eq!(cpf_test(s, 0, CpfTarget::Mean, 0.05, &mut o), CpfStatus::InvalidArgument);
        assert_eq!(cpf_test(s, 200, CpfTarget::Joint, 0.05, &mut o), CpfStatus::InvalidArgument);
        let mut j = CpfJointOutcome::default();
        assert_eq!(cpf_test_joint(s, 200, 0.05, &mut j), CpfStatus::Ok);
        assert!(j.reject_any);
        cpf_sample_free(s);
    }
}

#[test]
fn mismatched_input_reports_error() {
    let y = [1.0, f64::NAN];
    let mut s = ptr::null_mut();
    unsafe {
        assert_eq!(cpf_sample_new(y.as_ptr(), y.as_ptr(), 2, &mut s), CpfStatus::InvalidArgument);
        assert!(s.is_null());
        let msg = CStr::from_ptr(cpf_last_error_message()).to_str().unwrap();
        assert!(!msg.is_empty());
        assert_eq!(cpf_sample_new(ptr::null(), y.as_ptr(), 2, &mut s), CpfStatus::NullPointer);
        assert_eq!(cpf_sample_len(ptr::null()), 0);
        cpf_sample_free(ptr::null_mut());
        cpf_breakset_free(ptr::null_mut());
    }
}

#[test]
fn synthesize_and_detect() {
    let breaks = [500usize];
    let ids = [5u8, 2];
    let mut s = ptr::null_mut();
    let mut set = ptr::null_mut();
    unsafe {
        assert_eq!(
            cpf_synthesize(CpfDgp::WhiteNoise, CpfNoise::Normal, 1000, 3, breaks.as_ptr(), 1, ids.as_ptr(), &mut s),
            CpfStatus::Ok
        );
        assert_eq!(cpf_sample_len(s), 1000);
        assert_eq!(cpf_detect(s, 100, 0.05, CpfTarget::Joint, 0, &mut set), CpfStatus::Ok);
        let k = cpf_breakset_len(set);
        assert!(k >= 1);
        let mut idx = 0usize;
        let found: Vec<usize> = (0..k)
            .map(|i| {
                assert_eq!(cpf_breakset_get(set, i, &mut idx), CpfStatus::Ok);
                idx
            })
            .collect();
        assert!(found.iter().any(|&b| b.abs_diff(500) <= 50), "{found:?}");
        assert_eq!(cpf_breakset_get(set, k, &mut idx), CpfStatus::InvalidArgument);
        assert_eq!(cpf_detect(s, 10, 0.05, CpfTarget::Joint, 0, &mut set), CpfStatus::InvalidArgument);
        cpf_breakset_free(set);
        cpf_sample_free(s);
        let bad = [9u8];
        assert_eq!(
            cpf_synthesize(CpfDgp::Tar, CpfNoise::Normal, 100, 1, ptr::null(), 0, bad.as_ptr(), &mut s),
            CpfStatus::InvalidArgument
        );
    }
}

#[test]
fn critical_values() {
    let (mut z, mut b) = (0.0, 0.0);
    unsafe {
        assert_eq!(cpf_gumbel_quantile(0.05, &mut z), CpfStatus::Ok);
        assert_eq!(cpf_critical_value(10, 0.0, &mut b), CpfStatus::Ok);
        assert!((b - 1.167598).abs() < 1e-6);
        assert_eq!(cpf_critical_value(1, 0.0, &mut b), CpfStatus::InvalidArgument);
    }
    assert!((z - 3.663342).abs() < 1e-6);
}

#[test]
fn header_declares_the_api() {
    let text = std::fs::read_to_string(header()).unwrap();
    for name in [
        "cpf_sample_new",
        "cpf_sample_free",
        "cpf_test",
        "cpf_test_joint",
        "cpf_detect",
        "cpf_breakset_get",
        "cpf_breakset_free",
        "cpf_gumbel_quantile",
        "cpf_critical_value",
        "cpf_synthesize",
        "cpf_version",
        "cpf_last_error_message",
        "typedef struct CpfSample CpfSample",
    ] {
        assert!(text.contains(name), "{name} missing from header");
    }
}

#[test]
fn header_compiles_as_c() {
    if !have_cc() {
        eprintln!("cc not available; header syntax check skipped");
        return;
    }
    let out = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-x", "c"])
        .arg(header())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

/// Compiles a small C client against the static library.
#[test]
fn c_client_links_and_runs() {
    if !have_cc() {
        eprintln!("cc not available; C client check skipped");
        return;
    }
    let deps = std::env::current_exe().unwrap().parent().unwrap().to_path_buf();
    let lib = deps.parent().unwrap().join("libcpfind_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built; C client check skipped", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("client.c");
    std::fs::write(
        &src,
        r#"
#include <stdio.h>
#include "cpfind.h"
int main(void) {
    double z = 0.0;
    if (cpf_gumbel_quantile(0.05, &z) != CPF_STATUS_OK) return 1;
    size_t breaks[1] = {300};
    uint8_t ids[2] = {1, 2};
    CpfSample *s = NULL;
    if (cpf_synthesize(CPF_DGP_WHITE_NOISE, CPF_NOISE_NORMAL, 600, 9, breaks, 1, ids, &s) != CPF_STATUS_OK) return 2;
    CpfJointOutcome o;
    if (cpf_test_joint(s, 300, 0.05, &o) != CPF_STATUS_OK) return 3;
    printf("%s %.6f %d\n", cpf_version(), z, o.reject_any ? 1 : 0);
    cpf_sample_free(s);
    return 0;
}
"#,
    )
    .unwrap();
    let exe = dir.path().join("client");
    let out = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success());
    let stdout = String::from_utf8(run.stdout).unwrap();
    assert!(stdout.starts_with(concat!(env!("CARGO_PKG_VERSION"), " 3.663342 1")), "{stdout}");
}
