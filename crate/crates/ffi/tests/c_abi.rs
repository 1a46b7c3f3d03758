use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use idecomp_ffi::*;

fn grid(h: usize, w: usize, data: &[f64]) -> *mut IdecompGrid {
    let mut g = ptr::null_mut();
    let st = unsafe { idecomp_grid_new(h, w, data.as_ptr(), &mut g) };
    assert_eq!(st, IdecompStatus::Ok);
    g
}

fn values(g: *const IdecompGrid) -> Vec<f64> {
    let n = unsafe { idecomp_grid_height(g) * idecomp_grid_width(g) };
    let mut buf = vec![0.0; n];
    assert_eq!(unsafe { idecomp_grid_copy(g, buf.as_mut_ptr(), n) }, IdecompStatus::Ok);
    buf
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(idecomp_last_error()) }.to_str().unwrap().to_owned()
}

#[test]
fn grid_round_trip() {
    let data: Vec<f64> = (0..12).map(|k| k as f64 * 0.25).collect();
    let g = grid(3, 4, &data);
    unsafe {
        assert_eq!(idecomp_grid_height(g), 3);
        assert_eq!(idecomp_grid_width(g), 4);
        let mut short = vec![0.0; 5];
        assert_eq!(idecomp_grid_copy(g, short.as_mut_ptr(), 5), IdecompStatus::Argument);
    }
    assert_eq!(values(g), data);
    unsafe { idecomp_grid_free(g) };
}

#[test]
fn non_finite_grid_is_rejected() {
    let mut g = ptr::null_mut();
    let st = unsafe { idecomp_grid_new(1, 2, [1.0, f64::NAN].as_ptr(), &mut g) };
    assert_ne!(st, IdecompStatus::Ok);
    assert!(g.is_null());
    assert!(!last_error().is_empty());
}

#[test]
fn constant_image_decomposes_to_itself() {
    let f = grid(4, 4, &[0.8; 16]);
    let alphas = [0.6, 0.6];
    let mut res = ptr::null_mut();
    unsafe {
        let st = idecomp_admm_decompose(f, alphas.as_ptr(), 2, 1, 0.1, 0.07, 0.07, false, 10, &mut res);
        assert_eq!(st, IdecompStatus::Ok);
        assert_eq!(idecomp_result_steps(res), 10);
        assert!(idecomp_result_objective(res, 10).is_nan());
        for x in values(idecomp_result_u(res)) {
            assert!((x - 0.8).abs() < 1e-12);
        }
        assert!(values(idecomp_result_v(res)).iter().all(|&x| x.abs() < 1e-12));
        idecomp_result_free(res);
        idecomp_grid_free(f);
    }
}

#[test]
fn invalid_parameters_map_to_status() {
    let f = grid(4, 4, &[0.0; 16]);
    let mut res = ptr::null_mut();
    unsafe {
        let st = idecomp_admm_decompose(f, [0.5, 0.5].as_ptr(), 2, 1, -1.0, 0.07, 0.07, false, 5, &mut res);
        assert_eq!(st, IdecompStatus::Validation);
        assert!(last_error().contains("beta"));
        let st = idecomp_admm_decompose(f, [0.5].as_ptr(), 1, 1, 0.1, 0.07, 0.07, false, 5, &mut res);
        assert_eq!(st, IdecompStatus::Argument);
        assert_eq!(
            idecomp_unroll_forward(f, ptr::null(), &mut res),
            IdecompStatus::NullPointer
        );
        idecomp_grid_free(f);
    }
}

#[test]
fn bundle_save_load_and_forward() {
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("b.json").to_str().unwrap()).unwrap();
    let data: Vec<f64> = (0..64).map(|k| ((k * 37) % 11) as f64 / 10.0).collect();
    let f = grid(8, 8, &data);
    unsafe {
        let mut b = ptr::null_mut();
        assert_eq!(idecomp_bundle_init_default(2, 3, 1, &mut b), IdecompStatus::Ok);
        assert_eq!((idecomp_bundle_width(b), idecomp_bundle_depth(b)), (2, 3));
        assert_eq!(idecomp_bundle_save(b, path.as_ptr()), IdecompStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(idecomp_bundle_load(path.as_ptr(), &mut back), IdecompStatus::Ok);

        let (mut r1, mut r2) = (ptr::null_mut(), ptr::null_mut());
        assert_eq!(idecomp_unroll_forward(f, b, &mut r1), IdecompStatus::Ok);
        assert_eq!(idecomp_unroll_forward(f, back, &mut r2), IdecompStatus::Ok);
        assert_eq!(idecomp_result_steps(r1), 3);
        assert_eq!(values(idecomp_result_u(r1)), values(idecomp_result_u(r2)));
        assert_eq!(values(idecomp_result_v(r1)), values(idecomp_result_v(r2)));

        let missing = CString::new(dir.path().join("none.json").to_str().unwrap()).unwrap();
        let mut none = ptr::null_mut();
        assert_eq!(idecomp_bundle_load(missing.as_ptr(), &mut none), IdecompStatus::Io);

        idecomp_result_free(r1);
        idecomp_result_free(r2);
        idecomp_bundle_free(b);
        idecomp_bundle_free(back);
        idecomp_grid_free(f);
    }
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/idecomp.h")).unwrap();
    for name in [
        "IDECOMP_STATUS_OK = 0",
        "typedef struct IdecompGrid IdecompGrid;",
        "idecomp_grid_new(",
        "idecomp_admm_decompose(",
        "idecomp_unroll_forward(",
        "idecomp_bundle_load(",
        "idecomp_last_error(void)",
    ] {
        assert!(header.contains(name), "missing {name}");
    }
}

// Builds and runs a small C client against the generated header and the static library.
#[test]
fn c_client_links_and_runs() {
    let Some(cc) = ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok())
    else {
        eprintln!("no C compiler found; C client check not run");
        return;
    };
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().unwrap().parent().unwrap();
    let lib = profile_dir.join("libidecomp_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built; C client check not run", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("client.c");
    std::fs::write(
        &src,
        r#"
#include <stdio.h>
#include "idecomp.h"
int main(void) {
    double data[16];
    for (int k = 0; k < 16; ++k) data[k] = 0.5;
    IdecompGrid *f = NULL;
    if (idecomp_grid_new(4, 4, data, &f) != IDECOMP_STATUS_OK) return 1;
    double alphas[2] = {0.6, 0.6};
    IdecompResult *r = NULL;
    if (idecomp_admm_decompose(f, alphas, 2, 1, 0.1, 0.07, 0.07, false, 5, &r) != IDECOMP_STATUS_OK) return 2;
    double u[16];
    if (idecomp_grid_copy(idecomp_result_u(r), u, 16) != IDECOMP_STATUS_OK) return 3;
    if (idecomp_grid_new(4, 4, NULL, &f) != IDECOMP_STATUS_NULL_POINTER) return 4;
    printf("%.6f %s\n", u[5], idecomp_last_error());
    idecomp_result_free(r);
    return 0;
}
"#,
    )
    .unwrap();
    let bin = dir.path().join("client");
    let status = Command::new(cc)
        .arg(&src)
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C client failed to compile");
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "client exit {:?}", out.status);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("0.500000 null pointer"), "{text}");
}
