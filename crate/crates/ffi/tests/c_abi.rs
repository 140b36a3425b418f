use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use sgmix_ffi::*;

fn header() -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/sgmix.h");
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn header_declares_every_export() {
    let h = header();
    let src = std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("src/lib.rs")).unwrap();
    let exports: Vec<&str> = src
        .split("extern \"C\" fn ")
        .skip(1)
        .map(|s| s.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 12, "{exports:?}");
    for name in exports {
        assert!(h.contains(&format!("{name}(")), "{name} missing from header");
    }
    assert!(h.contains("typedef struct SgmixFit SgmixFit;"));
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = Command::new("cc").arg("--version").output() else {
        eprintln!("no C compiler; skipping");
        return;
    };
    assert!(cc.status.success());
    let dir = tempfile::tempdir().unwrap();
    let c = dir.path().join("t.c");
    std::fs::write(
        &c,
        "#include \"sgmix.h\"\nint main(void) { double m; return sgmix_sga_moment(1.0, 1.0, 2, &m) == SGMIX_STATUS_OK ? 0 : 1; }\n",
    )
    .unwrap();
    let inc = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let out = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(&inc)
        .arg(&c)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn geweke_and_ess_through_the_abi() {
    let rng = sgmix_rng_new(11, 0);
    let mut x = vec![0.0; 4000];
    unsafe {
        assert_eq!(sgmix_sga_sample(rng, 1.0, 1.0, x.as_mut_ptr(), x.len()), SgmixStatus::Ok);
        sgmix_rng_free(rng);
    }
    let mut z = f64::NAN;
    let mut e = f64::NAN;
    unsafe {
        assert_eq!(sgmix_geweke_z(x.as_ptr(), x.len(), 0.1, 0.5, &mut z), SgmixStatus::Ok);
        assert_eq!(sgmix_ess(x.as_ptr(), x.len(), &mut e), SgmixStatus::Ok);
    }
    assert!(z.abs() < 4.0);
    assert!(e > 2000.0, "{e}");
    let flat = [1.0; 100];
    let st = unsafe { sgmix_ess(flat.as_ptr(), flat.len(), &mut e) };
    assert_eq!(st, SgmixStatus::DegenerateInput);
}

#[test]
fn symmlet_matches_core() {
    let xs: Vec<f64> = (0..50).map(|i| -8.0 + 0.33 * i as f64).collect();
    let mut out = vec![0.0; xs.len()];
    assert_eq!(unsafe { sgmix_symmlet8(xs.as_ptr(), out.as_mut_ptr(), xs.len()) }, SgmixStatus::Ok);
    for (x, v) in xs.iter().zip(&out) {
        assert_eq!(*v, sgmix::kernels::eval_symmlet8(*x));
    }
    assert_eq!(unsafe { sgmix_symmlet8(ptr::null(), out.as_mut_ptr(), 3) }, SgmixStatus::NullPointer);
}

#[test]
fn regression_fit_handle() {
    let n = 32;
    let x: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
    let y: Vec<f64> = x.iter().map(|v| (-30.0 * (v - 0.5) * (v - 0.5)).exp()).collect();
    let mut fit: *mut SgmixFit = ptr::null_mut();
    let st = unsafe { sgmix_fit_regression(x.as_ptr(), y.as_ptr(), n, 60, 2000, 3, &mut fit) };
    assert_eq!(st, SgmixStatus::Ok);
    assert_eq!(unsafe { sgmix_fit_len(fit) }, n);
    let mut mean = vec![0.0; n];
    let mut lo = vec![0.0; n];
    let mut hi = vec![0.0; n];
    let st = unsafe { sgmix_fit_curves(fit, mean.as_mut_ptr(), lo.as_mut_ptr(), hi.as_mut_ptr(), n) };
    assert_eq!(st, SgmixStatus::Ok);
    for i in 0..n {
        assert!(lo[i] <= hi[i]);
    }
    assert!(unsafe { sgmix_fit_sigma2(fit) } > 0.0);
    let st = unsafe { sgmix_fit_curves(fit, mean.as_mut_ptr(), ptr::null_mut(), ptr::null_mut(), n - 1) };
    assert_eq!(st, SgmixStatus::InvalidArgument);
    unsafe { sgmix_fit_free(fit) };
}
