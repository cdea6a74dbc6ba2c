use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use compressive_ia_ffi::*;

fn last_error() -> String {
    let p = cia_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn scenario() -> *mut CiaScenario {
    let mut sc = ptr::null_mut();
    assert_eq!(unsafe { cia_scenario_new_default(&mut sc) }, CiaStatus::Ok);
    sc
}

#[test]
fn version_is_package_version() {
    let v = unsafe { CStr::from_ptr(cia_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn null_handles_are_rejected_with_message() {
    let mut k = 0.0;
    let st = unsafe { cia_kappa(ptr::null(), 0, 0.0, &mut k) };
    assert_eq!(st, CiaStatus::NullPointer);
    assert!(last_error().contains("scenario"));
}

#[test]
fn bad_toml_reports_config_error() {
    let text = CString::new("P = 128\nM = 64\nN_B = 1024\nN_CP = 2\nN_c = 4\n").unwrap();
    let mut sc = ptr::null_mut();
    let st = unsafe { cia_scenario_from_toml(text.as_ptr(), &mut sc) };
    assert_eq!(st, CiaStatus::InvalidConfig);
    assert!(sc.is_null());
    assert!(last_error().contains("CP"), "{}", last_error());
}

#[test]
fn errors_are_thread_local() {
    let mut k = 0.0;
    assert_eq!(unsafe { cia_kappa(ptr::null(), 0, 0.0, &mut k) }, CiaStatus::NullPointer);
    std::thread::spawn(|| assert!(cia_last_error().is_null())).join().unwrap();
}

#[test]
fn theory_values() {
    let sc = scenario();
    let mut k = 0.0;
    assert_eq!(unsafe { cia_kappa(sc, 960, 0.0, &mut k) }, CiaStatus::Ok);
    assert_eq!(k, 0.5);
    let mut eta = 0.0;
    assert_eq!(unsafe { cia_threshold(sc, CiaMode::Pt, 1.0, &mut eta) }, CiaStatus::Ok);
    assert!(eta > 4.0 / 128.0);
    let mut pmd = 0.0;
    assert_eq!(unsafe { cia_predicted_pmd(sc, CiaMode::Nt, -10.0, 170, 0.0, &mut pmd) }, CiaStatus::Ok);
    assert!(pmd < 1e-3);
    assert_eq!(unsafe { cia_threshold(sc, CiaMode::Dia, 1.0, &mut eta) }, CiaStatus::InvalidArgument);
    unsafe { cia_scenario_free(sc) };
}

#[test]
fn codebook_beams_are_unit_norm() {
    let sc = scenario();
    let mut cb = ptr::null_mut();
    assert_eq!(unsafe { cia_codebook_pseudorandom(sc, 16, 3, &mut cb) }, CiaStatus::Ok);
    let (mut m, mut n) = (0, 0);
    assert_eq!(unsafe { cia_codebook_shape(cb, &mut m, &mut n) }, CiaStatus::Ok);
    assert_eq!((m, n), (64, 16));
    let mut buf = vec![0.0; 32];
    assert_eq!(unsafe { cia_codebook_beam(cb, 5, buf.as_mut_ptr(), 32) }, CiaStatus::Ok);
    let e: f64 = buf.iter().map(|v| v * v).sum();
    assert!((e - 1.0).abs() < 1e-12);
    assert_eq!(unsafe { cia_codebook_beam(cb, 5, buf.as_mut_ptr(), 31) }, CiaStatus::BufferTooSmall);
    assert_eq!(unsafe { cia_codebook_beam(cb, 64, buf.as_mut_ptr(), 32) }, CiaStatus::InvalidArgument);
    unsafe {
        cia_codebook_free(cb);
        cia_scenario_free(sc);
    }
}

#[test]
fn synth_then_train_recovers_angles() {
    let sc = scenario();
    let (mut tx, mut rx) = (ptr::null_mut(), ptr::null_mut());
    assert_eq!(unsafe { cia_codebook_pseudorandom(sc, 16, 1, &mut tx) }, CiaStatus::Ok);
    assert_eq!(unsafe { cia_codebook_pseudorandom(sc, 8, 2, &mut rx) }, CiaStatus::Ok);
    let mut eps_f = 0.0;
    assert_eq!(unsafe { cia_cfo_from_ppm(sc, 3.0, &mut eps_f) }, CiaStatus::Ok);
    let params = CiaLosParams { eps_f, aod: 0.35, aoa: -0.6, delay: 1.4 / 57.6e6, gain_re: 0.6, gain_im: 0.8 };
    let mut len = 0;
    assert_eq!(unsafe { cia_scenario_capture_len(sc, &mut len) }, CiaStatus::Ok);
    let mut buf = vec![0.0; 2 * len as usize];
    let noise = 1e-3;
    let st = unsafe { cia_synth_los(sc, tx, rx, &params, 300, noise, 9, buf.as_mut_ptr(), buf.len() as u64) };
    assert_eq!(st, CiaStatus::Ok);
    let mut res = CiaTrainingResult::default();
    assert_eq!(unsafe { cia_run_algorithm1(sc, tx, rx, buf.as_ptr(), len, noise, &mut res) }, CiaStatus::Ok);
    assert_eq!(res.detected, 1);
    assert!((res.aod - params.aod).abs() < 1e-3, "{res:?}");
    assert!((res.aoa - params.aoa).abs() < 1e-3, "{res:?}");
    let (mut c_aod, mut c_aoa) = (0.0, 0.0);
    assert_eq!(unsafe { cia_crlb(sc, tx, rx, &params, noise, &mut c_aod, &mut c_aoa) }, CiaStatus::Ok);
    assert!(c_aod > 0.0 && c_aoa > 0.0);
    unsafe {
        cia_codebook_free(tx);
        cia_codebook_free(rx);
        cia_scenario_free(sc);
    }
}

#[test]
fn header_compiles_as_c() {
    let header = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/compressive_ia.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in ["cia_last_error", "cia_run_algorithm1", "CIA_STATUS_BUFFER_TOO_SMALL", "CiaScenario"] {
        assert!(text.contains(name), "{name} missing from header");
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("probe.c");
    std::fs::write(
        &src,
        "#include \"compressive_ia.h\"\nint main(void) { CiaScenario *s = 0; CiaStatus st = cia_scenario_new_default(&s); cia_scenario_free(s); return st == CIA_STATUS_OK ? 0 : 1; }\n",
    )
    .unwrap();
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let out =
        Command::new(cc).args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"]).arg(header.parent().unwrap()).arg(&src).output();
    match out {
        Ok(o) => assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr)),
        Err(e) => eprintln!("skipping C compile: {e}"),
    }
}
