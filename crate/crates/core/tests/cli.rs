use std::process::Command;

fn cia() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cia"))
}

#[test]
fn selftest_passes_and_detects_corruption() {
    let ok = cia().arg("selftest").output().unwrap();
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stdout));
    assert!(!String::from_utf8_lossy(&ok.stdout).contains("FAIL"));
    let bad = cia().args(["selftest", "--corrupt-dictionary"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stdout).contains("FAIL"));
}

#[test]
fn latency_sweep_writes_csv_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("lat.csv");
    let st = cia().args(["latency-overhead", "--seed", "3", "--out"]).arg(&out).status().unwrap();
    assert!(st.success());
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.lines().count() > 1);
    let side = std::fs::read_dir(dir.path()).unwrap().filter_map(|e| e.ok()).find(|e| e.path().extension().is_some_and(|x| x == "json"));
    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(side.unwrap().path()).unwrap()).unwrap();
    assert_eq!(meta["sweep"], "latency-overhead");
    assert_eq!(meta["scenario"]["master_seed"], 3);
}

#[test]
fn bad_arguments_fail_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let st = cia().args(["discover-sweep", "--snr", "0:-1:5", "--out"]).arg(&out).output().unwrap();
    assert!(!st.status.success());
    assert!(String::from_utf8_lossy(&st.stderr).contains("empty"));
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "N_CP = 2\n").unwrap();
    let st = cia().args(["crlb", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert!(!st.status.success());
    assert!(!out.exists());
}
