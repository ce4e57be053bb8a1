use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_whitext"))
}

#[test]
fn set_function_extend_and_norm() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name);
    let ok = bin()
        .args(["gen-set", "--kind", "box", "--params", r#"{"lo":[0.0],"hi":[1.0]}"#, "--grid", "1,256,-1.5,0.015625"])
        .arg("--out")
        .arg(p("s.set"))
        .status()
        .unwrap();
    assert!(ok.success());
    let out = bin().args(["estimate-reg", "--set"]).arg(p("s.set")).output().unwrap();
    let reg: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(reg["theta"].as_f64().unwrap() >= 1.0);
    let ok = bin().args(["gen-fn", "--kind", "sine", "--params", r#"{"lambda":1.0}"#, "--set"]).arg(p("s.set")).arg("--out").arg(p("f.gfn")).status().unwrap();
    assert!(ok.success());
    let out = bin().args(["extend", "--k", "2", "--set"]).arg(p("s.set")).arg("--fn").arg(p("f.gfn")).arg("--out").arg(p("e.gfn")).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let ext = whitext::io::read_function(p("e.gfn")).unwrap();
    let f = whitext::io::read_function(p("f.gfn")).unwrap();
    assert_eq!(ext.grid(), f.grid());
    let out = bin().args(["norm", "--space", "besov", "--params", "0.5,1,2,2,1", "--set"]).arg(p("s.set")).arg("--fn").arg(p("f.gfn")).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v.to_string().contains("value"));
    let ok = bin().args(["whitney", "--set"]).arg(p("s.set")).arg("--out").arg(p("w.json")).status().unwrap();
    assert!(ok.success());
    let cubes: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(p("w.json")).unwrap()).unwrap();
    assert!(cubes.to_string().len() > 10);
}

#[test]
fn bad_arguments_fail_cleanly() {
    let out = bin().args(["gen-set", "--kind", "box", "--grid", "7,1", "--out", "/nonexistent/x"]).output().unwrap();
    assert!(!out.status.success());
    assert!(!out.stderr.is_empty());
    let out = bin().args(["norm", "--fn", "/nonexistent/f", "--set", "/nonexistent/s", "--space", "besov", "--params", "1,1,1,1,1"]).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn default_config_parses() {
    let out = bin().arg("default-config").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(whitext::harness::Config::from_toml(&text).unwrap(), whitext::harness::Config::default_corpus());
}
