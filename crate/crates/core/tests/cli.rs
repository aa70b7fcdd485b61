use std::fs;
use std::process::Command;

fn foliated() -> Command {
    Command::new(env!("CARGO_BIN_EXE_foliated"))
}

#[test]
fn eig_lists_first_mode_first() {
    let out = foliated().args(["eig", "--n-max", "3", "--k-max", "2"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let first = text.lines().nth(1).unwrap();
    assert!(first.starts_with("1 1 Cos 1.841183781"), "{first}");
}

#[test]
fn check_foliated_writes_result_and_field() {
    let dir = tempfile::tempdir().unwrap();
    let out = foliated()
        .args(["check-foliated", "--grid", "24x48", "--starts", "2", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let check: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(check["passes"], true);
    let res: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("result.json")).unwrap()).unwrap();
    assert_eq!(res["converged"], true);

    let field = dir.path().join("field.txt");
    let rep = foliated()
        .args(["rearrange", "--op", "report", "--input"])
        .arg(&field)
        .output()
        .unwrap();
    assert!(rep.status.success());
    let rep: serde_json::Value = serde_json::from_slice(&rep.stdout).unwrap();
    assert!(rep["foliated_defect"].as_f64().unwrap() <= 5e-2);

    let sym = dir.path().join("sym.txt");
    let st = foliated()
        .args(["rearrange", "--op", "foliated", "--input"])
        .arg(&field)
        .arg("--output")
        .arg(&sym)
        .status()
        .unwrap();
    assert!(st.success());
    assert!(fs::read_to_string(sym).unwrap().starts_with("# 24 48 0 1"));
}

#[test]
fn sweep_theta_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = foliated()
        .args(["sweep-theta", "--grid", "16x32", "--starts", "1", "--values", "0.1,0.2", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("sweep_theta.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "value,lambda,lambda_as,c,d,foliated_defect,antisym_defect,even_defect,converged,runtime_s"
    );
    assert_eq!(lines.count(), 2);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("sweep_theta.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["rows"].as_array().unwrap().len(), 2);
}

#[test]
fn errors_exit_with_two() {
    let out = foliated().args(["check-foliated", "--grid", "10x30"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = foliated()
        .args(["rearrange", "--op", "report", "--input", "/nonexistent/field.txt"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_rejects_unknown_fields() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("p.json");
    fs::write(
        &cfg,
        r#"{"theta":0.1,"p":2,"q":1.5,"F":{"kind":"zero","c0":0,"alpha":2},"domain":{"kind":"disk","r_inner":0,"r_outer":1},"extra":1}"#,
    )
    .unwrap();
    let out = foliated().args(["check-foliated", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
