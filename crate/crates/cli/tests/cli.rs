use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn dinterp(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dinterp"))
        .args(args)
        .arg("--out-dir")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

#[test]
fn usage_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path();
    assert_eq!(code(&dinterp(&["--no-such-flag", "hats"], out)), 2);
    assert_eq!(code(&dinterp(&["scenario", "no-such-scenario"], out)), 2);
    assert_eq!(code(&dinterp(&["acoustics", "--threads", "0"], out)), 2);
    assert_eq!(code(&dinterp(&["wavelet", "--lambda", "1.5"], out)), 2);
    assert_eq!(code(&dinterp(&["scenario", "transport", "--set", "nope=1"], out)), 2);
    let o = dinterp(&["--help"], out);
    assert_eq!(code(&o), 0);
}

#[test]
fn domain_errors_exit_1() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.csv");
    fs::write(&bad, "x_left,x_right,value\n0,1,2\n1,2,oops\n").unwrap();
    let missing = tmp.path().join("missing.csv");
    let out = tmp.path().join("out");
    let b = bad.to_string_lossy();
    let m = missing.to_string_lossy();

    let o = dinterp(&["pair", "--input1", &b, "--input2", &b], &out);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
    assert_eq!(code(&dinterp(&["pair", "--input1", &m, "--input2", &m], &out)), 1);

    let neg = tmp.path().join("neg.csv");
    fs::write(&neg, "x_left,x_right,value\n0,1,2\n1,2,-1\n").unwrap();
    let n = neg.to_string_lossy();
    assert_eq!(code(&dinterp(&["pair", "--input1", &n, "--input2", &n, "--lambda", "0.5"], &out)), 1);
    assert_eq!(
        code(&dinterp(&["pair", "--signed", "--input1", &n, "--input2", &n, "--lambda", "0.5"], &out)),
        0
    );
}

#[test]
fn pair_endpoints_reproduce_inputs() {
    let tmp = tempfile::tempdir().unwrap();
    let inputs = tmp.path().join("inputs");
    assert_eq!(code(&dinterp(&["scenario", "transport"], &inputs)), 0);
    let a = inputs.join("member_01.csv");
    let b = inputs.join("member_06.csv");
    let out = tmp.path().join("pair");
    let o = dinterp(
        &["pair", "--input1", &a.to_string_lossy(), "--input2", &b.to_string_lossy(), "--lambda", "0,1"],
        &out,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read(out.join("interp_00.csv")).unwrap(), fs::read(&a).unwrap());
    assert_eq!(fs::read(out.join("interp_01.csv")).unwrap(), fs::read(&b).unwrap());

    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["schema_version"], 1);
    assert_eq!(manifest["command"], "pair");
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 3);
}

#[test]
fn quick_run_records_image_size() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("radon");
    let o = dinterp(&["radon2d", "--quick", "--lambda", "0.5", "--svg"], &out);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["scenario"]["parameters"]["d"], 64.0);
    let image = fs::read_to_string(out.join("interp_00.csv")).unwrap();
    assert_eq!(image.lines().count(), 64);
}
