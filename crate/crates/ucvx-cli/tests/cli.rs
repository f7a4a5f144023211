use std::fs;
use std::path::PathBuf;

use serde_json::Value;
use ucvx_cli::manifest::sha256_hex;
use ucvx_cli::run;

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli").join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn ucvx(args: &[&str]) -> i32 {
    run(std::iter::once("ucvx").chain(args.iter().copied()))
}

fn read_json(p: &PathBuf) -> Value {
    serde_json::from_slice(&fs::read(p).unwrap()).unwrap()
}

#[test]
fn modulus_of_example_fixture_file() {
    let dir = scratch("modulus");
    assert_eq!(ucvx(&["reproduce", "--fixtures", dir.join("fx").to_str().unwrap(), "--report", dir.join("fx.json").to_str().unwrap()]), 0);
    let spec = dir.join("fx/ex26.json");
    let report = dir.join("m.json");
    let plot = dir.join("m.svg");
    let code = ucvx(&["modulus", "--fn", spec.to_str().unwrap(), "--eps", "1", "--metric", "norm", "--report", report.to_str().unwrap(), "--plot", plot.to_str().unwrap()]);
    assert_eq!(code, 0);
    let r = read_json(&report);
    let delta = r["result"]["delta"].as_f64().unwrap();
    assert!((delta - 1.0 / 36.0).abs() < 1e-3);
    assert!(fs::read_to_string(&plot).unwrap().starts_with("<svg"));

    let m = read_json(&dir.join("m.json.manifest.json"));
    assert_eq!(m["subcommand"], "modulus");
    assert_eq!(m["inputs"][0]["sha256"], sha256_hex(&fs::read(&spec).unwrap()));
    assert_eq!(m["outputs"][0]["sha256"], sha256_hex(&fs::read(&report).unwrap()));
    assert_eq!(m["parameters"]["eps"], 1.0);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = scratch("determinism");
    let mut bytes = Vec::new();
    let mut manifests = Vec::new();
    for (k, threads) in ["1", "3"].iter().enumerate() {
        let report = dir.join(format!("t{k}.json"));
        let manifest = dir.join(format!("t{k}.manifest"));
        let code = ucvx(&[
            "tree", "--fn", "fixture:square", "--eps", "0.5", "--heights", "--threads", threads, "--report", report.to_str().unwrap(), "--manifest",
            manifest.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        bytes.push(fs::read(&report).unwrap());
        manifests.push(read_json(&manifest));
    }
    assert_eq!(bytes[0], bytes[1]);
    assert_eq!(manifests[0]["inputs"], manifests[1]["inputs"]);
    assert_eq!(manifests[0]["outputs"][0]["sha256"], manifests[1]["outputs"][0]["sha256"]);
}

#[test]
fn tree_on_interval() {
    let dir = scratch("tree");
    let report = dir.join("t.json");
    assert_eq!(ucvx(&["tree", "--fn", "fixture:interval", "--eps", "0.5", "--report", report.to_str().unwrap()]), 0);
    let r = read_json(&report);
    assert_eq!(r["search"]["height"], 2);
    assert_eq!(r["search"]["witness"]["nodes"].as_object().unwrap().len(), 7);
}

#[test]
fn exit_codes() {
    let dir = scratch("codes");
    let out = dir.join("x.json");
    let out = out.to_str().unwrap();
    assert_eq!(ucvx(&["modulus", "--fn", "fixture:ex26", "--eps", "1", "--bogus"]), 4);
    assert_eq!(ucvx(&["frobnicate"]), 4);
    assert_eq!(ucvx(&["modulus", "--fn", "/nonexistent.json", "--eps", "1"]), 4);
    assert_eq!(ucvx(&["modulus", "--fn", "fixture:nope", "--eps", "1"]), 4);
    assert_eq!(ucvx(&["modulus", "--fn", "fixture:ex26", "--eps", "-1", "--report", out]), 4);
    assert_eq!(ucvx(&["modulus", "--fn", "fixture:ex211", "--eps", "1", "--kind", "gage", "--report", out]), 2);
    assert_eq!(ucvx(&["renorm", "--fn", "fixture:ex211", "--delta", "0.1", "--report", out]), 2);
    assert_eq!(ucvx(&["tree", "--fn", "fixture:interval", "--eps", "0.01", "--cap", "3", "--report", out]), 3);
    assert_eq!(read_json(&dir.join("x.json"))["search"]["at_least"], true);
    assert_eq!(ucvx(&["dent", "--fn", "fixture:interval", "--eps", "0.01", "--cap", "2", "--report", out]), 3);
    assert_eq!(ucvx(&["reproduce", "--criterion", "A99"]), 4);
    assert_eq!(ucvx(&["--help"]), 0);
}

#[test]
fn metrics_from_files() {
    let dir = scratch("metrics");
    let out = dir.join("r.json");
    // Three collinear points with a table metric equal to twice the grid distance.
    let spec = r#"{"domain":{"kind":"grid","origin":[0.0],"spacing":0.5,"shape":[3]},"values":[1.0,0.0,1.0],"name":"v"}"#;
    fs::write(dir.join("v.json"), spec).unwrap();
    fs::write(dir.join("t.json"), "[[0,1,2],[1,0,1],[2,1,0]]").unwrap();
    let f = dir.join("v.json");
    let t = format!("table:{}", dir.join("t.json").display());
    assert_eq!(ucvx(&["modulus", "--fn", f.to_str().unwrap(), "--eps", "2", "--metric", &t, "--report", out.to_str().unwrap()]), 0);
    assert_eq!(read_json(&out)["result"]["delta"], 1.0);
    let p = format!("pullback:{}", f.display());
    assert_eq!(ucvx(&["tree", "--fn", f.to_str().unwrap(), "--eps", "0.5", "--metric", &p, "--report", out.to_str().unwrap()]), 0);
    // The only midpoint pair joins two points with equal values.
    assert_eq!(read_json(&out)["search"]["height"], 0);
    assert_eq!(ucvx(&["modulus", "--fn", f.to_str().unwrap(), "--eps", "1", "--metric", "cosine"]), 4);
}

#[test]
fn envelope_and_transforms_write_specs() {
    let dir = scratch("envelope");
    let report = dir.join("e.json");
    let env = dir.join("env.json");
    assert_eq!(ucvx(&["envelope", "--fn", "fixture:ex26-unit", "--at", "0", "--eps", "0.5", "--out", env.to_str().unwrap(), "--report", report.to_str().unwrap()]), 0);
    let r = read_json(&report);
    let (local, global) = (r["local"]["local_value"].as_f64().unwrap(), r["local"]["global_value"].as_f64().unwrap());
    assert!((local - global).abs() < 1e-9 && global < 0.01);
    assert!(r["envelope_convexity_gap"].as_f64().unwrap() >= -1e-12);
    let out = dir.join("x.json");
    assert_eq!(ucvx(&["transform", "--fn", env.to_str().unwrap(), "--op", "inf-conv", "--with", "fixture:ex26-unit", "--out", out.to_str().unwrap()]), 0);
    let spec = read_json(&out);
    assert_eq!(spec["domain"]["shape"][0], 257);
    assert_eq!(ucvx(&["transform", "--fn", "fixture:interval", "--op", "lipschitz"]), 4);
}

#[test]
fn dentability_and_dc_reports() {
    let dir = scratch("dent");
    let report = dir.join("d.json");
    assert_eq!(ucvx(&["dent", "--fn", "fixture:interval", "--eps", "0.3", "--dict", "axes", "--uc", "prose", "--report", report.to_str().unwrap()]), 0);
    let r = read_json(&report);
    assert_eq!(r["dz"], 2);
    assert_eq!(r["stage_sizes"], serde_json::json!([65, 25, 0]));
    assert!(r["uc"]["summary"]["delta"].as_f64().unwrap() > 0.0);
    let dc = dir.join("dc.json");
    assert_eq!(ucvx(&["dc-approx", "--fn", "fixture:ex26-unit", "--eps", "0.2", "--dict", "axes", "--report", dc.to_str().unwrap()]), 0);
    assert!(read_json(&dc)["report"]["err"].as_f64().unwrap() <= 0.2);
}

#[test]
fn reproduce_single_criterion() {
    let dir = scratch("reproduce");
    let report = dir.join("a7.json");
    assert_eq!(ucvx(&["reproduce", "--criterion", "a7", "--report", report.to_str().unwrap()]), 0);
    let r = read_json(&report);
    assert_eq!(r["criteria"][0]["id"], "A7");
    assert_eq!(r["criteria"][0]["pass"], true);
    assert_eq!(ucvx(&["reproduce"]), 4);
}

#[test]
fn binary_runs() {
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_ucvx")).args(["reproduce", "--list"]).output().unwrap();
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["catalog"].as_array().unwrap().iter().any(|f| f["id"] == "ex26"));
    let bad = std::process::Command::new(env!("CARGO_BIN_EXE_ucvx")).arg("--nope").output().unwrap();
    assert_eq!(bad.status.code(), Some(4));
}
