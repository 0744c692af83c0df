use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

use crnf::frames::{transport_frame, ExtendedFrame, FrameMotion};
use crnf::io;
use crnf::series::{Series, Vars};
use crnf::structure::AlmostCR;
use crnf::transform::{pushforward, Transform};
use crnf::Rational;

const QUADRIC: &str = r#"{"n": 1, "d": 1, "W": 6, "kind": "graph", "phi": ["z1*zb1"]}"#;
const REMARK: &str = r#"{"n": 1, "d": 1, "W": 12, "kind": "graph", "phi": ["z1*zb1 + u1*z1^4*zb1^4"]}"#;
const CRAFTED: &str = r#"{"n": 2, "d": 1, "W": 6, "kind": "lmap",
  "Lw": [["i*zb1 - 3*i*z2", "-i*zb2 + 3*i*z1"]]}"#;
const PERTURBED: &str = r#"{"n": 2, "d": 1, "W": 7, "kind": "graph",
  "phi": ["z1*zb1 + z2*zb2 + z1^2*zb1^2 + z1^2*zb2 + z2*zb1^2 + u1*z1*zb1"]}"#;

fn crnf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crnf")).args(args).env_remove("CRNF_MAX_WEIGHT").output().unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

#[test]
fn check_reports() {
    let dir = TempDir::new().unwrap();
    let out = crnf(&["check", s(&write(&dir, "q.json", QUADRIC))]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["integrable"], true);
    assert_eq!(v["levi_signature"], 0);
    assert_eq!(v["strongly_nondegenerate"], true);
    assert!(v.get("kernel_witness").is_none());

    let out = crnf(&["check", s(&write(&dir, "c.json", CRAFTED))]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["integrable"], false);
    assert_eq!(v["levi_signature"], 1);
    assert_eq!(v["strongly_nondegenerate"], false);
    let w = v["kernel_witness"].as_array().unwrap();
    assert_eq!(w[0], w[1]);

    let out = crnf(&["check", s(&write(&dir, "r.json", REMARK))]);
    assert_eq!(json(&out)["integrable"], true);

    let flat = r#"{"n": 1, "d": 1, "W": 6, "kind": "graph", "phi": ["0"]}"#;
    let out = crnf(&["check", s(&write(&dir, "f.json", flat))]);
    assert_eq!(code(&out), 2);
}

#[test]
fn parse_failures_exit_3() {
    let dir = TempDir::new().unwrap();
    let out = crnf(&["check", s(&write(&dir, "bad.json", "{\"n\": 1,\n \"d\": }"))]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    let bad_field = r#"{"n": 1, "d": 1, "W": 6, "kind": "graph", "phi": ["z1*zb1 + 0.5*z1^2*zb1^2"]}"#;
    let out = crnf(&["partial", s(&write(&dir, "b.json", bad_field))]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("phi[0]"));

    let out = crnf(&["check", "/nonexistent/structure.json"]);
    assert_eq!(code(&out), 3);
}

#[test]
fn quadric_intrinsic_is_identity() {
    let dir = TempDir::new().unwrap();
    let q = write(&dir, "q.json", QUADRIC);
    let out = crnf(&["intrinsic", s(&q), "--r", "0"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["mode"], "intrinsic");
    for part in ["f", "g"] {
        assert!(v["transform"][part].as_array().unwrap().iter().all(|x| x.as_array().unwrap().is_empty()));
    }
    assert!(v["residuals"].as_array().unwrap().iter().all(|r| r["zero"] == true));
    assert!(String::from_utf8_lossy(&out.stderr).contains("condition"));

    let framed = write(&dir, "f.json", r#"{"v": [["1"]], "vtrans": ["0", "0", "1"], "jet2": ["0", "0", "0"]}"#);
    let out2 = crnf(&["normalize", "--mode", "intrinsic", s(&q), "--frame", s(&framed)]);
    assert_eq!(out2.stdout, out.stdout);
}

#[test]
fn perturbed_quadric_extrinsic_to_file() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "p.json", PERTURBED);
    let dest = dir.path().join("out.json");
    let out = crnf(&["extrinsic", s(&p), "--r", "0", "--out", s(&dest), "--pretty"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&dest).unwrap()).unwrap();
    assert_eq!(v["phi"].as_array().unwrap().len(), 1);
    // Every φ term has both z and z̄ degree at least 1, and no (1,1)·u terms.
    for t in v["phi"][0].as_array().unwrap() {
        let (a, b, c) = (t["a"].as_array().unwrap(), t["b"].as_array().unwrap(), t["c"][0].as_u64().unwrap());
        let deg = |x: &Vec<Value>| x.iter().map(|e| e.as_u64().unwrap()).sum::<u64>();
        assert!(deg(a) > 0 && deg(b) > 0);
        assert!(!(deg(a) == 1 && deg(b) == 1 && c > 0));
    }
}

#[test]
fn not_strongly_nondegenerate_exit_4() {
    let dir = TempDir::new().unwrap();
    let c = write(&dir, "c.json", CRAFTED);
    let out = crnf(&["intrinsic", s(&c), "--r", "0"]);
    assert_eq!(code(&out), 4);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("weight 5"), "{err}");
    assert!(err.contains("kernel witness"), "{err}");
}

#[test]
fn preconditions_exit_5() {
    let dir = TempDir::new().unwrap();
    let q = write(&dir, "q.json", QUADRIC);
    // Full modes need a frame or an explicit r.
    assert_eq!(code(&crnf(&["extrinsic", s(&q)])), 5);
    assert_eq!(code(&crnf(&["intrinsic", s(&q), "--r", "0", "--weight", "3"])), 5);
    let fr = write(&dir, "f.json", r#"{"v": [["1"]], "vtrans": ["0", "0", "1"], "jet2": ["0", "0", "0"]}"#);
    assert_eq!(code(&crnf(&["partial", s(&q), "--frame", s(&fr)])), 5);
    assert_eq!(code(&crnf(&["intrinsic", s(&q), "--frame", s(&fr), "--r", "1"])), 5);
    // Weight cap, by flag and by environment.
    assert_eq!(code(&crnf(&["partial", s(&q), "--weight", "20"])), 5);
    assert_eq!(code(&crnf(&["partial", s(&q), "--max-weight", "5"])), 5);
    let out = Command::new(env!("CARGO_BIN_EXE_crnf")).args(["partial", s(&q)]).env("CRNF_MAX_WEIGHT", "4").output().unwrap();
    assert_eq!(code(&out), 5);
    let wide = r#"{"n": 1, "d": 2, "W": 6, "kind": "graph", "phi": ["z1*zb1", "0"]}"#;
    assert_eq!(code(&crnf(&["intrinsic", s(&write(&dir, "w.json", wide)), "--r", "0"])), 5);
    assert_eq!(code(&crnf(&["embed", s(&write(&dir, "w2.json", wide))])), 0);
}

#[test]
fn compare_self_and_remark_modes() {
    let dir = TempDir::new().unwrap();
    let r = write(&dir, "r.json", REMARK);
    let int = dir.path().join("int.json");
    let ext = dir.path().join("ext.json");
    assert_eq!(code(&crnf(&["intrinsic", s(&r), "--r", "0", "--out", s(&int)])), 0);
    assert_eq!(code(&crnf(&["extrinsic", s(&r), "--r", "0", "--out", s(&ext)])), 0);

    let same = crnf(&["compare", s(&int), s(&int)]);
    assert_eq!(code(&same), 0);
    let v = json(&same);
    assert_eq!(v["identical"], true);
    assert!(v["differences"].as_array().unwrap().is_empty());

    // Drop φ so that the two documents carry the same fields.
    let mut e: Value = serde_json::from_str(&std::fs::read_to_string(&ext).unwrap()).unwrap();
    e.as_object_mut().unwrap().remove("phi");
    let ext_l = write(&dir, "ext_l.json", &e.to_string());
    let diff = crnf(&["compare", s(&int), s(&ext_l)]);
    assert_eq!(code(&diff), 1);
    assert!(!json(&diff)["differences"].as_array().unwrap().is_empty());

    assert_eq!(code(&crnf(&["compare", s(&int), s(&ext)])), 5);
}

fn p(vars: Vars, text: &str) -> Series<Rational> {
    Series::parse(vars, i32::MAX / 4, text).unwrap()
}

#[test]
fn compare_confirms_invariance_under_pushforward() {
    let dir = TempDir::new().unwrap();
    let v = Vars::new(2, 1).unwrap();
    let st = AlmostCR::from_polynomials(
        v,
        6,
        vec![p(v, "z1*u1"), p(v, "i*z2*zb1"), p(v, "z2^2*zb1"), p(v, "u1*zb2 - z1*zb1")],
        vec![p(v, "i*zb1 + z2 + u1*zb1"), p(v, "i*zb2 - z1 + i*z1*zb1*zb2")],
    )
    .unwrap();
    let t = Transform::from_polynomials(
        6,
        vec![p(v, "z1*zb2 + 2*u1*z2"), p(v, "i*z1^2 + u1^2")],
        vec![p(v, "z1*zb1 + 3*u1^2 + z1^2*zb1^2")],
    )
    .unwrap();
    let s2 = pushforward(&st, &t).unwrap();
    let ef = ExtendedFrame::<Rational>::standard(2, 1);
    let ef2 = transport_frame(&ef, FrameMotion::Transform(&t)).unwrap();

    let a = write(&dir, "a.json", &io::to_json(&io::structure_to_doc(&st), false));
    let b = write(&dir, "b.json", &io::to_json(&io::structure_to_doc(&s2), false));
    let fa = write(&dir, "fa.json", &io::to_json(&io::frame_to_doc(&ef), false));
    let fb = write(&dir, "fb.json", &io::to_json(&io::frame_to_doc(&ef2), false));
    for mode in ["intrinsic", "extrinsic"] {
        let ra = dir.path().join(format!("ra_{mode}.json"));
        let rb = dir.path().join(format!("rb_{mode}.json"));
        assert_eq!(code(&crnf(&[mode, s(&a), "--frame", s(&fa), "--out", s(&ra)])), 0);
        assert_eq!(code(&crnf(&[mode, s(&b), "--frame", s(&fb), "--out", s(&rb)])), 0);
        let cmp = crnf(&["compare", s(&ra), s(&rb)]);
        assert_eq!(code(&cmp), 0, "{mode}: {}", String::from_utf8_lossy(&cmp.stdout));
    }
}

#[test]
fn embed_and_partial_accept_params() {
    let dir = TempDir::new().unwrap();
    let q = write(&dir, "q.json", PERTURBED);
    let params = write(&dir, "p.json", r#"{"f0": ["z1*z2", "u1^2"], "g0": ["u1^2"]}"#);
    for cmd in ["partial", "embed"] {
        let out = crnf(&[cmd, s(&q), "--params", s(&params)]);
        assert_eq!(code(&out), 0, "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
        let again = crnf(&[cmd, s(&q), "--params", s(&params)]);
        assert_eq!(out.stdout, again.stdout);
    }
    let bad = write(&dir, "bad.json", r#"{"f0": ["zb1^2", "0"]}"#);
    assert_eq!(code(&crnf(&["partial", s(&q), "--params", s(&bad)])), 5);
}
