use std::path::{Path, PathBuf};
use std::process::Command;

use operaq::channels::json::ChannelJson;
use operaq::channels::{KrausSet, QuantumChannel};
use operaq::ideals::IdealSpec;
use operaq::linalg::ComplexMatrix;
use operaq::operad::{AssignmentJson, InterpretationJson};
use serde_json::{json, Value};
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_operaq"));
    c.env("OPERAQ_LOG", "quiet");
    c
}

fn write(dir: &TempDir, name: &str, v: &Value) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn run(args: &[&str], inputs: &[&Path]) -> (i32, String) {
    let mut c = bin();
    c.args(args);
    for p in inputs {
        c.arg("--in").arg(p);
    }
    let out = c.output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap())
}

fn report(text: &str) -> Value {
    serde_json::from_str(text).unwrap()
}

fn channel_json(ch: &QuantumChannel) -> Value {
    serde_json::to_value(ChannelJson::from_choi(ch)).unwrap()
}

fn amp_damp(g: f64) -> QuantumChannel {
    let ks = KrausSet::new(vec![
        ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, (1.0 - g).sqrt()]]),
        ComplexMatrix::from_real_rows(&[&[0.0, g.sqrt()], &[0.0, 0.0]]),
    ])
    .unwrap();
    QuantumChannel::from_kraus(&ks).unwrap()
}

fn interp_json() -> Value {
    let interp = InterpretationJson {
        carrier: 2,
        spec: None,
        maps: vec![
            AssignmentJson {
                name: "damp".into(),
                inputs: None,
                channel: ChannelJson::from_choi(&amp_damp(0.3)),
            },
            AssignmentJson {
                name: "dep".into(),
                inputs: None,
                channel: ChannelJson::from_choi(&QuantumChannel::completely_depolarizing(2, 2)),
            },
        ],
    };
    serde_json::to_value(interp).unwrap()
}

#[test]
fn check_cp_identity_and_transpose() {
    let dir = TempDir::new().unwrap();
    let id = write(&dir, "id.json", &channel_json(&QuantumChannel::identity(2)));
    let (code, out) = run(&["--command", "check-cp", "--seed", "0"], &[&id]);
    assert_eq!(code, 0);
    let r = report(&out);
    assert_eq!(r["schema"], "operaq/1");
    assert_eq!(r["report"]["cp"], true);
    assert!(r["report"]["min_eig"].as_f64().unwrap().abs() < 1e-12);

    let t = write(&dir, "t.json", &channel_json(&QuantumChannel::transpose_map(2)));
    let (code, out) = run(&["--command", "check-cp", "--seed", "0"], &[&t]);
    assert_eq!(code, 1);
    assert!((report(&out)["report"]["min_eig"].as_f64().unwrap() + 1.0).abs() < 1e-10);
}

#[test]
fn schema_tag_rules() {
    let dir = TempDir::new().unwrap();
    let mut v = channel_json(&QuantumChannel::identity(2));
    v["schema"] = json!("operaq/1");
    let tagged = write(&dir, "tagged.json", &v);
    assert_eq!(run(&["--command", "check-tp", "--seed", "0"], &[&tagged]).0, 0);
    v["schema"] = json!("operaq/2");
    let wrong = write(&dir, "wrong.json", &v);
    let (code, out) = run(&["--command", "check-tp", "--seed", "0"], &[&wrong]);
    assert_eq!(code, 2);
    assert!(report(&out)["error"].as_str().unwrap().contains("operaq/2"));
}

#[test]
fn input_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\n  \"in_dim\": 2,\n  oops\n}").unwrap();
    let (code, out) = run(&["--command", "choi", "--seed", "0"], &[&bad]);
    assert_eq!(code, 2);
    assert!(report(&out)["error"].as_str().unwrap().contains("line 3"));

    let missing = write(&dir, "m.json", &json!({"in_dim": 2, "out_dim": 2, "repr": "choi"}));
    let (code, out) = run(&["--command", "choi", "--seed", "0"], &[&missing]);
    assert_eq!(code, 2);
    assert!(report(&out)["error"].as_str().unwrap().contains("data"));

    let (code, _) = run(&["--command", "choi", "--seed", "0"], &[]);
    assert_eq!(code, 2);
    // the seed is mandatory
    let out = bin().args(["--command", "operad-laws"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reports_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let s = bin()
            .args(["--command", "monad-laws", "--seed", "17", "--param", "trials=50", "--out"])
            .arg(p)
            .status()
            .unwrap();
        assert_eq!(s.code(), Some(0));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn channel_pipeline() {
    let dir = TempDir::new().unwrap();
    let ch = write(&dir, "ad.json", &channel_json(&amp_damp(0.4)));
    for cmd in ["kraus", "dilate", "minimal", "zigzag", "nadjoint", "circuit-realize", "check-tp"] {
        let (code, out) = run(&["--command", cmd, "--seed", "1"], &[&ch]);
        assert_eq!(code, 0, "{cmd}: {out}");
    }
    let (_, out) = run(&["--command", "kraus", "--seed", "1"], &[&ch]);
    assert_eq!(report(&out)["report"]["kraus_rank"], 2);
    let (code, out) = run(&["--command", "intertwine", "--seed", "1"], &[&ch, &ch]);
    assert_eq!(code, 0, "{out}");
}

#[test]
fn feedback_ill_posed() {
    let dir = TempDir::new().unwrap();
    let system = json!({
        "input_dims": [2],
        "output_dim": 2,
        "field": "real",
        "matrix": {"rows": 2, "cols": 2, "data": [[1, 0], [0, 0], [0, 0], [1, 0]]}
    });
    let p = write(
        &dir,
        "fb.json",
        &json!({"system": system, "input_ports": [1, 1], "output_ports": [1, 1], "feed_from": 0, "feed_into": 0}),
    );
    let (code, out) = run(&["--command", "feedback", "--seed", "0"], &[&p]);
    assert_eq!(code, 1, "{out}");
    assert_eq!(report(&out)["report"]["well_posed"], false);
}

#[test]
fn operad_side_commands() {
    let dir = TempDir::new().unwrap();
    let interp = write(&dir, "i.json", &interp_json());
    let term = write(
        &dir,
        "t.json",
        &json!({"term": {"op": "damp", "args": [{"op": "dep", "args": [{"slot": 0}]}]},
                "args": [{"rows": 2, "cols": 2, "data": [[1, 0], [0, 0], [0, 0], [0, 0]]}]}),
    );
    let (code, out) = run(&["--command", "term-eval", "--seed", "0"], &[&interp, &term]);
    assert_eq!(code, 0, "{out}");
    assert_eq!(run(&["--command", "algebra-laws", "--seed", "0", "--param", "trials=10"], &[&interp]).0, 0);
    let a = write(&dir, "a.json", &channel_json(&amp_damp(0.3)));
    let b = write(&dir, "b.json", &channel_json(&QuantumChannel::identity(2)));
    let (code, out) = run(&["--command", "opequiv", "--seed", "0"], &[&a, &b, &interp]);
    assert_eq!(code, 1);
    assert!(report(&out)["report"]["witness"].is_object());
    assert_eq!(run(&["--command", "opequiv", "--seed", "0"], &[&a, &a, &interp]).0, 0);
    let f = write(&dir, "f.json", &channel_json(&QuantumChannel::identity(2)));
    assert_eq!(run(&["--command", "homcheck", "--seed", "0"], &[&interp, &interp, &f]).0, 0);
}

#[test]
fn ideal_commands() {
    let dir = TempDir::new().unwrap();
    let ni = write(&dir, "ni.json", &serde_json::to_value(IdealSpec::non_isometric()).unwrap());
    let dep = write(&dir, "dep.json", &channel_json(&QuantumChannel::completely_depolarizing(2, 2)));
    let id = write(&dir, "id.json", &channel_json(&QuantumChannel::identity(2)));
    assert_eq!(run(&["--command", "ideal-member", "--seed", "0"], &[&ni, &dep]).0, 0);
    assert_eq!(run(&["--command", "ideal-member", "--seed", "0"], &[&ni, &id]).0, 1);
    let (code, out) = run(&["--command", "ideal-closure", "--seed", "0", "--param", "trials=100"], &[&ni]);
    assert_eq!(code, 0, "{out}");
    assert_eq!(report(&out)["report"]["closure"]["violations"], 0);

    let interp = write(&dir, "i.json", &interp_json());
    let term = write(
        &dir,
        "t.json",
        &json!({"term": {"op": "Clone_H", "args": [{"op": "dep", "args": [{"slot": 0}]}]}, "adjoin": [{"Clone": 2}]}),
    );
    let (code, out) = run(&["--command", "quotient", "--seed", "0"], &[&interp, &ni, &term]);
    assert_eq!(code, 0, "{out}");
    let q = &report(&out)["report"]["quotient"];
    assert_eq!(q["op"], "Clone_H");
    assert!(q["args"][0]["bottom"].is_object());

    let (code, out) = run(&["--command", "clone-match", "--seed", "0"], &[&interp, &term]);
    assert_eq!(code, 0);
    assert_eq!(report(&out)["report"]["uninterpretable"], true);
}

#[test]
fn nogo_broadcast_is_not_certified() {
    let (code, out) = run(&["--command", "nogo-broadcast", "--seed", "3"], &[]);
    let r = report(&out);
    assert_eq!(code, 1);
    assert_eq!(r["report"]["certified"], false);
    assert!(r["report"]["min_residual"].as_f64().unwrap() < 1e-10);
    assert!(r["report"]["verdict"].as_str().unwrap().starts_with("not certified"));
    let (code, _) = run(&["--command", "nogo-broadcast", "--seed", "3", "--param", "d=1"], &[]);
    assert_eq!(code, 2);
}

#[test]
fn adjoint_of_hadamard_product() {
    let dir = TempDir::new().unwrap();
    let data: Vec<Value> = (0..8).map(|k| json!([if k == 0 || k == 7 { 1 } else { 0 }, 0])).collect();
    let phi = write(
        &dir,
        "phi.json",
        &json!({"input_dims": [2, 2], "output_dim": 2, "field": "real",
                "matrix": {"rows": 2, "cols": 4, "data": data}}),
    );
    let (code, out) = run(&["--command", "adjoint", "--seed", "0"], &[&phi]);
    assert_eq!(code, 0, "{out}");
    let r = report(&out);
    assert_eq!(r["report"]["double_adjoint_residual"], 0.0);
    assert!(r["report"]["defining_identity_residual"].as_f64().unwrap() < 1e-12);
}
