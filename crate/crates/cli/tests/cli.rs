use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use minphase::operator::OperatorModel;
use minphase::{Complex64 as C, Config};
use serde_json::Value;
use tempfile::TempDir;

const DT: f64 = 1.0 / 64.0;
const T_MAX: f64 = 30.0;

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Workspace {
        let ws = Workspace { dir: tempfile::tempdir().unwrap() };
        ws.write(
            "config.json",
            r#"{"dt": 0.015625, "t_max": 30.0, "n_freq": 4097, "y_max": 128.0, "n_circle": 1024}"#,
        );
        ws
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn write(&self, name: &str, text: &str) -> PathBuf {
        let p = self.path(name);
        fs::write(&p, text).unwrap();
        p
    }

    /// Writes `f` sampled on the test grid, shifted right by `shift` seconds.
    fn signal(&self, name: &str, shift: f64, f: impl Fn(f64) -> f64) -> PathBuf {
        let n = (T_MAX / DT).round() as usize + 1;
        let mut text = String::from("t,re,im\n");
        for k in 0..n {
            let t = k as f64 * DT;
            let v = if t + 1e-12 < shift { 0.0 } else { f(t - shift) };
            text.push_str(&format!("{t},{v},0\n"));
        }
        self.write(name, &text)
    }

    fn run(&self, args: &[&str]) -> Output {
        let cfg = self.path("config.json");
        Command::new(env!("CARGO_BIN_EXE_minphase"))
            .arg("--config")
            .arg(&cfg)
            .args(args)
            .output()
            .unwrap()
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn sigma0(t: f64) -> f64 {
    (-t).exp() * (1.0 - t)
}

fn sigma1(t: f64) -> f64 {
    t * (-t).exp()
}

fn read_values(text: &[u8]) -> Vec<f64> {
    minphase::signal::CausalSignal::read_csv(text).unwrap().values().iter().map(|v| v.re).collect()
}

#[test]
fn classify_reports_the_phase_class() {
    let ws = Workspace::new();
    let rho0 = |t: f64| 2f64.sqrt() * (-t).exp();
    let exp = ws.signal("rho0.csv", 0.0, rho0);
    let out = ws.run(&["classify", s(&exp)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&out)["class"], "minimum_phase");

    let delayed = ws.signal("delayed.csv", 1.0, rho0);
    let v = json(&ws.run(&["classify", s(&delayed)]));
    assert_eq!(v["class"], "translated_minimum_phase");
    assert!((v["tau"].as_f64().unwrap() - 1.0).abs() <= DT + 1e-3);

    let rho1 = ws.signal("rho1.csv", 0.0, |t| (-t).exp() * (2.0 * t - 1.0));
    assert_eq!(json(&ws.run(&["classify", s(&rho1)]))["class"], "other");
}

#[test]
fn malformed_inputs_exit_with_code_2() {
    let ws = Workspace::new();
    let empty = ws.write("empty.csv", "");
    assert_eq!(code(&ws.run(&["classify", s(&empty)])), 2);
    assert_eq!(code(&ws.run(&["classify", s(&ws.path("missing.csv"))])), 2);

    let r0 = ws.signal("r0.csv", 0.0, sigma0);
    assert_eq!(code(&ws.run(&["identify", s(&r0)])), 2);

    let corrupt = ws.write("op.json", "{\"form\": \"half_plane\", \"alpha\":");
    assert_eq!(code(&ws.run(&["apply", s(&corrupt), s(&r0)])), 2);

    ws.write("config.json", r#"{"dt": 0.015625, "n_frequencies": 10}"#);
    assert_eq!(code(&ws.run(&["classify", s(&r0)])), 2);
}

#[test]
fn identify_then_apply() {
    let ws = Workspace::new();
    let r0 = ws.signal("r0.csv", 0.0, sigma0);
    let r1 = ws.signal("r1.csv", 0.0, sigma1);
    let op_path = ws.path("identity.json");
    let diag_path = ws.path("diag.json");
    let out = ws.run(&["--out", s(&op_path), "identify", s(&r0), s(&r1), "--diagnostics", s(&diag_path)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let op = OperatorModel::from_json(&fs::read_to_string(&op_path).unwrap()).unwrap();
    let cfg = Config::from_json(&fs::read_to_string(ws.path("config.json")).unwrap()).unwrap();
    let kappa = op.kappa_boundary(&cfg).unwrap();
    assert!(kappa.values().iter().all(|k| (k - C::new(1.0, 0.0)).norm() < 1e-4));
    let diag: Value = serde_json::from_str(&fs::read_to_string(&diag_path).unwrap()).unwrap();
    assert_eq!(diag["diagnostics"]["epsilon"], 0.0);

    let f = ws.signal("f.csv", 0.0, |t| (-2.0 * t).exp());
    let out = ws.run(&["apply", s(&op_path), s(&f)]);
    assert_eq!(code(&out), 0);
    let got = read_values(&out.stdout);
    let want = read_values(&fs::read(&f).unwrap());
    let err = got.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err < 1e-3, "{err}");
}

#[test]
fn identify_a_delay() {
    let ws = Workspace::new();
    let r0 = ws.signal("r0.csv", 1.0, sigma0);
    let r1 = ws.signal("r1.csv", 1.0, sigma1);
    let op_path = ws.path("delay.json");
    let out = ws.run(&["--out", s(&op_path), "identify", s(&r0), s(&r1)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let diag: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!((diag["diagnostics"]["epsilon"].as_f64().unwrap() - 1.0).abs() <= DT);

    let f = ws.signal("f.csv", 0.0, sigma1);
    let out = ws.run(&["apply", s(&op_path), s(&f)]);
    let got = read_values(&out.stdout);
    let want = read_values(&fs::read(ws.signal("g.csv", 1.0, sigma1)).unwrap());
    let err = got.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err < 1e-2, "{err}");

    let plain = ws.run(&["--out", s(&ws.path("plain.json")), "identify", s(&r0), s(&r1), "--mode", "plain"]);
    assert_eq!(code(&plain), 1);
}

#[test]
fn synth_validates_the_operator() {
    let ws = Workspace::new();
    let one = r#"{"kind":"rational","data":{"num":[[1,0]],"den":[[1,0]]}}"#;
    let half = r#"{"kind":"rational","data":{"num":[[0,0],[0.5,0]],"den":[[1,0]]}}"#;
    let double = r#"{"kind":"rational","data":{"num":[[0,0],[2,0]],"den":[[1,0]]}}"#;

    let out = ws.run(&["synth", "--psi", one, "--phi", half]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&out)["validation"]["preservation"], "verified");

    let psi_file = ws.write("psi.json", one);
    let out = ws.run(&["synth", "--psi", s(&psi_file), "--phi", double]);
    assert_eq!(code(&out), 1);
    assert_eq!(json(&out)["validation"]["self_map_ok"], false);

    assert_eq!(code(&ws.run(&["synth", "--psi", "{not json", "--phi", half])), 2);
}

#[test]
fn apply_through_the_disk_route() {
    let ws = Workspace::new();
    let one = r#"{"kind":"rational","data":{"num":[[1,0]],"den":[[1,0]]}}"#;
    let id = r#"{"kind":"rational","data":{"num":[[0,0],[1,0]],"den":[[1,0]]}}"#;
    let op_path = ws.path("id.json");
    assert_eq!(code(&ws.run(&["--out", s(&op_path), "synth", "--psi", one, "--phi", id])), 0);
    let f = ws.signal("f.csv", 0.0, sigma1);
    let out = ws.run(&["apply", s(&op_path), s(&f), "--disk-route"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let got = read_values(&out.stdout);
    let want = read_values(&fs::read(&f).unwrap());
    assert!(got.iter().zip(&want).all(|(a, b)| (a - b).abs() < 1e-4));
}

#[test]
fn experiment_tables() {
    let ws = Workspace::new();
    let empty = ws.write("empty.json", r#"{"operators": []}"#);
    let out = ws.run(&["experiment", s(&empty)]);
    assert_eq!(code(&out), 0);
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        "operator,probe_set,signal,rel_error,xi_error,kappa_error,epsilon,failure\n"
    );

    let bad = ws.write(
        "bad.json",
        r#"{"operators": [{"name": "bad", "psi": {"kind":"samples","data":{"values":[]}},
            "phi": {"kind":"rational","data":{"num":[[0,0],[1,0]],"den":[[1,0]]}}}]}"#,
    );
    let out = ws.run(&["experiment", s(&bad)]);
    assert_eq!(code(&out), 1);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.lines().nth(1).unwrap().starts_with("bad,"));

    let unknown = ws.write("unknown.json", r#"{"members": []}"#);
    assert_eq!(code(&ws.run(&["experiment", s(&unknown)])), 2);
}

#[test]
fn output_is_deterministic() {
    let ws = Workspace::new();
    let r0 = ws.signal("r0.csv", 0.5, sigma0);
    let r1 = ws.signal("r1.csv", 0.5, sigma1);
    let a = ws.run(&["identify", s(&r0), s(&r1)]);
    let b = ws.run(&["identify", s(&r0), s(&r1)]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stderr, b.stderr);
}

#[test]
fn factor_writes_the_factors() {
    let ws = Workspace::new();
    let f = ws.signal("f.csv", 0.5, |t| (-2.0 * t).exp());
    let (outer, inner) = (ws.path("outer.csv"), ws.path("inner.csv"));
    let out = ws.run(&["factor", s(&f), "--outer", s(&outer), "--inner", s(&inner)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!((json(&out)["tau"].as_f64().unwrap() - 0.5).abs() <= DT + 1e-3);

    // The inner factor is unimodular.
    let text = fs::read_to_string(&inner).unwrap();
    assert!(text.starts_with("#domain="));
    let out = ws.run(&["factor", s(&inner)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(json(&out)["inner_modulus_deviation"].as_f64().unwrap() < 1e-6);
    assert!(fs::read_to_string(&outer).unwrap().lines().count() > 1024);
}

#[test]
fn usage_errors() {
    let ws = Workspace::new();
    assert_eq!(code(&ws.run(&[])), 2);
    assert_eq!(code(&ws.run(&["identify", "a", "b", "--probe-set", "delta"])), 2);
    assert_eq!(code(&ws.run(&["--help"])), 0);
}
