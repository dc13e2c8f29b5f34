use std::process::{Command, Output};

use gaussian_qi::qkd::{key_rate, Detection, QkdScenario, Reconciliation, SourceStates};
use gaussian_qi::LogBase;
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gaussian-qi")).args(args).output().expect("binary runs")
}

fn json_of(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn qkd_rate_matches_library_bitwise() {
    let v = json_of(&[
        "qkd", "rate", "--states", "coherent", "--detection", "homodyne", "--rec", "reverse", "--V", "20", "--tau", "0.5",
        "--chi", "0.05", "--beta", "1",
    ]);
    let s = QkdScenario::new(SourceStates::Coherent, Detection::Homodyne, Reconciliation::Reverse, 20.0, 0.5, 0.05).unwrap();
    let r = key_rate(&s, LogBase::Two).unwrap();
    assert_eq!(v["I_ab"].as_f64().unwrap(), r.i_ab);
    assert_eq!(v["S_eve"].as_f64().unwrap(), r.s_eve);
    assert_eq!(v["K"].as_f64().unwrap(), r.k);

    let e = json_of(&["--log-base", "e", "qkd", "rate", "--V", "20", "--tau", "0.5", "--chi", "0.05"]);
    let re = key_rate(&s, LogBase::E).unwrap();
    assert_eq!(e["K"].as_f64().unwrap(), re.k);
    assert!((re.k / r.k - std::f64::consts::LN_2).abs() < 1e-12);
}

#[test]
fn scenario_json_input() {
    let doc = r#"{"hbar":2,"states":"coherent","detection":"homodyne","reconciliation":"reverse","V":20,"tau":0.5,"chi":0.05}"#;
    let a = json_of(&["qkd", "rate", "--json", doc]);
    let b = json_of(&["qkd", "rate", "--V", "20", "--tau", "0.5", "--chi", "0.05"]);
    assert_eq!(a["K"], b["K"]);
}

#[test]
fn channel_classify_a1() {
    let v = json_of(&["channel", "classify", "--json", r#"{"T":[[0,0],[0,0]],"N":[[3,0],[0,3]],"d":[0,0]}"#]);
    assert_eq!(v["class"], "A1");
    assert_eq!(v["n_bar"].as_f64().unwrap(), 1.0);
}

#[test]
fn clone_fidelities() {
    let v = json_of(&["protocol", "clone", "--input", "coherent", "--alpha", "1,0"]);
    assert_eq!(format!("{:.4}", v["f_clone"].as_f64().unwrap()), "0.6667");
    assert_eq!(format!("{:.4}", v["f_anticlone"].as_f64().unwrap()), "0.5000");
}

#[test]
fn hbar_override_rejected() {
    let o = run(&["--hbar", "1", "state", "make", "--kind", "vacuum"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("hbar"));
    assert!(o.stdout.is_empty());
    assert!(run(&["--hbar", "2", "state", "make", "--kind", "vacuum"]).status.success());
}

#[test]
fn malformed_input_names_field() {
    let o = run(&["channel", "classify", "--json", r#"{"T":[[1,0],[0,1]]}"#]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`N`"), "{}", stderr(&o));
    let o = run(&["qkd", "rate", "--V", "0.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("V must"));
    let o = run(&["state", "make", "--kind", "thermal", "--n-bar", "-1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("n_bar"));
    let o = run(&["--log-base", "10", "state", "make", "--kind", "vacuum"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["state", "validate", "--json", r#"{"mean":[0,0],"cov":[[0.5,0],[0,0.5]]}"#]);
    assert_eq!(o.status.code(), Some(2));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["uncertainty_ok"], false);
}

#[test]
fn csv_sweep_is_versioned_and_ordered() {
    let o = run(&["--csv", "qkd", "rate", "--tau", "0.2,0.4,0.6", "--chi", "0,0.05", "--V", "40"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), format!("# gaussian-qi v{}", env!("CARGO_PKG_VERSION")));
    assert_eq!(lines.next().unwrap(), "tau,chi,V,beta,I_ab,S_eve,K");
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 6);
    let grid: Vec<(f64, f64)> = rows.iter().map(|r| (r[0], r[1])).collect();
    assert_eq!(grid, vec![(0.2, 0.0), (0.2, 0.05), (0.4, 0.0), (0.4, 0.05), (0.6, 0.0), (0.6, 0.05)]);
    for r in &rows {
        let s = QkdScenario::new(SourceStates::Coherent, Detection::Homodyne, Reconciliation::Reverse, r[2], r[0], r[1]).unwrap();
        assert_eq!(key_rate(&s, LogBase::Two).unwrap().k, r[6]);
    }
}

#[test]
fn seed_makes_sampling_deterministic() {
    let st = serde_json::to_string(&json_of(&["state", "make", "--kind", "epr", "--r", "0.6"])).unwrap();
    let draw = |seed: &str| json_of(&["--seed", seed, "measure", "--json", &st, "--kind", "heterodyne"])["outcome"].clone();
    assert_eq!(draw("5"), draw("5"));
    assert_ne!(draw("5"), draw("6"));
    let c = |seed: &str| {
        json_of(&["--seed", seed, "cluster", "measure", "--line", "4", "--vertex", "1,2", "--basis", "q,p"])["outcomes"].clone()
    };
    assert_eq!(c("9"), c("9"));
}

#[test]
fn cluster_subcommands() {
    let v = json_of(&["cluster", "nullifiers", "--line", "5", "--r", "1"]);
    for x in v.as_array().unwrap() {
        assert!((x.as_f64().unwrap() - 0.135_335_283_236_612_7).abs() < 1e-12);
    }
    let g = r#"{"vertices":[{"r":2},{"r":2},{"r":2}],"edges":[[0,1,1],[1,2,1]]}"#;
    let m = json_of(&["cluster", "measure", "--json", g, "--vertex", "1", "--basis", "p", "--outcome", "0.3"]);
    assert_eq!(m["graph"]["edges"], serde_json::json!([[0, 1, 1.0]]));
    assert_eq!(m["labels"], serde_json::json!([0, 2]));
    let b = json_of(&["cluster", "build", "--lattice", "2,2", "--r", "0.5"]);
    assert_eq!(b["state"]["hbar"].as_f64().unwrap(), 2.0);
    let o = run(&["cluster", "measure", "--line", "3", "--vertex", "7", "--basis", "q"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn oracle_compare_agrees() {
    let v = json_of(&["oracle", "compare", "--a", "coherent:0.5,0", "--b", "squeezed:0.3", "--s", "0.25,0.5"]);
    let f = &v["fidelity"];
    assert!((f["phase_space"].as_f64().unwrap() - f["oracle"].as_f64().unwrap()).abs() < 1e-6);
    for c in v["cs"].as_array().unwrap() {
        assert!((c["phase_space"].as_f64().unwrap() - c["oracle"].as_f64().unwrap()).abs() < 1e-6);
    }
}

#[test]
fn state_and_protocol_roundtrips() {
    let st = serde_json::to_string(&json_of(&["state", "make", "--kind", "squeezed", "--r", "0.4"])).unwrap();
    let e = json_of(&["state", "entropy", "--json", &st]);
    assert_eq!(e["pure"], true);
    let rot = json_of(&["unitary", "apply", "--json", &st, "--gate", "rotation", "--param", "-0.3"]);
    assert_eq!(rot["hbar"].as_f64().unwrap(), 2.0);
    let t = json_of(&["protocol", "teleport", "--r", "0"]);
    assert_eq!(t["fidelity"].as_f64().unwrap(), 0.5);
    assert_eq!(t["band"], "Classical");
    let s = json_of(&["--log-base", "e", "protocol", "swap", "--r-a", "1", "--r-b", "1"]);
    assert!((s["log_negativity"].as_f64().unwrap() - 2f64.cosh().ln()).abs() < 1e-9);
    let epr = serde_json::to_string(&json_of(&["state", "make", "--kind", "epr", "--r", "0.5"])).unwrap();
    let ent = json_of(&["entangle", "test", "--json", &epr, "--split", "1"]);
    assert_eq!(ent["entangled"], true);
    let d = json_of(&["discriminate", "receivers", "--alpha2", "0.1,1"]);
    assert_eq!(d.as_array().unwrap().len(), 2);
}
