use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn qsearch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qsearch"))
        .args(args)
        .env("QSEARCH_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

fn write_prior(dir: &TempDir, name: &str, weights: &str) -> String {
    let p = path(dir, name);
    fs::write(&p, format!("{{\"weights\": {weights}}}")).unwrap();
    p
}

#[test]
fn optimize_then_evaluate() {
    let dir = TempDir::new().unwrap();
    let prior = write_prior(&dir, "p.json", "[0.25, 0.25, 0.25, 0.25, 0, 0, 0, 0]");
    let plan = path(&dir, "plan.json");
    let out = qsearch(&["optimize", "--prior", &prior, "-t", "1", "--out", &plan]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let record: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&plan).unwrap()).unwrap();
    assert_eq!(record["t"], 1);
    assert!((record["esp"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert!(record["kkt_residual"].as_f64().unwrap() <= 1e-9);

    let out = qsearch(&["evaluate", "--prior", &prior, "--plan", &plan]);
    assert_eq!(code(&out), 0);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((report["value"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert_eq!(report["n"], 8);
}

#[test]
fn closed_form_solver_only_for_one_query() {
    let dir = TempDir::new().unwrap();
    let prior = write_prior(&dir, "p.json", "[0.5, 0.3, 0.2]");
    let plan = path(&dir, "plan.json");
    let ok = qsearch(&[
        "optimize",
        "--prior",
        &prior,
        "-t",
        "1",
        "--method",
        "closed-t1",
        "--out",
        &plan,
    ]);
    assert_eq!(code(&ok), 0);
    let bad = qsearch(&[
        "optimize",
        "--prior",
        &prior,
        "-t",
        "2",
        "--method",
        "closed-t1",
        "--out",
        &plan,
    ]);
    assert_eq!(code(&bad), 2);
}

#[test]
fn bad_inputs_exit_2() {
    let dir = TempDir::new().unwrap();
    let negative = write_prior(&dir, "neg.json", "[0.5, -0.1]");
    let plan = path(&dir, "plan.json");
    assert_eq!(
        code(&qsearch(&[
            "optimize", "--prior", &negative, "-t", "1", "--out", &plan
        ])),
        2
    );
    let missing = path(&dir, "missing.json");
    assert_eq!(
        code(&qsearch(&[
            "optimize", "--prior", &missing, "-t", "1", "--out", &plan
        ])),
        2
    );
    let out = path(&dir, "x.qasm");
    assert_eq!(
        code(&qsearch(&[
            "emit",
            "--sigma",
            "0.2",
            "--solution",
            "000",
            "--out",
            &out
        ])),
        2
    );
    assert_eq!(
        code(&qsearch(&[
            "emit",
            "--sigma",
            "0.01",
            "--solution",
            "0102",
            "--out",
            &out
        ])),
        2
    );
    assert_eq!(code(&qsearch(&["verify", "--trials", "0"])), 2);
}

#[test]
fn evaluate_rejects_mismatched_plan() {
    let dir = TempDir::new().unwrap();
    let prior = write_prior(&dir, "p.json", "[0.5, 0.5, 0.0]");
    let plan = path(&dir, "plan.json");
    fs::write(&plan, r#"{"t": 1, "q": [0.5, 0.5]}"#).unwrap();
    assert_eq!(
        code(&qsearch(&["evaluate", "--prior", &prior, "--plan", &plan])),
        2
    );
    fs::write(&plan, r#"{"t": 1, "q": [0.7, 0.7, 0.0]}"#).unwrap();
    assert_eq!(
        code(&qsearch(&["evaluate", "--prior", &prior, "--plan", &plan])),
        2
    );
}

#[test]
fn compare_naive_prior_rows() {
    let dir = TempDir::new().unwrap();
    let prior = write_prior(&dir, "p.json", "[0.25, 0.25, 0.25, 0.25, 0, 0, 0, 0]");
    let csv = path(&dir, "cmp.csv");
    let out = qsearch(&[
        "compare",
        "--prior",
        &prior,
        "--samples",
        "2",
        "--t-min",
        "1",
        "--t-max",
        "1",
        "--out",
        &csv,
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,method,mean_esp,std_esp,samples,seed"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 4);
    let value = |method: &str| -> f64 {
        rows.iter().find(|r| r[1] == method).unwrap()[2]
            .parse()
            .unwrap()
    };
    assert!((value("optimal") - 1.0).abs() < 1e-9);
    assert!((value("classical") - 0.25).abs() < 1e-12);
    assert!((value("grover-uniform") - 0.78125).abs() < 1e-9);
    for r in &rows {
        assert_eq!(r[4], "2");
        assert!(r[3].parse::<f64>().unwrap().abs() < 1e-12);
    }
}

#[test]
fn compare_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let a = path(&dir, "a.csv");
    let b = path(&dir, "b.csv");
    let args = |out: &str| {
        vec![
            "compare",
            "--n",
            "32",
            "--samples",
            "4",
            "--t-min",
            "1",
            "--t-max",
            "3",
            "--seed",
            "9",
            "--out",
        ]
        .into_iter()
        .map(String::from)
        .chain([out.to_string()])
        .collect::<Vec<_>>()
    };
    let run = |out: &str| {
        let owned = args(out);
        let refs: Vec<&str> = owned.iter().map(String::as_str).collect();
        assert_eq!(code(&qsearch(&refs)), 0);
    };
    run(&a);
    run(&b);
    let (ta, tb) = (
        fs::read_to_string(&a).unwrap(),
        fs::read_to_string(&b).unwrap(),
    );
    assert_eq!(ta, tb);
    assert_eq!(ta.lines().count(), 1 + 3 * 4);
}

#[test]
fn theta_table_csv() {
    let dir = TempDir::new().unwrap();
    let csv = path(&dir, "theta.csv");
    let out = qsearch(&["theta-table", "--out", &csv]);
    assert_eq!(code(&out), 0);
    let text = fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "sigma,theta,paper_theta,abs_diff");
    assert_eq!(lines.len(), 9);
    for line in &lines[1..] {
        let diff: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!(diff <= 1e-3, "{line}");
    }
}

#[test]
fn emit_writes_qasm() {
    let dir = TempDir::new().unwrap();
    let out_path = path(&dir, "c.qasm");
    let out = qsearch(&[
        "emit",
        "--sigma",
        "0.0125",
        "--solution",
        "101",
        "--out",
        &out_path,
    ]);
    assert_eq!(code(&out), 0);
    let text = fs::read_to_string(Path::new(&out_path)).unwrap();
    assert!(text.starts_with("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n"));
    assert!(text.contains("// solution 101"));
    assert!(text.contains("qreg q[3];"));
    assert_eq!(text.matches("ccx q[0],q[1],q[2];").count(), 2);
    assert!(text.trim_end().ends_with("measure q -> c;"));
}

#[test]
fn simulate_circuit_file() {
    let dir = TempDir::new().unwrap();
    let circuit = path(&dir, "c.json");
    fs::write(
        &circuit,
        r#"{"qubit_count": 2, "gates": [{"kind": "h", "target": 0}, {"kind": "x", "target": 1}]}"#,
    )
    .unwrap();
    let out = qsearch(&["simulate", "--circuit", &circuit]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let probs: Vec<f64> = serde_json::from_slice(&out.stdout).unwrap();
    let expected = [0.0, 0.0, 0.5, 0.5];
    for (a, b) in probs.iter().zip(expected) {
        assert!((a - b).abs() < 1e-12);
    }
    fs::write(
        &circuit,
        r#"{"qubit_count": 2, "gates": [{"kind": "h", "target": 5}]}"#,
    )
    .unwrap();
    assert_eq!(code(&qsearch(&["simulate", "--circuit", &circuit])), 2);
}

#[test]
fn verify_passes_and_detects_broken_oracle() {
    let ok = qsearch(&["verify", "--trials", "5", "--n-max", "16", "--t-max", "3"]);
    assert_eq!(code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stdout));
    let text = String::from_utf8_lossy(&ok.stdout);
    assert!(text.contains("oracle-equivalence"));
    assert!(!text.contains("FAIL"));

    let broken = qsearch(&["verify", "--trials", "5", "--invert-oracle"]);
    assert_eq!(code(&broken), 4);
    assert!(String::from_utf8_lossy(&broken.stderr).contains("FAIL"));
}
