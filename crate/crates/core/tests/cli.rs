use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use reflected_flow::functional::counterexample_parabola;
use reflected_flow::Orientation;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_reflected-flow"));
    c.env_remove("RBM_FLOW_OUT_DIR").env_remove("RBM_FLOW_THREADS");
    c
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

const COUNTER: &str = "kind = \"counterexample\"\ndomain = \"parabola(0.25)\"\nseed = 1\n";

#[test]
fn validate_reports_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "good.toml", COUNTER);
    assert_eq!(code(&bin().args(["validate"]).arg(&good).output().unwrap()), 0);

    let text = "kind = \"rbm-revuz\"\ndomain = \"ball(r=1)\"\nstep = -0.1\ntime_horizon = 1.0\n";
    let bad = write(dir.path(), "bad.toml", text);
    let out = bin().args(["validate"]).arg(&bad).output().unwrap();
    assert_eq!(code(&out), 1);
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("seed: missing master seed"), "{err}");
    assert!(err.contains("line 3: step"), "{err}");
}

#[test]
fn counterexample_table_matches_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", COUNTER);
    let out_dir = dir.path().join("out");
    let out = bin().arg("run").arg(&cfg).arg("--out").arg(&out_dir).output().unwrap();
    // the quarter-scale parabola contracts too slowly for the slope check
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
    let table = counterexample_parabola(&[4, 6, 8, 10, 12, 14, 16], 0.25, Orientation::AlongGradient).unwrap();
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(out_dir.join("counterexample.csv"))
        .unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), table.rows.len());
    for (row, expected) in rows.iter().zip(&table.rows) {
        assert_eq!(row[0].parse::<u32>().unwrap(), expected.j);
        assert_eq!(row[4].parse::<f64>().unwrap(), expected.norm);
    }
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["version"], reflected_flow::VERSION);
    assert_eq!(report["config_echo"]["domain"], "parabola(0.25)");
}

#[test]
fn zero_horizon_run_has_empty_skeleton() {
    let dir = tempfile::tempdir().unwrap();
    let text = "kind = \"rbm-revuz\"\ndomain = \"ball(r=1)\"\nseed = 4\nreplicas = 1\nstep = 1e-4\ntime_horizon = 0.0\n";
    let cfg = write(dir.path(), "r.toml", text);
    let out = bin().arg("run").arg(&cfg).arg("--out").arg(dir.path().join("o")).output().unwrap();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let skeleton = std::fs::read_to_string(dir.path().join("o/skeleton_0.csv")).unwrap();
    let body: Vec<&str> = skeleton.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(body, ["s,u,e0_1,e0_2,eend_1,eend_2,jump,ell"]);
}

#[test]
fn outputs_are_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let text = "kind = \"epsilon-ladder\"\ndomain = \"ball(r=1)\"\nseed = 9\nreplicas = 6\nstep = 1e-4\nlocal_time = 0.5\nj_min = 3\nj_max = 6\n";
    let cfg = write(dir.path(), "l.toml", text);
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let out = dir.path().join(format!("t{threads}"));
        let o = bin().arg("run").arg(&cfg).args(["--threads", threads]).arg("--out").arg(&out).output().unwrap();
        assert!(matches!(code(&o), 0 | 2), "{}", String::from_utf8_lossy(&o.stderr));
        let files = ["report.json", "ladder.csv", "ladder_median.csv"];
        outputs.push(files.map(|f| std::fs::read(out.join(f)).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn environment_and_flags_override_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{COUNTER}out_dir = \"{}\"\n", dir.path().join("from_config").display());
    let cfg = write(dir.path(), "c.toml", &text);
    let env_dir = dir.path().join("from_env");
    bin().arg("run").arg(&cfg).env("RBM_FLOW_OUT_DIR", &env_dir).output().unwrap();
    assert!(env_dir.join("report.json").exists());
    assert!(!dir.path().join("from_config").exists());

    let flag_dir = dir.path().join("from_flag");
    bin().arg("run").arg(&cfg).arg("--out").arg(&flag_dir).args(["--seed", "77"]).env("RBM_FLOW_OUT_DIR", &env_dir).output().unwrap();
    let report = std::fs::read_to_string(flag_dir.join("report.json")).unwrap();
    assert!(report.contains("\"seed\": 77"));

    bin().arg("run").arg(&cfg).output().unwrap();
    assert!(dir.path().join("from_config/report.json").exists());
}

#[test]
fn broken_config_is_a_hard_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "x.toml", "kind = \"nope\"\n");
    let out = bin().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(code(&out), 1);
}
