use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_multiplicity");

const PIPELINE: &str = r#"
[target]
E = [2, 3]
steps = 3
p_max = 2

[schedule]
singles = ["10"]
pairs = [["0", "0"], ["0", "10"]]
n_max = 5

[traces]
level = 1
A = [0]
B = [0, 1]
characters = [[], [0]]

[predict]
k = [1, 2]

[oracle]
queries_per_system = 20
"#;

struct Run {
    dir: TempDir,
}

impl Run {
    fn new(config: &str) -> Self {
        let dir = TempDir::new().unwrap();
        fs::write(dir.path().join("run.toml"), config).unwrap();
        Run { dir }
    }

    fn out(&self) -> PathBuf {
        self.dir.path().join("out")
    }

    fn cmd(&self, stage: &str, extra: &[&str]) -> Output {
        Command::new(BIN)
            .arg(stage)
            .arg("--config")
            .arg(self.dir.path().join("run.toml"))
            .arg("--out")
            .arg(self.out())
            .args(extra)
            .output()
            .unwrap()
    }

    fn json(&self, name: &str) -> Value {
        serde_json::from_str(&fs::read_to_string(self.out().join(name)).unwrap()).unwrap()
    }
}

fn error_of(out: &Output) -> Value {
    let line = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str::<Value>(line.trim()).unwrap()["error"].clone()
}

fn assert_exit(out: &Output, code: i32) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn e2() -> Run {
    Run::new("[target]\nE = [2]\nsteps = 2\np_max = 2\n")
}

#[test]
fn construct_writes_first_blocks() {
    let run = e2();
    assert_exit(&run.cmd("construct", &[]), 0);
    let blocks = run.json("blocks.json");
    assert_eq!(blocks["blocks"]["blocks"][0], serde_json::json!([1]));
    assert_eq!(blocks["blocks"]["blocks"][1], serde_json::json!([3]));
    assert_eq!(blocks["blocks"]["blocks"].as_array().unwrap().len(), 3);
    assert_eq!(blocks["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn trivial_target_is_rejected() {
    let run = Run::new("[target]\nE = [1]\nsteps = 2\np_max = 2\n");
    let out = run.cmd("construct", &[]);
    assert_exit(&out, 2);
    assert_eq!(error_of(&out)["code"], "E_TRIVIAL");
}

#[test]
fn missing_field_is_named() {
    let run = Run::new("[target]\nE = [2]\nsteps = 2\n");
    let out = run.cmd("construct", &[]);
    assert_exit(&out, 2);
    let err = error_of(&out);
    assert_eq!(err["code"], "E_CONFIG");
    assert!(err["message"].as_str().unwrap().contains("p_max"));
}

#[test]
fn unknown_field_is_rejected() {
    let run = Run::new("[target]\nE = [2]\nsteps = 2\np_max = 2\nextra = 1\n");
    assert_exit(&run.cmd("construct", &[]), 2);
}

#[test]
fn verify_lemma_passes() {
    let run = e2();
    assert_exit(&run.cmd("construct", &[]), 0);
    assert_exit(&run.cmd("verify-lemma", &[]), 0);
    let report = run.json("lemma_report.json");
    assert_eq!(report["pass"], true);
    assert!(report["lemma"]["entries"]
        .as_array()
        .unwrap()
        .iter()
        .all(|e| e["pass"] == true));
}

#[test]
fn mutated_blocks_fail_with_offender() {
    let run = e2();
    assert_exit(&run.cmd("construct", &[]), 0);
    let path = run.out().join("blocks.json");
    let mut blocks: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    blocks["blocks"]["blocks"][2] = serde_json::json!([8, 11]);
    fs::write(&path, serde_json::to_string_pretty(&blocks).unwrap()).unwrap();

    let out = run.cmd("verify-lemma", &[]);
    assert_exit(&out, 1);
    let status: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(status["status"], "fail");
    let failures = status["failures"].as_array().unwrap();
    assert!(failures.iter().any(|f| f.as_str().unwrap().starts_with("{8,11}")));
    let report = run.json("lemma_report.json");
    assert!(report["lemma"]["entries"]
        .as_array()
        .unwrap()
        .iter()
        .any(|e| e["pass"] == false && e["support"] == serde_json::json!([8, 11])));
}

#[test]
fn p_max_beyond_steps_is_precondition() {
    let run = Run::new("[target]\nE = [2]\nsteps = 2\np_max = 3\n");
    assert_exit(&run.cmd("construct", &[]), 0);
    let out = run.cmd("verify-lemma", &[]);
    assert_exit(&out, 2);
    assert_eq!(error_of(&out)["code"], "E_PRECONDITION");
}

#[test]
fn missing_input_exits_four() {
    let run = e2();
    let out = run.cmd("verify-lemma", &[]);
    assert_exit(&out, 4);
    assert_eq!(error_of(&out)["code"], "E_MISSING_INPUT");
}

#[test]
fn stale_input_exits_four() {
    let run = e2();
    assert_exit(&run.cmd("construct", &[]), 0);
    fs::write(
        run.dir.path().join("run.toml"),
        "[target]\nE = [2]\nsteps = 2\np_max = 1\n",
    )
    .unwrap();
    let out = run.cmd("verify-lemma", &[]);
    assert_exit(&out, 4);
    assert_eq!(error_of(&out)["code"], "E_STALE_INPUT");
}

#[test]
fn max_h_override_changes_hash() {
    let run = e2();
    assert_exit(&run.cmd("construct", &[]), 0);
    let out = run.cmd("verify-lemma", &["--max-h", "1000000"]);
    assert_exit(&out, 4);
    assert_eq!(error_of(&out)["code"], "E_STALE_INPUT");
}

#[test]
fn cap_exceeded_exits_three() {
    let run = Run::new("[target]\nE = [2]\nsteps = 9\np_max = 2\n[caps]\nmax_blocks = 50\n");
    let out = run.cmd("construct", &[]);
    assert_exit(&out, 3);
    assert_eq!(error_of(&out)["code"], "E_CAP");

    let run = Run::new(PIPELINE);
    let out = run.cmd("build-system", &["--max-h", "1000"]);
    assert_exit(&out, 3);
}

#[test]
fn zero_cap_is_config_error() {
    let run = Run::new("[target]\nE = [2]\nsteps = 2\np_max = 2\n[caps]\nmax_h = 0\n");
    assert_exit(&run.cmd("construct", &[]), 2);
}

#[test]
fn build_system_and_weak_limits() {
    let run = Run::new(PIPELINE);
    assert_exit(&run.cmd("weak-limits", &[]), 4);
    assert_exit(&run.cmd("build-system", &[]), 0);
    let report = run.json("system_report.json");
    assert_eq!(report["pass"], true);
    assert_eq!(report["validation"]["pass"], true);

    assert_exit(&run.cmd("weak-limits", &["--jobs", "2"]), 0);
    let csv = fs::read_to_string(run.out().join("traces.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# config_sha256="));
    assert_eq!(
        lines.next().unwrap(),
        "n,h_n,label,chi,achieved_lo,achieved_hi,predicted,err_bound"
    );
    let mut seen = 0;
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), 8);
        let n: u64 = cols[0].parse().unwrap();
        if cols[2] == "0:0" && cols[3] == "{}" && n >= 3 {
            let (p, q) = cols[7].split_once('/').unwrap_or((cols[7], "1"));
            let (p, q): (u128, u128) = (p.parse().unwrap(), q.parse().unwrap());
            assert!(p * n as u128 <= 6 * q, "row {line}");
            seen += 1;
        }
    }
    assert!(seen > 0);
    let premises = run.json("premises.json");
    assert_eq!(premises["pass"], true);
}

#[test]
fn predict_e5() {
    let run = Run::new("[target]\nE = [5]\nsteps = 1\np_max = 1\n[predict]\nk = [2]\n");
    assert_exit(&run.cmd("predict", &[]), 0);
    let p = run.json("prediction.json");
    assert_eq!(p["values"], serde_json::json!([2, 5]));
    assert_eq!(p["consistent"], true);
    assert_eq!(p["product_formula"][0]["values"], serde_json::json!([3, 6, 10]));
}

#[test]
fn predict_trivial_target_skips_blocks() {
    let run = Run::new("[target]\nE = [1]\nsteps = 1\np_max = 1\n");
    assert_exit(&run.cmd("predict", &[]), 0);
    assert_eq!(run.json("prediction.json")["values"], serde_json::json!([1, 2]));
}

#[test]
fn oracle_engines_agree_on_override() {
    let run = Run::new(
        r#"
[target]
E = [2]
steps = 1
p_max = 1

[oracle]
queries_per_system = 30
seed = 3

[[oracle.toys]]
name = "small"
columns = [[0, 1, 3], [0, 6, 11], [0, 18, 37, 55, 74, 93]]
heights = [5, 18, 161]
"#,
    );
    assert_exit(&run.cmd("oracle", &[]), 0);
    let r = run.json("oracle_report.json");
    assert_eq!(r["report"]["verdict"], "engines agree");
    assert_eq!(r["report"]["systems"].as_array().unwrap().len(), 1);
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn pipeline_is_reproducible() {
    let stages = [
        "construct",
        "verify-lemma",
        "build-system",
        "weak-limits",
        "predict",
        "oracle",
    ];
    let runs: Vec<Run> = (0..2).map(|_| Run::new(PIPELINE)).collect();
    for run in &runs {
        for stage in stages {
            assert_exit(&run.cmd(stage, &[]), 0);
        }
    }
    let (a, b) = (snapshot(&runs[0].out()), snapshot(&runs[1].out()));
    assert_eq!(a.len(), 9);
    assert_eq!(a, b);
}

#[test]
fn shipped_example_config_runs() {
    let text = fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/example.toml")).unwrap();
    let run = Run::new(&text);
    for stage in ["construct", "verify-lemma", "build-system", "weak-limits", "predict"] {
        assert_exit(&run.cmd(stage, &[]), 0);
    }
}
