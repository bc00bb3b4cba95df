use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn circloop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_circloop"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn micro() -> PathBuf {
    fixtures().join("micro.json")
}

fn plan_with(dir: &TempDir, name: &str, algorithm: Value) -> PathBuf {
    let mut plan: Value = serde_json::from_str(&fs::read_to_string(fixtures().join("micro_plan.json")).unwrap()).unwrap();
    plan["algorithm"] = algorithm;
    let path = dir.path().join(name);
    fs::write(&path, plan.to_string()).unwrap();
    path
}

fn run_plan(economy: &Path, plan: &Path, extra: &[&str]) -> Value {
    let mut args = vec!["plan", path_str(economy), path_str(plan)];
    args.extend_from_slice(extra);
    let out = circloop(&args);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn masked(mut v: Value) -> String {
    v["wall_time_ms"] = Value::from(0);
    serde_json::to_string_pretty(&v).unwrap() + "\n"
}

#[test]
fn validate_fixture_is_silent() {
    let out = circloop(&["validate", path_str(&micro())]);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty() && out.stderr.is_empty());
}

#[test]
fn validate_level_violation_exits_one() {
    let dir = TempDir::new().unwrap();
    let text = fs::read_to_string(micro())
        .unwrap()
        .replace(r#""name": "G", "level": 1"#, r#""name": "G", "level": 0"#);
    let path = dir.path().join("bad.json");
    fs::write(&path, text).unwrap();
    let out = circloop(&["validate", path_str(&path)]);
    assert_eq!(code(&out), 1);
    let stderr = String::from_utf8(out.stderr).unwrap();
    let lines: Vec<&str> = stderr.lines().collect();
    assert_eq!(lines.len(), 1, "{stderr}");
    assert!(lines[0].contains("G"), "{stderr}");
}

#[test]
fn validate_truncated_json_exits_two() {
    let dir = TempDir::new().unwrap();
    let text = fs::read_to_string(micro()).unwrap();
    let path = dir.path().join("cut.json");
    fs::write(&path, &text[..text.len() / 2]).unwrap();
    assert_eq!(code(&circloop(&["validate", path_str(&path)])), 2);
    assert_eq!(code(&circloop(&["validate", "/nonexistent/economy.json"])), 2);
}

#[test]
fn validate_unknown_schema_exits_two() {
    let dir = TempDir::new().unwrap();
    let text = fs::read_to_string(micro()).unwrap().replace("circloop/1", "circloop/9");
    let path = dir.path().join("v9.json");
    fs::write(&path, text).unwrap();
    assert_eq!(code(&circloop(&["validate", path_str(&path)])), 2);
}

#[test]
fn plan_fixture_exhaustive() {
    let v = run_plan(&micro(), &fixtures().join("micro_plan.json"), &[]);
    assert_eq!(v["evaluation"]["score"], 21.0);
    assert_eq!(v["evaluation"]["feasible"], true);
    assert_eq!(v["moves"].as_array().unwrap().len(), 1);
    assert_eq!(v["moves"][0]["owner"], "G");
    assert_eq!(v["moves"][0]["to"], "RS");
    assert_eq!(v["nodes"], 4);
    assert_eq!(v["seed"], 42);
}

#[test]
fn plan_json_keys_in_order() {
    let out = circloop(&["plan", path_str(&micro()), path_str(&fixtures().join("micro_plan.json"))]);
    let text = String::from_utf8(out.stdout).unwrap();
    let keys = [
        "\"moves\"",
        "\"evaluation\"",
        "\"circularity\"",
        "\"nodes\"",
        "\"wall_time_ms\"",
        "\"algorithm\"",
        "\"seed\"",
        "\"workers\"",
        "\"schema_hash\"",
        "\"plan\"",
    ];
    let positions: Vec<usize> = keys.iter().map(|k| text.find(k).unwrap()).collect();
    assert!(positions.windows(2).all(|w| w[0] < w[1]), "{positions:?}");
}

#[test]
fn plan_is_deterministic_except_wall_time() {
    let dir = TempDir::new().unwrap();
    for (name, algorithm) in [
        ("exhaustive.json", serde_json::json!({"name": "exhaustive"})),
        ("mcts.json", serde_json::json!({"name": "mcts", "budget": 60})),
    ] {
        let plan = plan_with(&dir, name, algorithm);
        let a = masked(run_plan(&micro(), &plan, &["--workers", "2"]));
        let b = masked(run_plan(&micro(), &plan, &["--workers", "2"]));
        assert_eq!(a, b);
    }
}

#[test]
fn plan_mcts_matches_exhaustive() {
    let dir = TempDir::new().unwrap();
    let plan = plan_with(&dir, "mcts.json", serde_json::json!({"name": "mcts", "budget": 100}));
    let mcts = run_plan(&micro(), &plan, &[]);
    let exhaustive = run_plan(&micro(), &fixtures().join("micro_plan.json"), &[]);
    assert_eq!(mcts["seed"], 42);
    assert_eq!(mcts["algorithm"], "mcts");
    assert_eq!(mcts["evaluation"], exhaustive["evaluation"]);
}

#[test]
fn plan_audit_flag_passes() {
    let dir = TempDir::new().unwrap();
    for (name, algorithm) in [
        ("e.json", serde_json::json!({"name": "exhaustive"})),
        ("g.json", serde_json::json!({"name": "greedy"})),
        ("b.json", serde_json::json!({"name": "beam", "width": 2})),
        ("m.json", serde_json::json!({"name": "mcts", "budget": 30})),
    ] {
        let plan = plan_with(&dir, name, algorithm);
        let v = run_plan(&micro(), &plan, &["--audit"]);
        assert_eq!(v["evaluation"]["score"], 21.0, "{name}");
    }
}

#[test]
fn plan_writes_output_file() {
    let dir = TempDir::new().unwrap();
    let out_path = dir.path().join("result.json");
    let out = circloop(&[
        "plan",
        path_str(&micro()),
        path_str(&fixtures().join("micro_plan.json")),
        "-o",
        path_str(&out_path),
    ]);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8(out.stderr).unwrap().contains("score 21"));
    let v: Value = serde_json::from_str(&fs::read_to_string(out_path).unwrap()).unwrap();
    assert_eq!(v["evaluation"]["score"], 21.0);
}

#[test]
fn plan_errors() {
    let dir = TempDir::new().unwrap();
    let capped = plan_with(&dir, "cap.json", serde_json::json!({"name": "exhaustive", "cap": 2}));
    let out = circloop(&["plan", path_str(&micro()), path_str(&capped)]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8(out.stderr).unwrap().contains("cap"));

    let unknown = plan_with(&dir, "unknown.json", serde_json::json!({"name": "simulated-annealing"}));
    assert_eq!(code(&circloop(&["plan", path_str(&micro()), path_str(&unknown)])), 2);
}

#[test]
fn gen_is_deterministic_and_validates() {
    let dir = TempDir::new().unwrap();
    let a = circloop(&["gen", "--seed", "1"]);
    let b = circloop(&["gen", "--seed", "1"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    for seed in 1..=100 {
        let path = dir.path().join(format!("g{seed}.json"));
        let seed = seed.to_string();
        let out = circloop(&[
            "gen",
            "--seed",
            &seed,
            "--materials",
            "5",
            "--levels",
            "3",
            "--per-level",
            "4",
            "--class-size",
            "2",
            "--byproducts",
            "0.3",
            "-o",
            path_str(&path),
        ]);
        assert_eq!(code(&out), 0);
        let v = circloop(&["validate", path_str(&path)]);
        assert_eq!(code(&v), 0, "seed {seed}: {}", String::from_utf8_lossy(&v.stderr));
    }
}

#[test]
fn gen_impossible_counts() {
    let out = circloop(&["gen", "--materials", "0"]);
    assert_eq!(code(&out), 1);
    let out = circloop(&["gen", "--class-size", "0"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn gen_without_substitutes_plans_one_node() {
    let dir = TempDir::new().unwrap();
    let econ = dir.path().join("e.json");
    let out = circloop(&[
        "gen",
        "--seed",
        "7",
        "--materials",
        "4",
        "--levels",
        "3",
        "--per-level",
        "3",
        "--class-size",
        "1",
        "-o",
        path_str(&econ),
    ]);
    assert_eq!(code(&out), 0);
    let plan = dir.path().join("p.json");
    fs::write(
        &plan,
        r#"{"demand":[{"product":"p3_0","units":1}],"weights":{"time":1,"climate":1},"algorithm":{"name":"exhaustive"},"seed":1}"#,
    )
    .unwrap();
    let v = run_plan(&econ, &plan, &[]);
    assert_eq!(v["nodes"], 1);
    assert!(v["moves"].as_array().unwrap().is_empty());
}

fn report_for(dir: &TempDir, plan: &Path) -> String {
    let result = dir.path().join("r.json");
    let out = circloop(&["plan", path_str(&micro()), path_str(plan), "-o", path_str(&result)]);
    assert_eq!(code(&out), 0);
    let out = circloop(&["report", path_str(&micro()), path_str(&result)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn report_after_best_plan() {
    let dir = TempDir::new().unwrap();
    let csv = report_for(&dir, &fixtures().join("micro_plan.json"));
    let tables: Vec<&str> = csv.split("\n\n").collect();
    assert_eq!(tables.len(), 3);
    assert!(tables[0].starts_with("product,time,climate,steel,recycled_steel,plastic\n"));
    assert!(tables[0].lines().any(|l| l == "B,5,11,0,2,3"), "{csv}");
    assert_eq!(tables[1], "material,gross,supply,reused,net");
    assert!(tables[2].starts_with("indicator,value,cap,excess\n"));
    assert!(tables[2].lines().any(|l| l == "climate,11,12,0"), "{csv}");
}

#[test]
fn report_of_default_configuration() {
    let dir = TempDir::new().unwrap();
    // zero steps leaves the default configuration
    let plan = plan_with(&dir, "g0.json", serde_json::json!({"name": "greedy", "max_steps": 0}));
    let csv = report_for(&dir, &plan);
    assert!(csv.lines().any(|l| l == "B,7,19,2,0,3"), "{csv}");
    assert!(csv.lines().any(|l| l == "climate,19,12,7"), "{csv}");
}

#[test]
fn report_rejects_mismatched_economy() {
    let dir = TempDir::new().unwrap();
    let result = dir.path().join("r.json");
    circloop(&[
        "plan",
        path_str(&micro()),
        path_str(&fixtures().join("micro_plan.json")),
        "-o",
        path_str(&result),
    ]);
    let other = dir.path().join("other.json");
    let text = fs::read_to_string(micro()).unwrap().replace("\"base_time\": 2.0", "\"base_time\": 2.5");
    fs::write(&other, text).unwrap();
    let out = circloop(&["report", path_str(&other), path_str(&result)]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8(out.stderr).unwrap().contains("schema hash"));
}

#[test]
fn report_writes_csv_file() {
    let dir = TempDir::new().unwrap();
    let result = dir.path().join("r.json");
    circloop(&[
        "plan",
        path_str(&micro()),
        path_str(&fixtures().join("micro_plan.json")),
        "-o",
        path_str(&result),
    ]);
    let csv = dir.path().join("out.csv");
    let out = circloop(&["report", path_str(&micro()), path_str(&result), "-o", path_str(&csv)]);
    assert_eq!(code(&out), 0);
    assert!(fs::read_to_string(csv).unwrap().contains("B,5,11,0,2,3"));
}

/// Set UPDATE_GOLDEN=1 to rewrite the files after an intended output change.
#[test]
fn golden_outputs() {
    let dir = TempDir::new().unwrap();
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    for (name, algorithm) in [
        ("exhaustive", serde_json::json!({"name": "exhaustive"})),
        ("greedy", serde_json::json!({"name": "greedy"})),
        ("beam", serde_json::json!({"name": "beam", "width": 4})),
        ("mcts", serde_json::json!({"name": "mcts", "budget": 100})),
    ] {
        let plan = plan_with(&dir, &format!("{name}.json"), algorithm);
        let actual = masked(run_plan(&micro(), &plan, &[]));
        let path = golden_dir().join(format!("micro_{name}.json"));
        if update {
            fs::create_dir_all(golden_dir()).unwrap();
            fs::write(&path, &actual).unwrap();
        }
        let expected = fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing golden file {}", path.display()));
        assert_eq!(actual, expected, "{name}");
    }
}
