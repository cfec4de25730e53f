use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nash_stream_cli::io::{read_instance, write_instance, NumberFormat};
use nash_stream_core::metrics::balance_ratio;
use nash_stream_core::{Instance, Item};
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nash-stream"))
}

fn exec(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write(dir: &TempDir, name: &str, inst: &Instance) -> PathBuf {
    let p = dir.path().join(name);
    write_instance(&p, inst, NumberFormat::Double).unwrap();
    p
}

fn two_agent_example() -> Instance {
    Instance::new(2, vec![Item::new(1.0, vec![1.0, 1.0]), Item::new(1.0, vec![0.0, 1.0])]).unwrap()
}

fn report_field(csv: &str, column: &str) -> String {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == column).unwrap();
    lines.next().unwrap().split(',').nth(idx).unwrap().to_string()
}

#[test]
fn gen_staircase() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("t2.json");
    let res = exec(&["gen", "--family", "hard-table2", "--n", "3", "--out", path_str(&out), "--solve"]);
    assert_eq!(code(&res), 0, "{res:?}");
    let text = stdout(&res);
    assert!(text.contains("lambda_star=91.0"), "{text}");
    assert!(text.contains("mu_star=81."), "{text}");
    let inst = read_instance(&out).unwrap();
    assert_eq!(inst.items()[2].values, vec![0.0, 0.0, 729.0]);
}

#[test]
fn gen_random_balanced() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("rb.json");
    let res = exec(&[
        "gen",
        "--family",
        "random-balanced",
        "--agents",
        "4",
        "--items",
        "50",
        "--lambda",
        "1",
        "--seed",
        "7",
        "--out",
        path_str(&out),
        "--format",
        "string",
    ]);
    assert_eq!(code(&res), 0, "{res:?}");
    let inst = read_instance(&out).unwrap();
    assert!((balance_ratio(&inst).unwrap() - 1.0).abs() < 1e-12);
    assert!(std::fs::read_to_string(&out).unwrap().contains("\"supply\": \"1.0\""));
}

#[test]
fn gen_copies_and_usage_errors() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("c.json");
    let ok = exec(&[
        "gen",
        "--family",
        "copies",
        "--base",
        "hard-table2",
        "--n",
        "3",
        "--copies",
        "2",
        "-o",
        path_str(&out),
    ]);
    assert_eq!(code(&ok), 0, "{ok:?}");
    assert_eq!(read_instance(&out).unwrap().num_agents(), 6);

    assert_eq!(code(&exec(&["gen", "--family", "hard-table2", "--out", path_str(&out)])), 2);
    assert_eq!(code(&exec(&["gen", "--family", "hard-table2", "--n", "40", "--out", path_str(&out)])), 2);
    assert_eq!(code(&exec(&["gen", "--family", "nope", "--n", "3", "--out", path_str(&out)])), 2);
    assert_eq!(code(&exec(&["gen", "--family", "random-balanced", "--agents", "2", "--out", path_str(&out)])), 2);
}

#[test]
fn run_myopic_example() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "ex.json", &two_agent_example());
    let alloc = dir.path().join("alloc.csv");
    let res = exec(&["run", path_str(&inst), "--alg", "myopic", "--allocation", path_str(&alloc), "--audit"]);
    assert_eq!(code(&res), 0, "{res:?}");
    let nw: f64 = report_field(&stdout(&res), "alg_nw").parse().unwrap();
    assert!((nw - 0.75f64.sqrt()).abs() < 1e-12);
    assert_eq!(std::fs::read_to_string(&alloc).unwrap(), "agent,item_0,item_1\n0,0.5,0.0\n1,0.5,1.0\n");
}

#[test]
fn run_parameter_errors() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "ex.json", &two_agent_example());
    let p = path_str(&inst);
    assert_eq!(code(&exec(&["run", p, "--alg", "half-and-half", "--lambda", "0.5"])), 2);
    assert_eq!(code(&exec(&["run", p, "--alg", "half-and-half"])), 2);
    assert_eq!(code(&exec(&["run", p, "--alg", "rounded"])), 2);
    assert_eq!(code(&exec(&["run", p, "--alg", "rounded-guessed"])), 2);
    assert_eq!(code(&exec(&["run", p, "--alg", "bogus"])), 2);
    assert_eq!(code(&exec(&["run", "/nonexistent.json", "--alg", "myopic"])), 1);
}

#[test]
fn run_half_and_half_reports_bound() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "ex.json", &two_agent_example());
    let res = exec(&["run", path_str(&inst), "--alg", "half-and-half", "--lambda", "2", "--audit"]);
    assert_eq!(code(&res), 0, "{res:?}");
    let csv = stdout(&res);
    let bound: f64 = report_field(&csv, "bound").parse().unwrap();
    assert!((bound - 4.0 * 128f64.ln()).abs() < 1e-12);
    assert_eq!(report_field(&csv, "bound_satisfied"), "true");
}

#[test]
fn guessed_runs_are_repeatable() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "ex.json", &two_agent_example());
    let args = ["run", path_str(&inst), "--alg", "rounded-guessed", "--seed", "1"];
    let a = exec(&args);
    let b = exec(&args);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(report_field(&stdout(&a), "seed"), "1");
}

#[test]
fn run_writes_report_file() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "ex.json", &two_agent_example());
    let report = dir.path().join("r.csv");
    let res = exec(&["run", path_str(&inst), "--alg", "myopic", "--report", path_str(&report), "--timing"]);
    assert_eq!(code(&res), 0);
    // Without --allocation the allocation goes to stdout when the report has its own file.
    assert!(stdout(&res).starts_with("agent,item_0,item_1"));
    let text = std::fs::read_to_string(&report).unwrap();
    assert!(!report_field(&text, "wall_time_ms").is_empty());
}

#[test]
fn bench_empty_suite_is_header_only() {
    let res = exec(&["bench", "--suite", "none"]);
    assert_eq!(code(&res), 0);
    assert_eq!(stdout(&res).lines().count(), 1);
    assert!(stdout(&res).starts_with("instance_id,generator,params,algorithm,seed,k,"));
}

#[test]
fn bench_rows_repeat_byte_for_byte() {
    let run =
        |threads: &str| bin().args(["bench", "--suite", "smoke"]).env("NASH_STREAM_THREADS", threads).output().unwrap();
    let a = run("1");
    let b = run("4");
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn bench_enumeration() {
    let res = exec(&["bench", "--suite", "smoke", "--alg", "half-and-half-guessed", "--enumerate-k", "0..6"]);
    assert_eq!(code(&res), 0, "{res:?}");
    let text = stdout(&res);
    assert_eq!(text.lines().count(), 1 + 3 * 9);
    assert!(text.contains("half-and-half-guessed/mixture"));
    assert!(text.contains("half-and-half-guessed/expected-lower-bound"));
}

#[test]
fn ratios_staircase_and_symmetric() {
    let dir = TempDir::new().unwrap();
    let stair = write(&dir, "t2.json", &nash_stream_core::generators::gen_hard_table2(3).unwrap());
    let res = exec(&["ratios", path_str(&stair)]);
    assert_eq!(code(&res), 0, "{res:?}");
    let json: serde_json::Value = serde_json::from_str(&stdout(&res)).unwrap();
    assert_eq!(json["balance_ratio"], 91.0);
    assert!((json["impartiality_ratio"].as_f64().unwrap() - 81.0).abs() < 1e-6);

    let sym = Instance::new(2, vec![Item::new(1.0, vec![1.0, 1.0])]).unwrap();
    let sym = write(&dir, "sym.json", &sym);
    let json: serde_json::Value = serde_json::from_str(&stdout(&exec(&["ratios", path_str(&sym)]))).unwrap();
    assert_eq!(json["balance_ratio"], 1.0);
    assert!((json["impartiality_ratio"].as_f64().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn ratios_zero_agent_diagnostic() {
    let dir = TempDir::new().unwrap();
    let inst = Instance::new(3, vec![Item::new(1.0, vec![1.0, 0.0, 0.0])]).unwrap();
    let p = write(&dir, "z.json", &inst);
    let res = exec(&["ratios", path_str(&p)]);
    assert_eq!(code(&res), 1);
    let err = String::from_utf8(res.stderr).unwrap();
    assert!(err.contains("[1, 2]"), "{err}");
}
