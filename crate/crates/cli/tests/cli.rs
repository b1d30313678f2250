use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ltlplan"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn gen_env(dir: &Path, domain: &str, seed: &str) -> String {
    let path = dir.join(format!("{domain}_{seed}.json"));
    let p = path.to_str().unwrap().to_string();
    let o = run(&["gen-env", "--domain", domain, "--seed", seed, "--out", &p]);
    assert!(o.status.success());
    p
}

#[test]
fn parse_prints_both_notations() {
    let o = run(&["parse", "F (A & F B)"]);
    assert_eq!(stdout(&o), "F(A & F B)\n");
    let o = run(&["parse", "F (A & F B)", "--format", "prefix"]);
    assert_eq!(stdout(&o), "F & A F B\n");
    let o = run(&["parse", "F & A F B", "--info"]);
    assert!(stdout(&o).contains("depth 4\nwidth 2\n"));
}

#[test]
fn parse_error_exit_code_and_grammar_pointer() {
    let o = run(&["parse", "F (A &"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("docs/FORMATS.md"));
}

#[test]
fn compile_dot_and_text() {
    let o = run(&["compile", "F & A F B", "--alphabet", "full", "--dot"]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("digraph automaton {"));
    let o = run(&["compile", "F A", "--text"]);
    let text = stdout(&o);
    assert!(text.contains("states 2\n"));
    assert!(text.contains("edge 0 {A} 1\n"));
}

#[test]
fn check_equiv_reports_verdict_and_witness() {
    let o = run(&["check-equiv", "F A", "! G ! A"]);
    assert_eq!(stdout(&o), "equivalent\n");
    let o = run(&["check-equiv", "F(A & F B)", "F(B & F A)"]);
    assert_eq!(stdout(&o), "not equivalent\nwitness [{A} {B}]\n");
}

#[test]
fn vote_from_stdin() {
    let mut child = bin()
        .args(["vote", "-"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(b"F A\n! G ! A\nG A\nnot a formula (\n")
        .unwrap();
    let o = child.wait_with_output().unwrap();
    let text = stdout(&o);
    assert!(text.contains("candidates 3\n"), "{text}");
    assert!(text.contains("dropped 1\n"));
    assert!(text.contains("group 0 size=2"));
}

#[test]
fn plan_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let env = gen_env(dir.path(), "navigation", "7");
    let spec = dir.path().join("s.ltl");
    std::fs::write(&spec, "F red_room & (! red_room U blue_room)\n").unwrap();
    let args = [
        "plan",
        "--policy",
        "greedy",
        "--spec-file",
        spec.to_str().unwrap(),
        "--env",
        &env,
        "--seed",
        "7",
    ];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(text.contains("\nsafe true\n"));
    assert!(text.contains("DONE\n"));
}

#[test]
fn oracle_plan_and_unsatisfiable_exit() {
    let dir = tempfile::tempdir().unwrap();
    let env = gen_env(dir.path(), "navigation", "3");
    let o = run(&[
        "oracle-plan",
        "--spec",
        "F red_room & F blue_room",
        "--env",
        &env,
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("DONE\ncost "));
    let o = run(&[
        "oracle-plan",
        "--spec",
        "F red_room & G ! red_room",
        "--env",
        &env,
    ]);
    assert_eq!(o.status.code(), Some(4));
    let o = run(&["plan", "--spec", "F red_room & G ! red_room", "--env", &env]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn dead_end_and_timeout_exits() {
    let dir = tempfile::tempdir().unwrap();
    let env = gen_env(dir.path(), "manipulation", "3");
    // once blk2 is in boxA it cannot also be moved to boxB
    let spec = "F blk2_in_boxA & G (blk2_in_boxA -> X blk2_in_boxB)";
    let o = run(&["plan", "--spec", spec, "--env", &env, "--policy", "uniform"]);
    assert_eq!(
        o.status.code(),
        Some(6),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let o = run(&["oracle-plan", "--spec", spec, "--env", &env]);
    assert_eq!(o.status.code(), Some(4));
    let o = run(&[
        "plan",
        "--spec",
        "F blk2_in_boxA",
        "--env",
        &env,
        "--time-limit",
        "1e-9",
    ]);
    assert_eq!(o.status.code(), Some(5));
}

#[test]
fn unconstrained_plans_report_their_safety() {
    let dir = tempfile::tempdir().unwrap();
    let env = gen_env(dir.path(), "navigation", "4");
    let o = run(&[
        "plan",
        "--spec",
        "G ! red_room & F blue_room",
        "--env",
        &env,
        "--policy",
        "uniform",
        "--unconstrained",
        "--seed",
        "1",
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("\nsafe "));
}

#[test]
fn corpus_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let c = dir.path().join("c");
    let cs = c.to_str().unwrap();
    let o = run(&[
        "gen-corpus",
        "--out",
        cs,
        "--environments",
        "2",
        "--seed",
        "5",
    ]);
    assert!(o.status.success());
    assert_eq!(
        stdout(&o),
        format!("wrote 10 records over 2 environments to {cs}/records.jsonl\n")
    );

    let o = run(&["stats", "--corpus", cs]);
    assert!(stdout(&o).starts_with("records 10\nmean_depth "));

    let o = run(&[
        "evaluate",
        "--corpus",
        cs,
        "--planner",
        "oracle",
        "--no-timing",
    ]);
    let table = stdout(&o);
    let all = table.lines().find(|l| l.starts_with("all")).unwrap();
    assert_eq!(
        all.split_whitespace().collect::<Vec<_>>()[..4],
        ["all", "10", "100.0", "100.0"]
    );

    let pairs = dir.path().join("pairs.jsonl");
    let o = run(&[
        "export-pairs",
        "--corpus",
        cs,
        "--out",
        pairs.to_str().unwrap(),
    ]);
    assert_eq!(stdout(&o), "exported 10 pairs, skipped 0\n");
    assert_eq!(std::fs::read_to_string(&pairs).unwrap().lines().count(), 10);
}

#[test]
fn subprocess_policy_matches_in_process_uniform() {
    let dir = tempfile::tempdir().unwrap();
    let c = dir.path().join("c");
    let cs = c.to_str().unwrap();
    assert!(run(&[
        "gen-corpus",
        "--out",
        cs,
        "--environments",
        "2",
        "--domain",
        "manip"
    ])
    .status
    .success());
    let local = run(&[
        "evaluate",
        "--corpus",
        cs,
        "--policy",
        "uniform",
        "--no-timing",
    ]);
    let remote = run(&[
        "evaluate",
        "--corpus",
        cs,
        "--policy",
        "subprocess",
        "--policy-cmd",
        env!("CARGO_BIN_EXE_ltlplan"),
        "--policy-arg",
        "policy-server",
        "--no-timing",
    ]);
    assert!(
        remote.status.success(),
        "{}",
        String::from_utf8_lossy(&remote.stderr)
    );
    assert_eq!(local.stdout, remote.stdout);
}

#[test]
fn policy_server_answers_uniformly() {
    let mut child = bin()
        .arg("policy-server")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let req = r#"{"env":"","task":"","history":[],"candidates":["Goto a","DONE"]}"#;
    writeln!(child.stdin.take().unwrap(), "{req}").unwrap();
    let o = child.wait_with_output().unwrap();
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["actions"].as_array().unwrap().len(), 2);
    assert_eq!(v["actions"][0]["weight"], 1.0);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&["plan"]).status.code(), Some(2));
    assert_eq!(
        run(&["compile", "F A", "--alphabet", "bogus"])
            .status
            .code(),
        Some(2)
    );
}
