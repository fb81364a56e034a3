//! End-to-end checks of the command-line surface: dataset generation,
//! supervised training, evaluation, and the census, all through the binary.

use std::path::Path;
use std::process::Command;

fn parsynth() -> Command {
    Command::new(env!("CARGO_BIN_EXE_parsynth"))
}

fn run_ok(cmd: &mut Command) -> String {
    let out = cmd.output().expect("binary runs");
    assert!(
        out.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn gen_is_deterministic_and_loads_back() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.tsv");
    let b = dir.path().join("b.tsv");
    for path in [&a, &b] {
        run_ok(parsynth().args([
            "gen",
            "lambda",
            "test",
            "--avg-len",
            "10",
            "--count",
            "50",
            "--seed",
            "3",
            "--out",
            path.to_str().unwrap(),
        ]));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let (grammar, dataset) = parsynth::grammar::load_dataset(&a).unwrap();
    assert_eq!(grammar.name.to_string(), "lambda");
    assert_eq!(dataset.len(), 50);
}

#[test]
fn gen_curriculum_has_lesson_markers() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("am.tsv");
    let stdout = run_ok(parsynth().args([
        "gen",
        "am",
        "curriculum",
        "--out",
        path.to_str().unwrap(),
    ]));
    assert!(stdout.contains("24 examples"), "{stdout}");
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.contains("# lesson 1"));
    assert!(text.contains("# lesson 3"));
    assert!(text.contains("x + y\t(Op+ (Id x) (Id y))\tSHIFT ; "));
}

#[test]
fn enum_reports_the_census_counts() {
    let stdout = run_ok(parsynth().args(["enum", "am", "--input", "x + y"]));
    assert!(stdout.contains("1572"), "{stdout}");
    assert!(stdout.contains("9"), "{stdout}");
    let stdout = run_ok(parsynth().args(["enum", "am", "--len7-exec-count"]));
    assert!(stdout.contains("23816"), "{stdout}");
    assert!(stdout.contains("7458826752"), "{stdout}");
}

#[test]
fn enum_refuses_oversized_inputs() {
    let out = parsynth()
        .args(["enum", "am", "--input", "x + y + x + y + x + y + x + y"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("refusing"), "{stderr}");
}

// The full loop: generate the AM curriculum, train on oracle traces, then
// evaluate the checkpoint on a fresh pool and verify recorded phase-1 traces
// are rejected/accepted appropriately by the census verb.
#[test]
fn supervised_train_then_eval_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let curriculum = dir.path().join("am-curriculum.tsv");
    run_ok(parsynth().args([
        "gen",
        "am",
        "curriculum",
        "--out",
        curriculum.to_str().unwrap(),
    ]));
    let run_dir = dir.path().join("run");
    let stdout = run_ok(parsynth().args([
        "train",
        "--dataset",
        curriculum.to_str().unwrap(),
        "--out",
        run_dir.to_str().unwrap(),
        "--supervised-traces",
        "--set",
        "seed=1",
    ]));
    assert!(stdout.contains("24/24"), "{stdout}");
    assert!(run_dir.join("model.ckpt").exists());
    assert!(run_dir.join("config.txt").exists());
    assert!(run_dir.join("metrics.jsonl").exists());
    let config_echo = std::fs::read_to_string(run_dir.join("config.txt")).unwrap();
    assert!(config_echo.contains("learning_rate=0.01"));
    assert!(config_echo.contains("m2=10000"));

    let pool = dir.path().join("am-test.tsv");
    run_ok(parsynth().args([
        "gen",
        "am",
        "test",
        "--avg-len",
        "20",
        "--count",
        "100",
        "--seed",
        "9",
        "--out",
        pool.to_str().unwrap(),
    ]));
    let stdout = run_ok(parsynth().args([
        "eval",
        "--checkpoint",
        run_dir.join("model.ckpt").to_str().unwrap(),
        "--dataset",
        pool.to_str().unwrap(),
    ]));
    assert!(stdout.contains("100/100"), "{stdout}");
}

#[test]
fn eval_rejects_grammar_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let curriculum = dir.path().join("am.tsv");
    run_ok(parsynth().args([
        "gen",
        "am",
        "curriculum",
        "--out",
        curriculum.to_str().unwrap(),
    ]));
    let run_dir = dir.path().join("run");
    run_ok(parsynth().args([
        "train",
        "--dataset",
        curriculum.to_str().unwrap(),
        "--out",
        run_dir.to_str().unwrap(),
        "--supervised-traces",
        "--set",
        "supervised_epochs=60",
    ]));
    let lambda_pool = dir.path().join("lambda.tsv");
    run_ok(parsynth().args([
        "gen",
        "lambda",
        "test",
        "--avg-len",
        "8",
        "--count",
        "10",
        "--out",
        lambda_pool.to_str().unwrap(),
    ]));
    let out = parsynth()
        .args([
            "eval",
            "--checkpoint",
            run_dir.join("model.ckpt").to_str().unwrap(),
            "--dataset",
            lambda_pool.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("grammar"), "{stderr}");
}

#[test]
fn oracle_eval_is_exact_on_any_pool() {
    let dir = tempfile::tempdir().unwrap();
    let pool = dir.path().join("while.tsv");
    run_ok(parsynth().args([
        "gen",
        "while",
        "test",
        "--avg-len",
        "30",
        "--count",
        "50",
        "--out",
        pool.to_str().unwrap(),
    ]));
    let stdout = run_ok(parsynth().args([
        "eval",
        "--oracle",
        "--dataset",
        pool.to_str().unwrap(),
    ]));
    assert!(stdout.contains("50/50"), "{stdout}");
}

#[test]
fn config_file_overrides_apply() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.txt");
    std::fs::write(&config, "m2=123\nsigma=0.2\n# comment\n").unwrap();
    let curriculum = dir.path().join("am.tsv");
    run_ok(parsynth().args([
        "gen",
        "am",
        "curriculum",
        "--out",
        curriculum.to_str().unwrap(),
    ]));
    let run_dir = dir.path().join("run");
    run_ok(parsynth().args([
        "train",
        "--dataset",
        curriculum.to_str().unwrap(),
        "--out",
        run_dir.to_str().unwrap(),
        "--supervised-traces",
        "--config",
        config.to_str().unwrap(),
    ]));
    let echo = std::fs::read_to_string(run_dir.join("config.txt")).unwrap();
    assert!(echo.contains("m2=123"), "{echo}");
    assert!(echo.contains("sigma=0.2"), "{echo}");
    let _ = Path::new("unused");
}
