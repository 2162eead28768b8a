use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_apst");

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN).current_dir(dir).args(args).output().expect("spawn apst")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn generate(dir: &Path) {
    ok(
        dir,
        &["--no-timestamp", "generate", "--motif", "-1,-1,+1,+1", "--reps", "100", "--noise", "0.2", "--seed", "7", "--out", "s.txt"],
    );
}

#[test]
fn generate_writes_stream_mask_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path());
    let seq = fs::read_to_string(dir.path().join("s.txt")).unwrap();
    assert_eq!(seq.split_whitespace().count(), 400);
    let mask = fs::read_to_string(dir.path().join("s.mask")).unwrap();
    assert_eq!(mask.lines().count(), 400);
    let sidecar: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("s.json")).unwrap()).unwrap();
    assert_eq!(sidecar["seed"], 7);
    assert_eq!(sidecar["rng"], apst::synthgen::RNG_NAME);
}

#[test]
fn train_then_verify_passes() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path());
    let out = ok(
        dir.path(),
        &[
            "--no-timestamp", "train", "--model", "apst", "--mode", "self-bounded", "--lambda", "4", "--xi", "0.9",
            "--epsilon", "1", "--data", "s.txt", "--trace", "t.jsonl", "--save", "h.json",
        ],
    );
    let stdout = String::from_utf8(out.stdout).unwrap();
    let header: serde_json::Value = serde_json::from_str(stdout.lines().next().unwrap()).unwrap();
    assert_eq!(header["command"], "train");
    assert!(header.get("timestamp").is_none());
    assert_eq!(fs::read_to_string(dir.path().join("t.jsonl")).unwrap().lines().count(), 400);
    let out = run(dir.path(), &["verify-bounds", "--trace", "t.jsonl", "--hypothesis", "h.json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn bound_violation_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path());
    ok(
        dir.path(),
        &["train", "--model", "apst", "--mode", "unbounded", "--data", "s.txt", "--trace", "t.jsonl", "--save", "h.json"],
    );
    let trace = fs::read_to_string(dir.path().join("t.jsonl")).unwrap();
    let tampered: String = trace
        .lines()
        .map(|l| {
            let mut v: serde_json::Value = serde_json::from_str(l).unwrap();
            v["loss"] = serde_json::json!(50.0);
            v.to_string() + "\n"
        })
        .collect();
    fs::write(dir.path().join("bad.jsonl"), tampered).unwrap();
    let out = run(dir.path(), &["verify-bounds", "--trace", "bad.jsonl", "--hypothesis", "h.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["train", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(run(dir.path(), &["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(dir.path(), &["train", "--data", "missing.txt"]).status.code(), Some(3));
    fs::write(dir.path().join("bad.txt"), "1 0 7\n").unwrap();
    assert_eq!(run(dir.path(), &["train", "--data", "bad.txt"]).status.code(), Some(2));
    fs::write(dir.path().join("ok.txt"), "1 0 1 1 0\n").unwrap();
    assert_eq!(run(dir.path(), &["train", "--data", "ok.txt", "--lambda=-1"]).status.code(), Some(2));
    assert_eq!(run(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn delta_is_accepted_with_a_warning() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("ok.txt"), "1 0 1 1 0 0 1 1\n").unwrap();
    let out = ok(dir.path(), &["--delta", "0.05", "train", "--data", "ok.txt"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("delta"));
}

#[test]
fn multiclass_evaluate_and_inspect() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        dir.path(),
        &["generate", "--alphabet", "5", "--motif", "1,2,3,4,1,3", "--reps", "50", "--noise", "0.1", "--seed", "3", "--out", "m.txt"],
    );
    let out = ok(
        dir.path(),
        &[
            "--format", "csv", "evaluate", "--model", "apst-mc", "--alphabet", "5", "--data", "m.txt", "--mask", "m.mask",
            "--save", "mc.json",
        ],
    );
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.lines().nth(1).unwrap().starts_with("seed,model,"));
    let out = ok(dir.path(), &["inspect-tree", "--hypothesis", "mc.json", "--class", "3"]);
    let stdout = String::from_utf8(out.stdout).unwrap();
    let body: serde_json::Value = serde_json::from_str(stdout.split_once('\n').unwrap().1).unwrap();
    assert_eq!(body["suffix_closed"], true);
    assert_eq!(body["alphabet_size"], 5);
}

#[test]
fn repeated_invocations_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut outputs = Vec::new();
    for round in 0..2 {
        let gen = ok(
            d,
            &["--no-timestamp", "generate", "--motif", "-1,-1,+1,+1", "--reps", "50", "--noise", "0.2", "--seed", "11", "--out", "s.txt"],
        );
        let train = ok(d, &["--no-timestamp", "train", "--data", "s.txt", "--mask", "s.mask", "--trace", "t.jsonl", "--save", "h.json"]);
        let grid = ok(
            d,
            &[
                "--no-timestamp", "grid", "--motif", "-1,-1,+1,+1", "--reps", "50", "--noise", "0.2", "--seeds", "3",
                "--lambdas", "2,4", "--xis", "0.5,0.9", "--jobs", "3", "--report", "r.csv", "--summary", "sum.json",
            ],
        );
        let files: Vec<Vec<u8>> = ["s.txt", "s.mask", "s.json", "t.jsonl", "h.json", "r.csv", "sum.json"]
            .iter()
            .map(|f| fs::read(d.join(f)).unwrap())
            .collect();
        outputs.push((gen.stdout, train.stdout, grid.stdout, files));
        if round == 0 {
            for f in ["s.txt", "s.mask", "s.json", "t.jsonl", "h.json", "r.csv", "sum.json"] {
                fs::remove_file(d.join(f)).unwrap();
            }
        }
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn bound_tables_pass() {
    let dir = tempfile::tempdir().unwrap();
    for table in ["ladder", "chernoff"] {
        let out = run(dir.path(), &["--format", "csv", "verify-bounds", "--table", table]);
        assert_eq!(out.status.code(), Some(0), "{table}");
    }
}
