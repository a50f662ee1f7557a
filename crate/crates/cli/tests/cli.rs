use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use lacon::control::{write_traces, Command as Order, CommandKind, CommandTrace, Outcome};

fn lacon(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lacon")).current_dir(dir).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: &str = "data.episodes = 6\ndata.horizon = 60\ntrain.epochs = 2\ntrain.stoch_epochs = 1\nsimulate.episodes = 3\nsimulate.frames = 200\n";

fn small_dir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("small.cfg"), SMALL).unwrap();
    dir
}

#[test]
fn gen_data_writes_reported_counts_and_repeats_exactly() {
    let dir = small_dir();
    let o = lacon(dir.path(), &["gen-data", "--config", "small.cfg", "--out", "a"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for split in ["train", "validation"] {
        let text = fs::read_to_string(dir.path().join("a").join(format!("{split}.jsonl"))).unwrap();
        let reported: usize = stdout(&o)
            .lines()
            .find_map(|l| l.strip_prefix(&format!("{split}: ")))
            .and_then(|r| r.split(' ').next())
            .unwrap()
            .parse()
            .unwrap();
        assert_eq!(text.lines().count(), reported + 1, "{split}: header plus samples");
    }
    assert!(dir.path().join("a/effective_config.txt").exists());
    lacon(dir.path(), &["gen-data", "--config", "small.cfg", "--out", "b"]);
    for f in ["train.jsonl", "validation.jsonl", "effective_config.txt"] {
        assert_eq!(fs::read(dir.path().join("a").join(f)).unwrap(), fs::read(dir.path().join("b").join(f)).unwrap(), "{f}");
    }
    let o = lacon(dir.path(), &["gen-data", "--config", "small.cfg", "--seed", "9", "--out", "c"]);
    assert_eq!(code(&o), 0);
    assert_ne!(fs::read(dir.path().join("a/train.jsonl")).unwrap(), fs::read(dir.path().join("c/train.jsonl")).unwrap());
}

#[test]
fn invalid_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.cfg"), "train.learning_rate = 0.1\n").unwrap();
    let o = lacon(dir.path(), &["gen-data", "--config", "bad.cfg"]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("unknown key `train.learning_rate`"), "{}", stderr(&o));
    let o = lacon(dir.path(), &["gen-data", "--config", "missing.cfg"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&lacon(dir.path(), &["train", "--data", "x", "--mode", "fuzzy"])), 2);
    assert_eq!(code(&lacon(dir.path(), &["frobnicate"])), 2);
    let o = lacon(dir.path(), &["train", "--data", "x", "--mode", "stoch"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("--prior-checkpoint"));
    assert_eq!(code(&lacon(dir.path(), &["gradcheck", "--inject-fault", "nope"])), 2);
}

#[test]
fn missing_data_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = lacon(dir.path(), &["train", "--data", "nowhere"]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
    fs::write(dir.path().join("empty.jsonl"), "").unwrap();
    assert_eq!(code(&lacon(dir.path(), &["report", "empty.jsonl"])), 4);
}

#[test]
fn train_then_simulate() {
    let dir = small_dir();
    let p = dir.path();
    assert_eq!(code(&lacon(p, &["gen-data", "--config", "small.cfg", "--out", "data"])), 0);
    let o = lacon(p, &["train", "--config", "small.cfg", "--data", "data", "--out", "det"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let log = fs::read_to_string(p.join("det/epochs.jsonl")).unwrap();
    assert_eq!(log.lines().count(), 3);
    let first: serde_json::Value = serde_json::from_str(log.lines().next().unwrap()).unwrap();
    assert!(first["validation"]["level1"].is_number());
    assert!(p.join("det/attention.json").exists());

    let o = lacon(p, &["train", "--config", "small.cfg", "--data", "data", "--mode", "stoch", "--prior-checkpoint", "det/model.ckpt", "--out", "stoch"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let log = fs::read_to_string(p.join("stoch/epochs.jsonl")).unwrap();
    let last: serde_json::Value = serde_json::from_str(log.lines().last().unwrap()).unwrap();
    assert!(last["kl_mean"].as_f64().unwrap() >= 0.0);

    let o = lacon(p, &["simulate", "--config", "small.cfg", "--checkpoint", "det/model.ckpt", "--no-gate", "--out", "sim"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(p.join("sim/metrics.csv")).unwrap();
    let overall = csv.lines().find(|l| l.starts_with("overall,")).unwrap();
    assert_eq!(overall.split(',').nth(5).unwrap(), "1.000000", "{csv}");
    assert!(fs::read_to_string(p.join("sim/traces.jsonl")).unwrap().lines().count() > 0);

    let o = lacon(p, &["simulate", "--config", "small.cfg", "--checkpoint", "data/train.jsonl"]);
    assert_eq!(code(&o), 4);
}

#[test]
fn zero_learning_rate_gives_flat_loss() {
    let dir = small_dir();
    let p = dir.path();
    fs::write(p.join("flat.cfg"), format!("{SMALL}train.lr = 0\n")).unwrap();
    assert_eq!(code(&lacon(p, &["gen-data", "--config", "flat.cfg", "--out", "data"])), 0);
    assert_eq!(code(&lacon(p, &["train", "--config", "flat.cfg", "--data", "data", "--out", "m"])), 0);
    let losses: Vec<f64> = fs::read_to_string(p.join("m/epochs.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["train_loss"].as_f64().unwrap())
        .collect();
    assert!(losses.windows(2).all(|w| w[0] == w[1]), "{losses:?}");
}

#[test]
fn gradcheck_reports_and_fails_on_injected_fault() {
    let dir = tempfile::tempdir().unwrap();
    let o = lacon(dir.path(), &["gradcheck"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    for name in lacon::gradcheck::CHECK_NAMES {
        let line = stdout(&o).lines().find(|l| l.starts_with(name)).map(str::to_owned).unwrap_or_default();
        assert!(line.contains("PASS") && line.contains("measured=") && line.contains("tolerance="), "{name}: {line}");
    }
    let o = lacon(dir.path(), &["gradcheck", "--inject-fault", "sparsemax-jacobian"]);
    assert_eq!(code(&o), 5);
    assert!(stdout(&o).lines().any(|l| l.starts_with("sparsemax.jacobian") && l.contains("FAIL")));
}

fn trace(kind: CommandKind, gated: bool, outcome: Outcome) -> CommandTrace {
    CommandTrace {
        command: Order { kind, target_unit: 1, issue_frame: 0, max_frames: 60 },
        gated,
        start_distance: 3.0,
        aborted: false,
        frames: vec![],
        outcome,
    }
}

#[test]
fn report_matches_hand_counts() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    // 10 received, 8 executed, 6 successes, 1 abnormal.
    let mut a = vec![trace(CommandKind::Attack, false, Outcome::Rejected), trace(CommandKind::Attack, false, Outcome::Rejected)];
    a.extend((0..6).map(|_| trace(CommandKind::Attack, true, Outcome::Success)));
    a.push(trace(CommandKind::Attack, true, Outcome::Abnormal));
    a.push(trace(CommandKind::Attack, true, Outcome::NormalEnd));
    write_traces(&p.join("a.jsonl"), &a).unwrap();
    let b = vec![trace(CommandKind::Retreat, false, Outcome::Rejected)];
    write_traces(&p.join("b.jsonl"), &b).unwrap();

    let o = lacon(p, &["report", "a.jsonl", "b.jsonl", "--out", "rep"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(p.join("rep/report.csv")).unwrap();
    assert!(csv.contains("a.jsonl,overall,10,8,6,1,0.800000,0.750000,0.125000"), "{csv}");
    assert!(csv.contains("b.jsonl,retreat,1,0,0,0,0.000000,undefined,undefined"), "{csv}");
    assert!(csv.contains("all,overall,11,8,6,1,"), "{csv}");
    let text = stdout(&o);
    assert!(text.contains("== a.jsonl") && text.contains("== b.jsonl") && text.contains("== all"), "{text}");
}
