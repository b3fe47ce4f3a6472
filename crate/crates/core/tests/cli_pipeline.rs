use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn matchlift(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_matchlift"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn listing(dir: &Path) -> Vec<String> {
    let mut names: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

#[test]
fn help_and_version_touch_nothing() {
    let dir = tempfile::tempdir().unwrap();
    for args in [&["--help"][..], &["--version"], &["solve", "--help"], &["sweep", "--help"]] {
        let out = matchlift(dir.path(), args);
        assert!(out.status.success(), "{args:?}");
        assert!(!out.stdout.is_empty());
    }
    assert!(listing(dir.path()).is_empty());
    let help = String::from_utf8(matchlift(dir.path(), &["--help"]).stdout).unwrap();
    for cmd in ["gen", "estimate-m", "solve", "round", "pipeline", "sweep"] {
        assert!(help.contains(cmd), "help lacks {cmd}");
    }
}

const GENERATED: &str = r#"
seed = 21
estimate_m = true
[generate]
m = 3
n = 6
p_set = 1.0
p_obs = 1.0
p_false = 0.0
"#;

#[test]
fn noiseless_pipeline_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.toml"), GENERATED).unwrap();
    let out = matchlift(dir.path(), &["pipeline", "--config", "run.toml", "--out-dir", "out"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let metrics: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(metrics["exact"], true);
    let written = listing(&dir.path().join("out"));
    for f in ["instance.txt", "truth.txt", "spectrum.csv", "x_hat.txt", "trace.csv", "solve.json", "rounded.txt", "metrics.json"] {
        assert!(written.iter().any(|w| w == f), "missing {f}");
    }
}

#[test]
fn conflicting_universe_policies_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let text = GENERATED.replace("estimate_m = true", "estimate_m = true\nm = 3");
    fs::write(dir.path().join("run.toml"), text).unwrap();
    let out = matchlift(dir.path(), &["pipeline", "--config", "run.toml"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("config stage failed"));
    let missing = matchlift(dir.path(), &["estimate-m", "absent.txt"]);
    assert_eq!(missing.status.code(), Some(4));
}

#[test]
fn replaying_written_instance_reproduces_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let noisy = GENERATED
        .replace("n = 6", "n = 8")
        .replace("p_obs = 1.0", "p_obs = 0.7")
        .replace("p_false = 0.0", "p_false = 0.2");
    fs::write(dir.path().join("gen.toml"), &noisy).unwrap();
    assert!(matchlift(dir.path(), &["pipeline", "--config", "gen.toml", "--out-dir", "a"]).status.success());

    // copy the written instance aside and replay it with the same seed
    fs::create_dir(dir.path().join("in")).unwrap();
    for f in ["instance.txt", "truth.txt"] {
        fs::copy(dir.path().join("a").join(f), dir.path().join("in").join(f)).unwrap();
    }
    let before: Vec<_> = ["instance.txt", "truth.txt"]
        .iter()
        .map(|f| fs::read(dir.path().join("in").join(f)).unwrap())
        .collect();
    let replay = "seed = 21\nestimate_m = true\ninstance = \"in/instance.txt\"\ntruth = \"in/truth.txt\"\n";
    fs::write(dir.path().join("replay.toml"), replay).unwrap();
    let out = matchlift(dir.path(), &["pipeline", "--config", "replay.toml", "--out-dir", "b"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    for f in ["spectrum.csv", "x_hat.txt", "trace.csv", "solve.json", "rounded.txt", "metrics.json"] {
        let a = fs::read(dir.path().join("a").join(f)).unwrap();
        let b = fs::read(dir.path().join("b").join(f)).unwrap();
        assert!(a == b, "{f} differs between generated and replayed runs");
    }
    let after: Vec<_> = ["instance.txt", "truth.txt"]
        .iter()
        .map(|f| fs::read(dir.path().join("in").join(f)).unwrap())
        .collect();
    assert_eq!(before, after, "inputs were modified");
}

#[test]
fn subcommands_chain_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let gen = matchlift(
        dir.path(),
        &["--seed", "3", "gen", "--m", "3", "--n", "5", "--p-set", "1", "--p-obs", "1", "--p-true", "1", "--out", "inst"],
    );
    assert!(gen.status.success(), "{}", String::from_utf8_lossy(&gen.stderr));
    let est = matchlift(dir.path(), &["estimate-m", "inst.txt", "--spectrum", "spec.csv"]);
    assert_eq!(String::from_utf8_lossy(&est.stdout).trim(), "3");
    assert!(fs::read_to_string(dir.path().join("spec.csv")).unwrap().starts_with("index,eigenvalue\n"));
    let solve = matchlift(dir.path(), &["solve", "inst.txt", "--m", "3", "--out-dir", "s"]);
    assert!(solve.status.success(), "{}", String::from_utf8_lossy(&solve.stderr));
    let round = matchlift(
        dir.path(),
        &["round", "s/x_hat.txt", "--r", "3", "--out", "r.txt", "--truth", "inst.truth.txt"],
    );
    assert!(round.status.success(), "{}", String::from_utf8_lossy(&round.stderr));
    let metrics: serde_json::Value = serde_json::from_slice(&round.stdout).unwrap();
    assert_eq!(metrics["exact"], true);
    let both = matchlift(dir.path(), &["gen", "--m", "2", "--n", "2", "--p-set", "1", "--p-obs", "1", "--p-true", "1", "--p-false", "0", "--out", "x"]);
    assert_eq!(both.status.code(), Some(2));
}
