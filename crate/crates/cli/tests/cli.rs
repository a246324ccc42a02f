use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dramn::config::DEMO_CONFIG;

fn quick_config(dir: &Path) -> PathBuf {
    let text = DEMO_CONFIG
        .replace("epochs = 200", "epochs = 3")
        .replace("repetitions = 200", "repetitions = 5");
    let path = dir.join("quick.toml");
    std::fs::write(&path, text).unwrap();
    path
}

fn dramn(config: &Path, root: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dramn"))
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(root)
        .arg("--deterministic")
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "seed = 1\n[train]\nlearning_rate = 0.1\n").unwrap();
    let o = dramn(&bad, dir.path(), &["generate"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("learning_rate"));
}

#[test]
fn generate_is_idempotent_and_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_config(dir.path());
    let root = dir.path().join("run");
    let first = dramn(&cfg, &root, &["generate"]);
    assert!(first.status.success(), "{}", stderr(&first));
    assert!(stdout(&first).contains("72 scenarios (72 written, 0 reused)"));
    assert!(stdout(&first).contains("event\tstable\tunstable\tdiverged\ttotal"));
    let manifest = std::fs::read(root.join("store/manifest.tsv")).unwrap();

    let again = dramn(&cfg, &root, &["generate", "--skip-existing"]);
    assert!(stdout(&again).contains("72 scenarios (0 written, 72 reused)"));
    assert_eq!(std::fs::read(root.join("store/manifest.tsv")).unwrap(), manifest);

    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let o = dramn(&cfg, &blocker.join("run"), &["generate"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(!blocker.join("run/store/manifest.tsv").exists());
}

#[test]
fn missing_inputs_are_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_config(dir.path());
    let o = dramn(&cfg, dir.path(), &["train"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("missing artifact: scenario manifest"), "{}", stderr(&o));
    assert!(dramn(&cfg, dir.path(), &["generate"]).status.success());
    for cmd in ["evaluate", "noise"] {
        let o = dramn(&cfg, dir.path(), &[cmd]);
        assert_eq!(o.status.code(), Some(3));
        assert!(stderr(&o).contains("model.ckpt"), "{}", stderr(&o));
    }
}

#[test]
fn full_pipeline_with_cache_recovery() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_config(dir.path());
    let root = dir.path();
    assert!(dramn(&cfg, root, &["generate"]).status.success());
    let t = dramn(&cfg, root, &["train"]);
    assert!(stdout(&t).contains("cache hits 0 misses 72 rebuilt 0"), "{}", stdout(&t));

    let cache: Vec<PathBuf> = std::fs::read_dir(root.join("cache")).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(cache.len(), 72);
    let mut bytes = std::fs::read(&cache[0]).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0xff;
    std::fs::write(&cache[0], bytes).unwrap();
    let t = dramn(&cfg, root, &["train", "--resume"]);
    assert!(stdout(&t).contains("cache hits 71 misses 0 rebuilt 1"), "{}", stdout(&t));

    let e = dramn(&cfg, root, &["evaluate", "--window-sweep", "--node-subsets"]);
    assert!(e.status.success(), "{}", stderr(&e));
    let sweep = std::fs::read_to_string(root.join("reports/window_sweep.tsv")).unwrap();
    let rows: Vec<&str> = sweep.lines().skip(2).collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows.iter().filter(|r| r.ends_with("\t1")).count(), 1);
    assert!(stdout(&e).contains("<- best F1"));
    let subsets = std::fs::read_to_string(root.join("reports/node_subsets.tsv")).unwrap();
    assert_eq!(subsets.lines().count(), 2 + 3);

    let s = dramn(&cfg, root, &["select"]);
    assert!(stdout(&s).lines().next().unwrap().starts_with("selected: "));
    let strength = std::fs::read_to_string(root.join("reports/node_strength.tsv")).unwrap();
    assert!(strength.starts_with("# dramn "));
    assert_eq!(strength.lines().count(), 2 + 6);

    let b = dramn(&cfg, root, &["bench"]);
    assert!(b.status.success());
    let bench = std::fs::read_to_string(root.join("reports/bench.tsv")).unwrap();
    assert_eq!(bench.lines().nth(1), Some("n_channels\tstage\trepetitions\tmean_ms\tp95_ms"));
    assert_eq!(bench.lines().count(), 2 + 4);

    let a = dramn(&cfg, root, &["ablate"]);
    assert!(a.status.success(), "{}", stderr(&a));
    for name in ["dramn_lseq3", "dramn_lseq1", "identity_lstm", "single_step_gcn"] {
        assert!(stdout(&a).contains(name));
    }
}
