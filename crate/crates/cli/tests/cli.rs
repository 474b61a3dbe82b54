use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn imubench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_imubench")).args(args).env("RUST_LOG", "warn").output().unwrap()
}

/// Five subjects of USC-HAD text exports, one file per class.
fn write_usc(root: &Path) {
    for s in 1..=5 {
        let dir = root.join(format!("Subject{s}"));
        fs::create_dir_all(&dir).unwrap();
        for (class, act) in [1, 6, 7, 8, 9].iter().enumerate() {
            let mut text = String::new();
            for t in 0..120 {
                let x = (t as f64 * 0.3 + s as f64).sin();
                text.push_str(&format!("{},{},{},{},{},{}\n", x + class as f64, 0.1 * x, 1.0 + 0.05 * x * x, 5.0 * x, class as f64, -x));
            }
            fs::write(dir.join(format!("a{act}t1.csv")), text).unwrap();
        }
    }
}

fn write_config(dir: &Path, data: &str) -> std::path::PathBuf {
    let cfg = format!(
        "output_dir = \"out\"\ntechniques = [\"baseline\", \"rot_z\"]\n[model]\nfilters = 4\nhidden = 4\nfc_width = 8\n[datasets.usc_had]\nroot = \"{data}\"\nwindow_len = 40\nepochs = 1\n"
    );
    let path = dir.join("exp.toml");
    fs::write(&path, cfg).unwrap();
    path
}

#[test]
fn run_then_report() {
    let dir = tempfile::tempdir().unwrap();
    write_usc(&dir.path().join("usc"));
    let cfg = write_config(dir.path(), "usc");
    let out = imubench(&["run", "--config", cfg.to_str().unwrap(), "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let results = dir.path().join("out").join("results.jsonl");
    assert_eq!(fs::read_to_string(&results).unwrap().lines().count(), 2);

    let report_dir = dir.path().join("report");
    let out = imubench(&["report", "--results", results.to_str().unwrap(), "--out", report_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("technique,datasets_evaluated"));
    for f in ["summary.csv", "improvements.csv", "runs.csv", "summary.svg", "deltas_usc_had.svg"] {
        assert!(report_dir.join(f).is_file(), "{f}");
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "seeds = \"x\"").unwrap();
    assert_eq!(imubench(&["run", "--config", bad.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(imubench(&["run", "--config", "/nonexistent.toml"]).status.code(), Some(1));

    let cfg = write_config(dir.path(), "missing");
    assert_eq!(imubench(&["run", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
    let out = imubench(&["run", "--config", cfg.to_str().unwrap(), "--technique", "ma7"]);
    assert_eq!(out.status.code(), Some(1));

    let empty = dir.path().join("empty.jsonl");
    fs::write(&empty, "").unwrap();
    let out = imubench(&["report", "--results", empty.to_str().unwrap(), "--out", dir.path().join("r").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));

    let out = imubench(&["summarize-dataset", "--name", "usc_had", "--root", dir.path().join("nowhere").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn summarize_dataset_prints_minutes() {
    let dir = tempfile::tempdir().unwrap();
    write_usc(dir.path());
    let out = imubench(&["summarize-dataset", "--name", "usc-sipi", "--root", dir.path().to_str().unwrap(), "--csv"]);
    assert_eq!(out.status.code(), Some(0));
    // 5 subjects × 120 samples at 100 Hz = 0.1 min per class.
    assert_eq!(
        String::from_utf8_lossy(&out.stdout),
        "class,minutes\nwalking,0.10\nrunning,0.10\njumping,0.10\nsitting,0.10\nstanding,0.10\n"
    );
}
