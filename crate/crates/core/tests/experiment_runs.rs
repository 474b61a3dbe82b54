mod common;

use std::path::Path;

use imubench_core::experiment::config::{ExperimentConfig, PlanFilter};
use imubench_core::experiment::runner::{LOG_DIR, RESULTS_FILE};
use imubench_core::experiment::{read_results, report, run_plan, FailureStage, ResultRecord, TechniqueId};
use imubench_core::training::EpochRecord;

fn config(data: &Path, out: &Path, extra: &str) -> ExperimentConfig {
    let text = format!(
        r#"
        output_dir = "{out}"
        seeds = [1]
        {extra}

        [model]
        filters = 4
        hidden = 4
        fc_width = 8

        [train]
        batch = 16

        [datasets.usc_had]
        root = "{data}/usc_had"
        window_len = 40
        epochs = 2
        "#,
        out = out.display(),
        data = data.display(),
    );
    ExperimentConfig::from_toml(&text).unwrap()
}

fn fixtures() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    common::write_usc_had(&dir.path().join("usc_had"), 5, 160);
    dir
}

#[test]
fn baseline_only_plan_gives_one_zero_delta() {
    let data = fixtures();
    let out = tempfile::tempdir().unwrap();
    let plan = config(data.path(), out.path(), r#"techniques = ["baseline"]"#)
        .plan(Path::new("."), &PlanFilter::default())
        .unwrap();
    let outcome = run_plan(&plan).unwrap();
    assert_eq!(outcome.runs.len(), 1);
    assert_eq!(outcome.runs[0].delta, Some(0.0));
    assert!((0.0..=100.0).contains(&outcome.runs[0].accuracy));

    let log = std::fs::read_to_string(out.path().join(LOG_DIR).join("usc_had_baseline_seed1.jsonl")).unwrap();
    let epochs: Vec<EpochRecord> = log.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(epochs.iter().map(|e| e.epoch).collect::<Vec<_>>(), vec![1, 2]);
    assert_eq!(epochs[1].test_acc, Some(outcome.runs[0].accuracy));
}

#[test]
fn full_technique_list_gives_eleven_traceable_results() {
    let data = fixtures();
    let out = tempfile::tempdir().unwrap();
    let plan = config(data.path(), out.path(), "").plan(Path::new("."), &PlanFilter::default()).unwrap();
    let outcome = run_plan(&plan).unwrap();
    assert_eq!(outcome.runs.len(), 11);
    assert_eq!(outcome.runs[0].technique, TechniqueId::Baseline);
    let techniques: Vec<TechniqueId> = outcome.runs.iter().map(|r| r.technique).collect();
    assert_eq!(techniques, TechniqueId::ALL.to_vec());

    let results = out.path().join(RESULTS_FILE);
    let records = read_results(&results).unwrap();
    assert_eq!(records.len(), 11);
    let rep = report(&results, &out.path().join("report")).unwrap();
    assert_eq!(rep.runs.len(), 11);
    let runs_csv = std::fs::read_to_string(out.path().join("report").join("runs.csv")).unwrap();
    for (line, rec) in runs_csv.lines().skip(1).zip(&records) {
        let ResultRecord::Run(r) = rec else { panic!("unexpected failure record") };
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!((f[0], f[1], f[2].parse::<u64>().unwrap()), (r.dataset.as_str(), r.technique.name(), r.seed));
        let acc: f64 = f[3].parse().unwrap();
        let base: f64 = f[4].parse().unwrap();
        let delta: f64 = f[5].parse().unwrap();
        assert_eq!(acc, r.accuracy);
        assert!((delta - (acc - base)).abs() < 1e-9);
        assert!((delta - r.delta.unwrap()).abs() < 1e-9);
    }
    // Rotation techniques double or quadruple the training set.
    let base_n = outcome.runs[0].train_windows;
    let n = |t: TechniqueId| outcome.runs.iter().find(|r| r.technique == t).unwrap().train_windows;
    assert_eq!(n(TechniqueId::RotX), 2 * base_n);
    assert_eq!(n(TechniqueId::RotAll), 4 * base_n);
    assert_eq!(n(TechniqueId::Noise), 2 * base_n);
    assert!(n(TechniqueId::Ma50) < base_n);
}

#[test]
fn missing_dataset_is_marked_and_others_continue() {
    let data = fixtures();
    let out = tempfile::tempdir().unwrap();
    let mut cfg = config(data.path(), out.path(), r#"techniques = ["baseline", "head2"]"#);
    let mut ridi = cfg.datasets["usc_had"].clone();
    ridi.root = data.path().join("does_not_exist");
    cfg.datasets.insert("ridi".into(), ridi);
    let outcome = run_plan(&cfg.plan(Path::new("."), &PlanFilter::default()).unwrap()).unwrap();
    assert_eq!(outcome.runs.len(), 2);
    assert_eq!(outcome.failures.len(), 1);
    assert_eq!((outcome.failures[0].dataset.as_str(), outcome.failures[0].stage), ("ridi", FailureStage::Dataset));
    let records = read_results(&out.path().join(RESULTS_FILE)).unwrap();
    assert!(matches!(&records[0], ResultRecord::Failure(f) if f.dataset == "ridi"));
    // The report ignores failure markers.
    assert_eq!(report(&out.path().join(RESULTS_FILE), &out.path().join("r")).unwrap().runs.len(), 2);
}

#[test]
fn cache_is_written_then_reused() {
    let data = fixtures();
    let out = tempfile::tempdir().unwrap();
    let mut cfg = config(data.path(), out.path(), r#"techniques = ["baseline"]"#);
    let cache = out.path().join("cache").join("usc.bin");
    cfg.datasets.get_mut("usc_had").unwrap().cache = Some(cache.clone());
    let plan = cfg.plan(Path::new("."), &PlanFilter::default()).unwrap();
    let first = run_plan(&plan).unwrap();
    assert!(cache.is_file());
    std::fs::remove_dir_all(data.path().join("usc_had")).unwrap();
    let second = run_plan(&plan).unwrap();
    assert_eq!(first.runs, second.runs);
}
