//! Executes an [`ExperimentPlan`] and persists one record per run.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{DatasetPlan, ExperimentPlan};
use super::technique::{TechniqueId, Treatment};
use crate::augment::{augment_noise, augment_rotation, NoiseSpec};
use crate::error::{Error, Result};
use crate::ingest::{read_cache, split_subjects, write_cache, Dataset, DatasetKind, RawDataset};
use crate::preprocess::{denoise_stream, MaSpec};
use crate::signal::{fit_stats, normalize};
use crate::training::{build_model, train};

pub const RESULTS_FILE: &str = "results.jsonl";
pub const TIMINGS_FILE: &str = "timings.jsonl";
pub const LOG_DIR: &str = "logs";

/// Outcome of one (dataset, technique, seed) run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub dataset: String,
    pub technique: TechniqueId,
    pub seed: u64,
    /// Final-epoch test accuracy, percent.
    pub accuracy: f64,
    /// Same-seed baseline accuracy, if the baseline run succeeded.
    pub baseline_accuracy: Option<f64>,
    pub delta: Option<f64>,
    pub best_epoch: usize,
    pub best_accuracy: f64,
    pub epochs: usize,
    pub train_windows: usize,
    pub test_windows: usize,
    pub parameters: usize,
    /// Kept out of the results file so reruns are byte-identical.
    #[serde(skip)]
    pub wall_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureStage {
    Dataset,
    Training,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub dataset: String,
    pub technique: Option<TechniqueId>,
    pub seed: Option<u64>,
    pub stage: FailureStage,
    pub message: String,
}

/// One line of `results.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ResultRecord {
    Run(RunResult),
    Failure(FailureRecord),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlanOutcome {
    pub runs: Vec<RunResult>,
    pub failures: Vec<FailureRecord>,
    pub results_path: PathBuf,
}

impl PlanOutcome {
    pub fn has_failure(&self, stage: FailureStage) -> bool {
        self.failures.iter().any(|f| f.stage == stage)
    }
}

/// Appends whole lines, flushing after each so concurrent readers never see
/// a partial record.
struct LineSink {
    file: File,
}

impl LineSink {
    fn create(path: &Path) -> Result<Self> {
        Ok(Self { file: File::create(path)? })
    }

    fn append(path: &Path) -> Result<Self> {
        Ok(Self { file: OpenOptions::new().create(true).append(true).open(path)? })
    }

    fn write<T: Serialize>(&mut self, value: &T) -> Result<()> {
        let mut line = serde_json::to_string(value).map_err(|e| Error::Report(e.to_string()))?;
        line.push('\n');
        self.file.write_all(line.as_bytes())?;
        self.file.flush()?;
        Ok(())
    }
}

#[derive(Serialize)]
struct Timing<'a> {
    dataset: &'a str,
    technique: TechniqueId,
    seed: u64,
    wall_ms: u64,
}

/// Reads the dataset (through the cache if configured) and applies the
/// subject subset.
pub fn load_raw(plan: &DatasetPlan, subset_seed: u64) -> Result<RawDataset> {
    let raw = match &plan.cache {
        Some(path) if path.is_file() => {
            let raw = read_cache(path)?;
            if raw.kind != plan.kind {
                return Err(Error::ingest(path, format!("cache holds {}, expected {}", raw.kind, plan.kind)));
            }
            raw
        }
        Some(path) => {
            let raw = plan.kind.read(&plan.root)?;
            write_cache(&raw, path)?;
            raw
        }
        None => plan.kind.read(&plan.root)?,
    };
    raw.subset_subjects(plan.subject_fraction, subset_seed)
}

/// Windowed dataset for a technique before augmentation and normalisation.
fn windowed(raw: &RawDataset, plan: &DatasetPlan, technique: TechniqueId, split: &crate::ingest::SubjectSplit) -> Result<Dataset> {
    match technique.treatment() {
        Treatment::MovingAverage(n) => {
            let spec = MaSpec::new(n)?;
            let filtered = raw.map_streams(|s| if s.len() < n { Ok(None) } else { denoise_stream(s, spec).map(Some) })?;
            filtered.into_dataset(plan.window, split)
        }
        _ => raw.into_dataset(plan.window, split),
    }
}

/// Applies the technique's training-set augmentation, then z-scores both
/// splits with statistics fitted on the (augmented) training set.
pub fn prepare(mut ds: Dataset, technique: TechniqueId, noise_fraction: f64, seed: u64) -> Result<Dataset> {
    if ds.train.is_empty() {
        return Err(Error::Empty(format!("{}: no training windows", ds.name)));
    }
    match technique.treatment() {
        Treatment::Rotation(axis) => ds.train = augment_rotation(&ds.train, axis)?,
        Treatment::Noise => {
            let raw_stats = fit_stats(&ds.train)?;
            ds.train = augment_noise(&ds.train, &NoiseSpec::new(noise_fraction, seed)?, &raw_stats)?;
        }
        _ => {}
    }
    let stats = fit_stats(&ds.train)?;
    ds.train = ds.train.iter().map(|w| normalize(w, &stats)).collect();
    ds.test = ds.test.iter().map(|w| normalize(w, &stats)).collect();
    Ok(ds)
}

fn run_one(
    plan: &ExperimentPlan,
    dplan: &DatasetPlan,
    base: &Dataset,
    technique: TechniqueId,
    seed: u64,
    log_path: &Path,
) -> Result<RunResult> {
    let ds = prepare(base.clone(), technique, dplan.noise_fraction, seed)?;
    if ds.test.is_empty() {
        return Err(Error::Empty(format!("{}: no test windows", ds.name)));
    }
    let spec = plan.model.spec(technique.variant(), ds.class_count());
    let mut model = build_model(spec, seed)?;
    let cfg = plan.train_config(dplan, seed);
    let mut log_sink = LineSink::create(log_path)?;
    let mut sink_err = None;
    let start = Instant::now();
    let log = train(&mut model, &ds, &cfg, |rec| {
        if let Err(e) = log_sink.write(rec) {
            sink_err.get_or_insert(e);
        }
    })?;
    if let Some(e) = sink_err {
        return Err(e);
    }
    let accuracy = log.final_accuracy().ok_or_else(|| Error::Train("no final accuracy recorded".into()))?;
    let best = log.best_epoch().expect("final epoch is always evaluated");
    let (down, total) = log.early_loss_trend();
    if total == 2 && down < 2 {
        log::warn!("{} {technique} seed {seed}: training loss rose in {}/{total} early epochs", ds.name, total - down);
    }
    Ok(RunResult {
        dataset: ds.name.clone(),
        technique,
        seed,
        accuracy,
        baseline_accuracy: None,
        delta: None,
        best_epoch: best.epoch,
        best_accuracy: best.test_acc.unwrap_or(accuracy),
        epochs: cfg.epochs,
        train_windows: ds.train.len(),
        test_windows: ds.test.len(),
        parameters: model.param_count(),
        wall_ms: start.elapsed().as_millis() as u64,
    })
}

/// Runs every (dataset, seed, technique) combination, baseline first.
/// Dataset failures skip that dataset; training failures skip that run.
/// Both are recorded in the results file.
pub fn run_plan(plan: &ExperimentPlan) -> Result<PlanOutcome> {
    std::fs::create_dir_all(plan.output_dir.join(LOG_DIR))?;
    let results_path = plan.output_dir.join(RESULTS_FILE);
    let mut results = LineSink::create(&results_path)?;
    let mut timings = LineSink::append(&plan.output_dir.join(TIMINGS_FILE))?;
    let mut outcome = PlanOutcome { results_path, ..Default::default() };

    for dplan in &plan.datasets {
        let name = dplan.kind.name();
        let loaded = load_raw(dplan, plan.split.seed).and_then(|raw| {
            let split = split_subjects(&raw.subjects(), plan.split.test_fraction, plan.split.seed)?;
            log::info!("{name}: train subjects {:?}, test subjects {:?}", split.train, split.test);
            Ok((raw, split))
        });
        let (raw, split) = match loaded {
            Ok(v) => v,
            Err(e) => {
                log::error!("{name}: {e}");
                let f = FailureRecord {
                    dataset: name.to_string(),
                    technique: None,
                    seed: None,
                    stage: FailureStage::Dataset,
                    message: e.to_string(),
                };
                results.write(&ResultRecord::Failure(f.clone()))?;
                outcome.failures.push(f);
                continue;
            }
        };

        let mut windowed_cache: BTreeMap<TechniqueId, Result<Dataset>> = BTreeMap::new();
        for &seed in &plan.seeds {
            let mut baseline_acc = None;
            for &technique in &plan.techniques {
                let key = match technique.treatment() {
                    Treatment::MovingAverage(_) => technique,
                    _ => TechniqueId::Baseline,
                };
                let base = windowed_cache.entry(key).or_insert_with(|| windowed(&raw, dplan, technique, &split));
                let log_path = plan.output_dir.join(LOG_DIR).join(format!("{name}_{technique}_seed{seed}.jsonl"));
                log::info!("{name} {technique} seed {seed}");
                let result = match base {
                    Ok(base) => run_one(plan, dplan, base, technique, seed, &log_path),
                    Err(e) => Err(Error::Train(format!("windowing failed: {e}"))),
                };
                match result {
                    Ok(mut r) => {
                        if technique == TechniqueId::Baseline {
                            baseline_acc = Some(r.accuracy);
                        }
                        r.baseline_accuracy = baseline_acc;
                        r.delta = baseline_acc.map(|b| r.accuracy - b);
                        results.write(&ResultRecord::Run(r.clone()))?;
                        timings.write(&Timing { dataset: name, technique, seed, wall_ms: r.wall_ms })?;
                        outcome.runs.push(r);
                    }
                    Err(e) => {
                        log::error!("{name} {technique} seed {seed}: {e}");
                        let f = FailureRecord {
                            dataset: name.to_string(),
                            technique: Some(technique),
                            seed: Some(seed),
                            stage: FailureStage::Training,
                            message: e.to_string(),
                        };
                        results.write(&ResultRecord::Failure(f.clone()))?;
                        outcome.failures.push(f);
                    }
                }
            }
        }
    }
    Ok(outcome)
}

/// Parses a results file written by [`run_plan`].
pub fn read_results(path: &Path) -> Result<Vec<ResultRecord>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Report(format!("cannot read {}: {e}", path.display())))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Report(format!("{} line {}: {e}", path.display(), i + 1)))
        })
        .collect()
}

/// Dataset kind from a result record's dataset name.
pub fn dataset_kind(name: &str) -> Option<DatasetKind> {
    name.parse().ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn records_roundtrip_with_kind_tag() {
        let run = ResultRecord::Run(RunResult {
            dataset: "ridi".into(),
            technique: TechniqueId::RotAll,
            seed: 3,
            accuracy: 91.25,
            baseline_accuracy: Some(90.0),
            delta: Some(1.25),
            best_epoch: 7,
            best_accuracy: 92.0,
            epochs: 10,
            train_windows: 400,
            test_windows: 100,
            parameters: 12345,
            wall_ms: 999,
        });
        let line = serde_json::to_string(&run).unwrap();
        assert!(line.starts_with(r#"{"kind":"run","dataset":"ridi","technique":"rot_all""#));
        assert!(!line.contains("wall_ms"));
        let back: ResultRecord = serde_json::from_str(&line).unwrap();
        match back {
            ResultRecord::Run(r) => assert_eq!((r.accuracy, r.delta, r.wall_ms), (91.25, Some(1.25), 0)),
            _ => panic!("wrong kind"),
        }
        let fail = ResultRecord::Failure(FailureRecord {
            dataset: "uci_har".into(),
            technique: None,
            seed: None,
            stage: FailureStage::Dataset,
            message: "missing".into(),
        });
        let line = serde_json::to_string(&fail).unwrap();
        assert!(line.contains(r#""kind":"failure""#) && line.contains(r#""stage":"dataset""#));
        assert_eq!(serde_json::from_str::<ResultRecord>(&line).unwrap(), fail);
    }

    #[test]
    fn normalisation_stats_come_from_augmented_train_set() {
        use crate::ingest::Provenance;
        use crate::signal::{ImuSample, Window};
        let window = |i: usize| Window {
            samples: (0..10)
                .map(|t| {
                    let v = (i * 10 + t) as f64;
                    ImuSample::from_channels([v, 2.0 * v, 3.0 + v.sin(), v.cos(), 1.0 + 0.1 * v, -v], t as u64)
                })
                .collect(),
            label: i % 2,
            subject: 1,
            rate_hz: 50,
        };
        let ds = Dataset {
            name: "t".into(),
            kind: DatasetKind::Ridi,
            rate_hz: 50,
            window_len: 10,
            classes: vec!["a".into(), "b".into()],
            train: (0..6).map(window).collect(),
            test: (6..8).map(window).collect(),
            train_subjects: vec![1],
            test_subjects: vec![2],
            provenance: Provenance::default(),
        };
        for t in [TechniqueId::Baseline, TechniqueId::RotAll, TechniqueId::Noise] {
            let out = prepare(ds.clone(), t, 0.05, 3).unwrap();
            let stats = crate::signal::fit_stats(&out.train).unwrap();
            for c in 0..6 {
                assert!(stats.mean[c].abs() < 1e-9 && (stats.std[c] - 1.0).abs() < 1e-9, "{t} channel {c}");
            }
            assert_eq!(out.test.len(), 2);
        }
    }
}
