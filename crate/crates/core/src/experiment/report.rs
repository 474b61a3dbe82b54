//! Improvement-over-baseline tables built purely from a results file.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::plot::{bar_chart, Bar};
use super::runner::{dataset_kind, read_results, ResultRecord, RunResult};
use super::technique::TechniqueId;
use crate::error::{Error, Result};

/// One run with its delta recomputed against the same-seed baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRow {
    pub dataset: String,
    pub technique: TechniqueId,
    pub seed: u64,
    pub accuracy: f64,
    pub baseline_accuracy: f64,
    pub delta: f64,
    /// Trainable parameters; multi-head variants are larger than baseline.
    pub parameters: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spread {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl Spread {
    fn of(values: &[f64]) -> Spread {
        let n = values.len() as f64;
        Spread {
            mean: values.iter().sum::<f64>() / n,
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

/// Per (dataset, technique) aggregate over seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct ImprovementRow {
    pub dataset: String,
    pub technique: TechniqueId,
    pub seeds: usize,
    pub accuracy: Spread,
    pub delta: Spread,
}

/// Cross-dataset statistic per technique.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub technique: TechniqueId,
    pub datasets_evaluated: usize,
    /// Datasets whose mean delta is strictly positive.
    pub datasets_improved: usize,
    /// Largest mean delta over evaluated datasets.
    pub max_improvement: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub runs: Vec<RunRow>,
    pub improvements: Vec<ImprovementRow>,
    pub summary: Vec<SummaryRow>,
}

fn dataset_order(name: &str) -> (u8, String) {
    (dataset_kind(name).map_or(u8::MAX, |k| k as u8), name.to_string())
}

/// Builds all tables from run records. Failure records are ignored.
pub fn build_report(records: &[ResultRecord]) -> Result<Report> {
    let runs: Vec<&RunResult> = records
        .iter()
        .filter_map(|r| match r {
            ResultRecord::Run(run) => Some(run),
            ResultRecord::Failure(_) => None,
        })
        .collect();
    if runs.is_empty() {
        return Err(Error::Report("results contain no completed runs".into()));
    }

    let mut baselines: BTreeMap<(&str, u64), f64> = BTreeMap::new();
    for r in runs.iter().filter(|r| r.technique == TechniqueId::Baseline) {
        if baselines.insert((r.dataset.as_str(), r.seed), r.accuracy).is_some() {
            return Err(Error::Report(format!("duplicate baseline for {} seed {}", r.dataset, r.seed)));
        }
    }

    let mut rows = Vec::with_capacity(runs.len());
    let mut seen = std::collections::BTreeSet::new();
    for r in &runs {
        if !(0.0..=100.0).contains(&r.accuracy) {
            return Err(Error::Report(format!("{} {} seed {}: accuracy {} outside [0, 100]", r.dataset, r.technique, r.seed, r.accuracy)));
        }
        if !seen.insert((r.dataset.as_str(), r.technique, r.seed)) {
            return Err(Error::Report(format!("duplicate run {} {} seed {}", r.dataset, r.technique, r.seed)));
        }
        let base = *baselines.get(&(r.dataset.as_str(), r.seed)).ok_or_else(|| {
            Error::Report(format!("missing baseline for dataset {} (seed {})", r.dataset, r.seed))
        })?;
        rows.push(RunRow {
            dataset: r.dataset.clone(),
            technique: r.technique,
            seed: r.seed,
            accuracy: r.accuracy,
            baseline_accuracy: base,
            delta: r.accuracy - base,
            parameters: r.parameters,
        });
    }
    rows.sort_by(|a, b| {
        (dataset_order(&a.dataset), a.technique, a.seed).cmp(&(dataset_order(&b.dataset), b.technique, b.seed))
    });

    let mut groups: BTreeMap<((u8, String), TechniqueId), Vec<&RunRow>> = BTreeMap::new();
    for r in &rows {
        groups.entry((dataset_order(&r.dataset), r.technique)).or_default().push(r);
    }
    let improvements: Vec<ImprovementRow> = groups
        .into_iter()
        .map(|(((_, dataset), technique), rs)| ImprovementRow {
            dataset,
            technique,
            seeds: rs.len(),
            accuracy: Spread::of(&rs.iter().map(|r| r.accuracy).collect::<Vec<_>>()),
            delta: Spread::of(&rs.iter().map(|r| r.delta).collect::<Vec<_>>()),
        })
        .collect();

    let summary = TechniqueId::ALL
        .into_iter()
        .filter(|t| *t != TechniqueId::Baseline)
        .filter_map(|t| {
            let deltas: Vec<f64> = improvements.iter().filter(|r| r.technique == t).map(|r| r.delta.mean).collect();
            (!deltas.is_empty()).then(|| SummaryRow {
                technique: t,
                datasets_evaluated: deltas.len(),
                datasets_improved: deltas.iter().filter(|d| **d > 0.0).count(),
                max_improvement: deltas.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            })
        })
        .collect();

    Ok(Report { runs: rows, improvements, summary })
}

impl Report {
    pub fn datasets(&self) -> Vec<String> {
        let mut names: Vec<String> = Vec::new();
        for r in &self.improvements {
            if !names.contains(&r.dataset) {
                names.push(r.dataset.clone());
            }
        }
        names
    }

    pub fn runs_csv(&self) -> String {
        let mut s = String::from("dataset,technique,seed,accuracy,baseline_accuracy,delta,parameters\n");
        for r in &self.runs {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                r.dataset, r.technique, r.seed, r.accuracy, r.baseline_accuracy, r.delta, r.parameters
            );
        }
        s
    }

    pub fn improvements_csv(&self) -> String {
        let mut s = String::from(
            "dataset,technique,seeds,accuracy_mean,accuracy_min,accuracy_max,delta_mean,delta_min,delta_max\n",
        );
        for r in &self.improvements {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{}",
                r.dataset, r.technique, r.seeds, r.accuracy.mean, r.accuracy.min, r.accuracy.max, r.delta.mean,
                r.delta.min, r.delta.max
            );
        }
        s
    }

    pub fn summary_csv(&self) -> String {
        let mut s = String::from("technique,datasets_evaluated,datasets_improved,max_improvement\n");
        for r in &self.summary {
            let _ = writeln!(s, "{},{},{},{}", r.technique, r.datasets_evaluated, r.datasets_improved, r.max_improvement);
        }
        s
    }

    /// Writes the CSV tables and SVG charts, returning the paths written.
    pub fn write(&self, out: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(out)?;
        let mut files = vec![
            (out.join("runs.csv"), self.runs_csv()),
            (out.join("improvements.csv"), self.improvements_csv()),
            (out.join("summary.csv"), self.summary_csv()),
        ];
        for ds in self.datasets() {
            let bars: Vec<Bar> = self
                .improvements
                .iter()
                .filter(|r| r.dataset == ds && r.technique != TechniqueId::Baseline)
                .map(|r| Bar { label: r.technique.to_string(), value: r.delta.mean })
                .collect();
            if !bars.is_empty() {
                let title = format!("{ds}: accuracy change vs baseline (points)");
                files.push((out.join(format!("deltas_{ds}.svg")), bar_chart(&title, &bars)));
            }
        }
        let bars: Vec<Bar> = self
            .summary
            .iter()
            .map(|r| Bar { label: r.technique.to_string(), value: r.datasets_improved as f64 })
            .collect();
        if !bars.is_empty() {
            files.push((out.join("summary.svg"), bar_chart("datasets improved per technique", &bars)));
        }
        for (path, content) in &files {
            std::fs::write(path, content)?;
        }
        Ok(files.into_iter().map(|(p, _)| p).collect())
    }
}

/// Reads `results` and writes every report artifact into `out`.
pub fn report(results: &Path, out: &Path) -> Result<Report> {
    let records = read_results(results)?;
    let rep = build_report(&records)?;
    rep.write(out)?;
    Ok(rep)
}
