//! UCI HAR raw inertial signals.
//!
//! Layout: `{train,test}/Inertial Signals/{total_acc,body_gyro}_{x,y,z}_<split>.txt`
//! (one 128-sample window per row, 50 % overlap), with `y_<split>.txt` and
//! `subject_<split>.txt` alongside. Total acceleration is in g, gyroscope in
//! rad/s. The published train/test partition is ignored: rows are stitched
//! back into contiguous streams by matching the overlapping halves, and the
//! subject-wise split is applied later like for every other dataset.

use std::path::{Path, PathBuf};

use super::{finish_raw, parse_f64, DatasetKind, RawDataset, StreamBuilder, STANDARD_GRAVITY};
use crate::error::{Error, Result};

const ROW_LEN: usize = 128;
const HOP: usize = ROW_LEN / 2;
const SIGNALS: [&str; 6] = ["total_acc_x", "total_acc_y", "total_acc_z", "body_gyro_x", "body_gyro_y", "body_gyro_z"];

fn locate(root: &Path) -> Result<PathBuf> {
    for cand in [root.to_path_buf(), root.join("UCI HAR Dataset")] {
        if cand.join("train").is_dir() || cand.join("test").is_dir() {
            return Ok(cand);
        }
    }
    Err(Error::ingest(root, "no train/ or test/ directory found"))
}

fn read_ints(path: &Path) -> Result<Vec<i64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::ingest(path, e.to_string()))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim()
                .parse::<i64>()
                .map_err(|_| Error::ingest(path, format!("line {}: expected an integer", i + 1)))
        })
        .collect()
}

fn read_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::ingest(path, e.to_string()))?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|f| parse_f64(f, path, i + 1))
            .collect::<Result<Vec<f64>>>()?;
        if row.len() != ROW_LEN {
            return Err(Error::ingest(path, format!("line {}: expected {ROW_LEN} values, got {}", i + 1, row.len())));
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Maps the 1-based activity ids (walking, upstairs, downstairs, sitting,
/// standing, laying) onto this crate's class order.
fn activity_class(id: i64) -> Option<usize> {
    match id {
        1 => Some(0),
        2 => Some(2),
        3 => Some(1),
        4 => Some(3),
        5 => Some(4),
        6 => Some(5),
        _ => None,
    }
}

struct Split {
    subjects: Vec<i64>,
    labels: Vec<i64>,
    signals: Vec<Vec<Vec<f64>>>,
}

fn read_split(base: &Path, split: &str, files: &mut Vec<PathBuf>) -> Result<Option<Split>> {
    let dir = base.join(split);
    if !dir.is_dir() {
        return Ok(None);
    }
    let subj_path = dir.join(format!("subject_{split}.txt"));
    let y_path = dir.join(format!("y_{split}.txt"));
    let subjects = read_ints(&subj_path)?;
    let labels = read_ints(&y_path)?;
    files.push(subj_path.clone());
    files.push(y_path.clone());
    if subjects.len() != labels.len() {
        return Err(Error::ingest(&y_path, "label count differs from subject count"));
    }
    let mut signals = Vec::with_capacity(SIGNALS.len());
    for name in SIGNALS {
        let p = dir.join("Inertial Signals").join(format!("{name}_{split}.txt"));
        let rows = read_rows(&p)?;
        if rows.len() != labels.len() {
            return Err(Error::ingest(&p, format!("{} rows but {} labels", rows.len(), labels.len())));
        }
        files.push(p);
        signals.push(rows);
    }
    Ok(Some(Split { subjects, labels, signals }))
}

pub fn read_uci_har(root: &Path) -> Result<RawDataset> {
    let base = locate(root)?;
    let mut raw = RawDataset::new(DatasetKind::UciHar, root);
    for split in ["train", "test"] {
        let Some(s) = read_split(&base, split, &mut raw.provenance.files)? else { continue };
        let sample = |r: usize, t: usize| -> ([f64; 3], [f64; 3]) {
            let v = |c: usize| s.signals[c][r][t];
            (
                [v(0) * STANDARD_GRAVITY, v(1) * STANDARD_GRAVITY, v(2) * STANDARD_GRAVITY],
                [v(3), v(4), v(5)],
            )
        };
        let continues = |r: usize| -> bool {
            r > 0
                && s.subjects[r] == s.subjects[r - 1]
                && (0..SIGNALS.len()).all(|c| {
                    let prev = &s.signals[c][r - 1][HOP..];
                    let cur = &s.signals[c][r][..HOP];
                    prev.iter().zip(cur).all(|(a, b)| a == b || (a - b).abs() <= 1e-9 * a.abs().max(1.0))
                })
        };

        let mut builder: Option<StreamBuilder> = None;
        let mut t = 0u64;
        for r in 0..s.labels.len() {
            let class = activity_class(s.labels[r]).ok_or_else(|| {
                Error::ingest(base.join(split).join(format!("y_{split}.txt")), format!("row {}: unknown activity {}", r + 1, s.labels[r]))
            })?;
            let subject = u32::try_from(s.subjects[r]).map_err(|_| {
                Error::ingest(base.join(split).join(format!("subject_{split}.txt")), format!("row {}: bad subject id", r + 1))
            })?;
            let start = if continues(r) {
                HOP
            } else {
                if let Some(b) = builder.take() {
                    let (streams, rejected) = b.finish();
                    raw.streams.extend(streams);
                    raw.provenance.rejected_rows += rejected;
                }
                builder = Some(StreamBuilder::new(subject));
                t = 0;
                0
            };
            let b = builder.as_mut().expect("builder initialised above");
            for k in start..ROW_LEN {
                let (f, w) = sample(r, k);
                b.push(f, w, t, class);
                t += 1;
            }
        }
        if let Some(b) = builder {
            let (streams, rejected) = b.finish();
            raw.streams.extend(streams);
            raw.provenance.rejected_rows += rejected;
        }
    }
    finish_raw(raw)
}
