//! USC-HAD: `Subject<n>/a<activity>t<trial>.mat`, each holding an N×6
//! `sensor_readings` matrix (accelerometer in g, gyroscope in deg/s) at 100 Hz.
//! Plain-text exports with the same name and six columns are also accepted.

use std::path::Path;

use super::{finish_raw, parse_f64, sorted_entries, DatasetKind, RawDataset, StreamBuilder, STANDARD_GRAVITY};
use super::matfile::{self, MatData};
use crate::error::{Error, Result};

const READINGS: &str = "sensor_readings";

/// Class for an activity number, `None` for activities outside the class
/// list (stairs, sleeping, elevator).
fn activity_class(id: u32) -> Result<Option<usize>> {
    match id {
        1..=3 => Ok(Some(0)),
        6 => Ok(Some(1)),
        7 => Ok(Some(2)),
        8 => Ok(Some(3)),
        9 => Ok(Some(4)),
        4 | 5 | 10..=12 => Ok(None),
        other => Err(Error::InvalidArgument(format!("unknown activity number {other}"))),
    }
}

/// `(activity, trial)` from a file stem such as `a12t3`.
fn parse_file_stem(stem: &str) -> Option<(u32, u32)> {
    let rest = stem.strip_prefix('a')?;
    let (act, trial) = rest.split_once('t')?;
    Some((act.parse().ok()?, trial.parse().ok()?))
}

fn subject_id(dir: &Path) -> Option<u32> {
    let name = dir.file_name()?.to_str()?;
    name.strip_prefix("Subject").or_else(|| name.strip_prefix("subject"))?.parse().ok()
}

/// Rows of six raw values from a MAT-file.
fn read_mat_rows(path: &Path) -> Result<Vec<[f64; 6]>> {
    let vars = matfile::read(path).map_err(|e| Error::ingest(path, e.to_string()))?;
    let var = vars
        .iter()
        .find(|v| v.name == READINGS)
        .ok_or_else(|| Error::ingest(path, format!("no '{READINGS}' variable")))?;
    if !matches!(var.data, MatData::Numeric(_)) || var.dims.len() != 2 || var.dims[1] != 6 {
        return Err(Error::ingest(path, format!("'{READINGS}' must be an N×6 numeric matrix, got {:?}", var.dims)));
    }
    Ok((0..var.dims[0])
        .map(|r| std::array::from_fn(|c| var.get(r, c).expect("index within dims")))
        .collect())
}

fn read_text_rows(path: &Path) -> Result<Vec<[f64; 6]>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::ingest(path, e.to_string()))?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(|c: char| c.is_ascii_alphabetic()) {
            continue;
        }
        let fields: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|f| !f.is_empty()).collect();
        if fields.len() != 6 {
            return Err(Error::ingest(path, format!("line {}: expected 6 values, got {}", i + 1, fields.len())));
        }
        let mut row = [0.0; 6];
        for (k, f) in fields.iter().enumerate() {
            row[k] = parse_f64(f, path, i + 1)?;
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn read_usc_had(root: &Path) -> Result<RawDataset> {
    if !root.is_dir() {
        return Err(Error::ingest(root, "not a directory"));
    }
    let mut raw = RawDataset::new(DatasetKind::UscHad, root);
    let deg = std::f64::consts::PI / 180.0;
    for dir in sorted_entries(root)?.into_iter().filter(|p| p.is_dir()) {
        let Some(subject) = subject_id(&dir) else { continue };
        for file in sorted_entries(&dir)? {
            let ext = file.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
            let Some(ext) = ext.filter(|e| matches!(e.as_str(), "mat" | "csv" | "txt")) else { continue };
            let stem = file.file_stem().and_then(|s| s.to_str()).unwrap_or("");
            let (activity, _) =
                parse_file_stem(stem).ok_or_else(|| Error::ingest(&file, "expected a<activity>t<trial>"))?;
            let class = activity_class(activity).map_err(|e| Error::ingest(&file, e.to_string()))?;
            let Some(class) = class else {
                raw.provenance.excluded_recordings += 1;
                continue;
            };
            let rows = if ext == "mat" { read_mat_rows(&file)? } else { read_text_rows(&file)? };
            let mut b = StreamBuilder::new(subject);
            for (t, r) in rows.iter().enumerate() {
                let f = [r[0] * STANDARD_GRAVITY, r[1] * STANDARD_GRAVITY, r[2] * STANDARD_GRAVITY];
                let w = [r[3] * deg, r[4] * deg, r[5] * deg];
                b.push(f, w, t as u64, class);
            }
            let (streams, rejected) = b.finish();
            raw.streams.extend(streams);
            raw.provenance.rejected_rows += rejected;
            raw.provenance.files.push(file);
        }
    }
    finish_raw(raw)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_stems() {
        assert_eq!(parse_file_stem("a1t1"), Some((1, 1)));
        assert_eq!(parse_file_stem("a12t5"), Some((12, 5)));
        assert_eq!(parse_file_stem("b1t1"), None);
        assert_eq!(parse_file_stem("a1"), None);
    }

    #[test]
    fn activity_mapping() {
        let classes: Vec<Option<usize>> = (1..=12).map(|a| activity_class(a).unwrap()).collect();
        assert_eq!(
            classes,
            vec![Some(0), Some(0), Some(0), None, None, Some(1), Some(2), Some(3), Some(4), None, None, None]
        );
        assert!(activity_class(13).is_err());
        assert!(activity_class(0).is_err());
    }
}
