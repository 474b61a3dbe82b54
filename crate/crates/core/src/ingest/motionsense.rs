//! MotionSense device-motion export: `A_DeviceMotion_data/<act>_<trial>/sub_<n>.csv`.
//!
//! Columns used: `gravity.{x,y,z}` and `userAcceleration.{x,y,z}` (g, iOS
//! sign convention) and `rotationRate.{x,y,z}` (rad/s). Specific force is
//! `-(gravity + userAcceleration) · g₀`, matching the Android convention of
//! the other datasets (+g₀ on the upward axis at rest).

use std::path::{Path, PathBuf};

use super::{finish_raw, parse_f64, sorted_entries, DatasetKind, RawDataset, StreamBuilder, STANDARD_GRAVITY};
use crate::error::{Error, Result};

fn activity_class(code: &str) -> Option<usize> {
    match code {
        "wlk" => Some(0),
        "jog" => Some(1),
        "sit" => Some(2),
        "std" => Some(3),
        "dws" => Some(4),
        "ups" => Some(5),
        _ => None,
    }
}

fn locate(root: &Path) -> Result<PathBuf> {
    for cand in [root.join("data").join("A_DeviceMotion_data"), root.join("A_DeviceMotion_data")] {
        if cand.is_dir() {
            return Ok(cand);
        }
    }
    if root.is_dir() {
        Ok(root.to_path_buf())
    } else {
        Err(Error::ingest(root, "not a directory"))
    }
}

fn subject_id(file: &Path) -> Option<u32> {
    let stem = file.file_stem()?.to_str()?;
    stem.strip_prefix("sub_")?.parse().ok()
}

pub fn read_motionsense(root: &Path) -> Result<RawDataset> {
    let base = locate(root)?;
    let mut raw = RawDataset::new(DatasetKind::MotionSense, root);
    for dir in sorted_entries(&base)?.into_iter().filter(|p| p.is_dir()) {
        let name = dir.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let code = name.split('_').next().unwrap_or("");
        let class = activity_class(code)
            .ok_or_else(|| Error::ingest(&dir, format!("unknown activity folder '{name}'")))?;
        for file in sorted_entries(&dir)? {
            if file.extension().and_then(|e| e.to_str()) != Some("csv") {
                continue;
            }
            let subject = subject_id(&file).ok_or_else(|| Error::ingest(&file, "expected sub_<n>.csv"))?;
            let mut b = StreamBuilder::new(subject);
            read_csv(&file, class, &mut b)?;
            let (streams, rejected) = b.finish();
            raw.streams.extend(streams);
            raw.provenance.rejected_rows += rejected;
            raw.provenance.files.push(file);
        }
    }
    finish_raw(raw)
}

fn read_csv(path: &Path, class: usize, b: &mut StreamBuilder) -> Result<()> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::ingest(path, e.to_string()))?;
    let headers = rdr.headers().map_err(|e| Error::ingest(path, e.to_string()))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::ingest(path, format!("missing column '{name}'")))
    };
    let grav = [col("gravity.x")?, col("gravity.y")?, col("gravity.z")?];
    let user = [col("userAcceleration.x")?, col("userAcceleration.y")?, col("userAcceleration.z")?];
    let rot = [col("rotationRate.x")?, col("rotationRate.y")?, col("rotationRate.z")?];
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::ingest(path, format!("line {line}: {e}")))?;
        let get = |c: usize| -> Result<f64> {
            let field = rec.get(c).ok_or_else(|| Error::ingest(path, format!("line {line}: missing field {c}")))?;
            parse_f64(field, path, line)
        };
        let mut f = [0.0; 3];
        let mut w = [0.0; 3];
        for k in 0..3 {
            f[k] = -(get(grav[k])? + get(user[k])?) * STANDARD_GRAVITY;
            w[k] = get(rot[k])?;
        }
        b.push(f, w, i as u64, class);
    }
    Ok(())
}
