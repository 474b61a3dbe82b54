//! RIDI: one directory per recording, `<subject>_<placement><n>/processed/data.csv`,
//! optionally nested under `data_publish_v2/`. Accelerometer columns
//! `acce_{x,y,z}` are in m/s² and gyroscope columns `gyro_{x,y,z}` in rad/s.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use super::{finish_raw, parse_f64, sorted_entries, DatasetKind, RawDataset, StreamBuilder};
use crate::error::{Error, Result};

const ACC: [&str; 3] = ["acce_x", "acce_y", "acce_z"];
const GYRO: [&str; 3] = ["gyro_x", "gyro_y", "gyro_z"];

/// Maps a recording's placement token to a class index.
fn placement_class(token: &str) -> Option<usize> {
    let tag: String = token.chars().take_while(|c| !c.is_ascii_digit()).collect();
    match tag.to_ascii_lowercase().as_str() {
        "leg" | "pocket" => Some(0),
        "bag" => Some(1),
        "hand" | "handheld" => Some(2),
        "body" => Some(3),
        _ => None,
    }
}

/// `(subject name, class)` from a recording directory name such as `dan_bag1`.
fn parse_recording_name(name: &str) -> Option<(String, Option<usize>)> {
    let mut parts = name.split('_');
    let subject = parts.next().filter(|s| !s.is_empty())?;
    let class = parts.find_map(placement_class);
    Some((subject.to_string(), class))
}

fn find_recordings(root: &Path) -> Result<Vec<PathBuf>> {
    let base = if root.join("data_publish_v2").is_dir() { root.join("data_publish_v2") } else { root.to_path_buf() };
    if !base.is_dir() {
        return Err(Error::ingest(root, "not a directory"));
    }
    Ok(sorted_entries(&base)?
        .into_iter()
        .filter(|p| p.join("processed").join("data.csv").is_file())
        .collect())
}

pub fn read_ridi(root: &Path) -> Result<RawDataset> {
    let mut raw = RawDataset::new(DatasetKind::Ridi, root);
    let recordings = find_recordings(root)?;

    let mut parsed = Vec::new();
    for dir in &recordings {
        let name = dir.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let (subject, class) =
            parse_recording_name(&name).ok_or_else(|| Error::ingest(dir, "unrecognised recording name"))?;
        let class = class.ok_or_else(|| Error::ingest(dir, format!("unknown placement tag in '{name}'")))?;
        parsed.push((dir, subject, class));
    }
    let ids: BTreeMap<&str, u32> = {
        let mut names: Vec<&str> = parsed.iter().map(|p| p.1.as_str()).collect();
        names.sort_unstable();
        names.dedup();
        names.into_iter().enumerate().map(|(i, n)| (n, i as u32 + 1)).collect()
    };

    for (dir, subject, class) in &parsed {
        let file = dir.join("processed").join("data.csv");
        let mut b = StreamBuilder::new(ids[subject.as_str()]);
        read_csv(&file, *class, &mut b)?;
        let (streams, rejected) = b.finish();
        raw.streams.extend(streams);
        raw.provenance.rejected_rows += rejected;
        raw.provenance.files.push(file);
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
    let acc = [col(ACC[0])?, col(ACC[1])?, col(ACC[2])?];
    let gyro = [col(GYRO[0])?, col(GYRO[1])?, col(GYRO[2])?];
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::ingest(path, format!("line {line}: {e}")))?;
        let get = |c: usize| -> Result<f64> {
            let field = rec.get(c).ok_or_else(|| Error::ingest(path, format!("line {line}: missing field {c}")))?;
            parse_f64(field, path, line)
        };
        let f = [get(acc[0])?, get(acc[1])?, get(acc[2])?];
        let w = [get(gyro[0])?, get(gyro[1])?, get(gyro[2])?];
        b.push(f, w, i as u64, class);
    }
    Ok(())
}
