//! Loaders for the four public pedestrian-activity datasets.
//!
//! Each loader parses its dataset's published on-disk layout into a
//! [`RawDataset`] of labelled streams in SI units (m/s², rad/s). Streams are
//! windowed and split by subject in [`RawDataset::into_dataset`].

mod cache;
pub mod matfile;
mod motionsense;
mod ridi;
mod uci_har;
mod usc_had;

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use cache::{read_cache, write_cache, CACHE_MAGIC, CACHE_VERSION};
pub use motionsense::read_motionsense;
pub use ridi::read_ridi;
pub use uci_har::read_uci_har;
pub use usc_had::read_usc_had;

use crate::error::{Error, Result};
use crate::signal::{segment_stream, ImuSample, LabeledStream, Window};

/// Standard gravity, used to convert g-denominated accelerometers.
pub const STANDARD_GRAVITY: f64 = 9.80665;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    Ridi,
    MotionSense,
    UciHar,
    UscHad,
}

impl DatasetKind {
    pub const ALL: [DatasetKind; 4] =
        [DatasetKind::Ridi, DatasetKind::MotionSense, DatasetKind::UciHar, DatasetKind::UscHad];

    pub fn name(self) -> &'static str {
        match self {
            DatasetKind::Ridi => "ridi",
            DatasetKind::MotionSense => "motion_sense",
            DatasetKind::UciHar => "uci_har",
            DatasetKind::UscHad => "usc_had",
        }
    }

    pub fn rate_hz(self) -> u32 {
        match self {
            DatasetKind::Ridi => 200,
            DatasetKind::MotionSense | DatasetKind::UciHar => 50,
            DatasetKind::UscHad => 100,
        }
    }

    /// Two seconds of samples at the native rate.
    pub fn default_window_len(self) -> usize {
        2 * self.rate_hz() as usize
    }

    pub fn classes(self) -> &'static [&'static str] {
        match self {
            DatasetKind::Ridi => &["pocket", "bag", "handheld", "body"],
            DatasetKind::MotionSense => &["walking", "jogging", "sitting", "standing", "stairs_down", "stairs_up"],
            DatasetKind::UciHar => &["walking", "stairs_down", "stairs_up", "sitting", "standing", "laying"],
            DatasetKind::UscHad => &["walking", "running", "jumping", "sitting", "standing"],
        }
    }

    pub fn read(self, root: &Path) -> Result<RawDataset> {
        match self {
            DatasetKind::Ridi => read_ridi(root),
            DatasetKind::MotionSense => read_motionsense(root),
            DatasetKind::UciHar => read_uci_har(root),
            DatasetKind::UscHad => read_usc_had(root),
        }
    }
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DatasetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s.to_ascii_lowercase().chars().filter(|c| c.is_ascii_alphanumeric()).collect();
        match norm.as_str() {
            "ridi" => Ok(DatasetKind::Ridi),
            "motionsense" => Ok(DatasetKind::MotionSense),
            "ucihar" | "har" => Ok(DatasetKind::UciHar),
            "uschad" | "uscsipi" | "uscsipihar" => Ok(DatasetKind::UscHad),
            _ => Err(Error::InvalidArgument(format!("unknown dataset '{s}'"))),
        }
    }
}

/// Where a dataset came from and what was discarded while parsing it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub root: PathBuf,
    pub files: Vec<PathBuf>,
    /// Rows rejected for non-finite values (each one splits its stream).
    pub rejected_rows: usize,
    /// Recordings skipped because their activity is outside the class list.
    pub excluded_recordings: usize,
}

/// Parsed streams before windowing and splitting.
#[derive(Debug, Clone, PartialEq)]
pub struct RawDataset {
    pub kind: DatasetKind,
    pub rate_hz: u32,
    pub classes: Vec<String>,
    pub streams: Vec<LabeledStream>,
    pub provenance: Provenance,
}

impl RawDataset {
    pub(crate) fn new(kind: DatasetKind, root: &Path) -> Self {
        Self {
            kind,
            rate_hz: kind.rate_hz(),
            classes: kind.classes().iter().map(|s| s.to_string()).collect(),
            streams: Vec::new(),
            provenance: Provenance { root: root.to_path_buf(), ..Default::default() },
        }
    }

    pub fn subjects(&self) -> Vec<u32> {
        let set: BTreeSet<u32> = self.streams.iter().map(|s| s.subject).collect();
        set.into_iter().collect()
    }

    pub fn total_samples(&self) -> usize {
        self.streams.iter().map(LabeledStream::len).sum()
    }

    pub fn total_minutes(&self) -> f64 {
        self.total_samples() as f64 / self.rate_hz as f64 / 60.0
    }

    /// Keeps a seeded random `fraction` of subjects (at least two).
    pub fn subset_subjects(&self, fraction: f64, seed: u64) -> Result<RawDataset> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(Error::InvalidArgument(format!("subject fraction {fraction} outside (0, 1]")));
        }
        let mut subjects = self.subjects();
        if fraction >= 1.0 {
            return Ok(self.clone());
        }
        let keep = ((fraction * subjects.len() as f64).ceil() as usize).clamp(2.min(subjects.len()), subjects.len());
        subjects.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let kept: BTreeSet<u32> = subjects[..keep].iter().copied().collect();
        let mut out = self.clone();
        out.streams.retain(|s| kept.contains(&s.subject));
        Ok(out)
    }

    /// Applies `f` to every stream, dropping streams it shortens to nothing.
    pub fn map_streams(&self, mut f: impl FnMut(&LabeledStream) -> Result<Option<LabeledStream>>) -> Result<RawDataset> {
        let mut out = self.clone();
        out.streams.clear();
        for s in &self.streams {
            if let Some(m) = f(s)? {
                out.streams.push(m);
            }
        }
        Ok(out)
    }

    /// Segments every stream and assigns windows to train/test by subject.
    pub fn into_dataset(&self, window: WindowConfig, split: &SubjectSplit) -> Result<Dataset> {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for s in &self.streams {
            let ws = segment_stream(s, self.rate_hz, window.len, window.stride)?;
            if split.test.contains(&s.subject) {
                test.extend(ws);
            } else if split.train.contains(&s.subject) {
                train.extend(ws);
            }
        }
        if let Some(w) = train.iter().chain(&test).find(|w| w.label >= self.classes.len()) {
            return Err(Error::InvalidArgument(format!("window label {} out of range", w.label)));
        }
        Ok(Dataset {
            name: self.kind.name().to_string(),
            kind: self.kind,
            rate_hz: self.rate_hz,
            window_len: window.len,
            classes: self.classes.clone(),
            train,
            test,
            train_subjects: split.train.clone(),
            test_subjects: split.test.clone(),
            provenance: self.provenance.clone(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowConfig {
    pub len: usize,
    pub stride: usize,
}

impl WindowConfig {
    /// Non-overlapping windows of the dataset's default length.
    pub fn default_for(kind: DatasetKind) -> Self {
        let len = kind.default_window_len();
        Self { len, stride: len }
    }
}

/// Subject-disjoint train/test assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubjectSplit {
    pub train: Vec<u32>,
    pub test: Vec<u32>,
}

/// Shuffles subjects with a seeded RNG and sends `ceil(fraction · n)` of them
/// (at least one, at most `n - 1`) to the test split.
pub fn split_subjects(subjects: &[u32], test_fraction: f64, seed: u64) -> Result<SubjectSplit> {
    let unique: BTreeSet<u32> = subjects.iter().copied().collect();
    if unique.len() < 2 {
        return Err(Error::Split(format!("need at least 2 subjects, found {}", unique.len())));
    }
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Split(format!("test fraction {test_fraction} outside (0, 1)")));
    }
    let mut order: Vec<u32> = unique.into_iter().collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n = order.len();
    let n_test = ((test_fraction * n as f64).ceil() as usize).clamp(1, n - 1);
    let mut test = order[..n_test].to_vec();
    let mut train = order[n_test..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    Ok(SubjectSplit { train, test })
}

/// Windowed, split dataset ready for training.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub kind: DatasetKind,
    pub rate_hz: u32,
    pub window_len: usize,
    pub classes: Vec<String>,
    pub train: Vec<Window>,
    pub test: Vec<Window>,
    pub train_subjects: Vec<u32>,
    pub test_subjects: Vec<u32>,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn class_count(&self) -> usize {
        self.classes.len()
    }
}

/// Loader options shared by the `load_*` entry points.
#[derive(Debug, Clone, Copy)]
pub struct LoadOptions {
    pub window: Option<WindowConfig>,
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self { window: None, test_fraction: 0.2, seed: 42 }
    }
}

pub fn load(kind: DatasetKind, root: &Path, opts: &LoadOptions) -> Result<Dataset> {
    let raw = kind.read(root)?;
    let split = split_subjects(&raw.subjects(), opts.test_fraction, opts.seed)?;
    raw.into_dataset(opts.window.unwrap_or_else(|| WindowConfig::default_for(kind)), &split)
}

pub fn load_ridi(root: &Path, opts: &LoadOptions) -> Result<Dataset> {
    load(DatasetKind::Ridi, root, opts)
}

pub fn load_motionsense(root: &Path, opts: &LoadOptions) -> Result<Dataset> {
    load(DatasetKind::MotionSense, root, opts)
}

pub fn load_uci_har(root: &Path, opts: &LoadOptions) -> Result<Dataset> {
    load(DatasetKind::UciHar, root, opts)
}

pub fn load_usc_sipi(root: &Path, opts: &LoadOptions) -> Result<Dataset> {
    load(DatasetKind::UscHad, root, opts)
}

/// Minutes of recording per class.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassTimeTable {
    pub dataset: String,
    pub rows: Vec<(String, f64)>,
}

impl ClassTimeTable {
    pub fn total_minutes(&self) -> f64 {
        self.rows.iter().map(|r| r.1).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("class,minutes\n");
        for (class, minutes) in &self.rows {
            s.push_str(&format!("{class},{minutes:.2}\n"));
        }
        s
    }
}

impl fmt::Display for ClassTimeTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.dataset)?;
        for (class, minutes) in &self.rows {
            writeln!(f, "  {class:<12} {minutes:>9.2} min")?;
        }
        write!(f, "  {:<12} {:>9.2} min", "total", self.total_minutes())
    }
}

/// Per-class recording time over the raw streams.
pub fn summarize(raw: &RawDataset) -> ClassTimeTable {
    let mut counts = vec![0usize; raw.classes.len()];
    for s in &raw.streams {
        for &l in &s.labels {
            counts[l] += 1;
        }
    }
    let rate = raw.rate_hz as f64;
    ClassTimeTable {
        dataset: raw.kind.name().to_string(),
        rows: raw
            .classes
            .iter()
            .zip(counts)
            .map(|(c, n)| (c.clone(), n as f64 / rate / 60.0))
            .collect(),
    }
}

/// Per-class time covered by a windowed dataset (train and test).
pub fn summarize_windows(ds: &Dataset) -> ClassTimeTable {
    let mut counts = vec![0usize; ds.classes.len()];
    for w in ds.train.iter().chain(&ds.test) {
        counts[w.label] += w.len();
    }
    let rate = ds.rate_hz as f64;
    ClassTimeTable {
        dataset: ds.name.clone(),
        rows: ds.classes.iter().zip(counts).map(|(c, n)| (c.clone(), n as f64 / rate / 60.0)).collect(),
    }
}

/// Accumulates parsed rows into contiguous streams, cutting the stream at
/// every rejected (non-finite) row.
pub(crate) struct StreamBuilder {
    subject: u32,
    current: LabeledStream,
    pub streams: Vec<LabeledStream>,
    pub rejected: usize,
}

impl StreamBuilder {
    pub fn new(subject: u32) -> Self {
        Self {
            subject,
            current: LabeledStream { subject, samples: Vec::new(), labels: Vec::new() },
            streams: Vec::new(),
            rejected: 0,
        }
    }

    pub fn push(&mut self, f: [f64; 3], w: [f64; 3], t: u64, label: usize) {
        match ImuSample::new(f, w, t) {
            Ok(s) => {
                self.current.samples.push(s);
                self.current.labels.push(label);
            }
            Err(_) => {
                self.rejected += 1;
                self.cut();
            }
        }
    }

    pub fn cut(&mut self) {
        if !self.current.is_empty() {
            let s = std::mem::replace(
                &mut self.current,
                LabeledStream { subject: self.subject, samples: Vec::new(), labels: Vec::new() },
            );
            self.streams.push(s);
        }
    }

    pub fn finish(mut self) -> (Vec<LabeledStream>, usize) {
        self.cut();
        (self.streams, self.rejected)
    }
}

pub(crate) fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let rd = std::fs::read_dir(dir).map_err(|e| Error::ingest(dir, e.to_string()))?;
    let mut out = Vec::new();
    for e in rd {
        let e = e.map_err(|e| Error::ingest(dir, e.to_string()))?;
        let name = e.file_name();
        let name = name.to_string_lossy();
        if name.starts_with('.') || name.starts_with("__") {
            continue;
        }
        out.push(e.path());
    }
    out.sort();
    Ok(out)
}

pub(crate) fn parse_f64(field: &str, path: &Path, line: usize) -> Result<f64> {
    let t = field.trim();
    if t.eq_ignore_ascii_case("nan") || t.is_empty() {
        return Ok(f64::NAN);
    }
    t.parse::<f64>()
        .map_err(|_| Error::ingest(path, format!("line {line}: cannot parse '{t}' as a number")))
}

fn log_rejections(raw: &RawDataset) {
    if raw.provenance.rejected_rows > 0 {
        log::warn!(
            "{}: rejected {} rows with non-finite values",
            raw.kind,
            raw.provenance.rejected_rows
        );
    }
}

pub(crate) fn finish_raw(raw: RawDataset) -> Result<RawDataset> {
    if raw.streams.is_empty() {
        return Err(Error::ingest(&raw.provenance.root, "no recordings found"));
    }
    log_rejections(&raw);
    Ok(raw)
}
