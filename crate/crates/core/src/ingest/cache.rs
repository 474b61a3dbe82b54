//! Binary cache of parsed raw streams, so large text datasets are parsed once.
//!
//! Layout (little-endian): magic, `u32` version, dataset name, `u32` rate,
//! class names, rejected/excluded counters, then each stream as subject,
//! sample count and per-sample `(u64 t, 6 × f64, u32 label)`. Values are
//! stored at full precision so a cached load is identical to a fresh parse.

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{DatasetKind, Provenance, RawDataset};
use crate::error::{Error, Result};
use crate::signal::{ImuSample, LabeledStream, CHANNELS};

pub const CACHE_MAGIC: &[u8; 8] = b"IMUCACHE";
pub const CACHE_VERSION: u32 = 1;

fn put_str(w: &mut impl Write, s: &str) -> std::io::Result<()> {
    w.write_all(&(s.len() as u32).to_le_bytes())?;
    w.write_all(s.as_bytes())
}

pub fn write_cache(raw: &RawDataset, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    w.write_all(CACHE_MAGIC)?;
    w.write_all(&CACHE_VERSION.to_le_bytes())?;
    put_str(&mut w, raw.kind.name())?;
    w.write_all(&raw.rate_hz.to_le_bytes())?;
    w.write_all(&(raw.classes.len() as u32).to_le_bytes())?;
    for c in &raw.classes {
        put_str(&mut w, c)?;
    }
    w.write_all(&(raw.provenance.rejected_rows as u64).to_le_bytes())?;
    w.write_all(&(raw.provenance.excluded_recordings as u64).to_le_bytes())?;
    w.write_all(&(raw.streams.len() as u64).to_le_bytes())?;
    for s in &raw.streams {
        w.write_all(&s.subject.to_le_bytes())?;
        w.write_all(&(s.len() as u64).to_le_bytes())?;
        for (x, &label) in s.samples.iter().zip(&s.labels) {
            w.write_all(&x.t.to_le_bytes())?;
            for v in x.channels() {
                w.write_all(&v.to_le_bytes())?;
            }
            w.write_all(&(label as u32).to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

struct Reader<'p, R> {
    inner: R,
    path: &'p Path,
}

impl<R: Read> Reader<'_, R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut b = [0u8; N];
        self.inner.read_exact(&mut b).map_err(|e| Error::ingest(self.path, format!("cache truncated: {e}")))?;
        Ok(b)
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }
    fn string(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        if n > 1 << 16 {
            return Err(Error::ingest(self.path, "cache string too long"));
        }
        let mut b = vec![0u8; n];
        self.inner.read_exact(&mut b).map_err(|e| Error::ingest(self.path, format!("cache truncated: {e}")))?;
        String::from_utf8(b).map_err(|_| Error::ingest(self.path, "cache string is not UTF-8"))
    }
}

pub fn read_cache(path: &Path) -> Result<RawDataset> {
    let file = std::fs::File::open(path).map_err(|e| Error::ingest(path, e.to_string()))?;
    let mut r = Reader { inner: BufReader::new(file), path };
    if &r.bytes::<8>()? != CACHE_MAGIC {
        return Err(Error::ingest(path, "not a stream cache"));
    }
    let version = r.u32()?;
    if version != CACHE_VERSION {
        return Err(Error::ingest(path, format!("cache version {version}, expected {CACHE_VERSION}")));
    }
    let kind: DatasetKind = r.string()?.parse()?;
    let rate_hz = r.u32()?;
    let n_classes = r.u32()? as usize;
    let classes = (0..n_classes).map(|_| r.string()).collect::<Result<Vec<_>>>()?;
    let rejected_rows = r.u64()? as usize;
    let excluded_recordings = r.u64()? as usize;
    let n_streams = r.u64()?;
    let mut streams = Vec::new();
    for _ in 0..n_streams {
        let subject = r.u32()?;
        let n = r.u64()? as usize;
        let mut samples = Vec::with_capacity(n.min(1 << 24));
        let mut labels = Vec::with_capacity(n.min(1 << 24));
        for _ in 0..n {
            let t = r.u64()?;
            let mut c = [0.0; CHANNELS];
            for v in &mut c {
                *v = r.f64()?;
            }
            let label = r.u32()? as usize;
            if label >= n_classes {
                return Err(Error::ingest(path, format!("label {label} out of range")));
            }
            samples.push(ImuSample::from_channels(c, t));
            labels.push(label);
        }
        streams.push(LabeledStream { subject, samples, labels });
    }
    Ok(RawDataset {
        kind,
        rate_hz,
        classes,
        streams,
        provenance: Provenance {
            root: path.to_path_buf(),
            files: vec![path.to_path_buf()],
            rejected_rows,
            excluded_recordings,
        },
    })
}
