//! Binary model checkpoints.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic    8 bytes  "IMBCKPT\0"
//! version  u32      1
//! spec     32 bytes SHA-256 of ModelSpec::canonical()
//! count    u32      number of parameter blobs
//! per blob: name_len u32, name utf-8, rank u32, dims u32 x rank, values f32 x prod(dims)
//! ```

use std::io::{Read, Write};

use crate::error::{NnError, Result};
use crate::linalg::Real;
use crate::model::Model;

pub const MAGIC: &[u8; 8] = b"IMBCKPT\0";
pub const VERSION: u32 = 1;

fn ck_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(NnError::Checkpoint(msg.into()))
}

pub fn write<T: Real>(model: &Model<T>, mut w: impl Write) -> Result<()> {
    let params = model.params();
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&model.spec().hash())?;
    w.write_all(&(params.len() as u32).to_le_bytes())?;
    for p in params {
        w.write_all(&(p.name.len() as u32).to_le_bytes())?;
        w.write_all(p.name.as_bytes())?;
        w.write_all(&(p.shape.len() as u32).to_le_bytes())?;
        for &d in &p.shape {
            w.write_all(&(d as u32).to_le_bytes())?;
        }
        for &v in &p.value {
            w.write_all(&v.to_le_f32())?;
        }
    }
    Ok(())
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

/// Loads parameter values into `model`, which must have been built from the
/// same spec that produced the checkpoint.
pub fn read_into<T: Real>(model: &mut Model<T>, mut r: impl Read) -> Result<()> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return ck_err("bad magic");
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return ck_err(format!("unsupported version {version}"));
    }
    let mut hash = [0u8; 32];
    r.read_exact(&mut hash)?;
    if hash != model.spec().hash() {
        return ck_err("model spec hash does not match");
    }
    let count = read_u32(&mut r)? as usize;
    let mut params = model.params_mut();
    if count != params.len() {
        return ck_err(format!("checkpoint has {count} blobs, model has {}", params.len()));
    }
    for p in params.iter_mut() {
        let name_len = read_u32(&mut r)? as usize;
        let mut name = vec![0u8; name_len];
        r.read_exact(&mut name)?;
        if name != p.name.as_bytes() {
            return ck_err(format!("expected blob {}, found {}", p.name, String::from_utf8_lossy(&name)));
        }
        let rank = read_u32(&mut r)? as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(read_u32(&mut r)? as usize);
        }
        if shape != p.shape {
            return ck_err(format!("blob {}: shape {shape:?} != {:?}", p.name, p.shape));
        }
        let mut buf = [0u8; 4];
        for v in p.value.iter_mut() {
            r.read_exact(&mut buf)?;
            *v = T::from_f64(f32::from_le_bytes(buf) as f64);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ModelSpec, Variant};

    fn small(variant: Variant) -> ModelSpec {
        let mut s = ModelSpec::new(variant, 3);
        s.hidden = 4;
        s.filters = 3;
        s.fc_width = 8;
        s
    }

    #[test]
    fn round_trip_restores_values() {
        let src = Model::<f32>::new(small(Variant::Head3), 1).unwrap();
        let mut buf = Vec::new();
        write(&src, &mut buf).unwrap();
        let mut dst = Model::<f32>::new(small(Variant::Head3), 2).unwrap();
        read_into(&mut dst, buf.as_slice()).unwrap();
        for (a, b) in src.params().iter().zip(dst.params()) {
            assert_eq!(a.value, b.value);
        }
    }

    #[test]
    fn spec_mismatch_rejected() {
        let src = Model::<f32>::new(small(Variant::Head2), 1).unwrap();
        let mut buf = Vec::new();
        write(&src, &mut buf).unwrap();
        let mut dst = Model::<f32>::new(small(Variant::Baseline), 1).unwrap();
        assert!(matches!(read_into(&mut dst, buf.as_slice()), Err(NnError::Checkpoint(_))));
        buf[0] = b'X';
        let mut same = Model::<f32>::new(small(Variant::Head2), 1).unwrap();
        assert!(read_into(&mut same, buf.as_slice()).is_err());
    }
}
