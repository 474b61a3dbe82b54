//! Minimal MAT-file (level 5) reader and writer.
//!
//! Supports numeric and character matrices in either byte order, including
//! zlib-compressed elements. Cell arrays, structs, objects and sparse arrays
//! are reported as [`MatData::Unsupported`] rather than rejected, so files
//! carrying extra metadata still load.

use std::io::{Read, Write};
use std::path::Path;

use flate2::read::ZlibDecoder;
use flate2::write::ZlibEncoder;
use flate2::Compression;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MatError {
    #[error("not a level-5 MAT-file: {0}")]
    Header(String),
    #[error("malformed element at byte {offset}: {message}")]
    Element { offset: usize, message: String },
    #[error("zlib: {0}")]
    Inflate(String),
    #[error("io: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum MatData {
    /// Column-major values widened to f64.
    Numeric(Vec<f64>),
    Char(String),
    /// Matrix class id of a variable this reader does not decode.
    Unsupported(u8),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatVar {
    pub name: String,
    pub dims: Vec<usize>,
    pub data: MatData,
}

impl MatVar {
    pub fn numeric(name: &str, rows: usize, cols: usize, column_major: Vec<f64>) -> Self {
        assert_eq!(rows * cols, column_major.len(), "dims do not match data length");
        Self { name: name.to_string(), dims: vec![rows, cols], data: MatData::Numeric(column_major) }
    }

    pub fn char(name: &str, text: &str) -> Self {
        Self { name: name.to_string(), dims: vec![1, text.chars().count()], data: MatData::Char(text.to_string()) }
    }

    /// Element `(r, c)` of a 2-D numeric matrix.
    pub fn get(&self, r: usize, c: usize) -> Option<f64> {
        match &self.data {
            MatData::Numeric(v) if self.dims.len() == 2 && r < self.dims[0] && c < self.dims[1] => {
                v.get(c * self.dims[0] + r).copied()
            }
            _ => None,
        }
    }
}

const MI_INT8: u32 = 1;
const MI_UINT8: u32 = 2;
const MI_INT16: u32 = 3;
const MI_UINT16: u32 = 4;
const MI_INT32: u32 = 5;
const MI_UINT32: u32 = 6;
const MI_SINGLE: u32 = 7;
const MI_DOUBLE: u32 = 9;
const MI_INT64: u32 = 12;
const MI_UINT64: u32 = 13;
const MI_MATRIX: u32 = 14;
const MI_COMPRESSED: u32 = 15;
const MI_UTF8: u32 = 16;
const MI_UTF16: u32 = 17;
const MI_UTF32: u32 = 18;

const MX_CHAR: u8 = 4;
const MX_SPARSE: u8 = 5;
const MX_DOUBLE: u8 = 6;
const MX_UINT64: u8 = 15;

#[derive(Clone, Copy)]
struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
    big: bool,
}

impl<'a> Cursor<'a> {
    fn err(&self, message: impl Into<String>) -> MatError {
        MatError::Element { offset: self.pos, message: message.into() }
    }

    fn u32(&mut self) -> Result<u32, MatError> {
        let b = self.take(4)?;
        let a = [b[0], b[1], b[2], b[3]];
        Ok(if self.big { u32::from_be_bytes(a) } else { u32::from_le_bytes(a) })
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], MatError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or_else(|| self.err("truncated"))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn done(&self) -> bool {
        self.pos >= self.buf.len()
    }

    /// Reads one tagged element, returning its type and payload.
    fn element(&mut self) -> Result<(u32, &'a [u8]), MatError> {
        let first = self.u32()?;
        if first >> 16 != 0 {
            // Small data element: type and size packed into one word.
            let ty = first & 0xffff;
            let size = (first >> 16) as usize;
            if size > 4 {
                return Err(self.err("small element larger than 4 bytes"));
            }
            let payload = self.take(4)?;
            return Ok((ty, &payload[..size]));
        }
        let size = self.u32()? as usize;
        let payload = self.take(size)?;
        if first != MI_COMPRESSED {
            let pad = (8 - size % 8) % 8;
            let pad = pad.min(self.buf.len() - self.pos);
            self.pos += pad;
        }
        Ok((first, payload))
    }
}

#[allow(clippy::modulo_one)]
fn decode_numeric(ty: u32, bytes: &[u8], big: bool) -> Result<Vec<f64>, String> {
    macro_rules! conv {
        ($t:ty, $n:expr) => {{
            if bytes.len() % $n != 0 {
                return Err(format!("payload length {} not a multiple of {}", bytes.len(), $n));
            }
            bytes
                .chunks_exact($n)
                .map(|c| {
                    let a: [u8; $n] = c.try_into().unwrap();
                    (if big { <$t>::from_be_bytes(a) } else { <$t>::from_le_bytes(a) }) as f64
                })
                .collect()
        }};
    }
    Ok(match ty {
        MI_INT8 => conv!(i8, 1),
        MI_UINT8 | MI_UTF8 => conv!(u8, 1),
        MI_INT16 => conv!(i16, 2),
        MI_UINT16 | MI_UTF16 => conv!(u16, 2),
        MI_INT32 => conv!(i32, 4),
        MI_UINT32 | MI_UTF32 => conv!(u32, 4),
        MI_SINGLE => conv!(f32, 4),
        MI_DOUBLE => conv!(f64, 8),
        MI_INT64 => conv!(i64, 8),
        MI_UINT64 => conv!(u64, 8),
        other => return Err(format!("unsupported data type {other}")),
    })
}

fn decode_matrix(payload: &[u8], big: bool, offset: usize) -> Result<MatVar, MatError> {
    let mut c = Cursor { buf: payload, pos: 0, big };
    let wrap = |c: &Cursor, e: String| MatError::Element { offset: offset + c.pos, message: e };

    let (ty, flags) = c.element()?;
    if ty != MI_UINT32 || flags.len() < 8 {
        return Err(wrap(&c, "missing array flags".into()));
    }
    let flag_word = decode_numeric(MI_UINT32, &flags[..4], big).map_err(|e| wrap(&c, e))?[0] as u32;
    let class = (flag_word & 0xff) as u8;

    let (ty, dims) = c.element()?;
    if ty != MI_INT32 {
        return Err(wrap(&c, "missing dimensions".into()));
    }
    let dims: Vec<usize> =
        decode_numeric(MI_INT32, dims, big).map_err(|e| wrap(&c, e))?.into_iter().map(|d| d as usize).collect();

    let (_, name) = c.element()?;
    let name = String::from_utf8_lossy(name).into_owned();

    if class == MX_SPARSE || !(MX_CHAR..=MX_UINT64).contains(&class) {
        return Ok(MatVar { name, dims, data: MatData::Unsupported(class) });
    }
    let expected: usize = dims.iter().product();
    let (ty, real) = if c.done() { (MI_DOUBLE, &[][..]) } else { c.element()? };
    let values = decode_numeric(ty, real, big).map_err(|e| wrap(&c, e))?;
    if values.len() != expected {
        return Err(wrap(&c, format!("'{name}': {} values for dims {:?}", values.len(), dims)));
    }
    let data = if class == MX_CHAR {
        if ty == MI_UTF8 {
            MatData::Char(String::from_utf8_lossy(real).into_owned())
        } else {
            MatData::Char(values.iter().map(|&v| char::from_u32(v as u32).unwrap_or('\u{fffd}')).collect())
        }
    } else {
        MatData::Numeric(values)
    };
    Ok(MatVar { name, dims, data })
}

fn parse_elements(buf: &[u8], big: bool, base: usize, out: &mut Vec<MatVar>) -> Result<(), MatError> {
    let mut c = Cursor { buf, pos: 0, big };
    while !c.done() {
        if buf.len() - c.pos < 8 {
            break;
        }
        let start = c.pos;
        let (ty, payload) = c.element()?;
        match ty {
            MI_MATRIX => out.push(decode_matrix(payload, big, base + start + 8)?),
            MI_COMPRESSED => {
                let mut inflated = Vec::new();
                ZlibDecoder::new(payload)
                    .read_to_end(&mut inflated)
                    .map_err(|e| MatError::Inflate(e.to_string()))?;
                parse_elements(&inflated, big, base + start, out)?;
            }
            _ => {}
        }
    }
    Ok(())
}

/// Parses every top-level variable in a MAT-file image.
pub fn parse(bytes: &[u8]) -> Result<Vec<MatVar>, MatError> {
    if bytes.len() < 128 {
        return Err(MatError::Header("shorter than the 128-byte header".into()));
    }
    if bytes[..4].iter().all(|&b| b == 0) {
        return Err(MatError::Header("level-4 files are not supported".into()));
    }
    let big = match &bytes[126..128] {
        b"IM" => false,
        b"MI" => true,
        other => return Err(MatError::Header(format!("bad endian indicator {other:?}"))),
    };
    let mut out = Vec::new();
    parse_elements(&bytes[128..], big, 128, &mut out)?;
    Ok(out)
}

pub fn read(path: &Path) -> Result<Vec<MatVar>, MatError> {
    let bytes = std::fs::read(path).map_err(|e| MatError::Io(e.to_string()))?;
    parse(&bytes)
}

fn put_element(out: &mut Vec<u8>, ty: u32, payload: &[u8]) {
    out.extend_from_slice(&ty.to_le_bytes());
    out.extend_from_slice(&(payload.len() as u32).to_le_bytes());
    out.extend_from_slice(payload);
    out.resize(out.len() + (8 - payload.len() % 8) % 8, 0);
}

fn encode_matrix(var: &MatVar) -> Vec<u8> {
    let mut body = Vec::new();
    let class = match var.data {
        MatData::Char(_) => MX_CHAR,
        MatData::Numeric(_) => MX_DOUBLE,
        MatData::Unsupported(c) => c,
    };
    let mut flags = (class as u32).to_le_bytes().to_vec();
    flags.extend_from_slice(&[0; 4]);
    put_element(&mut body, MI_UINT32, &flags);
    let dims: Vec<u8> = var.dims.iter().flat_map(|&d| (d as i32).to_le_bytes()).collect();
    put_element(&mut body, MI_INT32, &dims);
    put_element(&mut body, MI_INT8, var.name.as_bytes());
    match &var.data {
        MatData::Numeric(v) => {
            let bytes: Vec<u8> = v.iter().flat_map(|x| x.to_le_bytes()).collect();
            put_element(&mut body, MI_DOUBLE, &bytes);
        }
        MatData::Char(s) => {
            let bytes: Vec<u8> = s.encode_utf16().flat_map(|u| u.to_le_bytes()).collect();
            put_element(&mut body, MI_UINT16, &bytes);
        }
        MatData::Unsupported(_) => {}
    }
    let mut out = Vec::new();
    put_element(&mut out, MI_MATRIX, &body);
    out
}

/// Serialises variables as a little-endian level-5 MAT-file, optionally
/// wrapping each one in a compressed element.
pub fn encode(vars: &[MatVar], compress: bool) -> Vec<u8> {
    let mut out = Vec::with_capacity(128);
    let text = b"MATLAB 5.0 MAT-file, written by imubench";
    out.extend_from_slice(text);
    out.resize(116, b' ');
    out.extend_from_slice(&[0; 8]);
    out.extend_from_slice(&0x0100u16.to_le_bytes());
    out.extend_from_slice(b"IM");
    for v in vars {
        let m = encode_matrix(v);
        if compress {
            let mut z = ZlibEncoder::new(Vec::new(), Compression::default());
            z.write_all(&m).expect("writing to a Vec cannot fail");
            let z = z.finish().expect("writing to a Vec cannot fail");
            out.extend_from_slice(&MI_COMPRESSED.to_le_bytes());
            out.extend_from_slice(&(z.len() as u32).to_le_bytes());
            out.extend_from_slice(&z);
        } else {
            out.extend_from_slice(&m);
        }
    }
    out
}
