//! Binary containers.
//!
//! `SFFW` (parameter checkpoints, f64):
//!
//! ```text
//! "SFFW" | u16 version=1 | u32 count | count x {
//!     u16 name_len | name (UTF-8) | u8 rank | rank x u32 extent | f64 values
//! }
//! ```
//!
//! `SFFT` (raw clips and feature caches, f32):
//!
//! ```text
//! "SFFT" | u16 version=1 | u8 rank | rank x u32 extent | f32 values
//! ```
//!
//! All integers and floats are little-endian; values are row-major.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::params::ParamStore;
use crate::tensor::Tensor;

pub const SFFW_MAGIC: &[u8; 4] = b"SFFW";
pub const SFFT_MAGIC: &[u8; 4] = b"SFFT";
pub const FORMAT_VERSION: u16 = 1;

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
    what: &'static str,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Format(format!(
                "{}: truncated at byte {} (need {n} more)",
                self.what, self.pos
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn header(&mut self, magic: &[u8; 4]) -> Result<()> {
        if self.take(4)? != magic {
            return Err(Error::Format(format!("{}: bad magic", self.what)));
        }
        let v = self.u16()?;
        if v != FORMAT_VERSION {
            return Err(Error::Format(format!("{}: unsupported version {v}", self.what)));
        }
        Ok(())
    }

    fn shape(&mut self) -> Result<Vec<usize>> {
        let rank = self.u8()? as usize;
        (0..rank).map(|_| self.u32().map(|e| e as usize)).collect()
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::Format(format!(
                "{}: {} trailing bytes",
                self.what,
                self.buf.len() - self.pos
            )));
        }
        Ok(())
    }
}

fn put_shape(out: &mut Vec<u8>, shape: &[usize]) -> Result<()> {
    let rank = u8::try_from(shape.len())
        .map_err(|_| Error::Format(format!("rank {} too large", shape.len())))?;
    out.push(rank);
    for &e in shape {
        let e = u32::try_from(e).map_err(|_| Error::Format(format!("extent {e} too large")))?;
        out.extend_from_slice(&e.to_le_bytes());
    }
    Ok(())
}

pub fn encode_sffw(params: &ParamStore) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(10 + params.numel() * 8);
    out.extend_from_slice(SFFW_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(params.len() as u32).to_le_bytes());
    for (name, t) in params.iter() {
        let len = u16::try_from(name.len())
            .map_err(|_| Error::Format(format!("parameter name too long: {name}")))?;
        out.extend_from_slice(&len.to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        put_shape(&mut out, t.shape())?;
        for v in t.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_sffw(buf: &[u8]) -> Result<ParamStore> {
    let mut r = Reader {
        buf,
        pos: 0,
        what: "SFFW",
    };
    r.header(SFFW_MAGIC)?;
    let count = r.u32()?;
    let mut store = ParamStore::new();
    for _ in 0..count {
        let len = r.u16()? as usize;
        let name = std::str::from_utf8(r.take(len)?)
            .map_err(|_| Error::Format("SFFW: parameter name is not UTF-8".into()))?
            .to_string();
        let shape = r.shape()?;
        let n: usize = shape.iter().product();
        let bytes = r.take(n * 8)?;
        let data = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        if store.get(&name).is_some() {
            return Err(Error::Format(format!("SFFW: duplicate parameter {name}")));
        }
        store.insert(name, Tensor::new(shape, data)?);
    }
    r.finish()?;
    Ok(store)
}

pub fn encode_sfft(t: &Tensor) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(7 + 4 * t.rank() + 4 * t.numel());
    out.extend_from_slice(SFFT_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    put_shape(&mut out, t.shape())?;
    for &v in t.data() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    Ok(out)
}

pub fn decode_sfft(buf: &[u8]) -> Result<Tensor> {
    let mut r = Reader {
        buf,
        pos: 0,
        what: "SFFT",
    };
    r.header(SFFT_MAGIC)?;
    let shape = r.shape()?;
    let n: usize = shape.iter().product();
    let data = r
        .take(n * 4)?
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    r.finish()?;
    Tensor::new(shape, data)
}

pub fn write_sffw(path: &Path, params: &ParamStore) -> Result<()> {
    fs::write(path, encode_sffw(params)?).map_err(|e| Error::io(path, e))
}

pub fn read_sffw(path: &Path) -> Result<ParamStore> {
    decode_sffw(&fs::read(path).map_err(|e| Error::io(path, e))?)
}

pub fn write_sfft(path: &Path, t: &Tensor) -> Result<()> {
    fs::write(path, encode_sfft(t)?).map_err(|e| Error::io(path, e))
}

pub fn read_sfft(path: &Path) -> Result<Tensor> {
    decode_sfft(&fs::read(path).map_err(|e| Error::io(path, e))?)
}
