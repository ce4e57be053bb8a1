//! Binary file formats.
//!
//! Both formats share a header: four magic bytes, little-endian `u32 n`,
//! `u32 dims[n]`, `f64 origin[n]`, `f64 h`. `GFN1` files then hold one `f64`
//! per cell in row-major order (last axis fastest); `SET1` files hold the
//! membership bits packed LSB-first in the same order, zero-padded to a byte.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{CellSet, Grid, GridFunction};

const GFN_MAGIC: &[u8; 4] = b"GFN1";
const SET_MAGIC: &[u8; 4] = b"SET1";

fn write_header(out: &mut Vec<u8>, magic: &[u8; 4], g: &Grid) {
    out.extend_from_slice(magic);
    out.extend_from_slice(&(g.n() as u32).to_le_bytes());
    for &d in g.dims() {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for &o in g.origin() {
        out.extend_from_slice(&o.to_le_bytes());
    }
    out.extend_from_slice(&g.h().to_le_bytes());
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        if self.pos + len > self.buf.len() {
            return Err(Error::Format("truncated file".into()));
        }
        let s = &self.buf[self.pos..self.pos + len];
        self.pos += len;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

fn read_header<'a>(buf: &'a [u8], magic: &[u8; 4]) -> Result<(Grid, Reader<'a>)> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(4)? != magic {
        return Err(Error::Format(format!("expected magic {}", String::from_utf8_lossy(magic))));
    }
    let n = r.u32()? as usize;
    if !(1..=3).contains(&n) {
        return Err(Error::Format(format!("dimension {n} out of range")));
    }
    let dims = (0..n).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
    let origin = (0..n).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    let h = r.f64()?;
    Ok((Grid::new(&dims, &origin, h)?, r))
}

pub fn encode_function(f: &GridFunction) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + 8 * f.values().len());
    write_header(&mut out, GFN_MAGIC, f.grid());
    for v in f.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_function(buf: &[u8]) -> Result<GridFunction> {
    let (grid, mut r) = read_header(buf, GFN_MAGIC)?;
    let values = (0..grid.len()).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    if r.pos != buf.len() {
        return Err(Error::Format("trailing bytes".into()));
    }
    GridFunction::new(grid, values)
}

pub fn encode_set(s: &CellSet) -> Vec<u8> {
    let mut out = Vec::new();
    write_header(&mut out, SET_MAGIC, s.grid());
    let mut bytes = vec![0u8; s.grid().len().div_ceil(8)];
    for c in s.iter() {
        bytes[c / 8] |= 1 << (c % 8);
    }
    out.extend_from_slice(&bytes);
    out
}

pub fn decode_set(buf: &[u8]) -> Result<CellSet> {
    let (grid, mut r) = read_header(buf, SET_MAGIC)?;
    let bytes = r.take(grid.len().div_ceil(8))?;
    if r.pos != buf.len() {
        return Err(Error::Format("trailing bytes".into()));
    }
    let mask = (0..grid.len()).map(|c| bytes[c / 8] >> (c % 8) & 1 == 1).collect();
    CellSet::from_mask(grid, mask)
}

pub fn write_function(path: impl AsRef<Path>, f: &GridFunction) -> Result<()> {
    Ok(fs::write(path, encode_function(f))?)
}

pub fn read_function(path: impl AsRef<Path>) -> Result<GridFunction> {
    decode_function(&fs::read(path)?)
}

pub fn write_set(path: impl AsRef<Path>, s: &CellSet) -> Result<()> {
    Ok(fs::write(path, encode_set(s))?)
}

pub fn read_set(path: impl AsRef<Path>) -> Result<CellSet> {
    decode_set(&fs::read(path)?)
}
