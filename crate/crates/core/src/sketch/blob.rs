//! Versioned little-endian binary layout shared by the sketch types.
//!
//! `CCSK` | version u16 | type tag u8 | n u64 | eps f64 | delta f64 | seed u64 | body

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"CCSK";
pub const VERSION: u16 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum SketchTag {
    Bilinear = 1,
    NodeL1 = 2,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlobHeader {
    pub tag: SketchTag,
    pub n: u64,
    pub eps: f64,
    pub delta: f64,
    pub seed: u64,
}

pub struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new(h: &BlobHeader) -> Self {
        let mut w = Writer { buf: Vec::new() };
        w.buf.extend_from_slice(MAGIC);
        w.buf.extend_from_slice(&VERSION.to_le_bytes());
        w.buf.push(h.tag as u8);
        w.u64(h.n);
        w.f64(h.eps);
        w.f64(h.delta);
        w.u64(h.seed);
        w
    }

    pub fn u64(&mut self, x: u64) {
        self.buf.extend_from_slice(&x.to_le_bytes());
    }

    pub fn i64(&mut self, x: i64) {
        self.buf.extend_from_slice(&x.to_le_bytes());
    }

    pub fn i128(&mut self, x: i128) {
        self.buf.extend_from_slice(&x.to_le_bytes());
    }

    pub fn f64(&mut self, x: f64) {
        self.buf.extend_from_slice(&x.to_le_bytes());
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

pub struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8], expect: SketchTag) -> Result<(Self, BlobHeader)> {
        let mut r = Reader { buf, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::InvalidInput("not a sketch blob".into()));
        }
        let version = u16::from_le_bytes(r.take(2)?.try_into().expect("2 bytes"));
        if version != VERSION {
            return Err(Error::InvalidInput(format!("unsupported sketch blob version {version}")));
        }
        let tag = r.take(1)?[0];
        if tag != expect as u8 {
            return Err(Error::SketchMismatch(format!("blob holds sketch type {tag}, expected {}", expect as u8)));
        }
        let h = BlobHeader { tag: expect, n: r.u64()?, eps: r.f64()?, delta: r.f64()?, seed: r.u64()? };
        Ok((r, h))
    }

    fn take(&mut self, k: usize) -> Result<&'a [u8]> {
        if self.pos + k > self.buf.len() {
            return Err(Error::InvalidInput("truncated sketch blob".into()));
        }
        let s = &self.buf[self.pos..self.pos + k];
        self.pos += k;
        Ok(s)
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    pub fn i64(&mut self) -> Result<i64> {
        Ok(i64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    pub fn i128(&mut self) -> Result<i128> {
        Ok(i128::from_le_bytes(self.take(16)?.try_into().expect("16 bytes")))
    }

    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    pub fn finish(self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::InvalidInput("trailing bytes after sketch blob".into()));
        }
        Ok(())
    }
}
