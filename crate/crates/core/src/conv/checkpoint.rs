//! Binary checkpoints of a power stream.
//!
//! Layout, all little-endian: the 8-byte magic `RNWLCKPT`, a `u32` version,
//! `n: u64`, `lo: i64`, `hi: i64`, `h: f64`, `a: f64`, `ledger: f64`, then
//! `hi − lo + 1` masses as `f64`.

use std::io::{Read, Write};
use std::path::Path;

use super::Window;
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"RNWLCKPT";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub n: u64,
    pub window: Window,
    pub h: f64,
    pub a: f64,
    pub ledger: f64,
    pub masses: Vec<f64>,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(60 + 8 * self.masses.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&self.n.to_le_bytes());
        out.extend_from_slice(&self.window.lo.to_le_bytes());
        out.extend_from_slice(&self.window.hi.to_le_bytes());
        for v in [self.h, self.a, self.ledger] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for m in &self.masses {
            out.extend_from_slice(&m.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(b: &[u8]) -> Result<Self> {
        let mut r = Reader { b, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(Error::Format("bad checkpoint magic".into()));
        }
        let version = u32::from_le_bytes(r.take(4)?.try_into().expect("4 bytes"));
        if version != VERSION {
            return Err(Error::Format(format!("unsupported checkpoint version {version}")));
        }
        let n = r.u64()?;
        let lo = r.u64()? as i64;
        let hi = r.u64()? as i64;
        let window = Window::new(lo, hi).map_err(|e| Error::Format(e.to_string()))?;
        let h = r.f64()?;
        let a = r.f64()?;
        let ledger = r.f64()?;
        let len = window.len();
        if b.len() != r.pos + 8 * len {
            return Err(Error::Format(format!("expected {len} masses, found {} bytes", b.len() - r.pos)));
        }
        let masses = (0..len).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        Ok(Checkpoint {
            n,
            window,
            h,
            a,
            ledger,
            masses,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut buf = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut buf)?;
        Checkpoint::from_bytes(&buf)
    }
}

struct Reader<'a> {
    b: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.b.len() {
            return Err(Error::Format("truncated checkpoint".into()));
        }
        let s = &self.b[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}
