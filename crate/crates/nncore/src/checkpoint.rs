//! NNC1 checkpoint format.
//!
//! ```text
//! magic  "NNC1"
//! count  u32
//! per parameter:
//!   name_len u16, name (UTF-8)
//!   rank u8, extents u64 * rank
//!   values f64 * product(extents)
//! ```
//! All integers and floats little-endian.

use std::io::{Read, Write};

use crate::error::{NnError, Result};
use crate::params::ParamStore;

pub const MAGIC: &[u8; 4] = b"NNC1";

#[derive(Debug, Clone, PartialEq)]
pub struct StoredParam {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

pub fn write_checkpoint<W: Write>(store: &ParamStore, mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&(store.len() as u32).to_le_bytes())?;
    for (_, p) in store.iter() {
        let name = p.name.as_bytes();
        let len = u16::try_from(name.len()).map_err(|_| NnError::Checkpoint(format!("name too long: {}", p.name)))?;
        w.write_all(&len.to_le_bytes())?;
        w.write_all(name)?;
        let shape = p.tensor.shape();
        w.write_all(&[shape.len() as u8])?;
        for &e in shape {
            w.write_all(&(e as u64).to_le_bytes())?;
        }
        let mut buf = Vec::with_capacity(p.tensor.len() * 8);
        for v in p.tensor.data() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<Vec<StoredParam>> {
    let mut magic = [0u8; 4];
    read_exact(&mut r, &mut magic)?;
    if &magic != MAGIC {
        return Err(NnError::Checkpoint("bad magic".into()));
    }
    let count = u32::from_le_bytes(read_array(&mut r)?) as usize;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let len = u16::from_le_bytes(read_array(&mut r)?) as usize;
        let mut name = vec![0u8; len];
        read_exact(&mut r, &mut name)?;
        let name = String::from_utf8(name).map_err(|_| NnError::Checkpoint("parameter name is not UTF-8".into()))?;
        let [rank] = read_array::<_, 1>(&mut r)?;
        let mut shape = Vec::with_capacity(rank as usize);
        for _ in 0..rank {
            shape.push(u64::from_le_bytes(read_array(&mut r)?) as usize);
        }
        let n: usize = shape.iter().product();
        let mut bytes = vec![0u8; n * 8];
        read_exact(&mut r, &mut bytes)?;
        let values = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        out.push(StoredParam { name, shape, values });
    }
    Ok(out)
}

/// Copies stored values into a store with the same parameter names and shapes.
pub fn load_into(store: &mut ParamStore, stored: &[StoredParam]) -> Result<()> {
    if stored.len() != store.len() {
        return Err(NnError::Checkpoint(format!(
            "checkpoint holds {} parameters, model has {}",
            stored.len(),
            store.len()
        )));
    }
    for s in stored {
        let id = store
            .find(&s.name)
            .ok_or_else(|| NnError::Checkpoint(format!("unknown parameter `{}`", s.name)))?;
        let t = &mut store.get_mut(id).tensor;
        if t.shape() != s.shape.as_slice() {
            return Err(NnError::Checkpoint(format!(
                "shape of `{}`: checkpoint {:?}, model {:?}",
                s.name,
                s.shape,
                t.shape()
            )));
        }
        t.data_mut().copy_from_slice(&s.values);
    }
    Ok(())
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => NnError::Checkpoint("truncated checkpoint".into()),
        _ => NnError::Io(e),
    })
}

fn read_array<R: Read, const N: usize>(r: &mut R) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    read_exact(r, &mut b)?;
    Ok(b)
}
