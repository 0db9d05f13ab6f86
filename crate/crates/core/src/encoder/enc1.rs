//! ENC1 encoding files.
//!
//! ```text
//! magic "ENC1" | version u32 = 1 | dim u32 | count u64
//! per entry: doc_id (u16 len + UTF-8) | strategy u8 | position_key (u16 len + UTF-8)
//!            | dim x f32
//! ```
//! Little-endian throughout.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, IoContext, Result};
use crate::textprep::Strategy;

pub const ENC1_MAGIC: &[u8; 4] = b"ENC1";
pub const ENC1_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Encoding {
    pub doc_id: String,
    pub strategy: Strategy,
    pub position_key: String,
    pub vector: Vec<f32>,
}

/// Encodings of one dimension with unique `(doc_id, strategy, position_key)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodingSet {
    dim: usize,
    entries: Vec<Encoding>,
    keys: HashSet<(String, Strategy, String)>,
}

impl EncodingSet {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            entries: Vec::new(),
            keys: HashSet::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Encoding] {
        &self.entries
    }

    pub fn push(&mut self, e: Encoding) -> Result<()> {
        if e.vector.len() != self.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                got: e.vector.len(),
            });
        }
        if !self.keys.insert((e.doc_id.clone(), e.strategy, e.position_key.clone())) {
            return Err(Error::DuplicateKey {
                doc_id: e.doc_id,
                strategy: e.strategy.to_string(),
                position_key: e.position_key,
            });
        }
        self.entries.push(e);
        Ok(())
    }

    /// Entries of one document, in file order.
    pub fn for_doc<'a>(&'a self, doc_id: &'a str) -> impl Iterator<Item = &'a Encoding> + 'a {
        self.entries.iter().filter(move |e| e.doc_id == doc_id)
    }
}

fn put_str(out: &mut Vec<u8>, s: &str, what: &str) -> Result<()> {
    let len = u16::try_from(s.len()).map_err(|_| Error::Malformed(format!("{what} longer than 65535 bytes")))?;
    out.extend_from_slice(&len.to_le_bytes());
    out.extend_from_slice(s.as_bytes());
    Ok(())
}

pub fn write_enc1<W: Write>(set: &EncodingSet, mut w: W) -> Result<()> {
    let dim = u32::try_from(set.dim).map_err(|_| Error::Malformed("dimension exceeds u32".into()))?;
    let mut buf = Vec::with_capacity(20 + set.len() * (set.dim * 4 + 24));
    buf.extend_from_slice(ENC1_MAGIC);
    buf.extend_from_slice(&ENC1_VERSION.to_le_bytes());
    buf.extend_from_slice(&dim.to_le_bytes());
    buf.extend_from_slice(&(set.len() as u64).to_le_bytes());
    for e in &set.entries {
        put_str(&mut buf, &e.doc_id, "doc_id")?;
        buf.push(e.strategy.code());
        put_str(&mut buf, &e.position_key, "position_key")?;
        for v in &e.vector {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.at < n {
            return Err(Error::TruncatedPayload);
        }
        let s = &self.bytes[self.at..self.at + n];
        self.at += n;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn string(&mut self, what: &str) -> Result<String> {
        let n = self.u16()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| Error::Malformed(format!("{what} is not UTF-8")))
    }
}

/// Parses and validates an ENC1 byte stream.
pub fn read_enc1<R: Read>(mut r: R) -> Result<EncodingSet> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() < 4 || &bytes[..4] != ENC1_MAGIC {
        return Err(Error::BadMagic);
    }
    let mut c = Cursor { bytes: &bytes, at: 4 };
    let version = c.u32()?;
    if version != ENC1_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let dim = c.u32()? as usize;
    if dim == 0 {
        return Err(Error::Malformed("dimension is zero".into()));
    }
    let count = c.u64()?;
    let mut set = EncodingSet::new(dim);
    for _ in 0..count {
        let doc_id = c.string("doc_id")?;
        let code = c.take(1)?[0];
        let strategy = Strategy::from_code(code).ok_or_else(|| Error::Malformed(format!("strategy code {code}")))?;
        let position_key = c.string("position_key")?;
        let vector = c
            .take(dim * 4)?
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")))
            .collect();
        set.push(Encoding {
            doc_id,
            strategy,
            position_key,
            vector,
        })?;
    }
    if c.at != bytes.len() {
        return Err(Error::Malformed(format!(
            "{} trailing bytes after {count} entries",
            bytes.len() - c.at
        )));
    }
    Ok(set)
}

pub fn export_encodings(set: &EncodingSet, path: &Path) -> Result<()> {
    if set.is_empty() {
        return Err(Error::Input("refusing to export an empty encoding set".into()));
    }
    let mut w = BufWriter::new(File::create(path).at(path)?);
    write_enc1(set, &mut w)?;
    w.flush().at(path)
}

pub fn import_encodings(path: &Path) -> Result<EncodingSet> {
    read_enc1(File::open(path).at(path)?)
}

/// Like [`import_encodings`] but also requires the declared dimension.
pub fn import_encodings_with_dim(path: &Path, dim: usize) -> Result<EncodingSet> {
    let set = import_encodings(path)?;
    if set.dim() != dim {
        return Err(Error::DimMismatch {
            expected: dim,
            got: set.dim(),
        });
    }
    Ok(set)
}
