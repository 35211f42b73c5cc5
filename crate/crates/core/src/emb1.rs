//! The EMB1 embedding container.
//!
//! Little-endian throughout:
//!
//! ```text
//! header   "EMB1" | version: u16 = 1 | dim: u32 | record count: u32
//! record   segment_index: u32 | token count L: u32
//!          L × (byte length: u16 | UTF-8 bytes)
//!          L·dim × f32, row-major
//! ```
//!
//! Segment indices start at 0 and strictly increase. Records carrying the
//! reserved delimiter tokens `[CLS]`/`[SEP]`, zero rows or non-finite values
//! are rejected: the extractor is expected to strip delimiters.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::similarity::SegmentEmbedding;

pub const MAGIC: &[u8; 4] = b"EMB1";
pub const VERSION: u16 = 1;
pub const RESERVED_TOKENS: [&str; 2] = ["[CLS]", "[SEP]"];

const HEADER_LEN: usize = 4 + 2 + 4 + 4;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingRecord {
    pub segment_index: u32,
    pub tokens: Vec<String>,
    /// `tokens.len() × dim` values, row-major.
    pub values: Vec<f32>,
}

impl EmbeddingRecord {
    pub fn to_segment(&self, dim: usize) -> Result<SegmentEmbedding> {
        SegmentEmbedding::new(
            self.tokens.clone(),
            dim,
            self.values.iter().map(|&v| f64::from(v)).collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingFile {
    pub dim: u32,
    pub records: Vec<EmbeddingRecord>,
    /// Where the file was read from; not part of the encoding.
    pub source: Option<PathBuf>,
}

impl EmbeddingFile {
    pub fn new(dim: u32, records: Vec<EmbeddingRecord>) -> Self {
        Self {
            dim,
            records,
            source: None,
        }
    }

    pub fn display_name(&self) -> PathBuf {
        self.source
            .clone()
            .unwrap_or_else(|| PathBuf::from("<in-memory EMB1>"))
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn err(&self, offset: usize, message: impl Into<String>) -> Error {
        Error::Format {
            path: self.path.to_path_buf(),
            offset: offset as u64,
            message: message.into(),
        }
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let out = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(out)
            }
            None => Err(self.err(
                self.pos,
                format!(
                    "truncated payload: {what} needs {n} bytes, {} remain",
                    self.bytes.len() - self.pos
                ),
            )),
        }
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }
}

/// Parses an in-memory EMB1 image; `path` is only used in error messages.
pub fn decode_emb1(bytes: &[u8], path: &Path) -> Result<EmbeddingFile> {
    let mut r = Reader {
        bytes,
        pos: 0,
        path,
    };
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(r.err(0, "not an EMB1 file"));
    }
    r.pos = 4;
    let version = r.u16("version")?;
    if version != VERSION {
        return Err(r.err(4, format!("unsupported EMB1 version {version}")));
    }
    let dim = r.u32("dimension")?;
    if dim == 0 {
        return Err(r.err(6, "embedding dimension is 0"));
    }
    let count = r.u32("record count")?;
    debug_assert_eq!(r.pos, HEADER_LEN);

    let mut records = Vec::with_capacity(count.min(1 << 20) as usize);
    for n in 0..count {
        let record_start = r.pos;
        let segment_index = r.u32("segment index")?;
        let expected_min = records
            .last()
            .map_or(0, |prev: &EmbeddingRecord| prev.segment_index as u64 + 1);
        if n == 0 && segment_index != 0 {
            return Err(r.err(
                record_start,
                format!("first segment index is {segment_index}, expected 0"),
            ));
        }
        if (segment_index as u64) < expected_min {
            return Err(r.err(
                record_start,
                format!("segment index {segment_index} is not strictly increasing"),
            ));
        }
        let len = r.u32("token count")? as usize;
        let mut tokens = Vec::with_capacity(len.min(1 << 16));
        for _ in 0..len {
            let token_start = r.pos;
            let n_bytes = r.u16("token length")? as usize;
            let raw = r.take(n_bytes, "token bytes")?;
            let token = std::str::from_utf8(raw)
                .map_err(|_| r.err(token_start, "token is not valid UTF-8"))?;
            if RESERVED_TOKENS.contains(&token) {
                return Err(r.err(
                    token_start,
                    format!("reserved token {token} in segment {segment_index}; strip delimiters before export"),
                ));
            }
            tokens.push(token.to_owned());
        }
        let n_values = len
            .checked_mul(dim as usize)
            .ok_or_else(|| r.err(record_start, "token count × dimension overflows"))?;
        let matrix_start = r.pos;
        let n_bytes = n_values
            .checked_mul(4)
            .ok_or_else(|| r.err(record_start, "matrix size overflows"))?;
        let raw = r.take(n_bytes, "embedding matrix")?;
        let values: Vec<f32> = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        for (row, chunk) in values.chunks_exact(dim as usize).enumerate() {
            let offset = matrix_start + row * dim as usize * 4;
            if chunk.iter().any(|v| !v.is_finite()) {
                return Err(r.err(
                    offset,
                    format!("non-finite value in segment {segment_index}, row {row}"),
                ));
            }
            if chunk.iter().all(|&v| v == 0.0) {
                return Err(r.err(
                    offset,
                    format!("zero embedding row in segment {segment_index}, row {row}"),
                ));
            }
        }
        records.push(EmbeddingRecord {
            segment_index,
            tokens,
            values,
        });
    }
    if r.pos != bytes.len() {
        return Err(r.err(
            r.pos,
            format!(
                "{} trailing bytes after the declared {count} records",
                bytes.len() - r.pos
            ),
        ));
    }
    Ok(EmbeddingFile {
        dim,
        records,
        source: Some(path.to_path_buf()),
    })
}

pub fn read_emb1(path: impl AsRef<Path>) -> Result<EmbeddingFile> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_emb1(&bytes, path)
}

/// Serializes to the EMB1 byte layout.
pub fn encode_emb1(file: &EmbeddingFile) -> Result<Vec<u8>> {
    let path = file.display_name();
    let fail = |message: String| Error::Format {
        path: path.clone(),
        offset: 0,
        message,
    };
    let count = u32::try_from(file.records.len()).map_err(|_| fail("too many records".into()))?;
    let mut out = Vec::with_capacity(HEADER_LEN);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&file.dim.to_le_bytes());
    out.extend_from_slice(&count.to_le_bytes());
    for rec in &file.records {
        if rec.values.len() != rec.tokens.len() * file.dim as usize {
            return Err(fail(format!(
                "segment {}: {} values for {} tokens of dimension {}",
                rec.segment_index,
                rec.values.len(),
                rec.tokens.len(),
                file.dim
            )));
        }
        out.extend_from_slice(&rec.segment_index.to_le_bytes());
        out.extend_from_slice(&(rec.tokens.len() as u32).to_le_bytes());
        for token in &rec.tokens {
            let len = u16::try_from(token.len())
                .map_err(|_| fail(format!("token longer than {} bytes", u16::MAX)))?;
            out.extend_from_slice(&len.to_le_bytes());
            out.extend_from_slice(token.as_bytes());
        }
        for v in &rec.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn write_emb1(path: impl AsRef<Path>, file: &EmbeddingFile) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_emb1(file)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
