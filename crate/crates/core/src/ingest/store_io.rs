//! Binary embedding store files.
//!
//! Layout: one JSON header line
//! `{"dim":D,"count":N,"provenance_schema":["analogous_pattern","contrastive_pattern","mention_context"]}`
//! followed by `N` records, all integers little-endian:
//!
//! ```text
//! u32 key_len | key (UTF-8) | u8 provenance | u32 source_len | source (UTF-8)
//! | u32 dim | dim x f32
//! ```
//!
//! `provenance` indexes `provenance_schema`; `source_len = 0xFFFFFFFF` means
//! no source query id. An empty store has `dim` 0.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::store::EmbeddingStore;
use crate::types::{Embedding, Provenance};

const NO_SOURCE: u32 = u32::MAX;

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    dim: usize,
    count: usize,
    provenance_schema: Vec<Provenance>,
}

pub fn write_store<W: Write>(store: &EmbeddingStore, mut out: W) -> Result<()> {
    let header = Header {
        dim: store.dim().unwrap_or(0),
        count: store.len(),
        provenance_schema: Provenance::ALL.to_vec(),
    };
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n")?;
    for (key, e) in store.iter() {
        let id = key.id.as_bytes();
        out.write_all(&(id.len() as u32).to_le_bytes())?;
        out.write_all(id)?;
        out.write_all(&[key.provenance.code()])?;
        match &e.source_query_id {
            Some(s) => {
                out.write_all(&(s.len() as u32).to_le_bytes())?;
                out.write_all(s.as_bytes())?;
            }
            None => out.write_all(&NO_SOURCE.to_le_bytes())?,
        }
        out.write_all(&(e.dim() as u32).to_le_bytes())?;
        for x in e.as_slice() {
            out.write_all(&x.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn store_to_bytes(store: &EmbeddingStore) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_store(store, &mut buf)?;
    Ok(buf)
}

struct RecordReader<R> {
    inner: R,
    index: usize,
}

impl<R: Read> RecordReader<R> {
    fn fail(&self, reason: impl Into<String>) -> Error {
        Error::StoreRecord {
            index: self.index,
            reason: reason.into(),
        }
    }

    fn exact(&mut self, buf: &mut [u8]) -> Result<()> {
        self.inner.read_exact(buf).map_err(|e| match e.kind() {
            std::io::ErrorKind::UnexpectedEof => self.fail("truncated record"),
            _ => Error::Io(e),
        })
    }

    fn u32(&mut self) -> Result<u32> {
        let mut b = [0u8; 4];
        self.exact(&mut b)?;
        Ok(u32::from_le_bytes(b))
    }

    fn string(&mut self, len: u32) -> Result<String> {
        let mut b = vec![0u8; len as usize];
        self.exact(&mut b)?;
        String::from_utf8(b).map_err(|_| self.fail("key is not UTF-8"))
    }
}

pub fn read_store<R: Read>(input: R) -> Result<EmbeddingStore> {
    let mut input = BufReader::new(input);
    let mut line = String::new();
    input.read_line(&mut line)?;
    let header: Header = serde_json::from_str(line.trim_end())?;
    let mut store = if header.dim == 0 {
        EmbeddingStore::new()
    } else {
        EmbeddingStore::with_dim(header.dim)
    };
    if header.count > 0 && header.dim == 0 {
        return Err(Error::StoreRecord {
            index: 0,
            reason: "header declares records but dimension 0".into(),
        });
    }
    let mut reader = RecordReader { inner: input, index: 0 };
    for index in 0..header.count {
        reader.index = index;
        let key_len = reader.u32()?;
        let id = reader.string(key_len)?;
        let mut code = [0u8; 1];
        reader.exact(&mut code)?;
        let provenance = header
            .provenance_schema
            .get(code[0] as usize)
            .copied()
            .ok_or_else(|| reader.fail(format!("unknown provenance code {}", code[0])))?;
        let source = match reader.u32()? {
            NO_SOURCE => None,
            n => Some(reader.string(n)?),
        };
        let dim = reader.u32()? as usize;
        if dim != header.dim {
            return Err(reader.fail(format!("dimension {dim} differs from header dimension {}", header.dim)));
        }
        let mut raw = vec![0u8; dim * 4];
        reader.exact(&mut raw)?;
        let vector = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        let mut e = Embedding::new(vector, provenance).map_err(|err| reader.fail(err.to_string()))?;
        e.source_query_id = source;
        store.put(id, e).map_err(|err| reader.fail(err.to_string()))?;
    }
    let mut rest = [0u8; 1];
    if reader.inner.read(&mut rest)? != 0 {
        return Err(Error::StoreRecord {
            index: header.count,
            reason: "trailing bytes after the declared records".into(),
        });
    }
    Ok(store)
}

pub fn load_store(path: &Path) -> Result<EmbeddingStore> {
    read_store(std::fs::File::open(path)?)
}
