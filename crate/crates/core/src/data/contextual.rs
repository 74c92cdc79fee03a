use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const MAGIC: &[u8; 8] = b"G2SCTXV1";

/// Precomputed per-token contextual vectors for passage and answer.
#[derive(Clone, Debug, PartialEq)]
pub struct ContextEntry {
    pub passage: Vec<Vec<f32>>,
    pub answer: Vec<Vec<f32>>,
}

impl ContextEntry {
    pub fn passage_tensor<T: Scalar>(&self) -> Tensor<T> {
        to_tensor(&self.passage)
    }

    pub fn answer_tensor<T: Scalar>(&self) -> Tensor<T> {
        to_tensor(&self.answer)
    }
}

fn to_tensor<T: Scalar>(rows: &[Vec<f32>]) -> Tensor<T> {
    let cols = rows.first().map_or(0, Vec::len);
    Tensor::from_fn(rows.len(), cols, |r, c| T::c(rows[r][c] as f64))
}

/// Contextual vectors keyed by example id.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ContextStore {
    pub dim: usize,
    pub entries: HashMap<String, ContextEntry>,
}

impl ContextStore {
    pub fn get(&self, id: &str) -> Option<&ContextEntry> {
        self.entries.get(id)
    }

    /// Layout: magic, `u32` dim, `u32` count, then per entry a length-prefixed
    /// id, `u32` passage rows, `u32` answer rows and little-endian `f32` values.
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(MAGIC)?;
        w.write_all(&(self.dim as u32).to_le_bytes())?;
        w.write_all(&(self.entries.len() as u32).to_le_bytes())?;
        let mut ids: Vec<&String> = self.entries.keys().collect();
        ids.sort();
        for id in ids {
            let e = &self.entries[id];
            w.write_all(&(id.len() as u32).to_le_bytes())?;
            w.write_all(id.as_bytes())?;
            w.write_all(&(e.passage.len() as u32).to_le_bytes())?;
            w.write_all(&(e.answer.len() as u32).to_le_bytes())?;
            for row in e.passage.iter().chain(&e.answer) {
                if row.len() != self.dim {
                    return Err(Error::Data(format!("context vector for {id} has dimension {}", row.len())));
                }
                for v in row {
                    w.write_all(&v.to_le_bytes())?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Data("not a contextual vector file".into()));
        }
        let dim = read_u32(&mut r)? as usize;
        let count = read_u32(&mut r)?;
        let mut entries = HashMap::new();
        for _ in 0..count {
            let id_len = read_u32(&mut r)? as usize;
            let mut id = vec![0u8; id_len];
            r.read_exact(&mut id)?;
            let id = String::from_utf8(id).map_err(|_| Error::Data("context id is not UTF-8".into()))?;
            let np = read_u32(&mut r)? as usize;
            let na = read_u32(&mut r)? as usize;
            let mut read_rows = |n: usize| -> Result<Vec<Vec<f32>>> {
                (0..n)
                    .map(|_| {
                        (0..dim)
                            .map(|_| {
                                let mut b = [0u8; 4];
                                r.read_exact(&mut b)?;
                                Ok(f32::from_le_bytes(b))
                            })
                            .collect()
                    })
                    .collect()
            };
            let passage = read_rows(np)?;
            let answer = read_rows(na)?;
            entries.insert(id, ContextEntry { passage, answer });
        }
        Ok(ContextStore { dim, entries })
    }
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}
