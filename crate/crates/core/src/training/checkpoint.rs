//! Versioned binary checkpoints.
//!
//! Layout: the 8-byte magic, a `u32` format version, a `u64` manifest length,
//! the JSON manifest, then raw little-endian values in manifest order: the
//! word vectors, every parameter, and the Adam first and second moments when
//! present.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::autodiff::Tensor;
use crate::config::Config;
use crate::data::{ContextStore, EmbeddingTable, Lexicon, TagSet, Vocabulary};
use crate::error::{Error, Result};
use crate::model::Graph2Seq;
use crate::scalar::Scalar;
use crate::training::adam::Adam;
use crate::training::trainer::TrainState;

pub const MAGIC: &[u8; 8] = b"G2SQGCKP";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerEntry {
    pub t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub dtype: String,
    pub config: String,
    pub words: Vec<String>,
    pub pos: Vec<String>,
    pub ner: Vec<String>,
    pub embeddings: TensorEntry,
    pub params: Vec<TensorEntry>,
    pub optimizer: Option<OptimizerEntry>,
    pub schedule: Option<TrainState>,
}

/// A restored model plus whatever training state was saved with it.
pub struct Checkpoint<T: Scalar> {
    pub model: Graph2Seq<T>,
    pub adam: Option<Adam<T>>,
    pub state: Option<TrainState>,
}

fn bytes_of<T: Scalar>(t: &Tensor<T>) -> Vec<u8> {
    let mut out = Vec::with_capacity(t.len() * T::BYTES);
    for &x in t.data() {
        x.write_le(&mut out);
    }
    out
}

fn entry<T: Scalar>(name: &str, t: &Tensor<T>) -> (TensorEntry, Vec<u8>) {
    let bytes = bytes_of(t);
    let sha256 = format!("{:x}", Sha256::digest(&bytes));
    (
        TensorEntry {
            name: name.to_string(),
            shape: t.shape().to_vec(),
            sha256,
        },
        bytes,
    )
}

/// Writes `model`, optionally with optimizer moments and schedule state.
pub fn save_checkpoint<T: Scalar>(
    path: impl AsRef<Path>,
    model: &Graph2Seq<T>,
    adam: Option<&Adam<T>>,
    state: Option<&TrainState>,
) -> Result<()> {
    let path = path.as_ref();
    let mut payload = Vec::new();
    let (embeddings, bytes) = entry("embeddings", model.words.vectors());
    payload.push(bytes);
    let mut params = Vec::with_capacity(model.store.len());
    for (_, p) in model.store.iter() {
        let (e, b) = entry(&p.name, &p.value);
        params.push(e);
        payload.push(b);
    }
    if let Some(a) = adam {
        for t in a.m.iter().chain(&a.v) {
            payload.push(bytes_of(t));
        }
    }
    let manifest = Manifest {
        version: VERSION,
        dtype: T::DTYPE.to_string(),
        config: model.cfg.to_text(),
        words: model.lexicon.words.words().to_vec(),
        pos: model.lexicon.pos.tags().to_vec(),
        ner: model.lexicon.ner.tags().to_vec(),
        embeddings,
        params,
        optimizer: adam.map(|a| OptimizerEntry {
            t: a.t,
            beta1: a.beta1,
            beta2: a.beta2,
            eps: a.eps,
        }),
        schedule: state.cloned(),
    };
    let json = serde_json::to_vec(&manifest)?;
    let write = || -> std::io::Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(json.len() as u64).to_le_bytes())?;
        w.write_all(&json)?;
        for b in &payload {
            w.write_all(b)?;
        }
        w.flush()
    };
    write().map_err(|e| Error::Checkpoint(format!("cannot write {}: {e}", path.display())))
}

/// Reads only the manifest.
pub fn read_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    let mut r = open(path.as_ref())?;
    header(&mut r, path.as_ref())
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::Checkpoint(format!("cannot open {}: {e}", path.display())))
}

fn header(r: &mut impl Read, path: &Path) -> Result<Manifest> {
    let bad = |msg: &str| Error::Checkpoint(format!("{}: {msg}", path.display()));
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(|_| bad("truncated header"))?;
    if &magic != MAGIC {
        return Err(bad("not a checkpoint file"));
    }
    let mut word = [0u8; 4];
    r.read_exact(&mut word).map_err(|_| bad("truncated header"))?;
    let version = u32::from_le_bytes(word);
    if version != VERSION {
        return Err(bad(&format!("unsupported format version {version}")));
    }
    let mut len = [0u8; 8];
    r.read_exact(&mut len).map_err(|_| bad("truncated header"))?;
    let mut json = vec![0u8; u64::from_le_bytes(len) as usize];
    r.read_exact(&mut json).map_err(|_| bad("truncated manifest"))?;
    serde_json::from_slice(&json).map_err(|e| bad(&format!("bad manifest: {e}")))
}

fn read_tensor<T: Scalar>(r: &mut impl Read, shape: &[usize], check: Option<&str>, what: &str) -> Result<Tensor<T>> {
    let n: usize = shape.iter().product();
    let mut bytes = vec![0u8; n * T::BYTES];
    r.read_exact(&mut bytes)
        .map_err(|_| Error::Checkpoint(format!("truncated data for {what}")))?;
    if let Some(expected) = check {
        if format!("{:x}", Sha256::digest(&bytes)) != expected {
            return Err(Error::Checkpoint(format!("checksum mismatch for {what}")));
        }
    }
    let data = bytes.chunks_exact(T::BYTES).map(T::read_le).collect();
    Tensor::new(shape.to_vec(), data)
}

/// Restores a checkpoint written at the same precision. `contexts` must be
/// given when the model was trained with contextual vectors.
pub fn load_checkpoint<T: Scalar>(path: impl AsRef<Path>, contexts: Option<ContextStore>) -> Result<Checkpoint<T>> {
    let path = path.as_ref();
    let mut r = open(path)?;
    let m = header(&mut r, path)?;
    if m.dtype != T::DTYPE {
        return Err(Error::Checkpoint(format!(
            "checkpoint holds {} values, requested {}",
            m.dtype,
            T::DTYPE
        )));
    }
    let cfg = Config::parse(&m.config)?;
    let lexicon = Lexicon {
        words: Vocabulary::from_words(m.words.clone())?,
        pos: TagSet::from_tags(m.pos.clone()),
        ner: TagSet::from_tags(m.ner.clone()),
    };
    let vectors = read_tensor(&mut r, &m.embeddings.shape, Some(&m.embeddings.sha256), "embeddings")?;
    let mut model = Graph2Seq::new(cfg, lexicon, EmbeddingTable::from_tensor(vectors), contexts)?;
    if model.store.len() != m.params.len() {
        return Err(Error::Checkpoint(format!(
            "checkpoint has {} parameters, the configured model {}",
            m.params.len(),
            model.store.len()
        )));
    }
    for e in &m.params {
        let id = model
            .store
            .id(&e.name)
            .ok_or_else(|| Error::Checkpoint(format!("unknown parameter {}", e.name)))?;
        let value = read_tensor(&mut r, &e.shape, Some(&e.sha256), &e.name)?;
        let p = model.store.get_mut(id);
        if p.value.shape() != value.shape() {
            return Err(Error::Checkpoint(format!(
                "parameter {} has shape {:?}, expected {:?}",
                e.name,
                value.shape(),
                p.value.shape()
            )));
        }
        p.value = value;
    }
    let adam = match &m.optimizer {
        Some(o) => {
            let mut a = Adam::new(&model.store);
            a.t = o.t;
            a.beta1 = o.beta1;
            a.beta2 = o.beta2;
            a.eps = o.eps;
            for k in 0..m.params.len() {
                let id = model.store.id(&m.params[k].name).expect("checked above");
                a.m[id.index()] = read_tensor(&mut r, &m.params[k].shape, None, "first moment")?;
            }
            for k in 0..m.params.len() {
                let id = model.store.id(&m.params[k].name).expect("checked above");
                a.v[id.index()] = read_tensor(&mut r, &m.params[k].shape, None, "second moment")?;
            }
            Some(a)
        }
        None => None,
    };
    Ok(Checkpoint {
        model,
        adam,
        state: m.schedule,
    })
}
