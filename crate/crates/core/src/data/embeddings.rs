use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand::Rng;

use crate::autodiff::Tensor;
use crate::data::vocab::{Vocabulary, PAD};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Fixed pretrained word vectors, one row per vocabulary index.
///
/// The trainable feature tables (case, POS, NER) live in the model's
/// parameter store; only these word vectors are frozen.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable<T> {
    vectors: Tensor<T>,
}

const OOV_BOUND: f64 = 0.1;

impl<T: Scalar> EmbeddingTable<T> {
    pub fn from_tensor(vectors: Tensor<T>) -> Self {
        EmbeddingTable { vectors }
    }

    /// Every row drawn uniformly from `[-0.1, 0.1]` except `PAD`, which is zero.
    pub fn random(vocab: &Vocabulary, dim: usize, seed: u64) -> Self {
        Self::assemble(vocab, dim, &HashMap::new(), seed)
    }

    fn assemble(vocab: &Vocabulary, dim: usize, found: &HashMap<String, Vec<T>>, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut data = Vec::with_capacity(vocab.len() * dim);
        for (i, w) in vocab.words().iter().enumerate() {
            if let Some(v) = found.get(w) {
                data.extend_from_slice(v);
            } else if i == PAD {
                data.extend(std::iter::repeat(T::zero()).take(dim));
            } else {
                data.extend((0..dim).map(|_| T::c(rng.gen_range(-OOV_BOUND..=OOV_BOUND))));
            }
        }
        EmbeddingTable {
            vectors: Tensor::from_rows(vocab.len(), dim, data).expect("consistent dims"),
        }
    }

    pub fn dim(&self) -> usize {
        self.vectors.cols()
    }

    pub fn len(&self) -> usize {
        self.vectors.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn vectors(&self) -> &Tensor<T> {
        &self.vectors
    }

    pub fn row(&self, i: usize) -> &[T] {
        self.vectors.row_slice(i)
    }

    /// Stacks the rows for `idx` into a `idx.len() × dim` matrix.
    pub fn lookup(&self, idx: &[usize]) -> Tensor<T> {
        let dim = self.dim();
        let mut data = Vec::with_capacity(idx.len() * dim);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Tensor::from_rows(idx.len(), dim, data).expect("consistent dims")
    }

    pub fn cast<U: Scalar>(&self) -> EmbeddingTable<U> {
        EmbeddingTable {
            vectors: self.vectors.cast(),
        }
    }
}

/// Reads whitespace-separated text vectors (`word v1 … vF` per line) for the
/// words of `vocab`. Words missing from the file get seeded random vectors.
pub fn load_embeddings<T: Scalar>(path: impl AsRef<Path>, vocab: &Vocabulary, seed: u64) -> Result<EmbeddingTable<T>> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path)?);
    let mut dim = None;
    let mut found: HashMap<String, Vec<T>> = HashMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let mut parts = line.split_whitespace();
        let Some(word) = parts.next() else { continue };
        let rec_err = |msg: String| Error::Record {
            path: path.to_path_buf(),
            line: i + 1,
            msg,
        };
        let values = parts
            .map(|s| s.parse::<T>().map_err(|_| rec_err(format!("unparsable float {s:?}"))))
            .collect::<Result<Vec<T>>>()?;
        match dim {
            None => dim = Some(values.len()),
            Some(d) if d != values.len() => {
                return Err(rec_err(format!("expected {d} values, found {}", values.len())));
            }
            _ => {}
        }
        if vocab.get(word).is_some() && !found.contains_key(word) {
            found.insert(word.to_string(), values);
        }
    }
    let dim = dim.ok_or_else(|| Error::Data(format!("{}: no vectors", path.display())))?;
    if dim == 0 {
        return Err(Error::Data(format!("{}: zero-dimensional vectors", path.display())));
    }
    Ok(EmbeddingTable::assemble(vocab, dim, &found, seed))
}
