//! Corpus records, vocabularies, word vectors and batching.

pub mod annotation;
pub mod batch;
pub mod contextual;
pub mod embeddings;
pub mod example;
pub mod vocab;

pub use annotation::{Case, TokenAnnotation};
pub use batch::{encode_batch, Batch, EncodedExample, Lexicon};
pub use contextual::{ContextEntry, ContextStore};
pub use embeddings::{load_embeddings, EmbeddingTable};
pub use example::{load_corpus, parse_corpus, write_corpus, DepEdge, Example};
pub use vocab::{TagSet, Vocabulary, EOS, PAD, SOS, UNK};
