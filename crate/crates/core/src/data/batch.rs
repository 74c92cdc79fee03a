use std::collections::HashMap;

use crate::data::example::Example;
use crate::data::vocab::{TagSet, Vocabulary, EOS, PAD, UNK};
use crate::error::{Error, Result};

/// Word vocabulary together with the POS and NER tag sets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lexicon {
    pub words: Vocabulary,
    pub pos: TagSet,
    pub ner: TagSet,
}

impl Lexicon {
    pub fn build(examples: &[Example], cap: usize) -> Result<Self> {
        let words = Vocabulary::build(examples, cap)?;
        let pos = TagSet::build(examples.iter().flat_map(|e| e.passage.iter().map(|t| t.pos.as_str())));
        let ner = TagSet::build(examples.iter().flat_map(|e| e.passage.iter().map(|t| t.ner.as_str())));
        Ok(Lexicon { words, pos, ner })
    }
}

/// Index-level view of one example.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncodedExample {
    /// Base vocabulary index per passage token (`UNK` when out of vocabulary).
    pub passage: Vec<usize>,
    pub case: Vec<usize>,
    pub pos: Vec<usize>,
    pub ner: Vec<usize>,
    /// Extended index per passage token.
    pub source_ext: Vec<usize>,
    pub answer_span: (usize, usize),
    /// Question in extended indices, terminated by `EOS`.
    pub target: Vec<usize>,
}

impl EncodedExample {
    pub fn answer(&self) -> &[usize] {
        &self.passage[self.answer_span.0..self.answer_span.1]
    }
}

/// Padded index matrices plus the extended vocabulary of a batch.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Batch {
    pub ids: Vec<String>,
    pub examples: Vec<EncodedExample>,
    pub base_size: usize,
    /// Out-of-vocabulary source words; word `i` has extended index `base_size + i`.
    pub oov_words: Vec<String>,
    pub passage: Vec<Vec<usize>>,
    pub answer: Vec<Vec<usize>>,
    pub question: Vec<Vec<usize>>,
    pub passage_len: Vec<usize>,
    pub answer_len: Vec<usize>,
    pub question_len: Vec<usize>,
    pub passage_mask: Vec<Vec<bool>>,
    pub answer_mask: Vec<Vec<bool>>,
    pub question_mask: Vec<Vec<bool>>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn extended_size(&self) -> usize {
        self.base_size + self.oov_words.len()
    }

    pub fn decode(&self, vocab: &Vocabulary, idx: usize) -> String {
        if idx < self.base_size {
            vocab.decode(idx).to_string()
        } else {
            self.oov_words[idx - self.base_size].clone()
        }
    }
}

fn pad(rows: &[Vec<usize>]) -> (Vec<Vec<usize>>, Vec<usize>, Vec<Vec<bool>>) {
    let width = rows.iter().map(Vec::len).max().unwrap_or(0);
    let mut padded = Vec::with_capacity(rows.len());
    let mut mask = Vec::with_capacity(rows.len());
    for r in rows {
        let mut p = r.clone();
        p.resize(width, PAD);
        padded.push(p);
        let mut m = vec![true; r.len()];
        m.resize(width, false);
        mask.push(m);
    }
    (padded, rows.iter().map(Vec::len).collect(), mask)
}

/// Encodes and pads a batch. OOV passage words receive extended indices in
/// order of first appearance across the batch; a question word outside the
/// base vocabulary maps to its extended index when it occurs in that
/// example's own passage and to `UNK` otherwise.
pub fn encode_batch(examples: &[Example], lex: &Lexicon) -> Result<Batch> {
    if examples.is_empty() {
        return Err(Error::InvalidArgument("cannot encode an empty batch".into()));
    }
    let vocab = &lex.words;
    let base_size = vocab.len();
    let mut oov_words: Vec<String> = Vec::new();
    let mut oov_index: HashMap<String, usize> = HashMap::new();
    let mut encoded = Vec::with_capacity(examples.len());
    for ex in examples {
        let passage: Vec<usize> = ex.passage_words().map(|w| vocab.encode(w)).collect();
        let source_ext: Vec<usize> = ex
            .passage
            .iter()
            .map(|t| match vocab.get(&t.surface) {
                Some(i) => i,
                None => *oov_index.entry(t.surface.clone()).or_insert_with(|| {
                    oov_words.push(t.surface.clone());
                    base_size + oov_words.len() - 1
                }),
            })
            .collect();
        let mut target: Vec<usize> = ex
            .question
            .iter()
            .map(|w| match vocab.get(w) {
                Some(i) => i,
                None if ex.passage_words().any(|s| s == w) => oov_index[w.as_str()],
                None => UNK,
            })
            .collect();
        target.push(EOS);
        encoded.push(EncodedExample {
            case: ex.passage.iter().map(|t| t.case().index()).collect(),
            pos: ex.passage.iter().map(|t| lex.pos.encode(&t.pos)).collect(),
            ner: ex.passage.iter().map(|t| lex.ner.encode(&t.ner)).collect(),
            passage,
            source_ext,
            answer_span: ex.answer_span,
            target,
        });
    }
    let (passage, passage_len, passage_mask) = pad(&encoded.iter().map(|e| e.passage.clone()).collect::<Vec<_>>());
    let (answer, answer_len, answer_mask) = pad(&encoded.iter().map(|e| e.answer().to_vec()).collect::<Vec<_>>());
    let (question, question_len, question_mask) = pad(&encoded.iter().map(|e| e.target.clone()).collect::<Vec<_>>());
    Ok(Batch {
        ids: examples.iter().map(|e| e.id.clone()).collect(),
        examples: encoded,
        base_size,
        oov_words,
        passage,
        answer,
        question,
        passage_len,
        answer_len,
        question_len,
        passage_mask,
        answer_mask,
        question_mask,
    })
}
