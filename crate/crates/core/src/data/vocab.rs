use std::collections::HashMap;

use crate::data::example::Example;
use crate::error::{Error, Result};

pub const PAD: usize = 0;
pub const UNK: usize = 1;
pub const SOS: usize = 2;
pub const EOS: usize = 3;
pub const RESERVED: [&str; 4] = ["<pad>", "<unk>", "<s>", "</s>"];

/// Word ↔ index mapping with the four reserved entries first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Rebuilds a vocabulary from its full index → word list (reserved
    /// entries included), e.g. when restoring a checkpoint.
    pub fn from_words(words: Vec<String>) -> Result<Self> {
        if words.len() < RESERVED.len() || words[..RESERVED.len()] != RESERVED {
            return Err(Error::Data("vocabulary must start with the reserved tokens".into()));
        }
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(Error::Data(format!("duplicate vocabulary entry {w}")));
            }
        }
        Ok(Vocabulary { words, index })
    }

    /// Keeps the `cap` most frequent tokens; equal counts are ordered by
    /// first occurrence.
    pub fn from_tokens<'a>(tokens: impl IntoIterator<Item = &'a str>, cap: usize) -> Result<Self> {
        if cap == 0 {
            return Err(Error::InvalidArgument("vocabulary cap must be at least 1".into()));
        }
        // word -> (count, first position)
        let mut counts: HashMap<&str, (usize, usize)> = HashMap::new();
        for (pos, t) in tokens.into_iter().enumerate() {
            counts.entry(t).or_insert((0, pos)).0 += 1;
        }
        if counts.is_empty() {
            return Err(Error::Data("cannot build a vocabulary from an empty corpus".into()));
        }
        let mut ranked: Vec<(&str, usize, usize)> = counts
            .into_iter()
            .filter(|(w, _)| !RESERVED.contains(w))
            .map(|(w, (c, p))| (w, c, p))
            .collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)));
        let words = RESERVED
            .iter()
            .map(|s| s.to_string())
            .chain(ranked.into_iter().take(cap).map(|(w, _, _)| w.to_string()))
            .collect();
        Self::from_words(words)
    }

    /// Vocabulary over passage and question tokens of a training corpus.
    pub fn build(examples: &[Example], cap: usize) -> Result<Self> {
        let tokens = examples.iter().flat_map(|e| {
            e.passage_words()
                .chain(e.question.iter().map(String::as_str))
        });
        Self::from_tokens(tokens, cap)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn get(&self, w: &str) -> Option<usize> {
        self.index.get(w).copied()
    }

    /// Index of `w`, or `UNK`.
    pub fn encode(&self, w: &str) -> usize {
        self.get(w).unwrap_or(UNK)
    }

    pub fn decode(&self, i: usize) -> &str {
        &self.words[i]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }
}

/// Index set for POS or NER tags; entry 0 stands for unseen tags.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TagSet {
    tags: Vec<String>,
    index: HashMap<String, usize>,
}

impl TagSet {
    pub fn from_tags(tags: Vec<String>) -> Self {
        let index = tags.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        TagSet { tags, index }
    }

    pub fn build<'a>(tags: impl IntoIterator<Item = &'a str>) -> Self {
        let mut all = vec!["<unk>".to_string()];
        for t in tags {
            if !all.iter().any(|x| x == t) {
                all.push(t.to_string());
            }
        }
        Self::from_tags(all)
    }

    pub fn encode(&self, t: &str) -> usize {
        self.index.get(t).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn tags(&self) -> &[String] {
        &self.tags
    }
}
