use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::annotation::TokenAnnotation;
use crate::error::{Error, Result};

/// Directed dependency arc `head → dependent` over passage-global indices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepEdge(pub usize, pub usize, pub String);

/// One passage/answer/question instance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Example {
    #[serde(default)]
    pub id: String,
    #[serde(rename = "passage_tokens")]
    pub passage: Vec<TokenAnnotation>,
    pub sentence_starts: Vec<usize>,
    /// Half-open token range `[start, end)` inside the passage.
    pub answer_span: (usize, usize),
    #[serde(rename = "question_tokens")]
    pub question: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dependency_edges: Option<Vec<DepEdge>>,
}

impl Example {
    pub fn passage_len(&self) -> usize {
        self.passage.len()
    }

    pub fn answer(&self) -> &[TokenAnnotation] {
        &self.passage[self.answer_span.0..self.answer_span.1]
    }

    pub fn passage_words(&self) -> impl Iterator<Item = &str> {
        self.passage.iter().map(|t| t.surface.as_str())
    }

    pub fn num_sentences(&self) -> usize {
        self.sentence_starts.len()
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        let n = self.passage.len();
        if n == 0 {
            return Err("empty passage".into());
        }
        if let Some(i) = self.passage.iter().position(|t| t.surface.is_empty()) {
            return Err(format!("token {i} has an empty surface"));
        }
        let (s, e) = self.answer_span;
        if !(s < e && e <= n) {
            return Err(format!("answer span [{s},{e}) out of range for {n} tokens"));
        }
        if self.sentence_starts.first() != Some(&0) {
            return Err("sentence_starts must begin with 0".into());
        }
        if self.sentence_starts.windows(2).any(|w| w[0] >= w[1]) {
            return Err("sentence_starts must be strictly increasing".into());
        }
        if self.sentence_starts.last().is_some_and(|&l| l >= n) {
            return Err("sentence start beyond passage".into());
        }
        if let Some(edges) = &self.dependency_edges {
            if let Some(DepEdge(h, d, _)) = edges.iter().find(|DepEdge(h, d, _)| *h >= n || *d >= n) {
                return Err(format!("dependency edge ({h},{d}) out of range for {n} tokens"));
            }
        }
        Ok(())
    }
}

/// Parses JSONL records; `origin` names the source in error messages.
pub fn parse_corpus<R: BufRead>(reader: R, origin: &Path) -> Result<Vec<Example>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec_err = |msg: String| Error::Record {
            path: origin.to_path_buf(),
            line: i + 1,
            msg,
        };
        let mut ex: Example = serde_json::from_str(&line).map_err(|e| rec_err(e.to_string()))?;
        ex.validate().map_err(rec_err)?;
        if ex.id.is_empty() {
            ex.id = out.len().to_string();
        }
        out.push(ex);
    }
    Ok(out)
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<Example>> {
    let path = path.as_ref();
    let f = File::open(path)?;
    parse_corpus(BufReader::new(f), path)
}

pub fn write_corpus(path: impl AsRef<Path>, examples: &[Example]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for ex in examples {
        serde_json::to_writer(&mut w, ex)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(span: &str, extra: &str) -> String {
        let toks: Vec<String> = (0..10)
            .map(|i| format!(r#"{{"surface":"w{i}","pos":"NN","ner":"O"}}"#))
            .collect();
        format!(
            r#"{{"passage_tokens":[{}],"sentence_starts":[0,5],"answer_span":{span},"question_tokens":["what","?"]{extra}}}"#,
            toks.join(",")
        )
    }

    #[test]
    fn span_maps_to_answer_tokens() {
        let text = record("[3,5]", "");
        let ex = parse_corpus(text.as_bytes(), Path::new("t")).unwrap();
        assert_eq!(ex[0].answer().len(), 2);
        assert_eq!(ex[0].answer()[0].surface, "w3");
        assert_eq!(ex[0].id, "0");
    }

    #[test]
    fn span_past_end_is_rejected_with_line_number() {
        let text = format!("{}\n{}", record("[1,2]", ""), record("[8,11]", ""));
        match parse_corpus(text.as_bytes(), Path::new("c.jsonl")) {
            Err(Error::Record { line, msg, .. }) => {
                assert_eq!(line, 2);
                assert!(msg.contains("span"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_field_and_bad_edge() {
        let text = r#"{"passage_tokens":[],"answer_span":[0,1]}"#;
        assert!(parse_corpus(text.as_bytes(), Path::new("t")).is_err());
        let text = record("[1,2]", r#","dependency_edges":[[0,10,"nsubj"]]"#);
        let err = parse_corpus(text.as_bytes(), Path::new("t")).unwrap_err();
        assert!(err.to_string().contains("dependency edge"));
    }
}
