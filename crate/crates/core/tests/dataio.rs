use g2sqg::data::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn example(id: &str, passage: &str, span: (usize, usize), question: &str) -> Example {
    Example {
        id: id.into(),
        passage: passage.split_whitespace().map(|w| TokenAnnotation::new(w, "NN", "O")).collect(),
        sentence_starts: vec![0],
        answer_span: span,
        question: question.split_whitespace().map(String::from).collect(),
        dependency_edges: None,
    }
}

fn random_example(rng: &mut ChaCha8Rng, i: usize) -> Example {
    let n = rng.gen_range(2..12);
    let words: Vec<String> = (0..n).map(|_| format!("w{}", rng.gen_range(0..15))).collect();
    let s = rng.gen_range(0..n - 1);
    let e = rng.gen_range(s + 1..=n);
    let q: Vec<String> = (0..rng.gen_range(1..6)).map(|_| format!("w{}", rng.gen_range(0..20))).collect();
    let mut ex = example(&format!("r{i}"), &words.join(" "), (s, e), &q.join(" "));
    ex.sentence_starts = if n > 4 { vec![0, 3] } else { vec![0] };
    ex.passage[0].pos = ["DT", "NN", "VB"][i % 3].into();
    ex.dependency_edges = Some(vec![DepEdge(0, 1, "dep".into())]);
    ex
}

#[test]
fn corpus_roundtrip_fifty_records() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let records: Vec<Example> = (0..50).map(|i| random_example(&mut rng, i)).collect();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.jsonl");
    write_corpus(&path, &records).unwrap();
    assert_eq!(load_corpus(&path).unwrap(), records);
}

#[test]
fn all_in_vocab_batch_has_no_extension() {
    let exs = vec![example("a", "the cat sat", (1, 2), "what sat"), example("b", "a dog ran", (1, 2), "who ran")];
    let lex = Lexicon::build(&exs, 100).unwrap();
    let b = encode_batch(&exs, &lex).unwrap();
    assert_eq!(b.extended_size(), lex.words.len());
}

#[test]
fn single_oov_is_copyable() {
    let train = vec![example("a", "the cat sat", (1, 2), "what sat")];
    let lex = Lexicon::build(&train, 100).unwrap();
    let ex = example("b", "the zyzzyva sat", (1, 2), "what zyzzyva sat");
    let b = encode_batch(&[ex], &lex).unwrap();
    let base = lex.words.len();
    assert_eq!(b.extended_size(), base + 1);
    assert_eq!(b.examples[0].source_ext[1], base);
    assert_eq!(b.examples[0].target[1], base);
    assert_eq!(b.examples[0].target.last(), Some(&EOS));
    assert_eq!(b.decode(&lex.words, base), "zyzzyva");
}

#[test]
fn question_oov_absent_from_source_is_unk() {
    let lex = Lexicon::build(&[example("a", "the cat", (0, 1), "the")], 100).unwrap();
    let b = encode_batch(&[example("b", "the cat", (0, 1), "mystery")], &lex).unwrap();
    assert_eq!(b.examples[0].target[0], UNK);
}

#[test]
fn masks_are_zero_exactly_at_padding() {
    let exs = vec![example("a", "x y z w", (0, 3), "q"), example("b", "x", (0, 1), "q r s")];
    let lex = Lexicon::build(&exs, 100).unwrap();
    let b = encode_batch(&exs, &lex).unwrap();
    for (row, len) in [(&b.passage_mask, &b.passage_len), (&b.answer_mask, &b.answer_len), (&b.question_mask, &b.question_len)] {
        for (m, &l) in row.iter().zip(len.iter()) {
            assert!(m.iter().enumerate().all(|(i, &v)| v == (i < l)));
        }
    }
    assert_eq!(b.passage[1][1..], [PAD, PAD, PAD]);
}

proptest! {
    #[test]
    fn every_source_position_resolves_once(seed in 0u64..500, n_train in 1usize..6, n_batch in 1usize..6, cap in 1usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let train: Vec<Example> = (0..n_train).map(|i| random_example(&mut rng, i)).collect();
        let batch: Vec<Example> = (0..n_batch).map(|i| random_example(&mut rng, 100 + i)).collect();
        let lex = Lexicon::build(&train, cap).unwrap();
        let b = encode_batch(&batch, &lex).unwrap();
        let again = encode_batch(&batch, &lex).unwrap();
        prop_assert_eq!(&b, &again);
        // exhaustive scan: each source word equals exactly one extended entry
        let mut extended: Vec<String> = lex.words.words().to_vec();
        extended.extend(b.oov_words.iter().cloned());
        for (ex, enc) in batch.iter().zip(&b.examples) {
            for (pos, tok) in ex.passage.iter().enumerate() {
                let hits: Vec<usize> = extended.iter().enumerate().filter(|(_, w)| **w == tok.surface).map(|(i, _)| i).collect();
                prop_assert_eq!(hits.len(), 1);
                prop_assert_eq!(enc.source_ext[pos], hits[0]);
                if let Some(i) = lex.words.get(&tok.surface) {
                    prop_assert_eq!(enc.source_ext[pos], i);
                }
            }
        }
    }
}
