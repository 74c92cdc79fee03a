//! Synthetic annotated corpus of short factual passages. Every passage is
//! asked about more than once with different answers, so the question
//! depends on the answer as well as on the passage.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{DepEdge, Example, TokenAnnotation};

const PEOPLE: &[&str] = &[
    "Alice", "Bob", "Carol", "Dave", "Erin", "Frank", "Grace", "Heidi", "Ivan", "Judy", "Mallory", "Oscar", "Peggy",
    "Trent", "Victor", "Walter",
];
const CITIES: &[&str] = &["Paris", "London", "Berlin", "Madrid", "Rome", "Vienna", "Oslo", "Dublin", "Lisbon", "Prague"];
const COMPANIES: &[&str] = &["Google", "Apple", "Amazon", "Intel", "Nokia", "Sony", "Tesla", "Oracle"];
const OBJECTS: &[&str] = &["apples", "books", "cars", "pens", "lamps", "chairs"];
const NUMBERS: &[&str] = &["two", "three", "four", "five", "six", "seven"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Fact {
    Lives,
    Works,
    Bought,
}

struct Sentence {
    tokens: Vec<TokenAnnotation>,
    /// `(head, dependent, label)` within the sentence.
    arcs: Vec<(usize, usize, &'static str)>,
    /// `(answer position, question)` pairs.
    questions: Vec<(usize, Vec<String>)>,
}

fn tok(s: &str, pos: &str, ner: &str) -> TokenAnnotation {
    TokenAnnotation::new(s, pos, ner)
}

fn words(ws: &[&str]) -> Vec<String> {
    ws.iter().map(|w| w.to_string()).collect()
}

fn sentence<R: Rng>(fact: Fact, person: &str, rng: &mut R) -> Sentence {
    match fact {
        Fact::Lives => {
            let city = *CITIES.choose(rng).expect("non-empty");
            Sentence {
                tokens: vec![
                    tok(person, "NNP", "PERSON"),
                    tok("lives", "VBZ", "O"),
                    tok("in", "IN", "O"),
                    tok(city, "NNP", "LOC"),
                    tok(".", ".", "O"),
                ],
                arcs: vec![(1, 0, "nsubj"), (1, 2, "prep"), (2, 3, "pobj"), (1, 4, "punct")],
                questions: vec![
                    (0, words(&["who", "lives", "in", city, "?"])),
                    (3, words(&["where", "does", person, "live", "?"])),
                ],
            }
        }
        Fact::Works => {
            let company = *COMPANIES.choose(rng).expect("non-empty");
            Sentence {
                tokens: vec![
                    tok(person, "NNP", "PERSON"),
                    tok("works", "VBZ", "O"),
                    tok("at", "IN", "O"),
                    tok(company, "NNP", "ORG"),
                    tok(".", ".", "O"),
                ],
                arcs: vec![(1, 0, "nsubj"), (1, 2, "prep"), (2, 3, "pobj"), (1, 4, "punct")],
                questions: vec![
                    (0, words(&["who", "works", "at", company, "?"])),
                    (3, words(&["which", "company", "does", person, "work", "for", "?"])),
                ],
            }
        }
        Fact::Bought => {
            let number = *NUMBERS.choose(rng).expect("non-empty");
            let object = *OBJECTS.choose(rng).expect("non-empty");
            Sentence {
                tokens: vec![
                    tok(person, "NNP", "PERSON"),
                    tok("bought", "VBD", "O"),
                    tok(number, "CD", "NUMBER"),
                    tok(object, "NNS", "O"),
                    tok(".", ".", "O"),
                ],
                arcs: vec![(1, 0, "nsubj"), (1, 3, "dobj"), (3, 2, "nummod"), (1, 4, "punct")],
                questions: vec![
                    (0, words(&["who", "bought", object, "?"])),
                    (2, words(&["how", "many", object, "did", person, "buy", "?"])),
                    (3, words(&["what", "did", person, "buy", "?"])),
                ],
            }
        }
    }
}

/// A passage of two or three fact sentences about distinct people, asked
/// about `answers` times with distinct answers.
fn passage_examples<R: Rng>(id: usize, answers: usize, rng: &mut R) -> Vec<Example> {
    let n_sent = rng.gen_range(2..=3);
    let people: Vec<&str> = PEOPLE.choose_multiple(rng, n_sent).copied().collect();
    let mut facts = vec![Fact::Lives, Fact::Works, Fact::Bought];
    facts.shuffle(rng);
    let sentences: Vec<Sentence> = (0..n_sent).map(|i| sentence(facts[i], people[i], rng)).collect();

    let mut tokens = Vec::new();
    let mut edges = Vec::new();
    let mut starts = Vec::new();
    let mut candidates = Vec::new();
    for s in &sentences {
        let off = tokens.len();
        starts.push(off);
        tokens.extend(s.tokens.iter().cloned());
        edges.extend(s.arcs.iter().map(|&(h, d, l)| DepEdge(off + h, off + d, l.to_string())));
        candidates.extend(s.questions.iter().map(|(p, q)| (off + p, q.clone())));
    }
    candidates.shuffle(rng);
    candidates
        .into_iter()
        .take(answers)
        .enumerate()
        .map(|(k, (pos, question))| Example {
            id: format!("toy-{id}-{k}"),
            passage: tokens.clone(),
            sentence_starts: starts.clone(),
            answer_span: (pos, pos + 1),
            question,
            dependency_edges: Some(edges.clone()),
        })
        .collect()
}

/// `n` examples, two per passage (the last passage may contribute one).
pub fn toy_corpus(n: usize, seed: u64) -> Vec<Example> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    let mut id = 0;
    while out.len() < n {
        let take = (n - out.len()).min(2);
        out.extend(passage_examples(id, take, &mut rng));
        id += 1;
    }
    out
}

/// Training and validation corpora whose passages never coincide.
pub fn toy_split(train: usize, dev: usize, seed: u64) -> (Vec<Example>, Vec<Example>) {
    let all = toy_corpus(train + 2 * dev + 8, seed);
    let mut train_set: Vec<Example> = Vec::with_capacity(train);
    let mut dev_set = Vec::with_capacity(dev);
    for ex in all {
        if train_set.len() < train {
            train_set.push(ex);
        } else if dev_set.len() < dev && !train_set.iter().any(|t| t.passage == ex.passage) {
            dev_set.push(ex);
        }
    }
    for (i, ex) in dev_set.iter_mut().enumerate() {
        ex.id = format!("toy-dev-{i}");
    }
    (train_set, dev_set)
}

/// A single random sentence of `n` tokens with a random dependency tree, a
/// one-token answer and a question of `q` words, some copied from the
/// passage.
pub fn mini_example(n: usize, q: usize, seed: u64) -> Example {
    const POOL: &[&str] = &["the", "red", "Fox", "runs", "far", "7", "away", "Home", "now", "UP"];
    const TAGS: &[(&str, &str)] = &[("DT", "O"), ("JJ", "O"), ("NNP", "PERSON"), ("VBZ", "O"), ("CD", "NUMBER")];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let passage: Vec<TokenAnnotation> = (0..n)
        .map(|_| {
            let (pos, ner) = *TAGS.choose(&mut rng).expect("non-empty");
            tok(POOL.choose(&mut rng).expect("non-empty"), pos, ner)
        })
        .collect();
    let edges = (1..n)
        .map(|d| DepEdge(rng.gen_range(0..d), d, "dep".to_string()))
        .collect();
    let question = (0..q)
        .map(|_| {
            if rng.gen_bool(0.5) {
                passage[rng.gen_range(0..n)].surface.clone()
            } else {
                ["what", "who", "?"].choose(&mut rng).expect("non-empty").to_string()
            }
        })
        .collect();
    let a = rng.gen_range(0..n);
    Example {
        id: format!("mini-{seed}"),
        passage,
        sentence_starts: vec![0],
        answer_span: (a, a + 1),
        question,
        dependency_edges: Some(edges),
    }
}
