use std::collections::HashMap;

use g2sqg::metrics::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common;
use common::*;

#[test]
fn bleu_fixtures() {
    let r = toks("the cat sat on the mat");
    assert_eq!(bleu4(&r, &r, DEFAULT_EPSILON).unwrap(), 1.0);
    let h = toks("the cat sat on a mat");
    let got = bleu4(&h, &r, DEFAULT_EPSILON).unwrap();
    assert!((got - brute_bleu(&h, &r, DEFAULT_EPSILON)).abs() < 1e-9);
    let zero = bleu4(&toks("x y z w"), &r, DEFAULT_EPSILON).unwrap();
    assert!(zero < 1e-8);
    assert!(bleu4(&h, &[] as &[String], DEFAULT_EPSILON).is_err());
}

#[test]
fn bleu_matches_brute_force_on_random_pairs() {
    let mut r = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let sent = |r: &mut ChaCha8Rng| -> Vec<String> {
            let n = r.gen_range(1..12);
            (0..n).map(|_| format!("w{}", r.gen_range(0..5))).collect()
        };
        let h = sent(&mut r);
        let rf = sent(&mut r);
        let got = bleu4(&h, &rf, DEFAULT_EPSILON).unwrap();
        assert!((got - brute_bleu(&h, &rf, DEFAULT_EPSILON)).abs() < 1e-9);
        assert!((0.0..=1.0).contains(&got));
    }
}

#[test]
fn rouge_fixtures() {
    let a = toks("what is the capital");
    assert_eq!(rouge_l(&a, &a).unwrap(), 1.0);
    assert_eq!(rouge_l(&a, &toks("x y")).unwrap(), 0.0);
    assert!(rouge_l(&a, &[] as &[String]).is_err());
}

proptest! {
    #[test]
    fn lcs_matches_exhaustive(a in proptest::collection::vec(0u8..4, 1..=8), b in proptest::collection::vec(0u8..4, 1..=8)) {
        let a: Vec<String> = a.iter().map(|x| x.to_string()).collect();
        let b: Vec<String> = b.iter().map(|x| x.to_string()).collect();
        prop_assert_eq!(lcs_len(&a, &b), brute_lcs(&a, &b));
        let f = rouge_l(&a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&f));
        prop_assert_eq!(f == 1.0, a == b);
    }
}

fn lookup(r: &mut ChaCha8Rng, words: usize, dim: usize) -> HashMap<String, Vec<f64>> {
    (0..words).map(|i| (format!("w{i}"), (0..dim).map(|_| r.gen_range(-1.0..1.0)).collect())).collect()
}

#[test]
fn wmd_fixtures() {
    let mut r = ChaCha8Rng::seed_from_u64(2);
    let table = lookup(&mut r, 6, 3);
    let s = toks("w0 w1 w1 w2");
    assert!(wmd(&s, &s, &table).unwrap().abs() < 1e-12);
    let d = wmd(&toks("w0"), &toks("w3"), &table).unwrap();
    let e: f64 = table["w0"].iter().zip(&table["w3"]).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    assert!((d - e).abs() < 1e-12);
    assert!(wmd(&toks("zz"), &s, &table).is_err());
}

#[test]
fn wmd_matches_vertex_enumeration() {
    let mut r = ChaCha8Rng::seed_from_u64(3);
    let table = lookup(&mut r, 8, 4);
    let mut fixtures = vec![];
    for _ in 0..40 {
        let sent = |r: &mut ChaCha8Rng| -> Vec<String> {
            let distinct: Vec<usize> = (0..r.gen_range(1..=4)).map(|_| r.gen_range(0..8)).collect();
            let len = r.gen_range(1..7);
            (0..len).map(|_| format!("w{}", distinct[r.gen_range(0..distinct.len())])).collect()
        };
        let h = sent(&mut r);
        let rf = sent(&mut r);
        let expect = brute_wmd(&h, &rf, &table);
        let got = wmd(&h, &rf, &table).unwrap();
        assert!((got - expect).abs() < 1e-6, "{got} vs {expect}");
        assert!((wmd(&rf, &h, &table).unwrap() - got).abs() < 1e-9);
        assert!(got >= 0.0);
        fixtures.push(h);
    }
    for a in &fixtures[..10] {
        for b in &fixtures[..10] {
            for c in &fixtures[..10] {
                let ab = wmd(a, b, &table).unwrap();
                let bc = wmd(b, c, &table).unwrap();
                let ac = wmd(a, c, &table).unwrap();
                assert!(ac <= ab + bc + 1e-9);
            }
        }
    }
}

#[test]
fn semantic_reward_cases() {
    let mut r = ChaCha8Rng::seed_from_u64(4);
    let table = lookup(&mut r, 4, 3);
    let rf = toks("w0 w1");
    assert_eq!(semantic_reward(&rf, &rf, &table).unwrap(), 0.0);
    let one = semantic_reward(&toks("w2"), &rf, &table).unwrap();
    let two = semantic_reward(&toks("w2 w2"), &rf, &table).unwrap();
    assert!((two - one / 2.0).abs() < 1e-12);
    let d = wmd(&toks("w2 w3 w3"), &rf, &table).unwrap();
    assert!((semantic_reward(&toks("w2 w3 w3"), &rf, &table).unwrap() + d / 3.0).abs() < 1e-12);
}

#[test]
fn reward_cases() {
    let mut r = ChaCha8Rng::seed_from_u64(5);
    let table = lookup(&mut r, 6, 3);
    let rf = toks("w0 w1 w2 w3 w4");
    let spec = RewardSpec::default();
    assert_eq!(reward(&rf, &rf, &spec, &table).unwrap(), 1.0);
    let h = toks("w0 w1 w2 w5");
    let zero = RewardSpec { alpha: 0.0, ..spec };
    let b = bleu4(&h, &rf, DEFAULT_EPSILON).unwrap();
    assert_eq!(reward(&h, &rf, &zero, &table).unwrap(), b);
    let expect = b + 0.1 * semantic_reward(&h, &rf, &table).unwrap();
    assert!((reward(&h, &rf, &spec, &table).unwrap() - expect).abs() < 1e-12);
    // an empty hypothesis has no semantic term
    assert_eq!(reward(&[] as &[String], &rf, &spec, &table).unwrap(), 0.0);
}

#[test]
fn corpus_bleu_pools_counts() {
    let pairs = vec![(toks("a b c d"), toks("a b c d")), (toks("a b c d e"), toks("a b c d x"))];
    let want = (8.0 / 9.0 * 6.0 / 7.0 * 4.0 / 5.0 * 2.0 / 3.0f64).powf(0.25);
    assert!((corpus_bleu4(&pairs, 0.0).unwrap() - want).abs() < 1e-12);
    let none = vec![(toks("a b c"), toks("a b c"))];
    assert_eq!(corpus_bleu4(&none, 0.0).unwrap(), 0.0);
    assert!(corpus_bleu4(&none, DEFAULT_EPSILON).unwrap() > 0.0);
    let empty: Vec<(Vec<String>, Vec<String>)> = vec![];
    assert_eq!(corpus_bleu4(&empty, DEFAULT_EPSILON).unwrap(), 0.0);
}

#[test]
fn corpus_bleu_matches_brute_force() {
    let mut r = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..50 {
        let pairs: Vec<(Vec<String>, Vec<String>)> = (0..r.gen_range(1..6))
            .map(|_| {
                let sent = |r: &mut ChaCha8Rng| -> Vec<String> {
                    let n = r.gen_range(1..10);
                    (0..n).map(|_| format!("w{}", r.gen_range(0..4))).collect()
                };
                (sent(&mut r), sent(&mut r))
            })
            .collect();
        let got = corpus_bleu4(&pairs, DEFAULT_EPSILON).unwrap();
        assert!((got - brute_corpus_bleu(&pairs, DEFAULT_EPSILON)).abs() < 1e-9, "{pairs:?}");
    }
}
