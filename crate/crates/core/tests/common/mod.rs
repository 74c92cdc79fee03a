#![allow(dead_code)]
//! Independent oracles and miniature models shared by the integration tests
//! and the acceptance harness.

use std::collections::HashMap;

use g2sqg::autodiff::{ParamStore, Tape, Var};
use g2sqg::config::Config;
use g2sqg::data::{encode_batch, EmbeddingTable, Example, Lexicon, EOS, SOS};
use g2sqg::decoder::StepModel;
use g2sqg::error::Result;
use g2sqg::graph::GraphMode;
use g2sqg::layers::Dropout;
use g2sqg::toy::mini_example;
use g2sqg::training::xent_coverage_loss;
use g2sqg::Graph2Seq;

pub fn toks(s: &str) -> Vec<String> {
    s.split_whitespace().map(String::from).collect()
}

/// Second BLEU implementation: explicit position loops for counting.
pub fn brute_bleu(h: &[String], r: &[String], eps: f64) -> f64 {
    if h.is_empty() {
        return 0.0;
    }
    let mut logs = 0.0;
    for n in 1..=4usize {
        let grams = |s: &[String]| -> Vec<Vec<String>> {
            if s.len() < n { vec![] } else { (0..=s.len() - n).map(|i| s[i..i + n].to_vec()).collect() }
        };
        let hg = grams(h);
        let rg = grams(r);
        let mut seen: Vec<Vec<String>> = vec![];
        let mut matched = 0usize;
        for g in &hg {
            if seen.contains(g) {
                continue;
            }
            seen.push(g.clone());
            let ch = hg.iter().filter(|x| *x == g).count();
            let cr = rg.iter().filter(|x| *x == g).count();
            matched += ch.min(cr);
        }
        let denom = std::cmp::max(1, hg.len()) as f64;
        let p = if matched == 0 { eps / denom } else { matched as f64 / denom };
        logs += 0.25 * p.ln();
    }
    let bp = if h.len() > r.len() { 1.0 } else { (1.0 - r.len() as f64 / h.len() as f64).exp() };
    bp * logs.exp()
}

/// Corpus BLEU by pooling counts from explicit position loops.
pub fn brute_corpus_bleu(pairs: &[(Vec<String>, Vec<String>)], eps: f64) -> f64 {
    let (mut c, mut rl) = (0usize, 0usize);
    let mut logs = 0.0;
    for n in 1..=4usize {
        let (mut matched, mut denom) = (0usize, 0usize);
        for (h, r) in pairs {
            let grams = |s: &[String]| -> Vec<Vec<String>> {
                if s.len() < n { vec![] } else { (0..=s.len() - n).map(|i| s[i..i + n].to_vec()).collect() }
            };
            let (hg, rg) = (grams(h), grams(r));
            let mut used = vec![false; rg.len()];
            for g in &hg {
                if let Some(j) = (0..rg.len()).find(|&j| !used[j] && rg[j] == *g) {
                    used[j] = true;
                    matched += 1;
                }
            }
            denom += hg.len();
            if n == 1 {
                c += h.len();
                rl += r.len();
            }
        }
        let num = if matched == 0 { eps } else { matched as f64 };
        logs += 0.25 * (num / denom.max(1) as f64).ln();
    }
    if c == 0 {
        return 0.0;
    }
    let bp = if c > rl { 1.0 } else { (1.0 - rl as f64 / c as f64).exp() };
    bp * logs.exp()
}

pub fn is_subsequence(sub: &[&String], of: &[String]) -> bool {
    let mut it = of.iter();
    sub.iter().all(|s| it.any(|x| x == *s))
}

pub fn brute_lcs(a: &[String], b: &[String]) -> usize {
    let mut best = 0;
    for mask in 0u32..(1 << a.len()) {
        let sub: Vec<&String> = (0..a.len()).filter(|i| mask & (1 << i) != 0).map(|i| &a[i]).collect();
        if sub.len() > best && is_subsequence(&sub, b) {
            best = sub.len();
        }
    }
    best
}

/// Minimum over all basic solutions of the transport polytope. A basis is
/// a spanning tree of the m×n bipartite graph; its flow is found by
/// repeatedly settling a leaf.
pub fn brute_transport(a: &[f64], b: &[f64], cost: &[Vec<f64>]) -> f64 {
    let (m, n) = (a.len(), b.len());
    let cells: Vec<(usize, usize)> = (0..m).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    let k = m + n - 1;
    let mut best = f64::INFINITY;
    let mut choose = vec![0usize; k];
    fn next(c: &mut [usize], total: usize) -> bool {
        let k = c.len();
        for i in (0..k).rev() {
            if c[i] < total - k + i {
                c[i] += 1;
                for j in i + 1..k {
                    c[j] = c[j - 1] + 1;
                }
                return true;
            }
        }
        false
    }
    for (i, c) in choose.iter_mut().enumerate() {
        *c = i;
    }
    loop {
        let tree: Vec<(usize, usize)> = choose.iter().map(|&c| cells[c]).collect();
        let mut sup = a.to_vec();
        let mut dem = b.to_vec();
        let mut left = tree.clone();
        let mut flow = 0.0;
        let mut ok = true;
        while !left.is_empty() {
            let deg = |node: usize, left: &[(usize, usize)]| {
                left.iter().filter(|&&(i, j)| if node < m { i == node } else { j == node - m }).count()
            };
            let leaf = (0..m + n).find(|&v| deg(v, &left) == 1);
            let Some(v) = leaf else {
                ok = false;
                break;
            };
            let pos = left.iter().position(|&(i, j)| if v < m { i == v } else { j == v - m }).unwrap();
            let (i, j) = left.remove(pos);
            let x = if v < m { sup[i] } else { dem[j] };
            sup[i] -= x;
            dem[j] -= x;
            if x < -1e-12 {
                ok = false;
                break;
            }
            flow += x * cost[i][j];
        }
        if ok && sup.iter().chain(&dem).all(|r| r.abs() < 1e-9) {
            best = best.min(flow);
        }
        if !next(&mut choose, cells.len()) {
            break;
        }
    }
    best
}

/// WMD rebuilt from scratch: normalized bags of words, Euclidean costs and
/// the transport minimum by vertex enumeration.
pub fn brute_wmd(h: &[String], r: &[String], table: &HashMap<String, Vec<f64>>) -> f64 {
    let bag = |s: &[String]| -> (Vec<String>, Vec<f64>) {
        let mut words: Vec<String> = vec![];
        for w in s {
            if !words.contains(w) {
                words.push(w.clone());
            }
        }
        let mass = words.iter().map(|w| s.iter().filter(|x| *x == w).count() as f64 / s.len() as f64).collect();
        (words, mass)
    };
    let (wh, mh) = bag(h);
    let (wr, mr) = bag(r);
    let cost: Vec<Vec<f64>> = wh
        .iter()
        .map(|x| wr.iter().map(|y| table[x].iter().zip(&table[y]).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()).collect())
        .collect();
    brute_transport(&mh, &mr, &cost)
}

/// Next-token table keyed by the prefix.
pub struct Table {
    pub f: fn(&[usize]) -> Vec<f64>,
}

impl StepModel for Table {
    type State = Vec<usize>;

    fn start(&mut self) -> Vec<usize> {
        vec![]
    }

    fn step(&mut self, state: &Vec<usize>, prev: usize) -> Result<(Vec<f64>, Vec<usize>)> {
        let mut next = state.clone();
        if prev != SOS {
            next.push(prev);
        }
        Ok(((self.f)(&next), next))
    }
}

/// Best finished sequence of at most `max_len` tokens, by total log-prob.
pub fn exhaustive(f: fn(&[usize]) -> Vec<f64>, max_len: usize) -> (Vec<usize>, f64) {
    let mut best = (vec![], f64::NEG_INFINITY);
    let mut stack = vec![(vec![], 0.0)];
    while let Some((prefix, lp)) = stack.pop() {
        let p = f(&prefix);
        for (tok, &pt) in p.iter().enumerate() {
            if pt <= 0.0 {
                continue;
            }
            let l = lp + pt.ln();
            if tok == EOS {
                if l > best.1 {
                    let mut full: Vec<usize> = prefix.clone();
                    full.push(EOS);
                    best = (full, l);
                }
            } else if prefix.len() + 1 < max_len {
                let mut next = prefix.clone();
                next.push(tok);
                stack.push((next, l));
            }
        }
    }
    best
}

pub fn mini_config(seed: u64) -> Config {
    let mut cfg = Config::default();
    for (k, v) in [
        ("word_dim", "8"),
        ("case_dim", "2"),
        ("pos_dim", "3"),
        ("ner_dim", "2"),
        ("hidden_size", "8"),
        ("align_dim", "6"),
        ("graph_learner_dim", "6"),
        ("graph_dim", "6"),
        ("decoder_hidden", "8"),
        ("attn_dim", "5"),
        ("graph_k", "3"),
        ("gnn_hops", "2"),
    ] {
        cfg.set(k, v).unwrap();
    }
    cfg.seed = seed;
    cfg.graph_mode = if seed % 2 == 0 { GraphMode::Dynamic } else { GraphMode::Static };
    cfg.use_dan = seed % 3 != 2;
    cfg
}

pub fn mini_model(seed: u64) -> (Graph2Seq<f64>, Example) {
    let ex = mini_example(3 + (seed % 3) as usize, 1 + (seed % 2) as usize, seed);
    let cfg = mini_config(seed);
    let lex = Lexicon::build(std::slice::from_ref(&ex), cfg.vocab_cap).unwrap();
    let words = EmbeddingTable::random(&lex.words, cfg.word_dim, seed + 1);
    (Graph2Seq::new(cfg, lex, words, None).unwrap(), ex)
}

pub fn full_loss(model: &Graph2Seq<f64>, ex: &Example, store: &ParamStore<f64>) -> Result<(Tape<f64>, Var)> {
    let mut m = model.clone();
    m.store = store.clone();
    let batch = encode_batch(std::slice::from_ref(ex), &m.lexicon)?;
    let enc = &batch.examples[0];
    let mut tape = Tape::new();
    let encoded = m.encode(&mut tape, ex, enc, batch.extended_size(), &mut Dropout::off())?;
    let steps = m.teacher_forced(&mut tape, &encoded, &enc.target, || true)?;
    let loss = xent_coverage_loss(&mut tape, &steps, &enc.target, m.cfg.coverage_lambda)?;
    Ok((tape, loss))
}
