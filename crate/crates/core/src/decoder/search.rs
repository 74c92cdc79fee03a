//! Greedy, sampling and beam decoding over any step-wise model.

use rand::Rng;

use crate::data::{EOS, SOS};
use crate::error::{Error, Result};

/// A model that maps a state and the previous token to a distribution over
/// the next token.
pub trait StepModel {
    type State: Clone;

    fn start(&mut self) -> Self::State;

    fn step(&mut self, state: &Self::State, prev: usize) -> Result<(Vec<f64>, Self::State)>;
}

fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in p.iter().enumerate() {
        if x > p[best] {
            best = i;
        }
    }
    best
}

/// Inverse-CDF draw from `probs`.
pub fn sample_index<R: Rng>(probs: &[f64], rng: &mut R) -> usize {
    let total: f64 = probs.iter().sum();
    let u = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}

/// Argmax decoding; the returned tokens exclude the final `EOS`.
pub fn greedy_decode<M: StepModel>(model: &mut M, max_len: usize) -> Result<Vec<usize>> {
    if max_len == 0 {
        return Err(Error::InvalidArgument("max_len must be at least 1".into()));
    }
    let mut state = model.start();
    let mut prev = SOS;
    let mut out = Vec::new();
    for _ in 0..max_len {
        let (p, next) = model.step(&state, prev)?;
        let tok = argmax(&p);
        if tok == EOS {
            break;
        }
        out.push(tok);
        state = next;
        prev = tok;
    }
    Ok(out)
}

/// Multinomial decoding. Returns the tokens (without `EOS`) and the
/// log-probability of every drawn token, `EOS` included.
pub fn sample_decode<M: StepModel, R: Rng>(model: &mut M, max_len: usize, rng: &mut R) -> Result<(Vec<usize>, Vec<f64>)> {
    if max_len == 0 {
        return Err(Error::InvalidArgument("max_len must be at least 1".into()));
    }
    let mut state = model.start();
    let mut prev = SOS;
    let mut out = Vec::new();
    let mut logp = Vec::new();
    for _ in 0..max_len {
        let (p, next) = model.step(&state, prev)?;
        let tok = sample_index(&p, rng);
        logp.push(p[tok].ln());
        if tok == EOS {
            break;
        }
        out.push(tok);
        state = next;
        prev = tok;
    }
    Ok((out, logp))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BeamConfig {
    pub width: usize,
    pub max_len: usize,
    /// Rank by log-probability divided by token count.
    pub normalize: bool,
}

#[derive(Clone, Debug)]
pub struct Hypothesis<S> {
    /// Generated tokens, including `EOS` when finished.
    pub tokens: Vec<usize>,
    pub log_prob: f64,
    pub state: S,
    pub finished: bool,
}

impl<S> Hypothesis<S> {
    pub fn score(&self, normalize: bool) -> f64 {
        if normalize && !self.tokens.is_empty() {
            self.log_prob / self.tokens.len() as f64
        } else {
            self.log_prob
        }
    }

    /// Tokens without the terminating `EOS`.
    pub fn question(&self) -> &[usize] {
        match self.tokens.last() {
            Some(&EOS) => &self.tokens[..self.tokens.len() - 1],
            _ => &self.tokens,
        }
    }
}

/// Beam search. Finished hypotheses leave the beam; the best finished one
/// wins, or the best partial one if none finished within `max_len`.
pub fn beam_search<M: StepModel>(model: &mut M, cfg: BeamConfig) -> Result<Hypothesis<M::State>> {
    if cfg.width == 0 || cfg.max_len == 0 {
        return Err(Error::InvalidArgument("beam width and max_len must be at least 1".into()));
    }
    let mut live = vec![Hypothesis {
        tokens: Vec::new(),
        log_prob: 0.0,
        state: model.start(),
        finished: false,
    }];
    let mut finished: Vec<Hypothesis<M::State>> = Vec::new();
    for _ in 0..cfg.max_len {
        let mut cands: Vec<(f64, usize, usize, f64)> = Vec::new(); // (score, hyp, token, logp)
        let mut next_states = Vec::with_capacity(live.len());
        for (h, hyp) in live.iter().enumerate() {
            let prev = hyp.tokens.last().copied().unwrap_or(SOS);
            let (p, next) = model.step(&hyp.state, prev)?;
            next_states.push(next);
            let mut order: Vec<usize> = (0..p.len()).filter(|&i| p[i] > 0.0).collect();
            order.sort_by(|&a, &b| p[b].partial_cmp(&p[a]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
            for &tok in order.iter().take(cfg.width) {
                let lp = hyp.log_prob + p[tok].ln();
                let len = hyp.tokens.len() + 1;
                let score = if cfg.normalize { lp / len as f64 } else { lp };
                cands.push((score, h, tok, lp));
            }
        }
        cands.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));
        let mut new_live = Vec::new();
        for &(_, h, tok, lp) in cands.iter().take(cfg.width) {
            let mut tokens = live[h].tokens.clone();
            tokens.push(tok);
            let hyp = Hypothesis {
                tokens,
                log_prob: lp,
                state: next_states[h].clone(),
                finished: tok == EOS,
            };
            if hyp.finished {
                finished.push(hyp);
            } else {
                new_live.push(hyp);
            }
        }
        live = new_live;
        if live.is_empty() {
            break;
        }
    }
    let pool = if finished.is_empty() { live } else { finished };
    let mut best: Option<Hypothesis<M::State>> = None;
    for h in pool {
        if best.as_ref().map_or(true, |b| h.score(cfg.normalize) > b.score(cfg.normalize)) {
            best = Some(h);
        }
    }
    best.ok_or_else(|| Error::InvalidArgument("beam search produced no hypothesis".into()))
}
