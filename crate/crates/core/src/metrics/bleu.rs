use std::collections::HashMap;

use crate::error::{Error, Result};

/// Stand-in for a zero n-gram match count.
pub const DEFAULT_EPSILON: f64 = 1e-9;

fn ngram_counts<S: AsRef<str>>(tokens: &[S], n: usize) -> HashMap<Vec<&str>, usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w.iter().map(AsRef::as_ref).collect()).or_insert(0) += 1;
        }
    }
    counts
}

/// Sentence BLEU-4 with uniform weights. A zero clipped match count is
/// replaced by `epsilon`; an empty hypothesis scores 0.
pub fn bleu4<S: AsRef<str>>(hyp: &[S], reference: &[S], epsilon: f64) -> Result<f64> {
    if reference.is_empty() {
        return Err(Error::InvalidArgument("BLEU needs a non-empty reference".into()));
    }
    if hyp.is_empty() {
        return Ok(0.0);
    }
    let mut log_sum = 0.0;
    for n in 1..=4 {
        let h = ngram_counts(hyp, n);
        let r = ngram_counts(reference, n);
        let matched: usize = h.iter().map(|(g, &c)| c.min(r.get(g).copied().unwrap_or(0))).sum();
        let total = (hyp.len() + 1).saturating_sub(n).max(1);
        let num = if matched == 0 { epsilon } else { matched as f64 };
        log_sum += (num / total as f64).ln();
    }
    let (c, r) = (hyp.len() as f64, reference.len() as f64);
    let bp = if c > r { 1.0 } else { (1.0 - r / c).exp() };
    Ok(bp * (log_sum / 4.0).exp())
}

/// Mean sentence BLEU-4 over aligned hypothesis/reference lists.
pub fn corpus_mean_bleu4<S: AsRef<str>>(pairs: &[(Vec<S>, Vec<S>)], epsilon: f64) -> Result<f64> {
    if pairs.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for (h, r) in pairs {
        total += bleu4(h, r, epsilon)?;
    }
    Ok(total / pairs.len() as f64)
}

/// Corpus BLEU-4: clipped n-gram matches and hypothesis lengths are summed
/// over all pairs before the precisions and the brevity penalty are taken.
/// A zero total match count is replaced by `epsilon`.
pub fn corpus_bleu4<S: AsRef<str>>(pairs: &[(Vec<S>, Vec<S>)], epsilon: f64) -> Result<f64> {
    let mut matched = [0usize; 4];
    let mut total = [0usize; 4];
    let (mut c, mut r) = (0usize, 0usize);
    for (hyp, reference) in pairs {
        if reference.is_empty() {
            return Err(Error::InvalidArgument("BLEU needs a non-empty reference".into()));
        }
        c += hyp.len();
        r += reference.len();
        for n in 1..=4 {
            let h = ngram_counts(hyp, n);
            let rc = ngram_counts(reference, n);
            matched[n - 1] += h.iter().map(|(g, &k)| k.min(rc.get(g).copied().unwrap_or(0))).sum::<usize>();
            total[n - 1] += (hyp.len() + 1).saturating_sub(n);
        }
    }
    if c == 0 || (epsilon == 0.0 && matched.contains(&0)) {
        return Ok(0.0);
    }
    let log_sum: f64 = (0..4)
        .map(|i| {
            let num = if matched[i] == 0 { epsilon } else { matched[i] as f64 };
            (num / total[i].max(1) as f64).ln()
        })
        .sum();
    let bp = if c > r { 1.0 } else { (1.0 - r as f64 / c as f64).exp() };
    Ok(bp * (log_sum / 4.0).exp())
}
