use crate::error::{Error, Result};

/// Recall weight of the F-measure.
pub const ROUGE_BETA: f64 = 1.2;

pub fn lcs_len<S: AsRef<str>>(a: &[S], b: &[S]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x.as_ref() == y.as_ref() {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// LCS-based F-measure.
pub fn rouge_l<S: AsRef<str>>(hyp: &[S], reference: &[S]) -> Result<f64> {
    if hyp.is_empty() || reference.is_empty() {
        return Err(Error::InvalidArgument("ROUGE-L needs two non-empty sequences".into()));
    }
    let l = lcs_len(hyp, reference) as f64;
    if l == 0.0 {
        return Ok(0.0);
    }
    let p = l / hyp.len() as f64;
    let r = l / reference.len() as f64;
    let b2 = ROUGE_BETA * ROUGE_BETA;
    Ok((1.0 + b2) * p * r / (r + b2 * p))
}
