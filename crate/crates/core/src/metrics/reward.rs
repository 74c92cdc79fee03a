use crate::error::{Error, Result};
use crate::metrics::bleu::{bleu4, DEFAULT_EPSILON};
use crate::metrics::wmd::{wmd, VectorLookup};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RewardSpec {
    /// Weight of the semantic term.
    pub alpha: f64,
    /// BLEU zero-count substitute.
    pub epsilon: f64,
}

impl Default for RewardSpec {
    fn default() -> Self {
        RewardSpec {
            alpha: 0.1,
            epsilon: DEFAULT_EPSILON,
        }
    }
}

/// `−WMD / |hyp|`.
pub fn semantic_reward<L: VectorLookup, S: AsRef<str>>(hyp: &[S], reference: &[S], lookup: &L) -> Result<f64> {
    let d = wmd(hyp, reference, lookup)?;
    Ok(-d / hyp.len() as f64)
}

/// BLEU-4 on lowercased tokens plus `alpha` times the semantic reward. The
/// semantic term is 0 when WMD is undefined (e.g. an empty hypothesis).
pub fn reward<L: VectorLookup, S: AsRef<str>>(hyp: &[S], reference: &[S], spec: &RewardSpec, lookup: &L) -> Result<f64> {
    if spec.alpha < 0.0 {
        return Err(Error::InvalidArgument(format!("alpha {} is negative", spec.alpha)));
    }
    let lower = |t: &[S]| t.iter().map(|w| w.as_ref().to_lowercase()).collect::<Vec<_>>();
    let b = bleu4(&lower(hyp), &lower(reference), spec.epsilon)?;
    if spec.alpha == 0.0 {
        return Ok(b);
    }
    let sem = match semantic_reward(hyp, reference, lookup) {
        Ok(s) => s,
        Err(Error::InvalidArgument(_)) => 0.0,
        Err(e) => return Err(e),
    };
    Ok(b + spec.alpha * sem)
}
