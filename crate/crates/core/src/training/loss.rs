use crate::autodiff::{Tape, Var};
use crate::decoder::StepOutput;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Floor applied to a gold probability before its log is taken.
pub const PROB_FLOOR: f64 = 1e-12;

/// `Σ_t −log P(y_t) + λ Σ_i min(a_i^t, cov_i^t)` over the decoded steps.
pub fn xent_coverage_loss<T: Scalar>(tape: &mut Tape<T>, steps: &[StepOutput], gold: &[usize], lambda: f64) -> Result<Var> {
    if steps.len() != gold.len() || steps.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "{} decoder steps for {} gold tokens",
            steps.len(),
            gold.len()
        )));
    }
    let mut terms = Vec::with_capacity(2 * steps.len());
    for (out, &y) in steps.iter().zip(gold) {
        let p = tape.pick(out.dist, 0, y)?;
        let lp = tape.log_floor(p, T::c(PROB_FLOOR));
        terms.push(tape.scale(lp, -T::one()));
        if lambda != 0.0 {
            let m = tape.min(out.attn, out.coverage)?;
            let s = tape.sum(m);
            terms.push(tape.scale(s, T::c(lambda)));
        }
    }
    sum_all(tape, &terms)
}

pub(crate) fn sum_all<T: Scalar>(tape: &mut Tape<T>, terms: &[Var]) -> Result<Var> {
    let mut acc = terms[0];
    for &t in &terms[1..] {
        acc = tape.add(acc, t)?;
    }
    Ok(acc)
}

/// `(r(Ŷ) − r(Yˢ)) · Σ_t log P(yˢ_t)`; the reward difference is a constant.
pub fn scst_loss<T: Scalar>(tape: &mut Tape<T>, sample_log_probs: &[Var], greedy_reward: f64, sample_reward: f64) -> Result<Var> {
    if sample_log_probs.is_empty() {
        return Err(Error::InvalidArgument("sampled sequence has no steps".into()));
    }
    let total = sum_all(tape, sample_log_probs)?;
    Ok(tape.scale(total, T::c(greedy_reward - sample_reward)))
}

/// `γ·L_rl + (1 − γ)·L_lm`.
pub fn mixed_loss<T: Scalar>(tape: &mut Tape<T>, rl: Var, lm: Var, gamma: f64) -> Result<Var> {
    check_gamma(gamma)?;
    let a = tape.scale(rl, T::c(gamma));
    let b = tape.scale(lm, T::c(1.0 - gamma));
    tape.add(a, b)
}

/// Scalar form of [`mixed_loss`].
pub fn mix(rl: f64, lm: f64, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    Ok(gamma * rl + (1.0 - gamma) * lm)
}

fn check_gamma(gamma: f64) -> Result<()> {
    if (0.0..=1.0).contains(&gamma) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("gamma {gamma} outside [0, 1]")))
    }
}
