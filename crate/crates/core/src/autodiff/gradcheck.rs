//! Central finite-difference gradient checking.
//!
//! Only forward evaluations are used to build the numerical estimate, so the
//! check is independent of every backward rule it validates.

use crate::autodiff::params::ParamStore;
use crate::autodiff::tape::{Tape, Var};
use crate::autodiff::tensor::Tensor;
use crate::error::Result;

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    /// Worst relative error over the checked tensors.
    pub max_rel_error: f64,
    /// Name of the tensor achieving `max_rel_error`.
    pub worst: String,
    pub checked_entries: usize,
}

/// Relative error between two gradient vectors, in norm.
pub fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let diff: f64 = analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n) * (a - n))
        .sum::<f64>()
        .sqrt();
    let na = analytic.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nn = numeric.iter().map(|a| a * a).sum::<f64>().sqrt();
    let scale = na.max(nn);
    if scale < 1e-7 {
        // both gradients vanish; compare absolutely
        diff
    } else {
        diff / scale
    }
}

fn entries(len: usize, limit: Option<usize>) -> Vec<usize> {
    match limit {
        Some(k) if k < len => {
            let stride = len as f64 / k as f64;
            (0..k).map(|i| (i as f64 * stride) as usize).collect()
        }
        _ => (0..len).collect(),
    }
}

/// Compares backward-mode parameter gradients with central differences.
///
/// `loss` builds a fresh tape from the store and returns the scalar loss.
/// `max_per_param` caps how many entries of each tensor are perturbed.
pub fn check_params<F>(
    store: &mut ParamStore<f64>,
    loss: F,
    eps: f64,
    max_per_param: Option<usize>,
) -> Result<GradCheckReport>
where
    F: Fn(&ParamStore<f64>) -> Result<(Tape<f64>, Var)>,
{
    store.zero_grad();
    let (tape, l) = loss(store)?;
    let grads = tape.backward(l)?;
    store.accumulate(&grads);

    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: String::new(),
        checked_entries: 0,
    };
    let ids: Vec<_> = store.iter().map(|(id, _)| id).collect();
    for id in ids {
        let idx = entries(store.get(id).value.len(), max_per_param);
        let mut analytic = Vec::with_capacity(idx.len());
        let mut numeric = Vec::with_capacity(idx.len());
        for &k in &idx {
            analytic.push(store.get(id).grad.data()[k]);
            let orig = store.get(id).value.data()[k];
            store.get_mut(id).value.data_mut()[k] = orig + eps;
            let (t, l) = loss(store)?;
            let plus = t.value(l).item();
            store.get_mut(id).value.data_mut()[k] = orig - eps;
            let (t, l) = loss(store)?;
            let minus = t.value(l).item();
            store.get_mut(id).value.data_mut()[k] = orig;
            numeric.push((plus - minus) / (2.0 * eps));
        }
        report.checked_entries += idx.len();
        let e = relative_error(&analytic, &numeric);
        if report.worst.is_empty() || e > report.max_rel_error {
            report.max_rel_error = e;
            report.worst = store.get(id).name.clone();
        }
    }
    Ok(report)
}

/// Finite-difference check of `d f(x) / d x` for a function of one input.
pub fn check_input<F>(x: &Tensor<f64>, f: F, eps: f64) -> Result<f64>
where
    F: Fn(&mut Tape<f64>, Var) -> Result<Var>,
{
    let mut tape = Tape::new();
    let xv = tape.variable(x.clone());
    let out = f(&mut tape, xv)?;
    let grads = tape.backward(out)?;
    let analytic = grads.get(xv).into_data();

    let eval = |xs: &Tensor<f64>| -> Result<f64> {
        let mut t = Tape::new();
        let v = t.variable(xs.clone());
        let o = f(&mut t, v)?;
        Ok(t.value(o).item())
    };
    let mut numeric = Vec::with_capacity(x.len());
    for k in 0..x.len() {
        let mut xp = x.clone();
        xp.data_mut()[k] += eps;
        let mut xm = x.clone();
        xm.data_mut()[k] -= eps;
        numeric.push((eval(&xp)? - eval(&xm)?) / (2.0 * eps));
    }
    Ok(relative_error(&analytic, &numeric))
}
