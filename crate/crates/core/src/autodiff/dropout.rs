use rand::Rng;

use crate::autodiff::tape::{Tape, Var};
use crate::autodiff::tensor::Tensor;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Variational dropout over a sequence matrix (rows = time steps).
///
/// One Bernoulli mask over the feature columns is drawn per call and shared
/// by every row, so all time steps of the sequence lose the same units.
/// Survivors are scaled by `1/(1 − rate)`. Outside training this is the
/// identity.
pub fn variational_dropout<T: Scalar, R: Rng>(
    tape: &mut Tape<T>,
    x: Var,
    rate: f64,
    training: bool,
    rng: &mut R,
) -> Result<Var> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::InvalidArgument(format!("dropout rate {rate} not in [0, 1)")));
    }
    if !training || rate == 0.0 {
        return Ok(x);
    }
    let cols = tape.value(x).cols();
    let keep = T::c(1.0 / (1.0 - rate));
    let mask: Vec<T> = (0..cols)
        .map(|_| if rng.gen::<f64>() < rate { T::zero() } else { keep })
        .collect();
    tape.mul_const(x, Tensor::row(&mask))
}
