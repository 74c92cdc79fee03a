//! Recurrent cells, affine maps and additive attention.

pub mod attention;
pub mod gru;
pub mod linear;
pub mod lstm;

pub use attention::{additive_attention, Attention};
pub use gru::GruCell;
pub use linear::Linear;
pub use lstm::{bilstm_encode, BiLstm, LstmCell};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{variational_dropout, Tape, Tensor, Var};
use crate::error::Result;
use crate::scalar::Scalar;

/// Glorot-uniform initial values for a `rows × cols` weight.
pub fn glorot<T: Scalar, R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Tensor<T> {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    Tensor::uniform(rows, cols, bound, rng)
}

/// Dropout settings for one forward pass.
pub struct Dropout<'a> {
    pub training: bool,
    /// Rate applied after embedding lookups.
    pub embedding: f64,
    /// Rate applied after recurrent layers.
    pub recurrent: f64,
    pub rng: Option<&'a mut ChaCha8Rng>,
}

impl<'a> Dropout<'a> {
    /// Evaluation mode: every call is the identity.
    pub fn off() -> Self {
        Dropout {
            training: false,
            embedding: 0.0,
            recurrent: 0.0,
            rng: None,
        }
    }

    pub fn train(embedding: f64, recurrent: f64, rng: &'a mut ChaCha8Rng) -> Self {
        Dropout {
            training: true,
            embedding,
            recurrent,
            rng: Some(rng),
        }
    }

    pub fn embedding<T: Scalar>(&mut self, tape: &mut Tape<T>, x: Var) -> Result<Var> {
        let rate = self.embedding;
        self.apply(tape, x, rate)
    }

    pub fn recurrent<T: Scalar>(&mut self, tape: &mut Tape<T>, x: Var) -> Result<Var> {
        let rate = self.recurrent;
        self.apply(tape, x, rate)
    }

    fn apply<T: Scalar>(&mut self, tape: &mut Tape<T>, x: Var, rate: f64) -> Result<Var> {
        match (&mut self.rng, self.training) {
            (Some(rng), true) => variational_dropout(tape, x, rate, true, *rng),
            _ => Ok(x),
        }
    }
}
