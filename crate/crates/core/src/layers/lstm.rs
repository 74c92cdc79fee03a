use rand::Rng;

use crate::autodiff::{ParamId, ParamStore, Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::layers::{glorot, Linear};
use crate::scalar::Scalar;

/// LSTM cell with gate blocks ordered input, forget, candidate, output.
#[derive(Clone, Debug)]
pub struct LstmCell {
    pub input: Linear,
    pub recurrent: ParamId,
    pub hidden: usize,
}

impl LstmCell {
    pub fn new<T: Scalar, R: Rng>(store: &mut ParamStore<T>, name: &str, input: usize, hidden: usize, rng: &mut R) -> Result<Self> {
        let lin = Linear::new(store, &format!("{name}.input"), input, 4 * hidden, true, rng)?;
        let recurrent = store.add(format!("{name}.recurrent"), glorot(hidden, 4 * hidden, rng))?;
        if let Some(b) = lin.bias {
            let bias = &mut store.get_mut(b).value;
            for j in hidden..2 * hidden {
                bias.set(0, j, T::one());
            }
        }
        Ok(LstmCell {
            input: lin,
            recurrent,
            hidden,
        })
    }

    /// One step from a precomputed input projection `x·W + b` (1 × 4h).
    pub fn step_projected<T: Scalar>(
        &self,
        tape: &mut Tape<T>,
        store: &ParamStore<T>,
        xp: Var,
        h: Var,
        c: Var,
    ) -> Result<(Var, Var)> {
        let hd = self.hidden;
        let u = tape.param(store, self.recurrent);
        let hu = tape.matmul(h, u)?;
        let gates = tape.add(xp, hu)?;
        let i = tape.slice_cols(gates, 0, hd)?;
        let f = tape.slice_cols(gates, hd, 2 * hd)?;
        let g = tape.slice_cols(gates, 2 * hd, 3 * hd)?;
        let o = tape.slice_cols(gates, 3 * hd, 4 * hd)?;
        let (i, f, g, o) = (tape.sigmoid(i), tape.sigmoid(f), tape.tanh(g), tape.sigmoid(o));
        let fc = tape.mul(f, c)?;
        let ig = tape.mul(i, g)?;
        let c2 = tape.add(fc, ig)?;
        let tc = tape.tanh(c2);
        let h2 = tape.mul(o, tc)?;
        Ok((h2, c2))
    }

    /// `(h', c')` for input row `x` and state `(h, c)`.
    pub fn step<T: Scalar>(&self, tape: &mut Tape<T>, store: &ParamStore<T>, x: Var, h: Var, c: Var) -> Result<(Var, Var)> {
        let xp = self.input.forward(tape, store, x)?;
        self.step_projected(tape, store, xp, h, c)
    }

    /// Runs over the rows of `x` (optionally right to left) from a zero
    /// state; row `t` of the result is the state after consuming row `t`.
    pub fn run<T: Scalar>(&self, tape: &mut Tape<T>, store: &ParamStore<T>, x: Var, reverse: bool) -> Result<Var> {
        let n = tape.value(x).rows();
        let xp = self.input.forward(tape, store, x)?;
        let mut h = tape.constant(Tensor::zeros(1, self.hidden));
        let mut c = h;
        let mut out = vec![h; n];
        let order: Vec<usize> = if reverse { (0..n).rev().collect() } else { (0..n).collect() };
        for t in order {
            let row = tape.row(xp, t)?;
            (h, c) = self.step_projected(tape, store, row, h, c)?;
            out[t] = h;
        }
        tape.vcat(&out)
    }
}

/// Forward and backward LSTMs whose states are concatenated per position.
#[derive(Clone, Debug)]
pub struct BiLstm {
    pub forward: LstmCell,
    pub backward: LstmCell,
}

impl BiLstm {
    /// `output` is the concatenated width; each direction gets half.
    pub fn new<T: Scalar, R: Rng>(store: &mut ParamStore<T>, name: &str, input: usize, output: usize, rng: &mut R) -> Result<Self> {
        if output % 2 != 0 {
            return Err(Error::InvalidArgument(format!("BiLSTM output width {output} is odd")));
        }
        Ok(BiLstm {
            forward: LstmCell::new(store, &format!("{name}.fwd"), input, output / 2, rng)?,
            backward: LstmCell::new(store, &format!("{name}.bwd"), input, output / 2, rng)?,
        })
    }

    pub fn output_dim(&self) -> usize {
        self.forward.hidden + self.backward.hidden
    }

    pub fn encode<T: Scalar>(&self, tape: &mut Tape<T>, store: &ParamStore<T>, x: Var, len: usize) -> Result<Var> {
        bilstm_encode(tape, store, &self.forward, &self.backward, x, len)
    }
}

/// Encodes the first `len` rows of `x`; rows from `len` on are zero.
pub fn bilstm_encode<T: Scalar>(
    tape: &mut Tape<T>,
    store: &ParamStore<T>,
    fwd: &LstmCell,
    bwd: &LstmCell,
    x: Var,
    len: usize,
) -> Result<Var> {
    let n = tape.value(x).rows();
    if len == 0 {
        return Err(Error::InvalidArgument("cannot encode a zero-length sequence".into()));
    }
    if len > n {
        return Err(Error::InvalidArgument(format!("length {len} exceeds {n} rows")));
    }
    let xs = if len < n { tape.slice_rows(x, 0, len)? } else { x };
    let f = fwd.run(tape, store, xs, false)?;
    let b = bwd.run(tape, store, xs, true)?;
    let both = tape.hcat(&[f, b])?;
    if len == n {
        return Ok(both);
    }
    let pad = tape.constant(Tensor::zeros(n - len, fwd.hidden + bwd.hidden));
    tape.vcat(&[both, pad])
}
