use rand::Rng;

use crate::autodiff::{ParamId, ParamStore, Tape, Var};
use crate::error::Result;
use crate::layers::{glorot, Linear};
use crate::scalar::Scalar;

/// GRU cell: `h' = (1 − z)⊙h + z⊙h̃`.
///
/// Works on whole matrices, one row per independent state.
#[derive(Clone, Debug)]
pub struct GruCell {
    /// Input projection to `[z | r | h̃]` blocks.
    pub input: Linear,
    /// Hidden projection for the `z` and `r` gates.
    pub gates: ParamId,
    /// Hidden projection for the candidate, applied to `r⊙h`.
    pub candidate: ParamId,
    pub hidden: usize,
}

impl GruCell {
    pub fn new<T: Scalar, R: Rng>(store: &mut ParamStore<T>, name: &str, input: usize, hidden: usize, rng: &mut R) -> Result<Self> {
        Ok(GruCell {
            input: Linear::new(store, &format!("{name}.input"), input, 3 * hidden, true, rng)?,
            gates: store.add(format!("{name}.gates"), glorot(hidden, 2 * hidden, rng))?,
            candidate: store.add(format!("{name}.candidate"), glorot(hidden, hidden, rng))?,
            hidden,
        })
    }

    pub fn step<T: Scalar>(&self, tape: &mut Tape<T>, store: &ParamStore<T>, x: Var, h: Var) -> Result<Var> {
        let hd = self.hidden;
        let xp = self.input.forward(tape, store, x)?;
        let ug = tape.param(store, self.gates);
        let hg = tape.matmul(h, ug)?;
        let xzr = tape.slice_cols(xp, 0, 2 * hd)?;
        let zr = tape.add(xzr, hg)?;
        let zr = tape.sigmoid(zr);
        let z = tape.slice_cols(zr, 0, hd)?;
        let r = tape.slice_cols(zr, hd, 2 * hd)?;
        let rh = tape.mul(r, h)?;
        let uc = tape.param(store, self.candidate);
        let rhu = tape.matmul(rh, uc)?;
        let xc = tape.slice_cols(xp, 2 * hd, 3 * hd)?;
        let cand = tape.add(xc, rhu)?;
        let cand = tape.tanh(cand);
        let keep = tape.one_minus(z);
        let a = tape.mul(keep, h)?;
        let b = tape.mul(z, cand)?;
        tape.add(a, b)
    }
}
