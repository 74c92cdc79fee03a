use rand::Rng;

use crate::autodiff::{ParamId, ParamStore, Tape, Var};
use crate::error::{Error, Result};
use crate::layers::{glorot, Linear};
use crate::scalar::Scalar;

/// Additive attention `e_i = vᵀ tanh(W_m m_i + W_s s + w_c cov_i + b)`.
#[derive(Clone, Debug)]
pub struct Attention {
    pub memory: ParamId,
    pub state: Linear,
    pub coverage: Option<ParamId>,
    pub v: ParamId,
}

impl Attention {
    pub fn new<T: Scalar, R: Rng>(
        store: &mut ParamStore<T>,
        name: &str,
        memory_dim: usize,
        state_dim: usize,
        attn_dim: usize,
        coverage: bool,
        rng: &mut R,
    ) -> Result<Self> {
        Ok(Attention {
            memory: store.add(format!("{name}.memory"), glorot(memory_dim, attn_dim, rng))?,
            state: Linear::new(store, &format!("{name}.state"), state_dim, attn_dim, true, rng)?,
            coverage: if coverage {
                Some(store.add(format!("{name}.coverage"), glorot(1, attn_dim, rng))?)
            } else {
                None
            },
            v: store.add(format!("{name}.v"), glorot(attn_dim, 1, rng))?,
        })
    }

    /// `memory · W_m`, reusable across decoding steps.
    pub fn project_memory<T: Scalar>(&self, tape: &mut Tape<T>, store: &ParamStore<T>, memory: Var) -> Result<Var> {
        let w = tape.param(store, self.memory);
        tape.matmul(memory, w)
    }

    /// Returns the 1×n weights and the 1×d context row.
    #[allow(clippy::too_many_arguments)]
    pub fn attend<T: Scalar>(
        &self,
        tape: &mut Tape<T>,
        store: &ParamStore<T>,
        state: Var,
        memory: Var,
        projected: Var,
        mask: Option<&[bool]>,
        coverage: Option<Var>,
    ) -> Result<(Var, Var)> {
        if let Some(m) = mask {
            if !m.iter().any(|&b| b) {
                return Err(Error::DegenerateSlice { slice: 0 });
            }
        }
        let s = self.state.forward(tape, store, state)?;
        let mut e = tape.add_row(projected, s)?;
        if let (Some(cov), Some(wc)) = (coverage, self.coverage) {
            let wc = tape.param(store, wc);
            let ct = tape.transpose(cov);
            let term = tape.matmul(ct, wc)?;
            e = tape.add(e, term)?;
        }
        let e = tape.tanh(e);
        let v = tape.param(store, self.v);
        let scores = tape.matmul(e, v)?;
        let scores = tape.transpose(scores);
        let weights = tape.softmax(scores, 1, mask)?;
        let context = tape.matmul(weights, memory)?;
        Ok((weights, context))
    }
}

/// One-shot attention of `state` over `memory` rows.
pub fn additive_attention<T: Scalar>(
    tape: &mut Tape<T>,
    store: &ParamStore<T>,
    attn: &Attention,
    state: Var,
    memory: Var,
    mask: Option<&[bool]>,
    coverage: Option<Var>,
) -> Result<(Var, Var)> {
    let projected = attn.project_memory(tape, store, memory)?;
    attn.attend(tape, store, state, memory, projected, mask, coverage)
}

