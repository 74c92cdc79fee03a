//! Attention LSTM decoder with copy and coverage.

pub mod search;

pub use search::{beam_search, greedy_decode, sample_decode, sample_index, BeamConfig, Hypothesis, StepModel};

use rand::Rng;

use crate::autodiff::{ParamStore, Tape, Tensor, Var};
use crate::data::{EmbeddingTable, UNK};
use crate::error::{Error, Result};
use crate::layers::{Attention, Linear, LstmCell};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct DecoderConfig {
    pub hidden: usize,
    /// Width of the node states attended over.
    pub memory_dim: usize,
    pub graph_dim: usize,
    pub embed_dim: usize,
    /// Base vocabulary size.
    pub vocab: usize,
    pub attn_dim: usize,
}

/// Recurrent state between decoding steps.
#[derive(Clone, Copy, Debug)]
pub struct DecoderState {
    pub s: Var,
    pub c: Var,
    /// Attention context of the previous step (fed back as input).
    pub context: Var,
    /// Sum of all previous attention distributions, 1 × N.
    pub coverage: Var,
    pub t: usize,
}

/// Encoder outputs prepared for attention.
#[derive(Clone, Debug)]
pub struct Memory {
    pub nodes: Var,
    pub projected: Var,
    /// Extended index of every source position.
    pub source_ext: Vec<usize>,
    pub ext_size: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct StepOutput {
    /// 1 × ext_size distribution over the extended vocabulary.
    pub dist: Var,
    pub attn: Var,
    pub p_gen: Var,
    /// Coverage before this step's attention was added.
    pub coverage: Var,
    pub state: DecoderState,
}

/// Overrides used to probe the copy switch.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepOptions {
    pub force_p_gen: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct Decoder {
    pub cfg: DecoderConfig,
    pub init_s: Linear,
    pub init_c: Linear,
    pub cell: LstmCell,
    pub attention: Attention,
    pub hidden_out: Linear,
    pub vocab_out: Linear,
    pub p_gen: Linear,
}

impl Decoder {
    pub fn new<T: Scalar, R: Rng>(store: &mut ParamStore<T>, cfg: DecoderConfig, rng: &mut R) -> Result<Self> {
        let h = cfg.hidden;
        let m = cfg.memory_dim;
        Ok(Decoder {
            init_s: Linear::new(store, "dec.init_s", cfg.graph_dim, h, true, rng)?,
            init_c: Linear::new(store, "dec.init_c", cfg.graph_dim, h, true, rng)?,
            cell: LstmCell::new(store, "dec.cell", cfg.embed_dim + m, h, rng)?,
            attention: Attention::new(store, "dec.attn", m, h, cfg.attn_dim, true, rng)?,
            hidden_out: Linear::new(store, "dec.hidden_out", h + m, h, true, rng)?,
            vocab_out: Linear::new(store, "dec.vocab_out", h, cfg.vocab, true, rng)?,
            p_gen: Linear::new(store, "dec.p_gen", m + h + cfg.embed_dim, 1, true, rng)?,
            cfg,
        })
    }

    pub fn memory<T: Scalar>(
        &self,
        tape: &mut Tape<T>,
        store: &ParamStore<T>,
        nodes: Var,
        source_ext: Vec<usize>,
        ext_size: usize,
    ) -> Result<Memory> {
        if tape.value(nodes).rows() != source_ext.len() {
            return Err(Error::shape("memory", tape.shape(nodes), &[source_ext.len()]));
        }
        let projected = self.attention.project_memory(tape, store, nodes)?;
        Ok(Memory {
            nodes,
            projected,
            source_ext,
            ext_size,
        })
    }

    /// `s₀`, `c₀` from the graph embedding; zero context and coverage.
    pub fn init_state<T: Scalar>(&self, tape: &mut Tape<T>, store: &ParamStore<T>, graph: Var, n: usize) -> Result<DecoderState> {
        let s = self.init_s.forward(tape, store, graph)?;
        let c = self.init_c.forward(tape, store, graph)?;
        Ok(DecoderState {
            s,
            c,
            context: tape.constant(Tensor::zeros(1, self.cfg.memory_dim)),
            coverage: tape.constant(Tensor::zeros(1, n)),
            t: 0,
        })
    }

    /// Embedding of an extended index; copied OOV words read as `UNK`.
    pub fn embed<T: Scalar>(&self, tape: &mut Tape<T>, words: &EmbeddingTable<T>, token: usize) -> Var {
        let idx = if token < self.cfg.vocab { token } else { UNK };
        tape.constant(Tensor::row(words.row(idx)))
    }

    #[allow(clippy::too_many_arguments)]
    pub fn step<T: Scalar>(
        &self,
        tape: &mut Tape<T>,
        store: &ParamStore<T>,
        words: &EmbeddingTable<T>,
        memory: &Memory,
        state: &DecoderState,
        prev: usize,
        opts: StepOptions,
    ) -> Result<StepOutput> {
        let emb = self.embed(tape, words, prev);
        let input = tape.hcat(&[emb, state.context])?;
        let (s, c) = self.cell.step(tape, store, input, state.s, state.c)?;
        let (attn, context) = self
            .attention
            .attend(tape, store, s, memory.nodes, memory.projected, None, Some(state.coverage))?;
        let sc = tape.hcat(&[s, context])?;
        let hid = self.hidden_out.forward(tape, store, sc)?;
        let logits = self.vocab_out.forward(tape, store, hid)?;
        let p_vocab = tape.softmax(logits, 1, None)?;
        let p_gen = match opts.force_p_gen {
            Some(p) => tape.constant(Tensor::scalar(T::c(p))),
            None => {
                let feats = tape.hcat(&[context, s, emb])?;
                let g = self.p_gen.forward(tape, store, feats)?;
                tape.sigmoid(g)
            }
        };
        let base: Vec<usize> = (0..self.cfg.vocab).collect();
        let gen = tape.scatter(p_vocab, &base, memory.ext_size)?;
        let gen = tape.scale_var(gen, p_gen)?;
        let copy = tape.scatter(attn, &memory.source_ext, memory.ext_size)?;
        let p_copy = tape.one_minus(p_gen);
        let copy = tape.scale_var(copy, p_copy)?;
        let dist = tape.add(gen, copy)?;
        let coverage = tape.add(state.coverage, attn)?;
        Ok(StepOutput {
            dist,
            attn,
            p_gen,
            coverage: state.coverage,
            state: DecoderState {
                s,
                c,
                context,
                coverage,
                t: state.t + 1,
            },
        })
    }
}

/// Decoding one example on its own tape, for search.
pub struct TapeStepper<'a, T: Scalar> {
    pub tape: Tape<T>,
    pub store: &'a ParamStore<T>,
    pub decoder: &'a Decoder,
    pub words: &'a EmbeddingTable<T>,
    pub memory: Memory,
    pub init: DecoderState,
}

impl<T: Scalar> StepModel for TapeStepper<'_, T> {
    type State = DecoderState;

    fn start(&mut self) -> DecoderState {
        self.init
    }

    fn step(&mut self, state: &DecoderState, prev: usize) -> Result<(Vec<f64>, DecoderState)> {
        let out = self.decoder.step(
            &mut self.tape,
            self.store,
            self.words,
            &self.memory,
            state,
            prev,
            StepOptions::default(),
        )?;
        let probs = self.tape.value(out.dist).data().iter().map(|p| p.f64()).collect();
        Ok((probs, out.state))
    }
}
