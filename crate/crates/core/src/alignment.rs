//! Deep alignment of answer information into the passage, at word level and
//! at contextual level.

use rand::Rng;

use crate::autodiff::{ParamId, ParamStore, Tape, Var};
use crate::error::{Error, Result};
use crate::layers::{glorot, BiLstm, Dropout};
use crate::scalar::Scalar;

/// Similarity projection of one alignment stage.
#[derive(Clone, Debug)]
pub struct AlignStage {
    pub w: ParamId,
    pub input_dim: usize,
    pub proj_dim: usize,
}

impl AlignStage {
    pub fn new<T: Scalar, R: Rng>(store: &mut ParamStore<T>, name: &str, input_dim: usize, proj_dim: usize, rng: &mut R) -> Result<Self> {
        Ok(AlignStage {
            w: store.add(format!("{name}.w"), glorot(input_dim, proj_dim, rng))?,
            input_dim,
            proj_dim,
        })
    }

    /// `β` (N × L): row `i` is a distribution over answer positions.
    pub fn weights<T: Scalar>(&self, tape: &mut Tape<T>, store: &ParamStore<T>, sim_p: Var, sim_a: Var) -> Result<Var> {
        if tape.value(sim_a).rows() == 0 {
            return Err(Error::InvalidArgument("cannot align against an empty answer".into()));
        }
        let w = tape.param(store, self.w);
        let p = tape.matmul(sim_p, w)?;
        let p = tape.relu(p);
        let a = tape.matmul(sim_a, w)?;
        let a = tape.relu(a);
        let scores = tape.matmul_nt(p, a)?;
        tape.softmax(scores, 1, None)
    }
}

/// `[val_p | β·val_a]`, one row per passage token.
pub fn soft_align<T: Scalar>(
    tape: &mut Tape<T>,
    store: &ParamStore<T>,
    stage: &AlignStage,
    sim_p: Var,
    sim_a: Var,
    val_p: Var,
    val_a: Var,
) -> Result<Var> {
    let beta = stage.weights(tape, store, sim_p, sim_a)?;
    let aligned = tape.matmul(beta, val_a)?;
    tape.hcat(&[val_p, aligned])
}

/// Trainable case / POS / NER embedding tables.
#[derive(Clone, Debug)]
pub struct FeatureEmbeddings {
    pub case: Option<ParamId>,
    pub pos: Option<ParamId>,
    pub ner: Option<ParamId>,
    pub dim: usize,
}

impl FeatureEmbeddings {
    /// A table with dimension 0 is left out.
    pub fn new<T: Scalar, R: Rng>(store: &mut ParamStore<T>, sizes: [usize; 3], dims: [usize; 3], rng: &mut R) -> Result<Self> {
        let mut ids = [None; 3];
        for (k, name) in ["case", "pos", "ner"].iter().enumerate() {
            if dims[k] > 0 {
                ids[k] = Some(store.add(format!("features.{name}"), glorot(sizes[k], dims[k], rng))?);
            }
        }
        Ok(FeatureEmbeddings {
            case: ids[0],
            pos: ids[1],
            ner: ids[2],
            dim: dims.iter().sum(),
        })
    }

    pub fn lookup<T: Scalar>(
        &self,
        tape: &mut Tape<T>,
        store: &ParamStore<T>,
        case: &[usize],
        pos: &[usize],
        ner: &[usize],
    ) -> Result<Option<Var>> {
        let mut parts = Vec::new();
        for (id, idx) in [(self.case, case), (self.pos, pos), (self.ner, ner)] {
            if let Some(id) = id {
                let table = tape.param(store, id);
                parts.push(tape.gather_rows(table, idx)?);
            }
        }
        if parts.is_empty() {
            Ok(None)
        } else {
            tape.hcat(&parts).map(Some)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DanConfig {
    pub word_dim: usize,
    /// Width of optional precomputed contextual vectors; 0 when absent.
    pub context_dim: usize,
    /// Total width of the linguistic feature embeddings.
    pub feature_dim: usize,
    /// Width of every BiLSTM output.
    pub hidden: usize,
    /// Width of the similarity projections.
    pub align_dim: usize,
    /// When false the aligned answer parts are dropped from both stages.
    pub use_dan: bool,
}

/// Per-token inputs of one example; rows are tokens.
#[derive(Clone, Copy, Debug)]
pub struct DanInputs {
    pub passage_words: Var,
    pub answer_words: Var,
    pub features: Option<Var>,
    pub passage_context: Option<Var>,
    pub answer_context: Option<Var>,
}

#[derive(Clone, Copy, Debug)]
pub struct DanOutput {
    /// Word-level aligned passage embedding (input of the dynamic graph).
    pub word_level: Var,
    pub passage_contextual: Var,
    pub answer_contextual: Option<Var>,
    /// Final passage embedding, N × hidden.
    pub passage: Var,
}

#[derive(Clone, Debug)]
pub struct Dan {
    pub cfg: DanConfig,
    pub word_stage: AlignStage,
    pub passage_rnn: BiLstm,
    pub answer_rnn: BiLstm,
    pub context_stage: AlignStage,
    pub final_rnn: BiLstm,
}

impl Dan {
    pub fn new<T: Scalar, R: Rng>(store: &mut ParamStore<T>, cfg: DanConfig, rng: &mut R) -> Result<Self> {
        let answer_width = cfg.word_dim + cfg.context_dim;
        let word_stage = AlignStage::new(store, "dan.word", cfg.word_dim, cfg.align_dim, rng)?;
        let passage_rnn = BiLstm::new(store, "dan.passage_rnn", Self::word_level_width(&cfg), cfg.hidden, rng)?;
        let answer_rnn = BiLstm::new(store, "dan.answer_rnn", answer_width, cfg.hidden, rng)?;
        let context_stage = AlignStage::new(store, "dan.context", answer_width + cfg.hidden, cfg.align_dim, rng)?;
        let final_in = if cfg.use_dan { 2 * cfg.hidden } else { cfg.hidden };
        let final_rnn = BiLstm::new(store, "dan.final_rnn", final_in, cfg.hidden, rng)?;
        Ok(Dan {
            cfg,
            word_stage,
            passage_rnn,
            answer_rnn,
            context_stage,
            final_rnn,
        })
    }

    fn word_level_width(cfg: &DanConfig) -> usize {
        let passage = cfg.word_dim + cfg.context_dim + cfg.feature_dim;
        if cfg.use_dan {
            passage + cfg.word_dim + cfg.context_dim
        } else {
            passage
        }
    }

    /// Width of [`DanOutput::word_level`].
    pub fn word_level_dim(&self) -> usize {
        Self::word_level_width(&self.cfg)
    }

    pub fn forward<T: Scalar>(&self, tape: &mut Tape<T>, store: &ParamStore<T>, inp: &DanInputs, drop: &mut Dropout) -> Result<DanOutput> {
        let n = tape.value(inp.passage_words).rows();
        let l = tape.value(inp.answer_words).rows();
        if l == 0 {
            return Err(Error::InvalidArgument("empty answer span".into()));
        }
        let gp = drop.embedding(tape, inp.passage_words)?;
        let ga = drop.embedding(tape, inp.answer_words)?;
        let mut passage_parts = vec![gp];
        let mut answer_parts = vec![ga];
        if let (Some(bp), Some(ba)) = (inp.passage_context, inp.answer_context) {
            passage_parts.push(bp);
            answer_parts.push(ba);
        }
        let gb_p = tape.hcat(&passage_parts)?;
        let ha = tape.hcat(&answer_parts)?;
        if let Some(f) = inp.features {
            let f = drop.embedding(tape, f)?;
            passage_parts.push(f);
        }
        let val_p = tape.hcat(&passage_parts)?;

        let word_level = if self.cfg.use_dan {
            soft_align(tape, store, &self.word_stage, gp, ga, val_p, ha)?
        } else {
            val_p
        };
        let hp = self.passage_rnn.encode(tape, store, word_level, n)?;
        let hp = drop.recurrent(tape, hp)?;
        if !self.cfg.use_dan {
            let x = self.final_rnn.encode(tape, store, hp, n)?;
            let x = drop.recurrent(tape, x)?;
            return Ok(DanOutput {
                word_level,
                passage_contextual: hp,
                answer_contextual: None,
                passage: x,
            });
        }
        let ha_bar = self.answer_rnn.encode(tape, store, ha, l)?;
        let ha_bar = drop.recurrent(tape, ha_bar)?;
        let sim_p = tape.hcat(&[gb_p, hp])?;
        let sim_a = tape.hcat(&[ha, ha_bar])?;
        let ctx = soft_align(tape, store, &self.context_stage, sim_p, sim_a, hp, ha_bar)?;
        let x = self.final_rnn.encode(tape, store, ctx, n)?;
        let x = drop.recurrent(tape, x)?;
        Ok(DanOutput {
            word_level,
            passage_contextual: hp,
            answer_contextual: Some(ha_bar),
            passage: x,
        })
    }
}
