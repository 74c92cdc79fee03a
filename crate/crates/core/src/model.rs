//! The full graph-to-sequence question generator.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::alignment::{Dan, DanConfig, DanInputs, DanOutput, FeatureEmbeddings};
use crate::autodiff::{ParamStore, Tape};
use crate::biggnn::{BiGgnn, BiGgnnConfig, EncoderOutput};
use crate::config::Config;
use crate::data::{encode_batch, Batch, Case, ContextStore, EmbeddingTable, EncodedExample, Example, Lexicon, SOS};
use crate::decoder::{beam_search, greedy_decode, BeamConfig, Decoder, DecoderConfig, DecoderState, Memory, StepOptions, StepOutput, TapeStepper};
use crate::error::{Error, Result};
use crate::graph::{build_static, GraphLearner, GraphMode, PassageGraph};
use crate::layers::Dropout;
use crate::scalar::Scalar;

/// Everything the encoder produced for one example.
#[derive(Clone, Debug)]
pub struct Encoded {
    pub dan: DanOutput,
    pub graph: PassageGraph,
    pub gnn: EncoderOutput,
    pub memory: Memory,
    pub init: DecoderState,
}

/// One generated question.
#[derive(Clone, Debug, PartialEq)]
pub struct Generated {
    pub id: String,
    pub tokens: Vec<String>,
    /// Search score: log-probability, length normalized when configured.
    pub score: f64,
}

#[derive(Clone)]
pub struct Graph2Seq<T: Scalar> {
    pub cfg: Config,
    pub lexicon: Lexicon,
    pub words: EmbeddingTable<T>,
    pub contexts: Option<ContextStore>,
    pub store: ParamStore<T>,
    pub features: FeatureEmbeddings,
    pub dan: Dan,
    pub learner: Option<GraphLearner>,
    pub gnn: BiGgnn,
    pub decoder: Decoder,
}

impl<T: Scalar> Graph2Seq<T> {
    /// Builds a freshly initialized model. Parameter draws come from
    /// `cfg.seed`.
    pub fn new(cfg: Config, lexicon: Lexicon, words: EmbeddingTable<T>, contexts: Option<ContextStore>) -> Result<Self> {
        cfg.validate()?;
        if words.len() != lexicon.words.len() {
            return Err(Error::Config(format!(
                "embedding table has {} rows for {} vocabulary entries",
                words.len(),
                lexicon.words.len()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut store = ParamStore::new();
        let features = FeatureEmbeddings::new(
            &mut store,
            [Case::COUNT, lexicon.pos.len(), lexicon.ner.len()],
            [cfg.case_dim, cfg.pos_dim, cfg.ner_dim],
            &mut rng,
        )?;
        let dan = Dan::new(
            &mut store,
            DanConfig {
                word_dim: words.dim(),
                context_dim: contexts.as_ref().map_or(0, |c| c.dim),
                feature_dim: features.dim,
                hidden: cfg.hidden_size,
                align_dim: cfg.align_dim,
                use_dan: cfg.use_dan,
            },
            &mut rng,
        )?;
        let learner = match cfg.graph_mode {
            GraphMode::Dynamic => Some(GraphLearner::new(&mut store, dan.word_level_dim(), cfg.graph_learner_dim, &mut rng)?),
            GraphMode::Static => None,
        };
        let gnn = BiGgnn::new(
            &mut store,
            BiGgnnConfig {
                hidden: cfg.hidden_size,
                graph_dim: cfg.graph_dim,
                hops: cfg.gnn_hops,
                direction: cfg.gnn_direction,
            },
            &mut rng,
        )?;
        let decoder = Decoder::new(
            &mut store,
            DecoderConfig {
                hidden: cfg.decoder_hidden,
                memory_dim: cfg.hidden_size,
                graph_dim: cfg.graph_dim,
                embed_dim: words.dim(),
                vocab: lexicon.words.len(),
                attn_dim: cfg.attn_dim,
            },
            &mut rng,
        )?;
        Ok(Graph2Seq {
            cfg,
            lexicon,
            words,
            contexts,
            store,
            features,
            dan,
            learner,
            gnn,
            decoder,
        })
    }

    /// Runs DAN, graph construction and the BiGGNN for `ex`, whose encoded
    /// form `enc` belongs to a batch with `ext_size` extended entries.
    pub fn encode(
        &self,
        tape: &mut Tape<T>,
        ex: &Example,
        enc: &EncodedExample,
        ext_size: usize,
        drop: &mut Dropout,
    ) -> Result<Encoded> {
        let passage_words = tape.constant(self.words.lookup(&enc.passage));
        let answer_words = tape.constant(self.words.lookup(enc.answer()));
        let features = self.features.lookup(tape, &self.store, &enc.case, &enc.pos, &enc.ner)?;
        let (passage_context, answer_context) = match &self.contexts {
            Some(store) => {
                let entry = store
                    .get(&ex.id)
                    .ok_or_else(|| Error::Data(format!("no contextual vectors for example {:?}", ex.id)))?;
                (
                    Some(tape.constant(entry.passage_tensor())),
                    Some(tape.constant(entry.answer_tensor())),
                )
            }
            None => (None, None),
        };
        let dan = self.dan.forward(
            tape,
            &self.store,
            &DanInputs {
                passage_words,
                answer_words,
                features,
                passage_context,
                answer_context,
            },
            drop,
        )?;
        let graph = match &self.learner {
            Some(learner) => PassageGraph::Dynamic(learner.build(tape, &self.store, dan.word_level, self.cfg.graph_k)?),
            None => PassageGraph::Static(build_static(ex)?),
        };
        let gnn = self.gnn.encode(tape, &self.store, &graph, dan.passage)?;
        let memory = self
            .decoder
            .memory(tape, &self.store, gnn.node_states, enc.source_ext.clone(), ext_size)?;
        let init = self
            .decoder
            .init_state(tape, &self.store, gnn.graph_embedding, enc.passage.len())?;
        Ok(Encoded {
            dan,
            graph,
            gnn,
            memory,
            init,
        })
    }

    /// Decodes along `target`. The first input is `SOS`; before every later
    /// step `use_gold` decides between the gold token and the argmax of the
    /// previous distribution.
    pub fn teacher_forced(
        &self,
        tape: &mut Tape<T>,
        encoded: &Encoded,
        target: &[usize],
        mut use_gold: impl FnMut() -> bool,
    ) -> Result<Vec<StepOutput>> {
        let mut steps: Vec<StepOutput> = Vec::with_capacity(target.len());
        let mut state = encoded.init;
        let mut prev = SOS;
        for (t, &gold) in target.iter().enumerate() {
            if t > 0 && !use_gold() {
                prev = argmax(tape.value(steps[t - 1].dist).data());
            }
            let out = self
                .decoder
                .step(tape, &self.store, &self.words, &encoded.memory, &state, prev, StepOptions::default())?;
            state = out.state;
            steps.push(out);
            prev = gold;
        }
        Ok(steps)
    }

    /// Evaluation-mode encoding of a single example on a fresh tape, ready
    /// for search.
    pub fn stepper(&self, ex: &Example) -> Result<(TapeStepper<'_, T>, Batch)> {
        let batch = encode_batch(std::slice::from_ref(ex), &self.lexicon)?;
        let mut tape = Tape::new();
        let encoded = self.encode(&mut tape, ex, &batch.examples[0], batch.extended_size(), &mut Dropout::off())?;
        Ok((
            TapeStepper {
                tape,
                store: &self.store,
                decoder: &self.decoder,
                words: &self.words,
                memory: encoded.memory,
                init: encoded.init,
            },
            batch,
        ))
    }

    pub fn greedy(&self, ex: &Example) -> Result<Vec<String>> {
        let (mut stepper, batch) = self.stepper(ex)?;
        let ids = greedy_decode(&mut stepper, self.cfg.max_decode_len)?;
        Ok(ids.iter().map(|&i| batch.decode(&self.lexicon.words, i)).collect())
    }

    /// Beam search with the configured length normalization.
    pub fn beam(&self, ex: &Example, width: usize) -> Result<Generated> {
        let (mut stepper, batch) = self.stepper(ex)?;
        let hyp = beam_search(
            &mut stepper,
            BeamConfig {
                width,
                max_len: self.cfg.max_decode_len,
                normalize: self.cfg.length_normalize,
            },
        )?;
        Ok(Generated {
            id: ex.id.clone(),
            tokens: hyp.question().iter().map(|&i| batch.decode(&self.lexicon.words, i)).collect(),
            score: hyp.score(self.cfg.length_normalize),
        })
    }

    /// Maps an extended index of `batch` back to a word.
    pub fn word(&self, batch: &Batch, idx: usize) -> String {
        batch.decode(&self.lexicon.words, idx)
    }
}

pub(crate) fn argmax<T: Scalar>(p: &[T]) -> usize {
    let mut best = 0;
    for (i, &x) in p.iter().enumerate() {
        if x > p[best] {
            best = i;
        }
    }
    best
}
