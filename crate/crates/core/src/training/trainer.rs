use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Tape, Tensor, Var};
use crate::data::{encode_batch, Example, EOS, SOS};
use crate::decoder::{sample_index, StepOptions};
use crate::error::{Error, Result};
use crate::layers::Dropout;
use crate::metrics::{corpus_bleu4, reward, rouge_l, RewardSpec, TableLookup};
use crate::model::{argmax, Encoded, Graph2Seq};
use crate::scalar::Scalar;
use crate::training::adam::Adam;
use crate::training::loss::{mixed_loss, scst_loss, sum_all, xent_coverage_loss, PROB_FLOOR};
use crate::training::schedule::{teacher_forcing_gate, Plateau};

/// Progress that survives a checkpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainState {
    /// 1 for cross-entropy pretraining, 2 for fine-tuning.
    pub stage: u8,
    pub epoch: usize,
    /// Optimizer steps over the whole run.
    pub global_step: u64,
    pub plateau: Plateau,
}

/// One line of the metrics log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub split: String,
    pub bleu4: Option<f64>,
    #[serde(rename = "rougeL")]
    pub rouge_l: Option<f64>,
    pub loss: f64,
    pub lr: f64,
}

/// Greedy-decoding scores on a set of examples.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    /// Corpus BLEU-4 on lowercased tokens, zero counts smoothed by
    /// `bleu_epsilon`.
    pub bleu4: f64,
    pub rouge_l: f64,
    /// Fraction of examples regenerated token for token.
    pub exact_match: f64,
    pub hypotheses: Vec<Vec<String>>,
}

/// What happened in one epoch (or one pass of fine-tuning).
#[derive(Clone, Debug)]
pub struct EpochOutcome {
    pub records: Vec<EpochRecord>,
    pub improved: bool,
    pub stop: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScstStats {
    pub loss: f64,
    pub greedy_reward: f64,
    pub sample_reward: f64,
}

pub struct Trainer<T: Scalar> {
    pub model: Graph2Seq<T>,
    pub adam: Adam<T>,
    pub state: TrainState,
    pub rng: ChaCha8Rng,
    best: Option<Vec<Tensor<T>>>,
}

/// Seed offset separating the training stream from parameter initialization.
const STREAM: u64 = 0x5eed;

impl<T: Scalar> Trainer<T> {
    pub fn new(model: Graph2Seq<T>) -> Self {
        let cfg = &model.cfg;
        let state = TrainState {
            stage: 1,
            epoch: 0,
            global_step: 0,
            plateau: Plateau::new(cfg.lr, cfg.lr_decay, cfg.lr_patience, cfg.early_stop),
        };
        let adam = Adam::new(&model.store);
        let rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ STREAM);
        Trainer {
            model,
            adam,
            state,
            rng,
            best: None,
        }
    }

    /// Resumes from saved parameters, optimizer moments and schedule.
    pub fn resume(model: Graph2Seq<T>, adam: Option<Adam<T>>, state: TrainState) -> Self {
        let mut t = Self::new(model);
        if let Some(a) = adam {
            t.adam = a;
        }
        t.rng = ChaCha8Rng::seed_from_u64(t.model.cfg.seed ^ STREAM ^ state.global_step);
        t.state = state;
        t
    }

    fn mean(tape: &mut Tape<T>, losses: &[Var]) -> Result<Var> {
        let total = sum_all(tape, losses)?;
        Ok(tape.scale(total, T::c(1.0 / losses.len() as f64)))
    }

    fn apply(&mut self, tape: &Tape<T>, loss: Var, lr: f64) -> Result<f64> {
        let value = tape.value(loss).item().f64();
        if !value.is_finite() {
            return Err(Error::InvalidArgument(format!("non-finite loss {value}")));
        }
        let grads = tape.backward(loss)?;
        self.model.store.zero_grad();
        self.model.store.accumulate(&grads);
        self.model.store.clip_gradients(T::c(self.model.cfg.grad_clip));
        self.adam.step(&mut self.model.store, lr)?;
        self.state.global_step += 1;
        Ok(value)
    }

    /// Mean coverage loss of `examples` on one tape, with dropout and
    /// scheduled teacher forcing when `training`.
    pub fn batch_loss(&mut self, tape: &mut Tape<T>, examples: &[Example], training: bool) -> Result<Var> {
        let batch = encode_batch(examples, &self.model.lexicon)?;
        let cfg = self.model.cfg.clone();
        let step = self.state.global_step;
        let mut losses = Vec::with_capacity(examples.len());
        for (ex, enc) in examples.iter().zip(&batch.examples) {
            let encoded = {
                let mut drop = if training {
                    Dropout::train(cfg.dropout_embedding, cfg.dropout_rnn, &mut self.rng)
                } else {
                    Dropout::off()
                };
                self.model.encode(tape, ex, enc, batch.extended_size(), &mut drop)?
            };
            let rng = &mut self.rng;
            let steps = self.model.teacher_forced(tape, &encoded, &enc.target, || {
                !training || teacher_forcing_gate(cfg.tf_base, cfg.tf_decay, step, rng)
            })?;
            losses.push(xent_coverage_loss(tape, &steps, &enc.target, cfg.coverage_lambda)?);
        }
        Self::mean(tape, &losses)
    }

    /// One stage-1 optimizer step; returns the batch loss before the update.
    pub fn train_batch(&mut self, examples: &[Example]) -> Result<f64> {
        let mut tape = Tape::new();
        let loss = self.batch_loss(&mut tape, examples, true)?;
        let lr = self.state.plateau.lr;
        self.apply(&tape, loss, lr)
    }

    /// Mean teacher-forced loss without dropout, batch by batch.
    pub fn eval_loss(&mut self, examples: &[Example]) -> Result<f64> {
        let bs = self.model.cfg.batch_size;
        let mut total = 0.0;
        for chunk in examples.chunks(bs) {
            let mut tape = Tape::new();
            let loss = self.batch_loss(&mut tape, chunk, false)?;
            total += tape.value(loss).item().f64() * chunk.len() as f64;
        }
        Ok(total / examples.len().max(1) as f64)
    }

    fn shuffled(&mut self, n: usize) -> Vec<usize> {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut self.rng);
        order
    }

    /// One pass over `train` in shuffled batches; returns the mean batch loss.
    pub fn run_epoch(&mut self, train: &[Example]) -> Result<f64> {
        if train.is_empty() {
            return Err(Error::Data("training corpus is empty".into()));
        }
        let order = self.shuffled(train.len());
        let mut total = 0.0;
        let mut batches = 0;
        for idx in order.chunks(self.model.cfg.batch_size) {
            let examples: Vec<Example> = idx.iter().map(|&i| train[i].clone()).collect();
            total += self.train_batch(&examples)?;
            batches += 1;
        }
        self.state.epoch += 1;
        Ok(total / batches as f64)
    }

    fn snapshot(&mut self) {
        self.best = Some(self.model.store.iter().map(|(_, p)| p.value.clone()).collect());
    }

    /// Puts the parameters of the best validation epoch back in place.
    pub fn restore_best(&mut self) {
        if let Some(best) = self.best.take() {
            for (p, v) in self.model.store.iter_mut().zip(best) {
                p.value = v;
            }
        }
    }

    fn validate(&mut self, train_loss: f64, dev: &[Example]) -> Result<EpochOutcome> {
        let lr = self.state.plateau.lr;
        let eval = evaluate(&self.model, dev)?;
        let dev_loss = self.eval_loss(dev)?;
        let signal = self.state.plateau.observe(eval.bleu4);
        if signal.improved {
            self.snapshot();
        }
        log::info!(
            "stage {} epoch {}: loss {train_loss:.4} dev BLEU-4 {:.4} ROUGE-L {:.4} lr {lr:e}",
            self.state.stage,
            self.state.epoch,
            eval.bleu4,
            eval.rouge_l
        );
        let record = |split: &str, loss: f64, bleu4: Option<f64>, rouge_l: Option<f64>| EpochRecord {
            epoch: self.state.epoch,
            split: split.into(),
            bleu4,
            rouge_l,
            loss,
            lr,
        };
        Ok(EpochOutcome {
            records: vec![
                record("train", train_loss, None, None),
                record("dev", dev_loss, Some(eval.bleu4), Some(eval.rouge_l)),
            ],
            improved: signal.improved,
            stop: signal.stop,
        })
    }

    /// Stage 1: epochs until early stopping, `max_epochs`, or `on_epoch`
    /// returning false. Validation BLEU-4 on `dev` drives the learning rate.
    pub fn fit(
        &mut self,
        train: &[Example],
        dev: &[Example],
        mut on_epoch: impl FnMut(&EpochOutcome, &Self) -> Result<bool>,
    ) -> Result<()> {
        if dev.is_empty() {
            return Err(Error::Data("validation corpus is empty".into()));
        }
        self.state.stage = 1;
        while self.state.epoch < self.model.cfg.max_epochs {
            let loss = self.run_epoch(train)?;
            let outcome = self.validate(loss, dev)?;
            if !on_epoch(&outcome, self)? || outcome.stop {
                break;
            }
        }
        Ok(())
    }

    /// Greedy and sampled decoding from the same encoder output.
    fn decode_pair(&mut self, tape: &mut Tape<T>, encoded: &Encoded) -> Result<(Vec<usize>, Vec<usize>, Vec<Var>)> {
        let model = &self.model;
        let max_len = model.cfg.max_decode_len;
        let opts = StepOptions::default();
        let mut greedy = Vec::new();
        let (mut state, mut prev) = (encoded.init, SOS);
        for _ in 0..max_len {
            let out = model
                .decoder
                .step(tape, &model.store, &model.words, &encoded.memory, &state, prev, opts)?;
            let tok = argmax(tape.value(out.dist).data());
            if tok == EOS {
                break;
            }
            greedy.push(tok);
            state = out.state;
            prev = tok;
        }
        let mut sample = Vec::new();
        let mut log_probs = Vec::new();
        let (mut state, mut prev) = (encoded.init, SOS);
        for _ in 0..max_len {
            let out = model
                .decoder
                .step(tape, &model.store, &model.words, &encoded.memory, &state, prev, opts)?;
            let probs: Vec<f64> = tape.value(out.dist).data().iter().map(|p| p.f64()).collect();
            let tok = sample_index(&probs, &mut self.rng);
            let p = tape.pick(out.dist, 0, tok)?;
            log_probs.push(tape.log_floor(p, T::c(PROB_FLOOR)));
            if tok == EOS {
                break;
            }
            sample.push(tok);
            state = out.state;
            prev = tok;
        }
        Ok((greedy, sample, log_probs))
    }

    /// One stage-2 optimizer step on the mixed objective.
    pub fn scst_batch(&mut self, examples: &[Example]) -> Result<ScstStats> {
        let batch = encode_batch(examples, &self.model.lexicon)?;
        let cfg = self.model.cfg.clone();
        let spec = RewardSpec {
            alpha: cfg.reward_alpha,
            epsilon: cfg.bleu_epsilon,
        };
        let step = self.state.global_step;
        let mut tape = Tape::new();
        let mut losses = Vec::with_capacity(examples.len());
        let (mut rg, mut rs) = (0.0, 0.0);
        for (ex, enc) in examples.iter().zip(&batch.examples) {
            let encoded = self
                .model
                .encode(&mut tape, ex, enc, batch.extended_size(), &mut Dropout::off())?;
            let (greedy, sample, log_probs) = self.decode_pair(&mut tape, &encoded)?;
            let lookup = TableLookup {
                vocab: &self.model.lexicon.words,
                table: &self.model.words,
            };
            let words = |ids: &[usize]| -> Vec<String> { ids.iter().map(|&i| self.model.word(&batch, i)).collect() };
            let r_greedy = reward(&words(&greedy), &ex.question, &spec, &lookup)?;
            let r_sample = reward(&words(&sample), &ex.question, &spec, &lookup)?;
            rg += r_greedy;
            rs += r_sample;
            let rl = scst_loss(&mut tape, &log_probs, r_greedy, r_sample)?;
            let rng = &mut self.rng;
            let steps = self.model.teacher_forced(&mut tape, &encoded, &enc.target, || {
                teacher_forcing_gate(cfg.tf_base, cfg.tf_decay, step, rng)
            })?;
            let lm = xent_coverage_loss(&mut tape, &steps, &enc.target, cfg.coverage_lambda)?;
            losses.push(mixed_loss(&mut tape, rl, lm, cfg.rl_gamma)?);
        }
        let loss = Self::mean(&mut tape, &losses)?;
        let lr = self.state.plateau.lr;
        let value = self.apply(&tape, loss, lr)?;
        let n = examples.len() as f64;
        Ok(ScstStats {
            loss: value,
            greedy_reward: rg / n,
            sample_reward: rs / n,
        })
    }

    /// Switches to stage 2: fine-tuning learning rate, fresh plateau
    /// tracking and, when configured, zeroed Adam moments.
    pub fn begin_finetune(&mut self) {
        let cfg = &self.model.cfg;
        if cfg.finetune_fresh_moments {
            self.adam.reset();
        }
        self.state.stage = 2;
        self.state.epoch = 0;
        self.state.plateau = Plateau::new(cfg.finetune_lr, cfg.lr_decay, cfg.lr_patience, cfg.early_stop);
        self.best = None;
    }

    /// Stage 2 for `finetune_iterations` batches. Validation runs after
    /// every full pass over `train` and after the last iteration.
    pub fn finetune(
        &mut self,
        train: &[Example],
        dev: &[Example],
        mut on_epoch: impl FnMut(&EpochOutcome, &Self) -> Result<bool>,
    ) -> Result<()> {
        if train.is_empty() || dev.is_empty() {
            return Err(Error::Data("fine-tuning needs non-empty training and validation corpora".into()));
        }
        self.begin_finetune();
        let iterations = self.model.cfg.finetune_iterations;
        let bs = self.model.cfg.batch_size;
        let mut order = Vec::new();
        let mut pos = 0;
        let (mut total, mut count) = (0.0, 0usize);
        for it in 0..iterations {
            if pos >= order.len() {
                order = self.shuffled(train.len());
                pos = 0;
            }
            let end = (pos + bs).min(order.len());
            let examples: Vec<Example> = order[pos..end].iter().map(|&i| train[i].clone()).collect();
            pos = end;
            total += self.scst_batch(&examples)?.loss;
            count += 1;
            if pos >= order.len() || it + 1 == iterations {
                self.state.epoch += 1;
                let outcome = self.validate(total / count as f64, dev)?;
                (total, count) = (0.0, 0);
                if !on_epoch(&outcome, self)? || outcome.stop {
                    break;
                }
            }
        }
        Ok(())
    }
}

/// Greedy decoding of every example, scored against its question.
pub fn evaluate<T: Scalar>(model: &Graph2Seq<T>, examples: &[Example]) -> Result<Evaluation> {
    let mut pairs = Vec::with_capacity(examples.len());
    let mut rouge = 0.0;
    let mut exact = 0usize;
    let mut hypotheses = Vec::with_capacity(examples.len());
    for ex in examples {
        let hyp = model.greedy(ex)?;
        if hyp == ex.question {
            exact += 1;
        }
        let lower = |t: &[String]| t.iter().map(|w| w.to_lowercase()).collect::<Vec<_>>();
        rouge += rouge_l(&lower(&hyp), &lower(&ex.question))?;
        pairs.push((lower(&hyp), lower(&ex.question)));
        hypotheses.push(hyp);
    }
    let n = examples.len().max(1) as f64;
    Ok(Evaluation {
        bleu4: corpus_bleu4(&pairs, model.cfg.bleu_epsilon)?,
        rouge_l: rouge / n,
        exact_match: exact as f64 / n,
        hypotheses,
    })
}

/// Mean reward of greedy decodes.
pub fn mean_greedy_reward<T: Scalar>(model: &Graph2Seq<T>, examples: &[Example], spec: &RewardSpec) -> Result<f64> {
    let lookup = TableLookup {
        vocab: &model.lexicon.words,
        table: &model.words,
    };
    let mut total = 0.0;
    for ex in examples {
        let hyp = model.greedy(ex)?;
        total += reward(&hyp, &ex.question, spec, &lookup)?;
    }
    Ok(total / examples.len().max(1) as f64)
}
