//! Run configuration as a flat `key = value` text file.

use std::fmt::Write as _;
use std::path::Path;

use crate::biggnn::Direction;
use crate::error::{Error, Result};
use crate::graph::GraphMode;

/// Conversion between a config field and its text form.
pub trait ConfigValue: Sized {
    fn parse(s: &str) -> std::result::Result<Self, String>;
    fn render(&self) -> String;
}

macro_rules! plain_value {
    ($($t:ty),*) => {$(
        impl ConfigValue for $t {
            fn parse(s: &str) -> std::result::Result<Self, String> {
                s.parse().map_err(|e| format!("{e}"))
            }
            fn render(&self) -> String {
                self.to_string()
            }
        }
    )*};
}
plain_value!(usize, u64, f64, bool, String);

impl ConfigValue for Option<String> {
    fn parse(s: &str) -> std::result::Result<Self, String> {
        Ok(if s.is_empty() { None } else { Some(s.to_string()) })
    }
    fn render(&self) -> String {
        self.clone().unwrap_or_default()
    }
}

impl ConfigValue for GraphMode {
    fn parse(s: &str) -> std::result::Result<Self, String> {
        s.parse().map_err(|e: Error| e.to_string())
    }
    fn render(&self) -> String {
        match self {
            GraphMode::Static => "static".into(),
            GraphMode::Dynamic => "dynamic".into(),
        }
    }
}

impl ConfigValue for Direction {
    fn parse(s: &str) -> std::result::Result<Self, String> {
        s.parse().map_err(|e: Error| e.to_string())
    }
    fn render(&self) -> String {
        match self {
            Direction::Bi => "bi",
            Direction::Forward => "forward",
            Direction::Backward => "backward",
            Direction::ConcatAtEnd => "concat-at-end",
        }
        .into()
    }
}

/// Floating point width of a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Precision {
    F32,
    F64,
}

impl ConfigValue for Precision {
    fn parse(s: &str) -> std::result::Result<Self, String> {
        match s {
            "f32" => Ok(Precision::F32),
            "f64" => Ok(Precision::F64),
            _ => Err(format!("expected f32 or f64, got {s:?}")),
        }
    }
    fn render(&self) -> String {
        match self {
            Precision::F32 => "f32".into(),
            Precision::F64 => "f64".into(),
        }
    }
}

macro_rules! config {
    ($( $(#[$doc:meta])* $name:ident : $ty:ty = $default:expr ,)*) => {
        #[derive(Clone, Debug, PartialEq)]
        pub struct Config {
            $( $(#[$doc])* pub $name: $ty, )*
        }

        impl Default for Config {
            fn default() -> Self {
                Config { $( $name: $default, )* }
            }
        }

        impl Config {
            pub const KEYS: &'static [&'static str] = &[$(stringify!($name)),*];

            pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
                match key {
                    $( stringify!($name) => {
                        self.$name = <$ty as ConfigValue>::parse(value)
                            .map_err(|e| Error::Config(format!("{key} = {value:?}: {e}")))?;
                    } )*
                    _ => return Err(Error::Config(format!("unknown key {key:?}"))),
                }
                Ok(())
            }

            pub fn get(&self, key: &str) -> Option<String> {
                match key {
                    $( stringify!($name) => Some(ConfigValue::render(&self.$name)), )*
                    _ => None,
                }
            }
        }
    };
}

config! {
    /// Training corpus (JSONL).
    train_path: Option<String> = None,
    /// Validation corpus (JSONL).
    dev_path: Option<String> = None,
    /// Pretrained word vectors; random vectors of `word_dim` when empty.
    embeddings_path: Option<String> = None,
    /// Optional precomputed contextual vectors.
    context_path: Option<String> = None,
    word_dim: usize = 300,
    vocab_cap: usize = 70000,
    case_dim: usize = 3,
    pos_dim: usize = 12,
    ner_dim: usize = 8,
    /// Width of every BiLSTM output and of the GNN node states.
    hidden_size: usize = 300,
    align_dim: usize = 300,
    graph_learner_dim: usize = 300,
    graph_dim: usize = 300,
    decoder_hidden: usize = 300,
    attn_dim: usize = 300,
    graph_mode: GraphMode = GraphMode::Dynamic,
    graph_k: usize = 10,
    gnn_hops: usize = 3,
    gnn_direction: Direction = Direction::Bi,
    use_dan: bool = true,
    dropout_embedding: f64 = 0.4,
    dropout_rnn: f64 = 0.3,
    lr: f64 = 0.001,
    finetune_lr: f64 = 0.00001,
    batch_size: usize = 50,
    max_epochs: usize = 100,
    finetune_iterations: usize = 1000,
    grad_clip: f64 = 10.0,
    tf_base: f64 = 0.75,
    tf_decay: f64 = 0.9999,
    lr_decay: f64 = 0.5,
    lr_patience: usize = 3,
    early_stop: usize = 10,
    coverage_lambda: f64 = 0.4,
    rl_gamma: f64 = 0.99,
    reward_alpha: f64 = 0.1,
    bleu_epsilon: f64 = 1e-9,
    /// Reset Adam moments when fine-tuning starts.
    finetune_fresh_moments: bool = true,
    beam_width: usize = 5,
    max_decode_len: usize = 30,
    length_normalize: bool = true,
    seed: u64 = 42,
    precision: Precision = Precision::F32,
}

impl Config {
    /// Parses `key = value` lines; `#` starts a comment. Keys not listed
    /// keep their defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Config::default();
        for (k, v) in Self::pairs(text)? {
            cfg.set(&k, &v)?;
        }
        Ok(cfg)
    }

    /// The `(key, value)` pairs written in `text`, in order.
    pub fn pairs(text: &str) -> Result<Vec<(String, String)>> {
        let mut out = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
            out.push((k.trim().to_string(), v.trim().to_string()));
        }
        Ok(out)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, kv: &str) -> Result<()> {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override {kv:?} is not key=value")))?;
        self.set(k.trim(), v.trim())
    }

    /// Every key in declaration order, one `key = value` per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for k in Self::KEYS {
            let _ = writeln!(out, "{k} = {}", self.get(k).unwrap_or_default());
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        for (name, p) in [
            ("dropout_embedding", self.dropout_embedding),
            ("dropout_rnn", self.dropout_rnn),
        ] {
            if !(0.0..1.0).contains(&p) {
                return bad(format!("{name} must lie in [0, 1)"));
            }
        }
        for (name, p) in [
            ("tf_base", self.tf_base),
            ("tf_decay", self.tf_decay),
            ("rl_gamma", self.rl_gamma),
            ("lr_decay", self.lr_decay),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must lie in [0, 1]"));
            }
        }
        if self.hidden_size % 2 != 0 {
            return bad("hidden_size must be even (two LSTM directions)".into());
        }
        for (name, v) in [
            ("word_dim", self.word_dim),
            ("vocab_cap", self.vocab_cap),
            ("hidden_size", self.hidden_size),
            ("align_dim", self.align_dim),
            ("graph_learner_dim", self.graph_learner_dim),
            ("graph_dim", self.graph_dim),
            ("decoder_hidden", self.decoder_hidden),
            ("attn_dim", self.attn_dim),
            ("graph_k", self.graph_k),
            ("gnn_hops", self.gnn_hops),
            ("batch_size", self.batch_size),
            ("beam_width", self.beam_width),
            ("max_decode_len", self.max_decode_len),
        ] {
            if v == 0 {
                return bad(format!("{name} must be positive"));
            }
        }
        if self.lr_patience >= self.early_stop {
            return bad("lr_patience must be smaller than early_stop".into());
        }
        if self.lr <= 0.0 || self.finetune_lr <= 0.0 {
            return bad("learning rates must be positive".into());
        }
        if self.reward_alpha < 0.0 || self.coverage_lambda < 0.0 || self.grad_clip <= 0.0 {
            return bad("reward_alpha and coverage_lambda must be nonnegative, grad_clip positive".into());
        }
        Ok(())
    }
}
