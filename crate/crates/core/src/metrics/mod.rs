//! Sentence-level evaluation metrics and the RL reward.

pub mod bleu;
pub mod reward;
pub mod rouge;
pub mod wmd;

pub use bleu::{bleu4, corpus_bleu4, corpus_mean_bleu4, DEFAULT_EPSILON};
pub use reward::{reward, semantic_reward, RewardSpec};
pub use rouge::{lcs_len, rouge_l, ROUGE_BETA};
pub use wmd::{transport, wmd, TableLookup, VectorLookup};
