//! Cross-entropy pretraining, self-critical fine-tuning, optimizer and
//! checkpoints.

pub mod adam;
pub mod checkpoint;
pub mod loss;
pub mod schedule;
pub mod trainer;

pub use adam::Adam;
pub use checkpoint::{load_checkpoint, read_manifest, save_checkpoint, Checkpoint, Manifest};
pub use loss::{mix, mixed_loss, scst_loss, xent_coverage_loss, PROB_FLOOR};
pub use schedule::{teacher_forcing_gate, teacher_forcing_prob, Plateau, PlateauSignal};
pub use trainer::{evaluate, mean_greedy_reward, EpochOutcome, EpochRecord, Evaluation, ScstStats, TrainState, Trainer};
