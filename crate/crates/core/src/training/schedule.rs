use rand::Rng;
use serde::{Deserialize, Serialize};

/// `base · decay^step`.
pub fn teacher_forcing_prob(base: f64, decay: f64, step: u64) -> f64 {
    base * decay.powf(step as f64)
}

/// Draws the use-gold flag for training step `step`.
pub fn teacher_forcing_gate<R: Rng>(base: f64, decay: f64, step: u64, rng: &mut R) -> bool {
    rng.gen::<f64>() < teacher_forcing_prob(base, decay, step)
}

/// Learning-rate reduction and early stopping on a validation score that
/// should increase.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Plateau {
    pub lr: f64,
    pub factor: f64,
    pub patience: usize,
    pub stop_after: usize,
    pub best: Option<f64>,
    /// Epochs without improvement since the last reduction or improvement.
    pub bad_epochs: usize,
    /// Epochs without improvement since the best score.
    pub since_best: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlateauSignal {
    pub lr: f64,
    pub improved: bool,
    pub reduced: bool,
    pub stop: bool,
}

impl Plateau {
    pub fn new(lr: f64, factor: f64, patience: usize, stop_after: usize) -> Self {
        Plateau {
            lr,
            factor,
            patience,
            stop_after,
            best: None,
            bad_epochs: 0,
            since_best: 0,
        }
    }

    /// Records one epoch's score. A score improves only when strictly above
    /// the best so far.
    pub fn observe(&mut self, score: f64) -> PlateauSignal {
        let improved = self.best.map_or(true, |b| score > b);
        let mut reduced = false;
        if improved {
            self.best = Some(score);
            self.bad_epochs = 0;
            self.since_best = 0;
        } else {
            self.bad_epochs += 1;
            self.since_best += 1;
            if self.bad_epochs >= self.patience {
                self.lr *= self.factor;
                self.bad_epochs = 0;
                reduced = true;
            }
        }
        PlateauSignal {
            lr: self.lr,
            improved,
            reduced,
            stop: self.since_best >= self.stop_after,
        }
    }
}
