use serde::Serialize;

/// What the scheduler decided after an epoch.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Step {
    Continue,
    Decayed,
    Stop,
}

/// Divides the learning rate by `1/factor` after `patience` consecutive
/// epochs without a strictly lower validation loss, and signals a stop once
/// the rate falls below `min_lr`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlateauScheduler {
    pub lr: f64,
    pub patience: usize,
    pub factor: f64,
    pub min_lr: f64,
    best: f64,
    stale: usize,
}

impl PlateauScheduler {
    pub fn new(lr: f64, patience: usize, factor: f64, min_lr: f64) -> Self {
        Self {
            lr,
            patience: patience.max(1),
            factor,
            min_lr,
            best: f64::INFINITY,
            stale: 0,
        }
    }

    pub fn best(&self) -> f64 {
        self.best
    }

    pub fn stale_epochs(&self) -> usize {
        self.stale
    }

    pub fn below_floor(&self) -> bool {
        // Absorbs rounding from repeated decay, e.g. 1e-3 * 0.1^5.
        self.lr < self.min_lr * (1.0 - 1e-9)
    }

    pub fn step(&mut self, val_loss: f64) -> Step {
        if val_loss < self.best {
            self.best = val_loss;
            self.stale = 0;
            return Step::Continue;
        }
        self.stale += 1;
        if self.stale < self.patience {
            return Step::Continue;
        }
        self.stale = 0;
        self.lr *= self.factor;
        if self.below_floor() {
            Step::Stop
        } else {
            Step::Decayed
        }
    }
}
