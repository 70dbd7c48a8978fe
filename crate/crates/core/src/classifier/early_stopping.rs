/// Patience-based early stopping on a monitored loss.
///
/// An epoch improves when its loss is lower than the best so far by more
/// than `min_delta`. Training stops after `patience` consecutive epochs
/// without improvement.
#[derive(Clone, Debug, PartialEq)]
pub struct EarlyStopping {
    pub min_delta: f64,
    pub patience: usize,
    best: Option<f64>,
    best_epoch: usize,
    epochs_seen: usize,
    wait: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Decision {
    Improved,
    Continue,
    Stop,
}

impl EarlyStopping {
    pub fn new(min_delta: f64, patience: usize) -> Self {
        EarlyStopping {
            min_delta,
            patience,
            best: None,
            best_epoch: 0,
            epochs_seen: 0,
            wait: 0,
        }
    }

    /// Records the loss of the next epoch (epochs are numbered from 1).
    pub fn observe(&mut self, loss: f64) -> Decision {
        self.epochs_seen += 1;
        let improved = match self.best {
            None => true,
            Some(best) => best - loss > self.min_delta,
        };
        if improved {
            self.best = Some(loss);
            self.best_epoch = self.epochs_seen;
            self.wait = 0;
            return Decision::Improved;
        }
        self.wait += 1;
        if self.wait >= self.patience {
            Decision::Stop
        } else {
            Decision::Continue
        }
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }

    pub fn best_loss(&self) -> Option<f64> {
        self.best
    }
}

/// Replays a loss sequence; returns `(stop epoch, best epoch)`, where the
/// stop epoch is `None` if the sequence never triggers a stop.
pub fn simulate(losses: &[f64], min_delta: f64, patience: usize) -> (Option<usize>, usize) {
    let mut es = EarlyStopping::new(min_delta, patience);
    for (i, &l) in losses.iter().enumerate() {
        if es.observe(l) == Decision::Stop {
            return (Some(i + 1), es.best_epoch());
        }
    }
    (None, es.best_epoch())
}
