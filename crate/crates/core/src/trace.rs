use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Loss of one epoch. `holdout_loss` is present only when a holdout set is monitored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub epoch: usize,
    pub train_loss: f64,
    pub holdout_loss: Option<f64>,
}

/// Per-epoch loss log of an iterative fit.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingTrace {
    pub entries: Vec<TraceEntry>,
}

impl TrainingTrace {
    pub fn push(&mut self, entry: TraceEntry) {
        debug_assert!(self.entries.last().is_none_or(|e| e.epoch < entry.epoch));
        self.entries.push(entry);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn first(&self) -> Option<&TraceEntry> {
        self.entries.first()
    }

    pub fn last(&self) -> Option<&TraceEntry> {
        self.entries.last()
    }

    /// `epoch,train_loss,holdout_loss` CSV; the holdout cell is empty when not monitored.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,holdout_loss\n");
        for e in &self.entries {
            match e.holdout_loss {
                Some(h) => out.push_str(&format!("{},{},{}\n", e.epoch, e.train_loss, h)),
                None => out.push_str(&format!("{},{},\n", e.epoch, e.train_loss)),
            }
        }
        out
    }

    /// Checks the trace invariants: epochs strictly increasing from 0 and finite,
    /// non-negative losses.
    pub fn validate(&self) -> Result<()> {
        for (i, e) in self.entries.iter().enumerate() {
            if e.epoch != i {
                return Err(Error::Config(format!("trace epoch {} at position {i}", e.epoch)));
            }
            let ok = |l: f64| l.is_finite() && l >= 0.0;
            if !ok(e.train_loss) || !e.holdout_loss.is_none_or(ok) {
                return Err(Error::Config(format!("invalid loss at epoch {}", e.epoch)));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut t = TrainingTrace::default();
        t.push(TraceEntry { epoch: 0, train_loss: 2.5, holdout_loss: None });
        t.push(TraceEntry { epoch: 1, train_loss: 1.0, holdout_loss: Some(1.5) });
        assert_eq!(t.to_csv(), "epoch,train_loss,holdout_loss\n0,2.5,\n1,1,1.5\n");
        t.validate().unwrap();
    }
}
