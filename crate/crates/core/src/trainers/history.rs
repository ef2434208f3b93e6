use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One probe-set evaluation during training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryRecord {
    /// SGD steps completed (per member) when the probe was taken.
    pub iteration: usize,
    pub oracle_loss: f64,
    pub member_losses: Vec<f64>,
    pub learning_rate: f64,
}

/// Probe curve of a training run plus members that went an epoch without a win.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub records: Vec<HistoryRecord>,
    /// `(epoch, member)` pairs where the member won no example for a whole epoch.
    #[serde(default)]
    pub starved: Vec<(usize, usize)>,
}

impl TrainHistory {
    pub(crate) fn push(&mut self, record: HistoryRecord) {
        debug_assert!(self.records.last().is_none_or(|r| r.iteration < record.iteration));
        self.records.push(record);
    }

    pub fn last(&self) -> Option<&HistoryRecord> {
        self.records.last()
    }

    /// Writes `iteration,oracle_loss,member_0_loss,...,learning_rate`.
    ///
    /// Members absent at a record (sequential training) leave their cells empty.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let members = self.records.iter().map(|r| r.member_losses.len()).max().unwrap_or(0);
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["iteration".to_string(), "oracle_loss".to_string()];
        header.extend((0..members).map(|m| format!("member_{m}_loss")));
        header.push("learning_rate".into());
        out.write_record(&header)?;
        for r in &self.records {
            let mut row = vec![r.iteration.to_string(), r.oracle_loss.to_string()];
            row.extend((0..members).map(|m| r.member_losses.get(m).map_or(String::new(), f64::to_string)));
            row.push(r.learning_rate.to_string());
            out.write_record(&row)?;
        }
        out.flush().map_err(|e| Error::io("writing history", e))
    }
}
