use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{CollageError, Result};

/// Metrics of one completed training epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: u32,
    pub episodes: usize,
    pub updates: usize,
    pub sign_rewards: bool,
    /// Mean undiscounted return with raw (unsigned) rewards.
    pub mean_return: f64,
    pub mean_final_score: f64,
    pub mean_aesthetic_score: f64,
    pub mean_proposal_count: f64,
    pub mean_blank_fraction: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub total_loss: f64,
    pub grad_norm: f64,
    /// Seconds spent in this epoch.
    #[serde(skip)]
    pub wall_time_s: f64,
    /// Seconds since training started, at the end of this epoch.
    #[serde(skip)]
    pub elapsed_s: f64,
}

/// Append-only per-epoch training log. Timing columns are kept apart from
/// the metric files so those stay byte-reproducible.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunLog {
    records: Vec<EpochRecord>,
}

#[derive(Serialize)]
struct TimingRow {
    epoch: u32,
    wall_time_s: f64,
    elapsed_s: f64,
}

impl RunLog {
    pub fn new() -> Self {
        RunLog::default()
    }

    pub fn push(&mut self, record: EpochRecord) -> Result<()> {
        if let Some(last) = self.records.last() {
            if record.epoch <= last.epoch || record.elapsed_s < last.elapsed_s {
                return Err(CollageError::invalid_input(format!(
                    "run log rows must advance: epoch {} after {}",
                    record.epoch, last.epoch
                )));
            }
        }
        self.records.push(record);
        Ok(())
    }

    pub fn records(&self) -> &[EpochRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.records {
            w.serialize(r).map_err(csv_err)?;
        }
        if self.records.is_empty() {
            w.write_record(CSV_HEADER).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, mut out: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut out, &self.records).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
        Ok(())
    }

    pub fn write_timing_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.records {
            w.serialize(TimingRow { epoch: r.epoch, wall_time_s: r.wall_time_s, elapsed_s: r.elapsed_s })
                .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

const CSV_HEADER: [&str; 14] = [
    "epoch",
    "episodes",
    "updates",
    "sign_rewards",
    "mean_return",
    "mean_final_score",
    "mean_aesthetic_score",
    "mean_proposal_count",
    "mean_blank_fraction",
    "policy_loss",
    "value_loss",
    "entropy",
    "total_loss",
    "grad_norm",
];

pub(crate) fn csv_err(e: csv::Error) -> CollageError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CollageError::Io(io),
        other => CollageError::invalid_input(format!("csv: {other:?}")),
    }
}
