use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{Action, StepResult};
use crate::error::Result;
use crate::geometry::Phase;

/// One JSON-lines record per environment step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub step: u32,
    pub action: Action,
    pub reward: f64,
    pub raw_reward: f64,
    pub s_a: usize,
    pub s_b: f64,
    pub score: f64,
    pub aesthetic_score: f64,
    pub phase: Phase,
}

impl TraceRecord {
    pub fn new(action: Action, result: &StepResult) -> Self {
        TraceRecord {
            step: result.info.step_index,
            action,
            reward: result.reward,
            raw_reward: result.raw_reward,
            s_a: result.info.proposal_count,
            s_b: result.info.blank_fraction,
            score: result.info.score,
            aesthetic_score: result.info.aesthetic_score,
            phase: result.info.phase,
        }
    }
}

pub fn write_trace<W: Write>(mut out: W, records: &[TraceRecord]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
