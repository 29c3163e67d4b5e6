use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::NamedSet;
use super::rollout::{run_episode, Decoding};
use super::runlog::csv_err;
use crate::aesthetic::PatchScorer;
use crate::agent::AgentParams;
use crate::env::{quick_init_baseline, CollageEnv, EnvConfig, Evaluator};
use crate::error::{CollageError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Baseline,
    Agent,
    AgentNoAttention,
    AgentNoAutocrop,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Baseline, Method::Agent, Method::AgentNoAttention, Method::AgentNoAutocrop];

    pub fn name(self) -> &'static str {
        match self {
            Method::Baseline => "baseline",
            Method::Agent => "agent",
            Method::AgentNoAttention => "agent_no_attention",
            Method::AgentNoAutocrop => "agent_no_autocrop",
        }
    }

    pub fn needs_agent(self) -> bool {
        self != Method::Baseline
    }

    /// The environment configuration this method runs under.
    pub fn env_config(self, base: &EnvConfig) -> EnvConfig {
        let mut cfg = base.clone();
        match self {
            Method::AgentNoAttention => cfg.scorer.attention = false,
            Method::AgentNoAutocrop => cfg.autocrop = false,
            Method::Baseline | Method::Agent => {}
        }
        cfg
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = CollageError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Method::ALL.iter().map(|m| m.name()).collect();
            CollageError::invalid_input(format!("unknown method `{s}`; expected one of {}", names.join(", ")))
        })
    }
}

/// Input-size buckets of the comparison table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Bucket {
    UpTo6,
    UpTo8,
    Under15,
}

impl Bucket {
    pub const ALL: [Bucket; 3] = [Bucket::UpTo6, Bucket::UpTo8, Bucket::Under15];

    pub fn of(num_images: usize) -> Bucket {
        match num_images {
            0..=6 => Bucket::UpTo6,
            7..=8 => Bucket::UpTo8,
            _ => Bucket::Under15,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Bucket::UpTo6 => "6",
            Bucket::UpTo8 => "8",
            Bucket::Under15 => "lt15",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetResult {
    pub method: Method,
    pub set: String,
    pub images: usize,
    pub bucket: Bucket,
    pub aesthetic_score: f64,
    pub proposal_count: usize,
    pub blank_fraction: f64,
    pub score: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvalTable {
    pub results: Vec<SetResult>,
}

/// Mean proposal count and aesthetic score over some results.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub sets: usize,
    pub proposal_number: f64,
    pub aesthetic_score: f64,
}

#[derive(Serialize)]
struct WideRow {
    method: &'static str,
    sets: usize,
    proposal_number_6: Option<f64>,
    proposal_number_8: Option<f64>,
    proposal_number_lt15: Option<f64>,
    proposal_number_all: f64,
    aesthetic_score_6: Option<f64>,
    aesthetic_score_8: Option<f64>,
    aesthetic_score_lt15: Option<f64>,
    aesthetic_score_all: f64,
}

impl EvalTable {
    pub fn methods(&self) -> Vec<Method> {
        let mut m: Vec<Method> = Vec::new();
        for r in &self.results {
            if !m.contains(&r.method) {
                m.push(r.method);
            }
        }
        m
    }

    pub fn summary(&self, method: Method, bucket: Option<Bucket>) -> Option<Summary> {
        let rows: Vec<&SetResult> =
            self.results.iter().filter(|r| r.method == method && bucket.is_none_or(|b| r.bucket == b)).collect();
        if rows.is_empty() {
            return None;
        }
        let n = rows.len() as f64;
        Some(Summary {
            sets: rows.len(),
            proposal_number: rows.iter().map(|r| r.proposal_count as f64).sum::<f64>() / n,
            aesthetic_score: rows.iter().map(|r| r.aesthetic_score).sum::<f64>() / n,
        })
    }

    pub fn mean_aesthetic(&self, method: Method) -> Option<f64> {
        self.summary(method, None).map(|s| s.aesthetic_score)
    }

    /// One row per method: proposal number and aesthetic score per
    /// input-size bucket, then over all sets.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for method in self.methods() {
            let all = self.summary(method, None).expect("method has rows");
            let b = |bucket| self.summary(method, Some(bucket));
            let row = WideRow {
                method: method.name(),
                sets: all.sets,
                proposal_number_6: b(Bucket::UpTo6).map(|s| s.proposal_number),
                proposal_number_8: b(Bucket::UpTo8).map(|s| s.proposal_number),
                proposal_number_lt15: b(Bucket::Under15).map(|s| s.proposal_number),
                proposal_number_all: all.proposal_number,
                aesthetic_score_6: b(Bucket::UpTo6).map(|s| s.aesthetic_score),
                aesthetic_score_8: b(Bucket::UpTo8).map(|s| s.aesthetic_score),
                aesthetic_score_lt15: b(Bucket::Under15).map(|s| s.aesthetic_score),
                aesthetic_score_all: all.aesthetic_score,
            };
            w.serialize(row).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Every per-set result, one row each.
    pub fn write_sets_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.results {
            w.serialize(r).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Evaluates one method on every set. Agent methods decode greedily from
/// the strip-packed start; the baseline is the quick-initialization layout
/// as is.
pub fn evaluate_method(
    params: Option<&AgentParams>,
    method: Method,
    sets: &[NamedSet],
    env_cfg: &EnvConfig,
    scorer: &Arc<dyn PatchScorer>,
) -> Result<Vec<SetResult>> {
    let cfg = method.env_config(env_cfg);
    let agent = if method.needs_agent() {
        let p = params
            .ok_or_else(|| CollageError::invalid_input(format!("method `{method}` needs an agent checkpoint")))?;
        Some(p)
    } else {
        None
    };
    sets.par_iter()
        .map(|set| {
            let (eval, score) = match agent {
                Some(p) => {
                    let mut env = CollageEnv::new(set.images.clone(), cfg.clone(), scorer.clone())?;
                    let out = run_episode(p, &mut env, Decoding::Greedy)?;
                    (out.final_eval, out.final_score)
                }
                None => {
                    let ev = Evaluator::new(scorer.clone(), &cfg);
                    let state = quick_init_baseline(&set.images, &cfg, &ev)?;
                    let eval = ev.evaluate(&state, &set.images)?;
                    let score = ev.score(&ev.assess(&state, &set.images)?);
                    (eval, score)
                }
            };
            Ok(SetResult {
                method,
                set: set.name.clone(),
                images: set.images.len(),
                bucket: Bucket::of(set.images.len()),
                aesthetic_score: eval.aesthetic_score,
                proposal_count: eval.proposal_count,
                blank_fraction: eval.blank_fraction,
                score,
            })
        })
        .collect()
}

pub fn evaluate(
    params: Option<&AgentParams>,
    methods: &[Method],
    sets: &[NamedSet],
    env_cfg: &EnvConfig,
    scorer: &Arc<dyn PatchScorer>,
) -> Result<EvalTable> {
    let mut results = Vec::new();
    for &m in methods {
        results.extend(evaluate_method(params, m, sets, env_cfg, scorer)?);
    }
    Ok(EvalTable { results })
}
