//! Training loop, evaluation sweeps and run logging.

mod data;
mod evaluate;
mod rollout;
mod runlog;

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::aesthetic::PatchScorer;
use crate::agent::{a2c_loss, Adam, AgentConfig, AgentParams, Checkpoint, EpisodeRollout, Gradients, LossReport};
use crate::env::{EnvConfig, MAX_IMAGES};
use crate::error::{CollageError, Result};
use crate::geometry::ImageSet;

pub use data::{load_sets, synthetic_sets, NamedSet};
pub use evaluate::{evaluate, evaluate_method, Bucket, EvalTable, Method, SetResult, Summary};
pub use rollout::{collect_rollouts, run_episode, Decoding, EpisodeOutcome};
pub use runlog::{EpochRecord, RunLog};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub max_epoch: u32,
    pub episodes_per_epoch: usize,
    /// Episodes per gradient update.
    pub batch_size: usize,
    pub gamma: f64,
    pub entropy_weight: f64,
    pub lr: f64,
    pub weight_decay: f64,
    pub max_grad_norm: f64,
    /// Epochs `1..=sign_reward_epochs` train on `sign(r)` instead of `r`.
    pub sign_reward_epochs: u32,
    pub seed: u64,
    /// Checkpoint period in epochs.
    pub eval_every: u32,
    pub hidden: usize,
    pub lstm_layers: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_epoch: 50,
            episodes_per_epoch: 64,
            batch_size: 32,
            gamma: 0.99,
            entropy_weight: 0.01,
            lr: 1e-3,
            weight_decay: 1e-5,
            max_grad_norm: 0.5,
            sign_reward_epochs: 20,
            seed: 0,
            eval_every: 10,
            hidden: 128,
            lstm_layers: 4,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(CollageError::config(m.to_string()));
        if self.sign_reward_epochs > self.max_epoch {
            return fail("sign_reward_epochs must not exceed max_epoch");
        }
        if self.batch_size == 0 || self.episodes_per_epoch == 0 {
            return fail("batch_size and episodes_per_epoch must be at least 1");
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return fail("gamma must lie in [0, 1)");
        }
        if self.lr.is_nan()
            || self.lr <= 0.0
            || self.weight_decay < 0.0
            || self.entropy_weight < 0.0
            || self.max_grad_norm.is_nan()
            || self.max_grad_norm <= 0.0
        {
            return fail("lr and max_grad_norm must be positive; weight_decay and entropy_weight non-negative");
        }
        if self.eval_every == 0 || self.hidden == 0 || self.lstm_layers == 0 {
            return fail("eval_every, hidden and lstm_layers must be positive");
        }
        Ok(())
    }

    pub fn agent_config(&self, env: &EnvConfig) -> AgentConfig {
        AgentConfig {
            obs_dim: 2 * env.scorer.feature_dim,
            hidden: self.hidden,
            lstm_layers: self.lstm_layers,
            max_images: MAX_IMAGES,
        }
    }

    pub fn sign_rewards_at(&self, epoch: u32) -> bool {
        epoch <= self.sign_reward_epochs
    }
}

/// The reward used for returns in `epoch` (1-based).
pub fn scheduled_reward(reward: f64, epoch: u32, cfg: &TrainConfig) -> f64 {
    if cfg.sign_rewards_at(epoch) {
        if reward > 0.0 {
            1.0
        } else if reward < 0.0 {
            -1.0
        } else {
            0.0
        }
    } else {
        reward
    }
}

pub fn scheduled_rollout(rollout: &EpisodeRollout, epoch: u32, cfg: &TrainConfig) -> EpisodeRollout {
    let mut r = rollout.clone();
    for t in &mut r.transitions {
        t.reward = scheduled_reward(t.reward, epoch, cfg);
    }
    r
}

fn batch_seed(seed: u64, epoch: u32, batch: usize) -> u64 {
    seed ^ (epoch as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (batch as u64).wrapping_mul(0xD1B5_4A32_D192_ED03)
}

/// Learner state: parameters, optimizer and log.
pub struct Trainer {
    pub cfg: TrainConfig,
    pub env_cfg: EnvConfig,
    scorer: Arc<dyn PatchScorer>,
    pub params: AgentParams,
    pub optimizer: Adam,
    pub log: RunLog,
    /// Epochs run so far, including aborted ones.
    pub epoch: u32,
    pub config_hash: String,
    started: Instant,
}

impl Trainer {
    pub fn new(
        cfg: TrainConfig,
        env_cfg: EnvConfig,
        scorer: Arc<dyn PatchScorer>,
        config_hash: String,
    ) -> Result<Self> {
        cfg.validate()?;
        env_cfg.validate()?;
        if scorer.feature_dim() != env_cfg.scorer.feature_dim {
            return Err(CollageError::config(format!(
                "scorer produces {}-dim features, config says {}",
                scorer.feature_dim(),
                env_cfg.scorer.feature_dim
            )));
        }
        let params = AgentParams::new(cfg.agent_config(&env_cfg), cfg.seed)?;
        let mut optimizer = Adam::new(params.len(), cfg.lr, cfg.weight_decay);
        optimizer.max_grad_norm = cfg.max_grad_norm;
        Ok(Trainer {
            cfg,
            env_cfg,
            scorer,
            params,
            optimizer,
            log: RunLog::new(),
            epoch: 0,
            config_hash,
            started: Instant::now(),
        })
    }

    /// Continues from a checkpoint; the run log starts empty.
    pub fn resume(
        ckpt: Checkpoint,
        cfg: TrainConfig,
        env_cfg: EnvConfig,
        scorer: Arc<dyn PatchScorer>,
        config_hash: String,
    ) -> Result<Self> {
        let mut t = Trainer::new(cfg, env_cfg, scorer, config_hash)?;
        if ckpt.params.config() != t.params.config() {
            return Err(CollageError::Checkpoint("checkpoint network shape differs from the configuration".into()));
        }
        if ckpt.config_hash != t.config_hash {
            log::warn!("resuming a checkpoint trained under a different configuration");
        }
        t.params = ckpt.params;
        t.optimizer = ckpt.optimizer;
        t.epoch = ckpt.epoch;
        Ok(t)
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            params: self.params.clone(),
            optimizer: self.optimizer.clone(),
            epoch: self.epoch,
            config_hash: self.config_hash.clone(),
        }
    }

    fn update_batch(
        &mut self,
        sets: &[Arc<ImageSet>],
        n: usize,
        seed: u64,
        epoch: u32,
    ) -> Result<(Vec<crate::harness::EpisodeOutcome>, LossReport, f64)> {
        let episodes = collect_rollouts(&self.params, sets, &self.env_cfg, &self.scorer, n, seed)?;
        let rollouts: Vec<EpisodeRollout> =
            episodes.iter().map(|e| scheduled_rollout(&e.rollout, epoch, &self.cfg)).collect();
        let mut grads = Gradients::zeros_like(&self.params);
        let report = a2c_loss(&self.params, &rollouts, self.cfg.gamma, self.cfg.entropy_weight, &mut grads)?;
        let stats = self.optimizer.update(&mut self.params, &mut grads)?;
        if !self.params.is_finite() {
            return Err(CollageError::Numeric("parameters became non-finite".into()));
        }
        Ok((episodes, report, stats.grad_norm))
    }

    /// Runs one epoch: `episodes_per_epoch` sampled episodes in batches of
    /// `batch_size`, one update per batch. A numeric failure rolls the
    /// learner back to the start of the epoch and yields `None`.
    pub fn run_epoch(&mut self, sets: &[Arc<ImageSet>]) -> Result<Option<EpochRecord>> {
        let start = Instant::now();
        self.epoch += 1;
        let epoch = self.epoch;
        let snapshot = (self.params.clone(), self.optimizer.clone());

        let mut outcomes = Vec::new();
        let mut reports = Vec::new();
        let mut norms = Vec::new();
        let mut remaining = self.cfg.episodes_per_epoch;
        let mut batch = 0;
        while remaining > 0 {
            let n = remaining.min(self.cfg.batch_size);
            match self.update_batch(sets, n, batch_seed(self.cfg.seed, epoch, batch), epoch) {
                Ok((eps, report, norm)) => {
                    outcomes.extend(eps);
                    reports.push(report);
                    norms.push(norm);
                }
                Err(CollageError::Numeric(msg)) => {
                    log::warn!("epoch {epoch} aborted, parameters restored: {msg}");
                    (self.params, self.optimizer) = snapshot;
                    return Ok(None);
                }
                Err(e) => return Err(e),
            }
            remaining -= n;
            batch += 1;
        }

        let ne = outcomes.len() as f64;
        let nb = reports.len() as f64;
        let mean = |f: &dyn Fn(&crate::harness::EpisodeOutcome) -> f64| outcomes.iter().map(f).sum::<f64>() / ne;
        let rmean = |f: &dyn Fn(&LossReport) -> f64| reports.iter().map(f).sum::<f64>() / nb;
        let record = EpochRecord {
            epoch,
            episodes: outcomes.len(),
            updates: reports.len(),
            sign_rewards: self.cfg.sign_rewards_at(epoch),
            mean_return: mean(&|o| o.total_return()),
            mean_final_score: mean(&|o| o.final_score),
            mean_aesthetic_score: mean(&|o| o.final_eval.aesthetic_score),
            mean_proposal_count: mean(&|o| o.final_eval.proposal_count as f64),
            mean_blank_fraction: mean(&|o| o.final_eval.blank_fraction),
            policy_loss: rmean(&|r| r.policy_loss),
            value_loss: rmean(&|r| r.value_loss),
            entropy: rmean(&|r| r.entropy),
            total_loss: rmean(&|r| r.total),
            grad_norm: norms.iter().sum::<f64>() / nb,
            wall_time_s: start.elapsed().as_secs_f64(),
            elapsed_s: self.started.elapsed().as_secs_f64(),
        };
        log::info!(
            "epoch {epoch}: return {:.3}, aesthetic {:.2}, proposals {:.2}, loss {:.4}",
            record.mean_return,
            record.mean_aesthetic_score,
            record.mean_proposal_count,
            record.total_loss
        );
        self.log.push(record.clone())?;
        Ok(Some(record))
    }

    /// Runs the remaining epochs up to `max_epoch`. With a checkpoint
    /// directory, writes `epoch_NNNN.ckpt` every `eval_every` epochs and
    /// `agent.ckpt` at the end.
    pub fn train(&mut self, sets: &[Arc<ImageSet>], checkpoint_dir: Option<&Path>) -> Result<()> {
        if sets.is_empty() {
            return Err(CollageError::invalid_input("training needs at least one image set"));
        }
        while self.epoch < self.cfg.max_epoch {
            self.run_epoch(sets)?;
            if let Some(dir) = checkpoint_dir {
                if self.epoch.is_multiple_of(self.cfg.eval_every) {
                    self.checkpoint().save(&dir.join(format!("epoch_{:04}.ckpt", self.epoch)))?;
                }
            }
        }
        if let Some(dir) = checkpoint_dir {
            self.checkpoint().save(&dir.join("agent.ckpt"))?;
        }
        Ok(())
    }
}

/// Trains from scratch and returns the final parameters and the log.
pub fn train(
    cfg: &TrainConfig,
    env_cfg: &EnvConfig,
    scorer: Arc<dyn PatchScorer>,
    sets: &[Arc<ImageSet>],
    checkpoint_dir: Option<&Path>,
) -> Result<(AgentParams, RunLog)> {
    let mut t = Trainer::new(cfg.clone(), env_cfg.clone(), scorer, String::new())?;
    t.train(sets, checkpoint_dir)?;
    Ok((t.params, t.log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aesthetic::HeuristicScorer;
    use crate::synth::synthetic_set;

    #[test]
    fn sign_schedule_boundary() {
        let cfg = TrainConfig::default();
        assert_eq!(scheduled_reward(1.99, 10, &cfg), 1.0);
        assert_eq!(scheduled_reward(1.99, 30, &cfg), 1.99);
        assert_eq!(scheduled_reward(-0.3, 20, &cfg), -1.0);
        assert_eq!(scheduled_reward(-0.3, 21, &cfg), -0.3);
        assert_eq!(scheduled_reward(0.0, 1, &cfg), 0.0);
    }

    #[test]
    fn defaults_and_validation() {
        let c = TrainConfig::default();
        assert_eq!((c.max_epoch, c.batch_size, c.sign_reward_epochs), (50, 32, 20));
        assert_eq!((c.gamma, c.lr, c.weight_decay, c.entropy_weight), (0.99, 1e-3, 1e-5, 0.01));
        c.validate().unwrap();
        assert!(TrainConfig { sign_reward_epochs: 51, ..c.clone() }.validate().is_err());
        assert!(TrainConfig { batch_size: 0, ..c.clone() }.validate().is_err());
        assert!(TrainConfig { gamma: 1.0, ..c }.validate().is_err());
    }

    fn tiny() -> (TrainConfig, EnvConfig, Arc<dyn PatchScorer>, Vec<Arc<ImageSet>>) {
        let cfg = TrainConfig {
            max_epoch: 2,
            episodes_per_epoch: 3,
            batch_size: 2,
            sign_reward_epochs: 1,
            hidden: 8,
            lstm_layers: 1,
            ..TrainConfig::default()
        };
        let env =
            EnvConfig { canvas_long_side: 64, autocrop: false, max_step: 4, layout_budget: 2, ..EnvConfig::default() };
        let sets = vec![Arc::new(synthetic_set(1, 3).unwrap()), Arc::new(synthetic_set(2, 2).unwrap())];
        (cfg, env, Arc::new(HeuristicScorer::default()), sets)
    }

    #[test]
    fn zero_epochs_leave_params_untouched() {
        let (cfg, env, scorer, sets) = tiny();
        let cfg = TrainConfig { max_epoch: 0, sign_reward_epochs: 0, ..cfg };
        let init = AgentParams::new(cfg.agent_config(&env), cfg.seed).unwrap();
        let (p, log) = train(&cfg, &env, scorer, &sets, None).unwrap();
        assert_eq!(p, init);
        assert!(log.is_empty());
    }

    #[test]
    fn training_is_reproducible_and_logs_each_epoch() {
        let (cfg, env, scorer, sets) = tiny();
        let (a, log_a) = train(&cfg, &env, scorer.clone(), &sets, None).unwrap();
        let (b, log_b) = train(&cfg, &env, scorer, &sets, None).unwrap();
        assert_eq!(a, b);
        assert_eq!(log_a.len(), 2);
        let strip = |l: &RunLog| {
            let mut buf = Vec::new();
            l.write_csv(&mut buf).unwrap();
            buf
        };
        assert_eq!(strip(&log_a), strip(&log_b));
        let r = &log_a.records()[0];
        assert_eq!((r.episodes, r.updates, r.sign_rewards), (3, 2, true));
        assert!(!log_a.records()[1].sign_rewards);
    }

    #[test]
    fn rollouts_are_seed_deterministic() {
        let (cfg, env, scorer, sets) = tiny();
        let p = AgentParams::new(cfg.agent_config(&env), 3).unwrap();
        let a = collect_rollouts(&p, &sets, &env, &scorer, 3, 17).unwrap();
        let b = collect_rollouts(&p, &sets, &env, &scorer, 3, 17).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.rollout, y.rollout);
            assert_eq!(x.set_index, y.set_index);
        }
        let one = &a[0].rollout.transitions;
        assert_eq!(one.len(), 4);
        assert!(one.last().unwrap().done && one.iter().rev().skip(1).all(|t| !t.done));
        assert!(one.iter().all(|t| t.log_prob <= 0.0 && t.value.is_finite()));
    }
}
