use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::aesthetic::PatchScorer;
use crate::agent::{
    greedy_action, policy_forward, sample_action, ActionMask, AgentParams, EpisodeRollout, RecurrentState, Transition,
};
use crate::env::{CollageEnv, CollageEvaluation, EnvConfig, TraceRecord};
use crate::error::{CollageError, Result};
use crate::geometry::{CollageState, ImageSet};

/// How actions are chosen from the policy.
pub enum Decoding<'a> {
    Greedy,
    Sample(&'a mut ChaCha8Rng),
}

#[derive(Debug, Clone)]
pub struct EpisodeOutcome {
    pub set_index: usize,
    pub rollout: EpisodeRollout,
    pub trace: Vec<TraceRecord>,
    pub initial_score: f64,
    pub final_score: f64,
    pub final_state: CollageState,
    pub final_eval: CollageEvaluation,
}

impl EpisodeOutcome {
    pub fn total_return(&self) -> f64 {
        self.rollout.total_reward()
    }
}

/// Runs one full episode from the environment's reset state with a fresh
/// recurrent state.
pub fn run_episode(params: &AgentParams, env: &mut CollageEnv, mut decoding: Decoding<'_>) -> Result<EpisodeOutcome> {
    let cfg = params.config();
    let (_, mut obs) = env.reset()?;
    let initial_score = env.score();
    let mut rstate = RecurrentState::zeros(cfg);
    let mut transitions = Vec::with_capacity(env.config().max_step as usize);
    let mut trace = Vec::with_capacity(env.config().max_step as usize);
    while !env.is_done() {
        let mask = ActionMask::new(env.state().phase, env.num_images(), cfg)?;
        let out = policy_forward(params, &obs, &rstate, &mask)?;
        let (action, log_prob) = match &mut decoding {
            Decoding::Greedy => {
                let a = greedy_action(&out.distribution, cfg);
                (a, out.distribution.log_prob(&a, cfg)?)
            }
            Decoding::Sample(rng) => sample_action(&out.distribution, cfg, &mut **rng),
        };
        let (_, result) = env.step(action)?;
        trace.push(TraceRecord::new(action, &result));
        transitions.push(Transition {
            observation: obs,
            mask,
            action,
            log_prob,
            value: out.value,
            reward: result.reward,
            done: result.done,
        });
        obs = result.observation;
        rstate = out.state;
    }
    let f = env.feature();
    Ok(EpisodeOutcome {
        set_index: 0,
        rollout: EpisodeRollout { transitions, bootstrap: 0.0 },
        trace,
        initial_score,
        final_score: env.score(),
        final_state: env.state().clone(),
        final_eval: CollageEvaluation {
            aesthetic_score: f.aesthetic_score,
            proposal_count: f.proposal_count,
            blank_fraction: f.blank_fraction,
        },
    })
}

/// Samples `n_episodes` episodes. Episode `k` draws its image set and its
/// actions from stream `k` of a generator seeded with `seed`, so the
/// result does not depend on how episodes are spread over threads.
/// Environment failures drop the episode with a warning; numeric failures
/// of the agent abort the whole collection.
pub fn collect_rollouts(
    params: &AgentParams,
    sets: &[Arc<ImageSet>],
    env_cfg: &EnvConfig,
    scorer: &Arc<dyn PatchScorer>,
    n_episodes: usize,
    seed: u64,
) -> Result<Vec<EpisodeOutcome>> {
    if sets.is_empty() {
        return Err(CollageError::invalid_input("no image sets to train on"));
    }
    let results: Vec<Result<EpisodeOutcome>> = (0..n_episodes)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let set_index = rand::Rng::gen_range(&mut rng, 0..sets.len());
            let mut env = CollageEnv::new(sets[set_index].clone(), env_cfg.clone(), scorer.clone())?;
            let mut out = run_episode(params, &mut env, Decoding::Sample(&mut rng))?;
            out.set_index = set_index;
            Ok(out)
        })
        .collect();

    let mut episodes = Vec::with_capacity(n_episodes);
    let mut first_err = None;
    for (k, r) in results.into_iter().enumerate() {
        match r {
            Ok(e) => episodes.push(e),
            Err(e @ CollageError::Numeric(_)) => return Err(e),
            Err(e) => {
                log::warn!("episode {k} skipped: {e}");
                first_err.get_or_insert(e);
            }
        }
    }
    match first_err {
        Some(e) if episodes.is_empty() => Err(e),
        _ => Ok(episodes),
    }
}
