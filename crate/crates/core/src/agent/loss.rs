use serde::{Deserialize, Serialize};

use super::policy::distribution_from_logits;
use super::{action_to_indices, AgentParams, Gradients, Head, RecurrentState, Transition};
use crate::error::{CollageError, Result};

/// Discounted returns, computed backwards; a `done` step cuts the
/// bootstrap chain.
pub fn compute_returns(rewards: &[f64], dones: &[bool], bootstrap: f64, gamma: f64) -> Vec<f64> {
    let mut out = vec![0.0; rewards.len()];
    let mut next = bootstrap;
    for t in (0..rewards.len()).rev() {
        if dones[t] {
            next = 0.0;
        }
        next = rewards[t] + gamma * next;
        out[t] = next;
    }
    out
}

/// A recorded episode (or episode prefix) starting from the zero
/// recurrent state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRollout {
    pub transitions: Vec<Transition>,
    /// Value estimate after the last transition; ignored if it is terminal.
    pub bootstrap: f64,
}

impl EpisodeRollout {
    pub fn returns(&self, gamma: f64) -> Vec<f64> {
        let rewards: Vec<f64> = self.transitions.iter().map(|t| t.reward).collect();
        let dones: Vec<bool> = self.transitions.iter().map(|t| t.done).collect();
        compute_returns(&rewards, &dones, self.bootstrap, gamma)
    }

    pub fn total_reward(&self) -> f64 {
        self.transitions.iter().map(|t| t.reward).sum()
    }
}

/// Loss terms averaged over all transitions of a batch.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub total: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub mean_advantage: f64,
    pub transitions: usize,
}

/// Actor-critic loss `-A log pi(a) + (R - V)^2 - beta H`, averaged over
/// the batch, with its gradient accumulated into `grads`. The advantage
/// `R - V` is held constant when differentiating.
pub fn a2c_loss(
    params: &AgentParams,
    episodes: &[EpisodeRollout],
    gamma: f64,
    entropy_coef: f64,
    grads: &mut Gradients,
) -> Result<LossReport> {
    a2c_loss_with_advantages(params, episodes, gamma, entropy_coef, None, Some(grads)).map(|(r, _)| r)
}

/// As [`a2c_loss`], optionally with externally fixed advantages (indexed
/// `[episode][step]`). Returns the advantages that were used.
pub fn a2c_loss_with_advantages(
    params: &AgentParams,
    episodes: &[EpisodeRollout],
    gamma: f64,
    entropy_coef: f64,
    frozen_advantages: Option<&[Vec<f64>]>,
    mut grads: Option<&mut Gradients>,
) -> Result<(LossReport, Vec<Vec<f64>>)> {
    let cfg = params.config();
    let n: usize = episodes.iter().map(|e| e.transitions.len()).sum();
    if n == 0 {
        return Err(CollageError::invalid_input("loss over an empty batch"));
    }
    let scale = 1.0 / n as f64;
    let mut report = LossReport { transitions: n, ..LossReport::default() };
    let mut all_adv = Vec::with_capacity(episodes.len());

    for (e, ep) in episodes.iter().enumerate() {
        let returns = ep.returns(gamma);
        let mut state = RecurrentState::zeros(cfg);
        let mut caches = Vec::with_capacity(ep.transitions.len());
        let mut dlogits = Vec::with_capacity(ep.transitions.len());
        let mut dvalue = Vec::with_capacity(ep.transitions.len());
        let mut advs = Vec::with_capacity(ep.transitions.len());

        for (t, tr) in ep.transitions.iter().enumerate() {
            let (out, cache) = params.forward_cached(&tr.observation.0, &state)?;
            let dist = distribution_from_logits(&out.logits, &tr.mask)?;
            let idx = action_to_indices(&tr.action, cfg)?;
            let log_prob = dist.log_prob(&tr.action, cfg)?;
            if !log_prob.is_finite() {
                return Err(CollageError::Numeric(format!(
                    "episode {e} step {t}: recorded action {:?} has zero probability",
                    tr.action
                )));
            }
            let value = out.value;
            let adv = frozen_advantages.map_or(returns[t] - value, |a| a[e][t]);
            let entropy = dist.entropy();
            report.policy_loss += -adv * log_prob * scale;
            report.value_loss += (returns[t] - value).powi(2) * scale;
            report.entropy += entropy * scale;
            report.mean_advantage += adv * scale;

            let mut dl: Vec<Vec<f64>> = Head::ALL.iter().map(|&h| vec![0.0; cfg.head_size(h)]).collect();
            for ((head, c), &a) in dist.heads().into_iter().zip(&idx) {
                let h_head = c.entropy();
                let d = &mut dl[head.index()];
                for (k, dk) in d.iter_mut().enumerate() {
                    let p = c.probs[k];
                    if p == 0.0 {
                        continue;
                    }
                    let onehot = if k == a { 1.0 } else { 0.0 };
                    *dk = scale * (adv * (p - onehot) + entropy_coef * p * (c.log_probs[k] + h_head));
                }
            }
            dlogits.push(dl);
            dvalue.push(-2.0 * scale * (returns[t] - value));
            advs.push(adv);
            caches.push(cache);
            state = out.state;
        }
        if let Some(g) = grads.as_deref_mut() {
            params.backward(&caches, &dlogits, &dvalue, g);
        }
        all_adv.push(advs);
    }
    report.total = report.policy_loss + report.value_loss - entropy_coef * report.entropy;
    if !report.total.is_finite() {
        return Err(CollageError::Numeric(format!("non-finite loss: {report:?}")));
    }
    Ok((report, all_adv))
}
