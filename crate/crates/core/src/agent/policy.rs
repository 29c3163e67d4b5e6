use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{AgentConfig, AgentParams, Head, RecurrentState};
use crate::env::{Action, Observation};
use crate::error::{CollageError, Result};
use crate::geometry::Phase;

/// Legal actions for one step. Detail option heads are always fully legal;
/// only the image and layout heads depend on the number of images.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionMask {
    pub phase: Phase,
    /// Over `[pairs of max_images..., terminate]`.
    pub layout: Vec<bool>,
    pub image: Vec<bool>,
}

impl ActionMask {
    pub fn new(phase: Phase, num_images: usize, cfg: &AgentConfig) -> Result<Self> {
        if num_images < 2 || num_images > cfg.max_images {
            return Err(CollageError::invalid_input(format!(
                "agent handles 2..={} images, got {num_images}",
                cfg.max_images
            )));
        }
        let m = cfg.max_images;
        let mut layout = Vec::with_capacity(cfg.num_pairs() + 1);
        for i in 0..m {
            for j in i + 1..m {
                layout.push(j < num_images);
            }
        }
        layout.push(true);
        let image = (0..m).map(|k| k < num_images).collect();
        Ok(ActionMask { phase, layout, image })
    }

    fn head(&self, head: Head) -> Option<&[bool]> {
        match head {
            Head::Layout => Some(&self.layout),
            Head::Image => Some(&self.image),
            _ => None,
        }
    }
}

/// A categorical distribution over the legal entries of one head.
#[derive(Debug, Clone, PartialEq)]
pub struct Categorical {
    pub probs: Vec<f64>,
    /// `-inf` for masked entries.
    pub log_probs: Vec<f64>,
}

impl Categorical {
    pub fn masked_softmax(logits: &[f64], mask: Option<&[bool]>) -> Result<Self> {
        let legal = |k: usize| mask.is_none_or(|m| m[k]);
        if let Some(m) = mask {
            if m.len() != logits.len() {
                return Err(CollageError::InvalidMask("mask length differs from head size"));
            }
            if !m.iter().any(|&b| b) {
                return Err(CollageError::InvalidMask("no legal action"));
            }
        }
        let max = (0..logits.len()).filter(|&k| legal(k)).map(|k| logits[k]).fold(f64::NEG_INFINITY, f64::max);
        let log_z = max + (0..logits.len()).filter(|&k| legal(k)).map(|k| (logits[k] - max).exp()).sum::<f64>().ln();
        let log_probs: Vec<f64> =
            (0..logits.len()).map(|k| if legal(k) { logits[k] - log_z } else { f64::NEG_INFINITY }).collect();
        let probs = log_probs.iter().map(|lp| lp.exp()).collect();
        Ok(Categorical { probs, log_probs })
    }

    pub fn entropy(&self) -> f64 {
        self.probs.iter().zip(&self.log_probs).filter(|(p, _)| **p > 0.0).map(|(p, lp)| -p * lp).sum()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut last = 0;
        for (k, &p) in self.probs.iter().enumerate() {
            if p > 0.0 {
                acc += p;
                last = k;
                if u < acc {
                    return k;
                }
            }
        }
        last
    }

    /// Most probable entry, lowest index on ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (k, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = k;
            }
        }
        best
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PolicyDistribution {
    Layout(Categorical),
    /// Image, dx, dy, layer and angle heads, sampled independently.
    Detail([Categorical; 5]),
}

impl PolicyDistribution {
    /// Joint entropy; for detail steps the sum over the factors.
    pub fn entropy(&self) -> f64 {
        match self {
            PolicyDistribution::Layout(c) => c.entropy(),
            PolicyDistribution::Detail(cs) => cs.iter().map(Categorical::entropy).sum(),
        }
    }

    pub fn log_prob(&self, action: &Action, cfg: &AgentConfig) -> Result<f64> {
        let idx = action_to_indices(action, cfg)?;
        let lp = match self {
            PolicyDistribution::Layout(c) if action.phase() == Phase::Layout => c.log_probs[idx[0]],
            PolicyDistribution::Detail(cs) if action.phase() == Phase::Detail => {
                cs.iter().zip(&idx).map(|(c, &k)| c.log_probs[k]).sum()
            }
            _ => return Err(CollageError::InvalidAction(format!("{action:?} does not match the distribution phase"))),
        };
        Ok(lp)
    }

    /// Distributions in head order, paired with their heads.
    pub fn heads(&self) -> Vec<(Head, &Categorical)> {
        match self {
            PolicyDistribution::Layout(c) => vec![(Head::Layout, c)],
            PolicyDistribution::Detail(cs) => Head::DETAIL.iter().copied().zip(cs.iter()).collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PolicyOutput {
    pub distribution: PolicyDistribution,
    pub value: f64,
    pub state: RecurrentState,
}

pub(crate) fn distribution_from_logits(logits: &[Vec<f64>], mask: &ActionMask) -> Result<PolicyDistribution> {
    let head = |h: Head| Categorical::masked_softmax(&logits[h.index()], mask.head(h));
    Ok(match mask.phase {
        Phase::Layout => PolicyDistribution::Layout(head(Head::Layout)?),
        Phase::Detail => PolicyDistribution::Detail([
            head(Head::Image)?,
            head(Head::Dx)?,
            head(Head::Dy)?,
            head(Head::Layer)?,
            head(Head::Angle)?,
        ]),
    })
}

pub fn policy_forward(
    params: &AgentParams,
    obs: &Observation,
    state: &RecurrentState,
    mask: &ActionMask,
) -> Result<PolicyOutput> {
    let out = params.forward(&obs.0, state)?;
    let distribution = distribution_from_logits(&out.logits, mask)?;
    Ok(PolicyOutput { distribution, value: out.value, state: out.state })
}

fn pair_index(i: usize, j: usize, m: usize) -> usize {
    i * m - i * (i + 1) / 2 + (j - i - 1)
}

/// Head indices of an action: one for layout actions, five for detail.
pub fn action_to_indices(action: &Action, cfg: &AgentConfig) -> Result<Vec<usize>> {
    let m = cfg.max_images;
    match *action {
        Action::Switch(a, b) => {
            let (i, j) = (a.min(b), a.max(b));
            if i == j || j >= m {
                return Err(CollageError::InvalidAction(format!("{action:?} is not a pair below {m}")));
            }
            Ok(vec![pair_index(i, j, m)])
        }
        Action::Terminate => Ok(vec![cfg.num_pairs()]),
        Action::Detail { image, dx, dy, layer, angle } => {
            let idx = vec![image, dx, dy, layer, angle];
            if Head::DETAIL.iter().zip(&idx).any(|(&h, &k)| k >= cfg.head_size(h)) {
                return Err(CollageError::InvalidAction(format!("{action:?} has an index out of range")));
            }
            Ok(idx)
        }
    }
}

pub fn layout_index_to_action(k: usize, cfg: &AgentConfig) -> Action {
    let m = cfg.max_images;
    if k >= cfg.num_pairs() {
        return Action::Terminate;
    }
    let mut rest = k;
    for i in 0..m {
        let row = m - i - 1;
        if rest < row {
            return Action::Switch(i, i + 1 + rest);
        }
        rest -= row;
    }
    unreachable!("index below the pair count")
}

fn indices_to_action(dist: &PolicyDistribution, idx: &[usize], cfg: &AgentConfig) -> Action {
    match dist {
        PolicyDistribution::Layout(_) => layout_index_to_action(idx[0], cfg),
        PolicyDistribution::Detail(_) => {
            Action::Detail { image: idx[0], dx: idx[1], dy: idx[2], layer: idx[3], angle: idx[4] }
        }
    }
}

/// Draws an action and returns it with its log-probability.
pub fn sample_action<R: Rng + ?Sized>(dist: &PolicyDistribution, cfg: &AgentConfig, rng: &mut R) -> (Action, f64) {
    let mut idx = Vec::with_capacity(5);
    let mut lp = 0.0;
    for (_, c) in dist.heads() {
        let k = c.sample(rng);
        lp += c.log_probs[k];
        idx.push(k);
    }
    (indices_to_action(dist, &idx, cfg), lp)
}

pub fn greedy_action(dist: &PolicyDistribution, cfg: &AgentConfig) -> Action {
    let idx: Vec<usize> = dist.heads().iter().map(|(_, c)| c.argmax()).collect();
    indices_to_action(dist, &idx, cfg)
}

/// One step of experience.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub observation: Observation,
    pub mask: ActionMask,
    pub action: Action,
    pub log_prob: f64,
    pub value: f64,
    pub reward: f64,
    pub done: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg() -> AgentConfig {
        AgentConfig { obs_dim: 4, hidden: 6, lstm_layers: 1, max_images: 5 }
    }

    #[test]
    fn pair_indices_round_trip() {
        let c = cfg();
        let mut k = 0;
        for i in 0..5 {
            for j in i + 1..5 {
                assert_eq!(action_to_indices(&Action::Switch(i, j), &c).unwrap(), vec![k]);
                assert_eq!(action_to_indices(&Action::Switch(j, i), &c).unwrap(), vec![k]);
                assert_eq!(layout_index_to_action(k, &c), Action::Switch(i, j));
                k += 1;
            }
        }
        assert_eq!(k, c.num_pairs());
        assert_eq!(layout_index_to_action(k, &c), Action::Terminate);
        assert!(action_to_indices(&Action::Switch(2, 2), &c).is_err());
        assert!(action_to_indices(&Action::Switch(0, 5), &c).is_err());
    }

    #[test]
    fn mask_marks_pairs_within_the_set() {
        let m = ActionMask::new(Phase::Layout, 3, &cfg()).unwrap();
        let legal: Vec<Action> =
            m.layout.iter().enumerate().filter(|(_, &b)| b).map(|(k, _)| layout_index_to_action(k, &cfg())).collect();
        assert_eq!(legal, vec![Action::Switch(0, 1), Action::Switch(0, 2), Action::Switch(1, 2), Action::Terminate]);
        assert_eq!(m.image, vec![true, true, true, false, false]);
        assert!(ActionMask::new(Phase::Layout, 6, &cfg()).is_err());
    }

    #[test]
    fn masked_softmax_matches_direct_formula() {
        let logits = [1.0, 3.0, -2.0, 0.5];
        let mask = [true, false, true, true];
        let c = Categorical::masked_softmax(&logits, Some(&mask)).unwrap();
        let z = 1f64.exp() + (-2f64).exp() + 0.5f64.exp();
        approx::assert_relative_eq!(c.probs[0], 1f64.exp() / z, max_relative = 1e-12);
        approx::assert_relative_eq!(c.probs[2], (-2f64).exp() / z, max_relative = 1e-12);
        assert_eq!(c.probs[1], 0.0);
        assert_eq!(c.log_probs[1], f64::NEG_INFINITY);
        approx::assert_relative_eq!(c.probs.iter().sum::<f64>(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn empty_mask_is_an_error() {
        let r = Categorical::masked_softmax(&[0.0, 0.0], Some(&[false, false]));
        assert!(matches!(r, Err(CollageError::InvalidMask(_))));
        let r = Categorical::masked_softmax(&[0.0, 0.0], Some(&[true]));
        assert!(matches!(r, Err(CollageError::InvalidMask(_))));
    }

    #[test]
    fn uniform_over_legal_at_zero_weights() {
        let c = cfg();
        let p = AgentParams::zeros(c.clone()).unwrap();
        let s = RecurrentState::zeros(&c);
        let obs = Observation(vec![0.2, 0.1, -0.4, 1.0]);
        let mask = ActionMask::new(Phase::Layout, 3, &c).unwrap();
        let out = policy_forward(&p, &obs, &s, &mask).unwrap();
        let PolicyDistribution::Layout(d) = &out.distribution else { panic!("layout phase") };
        for (k, &legal) in mask.layout.iter().enumerate() {
            assert_eq!(d.probs[k], if legal { 0.25 } else { 0.0 });
        }
        let lp = out.distribution.log_prob(&Action::Switch(0, 2), &c).unwrap();
        approx::assert_relative_eq!(lp, -(4f64.ln()), max_relative = 1e-12);
        approx::assert_relative_eq!(out.distribution.entropy(), 4f64.ln(), max_relative = 1e-12);
    }

    #[test]
    fn masked_entries_never_sampled() {
        let c = cfg();
        // The largest logits sit on masked pairs.
        let layout = vec![5.0, -1.0, 9.0, 0.0, 2.0, 7.0, 1.0, 3.0, 4.0, 8.0, 0.0];
        let all = vec![layout, vec![0.0; 5], vec![0.0; 4], vec![0.0; 4], vec![0.0; 3], vec![0.0; 3]];
        let mask = ActionMask::new(Phase::Layout, 3, &c).unwrap();
        let dist = distribution_from_logits(&all, &mask).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let (a, lp) = sample_action(&dist, &c, &mut rng);
            let k = action_to_indices(&a, &c).unwrap()[0];
            assert!(mask.layout[k], "sampled masked action {a:?}");
            assert!(lp.is_finite());
        }
    }

    #[test]
    fn sampling_frequencies_match_probabilities() {
        let c =
            Categorical::masked_softmax(&[0.0, 1.0, -0.5, 0.3, 2.0], Some(&[true, true, true, false, true])).unwrap();
        let n = 100_000;
        let mut counts = [0usize; 5];
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..n {
            counts[c.sample(&mut rng)] += 1;
        }
        for (k, &p) in c.probs.iter().enumerate() {
            let sd = (n as f64 * p * (1.0 - p)).sqrt();
            let dev = (counts[k] as f64 - n as f64 * p).abs();
            assert!(dev <= 3.0 * sd + 1e-9, "entry {k}: {} draws, expected {}", counts[k], n as f64 * p);
        }
        assert_eq!(counts[3], 0);
    }

    #[test]
    fn detail_log_prob_is_sum_of_factors() {
        let c = cfg();
        let logits = vec![
            vec![0.0; c.num_pairs() + 1],
            vec![0.3, -0.2, 0.1, 0.0, 0.0],
            vec![1.0, 0.0, 0.0, -1.0],
            vec![0.0, 0.5, 0.0, 0.0],
            vec![0.2, 0.2, -0.4],
            vec![0.0, 1.5, 0.0],
        ];
        let mask = ActionMask::new(Phase::Detail, 3, &c).unwrap();
        let dist = distribution_from_logits(&logits, &mask).unwrap();
        let a = Action::Detail { image: 1, dx: 0, dy: 1, layer: 2, angle: 1 };
        let PolicyDistribution::Detail(cs) = &dist else { panic!("detail phase") };
        let expected =
            cs[0].log_probs[1] + cs[1].log_probs[0] + cs[2].log_probs[1] + cs[3].log_probs[2] + cs[4].log_probs[1];
        assert_eq!(dist.log_prob(&a, &c).unwrap(), expected);
        assert_eq!(cs[0].probs[3], 0.0);
        assert_eq!(greedy_action(&dist, &c), Action::Detail { image: 0, dx: 0, dy: 1, layer: 0, angle: 1 });
        assert!(dist.log_prob(&Action::Terminate, &c).is_err());
    }
}
