//! The collage decision process.
//!
//! An episode starts from the strip-packed layout. The first
//! `layout_budget` steps (or fewer, if the agent terminates early) are
//! layout steps that swap image pairs in the packing order; the remaining
//! steps up to `max_step` adjust single images. After every step the
//! collage is optionally re-cropped to the best candidate view, and the
//! reward is the change in collage score minus a growing step penalty.

mod autocrop;
mod baseline;
mod evaluate;
mod trace;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::aesthetic::{CollageFeature, PatchScorer, ScorerConfig};
use crate::error::{CollageError, Result};
use crate::geometry::{apply_detail_action, apply_switch, AspectRatio, Canvas, CollageState, ImageSet, LayerOp, Phase};

pub use autocrop::{apply_crop, autocrop, crop_candidates, CropCandidate, CropOutcome};
pub use baseline::{image_self_score, quick_init_baseline};
pub use evaluate::{collage_score, evaluate_collage, CollageEvaluation, Evaluator};
pub use trace::{write_trace, TraceRecord};

/// Maximum number of images in one episode.
pub const MAX_IMAGES: usize = 15;

pub const DX_OPTIONS: [f64; 4] = [-15.0, -5.0, 0.0, 5.0];
pub const DY_OPTIONS: [f64; 4] = DX_OPTIONS;
pub const LAYER_OPTIONS: [LayerOp; 3] = [LayerOp::Top, LayerOp::Bottom, LayerOp::Keep];
pub const ANGLE_OPTIONS: [f64; 3] = [-0.5, 0.0, 0.5];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub max_step: u32,
    pub layout_budget: u32,
    pub lambda_a: f64,
    pub lambda_b: f64,
    pub step_penalty: f64,
    pub target_aspect: AspectRatio,
    /// Long side of the working canvas in pixels.
    pub canvas_long_side: u32,
    pub autocrop: bool,
    pub crop_scales: Vec<f64>,
    /// Offsets per axis on the crop grid.
    pub crop_offsets: u32,
    pub scorer: ScorerConfig,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            max_step: 12,
            layout_budget: 6,
            lambda_a: 1.0,
            lambda_b: 0.01,
            step_penalty: 0.01,
            target_aspect: AspectRatio { width: 1, height: 1 },
            canvas_long_side: 128,
            autocrop: true,
            crop_scales: vec![0.8, 0.9, 1.0],
            crop_offsets: 5,
            scorer: ScorerConfig::default(),
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.layout_budget > 0 && self.layout_budget < self.max_step) {
            return Err(CollageError::config(format!(
                "layout_budget {} must lie strictly between 0 and max_step {}",
                self.layout_budget, self.max_step
            )));
        }
        if self.lambda_a < 0.0 || self.lambda_b < 0.0 || self.step_penalty < 0.0 {
            return Err(CollageError::config("lambda_a, lambda_b and step_penalty must be non-negative"));
        }
        if self.crop_scales.is_empty() || self.crop_scales.iter().any(|&s| !(s > 0.0 && s <= 1.0)) {
            return Err(CollageError::config("crop scales must lie in (0, 1]"));
        }
        if self.crop_offsets == 0 {
            return Err(CollageError::config("crop_offsets must be positive"));
        }
        self.scorer.validate()?;
        self.canvas().map(|_| ())
    }

    pub fn canvas(&self) -> Result<Canvas> {
        Canvas::with_aspect(self.target_aspect, self.canvas_long_side)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    /// Swap positions `i` and `j` of the layout order.
    Switch(usize, usize),
    /// End the layout phase; the remaining budget goes to detail steps.
    Terminate,
    /// Indices into [`DX_OPTIONS`], [`DY_OPTIONS`], [`LAYER_OPTIONS`],
    /// [`ANGLE_OPTIONS`].
    Detail { image: usize, dx: usize, dy: usize, layer: usize, angle: usize },
}

impl Action {
    /// The detail action that changes nothing.
    pub const fn identity(image: usize) -> Self {
        Action::Detail { image, dx: 2, dy: 2, layer: 2, angle: 1 }
    }

    pub fn phase(&self) -> Phase {
        match self {
            Action::Switch(..) | Action::Terminate => Phase::Layout,
            Action::Detail { .. } => Phase::Detail,
        }
    }
}

/// Current fused feature followed by the episode-initial fused feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation(pub Vec<f64>);

impl Observation {
    pub fn new(current: &[f64], initial: &[f64]) -> Self {
        let mut v = Vec::with_capacity(current.len() + initial.len());
        v.extend_from_slice(current);
        v.extend_from_slice(initial);
        Observation(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    /// Collage score after the step.
    pub score: f64,
    pub proposal_count: usize,
    pub blank_fraction: f64,
    pub aesthetic_score: f64,
    pub phase: Phase,
    pub step_index: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepResult {
    pub observation: Observation,
    pub reward: f64,
    /// Score difference before the step penalty.
    pub raw_reward: f64,
    pub penalty: f64,
    /// Penalty accumulated over the episode so far, in closed form.
    pub cumulative_penalty: f64,
    pub done: bool,
    pub info: StepInfo,
}

/// One episode over one image set.
pub struct CollageEnv {
    images: Arc<ImageSet>,
    cfg: EnvConfig,
    evaluator: Evaluator,
    state: CollageState,
    feature: CollageFeature,
    initial_feature: Vec<f64>,
    score: f64,
    done: bool,
}

impl CollageEnv {
    pub fn new(images: Arc<ImageSet>, cfg: EnvConfig, scorer: Arc<dyn PatchScorer>) -> Result<Self> {
        cfg.validate()?;
        if images.len() < 2 || images.len() > MAX_IMAGES {
            return Err(CollageError::invalid_input(format!(
                "an episode needs 2..={MAX_IMAGES} images, got {}",
                images.len()
            )));
        }
        let evaluator = Evaluator::new(scorer, &cfg);
        let state = CollageState::initial(cfg.canvas()?, images.sizes())?;
        let feature = evaluator.assess(&state, &images)?;
        let score = evaluator.score(&feature);
        let initial_feature = feature.fused_feature.clone();
        Ok(CollageEnv { images, cfg, evaluator, state, feature, initial_feature, score, done: false })
    }

    /// Restarts from the strip-packed layout of the images in input order.
    pub fn reset(&mut self) -> Result<(CollageState, Observation)> {
        self.reset_to(CollageState::initial(self.cfg.canvas()?, self.images.sizes())?)
    }

    /// Restarts from an arbitrary layout-phase state.
    pub fn reset_to(&mut self, mut state: CollageState) -> Result<(CollageState, Observation)> {
        state.step_index = 0;
        state.phase = Phase::Layout;
        self.feature = self.evaluator.assess(&state, &self.images)?;
        self.score = self.evaluator.score(&self.feature);
        self.initial_feature = self.feature.fused_feature.clone();
        self.state = state;
        self.done = false;
        Ok((self.state.clone(), self.observation()))
    }

    pub fn state(&self) -> &CollageState {
        &self.state
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn images(&self) -> &ImageSet {
        &self.images
    }

    pub fn evaluator(&self) -> &Evaluator {
        &self.evaluator
    }

    pub fn feature(&self) -> &CollageFeature {
        &self.feature
    }

    /// Collage score of the current state.
    pub fn score(&self) -> f64 {
        self.score
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn num_images(&self) -> usize {
        self.images.len()
    }

    pub fn observation(&self) -> Observation {
        Observation::new(&self.feature.fused_feature, &self.initial_feature)
    }

    pub fn step(&mut self, action: Action) -> Result<(CollageState, StepResult)> {
        if self.done {
            return Err(CollageError::EpisodeDone);
        }
        if action.phase() != self.state.phase {
            return Err(CollageError::Phase { phase: self.state.phase, action: format!("{action:?}") });
        }
        let t = self.state.step_index;
        let mut next = match action {
            Action::Switch(i, j) => apply_switch(&self.state, i, j)?,
            Action::Terminate => {
                let mut s = self.state.clone();
                s.step_index += 1;
                s.phase = Phase::Detail;
                s
            }
            Action::Detail { image, dx, dy, layer, angle } => {
                let (Some(&dx), Some(&dy), Some(&layer), Some(&angle)) =
                    (DX_OPTIONS.get(dx), DY_OPTIONS.get(dy), LAYER_OPTIONS.get(layer), ANGLE_OPTIONS.get(angle))
                else {
                    return Err(CollageError::InvalidAction(format!("{action:?} has an option index out of range")));
                };
                apply_detail_action(&self.state, image, dx, dy, layer, angle)?
            }
        };
        if next.phase == Phase::Layout && next.step_index >= self.cfg.layout_budget {
            next.phase = Phase::Detail;
        }
        let (next, feature) = if self.cfg.autocrop {
            let out = autocrop(&next, &self.images, &self.evaluator, &self.cfg)?;
            (out.state, out.feature)
        } else {
            let f = self.evaluator.assess(&next, &self.images)?;
            (next, f)
        };
        let new_score = self.evaluator.score(&feature);
        let raw_reward = new_score - self.score;
        let penalty = self.cfg.step_penalty * (t + 1) as f64;
        self.done = next.step_index >= self.cfg.max_step;
        self.state = next;
        self.feature = feature;
        self.score = new_score;
        let result = StepResult {
            observation: self.observation(),
            reward: raw_reward - penalty,
            raw_reward,
            penalty,
            cumulative_penalty: self.cfg.step_penalty * ((t + 1) * (t + 2) / 2) as f64,
            done: self.done,
            info: StepInfo {
                score: new_score,
                proposal_count: self.feature.proposal_count,
                blank_fraction: self.feature.blank_fraction,
                aesthetic_score: self.feature.aesthetic_score,
                phase: self.state.phase,
                step_index: self.state.step_index,
            },
        };
        Ok((self.state.clone(), result))
    }
}

/// All unordered pairs `(i, j)`, `i < j < n`, in lexicographic order.
pub fn switch_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
}
