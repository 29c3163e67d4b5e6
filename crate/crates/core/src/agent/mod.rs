//! Recurrent actor-critic.
//!
//! A two-layer tanh backbone feeds a stack of LSTM layers; the top hidden
//! state drives one categorical head for layout actions, five independent
//! heads for detail actions and a scalar value head. Gradients are
//! computed by hand with backpropagation through time over whole
//! episodes.

mod checkpoint;
mod loss;
mod network;
mod optim;
mod policy;

use serde::{Deserialize, Serialize};

use crate::env::MAX_IMAGES;
use crate::error::{CollageError, Result};

pub use checkpoint::Checkpoint;
pub use loss::{a2c_loss, a2c_loss_with_advantages, compute_returns, EpisodeRollout, LossReport};
pub use network::{AgentParams, ForwardCache, Gradients, RecurrentState, StepOutput};
pub use optim::{Adam, UpdateStats};
pub use policy::{
    action_to_indices, greedy_action, layout_index_to_action, policy_forward, sample_action, ActionMask, Categorical,
    PolicyDistribution, PolicyOutput, Transition,
};

/// The output heads, in parameter order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Head {
    Layout,
    Image,
    Dx,
    Dy,
    Layer,
    Angle,
}

impl Head {
    pub const ALL: [Head; 6] = [Head::Layout, Head::Image, Head::Dx, Head::Dy, Head::Layer, Head::Angle];
    pub const DETAIL: [Head; 5] = [Head::Image, Head::Dx, Head::Dy, Head::Layer, Head::Angle];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Head::Layout => "layout",
            Head::Image => "image",
            Head::Dx => "dx",
            Head::Dy => "dy",
            Head::Layer => "layer",
            Head::Angle => "angle",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AgentConfig {
    /// Observation length (twice the patch feature dimension).
    pub obs_dim: usize,
    pub hidden: usize,
    pub lstm_layers: usize,
    /// Head sizes are fixed for this many images; smaller sets are masked.
    pub max_images: usize,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig { obs_dim: 64, hidden: 128, lstm_layers: 4, max_images: MAX_IMAGES }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.obs_dim == 0 || self.hidden == 0 || self.lstm_layers == 0 {
            return Err(CollageError::config("agent dimensions must be positive"));
        }
        if !(2..=MAX_IMAGES).contains(&self.max_images) {
            return Err(CollageError::config(format!("max_images must lie in 2..={MAX_IMAGES}")));
        }
        Ok(())
    }

    /// Number of unordered image pairs.
    pub fn num_pairs(&self) -> usize {
        self.max_images * (self.max_images - 1) / 2
    }

    pub fn head_size(&self, head: Head) -> usize {
        match head {
            Head::Layout => self.num_pairs() + 1,
            Head::Image => self.max_images,
            Head::Dx | Head::Dy => 4,
            Head::Layer | Head::Angle => 3,
        }
    }
}
