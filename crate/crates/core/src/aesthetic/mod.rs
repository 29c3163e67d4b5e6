//! Multi-patch aesthetic evaluation of a rasterized collage.
//!
//! A collage is viewed through a dense bag of sliding windows. Each window
//! that covers more than `eta` of the canvas is scored by a [`PatchScorer`];
//! the scored windows are fused into one fixed-size descriptor with
//! center-weighted attention, counted against the score threshold, and
//! summed into the area-weighted aesthetic metric.

mod fusion;
mod proposals;
mod scorer;

use serde::{Deserialize, Serialize};

use crate::error::{CollageError, Result};
use crate::geometry::{AspectRatio, RasterBuffers};

pub use fusion::{aesthetic_metric, area_fraction, attention_weight, center_offset, fuse, passes_gate, CollageFeature};
pub use proposals::{generate_proposals, proposal_rects, PatchProposal};
pub use scorer::{score_patch, FnScorer, HeuristicScorer, PatchScore, PatchScorer, PatchView, MAX_SCORE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScorerConfig {
    /// Area-fraction gate; windows at or below it are ignored.
    pub eta: f64,
    /// Window sizes as fractions of the largest window of each aspect ratio
    /// that fits the canvas.
    pub scales: Vec<f64>,
    pub aspect_ratios: Vec<AspectRatio>,
    /// Window stride as a fraction of the canvas side.
    pub stride_fraction: f64,
    /// Minimum patch score for a window to count as an aesthetic proposal.
    pub tau: f64,
    pub feature_dim: usize,
    /// When false the center term of the attention weight is dropped and
    /// each window is weighted by its area fraction alone.
    pub attention: bool,
}

impl Default for ScorerConfig {
    fn default() -> Self {
        ScorerConfig {
            eta: 0.60,
            scales: vec![0.4, 0.6, 0.8, 1.0],
            aspect_ratios: vec![
                AspectRatio { width: 1, height: 1 },
                AspectRatio { width: 4, height: 3 },
                AspectRatio { width: 3, height: 4 },
                AspectRatio { width: 16, height: 9 },
            ],
            stride_fraction: 0.125,
            tau: 5.0,
            feature_dim: 32,
            attention: true,
        }
    }
}

impl ScorerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(CollageError::config(format!("eta {} must lie in (0, 1)", self.eta)));
        }
        if self.scales.is_empty() || self.aspect_ratios.is_empty() {
            return Err(CollageError::config("need at least one scale and one aspect ratio"));
        }
        if self.scales.iter().any(|&s| !(s > 0.0 && s <= 1.0)) {
            return Err(CollageError::config("scales must lie in (0, 1]"));
        }
        if self.stride_fraction.is_nan() || self.stride_fraction <= 0.0 {
            return Err(CollageError::config("stride_fraction must be positive"));
        }
        if !(0.0..=MAX_SCORE).contains(&self.tau) {
            return Err(CollageError::config(format!("tau {} outside [0, {MAX_SCORE}]", self.tau)));
        }
        if self.feature_dim < 8 {
            return Err(CollageError::config("feature_dim must be at least 8"));
        }
        Ok(())
    }
}

/// Proposals → gate → score → fuse, for one rasterized collage.
///
/// Only windows passing the area gate are scored: gated-out windows carry
/// no weight in the fused feature, the count or the metric.
pub fn assess(buffers: &RasterBuffers, scorer: &dyn PatchScorer, cfg: &ScorerConfig) -> Result<CollageFeature> {
    let blank = crate::geometry::blank_area(buffers).fraction;
    let mut proposals = generate_proposals(buffers, cfg)?;
    proposals.retain(|p| passes_gate(p, buffers.width, buffers.height, cfg.eta));
    for p in &mut proposals {
        let scored = score_patch(&PatchView::new(buffers, p.rect), scorer)?;
        p.score = scored.score;
        p.feature = scored.feature;
    }
    fuse(&proposals, buffers.width, buffers.height, cfg, blank)
}
