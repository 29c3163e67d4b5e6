use serde::{Deserialize, Serialize};

use super::{PatchProposal, ScorerConfig};
use crate::error::{CollageError, Result};

/// Focus point of the center rule, in normalized canvas coordinates.
const FOCUS: (f64, f64) = (0.5, 0.5);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollageFeature {
    /// Attention-weighted mean of the gated patch features.
    pub fused_feature: Vec<f64>,
    /// One weight per input proposal, gated or not.
    pub attention_weights: Vec<f64>,
    /// Windows passing the area gate whose score reaches `tau`.
    pub proposal_count: usize,
    /// Area-weighted sum of gated patch scores.
    pub aesthetic_score: f64,
    pub blank_fraction: f64,
}

pub fn area_fraction(p: &PatchProposal, width: u32, height: u32) -> f64 {
    p.area_px as f64 / (width as f64 * height as f64)
}

pub fn passes_gate(p: &PatchProposal, width: u32, height: u32, eta: f64) -> bool {
    area_fraction(p, width, height) > eta
}

/// L1 distance of the window center from the focus point, each axis
/// normalized by the canvas extent. At most 1 for in-canvas windows.
pub fn center_offset(p: &PatchProposal, width: u32, height: u32) -> f64 {
    (p.center.1 / height as f64 - FOCUS.1).abs() + (p.center.0 / width as f64 - FOCUS.0).abs()
}

pub fn attention_weight(p: &PatchProposal, width: u32, height: u32, attention: bool) -> f64 {
    let a = area_fraction(p, width, height);
    if attention {
        a * (1.0 - center_offset(p, width, height))
    } else {
        a
    }
}

/// Fuses scored proposals into a [`CollageFeature`]. Proposals at or below
/// the area gate contribute nothing; if none pass, the fused feature is
/// the zero vector.
pub fn fuse(
    proposals: &[PatchProposal],
    width: u32,
    height: u32,
    cfg: &ScorerConfig,
    blank_fraction: f64,
) -> Result<CollageFeature> {
    let attention_weights: Vec<f64> =
        proposals.iter().map(|p| attention_weight(p, width, height, cfg.attention)).collect();
    let dim =
        proposals.iter().find(|p| passes_gate(p, width, height, cfg.eta)).map_or(cfg.feature_dim, |p| p.feature.len());
    let mut fused = vec![0.0; dim];
    let mut weight_sum = 0.0;
    let mut proposal_count = 0;
    for (p, &alpha) in proposals.iter().zip(&attention_weights) {
        if !passes_gate(p, width, height, cfg.eta) {
            continue;
        }
        if !p.is_scored() || p.feature.len() != dim {
            return Err(CollageError::invalid_input("fuse requires scored proposals of one feature size"));
        }
        for (acc, f) in fused.iter_mut().zip(&p.feature) {
            *acc += alpha * f;
        }
        weight_sum += alpha;
        if p.score >= cfg.tau {
            proposal_count += 1;
        }
    }
    if weight_sum > 0.0 {
        fused.iter_mut().for_each(|v| *v /= weight_sum);
    } else {
        fused.iter_mut().for_each(|v| *v = 0.0);
    }
    if fused.iter().any(|v| !v.is_finite()) {
        return Err(CollageError::Numeric("fused feature is not finite".into()));
    }
    Ok(CollageFeature {
        fused_feature: fused,
        attention_weights,
        proposal_count,
        aesthetic_score: aesthetic_metric(proposals, width, height, cfg),
        blank_fraction,
    })
}

/// Sum over gated proposals of area fraction times patch score.
pub fn aesthetic_metric(proposals: &[PatchProposal], width: u32, height: u32, cfg: &ScorerConfig) -> f64 {
    proposals
        .iter()
        .filter(|p| passes_gate(p, width, height, cfg.eta))
        .map(|p| area_fraction(p, width, height) * p.score)
        .sum()
}
