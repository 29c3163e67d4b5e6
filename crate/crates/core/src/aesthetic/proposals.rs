use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::ScorerConfig;
use crate::error::{CollageError, Result};
use crate::geometry::{RasterBuffers, Rect};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchProposal {
    pub rect: Rect,
    pub area_px: u64,
    pub center: (f64, f64),
    /// Zero until scored.
    pub score: f64,
    /// Empty until scored.
    pub feature: Vec<f64>,
}

impl PatchProposal {
    pub fn new(rect: Rect) -> Self {
        PatchProposal { rect, area_px: rect.area(), center: rect.center(), score: 0.0, feature: Vec::new() }
    }

    pub fn is_scored(&self) -> bool {
        !self.feature.is_empty()
    }
}

/// Sliding-window rectangles over a `width x height` canvas, in scale,
/// aspect ratio, row, column order with duplicates dropped.
pub fn proposal_rects(width: u32, height: u32, cfg: &ScorerConfig) -> Result<Vec<Rect>> {
    let (cw, ch) = (width as f64, height as f64);
    let step_x = ((cfg.stride_fraction * cw).round() as u32).max(1);
    let step_y = ((cfg.stride_fraction * ch).round() as u32).max(1);
    let mut seen = HashSet::new();
    let mut rects = Vec::new();
    for &scale in &cfg.scales {
        for ar in &cfg.aspect_ratios {
            let r = ar.as_f64();
            let (full_w, full_h) = if cw / ch >= r { (ch * r, ch) } else { (cw, cw / r) };
            let w = ((scale * full_w).round() as u32).clamp(1, width);
            let h = ((scale * full_h).round() as u32).clamp(1, height);
            for y in (0..=height - h).step_by(step_y as usize) {
                for x in (0..=width - w).step_by(step_x as usize) {
                    let rect = Rect::new(x as i32, y as i32, w, h);
                    if seen.insert(rect) {
                        rects.push(rect);
                    }
                }
            }
        }
    }
    if rects.is_empty() {
        return Err(CollageError::config("proposal configuration yields no windows"));
    }
    Ok(rects)
}

/// Unscored proposals covering the rasterized collage.
pub fn generate_proposals(buffers: &RasterBuffers, cfg: &ScorerConfig) -> Result<Vec<PatchProposal>> {
    if buffers.is_empty() {
        return Err(CollageError::invalid_input("empty raster"));
    }
    Ok(proposal_rects(buffers.width, buffers.height, cfg)?.into_iter().map(PatchProposal::new).collect())
}
