//! Salience-ranked quick initialization, used as the comparison baseline.
//!
//! Images are ranked by the patch scorer applied to their own content. The
//! top image is inserted into the packing order at the slot closest to the
//! canvas center, then enlarged and pulled toward the center while it
//! still covers its original slot. The remaining images are greedily
//! enlarged in place where that reduces blank area. Every move keeps the
//! pairwise overlap at or below 30% of the smaller image.

use image::imageops::FilterType;
use image::RgbImage;

use super::{EnvConfig, Evaluator};
use crate::aesthetic::{score_patch, PatchScorer, PatchView};
use crate::error::{CollageError, Result};
use crate::geometry::{
    blank_area, rasterize, strip_pack, CollageState, ImagePlacement, ImageSet, RasterBuffers, Rect, BLANK,
};

const MAX_OVERLAP: f64 = 0.30;
const TOP_GROWTH: [f64; 6] = [1.0, 1.1, 1.2, 1.3, 1.4, 1.5];
const OTHER_GROWTH: [f64; 3] = [1.0, 1.1, 1.2];
const SELF_SCORE_SIDE: u32 = 96;

/// The scorer's verdict on an image by itself, on a downsampled copy.
pub fn image_self_score(img: &RgbImage, scorer: &dyn PatchScorer) -> Result<f64> {
    let long = img.width().max(img.height());
    let small = if long > SELF_SCORE_SIDE {
        let f = SELF_SCORE_SIDE as f64 / long as f64;
        let w = ((img.width() as f64 * f).round() as u32).max(1);
        let h = ((img.height() as f64 * f).round() as u32).max(1);
        image::imageops::resize(img, w, h, FilterType::Triangle)
    } else {
        img.clone()
    };
    let n = (small.width() * small.height()) as usize;
    let buffers = RasterBuffers {
        width: small.width(),
        height: small.height(),
        occupancy: vec![true; n],
        top_index: vec![0; n],
        pixels: small,
    };
    debug_assert!(buffers.top_index.iter().all(|&t| t != BLANK));
    let view = PatchView::new(&buffers, Rect::new(0, 0, buffers.width, buffers.height));
    Ok(score_patch(&view, scorer)?.score)
}

fn overlap_area(a: &ImagePlacement, b: &ImagePlacement) -> f64 {
    let (ax0, ay0, ax1, ay1) = a.bounds();
    let (bx0, by0, bx1, by1) = b.bounds();
    let ox = ax1.min(bx1) - ax0.max(bx0);
    let oy = ay1.min(by1) - ay0.max(by0);
    ox.max(0.0) * oy.max(0.0)
}

fn overlap_ok(placements: &[ImagePlacement], id: usize) -> bool {
    let p = &placements[id];
    placements
        .iter()
        .enumerate()
        .all(|(k, q)| k == id || overlap_area(p, q) <= MAX_OVERLAP * p.area().min(q.area()) + 1e-9)
}

fn center_distance(p: &ImagePlacement, cx: f64, cy: f64) -> f64 {
    ((p.center_x - cx).powi(2) + (p.center_y - cy).powi(2)).sqrt()
}

pub fn quick_init_baseline(images: &ImageSet, cfg: &EnvConfig, evaluator: &Evaluator) -> Result<CollageState> {
    let n = images.len();
    if n < 2 {
        return Err(CollageError::invalid_input(format!("a collage needs at least 2 images, got {n}")));
    }
    let canvas = cfg.canvas()?;
    let sources = images.sizes();
    let (cx, cy) = (canvas.width as f64 / 2.0, canvas.height as f64 / 2.0);

    let mut scored: Vec<(usize, f64)> = images
        .images
        .iter()
        .enumerate()
        .map(|(k, img)| image_self_score(img, evaluator.scorer()).map(|s| (k, s)))
        .collect::<Result<_>>()?;
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let ranked: Vec<usize> = scored.iter().map(|&(k, _)| k).collect();
    let top = ranked[0];

    // Insert the top image where its packed slot lands nearest the center.
    let mut best: Option<(f64, u64, Vec<usize>, Vec<ImagePlacement>)> = None;
    for pos in 0..n {
        let mut order: Vec<usize> = ranked[1..].to_vec();
        order.insert(pos, top);
        let placements = strip_pack(&canvas, &sources, &order)?;
        let dist = center_distance(&placements[top], cx, cy);
        let trial = CollageState {
            canvas,
            placements: placements.clone(),
            order: order.clone(),
            sources: sources.clone(),
            step_index: 0,
            phase: crate::geometry::Phase::Layout,
        };
        let blank = blank_area(&rasterize(&trial, images)?).pixels;
        let better = best.as_ref().is_none_or(|(d, b, _, _)| dist < d - 1e-9 || (dist <= d + 1e-9 && blank < *b));
        if better {
            best = Some((dist, blank, order, placements));
        }
    }
    let (_, _, order, placements) = best.expect("n >= 2");
    let mut state =
        CollageState { canvas, placements, order, sources, step_index: 0, phase: crate::geometry::Phase::Layout };
    // Highest ranked image on top.
    for (rank, &id) in ranked.iter().enumerate() {
        state.placements[id].layer = (n - 1 - rank) as u32;
    }

    let blank_of = |s: &CollageState| -> Result<u64> { Ok(blank_area(&rasterize(s, images)?).pixels) };

    // Grow the top image and pull it toward the center while it still
    // contains its original slot.
    let slot = state.placements[top];
    let mut chosen: Option<((bool, u64, f64), ImagePlacement)> = None;
    for g in TOP_GROWTH {
        let (w, h) = (slot.width * g, slot.height * g);
        // Centers from which the grown image still contains the slot.
        let (sx, sy) = ((w - slot.width).max(0.0) / 2.0, (h - slot.height).max(0.0) / 2.0);
        let cand = ImagePlacement {
            center_x: cx.clamp(slot.center_x - sx, slot.center_x + sx),
            center_y: cy.clamp(slot.center_y - sy, slot.center_y + sy),
            width: w,
            height: h,
            ..slot
        };
        let mut trial = state.clone();
        trial.placements[top] = cand;
        if !overlap_ok(&trial.placements, top) {
            continue;
        }
        let dist = center_distance(&cand, cx, cy);
        let central =
            trial.placements.iter().enumerate().all(|(k, q)| k == top || center_distance(q, cx, cy) > dist + 1e-9);
        let key = (!central, blank_of(&trial)?, dist);
        let better = chosen
            .as_ref()
            .is_none_or(|(k, _)| (key.0, key.1) < (k.0, k.1) || ((key.0, key.1) == (k.0, k.1) && key.2 < k.2 - 1e-9));
        if better {
            chosen = Some((key, cand));
        }
    }
    if let Some((_, cand)) = chosen {
        state.placements[top] = cand;
    }

    // Greedy in-place growth of the rest, in rank order.
    for &id in &ranked[1..] {
        let base = state.placements[id];
        let mut best_blank = blank_of(&state)?;
        for g in OTHER_GROWTH.iter().skip(1) {
            let mut trial = state.clone();
            trial.placements[id] = ImagePlacement { width: base.width * g, height: base.height * g, ..base };
            if !overlap_ok(&trial.placements, id) {
                continue;
            }
            let b = blank_of(&trial)?;
            if b < best_blank {
                best_blank = b;
                state = trial;
            }
        }
    }
    Ok(state)
}
