use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{EnvConfig, Evaluator};
use crate::aesthetic::CollageFeature;
use crate::error::Result;
use crate::geometry::{CollageState, ImageSet, Rect};

/// A view of the collage at the canvas aspect ratio: the window of
/// `scale * canvas` pixels whose top-left corner is `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CropCandidate {
    pub x: i32,
    pub y: i32,
    pub scale: f64,
    /// Window in canvas pixels (extent rounded).
    pub rect: Rect,
}

#[derive(Debug, Clone)]
pub struct CropOutcome {
    pub state: CollageState,
    pub candidate: CropCandidate,
    pub score: f64,
    pub feature: CollageFeature,
}

/// The candidate grid: for every crop scale, `crop_offsets` evenly spaced
/// positions per axis spanning the union of the canvas and the bounds of
/// all placed images, plus the full canvas. Duplicates are dropped.
pub fn crop_candidates(state: &CollageState, cfg: &EnvConfig) -> Vec<CropCandidate> {
    let (w, h) = (state.canvas.width as f64, state.canvas.height as f64);
    let (mut rx0, mut ry0, mut rx1, mut ry1) = (0.0f64, 0.0f64, w, h);
    for p in &state.placements {
        let (x0, y0, x1, y1) = p.bounds();
        rx0 = rx0.min(x0.floor());
        ry0 = ry0.min(y0.floor());
        rx1 = rx1.max(x1.ceil());
        ry1 = ry1.max(y1.ceil());
    }
    let n = cfg.crop_offsets.max(1);
    let offsets = |lo: f64, hi: f64, extent: f64| -> Vec<i32> {
        let span = (hi - lo - extent).max(0.0);
        if n == 1 {
            return vec![(lo + span / 2.0).round() as i32];
        }
        (0..n).map(|k| (lo + span * k as f64 / (n - 1) as f64).round() as i32).collect()
    };

    let full = CropCandidate { x: 0, y: 0, scale: 1.0, rect: state.canvas.full_rect() };
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    seen.insert((0, 0, 1.0f64.to_bits()));
    out.push(full);
    for &scale in &cfg.crop_scales {
        let (cw, ch) = (w * scale, h * scale);
        let rect_w = (cw.round() as u32).max(1);
        let rect_h = (ch.round() as u32).max(1);
        for &y in &offsets(ry0, ry1, ch) {
            for &x in &offsets(rx0, rx1, cw) {
                if seen.insert((x, y, scale.to_bits())) {
                    out.push(CropCandidate { x, y, scale, rect: Rect::new(x, y, rect_w, rect_h) });
                }
            }
        }
    }
    out
}

/// The state seen through `crop`, rescaled to the full canvas.
pub fn apply_crop(state: &CollageState, crop: &CropCandidate) -> CollageState {
    let mut next = state.clone();
    if crop.x == 0 && crop.y == 0 && crop.scale == 1.0 {
        return next;
    }
    let zoom = 1.0 / crop.scale;
    for p in &mut next.placements {
        p.center_x = (p.center_x - crop.x as f64) * zoom;
        p.center_y = (p.center_y - crop.y as f64) * zoom;
        p.width *= zoom;
        p.height *= zoom;
    }
    next
}

/// Scores every crop candidate and keeps the best. Ties go to the larger
/// window, then the smaller `y`, then the smaller `x`.
pub fn autocrop(
    state: &CollageState,
    images: &ImageSet,
    evaluator: &Evaluator,
    cfg: &EnvConfig,
) -> Result<CropOutcome> {
    let mut best: Option<CropOutcome> = None;
    for cand in crop_candidates(state, cfg) {
        let view = apply_crop(state, &cand);
        let feature = evaluator.assess(&view, images)?;
        let score = evaluator.score(&feature);
        let better = match &best {
            None => true,
            Some(b) => {
                score > b.score
                    || (score == b.score
                        && (cand.scale > b.candidate.scale
                            || (cand.scale == b.candidate.scale && (cand.y, cand.x) < (b.candidate.y, b.candidate.x))))
            }
        };
        if better {
            best = Some(CropOutcome { state: view, candidate: cand, score, feature });
        }
    }
    Ok(best.expect("the full canvas is always a candidate"))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::aesthetic::HeuristicScorer;
    use crate::geometry::{Canvas, Size};
    use image::{Rgb, RgbImage};

    fn noise(w: u32, h: u32, salt: u32) -> RgbImage {
        RgbImage::from_fn(w, h, |x, y| {
            let v = (x.wrapping_mul(2654435761) ^ y.wrapping_mul(40503) ^ salt).wrapping_mul(97) >> 3;
            Rgb([v as u8, (v >> 8) as u8, (v >> 16) as u8])
        })
    }

    fn setup(n: usize) -> (ImageSet, EnvConfig, Evaluator) {
        let cfg = EnvConfig { canvas_long_side: 64, ..EnvConfig::default() };
        let imgs = ImageSet::new((0..n).map(|k| noise(64, 64, k as u32)).collect()).unwrap();
        let ev = Evaluator::new(Arc::new(HeuristicScorer::default()), &cfg);
        (imgs, cfg, ev)
    }

    #[test]
    fn grid_size_and_full_canvas() {
        let (_, cfg, _) = setup(2);
        let s = CollageState::initial(Canvas::new(64, 64).unwrap(), vec![Size { width: 64, height: 64 }; 2]).unwrap();
        let c = crop_candidates(&s, &cfg);
        assert_eq!(c[0].rect, Rect::new(0, 0, 64, 64));
        // Content fits the canvas: two sub-unit scales of 25 windows each.
        assert_eq!(c.len(), 1 + 25 + 25);
        assert!(c.len() <= 76);
    }

    #[test]
    fn filled_canvas_keeps_full_view() {
        let (imgs, cfg, ev) = setup(1);
        let imgs = ImageSet::new(vec![imgs.images[0].clone(), imgs.images[0].clone()]).unwrap();
        let mut s = CollageState::initial(cfg.canvas().unwrap(), imgs.sizes()).unwrap();
        for p in &mut s.placements {
            p.center_x = 32.0;
            p.center_y = 32.0;
            p.width = 64.0;
            p.height = 64.0;
        }
        let out = autocrop(&s, &imgs, &ev, &cfg).unwrap();
        assert_eq!(out.candidate.rect, Rect::new(0, 0, 64, 64));
        assert_eq!(out.state, s);
    }

    #[test]
    fn all_ties_pick_largest_top_left() {
        let (imgs, cfg, _) = setup(2);
        let flat = crate::aesthetic::FnScorer::new(8, |_: &crate::aesthetic::PatchView<'_>| {
            Ok(crate::aesthetic::PatchScore { score: 1.0, feature: vec![0.0; 8] })
        });
        let mut ev = Evaluator::new(Arc::new(flat), &cfg);
        ev.lambda_b = 0.0;
        let s = CollageState::initial(cfg.canvas().unwrap(), imgs.sizes()).unwrap();
        let out = autocrop(&s, &imgs, &ev, &cfg).unwrap();
        assert_eq!(out.candidate.scale, 1.0);
        assert_eq!((out.candidate.x, out.candidate.y), (0, 0));
    }

    #[test]
    fn returned_state_scores_as_reported() {
        let (imgs, cfg, ev) = setup(3);
        let mut s = CollageState::initial(cfg.canvas().unwrap(), imgs.sizes()).unwrap();
        s.placements[2].center_x += 20.0;
        let out = autocrop(&s, &imgs, &ev, &cfg).unwrap();
        let again = ev.score(&ev.assess(&out.state, &imgs).unwrap());
        assert_eq!(again, out.score);
    }
}
