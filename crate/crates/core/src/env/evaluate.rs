use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::EnvConfig;
use crate::aesthetic::{assess, CollageFeature, PatchScorer, ScorerConfig};
use crate::error::Result;
use crate::geometry::{rasterize, CollageState, ImageSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollageEvaluation {
    pub aesthetic_score: f64,
    pub proposal_count: usize,
    pub blank_fraction: f64,
}

/// Collage score: weighted proposal count minus weighted blank area, the
/// blank area measured in percent of the canvas.
pub fn collage_score(feature: &CollageFeature, lambda_a: f64, lambda_b: f64) -> f64 {
    lambda_a * feature.proposal_count as f64 - lambda_b * 100.0 * feature.blank_fraction
}

/// Rasterize, score and fuse one state.
pub fn evaluate_collage(
    state: &CollageState,
    images: &ImageSet,
    scorer: &dyn PatchScorer,
    cfg: &ScorerConfig,
) -> Result<CollageEvaluation> {
    let f = assess(&rasterize(state, images)?, scorer, cfg)?;
    Ok(CollageEvaluation {
        aesthetic_score: f.aesthetic_score,
        proposal_count: f.proposal_count,
        blank_fraction: f.blank_fraction,
    })
}

/// Scorer plus the weights that turn a [`CollageFeature`] into a reward
/// score. Cheap to clone; the scorer is shared.
#[derive(Clone)]
pub struct Evaluator {
    scorer: Arc<dyn PatchScorer>,
    pub scorer_cfg: ScorerConfig,
    pub lambda_a: f64,
    pub lambda_b: f64,
}

impl fmt::Debug for Evaluator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Evaluator")
            .field("scorer_cfg", &self.scorer_cfg)
            .field("lambda_a", &self.lambda_a)
            .field("lambda_b", &self.lambda_b)
            .finish_non_exhaustive()
    }
}

impl Evaluator {
    pub fn new(scorer: Arc<dyn PatchScorer>, cfg: &EnvConfig) -> Self {
        Evaluator { scorer, scorer_cfg: cfg.scorer.clone(), lambda_a: cfg.lambda_a, lambda_b: cfg.lambda_b }
    }

    pub fn scorer(&self) -> &dyn PatchScorer {
        self.scorer.as_ref()
    }

    pub fn assess(&self, state: &CollageState, images: &ImageSet) -> Result<CollageFeature> {
        assess(&rasterize(state, images)?, self.scorer.as_ref(), &self.scorer_cfg)
    }

    pub fn score(&self, feature: &CollageFeature) -> f64 {
        collage_score(feature, self.lambda_a, self.lambda_b)
    }

    pub fn evaluate(&self, state: &CollageState, images: &ImageSet) -> Result<CollageEvaluation> {
        evaluate_collage(state, images, self.scorer.as_ref(), &self.scorer_cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aesthetic::HeuristicScorer;
    use crate::geometry::{Canvas, Size};
    use image::{Rgb, RgbImage};

    fn noise(w: u32, h: u32) -> RgbImage {
        RgbImage::from_fn(w, h, |x, y| {
            let v = (x.wrapping_mul(2654435761) ^ y.wrapping_mul(40503)) % 256;
            Rgb([v as u8, (v * 5 % 256) as u8, (v * 11 % 256) as u8])
        })
    }

    #[test]
    fn evaluation_is_pure() {
        let imgs = ImageSet::new(vec![noise(60, 40), noise(40, 60), noise(50, 50)]).unwrap();
        let s = CollageState::initial(Canvas::new(96, 64).unwrap(), imgs.sizes()).unwrap();
        let sc = HeuristicScorer::default();
        let cfg = ScorerConfig::default();
        let a = evaluate_collage(&s, &imgs, &sc, &cfg).unwrap();
        let b = evaluate_collage(&s, &imgs, &sc, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.aesthetic_score > 0.0);
    }

    #[test]
    fn empty_canvas_scores_zero() {
        let imgs = ImageSet::new(vec![noise(10, 10), noise(10, 10)]).unwrap();
        let mut s =
            CollageState::initial(Canvas::new(64, 64).unwrap(), vec![Size { width: 10, height: 10 }; 2]).unwrap();
        for p in &mut s.placements {
            p.center_x = -1000.0;
        }
        let e = evaluate_collage(&s, &imgs, &HeuristicScorer::default(), &ScorerConfig::default()).unwrap();
        assert_eq!(e.aesthetic_score, 0.0);
        assert_eq!(e.proposal_count, 0);
        assert_eq!(e.blank_fraction, 1.0);
    }

    #[test]
    fn blanking_a_region_lowers_the_score() {
        let imgs = ImageSet::new(vec![noise(64, 64), noise(64, 64)]).unwrap();
        let canvas = Canvas::new(128, 64).unwrap();
        let s = CollageState::initial(canvas, imgs.sizes()).unwrap();
        let mut blanked = s.clone();
        blanked.placements[1].center_x += 1000.0;
        let sc = HeuristicScorer::default();
        let cfg = ScorerConfig::default();
        let full = evaluate_collage(&s, &imgs, &sc, &cfg).unwrap();
        let holed = evaluate_collage(&blanked, &imgs, &sc, &cfg).unwrap();
        assert!(holed.aesthetic_score < full.aesthetic_score);
        assert!(holed.blank_fraction > full.blank_fraction);
    }
}
