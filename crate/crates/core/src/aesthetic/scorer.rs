use std::fmt;

use image::{Rgb, RgbImage};

use crate::error::{CollageError, Result};
use crate::geometry::{RasterBuffers, Rect, BACKGROUND};

pub const MAX_SCORE: f64 = 10.0;

const HIST_BINS: usize = 16;
const EDGE_THRESHOLD: f64 = 0.1;

/// A read-only window onto rasterized collage buffers.
#[derive(Clone, Copy)]
pub struct PatchView<'a> {
    buffers: &'a RasterBuffers,
    rect: Rect,
}

impl<'a> PatchView<'a> {
    /// `rect` must lie inside the buffers.
    pub fn new(buffers: &'a RasterBuffers, rect: Rect) -> Self {
        debug_assert!(rect.within(buffers.width, buffers.height));
        PatchView { buffers, rect }
    }

    pub fn width(&self) -> u32 {
        self.rect.width
    }

    pub fn height(&self) -> u32 {
        self.rect.height
    }

    pub fn pixel_count(&self) -> usize {
        self.rect.area() as usize
    }

    /// Color and coverage at patch-local `(x, y)`.
    #[inline]
    pub fn get(&self, x: u32, y: u32) -> ([u8; 3], bool) {
        let gx = self.rect.x as u32 + x;
        let gy = self.rect.y as u32 + y;
        let covered = self.buffers.occupancy[self.buffers.index(gx, gy)];
        (self.buffers.pixels.get_pixel(gx, gy).0, covered)
    }

    /// Copies the patch out, blank pixels painted with the background color.
    pub fn to_image(&self) -> RgbImage {
        RgbImage::from_fn(self.width(), self.height(), |x, y| {
            let (c, covered) = self.get(x, y);
            Rgb(if covered { c } else { BACKGROUND })
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatchScore {
    pub score: f64,
    pub feature: Vec<f64>,
}

/// Scores one patch. Implementations must be pure so that proposals can be
/// scored concurrently.
pub trait PatchScorer: Send + Sync {
    fn feature_dim(&self) -> usize;
    fn score(&self, patch: &PatchView<'_>) -> Result<PatchScore>;
}

/// Validating entry point: rejects empty patches and non-finite scores,
/// clamps scores into `[0, MAX_SCORE]`, and checks the feature length.
pub fn score_patch(patch: &PatchView<'_>, scorer: &dyn PatchScorer) -> Result<PatchScore> {
    if patch.pixel_count() == 0 {
        return Err(CollageError::invalid_input("cannot score an empty patch"));
    }
    let mut out = scorer.score(patch)?;
    if !out.score.is_finite() {
        return Err(CollageError::Numeric(format!("patch scorer returned {}", out.score)));
    }
    out.score = out.score.clamp(0.0, MAX_SCORE);
    if out.feature.len() != scorer.feature_dim() {
        return Err(CollageError::invalid_input(format!(
            "scorer produced a {}-dim feature, expected {}",
            out.feature.len(),
            scorer.feature_dim()
        )));
    }
    if out.feature.iter().any(|v| !v.is_finite()) {
        return Err(CollageError::Numeric("patch feature is not finite".into()));
    }
    Ok(out)
}

/// Hand-built stand-in for a learned aesthetic model.
///
/// The score averages four unit terms: luminance contrast, color-channel
/// entropy and edge density (all measured over covered pixels and scaled
/// by coverage), and coverage itself. The feature is a coarse luminance
/// grid, per-channel color histograms and the blank fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HeuristicScorer {
    dim: usize,
}

impl HeuristicScorer {
    pub fn new(feature_dim: usize) -> Result<Self> {
        if feature_dim < 8 {
            return Err(CollageError::config("heuristic scorer needs feature_dim >= 8"));
        }
        Ok(HeuristicScorer { dim: feature_dim })
    }

    fn grid_side(&self) -> usize {
        (((self.dim / 2) as f64).sqrt().floor() as usize).max(1)
    }

    fn bins_per_channel(&self) -> usize {
        let g = self.grid_side();
        ((self.dim - g * g - 1) / 3).max(1)
    }
}

impl Default for HeuristicScorer {
    fn default() -> Self {
        HeuristicScorer { dim: 32 }
    }
}

#[inline]
fn luminance(c: [u8; 3]) -> f64 {
    (0.299 * c[0] as f64 + 0.587 * c[1] as f64 + 0.114 * c[2] as f64) / 255.0
}

fn entropy(hist: &[u32], total: u32) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    hist.iter()
        .filter(|&&h| h > 0)
        .map(|&h| {
            let p = h as f64 / t;
            -p * p.ln()
        })
        .sum()
}

impl PatchScorer for HeuristicScorer {
    fn feature_dim(&self) -> usize {
        self.dim
    }

    fn score(&self, patch: &PatchView<'_>) -> Result<PatchScore> {
        let (w, h) = (patch.width() as usize, patch.height() as usize);
        let total = w * h;
        if total == 0 {
            return Err(CollageError::invalid_input("cannot score an empty patch"));
        }
        let mut lum = vec![f64::NAN; total];
        let mut hist = [[0u32; HIST_BINS]; 3];
        let g = self.grid_side();
        let b = self.bins_per_channel();
        let mut feat_hist = vec![0u32; 3 * b];
        let mut grid_sum = vec![0.0; g * g];
        let mut grid_n = vec![0u32; g * g];
        let (mut sum, mut sum_sq, mut covered) = (0.0, 0.0, 0u32);

        for y in 0..h {
            let gy = y * g / h;
            for x in 0..w {
                let (c, cov) = patch.get(x as u32, y as u32);
                let cell = gy * g + x * g / w;
                grid_n[cell] += 1;
                if !cov {
                    continue;
                }
                let l = luminance(c);
                lum[y * w + x] = l;
                sum += l;
                sum_sq += l * l;
                covered += 1;
                grid_sum[cell] += l;
                for ch in 0..3 {
                    hist[ch][c[ch] as usize * HIST_BINS / 256] += 1;
                    feat_hist[ch * b + c[ch] as usize * b / 256] += 1;
                }
            }
        }

        let coverage = covered as f64 / total as f64;
        let (contrast, color_entropy, edges) = if covered == 0 {
            (0.0, 0.0, 0.0)
        } else {
            let mean = sum / covered as f64;
            let var = (sum_sq / covered as f64 - mean * mean).max(0.0);
            let contrast = (2.0 * var.sqrt()).min(1.0);
            let max_h = (HIST_BINS as f64).ln();
            let color_entropy = hist.iter().map(|hc| entropy(hc, covered)).sum::<f64>() / (3.0 * max_h);
            let (mut pairs, mut strong) = (0u32, 0u32);
            for y in 0..h {
                for x in 0..w {
                    let l = lum[y * w + x];
                    if l.is_nan() {
                        continue;
                    }
                    for (nx, ny) in [(x + 1, y), (x, y + 1)] {
                        if nx < w && ny < h {
                            let m = lum[ny * w + nx];
                            if !m.is_nan() {
                                pairs += 1;
                                if (l - m).abs() > EDGE_THRESHOLD {
                                    strong += 1;
                                }
                            }
                        }
                    }
                }
            }
            let edges = if pairs == 0 { 0.0 } else { strong as f64 / pairs as f64 };
            (contrast, color_entropy, edges)
        };
        let score = MAX_SCORE * (coverage * (contrast + color_entropy + edges) + coverage) / 4.0;

        let mut feature = Vec::with_capacity(self.dim);
        feature.extend(grid_sum.iter().zip(&grid_n).map(|(s, &n)| if n == 0 { 0.0 } else { s / n as f64 }));
        feature.extend(feat_hist.iter().map(|&c| c as f64 / total as f64));
        feature.resize(self.dim - 1, 0.0);
        feature.push(1.0 - coverage);
        Ok(PatchScore { score, feature })
    }
}

/// Adapts a closure into a [`PatchScorer`]; the hook for external models.
pub struct FnScorer<F> {
    dim: usize,
    f: F,
}

impl<F> FnScorer<F>
where
    F: Fn(&PatchView<'_>) -> Result<PatchScore> + Send + Sync,
{
    pub fn new(feature_dim: usize, f: F) -> Self {
        FnScorer { dim: feature_dim, f }
    }
}

impl<F> fmt::Debug for FnScorer<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnScorer").field("dim", &self.dim).finish()
    }
}

impl<F> PatchScorer for FnScorer<F>
where
    F: Fn(&PatchView<'_>) -> Result<PatchScore> + Send + Sync,
{
    fn feature_dim(&self) -> usize {
        self.dim
    }

    fn score(&self, patch: &PatchView<'_>) -> Result<PatchScore> {
        (self.f)(patch)
    }
}
