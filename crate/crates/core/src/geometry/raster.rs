use image::{Rgb, RgbImage};
use serde::{Deserialize, Serialize};

use super::{Canvas, CollageState, ImagePlacement, ImageSet, Rect};
use crate::error::{CollageError, Result};

/// `top_index` value for pixels no image covers.
pub const BLANK: u32 = u32::MAX;

/// Canvas color for uncovered pixels.
pub const BACKGROUND: [u8; 3] = [255, 255, 255];

#[derive(Debug, Clone, PartialEq)]
pub struct RasterBuffers {
    pub width: u32,
    pub height: u32,
    /// Row-major; true when at least one image covers the pixel center.
    pub occupancy: Vec<bool>,
    /// Row-major id of the topmost image, or [`BLANK`].
    pub top_index: Vec<u32>,
    pub pixels: RgbImage,
}

impl RasterBuffers {
    pub fn len(&self) -> usize {
        self.occupancy.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupancy.is_empty()
    }

    #[inline]
    pub fn index(&self, x: u32, y: u32) -> usize {
        y as usize * self.width as usize + x as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlankArea {
    pub pixels: u64,
    pub fraction: f64,
}

/// Whether the canvas point `(x, y)` lies in the placement's rotated
/// rectangle. Edges are half-open so abutting images never share a pixel.
#[inline]
pub fn point_in_placement(p: &ImagePlacement, x: f64, y: f64) -> bool {
    let (s, c) = p.angle_deg.to_radians().sin_cos();
    local_inside(p, c, s, x, y).is_some()
}

/// Local `(u, v)` in `[0, w) x [0, h)` when inside.
#[inline]
fn local_inside(p: &ImagePlacement, cos: f64, sin: f64, x: f64, y: f64) -> Option<(f64, f64)> {
    let dx = x - p.center_x;
    let dy = y - p.center_y;
    let u = dx * cos + dy * sin + p.width / 2.0;
    let v = -dx * sin + dy * cos + p.height / 2.0;
    (u >= 0.0 && u < p.width && v >= 0.0 && v < p.height).then_some((u, v))
}

/// Paints the collage bottom layer first. A pixel is covered when its
/// center lies inside a rotated image rectangle; colors are sampled
/// nearest-neighbour from the source image.
pub fn rasterize(state: &CollageState, images: &ImageSet) -> Result<RasterBuffers> {
    let (w, h) = (state.canvas.width, state.canvas.height);
    let n = (w * h) as usize;
    let mut occupancy = vec![false; n];
    let mut top_index = vec![BLANK; n];
    let mut pixels = RgbImage::from_pixel(w, h, Rgb(BACKGROUND));

    for id in state.paint_order() {
        let p = &state.placements[id];
        let src = images.images.get(p.image_id).ok_or_else(|| {
            CollageError::invalid_input(format!(
                "placement references image {} but only {} are loaded",
                p.image_id,
                images.len()
            ))
        })?;
        if p.width <= 0.0 || p.height <= 0.0 {
            continue;
        }
        let (x0, y0, x1, y1) = p.bounds();
        let px0 = (x0.floor().max(0.0)) as u32;
        let py0 = (y0.floor().max(0.0)) as u32;
        let px1 = (x1.ceil().min(w as f64)).max(0.0) as u32;
        let py1 = (y1.ceil().min(h as f64)).max(0.0) as u32;
        let (sin, cos) = p.angle_deg.to_radians().sin_cos();
        let sx = src.width() as f64 / p.width;
        let sy = src.height() as f64 / p.height;
        for py in py0..py1 {
            for px in px0..px1 {
                let Some((u, v)) = local_inside(p, cos, sin, px as f64 + 0.5, py as f64 + 0.5) else {
                    continue;
                };
                let i = py as usize * w as usize + px as usize;
                occupancy[i] = true;
                top_index[i] = p.image_id as u32;
                let ix = ((u * sx) as u32).min(src.width() - 1);
                let iy = ((v * sy) as u32).min(src.height() - 1);
                pixels.put_pixel(px, py, *src.get_pixel(ix, iy));
            }
        }
    }
    Ok(RasterBuffers { width: w, height: h, occupancy, top_index, pixels })
}

pub fn blank_area(buffers: &RasterBuffers) -> BlankArea {
    let pixels = buffers.occupancy.iter().filter(|&&o| !o).count() as u64;
    let total = buffers.occupancy.len().max(1) as f64;
    BlankArea { pixels, fraction: pixels as f64 / total }
}

/// Renders the collage onto `out`, a canvas of the same aspect ratio at
/// another resolution.
pub fn render(state: &CollageState, images: &ImageSet, out: Canvas) -> Result<RgbImage> {
    let sx = out.width as f64 / state.canvas.width as f64;
    let sy = out.height as f64 / state.canvas.height as f64;
    let mut scaled = state.clone();
    scaled.canvas = out;
    for p in &mut scaled.placements {
        p.center_x *= sx;
        p.width *= sx;
        p.center_y *= sy;
        p.height *= sy;
    }
    Ok(rasterize(&scaled, images)?.pixels)
}

/// Tightest rectangle containing every occupied pixel.
pub fn content_bbox(buffers: &RasterBuffers) -> Result<Rect> {
    let mut x0 = u32::MAX;
    let mut y0 = u32::MAX;
    let mut x1 = 0;
    let mut y1 = 0;
    for y in 0..buffers.height {
        for x in 0..buffers.width {
            if buffers.occupancy[buffers.index(x, y)] {
                x0 = x0.min(x);
                y0 = y0.min(y);
                x1 = x1.max(x + 1);
                y1 = y1.max(y + 1);
            }
        }
    }
    if x0 == u32::MAX {
        return Err(CollageError::EmptyContent);
    }
    Ok(Rect::new(x0 as i32, y0 as i32, x1 - x0, y1 - y0))
}
