//! Canvas, image placements and the collage state the environment mutates.
//!
//! Placements are stored by image id (`placements[k].image_id == k`); the
//! separate `order` permutation is what layout switches rearrange.

mod actions;
mod images;
mod layout;
mod raster;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{CollageError, Result};

pub use actions::{apply_detail_action, apply_switch, LayerOp, MAX_ANGLE_DEG};
pub use images::{image_files, ImageSet};
pub use layout::strip_pack;
pub use raster::{
    blank_area, content_bbox, point_in_placement, rasterize, render, BlankArea, RasterBuffers, BACKGROUND, BLANK,
};

/// Smallest canvas side accepted anywhere in the pipeline.
pub const MIN_CANVAS_SIDE: u32 = 64;

/// Serialized as `"W:H"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct AspectRatio {
    pub width: u32,
    pub height: u32,
}

impl AspectRatio {
    pub fn new(width: u32, height: u32) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(CollageError::invalid_input(format!("aspect ratio {width}:{height} must have positive terms")));
        }
        let g = gcd(width, height);
        Ok(AspectRatio { width: width / g, height: height / g })
    }

    pub fn as_f64(&self) -> f64 {
        self.width as f64 / self.height as f64
    }
}

impl FromStr for AspectRatio {
    type Err = CollageError;

    fn from_str(s: &str) -> Result<Self> {
        let (w, h) =
            s.split_once(':').ok_or_else(|| CollageError::invalid_input(format!("aspect `{s}` is not W:H")))?;
        let parse = |t: &str| {
            t.trim().parse::<u32>().map_err(|_| CollageError::invalid_input(format!("aspect `{s}` is not W:H")))
        };
        AspectRatio::new(parse(w)?, parse(h)?)
    }
}

impl fmt::Display for AspectRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.width, self.height)
    }
}

impl TryFrom<String> for AspectRatio {
    type Error = CollageError;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<AspectRatio> for String {
    fn from(a: AspectRatio) -> String {
        a.to_string()
    }
}

fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Canvas {
    pub width: u32,
    pub height: u32,
    pub aspect: AspectRatio,
}

impl Canvas {
    /// A canvas with explicit dimensions; the aspect ratio is the reduced
    /// `width:height`.
    pub fn new(width: u32, height: u32) -> Result<Self> {
        if width < MIN_CANVAS_SIDE || height < MIN_CANVAS_SIDE {
            return Err(CollageError::invalid_input(format!(
                "canvas {width}x{height} is below the {MIN_CANVAS_SIDE}px minimum"
            )));
        }
        Ok(Canvas { width, height, aspect: AspectRatio::new(width, height)? })
    }

    /// The canvas whose longer side is `long_side` pixels and whose shape
    /// matches `aspect` to within one pixel of rounding.
    pub fn with_aspect(aspect: AspectRatio, long_side: u32) -> Result<Self> {
        let r = aspect.as_f64();
        let (width, height) = if r >= 1.0 {
            (long_side, (long_side as f64 / r).round() as u32)
        } else {
            ((long_side as f64 * r).round() as u32, long_side)
        };
        if width < MIN_CANVAS_SIDE || height < MIN_CANVAS_SIDE {
            return Err(CollageError::invalid_input(format!(
                "canvas {width}x{height} for aspect {aspect} is below the {MIN_CANVAS_SIDE}px minimum"
            )));
        }
        Ok(Canvas { width, height, aspect })
    }

    pub fn area(&self) -> f64 {
        self.width as f64 * self.height as f64
    }

    pub fn full_rect(&self) -> Rect {
        Rect::new(0, 0, self.width, self.height)
    }
}

/// Axis-aligned integer rectangle. `x`/`y` may be negative for crop
/// windows that reach past the canvas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Rect {
    pub x: i32,
    pub y: i32,
    pub width: u32,
    pub height: u32,
}

impl Rect {
    pub fn new(x: i32, y: i32, width: u32, height: u32) -> Self {
        Rect { x, y, width, height }
    }

    pub fn area(&self) -> u64 {
        self.width as u64 * self.height as u64
    }

    pub fn right(&self) -> i32 {
        self.x + self.width as i32
    }

    pub fn bottom(&self) -> i32 {
        self.y + self.height as i32
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x as f64 + self.width as f64 / 2.0, self.y as f64 + self.height as f64 / 2.0)
    }

    pub fn within(&self, width: u32, height: u32) -> bool {
        self.x >= 0 && self.y >= 0 && self.right() <= width as i32 && self.bottom() <= height as i32
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Size {
    pub width: u32,
    pub height: u32,
}

impl Size {
    pub fn aspect(&self) -> f64 {
        self.width as f64 / self.height as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    Layout,
    Detail,
}

/// One image on the canvas. Width and height are the displayed size in
/// canvas pixels; the image rotates about its center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImagePlacement {
    pub image_id: usize,
    pub center_x: f64,
    pub center_y: f64,
    pub angle_deg: f64,
    pub layer: u32,
    pub width: f64,
    pub height: f64,
}

impl ImagePlacement {
    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    /// Axis-aligned bounds of the rotated rectangle as `(x0, y0, x1, y1)`.
    pub fn bounds(&self) -> (f64, f64, f64, f64) {
        let (s, c) = self.angle_deg.to_radians().sin_cos();
        let hw = (self.width * c.abs() + self.height * s.abs()) / 2.0;
        let hh = (self.width * s.abs() + self.height * c.abs()) / 2.0;
        (self.center_x - hw, self.center_y - hh, self.center_x + hw, self.center_y + hh)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollageState {
    pub canvas: Canvas,
    /// Indexed by image id.
    pub placements: Vec<ImagePlacement>,
    /// Permutation of image ids; the sequence the layout initializer packs.
    pub order: Vec<usize>,
    /// Source pixel size of each image, indexed by image id.
    pub sources: Vec<Size>,
    pub step_index: u32,
    pub phase: Phase,
}

impl CollageState {
    /// Initial state: strip-packed layout of `sources` in id order.
    pub fn initial(canvas: Canvas, sources: Vec<Size>) -> Result<Self> {
        let order: Vec<usize> = (0..sources.len()).collect();
        Self::from_order(canvas, sources, order)
    }

    pub fn from_order(canvas: Canvas, sources: Vec<Size>, order: Vec<usize>) -> Result<Self> {
        if sources.len() < 2 {
            return Err(CollageError::invalid_input(format!(
                "a collage needs at least 2 images, got {}",
                sources.len()
            )));
        }
        check_permutation(&order, sources.len())?;
        let placements = strip_pack(&canvas, &sources, &order)?;
        Ok(CollageState { canvas, placements, order, sources, step_index: 0, phase: Phase::Layout })
    }

    pub fn len(&self) -> usize {
        self.placements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.placements.is_empty()
    }

    /// Ids sorted bottom layer first.
    pub fn paint_order(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = (0..self.placements.len()).collect();
        ids.sort_by_key(|&k| (self.placements[k].layer, k));
        ids
    }
}

pub(crate) fn check_permutation(order: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if order.len() != n {
        return Err(CollageError::invalid_input("order is not a permutation"));
    }
    for &k in order {
        if k >= n || seen[k] {
            return Err(CollageError::invalid_input("order is not a permutation"));
        }
        seen[k] = true;
    }
    Ok(())
}
