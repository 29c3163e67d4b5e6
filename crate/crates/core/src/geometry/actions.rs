use serde::{Deserialize, Serialize};

use super::{strip_pack, CollageState, ImagePlacement, Phase};
use crate::error::{CollageError, Result};

pub const MAX_ANGLE_DEG: f64 = 45.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LayerOp {
    Top,
    Bottom,
    Keep,
}

/// Moves, restacks and rotates one image. The displacement is relative to
/// the image's current center; the center is then clamped so that at least
/// half of the image's extent stays on canvas along each axis (a quarter of
/// its area), or the canvas is fully covered when the image is larger than
/// twice the canvas.
pub fn apply_detail_action(
    state: &CollageState,
    image_id: usize,
    dx: f64,
    dy: f64,
    layer_op: LayerOp,
    d_angle: f64,
) -> Result<CollageState> {
    if state.phase != Phase::Detail {
        return Err(CollageError::Phase { phase: state.phase, action: format!("detail(image={image_id})") });
    }
    if image_id >= state.placements.len() {
        return Err(CollageError::InvalidAction(format!(
            "image {image_id} out of range for {} images",
            state.placements.len()
        )));
    }
    let mut next = state.clone();
    {
        let p = &mut next.placements[image_id];
        p.center_x = clamp_axis(p.center_x + dx, p.width, state.canvas.width as f64);
        p.center_y = clamp_axis(p.center_y + dy, p.height, state.canvas.height as f64);
        p.angle_deg = (p.angle_deg + d_angle).clamp(-MAX_ANGLE_DEG, MAX_ANGLE_DEG);
    }
    match layer_op {
        LayerOp::Keep => {}
        LayerOp::Top => restack(&mut next.placements, image_id, true),
        LayerOp::Bottom => restack(&mut next.placements, image_id, false),
    }
    next.step_index += 1;
    Ok(next)
}

fn clamp_axis(center: f64, extent: f64, canvas: f64) -> f64 {
    if extent <= 2.0 * canvas {
        center.clamp(0.0, canvas)
    } else {
        center.clamp(canvas - extent / 2.0, extent / 2.0)
    }
}

/// Moves `id` to the top (or bottom) of the stack and renumbers all layers
/// to `0..n`, keeping the relative order of the others.
fn restack(placements: &mut [ImagePlacement], id: usize, top: bool) {
    let mut ids: Vec<usize> = (0..placements.len()).filter(|&k| k != id).collect();
    ids.sort_by_key(|&k| (placements[k].layer, k));
    if top {
        ids.push(id);
    } else {
        ids.insert(0, id);
    }
    for (layer, k) in ids.into_iter().enumerate() {
        placements[k].layer = layer as u32;
    }
}

/// Exchanges positions `i` and `j` of the layout order and regenerates the
/// placements from the strip-packing initializer. Detail adjustments made
/// before the switch are discarded.
pub fn apply_switch(state: &CollageState, i: usize, j: usize) -> Result<CollageState> {
    if state.phase != Phase::Layout {
        return Err(CollageError::Phase { phase: state.phase, action: format!("switch({i},{j})") });
    }
    let n = state.order.len();
    if i == j || i >= n || j >= n {
        return Err(CollageError::InvalidAction(format!("switch({i},{j}) with {n} images")));
    }
    let mut next = state.clone();
    next.order.swap(i, j);
    next.placements = strip_pack(&state.canvas, &state.sources, &next.order)?;
    next.step_index += 1;
    Ok(next)
}
