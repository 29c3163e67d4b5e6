use super::{Canvas, ImagePlacement, Size};
use crate::error::{CollageError, Result};

/// Deterministic strip packing: images in `order` are split into contiguous
/// rows of equal-height images, each row spanning the same width, and the
/// row stack is scaled uniformly to fit the canvas and centered. The row
/// count maximizing canvas coverage wins (fewest rows on ties). Images
/// never overlap.
///
/// Returns placements indexed by image id; layers follow `order`.
pub fn strip_pack(canvas: &Canvas, sources: &[Size], order: &[usize]) -> Result<Vec<ImagePlacement>> {
    let n = order.len();
    if n == 0 || n != sources.len() {
        return Err(CollageError::invalid_input("order does not match the image set"));
    }
    if sources.iter().any(|s| s.width == 0 || s.height == 0) {
        return Err(CollageError::invalid_input("image with zero extent"));
    }
    let aspects: Vec<f64> = order.iter().map(|&k| sources[k].aspect()).collect();
    let w = canvas.width as f64;
    let h = canvas.height as f64;

    let mut best: Option<(f64, Vec<usize>)> = None;
    for rows in 1..=n {
        let breaks = balanced_rows(&aspects, rows);
        let stack_h: f64 = row_sums(&aspects, &breaks).iter().map(|s| w / s).sum();
        let coverage = (stack_h / h).min(h / stack_h);
        if best.as_ref().is_none_or(|(c, _)| coverage > *c + 1e-12) {
            best = Some((coverage, breaks));
        }
    }
    let (_, breaks) = best.expect("at least one row count");
    let sums = row_sums(&aspects, &breaks);
    let stack_h: f64 = sums.iter().map(|s| w / s).sum();
    let scale = (h / stack_h).min(1.0);
    let row_w = scale * w;
    let x0 = (w - row_w) / 2.0;
    let mut y = (h - scale * stack_h) / 2.0;

    let mut placements = vec![None; n];
    let mut start = 0;
    for (row, &end) in breaks.iter().enumerate() {
        let row_h = row_w / sums[row];
        let mut x = x0;
        for (pos, &id) in order.iter().enumerate().take(end).skip(start) {
            let iw = aspects[pos] * row_h;
            placements[id] = Some(ImagePlacement {
                image_id: id,
                center_x: x + iw / 2.0,
                center_y: y + row_h / 2.0,
                angle_deg: 0.0,
                layer: pos as u32,
                width: iw,
                height: row_h,
            });
            x += iw;
        }
        y += row_h;
        start = end;
    }
    Ok(placements.into_iter().map(|p| p.expect("every id placed")).collect())
}

fn row_sums(aspects: &[f64], breaks: &[usize]) -> Vec<f64> {
    let mut start = 0;
    breaks
        .iter()
        .map(|&end| {
            let s = aspects[start..end].iter().sum();
            start = end;
            s
        })
        .collect()
}

/// Contiguous partition of `aspects` into `rows` non-empty groups minimizing
/// the squared deviation of each group's aspect sum from the mean. Returns
/// exclusive end indices.
fn balanced_rows(aspects: &[f64], rows: usize) -> Vec<usize> {
    let n = aspects.len();
    let mut prefix = vec![0.0; n + 1];
    for (i, a) in aspects.iter().enumerate() {
        prefix[i + 1] = prefix[i] + a;
    }
    let target = prefix[n] / rows as f64;
    let cost = |i: usize, j: usize| {
        let d = prefix[j] - prefix[i] - target;
        d * d
    };
    // dp[r][j]: best cost of splitting the first j items into r rows.
    let inf = f64::INFINITY;
    let mut dp = vec![vec![inf; n + 1]; rows + 1];
    let mut cut = vec![vec![0usize; n + 1]; rows + 1];
    dp[0][0] = 0.0;
    for r in 1..=rows {
        for j in r..=n {
            for i in (r - 1)..j {
                let c = dp[r - 1][i] + cost(i, j);
                if c < dp[r][j] - 1e-15 {
                    dp[r][j] = c;
                    cut[r][j] = i;
                }
            }
        }
    }
    let mut ends = Vec::with_capacity(rows);
    let mut j = n;
    for r in (1..=rows).rev() {
        ends.push(j);
        j = cut[r][j];
    }
    ends.reverse();
    ends
}
