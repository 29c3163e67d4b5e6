//! Procedural stand-ins for photo sets: skies with horizons, textured
//! surfaces, bold shapes and nearly flat frames, at mixed sizes and
//! orientations.

use image::{Rgb, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::geometry::ImageSet;

fn lerp(a: [f64; 3], b: [f64; 3], t: f64) -> [f64; 3] {
    [a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t, a[2] + (b[2] - a[2]) * t]
}

fn rgb(c: [f64; 3]) -> Rgb<u8> {
    Rgb(c.map(|v| v.clamp(0.0, 255.0).round() as u8))
}

fn color<R: Rng>(rng: &mut R) -> [f64; 3] {
    [rng.gen_range(0.0..255.0), rng.gen_range(0.0..255.0), rng.gen_range(0.0..255.0)]
}

fn landscape<R: Rng>(rng: &mut R, w: u32, h: u32) -> RgbImage {
    let (sky_top, sky_low) = (color(rng), color(rng));
    let ground = color(rng);
    let horizon = rng.gen_range(0.3..0.7) * h as f64;
    let amp = rng.gen_range(2.0..10.0);
    let freq = rng.gen_range(0.02..0.12);
    let phase = rng.gen_range(0.0..6.3);
    let grain: u64 = rng.gen();
    RgbImage::from_fn(w, h, |x, y| {
        let line = horizon + amp * (x as f64 * freq + phase).sin();
        if (y as f64) < line {
            rgb(lerp(sky_top, sky_low, y as f64 / line.max(1.0)))
        } else {
            let n = ((x as u64 * 73856093) ^ (y as u64 * 19349663) ^ grain) % 41;
            rgb(ground.map(|c| c + n as f64 - 20.0))
        }
    })
}

fn texture<R: Rng>(rng: &mut R, w: u32, h: u32) -> RgbImage {
    let (a, b) = (color(rng), color(rng));
    let fx = rng.gen_range(0.05..0.5);
    let fy = rng.gen_range(0.05..0.5);
    let salt: u64 = rng.gen();
    RgbImage::from_fn(w, h, |x, y| {
        let wave = 0.5 + 0.25 * ((x as f64 * fx).sin() + (y as f64 * fy).cos());
        let n = (((x as u64).wrapping_mul(2654435761) ^ (y as u64).wrapping_mul(40503) ^ salt) % 1000) as f64 / 1000.0;
        rgb(lerp(a, b, (0.7 * wave + 0.3 * n).clamp(0.0, 1.0)))
    })
}

fn shapes<R: Rng>(rng: &mut R, w: u32, h: u32) -> RgbImage {
    let bg = color(rng);
    let mut img = RgbImage::from_pixel(w, h, rgb(bg));
    for _ in 0..rng.gen_range(2..7) {
        let c = rgb(color(rng));
        let (cx, cy) = (rng.gen_range(0.0..w as f64), rng.gen_range(0.0..h as f64));
        let r = rng.gen_range(0.1..0.35) * w.min(h) as f64;
        let disc = rng.gen_bool(0.5);
        for y in 0..h {
            for x in 0..w {
                let (dx, dy) = (x as f64 + 0.5 - cx, y as f64 + 0.5 - cy);
                let inside = if disc { dx * dx + dy * dy <= r * r } else { dx.abs() <= r && dy.abs() <= r * 0.6 };
                if inside {
                    img.put_pixel(x, y, c);
                }
            }
        }
    }
    img
}

fn flat<R: Rng>(rng: &mut R, w: u32, h: u32) -> RgbImage {
    let base = color(rng);
    let tilt = color(rng);
    RgbImage::from_fn(w, h, |x, y| {
        let t = 0.1 * (x as f64 / w as f64 + y as f64 / h as f64) / 2.0;
        rgb(lerp(base, tilt, t))
    })
}

/// One synthetic photo with long side in `48..=120` and aspect ratio in
/// roughly `0.6..1.7`.
pub fn synthetic_photo<R: Rng>(rng: &mut R) -> RgbImage {
    let long = rng.gen_range(48..=120u32);
    let aspect: f64 = rng.gen_range(0.6..1.7);
    let (w, h) = if aspect >= 1.0 {
        (long, ((long as f64 / aspect).round() as u32).max(16))
    } else {
        (((long as f64 * aspect).round() as u32).max(16), long)
    };
    match rng.gen_range(0..4) {
        0 => landscape(rng, w, h),
        1 => texture(rng, w, h),
        2 => shapes(rng, w, h),
        _ => flat(rng, w, h),
    }
}

/// A reproducible set of `n` synthetic photos.
pub fn synthetic_set(seed: u64, n: usize) -> Result<ImageSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let images: Vec<RgbImage> = (0..n).map(|_| synthetic_photo(&mut rng)).collect();
    let names = (0..n).map(|k| format!("synth_{seed}_{k:02}.png")).collect();
    let mut set = ImageSet::new(images)?;
    set.names = names;
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproducible_and_sized() {
        let a = synthetic_set(5, 6).unwrap();
        let b = synthetic_set(5, 6).unwrap();
        assert_eq!(a.images, b.images);
        assert_ne!(a.images, synthetic_set(6, 6).unwrap().images);
        for img in &a.images {
            let (w, h) = img.dimensions();
            assert!(w.max(h) <= 120 && w.min(h) >= 16);
        }
    }
}
