use std::path::{Path, PathBuf};

use image::imageops::FilterType;
use image::RgbImage;

use super::Size;
use crate::error::{CollageError, Result};

const EXTENSIONS: [&str; 3] = ["png", "jpg", "jpeg"];

/// The photos of one episode, in input order.
#[derive(Debug, Clone)]
pub struct ImageSet {
    pub images: Vec<RgbImage>,
    pub names: Vec<String>,
}

impl ImageSet {
    pub fn new(images: Vec<RgbImage>) -> Result<Self> {
        if images.iter().any(|im| im.width() == 0 || im.height() == 0) {
            return Err(CollageError::invalid_input("image with zero extent"));
        }
        let names = (0..images.len()).map(|k| format!("image-{k}")).collect();
        Ok(ImageSet { images, names })
    }

    /// Loads every PNG/JPEG in `dir`, sorted by file name. Images larger
    /// than `max_side` on their long edge are downsampled.
    pub fn load_dir(dir: &Path, max_side: u32) -> Result<Self> {
        let files = image_files(dir)?;
        let mut images = Vec::with_capacity(files.len());
        let mut names = Vec::with_capacity(files.len());
        for path in files {
            let img = image::open(&path)?.to_rgb8();
            images.push(shrink(img, max_side));
            names.push(path.file_name().unwrap_or_default().to_string_lossy().into_owned());
        }
        Ok(ImageSet { images, names })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn sizes(&self) -> Vec<Size> {
        self.images.iter().map(|im| Size { width: im.width(), height: im.height() }).collect()
    }
}

/// Sorted image paths directly inside `dir`.
pub fn image_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
        })
        .collect();
    files.sort();
    Ok(files)
}

fn shrink(img: RgbImage, max_side: u32) -> RgbImage {
    let long = img.width().max(img.height());
    if max_side == 0 || long <= max_side {
        return img;
    }
    let f = max_side as f64 / long as f64;
    let w = ((img.width() as f64 * f).round() as u32).max(1);
    let h = ((img.height() as f64 * f).round() as u32).max(1);
    image::imageops::resize(&img, w, h, FilterType::Triangle)
}
