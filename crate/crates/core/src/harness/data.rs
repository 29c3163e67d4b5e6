use std::path::Path;
use std::sync::Arc;

use crate::env::MAX_IMAGES;
use crate::error::{CollageError, Result};
use crate::geometry::ImageSet;
use crate::synth::synthetic_set;

/// An image set with the name it is reported under.
#[derive(Debug, Clone)]
pub struct NamedSet {
    pub name: String,
    pub images: Arc<ImageSet>,
}

/// Loads one set per subdirectory of `dir`, in sorted directory order.
pub fn load_sets(dir: &Path, max_side: u32) -> Result<Vec<NamedSet>> {
    let mut subdirs: Vec<_> =
        std::fs::read_dir(dir)?.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.is_dir()).collect();
    subdirs.sort();
    let mut sets = Vec::with_capacity(subdirs.len());
    for sub in subdirs {
        let images = ImageSet::load_dir(&sub, max_side)?;
        if images.len() < 2 || images.len() > MAX_IMAGES {
            return Err(CollageError::invalid_input(format!(
                "{} holds {} images; sets need 2..={MAX_IMAGES}",
                sub.display(),
                images.len()
            )));
        }
        let name = sub.file_name().unwrap_or_default().to_string_lossy().into_owned();
        sets.push(NamedSet { name, images: Arc::new(images) });
    }
    if sets.is_empty() {
        return Err(CollageError::invalid_input(format!("{} has no image-set subdirectories", dir.display())));
    }
    Ok(sets)
}

/// `count` synthetic sets whose sizes cycle through `sizes`.
pub fn synthetic_sets(seed: u64, count: usize, sizes: &[usize]) -> Result<Vec<NamedSet>> {
    if sizes.is_empty() {
        return Err(CollageError::invalid_input("no set sizes given"));
    }
    (0..count)
        .map(|k| {
            let n = sizes[k % sizes.len()];
            let set = synthetic_set(seed.wrapping_mul(1_000_003).wrapping_add(k as u64), n)?;
            Ok(NamedSet { name: format!("synth_{k:03}"), images: Arc::new(set) })
        })
        .collect()
}
