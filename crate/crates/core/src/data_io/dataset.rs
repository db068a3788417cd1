use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::{load_grayscale, load_mask, save_grayscale, save_mask};
use crate::error::{Error, Result};
use crate::image::{Image2D, MaskImage};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sample {
    pub name: String,
    pub image: Image2D,
    pub mask: MaskImage,
}

impl Sample {
    pub fn new(name: impl Into<String>, image: Image2D, mask: MaskImage) -> Result<Self> {
        let name = name.into();
        if image.dims() != mask.dims() {
            return Err(Error::shape(
                "Sample",
                format!("mask {:?} matching image of {name}", image.dims()),
                format!("{:?}", mask.dims()),
            ));
        }
        Ok(Self { name, image, mask })
    }
}

/// Image/mask pairs sorted by name.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Dataset {
    samples: Vec<Sample>,
}

impl Dataset {
    /// Sorts by name; names must be unique.
    pub fn new(mut samples: Vec<Sample>) -> Result<Self> {
        samples.sort_by(|a, b| a.name.cmp(&b.name));
        if let Some(w) = samples.windows(2).find(|w| w[0].name == w[1].name) {
            return Err(Error::Domain(format!("duplicate sample name {}", w[0].name)));
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Sample> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

const EXTENSIONS: [&str; 2] = ["pgm", "png"];

/// `stem → path` for every supported file in `dir`.
fn list(dir: &Path, label: &str, orphans: &mut Vec<String>) -> Result<BTreeMap<String, PathBuf>> {
    let mut out = BTreeMap::new();
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
        if !path.is_file() || !ext.is_some_and(|e| EXTENSIONS.contains(&e.as_str())) {
            continue;
        }
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
        if let Some(prev) = out.insert(stem.clone(), path.clone()) {
            // Two files with one stem (e.g. a.pgm and a.png) cannot be paired.
            orphans.push(format!("{label}/{} (duplicates {})", file_name(&path), file_name(&prev)));
        }
    }
    Ok(out)
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Loads `<root>/images/<name>.(pgm|png)` paired with
/// `<root>/masks/<name>.(pgm|png)`. Masks are binarized at 128.
pub fn load_dataset(root: impl AsRef<Path>) -> Result<Dataset> {
    let root = root.as_ref();
    let mut orphans = Vec::new();
    let images = list(&root.join("images"), "images", &mut orphans)?;
    let masks = list(&root.join("masks"), "masks", &mut orphans)?;
    for (stem, path) in &images {
        if !masks.contains_key(stem) {
            orphans.push(format!("images/{}", file_name(path)));
        }
    }
    for (stem, path) in &masks {
        if !images.contains_key(stem) {
            orphans.push(format!("masks/{}", file_name(path)));
        }
    }
    if !orphans.is_empty() {
        return Err(Error::Pairing { orphans });
    }
    if images.is_empty() {
        return Err(Error::EmptyDataset(root.display().to_string()));
    }
    let pairs: Vec<_> = images.iter().map(|(stem, ip)| (stem, ip, &masks[stem])).collect();
    let samples = pairs
        .par_iter()
        .map(|(stem, ip, mp)| Sample::new(stem.as_str(), load_grayscale(ip)?, load_mask(mp)?))
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(samples)
}

/// Writes the directory layout read by [`load_dataset`], all files PGM.
pub fn save_dataset(root: impl AsRef<Path>, dataset: &Dataset) -> Result<()> {
    let root = root.as_ref();
    for sub in ["images", "masks"] {
        let d = root.join(sub);
        fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
    }
    for s in dataset.samples() {
        save_grayscale(root.join("images").join(format!("{}.pgm", s.name)), &s.image)?;
        save_mask(root.join("masks").join(format!("{}.pgm", s.name)), &s.mask)?;
    }
    Ok(())
}
