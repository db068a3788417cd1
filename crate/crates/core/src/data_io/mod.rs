//! Grayscale frame and mask files, paired datasets, and the synthetic cord
//! generator.
//!
//! Supported inputs are binary PGM (`P5`, maxval 255) and 8-bit grayscale
//! PNG. Masks are always written as PGM with `0 → 0`, `1 → 255`.

mod dataset;
mod pgm;
mod png_io;
mod synth;

pub use dataset::{load_dataset, save_dataset, Dataset, Sample};
pub use pgm::{decode_pgm, encode_pgm};
pub use png_io::{decode_png, encode_png};
pub use synth::{gen_synthetic, render_sample};

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::{Image2D, MaskImage};

const PNG_SIGNATURE: [u8; 8] = [0x89, b'P', b'N', b'G', b'\r', b'\n', 0x1A, b'\n'];

/// Decodes PGM or PNG bytes, dispatching on the magic number.
pub fn decode_grayscale(bytes: &[u8], path: &Path) -> Result<Image2D> {
    if bytes.starts_with(b"P5") {
        decode_pgm(bytes, path)
    } else if bytes.starts_with(&PNG_SIGNATURE) {
        decode_png(bytes, path)
    } else {
        Err(Error::UnknownMagic {
            path: path.to_path_buf(),
            magic: bytes.iter().take(8).copied().collect(),
        })
    }
}

pub fn load_grayscale(path: impl AsRef<Path>) -> Result<Image2D> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_grayscale(&bytes, path)
}

/// Loads a grayscale file and binarizes it at 128.
pub fn load_mask(path: impl AsRef<Path>) -> Result<MaskImage> {
    Ok(MaskImage::binarize_gray(&load_grayscale(path)?))
}

/// Writes PGM, or PNG when the extension is `.png`.
pub fn save_grayscale(path: impl AsRef<Path>, img: &Image2D) -> Result<()> {
    let path = path.as_ref();
    let is_png = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("png"));
    let bytes = if is_png { encode_png(img)? } else { encode_pgm(img) };
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Writes `mask` as PGM with values 0 and 255.
pub fn save_mask(path: impl AsRef<Path>, mask: &MaskImage) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_pgm(&mask.to_gray())).map_err(|e| Error::io(path, e))
}
