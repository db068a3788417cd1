use std::io::Cursor;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::Image2D;

fn unsupported(path: &Path, reason: impl Into<String>) -> Error {
    Error::UnsupportedPng {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

/// Decodes an 8-bit grayscale PNG.
pub fn decode_png(bytes: &[u8], path: &Path) -> Result<Image2D> {
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::IDENTITY);
    let mut reader = decoder.read_info().map_err(|e| unsupported(path, e.to_string()))?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| unsupported(path, "image too large"))?;
    let mut buf = vec![0u8; size];
    let info = reader.next_frame(&mut buf).map_err(|e| unsupported(path, e.to_string()))?;
    if info.color_type != png::ColorType::Grayscale || info.bit_depth != png::BitDepth::Eight {
        return Err(unsupported(path, format!("{:?} at {:?}", info.color_type, info.bit_depth)));
    }
    let (w, h) = (info.width as usize, info.height as usize);
    buf.truncate(info.buffer_size());
    if buf.len() != w * h {
        return Err(Error::PixelCount {
            path: path.to_path_buf(),
            expected: w * h,
            found: buf.len(),
        });
    }
    Image2D::new(w, h, buf)
}

pub fn encode_png(img: &Image2D) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    let to_err = |e: png::EncodingError| Error::Domain(format!("PNG encoding failed: {e}"));
    {
        let mut enc = png::Encoder::new(&mut out, img.width() as u32, img.height() as u32);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header().map_err(to_err)?;
        writer.write_image_data(img.data()).map_err(to_err)?;
    }
    Ok(out)
}
