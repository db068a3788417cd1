use std::path::Path;

use crate::error::{Error, Result};
use crate::image::Image2D;

/// `P5\n<w> <h>\n255\n` followed by raw row-major bytes.
pub fn encode_pgm(img: &Image2D) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.data());
    out
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl Header<'_> {
    fn malformed(&self, reason: impl Into<String>) -> Error {
        Error::MalformedHeader {
            path: self.path.to_path_buf(),
            reason: reason.into(),
        }
    }

    /// Skips whitespace and `#` comments between tokens.
    fn skip_separators(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while self.bytes.get(self.pos).is_some_and(|&c| c != b'\n') {
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u32> {
        let start = self.pos;
        self.skip_separators();
        if self.pos == start {
            return Err(self.malformed(format!("missing whitespace before {what}")));
        }
        let begin = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if begin == self.pos {
            return Err(self.malformed(format!("expected {what}")));
        }
        std::str::from_utf8(&self.bytes[begin..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| self.malformed(format!("{what} out of range")))
    }
}

pub fn decode_pgm(bytes: &[u8], path: &Path) -> Result<Image2D> {
    if !bytes.starts_with(b"P5") {
        return Err(Error::UnknownMagic {
            path: path.to_path_buf(),
            magic: bytes.iter().take(2).copied().collect(),
        });
    }
    let mut h = Header { bytes, pos: 2, path };
    if !bytes.get(2).is_some_and(u8::is_ascii_whitespace) {
        return Err(h.malformed("missing whitespace after magic"));
    }
    let width = h.number("width")? as usize;
    let height = h.number("height")? as usize;
    let maxval = h.number("maxval")?;
    if maxval != 255 {
        return Err(Error::UnsupportedMaxval {
            path: path.to_path_buf(),
            maxval,
        });
    }
    if !bytes.get(h.pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(h.malformed("missing whitespace after maxval"));
    }
    let data = &bytes[h.pos + 1..];
    let expected = width
        .checked_mul(height)
        .ok_or_else(|| h.malformed("dimensions overflow"))?;
    if data.len() != expected {
        return Err(Error::PixelCount {
            path: path.to_path_buf(),
            expected,
            found: data.len(),
        });
    }
    if width == 0 || height == 0 {
        return Err(h.malformed("zero dimension"));
    }
    Image2D::new(width, height, data.to_vec())
}
