//! Frame ↔ tile geometry: reflect-pad to a multiple of the tile size, cut
//! into non-overlapping row-major tiles, and reassemble.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::{Image2D, MaskImage, Plane, ProbMap};
use crate::metrics::binarize;
use crate::scalar::Scalar;
use crate::unet::{forward, UNetParams};
use crate::kernels::sigmoid;

pub const DEFAULT_TILE: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TileGrid {
    pub width: usize,
    pub height: usize,
    pub tile: usize,
    pub cols: usize,
    pub rows: usize,
}

impl TileGrid {
    pub fn padded_width(&self) -> usize {
        self.cols * self.tile
    }

    pub fn padded_height(&self) -> usize {
        self.rows * self.tile
    }

    pub fn tile_count(&self) -> usize {
        self.cols * self.rows
    }

    /// Top-left corner of tile `i` in the padded frame.
    pub fn origin(&self, i: usize) -> (usize, usize) {
        ((i % self.cols) * self.tile, (i / self.cols) * self.tile)
    }
}

pub fn compute_grid(width: usize, height: usize, tile: usize) -> Result<TileGrid> {
    if width == 0 || height == 0 || tile == 0 {
        return Err(Error::Domain(format!("grid needs positive sizes, got {width}x{height} tile {tile}")));
    }
    Ok(TileGrid {
        width,
        height,
        tile,
        cols: width.div_ceil(tile),
        rows: height.div_ceil(tile),
    })
}

/// Mirror index without repeating the edge: `… c b [a b c] b a …`.
#[inline]
fn reflect(i: usize, len: usize) -> usize {
    if i < len {
        i
    } else {
        2 * (len - 1) - i
    }
}

/// Reflect-pads the right and bottom edges up to the grid's padded size.
pub fn pad_image<P: Copy>(img: &Plane<P>, grid: &TileGrid) -> Result<Plane<P>> {
    let (w, h) = img.dims();
    if (w, h) != (grid.width, grid.height) {
        return Err(Error::shape("pad_image", format!("{}x{}", grid.width, grid.height), format!("{w}x{h}")));
    }
    let (pw, ph) = (grid.padded_width(), grid.padded_height());
    if pw - w >= w || ph - h >= h {
        return Err(Error::Domain(format!(
            "reflect padding {}x{} must be smaller than the image {w}x{h}",
            pw - w,
            ph - h
        )));
    }
    if (pw, ph) == (w, h) {
        return Ok(img.clone());
    }
    Plane::from_fn(pw, ph, |x, y| img.get(reflect(x, w), reflect(y, h)))
}

/// Cuts a padded frame into `cols × rows` tiles in row-major order.
pub fn split_image<P: Copy>(img: &Plane<P>, grid: &TileGrid) -> Result<Vec<Plane<P>>> {
    let (pw, ph) = (grid.padded_width(), grid.padded_height());
    if img.dims() != (pw, ph) {
        return Err(Error::shape("split_image", format!("{pw}x{ph}"), format!("{}x{}", img.width(), img.height())));
    }
    let t = grid.tile;
    (0..grid.tile_count())
        .map(|i| {
            let (ox, oy) = grid.origin(i);
            let mut data = Vec::with_capacity(t * t);
            for y in oy..oy + t {
                data.extend_from_slice(&img.row(y)[ox..ox + t]);
            }
            Plane::new(t, t, data)
        })
        .collect()
}

/// Places tiles row-major into the padded canvas and crops to the original
/// frame size.
pub fn stitch<P: Copy + Default>(tiles: &[Plane<P>], grid: &TileGrid) -> Result<Plane<P>> {
    if tiles.len() != grid.tile_count() {
        return Err(Error::shape("stitch", format!("{} tiles", grid.tile_count()), format!("{} tiles", tiles.len())));
    }
    let t = grid.tile;
    if let Some(bad) = tiles.iter().find(|p| p.dims() != (t, t)) {
        return Err(Error::shape("stitch", format!("{t}x{t} tiles"), format!("{}x{}", bad.width(), bad.height())));
    }
    let (w, h) = (grid.width, grid.height);
    let mut data = vec![P::default(); w * h];
    for (i, tile) in tiles.iter().enumerate() {
        let (ox, oy) = grid.origin(i);
        if ox >= w || oy >= h {
            continue;
        }
        let cw = t.min(w - ox);
        for ty in 0..t.min(h - oy) {
            let dst = (oy + ty) * w + ox;
            data[dst..dst + cw].copy_from_slice(&tile.row(ty)[..cw]);
        }
    }
    Plane::new(w, h, data)
}

/// Full-frame segmentation output.
#[derive(Clone, Debug)]
pub struct FramePrediction {
    pub grid: TileGrid,
    pub probabilities: ProbMap,
    pub mask: MaskImage,
}

/// pad → split → per-tile forward + sigmoid → stitch → binarize.
///
/// Tiles are processed in parallel on the current rayon pool; every tile is
/// computed independently, so the result does not depend on the pool size.
pub fn predict_frame<T: Scalar>(
    params: &UNetParams<T>,
    frame: &Image2D,
    tile: usize,
    threshold: f32,
) -> Result<FramePrediction> {
    let div = params.config.required_divisor();
    if !tile.is_multiple_of(div) {
        return Err(Error::shape(
            "predict_frame",
            format!("tile size divisible by 2^{} = {div}", params.config.depth),
            tile.to_string(),
        ));
    }
    let grid = compute_grid(frame.width(), frame.height(), tile)?;
    let tiles = split_image(&pad_image(frame, &grid)?, &grid)?;
    let probs = tiles
        .par_iter()
        .map(|t| {
            let (logits, _) = forward(params, &t.to_tensor::<T>())?;
            Ok(ProbMap::from_tensor(&sigmoid(&logits), 0))
        })
        .collect::<Result<Vec<_>>>()?;
    let probabilities = stitch(&probs, &grid)?;
    let mask = binarize(&probabilities, threshold)?;
    Ok(FramePrediction { grid, probabilities, mask })
}
