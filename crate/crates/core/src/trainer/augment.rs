use rand::Rng;

use crate::error::{Error, Result};
use crate::image::{MaskImage, Plane};
use crate::rng::SplitMix64;

/// The eight symmetries of the square.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dihedral {
    Identity,
    Rot90,
    Rot180,
    Rot270,
    FlipHorizontal,
    FlipVertical,
    Transpose,
    AntiTranspose,
}

impl Dihedral {
    pub const ALL: [Dihedral; 8] = [
        Dihedral::Identity,
        Dihedral::Rot90,
        Dihedral::Rot180,
        Dihedral::Rot270,
        Dihedral::FlipHorizontal,
        Dihedral::FlipVertical,
        Dihedral::Transpose,
        Dihedral::AntiTranspose,
    ];

    pub fn random(rng: &mut SplitMix64) -> Self {
        Self::ALL[rng.random_range(0..8)]
    }

    fn swaps_axes(self) -> bool {
        matches!(self, Dihedral::Rot90 | Dihedral::Rot270 | Dihedral::Transpose | Dihedral::AntiTranspose)
    }

    /// Source pixel for destination `(x, y)` in an `n × n` grid
    /// (or `w × h` when the axes are not swapped).
    #[inline]
    fn source(self, x: usize, y: usize, w: usize, h: usize) -> (usize, usize) {
        match self {
            Dihedral::Identity => (x, y),
            // Clockwise rotation.
            Dihedral::Rot90 => (y, h - 1 - x),
            Dihedral::Rot180 => (w - 1 - x, h - 1 - y),
            Dihedral::Rot270 => (w - 1 - y, x),
            Dihedral::FlipHorizontal => (w - 1 - x, y),
            Dihedral::FlipVertical => (x, h - 1 - y),
            Dihedral::Transpose => (y, x),
            Dihedral::AntiTranspose => (w - 1 - y, h - 1 - x),
        }
    }

    pub fn apply<P: Copy>(self, img: &Plane<P>) -> Result<Plane<P>> {
        let (w, h) = img.dims();
        if self.swaps_axes() && w != h {
            return Err(Error::shape("augment", "square tile", format!("{w}x{h} with {self:?}")));
        }
        Plane::from_fn(w, h, |x, y| {
            let (sx, sy) = self.source(x, y, w, h);
            img.get(sx, sy)
        })
    }
}

/// Applies one uniformly drawn transform to both image and mask.
pub fn augment_with<P: Copy>(image: &Plane<P>, mask: &MaskImage, rng: &mut SplitMix64) -> Result<(Plane<P>, MaskImage)> {
    let t = Dihedral::random(rng);
    let m = MaskImage::from_plane(t.apply(mask.plane())?)?;
    Ok((t.apply(image)?, m))
}

pub fn augment<P: Copy>(image: &Plane<P>, mask: &MaskImage, seed: u64) -> Result<(Plane<P>, MaskImage)> {
    augment_with(image, mask, &mut SplitMix64::new(seed))
}
