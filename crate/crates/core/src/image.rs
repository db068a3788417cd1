//! Row-major 2-D pixel grids.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{Shape4, Tensor4};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Plane<P> {
    width: usize,
    height: usize,
    data: Vec<P>,
}

/// 8-bit grayscale frame.
pub type Image2D = Plane<u8>;
/// Per-pixel foreground probabilities.
pub type ProbMap = Plane<f32>;

impl<P: Copy> Plane<P> {
    pub fn new(width: usize, height: usize, data: Vec<P>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Domain(format!("image dimensions must be >= 1, got {width}x{height}")));
        }
        if data.len() != width * height {
            return Err(Error::shape("Plane::new", format!("{} pixels for {width}x{height}", width * height), format!("{} pixels", data.len())));
        }
        Ok(Self { width, height, data })
    }

    pub fn filled(width: usize, height: usize, value: P) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> P) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[P] {
        &self.data
    }

    pub fn into_data(self) -> Vec<P> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> P {
        self.data[y * self.width + x]
    }

    pub fn row(&self, y: usize) -> &[P] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    pub fn map<Q: Copy>(&self, f: impl Fn(P) -> Q) -> Plane<Q> {
        Plane {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&p| f(p)).collect(),
        }
    }
}

impl Image2D {
    /// Single-channel `(1, 1, h, w)` tensor with pixels scaled to `[0, 1]`.
    pub fn to_tensor<T: Scalar>(&self) -> Tensor4<T> {
        let scale = T::lit(1.0 / 255.0);
        let data = self.data.iter().map(|&p| T::lit(p as f64) * scale).collect();
        Tensor4::from_vec(Shape4::new(1, 1, self.height, self.width), data).expect("plane dims >= 1")
    }
}

impl ProbMap {
    /// Channel 0 of batch item `n`.
    pub fn from_tensor<T: Scalar>(t: &Tensor4<T>, n: usize) -> Self {
        let s = t.shape();
        Self {
            width: s.w,
            height: s.h,
            data: t.plane(n, 0).iter().map(|v| v.to_f64_lossless() as f32).collect(),
        }
    }
}

/// Binary mask, values in `{0, 1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MaskImage(Plane<u8>);

impl MaskImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        Self::from_plane(Plane::new(width, height, data)?)
    }

    pub fn from_plane(plane: Plane<u8>) -> Result<Self> {
        if let Some(v) = plane.data.iter().find(|&&v| v > 1) {
            return Err(Error::Domain(format!("mask value {v} is not 0 or 1")));
        }
        Ok(Self(plane))
    }

    /// `1` where `pixel >= 128`.
    pub fn binarize_gray(img: &Image2D) -> Self {
        Self(img.map(|p| u8::from(p >= 128)))
    }

    pub fn zeros(width: usize, height: usize) -> Result<Self> {
        Ok(Self(Plane::filled(width, height, 0)?))
    }

    pub fn plane(&self) -> &Plane<u8> {
        &self.0
    }

    pub fn into_plane(self) -> Plane<u8> {
        self.0
    }

    pub fn width(&self) -> usize {
        self.0.width
    }

    pub fn height(&self) -> usize {
        self.0.height
    }

    pub fn dims(&self) -> (usize, usize) {
        self.0.dims()
    }

    pub fn data(&self) -> &[u8] {
        &self.0.data
    }

    pub fn foreground(&self) -> usize {
        self.0.data.iter().filter(|&&v| v == 1).count()
    }

    /// `0 → 0`, `1 → 255`.
    pub fn to_gray(&self) -> Image2D {
        self.0.map(|v| v * 255)
    }

    /// `(1, 1, h, w)` tensor of 0.0/1.0 targets.
    pub fn to_tensor<T: Scalar>(&self) -> Tensor4<T> {
        let data = self.0.data.iter().map(|&v| if v == 1 { T::one() } else { T::zero() }).collect();
        Tensor4::from_vec(Shape4::new(1, 1, self.0.height, self.0.width), data).expect("plane dims >= 1")
    }
}
