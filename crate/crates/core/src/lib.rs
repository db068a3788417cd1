//! Tiled U-Net segmentation for large grayscale microscopy frames.
//!
//! Frames are padded and split into fixed-size tiles. Each tile is segmented
//! by a U-Net whose forward and reverse passes are implemented directly on
//! [`Tensor4`]. The per-tile probability maps are then stitched back into a
//! full-frame mask and scored with IoU and pixel accuracy.
//!
//! Network math is generic over [`Scalar`]. Training and inference use
//! `f32` (see the aliases below). Gradient checking instantiates the same
//! code at `f64`.

pub mod data_io;
pub mod error;
pub mod gradcheck;
pub mod image;
pub mod kernels;
pub mod metrics;
pub mod rng;
pub mod scalar;
pub mod tensor;
pub mod tiling;
pub mod trainer;
pub mod unet;

pub use data_io::{Dataset, Sample};
pub use error::{Error, Result};
pub use image::{Image2D, MaskImage, Plane, ProbMap};
pub use metrics::{ConfusionCounts, MetricReport};
pub use tiling::TileGrid;
pub use trainer::{TrainConfig, TrainHistory};
pub use scalar::Scalar;
pub use tensor::{Shape4, Tensor4};
pub use unet::{UNetConfig, UNetParams};

/// `f32` tensor used for training and inference.
pub type Tensor = Tensor4<f32>;
/// `f32` network parameters, the type stored in checkpoints.
pub type Params = UNetParams<f32>;
/// `f32` convolution parameters.
pub type Conv = kernels::ConvParams<f32>;
