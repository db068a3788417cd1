//! Contracting/expansive U-Net assembled from the kernels in
//! [`crate::kernels`].
//!
//! Parameters live in one flat list in canonical order:
//! encoder blocks top-down (conv1, conv2 each), bottleneck (conv1, conv2),
//! decoder blocks bottom-up (upconv, conv1, conv2 each), then the 1×1 head.

mod checkpoint;
mod model;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use model::{backward, forward, ActivationCache};

use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::kernels::ConvParams;
use crate::rng::SplitMix64;
use crate::scalar::Scalar;
use crate::tensor::{Shape4, Tensor4};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct UNetConfig {
    /// Number of down-sampling stages.
    pub depth: usize,
    /// Channels of the first encoder block; doubles per stage.
    pub base_channels: usize,
    pub in_channels: usize,
    pub out_channels: usize,
}

impl Default for UNetConfig {
    fn default() -> Self {
        Self {
            depth: 4,
            base_channels: 64,
            in_channels: 1,
            out_channels: 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LayerKind {
    /// Same-padding convolution, weights `(out, in, k, k)`.
    Conv { kernel: usize },
    /// 2×2 stride-2 transposed convolution, weights `(in, out, 2, 2)`.
    UpConv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LayerSpec {
    pub kind: LayerKind,
    pub in_channels: usize,
    pub out_channels: usize,
}

impl LayerSpec {
    pub fn weight_shape(&self) -> Shape4 {
        match self.kind {
            LayerKind::Conv { kernel } => Shape4::new(self.out_channels, self.in_channels, kernel, kernel),
            LayerKind::UpConv => Shape4::new(self.in_channels, self.out_channels, 2, 2),
        }
    }

    /// Number of products summed into one output element.
    pub fn fan_in(&self) -> usize {
        match self.kind {
            LayerKind::Conv { kernel } => self.in_channels * kernel * kernel,
            LayerKind::UpConv => self.in_channels,
        }
    }
}

impl UNetConfig {
    pub fn new(depth: usize, base_channels: usize) -> Self {
        Self {
            depth,
            base_channels,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.depth == 0 || self.base_channels == 0 || self.in_channels == 0 || self.out_channels == 0 {
            return Err(Error::Domain(format!("invalid U-Net config {self:?}: all fields must be >= 1")));
        }
        let widest = u32::try_from(self.depth)
            .ok()
            .and_then(|d| 1usize.checked_shl(d))
            .and_then(|f| f.checked_mul(self.base_channels))
            .and_then(|c| c.checked_mul(2));
        match widest {
            Some(c) if c <= u32::MAX as usize => Ok(()),
            _ => Err(Error::Domain(format!("U-Net config {self:?} overflows channel counts"))),
        }
    }

    /// Spatial sizes must be multiples of this.
    pub fn required_divisor(&self) -> usize {
        1 << self.depth
    }

    /// Channels produced by encoder level `level`; `level == depth` is the
    /// bottleneck.
    pub fn level_channels(&self, level: usize) -> usize {
        self.base_channels << level
    }

    pub fn layer_count(&self) -> usize {
        5 * self.depth + 3
    }

    pub fn encoder_layer(&self, level: usize) -> usize {
        2 * level
    }

    pub fn bottleneck_layer(&self) -> usize {
        2 * self.depth
    }

    /// First layer (the upconv) of the decoder block at `level`.
    pub fn decoder_layer(&self, level: usize) -> usize {
        2 * self.depth + 2 + 3 * (self.depth - 1 - level)
    }

    pub fn head_layer(&self) -> usize {
        5 * self.depth + 2
    }

    /// The canonical layer list.
    pub fn layer_specs(&self) -> Vec<LayerSpec> {
        let conv3 = |i, o| LayerSpec {
            kind: LayerKind::Conv { kernel: 3 },
            in_channels: i,
            out_channels: o,
        };
        let mut specs = Vec::with_capacity(self.layer_count());
        let mut prev = self.in_channels;
        for level in 0..self.depth {
            let c = self.level_channels(level);
            specs.push(conv3(prev, c));
            specs.push(conv3(c, c));
            prev = c;
        }
        let bottom = self.level_channels(self.depth);
        specs.push(conv3(prev, bottom));
        specs.push(conv3(bottom, bottom));
        prev = bottom;
        for level in (0..self.depth).rev() {
            let c = self.level_channels(level);
            specs.push(LayerSpec {
                kind: LayerKind::UpConv,
                in_channels: prev,
                out_channels: c,
            });
            specs.push(conv3(2 * c, c));
            specs.push(conv3(c, c));
            prev = c;
        }
        specs.push(LayerSpec {
            kind: LayerKind::Conv { kernel: 1 },
            in_channels: prev,
            out_channels: self.out_channels,
        });
        specs
    }
}

/// Network parameters (or a gradient with the same layout).
#[derive(Clone, Debug, PartialEq)]
pub struct UNetParams<T> {
    pub config: UNetConfig,
    pub layers: Vec<ConvParams<T>>,
}

impl<T: Scalar> UNetParams<T> {
    /// He-normal weights (`σ = √(2 / fan_in)`), zero biases. Draws are taken
    /// in canonical parameter order from a SplitMix64 stream seeded by `seed`.
    pub fn init(config: UNetConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = SplitMix64::new(seed);
        let layers = config
            .layer_specs()
            .into_iter()
            .map(|spec| {
                let std = (2.0 / spec.fan_in() as f64).sqrt();
                let shape = spec.weight_shape();
                let data = (0..shape.len())
                    .map(|_| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        T::lit(z * std)
                    })
                    .collect();
                ConvParams {
                    weights: Tensor4::from_vec(shape, data).expect("shape from spec"),
                    bias: vec![T::zero(); spec.out_channels],
                }
            })
            .collect();
        Ok(Self { config, layers })
    }

    pub fn zeros(config: UNetConfig) -> Result<Self> {
        config.validate()?;
        let layers = config
            .layer_specs()
            .into_iter()
            .map(|spec| ConvParams {
                weights: Tensor4::zeros(spec.weight_shape()),
                bias: vec![T::zero(); spec.out_channels],
            })
            .collect();
        Ok(Self { config, layers })
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            config: self.config,
            layers: self.layers.iter().map(ConvParams::zeros_like).collect(),
        }
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(ConvParams::param_count).sum()
    }

    pub fn cast<U: Scalar>(&self) -> UNetParams<U> {
        UNetParams {
            config: self.config,
            layers: self.layers.iter().map(ConvParams::cast).collect(),
        }
    }

    /// All values in canonical order, each layer's weights before its bias.
    pub fn values(&self) -> impl Iterator<Item = &T> {
        self.layers.iter().flat_map(ConvParams::values)
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut T> {
        self.layers.iter_mut().flat_map(ConvParams::values_mut)
    }

    pub fn to_flat(&self) -> Vec<T> {
        self.values().copied().collect()
    }

    pub fn assign_flat(&mut self, flat: &[T]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::shape("UNetParams::assign_flat", self.param_count().to_string(), flat.len().to_string()));
        }
        for (dst, &src) in self.values_mut().zip(flat) {
            *dst = src;
        }
        Ok(())
    }

    /// Checks layer shapes against the canonical plan for `config`.
    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        let specs = self.config.layer_specs();
        if specs.len() != self.layers.len() {
            return Err(Error::shape("UNetParams", format!("{} layers", specs.len()), format!("{} layers", self.layers.len())));
        }
        for (i, (spec, layer)) in specs.iter().zip(&self.layers).enumerate() {
            if layer.weights.shape() != spec.weight_shape() || layer.bias.len() != spec.out_channels {
                return Err(Error::shape(
                    "UNetParams",
                    format!("layer {i}: weights {} bias {}", spec.weight_shape(), spec.out_channels),
                    format!("weights {} bias {}", layer.weights.shape(), layer.bias.len()),
                ));
            }
        }
        Ok(())
    }
}
