use super::UNetParams;
use crate::error::{Error, Result};
use crate::kernels::{
    concat_channels, conv2d, conv2d_backward, maxpool2, maxpool2_backward, relu, relu_backward, split_channels,
    upconv2, upconv2_backward, ConvParams, PoolIndices,
};
use crate::scalar::Scalar;
use crate::tensor::{Shape4, Tensor4};

/// Tensors kept from one double-conv block.
#[derive(Clone, Debug)]
struct BlockCache<T> {
    input: Tensor4<T>,
    hidden: Tensor4<T>,
    output: Tensor4<T>,
}

/// Everything [`backward`] needs from the matching [`forward`] call.
#[derive(Clone, Debug)]
pub struct ActivationCache<T> {
    encoder: Vec<BlockCache<T>>,
    pools: Vec<PoolIndices>,
    bottleneck: BlockCache<T>,
    /// Bottom-up, same order as the decoder layers.
    decoder: Vec<BlockCache<T>>,
    logits_shape: Shape4,
}

fn block_forward<T: Scalar>(first: &ConvParams<T>, second: &ConvParams<T>, input: Tensor4<T>) -> Result<BlockCache<T>> {
    let hidden = relu(&conv2d(&input, first)?);
    let output = relu(&conv2d(&hidden, second)?);
    Ok(BlockCache { input, hidden, output })
}

/// Returns `(grad wrt block input, first grads, second grads)`.
fn block_backward<T: Scalar>(
    first: &ConvParams<T>,
    second: &ConvParams<T>,
    cache: &BlockCache<T>,
    grad_output: &Tensor4<T>,
) -> Result<(Tensor4<T>, ConvParams<T>, ConvParams<T>)> {
    let g = relu_backward(&cache.output, grad_output)?;
    let g2 = conv2d_backward(&cache.hidden, second, &g)?;
    let g = relu_backward(&cache.hidden, &g2.input)?;
    let g1 = conv2d_backward(&cache.input, first, &g)?;
    Ok((g1.input, g1.params, g2.params))
}

/// Runs the network on `batch` of shape `(n, in_channels, s, s')` with both
/// spatial sizes divisible by `2^depth`. Returns logits of shape
/// `(n, out_channels, s, s')`; callers apply the sigmoid.
pub fn forward<T: Scalar>(params: &UNetParams<T>, batch: &Tensor4<T>) -> Result<(Tensor4<T>, ActivationCache<T>)> {
    let cfg = params.config;
    let s = batch.shape();
    let div = cfg.required_divisor();
    if !s.h.is_multiple_of(div) || !s.w.is_multiple_of(div) {
        return Err(Error::shape(
            "unet::forward",
            format!("spatial size divisible by 2^{} = {div}", cfg.depth),
            format!("{}x{}", s.h, s.w),
        ));
    }
    if s.c != cfg.in_channels {
        return Err(Error::shape("unet::forward", format!("{} input channels", cfg.in_channels), s.to_string()));
    }
    if params.layers.len() != cfg.layer_count() {
        return Err(Error::shape("unet::forward", format!("{} layers", cfg.layer_count()), params.layers.len().to_string()));
    }
    let l = &params.layers;

    let mut encoder = Vec::with_capacity(cfg.depth);
    let mut pools = Vec::with_capacity(cfg.depth);
    let mut x = batch.clone();
    for level in 0..cfg.depth {
        let i = cfg.encoder_layer(level);
        let block = block_forward(&l[i], &l[i + 1], x)?;
        let (pooled, idx) = maxpool2(&block.output)?;
        encoder.push(block);
        pools.push(idx);
        x = pooled;
    }
    let b = cfg.bottleneck_layer();
    let bottleneck = block_forward(&l[b], &l[b + 1], x)?;

    let mut decoder: Vec<BlockCache<T>> = Vec::with_capacity(cfg.depth);
    for level in (0..cfg.depth).rev() {
        let i = cfg.decoder_layer(level);
        let below = decoder.last().unwrap_or(&bottleneck);
        let up = upconv2(&below.output, &l[i])?;
        let merged = concat_channels(&encoder[level].output, &up)?;
        decoder.push(block_forward(&l[i + 1], &l[i + 2], merged)?);
    }
    let top = decoder.last().expect("depth >= 1");
    let logits = conv2d(&top.output, &l[cfg.head_layer()])?;
    let logits_shape = logits.shape();
    Ok((
        logits,
        ActivationCache {
            encoder,
            pools,
            bottleneck,
            decoder,
            logits_shape,
        },
    ))
}

/// Reverse traversal of [`forward`]. The returned gradients share the
/// canonical layout of `params`.
pub fn backward<T: Scalar>(
    params: &UNetParams<T>,
    cache: &ActivationCache<T>,
    grad_logits: &Tensor4<T>,
) -> Result<UNetParams<T>> {
    let cfg = params.config;
    if grad_logits.shape() != cache.logits_shape {
        return Err(Error::shape("unet::backward", cache.logits_shape.to_string(), grad_logits.shape().to_string()));
    }
    if cache.encoder.len() != cfg.depth || cache.decoder.len() != cfg.depth || params.layers.len() != cfg.layer_count() {
        return Err(Error::shape("unet::backward", format!("cache of depth {}", cfg.depth), format!("cache of depth {}", cache.encoder.len())));
    }
    let l = &params.layers;
    let mut grads = params.zeros_like();

    let top = cache.decoder.last().expect("depth >= 1");
    let head = conv2d_backward(&top.output, &l[cfg.head_layer()], grad_logits)?;
    grads.layers[cfg.head_layer()] = head.params;
    let mut g = head.input;

    // Decoder, top level first; collect skip gradients per level.
    let mut skip_grads: Vec<Option<Tensor4<T>>> = vec![None; cfg.depth];
    for k in (0..cfg.depth).rev() {
        let level = cfg.depth - 1 - k;
        let i = cfg.decoder_layer(level);
        let block = &cache.decoder[k];
        let (g_merged, g1, g2) = block_backward(&l[i + 1], &l[i + 2], block, &g)?;
        grads.layers[i + 1] = g1;
        grads.layers[i + 2] = g2;
        let (g_skip, g_up) = split_channels(&g_merged, cfg.level_channels(level))?;
        skip_grads[level] = Some(g_skip);
        let below = if k == 0 { &cache.bottleneck } else { &cache.decoder[k - 1] };
        let up = upconv2_backward(&below.output, &l[i], &g_up)?;
        grads.layers[i] = up.params;
        g = up.input;
    }

    let b = cfg.bottleneck_layer();
    let (mut g, g1, g2) = block_backward(&l[b], &l[b + 1], &cache.bottleneck, &g)?;
    grads.layers[b] = g1;
    grads.layers[b + 1] = g2;

    for level in (0..cfg.depth).rev() {
        let mut g_out = maxpool2_backward(&cache.pools[level], &g)?;
        let skip = skip_grads[level].take().expect("every level has a skip");
        for (d, s) in g_out.data_mut().iter_mut().zip(skip.data()) {
            *d += *s;
        }
        let i = cfg.encoder_layer(level);
        let (g_in, g1, g2) = block_backward(&l[i], &l[i + 1], &cache.encoder[level], &g_out)?;
        grads.layers[i] = g1;
        grads.layers[i + 1] = g2;
        g = g_in;
    }
    Ok(grads)
}
