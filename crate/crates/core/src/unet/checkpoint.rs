//! Binary checkpoint, little-endian throughout:
//!
//! ```text
//! "UNET" | version u32 = 1 | depth u32 | base_channels u32 | in_channels u32 | out_channels u32
//! per tensor, canonical order (each layer's weights, then its bias):
//!     rank u32 | dims rank × u32 | values row-major f32
//! ```

use std::fs;
use std::path::Path;

use super::{UNetConfig, UNetParams};
use crate::error::{Error, Result};
use crate::kernels::ConvParams;
use crate::tensor::Tensor4;

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"UNET";
pub const CHECKPOINT_VERSION: u32 = 1;

fn push_u32(out: &mut Vec<u8>, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::Checkpoint(format!("value {v} does not fit in u32")))?;
    out.extend_from_slice(&v.to_le_bytes());
    Ok(())
}

/// Serializes to bytes.
pub fn write_checkpoint(params: &UNetParams<f32>) -> Result<Vec<u8>> {
    params.validate()?;
    let cfg = params.config;
    let mut out = Vec::with_capacity(24 + 4 * params.param_count() + 40 * params.layers.len());
    out.extend_from_slice(&CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    for v in [cfg.depth, cfg.base_channels, cfg.in_channels, cfg.out_channels] {
        push_u32(&mut out, v)?;
    }
    for layer in &params.layers {
        push_u32(&mut out, 4)?;
        for d in layer.weights.shape().dims() {
            push_u32(&mut out, d)?;
        }
        out.extend(layer.weights.data().iter().flat_map(|v| v.to_le_bytes()));
        push_u32(&mut out, 1)?;
        push_u32(&mut out, layer.bias.len())?;
        out.extend(layer.bias.iter().flat_map(|v| v.to_le_bytes()));
    }
    Ok(out)
}

pub fn save_checkpoint(path: impl AsRef<Path>, params: &UNetParams<f32>) -> Result<()> {
    let path = path.as_ref();
    let bytes = write_checkpoint(params)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<UNetParams<f32>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    read_checkpoint(&bytes)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &'static str, tensor_index: Option<usize>) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(Error::Truncated { what, tensor_index }),
        }
    }

    fn u32(&mut self, what: &'static str, tensor_index: Option<usize>) -> Result<u32> {
        let b = self.take(4, what, tensor_index)?;
        Ok(u32::from_le_bytes(b.try_into().expect("4 bytes")))
    }

    fn tensor(&mut self, index: usize, expected: &[usize]) -> Result<Vec<f32>> {
        let rank = self.u32("tensor rank", Some(index))? as usize;
        let want: Vec<u32> = expected.iter().map(|&d| d as u32).collect();
        if rank != expected.len() {
            return Err(Error::TensorShape {
                tensor_index: index,
                expected: want,
                found: vec![rank as u32],
            });
        }
        let dims = (0..rank)
            .map(|_| self.u32("tensor dims", Some(index)))
            .collect::<Result<Vec<u32>>>()?;
        let count = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d as usize))
            .and_then(|c| c.checked_mul(4).map(|_| c))
            .ok_or(Error::DimOverflow {
                tensor_index: index,
                dims: dims.clone(),
            })?;
        if dims != want {
            return Err(Error::TensorShape {
                tensor_index: index,
                expected: want,
                found: dims,
            });
        }
        let raw = self.take(count * 4, "tensor values", Some(index))?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect())
    }
}

/// Parses bytes produced by [`write_checkpoint`].
pub fn read_checkpoint(bytes: &[u8]) -> Result<UNetParams<f32>> {
    let mut r = Reader { bytes, pos: 0 };
    let magic: [u8; 4] = r.take(4, "magic", None)?.try_into().expect("4 bytes");
    if magic != CHECKPOINT_MAGIC {
        return Err(Error::BadMagic(magic));
    }
    let version = r.u32("version", None)?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let mut header = [0usize; 4];
    for h in &mut header {
        *h = r.u32("header", None)? as usize;
    }
    let config = UNetConfig {
        depth: header[0],
        base_channels: header[1],
        in_channels: header[2],
        out_channels: header[3],
    };
    config
        .validate()
        .map_err(|e| Error::Checkpoint(format!("invalid configuration in header: {e}")))?;

    let mut layers = Vec::with_capacity(config.layer_count());
    for (i, spec) in config.layer_specs().into_iter().enumerate() {
        let shape = spec.weight_shape();
        let w = r.tensor(2 * i, &shape.dims())?;
        let b = r.tensor(2 * i + 1, &[spec.out_channels])?;
        layers.push(ConvParams {
            weights: Tensor4::from_vec(shape, w)?,
            bias: b,
        });
    }
    if r.pos != bytes.len() {
        return Err(Error::Checkpoint(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    Ok(UNetParams { config, layers })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> UNetParams<f32> {
        UNetParams::init(UNetConfig::new(1, 2), 42).unwrap()
    }

    #[test]
    fn round_trip_is_bitwise() {
        let p = model();
        let bytes = write_checkpoint(&p).unwrap();
        // header 24 bytes, 8 layers * (rank+4 dims + rank+1 dim) = 8 * 28, 431 values
        assert_eq!(bytes.len(), 24 + 8 * 28 + 431 * 4);
        let q = read_checkpoint(&bytes).unwrap();
        assert_eq!(q.config, p.config);
        let bits = |p: &UNetParams<f32>| p.values().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&p), bits(&q));
        assert_eq!(write_checkpoint(&q).unwrap(), bytes);
    }

    #[test]
    fn header_layout() {
        let bytes = write_checkpoint(&model()).unwrap();
        assert_eq!(&bytes[..4], b"UNET");
        let words: Vec<u32> = bytes[4..24].chunks(4).map(|c| u32::from_le_bytes(c.try_into().unwrap())).collect();
        assert_eq!(words, vec![1, 1, 2, 1, 1]);
        // First tensor: rank 4, dims (2, 1, 3, 3).
        let t0: Vec<u32> = bytes[24..44].chunks(4).map(|c| u32::from_le_bytes(c.try_into().unwrap())).collect();
        assert_eq!(t0, vec![4, 2, 1, 3, 3]);
    }

    #[test]
    fn bad_magic() {
        let mut bytes = write_checkpoint(&model()).unwrap();
        bytes[..4].copy_from_slice(b"XXXX");
        assert!(matches!(read_checkpoint(&bytes), Err(Error::BadMagic(m)) if &m == b"XXXX"));
    }

    #[test]
    fn unsupported_version() {
        let mut bytes = write_checkpoint(&model()).unwrap();
        bytes[4] = 2;
        assert!(matches!(read_checkpoint(&bytes), Err(Error::UnsupportedVersion(2))));
    }

    #[test]
    fn truncation_names_tensor() {
        let bytes = write_checkpoint(&model()).unwrap();
        // Cut inside the values of tensor 0 (weights of layer 0).
        let err = read_checkpoint(&bytes[..24 + 20 + 10]).unwrap_err();
        assert!(matches!(err, Error::Truncated { tensor_index: Some(0), .. }), "{err}");
        // Cut inside the last tensor (head bias).
        let err = read_checkpoint(&bytes[..bytes.len() - 2]).unwrap_err();
        assert!(matches!(err, Error::Truncated { tensor_index: Some(15), .. }), "{err}");
        assert!(matches!(read_checkpoint(&bytes[..10]), Err(Error::Truncated { tensor_index: None, .. })));
    }

    #[test]
    fn dim_overflow() {
        let mut bytes = write_checkpoint(&model()).unwrap();
        for k in 0..4 {
            bytes[28 + 4 * k..32 + 4 * k].copy_from_slice(&u32::MAX.to_le_bytes());
        }
        assert!(matches!(read_checkpoint(&bytes), Err(Error::DimOverflow { tensor_index: 0, .. })));
    }

    #[test]
    fn shape_disagreement_and_trailing_bytes() {
        let mut bytes = write_checkpoint(&model()).unwrap();
        bytes[28..32].copy_from_slice(&3u32.to_le_bytes());
        assert!(matches!(read_checkpoint(&bytes), Err(Error::TensorShape { tensor_index: 0, .. })));
        let mut bytes = write_checkpoint(&model()).unwrap();
        bytes.push(0);
        assert!(matches!(read_checkpoint(&bytes), Err(Error::Checkpoint(_))));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        save_checkpoint(&path, &model()).unwrap();
        assert_eq!(load_checkpoint(&path).unwrap(), model());
        assert!(matches!(load_checkpoint(dir.path().join("missing")), Err(Error::Io { .. })));
    }
}
