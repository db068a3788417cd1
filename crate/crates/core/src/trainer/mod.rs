//! Seeded split, augmentation, Adam, the epoch loop and evaluation.

mod adam;
mod augment;
mod split;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use augment::{augment, augment_with, Dihedral};
pub use split::split_dataset;

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::data_io::Sample;
use crate::error::{Error, Result};
use crate::image::ProbMap;
use crate::kernels::{bce_with_logits, bce_with_logits_backward, sigmoid};
use crate::metrics::{binarize, confusion, MetricReport};
use crate::rng::SplitMix64;
use crate::scalar::Scalar;
use crate::unet::{backward, forward, UNetConfig, UNetParams};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Fraction of samples used for training.
    pub split_ratio: f64,
    pub augment: bool,
    /// Evaluation threshold on sigmoid probabilities.
    pub threshold: f32,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            batch_size: 4,
            seed: 42,
            split_ratio: 0.8,
            augment: true,
            threshold: 0.5,
            adam: AdamConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return Err(Error::Domain(format!("split ratio must lie in (0, 1), got {}", self.split_ratio)));
        }
        if self.batch_size == 0 {
            return Err(Error::Domain("batch size must be >= 1".into()));
        }
        if !(self.adam.learning_rate > 0.0 && self.adam.learning_rate.is_finite()) {
            return Err(Error::Domain(format!("learning rate must be positive, got {}", self.adam.learning_rate)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub test_iou: f64,
    pub test_pixel_accuracy: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainHistory {
    pub records: Vec<EpochRecord>,
}

impl TrainHistory {
    /// `epoch,train_loss,test_iou,test_pixel_acc` with six decimals.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,test_iou,test_pixel_acc\n");
        for r in &self.records {
            let _ = writeln!(out, "{},{:.6},{:.6},{:.6}", r.epoch, r.train_loss, r.test_iou, r.test_pixel_accuracy);
        }
        out
    }
}

/// Progress notifications from [`train_observed`].
#[derive(Clone, Debug)]
pub enum TrainEvent {
    Split { train: usize, test: usize },
    Epoch { record: EpochRecord, report: MetricReport },
}

#[derive(Clone, Debug)]
pub struct TrainOutput<T> {
    pub params: UNetParams<T>,
    pub history: TrainHistory,
    pub train_count: usize,
    pub test_count: usize,
    /// Test-set report after the last epoch; `None` when `epochs == 0`.
    pub final_report: Option<MetricReport>,
}

/// Independent streams derived from the user seed.
fn stream_seed(seed: u64, stream: u64) -> u64 {
    use rand_core::RngCore;
    SplitMix64::new(seed ^ stream.wrapping_mul(0xA24B_AED4_963E_E407)).next_u64()
}

const SHUFFLE_STREAM: u64 = 1;
const AUGMENT_STREAM: u64 = 2;

/// Per-sample mean BCE and its parameter gradient.
fn sample_gradient<T: Scalar>(params: &UNetParams<T>, sample: &Sample) -> Result<(f64, UNetParams<T>)> {
    let x = sample.image.to_tensor::<T>();
    let y = sample.mask.to_tensor::<T>();
    let (logits, cache) = forward(params, &x)?;
    let loss = bce_with_logits(&logits, &y)?.to_f64_lossless();
    if !loss.is_finite() {
        return Err(Error::Numeric(format!("loss is {loss} on sample {}", sample.name)));
    }
    let g = bce_with_logits_backward(&logits, &y)?;
    Ok((loss, backward(params, &cache, &g)?))
}

/// Forward, sigmoid, binarize and count per sample; headline IoU is the mean
/// of per-image IoU, pixel accuracy is pooled over all pixels.
pub fn evaluate<T: Scalar>(params: &UNetParams<T>, samples: &[Sample], threshold: f32) -> Result<MetricReport> {
    let counts = samples
        .par_iter()
        .map(|s| {
            let (logits, _) = forward(params, &s.image.to_tensor::<T>())?;
            let pred = binarize(&ProbMap::from_tensor(&sigmoid(&logits), 0), threshold)?;
            confusion(&pred, &s.mask)
        })
        .collect::<Result<Vec<_>>>()?;
    MetricReport::from_counts(&counts)
}

pub fn train<T: Scalar>(cfg: &TrainConfig, samples: &[Sample], unet: UNetConfig) -> Result<TrainOutput<T>> {
    train_observed(cfg, samples, unet, |_| {})
}

/// Trains from a fresh initialization. The run is a deterministic function
/// of `(cfg, samples, unet)`: per-sample work inside a batch may run in
/// parallel, but gradients are reduced in sample order.
pub fn train_observed<T: Scalar>(
    cfg: &TrainConfig,
    samples: &[Sample],
    unet: UNetConfig,
    mut observe: impl FnMut(&TrainEvent),
) -> Result<TrainOutput<T>> {
    cfg.validate()?;
    unet.validate()?;
    let first = samples.first().ok_or_else(|| Error::EmptyDataset("no training samples".into()))?;
    let dims = first.image.dims();
    if let Some(bad) = samples.iter().find(|s| s.image.dims() != dims) {
        return Err(Error::shape("train", format!("all tiles {}x{}", dims.0, dims.1), format!("{} is {:?}", bad.name, bad.image.dims())));
    }
    let div = unet.required_divisor();
    if dims.0 % div != 0 || dims.1 % div != 0 {
        return Err(Error::shape(
            "train",
            format!("tile size divisible by 2^{} = {div}", unet.depth),
            format!("{}x{}", dims.0, dims.1),
        ));
    }

    let (train_set, test_set) = split_dataset(samples.to_vec(), cfg.split_ratio, cfg.seed)?;
    observe(&TrainEvent::Split {
        train: train_set.len(),
        test: test_set.len(),
    });
    let mut params = UNetParams::<T>::init(unet, cfg.seed)?;
    if cfg.epochs > 0 && (train_set.is_empty() || test_set.is_empty()) {
        return Err(Error::Domain(format!(
            "split of {} samples at ratio {} leaves {} train / {} test",
            samples.len(),
            cfg.split_ratio,
            train_set.len(),
            test_set.len()
        )));
    }

    let mut shuffle_rng = SplitMix64::new(stream_seed(cfg.seed, SHUFFLE_STREAM));
    let mut augment_rng = SplitMix64::new(stream_seed(cfg.seed, AUGMENT_STREAM));
    let mut adam = AdamState::new(&params);
    let mut history = TrainHistory::default();
    let mut final_report = None;
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0f64;
        for chunk in order.chunks(cfg.batch_size) {
            let batch = chunk
                .iter()
                .map(|&i| {
                    let s = &train_set[i];
                    if cfg.augment {
                        let (image, mask) = augment_with(&s.image, &s.mask, &mut augment_rng)?;
                        Ok(Sample { name: s.name.clone(), image, mask })
                    } else {
                        Ok(s.clone())
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            let results = batch
                .par_iter()
                .map(|s| sample_gradient(&params, s))
                .collect::<Result<Vec<_>>>()?;

            let mut grads = params.zeros_like();
            for (loss, g) in &results {
                loss_sum += loss;
                for (acc, &v) in grads.values_mut().zip(g.values()) {
                    *acc += v;
                }
            }
            let scale = T::lit(1.0 / results.len() as f64);
            grads.values_mut().for_each(|v| *v *= scale);
            adam_step(&mut params, &grads, &mut adam, &cfg.adam)?;
        }
        let report = evaluate(&params, &test_set, cfg.threshold)?;
        let record = EpochRecord {
            epoch,
            train_loss: loss_sum / train_set.len() as f64,
            test_iou: report.iou,
            test_pixel_accuracy: report.pixel_accuracy,
        };
        observe(&TrainEvent::Epoch { record, report });
        history.records.push(record);
        final_report = Some(report);
    }

    Ok(TrainOutput {
        params,
        history,
        train_count: train_set.len(),
        test_count: test_set.len(),
        final_report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_io::gen_synthetic;
    use crate::image::{Image2D, MaskImage};

    fn quick_cfg(epochs: usize) -> TrainConfig {
        TrainConfig {
            epochs,
            batch_size: 3,
            seed: 5,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn zero_epochs_returns_initial_params() {
        let ds = gen_synthetic(6, 32, 1).unwrap();
        let out = train::<f32>(&quick_cfg(0), ds.samples(), UNetConfig::new(1, 2)).unwrap();
        assert!(out.history.records.is_empty());
        assert_eq!(out.params, UNetParams::init(UNetConfig::new(1, 2), 5).unwrap());
        assert!(out.final_report.is_none());
    }

    #[test]
    fn deterministic_history() {
        let ds = gen_synthetic(8, 32, 2).unwrap();
        let a = train::<f32>(&quick_cfg(2), ds.samples(), UNetConfig::new(1, 2)).unwrap();
        let b = train::<f32>(&quick_cfg(2), ds.samples(), UNetConfig::new(1, 2)).unwrap();
        assert_eq!(a.history, b.history);
        assert_eq!(a.params, b.params);
        assert_eq!(a.history.records.len(), 2);
    }

    #[test]
    fn mixed_tile_sizes_rejected_before_training() {
        let mut samples = gen_synthetic(3, 32, 2).unwrap().into_samples();
        samples.push(Sample::new("z", Image2D::filled(40, 40, 0).unwrap(), MaskImage::zeros(40, 40).unwrap()).unwrap());
        assert!(matches!(train::<f32>(&quick_cfg(1), &samples, UNetConfig::new(1, 2)), Err(Error::Shape { .. })));
    }

    #[test]
    fn indivisible_tiles_rejected() {
        let ds = gen_synthetic(3, 36, 2).unwrap();
        assert!(matches!(train::<f32>(&quick_cfg(1), ds.samples(), UNetConfig::new(3, 2)), Err(Error::Shape { .. })));
    }

    #[test]
    fn csv_format() {
        let h = TrainHistory {
            records: vec![EpochRecord { epoch: 1, train_loss: 0.5, test_iou: 1.0 / 3.0, test_pixel_accuracy: 0.9 }],
        };
        assert_eq!(h.to_csv(), "epoch,train_loss,test_iou,test_pixel_acc\n1,0.500000,0.333333,0.900000\n");
    }

    #[test]
    fn perfect_prediction_scores_one() {
        let img = Image2D::filled(8, 8, 0).unwrap();
        let m = MaskImage::zeros(8, 8).unwrap();
        // Zero weights and a very negative head bias predict background everywhere.
        let mut p = UNetParams::<f32>::zeros(UNetConfig::new(1, 2)).unwrap();
        let head = p.config.head_layer();
        p.layers[head].bias[0] = -10.0;
        let r = evaluate(&p, &[Sample::new("a", img, m).unwrap()], 0.5).unwrap();
        assert_eq!((r.iou, r.pixel_accuracy), (1.0, 1.0));
    }
}
