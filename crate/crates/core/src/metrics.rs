//! Pixel confusion counts, IoU (Jaccard index) and pixel accuracy.

use std::fmt;

use crate::error::{Error, Result};
use crate::image::{MaskImage, Plane, ProbMap};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

impl std::ops::Add for ConfusionCounts {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self {
            tp: self.tp + o.tp,
            fp: self.fp + o.fp,
            fn_: self.fn_ + o.fn_,
            tn: self.tn + o.tn,
        }
    }
}

impl std::iter::Sum for ConfusionCounts {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), |a, b| a + b)
    }
}

pub const DEFAULT_THRESHOLD: f32 = 0.5;

/// Foreground where `p >= threshold`.
pub fn binarize(probs: &ProbMap, threshold: f32) -> Result<MaskImage> {
    if let Some(p) = probs.data().iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::Domain(format!("probability {p} outside [0, 1]")));
    }
    let plane: Plane<u8> = probs.map(|p| u8::from(p >= threshold));
    MaskImage::from_plane(plane)
}

pub fn confusion(pred: &MaskImage, truth: &MaskImage) -> Result<ConfusionCounts> {
    if pred.dims() != truth.dims() {
        return Err(Error::shape("confusion", format!("{:?}", truth.dims()), format!("{:?}", pred.dims())));
    }
    let mut c = ConfusionCounts::default();
    for (&p, &t) in pred.data().iter().zip(truth.data()) {
        match (p, t) {
            (1, 1) => c.tp += 1,
            (1, _) => c.fp += 1,
            (_, 1) => c.fn_ += 1,
            _ => c.tn += 1,
        }
    }
    Ok(c)
}

/// `tp / (tp + fp + fn)`; an empty union scores 1.0.
pub fn iou(c: &ConfusionCounts) -> f64 {
    let union = c.tp + c.fp + c.fn_;
    if union == 0 {
        1.0
    } else {
        c.tp as f64 / union as f64
    }
}

pub fn pixel_accuracy(c: &ConfusionCounts) -> Result<f64> {
    match c.total() {
        0 => Err(Error::Domain("pixel accuracy of zero pixels".into())),
        total => Ok((c.tp + c.tn) as f64 / total as f64),
    }
}

/// Aggregate evaluation over a set of images. `iou` is the mean of
/// per-image IoU; `pooled_iou` is computed from the summed counts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricReport {
    pub iou: f64,
    pub pooled_iou: f64,
    pub pixel_accuracy: f64,
    pub counts: ConfusionCounts,
    pub images: usize,
}

impl MetricReport {
    pub fn from_counts(per_image: &[ConfusionCounts]) -> Result<Self> {
        if per_image.is_empty() {
            return Err(Error::Domain("metric report over zero images".into()));
        }
        let counts: ConfusionCounts = per_image.iter().copied().sum();
        Ok(Self {
            iou: per_image.iter().map(iou).sum::<f64>() / per_image.len() as f64,
            pooled_iou: iou(&counts),
            pixel_accuracy: pixel_accuracy(&counts)?,
            counts,
            images: per_image.len(),
        })
    }
}

/// `iou=<6dp> pixel_acc=<6dp> tp=<n> fp=<n> fn=<n> tn=<n>`
impl fmt::Display for MetricReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = &self.counts;
        write!(
            f,
            "iou={:.6} pixel_acc={:.6} tp={} fp={} fn={} tn={}",
            self.iou, self.pixel_accuracy, c.tp, c.fp, c.fn_, c.tn
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask(w: usize, v: &[u8]) -> MaskImage {
        MaskImage::new(w, v.len() / w, v.to_vec()).unwrap()
    }

    #[test]
    fn hand_case() {
        let c = confusion(&mask(2, &[1, 1, 0, 0]), &mask(2, &[0, 1, 0, 1])).unwrap();
        assert_eq!(c, ConfusionCounts { tp: 1, fp: 1, fn_: 1, tn: 1 });
        assert_eq!(iou(&c), 1.0 / 3.0);
        assert_eq!(pixel_accuracy(&c).unwrap(), 0.5);
    }

    #[test]
    fn empty_union_and_complement() {
        let z = mask(2, &[0, 0, 0, 0]);
        let c = confusion(&z, &z).unwrap();
        assert_eq!(iou(&c), 1.0);
        let a = mask(2, &[1, 0, 0, 1]);
        let b = mask(2, &[0, 1, 1, 0]);
        let c = confusion(&a, &b).unwrap();
        assert_eq!(pixel_accuracy(&c).unwrap(), 0.0);
        assert_eq!(iou(&c), 0.0);
        assert!(pixel_accuracy(&ConfusionCounts::default()).is_err());
    }

    #[test]
    fn binarize_ties_to_foreground() {
        let p = Plane::new(3, 1, vec![0.5f32, 0.49, 1.0]).unwrap();
        assert_eq!(binarize(&p, 0.5).unwrap().data(), &[1, 0, 1]);
        assert_eq!(binarize(&p, 0.0).unwrap().data(), &[1, 1, 1]);
        assert!(binarize(&Plane::new(1, 1, vec![1.5f32]).unwrap(), 0.5).is_err());
        assert!(binarize(&Plane::new(1, 1, vec![f32::NAN]).unwrap(), 0.5).is_err());
    }

    #[test]
    fn dims_must_agree() {
        assert!(confusion(&mask(2, &[0, 0]), &mask(1, &[0, 0])).is_err());
    }

    #[test]
    fn report_line_format() {
        let r = MetricReport::from_counts(&[ConfusionCounts { tp: 1, fp: 1, fn_: 1, tn: 1 }, ConfusionCounts { tp: 2, fp: 0, fn_: 0, tn: 2 }]).unwrap();
        assert_eq!(r.to_string(), "iou=0.666667 pixel_acc=0.750000 tp=3 fp=1 fn=1 tn=3");
        assert_eq!(r.pooled_iou, 0.6);
    }
}
