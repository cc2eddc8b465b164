//! Class weights, confusion matrices and mean IoU over pixels or area.

use log::warn;

use crate::labels::{Label, NUM_CLASSES};
use crate::raster::LabelImage;
use crate::{Error, Mesh, Result};

/// Foreground classes scored by MIoU (background only enters the unions).
pub const FOREGROUND: std::ops::RangeInclusive<usize> = 1..=NUM_CLASSES - 1;

/// Entry `(l, i)` is the amount (pixels or area) with true label `l` and
/// predicted label `i`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ConfusionMatrix {
    pub counts: [[f64; NUM_CLASSES]; NUM_CLASSES],
}

impl ConfusionMatrix {
    pub fn add(&mut self, truth: Label, pred: Label, amount: f64) {
        self.counts[truth as usize][pred as usize] += amount;
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().flatten().sum()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::default();
        for l in 0..NUM_CLASSES {
            for i in 0..NUM_CLASSES {
                t.counts[i][l] = self.counts[l][i];
            }
        }
        t
    }

    /// Element-wise sum, for accumulating over a dataset.
    pub fn merge(&mut self, other: &Self) {
        for l in 0..NUM_CLASSES {
            for i in 0..NUM_CLASSES {
                self.counts[l][i] += other.counts[l][i];
            }
        }
    }

    pub fn iou(&self, l: usize) -> Option<f64> {
        let row: f64 = self.counts[l].iter().sum();
        let col: f64 = self.counts.iter().map(|r| r[l]).sum();
        let union = row + col - self.counts[l][l];
        (union > 0.0).then(|| self.counts[l][l] / union)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IoUReport {
    /// Eyebrow, eye, nose, mouth; `None` when absent from both sides.
    pub per_class: [Option<f64>; NUM_CLASSES - 1],
    /// Mean over the present foreground classes.
    pub miou: f64,
}

pub fn miou(conf: &ConfusionMatrix) -> Result<IoUReport> {
    let mut per_class = [None; NUM_CLASSES - 1];
    for l in FOREGROUND {
        per_class[l - 1] = conf.iou(l);
    }
    let present: Vec<f64> = per_class.iter().flatten().copied().collect();
    if present.is_empty() {
        return Err(Error::NoForeground);
    }
    Ok(IoUReport {
        per_class,
        miou: present.iter().sum::<f64>() / present.len() as f64,
    })
}

/// `w_l = ln(1 + mean over images of H·W / count_l)`; images without label
/// `l` are left out of its mean, and a label found in no image gets 0.
pub fn label_weights(images: &[LabelImage]) -> Result<[f64; NUM_CLASSES]> {
    if images.is_empty() {
        return Err(Error::InvalidParameter("no label images given".into()));
    }
    let mut sum = [0.0; NUM_CLASSES];
    let mut seen = [0usize; NUM_CLASSES];
    for img in images {
        let mut counts = [0usize; NUM_CLASSES];
        for &l in &img.labels {
            counts[l as usize] += 1;
        }
        let size = (img.width * img.height) as f64;
        for l in 0..NUM_CLASSES {
            if counts[l] > 0 {
                sum[l] += size / counts[l] as f64;
                seen[l] += 1;
            }
        }
    }
    let mut w = [0.0; NUM_CLASSES];
    for l in 0..NUM_CLASSES {
        if seen[l] == 0 {
            warn!("label {l} appears in no image; its weight is 0");
        } else {
            w[l] = (1.0 + sum[l] / seen[l] as f64).ln();
        }
    }
    Ok(w)
}

/// Pixel confusion over pixels covered in both images.
pub fn confusion_2d(pred: &LabelImage, gt: &LabelImage) -> Result<ConfusionMatrix> {
    if (pred.width, pred.height) != (gt.width, gt.height) {
        return Err(Error::DimensionMismatch(format!(
            "prediction is {}x{}, ground truth {}x{}",
            pred.width, pred.height, gt.width, gt.height
        )));
    }
    let mut conf = ConfusionMatrix::default();
    for i in 0..gt.labels.len() {
        if gt.coverage[i] && pred.coverage[i] {
            conf.add(gt.labels[i], pred.labels[i], 1.0);
        }
    }
    Ok(conf)
}

/// Area-weighted confusion over the mesh's faces.
pub fn confusion_3d(pred: &[Label], gt: &[Label], mesh: &Mesh) -> Result<ConfusionMatrix> {
    let n = mesh.face_count();
    if pred.len() != n || gt.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} predicted and {} true labels for {n} faces",
            pred.len(),
            gt.len()
        )));
    }
    let mut conf = ConfusionMatrix::default();
    let mut degenerate = 0;
    for f in 0..n {
        let a = mesh.face_area(f);
        if a == 0.0 {
            degenerate += 1;
        }
        conf.add(gt[f], pred[f], a);
    }
    if degenerate > 0 {
        warn!("{degenerate} zero-area faces contribute nothing");
    }
    Ok(conf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use proptest::prelude::*;

    fn image(w: usize, h: usize, labels: Vec<Label>) -> LabelImage {
        LabelImage {
            width: w,
            height: h,
            coverage: vec![true; labels.len()],
            labels,
        }
    }

    #[test]
    fn hand_enumerated_two_by_two() {
        let gt = image(2, 2, vec![1, 1, 2, 0]);
        let pred = image(2, 2, vec![1, 2, 2, 0]);
        let r = miou(&confusion_2d(&pred, &gt).unwrap()).unwrap();
        assert_eq!(r.per_class, [Some(0.5), Some(0.5), None, None]);
        assert_eq!(r.miou, 0.5);
    }

    #[test]
    fn weight_cases() {
        let w = label_weights(&[LabelImage::filled(8, 8, 3)]).unwrap();
        assert!((w[3] - 2f64.ln()).abs() <= 1e-12);
        assert_eq!(w[0], 0.0);

        let mut quarter = LabelImage::filled(256, 256, 0);
        quarter.labels[..16384].fill(2);
        let w = label_weights(&[quarter.clone()]).unwrap();
        assert!((w[2] - 5f64.ln()).abs() <= 1e-12);

        let w = label_weights(&[LabelImage::filled(256, 256, 2), quarter]).unwrap();
        assert!((w[2] - 3.5f64.ln()).abs() <= 1e-12);
        assert!(label_weights(&[]).is_err());
    }

    #[test]
    fn perfect_and_background_predictions() {
        let gt = image(4, 1, vec![1, 2, 3, 4]);
        assert_eq!(miou(&confusion_2d(&gt, &gt).unwrap()).unwrap().miou, 1.0);
        let bg = image(4, 1, vec![0; 4]);
        let conf = confusion_2d(&bg, &gt).unwrap();
        assert!((0..NUM_CLASSES).all(|l| (1..NUM_CLASSES).all(|i| conf.counts[l][i] == 0.0)));
        assert_eq!(miou(&conf).unwrap().miou, 0.0);
        assert!(matches!(miou(&confusion_2d(&bg, &bg).unwrap()), Err(Error::NoForeground)));
    }

    #[test]
    fn only_pixels_covered_in_both_count() {
        let gt = image(2, 1, vec![1, 1]);
        let mut pred = image(2, 1, vec![1, 2]);
        pred.coverage[1] = false;
        let conf = confusion_2d(&pred, &gt).unwrap();
        assert_eq!(conf.total(), 1.0);
        assert!(confusion_2d(&image(1, 2, vec![1, 1]), &gt).is_err());
    }

    #[test]
    fn two_face_area_case() {
        // unit right triangles: areas 0.5 and 2.0
        let m = Mesh::from_geometry(
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [3.0, 0.0, 0.0], [3.0, 2.0, 0.0], [5.0, 0.0, 0.0]],
            vec![[0, 1, 2], [3, 5, 4]],
        )
        .unwrap();
        let gt = [1, 1];
        let pred = [2, 1];
        let r = miou(&confusion_3d(&pred, &gt, &m).unwrap()).unwrap();
        let (a, rest) = (0.5, 2.0);
        assert!((r.per_class[0].unwrap() - rest / (rest + a)).abs() < 1e-15);
        assert_eq!(r.per_class[1], Some(0.0));
        assert!((r.miou - (rest / (rest + a)) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn area_miou_is_scale_invariant() {
        let ph = fixtures::painted_hemisphere(16);
        let pred: Vec<Label> = ph.face_labels.iter().enumerate().map(|(i, &l)| if i % 7 == 0 { (l + 1) % 5 } else { l }).collect();
        let a = confusion_3d(&pred, &ph.face_labels, &ph.mesh).unwrap();
        let b = confusion_3d(&pred, &ph.face_labels, &ph.mesh.scaled(7.0).unwrap()).unwrap();
        for l in 0..NUM_CLASSES {
            for i in 0..NUM_CLASSES {
                assert!((b.counts[l][i] - 49.0 * a.counts[l][i]).abs() <= 1e-12 * b.counts[l][i].max(1.0));
            }
        }
        assert!((miou(&a).unwrap().miou - miou(&b).unwrap().miou).abs() <= 1e-12);
    }

    fn labels_strategy() -> impl Strategy<Value = (Vec<Label>, Vec<Label>)> {
        (1usize..40).prop_flat_map(|n| {
            (
                proptest::collection::vec(0u8..5, n),
                proptest::collection::vec(0u8..5, n),
            )
        })
    }

    proptest! {
        #[test]
        fn transpose_property((p, g) in labels_strategy()) {
            let (pi, gi) = (image(p.len(), 1, p), image(g.len(), 1, g));
            prop_assert_eq!(confusion_2d(&pi, &gi).unwrap(), confusion_2d(&gi, &pi).unwrap().transpose());
        }

        #[test]
        fn foreground_permutation_invariance((p, g) in labels_strategy(), perm in Just([1u8, 2, 3, 4]).prop_shuffle()) {
            let relabel = |v: &[Label]| -> Vec<Label> { v.iter().map(|&l| if l == 0 { 0 } else { perm[l as usize - 1] }).collect() };
            let a = miou(&confusion_2d(&image(p.len(), 1, p.clone()), &image(g.len(), 1, g.clone())).unwrap());
            let b = miou(&confusion_2d(&image(p.len(), 1, relabel(&p)), &image(g.len(), 1, relabel(&g))).unwrap());
            match (a, b) {
                (Ok(a), Ok(b)) => prop_assert!((a.miou - b.miou).abs() < 1e-12),
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false, "presence differs"),
            }
        }

        #[test]
        fn iou_bounds((p, g) in labels_strategy()) {
            let conf = confusion_2d(&image(p.len(), 1, p), &image(g.len(), 1, g)).unwrap();
            for l in 0..NUM_CLASSES {
                if let Some(v) = conf.iou(l) {
                    prop_assert!((0.0..=1.0).contains(&v));
                    let clean = (0..NUM_CLASSES).all(|i| i == l || (conf.counts[l][i] == 0.0 && conf.counts[i][l] == 0.0));
                    prop_assert_eq!(v == 1.0, clean);
                }
            }
        }
    }
}
