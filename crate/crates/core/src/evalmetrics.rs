//! Segmentation metrics from a K-class confusion matrix.
//!
//! `counts[g][p]` counts pixels with ground truth `g` predicted as `p`.
//! Aggregation is dataset-level by default: one matrix summed over all images.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::imgcore::BinaryMask;

/// Integer class labels per pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<u8>,
}

impl LabelMap {
    pub fn new(width: usize, height: usize, labels: Vec<u8>) -> Result<Self> {
        if labels.len() != width * height {
            return Err(invalid(format!(
                "label map {width}x{height} needs {} labels, got {}",
                width * height,
                labels.len()
            )));
        }
        Ok(Self { width, height, labels })
    }
}

impl From<&BinaryMask> for LabelMap {
    fn from(m: &BinaryMask) -> Self {
        LabelMap {
            width: m.width(),
            height: m.height(),
            labels: m.data().to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    k: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(k: usize) -> Result<Self> {
        if !(2..=256).contains(&k) {
            return Err(invalid(format!("class count must be in 2..=256, got {k}")));
        }
        Ok(Self { k, counts: vec![0; k * k] })
    }

    /// Builds a matrix from explicit row-major `counts[g][p]`.
    pub fn from_counts(rows: &[Vec<u64>]) -> Result<Self> {
        let k = rows.len();
        let mut cm = Self::new(k)?;
        for (g, row) in rows.iter().enumerate() {
            if row.len() != k {
                return Err(invalid("confusion matrix must be square"));
            }
            cm.counts[g * k..(g + 1) * k].copy_from_slice(row);
        }
        Ok(cm)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn get(&self, gt: usize, pred: usize) -> u64 {
        self.counts[gt * self.k + pred]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn row_sum(&self, c: usize) -> u64 {
        (0..self.k).map(|p| self.get(c, p)).sum()
    }

    pub fn col_sum(&self, c: usize) -> u64 {
        (0..self.k).map(|g| self.get(g, c)).sum()
    }

    /// Adds the per-pixel tallies of one prediction/ground-truth pair.
    pub fn accumulate(&mut self, pred: &LabelMap, gt: &LabelMap) -> Result<()> {
        if (pred.width, pred.height) != (gt.width, gt.height) {
            return Err(Error::DimensionMismatch {
                op: "accumulate",
                left: (pred.width, pred.height),
                right: (gt.width, gt.height),
            });
        }
        let k = self.k;
        if let Some(&bad) = pred.labels.iter().chain(&gt.labels).find(|&&l| l as usize >= k) {
            return Err(invalid(format!("label {bad} out of range for {k} classes")));
        }
        for (&p, &g) in pred.labels.iter().zip(&gt.labels) {
            self.counts[g as usize * k + p as usize] += 1;
        }
        Ok(())
    }

    pub fn accumulate_masks(&mut self, pred: &BinaryMask, gt: &BinaryMask) -> Result<()> {
        self.accumulate(&pred.into(), &gt.into())
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if other.k != self.k {
            return Err(invalid("cannot merge confusion matrices with different class counts"));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }

    /// `tp / (row + col - tp)`; `None` for a class absent from both prediction and ground truth.
    pub fn iou_per_class(&self) -> Vec<Option<f64>> {
        (0..self.k)
            .map(|c| {
                let tp = self.get(c, c);
                let union = self.row_sum(c) + self.col_sum(c) - tp;
                (union > 0).then(|| tp as f64 / union as f64)
            })
            .collect()
    }

    pub fn mean_iou(&self) -> Result<f64> {
        let defined: Vec<f64> = self.iou_per_class().into_iter().flatten().collect();
        if defined.is_empty() {
            return Err(invalid("mean IoU undefined: no class present"));
        }
        Ok(defined.iter().sum::<f64>() / defined.len() as f64)
    }

    /// Σ_c (ground-truth share of c) · IoU_c.
    pub fn fw_iou(&self) -> Result<f64> {
        let total = self.total();
        if total == 0 {
            return Err(invalid("frequency-weighted IoU undefined on an empty matrix"));
        }
        Ok(self
            .iou_per_class()
            .iter()
            .enumerate()
            .filter_map(|(c, iou)| iou.map(|v| self.row_sum(c) as f64 / total as f64 * v))
            .sum())
    }

    pub fn pixel_accuracy(&self) -> Result<f64> {
        let total = self.total();
        if total == 0 {
            return Err(invalid("pixel accuracy undefined on an empty matrix"));
        }
        let trace: u64 = (0..self.k).map(|c| self.get(c, c)).sum();
        Ok(trace as f64 / total as f64)
    }
}

/// Global (one summed matrix) or per-image (mean of per-image scores) aggregation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Aggregation {
    #[default]
    Global,
    PerImage,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub aggregation: &'static str,
    pub image_count: usize,
    pub per_class_iou: Vec<Option<f64>>,
    pub mean_iou: f64,
    pub fw_iou: f64,
    pub pixel_accuracy: f64,
    pub skipped: Vec<String>,
}

fn read_labels(path: &Path, classes: usize) -> Result<LabelMap> {
    let g = image::open(path)
        .map_err(|source| Error::Image { path: path.to_path_buf(), source })?
        .to_luma8();
    let labels = if classes == 2 {
        g.as_raw().iter().map(|&v| u8::from(v >= crate::imgcore::io::MASK_THRESHOLD)).collect()
    } else {
        g.as_raw().clone()
    };
    LabelMap::new(g.width() as usize, g.height() as usize, labels)
}

fn list_files(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).map_err(crate::error::io_err(dir))? {
        let entry = entry.map_err(crate::error::io_err(dir))?;
        let path = entry.path();
        if path.is_file() {
            if let Some(name) = path.file_name().and_then(|n| n.to_str()) {
                out.insert(name.to_string(), path);
            }
        }
    }
    Ok(out)
}

/// Scores every same-named mask pair in `pred_dir` / `gt_dir`.
///
/// Masks are binarized at 128 when `classes == 2`; otherwise gray values are labels.
pub fn evaluate_dirs(pred_dir: &Path, gt_dir: &Path, classes: usize, aggregation: Aggregation) -> Result<EvalReport> {
    let preds = list_files(pred_dir)?;
    let gts = list_files(gt_dir)?;
    let mut skipped = Vec::new();
    let mut pairs = Vec::new();
    for (name, gt_path) in &gts {
        match preds.get(name) {
            Some(p) => pairs.push((p.clone(), gt_path.clone())),
            None => skipped.push(format!("{name}: no prediction")),
        }
    }
    for name in preds.keys().filter(|n| !gts.contains_key(*n)) {
        skipped.push(format!("{name}: no ground truth"));
    }
    if pairs.is_empty() {
        return Err(invalid("no matching prediction/ground-truth pairs"));
    }
    let per_image: Vec<ConfusionMatrix> = pairs
        .par_iter()
        .map(|(p, g)| {
            let mut cm = ConfusionMatrix::new(classes)?;
            cm.accumulate(&read_labels(p, classes)?, &read_labels(g, classes)?)?;
            Ok(cm)
        })
        .collect::<Result<_>>()?;

    let mut global = ConfusionMatrix::new(classes)?;
    for cm in &per_image {
        global.merge(cm)?;
    }
    let report = match aggregation {
        Aggregation::Global => EvalReport {
            aggregation: "global",
            image_count: per_image.len(),
            per_class_iou: global.iou_per_class(),
            mean_iou: global.mean_iou()?,
            fw_iou: global.fw_iou()?,
            pixel_accuracy: global.pixel_accuracy()?,
            skipped,
        },
        Aggregation::PerImage => {
            let n = per_image.len() as f64;
            let mut class_sum = vec![0.0; classes];
            let mut class_n = vec![0usize; classes];
            let (mut miou, mut fw, mut acc) = (0.0, 0.0, 0.0);
            for cm in &per_image {
                for (c, v) in cm.iou_per_class().into_iter().enumerate() {
                    if let Some(v) = v {
                        class_sum[c] += v;
                        class_n[c] += 1;
                    }
                }
                miou += cm.mean_iou()?;
                fw += cm.fw_iou()?;
                acc += cm.pixel_accuracy()?;
            }
            EvalReport {
                aggregation: "per-image",
                image_count: per_image.len(),
                per_class_iou: class_sum
                    .iter()
                    .zip(&class_n)
                    .map(|(s, &k)| (k > 0).then(|| s / k as f64))
                    .collect(),
                mean_iou: miou / n,
                fw_iou: fw / n,
                pixel_accuracy: acc / n,
                skipped,
            }
        }
    };
    Ok(report)
}
