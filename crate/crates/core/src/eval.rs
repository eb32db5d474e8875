//! Confusion matrix and per-class IoU / mIoU.

use std::ops::{Add, AddAssign};

use crate::classes::{ClassId, NUM_CLASSES};
use crate::error::{Error, Result};
use crate::grid::LabelGrid;

/// Column for ground-truth cells whose prediction is Ignore.
pub const NONE_COLUMN: usize = NUM_CLASSES;

/// Rows are ground truth, columns are predictions plus a trailing "none"
/// column for unpredicted cells.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConfusionMatrix {
    counts: [[u64; NUM_CLASSES + 1]; NUM_CLASSES],
}

impl ConfusionMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_counts(counts: [[u64; NUM_CLASSES + 1]; NUM_CLASSES]) -> Self {
        ConfusionMatrix { counts }
    }

    pub fn counts(&self) -> &[[u64; NUM_CLASSES + 1]; NUM_CLASSES] {
        &self.counts
    }

    pub fn get(&self, gt: ClassId, pred: Option<ClassId>) -> u64 {
        self.counts[gt.index()][pred.map_or(NONE_COLUMN, ClassId::index)]
    }

    /// Number of evaluated cells.
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn true_positives(&self, c: ClassId) -> u64 {
        self.counts[c.index()][c.index()]
    }

    /// Row total minus TP, including unpredicted cells.
    pub fn false_negatives(&self, c: ClassId) -> u64 {
        self.counts[c.index()].iter().sum::<u64>() - self.true_positives(c)
    }

    pub fn false_positives(&self, c: ClassId) -> u64 {
        self.counts.iter().map(|row| row[c.index()]).sum::<u64>() - self.true_positives(c)
    }
}

impl Add for ConfusionMatrix {
    type Output = ConfusionMatrix;

    fn add(mut self, rhs: ConfusionMatrix) -> ConfusionMatrix {
        self += rhs;
        self
    }
}

impl AddAssign for ConfusionMatrix {
    fn add_assign(&mut self, rhs: ConfusionMatrix) {
        for (a, b) in self.counts.iter_mut().flatten().zip(rhs.counts.iter().flatten()) {
            *a += b;
        }
    }
}

/// Add one prediction/ground-truth pair. Cells ignored in the ground truth
/// do not count; cells ignored in the prediction count as misses.
pub fn accumulate(mut cm: ConfusionMatrix, pred: &LabelGrid, gt: &LabelGrid) -> Result<ConfusionMatrix> {
    if pred.spec() != gt.spec() {
        return Err(Error::SpecMismatch);
    }
    for (p, g) in pred.labels().iter().zip(gt.labels()) {
        if let Some(g) = g {
            cm.counts[g.index()][p.map_or(NONE_COLUMN, ClassId::index)] += 1;
        }
    }
    Ok(cm)
}

/// `TP / (TP + FP + FN)` per class; `None` when the class appears in neither
/// ground truth nor prediction.
pub fn iou_per_class(cm: &ConfusionMatrix) -> [Option<f64>; NUM_CLASSES] {
    ClassId::ALL.map(|c| {
        let tp = cm.true_positives(c);
        let denom = tp + cm.false_positives(c) + cm.false_negatives(c);
        (denom > 0).then(|| tp as f64 / denom as f64)
    })
}

/// Mean over the defined classes.
pub fn mean_iou(ious: &[Option<f64>]) -> Result<f64> {
    let defined: Vec<f64> = ious.iter().flatten().copied().collect();
    if defined.is_empty() {
        return Err(Error::NoDefinedClasses);
    }
    Ok(defined.iter().sum::<f64>() / defined.len() as f64)
}
