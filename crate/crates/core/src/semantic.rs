//! Per-cell encodings of per-point semantic predictions.
//!
//! Four encodings are produced:
//!
//! * histogram: per class, the number of points in the cell predicted as that class;
//! * argmax: the class with the most points (ties → lowest [`ClassId`]);
//! * summed: per class, the sum of the points' class probabilities;
//! * mean: the summed encoding divided by the cell's point count.
//!
//! [`synth_probabilities`] produces noisy probability rows from ground-truth
//! labels for fixtures and experiments without a range-image network.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::classes::{ClassId, Label, NUM_CLASSES};
use crate::error::{Error, Result};
use crate::geometry::{argmax, PointCloud, ProbabilityRow};
use crate::grid::{CellIndex, GridSpec, LabelGrid};

/// What a [`SemanticGrid`]'s mass holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SemanticMode {
    Histogram,
    Summed,
    Mean,
}

impl SemanticMode {
    pub fn name(self) -> &'static str {
        match self {
            SemanticMode::Histogram => "histogram",
            SemanticMode::Summed => "summed",
            SemanticMode::Mean => "mean",
        }
    }
}

/// Per-cell class mass plus the number of points that contributed.
#[derive(Debug, Clone, PartialEq)]
pub struct SemanticGrid {
    spec: GridSpec,
    mode: SemanticMode,
    mass: Vec<f64>,
    count: Vec<u32>,
}

/// The argmax encoding: one label per cell, `None` where the cell is empty.
pub type ArgmaxGrid = LabelGrid;

impl SemanticGrid {
    fn zeros(spec: GridSpec, mode: SemanticMode) -> Self {
        SemanticGrid {
            spec,
            mode,
            mass: vec![0.0; spec.n_cells() * NUM_CLASSES],
            count: vec![0; spec.n_cells()],
        }
    }

    /// Rebuild a grid from raw parts (e.g. after deserialization).
    pub fn from_parts(spec: GridSpec, mode: SemanticMode, mass: Vec<f64>, count: Vec<u32>) -> Result<Self> {
        if mass.len() != spec.n_cells() * NUM_CLASSES || count.len() != spec.n_cells() {
            return Err(Error::DimensionMismatch("semantic grid size".into()));
        }
        if mass.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(Error::DimensionMismatch("negative or non-finite mass".into()));
        }
        Ok(SemanticGrid {
            spec,
            mode,
            mass,
            count,
        })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn mode(&self) -> SemanticMode {
        self.mode
    }

    /// Class channels of one cell.
    pub fn cell(&self, c: CellIndex) -> &[f64] {
        let k = self.spec.flat(c) * NUM_CLASSES;
        &self.mass[k..k + NUM_CLASSES]
    }

    pub fn count(&self, c: CellIndex) -> u32 {
        self.count[self.spec.flat(c)]
    }

    /// Cell-major mass: `NUM_CLASSES` consecutive values per cell.
    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn counts(&self) -> &[u32] {
        &self.count
    }
}

/// Hard per-point predictions: the argmax of the probability rows when the
/// cloud carries them, otherwise its labels.
pub fn hard_predictions(cloud: &PointCloud) -> Result<Vec<Label>> {
    if let Some(rows) = cloud.probabilities() {
        return Ok(rows.iter().map(|r| ClassId::new(argmax(r))).collect());
    }
    cloud.labels().map(<[Label]>::to_vec).ok_or(Error::MissingPredictions)
}

/// Histogram of hard predictions per cell. Ignore predictions are excluded
/// from both mass and count.
pub fn encode_histogram(cloud: &PointCloud, spec: &GridSpec) -> Result<SemanticGrid> {
    let predictions = hard_predictions(cloud)?;
    encode_histogram_from(cloud, &predictions, spec)
}

/// Histogram using an explicit prediction per point.
pub fn encode_histogram_from(cloud: &PointCloud, predictions: &[Label], spec: &GridSpec) -> Result<SemanticGrid> {
    if predictions.len() != cloud.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} predictions for {} points",
            predictions.len(),
            cloud.len()
        )));
    }
    let mut grid = SemanticGrid::zeros(*spec, SemanticMode::Histogram);
    for (p, pred) in cloud.points().iter().zip(predictions) {
        let (Some(c), Some(class)) = (spec.locate(p.x, p.y), pred) else {
            continue;
        };
        let k = spec.flat(c);
        grid.mass[k * NUM_CLASSES + class.index()] += 1.0;
        grid.count[k] += 1;
    }
    Ok(grid)
}

/// Most frequent class per cell, lowest [`ClassId`] on ties; `None` where
/// the cell received no points.
pub fn encode_argmax(hist: &SemanticGrid) -> ArgmaxGrid {
    let labels = hist
        .count
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            (n > 0).then(|| {
                let row = &hist.mass[k * NUM_CLASSES..(k + 1) * NUM_CLASSES];
                ClassId::new(argmax(row)).expect("argmax within class range")
            })
        })
        .collect();
    LabelGrid::from_labels(hist.spec, labels).expect("sizes agree")
}

/// Sum of class probabilities per cell.
pub fn encode_summed(cloud: &PointCloud, spec: &GridSpec) -> Result<SemanticGrid> {
    let rows = cloud.probabilities().ok_or(Error::MissingPredictions)?;
    let mut grid = SemanticGrid::zeros(*spec, SemanticMode::Summed);
    for (p, row) in cloud.points().iter().zip(rows) {
        let Some(c) = spec.locate(p.x, p.y) else {
            continue;
        };
        let k = spec.flat(c);
        for (m, v) in grid.mass[k * NUM_CLASSES..(k + 1) * NUM_CLASSES].iter_mut().zip(row) {
            *m += v;
        }
        grid.count[k] += 1;
    }
    Ok(grid)
}

/// Mean class probability per cell, from a summed grid.
pub fn encode_mean(summed: &SemanticGrid) -> Result<SemanticGrid> {
    if summed.mode != SemanticMode::Summed {
        return Err(Error::ModeMismatch {
            expected: SemanticMode::Summed.name(),
            found: summed.mode.name(),
        });
    }
    let mut out = summed.clone();
    out.mode = SemanticMode::Mean;
    for (k, &n) in summed.count.iter().enumerate() {
        if n > 0 {
            for m in &mut out.mass[k * NUM_CLASSES..(k + 1) * NUM_CLASSES] {
                *m /= n as f64;
            }
        }
    }
    Ok(out)
}

/// Noisy class probabilities standing in for a segmentation network.
///
/// For each point the chosen class is the true class with probability
/// `1 - flip_rate`, otherwise a uniformly drawn different class. The row is
/// `softmax(concentration · onehot(chosen) + ξ)` with `ξ` i.i.d. standard
/// normal. Identical seeds give identical rows.
pub fn synth_probabilities(
    labels: &[ClassId],
    flip_rate: f64,
    concentration: f64,
    seed: u64,
) -> Result<Vec<ProbabilityRow>> {
    if !(0.0..1.0).contains(&flip_rate) {
        return Err(Error::InvalidArgument(format!("flip rate {flip_rate} not in [0, 1)")));
    }
    if !(concentration.is_finite() && concentration > 0.0) {
        return Err(Error::InvalidArgument(format!("concentration {concentration}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = labels
        .iter()
        .map(|truth| {
            let flip = rng.random::<f64>() < flip_rate;
            let chosen = if flip {
                let other = rng.random_range(0..NUM_CLASSES - 1);
                if other >= truth.index() {
                    other + 1
                } else {
                    other
                }
            } else {
                truth.index()
            };
            let mut logits = [0.0; NUM_CLASSES];
            for (c, l) in logits.iter_mut().enumerate() {
                let noise: f64 = rng.sample(StandardNormal);
                *l = noise + if c == chosen { concentration } else { 0.0 };
            }
            softmax(&logits)
        })
        .collect();
    Ok(rows)
}

pub(crate) fn softmax(logits: &[f64; NUM_CLASSES]) -> [f64; NUM_CLASSES] {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out = [0.0; NUM_CLASSES];
    let mut sum = 0.0;
    for (o, l) in out.iter_mut().zip(logits) {
        *o = (l - max).exp();
        sum += *o;
    }
    for o in &mut out {
        *o /= sum;
    }
    out
}
