//! Per-cell ground truth for the sparse (single scan) and dense
//! (pose-aggregated) tasks.

use rayon::prelude::*;

use crate::classes::{ClassId, Label, NUM_CLASSES};
use crate::error::{Error, Result};
use crate::geometry::{transform_points, PointCloud, Pose};
use crate::grid::{GridSpec, LabelGrid};

/// A labeled scan with its world pose.
#[derive(Debug, Clone)]
pub struct LabeledScan {
    pub cloud: PointCloud,
    pub pose: Pose,
}

/// Ordered scans plus the index of the scan ground truth is built for.
#[derive(Debug, Clone)]
pub struct ScanSequence {
    scans: Vec<LabeledScan>,
    reference: usize,
}

impl ScanSequence {
    pub fn new(clouds: Vec<PointCloud>, poses: Vec<Pose>, reference: usize) -> Result<Self> {
        if clouds.len() != poses.len() {
            return Err(Error::Sequence(format!(
                "{} scans but {} poses",
                clouds.len(),
                poses.len()
            )));
        }
        if reference >= clouds.len() {
            return Err(Error::Sequence(format!(
                "reference index {reference} out of range for {} scans",
                clouds.len()
            )));
        }
        if let Some(k) = clouds.iter().position(|c| c.labels().is_none()) {
            return Err(Error::Sequence(format!("scan {k} has no labels")));
        }
        let scans = clouds
            .into_iter()
            .zip(poses)
            .map(|(cloud, pose)| LabeledScan { cloud, pose })
            .collect();
        Ok(ScanSequence { scans, reference })
    }

    pub fn scans(&self) -> &[LabeledScan] {
        &self.scans
    }

    pub fn reference(&self) -> usize {
        self.reference
    }

    pub fn len(&self) -> usize {
        self.scans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scans.is_empty()
    }
}

/// Dense aggregation settings.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOptions {
    /// Scans on each side of the reference; truncated at sequence ends.
    pub window: usize,
    /// Classes rejected from every scan but the reference.
    pub dynamic_classes: Vec<ClassId>,
    /// Keep only points with `lo <= z <= hi` in the reference frame.
    pub z_range: Option<(f64, f64)>,
}

impl Default for DenseOptions {
    fn default() -> Self {
        DenseOptions {
            window: 50,
            dynamic_classes: ClassId::dynamic(),
            z_range: None,
        }
    }
}

struct Votes {
    counts: Vec<u32>,
}

impl Votes {
    fn new(spec: &GridSpec) -> Self {
        Votes {
            counts: vec![0; spec.n_cells() * NUM_CLASSES],
        }
    }

    fn add(&mut self, cell: usize, class: ClassId) {
        self.counts[cell * NUM_CLASSES + class.index()] += 1;
    }

    // Majority per cell, lowest class on ties, None for cells without votes.
    fn into_grid(self, spec: &GridSpec) -> LabelGrid {
        let labels = self
            .counts
            .chunks_exact(NUM_CLASSES)
            .map(|row| {
                let mut best = 0;
                for c in 1..NUM_CLASSES {
                    if row[c] > row[best] {
                        best = c;
                    }
                }
                (row[best] > 0).then(|| ClassId::ALL[best])
            })
            .collect();
        LabelGrid::from_labels(*spec, labels).expect("vote raster matches spec")
    }
}

fn scan_labels(cloud: &PointCloud) -> Result<&[Label]> {
    cloud
        .labels()
        .ok_or_else(|| Error::InvalidCloud("ground truth needs per-point labels".into()))
}

/// Majority label of the non-ignored points in each cell.
pub fn sparse_ground_truth(scan: &PointCloud, spec: &GridSpec) -> Result<LabelGrid> {
    let labels = scan_labels(scan)?;
    let mut votes = Votes::new(spec);
    for (p, label) in scan.points().iter().zip(labels) {
        if let (Some(c), Some(class)) = (spec.locate(p.x, p.y), label) {
            votes.add(spec.flat(c), *class);
        }
    }
    Ok(votes.into_grid(spec))
}

/// Majority label over the reference scan plus its neighbours within the
/// window, all mapped into the reference frame. Points of dynamic classes
/// are taken from the reference scan only.
pub fn dense_ground_truth(seq: &ScanSequence, spec: &GridSpec, options: &DenseOptions) -> Result<LabelGrid> {
    let r = seq.reference;
    let first = r.saturating_sub(options.window);
    let last = (r + options.window).min(seq.len() - 1);
    let to_reference = seq.scans[r].pose.inverse();

    // Per-scan votes computed independently, merged in scan order.
    let per_scan: Vec<Vec<(usize, ClassId)>> = (first..=last)
        .into_par_iter()
        .map(|k| {
            let scan = &seq.scans[k];
            let labels = scan_labels(&scan.cloud)?;
            let moved = transform_points(&scan.cloud, &to_reference.compose(&scan.pose));
            let mut out = Vec::new();
            for (p, label) in moved.points().iter().zip(labels) {
                let Some(class) = label else { continue };
                if k != r && options.dynamic_classes.contains(class) {
                    continue;
                }
                if let Some((lo, hi)) = options.z_range {
                    if !(lo..=hi).contains(&p.z) {
                        continue;
                    }
                }
                if let Some(c) = spec.locate(p.x, p.y) {
                    out.push((spec.flat(c), *class));
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let mut votes = Votes::new(spec);
    for (cell, class) in per_scan.into_iter().flatten() {
        votes.add(cell, class);
    }
    Ok(votes.into_grid(spec))
}
