//! Points, clouds and rigid poses.

use nalgebra::{Matrix3, Vector3};

use crate::classes::{Label, NUM_CLASSES};
use crate::error::{Error, Result};

/// Tolerance on the per-row sum of a probability vector.
pub const PROBABILITY_SUM_TOLERANCE: f64 = 1e-5;

/// Class probability row attached to a point.
pub type ProbabilityRow = [f64; NUM_CLASSES];

/// A single LiDAR return in the sensor frame (x forward, y left, z up).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    /// Reflectance in `[0, 1]`.
    pub intensity: f64,
}

impl Point {
    pub fn new(x: f64, y: f64, z: f64, intensity: f64) -> Self {
        Point { x, y, z, intensity }
    }

    pub fn position(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite() && self.intensity.is_finite()
    }
}

/// A scan: points plus optional per-point labels and class probabilities.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    points: Vec<Point>,
    labels: Option<Vec<Label>>,
    probabilities: Option<Vec<ProbabilityRow>>,
}

impl PointCloud {
    /// Build a cloud, rejecting non-finite points.
    pub fn new(points: Vec<Point>) -> Result<Self> {
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidCloud(format!("point {i} is not finite")));
        }
        Ok(PointCloud {
            points,
            labels: None,
            probabilities: None,
        })
    }

    pub fn with_labels(mut self, labels: Vec<Label>) -> Result<Self> {
        if labels.len() != self.points.len() {
            return Err(Error::InvalidCloud(format!(
                "{} labels for {} points",
                labels.len(),
                self.points.len()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    /// Attach probability rows; each must be nonnegative and sum to one.
    pub fn with_probabilities(mut self, rows: Vec<ProbabilityRow>) -> Result<Self> {
        if rows.len() != self.points.len() {
            return Err(Error::InvalidCloud(format!(
                "{} probability rows for {} points",
                rows.len(),
                self.points.len()
            )));
        }
        for (index, row) in rows.iter().enumerate() {
            validate_probability_row(row).map_err(|reason| Error::MalformedProbabilities {
                index,
                reason,
            })?;
        }
        self.probabilities = Some(rows);
        Ok(self)
    }

    pub fn without_labels(mut self) -> Self {
        self.labels = None;
        self
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn labels(&self) -> Option<&[Label]> {
        self.labels.as_deref()
    }

    pub fn probabilities(&self) -> Option<&[ProbabilityRow]> {
        self.probabilities.as_deref()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Keep the points for which `keep` returns true, along with their
    /// optional columns.
    pub fn filter(&self, mut keep: impl FnMut(usize, &Point) -> bool) -> PointCloud {
        let idx: Vec<usize> = (0..self.len())
            .filter(|&i| keep(i, &self.points[i]))
            .collect();
        PointCloud {
            points: idx.iter().map(|&i| self.points[i]).collect(),
            labels: self
                .labels
                .as_ref()
                .map(|l| idx.iter().map(|&i| l[i]).collect()),
            probabilities: self
                .probabilities
                .as_ref()
                .map(|p| idx.iter().map(|&i| p[i]).collect()),
        }
    }

    /// Concatenate clouds. Optional columns survive only if every part has them.
    pub fn concat<'a>(parts: impl IntoIterator<Item = &'a PointCloud>) -> PointCloud {
        let parts: Vec<&PointCloud> = parts.into_iter().collect();
        let all_labels = parts.iter().all(|c| c.labels.is_some());
        let all_probs = parts.iter().all(|c| c.probabilities.is_some());
        PointCloud {
            points: parts.iter().flat_map(|c| c.points.iter().copied()).collect(),
            labels: all_labels.then(|| {
                parts
                    .iter()
                    .flat_map(|c| c.labels.as_ref().unwrap().iter().copied())
                    .collect()
            }),
            probabilities: all_probs.then(|| {
                parts
                    .iter()
                    .flat_map(|c| c.probabilities.as_ref().unwrap().iter().copied())
                    .collect()
            }),
        }
    }
}

pub(crate) fn validate_probability_row(row: &ProbabilityRow) -> Result<(), String> {
    let mut sum = 0.0;
    for (c, &v) in row.iter().enumerate() {
        if !v.is_finite() || v < 0.0 {
            return Err(format!("entry {c} is {v}"));
        }
        sum += v;
    }
    if (sum - 1.0).abs() > PROBABILITY_SUM_TOLERANCE {
        return Err(format!("row sums to {sum}"));
    }
    Ok(())
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Rigid transform `p' = R·p + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

const ORTHONORMAL_TOLERANCE: f64 = 1e-6;

impl Pose {
    /// Build a pose; the rotation must be orthonormal with determinant +1.
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        check_rotation(&rotation, ORTHONORMAL_TOLERANCE)?;
        if translation.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidPose("non-finite translation".into()));
        }
        Ok(Pose {
            rotation,
            translation,
        })
    }

    /// Accept a nearly orthonormal rotation (within `tolerance`) and project
    /// it onto the closest proper rotation.
    pub fn from_approximate(
        rotation: Matrix3<f64>,
        translation: Vector3<f64>,
        tolerance: f64,
    ) -> Result<Self> {
        check_rotation(&rotation, tolerance)?;
        let svd = rotation.svd(true, true);
        let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
        Pose::new(u * v_t, translation)
    }

    pub fn identity() -> Self {
        Pose {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn from_translation(t: Vector3<f64>) -> Self {
        Pose {
            rotation: Matrix3::identity(),
            translation: t,
        }
    }

    /// Rotation about +z by `yaw` radians followed by `translation`.
    pub fn from_yaw(yaw: f64, translation: Vector3<f64>) -> Self {
        let (s, c) = yaw.sin_cos();
        Pose {
            rotation: Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0),
            translation,
        }
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.rotation.transpose();
        Pose {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }
}

fn check_rotation(r: &Matrix3<f64>, tolerance: f64) -> Result<()> {
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidPose("non-finite rotation".into()));
    }
    let err = (r.transpose() * r - Matrix3::identity()).abs().max();
    if err > tolerance {
        return Err(Error::InvalidPose(format!(
            "rotation not orthonormal (max deviation {err:e})"
        )));
    }
    let det = r.determinant();
    if (det - 1.0).abs() > tolerance.max(1e-12) * 3.0 {
        return Err(Error::InvalidPose(format!("rotation determinant {det}")));
    }
    Ok(())
}

/// Map every point through `pose`; intensity, labels and probabilities are
/// carried unchanged.
pub fn transform_points(cloud: &PointCloud, pose: &Pose) -> PointCloud {
    let points = cloud
        .points
        .iter()
        .map(|p| {
            let q = pose.apply(&p.position());
            Point::new(q.x, q.y, q.z, p.intensity)
        })
        .collect();
    PointCloud {
        points,
        labels: cloud.labels.clone(),
        probabilities: cloud.probabilities.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn one(x: f64, y: f64, z: f64) -> PointCloud {
        PointCloud::new(vec![Point::new(x, y, z, 0.3)]).unwrap()
    }

    #[test]
    fn identity_pose_is_a_no_op() {
        let c = one(1.5, -2.0, 0.25)
            .with_labels(vec![Some(crate::ClassId::ROAD)])
            .unwrap();
        assert_eq!(transform_points(&c, &Pose::identity()), c);
    }

    #[test]
    fn pure_translation() {
        let out = transform_points(&one(0.0, 0.0, 0.0), &Pose::from_translation(Vector3::x()));
        assert_eq!(out.points()[0], Point::new(1.0, 0.0, 0.0, 0.3));
    }

    #[test]
    fn quarter_yaw_maps_x_to_y() {
        let out = transform_points(&one(1.0, 0.0, 0.0), &Pose::from_yaw(FRAC_PI_2, Vector3::zeros()));
        let p = out.points()[0];
        assert!((p.x - 0.0).abs() < 1e-9 && (p.y - 1.0).abs() < 1e-9 && p.z.abs() < 1e-9);
    }

    #[test]
    fn pose_rejects_non_rotation() {
        let m = Matrix3::new(1.0, 0.1, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
        assert!(Pose::new(m, Vector3::zeros()).is_err());
        let reflect = Matrix3::new(-1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
        assert!(Pose::new(reflect, Vector3::zeros()).is_err());
    }

    #[test]
    fn malformed_probability_row_names_point() {
        let c = PointCloud::new(vec![Point::default(), Point::new(1.0, 0.0, 0.0, 0.0)]).unwrap();
        let mut good = [0.0; NUM_CLASSES];
        good[0] = 1.0;
        let mut bad = good;
        bad[1] = 0.5;
        match c.with_probabilities(vec![good, bad]) {
            Err(Error::MalformedProbabilities { index, .. }) => assert_eq!(index, 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn argmax_prefers_lowest_index_on_ties() {
        assert_eq!(argmax(&[0.2, 0.4, 0.4]), 1);
        assert_eq!(argmax(&[0.0; 5]), 0);
    }

    proptest! {
        #[test]
        fn inverse_round_trip(
            yaw in -3.2f64..3.2, pitch in -1.5f64..1.5,
            tx in -100.0f64..100.0, ty in -100.0f64..100.0, tz in -5.0f64..5.0,
            x in -80.0f64..80.0, y in -80.0f64..80.0, z in -3.0f64..3.0,
        ) {
            let yaw_pose = Pose::from_yaw(yaw, Vector3::new(tx, ty, tz));
            let (s, c) = pitch.sin_cos();
            let pitch_pose = Pose::new(
                Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c),
                Vector3::zeros(),
            ).unwrap();
            let pose = yaw_pose.compose(&pitch_pose);
            let cloud = one(x, y, z);
            let back = transform_points(&transform_points(&cloud, &pose), &pose.inverse());
            let (a, b) = (cloud.points()[0], back.points()[0]);
            prop_assert!((a.x - b.x).abs() < 1e-9);
            prop_assert!((a.y - b.y).abs() < 1e-9);
            prop_assert!((a.z - b.z).abs() < 1e-9);
        }
    }
}
