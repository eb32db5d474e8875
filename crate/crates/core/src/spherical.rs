//! Spherical range-image projection and lifting of per-pixel semantics back
//! onto points.

use std::f64::consts::PI;

use crate::classes::NUM_CLASSES;
use crate::error::{Error, Result};
use crate::geometry::{validate_probability_row, Point, PointCloud, ProbabilityRow};

/// Marks an empty pixel in the range and intensity channels.
pub const EMPTY_PIXEL: f64 = -1.0;

/// Geometry of the range image. Defaults follow a 64-beam HDL-64E.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeImageSpec {
    width: usize,
    height: usize,
    fov_up: f64,
    fov_down: f64,
}

impl RangeImageSpec {
    /// `fov_up` / `fov_down` in degrees.
    pub fn new(width: usize, height: usize, fov_up: f64, fov_down: f64) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::DimensionMismatch(format!(
                "range image {height}×{width}"
            )));
        }
        if !(fov_up.is_finite() && fov_down.is_finite() && fov_up > fov_down) {
            return Err(Error::DimensionMismatch(format!(
                "field of view [{fov_down}, {fov_up}]"
            )));
        }
        Ok(RangeImageSpec {
            width,
            height,
            fov_up,
            fov_down,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }
    pub fn height(&self) -> usize {
        self.height
    }
    pub fn fov_up(&self) -> f64 {
        self.fov_up
    }
    pub fn fov_down(&self) -> f64 {
        self.fov_down
    }
    pub fn n_pixels(&self) -> usize {
        self.width * self.height
    }

    /// `(row, col)` of a point; `None` for a point at the origin.
    pub fn pixel_of(&self, p: &Point) -> Option<(usize, usize)> {
        let range = p.norm();
        if range == 0.0 {
            return None;
        }
        let yaw = p.y.atan2(p.x);
        let pitch = (p.z / range).asin();
        let up = self.fov_up.to_radians();
        let down = self.fov_down.to_radians();

        let u = 0.5 * (1.0 - yaw / PI);
        let v = 1.0 - (pitch - down) / (up - down);
        let col = (self.width as f64 * u).floor();
        let row = (self.height as f64 * v).floor();
        let col = col.clamp(0.0, (self.width - 1) as f64) as usize;
        let row = row.clamp(0.0, (self.height - 1) as f64) as usize;
        Some((row, col))
    }
}

impl Default for RangeImageSpec {
    fn default() -> Self {
        RangeImageSpec {
            width: 2048,
            height: 64,
            fov_up: 3.0,
            fov_down: -25.0,
        }
    }
}

/// Range, intensity and winning-point rasters, `height × width`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeImage {
    spec: RangeImageSpec,
    range: Vec<f64>,
    intensity: Vec<f64>,
    point_index: Vec<Option<usize>>,
    skipped: usize,
}

impl RangeImage {
    pub(crate) fn from_parts(
        spec: RangeImageSpec,
        range: Vec<f64>,
        intensity: Vec<f64>,
        point_index: Vec<Option<usize>>,
    ) -> Self {
        RangeImage {
            spec,
            range,
            intensity,
            point_index,
            skipped: 0,
        }
    }

    pub fn spec(&self) -> &RangeImageSpec {
        &self.spec
    }
    pub fn range(&self) -> &[f64] {
        &self.range
    }
    pub fn intensity(&self) -> &[f64] {
        &self.intensity
    }
    pub fn point_index(&self) -> &[Option<usize>] {
        &self.point_index
    }
    /// Number of points skipped because they sat at the origin.
    pub fn skipped(&self) -> usize {
        self.skipped
    }
    pub fn at(&self, row: usize, col: usize) -> Option<(f64, f64, usize)> {
        let k = row * self.spec.width + col;
        self.point_index[k].map(|i| (self.range[k], self.intensity[k], i))
    }
}

/// Project a cloud onto the range image.
///
/// On collision the nearer point wins; equal ranges keep the lower point
/// index.
pub fn project_to_range_image(cloud: &PointCloud, spec: &RangeImageSpec) -> RangeImage {
    let n = spec.n_pixels();
    let mut image = RangeImage {
        spec: *spec,
        range: vec![EMPTY_PIXEL; n],
        intensity: vec![EMPTY_PIXEL; n],
        point_index: vec![None; n],
        skipped: 0,
    };
    for (idx, p) in cloud.points().iter().enumerate() {
        let Some((row, col)) = spec.pixel_of(p) else {
            image.skipped += 1;
            continue;
        };
        let k = row * spec.width + col;
        let r = p.norm();
        if image.point_index[k].is_none() || r < image.range[k] {
            image.range[k] = r;
            image.intensity[k] = p.intensity;
            image.point_index[k] = Some(idx);
        }
    }
    image
}

/// Per-pixel class probabilities, `height × width × NUM_CLASSES`.
///
/// An all-zero row marks a pixel without a prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelProbabilities {
    height: usize,
    width: usize,
    rows: Vec<ProbabilityRow>,
}

impl PixelProbabilities {
    pub fn new(height: usize, width: usize, rows: Vec<ProbabilityRow>) -> Result<Self> {
        if rows.len() != height * width {
            return Err(Error::DimensionMismatch(format!(
                "{} probability pixels for a {height}×{width} raster",
                rows.len()
            )));
        }
        Ok(PixelProbabilities {
            height,
            width,
            rows,
        })
    }

    pub fn uniform(height: usize, width: usize) -> Self {
        PixelProbabilities {
            height,
            width,
            rows: vec![uniform_row(); height * width],
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }
    pub fn width(&self) -> usize {
        self.width
    }
    pub fn rows(&self) -> &[ProbabilityRow] {
        &self.rows
    }
    pub fn set(&mut self, row: usize, col: usize, probs: ProbabilityRow) {
        self.rows[row * self.width + col] = probs;
    }
}

pub(crate) fn uniform_row() -> ProbabilityRow {
    [1.0 / NUM_CLASSES as f64; NUM_CLASSES]
}

/// Give every point the probability vector of the pixel it projects to.
///
/// The pixel is recomputed per point, so points that lost a collision still
/// receive the winner's vector. Points at the origin and points landing on
/// an empty probability pixel receive the uniform distribution.
pub fn lift_pixel_semantics(
    image: &RangeImage,
    pixel_probs: &PixelProbabilities,
    cloud: &PointCloud,
) -> Result<PointCloud> {
    let spec = image.spec();
    if pixel_probs.height != spec.height || pixel_probs.width != spec.width {
        return Err(Error::DimensionMismatch(format!(
            "probability raster {}×{} vs range image {}×{}",
            pixel_probs.height, pixel_probs.width, spec.height, spec.width
        )));
    }
    let mut rows = Vec::with_capacity(cloud.len());
    for (index, p) in cloud.points().iter().enumerate() {
        let row = match spec.pixel_of(p) {
            None => uniform_row(),
            Some((r, c)) => {
                let probs = pixel_probs.rows[r * spec.width + c];
                if probs.iter().all(|v| *v == 0.0) {
                    uniform_row()
                } else {
                    validate_probability_row(&probs).map_err(|reason| {
                        Error::MalformedProbabilities {
                            index,
                            reason: format!("pixel ({r}, {c}): {reason}"),
                        }
                    })?;
                    probs
                }
            }
        };
        rows.push(row);
    }
    cloud.clone().with_probabilities(rows)
}
