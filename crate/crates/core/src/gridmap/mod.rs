//! Five-layer top-view grid map of a single scan.
//!
//! | layer             | content                                              |
//! |-------------------|------------------------------------------------------|
//! | `z_max`           | highest detection in the cell                        |
//! | `z_min`           | lowest detection in the cell                         |
//! | `intensity`       | mean reflectance of the detections in the cell       |
//! | `observations`    | number of sensor rays crossing the cell              |
//! | `occlusion_upper` | lowest height at which any ray crossed the cell      |
//!
//! The first three are sparse (only cells holding points are valid). The last
//! two are semi-dense: every cell on the path from the sensor to a detection
//! is touched, found with the exact traversal in [`traverse`].

pub mod traverse;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::geometry::PointCloud;
use crate::grid::{GridLayer, GridSpec};

pub use traverse::{for_each_crossed_cell, traverse_ray, Ray};

/// Layer names in channel order.
pub const LAYER_NAMES: [&str; 5] = ["z_max", "z_min", "intensity", "observations", "occlusion_upper"];

/// The five co-registered layers.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMapStack {
    pub z_max: GridLayer,
    pub z_min: GridLayer,
    pub intensity: GridLayer,
    pub observations: GridLayer,
    pub occlusion_upper: GridLayer,
}

impl GridMapStack {
    /// Assemble a stack; all layers must share one spec.
    pub fn from_layers(layers: [GridLayer; 5]) -> Result<Self> {
        let spec = *layers[0].spec();
        if layers.iter().any(|l| *l.spec() != spec) {
            return Err(Error::SpecMismatch);
        }
        let [z_max, z_min, intensity, observations, occlusion_upper] = layers;
        Ok(GridMapStack {
            z_max,
            z_min,
            intensity,
            observations,
            occlusion_upper,
        })
    }

    pub fn spec(&self) -> &GridSpec {
        self.z_max.spec()
    }

    /// Layers in [`LAYER_NAMES`] order.
    pub fn layers(&self) -> [&GridLayer; 5] {
        [
            &self.z_max,
            &self.z_min,
            &self.intensity,
            &self.observations,
            &self.occlusion_upper,
        ]
    }
}

/// Max height, min height and mean intensity per cell.
///
/// Out-of-bounds points are ignored; cells without points are invalid. The
/// mean accumulates `(sum, count)` in f64 and divides once.
pub fn encode_detection_layers(cloud: &PointCloud, spec: &GridSpec) -> (GridLayer, GridLayer, GridLayer) {
    let n = spec.n_cells();
    let mut z_max = vec![f64::NEG_INFINITY; n];
    let mut z_min = vec![f64::INFINITY; n];
    let mut sum = vec![0.0f64; n];
    let mut count = vec![0u32; n];

    for p in cloud.points() {
        let Some(c) = spec.locate(p.x, p.y) else {
            continue;
        };
        let k = spec.flat(c);
        z_max[k] = z_max[k].max(p.z);
        z_min[k] = z_min[k].min(p.z);
        sum[k] += p.intensity;
        count[k] += 1;
    }

    let mut max_layer = GridLayer::invalid(*spec);
    let mut min_layer = GridLayer::invalid(*spec);
    let mut mean_layer = GridLayer::invalid(*spec);
    for k in 0..n {
        if count[k] > 0 {
            max_layer.set_flat(k, z_max[k]);
            min_layer.set_flat(k, z_min[k]);
            mean_layer.set_flat(k, sum[k] / count[k] as f64);
        }
    }
    (max_layer, min_layer, mean_layer)
}

/// Observation count and occlusion upper bound per cell.
///
/// Every point contributes the ray from `sensor_origin` to itself. A cell's
/// count is the number of rays crossing it (the detection's own cell
/// included); its occlusion bound is the minimum ray height at cell entry.
pub fn encode_observation_layers(
    cloud: &PointCloud,
    spec: &GridSpec,
    sensor_origin: &Vector3<f64>,
) -> (GridLayer, GridLayer) {
    let n = spec.n_cells();
    let mut count = vec![0u32; n];
    let mut lowest = vec![f64::INFINITY; n];

    for p in cloud.points() {
        let ray = Ray::unchecked(*sensor_origin, p.position());
        for_each_crossed_cell(&ray, spec, |c, z| {
            let k = spec.flat(c);
            count[k] += 1;
            if z < lowest[k] {
                lowest[k] = z;
            }
        });
    }

    let mut observations = GridLayer::invalid(*spec);
    let mut occlusion = GridLayer::invalid(*spec);
    for k in 0..n {
        if count[k] > 0 {
            observations.set_flat(k, count[k] as f64);
            occlusion.set_flat(k, lowest[k]);
        }
    }
    (observations, occlusion)
}

/// All five layers.
pub fn encode_multilayer(cloud: &PointCloud, spec: &GridSpec, sensor_origin: &Vector3<f64>) -> GridMapStack {
    let (z_max, z_min, intensity) = encode_detection_layers(cloud, spec);
    let (observations, occlusion_upper) = encode_observation_layers(cloud, spec, sensor_origin);
    GridMapStack {
        z_max,
        z_min,
        intensity,
        observations,
        occlusion_upper,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use crate::grid::CellIndex;

    fn unit_grid() -> GridSpec {
        GridSpec::new(0.0, 0.0, 1.0, 5, 5).unwrap()
    }

    fn cloud(points: &[(f64, f64, f64, f64)]) -> PointCloud {
        PointCloud::new(points.iter().map(|&(x, y, z, i)| Point::new(x, y, z, i)).collect()).unwrap()
    }

    #[test]
    fn singleton_cell() {
        let (max, min, int) = encode_detection_layers(&cloud(&[(1.5, 1.5, 1.2, 0.5)]), &unit_grid());
        let c = CellIndex::new(1, 1);
        assert_eq!(max.get(c), Some(1.2));
        assert_eq!(min.get(c), Some(1.2));
        assert_eq!(int.get(c), Some(0.5));
        assert_eq!(max.valid_count(), 1);
    }

    #[test]
    fn two_points_in_one_cell() {
        let (max, min, int) = encode_detection_layers(
            &cloud(&[(2.2, 3.1, -0.3, 0.2), (2.7, 3.9, 0.7, 0.6)]),
            &unit_grid(),
        );
        let c = CellIndex::new(2, 3);
        assert_eq!(max.get(c), Some(0.7));
        assert_eq!(min.get(c), Some(-0.3));
        assert!((int.get(c).unwrap() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn empty_cloud_gives_invalid_layers() {
        let stack = encode_multilayer(&PointCloud::default(), &unit_grid(), &Vector3::zeros());
        for l in stack.layers() {
            assert_eq!(l.valid_count(), 0);
        }
    }

    #[test]
    fn out_of_bounds_points_are_ignored() {
        let (max, ..) = encode_detection_layers(&cloud(&[(9.0, 1.0, 0.0, 0.1)]), &unit_grid());
        assert_eq!(max.valid_count(), 0);
    }

    #[test]
    fn single_ray_marks_its_path() {
        let s = unit_grid();
        let origin = Vector3::new(0.5, 0.5, 0.0);
        let (obs, _) = encode_observation_layers(&cloud(&[(4.5, 0.5, -1.0, 0.3)]), &s, &origin);
        assert_eq!(obs.valid_count(), 5);
        for i in 0..5 {
            assert_eq!(obs.get(CellIndex::new(i, 0)), Some(1.0));
        }
    }

    #[test]
    fn occlusion_bound_is_lowest_crossing() {
        let s = unit_grid();
        let origin = Vector3::new(0.5, 0.5, 0.0);
        // coincident in xy; cell (2, 0) is entered at t = 1.5/4, heights -0.3 and 0.15
        let c = cloud(&[(4.5, 0.5, -0.8, 0.3), (4.5, 0.5, 0.4, 0.3)]);
        let (obs, occ) = encode_observation_layers(&c, &s, &origin);
        let cell = CellIndex::new(2, 0);
        assert_eq!(obs.get(cell), Some(2.0));
        assert!((occ.get(cell).unwrap() - (-0.3)).abs() < 1e-12);
    }

    #[test]
    fn coincident_rays_at_fixed_heights() {
        // horizontal rays at z = -0.2 and z = 0.4 over the whole path
        let s = unit_grid();
        let ray_a = Ray::new(Vector3::new(0.5, 0.5, -0.2), Vector3::new(4.5, 0.5, -0.2)).unwrap();
        let ray_b = Ray::new(Vector3::new(0.5, 0.5, 0.4), Vector3::new(4.5, 0.5, 0.4)).unwrap();
        let mut lowest = f64::INFINITY;
        for r in [ray_a, ray_b] {
            for (c, z) in traverse_ray(&r, &s) {
                if c == CellIndex::new(3, 0) {
                    lowest = lowest.min(z);
                }
            }
        }
        assert_eq!(lowest, -0.2);
    }

    #[test]
    fn detection_cells_are_observed() {
        let s = GridSpec::new(-10.0, -10.0, 0.37, 54, 54).unwrap();
        let c = cloud(&[(3.3, -7.1, 0.0, 0.1), (-9.99, 9.5, 1.0, 0.2), (0.0, 0.0, -1.0, 0.0)]);
        let stack = encode_multilayer(&c, &s, &Vector3::zeros());
        for k in 0..s.n_cells() {
            if stack.z_max.validity()[k] {
                assert!(stack.observations.validity()[k]);
            }
        }
    }
}
