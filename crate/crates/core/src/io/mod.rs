//! File formats: KITTI scans, labels and poses, the raster container, the
//! class-map config, per-point probability tables and image export.

pub mod classmap;
pub mod image;
pub mod kitti;
pub mod probs;
pub mod raster;

pub use classmap::{parse_class_map, read_class_map};
pub use image::{export_label_image, export_layer_image, label_image, layer_image};
pub use kitti::{read_calibration, read_labels, read_point_cloud, read_poses, write_labels, write_point_cloud, write_poses};
pub use probs::{read_probabilities, write_probabilities};
pub use raster::{read_raster, write_raster, LayerData, RasterContainer, RasterLayer};

use std::path::Path;

use crate::error::{Error, Result};

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::Io(e).in_file(path))
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::Io(e).in_file(path))
}
