//! Multi-layer LiDAR grid maps with semantic features.
//!
//! A scan becomes a top-view raster of five geometric layers (height
//! extrema, mean intensity, ray observation counts and the lowest ray height
//! per cell) plus optional per-cell class statistics derived from per-point
//! segmentation output. The crate also builds sparse and dense cell ground
//! truth, evaluates predictions by IoU, and trains a small per-cell fusion
//! head.
//!
//! ```
//! use semgrid::{encode_multilayer, GridSpec, Point, PointCloud};
//! use nalgebra::Vector3;
//!
//! let cloud = PointCloud::new(vec![Point::new(2.0, 1.0, -1.5, 0.3)]).unwrap();
//! let spec = GridSpec::default();
//! let stack = encode_multilayer(&cloud, &spec, &Vector3::zeros());
//! assert_eq!(stack.z_max.valid_count(), 1);
//! assert!(stack.observations.valid_count() > 1);
//! ```

pub mod classes;
pub mod error;
pub mod eval;
pub mod fusion;
pub mod geometry;
pub mod grid;
pub mod gridmap;
pub mod groundtruth;
pub mod io;
pub mod semantic;
pub mod spherical;
pub mod synth;

pub use classes::{remap_label, ClassId, ClassMap, Label, NUM_CLASSES};
pub use error::{Error, Result};
pub use eval::{accumulate, iou_per_class, mean_iou, ConfusionMatrix};
pub use fusion::{
    assemble_early_fusion_input, forward, loss_and_gradient, predict, train, train_from_seed, ChannelNorm, FusionInput,
    LateFusionHead, SemanticFeatures, TrainOptions,
};
pub use geometry::{argmax, transform_points, Point, PointCloud, Pose, ProbabilityRow};
pub use grid::{cell_index, CellIndex, GridLayer, GridSpec, LabelGrid};
pub use gridmap::{
    encode_detection_layers, encode_multilayer, encode_observation_layers, traverse_ray, GridMapStack, Ray,
};
pub use groundtruth::{dense_ground_truth, sparse_ground_truth, DenseOptions, ScanSequence};
pub use semantic::{
    encode_argmax, encode_histogram, encode_mean, encode_summed, synth_probabilities, ArgmaxGrid, SemanticGrid,
    SemanticMode,
};
pub use spherical::{lift_pixel_semantics, project_to_range_image, PixelProbabilities, RangeImage, RangeImageSpec};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/grid-maps.md")]
    mod grid_maps {}
    #[doc = include_str!("../../../book/src/range-images.md")]
    mod range_images {}
    #[doc = include_str!("../../../book/src/semantic-features.md")]
    mod semantic_features {}
    #[doc = include_str!("../../../book/src/ground-truth.md")]
    mod ground_truth {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/fusion.md")]
    mod fusion {}
    #[doc = include_str!("../../../book/src/file-formats.md")]
    mod file_formats {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
