//! Binary PPM/PGM export of label and float rasters.
//!
//! Images are `n_y` pixels wide and `n_x` tall, viewed from above with +x
//! pointing up and +y pointing left.

use std::path::Path;

use super::write_file;
use crate::grid::{CellIndex, GridLayer, GridSpec, LabelGrid};

/// Gray level of a layer whose valid cells all hold the same value.
pub const FLAT_GRAY: u8 = 128;

fn cell_at(spec: &GridSpec, row: usize, col: usize) -> CellIndex {
    CellIndex::new(spec.n_x() - 1 - row, spec.n_y() - 1 - col)
}

/// `P6` image; each class in its legend color, Ignore black.
pub fn label_image(grid: &LabelGrid) -> Vec<u8> {
    let spec = grid.spec();
    let mut out = format!("P6\n{} {}\n255\n", spec.n_y(), spec.n_x()).into_bytes();
    for row in 0..spec.n_x() {
        for col in 0..spec.n_y() {
            let rgb = grid.get(cell_at(spec, row, col)).map_or([0, 0, 0], |c| c.color());
            out.extend_from_slice(&rgb);
        }
    }
    out
}

/// `P5` image; valid cells min-max scaled to 0–255, invalid cells black.
pub fn layer_image(layer: &GridLayer) -> Vec<u8> {
    let spec = layer.spec();
    let valid_values = || layer.values().iter().zip(layer.validity()).filter(|(_, &v)| v).map(|(x, _)| *x);
    let lo = valid_values().fold(f64::INFINITY, f64::min);
    let hi = valid_values().fold(f64::NEG_INFINITY, f64::max);
    let mut out = format!("P5\n{} {}\n255\n", spec.n_y(), spec.n_x()).into_bytes();
    for row in 0..spec.n_x() {
        for col in 0..spec.n_y() {
            let gray = match layer.get(cell_at(spec, row, col)) {
                None => 0,
                Some(_) if hi <= lo => FLAT_GRAY,
                Some(v) => ((v - lo) / (hi - lo) * 255.0).round() as u8,
            };
            out.push(gray);
        }
    }
    out
}

pub fn export_label_image(grid: &LabelGrid, path: impl AsRef<Path>) -> crate::Result<()> {
    write_file(path.as_ref(), &label_image(grid))
}

pub fn export_layer_image(layer: &GridLayer, path: impl AsRef<Path>) -> crate::Result<()> {
    write_file(path.as_ref(), &layer_image(layer))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classes::ClassId;

    fn spec() -> GridSpec {
        GridSpec::new(0.0, 0.0, 1.0, 2, 3).unwrap()
    }

    fn pixels(img: &[u8], header: &str) -> Vec<u8> {
        assert!(img.starts_with(header.as_bytes()));
        img[header.len()..].to_vec()
    }

    #[test]
    fn all_road_is_magenta() {
        let g = LabelGrid::from_labels(spec(), vec![Some(ClassId::ROAD); 6]).unwrap();
        let p = pixels(&label_image(&g), "P6\n3 2\n255\n");
        assert_eq!(p, [255, 0, 255].repeat(6));
    }

    #[test]
    fn all_ignore_is_black() {
        let p = pixels(&label_image(&LabelGrid::ignored(spec())), "P6\n3 2\n255\n");
        assert!(p.iter().all(|&v| v == 0));
    }

    #[test]
    fn orientation() {
        // cell (i=1, j=0): front-right → top row, rightmost column
        let mut g = LabelGrid::ignored(spec());
        g.set(CellIndex::new(1, 0), Some(ClassId::VEGETATION));
        let p = pixels(&label_image(&g), "P6\n3 2\n255\n");
        assert_eq!(&p[6..9], &[0, 175, 0]);
    }

    #[test]
    fn constant_layer_is_mid_gray() {
        let l = GridLayer::from_parts(spec(), vec![2.5; 6], vec![true, true, true, true, false, true]).unwrap();
        let p = pixels(&layer_image(&l), "P5\n3 2\n255\n");
        assert_eq!(p.iter().filter(|&&v| v == FLAT_GRAY).count(), 5);
        assert_eq!(p.iter().filter(|&&v| v == 0).count(), 1);
    }

    #[test]
    fn min_max_scaling() {
        let l = GridLayer::from_parts(spec(), vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0], vec![true; 6]).unwrap();
        let p = pixels(&layer_image(&l), "P5\n3 2\n255\n");
        // top row is i = 1: values 5, 4, 3 from left to right
        assert_eq!(p, vec![255, 204, 153, 102, 51, 0]);
    }
}
