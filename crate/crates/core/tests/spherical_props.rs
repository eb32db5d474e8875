use proptest::prelude::*;

use semgrid::spherical::{PixelProbabilities, EMPTY_PIXEL};
use semgrid::*;

#[test]
fn forward_point_lands_in_center_column() {
    let spec = RangeImageSpec::default();
    let cloud = PointCloud::new(vec![Point::new(10.0, 0.0, 0.0, 0.4)]).unwrap();
    let img = project_to_range_image(&cloud, &spec);
    let (row, col) = spec.pixel_of(&cloud.points()[0]).unwrap();
    assert_eq!(col, 1024);
    assert_eq!(img.at(row, col), Some((10.0, 0.4, 0)));
}

#[test]
fn empty_cloud_gives_empty_image() {
    let img = project_to_range_image(&PointCloud::new(vec![]).unwrap(), &RangeImageSpec::default());
    assert!(img.range().iter().all(|&r| r == EMPTY_PIXEL));
    assert!(img.point_index().iter().all(Option::is_none));
}

#[test]
fn lifting_gives_losers_the_winners_vector() {
    let spec = RangeImageSpec::default();
    let cloud = PointCloud::new(vec![Point::new(7.0, 0.0, 0.0, 0.0), Point::new(5.0, 0.0, 0.0, 0.0)]).unwrap();
    let img = project_to_range_image(&cloud, &spec);
    let (row, col) = spec.pixel_of(&cloud.points()[0]).unwrap();
    assert_eq!(img.at(row, col).unwrap().2, 1);
    let mut probs = PixelProbabilities::new(spec.height(), spec.width(), vec![[0.0; NUM_CLASSES]; spec.n_pixels()]).unwrap();
    let mut road = [0.0; NUM_CLASSES];
    road[ClassId::ROAD.index()] = 1.0;
    probs.set(row, col, road);
    let lifted = lift_pixel_semantics(&img, &probs, &cloud).unwrap();
    assert_eq!(lifted.probabilities().unwrap(), &[road, road]);

    let uniform = PixelProbabilities::uniform(spec.height(), spec.width());
    let lifted = lift_pixel_semantics(&img, &uniform, &cloud).unwrap();
    assert!(lifted.probabilities().unwrap().iter().flatten().all(|&p| p == 1.0 / 11.0));

    let wrong = PixelProbabilities::uniform(2, 2);
    assert!(lift_pixel_semantics(&img, &wrong, &cloud).is_err());
}

fn point() -> impl Strategy<Value = (f64, f64, f64)> {
    (-60.0f64..60.0, -60.0f64..60.0, -4.0f64..2.0)
}

proptest! {
    #[test]
    fn every_point_in_bounds_and_nearest_wins(pts in prop::collection::vec(point(), 1..400)) {
        let spec = RangeImageSpec::new(64, 16, 3.0, -25.0).unwrap();
        let cloud = PointCloud::new(pts.iter().map(|&(x, y, z)| Point::new(x, y, z, 0.1)).collect()).unwrap();
        let img = project_to_range_image(&cloud, &spec);
        for (idx, p) in cloud.points().iter().enumerate() {
            let (row, col) = spec.pixel_of(p).unwrap();
            prop_assert!(row < spec.height() && col < spec.width());
            let (range, _, winner) = img.at(row, col).unwrap();
            prop_assert!(range <= p.norm());
            if range == p.norm() {
                prop_assert!(winner <= idx);
            }
        }
        for (k, idx) in img.point_index().iter().enumerate() {
            match idx {
                Some(i) => prop_assert!((img.range()[k] - cloud.points()[*i].norm()).abs() < 1e-5),
                None => prop_assert_eq!(img.range()[k], EMPTY_PIXEL),
            }
        }
    }

    #[test]
    fn yaw_by_whole_columns_shifts_columns(
        col in 0usize..256, col_frac in 0.2f64..0.8,
        row in 0usize..32, row_frac in 0.2f64..0.8,
        r in 1.0f64..50.0, k in 0usize..256,
    ) {
        let spec = RangeImageSpec::new(256, 32, 3.0, -25.0).unwrap();
        let w = spec.width() as f64;
        let az = std::f64::consts::PI * (1.0 - 2.0 * (col as f64 + col_frac) / w);
        let (up, down) = (spec.fov_up().to_radians(), spec.fov_down().to_radians());
        let pitch = up - (row as f64 + row_frac) / spec.height() as f64 * (up - down);
        let p = Point::new(r * pitch.cos() * az.cos(), r * pitch.cos() * az.sin(), r * pitch.sin(), 0.0);
        let yaw = -(k as f64) * 2.0 * std::f64::consts::PI / w;
        let cloud = PointCloud::new(vec![p]).unwrap();
        let turned = transform_points(&cloud, &Pose::from_yaw(yaw, nalgebra::Vector3::zeros()));
        let (r0, c0) = spec.pixel_of(&p).unwrap();
        let (r1, c1) = spec.pixel_of(&turned.points()[0]).unwrap();
        prop_assert_eq!(r0, r1);
        prop_assert_eq!(c1, (c0 + k) % spec.width());
    }
}
