use nalgebra::Vector3;
use proptest::prelude::*;

use semgrid::classes::semantic_kitti_code;
use semgrid::*;

#[test]
fn moving_classes_collapse_onto_static() {
    let map = ClassMap::default();
    let pairs = [
        ("car", "moving-car"),
        ("bicyclist", "moving-bicyclist"),
        ("person", "moving-person"),
        ("motorcyclist", "moving-motorcyclist"),
        ("bus", "moving-bus"),
        ("truck", "moving-truck"),
        ("other-vehicle", "moving-other-vehicle"),
    ];
    for (stat, moving) in pairs {
        let a = remap_label(semantic_kitti_code(stat).unwrap(), &map).unwrap();
        let b = remap_label(semantic_kitti_code(moving).unwrap(), &map).unwrap();
        assert_eq!(a, b, "{stat} vs {moving}");
        assert!(a.is_some());
    }
    assert_eq!(remap_label(0, &map).unwrap(), None);
    assert_eq!(
        remap_label(semantic_kitti_code("fence").unwrap(), &map).unwrap(),
        Some(ClassId::BUILDING)
    );
}

#[test]
fn default_map_is_total_over_its_vocabulary() {
    let map = ClassMap::default();
    for (raw, target) in map.entries() {
        assert_eq!(remap_label(raw, &map).unwrap(), target);
    }
    // every reduced class is reachable
    for class in ClassId::ALL {
        assert!(map.entries().any(|(_, t)| t == Some(class)), "{class}");
    }
}

#[test]
fn default_grid_geometry() {
    let spec = GridSpec::default();
    assert_eq!((spec.n_x(), spec.n_y()), (1001, 501));
    assert_eq!(cell_index(0.0, 0.0, &spec).unwrap(), Some(CellIndex::new(500, 250)));
    assert_eq!(cell_index(spec.x_min(), spec.y_min(), &spec).unwrap(), Some(CellIndex::new(0, 0)));
    assert_eq!(cell_index(spec.x_max(), spec.y_min(), &spec).unwrap(), None);
    assert!(cell_index(f64::NAN, 0.0, &spec).is_err());
}

#[test]
fn yaw_quarter_turn() {
    let cloud = PointCloud::new(vec![Point::new(1.0, 0.0, 0.0, 0.2)]).unwrap();
    let out = transform_points(&cloud, &Pose::from_yaw(std::f64::consts::FRAC_PI_2, Vector3::zeros()));
    let p = out.points()[0];
    assert!((p.x).abs() < 1e-9 && (p.y - 1.0).abs() < 1e-9 && p.z == 0.0);
    assert_eq!(p.intensity, 0.2);
}

proptest! {
    #[test]
    fn cells_partition_the_plane(x in -50.05f64..50.05, y in -25.05f64..25.05) {
        let spec = GridSpec::default();
        let c = cell_index(x, y, &spec).unwrap().expect("in bounds");
        let h = spec.cell_size();
        let (x0, y0) = (spec.x_min() + c.i as f64 * h, spec.y_min() + c.j as f64 * h);
        prop_assert!(x >= x0 - 1e-9 && x < x0 + h + 1e-9);
        prop_assert!(y >= y0 - 1e-9 && y < y0 + h + 1e-9);
        // the neighbours do not claim the point
        for (di, dj) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)] {
            let (ni, nj) = (c.i as i64 + di, c.j as i64 + dj);
            if ni >= 0 && nj >= 0 {
                prop_assert_ne!(cell_index(x, y, &spec).unwrap(), Some(CellIndex::new(ni as usize, nj as usize)));
            }
        }
    }

    #[test]
    fn transform_round_trip(
        yaw in -3.2f64..3.2, roll in -0.5f64..0.5,
        tx in -100.0f64..100.0, ty in -100.0f64..100.0, tz in -5.0f64..5.0,
        pts in prop::collection::vec((-80.0f64..80.0, -80.0f64..80.0, -5.0f64..5.0), 1..50),
    ) {
        let r = nalgebra::Rotation3::from_euler_angles(roll, 0.0, yaw).into_inner();
        let pose = Pose::new(r, Vector3::new(tx, ty, tz)).unwrap();
        let cloud = PointCloud::new(pts.iter().map(|&(x, y, z)| Point::new(x, y, z, 0.5)).collect()).unwrap();
        let back = transform_points(&transform_points(&cloud, &pose), &pose.inverse());
        for (a, b) in cloud.points().iter().zip(back.points()) {
            prop_assert!((a.position() - b.position()).norm() < 1e-9);
        }
    }
}
