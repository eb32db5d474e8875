//! The eleven-class top-view taxonomy and the raw-label remapping table.
//!
//! Raw SemanticKITTI labels are 16-bit codes. Moving variants (`moving-car`,
//! `moving-person`, ...) collapse onto their static counterpart and classes
//! with similar top-view appearance are merged (building+fence,
//! pole+traffic-sign, parking+other-ground).

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

/// Number of semantic classes.
pub const NUM_CLASSES: usize = 11;

/// A class of the reduced taxonomy, `0..NUM_CLASSES`.
///
/// The order is fixed and alphabetical, matching the column order used when
/// reporting per-class IoU.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClassId(u8);

/// A per-point or per-cell label. `None` is the ignore state.
pub type Label = Option<ClassId>;

const NAMES: [&str; NUM_CLASSES] = [
    "building",
    "parking",
    "pedestrian",
    "pole",
    "road",
    "sidewalk",
    "terrain",
    "trunk",
    "two-wheel",
    "vegetation",
    "vehicle",
];

// 8-bit RGB of the class legend.
const PALETTE: [[u8; 3]; NUM_CLASSES] = [
    [255, 200, 0],
    [255, 150, 255],
    [255, 30, 30],
    [255, 120, 50],
    [255, 0, 255],
    [75, 0, 75],
    [150, 240, 80],
    [135, 60, 0],
    [30, 60, 150],
    [0, 175, 0],
    [0, 0, 255],
];

impl ClassId {
    pub const BUILDING: ClassId = ClassId(0);
    pub const PARKING: ClassId = ClassId(1);
    pub const PEDESTRIAN: ClassId = ClassId(2);
    pub const POLE: ClassId = ClassId(3);
    pub const ROAD: ClassId = ClassId(4);
    pub const SIDEWALK: ClassId = ClassId(5);
    pub const TERRAIN: ClassId = ClassId(6);
    pub const TRUNK: ClassId = ClassId(7);
    pub const TWO_WHEEL: ClassId = ClassId(8);
    pub const VEGETATION: ClassId = ClassId(9);
    pub const VEHICLE: ClassId = ClassId(10);

    /// Every class in ClassId order.
    pub const ALL: [ClassId; NUM_CLASSES] = [
        ClassId(0),
        ClassId(1),
        ClassId(2),
        ClassId(3),
        ClassId(4),
        ClassId(5),
        ClassId(6),
        ClassId(7),
        ClassId(8),
        ClassId(9),
        ClassId(10),
    ];

    pub fn new(index: usize) -> Option<ClassId> {
        (index < NUM_CLASSES).then_some(ClassId(index as u8))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn name(self) -> &'static str {
        NAMES[self.index()]
    }

    pub fn from_name(name: &str) -> Option<ClassId> {
        NAMES.iter().position(|n| *n == name).map(|i| ClassId(i as u8))
    }

    /// 8-bit RGB color of the class legend.
    pub fn color(self) -> [u8; 3] {
        PALETTE[self.index()]
    }

    /// Classes whose instances move; rejected from non-reference scans when
    /// aggregating dense ground truth.
    pub fn dynamic() -> Vec<ClassId> {
        vec![ClassId::PEDESTRIAN, ClassId::TWO_WHEEL, ClassId::VEHICLE]
    }
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Table from raw 16-bit labels to the reduced taxonomy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassMap {
    table: BTreeMap<u16, Label>,
}

/// SemanticKITTI raw codes and their targets.
const SEMANTIC_KITTI: &[(u16, &str, Label)] = &[
    (0, "unlabeled", None),
    (1, "outlier", None),
    (10, "car", Some(ClassId::VEHICLE)),
    (11, "bicycle", Some(ClassId::TWO_WHEEL)),
    (13, "bus", Some(ClassId::VEHICLE)),
    (15, "motorcycle", Some(ClassId::TWO_WHEEL)),
    (16, "on-rails", Some(ClassId::VEHICLE)),
    (18, "truck", Some(ClassId::VEHICLE)),
    (20, "other-vehicle", Some(ClassId::VEHICLE)),
    (30, "person", Some(ClassId::PEDESTRIAN)),
    (31, "bicyclist", Some(ClassId::TWO_WHEEL)),
    (32, "motorcyclist", Some(ClassId::TWO_WHEEL)),
    (40, "road", Some(ClassId::ROAD)),
    (44, "parking", Some(ClassId::PARKING)),
    (48, "sidewalk", Some(ClassId::SIDEWALK)),
    (49, "other-ground", Some(ClassId::PARKING)),
    (50, "building", Some(ClassId::BUILDING)),
    (51, "fence", Some(ClassId::BUILDING)),
    (52, "other-structure", None),
    (60, "lane-marking", Some(ClassId::ROAD)),
    (70, "vegetation", Some(ClassId::VEGETATION)),
    (71, "trunk", Some(ClassId::TRUNK)),
    (72, "terrain", Some(ClassId::TERRAIN)),
    (80, "pole", Some(ClassId::POLE)),
    (81, "traffic-sign", Some(ClassId::POLE)),
    (99, "other-object", None),
    (252, "moving-car", Some(ClassId::VEHICLE)),
    (253, "moving-bicyclist", Some(ClassId::TWO_WHEEL)),
    (254, "moving-person", Some(ClassId::PEDESTRIAN)),
    (255, "moving-motorcyclist", Some(ClassId::TWO_WHEEL)),
    (256, "moving-on-rails", Some(ClassId::VEHICLE)),
    (257, "moving-bus", Some(ClassId::VEHICLE)),
    (258, "moving-truck", Some(ClassId::VEHICLE)),
    (259, "moving-other-vehicle", Some(ClassId::VEHICLE)),
];

/// Raw SemanticKITTI code for a raw class name, e.g. `"moving-car"` → 252.
pub fn semantic_kitti_code(name: &str) -> Option<u16> {
    SEMANTIC_KITTI
        .iter()
        .find(|(_, n, _)| *n == name)
        .map(|(code, _, _)| *code)
}

impl ClassMap {
    /// Build a map from explicit entries. Duplicate raw ids are rejected.
    pub fn from_entries(entries: impl IntoIterator<Item = (u16, Label)>) -> Result<Self> {
        let mut table = BTreeMap::new();
        for (raw, target) in entries {
            if table.insert(raw, target).is_some() {
                return Err(Error::Parse {
                    line: 0,
                    reason: format!("duplicate raw id {raw}"),
                });
            }
        }
        Ok(ClassMap { table })
    }

    /// The shipped SemanticKITTI reduction.
    pub fn semantic_kitti() -> Self {
        ClassMap {
            table: SEMANTIC_KITTI.iter().map(|(c, _, t)| (*c, *t)).collect(),
        }
    }

    pub fn get(&self, raw: u16) -> Option<Label> {
        self.table.get(&raw).copied()
    }

    pub fn entries(&self) -> impl Iterator<Item = (u16, Label)> + '_ {
        self.table.iter().map(|(r, t)| (*r, *t))
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

impl Default for ClassMap {
    fn default() -> Self {
        Self::semantic_kitti()
    }
}

/// Map a raw 16-bit label onto the reduced taxonomy.
///
/// A raw id missing from `map` is an error rather than a silent ignore.
pub fn remap_label(raw: u16, map: &ClassMap) -> Result<Label> {
    map.get(raw).ok_or(Error::UnknownLabel(raw))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn code(name: &str) -> u16 {
        semantic_kitti_code(name).unwrap()
    }

    #[test]
    fn moving_and_static_cars_collapse() {
        let map = ClassMap::semantic_kitti();
        assert_eq!(remap_label(code("car"), &map).unwrap(), Some(ClassId::VEHICLE));
        assert_eq!(
            remap_label(code("moving-car"), &map).unwrap(),
            Some(ClassId::VEHICLE)
        );
    }

    #[test]
    fn every_moving_code_matches_its_static_counterpart() {
        let map = ClassMap::semantic_kitti();
        for (raw, name, target) in SEMANTIC_KITTI {
            if let Some(stat) = name.strip_prefix("moving-") {
                assert_eq!(map.get(code(stat)), Some(*target), "{raw}");
            }
        }
    }

    #[test]
    fn unlabeled_is_ignored_and_fence_is_building() {
        let map = ClassMap::default();
        assert_eq!(remap_label(0, &map).unwrap(), None);
        assert_eq!(remap_label(code("fence"), &map).unwrap(), Some(ClassId::BUILDING));
        assert_eq!(remap_label(code("traffic-sign"), &map).unwrap(), Some(ClassId::POLE));
        assert_eq!(remap_label(code("other-ground"), &map).unwrap(), Some(ClassId::PARKING));
    }

    #[test]
    fn unknown_raw_label_is_an_error() {
        let map = ClassMap::default();
        assert!(matches!(remap_label(7, &map), Err(Error::UnknownLabel(7))));
    }

    #[test]
    fn names_round_trip() {
        for c in ClassId::ALL {
            assert_eq!(ClassId::from_name(c.name()), Some(c));
        }
        assert!(ClassId::new(NUM_CLASSES).is_none());
        assert!(ClassId::ROAD < ClassId::VEHICLE);
    }

    #[test]
    fn road_is_magenta() {
        assert_eq!(ClassId::ROAD.color(), [255, 0, 255]);
        assert_eq!(ClassId::VEGETATION.color(), [0, 175, 0]);
    }

    #[test]
    fn duplicate_entries_rejected() {
        assert!(ClassMap::from_entries([(3, None), (3, Some(ClassId::ROAD))]).is_err());
    }
}
