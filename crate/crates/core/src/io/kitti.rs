//! KITTI Velodyne scans, SemanticKITTI label files and odometry poses.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Matrix3, Vector3};

use super::{read_file, write_file};
use crate::classes::{remap_label, ClassMap, Label};
use crate::error::{Error, Result};
use crate::geometry::{Point, PointCloud, Pose};

const RECORD: usize = 16;

/// Rotation deviation from orthonormal accepted in pose files.
pub const POSE_TOLERANCE: f64 = 1e-4;

/// Decode little-endian `f32` quadruples `(x, y, z, intensity)`. Intensity
/// is clamped to `[0, 1]`.
pub fn parse_point_cloud(bytes: &[u8]) -> Result<PointCloud> {
    if !bytes.len().is_multiple_of(RECORD) {
        return Err(Error::Truncated {
            offset: (bytes.len() / RECORD * RECORD) as u64,
            reason: format!("{} trailing bytes, records are {RECORD} bytes", bytes.len() % RECORD),
        });
    }
    let mut points = Vec::with_capacity(bytes.len() / RECORD);
    for (r, rec) in bytes.chunks_exact(RECORD).enumerate() {
        let mut v = [0.0f64; 4];
        for (k, word) in rec.chunks_exact(4).enumerate() {
            let f = f32::from_le_bytes(word.try_into().unwrap());
            if !f.is_finite() {
                return Err(Error::NonFiniteValue {
                    offset: (r * RECORD + k * 4) as u64,
                });
            }
            v[k] = f as f64;
        }
        points.push(Point::new(v[0], v[1], v[2], v[3].clamp(0.0, 1.0)));
    }
    PointCloud::new(points)
}

pub fn read_point_cloud(path: impl AsRef<Path>) -> Result<PointCloud> {
    let path = path.as_ref();
    parse_point_cloud(&read_file(path)?).map_err(|e| e.in_file(path))
}

/// Encode points as little-endian `f32` quadruples.
pub fn encode_point_cloud(cloud: &PointCloud) -> Vec<u8> {
    let mut out = Vec::with_capacity(cloud.len() * RECORD);
    for p in cloud.points() {
        for v in [p.x, p.y, p.z, p.intensity] {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

pub fn write_point_cloud(path: impl AsRef<Path>, cloud: &PointCloud) -> Result<()> {
    write_file(path.as_ref(), &encode_point_cloud(cloud))
}

/// Decode SemanticKITTI labels: one little-endian `u32` per point, semantic
/// class in the low 16 bits.
pub fn parse_labels(bytes: &[u8], map: &ClassMap) -> Result<Vec<Label>> {
    if !bytes.len().is_multiple_of(4) {
        return Err(Error::Truncated {
            offset: (bytes.len() / 4 * 4) as u64,
            reason: "label files hold 4-byte records".into(),
        });
    }
    bytes
        .chunks_exact(4)
        .map(|w| {
            let raw = u32::from_le_bytes(w.try_into().unwrap());
            remap_label((raw & 0xffff) as u16, map)
        })
        .collect()
}

pub fn read_labels(path: impl AsRef<Path>, map: &ClassMap) -> Result<Vec<Label>> {
    let path = path.as_ref();
    parse_labels(&read_file(path)?, map).map_err(|e| e.in_file(path))
}

/// Write raw label words.
pub fn write_labels(path: impl AsRef<Path>, raw: &[u32]) -> Result<()> {
    let bytes: Vec<u8> = raw.iter().flat_map(|v| v.to_le_bytes()).collect();
    write_file(path.as_ref(), &bytes)
}

fn parse_row_major_3x4(line: &str, line_no: usize) -> Result<(Matrix3<f64>, Vector3<f64>)> {
    let values: Vec<f64> = line
        .split_whitespace()
        .map(|t| {
            t.parse::<f64>().map_err(|_| Error::Parse {
                line: line_no,
                reason: format!("not a number: {t:?}"),
            })
        })
        .collect::<Result<_>>()?;
    if values.len() != 12 {
        return Err(Error::Parse {
            line: line_no,
            reason: format!("expected 12 values, found {}", values.len()),
        });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Parse {
            line: line_no,
            reason: "non-finite value".into(),
        });
    }
    let v = &values;
    let r = Matrix3::new(v[0], v[1], v[2], v[4], v[5], v[6], v[8], v[9], v[10]);
    Ok((r, Vector3::new(v[3], v[7], v[11])))
}

fn pose_from_line(line: &str, line_no: usize) -> Result<Pose> {
    let (r, t) = parse_row_major_3x4(line, line_no)?;
    Pose::from_approximate(r, t, POSE_TOLERANCE).map_err(|e| Error::Parse {
        line: line_no,
        reason: e.to_string(),
    })
}

/// Parse one pose per non-empty line (row-major 3×4). With a calibration
/// `C`, each pose `T` becomes `C⁻¹·T·C`.
pub fn parse_poses(text: &str, calibration: Option<&Pose>) -> Result<Vec<Pose>> {
    let mut poses = Vec::new();
    for (k, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let pose = pose_from_line(line, k + 1)?;
        poses.push(match calibration {
            Some(c) => c.inverse().compose(&pose).compose(c),
            None => pose,
        });
    }
    Ok(poses)
}

fn read_text(path: &Path) -> Result<String> {
    String::from_utf8(read_file(path)?).map_err(|e| {
        Error::Parse {
            line: 0,
            reason: e.to_string(),
        }
        .in_file(path)
    })
}

pub fn read_poses(path: impl AsRef<Path>, calibration: Option<&Pose>) -> Result<Vec<Pose>> {
    let path = path.as_ref();
    parse_poses(&read_text(path)?, calibration).map_err(|e| e.in_file(path))
}

/// The `Tr:` line of a KITTI `calib.txt`.
pub fn parse_calibration(text: &str) -> Result<Pose> {
    for (k, line) in text.lines().enumerate() {
        if let Some(rest) = line.trim_start().strip_prefix("Tr:") {
            return pose_from_line(rest, k + 1);
        }
    }
    Err(Error::Parse {
        line: 0,
        reason: "no Tr: line".into(),
    })
}

pub fn read_calibration(path: impl AsRef<Path>) -> Result<Pose> {
    let path = path.as_ref();
    parse_calibration(&read_text(path)?).map_err(|e| e.in_file(path))
}

pub fn format_poses(poses: &[Pose]) -> String {
    let mut out = String::new();
    for p in poses {
        let (r, t) = (p.rotation(), p.translation());
        let v = [
            r[(0, 0)], r[(0, 1)], r[(0, 2)], t.x,
            r[(1, 0)], r[(1, 1)], r[(1, 2)], t.y,
            r[(2, 0)], r[(2, 1)], r[(2, 2)], t.z,
        ];
        let line: Vec<String> = v.iter().map(|x| format!("{x:e}")).collect();
        writeln!(out, "{}", line.join(" ")).unwrap();
    }
    out
}

pub fn write_poses(path: impl AsRef<Path>, poses: &[Pose]) -> Result<()> {
    write_file(path.as_ref(), format_poses(poses).as_bytes())
}
