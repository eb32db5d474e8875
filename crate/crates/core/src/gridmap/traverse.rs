//! Exact 2D cell traversal of a ray's xy projection (Amanatides & Woo).
//!
//! The walk takes exactly `|Δi| + |Δj|` unit steps from the start cell to the
//! end cell, where both cells come from the same floor rule as
//! [`GridSpec::locate`]. Boundary-crossing parameters only decide the order of
//! the steps, so the last cell visited is always the cell `locate` assigns to
//! the endpoint. When the ray passes through a cell corner both diagonal
//! neighbours are reported (supercover).

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::grid::{CellIndex, GridSpec};

/// Two parameters closer than this are treated as a corner crossing.
const CORNER_TOLERANCE: f64 = 1e-12;

/// Segment from the sensor to a detection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    origin: Vector3<f64>,
    endpoint: Vector3<f64>,
}

impl Ray {
    pub fn new(origin: Vector3<f64>, endpoint: Vector3<f64>) -> Result<Self> {
        if origin == endpoint {
            return Err(Error::DegenerateRay);
        }
        if origin.iter().chain(endpoint.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidCloud("non-finite ray".into()));
        }
        Ok(Ray { origin, endpoint })
    }

    // Encoders also walk zero-length rays (a detection at the sensor origin).
    pub(crate) fn unchecked(origin: Vector3<f64>, endpoint: Vector3<f64>) -> Self {
        Ray { origin, endpoint }
    }

    pub fn origin(&self) -> &Vector3<f64> {
        &self.origin
    }

    pub fn endpoint(&self) -> &Vector3<f64> {
        &self.endpoint
    }

    fn z_at(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        self.origin.z + t * (self.endpoint.z - self.origin.z)
    }
}

/// Cells crossed by the ray's xy projection, in order, each with the ray
/// height at the point where the ray enters it.
///
/// Portions of the ray outside the grid are skipped. A ray with zero xy
/// extent yields the single cell under it with height `min(origin.z,
/// endpoint.z)`.
pub fn traverse_ray(ray: &Ray, spec: &GridSpec) -> Vec<(CellIndex, f64)> {
    let mut out = Vec::new();
    for_each_crossed_cell(ray, spec, |c, z| out.push((c, z)));
    out
}

/// Visitor form of [`traverse_ray`]; avoids allocating.
pub fn for_each_crossed_cell<F: FnMut(CellIndex, f64)>(ray: &Ray, spec: &GridSpec, mut visit: F) {
    let o = ray.origin;
    let d = ray.endpoint - ray.origin;

    if d.x == 0.0 && d.y == 0.0 {
        if let Some(c) = spec.locate(o.x, o.y) {
            visit(c, o.z.min(ray.endpoint.z));
        }
        return;
    }

    let Some((t0, t1)) = clip_to_grid(&o, &d, spec) else {
        return;
    };
    let start = match (t0 == 0.0).then(|| spec.locate(o.x, o.y)).flatten() {
        Some(c) => c,
        None => clamped_cell(o.x + t0 * d.x, o.y + t0 * d.y, spec),
    };
    let end = match (t1 == 1.0)
        .then(|| spec.locate(ray.endpoint.x, ray.endpoint.y))
        .flatten()
    {
        Some(c) => c,
        None => clamped_cell(o.x + t1 * d.x, o.y + t1 * d.y, spec),
    };

    let (mut i, mut j) = (start.i as i64, start.j as i64);
    let step_x = (end.i as i64 - i).signum();
    let step_y = (end.j as i64 - j).signum();
    let mut left_x = (end.i as i64 - i).unsigned_abs();
    let mut left_y = (end.j as i64 - j).unsigned_abs();

    let cell = spec.cell_size();
    // Parameter at which the ray crosses the next boundary along each axis.
    let next_t = |idx: i64, step: i64, origin: f64, delta: f64, min: f64| -> f64 {
        let boundary = min + (idx + i64::from(step > 0)) as f64 * cell;
        (boundary - origin) / delta
    };
    let at = |i: i64, j: i64| CellIndex::new(i as usize, j as usize);

    visit(at(i, j), ray.z_at(t0));
    while left_x > 0 || left_y > 0 {
        let tx = if left_x > 0 {
            next_t(i, step_x, o.x, d.x, spec.x_min())
        } else {
            f64::INFINITY
        };
        let ty = if left_y > 0 {
            next_t(j, step_y, o.y, d.y, spec.y_min())
        } else {
            f64::INFINITY
        };
        if left_x > 0 && left_y > 0 && (tx - ty).abs() <= CORNER_TOLERANCE {
            let z = ray.z_at(tx.min(ty));
            visit(at(i + step_x, j), z);
            visit(at(i, j + step_y), z);
            i += step_x;
            j += step_y;
            left_x -= 1;
            left_y -= 1;
            visit(at(i, j), z);
        } else if tx < ty {
            i += step_x;
            left_x -= 1;
            visit(at(i, j), ray.z_at(tx));
        } else {
            j += step_y;
            left_y -= 1;
            visit(at(i, j), ray.z_at(ty));
        }
    }
}

fn clamped_cell(x: f64, y: f64, spec: &GridSpec) -> CellIndex {
    let fi = ((x - spec.x_min()) / spec.cell_size()).floor();
    let fj = ((y - spec.y_min()) / spec.cell_size()).floor();
    CellIndex::new(
        fi.clamp(0.0, (spec.n_x() - 1) as f64) as usize,
        fj.clamp(0.0, (spec.n_y() - 1) as f64) as usize,
    )
}

/// Liang–Barsky clip of `o + t·d`, `t ∈ [0, 1]`, against the grid rectangle.
fn clip_to_grid(o: &Vector3<f64>, d: &Vector3<f64>, spec: &GridSpec) -> Option<(f64, f64)> {
    let mut t0 = 0.0f64;
    let mut t1 = 1.0f64;
    let slabs = [
        (-d.x, o.x - spec.x_min()),
        (d.x, spec.x_max() - o.x),
        (-d.y, o.y - spec.y_min()),
        (d.y, spec.y_max() - o.y),
    ];
    for (p, q) in slabs {
        if p == 0.0 {
            if q < 0.0 {
                return None;
            }
        } else {
            let r = q / p;
            if p < 0.0 {
                t0 = t0.max(r);
            } else {
                t1 = t1.min(r);
            }
        }
    }
    (t0 <= t1).then_some((t0, t1))
}
