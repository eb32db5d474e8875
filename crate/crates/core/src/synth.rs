//! Deterministic synthetic labeled scans.
//!
//! A street scene of axis-aligned boxes on a ground plane, enclosed by
//! building walls so that almost every beam returns. Beams follow the range
//! image geometry (one beam per pixel center), so a default scan holds about
//! 131k points. Labels are raw SemanticKITTI codes with the object instance
//! in the high 16 bits.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::classes::{remap_label, semantic_kitti_code, ClassMap};
use crate::error::Result;
use crate::geometry::{Point, PointCloud, Pose};
use crate::spherical::RangeImageSpec;

/// Sensor height above the ground plane.
pub const SENSOR_HEIGHT: f64 = 1.73;

const MAX_RANGE: f64 = 120.0;

/// Settings for [`synth_scene`] and [`synth_sequence`].
#[derive(Debug, Clone, PartialEq)]
pub struct SynthOptions {
    pub seed: u64,
    /// Beam layout.
    pub beams: RangeImageSpec,
    /// Standard deviation of the range noise, meters.
    pub range_noise: f64,
    /// Fraction of returns dropped at random.
    pub dropout: f64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions {
            seed: 0,
            beams: RangeImageSpec::default(),
            range_noise: 0.01,
            dropout: 0.0,
        }
    }
}

/// One synthetic scan in its sensor frame.
#[derive(Debug, Clone)]
pub struct SynthScan {
    /// Points with labels remapped through the default class map.
    pub cloud: PointCloud,
    /// Raw label words, one per point.
    pub raw_labels: Vec<u32>,
}

#[derive(Debug, Clone)]
struct SceneBox {
    min: Vector3<f64>,
    max: Vector3<f64>,
    raw: u16,
    instance: u16,
    /// Motion along x per scan.
    speed: f64,
    reflectance: f64,
}

impl SceneBox {
    fn at(&self, scan: usize) -> (Vector3<f64>, Vector3<f64>) {
        let shift = Vector3::new(self.speed * scan as f64, 0.0, 0.0);
        (self.min + shift, self.max + shift)
    }
}

struct Scene {
    boxes: Vec<SceneBox>,
    /// Half-widths of the road and the outer sidewalk edge.
    road: f64,
    sidewalk: f64,
    parking: (f64, f64, f64, f64),
}

fn code(name: &str) -> u16 {
    semantic_kitti_code(name).expect("known class name")
}

fn reflectance(raw: u16) -> f64 {
    match raw {
        40 => 0.25,
        44 => 0.3,
        48 => 0.35,
        72 => 0.45,
        50 | 51 => 0.5,
        70 => 0.4,
        71 => 0.3,
        80 | 81 => 0.7,
        10 | 18 => 0.8,
        11 | 15 => 0.6,
        30 => 0.2,
        _ => 0.5,
    }
}

fn build_scene(rng: &mut ChaCha8Rng, extent: f64) -> Scene {
    let mut boxes = Vec::new();
    let mut push = |min: [f64; 3], max: [f64; 3], name: &str, speed: f64, rng: &mut ChaCha8Rng| {
        let raw = code(name);
        let instance = boxes.len() as u16 + 1;
        boxes.push(SceneBox {
            min: Vector3::from(min),
            max: Vector3::from(max),
            raw,
            instance,
            speed,
            reflectance: (reflectance(raw) + rng.random_range(-0.05..0.05)).clamp(0.0, 1.0),
        });
    };
    let g = -SENSOR_HEIGHT;
    let road: f64 = rng.random_range(3.5..4.5);
    let sidewalk: f64 = road + rng.random_range(2.0..3.0);

    // enclosing walls
    let (wx, wy): (f64, f64) = (45.0 + extent, 22.0);
    push([wx, -wy, g], [wx + 1.0, wy, g + 10.0], "building", 0.0, rng);
    push([-wx - 1.0, -wy, g], [-wx, wy, g + 10.0], "building", 0.0, rng);
    push([-wx, wy, g], [wx, wy + 1.0, g + 10.0], "fence", 0.0, rng);
    push([-wx, -wy - 1.0, g], [wx, -wy, g + 10.0], "fence", 0.0, rng);

    // building blocks behind the sidewalks
    for side in [-1.0, 1.0] {
        let mut x = -wx + rng.random_range(0.0..6.0);
        while x < wx - 8.0 {
            let len = rng.random_range(8.0..18.0);
            let near: f64 = sidewalk + rng.random_range(6.0..10.0);
            let far = (near + rng.random_range(4.0..8.0)).min(wy - 0.5);
            let h = rng.random_range(5.0..12.0);
            let (y0, y1) = if side > 0.0 { (near, far) } else { (-far, -near) };
            push([x, y0, g], [x + len, y1, g + h], "building", 0.0, rng);
            x += len + rng.random_range(3.0..8.0);
        }
    }

    // parked and moving cars on the road
    let mut x = -wx + 5.0;
    while x < wx - 10.0 {
        let lane: f64 = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let y = lane * road * 0.5;
        let speed = if rng.random_bool(0.3) { lane * 0.8 } else { 0.0 };
        let (len, wid, h) = (rng.random_range(3.8..4.8), rng.random_range(1.7..2.0), rng.random_range(1.4..1.7));
        if x.abs() > 4.0 || y.abs() > 1.5 {
            push([x, y - wid / 2.0, g], [x + len, y + wid / 2.0, g + h], "car", speed, rng);
        }
        x += len + rng.random_range(4.0..14.0);
    }

    // sidewalk furniture
    for side in [-1.0f64, 1.0] {
        let mut x = -wx + rng.random_range(1.0..5.0);
        while x < wx - 2.0 {
            let y = side * rng.random_range(road + 0.5..sidewalk - 0.4);
            match rng.random_range(0..5) {
                0 => push([x, y - 0.1, g], [x + 0.2, y + 0.1, g + 5.0], "pole", 0.0, rng),
                1 => {
                    push([x, y - 0.1, g], [x + 0.2, y + 0.1, g + 2.0], "pole", 0.0, rng);
                    push([x - 0.3, y - 0.05, g + 2.0], [x + 0.5, y + 0.05, g + 2.8], "traffic-sign", 0.0, rng);
                }
                2 => push([x, y - 0.25, g], [x + 0.5, y + 0.25, g + 1.8], "person", 0.0, rng),
                3 => push([x, y - 0.3, g], [x + 1.8, y + 0.3, g + 1.2], "bicycle", 0.0, rng),
                _ => {
                    let ty = side * (sidewalk + rng.random_range(0.8..3.0));
                    push([x, ty - 0.2, g], [x + 0.4, ty + 0.2, g + 2.5], "trunk", 0.0, rng);
                    push([x - 1.3, ty - 1.5, g + 2.5], [x + 1.7, ty + 1.5, g + 5.0], "vegetation", 0.0, rng);
                }
            }
            x += rng.random_range(4.0..10.0);
        }
    }
    // low bushes on the terrain
    for _ in 0..12 {
        let x = rng.random_range(-wx + 2.0..wx - 2.0);
        let side = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let y = side * rng.random_range(sidewalk + 0.5..sidewalk + 5.0);
        push([x, y - 0.6, g], [x + 1.2, y + 0.6, g + 0.8], "vegetation", 0.0, rng);
    }

    let px = rng.random_range(8.0..16.0);
    Scene {
        boxes,
        road,
        sidewalk,
        parking: (px, px + 10.0, -sidewalk - 6.0, -sidewalk),
    }
}

impl Scene {
    fn ground_code(&self, x: f64, y: f64) -> u16 {
        let (x0, x1, y0, y1) = self.parking;
        if (x0..x1).contains(&x) && (y0..y1).contains(&y) {
            code("parking")
        } else if y.abs() < self.road {
            code("road")
        } else if y.abs() < self.sidewalk {
            code("sidewalk")
        } else {
            code("terrain")
        }
    }

    // Nearest hit: distance, raw code, instance, reflectance.
    fn cast(&self, origin: &Vector3<f64>, dir: &Vector3<f64>, scan: usize) -> Option<(f64, u16, u16, f64)> {
        let mut best: Option<(f64, u16, u16, f64)> = None;
        if dir.z < 0.0 {
            let t = (-SENSOR_HEIGHT - origin.z) / dir.z;
            if t < MAX_RANGE {
                let hit = origin + dir * t;
                let raw = self.ground_code(hit.x, hit.y);
                best = Some((t, raw, 0, reflectance(raw)));
            }
        }
        for b in &self.boxes {
            let (lo, hi) = b.at(scan);
            let mut t0 = 0.0f64;
            let mut t1 = best.map_or(MAX_RANGE, |h| h.0);
            let mut hit = true;
            for a in 0..3 {
                if dir[a].abs() < 1e-12 {
                    if origin[a] < lo[a] || origin[a] > hi[a] {
                        hit = false;
                        break;
                    }
                    continue;
                }
                let inv = 1.0 / dir[a];
                let (mut ta, mut tb) = ((lo[a] - origin[a]) * inv, (hi[a] - origin[a]) * inv);
                if ta > tb {
                    std::mem::swap(&mut ta, &mut tb);
                }
                t0 = t0.max(ta);
                t1 = t1.min(tb);
                if t0 > t1 {
                    hit = false;
                    break;
                }
            }
            if hit && t0 > 1e-6 {
                best = Some((t0, b.raw, b.instance, b.reflectance));
            }
        }
        best
    }
}

fn beam_directions(spec: &RangeImageSpec) -> Vec<Vector3<f64>> {
    let (w, h) = (spec.width(), spec.height());
    let (up, down) = (spec.fov_up().to_radians(), spec.fov_down().to_radians());
    let mut dirs = Vec::with_capacity(w * h);
    for row in 0..h {
        let pitch = up - (row as f64 + 0.5) / h as f64 * (up - down);
        for col in 0..w {
            let yaw = std::f64::consts::PI * (1.0 - 2.0 * (col as f64 + 0.5) / w as f64);
            dirs.push(Vector3::new(pitch.cos() * yaw.cos(), pitch.cos() * yaw.sin(), pitch.sin()));
        }
    }
    dirs
}

fn render(scene: &Scene, sensor: &Pose, scan: usize, options: &SynthOptions, rng: &mut ChaCha8Rng) -> Result<SynthScan> {
    let dirs = beam_directions(&options.beams);
    let origin = *sensor.translation();
    let hits: Vec<Option<(f64, u16, u16, f64)>> = dirs
        .par_iter()
        .map(|d| scene.cast(&origin, &(sensor.rotation() * d), scan))
        .collect();

    let noise = Normal::new(0.0, options.range_noise.max(0.0)).expect("finite noise");
    let map = ClassMap::default();
    let mut points = Vec::with_capacity(hits.len());
    let mut raw_labels = Vec::with_capacity(hits.len());
    let mut labels = Vec::with_capacity(hits.len());
    // points are stored along the unrotated beam, i.e. in the sensor frame
    for (d, hit) in dirs.iter().zip(hits) {
        let Some((t, raw, instance, refl)) = hit else { continue };
        let dr: f64 = noise.sample(rng);
        let di: f64 = rng.random_range(-0.05..0.05);
        if options.dropout > 0.0 && rng.random_bool(options.dropout.min(1.0)) {
            continue;
        }
        let p = d * (t + dr).max(0.05);
        points.push(Point::new(p.x, p.y, p.z, (refl + di).clamp(0.0, 1.0)));
        raw_labels.push(u32::from(raw) | (u32::from(instance) << 16));
        labels.push(remap_label(raw, &map)?);
    }
    Ok(SynthScan {
        cloud: PointCloud::new(points)?.with_labels(labels)?,
        raw_labels,
    })
}

/// One labeled scan from a scene drawn with `options.seed`.
pub fn synth_scene(options: &SynthOptions) -> Result<SynthScan> {
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let scene = build_scene(&mut rng, 0.0);
    render(&scene, &Pose::from_translation(Vector3::zeros()), 0, options, &mut rng)
}

/// A drive along +x: `n_scans` scans `step` meters apart through one scene.
/// Some cars move between scans. Returns each scan in its sensor frame plus
/// its world pose.
pub fn synth_sequence(options: &SynthOptions, n_scans: usize, step: f64) -> Result<(Vec<SynthScan>, Vec<Pose>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let travel = step.abs() * n_scans as f64;
    let scene = build_scene(&mut rng, travel);
    let mut scans = Vec::with_capacity(n_scans);
    let mut poses = Vec::with_capacity(n_scans);
    for k in 0..n_scans {
        let pose = Pose::from_translation(Vector3::new(step * k as f64, 0.0, 0.0));
        scans.push(render(&scene, &pose, k, options, &mut rng)?);
        poses.push(pose);
    }
    Ok((scans, poses))
}
