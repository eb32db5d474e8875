//! The `GMAP` raster container.
//!
//! Layout, all little-endian:
//!
//! | field | type |
//! |---|---|
//! | magic | `b"GMAP"` |
//! | version | `u16` = 1 |
//! | x_min, y_min, cell_size | `f64` |
//! | n_x, n_y | `u32` |
//! | layer count | `u16` |
//!
//! then per layer: name length `u16`, UTF-8 name, dtype `u8` (0 = f32,
//! 1 = u8, 2 = f64), mask flag `u8`, `n_x·n_y` row-major values, and when
//! flagged a validity bitmask of `ceil(n_x·n_y / 8)` bytes, least
//! significant bit first.

use std::path::Path;

use super::{read_file, write_file};
use crate::classes::{ClassId, Label, NUM_CLASSES};
use crate::error::{Error, Result};
use crate::fusion::{ChannelNorm, FusionInput, LateFusionHead};
use crate::geometry::ProbabilityRow;
use crate::grid::{GridLayer, GridSpec, LabelGrid};
use crate::gridmap::{GridMapStack, LAYER_NAMES};
use crate::semantic::{SemanticGrid, SemanticMode};
use crate::spherical::{PixelProbabilities, RangeImage, RangeImageSpec, EMPTY_PIXEL};

pub const MAGIC: &[u8; 4] = b"GMAP";
pub const VERSION: u16 = 1;

/// Label raster value for Ignore.
pub const IGNORE_CODE: u8 = 255;

#[derive(Debug, Clone, PartialEq)]
pub enum LayerData {
    F32(Vec<f32>),
    U8(Vec<u8>),
    F64(Vec<f64>),
}

impl LayerData {
    fn tag(&self) -> u8 {
        match self {
            LayerData::F32(_) => 0,
            LayerData::U8(_) => 1,
            LayerData::F64(_) => 2,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            LayerData::F32(v) => v.len(),
            LayerData::U8(v) => v.len(),
            LayerData::F64(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Values widened to `f64`.
    pub fn to_f64(&self) -> Vec<f64> {
        match self {
            LayerData::F32(v) => v.iter().map(|&x| x as f64).collect(),
            LayerData::U8(v) => v.iter().map(|&x| x as f64).collect(),
            LayerData::F64(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RasterLayer {
    pub name: String,
    pub data: LayerData,
    pub mask: Option<Vec<bool>>,
}

impl RasterLayer {
    pub fn new(name: impl Into<String>, data: LayerData, mask: Option<Vec<bool>>) -> Self {
        RasterLayer {
            name: name.into(),
            data,
            mask,
        }
    }
}

/// A grid header plus named layers of `n_x·n_y` values each.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterContainer {
    pub spec: GridSpec,
    pub layers: Vec<RasterLayer>,
}

impl RasterContainer {
    pub fn new(spec: GridSpec) -> Self {
        RasterContainer {
            spec,
            layers: Vec::new(),
        }
    }

    pub fn push(&mut self, layer: RasterLayer) -> Result<()> {
        let n = self.spec.n_cells();
        if layer.data.len() != n || layer.mask.as_ref().is_some_and(|m| m.len() != n) {
            return Err(Error::Container(format!(
                "layer {:?} does not have {n} entries",
                layer.name
            )));
        }
        if layer.name.len() > u16::MAX as usize {
            return Err(Error::Container("layer name too long".into()));
        }
        if self.layers.len() == u16::MAX as usize {
            return Err(Error::Container("too many layers".into()));
        }
        self.layers.push(layer);
        Ok(())
    }

    pub fn layer(&self, name: &str) -> Result<&RasterLayer> {
        self.layers
            .iter()
            .find(|l| l.name == name)
            .ok_or_else(|| Error::Container(format!("missing layer {name:?}")))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&self.spec.x_min().to_le_bytes());
        out.extend_from_slice(&self.spec.y_min().to_le_bytes());
        out.extend_from_slice(&self.spec.cell_size().to_le_bytes());
        out.extend_from_slice(&(self.spec.n_x() as u32).to_le_bytes());
        out.extend_from_slice(&(self.spec.n_y() as u32).to_le_bytes());
        out.extend_from_slice(&(self.layers.len() as u16).to_le_bytes());
        for layer in &self.layers {
            out.extend_from_slice(&(layer.name.len() as u16).to_le_bytes());
            out.extend_from_slice(layer.name.as_bytes());
            out.push(layer.data.tag());
            out.push(layer.mask.is_some() as u8);
            match &layer.data {
                LayerData::F32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
                LayerData::U8(v) => out.extend_from_slice(v),
                LayerData::F64(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            }
            if let Some(mask) = &layer.mask {
                let mut bits = vec![0u8; mask.len().div_ceil(8)];
                for (k, _) in mask.iter().enumerate().filter(|(_, &m)| m) {
                    bits[k / 8] |= 1 << (k % 8);
                }
                out.extend_from_slice(&bits);
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4, "magic")? != MAGIC {
            return Err(Error::Container("bad magic".into()));
        }
        let version = r.u16("version")?;
        if version != VERSION {
            return Err(Error::Container(format!("unsupported version {version}")));
        }
        let x_min = r.f64("x_min")?;
        let y_min = r.f64("y_min")?;
        let cell = r.f64("cell_size")?;
        let n_x = r.u32("n_x")? as usize;
        let n_y = r.u32("n_y")? as usize;
        let spec = GridSpec::new(x_min, y_min, cell, n_x, n_y).map_err(|e| Error::Container(e.to_string()))?;
        let count = r.u16("layer count")?;
        let n = n_x
            .checked_mul(n_y)
            .ok_or_else(|| Error::Container("grid too large".into()))?;

        let mut container = RasterContainer::new(spec);
        for _ in 0..count {
            let name_len = r.u16("layer name length")? as usize;
            let name = std::str::from_utf8(r.take(name_len, "layer name")?)
                .map_err(|_| Error::Container("layer name is not UTF-8".into()))?
                .to_string();
            let tag_offset = r.pos;
            let tag = r.u8("dtype")?;
            let has_mask = match r.u8("mask flag")? {
                0 => false,
                1 => true,
                other => return Err(Error::Container(format!("bad mask flag {other} in layer {name:?}"))),
            };
            let width = match tag {
                0 => 4,
                1 => 1,
                2 => 8,
                other => {
                    return Err(Error::Container(format!(
                        "unknown dtype {other} at byte offset {tag_offset}"
                    )))
                }
            };
            let payload = r.take(
                n.checked_mul(width).ok_or_else(|| Error::Container("grid too large".into()))?,
                "layer payload",
            )?;
            let data = match tag {
                0 => LayerData::F32(payload.chunks_exact(4).map(|w| f32::from_le_bytes(w.try_into().unwrap())).collect()),
                1 => LayerData::U8(payload.to_vec()),
                _ => LayerData::F64(payload.chunks_exact(8).map(|w| f64::from_le_bytes(w.try_into().unwrap())).collect()),
            };
            let mask = if has_mask {
                let bits = r.take(n.div_ceil(8), "validity mask")?;
                Some((0..n).map(|k| bits[k / 8] >> (k % 8) & 1 == 1).collect())
            } else {
                None
            };
            container.layers.push(RasterLayer { name, data, mask });
        }
        if r.pos != bytes.len() {
            return Err(Error::Container(format!(
                "{} trailing bytes after the last layer",
                bytes.len() - r.pos
            )));
        }
        Ok(container)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::Truncated {
                offset: self.pos as u64,
                reason: format!("{what} needs {n} bytes, {} left", self.bytes.len() - self.pos),
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

pub fn write_raster(path: impl AsRef<Path>, container: &RasterContainer) -> Result<()> {
    write_file(path.as_ref(), &container.to_bytes())
}

pub fn read_raster(path: impl AsRef<Path>) -> Result<RasterContainer> {
    let path = path.as_ref();
    RasterContainer::from_bytes(&read_file(path)?).map_err(|e| e.in_file(path))
}

fn f64_layer(name: impl Into<String>, values: Vec<f64>, mask: Option<Vec<bool>>) -> RasterLayer {
    RasterLayer::new(name, LayerData::F64(values), mask)
}

fn container_error(e: Error) -> Error {
    match e {
        Error::Container(_) => e,
        other => Error::Container(other.to_string()),
    }
}

impl RasterContainer {
    fn grid_layer(&self, name: &str) -> Result<GridLayer> {
        let l = self.layer(name)?;
        let valid = l.mask.clone().unwrap_or_else(|| vec![true; self.spec.n_cells()]);
        GridLayer::from_parts(self.spec, l.data.to_f64(), valid).map_err(container_error)
    }
}

impl From<&GridMapStack> for RasterContainer {
    fn from(stack: &GridMapStack) -> Self {
        let mut c = RasterContainer::new(*stack.spec());
        for (name, layer) in LAYER_NAMES.iter().zip(stack.layers()) {
            c.layers.push(f64_layer(*name, layer.values().to_vec(), Some(layer.validity().to_vec())));
        }
        c
    }
}

impl TryFrom<&RasterContainer> for GridMapStack {
    type Error = Error;

    fn try_from(c: &RasterContainer) -> Result<Self> {
        let layers = [
            c.grid_layer(LAYER_NAMES[0])?,
            c.grid_layer(LAYER_NAMES[1])?,
            c.grid_layer(LAYER_NAMES[2])?,
            c.grid_layer(LAYER_NAMES[3])?,
            c.grid_layer(LAYER_NAMES[4])?,
        ];
        GridMapStack::from_layers(layers)
    }
}

impl From<&GridLayer> for RasterContainer {
    fn from(layer: &GridLayer) -> Self {
        let mut c = RasterContainer::new(*layer.spec());
        c.layers
            .push(f64_layer("layer", layer.values().to_vec(), Some(layer.validity().to_vec())));
        c
    }
}

impl RasterContainer {
    /// Any single layer as a [`GridLayer`].
    pub fn to_grid_layer(&self, name: &str) -> Result<GridLayer> {
        self.grid_layer(name)
    }
}

impl From<&LabelGrid> for RasterContainer {
    fn from(grid: &LabelGrid) -> Self {
        let codes = grid
            .labels()
            .iter()
            .map(|l| l.map_or(IGNORE_CODE, |c| c.index() as u8))
            .collect();
        let mut c = RasterContainer::new(*grid.spec());
        c.layers.push(RasterLayer::new("label", LayerData::U8(codes), None));
        c
    }
}

impl TryFrom<&RasterContainer> for LabelGrid {
    type Error = Error;

    fn try_from(c: &RasterContainer) -> Result<Self> {
        let l = c.layer("label")?;
        let LayerData::U8(codes) = &l.data else {
            return Err(Error::Container("label layer must be u8".into()));
        };
        let labels = codes
            .iter()
            .map(|&v| match v {
                IGNORE_CODE => Ok(None),
                v => ClassId::new(v as usize)
                    .map(Some)
                    .ok_or_else(|| Error::Container(format!("label code {v} out of range"))),
            })
            .collect::<Result<Vec<Label>>>()?;
        LabelGrid::from_labels(c.spec, labels)
    }
}

fn mode_from_name(name: &str) -> Option<SemanticMode> {
    [SemanticMode::Histogram, SemanticMode::Summed, SemanticMode::Mean]
        .into_iter()
        .find(|m| m.name() == name)
}

impl From<&SemanticGrid> for RasterContainer {
    fn from(grid: &SemanticGrid) -> Self {
        let mut c = RasterContainer::new(*grid.spec());
        let prefix = grid.mode().name();
        for class in ClassId::ALL {
            let values = grid.mass().iter().skip(class.index()).step_by(NUM_CLASSES).copied().collect();
            c.layers.push(f64_layer(format!("{prefix}/{}", class.name()), values, None));
        }
        let counts = grid.counts().iter().map(|&n| n as f64).collect();
        c.layers.push(f64_layer("count", counts, None));
        c
    }
}

impl TryFrom<&RasterContainer> for SemanticGrid {
    type Error = Error;

    fn try_from(c: &RasterContainer) -> Result<Self> {
        let first = c.layers.first().ok_or_else(|| Error::Container("no layers".into()))?;
        let prefix = first.name.split('/').next().unwrap_or_default();
        let mode = mode_from_name(prefix)
            .ok_or_else(|| Error::Container(format!("unknown semantic encoding {prefix:?}")))?;
        let n = c.spec.n_cells();
        let mut mass = vec![0.0; n * NUM_CLASSES];
        for class in ClassId::ALL {
            let values = c.layer(&format!("{prefix}/{}", class.name()))?.data.to_f64();
            for (k, v) in values.into_iter().enumerate() {
                mass[k * NUM_CLASSES + class.index()] = v;
            }
        }
        let counts = c
            .layer("count")?
            .data
            .to_f64()
            .into_iter()
            .map(|v| {
                if v >= 0.0 && v <= u32::MAX as f64 && v.fract() == 0.0 {
                    Ok(v as u32)
                } else {
                    Err(Error::Container(format!("bad point count {v}")))
                }
            })
            .collect::<Result<_>>()?;
        SemanticGrid::from_parts(c.spec, mode, mass, counts).map_err(container_error)
    }
}

impl From<&FusionInput> for RasterContainer {
    fn from(input: &FusionInput) -> Self {
        let mut c = RasterContainer::new(*input.spec());
        for (k, name) in input.channel_names().iter().enumerate() {
            c.layers
                .push(f64_layer(name.clone(), input.channel(k), Some(input.cell_validity().to_vec())));
        }
        c
    }
}

impl TryFrom<&RasterContainer> for FusionInput {
    type Error = Error;

    fn try_from(c: &RasterContainer) -> Result<Self> {
        let n = c.spec.n_cells();
        let channels = c.layers.len();
        let mut data = vec![0.0; n * channels];
        let mut valid = vec![false; n];
        for (ch, layer) in c.layers.iter().enumerate() {
            for (k, v) in layer.data.to_f64().into_iter().enumerate() {
                data[k * channels + ch] = v;
            }
            match &layer.mask {
                Some(m) => valid.iter_mut().zip(m).for_each(|(a, b)| *a |= b),
                None => valid.iter_mut().for_each(|a| *a = true),
            }
        }
        let names = c.layers.iter().map(|l| l.name.clone()).collect();
        FusionInput::new(c.spec, names, data, valid).map_err(container_error)
    }
}

// Vectors of different lengths share one container by padding to the
// longest; the mask marks the real entries.
fn padded(name: &str, values: &[f64], len: usize) -> RasterLayer {
    let mut v = values.to_vec();
    v.resize(len, 0.0);
    let mask = (0..len).map(|k| k < values.len()).collect();
    f64_layer(name, v, Some(mask))
}

fn unpadded(c: &RasterContainer, name: &str) -> Result<Vec<f64>> {
    let l = c.layer(name)?;
    let values = l.data.to_f64();
    Ok(match &l.mask {
        Some(m) => values.into_iter().zip(m).filter(|(_, &keep)| keep).map(|(v, _)| v).collect(),
        None => values,
    })
}

impl From<&LateFusionHead> for RasterContainer {
    fn from(head: &LateFusionHead) -> Self {
        let mut vectors: Vec<(&str, &[f64])> =
            vec![("w1", &head.w1), ("b1", &head.b1), ("w2", &head.w2), ("b2", &head.b2)];
        if let Some(norm) = &head.norm {
            vectors.push(("norm_mean", &norm.mean));
            vectors.push(("norm_std", &norm.std));
        }
        let len = vectors.iter().map(|(_, v)| v.len()).max().unwrap_or(1).max(1);
        let spec = GridSpec::new(0.0, 0.0, 1.0, 1, len).expect("valid head raster");
        let mut c = RasterContainer::new(spec);
        for (name, v) in vectors {
            c.layers.push(padded(name, v, len));
        }
        c
    }
}

impl TryFrom<&RasterContainer> for LateFusionHead {
    type Error = Error;

    fn try_from(c: &RasterContainer) -> Result<Self> {
        let w1 = unpadded(c, "w1")?;
        let b1 = unpadded(c, "b1")?;
        let w2 = unpadded(c, "w2")?;
        let b2 = unpadded(c, "b2")?;
        let hidden = b1.len();
        if hidden == 0 || w1.len() % hidden != 0 {
            return Err(Error::Container("inconsistent head parameter sizes".into()));
        }
        let inputs = w1.len() / hidden;
        let norm = match (c.layer("norm_mean"), c.layer("norm_std")) {
            (Ok(_), Ok(_)) => Some(ChannelNorm {
                mean: unpadded(c, "norm_mean")?,
                std: unpadded(c, "norm_std")?,
            }),
            _ => None,
        };
        LateFusionHead::from_parts(inputs, hidden, w1, b1, w2, b2, norm).map_err(container_error)
    }
}

// Range images keep the vertical field of view in the header: x_min holds
// the lower bound and y_min the upper bound.
impl From<&RangeImage> for RasterContainer {
    fn from(image: &RangeImage) -> Self {
        let s = image.spec();
        let spec = GridSpec::new(s.fov_down(), s.fov_up(), 1.0, s.height(), s.width()).expect("valid image raster");
        let mut c = RasterContainer::new(spec);
        let set: Vec<bool> = image.point_index().iter().map(Option::is_some).collect();
        c.layers.push(f64_layer("range", image.range().to_vec(), None));
        c.layers.push(f64_layer("intensity", image.intensity().to_vec(), None));
        let idx = image.point_index().iter().map(|i| i.map_or(EMPTY_PIXEL, |i| i as f64)).collect();
        c.layers.push(f64_layer("point_index", idx, Some(set)));
        c
    }
}

impl TryFrom<&RasterContainer> for RangeImage {
    type Error = Error;

    fn try_from(c: &RasterContainer) -> Result<Self> {
        let spec = RangeImageSpec::new(c.spec.n_y(), c.spec.n_x(), c.spec.y_min(), c.spec.x_min())
            .map_err(container_error)?;
        let range = c.layer("range")?.data.to_f64();
        let intensity = c.layer("intensity")?.data.to_f64();
        let idx_layer = c.layer("point_index")?;
        let mask = idx_layer
            .mask
            .as_ref()
            .ok_or_else(|| Error::Container("point_index needs a mask".into()))?;
        let point_index = idx_layer
            .data
            .to_f64()
            .into_iter()
            .zip(mask)
            .map(|(v, &set)| {
                if !set {
                    Ok(None)
                } else if v >= 0.0 && v.fract() == 0.0 {
                    Ok(Some(v as usize))
                } else {
                    Err(Error::Container(format!("bad point index {v}")))
                }
            })
            .collect::<Result<_>>()?;
        Ok(RangeImage::from_parts(spec, range, intensity, point_index))
    }
}

/// Rows are `n_x` (image height) and columns `n_y` (image width); one layer
/// per class named `prob/<class>`.
impl From<&PixelProbabilities> for RasterContainer {
    fn from(p: &PixelProbabilities) -> Self {
        let spec = GridSpec::new(0.0, 0.0, 1.0, p.height(), p.width()).expect("valid image raster");
        let mut c = RasterContainer::new(spec);
        for class in ClassId::ALL {
            let values = p.rows().iter().map(|r| r[class.index()]).collect();
            c.layers.push(f64_layer(format!("prob/{}", class.name()), values, None));
        }
        c
    }
}

impl TryFrom<&RasterContainer> for PixelProbabilities {
    type Error = Error;

    fn try_from(c: &RasterContainer) -> Result<Self> {
        let n = c.spec.n_cells();
        let mut rows: Vec<ProbabilityRow> = vec![[0.0; NUM_CLASSES]; n];
        for class in ClassId::ALL {
            let values = c.layer(&format!("prob/{}", class.name()))?.data.to_f64();
            for (row, v) in rows.iter_mut().zip(values) {
                row[class.index()] = v;
            }
        }
        PixelProbabilities::new(c.spec.n_x(), c.spec.n_y(), rows)
    }
}
