//! Top-view raster geometry and the per-cell containers built on it.
//!
//! Cells are half-open: cell `(i, j)` covers
//! `[x_min + i·cell, x_min + (i+1)·cell) × [y_min + j·cell, y_min + (j+1)·cell)`.
//! Index `i` runs along x (forward), `j` along y (left). Rasters are stored
//! row-major with `i` as the row: flat index `i·n_y + j`.

use crate::classes::Label;
use crate::error::{Error, Result};

/// Raster geometry of a top-view grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    x_min: f64,
    y_min: f64,
    cell_size: f64,
    n_x: usize,
    n_y: usize,
}

/// Integer cell coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellIndex {
    pub i: usize,
    pub j: usize,
}

impl CellIndex {
    pub fn new(i: usize, j: usize) -> Self {
        CellIndex { i, j }
    }
}

impl GridSpec {
    pub fn new(x_min: f64, y_min: f64, cell_size: f64, n_x: usize, n_y: usize) -> Result<Self> {
        if !(x_min.is_finite() && y_min.is_finite()) {
            return Err(Error::InvalidGridSpec("non-finite origin".into()));
        }
        if !(cell_size.is_finite() && cell_size > 0.0) {
            return Err(Error::InvalidGridSpec(format!("cell size {cell_size}")));
        }
        if n_x == 0 || n_y == 0 {
            return Err(Error::InvalidGridSpec(format!("{n_x}×{n_y} cells")));
        }
        if n_x > u32::MAX as usize || n_y > u32::MAX as usize {
            return Err(Error::InvalidGridSpec("cell count exceeds u32".into()));
        }
        Ok(GridSpec {
            x_min,
            y_min,
            cell_size,
            n_x,
            n_y,
        })
    }

    /// Parse `"x_min,y_min,cell,n_x,n_y"`.
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let bad = |what: &str| Error::InvalidGridSpec(format!("{what} in {s:?}"));
        if parts.len() != 5 {
            return Err(bad("expected 5 comma-separated fields"));
        }
        let f = |k: usize| parts[k].parse::<f64>().map_err(|_| bad("bad number"));
        let n = |k: usize| parts[k].parse::<usize>().map_err(|_| bad("bad cell count"));
        GridSpec::new(f(0)?, f(1)?, f(2)?, n(3)?, n(4)?)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }
    pub fn y_min(&self) -> f64 {
        self.y_min
    }
    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }
    pub fn n_x(&self) -> usize {
        self.n_x
    }
    pub fn n_y(&self) -> usize {
        self.n_y
    }
    pub fn x_max(&self) -> f64 {
        self.x_min + self.n_x as f64 * self.cell_size
    }
    pub fn y_max(&self) -> f64 {
        self.y_min + self.n_y as f64 * self.cell_size
    }
    pub fn n_cells(&self) -> usize {
        self.n_x * self.n_y
    }

    pub fn flat(&self, c: CellIndex) -> usize {
        c.i * self.n_y + c.j
    }

    pub fn unflat(&self, k: usize) -> CellIndex {
        CellIndex::new(k / self.n_y, k % self.n_y)
    }

    /// Cell containing `(x, y)`; `None` when out of bounds (or non-finite).
    #[inline]
    pub fn locate(&self, x: f64, y: f64) -> Option<CellIndex> {
        let fi = ((x - self.x_min) / self.cell_size).floor();
        let fj = ((y - self.y_min) / self.cell_size).floor();
        // NaN fails both comparisons.
        if fi >= 0.0 && fi < self.n_x as f64 && fj >= 0.0 && fj < self.n_y as f64 {
            Some(CellIndex::new(fi as usize, fj as usize))
        } else {
            None
        }
    }

    /// Center of a cell in meters.
    pub fn cell_center(&self, c: CellIndex) -> (f64, f64) {
        (
            self.x_min + (c.i as f64 + 0.5) * self.cell_size,
            self.y_min + (c.j as f64 + 0.5) * self.cell_size,
        )
    }
}

impl Default for GridSpec {
    /// 1001 × 501 cells of 0.1 m centered on the sensor.
    fn default() -> Self {
        GridSpec {
            x_min: -50.05,
            y_min: -25.05,
            cell_size: 0.1,
            n_x: 1001,
            n_y: 501,
        }
    }
}

/// Cell containing `(x, y)`; `Ok(None)` when out of bounds.
pub fn cell_index(x: f64, y: f64, spec: &GridSpec) -> Result<Option<CellIndex>> {
    if !(x.is_finite() && y.is_finite()) {
        return Err(Error::NonFiniteCoordinate { x, y });
    }
    Ok(spec.locate(x, y))
}

/// One float layer over a grid with per-cell validity.
///
/// Invalid cells always hold `0.0`; NaN never appears.
#[derive(Debug, Clone, PartialEq)]
pub struct GridLayer {
    spec: GridSpec,
    values: Vec<f64>,
    valid: Vec<bool>,
}

impl GridLayer {
    /// A layer with every cell invalid.
    pub fn invalid(spec: GridSpec) -> Self {
        GridLayer {
            spec,
            values: vec![0.0; spec.n_cells()],
            valid: vec![false; spec.n_cells()],
        }
    }

    pub fn from_parts(spec: GridSpec, mut values: Vec<f64>, valid: Vec<bool>) -> Result<Self> {
        if values.len() != spec.n_cells() || valid.len() != spec.n_cells() {
            return Err(Error::DimensionMismatch(format!(
                "layer of {} values / {} flags for {} cells",
                values.len(),
                valid.len(),
                spec.n_cells()
            )));
        }
        for (k, (v, ok)) in values.iter_mut().zip(&valid).enumerate() {
            if *ok && !v.is_finite() {
                return Err(Error::DimensionMismatch(format!(
                    "non-finite value in valid cell {k}"
                )));
            }
            if !*ok {
                *v = 0.0;
            }
        }
        Ok(GridLayer {
            spec,
            values,
            valid,
        })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn get(&self, c: CellIndex) -> Option<f64> {
        let k = self.spec.flat(c);
        self.valid[k].then(|| self.values[k])
    }

    /// Raw values, 0.0 in invalid cells.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn validity(&self) -> &[bool] {
        &self.valid
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }

    pub(crate) fn set_flat(&mut self, k: usize, v: f64) {
        debug_assert!(v.is_finite());
        self.values[k] = v;
        self.valid[k] = true;
    }
}

/// Per-cell label (ground truth or prediction) with an explicit ignore state.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelGrid {
    spec: GridSpec,
    labels: Vec<Label>,
}

impl LabelGrid {
    pub fn ignored(spec: GridSpec) -> Self {
        LabelGrid {
            spec,
            labels: vec![None; spec.n_cells()],
        }
    }

    pub fn from_labels(spec: GridSpec, labels: Vec<Label>) -> Result<Self> {
        if labels.len() != spec.n_cells() {
            return Err(Error::DimensionMismatch(format!(
                "{} labels for {} cells",
                labels.len(),
                spec.n_cells()
            )));
        }
        Ok(LabelGrid { spec, labels })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn get(&self, c: CellIndex) -> Label {
        self.labels[self.spec.flat(c)]
    }

    pub fn set(&mut self, c: CellIndex, label: Label) {
        let k = self.spec.flat(c);
        self.labels[k] = label;
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn labeled_count(&self) -> usize {
        self.labels.iter().filter(|l| l.is_some()).count()
    }
}
