//! Uniform tensor grids on boxes and their file formats.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::scalar::Real;

#[derive(Debug, thiserror::Error)]
pub enum GridError {
    #[error("invalid grid: {0}")]
    Invalid(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad grid header: {0}")]
    Header(String),
    #[error("point {0:?} is outside the grid")]
    OutOfRange(Vec<f64>),
}

/// Cube `center + [-half_width, half_width]^dim` cut into `intervals` cells
/// per axis (`intervals + 1` nodes).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub dim: usize,
    pub center: Vec<f64>,
    pub half_width: f64,
    pub intervals: usize,
}

impl BoxSpec {
    pub fn centered(dim: usize, half_width: f64, intervals: usize) -> Self {
        BoxSpec {
            dim,
            center: vec![0.0; dim],
            half_width,
            intervals,
        }
    }

    pub fn validate(&self) -> Result<(), GridError> {
        if !(2..=3).contains(&self.dim) {
            return Err(GridError::Invalid(format!(
                "dim must be 2 or 3, got {}",
                self.dim
            )));
        }
        if self.center.len() != self.dim {
            return Err(GridError::Invalid("center length differs from dim".into()));
        }
        if !(self.half_width > 0.0 && self.half_width.is_finite()) {
            return Err(GridError::Invalid("half_width must be positive".into()));
        }
        if self.intervals < 4 {
            return Err(GridError::Invalid(
                "at least 4 intervals per axis are required".into(),
            ));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.intervals as f64
    }

    pub fn origin(&self) -> Vec<f64> {
        self.center.iter().map(|c| c - self.half_width).collect()
    }
}

/// Node values on a uniform grid, `x_1` varying fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField<T> {
    dim: usize,
    shape: Vec<usize>,
    h: f64,
    origin: Vec<f64>,
    values: Vec<T>,
}

impl<T: Real> GridField<T> {
    pub fn zeros(dim: usize, shape: Vec<usize>, h: f64, origin: Vec<f64>) -> Self {
        assert_eq!(shape.len(), dim);
        assert_eq!(origin.len(), dim);
        let n = shape.iter().product();
        GridField {
            dim,
            shape,
            h,
            origin,
            values: vec![T::zero(); n],
        }
    }

    pub fn on_box(spec: &BoxSpec) -> Self {
        GridField::zeros(
            spec.dim,
            vec![spec.intervals + 1; spec.dim],
            spec.spacing(),
            spec.origin(),
        )
    }

    /// Sample a function at every node, in parallel.
    pub fn from_fn(spec: &BoxSpec, f: impl Fn(&[f64]) -> T + Sync) -> Self {
        let mut g = GridField::on_box(spec);
        g.fill(f);
        g
    }

    pub fn fill(&mut self, f: impl Fn(&[f64]) -> T + Sync) {
        let dim = self.dim;
        let shape = self.shape.clone();
        let h = self.h;
        let origin = self.origin.clone();
        self.values.par_iter_mut().enumerate().for_each(|(p, v)| {
            let mut x = [0.0; 3];
            let mut rem = p;
            for d in 0..dim {
                x[d] = origin[d] + (rem % shape[d]) as f64 * h;
                rem /= shape[d];
            }
            *v = f(&x[..dim]);
        });
    }

    pub fn same_layout<U: Real>(&self) -> GridField<U> {
        GridField::zeros(self.dim, self.shape.clone(), self.h, self.origin.clone())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn shape(&self) -> &[usize] {
        &self.shape
    }
    pub fn spacing(&self) -> f64 {
        self.h
    }
    pub fn origin(&self) -> &[f64] {
        &self.origin
    }
    pub fn values(&self) -> &[T] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }
    pub fn len(&self) -> usize {
        self.values.len()
    }
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn same_shape<U>(&self, other: &GridField<U>) -> bool {
        self.dim == other.dim
            && self.shape == other.shape
            && (self.h - other.h).abs() <= 1e-15 * self.h
    }

    /// Flat index of a multi-index.
    pub fn flat(&self, idx: &[usize]) -> usize {
        let mut p = 0;
        for d in (0..self.dim).rev() {
            p = p * self.shape[d] + idx[d];
        }
        p
    }

    /// Multi-index of a flat index (unused axes are zero).
    pub fn multi(&self, mut p: usize) -> [usize; 3] {
        let mut out = [0; 3];
        for d in 0..self.dim {
            out[d] = p % self.shape[d];
            p /= self.shape[d];
        }
        out
    }

    /// Stride of axis `d` in the flat layout.
    pub fn stride(&self, d: usize) -> usize {
        self.shape[..d].iter().product()
    }

    pub fn coord(&self, p: usize) -> Vec<f64> {
        let m = self.multi(p);
        (0..self.dim)
            .map(|d| self.origin[d] + m[d] as f64 * self.h)
            .collect()
    }

    pub fn is_boundary(&self, p: usize) -> bool {
        let m = self.multi(p);
        (0..self.dim).any(|d| m[d] == 0 || m[d] + 1 == self.shape[d])
    }

    /// Nearest node to `x`, if `x` lies within the grid.
    pub fn nearest(&self, x: &[f64]) -> Option<usize> {
        let mut idx = [0usize; 3];
        for d in 0..self.dim {
            let s = (x[d] - self.origin[d]) / self.h;
            let i = s.round();
            if i < 0.0 || i > (self.shape[d] - 1) as f64 {
                return None;
            }
            idx[d] = i as usize;
        }
        Some(self.flat(&idx[..self.dim]))
    }

    /// Distance from `x` to the nearest face of the grid box.
    pub fn distance_to_boundary(&self, x: &[f64]) -> f64 {
        (0..self.dim)
            .map(|d| {
                let lo = x[d] - self.origin[d];
                let hi = self.origin[d] + (self.shape[d] - 1) as f64 * self.h - x[d];
                lo.min(hi)
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn min_value(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn max_abs_diff(&self, other: &GridField<T>) -> T {
        self.values
            .par_iter()
            .zip(other.values.par_iter())
            .map(|(a, b)| (*a - *b).abs())
            .reduce(T::zero, T::max)
    }

    pub fn map<U: Real>(&self, f: impl Fn(T) -> U + Sync) -> GridField<U> {
        GridField {
            dim: self.dim,
            shape: self.shape.clone(),
            h: self.h,
            origin: self.origin.clone(),
            values: self.values.par_iter().map(|v| f(*v)).collect(),
        }
    }

    pub fn to_f64(&self) -> GridField<f64> {
        self.map(|v| v.re())
    }

    fn header(&self) -> GridHeader {
        GridHeader {
            format: "obstacle-lab-grid".into(),
            version: 1,
            dims: self.dim,
            shape: self.shape.clone(),
            h: self.h,
            origin: self.origin.clone(),
            order: "x1-fastest".into(),
            dtype: "f64le".into(),
        }
    }

    /// Serialize as one JSON header line followed by little-endian f64 values.
    pub fn write_to(&self, w: &mut impl Write) -> Result<(), GridError> {
        let header =
            serde_json::to_string(&self.header()).map_err(|e| GridError::Header(e.to_string()))?;
        w.write_all(header.as_bytes())?;
        w.write_all(b"\n")?;
        let mut buf = Vec::with_capacity(self.values.len() * 8);
        for v in &self.values {
            buf.extend_from_slice(&v.re().to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), GridError> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut f)?;
        f.flush()?;
        Ok(())
    }

    pub fn read_from(r: impl Read) -> Result<Self, GridError> {
        let mut r = BufReader::new(r);
        let mut line = String::new();
        r.read_line(&mut line)?;
        let hdr: GridHeader =
            serde_json::from_str(line.trim_end()).map_err(|e| GridError::Header(e.to_string()))?;
        if hdr.format != "obstacle-lab-grid" || hdr.version != 1 || hdr.dtype != "f64le" {
            return Err(GridError::Header("unsupported format or version".into()));
        }
        if hdr.shape.len() != hdr.dims || hdr.origin.len() != hdr.dims || !(hdr.h > 0.0) {
            return Err(GridError::Header("inconsistent header".into()));
        }
        let n: usize = hdr.shape.iter().product();
        let mut bytes = vec![0u8; n * 8];
        r.read_exact(&mut bytes)?;
        let mut extra = [0u8; 1];
        if r.read(&mut extra)? != 0 {
            return Err(GridError::Header("trailing data after raster".into()));
        }
        let values = bytes
            .chunks_exact(8)
            .map(|c| T::of(f64::from_le_bytes(c.try_into().expect("8 bytes"))))
            .collect();
        Ok(GridField {
            dim: hdr.dims,
            shape: hdr.shape,
            h: hdr.h,
            origin: hdr.origin,
            values,
        })
    }

    pub fn load(path: &Path) -> Result<Self, GridError> {
        Self::read_from(std::fs::File::open(path)?)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridHeader {
    format: String,
    version: u32,
    dims: usize,
    shape: Vec<usize>,
    h: f64,
    origin: Vec<f64>,
    order: String,
    dtype: String,
}
