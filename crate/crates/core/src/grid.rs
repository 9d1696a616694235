//! Periodic box discretization of R^N and sampled fields.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid on the torus `[-L, L)^N` with `M` nodes per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    dim: usize,
    half_extent: f64,
    points_per_dim: usize,
    spacing: f64,
}

impl GridSpec {
    pub fn new(dim: usize, half_extent: f64, points_per_dim: usize) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dim must be 1 or 2, got {dim}")));
        }
        if !(half_extent.is_finite() && half_extent > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half extent must be positive, got {half_extent}"
            )));
        }
        if !points_per_dim.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per dimension must be a power of two, got {points_per_dim}"
            )));
        }
        if points_per_dim < 8 {
            return Err(Error::InvalidGrid(format!(
                "points per dimension must be at least 8, got {points_per_dim}"
            )));
        }
        // M is a power of two, so the division is exact and h*M == 2L.
        let spacing = 2.0 * half_extent / points_per_dim as f64;
        Ok(Self {
            dim,
            half_extent,
            points_per_dim,
            spacing,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_extent(&self) -> f64 {
        self.half_extent
    }

    pub fn points_per_dim(&self) -> usize {
        self.points_per_dim
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Total number of nodes, `M^N`.
    pub fn len(&self) -> usize {
        self.points_per_dim.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Volume element `h^N`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    /// Coordinate of node `k` along any axis.
    pub fn coordinate(&self, k: usize) -> f64 {
        -self.half_extent + k as f64 * self.spacing
    }

    /// Per-axis indices of a flat (row-major) index.
    pub fn unflatten(&self, flat: usize) -> [usize; 2] {
        let m = self.points_per_dim;
        match self.dim {
            1 => [flat, 0],
            _ => [flat / m, flat % m],
        }
    }

    pub fn flatten(&self, idx: [usize; 2]) -> usize {
        match self.dim {
            1 => idx[0],
            _ => idx[0] * self.points_per_dim + idx[1],
        }
    }

    /// Coordinates of a flat index; unused trailing axes are zero.
    pub fn point(&self, flat: usize) -> [f64; 2] {
        let idx = self.unflatten(flat);
        match self.dim {
            1 => [self.coordinate(idx[0]), 0.0],
            _ => [self.coordinate(idx[0]), self.coordinate(idx[1])],
        }
    }

    /// Index of the node holding the origin (the centre of the box).
    pub fn origin_index(&self) -> usize {
        let c = self.points_per_dim / 2;
        self.flatten([c, c])
    }

    /// Nearest node to `x` on each axis, as a signed cell offset from the origin node.
    pub fn snap_offset(&self, x: &[f64]) -> Result<[i64; 2]> {
        if x.len() != self.dim {
            return Err(Error::GridMismatch(format!(
                "point has {} coordinates, grid has dimension {}",
                x.len(),
                self.dim
            )));
        }
        let mut out = [0i64; 2];
        for (axis, &xi) in x.iter().enumerate() {
            if !(xi >= -self.half_extent && xi <= self.half_extent) {
                return Err(Error::OutsideBox(x.to_vec()));
            }
            out[axis] = (xi / self.spacing).round() as i64;
        }
        Ok(out)
    }

    /// Coordinates of the node reached from the origin by `offset` cells.
    pub fn offset_point(&self, offset: [i64; 2]) -> Vec<f64> {
        (0..self.dim)
            .map(|a| offset[a] as f64 * self.spacing)
            .collect()
    }
}

/// `make_grid`: validated constructor.
pub fn make_grid(dim: usize, half_extent: f64, points_per_dim: usize) -> Result<GridSpec> {
    GridSpec::new(dim, half_extent, points_per_dim)
}

/// Real samples of a function on a [`GridSpec`], row-major, periodic.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    spec: GridSpec,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(spec: GridSpec) -> Self {
        Self {
            values: vec![0.0; spec.len()],
            spec,
        }
    }

    pub fn from_values(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} samples, got {}",
                spec.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite sample at index {i}"
            )));
        }
        Ok(Self { spec, values })
    }

    /// Samples `f` at every node; `f` receives the first `dim` coordinates.
    pub fn from_fn(spec: GridSpec, mut f: impl FnMut(&[f64]) -> f64) -> Self {
        let dim = spec.dim();
        let values = (0..spec.len())
            .map(|i| {
                let p = spec.point(i);
                f(&p[..dim])
            })
            .collect();
        Self { spec, values }
    }

    pub(crate) fn from_raw(spec: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), spec.len());
        Self { spec, values }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Flat index of the largest sample (first one on ties).
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = i;
            }
        }
        best
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Self::from_raw(self.spec, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn scale(&self, factor: f64) -> Field {
        self.map(|v| v * factor)
    }

    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        self.check_same_grid(other)?;
        Ok(Self::from_raw(
            self.spec,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    /// `self + factor * other`.
    pub fn axpy(&self, factor: f64, other: &Field) -> Result<Field> {
        self.zip_map(other, |a, b| a + factor * b)
    }

    pub fn check_same_grid(&self, other: &Field) -> Result<()> {
        if self.spec != other.spec {
            return Err(Error::GridMismatch(format!(
                "{:?} vs {:?}",
                self.spec, other.spec
            )));
        }
        Ok(())
    }
}

/// Periodic whole-cell shift: the sample at index `i` moves to `i + shift`.
///
/// Exact (a permutation of samples); `w(x) = u(x - shift * h)`.
pub fn translate(u: &Field, shift: &[i64]) -> Field {
    let spec = *u.spec();
    let m = spec.points_per_dim() as i64;
    let wrap = |k: usize, s: i64| ((k as i64 + s).rem_euclid(m)) as usize;
    let mut out = vec![0.0; spec.len()];
    match spec.dim() {
        1 => {
            let s = shift.first().copied().unwrap_or(0);
            for (k, &v) in u.values().iter().enumerate() {
                out[wrap(k, s)] = v;
            }
        }
        _ => {
            let s0 = shift.first().copied().unwrap_or(0);
            let s1 = shift.get(1).copied().unwrap_or(0);
            let mm = m as usize;
            for i in 0..mm {
                let ti = wrap(i, s0);
                for j in 0..mm {
                    out[ti * mm + wrap(j, s1)] = u.values()[i * mm + j];
                }
            }
        }
    }
    Field::from_raw(spec, out)
}

#[derive(Serialize, Deserialize)]
struct FrfHeader {
    magic: String,
    dim: usize,
    #[serde(rename = "L")]
    half_extent: f64,
    #[serde(rename = "M")]
    points_per_dim: usize,
}

const FRF_MAGIC: &str = "FRF1";

/// Writes `u` in the FRF1 format: one JSON header line, then little-endian f64 samples.
pub fn save_field(u: &Field, path: impl AsRef<Path>) -> Result<()> {
    let header = FrfHeader {
        magic: FRF_MAGIC.to_string(),
        dim: u.spec().dim(),
        half_extent: u.spec().half_extent(),
        points_per_dim: u.spec().points_per_dim(),
    };
    let mut buf = serde_json::to_vec(&header)?;
    buf.push(b'\n');
    buf.reserve(u.values().len() * 8);
    for v in u.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    File::create(path)?.write_all(&buf)?;
    Ok(())
}

pub fn load_field(path: impl AsRef<Path>) -> Result<Field> {
    let path = path.as_ref();
    let mut reader = BufReader::new(File::open(path)?);
    let malformed = |detail: String| Error::MalformedHeader {
        path: path.to_path_buf(),
        detail,
    };
    let mut line = Vec::new();
    reader.read_until(b'\n', &mut line)?;
    if line.last() != Some(&b'\n') {
        return Err(malformed("header line not terminated by a newline".into()));
    }
    line.pop();
    let header: FrfHeader =
        serde_json::from_slice(&line).map_err(|e| malformed(format!("invalid JSON: {e}")))?;
    if header.magic != FRF_MAGIC {
        return Err(malformed(format!("bad magic {:?}", header.magic)));
    }
    let spec = GridSpec::new(header.dim, header.half_extent, header.points_per_dim).map_err(
        |e| Error::DimensionMismatch {
            path: path.to_path_buf(),
            detail: e.to_string(),
        },
    )?;
    let mut payload = Vec::new();
    reader.read_to_end(&mut payload)?;
    let expected = spec.len();
    let found = payload.len() / 8;
    if payload.len() < expected * 8 {
        return Err(Error::TruncatedPayload {
            path: path.to_path_buf(),
            expected,
            found,
        });
    }
    if payload.len() > expected * 8 {
        return Err(Error::DimensionMismatch {
            path: path.to_path_buf(),
            detail: format!("payload holds {found} values, header implies {expected}"),
        });
    }
    let values = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8 bytes")))
        .collect();
    Field::from_values(spec, values).map_err(|e| malformed(e.to_string()))
}
