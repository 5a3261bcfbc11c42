//! Gridded vector fields and the `VF3D` binary format.
//!
//! Layout (all little-endian):
//!
//! ```text
//! b"VF3D"
//! nx, ny, nz                                  u32 x 3
//! x_min, x_max, y_min, y_max, z_min, z_max    f64 x 6
//! samples                                     f64 x 3*nx*ny*nz
//! ```
//!
//! Samples are stored component-fastest, then x, then y, then z: the value of
//! component `c` at node `(i, j, k)` lives at `c + 3 * (i + nx * (j + ny * k))`.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::fields::Preset;
use crate::{Mat3, Vec3};

const MAGIC: &[u8; 4] = b"VF3D";

#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    dims: [usize; 3],
    lo: Vec3,
    hi: Vec3,
    data: Vec<f64>,
    h_fd: f64,
}

impl GridField {
    pub fn new(dims: [usize; 3], lo: Vec3, hi: Vec3, data: Vec<f64>) -> Result<Self> {
        if dims.iter().any(|&n| n < 2) {
            return Err(Error::GridFormat(format!(
                "each dimension needs at least 2 nodes, got {dims:?}"
            )));
        }
        if (0..3).any(|a| !(hi[a] > lo[a]) || !lo[a].is_finite() || !hi[a].is_finite()) {
            return Err(Error::GridFormat("degenerate bounding box".into()));
        }
        let n = 3 * dims[0] * dims[1] * dims[2];
        if data.len() != n {
            return Err(Error::GridFormat(format!(
                "expected {n} samples, found {}",
                data.len()
            )));
        }
        let h_fd = 1e-4 * (hi - lo).norm();
        Ok(Self {
            dims,
            lo,
            hi,
            data,
            h_fd,
        })
    }

    /// Samples an analytic preset at the grid nodes.
    pub fn sample(preset: &Preset, dims: [usize; 3], lo: Vec3, hi: Vec3) -> Result<Self> {
        let mut g = Self::new(dims, lo, hi, vec![0.0; 3 * dims[0] * dims[1] * dims[2]])?;
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    let v = preset.evaluate(&g.node(i, j, k));
                    let base = 3 * g.index(i, j, k);
                    g.data[base..base + 3].copy_from_slice(v.as_slice());
                }
            }
        }
        Ok(g)
    }

    pub fn with_fd_step(mut self, h: f64) -> Self {
        self.h_fd = h;
        self
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn bounds(&self) -> (Vec3, Vec3) {
        (self.lo, self.hi)
    }

    pub fn fd_step(&self) -> f64 {
        self.h_fd
    }

    fn coord(&self, axis: usize, i: usize) -> f64 {
        let n = self.dims[axis];
        if i + 1 == n {
            return self.hi[axis];
        }
        self.lo[axis] + (self.hi[axis] - self.lo[axis]) * (i as f64) / ((n - 1) as f64)
    }

    /// Position of node `(i, j, k)`.
    pub fn node(&self, i: usize, j: usize, k: usize) -> Vec3 {
        Vec3::new(self.coord(0, i), self.coord(1, j), self.coord(2, k))
    }

    fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    fn value(&self, i: usize, j: usize, k: usize) -> Vec3 {
        let b = 3 * self.index(i, j, k);
        Vec3::new(self.data[b], self.data[b + 1], self.data[b + 2])
    }

    pub fn contains(&self, x: &Vec3) -> bool {
        (0..3).all(|a| x[a] >= self.lo[a] && x[a] <= self.hi[a])
    }

    /// Cell index and fractional offset along one axis. Snaps to a node when
    /// `x` equals a node coordinate so that node values are reproduced exactly.
    fn locate(&self, axis: usize, x: f64) -> (usize, f64) {
        let n = self.dims[axis];
        let t = (x - self.lo[axis]) / (self.hi[axis] - self.lo[axis]) * (n - 1) as f64;
        let mut i = (t.floor().max(0.0) as usize).min(n - 2);
        if self.coord(axis, i + 1) == x {
            i += 1;
            if i == n - 1 {
                return (n - 2, 1.0);
            }
            return (i, 0.0);
        }
        if self.coord(axis, i) == x {
            return (i, 0.0);
        }
        (i, (t - i as f64).clamp(0.0, 1.0))
    }

    /// Trilinear interpolation.
    pub fn evaluate(&self, x: &Vec3) -> Result<Vec3> {
        if !self.contains(x) {
            return Err(Error::OutOfDomain(*x));
        }
        let (i, fx) = self.locate(0, x.x);
        let (j, fy) = self.locate(1, x.y);
        let (k, fz) = self.locate(2, x.z);
        let lerp = |a: Vec3, b: Vec3, t: f64| {
            if t == 0.0 {
                a
            } else if t == 1.0 {
                b
            } else {
                a * (1.0 - t) + b * t
            }
        };
        let c00 = lerp(self.value(i, j, k), self.value(i + 1, j, k), fx);
        let c10 = lerp(self.value(i, j + 1, k), self.value(i + 1, j + 1, k), fx);
        let c01 = lerp(self.value(i, j, k + 1), self.value(i + 1, j, k + 1), fx);
        let c11 = lerp(self.value(i, j + 1, k + 1), self.value(i + 1, j + 1, k + 1), fx);
        let c0 = lerp(c00, c10, fy);
        let c1 = lerp(c01, c11, fy);
        Ok(lerp(c0, c1, fz))
    }

    /// Central differences of step `h_fd`, one-sided against the box faces.
    pub fn gradient(&self, x: &Vec3) -> Result<Mat3> {
        if !self.contains(x) {
            return Err(Error::OutOfDomain(*x));
        }
        let mut jac = Mat3::zeros();
        for m in 0..3 {
            let mut plus = *x;
            let mut minus = *x;
            plus[m] = (x[m] + self.h_fd).min(self.hi[m]);
            minus[m] = (x[m] - self.h_fd).max(self.lo[m]);
            let d = (self.evaluate(&plus)? - self.evaluate(&minus)?) / (plus[m] - minus[m]);
            jac.set_column(m, &d);
        }
        Ok(jac)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 + 12 + 48 + 8 * self.data.len());
        out.extend_from_slice(MAGIC);
        for &n in &self.dims {
            out.extend_from_slice(&(n as u32).to_le_bytes());
        }
        for a in 0..3 {
            out.extend_from_slice(&self.lo[a].to_le_bytes());
            out.extend_from_slice(&self.hi[a].to_le_bytes());
        }
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = bytes;
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)
            .map_err(|_| Error::GridFormat("truncated header".into()))?;
        if &magic != MAGIC {
            return Err(Error::GridFormat("bad magic bytes".into()));
        }
        let mut dims = [0usize; 3];
        for d in &mut dims {
            let mut b = [0u8; 4];
            r.read_exact(&mut b)
                .map_err(|_| Error::GridFormat("truncated dims".into()))?;
            *d = u32::from_le_bytes(b) as usize;
        }
        let read_f64 = |r: &mut &[u8]| -> Result<f64> {
            let mut b = [0u8; 8];
            r.read_exact(&mut b)
                .map_err(|_| Error::GridFormat("truncated data".into()))?;
            Ok(f64::from_le_bytes(b))
        };
        let mut lo = Vec3::zeros();
        let mut hi = Vec3::zeros();
        for a in 0..3 {
            lo[a] = read_f64(&mut r)?;
            hi[a] = read_f64(&mut r)?;
        }
        let n = 3usize
            .checked_mul(dims[0])
            .and_then(|v| v.checked_mul(dims[1]))
            .and_then(|v| v.checked_mul(dims[2]))
            .ok_or_else(|| Error::GridFormat("dimensions overflow".into()))?;
        if r.len() != 8 * n {
            return Err(Error::GridFormat(format!(
                "expected {} payload bytes, found {}",
                8 * n,
                r.len()
            )));
        }
        let data = r
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Self::new(dims, lo, hi, data)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let mut buf = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut buf)?;
        Self::from_bytes(&buf)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::File::create(path)?.write_all(&self.to_bytes())?;
        Ok(())
    }
}
