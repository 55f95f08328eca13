//! Uniform Cartesian grid geometry and node-indexed scalar fields.
//!
//! Storage layout is node-major with **x fastest**: the linear index of
//! node `(i, j, k)` is `i + nx * (j + ny * k)`. All stencil code in this
//! crate depends on that layout; x-direction sweeps walk contiguous memory,
//! y and z sweeps are strided.

use crate::error::{Error, Result};
use std::io::Write;

/// Uniform Cartesian grid with equal spacing `h` in all three directions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub origin: [f64; 3],
    pub h: f64,
    pub dims: [usize; 3],
}

impl Grid {
    /// Interior stencils need two interior layers, hence the dims >= 4 floor.
    pub fn new(origin: [f64; 3], h: f64, dims: [usize; 3]) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "grid spacing must be positive and finite, got {h}"
            )));
        }
        if dims.iter().any(|&d| d < 4) {
            return Err(Error::InvalidArgument(format!(
                "all dims must be >= 4, got {dims:?}"
            )));
        }
        if origin.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("origin must be finite".into()));
        }
        Ok(Self { origin, h, dims })
    }

    /// Cube of side `length` centered at `center`, with `n` nodes per axis.
    pub fn centered_cube(center: [f64; 3], half_extent: f64, h: f64) -> Result<Self> {
        let n = (2.0 * half_extent / h).round() as usize + 1;
        let origin = [
            center[0] - half_extent,
            center[1] - half_extent,
            center[2] - half_extent,
        ];
        Self::new(origin, h, [n, n, n])
    }

    #[inline]
    pub fn nx(&self) -> usize {
        self.dims[0]
    }
    #[inline]
    pub fn ny(&self) -> usize {
        self.dims[1]
    }
    #[inline]
    pub fn nz(&self) -> usize {
        self.dims[2]
    }

    #[inline]
    pub fn n_nodes(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    /// Linear index of node `(i, j, k)`; x fastest.
    #[inline]
    pub fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    /// Inverse of [`Grid::idx`].
    #[inline]
    pub fn unidx(&self, idx: usize) -> (usize, usize, usize) {
        let i = idx % self.dims[0];
        let rest = idx / self.dims[0];
        (i, rest % self.dims[1], rest / self.dims[1])
    }

    #[inline]
    pub fn in_range(&self, i: usize, j: usize, k: usize) -> bool {
        i < self.dims[0] && j < self.dims[1] && k < self.dims[2]
    }

    fn check_range(&self, i: usize, j: usize, k: usize) -> Result<()> {
        if self.in_range(i, j, k) {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                i,
                j,
                k,
                nx: self.dims[0],
                ny: self.dims[1],
                nz: self.dims[2],
            })
        }
    }

    /// Physical position of node `(i, j, k)`: `origin + h * (i, j, k)`.
    pub fn node_position(&self, i: usize, j: usize, k: usize) -> Result<[f64; 3]> {
        self.check_range(i, j, k)?;
        Ok([
            self.origin[0] + self.h * i as f64,
            self.origin[1] + self.h * j as f64,
            self.origin[2] + self.h * k as f64,
        ])
    }

    /// True iff any index sits on a face of the box.
    pub fn is_boundary(&self, i: usize, j: usize, k: usize) -> Result<bool> {
        self.check_range(i, j, k)?;
        Ok(i == 0
            || j == 0
            || k == 0
            || i == self.dims[0] - 1
            || j == self.dims[1] - 1
            || k == self.dims[2] - 1)
    }

    /// Iterate over interior node indices in layout order (k, j, i loops).
    pub fn interior(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let [nx, ny, nz] = self.dims;
        (1..nz - 1)
            .flat_map(move |k| (1..ny - 1).flat_map(move |j| (1..nx - 1).map(move |i| (i, j, k))))
    }

    /// Iterate over boundary node indices in layout order.
    pub fn boundary(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let [nx, ny, nz] = self.dims;
        (0..nz).flat_map(move |k| {
            (0..ny).flat_map(move |j| {
                (0..nx).filter_map(move |i| {
                    if i == 0 || j == 0 || k == 0 || i == nx - 1 || j == ny - 1 || k == nz - 1 {
                        Some((i, j, k))
                    } else {
                        None
                    }
                })
            })
        })
    }
}

/// Real values on every node of a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            values: vec![0.0; grid.n_nodes()],
            grid,
        }
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self {
            values: vec![c; grid.n_nodes()],
            grid,
        }
    }

    /// Fill from a function of the node position.
    pub fn from_fn(grid: Grid, mut f: impl FnMut(f64, f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.n_nodes());
        for k in 0..grid.nz() {
            let z = grid.origin[2] + grid.h * k as f64;
            for j in 0..grid.ny() {
                let y = grid.origin[1] + grid.h * j as f64;
                for i in 0..grid.nx() {
                    let x = grid.origin[0] + grid.h * i as f64;
                    values.push(f(x, y, z));
                }
            }
        }
        Self { grid, values }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.grid.idx(i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        let idx = self.grid.idx(i, j, k);
        self.values[idx] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// NaN/Inf anywhere is a corruption state detectable by callers.
    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Max-norm of the difference against another field on the same grid.
    pub fn linf_diff(&self, other: &ScalarField) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(
                "fields live on different grids".into(),
            ));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())))
    }

    /// Discrete root-mean-square difference over all nodes.
    pub fn rms_diff(&self, other: &ScalarField) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(
                "fields live on different grids".into(),
            ));
        }
        let ss: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        Ok((ss / self.values.len() as f64).sqrt())
    }

    /// Trilinear interpolation at a physical position inside the grid.
    pub fn interpolate(&self, pos: [f64; 3]) -> Result<f64> {
        let g = &self.grid;
        let fx = (pos[0] - g.origin[0]) / g.h;
        let fy = (pos[1] - g.origin[1]) / g.h;
        let fz = (pos[2] - g.origin[2]) / g.h;
        let (i0, wx) = split_cell(fx, g.nx())?;
        let (j0, wy) = split_cell(fy, g.ny())?;
        let (k0, wz) = split_cell(fz, g.nz())?;
        let mut acc = 0.0;
        for (dk, wk) in [(0, 1.0 - wz), (1, wz)] {
            for (dj, wj) in [(0, 1.0 - wy), (1, wy)] {
                for (di, wi) in [(0, 1.0 - wx), (1, wx)] {
                    acc += wi * wj * wk * self.get(i0 + di, j0 + dj, k0 + dk);
                }
            }
        }
        Ok(acc)
    }

    /// Dump as flat CSV: one header line `nx,ny,nz,h,ox,oy,oz`, then one
    /// value per line in linear index order (x fastest).
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let g = &self.grid;
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            g.nx(),
            g.ny(),
            g.nz(),
            g.h,
            g.origin[0],
            g.origin[1],
            g.origin[2]
        )?;
        for v in &self.values {
            writeln!(w, "{v}")?;
        }
        Ok(())
    }
}

/// Split a fractional grid coordinate into (lower node, weight toward upper).
fn split_cell(f: f64, n: usize) -> Result<(usize, f64)> {
    if !(0.0..=(n - 1) as f64).contains(&f) {
        return Err(Error::GridMismatch(format!(
            "interpolation point outside grid (fractional coordinate {f})"
        )));
    }
    let mut i0 = f.floor() as usize;
    if i0 >= n - 1 {
        i0 = n - 2; // exactly on the last node
    }
    Ok((i0, f - i0 as f64))
}
