//! Grid geometry of the cylinder `S_H x [-h, 0]`, doubly periodic in the
//! horizontal and bounded in the vertical.

use crate::error::{Error, Result};

/// Cell counts of a grid. Fields carry their dims so shape mismatches can be
/// reported without holding a reference to the grid itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dims {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
}

impl Dims {
    pub fn len(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Points per horizontal layer.
    pub fn layer(&self) -> usize {
        self.nx * self.ny
    }

    /// Linear index, x fastest.
    #[inline]
    pub fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.nx * (j + self.ny * k)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    dims: Dims,
    lx: f64,
    ly: f64,
    h: f64,
    dx: f64,
    dy: f64,
    dz: f64,
    z_centers: Vec<f64>,
    z_faces: Vec<f64>,
}

/// Serializable grid description (`[grid]` section of a run config).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    /// Extents in metres.
    pub lx: f64,
    pub ly: f64,
    pub h: f64,
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid> {
        make_grid(self.nx, self.ny, self.nz, self.lx, self.ly, self.h)
    }
}

/// Builds a grid with `nz` cells over `[-h, 0]` and `nx x ny` periodic cells
/// over `[0, lx) x [0, ly)`. Horizontal counts must be powers of two.
pub fn make_grid(nx: usize, ny: usize, nz: usize, lx: f64, ly: f64, h: f64) -> Result<Grid> {
    for (name, n) in [("nx", nx), ("ny", ny)] {
        if n == 0 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "{name} = {n} is not a power of two"
            )));
        }
    }
    if nz == 0 {
        return Err(Error::InvalidGrid("nz must be positive".into()));
    }
    for (name, v) in [("lx", lx), ("ly", ly), ("h", h)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidGrid(format!("{name} = {v} must be positive")));
        }
    }
    let dz = h / nz as f64;
    let z_faces: Vec<f64> = (0..=nz)
        .map(|k| {
            if k == nz {
                0.0
            } else {
                -h + k as f64 * dz
            }
        })
        .collect();
    let z_centers = (0..nz).map(|k| -h + (k as f64 + 0.5) * dz).collect();
    Ok(Grid {
        dims: Dims { nx, ny, nz },
        lx,
        ly,
        h,
        dx: lx / nx as f64,
        dy: ly / ny as f64,
        dz,
        z_centers,
        z_faces,
    })
}

impl Grid {
    pub fn dims(&self) -> Dims {
        self.dims
    }
    pub fn nx(&self) -> usize {
        self.dims.nx
    }
    pub fn ny(&self) -> usize {
        self.dims.ny
    }
    pub fn nz(&self) -> usize {
        self.dims.nz
    }
    pub fn lx(&self) -> f64 {
        self.lx
    }
    pub fn ly(&self) -> f64 {
        self.ly
    }
    pub fn depth(&self) -> f64 {
        self.h
    }
    pub fn dx(&self) -> f64 {
        self.dx
    }
    pub fn dy(&self) -> f64 {
        self.dy
    }
    pub fn dz(&self) -> f64 {
        self.dz
    }
    pub fn z_centers(&self) -> &[f64] {
        &self.z_centers
    }
    pub fn z_faces(&self) -> &[f64] {
        &self.z_faces
    }
    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.dx
    }
    pub fn y(&self, j: usize) -> f64 {
        j as f64 * self.dy
    }
    pub fn cell_volume(&self) -> f64 {
        self.dx * self.dy * self.dz
    }
    pub fn cell_area(&self) -> f64 {
        self.dx * self.dy
    }
    /// |S_H|
    pub fn surface_area(&self) -> f64 {
        self.lx * self.ly
    }
    pub fn volume(&self) -> f64 {
        self.lx * self.ly * self.h
    }
}
