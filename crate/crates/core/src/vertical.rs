//! Column stencils: centred differences with ghost conventions, the compact
//! flux-form diffusion operator with its boundary closures, tridiagonal
//! solves, and accumulation from the surface.

use std::ops::{Add, Mul, Sub};

use crate::field::ScalarField;
use crate::grid::Dims;

/// Ghost-value convention for the centred first-derivative stencil.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ghost {
    /// `q_ghost = q_edge` (zero normal derivative).
    Even,
    /// `q_ghost = -q_edge` (zero value at the face).
    Odd,
}

/// Closure of the compact diffusion operator at one boundary face.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Boundary {
    /// Zero flux.
    Neumann,
    /// Zero value at the face.
    Dirichlet,
    /// `nu dq/dz + alpha q = 0` with the edge cell value as trace; `alpha` in m/s.
    Robin(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColumnBc {
    pub bottom: Boundary,
    pub top: Boundary,
}

impl ColumnBc {
    pub const NEUMANN: ColumnBc = ColumnBc {
        bottom: Boundary::Neumann,
        top: Boundary::Neumann,
    };
    pub const DIRICHLET: ColumnBc = ColumnBc {
        bottom: Boundary::Dirichlet,
        top: Boundary::Dirichlet,
    };
    /// Horizontal velocity: no slip at the bottom, stress free at the lid.
    pub const VELOCITY: ColumnBc = ColumnBc {
        bottom: Boundary::Dirichlet,
        top: Boundary::Neumann,
    };

    pub fn temperature(alpha: f64) -> ColumnBc {
        ColumnBc {
            bottom: Boundary::Neumann,
            top: Boundary::Robin(alpha),
        }
    }

    /// Ghost convention used by advection for a field with these closures.
    pub fn ghosts(&self) -> (Ghost, Ghost) {
        let g = |b: Boundary| match b {
            Boundary::Dirichlet => Ghost::Odd,
            _ => Ghost::Even,
        };
        (g(self.bottom), g(self.top))
    }
}

/// Centred `d/dz` at cell centres. With `(Even, Even)` this is the gradient
/// stencil `G_z`; with `(Odd, Odd)` it is exactly `-G_z^T`.
pub fn centered_dz(f: &ScalarField, dz: f64, bottom: Ghost, top: Ghost) -> ScalarField {
    let d = f.dims();
    let (l, nz) = (d.layer(), d.nz);
    let src = f.as_slice();
    let mut out = vec![0.0; d.len()];
    let inv = 0.5 / dz;
    let ghost = |g: Ghost, v: f64| match g {
        Ghost::Even => v,
        Ghost::Odd => -v,
    };
    for c in 0..l {
        for k in 0..nz {
            let here = src[c + l * k];
            let below = if k == 0 { ghost(bottom, here) } else { src[c + l * (k - 1)] };
            let above = if k + 1 == nz { ghost(top, here) } else { src[c + l * (k + 1)] };
            out[c + l * k] = (above - below) * inv;
        }
    }
    ScalarField::from_vec(d, out).expect("shape")
}

/// Tridiagonal matrix stored by diagonals; `lower[0]` and `upper[n-1]` unused.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiag {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiag {
    /// `-d/dz (nu d/dz)` in flux form on `nz` cells.
    pub fn diffusion(nz: usize, dz: f64, nu: f64, bc: ColumnBc) -> Tridiag {
        let mut t = Tridiag {
            lower: vec![0.0; nz],
            diag: vec![0.0; nz],
            upper: vec![0.0; nz],
        };
        let c = nu / (dz * dz);
        for k in 0..nz.saturating_sub(1) {
            t.diag[k] += c;
            t.upper[k] -= c;
            t.diag[k + 1] += c;
            t.lower[k + 1] -= c;
        }
        match bc.bottom {
            Boundary::Neumann => {}
            Boundary::Dirichlet => t.diag[0] += 2.0 * c,
            Boundary::Robin(alpha) => t.diag[0] += alpha / dz,
        }
        match bc.top {
            Boundary::Neumann => {}
            Boundary::Dirichlet => t.diag[nz - 1] += 2.0 * c,
            Boundary::Robin(alpha) => t.diag[nz - 1] += alpha / dz,
        }
        t
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// `a I + b self`
    pub fn shifted(&self, a: f64, b: f64) -> Tridiag {
        Tridiag {
            lower: self.lower.iter().map(|v| b * v).collect(),
            diag: self.diag.iter().map(|v| a + b * v).collect(),
            upper: self.upper.iter().map(|v| b * v).collect(),
        }
    }

    pub fn apply<T>(&self, x: &[T], out: &mut [T])
    where
        T: Copy + Add<Output = T> + Mul<f64, Output = T>,
    {
        let n = self.len();
        for k in 0..n {
            let mut acc = x[k] * self.diag[k];
            if k > 0 {
                acc = acc + x[k - 1] * self.lower[k];
            }
            if k + 1 < n {
                acc = acc + x[k + 1] * self.upper[k];
            }
            out[k] = acc;
        }
    }

    /// Thomas algorithm, in place. The matrix must be diagonally dominant.
    pub fn solve<T>(&self, rhs: &mut [T], work: &mut [f64])
    where
        T: Copy + Sub<Output = T> + Mul<f64, Output = T>,
    {
        let n = self.len();
        debug_assert_eq!(rhs.len(), n);
        let mut beta = self.diag[0];
        rhs[0] = rhs[0] * (1.0 / beta);
        for k in 1..n {
            work[k] = self.upper[k - 1] / beta;
            beta = self.diag[k] - self.lower[k] * work[k];
            rhs[k] = (rhs[k] - rhs[k - 1] * self.lower[k]) * (1.0 / beta);
        }
        for k in (0..n - 1).rev() {
            rhs[k] = rhs[k] - rhs[k + 1] * work[k + 1];
        }
    }
}

/// Applies the column stencil of `-d/dz(nu d/dz)` to every column.
pub fn diffuse_z(f: &ScalarField, dz: f64, nu: f64, bc: ColumnBc) -> ScalarField {
    let d = f.dims();
    let t = Tridiag::diffusion(d.nz, dz, nu, bc);
    map_columns(f, |col, out| t.apply(col, out))
}

/// Runs `op(column_in, column_out)` over every column.
pub fn map_columns(f: &ScalarField, mut op: impl FnMut(&[f64], &mut [f64])) -> ScalarField {
    let d = f.dims();
    let (l, nz) = (d.layer(), d.nz);
    let src = f.as_slice();
    let mut out = vec![0.0; d.len()];
    let mut col = vec![0.0; nz];
    let mut res = vec![0.0; nz];
    for c in 0..l {
        for k in 0..nz {
            col[k] = src[c + l * k];
        }
        op(&col, &mut res);
        for k in 0..nz {
            out[c + l * k] = res[k];
        }
    }
    ScalarField::from_vec(d, out).expect("shape")
}

/// Values on the `nz + 1` horizontal faces of every column, bottom first.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceField {
    dims: Dims,
    data: Vec<f64>,
}

impl FaceField {
    pub fn dims(&self) -> Dims {
        self.dims
    }
    /// Face layer `k` in `0..=nz`; `0` is `z = -h`, `nz` is `z = 0`.
    pub fn layer(&self, k: usize) -> &[f64] {
        let l = self.dims.layer();
        &self.data[k * l..(k + 1) * l]
    }
    pub fn layer_mut(&mut self, k: usize) -> &mut [f64] {
        let l = self.dims.layer();
        &mut self.data[k * l..(k + 1) * l]
    }
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn zeros(dims: Dims) -> Self {
        FaceField {
            dims,
            data: vec![0.0; dims.layer() * (dims.nz + 1)],
        }
    }

    /// Averages adjacent faces onto cell centres.
    pub fn to_centers(&self) -> ScalarField {
        let d = self.dims;
        let l = d.layer();
        let mut out = vec![0.0; d.len()];
        for k in 0..d.nz {
            for c in 0..l {
                out[c + l * k] = 0.5 * (self.data[c + l * k] + self.data[c + l * (k + 1)]);
            }
        }
        ScalarField::from_vec(d, out).expect("shape")
    }
}

/// `int_z^0 f dz'` on faces by midpoint accumulation from the lid; the top
/// face is exactly zero.
pub fn integrate_from_surface(f: &ScalarField, dz: f64) -> FaceField {
    let d = f.dims();
    let l = d.layer();
    let src = f.as_slice();
    let mut faces = FaceField::zeros(d);
    for k in (0..d.nz).rev() {
        for c in 0..l {
            faces.data[c + l * k] = faces.data[c + l * (k + 1)] + src[c + l * k] * dz;
        }
    }
    faces
}

/// `int_z^0 f dz'` at cell centres, same quadrature as [`integrate_from_surface`].
pub fn integrate_from_surface_centers(f: &ScalarField, dz: f64) -> ScalarField {
    integrate_from_surface(f, dz).to_centers()
}

/// Depth average `(1/h) int_{-h}^0 f dz` as a single layer (`nz = 1`).
pub fn depth_mean(f: &ScalarField) -> ScalarField {
    let d = f.dims();
    let l = d.layer();
    let src = f.as_slice();
    let mut out = vec![0.0; l];
    for k in 0..d.nz {
        for c in 0..l {
            out[c] += src[c + l * k];
        }
    }
    let inv = 1.0 / d.nz as f64;
    out.iter_mut().for_each(|v| *v *= inv);
    ScalarField::from_vec(Dims { nz: 1, ..d }, out).expect("shape")
}

/// Repeats a single layer over `nz` levels.
pub fn broadcast_layer(layer: &ScalarField, nz: usize) -> ScalarField {
    let d = layer.dims();
    debug_assert_eq!(d.nz, 1);
    let mut data = Vec::with_capacity(d.layer() * nz);
    for _ in 0..nz {
        data.extend_from_slice(layer.as_slice());
    }
    ScalarField::from_vec(Dims { nz, ..d }, data).expect("shape")
}

/// Face differences `(q_{k+1} - q_k)/dz` on the `nz - 1` interior faces,
/// flattened face-major.
pub fn interior_face_gradient(f: &ScalarField, dz: f64) -> Vec<f64> {
    let d = f.dims();
    let l = d.layer();
    let src = f.as_slice();
    let mut out = Vec::with_capacity(l * d.nz.saturating_sub(1));
    for k in 0..d.nz.saturating_sub(1) {
        for c in 0..l {
            out.push((src[c + l * (k + 1)] - src[c + l * k]) / dz);
        }
    }
    out
}
