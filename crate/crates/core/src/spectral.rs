//! Horizontal Fourier machinery on the doubly periodic grid.
//!
//! Spectra are stored per layer in transposed order (`[k][i][j]`, y
//! fastest) so that a forward transform needs a single transpose. Derivative
//! wavenumbers have the Nyquist entry zeroed, which keeps every odd
//! multiplier Hermitian and makes `d/dx` exactly antisymmetric with respect to
//! the discrete inner product.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::field::{HVecField, ScalarField};
use crate::grid::{Dims, Grid};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Complex horizontal spectrum of a layered field.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    dims: Dims,
    data: Vec<Complex64>,
}

impl Spectrum {
    pub fn zeros(dims: Dims) -> Self {
        Spectrum {
            dims,
            data: vec![Complex64::new(0.0, 0.0); dims.len()],
        }
    }
    pub fn dims(&self) -> Dims {
        self.dims
    }
    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }
    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }
    /// Index of horizontal wavenumber `(i, j)` in layer `k`.
    #[inline]
    pub fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        k * self.dims.layer() + i * self.dims.ny + j
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|c| *c *= s);
    }

    pub fn axpy(&mut self, alpha: Complex64, other: &Spectrum) {
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
    }
}

/// FFT plans and wavenumber tables for one horizontal resolution.
#[derive(Clone)]
pub struct Spectral {
    nx: usize,
    ny: usize,
    fwd_x: Arc<dyn Fft<f64>>,
    inv_x: Arc<dyn Fft<f64>>,
    fwd_y: Arc<dyn Fft<f64>>,
    inv_y: Arc<dyn Fft<f64>>,
    kx: Vec<f64>,
    ky: Vec<f64>,
    kx_full: Vec<f64>,
    ky_full: Vec<f64>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral")
            .field("nx", &self.nx)
            .field("ny", &self.ny)
            .finish()
    }
}

fn wavenumbers(n: usize, length: f64) -> (Vec<f64>, Vec<f64>) {
    let base = 2.0 * PI / length;
    let full: Vec<f64> = (0..n)
        .map(|i| {
            let s = if i <= n / 2 { i as f64 } else { i as f64 - n as f64 };
            s * base
        })
        .collect();
    let deriv = full
        .iter()
        .enumerate()
        .map(|(i, &k)| if n % 2 == 0 && i == n / 2 { 0.0 } else { k })
        .collect();
    (deriv, full)
}

impl Spectral {
    pub fn new(grid: &Grid) -> Self {
        let (nx, ny) = (grid.nx(), grid.ny());
        let mut planner = FftPlanner::new();
        let (kx, kx_full) = wavenumbers(nx, grid.lx());
        let (ky, ky_full) = wavenumbers(ny, grid.ly());
        Spectral {
            nx,
            ny,
            fwd_x: planner.plan_fft_forward(nx),
            inv_x: planner.plan_fft_inverse(nx),
            fwd_y: planner.plan_fft_forward(ny),
            inv_y: planner.plan_fft_inverse(ny),
            kx,
            ky,
            kx_full,
            ky_full,
        }
    }

    /// Derivative wavenumbers in x (Nyquist zeroed).
    pub fn kx(&self) -> &[f64] {
        &self.kx
    }
    pub fn ky(&self) -> &[f64] {
        &self.ky
    }
    /// Signed wavenumbers including the Nyquist magnitude, for even multipliers.
    pub fn kx_full(&self) -> &[f64] {
        &self.kx_full
    }
    pub fn ky_full(&self) -> &[f64] {
        &self.ky_full
    }

    fn check(&self, dims: Dims) {
        assert!(
            dims.nx == self.nx && dims.ny == self.ny,
            "spectral plan is {}x{}, field is {}x{}",
            self.nx,
            self.ny,
            dims.nx,
            dims.ny
        );
    }

    /// In-place forward transform of x-fastest complex layers into the
    /// transposed spectral layout.
    fn forward_buffer(&self, nz: usize, buf: &mut Vec<Complex64>) {
        let (nx, ny) = (self.nx, self.ny);
        let layer = nx * ny;
        let mut scratch =
            vec![Complex64::new(0.0, 0.0); self.fwd_x.get_inplace_scratch_len().max(self.fwd_y.get_inplace_scratch_len())];
        let mut tmp = vec![Complex64::new(0.0, 0.0); layer];
        for k in 0..nz {
            let lay = &mut buf[k * layer..(k + 1) * layer];
            if nx > 1 {
                self.fwd_x.process_with_scratch(lay, &mut scratch);
            }
            for j in 0..ny {
                for i in 0..nx {
                    tmp[i * ny + j] = lay[j * nx + i];
                }
            }
            if ny > 1 {
                self.fwd_y.process_with_scratch(&mut tmp, &mut scratch);
            }
            lay.copy_from_slice(&tmp);
        }
    }

    /// Inverse of [`Self::forward_buffer`], including the `1/(nx ny)` scaling.
    fn inverse_buffer(&self, nz: usize, buf: &mut Vec<Complex64>) {
        let (nx, ny) = (self.nx, self.ny);
        let layer = nx * ny;
        let norm = 1.0 / layer as f64;
        let mut scratch =
            vec![Complex64::new(0.0, 0.0); self.inv_x.get_inplace_scratch_len().max(self.inv_y.get_inplace_scratch_len())];
        let mut tmp = vec![Complex64::new(0.0, 0.0); layer];
        for k in 0..nz {
            let lay = &mut buf[k * layer..(k + 1) * layer];
            if ny > 1 {
                self.inv_y.process_with_scratch(lay, &mut scratch);
            }
            for i in 0..nx {
                for j in 0..ny {
                    tmp[j * nx + i] = lay[i * ny + j] * norm;
                }
            }
            if nx > 1 {
                self.inv_x.process_with_scratch(&mut tmp, &mut scratch);
            }
            lay.copy_from_slice(&tmp);
        }
    }

    pub fn forward(&self, f: &ScalarField) -> Spectrum {
        let dims = f.dims();
        self.check(dims);
        let mut buf: Vec<Complex64> = f.as_slice().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward_buffer(dims.nz, &mut buf);
        Spectrum { dims, data: buf }
    }

    /// Transforms two real fields with one complex transform.
    pub fn forward_pair(&self, a: &ScalarField, b: &ScalarField) -> (Spectrum, Spectrum) {
        let dims = a.dims();
        self.check(dims);
        assert_eq!(dims, b.dims());
        let mut buf: Vec<Complex64> = a
            .as_slice()
            .iter()
            .zip(b.as_slice())
            .map(|(&x, &y)| Complex64::new(x, y))
            .collect();
        self.forward_buffer(dims.nz, &mut buf);
        let (nx, ny) = (self.nx, self.ny);
        let mut sa = Spectrum::zeros(dims);
        let mut sb = Spectrum::zeros(dims);
        for k in 0..dims.nz {
            let base = k * nx * ny;
            for i in 0..nx {
                let im = (nx - i) % nx;
                for j in 0..ny {
                    let jm = (ny - j) % ny;
                    let z = buf[base + i * ny + j];
                    let zc = buf[base + im * ny + jm].conj();
                    sa.data[base + i * ny + j] = (z + zc) * 0.5;
                    sb.data[base + i * ny + j] = (z - zc) * Complex64::new(0.0, -0.5);
                }
            }
        }
        (sa, sb)
    }

    /// Real part of the inverse transform.
    pub fn inverse(&self, s: &Spectrum) -> ScalarField {
        let dims = s.dims;
        self.check(dims);
        let mut buf = s.data.clone();
        self.inverse_buffer(dims.nz, &mut buf);
        ScalarField::from_vec(dims, buf.into_iter().map(|c| c.re).collect())
            .expect("spectrum has field shape")
    }

    /// Inverts two Hermitian spectra with one complex transform.
    pub fn inverse_pair(&self, a: &Spectrum, b: &Spectrum) -> (ScalarField, ScalarField) {
        let dims = a.dims;
        self.check(dims);
        assert_eq!(dims, b.dims);
        let mut buf: Vec<Complex64> = a.data.iter().zip(&b.data).map(|(&x, &y)| x + I * y).collect();
        self.inverse_buffer(dims.nz, &mut buf);
        let re = buf.iter().map(|c| c.re).collect();
        let im = buf.iter().map(|c| c.im).collect();
        (
            ScalarField::from_vec(dims, re).expect("shape"),
            ScalarField::from_vec(dims, im).expect("shape"),
        )
    }

    /// Applies a per-wavenumber complex multiplier `m(i, j)` (same in every layer).
    pub fn multiply(&self, s: &Spectrum, m: impl Fn(usize, usize) -> Complex64) -> Spectrum {
        let dims = s.dims;
        let mut out = Spectrum::zeros(dims);
        for k in 0..dims.nz {
            for i in 0..self.nx {
                for j in 0..self.ny {
                    let n = s.idx(i, j, k);
                    out.data[n] = s.data[n] * m(i, j);
                }
            }
        }
        out
    }

    pub fn ddx_spec(&self, s: &Spectrum) -> Spectrum {
        self.multiply(s, |i, _| I * self.kx[i])
    }

    pub fn ddy_spec(&self, s: &Spectrum) -> Spectrum {
        self.multiply(s, |_, j| I * self.ky[j])
    }

    /// Horizontal divergence `ikx X + iky Y` in spectral space.
    pub fn div_spec(&self, sx: &Spectrum, sy: &Spectrum) -> Spectrum {
        let dims = sx.dims;
        let mut out = Spectrum::zeros(dims);
        for k in 0..dims.nz {
            for i in 0..self.nx {
                for j in 0..self.ny {
                    let n = sx.idx(i, j, k);
                    out.data[n] = I * (self.kx[i] * sx.data[n] + self.ky[j] * sy.data[n]);
                }
            }
        }
        out
    }

    pub fn ddx(&self, f: &ScalarField) -> ScalarField {
        self.inverse(&self.ddx_spec(&self.forward(f)))
    }

    pub fn ddy(&self, f: &ScalarField) -> ScalarField {
        self.inverse(&self.ddy_spec(&self.forward(f)))
    }

    /// `(d/dx f, d/dy f)` with one forward and one inverse transform.
    pub fn grad_h(&self, f: &ScalarField) -> HVecField {
        let s = self.forward(f);
        self.grad_h_spec(&s)
    }

    pub fn grad_h_spec(&self, s: &Spectrum) -> HVecField {
        let (x, y) = self.inverse_pair(&self.ddx_spec(s), &self.ddy_spec(s));
        HVecField { x, y }
    }

    pub fn div_h(&self, v: &HVecField) -> ScalarField {
        let (sx, sy) = self.forward_pair(&v.x, &v.y);
        self.inverse(&self.div_spec(&sx, &sy))
    }

    /// `Delta_H f` using the derivative wavenumbers, so that
    /// `-Delta_H = ddx^T ddx + ddy^T ddy` exactly.
    pub fn lap_h_spec(&self, s: &Spectrum) -> Spectrum {
        self.multiply(s, |i, j| {
            Complex64::new(-(self.kx[i] * self.kx[i] + self.ky[j] * self.ky[j]), 0.0)
        })
    }

    pub fn lap_h(&self, f: &ScalarField) -> ScalarField {
        self.inverse(&self.lap_h_spec(&self.forward(f)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    fn grid() -> Grid {
        make_grid(16, 8, 3, 2.0 * PI, 4.0 * PI, 1.0).unwrap()
    }

    #[test]
    fn round_trip() {
        let g = grid();
        let sp = Spectral::new(&g);
        let f = ScalarField::from_fn(&g, |x, y, z| (x * 1.3).sin() + y.cos() * z + 0.3 * (x * y).sin());
        let back = sp.inverse(&sp.forward(&f));
        for (a, b) in f.as_slice().iter().zip(back.as_slice()) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn pair_transforms_match_single() {
        let g = grid();
        let sp = Spectral::new(&g);
        let a = ScalarField::from_fn(&g, |x, y, _| (x + 0.2).sin() * (0.5 * y).cos() + x);
        let b = ScalarField::from_fn(&g, |x, y, z| (2.0 * x).cos() - (y * 1.5).sin() * z);
        let (sa, sb) = sp.forward_pair(&a, &b);
        let (ra, rb) = (sp.forward(&a), sp.forward(&b));
        for n in 0..sa.as_slice().len() {
            assert!((sa.as_slice()[n] - ra.as_slice()[n]).norm() < 1e-12);
            assert!((sb.as_slice()[n] - rb.as_slice()[n]).norm() < 1e-12);
        }
        let (ia, ib) = sp.inverse_pair(&sa, &sb);
        for n in 0..a.as_slice().len() {
            assert!((ia.as_slice()[n] - a.as_slice()[n]).abs() < 1e-12);
            assert!((ib.as_slice()[n] - b.as_slice()[n]).abs() < 1e-12);
        }
    }

    #[test]
    fn derivatives_exact_on_trig_modes() {
        let g = grid();
        let sp = Spectral::new(&g);
        let f = ScalarField::from_fn(&g, |x, y, _| (3.0 * x).sin() * (0.5 * y).cos());
        let fx = sp.ddx(&f);
        let fy = sp.ddy(&f);
        let lap = sp.lap_h(&f);
        for k in 0..g.nz() {
            for j in 0..g.ny() {
                for i in 0..g.nx() {
                    let (x, y) = (g.x(i), g.y(j));
                    assert!((fx.get(i, j, k) - 3.0 * (3.0 * x).cos() * (0.5 * y).cos()).abs() < 1e-12);
                    assert!((fy.get(i, j, k) + 0.5 * (3.0 * x).sin() * (0.5 * y).sin()).abs() < 1e-12);
                    assert!((lap.get(i, j, k) + 9.25 * f.get(i, j, k)).abs() < 1e-11);
                }
            }
        }
    }

    #[test]
    fn single_point_grid() {
        let g = make_grid(1, 1, 4, 1.0, 1.0, 1.0).unwrap();
        let sp = Spectral::new(&g);
        let f = ScalarField::from_fn(&g, |_, _, z| z);
        assert_eq!(sp.inverse(&sp.forward(&f)), f);
        assert_eq!(sp.ddx(&f).max_abs(), 0.0);
    }
}
