//! Regularising kernel `K`, the convolution `C_K f = K * f` and the filtered
//! variance operator `a^K`.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::field::{ScalarField, Vec3Field};
use crate::noise::NoiseModel;
use crate::operators::dot3;

/// Spectral shape of the kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum KernelKind {
    Identity,
    /// `exp(-|k|^2 l^2 / 2)` with `length_scale = l` in metres.
    Gaussian { length_scale: f64 },
    /// `1` for `|k| <= cutoff` (rad/m), `0` above.
    SharpCutoff { cutoff: f64 },
}

/// Kernel choice plus whether the vertical direction is filtered as well.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterKernel {
    pub kind: KernelKind,
    pub horizontal_only: bool,
}

impl FilterKernel {
    pub const IDENTITY: FilterKernel = FilterKernel {
        kind: KernelKind::Identity,
        horizontal_only: false,
    };

    pub fn gaussian(length_scale: f64) -> Self {
        FilterKernel {
            kind: KernelKind::Gaussian { length_scale },
            horizontal_only: false,
        }
    }

    pub fn sharp_cutoff(cutoff: f64) -> Self {
        FilterKernel {
            kind: KernelKind::SharpCutoff { cutoff },
            horizontal_only: false,
        }
    }

    pub fn horizontal(mut self) -> Self {
        self.horizontal_only = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            KernelKind::Identity => Ok(()),
            KernelKind::Gaussian { length_scale } if length_scale.is_finite() && length_scale >= 0.0 => Ok(()),
            KernelKind::SharpCutoff { cutoff } if cutoff.is_finite() && cutoff >= 0.0 => Ok(()),
            k => Err(Error::InvalidParameter(format!("invalid filter kernel {k:?}"))),
        }
    }

    /// Multiplier `m(|k|^2)`; `m(0) = 1` and `0 <= m <= 1`.
    pub fn multiplier(&self, k2: f64) -> f64 {
        match self.kind {
            KernelKind::Identity => 1.0,
            KernelKind::Gaussian { length_scale } => (-0.5 * k2 * length_scale * length_scale).exp(),
            KernelKind::SharpCutoff { cutoff } => {
                if k2 <= cutoff * cutoff {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn is_identity(&self) -> bool {
        match self.kind {
            KernelKind::Identity => true,
            KernelKind::Gaussian { length_scale } => length_scale == 0.0,
            KernelKind::SharpCutoff { cutoff } => cutoff.is_infinite(),
        }
    }
}

/// A kernel bound to a grid: wavenumber tables and the cosine-extension plans.
#[derive(Clone)]
pub struct Filter {
    kernel: FilterKernel,
    k2h: Vec<f64>,
    kappa2: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Filter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Filter").field("kernel", &self.kernel).finish()
    }
}

impl Filter {
    pub fn new(kernel: FilterKernel, domain: &Domain) -> Result<Self> {
        kernel.validate()?;
        let sp = domain.spectral();
        let g = domain.grid();
        let (nx, ny, nz) = (g.nx(), g.ny(), g.nz());
        let mut k2h = vec![0.0; nx * ny];
        for i in 0..nx {
            for j in 0..ny {
                k2h[i * ny + j] = sp.kx_full()[i].powi(2) + sp.ky_full()[j].powi(2);
            }
        }
        let n2 = 2 * nz;
        let kappa2 = (0..n2)
            .map(|p| {
                let q = p.min(n2 - p) as f64;
                (q * PI / g.depth()).powi(2)
            })
            .collect();
        let mut planner = FftPlanner::new();
        Ok(Filter {
            kernel,
            k2h,
            kappa2,
            fwd: planner.plan_fft_forward(n2),
            inv: planner.plan_fft_inverse(n2),
        })
    }

    pub fn kernel(&self) -> &FilterKernel {
        &self.kernel
    }

    pub fn is_identity(&self) -> bool {
        self.kernel.is_identity()
    }

    /// `K * f`.
    pub fn apply(&self, f: &ScalarField, domain: &Domain) -> ScalarField {
        self.apply_power(f, 1, domain)
    }

    /// `K * (K * f)` as a single multiplier `m^2`.
    pub fn apply_twice(&self, f: &ScalarField, domain: &Domain) -> ScalarField {
        self.apply_power(f, 2, domain)
    }

    fn apply_power(&self, f: &ScalarField, power: i32, domain: &Domain) -> ScalarField {
        if self.is_identity() {
            return f.clone();
        }
        let sp = domain.spectral();
        let mut s = sp.forward(f);
        let d = s.dims();
        let (nx, ny, nz) = (d.nx, d.ny, d.nz);
        let mult = |k2: f64| self.kernel.multiplier(k2).powi(power);
        if self.kernel.horizontal_only {
            let m: Vec<f64> = self.k2h.iter().map(|&k2| mult(k2)).collect();
            for k in 0..nz {
                for c in 0..nx * ny {
                    s.as_mut_slice()[k * nx * ny + c] *= m[c];
                }
            }
            return sp.inverse(&s);
        }
        let n2 = 2 * nz;
        let mut ext = vec![Complex64::new(0.0, 0.0); n2];
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.fwd.get_inplace_scratch_len()];
        let inv_n = 1.0 / n2 as f64;
        for i in 0..nx {
            for j in 0..ny {
                let c = i * ny + j;
                for k in 0..nz {
                    let v = s.as_slice()[s.idx(i, j, k)];
                    ext[k] = v;
                    ext[n2 - 1 - k] = v;
                }
                self.fwd.process_with_scratch(&mut ext, &mut scratch);
                for (p, e) in ext.iter_mut().enumerate() {
                    *e *= mult(self.k2h[c] + self.kappa2[p]) * inv_n;
                }
                self.inv.process_with_scratch(&mut ext, &mut scratch);
                for k in 0..nz {
                    let n = s.idx(i, j, k);
                    s.as_mut_slice()[n] = ext[k];
                }
            }
        }
        sp.inverse(&s)
    }
}

/// `C_K f = K * f`; convenience wrapper building the filter on the fly.
pub fn apply_filter(kernel: &FilterKernel, f: &ScalarField, domain: &Domain) -> Result<ScalarField> {
    Ok(Filter::new(*kernel, domain)?.apply(f, domain))
}

/// `a^K g = Upsilon sum_k phi_k C_K C_K^*(phi_k . g)`.
pub fn filtered_variance_apply(model: &NoiseModel, filter: &Filter, g: &Vec3Field, domain: &Domain) -> Vec3Field {
    let mut out = Vec3Field::zeros(g.dims());
    let ups = model.upsilon();
    if ups == 0.0 {
        return out;
    }
    for phi in model.modes() {
        let s = filter.apply_twice(&dot3(phi, g), domain);
        for (o, p) in [(&mut out.x, &phi.x), (&mut out.y, &phi.y), (&mut out.z, &phi.z)] {
            let (od, pd, sd) = (o.as_mut_slice(), p.as_slice(), s.as_slice());
            for n in 0..od.len() {
                od[n] += ups * pd[n] * sd[n];
            }
        }
    }
    out
}
