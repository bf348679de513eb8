//! Barotropic/baroclinic splitting and the Leray-type projections.

use rustfft::num_complex::Complex64;

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::field::{HVecField, ScalarField, State, Vec3Field};
use crate::spectral::Spectrum;
use crate::vertical::{broadcast_layer, centered_dz, depth_mean, Ghost};

/// Depth average of `v` broadcast back over every level.
pub fn barotropic(v: &HVecField) -> HVecField {
    let nz = v.dims().nz;
    HVecField {
        x: broadcast_layer(&depth_mean(&v.x), nz),
        y: broadcast_layer(&depth_mean(&v.y), nz),
    }
}

/// `v - A[v]`.
pub fn baroclinic(v: &HVecField) -> HVecField {
    v - &barotropic(v)
}

/// Depth mean of both components as single layers.
pub fn depth_mean_h(v: &HVecField) -> HVecField {
    HVecField {
        x: depth_mean(&v.x),
        y: depth_mean(&v.y),
    }
}

fn z_deviation(f: &ScalarField) -> f64 {
    let d = f.dims();
    let base = f.layer(0);
    (1..d.nz)
        .flat_map(|k| f.layer(k).iter().zip(base).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max)
}

/// Gradient part `k (k . v) / |k|^2` of a horizontal spectrum pair, using the
/// derivative wavenumbers so that the complement is exactly divergence-free.
fn gradient_part(domain: &Domain, sx: &Spectrum, sy: &Spectrum) -> (Spectrum, Spectrum) {
    let sp = domain.spectral();
    let (kx, ky) = (sp.kx(), sp.ky());
    let d = sx.dims();
    let mut gx = Spectrum::zeros(d);
    let mut gy = Spectrum::zeros(d);
    for k in 0..d.nz {
        for i in 0..d.nx {
            for j in 0..d.ny {
                let k2 = kx[i] * kx[i] + ky[j] * ky[j];
                if k2 == 0.0 {
                    continue;
                }
                let n = sx.idx(i, j, k);
                let dot = (kx[i] * sx.as_slice()[n] + ky[j] * sy.as_slice()[n]) / k2;
                gx.as_mut_slice()[n] = dot * kx[i];
                gy.as_mut_slice()[n] = dot * ky[j];
            }
        }
    }
    (gx, gy)
}

fn leray_layers(v: &HVecField, domain: &Domain) -> HVecField {
    let sp = domain.spectral();
    let (sx, sy) = sp.forward_pair(&v.x, &v.y);
    let (gx, gy) = gradient_part(domain, &sx, &sy);
    let (px, py) = sp.inverse_pair(&gx, &gy);
    v - &HVecField { x: px, y: py }
}

/// The 2D Leray projection `I - k k^T / |k|^2` of a z-independent field.
pub fn leray2d(vbar: &HVecField, domain: &Domain) -> Result<HVecField> {
    vbar.x.check_dims(vbar.y.dims())?;
    let tol = 1e-12 * vbar.max_abs().max(1.0);
    let dev = z_deviation(&vbar.x).max(z_deviation(&vbar.y));
    if dev > tol {
        return Err(Error::NotBarotropic { deviation: dev });
    }
    let nz = vbar.dims().nz;
    let mean = HVecField {
        x: ScalarField::from_vec(
            crate::grid::Dims { nz: 1, ..vbar.dims() },
            vbar.x.layer(0).to_vec(),
        )?,
        y: ScalarField::from_vec(
            crate::grid::Dims { nz: 1, ..vbar.dims() },
            vbar.y.layer(0).to_vec(),
        )?,
    };
    let p = leray_layers(&mean, domain);
    Ok(HVecField {
        x: broadcast_layer(&p.x, nz),
        y: broadcast_layer(&p.y, nz),
    })
}

/// `P^v v = P_2D A[v] + R[v]`, computed as `v` minus the broadcast gradient
/// part of the depth mean so the baroclinic part passes through untouched.
pub fn project_v(v: &HVecField, domain: &Domain) -> HVecField {
    let sp = domain.spectral();
    let nz = v.dims().nz;
    let mean = depth_mean_h(v);
    let (sx, sy) = sp.forward_pair(&mean.x, &mean.y);
    let (gx, gy) = gradient_part(domain, &sx, &sy);
    let (px, py) = sp.inverse_pair(&gx, &gy);
    HVecField {
        x: &v.x - &broadcast_layer(&px, nz),
        y: &v.y - &broadcast_layer(&py, nz),
    }
}

/// `P U = (P^v v, T, S)`.
pub fn project(u: &State, domain: &Domain) -> State {
    State {
        v_star: project_v(&u.v_star, domain),
        temp: u.temp.clone(),
        salt: u.salt.clone(),
        t: u.t,
        step_index: u.step_index,
    }
}

/// `max |div_H A[v]|`, the discrete barotropic constraint.
pub fn barotropic_divergence(v: &HVecField, domain: &Domain) -> f64 {
    domain.spectral().div_h(&depth_mean_h(v)).max_abs()
}

/// Result of the 3D projection onto discretely divergence-free fields.
#[derive(Debug, Clone)]
pub struct Projected3 {
    pub field: Vec3Field,
    /// `max |div3 u|` before projection.
    pub residual_before: f64,
    /// `max |div3 u|` after projection.
    pub residual_after: f64,
}

/// Removes the `grad3` component of `u` by solving `div3 grad3 phi = div3 u`
/// exactly per horizontal wavenumber (eigen-decomposed column Laplacian).
pub fn project3d(u: &Vec3Field, domain: &Domain) -> Projected3 {
    let residual_before = crate::operators::div3(u, domain).max_abs();
    let d = u.dims();
    let horizontal_only = u.z.as_slice().iter().all(|&v| v == 0.0)
        && z_deviation(&u.x) == 0.0
        && z_deviation(&u.y) == 0.0;
    let field = if horizontal_only {
        let h = leray2d(&u.horizontal(), domain).expect("checked z-invariant");
        Vec3Field {
            x: h.x,
            y: h.y,
            z: ScalarField::zeros(d),
        }
    } else {
        general_project3d(u, domain)
    };
    let residual_after = crate::operators::div3(&field, domain).max_abs();
    Projected3 {
        field,
        residual_before,
        residual_after,
    }
}

fn general_project3d(u: &Vec3Field, domain: &Domain) -> Vec3Field {
    let sp = domain.spectral();
    let dz = domain.dz();
    let d = u.dims();
    let (sx, sy) = sp.forward_pair(&u.x, &u.y);
    let mut r = sp.div_spec(&sx, &sy);
    let dzu = centered_dz(&u.z, dz, Ghost::Odd, Ghost::Odd);
    r.axpy(Complex64::new(1.0, 0.0), &sp.forward(&dzu));

    let eig = domain.vertical_eigen();
    let lam_max = eig.values.iter().fold(0.0f64, |a, &b| a.max(b));
    let (kx, ky) = (sp.kx(), sp.ky());
    let nz = d.nz;
    let mut phi = Spectrum::zeros(d);
    let mut coef = vec![Complex64::new(0.0, 0.0); nz];
    for i in 0..d.nx {
        for j in 0..d.ny {
            let k2 = kx[i] * kx[i] + ky[j] * ky[j];
            let thresh = 1e-12 * (lam_max + k2).max(1e-300);
            for (m, c) in coef.iter_mut().enumerate() {
                let denom = k2 + eig.values[m];
                if denom.abs() <= thresh {
                    *c = Complex64::new(0.0, 0.0);
                    continue;
                }
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..nz {
                    acc += eig.vectors[(k, m)] * r.as_slice()[r.idx(i, j, k)];
                }
                *c = -acc / denom;
            }
            for k in 0..nz {
                let mut acc = Complex64::new(0.0, 0.0);
                for (m, c) in coef.iter().enumerate() {
                    acc += eig.vectors[(k, m)] * *c;
                }
                let n = phi.idx(i, j, k);
                phi.as_mut_slice()[n] = acc;
            }
        }
    }
    let gh = sp.grad_h_spec(&phi);
    let phi_real = sp.inverse(&phi);
    let gz = centered_dz(&phi_real, dz, Ghost::Even, Ghost::Even);
    Vec3Field {
        x: &u.x - &gh.x,
        y: &u.y - &gh.y,
        z: &u.z - &gz,
    }
}
