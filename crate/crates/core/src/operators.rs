//! Discrete differential operators: diagnostic vertical velocity, advection,
//! anisotropic diffusion, Coriolis, and the stochastic diffusion term.
//!
//! `grad3 = (d/dx, d/dy, G_z)` with `G_z` the centred stencil on even ghosts,
//! and `div3 = (d/dx, d/dy, D_z)` with odd ghosts, so `div3 = -grad3^T`
//! holds exactly. Every noise-related operator goes through this pair.

use rustfft::num_complex::Complex64;

use crate::domain::Domain;
use crate::field::{HVecField, ScalarField, TensorField, Vec3Field};
use crate::params::DiffusionParams;
use crate::vertical::{centered_dz, diffuse_z, integrate_from_surface, FaceField, Ghost};

/// `w(v) = int_z^0 div_H v dz'` on faces and at centres.
#[derive(Debug, Clone)]
pub struct VerticalVelocity {
    pub faces: FaceField,
    pub centers: ScalarField,
    /// `max |w(-h)|`, which vanishes when the barotropic divergence does.
    pub bottom_residual: f64,
}

pub fn vertical_velocity(v: &HVecField, domain: &Domain) -> VerticalVelocity {
    let div = domain.spectral().div_h(v);
    let faces = integrate_from_surface(&div, domain.dz());
    let centers = faces.to_centers();
    let bottom_residual = faces.layer(0).iter().fold(0.0f64, |m, x| m.max(x.abs()));
    VerticalVelocity {
        faces,
        centers,
        bottom_residual,
    }
}

/// `(v . grad_H) q + w d_z q` with the given vertical ghost convention for `q`.
pub fn advect_with_w(
    v: &HVecField,
    w: &ScalarField,
    q: &ScalarField,
    ghosts: (Ghost, Ghost),
    domain: &Domain,
) -> ScalarField {
    let g = domain.spectral().grad_h(q);
    let qz = centered_dz(q, domain.dz(), ghosts.0, ghosts.1);
    let mut out = ScalarField::zeros(q.dims());
    let o = out.as_mut_slice();
    let (vx, vy, ws) = (v.x.as_slice(), v.y.as_slice(), w.as_slice());
    let (gx, gy, gz) = (g.x.as_slice(), g.y.as_slice(), qz.as_slice());
    for n in 0..o.len() {
        o[n] = vx[n] * gx[n] + vy[n] * gy[n] + ws[n] * gz[n];
    }
    out
}

/// `B(v, q)` with `w = w(v)` diagnosed internally.
pub fn advect(v: &HVecField, q: &ScalarField, ghosts: (Ghost, Ghost), domain: &Domain) -> ScalarField {
    let w = vertical_velocity(v, domain).centers;
    advect_with_w(v, &w, q, ghosts, domain)
}

/// `-mu Delta_H q - d_z(nu d_z q)` with the closures in `params`.
pub fn diffuse(params: &DiffusionParams, q: &ScalarField, domain: &Domain) -> ScalarField {
    let sp = domain.spectral();
    let mut out = sp.lap_h(q);
    out *= -params.mu;
    out += &diffuse_z(q, domain.dz(), params.nu, params.bc);
    out
}

/// `Gamma (a, b) = f (-b, a)`.
pub fn coriolis(v: &HVecField, f: f64) -> HVecField {
    HVecField {
        x: &v.y * -f,
        y: &v.x * f,
    }
}

pub fn grad3(q: &ScalarField, domain: &Domain) -> Vec3Field {
    let h = domain.spectral().grad_h(q);
    Vec3Field {
        x: h.x,
        y: h.y,
        z: centered_dz(q, domain.dz(), Ghost::Even, Ghost::Even),
    }
}

pub fn div3(u: &Vec3Field, domain: &Domain) -> ScalarField {
    let sp = domain.spectral();
    let (sx, sy) = sp.forward_pair(&u.x, &u.y);
    let mut out = sp.inverse(&sp.div_spec(&sx, &sy));
    out += &centered_dz(&u.z, domain.dz(), Ghost::Odd, Ghost::Odd);
    out
}

/// `div3` of two vector fields at once, sharing the transforms.
pub fn div3_pair(a: &Vec3Field, b: &Vec3Field, domain: &Domain) -> (ScalarField, ScalarField) {
    let sp = domain.spectral();
    let (ax, ay) = sp.forward_pair(&a.x, &a.y);
    let (bx, by) = sp.forward_pair(&b.x, &b.y);
    let (mut da, mut db) = sp.inverse_pair(&sp.div_spec(&ax, &ay), &sp.div_spec(&bx, &by));
    da += &centered_dz(&a.z, domain.dz(), Ghost::Odd, Ghost::Odd);
    db += &centered_dz(&b.z, domain.dz(), Ghost::Odd, Ghost::Odd);
    (da, db)
}

/// `u . grad3 q`.
pub fn noise_transport(u: &Vec3Field, q: &ScalarField, domain: &Domain) -> ScalarField {
    dot3(u, &grad3(q, domain))
}

pub fn dot3(a: &Vec3Field, b: &Vec3Field) -> ScalarField {
    let mut out = ScalarField::zeros(a.dims());
    let o = out.as_mut_slice();
    let (ax, ay, az) = (a.x.as_slice(), a.y.as_slice(), a.z.as_slice());
    let (bx, by, bz) = (b.x.as_slice(), b.y.as_slice(), b.z.as_slice());
    for n in 0..o.len() {
        o[n] = ax[n] * bx[n] + ay[n] * by[n] + az[n] * bz[n];
    }
    out
}

/// `1/2 div3(a grad3 q)`.
pub fn stochastic_diffusion(a: &TensorField, q: &ScalarField, domain: &Domain) -> ScalarField {
    let flux = a.apply(&grad3(q, domain));
    let mut out = div3(&flux, domain);
    out *= 0.5;
    out
}

/// Rotated horizontal gradient `(-d/dy f, d/dx f)`.
pub(crate) fn perp_grad(f: &ScalarField, domain: &Domain) -> HVecField {
    let sp = domain.spectral();
    let s = sp.forward(f);
    let sx = sp.multiply(&s, |_, j| Complex64::new(0.0, -sp.ky()[j]));
    let sy = sp.ddx_spec(&s);
    let (x, y) = sp.inverse_pair(&sx, &sy);
    HVecField { x, y }
}
