//! Finite-mode transport noise `sigma dW = sum_k dbeta^k phi_k`, its variance
//! tensor, the Ito-Stokes drift and reproducible increment sampling.
//!
//! Modes are curls of trigonometric vector potentials taken with the same
//! discrete derivatives as `div3`, so every mode is divergence-free to
//! roundoff. Vector potential components `x` and `y` use the profile
//! `sin(m pi z / h)`; the `z` component uses `cos(m pi z / h)`.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::field::{HVecField, ScalarField, TensorField, Vec3Field};
use crate::grid::{Dims, Grid};
use crate::operators::{div3, perp_grad};
use crate::projectors::project3d;
use crate::vertical::{broadcast_layer, centered_dz, Ghost};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeKind {
    /// `phi = curl Psi` with a single-component vector potential.
    Potential,
    /// `phi = (-d_y psi, d_x psi, 0)` from a depth-independent streamfunction.
    Streamfunction,
    /// A spatially constant horizontal vector.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    X,
    Y,
    Z,
}

fn default_component() -> Component {
    Component::Z
}

/// Declarative description of one noise mode.
///
/// The mode shape is `amplitude * sin(2 pi (kx x / Lx + ky y / Ly) + phase)`
/// times the vertical profile. `amplitude` is in m^2/s for potential and
/// streamfunction modes and in m/s for uniform ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub kind: ModeKind,
    #[serde(default)]
    pub kx: i32,
    #[serde(default)]
    pub ky: i32,
    #[serde(default)]
    pub m: u32,
    pub amplitude: f64,
    #[serde(default = "default_component")]
    pub component: Component,
    #[serde(default)]
    pub phase: f64,
    #[serde(default)]
    pub name: Option<String>,
}

impl ModeSpec {
    pub fn label(&self, index: usize) -> String {
        self.name.clone().unwrap_or_else(|| format!("mode {index}"))
    }

    pub fn streamfunction(kx: i32, ky: i32, amplitude: f64) -> Self {
        ModeSpec {
            kind: ModeKind::Streamfunction,
            kx,
            ky,
            m: 0,
            amplitude,
            component: Component::Z,
            phase: 0.0,
            name: None,
        }
    }

    pub fn potential(component: Component, kx: i32, ky: i32, m: u32, amplitude: f64) -> Self {
        ModeSpec {
            kind: ModeKind::Potential,
            kx,
            ky,
            m,
            amplitude,
            component,
            phase: 0.0,
            name: None,
        }
    }

    pub fn uniform(component: Component, amplitude: f64) -> Self {
        ModeSpec {
            kind: ModeKind::Uniform,
            kx: 0,
            ky: 0,
            m: 0,
            amplitude,
            component,
            phase: 0.0,
            name: None,
        }
    }

    pub fn with_phase(mut self, phase: f64) -> Self {
        self.phase = phase;
        self
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    /// True when the horizontal components of the mode cannot depend on z.
    pub fn is_depth_independent(&self) -> bool {
        match self.kind {
            ModeKind::Streamfunction | ModeKind::Uniform => true,
            ModeKind::Potential => self.component == Component::Z && self.m == 0,
        }
    }

    fn validate(&self, index: usize, grid: &Grid, bhn: bool) -> Result<()> {
        let invalid = |reason: String| Error::InvalidMode {
            index,
            label: self.label(index),
            reason,
        };
        if !self.amplitude.is_finite() {
            return Err(invalid("amplitude is not finite".into()));
        }
        if !self.phase.is_finite() {
            return Err(invalid("phase is not finite".into()));
        }
        let (nx, ny, nz) = (grid.nx() as i64, grid.ny() as i64, grid.nz() as i64);
        if 4 * (self.kx as i64).abs() >= nx {
            return Err(invalid(format!(
                "|kx| = {} must be below nx/4 = {} (band limit)",
                self.kx.abs(),
                nx as f64 / 4.0
            )));
        }
        if 4 * (self.ky as i64).abs() >= ny {
            return Err(invalid(format!(
                "|ky| = {} must be below ny/4 = {} (band limit)",
                self.ky.abs(),
                ny as f64 / 4.0
            )));
        }
        if 2 * self.m as i64 >= nz {
            return Err(invalid(format!(
                "m = {} must be below nz/2 = {} (band limit)",
                self.m,
                nz as f64 / 2.0
            )));
        }
        match self.kind {
            ModeKind::Potential => {
                if self.component != Component::Z && self.m == 0 {
                    return Err(invalid(
                        "horizontal vector-potential components need m >= 1 to vanish on lid and bottom"
                            .into(),
                    ));
                }
            }
            ModeKind::Streamfunction => {
                if self.m != 0 {
                    return Err(invalid("streamfunction modes are depth-independent; m must be 0".into()));
                }
            }
            ModeKind::Uniform => {
                if self.component == Component::Z {
                    return Err(invalid("a uniform vertical mode cannot vanish on lid and bottom".into()));
                }
                if self.kx != 0 || self.ky != 0 || self.m != 0 {
                    return Err(invalid("uniform modes take no wavenumbers".into()));
                }
            }
        }
        if bhn && !self.is_depth_independent() {
            return Err(Error::BhnViolation {
                index,
                label: self.label(index),
                reason: format!(
                    "{:?} mode with vector-potential component {:?} and m = {} has z-dependent horizontal components",
                    self.kind, self.component, self.m
                )
                .to_lowercase(),
            });
        }
        Ok(())
    }
}

/// Horizontal phase field `amplitude * sin(theta)` on one layer.
fn horizontal_wave(spec: &ModeSpec, grid: &Grid) -> ScalarField {
    let dims = Dims { nz: 1, ..grid.dims() };
    let mut data = vec![0.0; dims.layer()];
    let (ax, ay) = (2.0 * PI * spec.kx as f64 / grid.lx(), 2.0 * PI * spec.ky as f64 / grid.ly());
    for j in 0..grid.ny() {
        for i in 0..grid.nx() {
            data[i + grid.nx() * j] = spec.amplitude * (ax * grid.x(i) + ay * grid.y(j) + spec.phase).sin();
        }
    }
    ScalarField::from_vec(dims, data).expect("shape")
}

struct BuiltMode {
    phi: Vec3Field,
    /// `max |phi_z|` evaluated at the lid and bottom faces.
    boundary_w: f64,
}

fn build_mode(spec: &ModeSpec, domain: &Domain) -> BuiltMode {
    let grid = domain.grid();
    let dims = grid.dims();
    let nz = dims.nz;
    match spec.kind {
        ModeKind::Uniform => {
            let mut phi = Vec3Field::zeros(dims);
            let target = match spec.component {
                Component::X => &mut phi.x,
                _ => &mut phi.y,
            };
            *target = ScalarField::constant(dims, spec.amplitude);
            BuiltMode { phi, boundary_w: 0.0 }
        }
        ModeKind::Streamfunction => {
            let psi = horizontal_wave(spec, grid);
            rotational_mode(&psi, 1.0, nz, domain)
        }
        ModeKind::Potential if spec.component == Component::Z && spec.m == 0 => {
            // phi_H = (d_y Psi, -d_x Psi) = -perp_grad(Psi)
            let psi = horizontal_wave(spec, grid);
            rotational_mode(&psi, -1.0, nz, domain)
        }
        ModeKind::Potential => {
            let layer = horizontal_wave(spec, grid);
            let h = grid.depth();
            let mz = spec.m as f64 * PI / h;
            let profile: Vec<f64> = grid
                .z_centers()
                .iter()
                .map(|&z| match spec.component {
                    Component::Z => (mz * z).cos(),
                    _ => (mz * z).sin(),
                })
                .collect();
            let l = dims.layer();
            let mut psi = ScalarField::zeros(dims);
            for (k, p) in profile.iter().enumerate() {
                let dst = psi.layer_mut(k);
                for c in 0..l {
                    dst[c] = layer.as_slice()[c] * p;
                }
            }
            let sp = domain.spectral();
            let dz = domain.dz();
            let mut phi = Vec3Field::zeros(dims);
            let (kx, ky) = (2.0 * PI * spec.kx as f64 / grid.lx(), 2.0 * PI * spec.ky as f64 / grid.ly());
            let boundary_profile = [(-mz * h).sin().abs(), 0.0f64.sin().abs()]
                .into_iter()
                .fold(0.0f64, f64::max);
            let boundary_w;
            match spec.component {
                Component::X => {
                    phi.y = centered_dz(&psi, dz, Ghost::Odd, Ghost::Odd);
                    phi.z = &sp.ddy(&psi) * -1.0;
                    boundary_w = spec.amplitude.abs() * ky.abs() * boundary_profile;
                }
                Component::Y => {
                    phi.x = &centered_dz(&psi, dz, Ghost::Odd, Ghost::Odd) * -1.0;
                    phi.z = sp.ddx(&psi);
                    boundary_w = spec.amplitude.abs() * kx.abs() * boundary_profile;
                }
                Component::Z => {
                    phi.x = sp.ddy(&psi);
                    phi.y = &sp.ddx(&psi) * -1.0;
                    boundary_w = 0.0;
                }
            }
            BuiltMode { phi, boundary_w }
        }
    }
}

/// `sign * (-d_y psi, d_x psi, 0)` computed on one layer and replicated, so
/// the layers are bitwise identical.
fn rotational_mode(psi_layer: &ScalarField, sign: f64, nz: usize, domain: &Domain) -> BuiltMode {
    let mut h = perp_grad(psi_layer, domain);
    if sign != 1.0 {
        h *= sign;
    }
    let dims = Dims { nz, ..psi_layer.dims() };
    BuiltMode {
        phi: Vec3Field {
            x: broadcast_layer(&h.x, nz),
            y: broadcast_layer(&h.y, nz),
            z: ScalarField::zeros(dims),
        },
        boundary_w: 0.0,
    }
}

/// `u_S = 1/2 div3(a)` taken row by row, before projection.
pub fn ito_stokes_raw(a: &TensorField, domain: &Domain) -> Vec3Field {
    let row = |r: usize| Vec3Field {
        x: a.entry(r, 0).clone(),
        y: a.entry(r, 1).clone(),
        z: a.entry(r, 2).clone(),
    };
    let mut out = Vec3Field {
        x: div3(&row(0), domain),
        y: div3(&row(1), domain),
        z: div3(&row(2), domain),
    };
    out *= 0.5;
    out
}

/// Built noise model. Immutable after construction.
#[derive(Debug, Clone)]
pub struct NoiseModel {
    specs: Vec<ModeSpec>,
    labels: Vec<String>,
    modes: Vec<Vec3Field>,
    upsilon: f64,
    bhn: bool,
    seed: u64,
    a_unit: TensorField,
    u_s_unit: Vec3Field,
    a: TensorField,
    u_s: Vec3Field,
    u_s_residual_before: f64,
    u_s_residual_after: f64,
    boundary_w: f64,
}

/// Builds every mode, the variance tensor and the projected Ito-Stokes drift.
pub fn build_modes(
    specs: &[ModeSpec],
    upsilon: f64,
    bhn: bool,
    seed: u64,
    domain: &Domain,
) -> Result<NoiseModel> {
    if !(upsilon.is_finite() && upsilon >= 0.0) {
        return Err(Error::InvalidParameter(format!("upsilon = {upsilon} must be >= 0")));
    }
    let grid = domain.grid();
    for (i, s) in specs.iter().enumerate() {
        s.validate(i, grid, bhn)?;
    }
    let dims = grid.dims();
    let mut modes = Vec::with_capacity(specs.len());
    let mut boundary_w = 0.0f64;
    let mut a_unit = TensorField::zeros(dims);
    for s in specs {
        let built = build_mode(s, domain);
        a_unit.add_outer(1.0, &built.phi);
        boundary_w = boundary_w.max(built.boundary_w);
        modes.push(built.phi);
    }
    let (u_s_unit, before, after) = if specs.is_empty() {
        (Vec3Field::zeros(dims), 0.0, 0.0)
    } else {
        let p = project3d(&ito_stokes_raw(&a_unit, domain), domain);
        (p.field, p.residual_before, p.residual_after)
    };
    let mut model = NoiseModel {
        labels: specs.iter().enumerate().map(|(i, s)| s.label(i)).collect(),
        specs: specs.to_vec(),
        modes,
        upsilon,
        bhn,
        seed,
        a: a_unit.clone(),
        u_s: u_s_unit.clone(),
        a_unit,
        u_s_unit,
        u_s_residual_before: before,
        u_s_residual_after: after,
        boundary_w,
    };
    model.rescale(upsilon);
    Ok(model)
}

impl NoiseModel {
    /// A model with no modes.
    pub fn empty(dims: Dims) -> Self {
        NoiseModel {
            specs: Vec::new(),
            labels: Vec::new(),
            modes: Vec::new(),
            upsilon: 0.0,
            bhn: false,
            seed: 0,
            a_unit: TensorField::zeros(dims),
            u_s_unit: Vec3Field::zeros(dims),
            a: TensorField::zeros(dims),
            u_s: Vec3Field::zeros(dims),
            u_s_residual_before: 0.0,
            u_s_residual_after: 0.0,
            boundary_w: 0.0,
        }
    }

    fn rescale(&mut self, upsilon: f64) {
        self.upsilon = upsilon;
        self.a = &self.a_unit * upsilon;
        self.u_s = &self.u_s_unit * upsilon;
    }

    /// The same modes at a different noise scaling.
    pub fn with_upsilon(&self, upsilon: f64) -> Result<NoiseModel> {
        if !(upsilon.is_finite() && upsilon >= 0.0) {
            return Err(Error::InvalidParameter(format!("upsilon = {upsilon} must be >= 0")));
        }
        let mut m = self.clone();
        m.rescale(upsilon);
        Ok(m)
    }

    pub fn with_seed(&self, seed: u64) -> NoiseModel {
        NoiseModel { seed, ..self.clone() }
    }

    pub fn specs(&self) -> &[ModeSpec] {
        &self.specs
    }
    pub fn labels(&self) -> &[String] {
        &self.labels
    }
    pub fn modes(&self) -> &[Vec3Field] {
        &self.modes
    }
    pub fn len(&self) -> usize {
        self.modes.len()
    }
    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }
    pub fn dims(&self) -> Dims {
        self.a.dims()
    }
    pub fn upsilon(&self) -> f64 {
        self.upsilon
    }
    pub fn bhn(&self) -> bool {
        self.bhn
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
    /// True when the model generates no noise at all.
    pub fn is_silent(&self) -> bool {
        self.modes.is_empty() || self.upsilon == 0.0
    }
    /// `a = Upsilon sum_k phi_k phi_k^T`.
    pub fn variance_tensor(&self) -> &TensorField {
        &self.a
    }
    /// Projected Ito-Stokes drift `u_S`.
    pub fn ito_stokes(&self) -> &Vec3Field {
        &self.u_s
    }
    /// Horizontal part `v_s` of the Ito-Stokes drift.
    pub fn ito_stokes_horizontal(&self) -> HVecField {
        self.u_s.horizontal()
    }
    /// `max |div3 u_S|` before and after the projection (for `Upsilon = 1`).
    pub fn ito_stokes_residuals(&self) -> (f64, f64) {
        (self.u_s_residual_before, self.u_s_residual_after)
    }
    /// `max |phi_z|` of any mode on the lid and bottom faces.
    pub fn boundary_normal_velocity(&self) -> f64 {
        self.boundary_w
    }
    /// `max_k max_x |div3 phi_k|`.
    pub fn max_mode_divergence(&self, domain: &Domain) -> f64 {
        self.modes
            .iter()
            .map(|m| div3(m, domain).max_abs())
            .fold(0.0, f64::max)
    }

    /// Generator for step `step_index` of ensemble stream `self.seed()`.
    pub fn rng_for_step(&self, step_index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(step_index);
        rng
    }

    /// Draws `dbeta^k ~ N(0, dt)` for step `step_index` and assembles `sigma dW`.
    pub fn sample_increment(&self, dt: f64, step_index: u64) -> Result<NoiseIncrement> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt = {dt} must be > 0")));
        }
        let mut rng = self.rng_for_step(step_index);
        let sd = dt.sqrt();
        let gaussians: Vec<f64> = (0..self.modes.len())
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                sd * z
            })
            .collect();
        self.increment_from_gaussians(dt, gaussians)
    }

    /// `sigma dW = sqrt(Upsilon) sum_k dbeta^k phi_k` for given `dbeta^k`.
    pub fn increment_from_gaussians(&self, dt: f64, gaussians: Vec<f64>) -> Result<NoiseIncrement> {
        if gaussians.len() != self.modes.len() {
            return Err(Error::InvalidParameter(format!(
                "{} Brownian increments supplied for {} modes",
                gaussians.len(),
                self.modes.len()
            )));
        }
        let mut sigma_dw = Vec3Field::zeros(self.dims());
        let s = self.upsilon.sqrt();
        if s != 0.0 {
            for (phi, &b) in self.modes.iter().zip(&gaussians) {
                sigma_dw.axpy(s * b, phi);
            }
        }
        Ok(NoiseIncrement {
            sigma_dw,
            dt,
            gaussians,
        })
    }
}

/// One realisation of the noise over a time step.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseIncrement {
    pub sigma_dw: Vec3Field,
    pub dt: f64,
    pub gaussians: Vec<f64>,
}

/// Seed of ensemble member `member` derived from a base seed (SplitMix64 mix).
pub fn member_seed(base: u64, member: u64) -> u64 {
    let mut z = base ^ member.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use nalgebra::Matrix3;
    use proptest::prelude::*;

    fn domain(nx: usize, ny: usize, nz: usize) -> Domain {
        Domain::new(make_grid(nx, ny, nz, 2.0 * PI, 2.0 * PI, 1.0).unwrap())
    }

    #[test]
    fn empty_spec_list_gives_zero_model() {
        let d = domain(8, 8, 4);
        let m = build_modes(&[], 1.0, false, 0, &d).unwrap();
        assert!(m.is_empty());
        assert_eq!(m.variance_tensor().max_abs(), 0.0);
        assert_eq!(m.ito_stokes().max_abs(), 0.0);
        let inc = m.sample_increment(0.1, 0).unwrap();
        assert_eq!(inc.sigma_dw.max_abs(), 0.0);
    }

    #[test]
    fn bhn_sine_streamfunction() {
        let d = domain(16, 16, 6);
        let g = d.grid();
        let m = build_modes(&[ModeSpec::streamfunction(1, 0, 1.0)], 0.5, true, 0, &d).unwrap();
        let phi = &m.modes()[0];
        let cos = ScalarField::from_fn(g, |x, _, _| x.cos());
        assert!(phi.x.max_abs() < 1e-14);
        assert!((&phi.y - &cos).max_abs() < 1e-13);
        assert_eq!(phi.z.max_abs(), 0.0);
        assert!(m.max_mode_divergence(&d) < 1e-14);
        let a = m.variance_tensor();
        let expect = cos.map(|c| 0.5 * c * c);
        assert!((&a.yy - &expect).max_abs() < 1e-13);
        for e in [&a.xx, &a.xy, &a.xz, &a.yz, &a.zz] {
            assert!(e.max_abs() < 1e-14);
        }
        assert!(m.ito_stokes().max_abs() < 1e-13);
        for k in 1..g.nz() {
            assert_eq!(phi.x.layer(k), phi.x.layer(0));
            assert_eq!(phi.y.layer(k), phi.y.layer(0));
        }
    }

    #[test]
    fn potential_mode_is_divergence_free_and_vanishes_on_boundaries() {
        let d = domain(16, 16, 16);
        let specs = [
            ModeSpec::potential(Component::Y, 1, 0, 1, 0.3),
            ModeSpec::potential(Component::X, 2, 1, 3, 0.2).with_phase(0.4),
            ModeSpec::potential(Component::Z, 1, 2, 2, 0.1),
        ];
        let m = build_modes(&specs, 1.0, false, 0, &d).unwrap();
        assert!(m.max_mode_divergence(&d) < 1e-10);
        assert!(m.boundary_normal_velocity() < 1e-10);
        let (_, after) = m.ito_stokes_residuals();
        assert!(after < 1e-10);
        assert!(div3(m.ito_stokes(), &d).max_abs() < 1e-10);
    }

    #[test]
    fn potential_mode_matches_finite_difference_curl() {
        // Psi = (0, A sin x sin(pi z), 0): phi = (-d_z Psi_y, 0, d_x Psi_y)
        let d = domain(16, 4, 32);
        let g = d.grid();
        let m = build_modes(&[ModeSpec::potential(Component::Y, 1, 0, 1, 1.0)], 1.0, false, 0, &d).unwrap();
        let phi = &m.modes()[0];
        let ez = ScalarField::from_fn(g, |x, _, z| x.cos() * (PI * z).sin());
        assert!((&phi.z - &ez).max_abs() < 1e-13);
        let ex = ScalarField::from_fn(g, |x, _, z| -PI * x.sin() * (PI * z).cos());
        let dz = g.dz();
        assert!((&phi.x - &ex).max_abs() < PI * PI * PI * dz * dz);
    }

    #[test]
    fn constant_mode_variance() {
        let d = domain(4, 4, 4);
        let m = build_modes(&[ModeSpec::uniform(Component::X, 1.0)], 1.0, true, 0, &d).unwrap();
        let a = m.variance_tensor();
        assert!(a.xx.as_slice().iter().all(|&v| v == 1.0));
        for e in [&a.xy, &a.xz, &a.yy, &a.yz, &a.zz] {
            assert_eq!(e.max_abs(), 0.0);
        }
        let zero = m.with_upsilon(0.0).unwrap();
        assert_eq!(zero.variance_tensor().max_abs(), 0.0);
    }

    #[test]
    fn two_modes_sum_outer_products() {
        let d = domain(8, 8, 8);
        let specs = [
            ModeSpec::potential(Component::X, 1, 1, 1, 0.5),
            ModeSpec::streamfunction(0, 1, 0.7),
        ];
        let m = build_modes(&specs, 0.3, false, 0, &d).unwrap();
        let a = m.variance_tensor();
        for n in (0..d.dims().len()).step_by(7) {
            let mut brute = Matrix3::zeros();
            for phi in m.modes() {
                let v = nalgebra::Vector3::from(phi.at(n));
                brute += 0.3 * v * v.transpose();
            }
            let got = Matrix3::from(a.matrix_at(n));
            assert!((got - brute).abs().max() < 1e-14);
        }
    }

    #[test]
    fn ito_stokes_of_cosine_tensor() {
        let d = domain(16, 4, 4);
        let g = d.grid();
        let mut a = TensorField::zeros(g.dims());
        a.xx = ScalarField::from_fn(g, |x, _, _| x.cos());
        let u = ito_stokes_raw(&a, &d);
        let expect = ScalarField::from_fn(g, |x, _, _| -0.5 * x.sin());
        assert!((&u.x - &expect).max_abs() < 1e-13);
        assert!(u.y.max_abs() < 1e-15 && u.z.max_abs() < 1e-15);
    }

    #[test]
    fn rejects_band_limit_and_bhn_violations() {
        let d = domain(16, 16, 8);
        let e = build_modes(&[ModeSpec::streamfunction(4, 0, 1.0)], 1.0, false, 0, &d).unwrap_err();
        assert!(matches!(e, Error::InvalidMode { index: 0, .. }));
        let e = build_modes(&[ModeSpec::potential(Component::Z, 0, 1, 4, 1.0)], 1.0, false, 0, &d);
        assert!(e.is_err());
        let specs = [
            ModeSpec::streamfunction(1, 0, 1.0),
            ModeSpec::potential(Component::X, 1, 0, 1, 1.0).named("shear"),
        ];
        match build_modes(&specs, 1.0, true, 0, &d) {
            Err(Error::BhnViolation { index, label, .. }) => {
                assert_eq!(index, 1);
                assert_eq!(label, "shear");
            }
            other => panic!("expected BHN violation, got {other:?}"),
        }
        assert!(build_modes(&[ModeSpec::uniform(Component::Z, 1.0)], 1.0, false, 0, &d).is_err());
        assert!(build_modes(&[], -1.0, false, 0, &d).is_err());
    }

    #[test]
    fn sampling_is_reproducible_and_scaled() {
        let d = domain(8, 8, 4);
        let m = build_modes(&[ModeSpec::streamfunction(1, 1, 1.0)], 1.0, true, 42, &d).unwrap();
        let a = m.sample_increment(0.01, 7).unwrap();
        let b = m.sample_increment(0.01, 7).unwrap();
        assert_eq!(a, b);
        let c = m.sample_increment(0.01, 8).unwrap();
        assert_ne!(a.gaussians, c.gaussians);
        let z = m.with_upsilon(0.0).unwrap().sample_increment(0.01, 7).unwrap();
        assert_eq!(z.sigma_dw.max_abs(), 0.0);
        assert!(m.sample_increment(0.0, 0).is_err());
    }

    #[test]
    fn member_seeds_are_distinct() {
        let s: std::collections::HashSet<u64> = (0..1000).map(|m| member_seed(5, m)).collect();
        assert_eq!(s.len(), 1000);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn variance_is_psd_and_modes_divergence_free(
            kx in -1i32..=1, ky in -1i32..=1, m in 1u32..4, amp in -2.0f64..2.0,
            phase in 0.0f64..6.3, comp in 0usize..3, ups in 0.0f64..3.0,
        ) {
            let d = domain(8, 8, 8);
            let component = [Component::X, Component::Y, Component::Z][comp];
            let specs = [
                ModeSpec::potential(component, kx, ky, m, amp).with_phase(phase),
                ModeSpec::streamfunction(ky, kx, 0.5 * amp),
            ];
            let model = build_modes(&specs, ups, false, 0, &d).unwrap();
            prop_assert!(model.max_mode_divergence(&d) <= 1e-10);
            prop_assert!(model.boundary_normal_velocity() <= 1e-10);
            let a = model.variance_tensor();
            for n in 0..d.dims().len() {
                let mat = nalgebra::Matrix3::from(a.matrix_at(n));
                let eig = mat.symmetric_eigenvalues();
                prop_assert!(eig.min() >= -1e-12);
            }
            prop_assert!(div3(model.ito_stokes(), &d).max_abs() <= 1e-10);
        }
    }
}
