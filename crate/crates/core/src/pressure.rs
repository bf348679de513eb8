//! Linear equation of state, the hydrostatic pressure force and the
//! noise-induced pressure corrections of the weak-filtered closure.
//!
//! Every pressure term is formed the same way: an integrand is accumulated
//! from the lid with the quadrature used for `w`, differentiated
//! horizontally and passed through `P^v`. Surface pressure never needs to be
//! computed because `P^v` annihilates depth-independent gradients.

use crate::domain::Domain;
use crate::field::{HVecField, ScalarField};
use crate::filter::{filtered_variance_apply, Filter};
use crate::noise::{NoiseIncrement, NoiseModel};
use crate::operators::{diffuse, div3, dot3, grad3, vertical_velocity};
use crate::params::PhysParams;
use crate::projectors::project_v;
use crate::vertical::integrate_from_surface_centers;

/// `rho = rho0 (1 + beta_T (T - T_r) + beta_S (S - S_r))`.
pub fn density(temp: &ScalarField, salt: &ScalarField, p: &PhysParams) -> ScalarField {
    temp.zip_map(salt, |t, s| {
        p.rho0 * (1.0 + p.beta_t * (t - p.t_ref) + p.beta_s * (s - p.s_ref))
    })
}

/// Buoyancy pressure force `-g grad_H int_z^0 (beta_T T' + beta_S S') dz'`.
pub fn hydrostatic_gradient(temp: &ScalarField, salt: &ScalarField, p: &PhysParams, domain: &Domain) -> HVecField {
    let b = temp.zip_map(salt, |t, s| p.beta_t * (t - p.t_ref) + p.beta_s * (s - p.s_ref));
    let mut g = domain.spectral().grad_h(&integrate_from_surface_centers(&b, domain.dz()));
    g *= -p.g;
    g
}

/// `P^v grad_H int_z^0 f dz'`.
pub fn projected_column_gradient(integrand: &ScalarField, domain: &Domain) -> HVecField {
    let pint = integrate_from_surface_centers(integrand, domain.dz());
    project_v(&domain.spectral().grad_h(&pint), domain)
}

/// `W = w(v* + v_s)` at cell centres.
pub fn total_vertical_velocity(v_star: &HVecField, model: &NoiseModel, domain: &Domain) -> ScalarField {
    let v = v_star + &model.ito_stokes_horizontal();
    vertical_velocity(&v, domain).centers
}

/// Bounded-variation integrand `K*[u_S . grad W] - 1/2 div(a^K grad W)` for a
/// given `W`.
pub fn weak_pressure_integrand(w: &ScalarField, model: &NoiseModel, filter: &Filter, domain: &Domain) -> ScalarField {
    let gw = grad3(w, domain);
    let mut out = filter.apply(&dot3(model.ito_stokes(), &gw), domain);
    let mut diff = div3(&filtered_variance_apply(model, filter, &gw, domain), domain);
    diff *= 0.5;
    out -= &diff;
    out
}

/// `P[grad_H int_z^0 (K*[u_S . grad W] - 1/2 div(a^K grad W)) dz']`.
pub fn weak_pressure_gradient(v_star: &HVecField, model: &NoiseModel, filter: &Filter, domain: &Domain) -> HVecField {
    if model.is_silent() {
        return HVecField::zeros(v_star.dims());
    }
    let w = total_vertical_velocity(v_star, model, domain);
    projected_column_gradient(&weak_pressure_integrand(&w, model, filter, domain), domain)
}

/// Martingale integrand `K*[sigma dW . grad W] + A^v(sigma^w dW)`.
pub fn martingale_integrand(
    w: &ScalarField,
    filter: &Filter,
    increment: &NoiseIncrement,
    params: &PhysParams,
    domain: &Domain,
) -> ScalarField {
    let gw = grad3(w, domain);
    let mut out = filter.apply(&dot3(&increment.sigma_dw, &gw), domain);
    out += &diffuse(&params.vertical_noise_diffusion(), &increment.sigma_dw.z, domain);
    out
}

/// `-(1/rho0) P grad_H dp^sigma = P[grad_H int_z^0 (K*[sigma dW . grad W] + A^v(sigma^w dW)) dz']`.
pub fn martingale_pressure_forcing(
    v_star: &HVecField,
    model: &NoiseModel,
    filter: &Filter,
    increment: &NoiseIncrement,
    params: &PhysParams,
    domain: &Domain,
) -> HVecField {
    if model.is_silent() {
        return HVecField::zeros(v_star.dims());
    }
    let w = total_vertical_velocity(v_star, model, domain);
    projected_column_gradient(&martingale_integrand(&w, filter, increment, params, domain), domain)
}

/// Both noise pressure terms of one Euler-Maruyama step at once:
/// `martingale - dt * weak`, sharing `W`, its gradient and the transforms.
pub fn noise_pressure_step(
    w: &ScalarField,
    model: &NoiseModel,
    filter: &Filter,
    increment: &NoiseIncrement,
    params: &PhysParams,
    domain: &Domain,
) -> HVecField {
    let dt = increment.dt;
    let gw = grad3(w, domain);
    let mut transport = increment.sigma_dw.clone();
    transport.axpy(-dt, model.ito_stokes());
    let mut integrand = filter.apply(&dot3(&transport, &gw), domain);
    let mut diff = div3(&filtered_variance_apply(model, filter, &gw, domain), domain);
    diff *= 0.5 * dt;
    integrand += &diff;
    integrand += &diffuse(&params.vertical_noise_diffusion(), &increment.sigma_dw.z, domain);
    projected_column_gradient(&integrand, domain)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::FilterKernel;
    use crate::grid::make_grid;
    use crate::noise::{build_modes, Component, ModeSpec};
    use crate::operators::perp_grad;
    use crate::vertical::broadcast_layer;
    use std::f64::consts::PI;

    fn domain(nx: usize, ny: usize, nz: usize) -> Domain {
        Domain::new(make_grid(nx, ny, nz, 2.0 * PI, 2.0 * PI, 1.0).unwrap())
    }

    fn baroclinic_model(d: &Domain, ups: f64) -> NoiseModel {
        let specs = [
            ModeSpec::potential(Component::Y, 1, 0, 1, 0.3),
            ModeSpec::potential(Component::X, 0, 1, 2, 0.2),
            ModeSpec::streamfunction(1, 1, 0.25),
        ];
        build_modes(&specs, ups, false, 11, d).unwrap()
    }

    fn sheared_velocity(d: &Domain) -> HVecField {
        let g = d.grid();
        HVecField {
            x: ScalarField::from_fn(g, |x, y, z| x.sin() * (PI * z).cos() + 0.2 * y.cos()),
            y: ScalarField::from_fn(g, |x, y, z| (x + y).cos() * z),
        }
    }

    #[test]
    fn density_examples() {
        let d = domain(4, 4, 2);
        let p = PhysParams::default();
        let t = ScalarField::constant(d.dims(), p.t_ref);
        let s = ScalarField::constant(d.dims(), p.s_ref);
        assert!(density(&t, &s, &p).as_slice().iter().all(|&r| r == p.rho0));
        let q = PhysParams { beta_s: 0.0, ..p };
        let t1 = ScalarField::constant(d.dims(), p.t_ref + 1.0);
        let r = density(&t1, &s, &q);
        assert!(r.as_slice().iter().all(|&x| (x - p.rho0 * (1.0 + p.beta_t)).abs() < 1e-10));
    }

    #[test]
    fn hydrostatic_gradient_examples() {
        let d = domain(16, 8, 32);
        let g = d.grid();
        let p = PhysParams::default();
        let s = ScalarField::constant(g.dims(), p.s_ref);
        let flat = ScalarField::from_fn(g, |_, _, z| p.t_ref + z);
        assert!(hydrostatic_gradient(&flat, &s, &p, &d).max_abs() < 1e-13);
        let t = ScalarField::from_fn(g, |x, _, _| p.t_ref + x.sin());
        let hg = hydrostatic_gradient(&t, &s, &p, &d);
        let expect = ScalarField::from_fn(g, |x, _, z| p.g * p.beta_t * z * x.cos());
        assert!((&hg.x - &expect).max_abs() < 1e-12);
        assert!(hg.y.max_abs() < 1e-14);
        let z = PhysParams { beta_t: 0.0, beta_s: 0.0, ..p };
        assert_eq!(hydrostatic_gradient(&t, &s, &z, &d).max_abs(), 0.0);
    }

    #[test]
    fn zero_noise_and_zero_w_give_zero() {
        let d = domain(8, 8, 8);
        let v = sheared_velocity(&d);
        let f = Filter::new(FilterKernel::gaussian(0.3), &d).unwrap();
        let empty = build_modes(&[], 1.0, false, 0, &d).unwrap();
        assert_eq!(weak_pressure_gradient(&v, &empty, &f, &d).max_abs(), 0.0);

        let bhn = build_modes(&[ModeSpec::streamfunction(1, 0, 0.5)], 1.0, true, 0, &d).unwrap();
        let psi = ScalarField::from_fn(d.grid(), |x, y, _| x.sin() * y.cos());
        let v0 = perp_grad(&psi, &d);
        let vbar = HVecField {
            x: broadcast_layer(&crate::vertical::depth_mean(&v0.x), 8),
            y: broadcast_layer(&crate::vertical::depth_mean(&v0.y), 8),
        };
        assert!(weak_pressure_gradient(&vbar, &bhn, &f, &d).max_abs() < 1e-12);
        let inc = bhn.sample_increment(0.1, 0).unwrap();
        let p = PhysParams::default();
        assert!(martingale_pressure_forcing(&vbar, &bhn, &f, &inc, &p, &d).max_abs() < 1e-12);
        let zero = bhn.increment_from_gaussians(0.1, vec![0.0]).unwrap();
        assert!(martingale_pressure_forcing(&v, &bhn, &f, &zero, &p, &d).max_abs() < 1e-12);
    }

    #[test]
    fn identity_kernel_matches_unfiltered_composition() {
        let d = domain(8, 8, 8);
        let model = baroclinic_model(&d, 0.8);
        let v = sheared_velocity(&d);
        let f = Filter::new(FilterKernel::IDENTITY, &d).unwrap();
        let got = weak_pressure_gradient(&v, &model, &f, &d);
        let w = vertical_velocity(&(&v + &model.ito_stokes_horizontal()), &d).centers;
        let gw = grad3(&w, &d);
        let mut integrand = dot3(model.ito_stokes(), &gw);
        integrand -= &crate::operators::stochastic_diffusion(model.variance_tensor(), &w, &d);
        let expect = projected_column_gradient(&integrand, &d);
        assert!((&got - &expect).max_abs() < 1e-12);

        let inc = model.sample_increment(0.05, 3).unwrap();
        let p = PhysParams::default();
        let got = martingale_pressure_forcing(&v, &model, &f, &inc, &p, &d);
        let mut integrand = dot3(&inc.sigma_dw, &gw);
        integrand += &diffuse(&p.vertical_noise_diffusion(), &inc.sigma_dw.z, &d);
        let expect = projected_column_gradient(&integrand, &d);
        assert!((&got - &expect).max_abs() < 1e-11);
    }

    #[test]
    fn fused_step_term_matches_separate_terms() {
        let d = domain(8, 8, 8);
        let model = baroclinic_model(&d, 0.5);
        let v = sheared_velocity(&d);
        let f = Filter::new(FilterKernel::gaussian(0.4), &d).unwrap();
        let p = PhysParams::default();
        let inc = model.sample_increment(0.02, 1).unwrap();
        let w = total_vertical_velocity(&v, &model, &d);
        let fused = noise_pressure_step(&w, &model, &f, &inc, &p, &d);
        let mut sep = martingale_pressure_forcing(&v, &model, &f, &inc, &p, &d);
        sep.axpy(-inc.dt, &weak_pressure_gradient(&v, &model, &f, &d));
        assert!((&fused - &sep).max_abs() < 1e-12 * (1.0 + sep.max_abs()));
    }

    #[test]
    fn surface_pressure_is_invisible() {
        let d = domain(16, 16, 8);
        let g = d.grid();
        let integrand = ScalarField::from_fn(g, |x, y, z| x.sin() * z + (x + 2.0 * y).cos() * z * z);
        let pint = integrate_from_surface_centers(&integrand, g.dz());
        let ps = ScalarField::from_fn(g, |x, y, _| (3.0 * x).cos() + x.sin() * y.sin());
        let a = project_v(&d.spectral().grad_h(&pint), &d);
        let b = project_v(&d.spectral().grad_h(&(&pint + &ps)), &d);
        assert!((&a - &b).max_abs() < 1e-11);
    }

    #[test]
    fn weak_term_scales_with_upsilon_on_frozen_fields() {
        let d = domain(8, 8, 8);
        let f = Filter::new(FilterKernel::gaussian(0.3), &d).unwrap();
        let w = ScalarField::from_fn(d.grid(), |x, y, z| x.cos() * (PI * z).sin() + y.sin() * z);
        let one = weak_pressure_integrand(&w, &baroclinic_model(&d, 1.0), &f, &d);
        let four = weak_pressure_integrand(&w, &baroclinic_model(&d, 4.0), &f, &d);
        assert!((&four - &(&one * 4.0)).max_abs() <= 1e-10 * one.max_abs());
    }
}
