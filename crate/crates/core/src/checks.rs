//! Structural invariant suite run by the `check` command.

use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diagnostics::{fd_balance, regime_indicator};
use crate::domain::Domain;
use crate::error::Result;
use crate::field::{HVecField, ScalarField, State};
use crate::grid::Dims;
use crate::noise::{Component, ModeSpec, NoiseModel};
use crate::filter::{Filter, FilterKernel};
use crate::norms::l2_inner;
use crate::operators::vertical_velocity;
use crate::projectors::{barotropic, barotropic_divergence, baroclinic, project_v};
use crate::stepper::Simulation;
use crate::vertical::{broadcast_layer, depth_mean};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    /// Worst observed value.
    pub value: f64,
    /// Pass threshold (`value <= tol`); `None` for informational rows.
    pub tol: Option<f64>,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        match self.tol {
            Some(t) => self.value <= t,
            None => true,
        }
    }
}

fn check(name: &str, value: f64, tol: f64) -> CheckResult {
    CheckResult {
        name: name.into(),
        value,
        tol: Some(tol),
    }
}

fn info(name: &str, value: f64) -> CheckResult {
    CheckResult {
        name: name.into(),
        value,
        tol: None,
    }
}

fn random_field(d: &Domain, rng: &mut ChaCha8Rng) -> ScalarField {
    let dims = d.dims();
    ScalarField::from_vec(dims, (0..dims.len()).map(|_| rng.random_range(-1.0..1.0)).collect())
        .expect("shape")
}

fn h_inner(a: &HVecField, b: &HVecField, d: &Domain) -> f64 {
    l2_inner(&a.x, &b.x, d.grid()) + l2_inner(&a.y, &b.y, d.grid())
}

/// Worst-case residuals of the projector identities over `trials` random fields.
pub fn projector_checks(domain: &Domain, trials: usize, seed: u64) -> Vec<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut idem_a, mut annihilate, mut ortho, mut idem_p, mut ps, mut div, mut split) =
        (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let (mut w_top, mut w_bottom) = (0.0f64, 0.0f64);
    let nz = domain.dims().nz;
    for _ in 0..trials {
        let v = HVecField {
            x: random_field(domain, &mut rng),
            y: random_field(domain, &mut rng),
        };
        let scale = h_inner(&v, &v, domain);
        let a = barotropic(&v);
        let r = baroclinic(&v);
        idem_a = idem_a.max((&barotropic(&a) - &a).max_abs());
        annihilate = annihilate.max(baroclinic(&a).max_abs());
        ortho = ortho.max(h_inner(&a, &r, domain).abs() / scale);
        split = split.max((&(&a + &r) - &v).max_abs() / v.max_abs());
        let p = project_v(&v, domain);
        idem_p = idem_p.max((&project_v(&p, domain) - &p).max_abs());
        div = div.max(barotropic_divergence(&p, domain));
        let w = vertical_velocity(&p, domain);
        w_top = w_top.max(w.faces.layer(nz).iter().fold(0.0f64, |m, x| m.max(x.abs())));
        w_bottom = w_bottom.max(w.bottom_residual);
        let psurf = broadcast_layer(&depth_mean(&random_field(domain, &mut rng)), nz);
        ps = ps.max(project_v(&domain.spectral().grad_h(&psurf), domain).max_abs());
    }
    vec![
        check("barotropic projector idempotent", idem_a, 1e-12),
        check("baroclinic annihilates barotropic", annihilate, 1e-12),
        check("barotropic/baroclinic orthogonal (relative)", ortho, 1e-12),
        check("A v + R v = v (relative, ulps)", split, 8.0 * f64::EPSILON),
        check("P^v idempotent", idem_p, 1e-12),
        check("P^v grad_H p_s = 0", ps, 1e-11),
        check("barotropic divergence after P^v", div, 1e-10),
        check("w at lid", w_top, 0.0),
        check("w at bottom after P^v", w_bottom, 1e-10),
    ]
}

/// Full invariant suite for a configured simulation, stepping from its
/// initial preset.
pub fn run_invariant_suite(sim: &Simulation, trials: usize, seed: u64) -> Result<Vec<CheckResult>> {
    run_invariant_suite_from(sim, &sim.initial_state()?, trials, seed)
}

/// As [`run_invariant_suite`], taking one step from `init`.
pub fn run_invariant_suite_from(
    sim: &Simulation,
    init: &State,
    trials: usize,
    seed: u64,
) -> Result<Vec<CheckResult>> {
    let d = sim.domain();
    let model = sim.model();
    let mut out = projector_checks(d, trials, seed);

    out.push(check("mode divergence max |div phi_k|", model.max_mode_divergence(d), 1e-10));
    out.push(check("mode normal velocity on lid/bottom", model.boundary_normal_velocity(), 1e-10));
    let (before, after) = model.ito_stokes_residuals();
    out.push(info("Ito-Stokes divergence before projection", before * model.upsilon()));
    out.push(check("Ito-Stokes divergence after projection", after * model.upsilon(), 1e-10));

    let a = model.variance_tensor();
    let mut min_eig = 0.0f64;
    for n in 0..d.dims().len() {
        let e = Matrix3::from(a.matrix_at(n)).symmetric_eigenvalues();
        min_eig = min_eig.min(e.min());
    }
    out.push(check("variance tensor PSD (-min eigenvalue)", -min_eig + 0.0, 1e-12));

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let gauss = Filter::new(FilterKernel::gaussian(2.0 * d.grid().dx()), d)?;
    let (mut fd, mut fdk) = (0.0f64, 0.0f64);
    for _ in 0..trials.clamp(1, 20) {
        let q = random_field(d, &mut rng);
        fd = fd.max(fd_balance(&q, model, None, d).abs());
        fdk = fdk.max(fd_balance(&q, model, Some(&gauss), d).abs());
        fdk = fdk.max(fd_balance(&q, model, Some(sim.filter()), d).abs());
    }
    out.push(check("fluctuation-dissipation balance", fd, 1e-8));
    out.push(check("filtered fluctuation-dissipation balance", fdk, 1e-8));

    let (next, report) = sim.step(init)?;
    out.push(check("post-step barotropic divergence", report.barotropic_divergence, sim.config().tol_div));
    out.push(check(
        "post-step state finite",
        if next.non_finite_component().is_some() { 1.0 } else { 0.0 },
        0.0,
    ));
    if model.bhn() {
        let mut dev = 0.0f64;
        if let Some(h) = &report.horizontal_forcing {
            dev = dev.max(layer_deviation(&h.x)).max(layer_deviation(&h.y));
        }
        if let Some(s) = &report.sigma_dw {
            dev = dev.max(layer_deviation(&s.x)).max(layer_deviation(&s.y));
        }
        out.push(check("BHN noise forcing z-invariant (exact)", dev, 0.0));
    }
    let regime = regime_indicator(init, model, &sim.config().phys, d);
    out.push(info("regime: stochastic shear Upsilon (d_z phi^H)^2", regime.stochastic_shear));
    out.push(info("regime: alpha^2/Ri", regime.alpha2_over_ri));
    out.push(info("regime: flag (0 ok, 1 shear-free, 2 unstratified)", regime.flag as u8 as f64));
    Ok(out)
}

/// `max |f(k) - f(0)|` over layers.
pub fn layer_deviation(f: &ScalarField) -> f64 {
    let base = f.layer(0);
    (1..f.dims().nz)
        .flat_map(|k| f.layer(k).iter().zip(base).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max)
}

/// Random admissible mode specs within the band limit of `dims`.
/// With `bhn`, only depth-independent kinds are drawn.
pub fn random_modes(rng: &mut impl Rng, dims: Dims, count: usize, bhn: bool) -> Vec<ModeSpec> {
    let kx_max = ((dims.nx - 1) / 4) as i32;
    let ky_max = ((dims.ny - 1) / 4) as i32;
    let m_max = ((dims.nz - 1) / 2) as u32;
    (0..count)
        .map(|_| {
            let kx = rng.random_range(-kx_max..=kx_max);
            let ky = rng.random_range(0..=ky_max);
            let amp = rng.random_range(0.2..1.0);
            let phase = rng.random_range(0.0..std::f64::consts::TAU);
            let choice = if bhn { rng.random_range(0..2) } else { rng.random_range(0..3) };
            let spec = match choice {
                0 if kx != 0 || ky != 0 => ModeSpec::streamfunction(kx, ky, amp),
                0 | 1 => ModeSpec::uniform(if rng.random_bool(0.5) { Component::X } else { Component::Y }, amp),
                _ => {
                    let component = [Component::X, Component::Y, Component::Z][rng.random_range(0..3)];
                    let m = rng.random_range(1..=m_max.max(1));
                    let (kx, ky) = if kx == 0 && ky == 0 { (1, ky) } else { (kx, ky) };
                    ModeSpec::potential(component, kx, ky, m, amp)
                }
            };
            spec.with_phase(phase)
        })
        .collect()
}

/// Random state whose velocity satisfies the barotropic constraint, with
/// perturbations of size `amp` about the reference temperature and salinity.
pub fn random_state(domain: &Domain, p: &crate::params::PhysParams, amp: f64, rng: &mut ChaCha8Rng) -> State {
    let dims = domain.dims();
    let mut s = State::zeros(dims);
    let v = HVecField {
        x: &random_field(domain, rng) * amp,
        y: &random_field(domain, rng) * amp,
    };
    s.v_star = project_v(&v, domain);
    s.temp = random_field(domain, rng).map(|x| p.t_ref + amp * x);
    s.salt = random_field(domain, rng).map(|x| p.s_ref + amp * x);
    s
}

/// Sample statistics of `sigma dW` over `draws` increments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseStatistics {
    /// `|C - a dt|_F / |a dt|_F` over the whole field of pointwise 3x3 covariances.
    pub covariance_rel_frobenius: f64,
    /// Largest `|mean| / standard error` over points and components.
    pub max_mean_z: f64,
}

/// Draws increments for steps `0..draws` and compares their pointwise
/// covariance with `a dt`.
pub fn noise_statistics(model: &NoiseModel, dt: f64, draws: usize) -> Result<NoiseStatistics> {
    let n = model.dims().len();
    let mut sum = vec![[0.0f64; 3]; n];
    let mut sum2 = vec![[0.0f64; 6]; n];
    for step in 0..draws {
        let inc = model.sample_increment(dt, step as u64)?;
        let s = &inc.sigma_dw;
        let (x, y, z) = (s.x.as_slice(), s.y.as_slice(), s.z.as_slice());
        for p in 0..n {
            let v = [x[p], y[p], z[p]];
            let (m, c) = (&mut sum[p], &mut sum2[p]);
            for i in 0..3 {
                m[i] += v[i];
            }
            let mut q = 0;
            for i in 0..3 {
                for j in i..3 {
                    c[q] += v[i] * v[j];
                    q += 1;
                }
            }
        }
    }
    let nd = draws as f64;
    let a = model.variance_tensor();
    let (mut num, mut den, mut zmax) = (0.0, 0.0, 0.0f64);
    for p in 0..n {
        let target = a.matrix_at(p);
        let mean = sum[p].map(|v| v / nd);
        let mut q = 0;
        for i in 0..3 {
            for j in i..3 {
                let cov = (sum2[p][q] - nd * mean[i] * mean[j]) / (nd - 1.0);
                let w = if i == j { 1.0 } else { 2.0 };
                num += w * (cov - target[i][j] * dt).powi(2);
                den += w * (target[i][j] * dt).powi(2);
                if i == j && cov > 0.0 {
                    zmax = zmax.max(mean[i].abs() / (cov / nd).sqrt());
                }
                q += 1;
            }
        }
    }
    Ok(NoiseStatistics {
        covariance_rel_frobenius: if den > 0.0 { (num / den).sqrt() } else { 0.0 },
        max_mean_z: zmax,
    })
}
