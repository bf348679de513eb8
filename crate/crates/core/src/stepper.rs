//! Euler-Maruyama integration of `U* = (v*, T, S)` under the three
//! hydrostatic closures.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::field::{HVecField, ScalarField, State, Vec3Field};
use crate::filter::{Filter, FilterKernel};
use crate::grid::{Grid, GridSpec};
use crate::init::InitSpec;
use crate::noise::{build_modes, ModeSpec, NoiseIncrement, NoiseModel};
use crate::operators::{
    advect_with_w, coriolis, diffuse, dot3, grad3, stochastic_diffusion, vertical_velocity,
};
use crate::params::{DiffusionParams, PhysParams};
use crate::pressure::{hydrostatic_gradient, noise_pressure_step, total_vertical_velocity};
use crate::projectors::{barotropic_divergence, project_v};
use crate::vertical::{ColumnBc, Tridiag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Closure {
    /// No noise at all.
    Deterministic,
    /// Transport noise with a depth-independent noise pressure.
    Strong,
    /// Transport noise with the filtered weak-hydrostatic pressure terms.
    WeakFiltered,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerticalScheme {
    Explicit,
    Implicit,
}

/// Everything needed to run one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub grid: GridSpec,
    pub phys: PhysParams,
    pub dt: f64,
    pub t_end: f64,
    /// Diagnostics cadence in steps.
    pub output_every: u64,
    pub closure: Closure,
    pub kernel: FilterKernel,
    pub upsilon: f64,
    pub bhn: bool,
    pub modes: Vec<ModeSpec>,
    pub tol_div: f64,
    pub vertical_diffusion: VerticalScheme,
    pub seed: u64,
    pub init: InitSpec,
}

pub const DEFAULT_TOL_DIV: f64 = 1e-9;

impl SimConfig {
    /// Checks ranges and, for explicit diffusion, the linear stability bound.
    pub fn validate(&self) -> Result<Grid> {
        let grid = self.grid.build()?;
        self.phys.validate()?;
        self.kernel.validate()?;
        self.init.validate()?;
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt = {} must be > 0", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::InvalidParameter(format!("t_end = {} must be >= 0", self.t_end)));
        }
        if !(self.tol_div.is_finite() && self.tol_div > 0.0) {
            return Err(Error::InvalidParameter(format!("tol_div = {} must be > 0", self.tol_div)));
        }
        if !(self.upsilon.is_finite() && self.upsilon >= 0.0) {
            return Err(Error::InvalidParameter(format!("upsilon = {} must be >= 0", self.upsilon)));
        }
        if self.output_every == 0 {
            return Err(Error::InvalidParameter("output_every must be >= 1".into()));
        }
        self.n_steps()?;
        if self.vertical_diffusion == VerticalScheme::Explicit {
            let p = &self.phys;
            for (name, d) in [
                ("velocity", p.velocity_diffusion()),
                ("temperature", p.temperature_diffusion()),
                ("salinity", p.salinity_diffusion()),
            ] {
                let bound = explicit_stability_number(&d, &grid, self.dt);
                if bound > 2.0 {
                    return Err(Error::InvalidParameter(format!(
                        "explicit {name} diffusion unstable: dt * lambda_max = {bound:.3} > 2"
                    )));
                }
            }
        }
        Ok(grid)
    }

    /// Number of steps to reach `t_end`; `t_end` must be a whole number of steps.
    pub fn n_steps(&self) -> Result<u64> {
        let n = (self.t_end / self.dt).round();
        if (n * self.dt - self.t_end).abs() > 1e-9 * self.t_end.max(self.dt) {
            return Err(Error::InvalidParameter(format!(
                "t_end = {} is not a whole number of steps of dt = {}",
                self.t_end, self.dt
            )));
        }
        Ok(n as u64)
    }

    /// Whether any noise term can be non-zero.
    pub fn has_noise(&self) -> bool {
        self.closure != Closure::Deterministic && self.upsilon > 0.0 && !self.modes.is_empty()
    }
}

/// `dt * lambda_max` of the explicit diffusion operator, by Gershgorin on the
/// column stencil plus the largest spectral horizontal eigenvalue.
pub fn explicit_stability_number(d: &DiffusionParams, grid: &Grid, dt: f64) -> f64 {
    let t = Tridiag::diffusion(grid.nz(), grid.dz(), d.nu, d.bc);
    let vert = (0..t.len())
        .map(|k| t.diag[k] + t.lower[k].abs() * (k > 0) as u8 as f64 + t.upper[k].abs() * (k + 1 < t.len()) as u8 as f64)
        .fold(0.0, f64::max);
    let kmax = |n: usize, l: f64| {
        let m = if n % 2 == 0 { (n / 2).saturating_sub(1) } else { n / 2 };
        2.0 * std::f64::consts::PI * m as f64 / l
    };
    let horiz = d.mu * (kmax(grid.nx(), grid.lx()).powi(2) + kmax(grid.ny(), grid.ly()).powi(2));
    dt * (horiz + vert)
}

/// Per-step quantities exposed for monitoring.
#[derive(Debug, Clone)]
pub struct StepReport {
    pub step: u64,
    pub courant: f64,
    /// `max |w(-h)|` of the pre-step velocity.
    pub w_bottom: f64,
    /// Barotropic divergence after the final projection.
    pub barotropic_divergence: f64,
    pub sigma_dw: Option<Vec3Field>,
    /// `-A(sigma^H dW) - Gamma(sigma^H dW)` on the velocity.
    pub horizontal_forcing: Option<HVecField>,
}

/// Constant operators of the noise, evaluated once per model.
#[derive(Debug, Clone)]
struct NoiseTerms {
    v_s: HVecField,
    grad_v_s: [Vec3Field; 2],
    /// `-1/2 div(a grad v_s) + A v_s + Gamma v_s`.
    f_sigma_const: HVecField,
    /// `-(A + Gamma)(phi_k^H)` for each mode.
    forcing_modes: Vec<HVecField>,
}

impl NoiseTerms {
    fn new(model: &NoiseModel, phys: &PhysParams, domain: &Domain) -> Self {
        let v_s = model.ito_stokes_horizontal();
        let a = model.variance_tensor();
        let dv = phys.velocity_diffusion();
        let mut f = HVecField {
            x: diffuse(&dv, &v_s.x, domain),
            y: diffuse(&dv, &v_s.y, domain),
        };
        f += &coriolis(&v_s, phys.f);
        f.x -= &stochastic_diffusion(a, &v_s.x, domain);
        f.y -= &stochastic_diffusion(a, &v_s.y, domain);
        let noise_diff = DiffusionParams {
            bc: ColumnBc::NEUMANN,
            ..dv
        };
        let forcing_modes = model
            .modes()
            .iter()
            .map(|phi| {
                let h = phi.horizontal();
                let mut r = HVecField {
                    x: diffuse(&noise_diff, &h.x, domain),
                    y: diffuse(&noise_diff, &h.y, domain),
                };
                r += &coriolis(&h, phys.f);
                r *= -1.0;
                r
            })
            .collect();
        NoiseTerms {
            grad_v_s: [grad3(&v_s.x, domain), grad3(&v_s.y, domain)],
            v_s,
            f_sigma_const: f,
            forcing_modes,
        }
    }
}

/// A configured model ready to step.
#[derive(Debug, Clone)]
pub struct Simulation {
    config: SimConfig,
    domain: Domain,
    model: NoiseModel,
    filter: Filter,
    noise: Option<NoiseTerms>,
}

impl Simulation {
    pub fn new(config: SimConfig) -> Result<Self> {
        let grid = config.validate()?;
        let domain = Domain::new(grid);
        let model = build_modes(&config.modes, config.upsilon, config.bhn, config.seed, &domain)?;
        Self::assemble(config, domain, model)
    }

    fn assemble(config: SimConfig, domain: Domain, model: NoiseModel) -> Result<Self> {
        let filter = Filter::new(config.kernel, &domain)?;
        let active = config.closure != Closure::Deterministic && !model.is_silent();
        let noise = active.then(|| NoiseTerms::new(&model, &config.phys, &domain));
        Ok(Simulation {
            config,
            domain,
            model,
            filter,
            noise,
        })
    }

    /// Same grid and modes with a different noise scaling and seed; the
    /// modes are not rebuilt.
    pub fn with_noise(&self, upsilon: f64, seed: u64) -> Result<Self> {
        let model = self.model.with_upsilon(upsilon)?.with_seed(seed);
        let config = SimConfig {
            upsilon,
            seed,
            ..self.config.clone()
        };
        Self::assemble(config, self.domain.clone(), model)
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }
    pub fn domain(&self) -> &Domain {
        &self.domain
    }
    pub fn model(&self) -> &NoiseModel {
        &self.model
    }
    pub fn filter(&self) -> &Filter {
        &self.filter
    }
    /// True when noise terms are evaluated in `step`.
    pub fn noise_active(&self) -> bool {
        self.noise.is_some()
    }

    pub fn initial_state(&self) -> Result<State> {
        self.config.init.build(self.domain.grid(), &self.config.phys)
    }

    /// `F_sigma(U*)`: drift corrections for `(v*, T, S)`.
    pub fn f_sigma(&self, u: &State) -> (HVecField, ScalarField, ScalarField) {
        let dims = u.dims();
        let Some(nt) = &self.noise else {
            return (HVecField::zeros(dims), ScalarField::zeros(dims), ScalarField::zeros(dims));
        };
        let d = &self.domain;
        let a = self.model.variance_tensor();
        let w = vertical_velocity(&u.v_star, d).centers;
        let vg = ColumnBc::VELOCITY.ghosts();
        let mut fv = HVecField {
            x: advect_with_w(&u.v_star, &w, &nt.v_s.x, vg, d),
            y: advect_with_w(&u.v_star, &w, &nt.v_s.y, vg, d),
        };
        fv += &nt.f_sigma_const;
        fv.x -= &stochastic_diffusion(a, &u.v_star.x, d);
        fv.y -= &stochastic_diffusion(a, &u.v_star.y, d);
        let ft = &stochastic_diffusion(a, &u.temp, d) * -1.0;
        let fs = &stochastic_diffusion(a, &u.salt, d) * -1.0;
        (fv, ft, fs)
    }

    /// `G_sigma(U*) dW` for a given increment.
    pub fn g_sigma(&self, u: &State, inc: &NoiseIncrement) -> (HVecField, ScalarField, ScalarField) {
        let dims = u.dims();
        let Some(nt) = &self.noise else {
            return (HVecField::zeros(dims), ScalarField::zeros(dims), ScalarField::zeros(dims));
        };
        let d = &self.domain;
        let s = &inc.sigma_dw;
        let mut gv = self.horizontal_forcing(nt, inc);
        gv.x -= &dot3(s, &grad3(&u.v_star.x, d));
        gv.y -= &dot3(s, &grad3(&u.v_star.y, d));
        gv.x -= &dot3(s, &nt.grad_v_s[0]);
        gv.y -= &dot3(s, &nt.grad_v_s[1]);
        let gt = &dot3(s, &grad3(&u.temp, d)) * -1.0;
        let gs = &dot3(s, &grad3(&u.salt, d)) * -1.0;
        (gv, gt, gs)
    }

    fn horizontal_forcing(&self, nt: &NoiseTerms, inc: &NoiseIncrement) -> HVecField {
        let mut out = HVecField::zeros(self.domain.dims());
        let s = self.model.upsilon().sqrt();
        for (f, &b) in nt.forcing_modes.iter().zip(&inc.gaussians) {
            out.axpy(s * b, f);
        }
        out
    }

    /// Advective Courant number `dt max(|u|/dx + |v|/dy + |w|/dz)`.
    pub fn courant(&self, v: &HVecField, w: &ScalarField) -> f64 {
        let g = self.domain.grid();
        let (dx, dy, dz) = (g.dx(), g.dy(), g.dz());
        let (x, y, ws) = (v.x.as_slice(), v.y.as_slice(), w.as_slice());
        let m = (0..x.len())
            .map(|n| x[n].abs() / dx + y[n].abs() / dy + ws[n].abs() / dz)
            .fold(0.0, f64::max);
        m * self.config.dt
    }

    /// One step, sampling the increment for `state.step_index`.
    pub fn step(&self, state: &State) -> Result<(State, StepReport)> {
        if self.noise.is_some() {
            let inc = self.model.sample_increment(self.config.dt, state.step_index)?;
            self.step_with_increment(state, Some(&inc))
        } else {
            self.step_with_increment(state, None)
        }
    }

    /// One step with an externally supplied increment (ignored when the
    /// noise is inactive).
    pub fn step_with_increment(&self, state: &State, inc: Option<&NoiseIncrement>) -> Result<(State, StepReport)> {
        let d = &self.domain;
        state.check_dims(d.dims())?;
        let cfg = &self.config;
        let p = &cfg.phys;
        let dt = cfg.dt;
        let v = &state.v_star;
        let wv = vertical_velocity(v, d);
        let courant = self.courant(v, &wv.centers);
        if !(courant <= 1.0) {
            return Err(Error::Cfl {
                step: state.step_index,
                courant,
            });
        }
        let w = &wv.centers;
        let vg = ColumnBc::VELOCITY.ghosts();
        let tg = p.temperature_diffusion().bc.ghosts();
        let sg = ColumnBc::NEUMANN.ghosts();

        // deterministic drift
        let mut xv = hydrostatic_gradient(&state.temp, &state.salt, p, d);
        xv.axpy(-0.5, &coriolis(v, p.f));
        xv.x -= &advect_with_w(v, w, &v.x, vg, d);
        xv.y -= &advect_with_w(v, w, &v.y, vg, d);
        let mut xt = &advect_with_w(v, w, &state.temp, tg, d) * -1.0;
        let mut xs = &advect_with_w(v, w, &state.salt, sg, d) * -1.0;
        if cfg.vertical_diffusion == VerticalScheme::Explicit {
            let dv = p.velocity_diffusion();
            xv.x -= &diffuse(&dv, &v.x, d);
            xv.y -= &diffuse(&dv, &v.y, d);
            xt -= &diffuse(&p.temperature_diffusion(), &state.temp, d);
            xs -= &diffuse(&p.salinity_diffusion(), &state.salt, d);
        }

        let mut noise_report = None;
        let mut noise_incr = None;
        if let (Some(nt), Some(inc)) = (&self.noise, inc) {
            let (fv, ft, fs) = self.f_sigma(state);
            xv -= &fv;
            xt -= &ft;
            xs -= &fs;
            let (gv, gt, gs) = self.g_sigma(state, inc);
            let mut rv = gv;
            if cfg.closure == Closure::WeakFiltered {
                let wt = total_vertical_velocity(v, &self.model, d);
                rv += &noise_pressure_step(&wt, &self.model, &self.filter, inc, p, d);
            }
            noise_incr = Some((rv, gt, gs));
            noise_report = Some((inc.sigma_dw.clone(), self.horizontal_forcing(nt, inc)));
        }

        let mut nv = v.clone();
        nv.axpy(dt, &xv);
        let mut nt_ = state.temp.clone();
        nt_.axpy(dt, &xt);
        let mut ns = state.salt.clone();
        ns.axpy(dt, &xs);
        if let Some((rv, gt, gs)) = &noise_incr {
            nv += rv;
            nt_ += gt;
            ns += gs;
        }
        let mut nv = project_v(&coriolis_solve(&nv, p.f * dt), d);
        if cfg.vertical_diffusion == VerticalScheme::Implicit {
            let dv = p.velocity_diffusion();
            let (x, y) = implicit_diffusion_pair(&nv.x, &nv.y, &dv, &dv, dt, d);
            nv = project_v(&HVecField { x, y }, d);
            let (t, s) =
                implicit_diffusion_pair(&nt_, &ns, &p.temperature_diffusion(), &p.salinity_diffusion(), dt, d);
            nt_ = t;
            ns = s;
        }
        let next = State {
            v_star: nv,
            temp: nt_,
            salt: ns,
            t: state.t + dt,
            step_index: state.step_index + 1,
        };
        if let Some(field) = next.non_finite_component() {
            return Err(Error::NonFinite {
                step: next.step_index,
                field,
            });
        }
        let residual = barotropic_divergence(&next.v_star, d);
        if residual > cfg.tol_div {
            return Err(Error::Divergence {
                step: next.step_index,
                residual,
                tol: cfg.tol_div,
            });
        }
        let (sigma_dw, horizontal_forcing) = match noise_report {
            Some((s, h)) => (Some(s), Some(h)),
            None => (None, None),
        };
        Ok((
            next,
            StepReport {
                step: state.step_index,
                courant,
                w_bottom: wv.bottom_residual,
                barotropic_divergence: residual,
                sigma_dw,
                horizontal_forcing,
            },
        ))
    }

    /// Steps from `state` to `t_end`, calling `observe` on the initial state,
    /// every `output_every` steps, and on the final state.
    pub fn run_from(
        &self,
        mut state: State,
        mut observe: impl FnMut(&State, Option<&StepReport>) -> Result<()>,
    ) -> Result<State> {
        let n = self.config.n_steps()?;
        observe(&state, None)?;
        for i in 1..=n {
            let (next, report) = self.step(&state)?;
            state = next;
            if i % self.config.output_every == 0 || i == n {
                observe(&state, Some(&report))?;
            }
        }
        Ok(state)
    }
}

/// Solves `v + (tau / 2) Gamma_1 v = rhs` pointwise, where `Gamma_1` is the
/// unit-rate rotation. Together with the explicit half of the Coriolis term
/// this is the trapezoidal rule, which preserves `|v|` for inertial motion.
fn coriolis_solve(rhs: &HVecField, tau: f64) -> HVecField {
    let c = 0.5 * tau;
    let inv = 1.0 / (1.0 + c * c);
    HVecField {
        x: rhs.x.zip_map(&rhs.y, |a, b| (a + c * b) * inv),
        y: rhs.y.zip_map(&rhs.x, |b, a| (b - c * a) * inv),
    }
}

/// Builds and runs a configuration from its initial preset, returning the
/// final state and the states seen at every output time.
pub fn run(config: &SimConfig) -> Result<(State, Vec<State>)> {
    let sim = Simulation::new(config.clone())?;
    let init = sim.initial_state()?;
    let mut out = Vec::new();
    let fin = sim.run_from(init, |s, _| {
        out.push(s.clone());
        Ok(())
    })?;
    Ok((fin, out))
}

/// Solves `(I + dt (-mu Delta_H + A_z)) q = rhs` for two fields column by
/// column in horizontal spectral space.
pub fn implicit_diffusion_pair(
    a: &ScalarField,
    b: &ScalarField,
    pa: &DiffusionParams,
    pb: &DiffusionParams,
    dt: f64,
    domain: &Domain,
) -> (ScalarField, ScalarField) {
    let sp = domain.spectral();
    let (mut sa, mut sb) = sp.forward_pair(a, b);
    let dims = a.dims();
    let nz = dims.nz;
    let ta = Tridiag::diffusion(nz, domain.dz(), pa.nu, pa.bc);
    let tb = Tridiag::diffusion(nz, domain.dz(), pb.nu, pb.bc);
    let mut col = vec![Complex64::new(0.0, 0.0); nz];
    let mut work = vec![0.0; nz];
    let mut m = Tridiag {
        lower: vec![0.0; nz],
        diag: vec![0.0; nz],
        upper: vec![0.0; nz],
    };
    for (spec, t, p) in [(&mut sa, &ta, pa), (&mut sb, &tb, pb)] {
        for k in 0..nz {
            m.lower[k] = dt * t.lower[k];
            m.upper[k] = dt * t.upper[k];
        }
        for i in 0..dims.nx {
            for j in 0..dims.ny {
                let k2 = sp.kx()[i].powi(2) + sp.ky()[j].powi(2);
                let shift = 1.0 + dt * p.mu * k2;
                for k in 0..nz {
                    m.diag[k] = shift + dt * t.diag[k];
                    col[k] = spec.as_slice()[spec.idx(i, j, k)];
                }
                m.solve(&mut col, &mut work);
                for k in 0..nz {
                    let n = spec.idx(i, j, k);
                    spec.as_mut_slice()[n] = col[k];
                }
            }
        }
    }
    sp.inverse_pair(&sa, &sb)
}

/// A plain deterministic primitive-equation step, written independently of
/// [`Simulation`] for cross-checking the zero-noise limit.
pub mod reference {
    use super::*;

    fn implicit_column_solve(q: &ScalarField, d: &DiffusionParams, dt: f64, domain: &Domain) -> ScalarField {
        let sp = domain.spectral();
        let mut s = sp.forward(q);
        let dims = q.dims();
        let base = Tridiag::diffusion(dims.nz, domain.dz(), d.nu, d.bc);
        let mut work = vec![0.0; dims.nz];
        for i in 0..dims.nx {
            for j in 0..dims.ny {
                let k2 = sp.kx()[i].powi(2) + sp.ky()[j].powi(2);
                let m = base.shifted(1.0 + dt * d.mu * k2, dt);
                let mut col: Vec<Complex64> = (0..dims.nz).map(|k| s.as_slice()[s.idx(i, j, k)]).collect();
                m.solve(&mut col, &mut work);
                for (k, c) in col.into_iter().enumerate() {
                    let n = s.idx(i, j, k);
                    s.as_mut_slice()[n] = c;
                }
            }
        }
        sp.inverse(&s)
    }

    /// `U_{n+1}` of the deterministic primitive equations.
    pub fn primitive_step(state: &State, domain: &Domain, p: &PhysParams, dt: f64, scheme: VerticalScheme) -> State {
        let v = &state.v_star;
        let w = vertical_velocity(v, domain).centers;
        let tbc = p.temperature_diffusion().bc;
        let adv = |q: &ScalarField, bc: ColumnBc| advect_with_w(v, &w, q, bc.ghosts(), domain);
        let hydro = hydrostatic_gradient(&state.temp, &state.salt, p, domain);
        // Trapezoidal Coriolis: half of -f (-v_y, v_x) at the old level here.
        let cor = coriolis(v, 0.5 * p.f);
        let mut dvx = &(&hydro.x - &cor.x) - &adv(&v.x, ColumnBc::VELOCITY);
        let mut dvy = &(&hydro.y - &cor.y) - &adv(&v.y, ColumnBc::VELOCITY);
        let mut dtt = &adv(&state.temp, tbc) * -1.0;
        let mut dss = &adv(&state.salt, ColumnBc::NEUMANN) * -1.0;
        if scheme == VerticalScheme::Explicit {
            dvx -= &diffuse(&p.velocity_diffusion(), &v.x, domain);
            dvy -= &diffuse(&p.velocity_diffusion(), &v.y, domain);
            dtt -= &diffuse(&p.temperature_diffusion(), &state.temp, domain);
            dss -= &diffuse(&p.salinity_diffusion(), &state.salt, domain);
        }
        let rx = &v.x + &(&dvx * dt);
        let ry = &v.y + &(&dvy * dt);
        // New-level half: (1, -c; c, 1) (u, v) = (rx, ry) with c = f dt / 2.
        let c = 0.5 * p.f * dt;
        let det = 1.0 + c * c;
        let vx = rx.zip_map(&ry, |a, b| (a + c * b) / det);
        let vy = ry.zip_map(&rx, |b, a| (b - c * a) / det);
        let mut nv = project_v(&HVecField { x: vx, y: vy }, domain);
        let mut t = &state.temp + &(&dtt * dt);
        let mut s = &state.salt + &(&dss * dt);
        if scheme == VerticalScheme::Implicit {
            let dv = p.velocity_diffusion();
            nv = project_v(
                &HVecField {
                    x: implicit_column_solve(&nv.x, &dv, dt, domain),
                    y: implicit_column_solve(&nv.y, &dv, dt, domain),
                },
                domain,
            );
            t = implicit_column_solve(&t, &p.temperature_diffusion(), dt, domain);
            s = implicit_column_solve(&s, &p.salinity_diffusion(), dt, domain);
        }
        State {
            v_star: nv,
            temp: t,
            salt: s,
            t: state.t + dt,
            step_index: state.step_index + 1,
        }
    }
}
