//! Norm and energy monitors, structural residuals, the regime indicator and
//! the vanishing-noise convergence experiment.

pub mod convergence;
pub mod regime;

use std::io::Write;

use crate::domain::Domain;
use crate::field::{HVecField, ScalarField, State};
use crate::filter::{filtered_variance_apply, Filter};
use crate::noise::NoiseModel;
use crate::norms::{gradient_inner, inner_v, l2_inner};
use crate::operators::{diffuse, div3, dot3, grad3, vertical_velocity};
use crate::params::PhysParams;
use crate::projectors::{barotropic, barotropic_divergence, baroclinic};
use crate::stepper::Simulation;
use crate::vertical::{centered_dz, ColumnBc};

pub use convergence::{fit_exponent, noise_convergence_experiment, ConvergenceRow, ConvergenceTable};
pub use regime::{regime_indicator, RegimeFlag, RegimeIndicator};

/// Norms appearing on the left of the barotropic, vertical-gradient and
/// baroclinic estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateQuantities {
    pub norm_h: f64,
    pub norm_v: f64,
    /// `||A v||_V`.
    pub barotropic_norm_v: f64,
    /// `||A v||_H` and `||R v||_H`, whose squares add up to `||v||_H^2`.
    pub barotropic_norm_h: f64,
    pub baroclinic_norm_h: f64,
    pub velocity_norm_h: f64,
    pub dz_v_norm_h: f64,
    pub dz_v_norm_v: f64,
    /// `||R v||_{L^4}`.
    pub baroclinic_l4: f64,
    /// `int |R v|^2 |grad R v|^2`.
    pub cross_term: f64,
}

fn h_norm2(v: &HVecField, domain: &Domain) -> f64 {
    let g = domain.grid();
    l2_inner(&v.x, &v.x, g) + l2_inner(&v.y, &v.y, g)
}

fn v_norm2(v: &HVecField, domain: &Domain) -> f64 {
    gradient_inner(&v.x, &v.x, domain) + gradient_inner(&v.y, &v.y, domain)
}

/// Centred `d_z v` with the velocity ghosts (no-slip bottom, free-slip lid).
fn dz_velocity(v: &HVecField, domain: &Domain) -> HVecField {
    let (b, t) = ColumnBc::VELOCITY.ghosts();
    HVecField {
        x: centered_dz(&v.x, domain.dz(), b, t),
        y: centered_dz(&v.y, domain.dz(), b, t),
    }
}

pub fn estimate_quantities(state: &State, domain: &Domain, p: &PhysParams) -> EstimateQuantities {
    let g = domain.grid();
    let v = &state.v_star;
    let vbar = barotropic(v);
    let vt = baroclinic(v);
    let dzv = dz_velocity(v, domain);

    let sp = domain.spectral();
    let gx = sp.grad_h(&vt.x);
    let gy = sp.grad_h(&vt.y);
    let dzt = dz_velocity(&vt, domain);
    let mut l4 = 0.0;
    let mut cross = 0.0;
    for n in 0..g.dims().len() {
        let m2 = vt.x.as_slice()[n].powi(2) + vt.y.as_slice()[n].powi(2);
        let grad2 = gx.x.as_slice()[n].powi(2)
            + gx.y.as_slice()[n].powi(2)
            + gy.x.as_slice()[n].powi(2)
            + gy.y.as_slice()[n].powi(2)
            + dzt.x.as_slice()[n].powi(2)
            + dzt.y.as_slice()[n].powi(2);
        l4 += m2 * m2;
        cross += m2 * grad2;
    }
    let vol = g.cell_volume();
    let norm_h2: f64 = state.components().iter().map(|c| l2_inner(c, c, g)).sum();
    EstimateQuantities {
        norm_h: norm_h2.sqrt(),
        norm_v: inner_v(state, state, domain, p).unwrap_or(f64::NAN).max(0.0).sqrt(),
        barotropic_norm_v: v_norm2(&vbar, domain).sqrt(),
        barotropic_norm_h: h_norm2(&vbar, domain).sqrt(),
        baroclinic_norm_h: h_norm2(&vt, domain).sqrt(),
        velocity_norm_h: h_norm2(v, domain).sqrt(),
        dz_v_norm_h: h_norm2(&dzv, domain).sqrt(),
        dz_v_norm_v: v_norm2(&dzv, domain).sqrt(),
        baroclinic_l4: (l4 * vol).powf(0.25),
        cross_term: cross * vol,
    }
}

/// Relative residual of `sum_k Upsilon ||K*(phi_k . grad q)||^2 + 2 (1/2 div(a^K grad q), q)`.
///
/// With `filter = None` the unfiltered tensor `a` is used.
pub fn fd_balance(q: &ScalarField, model: &NoiseModel, filter: Option<&Filter>, domain: &Domain) -> f64 {
    if model.is_silent() {
        return 0.0;
    }
    let g = domain.grid();
    let gq = grad3(q, domain);
    let mut backscatter = 0.0;
    for phi in model.modes() {
        let mut s = dot3(phi, &gq);
        if let Some(f) = filter {
            s = f.apply(&s, domain);
        }
        backscatter += model.upsilon() * l2_inner(&s, &s, g);
    }
    let flux = match filter {
        Some(f) => filtered_variance_apply(model, f, &gq, domain),
        None => model.variance_tensor().apply(&gq),
    };
    let diffusion = l2_inner(&div3(&flux, domain), q, g);
    let r = backscatter + diffusion;
    if backscatter == 0.0 {
        r.abs()
    } else {
        r / backscatter
    }
}

/// Energy exchanged by each mechanism, summed over the four components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyLedger {
    /// `sum_k Upsilon ||phi_k . grad U||_H^2`.
    pub noise_input: f64,
    /// `(a grad U, grad U)_H`.
    pub stochastic_dissipation: f64,
    /// `(A U, U)_H`.
    pub molecular_dissipation: f64,
}

pub fn energy_ledger(state: &State, model: &NoiseModel, p: &PhysParams, domain: &Domain) -> EnergyLedger {
    let g = domain.grid();
    let closures = [
        p.velocity_diffusion(),
        p.velocity_diffusion(),
        p.temperature_diffusion(),
        p.salinity_diffusion(),
    ];
    let mut out = EnergyLedger {
        noise_input: 0.0,
        stochastic_dissipation: 0.0,
        molecular_dissipation: 0.0,
    };
    for (c, d) in state.components().into_iter().zip(closures) {
        out.molecular_dissipation += l2_inner(&diffuse(&d, c, domain), c, g);
        if model.is_silent() {
            continue;
        }
        let gq = grad3(c, domain);
        for phi in model.modes() {
            let s = dot3(phi, &gq);
            out.noise_input += model.upsilon() * l2_inner(&s, &s, g);
        }
        let f = model.variance_tensor().apply(&gq);
        out.stochastic_dissipation += l2_inner(&f.x, &gq.x, g) + l2_inner(&f.y, &gq.y, g) + l2_inner(&f.z, &gq.z, g);
    }
    out
}

/// One row of the diagnostics CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub step: u64,
    pub q: EstimateQuantities,
    pub barotropic_divergence: f64,
    pub w_bottom: f64,
    pub fd_balance: f64,
    pub fd_balance_filtered: f64,
    pub regime: RegimeIndicator,
    pub energy: EnergyLedger,
}

pub const CSV_COLUMNS: [&str; 24] = [
    "t",
    "step",
    "norm_h",
    "norm_v",
    "barotropic_norm_v",
    "barotropic_norm_h",
    "baroclinic_norm_h",
    "dz_v_norm_h",
    "dz_v_norm_v",
    "baroclinic_l4",
    "cross_term",
    "barotropic_divergence",
    "w_bottom",
    "fd_balance",
    "fd_balance_filtered",
    "n2_median",
    "ri_median",
    "alpha2_over_ri",
    "stochastic_shear",
    "stochastic_ratio",
    "regime_flag",
    "energy_noise_input",
    "energy_stochastic_dissipation",
    "energy_molecular_dissipation",
];

impl DiagnosticsRecord {
    pub fn compute(sim: &Simulation, state: &State) -> Self {
        let d = sim.domain();
        let p = &sim.config().phys;
        let model = sim.model();
        let filter = (!sim.filter().is_identity()).then(|| sim.filter());
        let fdb = fd_balance(&state.temp, model, None, d);
        DiagnosticsRecord {
            t: state.t,
            step: state.step_index,
            q: estimate_quantities(state, d, p),
            barotropic_divergence: barotropic_divergence(&state.v_star, d),
            w_bottom: vertical_velocity(&state.v_star, d).bottom_residual,
            fd_balance: fdb,
            fd_balance_filtered: match filter {
                Some(f) => fd_balance(&state.temp, model, Some(f), d),
                None => fdb,
            },
            regime: regime_indicator(state, model, p, d),
            energy: energy_ledger(state, model, p, d),
        }
    }

    pub fn values(&self) -> [String; 24] {
        let q = &self.q;
        let r = &self.regime;
        let e = &self.energy;
        [
            num(self.t),
            self.step.to_string(),
            num(q.norm_h),
            num(q.norm_v),
            num(q.barotropic_norm_v),
            num(q.barotropic_norm_h),
            num(q.baroclinic_norm_h),
            num(q.dz_v_norm_h),
            num(q.dz_v_norm_v),
            num(q.baroclinic_l4),
            num(q.cross_term),
            num(self.barotropic_divergence),
            num(self.w_bottom),
            num(self.fd_balance),
            num(self.fd_balance_filtered),
            num(r.n2_median),
            num(r.ri_median),
            num(r.alpha2_over_ri),
            num(r.stochastic_shear),
            num(r.stochastic_ratio),
            (r.flag as u8).to_string(),
            num(e.noise_input),
            num(e.stochastic_dissipation),
            num(e.molecular_dissipation),
        ]
    }

    /// True when every numeric entry is finite (infinite `Ri` is allowed).
    pub fn is_finite(&self) -> bool {
        let q = &self.q;
        [
            q.norm_h,
            q.norm_v,
            q.barotropic_norm_v,
            q.dz_v_norm_h,
            q.dz_v_norm_v,
            q.baroclinic_l4,
            q.cross_term,
            self.barotropic_divergence,
            self.w_bottom,
            self.fd_balance,
            self.fd_balance_filtered,
            self.regime.alpha2_over_ri,
            self.regime.stochastic_ratio,
            self.energy.noise_input,
            self.energy.stochastic_dissipation,
            self.energy.molecular_dissipation,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

/// Shortest round-trip representation in scientific notation.
fn num(v: f64) -> String {
    format!("{v:e}")
}

/// Writes `records` as CSV with a header row.
pub fn write_csv<W: Write>(mut out: W, records: &[DiagnosticsRecord]) -> std::io::Result<()> {
    writeln!(out, "{}", CSV_COLUMNS.join(","))?;
    for r in records {
        writeln!(out, "{}", r.values().join(","))?;
    }
    Ok(())
}
