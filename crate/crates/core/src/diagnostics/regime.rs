//! Stratification/shear regime indicator.

use crate::domain::Domain;
use crate::field::{ScalarField, State};
use crate::noise::NoiseModel;
use crate::params::PhysParams;
use crate::pressure::density;
use crate::vertical::interior_face_gradient;

/// Classification of the regime estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegimeFlag {
    Ok = 0,
    /// No resolved shear anywhere: `Ri` is infinite, ratios reported as 0.
    ShearFree = 1,
    /// No stable stratification: ratios reported as the sentinel `-1`.
    Unstratified = 2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeIndicator {
    /// Median buoyancy frequency squared over interior faces (1/s^2).
    pub n2_median: f64,
    /// Median of `N^2 / (d_z v)^2` over faces with non-zero shear.
    pub ri_median: f64,
    /// Aspect ratio squared `h^2 / |S_H|`.
    pub alpha2: f64,
    /// `alpha^2 / Ri`.
    pub alpha2_over_ri: f64,
    /// `Upsilon max_x sum_k |d_z phi_k^H|^2`.
    pub stochastic_shear: f64,
    /// `alpha^2 * stochastic_shear / N^2`.
    pub stochastic_ratio: f64,
    pub flag: RegimeFlag,
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Face squared shear `sum_c ((c_{k+1} - c_k)/dz)^2` of a set of fields.
fn face_shear2(fields: &[&ScalarField], dz: f64) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for f in fields {
        let g = interior_face_gradient(f, dz);
        if out.is_empty() {
            out = vec![0.0; g.len()];
        }
        for (o, x) in out.iter_mut().zip(g) {
            *o += x * x;
        }
    }
    out
}

/// `Upsilon max_x sum_k |d_z phi_k^H|^2` at interior faces; zero exactly for
/// depth-independent modes.
pub fn stochastic_shear(model: &NoiseModel, domain: &Domain) -> f64 {
    if model.is_empty() {
        return 0.0;
    }
    let dz = domain.dz();
    let mut acc: Vec<f64> = Vec::new();
    for phi in model.modes() {
        let s = face_shear2(&[&phi.x, &phi.y], dz);
        if acc.is_empty() {
            acc = s;
        } else {
            acc.iter_mut().zip(s).for_each(|(a, b)| *a += b);
        }
    }
    model.upsilon() * acc.into_iter().fold(0.0, f64::max)
}

pub fn regime_indicator(state: &State, model: &NoiseModel, p: &PhysParams, domain: &Domain) -> RegimeIndicator {
    let g = domain.grid();
    let dz = g.dz();
    let rho = density(&state.temp, &state.salt, p);
    let n2: Vec<f64> = interior_face_gradient(&rho, dz)
        .into_iter()
        .map(|drho| -p.g / p.rho0 * drho)
        .collect();
    let shear2 = face_shear2(&[&state.v_star.x, &state.v_star.y], dz);
    let n2_median = if n2.is_empty() { 0.0 } else { median(n2.clone()) };
    let alpha2 = g.depth() * g.depth() / g.surface_area();
    let stoch = stochastic_shear(model, domain);
    if !(n2_median > 0.0) {
        return RegimeIndicator {
            n2_median,
            ri_median: -1.0,
            alpha2,
            alpha2_over_ri: -1.0,
            stochastic_shear: stoch,
            stochastic_ratio: -1.0,
            flag: RegimeFlag::Unstratified,
        };
    }
    let ri: Vec<f64> = n2
        .iter()
        .zip(&shear2)
        .filter(|(_, &s)| s > 0.0)
        .map(|(&n, &s)| n / s)
        .collect();
    let stochastic_ratio = alpha2 * stoch / n2_median;
    if ri.is_empty() {
        return RegimeIndicator {
            n2_median,
            ri_median: f64::INFINITY,
            alpha2,
            alpha2_over_ri: 0.0,
            stochastic_shear: stoch,
            stochastic_ratio,
            flag: RegimeFlag::ShearFree,
        };
    }
    let ri_median = median(ri);
    RegimeIndicator {
        n2_median,
        ri_median,
        alpha2,
        alpha2_over_ri: alpha2 / ri_median,
        stochastic_shear: stoch,
        stochastic_ratio,
        flag: RegimeFlag::Ok,
    }
}
