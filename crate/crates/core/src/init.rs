//! Named initial conditions.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{HVecField, ScalarField, State};
use crate::grid::Grid;
use crate::params::PhysParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Fluid at rest with linear temperature stratification.
    RestStratified,
    /// Depth-independent zonal jet `u = u0 sin(2 pi y / Ly)` over the stratification.
    BarotropicJet,
    /// First baroclinic mode `cos(pi z / h)` in both velocity components.
    BaroclinicMode,
    /// Fluid at rest with `T` the leading Robin eigenmode of the column (no `T_r` offset).
    RobinMode,
}

/// `[init]` section: a preset plus its optional parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitSpec {
    pub preset: Preset,
    /// Velocity amplitude (m/s).
    #[serde(default = "default_u0")]
    pub u0: f64,
    /// Top-to-bottom temperature difference, or eigenmode amplitude (degC).
    #[serde(default = "default_delta_t")]
    pub delta_t: f64,
    /// Top-to-bottom salinity difference (psu).
    #[serde(default)]
    pub delta_s: f64,
}

fn default_u0() -> f64 {
    0.1
}
fn default_delta_t() -> f64 {
    1.0
}

impl InitSpec {
    pub fn new(preset: Preset) -> Self {
        InitSpec {
            preset,
            u0: default_u0(),
            delta_t: default_delta_t(),
            delta_s: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (n, v) in [("u0", self.u0), ("delta_t", self.delta_t), ("delta_s", self.delta_s)] {
            if !v.is_finite() {
                return Err(Error::Config(format!("init.{n} is not finite")));
            }
        }
        Ok(())
    }

    pub fn build(&self, grid: &Grid, p: &PhysParams) -> Result<State> {
        let h = grid.depth();
        let mut s = State::zeros(grid.dims());
        let (dt, ds) = (self.delta_t, self.delta_s);
        s.temp = ScalarField::from_fn(grid, |_, _, z| p.t_ref + dt * (z / h + 0.5));
        s.salt = ScalarField::from_fn(grid, |_, _, z| p.s_ref - ds * (z / h + 0.5));
        let (ly, lx, u0) = (grid.ly(), grid.lx(), self.u0);
        match self.preset {
            Preset::RestStratified => {}
            Preset::BarotropicJet => {
                s.v_star.x = ScalarField::from_fn(grid, |_, y, _| u0 * (2.0 * PI * y / ly).sin());
            }
            Preset::BaroclinicMode => {
                s.v_star = HVecField {
                    x: ScalarField::from_fn(grid, |_, y, z| u0 * (PI * z / h).cos() * (2.0 * PI * y / ly).sin()),
                    y: ScalarField::from_fn(grid, |x, _, z| u0 * (PI * z / h).cos() * (2.0 * PI * x / lx).cos()),
                };
            }
            Preset::RobinMode => {
                let lam = robin_eigenvalue(p.alpha_t, p.nu_t, h)?;
                s.temp = ScalarField::from_fn(grid, |_, _, z| dt * (lam * (z + h)).cos());
            }
        }
        Ok(s)
    }
}

/// Smallest `lambda >= 0` with `lambda tan(lambda h) = alpha / nu`: the
/// decay rate of `cos(lambda (z + h))` under `nu d_zz` with a no-flux bottom
/// and `nu d_z T + alpha T = 0` at the lid is `nu lambda^2`.
pub fn robin_eigenvalue(alpha: f64, nu: f64, h: f64) -> Result<f64> {
    if !(alpha >= 0.0 && nu > 0.0 && h > 0.0) {
        return Err(Error::InvalidParameter("robin_eigenvalue needs alpha >= 0, nu, h > 0".into()));
    }
    if alpha == 0.0 {
        return Ok(0.0);
    }
    let target = alpha / nu;
    let f = |l: f64| l * (l * h).tan() - target;
    let (mut lo, mut hi) = (0.0, (0.5 * PI / h) * (1.0 - 1e-15));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn robin_root_satisfies_the_transcendental_equation() {
        let l = robin_eigenvalue(0.5, 1.0, 1.0).unwrap();
        assert!((l * l.tan() - 0.5).abs() < 1e-12);
        assert!(l > 0.0 && l < PI / 2.0);
        assert_eq!(robin_eigenvalue(0.0, 1.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn presets_have_expected_structure() {
        let g = make_grid(8, 8, 4, 1.0, 1.0, 1.0).unwrap();
        let p = PhysParams::default();
        let rest = InitSpec::new(Preset::RestStratified).build(&g, &p).unwrap();
        assert_eq!(rest.v_star.max_abs(), 0.0);
        let jet = InitSpec::new(Preset::BarotropicJet).build(&g, &p).unwrap();
        for k in 1..4 {
            assert_eq!(jet.v_star.x.layer(k), jet.v_star.x.layer(0));
        }
        let bc = InitSpec::new(Preset::BaroclinicMode).build(&g, &p).unwrap();
        let mean = crate::vertical::depth_mean(&bc.v_star.x);
        assert!(mean.max_abs() < 1e-15);
    }
}
