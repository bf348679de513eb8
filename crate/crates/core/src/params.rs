use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vertical::ColumnBc;

/// Physical constants of the model (SI units).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysParams {
    /// Coriolis parameter (1/s).
    pub f: f64,
    /// Gravity (m/s^2).
    pub g: f64,
    /// Reference density (kg/m^3).
    pub rho0: f64,
    /// Thermal coefficient `(1/rho0) d rho/dT` (1/degC).
    pub beta_t: f64,
    /// Haline coefficient (1/psu).
    pub beta_s: f64,
    /// Reference temperature (degC) and salinity (psu) of the state law.
    #[serde(rename = "t_r")]
    pub t_ref: f64,
    #[serde(rename = "s_r")]
    pub s_ref: f64,
    /// Horizontal / vertical viscosity of the velocity (m^2/s).
    pub mu_v: f64,
    pub nu_v: f64,
    pub mu_t: f64,
    pub nu_t: f64,
    pub mu_s: f64,
    pub nu_s: f64,
    /// Robin coefficient of the surface heat flux (m/s).
    pub alpha_t: f64,
}

impl Default for PhysParams {
    fn default() -> Self {
        PhysParams {
            f: 1e-4,
            g: 9.81,
            rho0: 1025.0,
            beta_t: -2e-4,
            beta_s: 7.6e-4,
            t_ref: 10.0,
            s_ref: 35.0,
            mu_v: 1e-2,
            nu_v: 1e-3,
            mu_t: 1e-2,
            nu_t: 1e-3,
            mu_s: 1e-2,
            nu_s: 1e-3,
            alpha_t: 0.0,
        }
    }
}

impl PhysParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("mu_v", self.mu_v),
            ("nu_v", self.nu_v),
            ("mu_t", self.mu_t),
            ("nu_t", self.nu_t),
            ("mu_s", self.mu_s),
            ("nu_s", self.nu_s),
            ("rho0", self.rho0),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} = {v} must be > 0")));
            }
        }
        if !(self.alpha_t.is_finite() && self.alpha_t >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha_t = {} must be >= 0",
                self.alpha_t
            )));
        }
        for (name, v) in [
            ("f", self.f),
            ("g", self.g),
            ("beta_t", self.beta_t),
            ("beta_s", self.beta_s),
            ("t_ref", self.t_ref),
            ("s_ref", self.s_ref),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} is not finite")));
            }
        }
        Ok(())
    }

    pub fn velocity_diffusion(&self) -> DiffusionParams {
        DiffusionParams {
            mu: self.mu_v,
            nu: self.nu_v,
            bc: ColumnBc::VELOCITY,
        }
    }

    pub fn temperature_diffusion(&self) -> DiffusionParams {
        DiffusionParams {
            mu: self.mu_t,
            nu: self.nu_t,
            bc: ColumnBc::temperature(self.alpha_t),
        }
    }

    pub fn salinity_diffusion(&self) -> DiffusionParams {
        DiffusionParams {
            mu: self.mu_s,
            nu: self.nu_s,
            bc: ColumnBc::NEUMANN,
        }
    }

    /// Diffusion of the vertical noise component, which vanishes on lid and bottom.
    pub fn vertical_noise_diffusion(&self) -> DiffusionParams {
        DiffusionParams {
            mu: self.mu_v,
            nu: self.nu_v,
            bc: ColumnBc::DIRICHLET,
        }
    }
}

/// Coefficients and closures of one anisotropic diffusion operator
/// `-mu Delta_H - nu d_zz`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionParams {
    pub mu: f64,
    pub nu: f64,
    pub bc: ColumnBc,
}
