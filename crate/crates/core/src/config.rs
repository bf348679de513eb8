//! TOML run configuration.
//!
//! ```toml
//! [grid]      # nx, ny (powers of two), nz; lx, ly, h in metres
//! [physics]   # f, g, rho0, beta_t, beta_s, t_r, s_r, mu_*, nu_*, alpha_t (SI)
//! [noise]     # upsilon, bhn, [[noise.modes]] kind/kx/ky/m/amplitude/component/phase/name
//! [closure]   # variant, kernel, length_scale | cutoff, horizontal_only, vertical_diffusion, tol_div
//! [time]      # dt, t_end (s), output_every (steps)
//! [init]      # preset, u0, delta_t, delta_s
//! [seed]      # value
//! ```

use std::path::Path;

use serde::Deserialize;

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::filter::{FilterKernel, KernelKind};
use crate::grid::GridSpec;
use crate::init::InitSpec;
use crate::noise::{build_modes, ModeSpec};
use crate::params::PhysParams;
use crate::stepper::{Closure, SimConfig, VerticalScheme, DEFAULT_TOL_DIV};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    grid: GridSpec,
    #[serde(default)]
    physics: PhysParams,
    #[serde(default)]
    noise: RawNoise,
    closure: RawClosure,
    time: RawTime,
    init: InitSpec,
    #[serde(default)]
    seed: RawSeed,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNoise {
    #[serde(default)]
    upsilon: f64,
    #[serde(default)]
    bhn: bool,
    #[serde(default)]
    modes: Vec<ModeSpec>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum RawKernel {
    Identity,
    Gaussian,
    SharpCutoff,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawClosure {
    variant: Closure,
    #[serde(default = "default_kernel")]
    kernel: RawKernel,
    length_scale: Option<f64>,
    cutoff: Option<f64>,
    #[serde(default)]
    horizontal_only: bool,
    #[serde(default = "default_vertical")]
    vertical_diffusion: VerticalScheme,
    #[serde(default = "default_tol_div")]
    tol_div: f64,
}

fn default_kernel() -> RawKernel {
    RawKernel::Identity
}
fn default_vertical() -> VerticalScheme {
    VerticalScheme::Implicit
}
fn default_tol_div() -> f64 {
    DEFAULT_TOL_DIV
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTime {
    dt: f64,
    t_end: f64,
    #[serde(default = "one")]
    output_every: u64,
}

fn one() -> u64 {
    1
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSeed {
    #[serde(default)]
    value: u64,
}

fn kernel_from(c: &RawClosure) -> Result<FilterKernel> {
    let kind = match c.kernel {
        RawKernel::Identity => KernelKind::Identity,
        RawKernel::Gaussian => KernelKind::Gaussian {
            length_scale: c
                .length_scale
                .ok_or_else(|| Error::Config("closure.kernel = \"gaussian\" needs closure.length_scale".into()))?,
        },
        RawKernel::SharpCutoff => KernelKind::SharpCutoff {
            cutoff: c
                .cutoff
                .ok_or_else(|| Error::Config("closure.kernel = \"sharp-cutoff\" needs closure.cutoff".into()))?,
        },
    };
    Ok(FilterKernel {
        kind,
        horizontal_only: c.horizontal_only,
    })
}

/// Parses and validates a configuration document, including the noise band
/// limit and the BHN structure of every mode.
pub fn parse_config_str(text: &str) -> Result<SimConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    let kernel = kernel_from(&raw.closure)?;
    let cfg = SimConfig {
        grid: raw.grid,
        phys: raw.physics,
        dt: raw.time.dt,
        t_end: raw.time.t_end,
        output_every: raw.time.output_every,
        closure: raw.closure.variant,
        kernel,
        upsilon: if raw.closure.variant == Closure::Deterministic {
            0.0
        } else {
            raw.noise.upsilon
        },
        bhn: raw.noise.bhn,
        modes: raw.noise.modes,
        tol_div: raw.closure.tol_div,
        vertical_diffusion: raw.closure.vertical_diffusion,
        seed: raw.seed.value,
        init: raw.init,
    };
    let grid = cfg.validate()?;
    build_modes(&cfg.modes, cfg.upsilon, cfg.bhn, cfg.seed, &Domain::new(grid))?;
    Ok(cfg)
}

pub fn parse_config(path: impl AsRef<Path>) -> Result<SimConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_str(&text)
}
