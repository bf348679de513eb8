//! Stochastic primitive equations with transport noise: a pseudo-spectral
//! discretisation on a doubly periodic horizontal domain with finite-volume
//! vertical columns, transport noise, and the diagnostics used to probe the
//! vanishing-noise limit.

pub mod checks;
pub mod config;
pub mod diagnostics;
pub mod domain;
pub mod error;
pub mod field;
pub mod filter;
pub mod grid;
pub mod init;
pub mod noise;
pub mod norms;
pub mod operators;
pub mod params;
pub mod pressure;
pub mod projectors;
pub mod snapshot;
pub mod spectral;
pub mod stepper;
pub mod vertical;

pub use domain::Domain;
pub use error::{Error, Result};
pub use field::{HVecField, ScalarField, State, TensorField, Vec3Field};
pub use filter::{Filter, FilterKernel, KernelKind};
pub use grid::{make_grid, Dims, Grid, GridSpec};
pub use init::{InitSpec, Preset};
pub use noise::{build_modes, Component, ModeKind, ModeSpec, NoiseIncrement, NoiseModel};
pub use params::{DiffusionParams, PhysParams};
pub use stepper::{Closure, SimConfig, Simulation, StepReport, VerticalScheme};
