//! Fixtures shared by the kernel benchmarks.

use lupe_core::filter::FilterKernel;
use lupe_core::init::{InitSpec, Preset};
use lupe_core::{Closure, Component, GridSpec, ModeSpec, PhysParams, SimConfig, Simulation, State, VerticalScheme};

/// Weak-filtered BHN configuration on an `n x n x n/2` grid.
pub fn bench_config(n: usize) -> SimConfig {
    SimConfig {
        grid: GridSpec {
            nx: n,
            ny: n,
            nz: (n / 2).max(2),
            lx: 1.0e5,
            ly: 1.0e5,
            h: 1000.0,
        },
        phys: PhysParams {
            mu_v: 10.0,
            mu_t: 10.0,
            mu_s: 10.0,
            ..PhysParams::default()
        },
        dt: 200.0,
        t_end: 200.0,
        output_every: 1,
        closure: Closure::WeakFiltered,
        kernel: FilterKernel::gaussian(2.0e5 / n as f64),
        upsilon: 1.0,
        bhn: true,
        modes: vec![
            ModeSpec::streamfunction(1, 0, 2.0e4),
            ModeSpec::streamfunction(1, 1, 1.0e4),
            ModeSpec::uniform(Component::X, 0.5),
        ],
        tol_div: 1e-9,
        vertical_diffusion: VerticalScheme::Implicit,
        seed: 1,
        init: InitSpec::new(Preset::BaroclinicMode),
    }
}

pub fn fixture(n: usize) -> (Simulation, State) {
    let sim = Simulation::new(bench_config(n)).expect("bench config is valid");
    let state = sim.initial_state().expect("preset builds");
    (sim, state)
}
