use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use lupe_core::checks::{noise_statistics, random_modes, random_state, run_invariant_suite_from};
use lupe_core::diagnostics::fd_balance;
use lupe_core::filter::{Filter, FilterKernel};
use lupe_core::init::{InitSpec, Preset};
use lupe_core::{build_modes, Closure, Component, Domain, GridSpec, ModeSpec, PhysParams, SimConfig, Simulation};

fn config(modes: Vec<ModeSpec>, bhn: bool, closure: Closure) -> SimConfig {
    SimConfig {
        grid: GridSpec {
            nx: 16,
            ny: 16,
            nz: 8,
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
        dt: 100.0,
        t_end: 100.0,
        output_every: 1,
        closure,
        kernel: FilterKernel::gaussian(1.0e4),
        upsilon: 1.0,
        bhn,
        modes,
        tol_div: 1e-9,
        vertical_diffusion: lupe_core::VerticalScheme::Implicit,
        seed: 3,
        init: InitSpec::new(Preset::BaroclinicMode),
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn invariant_suite_passes_on_random_models(seed in any::<u64>(), bhn in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let probe = Domain::new(config(vec![], false, Closure::Strong).grid.build().unwrap());
        let modes = random_modes(&mut rng, probe.dims(), 4, bhn);
        let closure = if bhn { Closure::WeakFiltered } else { Closure::Strong };
        let sim = Simulation::new(config(modes, bhn, closure)).unwrap();
        let state = random_state(sim.domain(), &sim.config().phys, 0.05, &mut rng);
        let results = run_invariant_suite_from(&sim, &state, 2, seed).unwrap();
        for r in &results {
            prop_assert!(r.passed(), "{} = {:e}", r.name, r.value);
        }
    }

    #[test]
    fn filtered_fluctuation_dissipation_balance(seed in any::<u64>(), ell in 2.0e3f64..2.0e4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = Domain::new(config(vec![], false, Closure::Strong).grid.build().unwrap());
        let modes = random_modes(&mut rng, d.dims(), 3, false);
        let model = build_modes(&modes, 1.0, false, seed, &d).unwrap();
        let q = random_state(&d, &PhysParams::default(), 1.0, &mut rng).temp;
        let k = Filter::new(FilterKernel::gaussian(ell), &d).unwrap();
        prop_assert!(fd_balance(&q, &model, None, &d).abs() <= 1e-8);
        prop_assert!(fd_balance(&q, &model, Some(&k), &d).abs() <= 1e-8);
    }
}

#[test]
fn increment_covariance_matches_a_dt() {
    let modes = vec![
        ModeSpec::streamfunction(1, 2, 0.8),
        ModeSpec::potential(Component::X, 1, 0, 1, 0.5),
        ModeSpec::potential(Component::Z, 0, 1, 2, 0.4),
        ModeSpec::uniform(Component::Y, 0.3),
    ];
    let d = Domain::new(config(vec![], false, Closure::Strong).grid.build().unwrap());
    let model = build_modes(&modes, 1.0, false, 99, &d).unwrap();
    let stats = noise_statistics(&model, 50.0, 10_000).unwrap();
    assert!(stats.covariance_rel_frobenius <= 0.05, "{stats:?}");
    assert!(stats.max_mean_z <= 4.0, "{stats:?}");
}

#[test]
fn bhn_steps_keep_horizontal_forcing_z_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let d = Domain::new(config(vec![], false, Closure::Strong).grid.build().unwrap());
    let modes = random_modes(&mut rng, d.dims(), 4, true);
    let sim = Simulation::new(config(modes, true, Closure::WeakFiltered)).unwrap();
    let mut s = sim.initial_state().unwrap();
    for _ in 0..50 {
        let (next, rep) = sim.step(&s).unwrap();
        let h = rep.horizontal_forcing.unwrap();
        let sdw = rep.sigma_dw.unwrap();
        for f in [&h.x, &h.y, &sdw.x, &sdw.y] {
            assert_eq!(lupe_core::checks::layer_deviation(f), 0.0);
        }
        s = next;
    }
}
