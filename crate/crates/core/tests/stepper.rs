use std::f64::consts::PI;

use lupe_core::diagnostics::{write_csv, DiagnosticsRecord};
use lupe_core::field::{HVecField, ScalarField, State};
use lupe_core::filter::FilterKernel;
use lupe_core::init::{robin_eigenvalue, InitSpec, Preset};
use lupe_core::norms::{l2_inner, norm_h};
use lupe_core::operators::{coriolis, diffuse, dot3, grad3};
use lupe_core::params::PhysParams;
use lupe_core::stepper::reference::primitive_step;
use lupe_core::vertical::ColumnBc;
use lupe_core::{Closure, Component, GridSpec, ModeSpec, SimConfig, Simulation, VerticalScheme};

fn config(nx: usize, ny: usize, nz: usize, preset: Preset) -> SimConfig {
    SimConfig {
        grid: GridSpec {
            nx,
            ny,
            nz,
            lx: 1.0e5,
            ly: 1.0e5,
            h: 1000.0,
        },
        phys: PhysParams {
            mu_v: 10.0,
            mu_t: 10.0,
            mu_s: 10.0,
            nu_v: 1e-2,
            ..PhysParams::default()
        },
        dt: 200.0,
        t_end: 2000.0,
        output_every: 1,
        closure: Closure::Deterministic,
        kernel: FilterKernel::IDENTITY,
        upsilon: 0.0,
        bhn: false,
        modes: vec![],
        tol_div: 1e-9,
        vertical_diffusion: VerticalScheme::Implicit,
        seed: 11,
        init: InitSpec {
            u0: 0.1,
            delta_t: 2.0,
            delta_s: 0.1,
            ..InitSpec::new(preset)
        },
    }
}

fn noisy(mut c: SimConfig, closure: Closure, upsilon: f64) -> SimConfig {
    c.closure = closure;
    c.upsilon = upsilon;
    c.modes = vec![
        ModeSpec::streamfunction(1, 0, 2.0e4),
        ModeSpec::potential(Component::X, 0, 1, 1, 5.0e3),
        ModeSpec::uniform(Component::Y, 0.3),
    ];
    c
}

fn trajectory(sim: &Simulation) -> Vec<State> {
    let mut out = Vec::new();
    sim.run_from(sim.initial_state().unwrap(), |s, _| {
        out.push(s.clone());
        Ok(())
    })
    .unwrap();
    out
}

fn max_diff(a: &State, b: &State) -> f64 {
    a.difference(b).components().iter().map(|f| f.max_abs()).fold(0.0, f64::max)
}

#[test]
fn zero_noise_f_sigma_vanishes() {
    let sim = Simulation::new(noisy(config(8, 8, 4, Preset::BaroclinicMode), Closure::Strong, 0.0)).unwrap();
    let u = sim.initial_state().unwrap();
    let (fv, ft, fs) = sim.f_sigma(&u);
    assert_eq!(fv.max_abs() + ft.max_abs() + fs.max_abs(), 0.0);
}

#[test]
fn homogeneous_noise_f_sigma_is_a_scaled_laplacian() {
    // Uniform x and y modes of amplitude c: a = c^2 diag(1, 1, 0), u_S = 0.
    let mut cfg = config(16, 16, 4, Preset::RestStratified);
    cfg.closure = Closure::Strong;
    cfg.upsilon = 1.0;
    let amp = 0.7;
    cfg.modes = vec![ModeSpec::uniform(Component::X, amp), ModeSpec::uniform(Component::Y, amp)];
    let sim = Simulation::new(cfg).unwrap();
    let g = sim.domain().grid().clone();
    let (kx, ky) = (2.0 * PI / g.lx(), 3.0 * 2.0 * PI / g.ly());
    let mut u = State::zeros(g.dims());
    u.temp = ScalarField::from_fn(&g, |x, y, _| (kx * x).sin() + (ky * y).cos());
    u.v_star.x = ScalarField::from_fn(&g, |_, y, _| (ky * y).sin());
    let (fv, ft, fs) = sim.f_sigma(&u);
    let c = amp * amp;
    let want_t = ScalarField::from_fn(&g, |x, y, _| 0.5 * c * (kx * kx * (kx * x).sin() + ky * ky * (ky * y).cos()));
    let want_vx = ScalarField::from_fn(&g, |_, y, _| 0.5 * c * ky * ky * (ky * y).sin());
    assert!((&ft - &want_t).max_abs() < 1e-12 * c * ky * ky);
    assert!((&fv.x - &want_vx).max_abs() < 1e-12 * c * ky * ky);
    assert!(fv.y.max_abs() < 1e-20);
    assert_eq!(fs.max_abs(), 0.0);
}

#[test]
fn zero_increment_g_sigma_vanishes() {
    let sim = Simulation::new(noisy(config(8, 8, 4, Preset::BaroclinicMode), Closure::Strong, 1.0)).unwrap();
    let u = sim.initial_state().unwrap();
    let inc = sim.model().increment_from_gaussians(200.0, vec![0.0; 3]).unwrap();
    let (gv, gt, gs) = sim.g_sigma(&u, &inc);
    assert_eq!(gv.max_abs() + gt.max_abs() + gs.max_abs(), 0.0);
}

#[test]
fn constant_state_g_sigma_is_the_mode_forcing() {
    let mut cfg = noisy(config(16, 16, 8, Preset::RestStratified), Closure::Strong, 0.5);
    cfg.modes.truncate(2);
    let sim = Simulation::new(cfg.clone()).unwrap();
    let d = sim.domain();
    let dims = d.dims();
    let u = State {
        v_star: HVecField {
            x: ScalarField::constant(dims, 0.2),
            y: ScalarField::constant(dims, -0.1),
        },
        temp: ScalarField::constant(dims, 12.0),
        salt: ScalarField::constant(dims, 35.0),
        t: 0.0,
        step_index: 0,
    };
    let db = vec![0.3, -1.1];
    let inc = sim.model().increment_from_gaussians(cfg.dt, db.clone()).unwrap();
    let (gv, gt, gs) = sim.g_sigma(&u, &inc);
    // sigma^H dW assembled by hand, then -(A + Gamma) applied component-wise.
    let s = cfg.upsilon.sqrt();
    let mut sh = HVecField::zeros(dims);
    for (phi, b) in sim.model().modes().iter().zip(&db) {
        sh.axpy(s * b, &phi.horizontal());
    }
    let nd = lupe_core::DiffusionParams {
        bc: ColumnBc::NEUMANN,
        ..cfg.phys.velocity_diffusion()
    };
    let mut want = HVecField {
        x: diffuse(&nd, &sh.x, d),
        y: diffuse(&nd, &sh.y, d),
    };
    want += &coriolis(&sh, cfg.phys.f);
    want *= -1.0;
    // v_S is nonzero here, so its transport by sigma dW is part of G_sigma.
    let us = sim.model().ito_stokes_horizontal();
    want.x -= &dot3(&inc.sigma_dw, &grad3(&us.x, d));
    want.y -= &dot3(&inc.sigma_dw, &grad3(&us.y, d));
    let err = (&gv - &want).max_abs();
    assert!(err <= 1e-11 * want.max_abs(), "{err} vs {}", want.max_abs());
    assert!(gt.max_abs() < 1e-24 && gs.max_abs() < 1e-24);
}

#[test]
fn zero_noise_closures_are_bitwise_equal() {
    let base = config(16, 16, 8, Preset::BaroclinicMode);
    let strong = trajectory(&Simulation::new(noisy(base.clone(), Closure::Strong, 0.0)).unwrap());
    let weak = trajectory(&Simulation::new(noisy(base.clone(), Closure::WeakFiltered, 0.0)).unwrap());
    let det = trajectory(&Simulation::new(base).unwrap());
    assert_eq!(strong, weak);
    assert_eq!(strong, det);
}

#[test]
fn matches_the_reference_primitive_equation_step() {
    for scheme in [VerticalScheme::Implicit, VerticalScheme::Explicit] {
        let mut cfg = config(16, 16, 8, Preset::BaroclinicMode);
        cfg.vertical_diffusion = scheme;
        cfg.dt = 50.0;
        cfg.t_end = 50.0 * 40.0;
        let sim = Simulation::new(cfg.clone()).unwrap();
        let mut r = sim.initial_state().unwrap();
        let traj = trajectory(&sim);
        for s in &traj[1..] {
            r = primitive_step(&r, sim.domain(), &cfg.phys, cfg.dt, scheme);
            let scale = s.components().iter().map(|f| f.max_abs()).fold(0.0, f64::max);
            assert!(max_diff(s, &r) <= 1e-12 * scale, "{scheme:?} step {}", s.step_index);
        }
    }
}

#[test]
fn stochastic_steps_are_bit_reproducible() {
    let cfg = noisy(config(16, 16, 8, Preset::BaroclinicMode), Closure::WeakFiltered, 1.0);
    let cfg = SimConfig {
        kernel: FilterKernel::gaussian(8000.0),
        ..cfg
    };
    let a = trajectory(&Simulation::new(cfg.clone()).unwrap());
    let b = trajectory(&Simulation::new(cfg.clone()).unwrap());
    assert_eq!(a, b);
    let other = trajectory(&Simulation::new(SimConfig { seed: 12, ..cfg }).unwrap());
    assert_ne!(a.last(), other.last());
}

#[test]
fn identical_seeds_give_identical_csv() {
    let cfg = noisy(config(8, 8, 4, Preset::BarotropicJet), Closure::Strong, 1.0);
    let csv = || {
        let sim = Simulation::new(cfg.clone()).unwrap();
        let recs: Vec<_> = trajectory(&sim).iter().map(|s| DiagnosticsRecord::compute(&sim, s)).collect();
        let mut buf = Vec::new();
        write_csv(&mut buf, &recs).unwrap();
        buf
    };
    assert_eq!(csv(), csv());
}

#[test]
fn zero_end_time_echoes_the_initial_state() {
    let cfg = SimConfig {
        t_end: 0.0,
        ..config(8, 8, 4, Preset::BarotropicJet)
    };
    let sim = Simulation::new(cfg).unwrap();
    let traj = trajectory(&sim);
    assert_eq!(traj, vec![sim.initial_state().unwrap()]);
}

#[test]
fn rest_with_stratification_stays_horizontally_uniform() {
    let cfg = SimConfig {
        t_end: 200.0 * 100.0,
        ..config(16, 16, 8, Preset::RestStratified)
    };
    let sim = Simulation::new(cfg).unwrap();
    let last = trajectory(&sim).pop().unwrap();
    let n = last.dims().layer();
    for f in [&last.temp, &last.salt, &last.v_star.x, &last.v_star.y] {
        for k in 0..last.dims().nz {
            let l = f.layer(k);
            let dev = l.iter().map(|x| (x - l[0]).abs()).fold(0.0, f64::max);
            assert!(dev <= 1e-10, "layer {k} deviation {dev} over {n} points");
        }
    }
    assert!(last.v_star.max_abs() <= 1e-10);
}

#[test]
fn unforced_deterministic_energy_is_non_increasing() {
    // Uniform T and S remove the pressure coupling; Coriolis does no work.
    let mut cfg = config(16, 16, 8, Preset::BaroclinicMode);
    cfg.init.delta_t = 0.0;
    cfg.init.delta_s = 0.0;
    cfg.t_end = 200.0 * 60.0;
    let sim = Simulation::new(cfg).unwrap();
    let g = sim.domain().grid();
    let e: Vec<f64> = trajectory(&sim).iter().map(|s| norm_h(s, g).powi(2)).collect();
    for w in e.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-10), "{} -> {}", w[0], w[1]);
    }
    assert!(e.last().unwrap() < &e[0]);
}

/// Implicit Euler decay of the Robin eigenmode measured by projection.
fn robin_rate(dt: f64, t_end: f64) -> f64 {
    let mut cfg = config(4, 4, 64, Preset::RobinMode);
    cfg.phys = PhysParams {
        nu_t: 1.0,
        alpha_t: 1e-3,
        ..cfg.phys
    };
    cfg.init.delta_t = 1.0;
    cfg.dt = dt;
    cfg.t_end = t_end;
    cfg.output_every = u64::MAX;
    let sim = Simulation::new(cfg).unwrap();
    let traj = trajectory(&sim);
    let g = sim.domain().grid();
    let (t0, t1) = (&traj[0].temp, &traj.last().unwrap().temp);
    let amp = l2_inner(t1, t0, g) / l2_inner(t0, t0, g);
    -amp.ln() / t_end
}

#[test]
fn robin_heat_mode_decays_at_the_analytic_rate() {
    let lam = robin_eigenvalue(1e-3, 1.0, 1000.0).unwrap();
    let exact = lam * lam;
    let t_end = 2.0e6;
    let r: Vec<f64> = [5.0e4, 2.5e4, 1.25e4].iter().map(|&dt| robin_rate(dt, t_end)).collect();
    let order = ((r[0] - r[1]) / (r[1] - r[2])).log2();
    assert!((order - 1.0).abs() <= 0.1, "order {order}");
    let extrapolated = 2.0 * r[2] - r[1];
    assert!(((extrapolated - exact) / exact).abs() <= 0.01, "{extrapolated} vs {exact}");
}

#[test]
fn euler_maruyama_strong_order_on_transported_scalar() {
    // One uniform x mode: T(t) = T0(x - c W_t) exactly; f = beta = 0 keeps v = 0.
    let (lx, c, t_end) = (1.0, 0.1, 1.0);
    let mut cfg = config(32, 4, 4, Preset::RestStratified);
    cfg.grid.lx = lx;
    cfg.grid.ly = 1.0;
    cfg.grid.h = 1.0;
    cfg.phys = PhysParams {
        f: 0.0,
        beta_t: 0.0,
        beta_s: 0.0,
        mu_t: 1e-14,
        nu_t: 1e-14,
        ..cfg.phys
    };
    cfg.closure = Closure::Strong;
    cfg.upsilon = 1.0;
    cfg.modes = vec![ModeSpec::uniform(Component::X, c)];
    let k = 2.0 * PI / lx;
    let levels = [16usize, 32, 64];
    let fine = *levels.last().unwrap();
    let paths = 200;
    let mut err2 = [0.0; 3];
    let mut rng = rand_pcg(7);
    for _ in 0..paths {
        let dw: Vec<f64> = (0..fine).map(|_| gaussian(&mut rng) * (t_end / fine as f64).sqrt()).collect();
        let w_t: f64 = dw.iter().sum();
        for (li, &n) in levels.iter().enumerate() {
            let dt = t_end / n as f64;
            let sim = Simulation::new(SimConfig {
                dt,
                t_end,
                ..cfg.clone()
            })
            .unwrap();
            let g = sim.domain().grid().clone();
            let mut s = State::zeros(g.dims());
            s.temp = ScalarField::from_fn(&g, |x, _, _| (k * x).sin());
            let per = fine / n;
            for step in 0..n {
                let db: f64 = dw[step * per..(step + 1) * per].iter().sum();
                let inc = sim.model().increment_from_gaussians(dt, vec![db]).unwrap();
                s = sim.step_with_increment(&s, Some(&inc)).unwrap().0;
            }
            let exact = ScalarField::from_fn(&g, |x, _, _| (k * (x - c * w_t)).sin());
            err2[li] += (&s.temp - &exact).max_abs().powi(2) / paths as f64;
        }
    }
    let e: Vec<f64> = err2.iter().map(|v| v.sqrt()).collect();
    // Least-squares slope of log error against log dt.
    let xs: Vec<f64> = levels.iter().map(|&n| (t_end / n as f64).ln()).collect();
    let ys: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 3.0, ys.iter().sum::<f64>() / 3.0);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    assert!((0.4..=0.6).contains(&slope), "slope {slope}, errors {e:?}");
}

fn rand_pcg(seed: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian(rng: &mut rand_chacha::ChaCha8Rng) -> f64 {
    use rand::distr::Distribution;
    rand_distr::StandardNormal.sample(rng)
}
