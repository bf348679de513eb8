//! Command-line surface of the simulator.
//!
//! Subcommands: `run`, `check`, `ensemble`, `converge`, `info`. Exit status
//! is 0 on success, 1 on a runtime or check failure and 2 on a usage error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use lupe_core::checks::{run_invariant_suite, CheckResult};
use lupe_core::config::{parse_config, parse_config_str};
use lupe_core::diagnostics::convergence::noise_convergence_experiment;
use lupe_core::diagnostics::{regime_indicator, write_csv, DiagnosticsRecord};
use lupe_core::norms::l2_inner;
use lupe_core::snapshot::write_snapshot;
use lupe_core::{Closure, Error, KernelKind, Result, SimConfig, Simulation};

/// Environment variable that fixes the worker-thread count.
pub const THREADS_ENV: &str = "LUPE_THREADS";

/// Configuration used by `converge` when `--config` is not given: BHN noise
/// on a 32 x 32 x 16 grid over 50 steps.
pub const DEFAULT_CONVERGE_CONFIG: &str = include_str!("../../../configs/bhn_weak.toml");

#[derive(Debug, Parser)]
#[command(name = "lupe", version, about = "Stochastic primitive-equation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one trajectory, writing diagnostics.csv and final.snap.
    Run(RunArgs),
    /// Run the invariant suite and print a pass/fail table.
    Check(CheckArgs),
    /// Run `members` trajectories with seeds `seed + m`.
    Ensemble(EnsembleArgs),
    /// Vanishing-noise convergence experiment.
    Converge(ConvergeArgs),
    /// Print the configuration and derived noise quantities at t = 0.
    Info(ConfigArg),
}

#[derive(Debug, Args)]
struct ConfigArg {
    #[arg(long)]
    config: PathBuf,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[arg(long)]
    config: PathBuf,
    /// Random fields per projector identity.
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    check_seed: u64,
}

#[derive(Debug, Args)]
struct EnsembleArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, default_value_t = 8)]
    members: u64,
}

#[derive(Debug, Args)]
struct ConvergeArgs {
    /// Defaults to a built-in BHN configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_values_t = vec![1.0, 0.25, 0.0625])]
    upsilons: Vec<f64>,
    #[arg(long, default_value_t = 64)]
    ensemble: usize,
    /// Write the table here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run_cli<I, S>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let sink: &mut dyn Write = if code == 0 { stdout } else { stderr };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    configure_threads(stderr);
    let result = match cli.command {
        Command::Run(a) => cmd_run(&a, stdout),
        Command::Check(a) => cmd_check(&a, stdout),
        Command::Ensemble(a) => cmd_ensemble(&a, stdout),
        Command::Converge(a) => cmd_converge(&a, stdout),
        Command::Info(a) => cmd_info(&a.config, stdout),
    };
    match result {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            1
        }
    }
}

fn configure_threads(stderr: &mut dyn Write) {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return;
    };
    match raw.trim().parse::<usize>() {
        Ok(n) if n > 0 => {
            // A second call in the same process finds the pool already built.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
        _ => {
            let _ = writeln!(stderr, "warning: ignoring {THREADS_ENV}={raw:?}");
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |e| Error::io(path, e)
}

/// Runs one trajectory and writes `diagnostics.csv` and `final.snap` into `dir`.
pub fn run_to_dir(sim: &Simulation, dir: &Path) -> Result<Vec<DiagnosticsRecord>> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut records = Vec::new();
    let init = sim.initial_state()?;
    let fin = sim.run_from(init, |s, _| {
        records.push(DiagnosticsRecord::compute(sim, s));
        Ok(())
    })?;
    let csv = dir.join("diagnostics.csv");
    let file = fs::File::create(&csv).map_err(io_err(&csv))?;
    write_csv(std::io::BufWriter::new(file), &records).map_err(io_err(&csv))?;
    write_snapshot(dir.join("final.snap"), &fin, sim.domain())?;
    Ok(records)
}

fn cmd_run(a: &RunArgs, out: &mut dyn Write) -> Result<bool> {
    let sim = Simulation::new(parse_config(&a.config)?)?;
    let records = run_to_dir(&sim, &a.out)?;
    let _ = writeln!(out, "wrote {} rows to {}", records.len(), a.out.join("diagnostics.csv").display());
    Ok(true)
}

/// Prints the suite as an aligned table; returns whether every check passed.
pub fn print_checks(results: &[CheckResult], out: &mut dyn Write) -> bool {
    let width = results.iter().map(|r| r.name.len()).max().unwrap_or(0);
    let mut ok = true;
    for r in results {
        let (status, tol) = match r.tol {
            Some(t) => (if r.passed() { "PASS" } else { "FAIL" }, format!("<= {t:.1e}")),
            None => ("INFO", String::new()),
        };
        ok &= r.passed();
        let _ = writeln!(out, "{status}  {:<width$}  {:>12.4e}  {tol}", r.name, r.value);
    }
    let failed = results.iter().filter(|r| !r.passed()).count();
    let _ = writeln!(out, "{} checks, {failed} failed", results.len());
    ok
}

fn cmd_check(a: &CheckArgs, out: &mut dyn Write) -> Result<bool> {
    let sim = Simulation::new(parse_config(&a.config)?)?;
    let results = run_invariant_suite(&sim, a.trials, a.check_seed)?;
    Ok(print_checks(&results, out))
}

fn cmd_ensemble(a: &EnsembleArgs, out: &mut dyn Write) -> Result<bool> {
    let cfg = parse_config(&a.config)?;
    let base = Simulation::new(cfg.clone())?;
    let results: Vec<(u64, Result<usize>)> = (0..a.members)
        .into_par_iter()
        .map(|m| {
            let dir = a.out.join(format!("member_{m:04}"));
            let res = base
                .with_noise(cfg.upsilon, cfg.seed.wrapping_add(m))
                .and_then(|sim| run_to_dir(&sim, &dir))
                .map(|r| r.len());
            (m, res)
        })
        .collect();
    let mut ok = true;
    for (m, r) in results {
        match r {
            Ok(rows) => {
                let _ = writeln!(out, "member {m}: seed {} ok, {rows} rows", cfg.seed.wrapping_add(m));
            }
            Err(e) => {
                ok = false;
                let _ = writeln!(out, "member {m}: failed: {e}");
            }
        }
    }
    Ok(ok)
}

fn cmd_converge(a: &ConvergeArgs, out: &mut dyn Write) -> Result<bool> {
    let cfg = match &a.config {
        Some(p) => parse_config(p)?,
        None => parse_config_str(DEFAULT_CONVERGE_CONFIG)?,
    };
    if cfg.closure == Closure::Deterministic {
        return Err(Error::Config("converge needs a stochastic closure".into()));
    }
    if a.ensemble == 0 || a.upsilons.is_empty() {
        return Err(Error::Config("converge needs at least one member and one upsilon".into()));
    }
    let table = noise_convergence_experiment(&cfg, &a.upsilons, a.ensemble)?;
    let csv = table.to_csv();
    match &a.out {
        Some(p) => fs::write(p, &csv).map_err(io_err(p))?,
        None => {
            let _ = out.write_all(csv.as_bytes());
        }
    }
    Ok(table.rows.iter().all(|r| r.members_failed == 0))
}

fn kernel_label(cfg: &SimConfig) -> String {
    let scope = if cfg.kernel.horizontal_only { " (horizontal only)" } else { "" };
    match cfg.kernel.kind {
        KernelKind::Identity => "identity".into(),
        KernelKind::Gaussian { length_scale } => format!("gaussian, length_scale = {length_scale} m{scope}"),
        KernelKind::SharpCutoff { cutoff } => format!("sharp-cutoff, cutoff = {cutoff} rad/m{scope}"),
    }
}

fn cmd_info(path: &Path, out: &mut dyn Write) -> Result<bool> {
    let cfg = parse_config(path)?;
    let sim = Simulation::new(cfg.clone())?;
    let d = sim.domain();
    let g = d.grid();
    let p = &cfg.phys;
    let mut lines = vec![
        format!("config            {}", path.display()),
        format!("grid              {} x {} x {}, {} m x {} m x {} m", g.nx(), g.ny(), g.nz(), g.lx(), g.ly(), g.depth()),
        format!("closure           {:?}", cfg.closure),
        format!("kernel            {}", kernel_label(&cfg)),
        format!("vertical scheme   {:?}", cfg.vertical_diffusion),
        format!("time              dt = {} s, t_end = {} s, {} steps, output every {}", cfg.dt, cfg.t_end, cfg.n_steps()?, cfg.output_every),
        format!("physics           f = {}, g = {}, rho0 = {}, beta_t = {}, beta_s = {}", p.f, p.g, p.rho0, p.beta_t, p.beta_s),
        format!("diffusion         mu = ({}, {}, {}), nu = ({}, {}, {}), alpha_t = {}", p.mu_v, p.mu_t, p.mu_s, p.nu_v, p.nu_t, p.nu_s, p.alpha_t),
        format!("init              {:?}", cfg.init),
        format!("noise             upsilon = {}, bhn = {}, {} modes, seed = {}", cfg.upsilon, cfg.bhn, cfg.modes.len(), cfg.seed),
    ];
    let model = sim.model();
    for label in model.labels() {
        lines.push(format!("  mode            {label}"));
    }
    let a = model.variance_tensor();
    let mut a_sq = 0.0;
    for r in 0..3 {
        for c in 0..3 {
            a_sq += l2_inner(a.entry(r, c), a.entry(r, c), g);
        }
    }
    let us = model.ito_stokes();
    let us_sq: f64 = [&us.x, &us.y, &us.z].iter().map(|f| l2_inner(f, f, g)).sum();
    let (res_before, res_after) = model.ito_stokes_residuals();
    lines.push(format!("|a|_L2             {:.6e}  max {:.6e}", a_sq.sqrt(), a.max_abs()));
    lines.push(format!("|u_S|_L2           {:.6e}  max {:.6e}", us_sq.sqrt(), us.max_abs()));
    lines.push(format!("u_S divergence     {:.3e} raw, {:.3e} projected", res_before, res_after));
    let state = sim.initial_state()?;
    let reg = regime_indicator(&state, model, p, d);
    lines.push(format!("N^2 median         {:.6e}", reg.n2_median));
    lines.push(format!("Ri median          {:.6e}", reg.ri_median));
    lines.push(format!("alpha^2/Ri         {:.6e}", reg.alpha2_over_ri));
    lines.push(format!("Upsilon (d_z phi^H)^2  {:.6e}", reg.stochastic_shear));
    lines.push(format!("regime flag        {:?}", reg.flag));
    for l in lines {
        let _ = writeln!(out, "{l}");
    }
    Ok(true)
}
