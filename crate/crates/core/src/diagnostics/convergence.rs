//! Ensemble measurement of the vanishing-noise limit: the RMS over members
//! of `sup_t ||U^Upsilon - U^0||_H` for a list of noise scalings, using the
//! same member seeds for every scaling.

use rayon::prelude::*;

use crate::error::Result;
use crate::field::State;
use crate::noise::member_seed;
use crate::norms::norm_h;
use crate::stepper::{SimConfig, Simulation};

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub upsilon: f64,
    pub rms_sup_deviation: f64,
    pub members_ok: usize,
    pub members_failed: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of `log(rms)` against `log(Upsilon)`.
    pub exponent: Option<f64>,
}

impl ConvergenceTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("upsilon,rms_sup_deviation,members_ok,members_failed\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{}\n",
                r.upsilon, r.rms_sup_deviation, r.members_ok, r.members_failed
            ));
        }
        match self.exponent {
            Some(e) => s.push_str(&format!("# fitted_exponent,{e}\n")),
            None => s.push_str("# fitted_exponent,nan\n"),
        }
        s
    }

    /// True when the deviation does not grow as `Upsilon` decreases, allowing
    /// a relative `slack` between adjacent levels.
    pub fn is_monotone(&self, slack: f64) -> bool {
        let mut rows: Vec<&ConvergenceRow> = self.rows.iter().collect();
        rows.sort_by(|a, b| b.upsilon.total_cmp(&a.upsilon));
        rows.windows(2)
            .all(|w| w[1].rms_sup_deviation <= w[0].rms_sup_deviation * (1.0 + slack))
    }
}

/// Slope of the log-log regression over rows with positive `Upsilon` and
/// deviation; `None` with fewer than two such rows.
pub fn fit_exponent(rows: &[ConvergenceRow]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.upsilon > 0.0 && r.rms_sup_deviation > 0.0 && r.rms_sup_deviation.is_finite())
        .map(|r| (r.upsilon.ln(), r.rms_sup_deviation.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

fn reference_trajectory(sim: &Simulation) -> Result<Vec<State>> {
    let mut out = Vec::new();
    let mut s = sim.initial_state()?;
    out.push(s.clone());
    for _ in 0..sim.config().n_steps()? {
        s = sim.step(&s)?.0;
        out.push(s.clone());
    }
    Ok(out)
}

fn member_sup_deviation(sim: &Simulation, reference: &[State]) -> Result<f64> {
    let g = sim.domain().grid();
    let mut s = reference[0].clone();
    let mut sup = 0.0f64;
    for r in &reference[1..] {
        s = sim.step(&s)?.0;
        sup = sup.max(norm_h(&s.difference(r), g));
    }
    Ok(sup)
}

/// Runs `n_ensemble` members for every `Upsilon` in `upsilons` against the
/// zero-noise trajectory of the same configuration.
pub fn noise_convergence_experiment(
    config: &SimConfig,
    upsilons: &[f64],
    n_ensemble: usize,
) -> Result<ConvergenceTable> {
    let base = Simulation::new(SimConfig {
        upsilon: 1.0,
        ..config.clone()
    })?;
    let reference = reference_trajectory(&base.with_noise(0.0, config.seed)?)?;
    let sims: Vec<Simulation> = upsilons
        .iter()
        .map(|&u| base.with_noise(u, config.seed))
        .collect::<Result<_>>()?;
    let jobs: Vec<(usize, u64)> = (0..upsilons.len())
        .flat_map(|i| (0..n_ensemble as u64).map(move |m| (i, m)))
        .collect();
    let results: Vec<(usize, Result<f64>)> = jobs
        .par_iter()
        .map(|&(i, m)| {
            let sim = sims[i].with_noise(upsilons[i], member_seed(config.seed, m));
            (i, sim.and_then(|s| member_sup_deviation(&s, &reference)))
        })
        .collect();
    let mut rows: Vec<ConvergenceRow> = upsilons
        .iter()
        .map(|&u| ConvergenceRow {
            upsilon: u,
            rms_sup_deviation: 0.0,
            members_ok: 0,
            members_failed: 0,
        })
        .collect();
    let mut sums = vec![0.0; upsilons.len()];
    for (i, r) in results {
        match r {
            Ok(d) if d.is_finite() => {
                sums[i] += d * d;
                rows[i].members_ok += 1;
            }
            _ => rows[i].members_failed += 1,
        }
    }
    for (row, s) in rows.iter_mut().zip(sums) {
        row.rms_sup_deviation = if row.members_ok > 0 {
            (s / row.members_ok as f64).sqrt()
        } else {
            f64::NAN
        };
    }
    let exponent = fit_exponent(&rows);
    Ok(ConvergenceTable { rows, exponent })
}
