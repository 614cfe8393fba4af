//! Orchestration behind the three subcommands.

use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use qnet_core::kernel::build_matrix;
use qnet_core::measures::{solve, StationaryResult};
use qnet_core::simulator::{simulate, SimulationResult};
use qnet_core::solver::{batch_decay_rate, batch_matrix};
use qnet_core::{Real, TransitionMatrix};

use crate::config::{default_batches, OutputKind, RunConfig, SimulationSettings};
use crate::error::CliError;
use crate::output::{self, Style};

#[derive(Debug, Clone, Default)]
pub struct SolveOptions {
    pub round: Option<usize>,
    pub dump_matrix: bool,
}

#[derive(Debug, Clone)]
pub struct Solved {
    pub result: StationaryResult,
    /// Decay rate of the arrival distribution, when the load allows one.
    pub sigma: Option<Real>,
    pub matrix: Option<TransitionMatrix>,
}

/// Arrival distribution, time averages and measures for one config.
pub fn solve_config(cfg: &RunConfig, want_matrix: bool) -> Result<Solved, CliError> {
    let ctx = &cfg.precision;
    let result = solve(&cfg.model, cfg.method, ctx)?;
    let sigma = match &result.arrival.sigma {
        Some(s) => Some(s.clone()),
        None if cfg.model.rho() < ctx.one() => Some(batch_decay_rate(&cfg.model, ctx)?),
        None => None,
    };
    let matrix = if want_matrix {
        Some(if cfg.model.batch().is_some() {
            batch_matrix(&cfg.model, ctx)?.0
        } else {
            build_matrix(&cfg.model, result.arrival.n, ctx)?
        })
    } else {
        None
    };
    Ok(Solved { result, sigma, matrix })
}

/// `stem: sigma=… N=… L=… W=… lambda_eff=…`
pub fn summary_line(cfg: &RunConfig, solved: &Solved, style: Style) -> String {
    let r = &solved.result;
    let sigma = solved.sigma.as_ref().map_or_else(|| String::from("-"), |s| style.real(s));
    format!(
        "{}: sigma={} N={} L={} W={} lambda_eff={}",
        cfg.stem,
        sigma,
        r.arrival.n,
        style.real(&r.report.l),
        style.real(&r.report.w),
        style.real(&r.report.lambda_eff)
    )
}

/// Solves and writes every requested output; returns the summary line.
pub fn run_solve(cfg: &RunConfig, opts: &SolveOptions, out_dir: &Path) -> Result<String, CliError> {
    let mut outputs = cfg.outputs.clone();
    if opts.dump_matrix && !outputs.contains(&OutputKind::TransitionMatrixDump) {
        outputs.push(OutputKind::TransitionMatrixDump);
    }
    let solved = solve_config(cfg, outputs.contains(&OutputKind::TransitionMatrixDump))?;
    let style = Style::new(&cfg.precision, opts.round);
    let r = &solved.result;
    for kind in outputs {
        let table = match kind {
            OutputKind::StationaryTable => output::stationary_table(r, style),
            OutputKind::PerformanceReport => output::performance_report(r, solved.sigma.as_ref(), style),
            OutputKind::PmfData => output::pmf_data(r, style),
            OutputKind::CdfData => output::cdf_data(r, &cfg.precision, style),
            OutputKind::TransitionMatrixDump => output::matrix_dump(solved.matrix.as_ref().expect("matrix built"), style),
        };
        output::write(&output::output_path(out_dir, &cfg.stem, kind, cfg.format), &table, cfg.format)?;
    }
    Ok(summary_line(cfg, &solved, style))
}

/// Command-line values win over the config's `simulate` section.
pub fn simulation_settings(
    cfg: &RunConfig,
    arrivals: Option<u64>,
    seed: Option<u64>,
    batches: Option<usize>,
) -> Result<SimulationSettings, CliError> {
    let base = cfg.simulate;
    let arrivals = arrivals
        .or(base.map(|s| s.arrivals))
        .ok_or_else(|| CliError::Validation(String::from("simulation needs --arrivals or simulate.arrivals")))?;
    let seed = seed
        .or(base.map(|s| s.seed))
        .ok_or_else(|| CliError::Validation(String::from("simulation needs --seed or simulate.seed")))?;
    let batches = batches.or(base.map(|s| s.batches)).unwrap_or_else(default_batches);
    Ok(SimulationSettings { arrivals, seed, batches })
}

pub fn run_simulation(cfg: &RunConfig, s: SimulationSettings) -> Result<SimulationResult, CliError> {
    Ok(simulate(&cfg.model, s.arrivals, s.seed, s.batches)?)
}

/// Writes simulated outputs as `<stem>.simulated.<output>.<ext>`.
pub fn run_simulate(cfg: &RunConfig, s: SimulationSettings, round: Option<usize>, out_dir: &Path) -> Result<String, CliError> {
    let sim = run_simulation(cfg, s)?;
    let style = Style::new(&cfg.precision, round);
    let stem = format!("{}.simulated", cfg.stem);
    for kind in &cfg.outputs {
        let table = match kind {
            OutputKind::StationaryTable => output::simulated_table(&sim, style),
            OutputKind::PerformanceReport => output::simulated_report(&sim, style),
            OutputKind::PmfData => output::simulated_pmf(&sim, style),
            OutputKind::CdfData => output::simulated_cdf(&sim, style),
            OutputKind::TransitionMatrixDump => continue,
        };
        output::write(&output::output_path(out_dir, &stem, *kind, cfg.format), &table, cfg.format)?;
    }
    Ok(format!(
        "{stem}: arrivals={} seed={} L={} accepted_fraction={}",
        sim.arrivals_simulated,
        sim.seed,
        style.float(sim.mean_in_system()),
        style.float(sim.accepted_fraction)
    ))
}

/// Largest |analytic − simulated| / SE over all states, and where.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Deviation {
    pub worst: f64,
    pub state: usize,
}

fn deviation(analytic: impl Iterator<Item = f64>, sim: &[f64], se: &[f64]) -> Deviation {
    let mut d = Deviation { worst: 0.0, state: 0 };
    for (n, a) in analytic.enumerate() {
        let s = sim.get(n).copied().unwrap_or(0.0);
        let e = se.get(n).copied().unwrap_or(0.0);
        let gap = (a - s).abs();
        let z = if e > 0.0 {
            gap / e
        } else if gap == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        if z > d.worst {
            d = Deviation { worst: z, state: n };
        }
    }
    d
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub pre_arrival: Deviation,
    pub time_average: Deviation,
    /// Simulated states beyond the analytic range (infinite buffers).
    pub unmatched_mass: f64,
}

pub fn compare(r: &StationaryResult, sim: &SimulationResult) -> Comparison {
    let n = r.time_average.len();
    let pre = deviation(r.arrival.probabilities.iter().map(Real::to_f64), &sim.pre_arrival_freq, &sim.standard_errors.pre_arrival);
    let avg = deviation(
        r.time_average.probabilities.iter().map(Real::to_f64),
        &sim.time_avg_freq,
        &sim.standard_errors.time_average,
    );
    let unmatched_mass = sim.time_avg_freq.iter().skip(n).fold(0.0, |a, b| a + b);
    Comparison { pre_arrival: pre, time_average: avg, unmatched_mass }
}

pub fn run_compare(cfg: &RunConfig, s: SimulationSettings, round: Option<usize>, out_dir: &Path) -> Result<String, CliError> {
    let solved = solve_config(cfg, false)?;
    let sim = run_simulation(cfg, s)?;
    let c = compare(&solved.result, &sim);
    if cfg.outputs.contains(&OutputKind::StationaryTable) {
        let style = Style::new(&cfg.precision, round);
        let table = output::comparison_table(&solved.result, &sim, style);
        let stem = format!("{}.compare", cfg.stem);
        output::write(&output::output_path(out_dir, &stem, OutputKind::StationaryTable, cfg.format), &table, cfg.format)?;
    }
    Ok(format!(
        "{}: max |pi - pi_sim| = {:.3} SE at n={}, max |p - p_sim| = {:.3} SE at n={}, simulated mass beyond N = {:.3e}",
        cfg.stem,
        c.pre_arrival.worst,
        c.pre_arrival.state,
        c.time_average.worst,
        c.time_average.state,
        c.unmatched_mass
    ))
}

/// Runs `job` over `items` on up to `jobs` threads; results keep input order.
pub fn fan_out<T: Sync, R: Send>(items: &[T], jobs: usize, job: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let jobs = jobs.clamp(1, items.len().max(1));
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<R>>> = items.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = job(&items[i]);
                *slots[i].lock().expect("slot") = Some(r);
            });
        }
    });
    slots.into_iter().map(|m| m.into_inner().expect("slot").expect("every item ran")).collect()
}
