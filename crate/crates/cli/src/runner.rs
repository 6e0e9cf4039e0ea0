//! Scenario execution and artifact layout.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use echo_core::analytic::{
    chaotic_sea_lyapunov, io_echo_exact, lyapunov_benettin_with, ChaoticSeaEstimate, IOEchoParams, LyapunovEstimate,
};
use echo_core::noise::{run_echo_ensemble_with, run_master_echo, Checkpoint, EnsembleOptions, NoiseKernel};
use echo_core::observables::{fit_decay_rates_with, window_log_rate, DecayTrace, RateFit};
use echo_core::phase_space::snapshot::write_wigner;
use echo_core::phase_space::{momentum_dispersion, wigner_transform_with, FftPair};
use echo_core::propagate::{EvolutionParams, Potential};
use echo_core::EchoError;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{RunMode, ScenarioConfig};
use crate::error::CliError;
use crate::output::{scan_csv, time_tag, write_json, write_ratefit, write_text, write_trace, ScanRow};

/// What a finished run left behind.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub output_dir: PathBuf,
    pub files: Vec<String>,
    pub trace: Option<DecayTrace>,
    pub fit: Option<RateFit>,
    pub scan: Option<ScanSummary>,
}

impl RunOutcome {
    fn new(dir: &Path) -> Self {
        Self { output_dir: dir.to_path_buf(), files: Vec::new(), trace: None, fit: None, scan: None }
    }
}

/// Checkpoint steps nearest to the requested snapshot times.
fn snapshot_steps(times: &[f64], params: &EvolutionParams<f64>) -> Result<BTreeSet<usize>, CliError> {
    let steps = params.checkpoint_steps()?;
    Ok(times
        .iter()
        .map(|t| {
            *steps
                .iter()
                .min_by(|a, b| {
                    (params.time_of_step(**a) - t).abs().total_cmp(&(params.time_of_step(**b) - t).abs())
                })
                .unwrap()
        })
        .collect())
}

fn run_id(cfg: &ScenarioConfig) -> String {
    format!("{:?}-seed{}", cfg.run.mode, cfg.run.seed).to_lowercase()
}

/// Runs a trace-producing solver (`ensemble` or `master`) for diffusion `d`
/// (`None` keeps the configured kernel), writing snapshots into `dir`.
fn solve_trace(
    cfg: &ScenarioConfig,
    solver: RunMode,
    d: Option<f64>,
    dir: Option<&Path>,
    files: &mut Vec<String>,
) -> Result<DecayTrace, CliError> {
    let grid = cfg.grid()?;
    let h = cfg.hamiltonian()?;
    let psi = cfg.initial_state(&grid)?;
    let params = cfg.evolution()?;
    let snaps = match dir {
        Some(_) => snapshot_steps(&cfg.run.snapshot_times, &params)?,
        None => BTreeSet::new(),
    };
    let fft = FftPair::new(grid.n_points());
    let id = run_id(cfg);
    let mut written = Vec::new();
    let mut observer = |c: &Checkpoint<'_, f64>| -> echo_core::Result<()> {
        if let (Some(dir), Some(rho)) = (dir, c.rho_bar) {
            if snaps.contains(&c.step) {
                let name = format!("wigner_{}.bin", time_tag(c.time));
                write_wigner(&dir.join(&name), &wigner_transform_with(rho, &fft), c.time, &id)?;
                written.push(name);
            }
        }
        Ok(())
    };
    let trace = match solver {
        RunMode::Ensemble => {
            let mut process = cfg.noise_process();
            if let Some(d) = d {
                process.kernel = NoiseKernel::White { diffusion_d: d };
            }
            let options = EnsembleOptions {
                purity: true,
                diagnostics: cfg.run.diagnostics,
                rho_bar_steps: snaps.iter().copied().collect(),
            };
            run_echo_ensemble_with(&psi, &h, &process, &params, &options, &mut observer)?
        }
        RunMode::Master => {
            let d = match d {
                Some(d) => d,
                None => cfg.diffusion_d()?,
            };
            run_master_echo(&psi, &h, &cfg.coupling(), d, &params, cfg.run.diagnostics, &mut observer)?
        }
        _ => unreachable!(),
    };
    for name in written {
        files.push(name.clone());
        files.push(name.replace(".bin", ".json"));
    }
    Ok(trace)
}

fn fit_trace(cfg: &ScenarioConfig, trace: &DecayTrace, d: f64) -> Result<RateFit, CliError> {
    let opts = cfg.run.fit.options(cfg.run.seed);
    Ok(fit_decay_rates_with(trace, d, cfg.run.fit.k_p_hint, &opts)?)
}

fn kernel_d(cfg: &ScenarioConfig) -> f64 {
    match cfg.kernel() {
        NoiseKernel::White { diffusion_d } => diffusion_d,
        NoiseKernel::Flat { .. } => 0.0,
    }
}

fn write_manifest(cfg: &ScenarioConfig, out: &RunOutcome, started: SystemTime, clock: Instant, status: &str) -> Result<(), CliError> {
    let manifest = json!({
        "code_version": env!("CARGO_PKG_VERSION"),
        "config": cfg,
        "seed": cfg.run.seed,
        "mode": cfg.run.mode,
        "status": status,
        "files": out.files,
        "started_unix": started.duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0),
        "wall_clock_seconds": clock.elapsed().as_secs_f64(),
    });
    write_json(&out.output_dir.join("manifest.json"), &manifest)
}

/// Validates `cfg`, runs its mode and writes every artifact plus a manifest.
/// The manifest is also written when the run fails after producing output.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunOutcome, CliError> {
    cfg.validate()?;
    let dir = cfg.run.output_dir.clone();
    std::fs::create_dir_all(&dir)?;
    let started = SystemTime::now();
    let clock = Instant::now();
    let mut out = RunOutcome::new(&dir);
    let result = match cfg.run.mode {
        RunMode::Ensemble | RunMode::Master => run_trace_mode(cfg, &mut out),
        RunMode::ScanD => run_scan_d_into(cfg, &mut out),
        RunMode::IoOracle => run_io_oracle_mode(cfg, &mut out),
        RunMode::Lyapunov => run_lyapunov_mode(cfg, &mut out),
    };
    let status = match &result {
        Ok(()) => "ok",
        Err(e) => e.category(),
    };
    if !(result.is_err() && out.files.is_empty()) {
        out.files.push("manifest.json".into());
        write_manifest(cfg, &out, started, clock, status)?;
    }
    result.map(|_| out)
}

fn run_trace_mode(cfg: &ScenarioConfig, out: &mut RunOutcome) -> Result<(), CliError> {
    let dir = out.output_dir.clone();
    let trace = solve_trace(cfg, cfg.run.mode, None, Some(&dir), &mut out.files)?;
    write_trace(&dir, &trace)?;
    out.files.push("trace.csv".into());
    out.trace = Some(trace.clone());
    if cfg.run.fit.enabled {
        let fit = fit_trace(cfg, &trace, kernel_d(cfg))?;
        write_ratefit(&dir, &fit)?;
        out.files.push("ratefit.json".into());
        out.fit = Some(fit);
    }
    Ok(())
}

fn run_io_oracle_mode(cfg: &ScenarioConfig, out: &mut RunOutcome) -> Result<(), CliError> {
    let h = cfg.hamiltonian()?;
    let Potential::InvertedOscillator { lambda0 } = h.potential else { unreachable!() };
    let hbar = cfg.grid.hbar;
    let sigma_i = momentum_dispersion(hbar, cfg.initial_state.sigma_x);
    let io = IOEchoParams::from_diffusion(lambda0, cfg.diffusion_d()?, hbar, sigma_i)?;
    let params = cfg.evolution()?;
    let times: Vec<f64> = params.checkpoint_steps()?.into_iter().map(|s| params.time_of_step(s)).collect();
    let trace = io_trace(&io, &times)?;
    write_trace(&out.output_dir, &trace)?;
    out.files.push("trace.csv".into());
    out.trace = Some(trace.clone());
    if cfg.run.fit.enabled {
        let fit = fit_trace(cfg, &trace, cfg.diffusion_d()?)?;
        write_ratefit(&out.output_dir, &fit)?;
        out.files.push("ratefit.json".into());
        out.fit = Some(fit);
    }
    Ok(())
}

/// Closed-form inverted-oscillator echo sampled at `times`.
pub fn io_trace(io: &IOEchoParams<f64>, times: &[f64]) -> Result<DecayTrace, CliError> {
    let m = times.iter().map(|t| io_echo_exact(io, *t)).collect::<Result<Vec<_>, _>>()?;
    let mut trace = DecayTrace::exact(times.to_vec(), m)?;
    trace.metadata = json!({"solver": "io_exact", "lambda0": io.lambda0, "r": io.r()});
    Ok(trace)
}

/// `echo-sim oracle`: the closed form on `t = 0, dt, ..., t_max`.
pub fn run_oracle(lambda0: f64, r: f64, t_max: f64, dt: f64) -> Result<DecayTrace, CliError> {
    if !(dt > 0.0) || !(t_max > 0.0) || !(r >= 0.0) {
        return Err(CliError::Config("oracle needs dt > 0, t_max > 0 and r >= 0".into()));
    }
    let io = IOEchoParams::from_r(lambda0, r)?;
    let n = (t_max / dt).round() as usize;
    if ((n as f64) * dt - t_max).abs() > 1e-9 * t_max {
        return Err(CliError::Config(format!("t_max / dt = {} is not an integer", t_max / dt)));
    }
    let times: Vec<f64> = (0..=n).map(|k| k as f64 * dt).collect();
    io_trace(&io, &times)
}

#[derive(Debug, Clone, Serialize)]
pub struct LyapunovReport {
    pub x0: f64,
    pub p0: f64,
    pub single: Result<LyapunovJson, String>,
    pub lambda_star: Option<f64>,
    pub lambda_star_stderr: Option<f64>,
    pub n_accepted: usize,
    pub n_rejected: usize,
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LyapunovJson {
    pub lambda: f64,
    pub stderr: f64,
    pub t_transient: f64,
    pub n_renormalizations: usize,
}

impl From<LyapunovEstimate<f64>> for LyapunovJson {
    fn from(e: LyapunovEstimate<f64>) -> Self {
        Self { lambda: e.lambda, stderr: e.stderr, t_transient: e.t_transient, n_renormalizations: e.n_renormalizations }
    }
}

/// Reference exponent of the configured Hamiltonian, `None` when no
/// chaotic trajectory is found.
pub fn reference_lyapunov(cfg: &ScenarioConfig) -> Result<Result<ChaoticSeaEstimate<f64>, EchoError>, CliError> {
    let h = cfg.hamiltonian()?;
    let l = &cfg.run.lyapunov;
    let est = chaotic_sea_lyapunov(
        &h,
        (l.x_range[0], l.x_range[1]),
        (l.p_range[0], l.p_range[1]),
        l.n_trajectories,
        cfg.run.seed,
        l.t_total,
        l.renorm_every,
        &l.options(),
    );
    match est {
        Ok(e) => Ok(Ok(e)),
        Err(e @ EchoError::NoDecay(_)) => Ok(Err(e)),
        Err(e) => Err(e.into()),
    }
}

fn run_lyapunov_mode(cfg: &ScenarioConfig, out: &mut RunOutcome) -> Result<(), CliError> {
    let h = cfg.hamiltonian()?;
    let l = &cfg.run.lyapunov;
    let (x0, p0) = (cfg.initial_state.x0, cfg.initial_state.p0);
    let single = lyapunov_benettin_with(&h, x0, p0, l.t_total, l.renorm_every, &l.options())
        .map(LyapunovJson::from)
        .map_err(|e| e.to_string());
    let sea = reference_lyapunov(cfg)?;
    let report = match sea {
        Ok(s) => LyapunovReport {
            x0,
            p0,
            single,
            lambda_star: Some(s.lambda_star),
            lambda_star_stderr: Some(s.stderr),
            n_accepted: s.accepted.len(),
            n_rejected: s.rejected,
            note: None,
        },
        Err(e) => LyapunovReport {
            x0,
            p0,
            single,
            lambda_star: None,
            lambda_star_stderr: None,
            n_accepted: 0,
            n_rejected: 0,
            note: Some(e.to_string()),
        },
    };
    write_json(&out.output_dir.join("lyapunov.json"), &report)?;
    out.files.push("lyapunov.json".into());
    Ok(())
}

/// Per-D result of a scan.
#[derive(Debug, Clone, Serialize)]
pub struct ScanEntry {
    pub d: f64,
    pub fit: Option<RateFit>,
    /// `-d ln(purity)/dt` over the echo fit window.
    pub purity_rate: Option<f64>,
    pub error: Option<String>,
    pub trace_file: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanSummary {
    pub entries: Vec<ScanEntry>,
    pub lambda_ref: Option<f64>,
    pub lambda_ref_stderr: Option<f64>,
    pub plateau_detected: bool,
    /// Mean Lyapunov-rate of the largest-D half.
    pub plateau_level: Option<f64>,
    /// `(max - min) / mean` over that half.
    pub plateau_spread: Option<f64>,
    pub failed: usize,
}

/// Relative spread of the largest-D half of the rates; `rates` must be in
/// increasing D order.
pub fn plateau_statistics(rates: &[f64]) -> Option<(f64, f64)> {
    if rates.len() < 2 {
        return None;
    }
    let half = &rates[rates.len() / 2..];
    let mean = half.iter().sum::<f64>() / half.len() as f64;
    let (lo, hi) = half.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    (mean > 0.0).then(|| (mean, (hi - lo) / mean))
}

/// Runs the scenario for every D of the scan block and fits each trace.
pub fn run_scan_d(cfg: &ScenarioConfig) -> Result<RunOutcome, CliError> {
    let mut c = cfg.clone();
    c.run.mode = RunMode::ScanD;
    run_scenario(&c)
}

fn run_scan_d_into(cfg: &ScenarioConfig, out: &mut RunOutcome) -> Result<(), CliError> {
    let scan = cfg.run.scan.as_ref().unwrap();
    let mut order: Vec<f64> = scan.d_values.clone();
    order.sort_by(f64::total_cmp);
    let dir = out.output_dir.clone();
    let results: Vec<(f64, Result<(DecayTrace, Vec<String>), CliError>)> = order
        .par_iter()
        .map(|&d| {
            let mut files = Vec::new();
            (d, solve_trace(cfg, scan.solver, Some(d), None, &mut files).map(|t| (t, files)))
        })
        .collect();
    let mut entries = Vec::new();
    let mut first_error: Option<CliError> = None;
    for (d, res) in results {
        let mut entry = ScanEntry { d, fit: None, purity_rate: None, error: None, trace_file: None };
        match res {
            Ok((trace, _)) => {
                let name = format!("trace_d{d}.csv");
                write_text(&dir.join(&name), &crate::output::trace_csv(&trace))?;
                out.files.push(name.clone());
                entry.trace_file = Some(name);
                match fit_trace(cfg, &trace, d) {
                    Ok(fit) => {
                        let purity = trace.purity_unbiased.as_ref().or(trace.purity.as_ref());
                        entry.purity_rate = purity.and_then(|p| window_log_rate(&trace.times, p, fit.fit_window).ok());
                        entry.fit = Some(fit);
                    }
                    Err(e) => {
                        entry.error = Some(e.to_string());
                        first_error.get_or_insert(e);
                    }
                }
            }
            Err(e) => {
                entry.error = Some(e.to_string());
                first_error.get_or_insert(e);
            }
        }
        entries.push(entry);
    }
    let reference = reference_lyapunov(cfg)?.ok();
    let lambda_ref = reference.as_ref().map(|r| r.lambda_star);
    let rows: Vec<ScanRow> = entries
        .iter()
        .map(|e| ScanRow {
            d: e.d,
            rate_lyapunov: e.fit.as_ref().map(|f| f.rate_lyapunov),
            rate_fgr: e.fit.as_ref().map(|f| f.rate_fgr),
            rate_err: e.fit.as_ref().map(|f| f.rate_lyapunov_err),
        })
        .collect();
    write_text(&dir.join("scan.csv"), &scan_csv(&rows, lambda_ref))?;
    out.files.push("scan.csv".into());
    let rates: Vec<f64> = rows.iter().filter_map(|r| r.rate_lyapunov).collect();
    let complete = rates.len() == rows.len();
    let plateau = if complete { plateau_statistics(&rates) } else { None };
    let summary = ScanSummary {
        failed: entries.iter().filter(|e| e.error.is_some()).count(),
        entries,
        lambda_ref,
        lambda_ref_stderr: reference.as_ref().map(|r| r.stderr),
        plateau_detected: plateau.is_some_and(|(_, s)| s < 0.25),
        plateau_level: plateau.map(|p| p.0),
        plateau_spread: plateau.map(|p| p.1),
    };
    write_json(&dir.join("scan_summary.json"), &summary)?;
    out.files.push("scan_summary.json".into());
    out.scan = Some(summary);
    match first_error {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plateau_uses_the_upper_half() {
        let (m, s) = plateau_statistics(&[0.1, 0.2, 0.5, 0.52]).unwrap();
        assert!((m - 0.51).abs() < 1e-12 && (s - 0.02 / 0.51).abs() < 1e-12);
        assert!(plateau_statistics(&[0.1]).is_none());
    }

    #[test]
    fn oracle_value_at_one() {
        let tr = run_oracle(1.0, 0.25, 2.0, 0.05).unwrap();
        let k = tr.times.iter().position(|t| (t - 1.0).abs() < 1e-12).unwrap();
        assert!((tr.m_bar[k] - 0.7197).abs() < 1e-4);
        assert!(run_oracle(1.0, 0.25, 1.0, 0.3).is_err());
    }
}
