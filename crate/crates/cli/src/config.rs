//! Scenario configuration: one JSON document, unknown keys rejected.

use std::path::{Path, PathBuf};

use echo_core::analytic::BenettinOptions;
use echo_core::noise::{NoiseKernel, NoiseProcess};
use echo_core::observables::FitOptions;
use echo_core::phase_space::{make_gaussian_state, PhaseSpaceGrid, WaveFunction};
use echo_core::propagate::{CouplingFunction, EvolutionParams, HamiltonianSpec, Potential, DEFAULT_LEAKAGE_TOLERANCE};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub grid: GridConfig,
    pub hamiltonian: HamiltonianConfig,
    pub initial_state: InitialStateConfig,
    pub noise: NoiseConfig,
    pub evolution: EvolutionConfig,
    pub run: RunConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n_points: usize,
    pub x_min: f64,
    pub x_max: f64,
    #[serde(default = "one")]
    pub hbar: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianConfig {
    /// `null` freezes the kinetic term.
    #[serde(default = "some_one")]
    pub mass: Option<f64>,
    pub potential: PotentialConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialConfig {
    DoubleWell { a4: f64, a2: f64, drive_amp: f64, drive_freq: f64 },
    InvertedOscillator { lambda0: f64 },
    Harmonic { omega: f64 },
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialStateConfig {
    pub x0: f64,
    #[serde(default)]
    pub p0: f64,
    pub sigma_x: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelConfig {
    White { diffusion_d: f64 },
    Flat { variance_nu0: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CouplingConfig {
    Position,
    Tabulated(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub kernel: KernelConfig,
    #[serde(default = "position")]
    pub coupling: CouplingConfig,
    pub n_realizations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub t_max: f64,
    pub store_every: usize,
    #[serde(default = "default_leakage")]
    pub leakage_tolerance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    Ensemble,
    Master,
    ScanD,
    IoOracle,
    Lyapunov,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: RunMode,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub scan: Option<ScanConfig>,
    #[serde(default)]
    pub fit: FitConfig,
    /// Record `sigma_bar` and `sigma_echo` at every checkpoint.
    #[serde(default)]
    pub diagnostics: bool,
    /// Times at which the Wigner function of the average state is saved.
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    #[serde(default)]
    pub lyapunov: LyapunovConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub d_values: Vec<f64>,
    /// Solver used per D value.
    #[serde(default = "ensemble_mode")]
    pub solver: RunMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    #[serde(default = "yes")]
    pub enabled: bool,
    #[serde(default)]
    pub k_p_hint: Option<f64>,
    #[serde(default)]
    pub window: Option<[f64; 2]>,
    #[serde(default)]
    pub single_only: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self { enabled: true, k_p_hint: None, window: None, single_only: false }
    }
}

impl FitConfig {
    pub fn options(&self, seed: u64) -> FitOptions {
        FitOptions { window: self.window, single_only: self.single_only, seed, ..FitOptions::default() }
    }
}

/// Benettin settings for the reference exponent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LyapunovConfig {
    pub dt: f64,
    pub t_total: f64,
    pub renorm_every: f64,
    pub n_trajectories: usize,
    pub x_range: [f64; 2],
    pub p_range: [f64; 2],
    pub escape_bound: f64,
}

impl Default for LyapunovConfig {
    fn default() -> Self {
        Self {
            dt: 1e-4,
            t_total: 200.0,
            renorm_every: 0.1,
            n_trajectories: 20,
            x_range: [-4.0, 4.0],
            p_range: [-8.0, 8.0],
            escape_bound: 1e6,
        }
    }
}

impl LyapunovConfig {
    pub fn options(&self) -> BenettinOptions<f64> {
        BenettinOptions { dt: self.dt, escape_bound: self.escape_bound, ..BenettinOptions::default() }
    }
}

fn one() -> f64 {
    1.0
}
fn some_one() -> Option<f64> {
    Some(1.0)
}
fn yes() -> bool {
    true
}
fn position() -> CouplingConfig {
    CouplingConfig::Position
}
fn default_leakage() -> f64 {
    DEFAULT_LEAKAGE_TOLERANCE
}
fn ensemble_mode() -> RunMode {
    RunMode::Ensemble
}

impl ScenarioConfig {
    /// Reads a config, or the `config` member of a run manifest.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| CliError::Config(format!("malformed JSON: {e}")))?;
        let body = match value.get("config") {
            Some(c) if value.get("code_version").is_some() => c.clone(),
            _ => value,
        };
        serde_json::from_value(body).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn grid(&self) -> Result<PhaseSpaceGrid<f64>, CliError> {
        let g = &self.grid;
        Ok(PhaseSpaceGrid::new(g.n_points, g.x_min, g.x_max, g.hbar)?)
    }

    pub fn hamiltonian(&self) -> Result<HamiltonianSpec<f64>, CliError> {
        let potential = match self.hamiltonian.potential {
            PotentialConfig::DoubleWell { a4, a2, drive_amp, drive_freq } => {
                Potential::DoubleWell { a4, a2, drive_amp, drive_freq }
            }
            PotentialConfig::InvertedOscillator { lambda0 } => Potential::InvertedOscillator { lambda0 },
            PotentialConfig::Harmonic { omega } => Potential::Harmonic { omega },
            PotentialConfig::Free => Potential::Free,
        };
        Ok(HamiltonianSpec::new(self.hamiltonian.mass.unwrap_or(f64::INFINITY), potential)?)
    }

    pub fn initial_state(&self, grid: &PhaseSpaceGrid<f64>) -> Result<WaveFunction<f64>, CliError> {
        let s = &self.initial_state;
        Ok(make_gaussian_state(grid, s.x0, s.p0, s.sigma_x)?)
    }

    pub fn coupling(&self) -> CouplingFunction<f64> {
        match &self.noise.coupling {
            CouplingConfig::Position => CouplingFunction::Position,
            CouplingConfig::Tabulated(v) => CouplingFunction::Tabulated(v.clone()),
        }
    }

    pub fn kernel(&self) -> NoiseKernel<f64> {
        match self.noise.kernel {
            KernelConfig::White { diffusion_d } => NoiseKernel::White { diffusion_d },
            KernelConfig::Flat { variance_nu0 } => NoiseKernel::Flat { variance_nu0 },
        }
    }

    pub fn noise_process(&self) -> NoiseProcess<f64> {
        NoiseProcess {
            kernel: self.kernel(),
            coupling: self.coupling(),
            seed: self.run.seed,
            n_realizations: self.noise.n_realizations,
        }
    }

    pub fn evolution(&self) -> Result<EvolutionParams<f64>, CliError> {
        let e = &self.evolution;
        if !(e.leakage_tolerance > 0.0) {
            return Err(CliError::Config("leakage_tolerance must be positive".into()));
        }
        Ok(EvolutionParams::new(e.dt, e.t_max, e.store_every)?.with_leakage_tolerance(e.leakage_tolerance))
    }

    /// White-noise diffusion coefficient, required by master-equation runs.
    pub fn diffusion_d(&self) -> Result<f64, CliError> {
        match self.noise.kernel {
            KernelConfig::White { diffusion_d } => Ok(diffusion_d),
            KernelConfig::Flat { .. } => {
                Err(CliError::Config("this mode needs a white noise kernel".into()))
            }
        }
    }

    /// Checks every precondition of the configured mode before any compute.
    pub fn validate(&self) -> Result<(), CliError> {
        let grid = self.grid()?;
        let h = self.hamiltonian()?;
        match self.run.mode {
            RunMode::Lyapunov => {
                let l = &self.run.lyapunov;
                if l.n_trajectories < 2 || !(l.t_total > l.renorm_every) || !(l.renorm_every >= l.dt) {
                    return Err(CliError::Config(format!("invalid lyapunov block {l:?}")));
                }
                return Ok(());
            }
            RunMode::IoOracle => {
                if !matches!(h.potential, Potential::InvertedOscillator { .. }) {
                    return Err(CliError::Config("io_oracle needs an inverted_oscillator hamiltonian".into()));
                }
                self.diffusion_d()?;
                self.evolution()?;
                return Ok(());
            }
            _ => {}
        }
        self.initial_state(&grid)?;
        self.coupling().values(&grid)?;
        self.noise_process().validate()?;
        let params = self.evolution()?;
        params.check_stability(&grid, &h)?;
        if self.run.snapshot_times.iter().any(|t| !(*t >= 0.0 && *t <= self.evolution.t_max)) {
            return Err(CliError::Config("snapshot_times must lie in [0, t_max]".into()));
        }
        match self.run.mode {
            RunMode::Ensemble => {
                if self.noise.n_realizations < 2 {
                    return Err(CliError::Config("an ensemble needs n_realizations >= 2".into()));
                }
            }
            RunMode::Master => {
                self.diffusion_d()?;
            }
            RunMode::ScanD => {
                let scan = self.run.scan.as_ref().ok_or_else(|| CliError::Config("scan_d needs a scan block".into()))?;
                let d = &scan.d_values;
                if d.len() < 4 {
                    return Err(CliError::Config(format!("scan_d needs at least 4 d_values, got {}", d.len())));
                }
                if d.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
                    return Err(CliError::Config("d_values must be positive".into()));
                }
                let (lo, hi) = d.iter().fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(*v), b.max(*v)));
                if hi < 8.0 * lo {
                    return Err(CliError::Config(format!("d_values must span a factor of 8, got {lo}..{hi}")));
                }
                if !matches!(scan.solver, RunMode::Ensemble | RunMode::Master) {
                    return Err(CliError::Config("scan solver must be ensemble or master".into()));
                }
                if !matches!(self.noise.kernel, KernelConfig::White { .. }) {
                    return Err(CliError::Config("scan_d needs a white noise kernel".into()));
                }
                if scan.solver == RunMode::Ensemble && self.noise.n_realizations < 2 {
                    return Err(CliError::Config("an ensemble needs n_realizations >= 2".into()));
                }
            }
            _ => unreachable!(),
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const SAMPLE: &str = r#"{
        "grid": {"n_points": 64, "x_min": -8.0, "x_max": 8.0},
        "hamiltonian": {"potential": {"harmonic": {"omega": 1.0}}},
        "initial_state": {"x0": 0.5, "sigma_x": 0.8},
        "noise": {"kernel": {"white": {"diffusion_d": 0.1}}, "n_realizations": 4},
        "evolution": {"dt": 0.001, "t_max": 0.2, "store_every": 20},
        "run": {"mode": "ensemble", "output_dir": "out", "seed": 3}
    }"#;

    #[test]
    fn parses_with_defaults() {
        let c = ScenarioConfig::from_json(SAMPLE).unwrap();
        assert_eq!(c.grid.hbar, 1.0);
        assert_eq!(c.hamiltonian.mass, Some(1.0));
        assert_eq!(c.noise.coupling, CouplingConfig::Position);
        assert!(c.run.fit.enabled);
        c.validate().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = SAMPLE.replace("\"x0\"", "\"x_0\"");
        assert!(matches!(ScenarioConfig::from_json(&bad), Err(CliError::Config(_))));
        let bad = SAMPLE.replace("\"seed\": 3", "\"seed\": 3, \"sed\": 1");
        assert!(matches!(ScenarioConfig::from_json(&bad), Err(CliError::Config(_))));
    }

    #[test]
    fn frozen_mass_and_free_potential() {
        let text = SAMPLE
            .replace("{\"potential\": {\"harmonic\": {\"omega\": 1.0}}}", "{\"mass\": null, \"potential\": \"free\"}");
        let c = ScenarioConfig::from_json(&text).unwrap();
        assert!(c.hamiltonian().unwrap().frozen());
    }

    #[test]
    fn scan_preconditions() {
        let mut c = ScenarioConfig::from_json(SAMPLE).unwrap();
        c.run.mode = RunMode::ScanD;
        assert!(c.validate().is_err());
        c.run.scan = Some(ScanConfig { d_values: vec![0.1], solver: RunMode::Ensemble });
        assert!(c.validate().is_err());
        c.run.scan = Some(ScanConfig { d_values: vec![0.1, 0.2, 0.4, 0.6], solver: RunMode::Ensemble });
        assert!(c.validate().is_err());
        c.run.scan = Some(ScanConfig { d_values: vec![0.1, 0.2, 0.4, 0.8], solver: RunMode::Ensemble });
        c.validate().unwrap();
    }

    #[test]
    fn unstable_step_is_a_config_error() {
        let mut c = ScenarioConfig::from_json(SAMPLE).unwrap();
        c.evolution.dt = 0.01;
        c.evolution.t_max = 0.2;
        assert!(matches!(c.validate(), Err(CliError::Config(_))));
    }
}
