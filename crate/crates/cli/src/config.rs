//! Run configuration read from TOML.

use std::path::{Path, PathBuf};

use pac_abstraction::textfmt::sha256_hex;
use pac_abstraction::{
    required_sample_size, Affine1d, BlackBoxSystem, Grid64, Hyperrect64, InputSet64, Spec64, SystemError, Vessel,
};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    pub system: SystemConfig,
    pub grid: BoxGrid,
    pub inputs: BoxGrid,
    pub pac: PacConfig,
    pub spec: SpecConfig,
    #[serde(default)]
    pub validate: ValidateConfig,
    #[serde(default)]
    pub simulate: SimulateConfig,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(tag = "name", rename_all = "lowercase", deny_unknown_fields)]
pub enum SystemConfig {
    Vessel {
        tau: f64,
        #[serde(default = "default_substeps")]
        substeps: usize,
    },
    Affine1d {
        a: f64,
        b: f64,
        #[serde(default = "one")]
        tau: f64,
    },
}

fn default_substeps() -> usize {
    Vessel::<f64>::DEFAULT_SUBSTEPS
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BoxGrid {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub counts: Vec<usize>,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PacConfig {
    pub mu: f64,
    pub delta: f64,
    pub epsilon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_size: Option<u64>,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BoxConfig {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SpecConfig {
    pub target: BoxConfig,
    #[serde(default)]
    pub obstacles: Vec<BoxConfig>,
    pub horizon_seconds: f64,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ValidateConfig {
    #[serde(default = "default_hold_out")]
    pub hold_out: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
}

impl Default for ValidateConfig {
    fn default() -> Self {
        Self {
            hold_out: default_hold_out(),
            trials: default_trials(),
        }
    }
}

fn default_hold_out() -> usize {
    2000
}

fn default_trials() -> usize {
    500
}

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub initial_states: Vec<Vec<f64>>,
}

/// System selected by a config.
#[derive(Clone, Copy, Debug)]
pub enum System {
    Vessel(Vessel<f64>),
    Affine1d(Affine1d<f64>),
}

impl BlackBoxSystem<f64> for System {
    fn state_dim(&self) -> usize {
        match self {
            System::Vessel(s) => s.state_dim(),
            System::Affine1d(s) => s.state_dim(),
        }
    }

    fn input_dim(&self) -> usize {
        match self {
            System::Vessel(s) => s.input_dim(),
            System::Affine1d(s) => s.input_dim(),
        }
    }

    fn step(&self, x: &[f64], u: &[f64]) -> Result<Vec<f64>, SystemError> {
        match self {
            System::Vessel(s) => s.step(x, u),
            System::Affine1d(s) => s.step(x, u),
        }
    }
}

/// Everything derived from a validated config.
#[derive(Clone, Debug)]
pub struct Problem {
    pub system: System,
    pub grid: Grid64,
    pub inputs: InputSet64,
    pub spec: Spec64,
    pub sample_size: u64,
    pub checksum: String,
}

fn make_box(what: &str, lower: &[f64], upper: &[f64]) -> Result<Hyperrect64, String> {
    Hyperrect64::new(lower.to_vec(), upper.to_vec()).map_err(|e| format!("{what}: {e}"))
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn tau(&self) -> f64 {
        match self.system {
            SystemConfig::Vessel { tau, .. } | SystemConfig::Affine1d { tau, .. } => tau,
        }
    }

    pub fn horizon_steps(&self) -> Result<usize, String> {
        let tau = self.tau();
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(format!("tau must be positive, got {tau}"));
        }
        let n = (self.spec.horizon_seconds / tau).floor();
        if !(n >= 1.0) {
            return Err(format!(
                "horizon of {} s at tau = {tau} s gives no steps",
                self.spec.horizon_seconds
            ));
        }
        Ok(n as usize)
    }

    /// SHA-256 of the effective config with `threads` and `out_dir` removed.
    pub fn checksum(&self) -> String {
        let mut canon = self.clone();
        canon.threads = None;
        canon.out_dir = None;
        let text = toml::to_string(&canon).expect("config serializes");
        sha256_hex(text.as_bytes())
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn problem(&self) -> Result<Problem, String> {
        let system = match self.system {
            SystemConfig::Vessel { tau, substeps } => {
                if substeps == 0 {
                    return Err("substeps must be positive".into());
                }
                System::Vessel(Vessel { tau, substeps })
            }
            SystemConfig::Affine1d { a, b, .. } => System::Affine1d(Affine1d { a, b }),
        };
        let domain = make_box("grid", &self.grid.lower, &self.grid.upper)?;
        let grid = Grid64::new(domain, self.grid.counts.clone()).map_err(|e| format!("grid: {e}"))?;
        if grid.dim() != system.state_dim() {
            return Err(format!(
                "grid has {} dimensions but the system state has {}",
                grid.dim(),
                system.state_dim()
            ));
        }
        let ubox = make_box("inputs", &self.inputs.lower, &self.inputs.upper)?;
        let inputs = InputSet64::grid(ubox, &self.inputs.counts).map_err(|e| format!("inputs: {e}"))?;
        if inputs.dim() != system.input_dim() {
            return Err(format!(
                "inputs have {} dimensions but the system takes {}",
                inputs.dim(),
                system.input_dim()
            ));
        }
        let eps = grid.achieved_precision();
        if eps > self.pac.epsilon {
            return Err(format!(
                "achieved precision {eps} exceeds requested epsilon {}",
                self.pac.epsilon
            ));
        }
        let required = required_sample_size(self.pac.mu, self.pac.delta, grid.n_x(), inputs.n_u())
            .map_err(|e| format!("pac: {e}"))?;
        let sample_size = self.pac.sample_size.unwrap_or(required);
        if sample_size < required {
            return Err(format!("sample_size {sample_size} is below the required {required}"));
        }
        let target = make_box("spec.target", &self.spec.target.lower, &self.spec.target.upper)?;
        let obstacles = self
            .spec
            .obstacles
            .iter()
            .enumerate()
            .map(|(i, o)| make_box(&format!("spec.obstacles[{i}]"), &o.lower, &o.upper))
            .collect::<Result<Vec<_>, _>>()?;
        let spec = Spec64::new(target, obstacles, self.horizon_steps()?).map_err(|e| format!("spec: {e}"))?;
        spec.check_domain(grid.domain()).map_err(|e| format!("spec: {e}"))?;
        if self.validate.hold_out == 0 || self.validate.trials == 0 {
            return Err("validate.hold_out and validate.trials must be positive".into());
        }
        Ok(Problem {
            system,
            grid,
            inputs,
            spec,
            sample_size,
            checksum: self.checksum(),
        })
    }
}
