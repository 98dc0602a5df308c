//! Experiment configuration: one flat, JSON-serializable record per run.

use std::fmt;
use std::path::PathBuf;

use lattice_resonance::defaults;
use lattice_resonance::generator::Profile;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Spectrum,
    Resonances,
    Scaling,
    Lap,
    Kernel,
    Verify,
    Xcheck,
    BsDump,
    Generate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Resonances => "resonances",
            Command::Scaling => "scaling",
            Command::Lap => "lap",
            Command::Kernel => "kernel",
            Command::Verify => "verify",
            Command::Xcheck => "xcheck",
            Command::BsDump => "bs-dump",
            Command::Generate => "generate",
        }
    }

    fn needs_spec(self) -> bool {
        !matches!(self, Command::Kernel | Command::Generate)
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, thiserror::Error)]
#[error("invalid configuration: {0}")]
pub struct ConfigError(pub String);

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_window() -> usize {
    defaults::WINDOW_HALF_WIDTH
}
fn default_grid() -> usize {
    defaults::GRID_SIZE
}
fn default_r_min() -> f64 {
    0.02
}
fn default_r_max() -> f64 {
    0.2
}
fn default_nodes() -> usize {
    defaults::CONTOUR_NODES
}
fn default_sectors() -> usize {
    defaults::SCAN_SECTORS
}
fn default_continuation_radius() -> f64 {
    defaults::EPSILON0
}
fn default_theta() -> [f64; 2] {
    [0.0, 0.05]
}
fn default_interval() -> [f64; 2] {
    [1.0, 3.0]
}
fn default_epsilons() -> Vec<f64> {
    defaults::epsilon_ladder()
}
fn default_energies() -> usize {
    41
}
fn default_lambda() -> [f64; 2] {
    [0.1, 0.05]
}
fn default_delta_band() -> f64 {
    defaults::DELTA_BAND
}
fn default_gamma() -> f64 {
    1.0
}
fn default_fiber_dim() -> usize {
    1
}

/// Every knob of every command. Fields a command does not use are ignored by it but still
/// take part in the config hash.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    #[serde(default)]
    pub spec_path: Option<PathBuf>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    /// Half-width `N` of the lattice window.
    #[serde(default = "default_window")]
    pub window: usize,
    /// Window half-widths for `spectrum`; empty means `[N, 2N]`.
    #[serde(default)]
    pub windows: Vec<usize>,
    #[serde(default = "default_grid")]
    pub grid: usize,
    /// `0` or `4`; absent means both thresholds where that makes sense.
    #[serde(default)]
    pub threshold: Option<f64>,
    #[serde(default = "default_r_min")]
    pub r_min: f64,
    #[serde(default = "default_r_max")]
    pub r_max: f64,
    #[serde(default = "default_nodes")]
    pub nodes: usize,
    #[serde(default = "default_sectors")]
    pub sectors: usize,
    #[serde(default = "default_continuation_radius")]
    pub continuation_radius: f64,
    #[serde(default = "default_theta")]
    pub theta: [f64; 2],
    #[serde(default = "default_interval")]
    pub interval: [f64; 2],
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
    #[serde(default = "default_energies")]
    pub energies: usize,
    #[serde(default)]
    pub phi: i64,
    #[serde(default)]
    pub psi: i64,
    #[serde(default = "default_lambda")]
    pub lambda: [f64; 2],
    #[serde(default = "default_delta_band")]
    pub delta_band: f64,
    #[serde(default)]
    pub profile: Option<Profile>,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_fiber_dim")]
    pub fiber_dim: usize,
}

impl ExperimentConfig {
    pub fn new(command: Command) -> Self {
        ExperimentConfig {
            command,
            spec_path: None,
            output_dir: default_output_dir(),
            seed: 0,
            window: default_window(),
            windows: Vec::new(),
            grid: default_grid(),
            threshold: None,
            r_min: default_r_min(),
            r_max: default_r_max(),
            nodes: default_nodes(),
            sectors: default_sectors(),
            continuation_radius: default_continuation_radius(),
            theta: default_theta(),
            interval: default_interval(),
            epsilons: default_epsilons(),
            energies: default_energies(),
            phi: 0,
            psi: 0,
            lambda: default_lambda(),
            delta_band: default_delta_band(),
            profile: None,
            gamma: default_gamma(),
            fiber_dim: default_fiber_dim(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let config: ExperimentConfig = serde_json::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the compact JSON form.
    pub fn hash(&self) -> String {
        let compact = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&compact))
    }

    pub fn effective_windows(&self) -> Vec<usize> {
        if self.windows.is_empty() {
            vec![self.window, 2 * self.window]
        } else {
            self.windows.clone()
        }
    }

    /// Checks the numeric parameters the command will use against the engine's preconditions.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |msg: String| Err(ConfigError(msg));
        let finite = |name: &str, v: f64| if v.is_finite() { Ok(()) } else { Err(ConfigError(format!("{name} must be finite, got {v}"))) };
        if self.command.needs_spec() && self.spec_path.is_none() {
            return fail(format!("{} needs spec_path", self.command));
        }
        for (name, v) in [
            ("r_min", self.r_min),
            ("r_max", self.r_max),
            ("continuation_radius", self.continuation_radius),
            ("delta_band", self.delta_band),
            ("gamma", self.gamma),
        ] {
            finite(name, v)?;
        }
        for v in self.theta.iter().chain(&self.interval).chain(&self.lambda).chain(&self.epsilons) {
            finite("numeric parameter", *v)?;
        }
        if self.window == 0 || self.window > 5000 {
            return fail(format!("window must lie in 1..=5000, got {}", self.window));
        }
        if let Some(mu) = self.threshold {
            if mu != 0.0 && mu != 4.0 {
                return fail(format!("threshold must be 0 or 4, got {mu}"));
            }
        }
        match self.command {
            Command::Spectrum => {
                let w = self.effective_windows();
                if w.len() < 2 || w.windows(2).any(|p| p[1] <= p[0]) || w.iter().any(|&n| n == 0 || n > 2000) {
                    return fail(format!("windows must be at least two increasing values in 1..=2000, got {w:?}"));
                }
                if !(self.delta_band > 0.0) {
                    return fail(format!("delta_band must be positive, got {}", self.delta_band));
                }
            }
            Command::Resonances | Command::Xcheck => {
                if !(self.r_min > 0.0 && self.r_max > self.r_min) {
                    return fail(format!("need 0 < r_min < r_max, got {} and {}", self.r_min, self.r_max));
                }
                if !(self.continuation_radius > 0.0 && self.continuation_radius < 2.0 && self.r_max <= self.continuation_radius) {
                    return fail(format!(
                        "need r_max <= continuation_radius < 2, got {} and {}",
                        self.r_max, self.continuation_radius
                    ));
                }
                if !(16..=4096).contains(&self.nodes) || self.sectors == 0 || self.sectors > 64 {
                    return fail(format!("nodes must lie in 16..=4096 and sectors in 1..=64, got {} and {}", self.nodes, self.sectors));
                }
            }
            Command::Lap => {
                let [a, b] = self.interval;
                if !(a > 0.0 && b < 4.0 && a <= b) {
                    return fail(format!("interval must lie inside (0, 4), got [{a}, {b}]"));
                }
                if self.epsilons.len() < 2 || self.epsilons.iter().any(|e| *e <= 0.0) || self.epsilons.windows(2).any(|w| w[1] >= w[0]) {
                    return fail("epsilons must be at least two positive, strictly decreasing values".into());
                }
                if self.energies == 0 || self.energies > 10_000 {
                    return fail(format!("energies must lie in 1..=10000, got {}", self.energies));
                }
            }
            Command::Generate => {
                if self.profile.is_none() {
                    return fail("generate needs a profile".into());
                }
                if !(self.gamma > 0.0) || self.fiber_dim == 0 || self.fiber_dim > 64 {
                    return fail(format!("need gamma > 0 and fiber_dim in 1..=64, got {} and {}", self.gamma, self.fiber_dim));
                }
            }
            Command::Scaling | Command::Kernel | Command::Verify | Command::BsDump => {}
        }
        if matches!(self.command, Command::Scaling | Command::Xcheck) && (self.grid < 64 || !self.grid.is_power_of_two() || self.grid > 8192) {
            return fail(format!("grid must be a power of two in 64..=8192, got {}", self.grid));
        }
        Ok(())
    }
}
