//! Run configuration, the observable battery, and output conventions.
//!
//! A run is fully determined by a [`RunConfig`] (loadable from TOML, with CLI
//! flags overriding file values) and the seed it carries. Every output row
//! embeds the config hash and the crate version so reruns are attributable.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config io: {0}")]
    Io(#[from] std::io::Error),
    #[error("config parse: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Arithmetic mode for the geometry kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Rational,
    Float,
}

/// The fixed C^1 observable battery.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    One,
    X,
    Y,
    Xy,
    Cos2PiX,
    Sin2PiY,
    Cos2PiXSin2PiY,
}

impl Observable {
    pub const BATTERY: [Observable; 7] = [
        Observable::One,
        Observable::X,
        Observable::Y,
        Observable::Xy,
        Observable::Cos2PiX,
        Observable::Sin2PiY,
        Observable::Cos2PiXSin2PiY,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            Observable::One => "one",
            Observable::X => "x",
            Observable::Y => "y",
            Observable::Xy => "xy",
            Observable::Cos2PiX => "cos2pix",
            Observable::Sin2PiY => "sin2piy",
            Observable::Cos2PiXSin2PiY => "cos2pix_sin2piy",
        }
    }

    pub fn from_id(id: &str) -> Option<Self> {
        Self::BATTERY.iter().copied().find(|o| o.id() == id)
    }

    #[inline]
    pub fn eval(&self, p: [f64; 2]) -> f64 {
        let tau = 2.0 * std::f64::consts::PI;
        match self {
            Observable::One => 1.0,
            Observable::X => p[0],
            Observable::Y => p[1],
            Observable::Xy => p[0] * p[1],
            Observable::Cos2PiX => (tau * p[0]).cos(),
            Observable::Sin2PiY => (tau * p[1]).sin(),
            Observable::Cos2PiXSin2PiY => (tau * p[0]).cos() * (tau * p[1]).sin(),
        }
    }

    /// `sup |phi| + sup |grad phi|` on the closed square.
    pub fn c1_norm(&self) -> f64 {
        let tau = 2.0 * std::f64::consts::PI;
        match self {
            Observable::One => 1.0,
            Observable::X | Observable::Y => 2.0,
            Observable::Xy => 1.0 + 2f64.sqrt(),
            Observable::Cos2PiX | Observable::Sin2PiY => 1.0 + tau,
            Observable::Cos2PiXSin2PiY => 1.0 + tau,
        }
    }

    /// Exact Lebesgue mean on the unit square.
    pub fn lebesgue_mean(&self) -> f64 {
        match self {
            Observable::One => 1.0,
            Observable::X | Observable::Y => 0.5,
            Observable::Xy => 0.25,
            _ => 0.0,
        }
    }
}

/// Batch-run configuration. Defaults are tuned so the full acceptance suite
/// fits in memory and minutes on a single core; see the README for the cost
/// model in `t` (smaller `t` converges in fewer pushforward steps but needs
/// more accuracy per step).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub mode: Mode,
    /// Parameter grid as exact fractions `num/den`.
    pub t_grid: Vec<(i64, i64)>,
    pub battery: Vec<Observable>,
    /// Gauss-Legendre order for line and leaf quadrature.
    pub gl_order: usize,
    /// Arc length above which a quadrature panel is subdivided.
    pub gl_panel: f64,
    /// Vertical lines of the pushforward rule.
    pub lines: usize,
    /// Budget of fragments per evolved line or family before resampling.
    pub fragment_budget: usize,
    /// Particles kept when an evolution is resampled.
    pub resample_particles: usize,
    /// Leaf budget for the streaming exact phase of the response series.
    pub series_dfs_leaves: usize,
    /// Iteration cap for physical-measure estimation.
    pub n_cap: usize,
    /// Convergence tolerance for physical-measure estimation.
    pub mu_tol: f64,
    /// Pullback depth cap for singularity arrangements.
    pub k_max: u32,
    /// Truncation order cap for the response series.
    pub series_k: usize,
    /// Monte-Carlo sample count for oracle cross-checks.
    pub mc_samples: u64,
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Float,
            t_grid: vec![(1, 64), (1, 128), (1, 256), (1, 512)],
            battery: Observable::BATTERY.to_vec(),
            gl_order: 8,
            gl_panel: 0.4,
            lines: 2048,
            fragment_budget: 4_000_000,
            resample_particles: 400_000,
            series_dfs_leaves: 40_000_000,
            n_cap: 24,
            mu_tol: 1e-4,
            k_max: 8,
            series_k: 40,
            mc_samples: 10_000_000,
            seed: 20_260_810,
            out_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        let cfg: RunConfig = toml::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for &(num, den) in &self.t_grid {
            if den <= 0 || num < 0 || num * 8 > den {
                return Err(ConfigError::Invalid(format!(
                    "t = {}/{} outside [0, 1/8]",
                    num, den
                )));
            }
        }
        let positive = [
            ("gl_order", self.gl_order),
            ("lines", self.lines),
            ("fragment_budget", self.fragment_budget),
            ("resample_particles", self.resample_particles),
            ("n_cap", self.n_cap),
            ("series_k", self.series_k),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(ConfigError::Invalid(format!("{} must be positive", name)));
            }
        }
        if self.mu_tol <= 0.0 || self.gl_panel <= 0.0 {
            return Err(ConfigError::Invalid("tolerances must be positive".into()));
        }
        Ok(())
    }

    pub fn t_values(&self) -> Vec<f64> {
        self.t_grid
            .iter()
            .map(|&(n, d)| n as f64 / d as f64)
            .collect()
    }

    /// FNV-1a hash of the canonical TOML serialization, as 16 hex digits.
    pub fn hash(&self) -> String {
        let text = toml::to_string(self).expect("config serializes");
        format!("{:016x}", fnv1a(text.as_bytes()))
    }
}

fn fnv1a(data: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in data {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Minimal CSV writer: plain rows, no quoting (all fields are numbers, ids
/// or hashes by construction).
pub struct CsvWriter {
    file: std::fs::File,
}

impl CsvWriter {
    pub fn create(path: &Path, header: &[&str]) -> std::io::Result<Self> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let mut file = std::fs::File::create(path)?;
        writeln!(file, "{}", header.join(","))?;
        Ok(Self { file })
    }

    pub fn row(&mut self, fields: &[String]) -> std::io::Result<()> {
        writeln!(self.file, "{}", fields.join(","))
    }
}
