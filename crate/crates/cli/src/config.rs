//! Experiment configuration: a JSON file whose fields command-line flags
//! may override.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use boolean_lab::process::{GrainDistribution, ModelConfig, Probe};
use boolean_lab::quad::Tolerance;
use boolean_lab::Window;
use serde::{Deserialize, Serialize};

/// Quadrature targets of the covariance integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSettings {
    pub abs: f64,
    pub rel: f64,
}

impl QuadratureSettings {
    pub fn tolerance(&self) -> Tolerance {
        Tolerance::new(self.abs, self.rel)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_model")]
    pub model: ModelConfig,
    /// Replicates per experiment (per scale for `clt`).
    #[serde(default = "default_reps")]
    pub reps: usize,
    /// Window scales for `clt`, applied to `model.window`.
    #[serde(default = "default_scales")]
    pub scales: Vec<f64>,
    /// Coefficient vectors over `(V₀, V₁, V₂)` examined by `clt`.
    #[serde(default = "default_functionals")]
    pub functionals: Vec<[f64; 3]>,
    #[serde(default = "default_probe")]
    pub probe: Probe,
    /// Pixels per unit length for `render`.
    #[serde(default = "default_resolution")]
    pub resolution: f64,
    /// Replicate index for `simulate` and `render`.
    #[serde(default)]
    pub replicate: u64,
    #[serde(default)]
    pub quadrature: Option<QuadratureSettings>,
    /// Normal batches behind the `clt` distance threshold.
    #[serde(default = "default_calibration_batches")]
    pub calibration_batches: usize,
    #[serde(default)]
    pub threads: Option<usize>,
}

fn default_model() -> ModelConfig {
    ModelConfig::new(
        0.5,
        GrainDistribution::disk(1.0).expect("unit disk"),
        Window::centered(64.0, 64.0).expect("square window"),
        0,
    )
    .expect("default model")
}

fn default_reps() -> usize {
    200
}

fn default_scales() -> Vec<f64> {
    vec![0.125, 0.25, 0.5, 1.0]
}

fn default_functionals() -> Vec<[f64; 3]> {
    vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
}

fn default_probe() -> Probe {
    Probe::Point
}

fn default_resolution() -> f64 {
    8.0
}

fn default_calibration_batches() -> usize {
    1000
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("malformed config {}", path.display()))
    }
}

/// Flags shared by every subcommand; each one overrides the config field
/// of the same role.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    /// JSON experiment configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory receiving the output files.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads.
    #[arg(long, global = true, env = "BOOLEAN_LAB_THREADS")]
    pub threads: Option<usize>,
    #[arg(long, global = true)]
    pub gamma: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Replaces the grain law by disks of this radius.
    #[arg(long, global = true)]
    pub radius: Option<f64>,
    /// Replaces the window by a centred square of this side.
    #[arg(long, global = true)]
    pub window: Option<f64>,
    #[arg(long, global = true)]
    pub reps: Option<usize>,
    #[arg(long, global = true, value_delimiter = ',')]
    pub scales: Option<Vec<f64>>,
    #[arg(long, global = true)]
    pub replicate: Option<u64>,
    #[arg(long, global = true)]
    pub resolution: Option<f64>,
}

impl Overrides {
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(g) = self.gamma {
            c.model = c.model.with_gamma(g)?;
        }
        if let Some(s) = self.seed {
            c.model = c.model.with_seed(s);
        }
        if let Some(r) = self.radius {
            c.model.grains = GrainDistribution::disk(r)?;
        }
        if let Some(side) = self.window {
            c.model = c.model.with_window(Window::centered(side, side)?);
        }
        if let Some(n) = self.reps {
            c.reps = n;
        }
        if let Some(s) = &self.scales {
            c.scales = s.clone();
        }
        if let Some(k) = self.replicate {
            c.replicate = k;
        }
        if let Some(r) = self.resolution {
            c.resolution = r;
        }
        if self.threads.is_some() {
            c.threads = self.threads;
        }
        Ok(c)
    }
}
