//! Flat key/value configuration files.
//!
//! Sweep file:
//!
//! ```toml
//! topology = "relay-near-rx"   # equidistant | relay-near-tx | relay-near-rx
//! base_gamma = 0.5
//! h1_norm = 10.0
//! theta_points = 17            # or theta_grid = [0.0, 0.5, ...]
//! quantities = ["upper", "lower", "sc", "pre"]
//! method = "nelder_mead"       # differential_evolution | simulated_annealing
//! budget = 20000
//! restarts = 8
//! tol = 1e-9
//! seed = 0
//! output = "sweep.csv"
//! ```
//!
//! Bounds file: `gamma1`, `gamma2`, `gamma3`, real matrices `h1`, `h2`, `h3`
//! as lists of rows with optional imaginary parts `h1_imag`, ..., plus the
//! `quantities` and optimizer keys above.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::channel::{make_angle_channel, RelayChannel, Topology, TopologyKind, DEFAULT_BASE_GAMMA};
use crate::error::{Error, Result};
use crate::matrix::{CMatrix, C64};
use crate::optimize::{Method, OptimizerConfig, ProfileLayout, UpperLayout};

use super::{default_output, Quantity};

pub const DEFAULT_GRID_POINTS: usize = 17;
pub const DEFAULT_H1_NORM: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub topology: Topology,
    /// Angles in radians.
    pub theta_grid: Vec<f64>,
    pub h1_norm: f64,
    pub optimizer: OptimizerConfig,
    pub quantities: Vec<Quantity>,
    pub output_path: PathBuf,
}

/// `n` evenly spaced angles on `[0, π]`.
pub(crate) fn uniform_grid(n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![0.0],
        _ => (0..n).map(|i| PI * i as f64 / (n - 1) as f64).collect(),
    }
}

impl SweepConfig {
    /// Default grid, all quantities, default optimizer.
    pub fn new(topology: Topology) -> Self {
        Self {
            topology,
            theta_grid: uniform_grid(DEFAULT_GRID_POINTS),
            h1_norm: DEFAULT_H1_NORM,
            optimizer: OptimizerConfig::default(),
            quantities: Quantity::ALL.to_vec(),
            output_path: default_output(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.theta_grid.is_empty() {
            return Err(Error::Config("theta grid is empty".into()));
        }
        if let Some(t) = self.theta_grid.iter().find(|t| !(0.0..=PI).contains(*t)) {
            return Err(Error::Config(format!("angle {t} outside [0, π]")));
        }
        if self.quantities.is_empty() {
            return Err(Error::Config("no quantities requested".into()));
        }
        if !(self.h1_norm > 0.0 && self.h1_norm.is_finite()) {
            return Err(Error::Config(format!("h1_norm must be positive, got {}", self.h1_norm)));
        }
        let ch = make_angle_channel(0.0, self.h1_norm, self.topology)?;
        self.optimizer.validate(search_dim(&ch))
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawSweep = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        let topology = Topology::new(
            raw.topology.unwrap_or(TopologyKind::Equidistant),
            raw.base_gamma.unwrap_or(DEFAULT_BASE_GAMMA),
        )
        .map_err(|e| Error::Config(e.to_string()))?;
        let theta_grid = match (raw.theta_grid, raw.theta_points) {
            (Some(_), Some(_)) => {
                return Err(Error::Config("give either theta_grid or theta_points, not both".into()))
            }
            (Some(g), None) => g,
            (None, Some(n)) => uniform_grid(n),
            (None, None) => uniform_grid(DEFAULT_GRID_POINTS),
        };
        let cfg = Self {
            topology,
            theta_grid,
            h1_norm: raw.h1_norm.unwrap_or(DEFAULT_H1_NORM),
            optimizer: RawOptimizer {
                method: raw.method,
                budget: raw.budget,
                restarts: raw.restarts,
                tol: raw.tol,
                seed: raw.seed,
            }
            .build()?,
            quantities: normalize(raw.quantities),
            output_path: raw.output.unwrap_or_else(default_output),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }
}

/// Largest decision-vector length any quantity searches over.
fn search_dim(ch: &RelayChannel) -> usize {
    ProfileLayout::for_channel(ch)
        .dim()
        .max(UpperLayout::for_channel(ch).dim())
}

fn normalize(q: Option<Vec<Quantity>>) -> Vec<Quantity> {
    let mut q = q.unwrap_or_else(|| Quantity::ALL.to_vec());
    q.sort();
    q.dedup();
    q
}

struct RawOptimizer {
    method: Option<String>,
    budget: Option<usize>,
    restarts: Option<usize>,
    tol: Option<f64>,
    seed: Option<u64>,
}

impl RawOptimizer {
    fn build(self) -> Result<OptimizerConfig> {
        let d = OptimizerConfig::default();
        Ok(OptimizerConfig {
            method: match self.method {
                Some(m) => m.parse::<Method>()?,
                None => d.method,
            },
            budget: self.budget.unwrap_or(d.budget),
            restarts: self.restarts.unwrap_or(d.restarts),
            tol: self.tol.unwrap_or(d.tol),
            seed: self.seed.unwrap_or(d.seed),
        })
    }
}

// `deny_unknown_fields` does not combine with `flatten`, so optimizer keys
// are repeated in each file type.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    topology: Option<TopologyKind>,
    base_gamma: Option<f64>,
    h1_norm: Option<f64>,
    theta_points: Option<usize>,
    theta_grid: Option<Vec<f64>>,
    quantities: Option<Vec<Quantity>>,
    output: Option<PathBuf>,
    method: Option<String>,
    budget: Option<usize>,
    restarts: Option<usize>,
    tol: Option<f64>,
    seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBounds {
    gamma1: f64,
    gamma2: f64,
    gamma3: f64,
    h1: Vec<Vec<f64>>,
    h2: Vec<Vec<f64>>,
    h3: Vec<Vec<f64>>,
    h1_imag: Option<Vec<Vec<f64>>>,
    h2_imag: Option<Vec<Vec<f64>>>,
    h3_imag: Option<Vec<Vec<f64>>>,
    quantities: Option<Vec<Quantity>>,
    method: Option<String>,
    budget: Option<usize>,
    restarts: Option<usize>,
    tol: Option<f64>,
    seed: Option<u64>,
}

/// One channel given by its matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundsConfig {
    pub channel: RelayChannel,
    pub quantities: Vec<Quantity>,
    pub optimizer: OptimizerConfig,
}

fn matrix(name: &str, re: &[Vec<f64>], im: Option<&Vec<Vec<f64>>>) -> Result<CMatrix> {
    let rows = re.len();
    let cols = re.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 || re.iter().any(|r| r.len() != cols) {
        return Err(Error::Config(format!("{name} must be a nonempty list of equal-length rows")));
    }
    if let Some(im) = im {
        if im.len() != rows || im.iter().any(|r| r.len() != cols) {
            return Err(Error::Config(format!("{name}_imag does not match the shape of {name}")));
        }
    }
    Ok(CMatrix::from_fn(rows, cols, |i, j| {
        C64::new(re[i][j], im.map_or(0.0, |m| m[i][j]))
    }))
}

impl BoundsConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawBounds = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        let h1 = matrix("h1", &raw.h1, raw.h1_imag.as_ref())?;
        let h2 = matrix("h2", &raw.h2, raw.h2_imag.as_ref())?;
        let h3 = matrix("h3", &raw.h3, raw.h3_imag.as_ref())?;
        let channel = RelayChannel::new(h1, h2, h3, raw.gamma1, raw.gamma2, raw.gamma3)
            .map_err(|e| Error::Config(e.to_string()))?;
        let optimizer = RawOptimizer {
            method: raw.method,
            budget: raw.budget,
            restarts: raw.restarts,
            tol: raw.tol,
            seed: raw.seed,
        }
        .build()?;
        let quantities = normalize(raw.quantities);
        if quantities.is_empty() {
            return Err(Error::Config("no quantities requested".into()));
        }
        optimizer.validate(search_dim(&channel))?;
        Ok(Self {
            channel,
            quantities,
            optimizer,
        })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }
}
