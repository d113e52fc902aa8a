//! Derivative-free maximization over covariance parameterizations.
//!
//! Every objective here is a minimum of log-determinants, which is continuous
//! but not smooth, so only direct-search methods are offered. Decision
//! vectors are unconstrained reals; [`layout`] maps each one onto a feasible
//! covariance profile, so the search never leaves the feasible set.

mod annealing;
mod differential_evolution;
pub mod layout;
mod nelder_mead;
mod problems;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rates::Strategy;

pub use layout::{decode_profile, encode_profile, ProfileLayout, UpperLayout};
pub use problems::{
    optimize_lower_bound, optimize_scheme, optimize_strategy, optimize_strategy_seeded,
    optimize_upper_bound, SchemeResult,
};

/// Flattened decision variables.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector(pub Vec<f64>);

impl ParamVector {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    NelderMead,
    DifferentialEvolution,
    SimulatedAnnealing,
}

impl Method {
    pub const ALL: [Method; 3] = [
        Method::NelderMead,
        Method::DifferentialEvolution,
        Method::SimulatedAnnealing,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Method::NelderMead => "nelder_mead",
            Method::DifferentialEvolution => "differential_evolution",
            Method::SimulatedAnnealing => "simulated_annealing",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.tag())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.tag() == s)
            .ok_or_else(|| Error::Config(format!("unknown optimizer method '{s}'")))
    }
}

pub const DEFAULT_BUDGET: usize = 20_000;
pub const DEFAULT_RESTARTS: usize = 8;
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub method: Method,
    /// Objective evaluations allowed per restart. A Nelder–Mead step in
    /// progress may finish past it by at most `dim` evaluations.
    pub budget: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Stall tolerance on the objective, in bits.
    pub tol: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            method: Method::NelderMead,
            budget: DEFAULT_BUDGET,
            restarts: DEFAULT_RESTARTS,
            seed: 0,
            tol: DEFAULT_TOL,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.budget < dim + 1 {
            return Err(Error::Config(format!(
                "budget {} is below dim + 1 = {}",
                self.budget,
                dim + 1
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("tolerance must be positive, got {}", self.tol)));
        }
        if self.restarts == 0 {
            return Err(Error::Config("at least one restart is required".into()));
        }
        Ok(())
    }

    /// Copy with the seed replaced by `seed ⊕ task`.
    pub fn for_task(&self, task: u64) -> Self {
        Self {
            seed: self.seed ^ task,
            ..self.clone()
        }
    }
}

/// Best point found by a maximization.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundResult {
    /// Objective at `argmax`, in bits.
    pub value: f64,
    pub argmax: ParamVector,
    /// Objective evaluations over all restarts, warm starts included.
    pub evaluations: usize,
    pub method: Method,
    /// False if any restart ran out of budget before stalling.
    pub converged: bool,
    /// Decode order that produced `value`, for strategy optimizations.
    pub strategy: Option<Strategy>,
}

/// Outcome of one restart of one method.
#[derive(Debug, Clone)]
pub(crate) struct RunOutcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub converged: bool,
}

/// Counts evaluations and maps NaN to −∞.
pub(crate) struct Counted<'a> {
    f: &'a dyn Fn(&[f64]) -> f64,
    pub evals: usize,
}

impl<'a> Counted<'a> {
    pub fn new(f: &'a dyn Fn(&[f64]) -> f64) -> Self {
        Self { f, evals: 0 }
    }

    pub fn eval(&mut self, x: &[f64]) -> f64 {
        self.evals += 1;
        let v = (self.f)(x);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    }
}

fn restart_rng(seed: u64, restart: usize) -> ChaCha8Rng {
    // Distinct, reproducible streams per restart.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64 + 1);
    rng
}

pub(crate) fn random_start<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.sample(StandardNormal)).collect()
}

/// Maximizes `objective` over `R^dim`.
pub fn maximize(
    objective: &dyn Fn(&[f64]) -> f64,
    cfg: &OptimizerConfig,
    dim: usize,
) -> Result<BoundResult> {
    maximize_seeded(objective, cfg, dim, &[])
}

/// Like [`maximize`], with warm starts.
///
/// Every seed is evaluated, so the result is never worse than the best seed.
/// Seeds are ranked by value; restart `r` starts from the `r`-th best seed
/// while seeds last and from a random point afterwards. Differential
/// evolution injects all seeds into every initial population.
pub fn maximize_seeded(
    objective: &dyn Fn(&[f64]) -> f64,
    cfg: &OptimizerConfig,
    dim: usize,
    seeds: &[ParamVector],
) -> Result<BoundResult> {
    cfg.validate(dim)?;
    if let Some(bad) = seeds.iter().find(|s| s.dim() != dim) {
        return Err(Error::Argument(format!(
            "seed has dimension {}, expected {dim}",
            bad.dim()
        )));
    }

    let mut counted = Counted::new(objective);
    let mut ranked: Vec<(f64, &[f64])> = seeds
        .iter()
        .map(|s| (counted.eval(s.as_slice()), s.as_slice()))
        .collect();
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut total = counted.evals;

    let mut best: Option<RunOutcome> = ranked.first().map(|(f, x)| RunOutcome {
        x: x.to_vec(),
        f: *f,
        evals: 0,
        converged: true,
    });
    let mut all_converged = true;
    let seed_points: Vec<Vec<f64>> = ranked.iter().map(|(_, x)| x.to_vec()).collect();

    for r in 0..cfg.restarts {
        let mut rng = restart_rng(cfg.seed, r);
        let start = match seed_points.get(r) {
            Some(s) => s.clone(),
            None => random_start(&mut rng, dim),
        };
        let out = match cfg.method {
            Method::NelderMead => nelder_mead::run(objective, &start, cfg.budget, cfg.tol, &mut rng),
            Method::DifferentialEvolution => differential_evolution::run(
                objective,
                dim,
                &seed_points,
                cfg.budget,
                cfg.tol,
                &mut rng,
            ),
            Method::SimulatedAnnealing => annealing::run(objective, &start, cfg.budget, cfg.tol, &mut rng),
        };
        total += out.evals;
        all_converged &= out.converged;
        let better = match &best {
            None => true,
            Some(b) => out.f > b.f || (out.f == b.f && out.evals < b.evals),
        };
        if better {
            best = Some(out);
        }
    }

    let best = best.expect("at least one restart ran");
    Ok(BoundResult {
        value: best.f,
        argmax: ParamVector(best.x),
        evaluations: total,
        method: cfg.method,
        converged: all_converged,
        strategy: None,
    })
}
