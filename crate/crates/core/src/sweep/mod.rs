//! Angle sweeps over the two-antenna channel family, their configuration
//! files, and single-channel evaluation from explicit matrices.

mod config;
mod emit;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Deserialize;

use crate::bounds::lower_bound_terms;
use crate::channel::{make_angle_channel, RelayChannel, Topology};
use crate::error::{Error, Result};
use crate::optimize::{optimize_scheme, optimize_upper_bound, OptimizerConfig};
use crate::rates::{Scheme, Strategy};

pub use config::{BoundsConfig, SweepConfig, DEFAULT_GRID_POINTS, DEFAULT_H1_NORM};
pub use emit::{emit, parse_csv, read_csv, render_gnuplot, render_svg, to_csv_string, OutputFormat, CSV_HEADER};

/// Quantities a sweep can evaluate at each angle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quantity {
    Upper,
    Lower,
    Sc,
    Pre,
}

impl Quantity {
    pub const ALL: [Quantity; 4] = [Quantity::Upper, Quantity::Lower, Quantity::Sc, Quantity::Pre];

    pub fn tag(self) -> &'static str {
        match self {
            Quantity::Upper => "upper",
            Quantity::Lower => "lower",
            Quantity::Sc => "sc",
            Quantity::Pre => "pre",
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.tag())
    }
}

impl FromStr for Quantity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Quantity::ALL
            .into_iter()
            .find(|q| q.tag() == s)
            .ok_or_else(|| Error::Config(format!("unknown quantity '{s}' (expected upper, lower, sc or pre)")))
    }
}

/// Search statistics behind one optimized quantity.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantityMeta {
    pub quantity: Quantity,
    pub evaluations: usize,
    pub converged: bool,
    /// Winning decode order, for the rate quantities.
    pub strategy: Option<Strategy>,
}

/// Requested quantities on one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEval {
    pub upper: Option<f64>,
    pub lower: Option<f64>,
    pub r_sc: Option<f64>,
    pub r_pre: Option<f64>,
    /// Objective evaluations over every search run, including the
    /// superposition search that seeds precoding when only `pre` is asked for.
    pub evals_total: usize,
    pub meta: Vec<QuantityMeta>,
}

/// Evaluates `quantities` on `ch`.
pub fn evaluate_channel(ch: &RelayChannel, quantities: &[Quantity], opt: &OptimizerConfig) -> Result<ChannelEval> {
    let wants = |q| quantities.contains(&q);
    let mut out = ChannelEval {
        upper: None,
        lower: None,
        r_sc: None,
        r_pre: None,
        evals_total: 0,
        meta: Vec::new(),
    };
    if wants(Quantity::Upper) {
        let r = optimize_upper_bound(ch, opt)?;
        out.upper = Some(r.value);
        out.evals_total += r.evaluations;
        out.meta.push(QuantityMeta {
            quantity: Quantity::Upper,
            evaluations: r.evaluations,
            converged: r.converged,
            strategy: None,
        });
    }
    if wants(Quantity::Lower) {
        out.lower = Some(lower_bound_terms(ch)?.value());
        out.meta.push(QuantityMeta {
            quantity: Quantity::Lower,
            evaluations: 0,
            converged: true,
            strategy: None,
        });
    }
    if wants(Quantity::Sc) || wants(Quantity::Pre) {
        let sc = optimize_scheme(ch, Scheme::Superposition, opt, &[])?;
        out.evals_total += sc.evaluations();
        if wants(Quantity::Sc) {
            out.r_sc = Some(sc.value());
            out.meta.push(QuantityMeta {
                quantity: Quantity::Sc,
                evaluations: sc.evaluations(),
                converged: sc.orders.iter().all(|r| r.converged),
                strategy: sc.best.strategy,
            });
        }
        if wants(Quantity::Pre) {
            let pre = optimize_scheme(ch, Scheme::DirtyPaper, opt, &sc.argmaxes())?;
            out.evals_total += pre.evaluations();
            out.r_pre = Some(pre.value());
            out.meta.push(QuantityMeta {
                quantity: Quantity::Pre,
                evaluations: pre.evaluations(),
                converged: pre.orders.iter().all(|r| r.converged),
                strategy: pre.best.strategy,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub theta: f64,
    pub upper: Option<f64>,
    pub lower: Option<f64>,
    pub r_sc: Option<f64>,
    pub r_pre: Option<f64>,
    /// Optimizer seed used at this angle.
    pub seed: u64,
    pub evals_total: usize,
    /// Empty for rows read back from CSV.
    pub meta: Vec<QuantityMeta>,
}

impl SweepRow {
    /// Pairs of the chain `lower ≤ r_sc ≤ r_pre ≤ upper` that fail by more
    /// than `slack`, skipping missing quantities.
    pub fn ordering_violations(&self, slack: f64) -> Vec<String> {
        let chain = [
            ("lower", self.lower),
            ("r_sc", self.r_sc),
            ("r_pre", self.r_pre),
            ("upper", self.upper),
        ];
        let present: Vec<(&str, f64)> = chain.iter().filter_map(|(n, v)| v.map(|v| (*n, v))).collect();
        present
            .windows(2)
            .filter(|w| w[0].1 > w[1].1 + slack)
            .map(|w| format!("{} = {} > {} = {}", w[0].0, w[0].1, w[1].0, w[1].1))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub topology: Topology,
    /// Ordered by angle.
    pub rows: Vec<SweepRow>,
}

/// Runs `cfg` on up to `jobs` threads. Rows come back in grid order and do
/// not depend on `jobs`.
pub fn run_sweep(cfg: &SweepConfig, jobs: usize) -> Result<SweepResult> {
    run_sweep_with(cfg, jobs, |_| {})
}

/// Like [`run_sweep`], calling `on_row` as each angle finishes (in
/// completion order).
pub fn run_sweep_with(cfg: &SweepConfig, jobs: usize, on_row: impl Fn(&SweepRow) + Sync) -> Result<SweepResult> {
    use rayon::prelude::*;

    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Argument(format!("cannot start worker pool: {e}")))?;
    let mut indexed: Vec<(usize, f64)> = cfg.theta_grid.iter().copied().enumerate().collect();
    indexed.sort_by(|a, b| a.1.total_cmp(&b.1));

    let rows = pool.install(|| {
        indexed
            .par_iter()
            .map(|&(i, theta)| {
                let ch = make_angle_channel(theta, cfg.h1_norm, cfg.topology)?;
                let opt = cfg.optimizer.for_task(i as u64);
                let eval = evaluate_channel(&ch, &cfg.quantities, &opt)?;
                let row = SweepRow {
                    theta,
                    upper: eval.upper,
                    lower: eval.lower,
                    r_sc: eval.r_sc,
                    r_pre: eval.r_pre,
                    seed: opt.seed,
                    evals_total: eval.evals_total,
                    meta: eval.meta,
                };
                on_row(&row);
                Ok(row)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(SweepResult {
        topology: cfg.topology,
        rows,
    })
}

/// Report of the `bounds` command.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundsReport {
    pub eval: ChannelEval,
    pub c_d: f64,
    pub c3: f64,
    pub c4: f64,
}

impl BoundsReport {
    /// `key = value` lines.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let mut line = |k: &str, v: String| {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        };
        let e = &self.eval;
        for (k, v) in [
            ("upper_bits", e.upper),
            ("lower_bits", e.lower),
            ("rsc_bits", e.r_sc),
            ("rpre_bits", e.r_pre),
        ] {
            if let Some(v) = v {
                line(k, emit::format_sig(v));
            }
        }
        line("c_d_bits", emit::format_sig(self.c_d));
        line("c3_bits", emit::format_sig(self.c3));
        line("c4_bits", emit::format_sig(self.c4));
        for m in &e.meta {
            if let Some(s) = m.strategy {
                line(&format!("{}_strategy", m.quantity), s.tag().to_string());
            }
            if m.quantity != Quantity::Lower {
                line(&format!("{}_converged", m.quantity), m.converged.to_string());
            }
        }
        line("evals_total", e.evals_total.to_string());
        s
    }
}

pub fn run_bounds(cfg: &BoundsConfig) -> Result<BoundsReport> {
    let terms = lower_bound_terms(&cfg.channel)?;
    let eval = evaluate_channel(&cfg.channel, &cfg.quantities, &cfg.optimizer)?;
    Ok(BoundsReport {
        eval,
        c_d: terms.c_d,
        c3: terms.c3,
        c4: terms.c4,
    })
}

/// Default output file for a config without one.
pub(crate) fn default_output() -> PathBuf {
    PathBuf::from("sweep.csv")
}
