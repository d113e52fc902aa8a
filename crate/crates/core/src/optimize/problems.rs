//! The bound and rate maximizations over a relay channel.

use crate::bounds::{cutset_min, lower_bound, lower_bound_terms, LowerBoundTerms};
use crate::channel::RelayChannel;
use crate::error::Result;
use crate::matrix::{c, water_fill, CMatrix, HermitianPsd};
use crate::rates::{achievable_rate, DecodeOrder, Scheme, Strategy};

use super::layout::{degenerate_profiles, ProfileLayout, UpperLayout};
use super::{maximize_seeded, BoundResult, OptimizerConfig, ParamVector};

const RHO_STARTS: [f64; 4] = [0.0, 0.3, 0.6, 0.9];

/// Maximizes `min(C1, C2)` over `(ρ, Σ11, Σ22)`.
///
/// Warm starts cover a few correlations crossed with the water-filling
/// covariances of the broadcast, relay and direct links and the scaled
/// identity.
pub fn optimize_upper_bound(ch: &RelayChannel, cfg: &OptimizerConfig) -> Result<BoundResult> {
    let layout = UpperLayout::for_channel(ch);
    let lb = lower_bound_terms(ch)?;
    let (nr, nt, mt) = (ch.nr(), ch.nt(), ch.mt());
    let (s1, s2) = (ch.gamma1.sqrt(), ch.gamma2.sqrt());
    let g = CMatrix::from_fn(nr + nt, mt, |i, j| {
        if i < nr {
            ch.h1[(i, j)] * c(s1)
        } else {
            ch.h2[(i - nr, j)] * c(s2)
        }
    });
    let broadcast = water_fill(&g, 1.0, mt as f64)?.cov;
    let s22 = HermitianPsd::identity(ch.mr());
    let candidates = [
        broadcast,
        lb.sigma11_star.clone(),
        lb.sigma11_direct.clone(),
        HermitianPsd::identity(mt),
    ];
    let mut seeds = Vec::new();
    for rho in RHO_STARTS {
        for s11 in &candidates {
            seeds.push(layout.encode(rho, s11, &s22));
        }
    }

    let objective = |x: &[f64]| {
        let p = layout.decode(x);
        cutset_min(ch, p.rho, &p.sigma11, &p.sigma22).unwrap_or(f64::NEG_INFINITY)
    };
    maximize_seeded(&objective, cfg, layout.dim(), &seeds)
}

/// The non-cooperative lower bound. Water-filling solves it exactly, so no
/// search is involved.
pub fn optimize_lower_bound(ch: &RelayChannel) -> Result<f64> {
    lower_bound(ch)
}

/// Maximizes the rate of one strategy over covariance profiles.
pub fn optimize_strategy(ch: &RelayChannel, strategy: Strategy, cfg: &OptimizerConfig) -> Result<BoundResult> {
    optimize_strategy_seeded(ch, strategy, cfg, &[])
}

/// Like [`optimize_strategy`] with extra warm starts.
///
/// The two degenerate splits (all power on the direct link; all power
/// through the relay) are always seeded, so the result is never below the
/// non-cooperative lower bound.
pub fn optimize_strategy_seeded(
    ch: &RelayChannel,
    strategy: Strategy,
    cfg: &OptimizerConfig,
    extra: &[ParamVector],
) -> Result<BoundResult> {
    let lb = lower_bound_terms(ch)?;
    run_strategy(ch, strategy, cfg, &lb, extra)
}

fn run_strategy(
    ch: &RelayChannel,
    strategy: Strategy,
    cfg: &OptimizerConfig,
    lb: &LowerBoundTerms,
    extra: &[ParamVector],
) -> Result<BoundResult> {
    let layout = ProfileLayout::for_channel(ch);
    let mut seeds = Vec::with_capacity(extra.len() + 2);
    seeds.extend(extra.iter().cloned());
    for p in degenerate_profiles(ch, lb) {
        seeds.push(layout.encode(&p)?);
    }
    let objective = |x: &[f64]| match layout.decode(x) {
        Ok(p) => achievable_rate(ch, &p, strategy).map_or(f64::NEG_INFINITY, |r| r.r_total),
        Err(_) => f64::NEG_INFINITY,
    };
    let mut res = maximize_seeded(&objective, cfg, layout.dim(), &seeds)?;
    res.strategy = Some(strategy);
    Ok(res)
}

/// Best of the two decode orders of a scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeResult {
    /// The better order's result; its `strategy` names the order.
    pub best: BoundResult,
    /// Results for `u`-first and `v`-first, in that order.
    pub orders: [BoundResult; 2],
}

impl SchemeResult {
    pub fn value(&self) -> f64 {
        self.best.value
    }

    /// Evaluations over both orders.
    pub fn evaluations(&self) -> usize {
        self.orders.iter().map(|r| r.evaluations).sum()
    }

    pub fn argmaxes(&self) -> Vec<ParamVector> {
        self.orders.iter().map(|r| r.argmax.clone()).collect()
    }
}

/// Optimizes both decode orders of `scheme` and keeps the better one.
///
/// `extra` seeds every order; passing a superposition result's argmaxes when
/// optimizing dirty-paper coding makes the latter at least as large, since
/// precoding never lowers the relay-link term of a fixed profile.
pub fn optimize_scheme(
    ch: &RelayChannel,
    scheme: Scheme,
    cfg: &OptimizerConfig,
    extra: &[ParamVector],
) -> Result<SchemeResult> {
    let lb = lower_bound_terms(ch)?;
    let u = run_strategy(ch, Strategy::new(scheme, DecodeOrder::UFirst), cfg, &lb, extra)?;
    let v = run_strategy(ch, Strategy::new(scheme, DecodeOrder::VFirst), cfg, &lb, extra)?;
    let best = if v.value > u.value { v.clone() } else { u.clone() };
    Ok(SchemeResult { best, orders: [u, v] })
}
