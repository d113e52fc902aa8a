//! Cut-set upper bound and the non-cooperative lower bound.

use crate::channel::RelayChannel;
use crate::error::{Error, Result};
use crate::matrix::{
    c, cholesky, congruence, ln_det_plus_identity, nats_to_bits, solve_lower, water_fill, CMatrix,
    HermitianPsd,
};
use crate::rates::POWER_TOL;

/// Decision variables of the cut-set bound.
#[derive(Debug, Clone, PartialEq)]
pub struct UpperBoundVars {
    /// Correlation between the transmitter and relay inputs, in `[0, 1]`.
    pub rho: f64,
    /// Transmitter covariance, `Mt × Mt`, `tr ≤ Mt`.
    pub sigma11: HermitianPsd,
    /// Relay covariance, `Mr × Mr`, `tr ≤ Mr`.
    pub sigma22: HermitianPsd,
}

impl UpperBoundVars {
    pub fn validate(&self, ch: &RelayChannel) -> Result<()> {
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::Invariant(format!("rho {} outside [0, 1]", self.rho)));
        }
        if self.sigma11.dim() != ch.mt() || self.sigma22.dim() != ch.mr() {
            return Err(Error::Invariant("covariance dimensions do not match the channel".into()));
        }
        if self.sigma11.trace() > ch.mt() as f64 + POWER_TOL
            || self.sigma22.trace() > ch.mr() as f64 + POWER_TOL
        {
            return Err(Error::Invariant("covariance exceeds its trace budget".into()));
        }
        Ok(())
    }
}

/// Broadcast-cut term
/// `log det(I + (1−ρ²) G Σ11 G†)` with `G = [√γ1 H1; √γ2 H2]`.
pub fn cutset_broadcast_term(ch: &RelayChannel, vars: &UpperBoundVars) -> Result<f64> {
    vars.validate(ch)?;
    broadcast_bits(ch, vars.rho, vars.sigma11.as_matrix())
}

pub(crate) fn broadcast_bits(ch: &RelayChannel, rho: f64, sigma11: &CMatrix) -> Result<f64> {
    let (nr, nt, mt) = (ch.nr(), ch.nt(), ch.mt());
    let (s1, s2) = (ch.gamma1.sqrt(), ch.gamma2.sqrt());
    let g = CMatrix::from_fn(nr + nt, mt, |i, j| {
        if i < nr {
            ch.h1[(i, j)] * s1
        } else {
            ch.h2[(i - nr, j)] * s2
        }
    });
    let m = congruence(&g, sigma11).scale(1.0 - rho * rho);
    Ok(nats_to_bits(ln_det_plus_identity(&m)?).max(0.0))
}

/// Bracket on `log10 a` for the inner infimum.
pub const LOG10_A_RANGE: (f64, f64) = (-6.0, 6.0);
/// Golden-section stopping width on `log10 a`.
pub const LOG10_A_TOL: f64 = 1e-6;
const COARSE_STEP: f64 = 0.25;

/// Result of the inner infimum over `a > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerInfimum {
    pub bits: f64,
    /// Minimizing `a`; `0` or `+∞` for a limit at the boundary.
    pub a: f64,
    /// The infimum sits on (or beyond) an edge of the search bracket.
    pub at_boundary: bool,
}

/// Multiple-access-cut term
/// `inf_{a>0} log det(I + (γ2 + ρ²√(γ2γ3)/a) H2Σ11H2† + (γ3 + a√(γ2γ3)) H3Σ22H3†)`.
///
/// A coarse scan over `log10 a ∈ [−6, 6]` locates the basin, then
/// golden-section search refines it to [`LOG10_A_TOL`]. When `ρ = 0`, or one
/// of the two covariance terms vanishes, the infimum is a limit at `a → 0` or
/// `a → ∞` and the limit expression is returned with `at_boundary` set.
pub fn cutset_inner_inf(ch: &RelayChannel, vars: &UpperBoundVars) -> Result<InnerInfimum> {
    vars.validate(ch)?;
    inner_inf(ch, vars.rho, vars.sigma11.as_matrix(), vars.sigma22.as_matrix())
}

pub(crate) fn inner_inf(
    ch: &RelayChannel,
    rho: f64,
    sigma11: &CMatrix,
    sigma22: &CMatrix,
) -> Result<InnerInfimum> {
    let p = congruence(&ch.h2, sigma11);
    let q = congruence(&ch.h3, sigma22);
    let (g2, g3) = (ch.gamma2, ch.gamma3);
    let cross = (g2 * g3).sqrt();
    let k = rho * rho * cross;
    let eval = |alpha: f64, beta: f64| -> Result<f64> {
        ln_det_plus_identity(&(p.scale(alpha) + q.scale(beta)))
    };
    let to_bits = |nats: f64| nats_to_bits(nats).max(0.0);

    let p_zero = p.iter().all(|z| z.norm() == 0.0);
    let q_zero = q.iter().all(|z| z.norm() == 0.0);
    if k == 0.0 || p_zero || cross == 0.0 {
        // Nothing penalizes a → 0.
        return Ok(InnerInfimum {
            bits: to_bits(eval(g2, g3)?),
            a: 0.0,
            at_boundary: true,
        });
    }
    if q_zero {
        return Ok(InnerInfimum {
            bits: to_bits(eval(g2, g3)?),
            a: f64::INFINITY,
            at_boundary: true,
        });
    }

    let f = |t: f64| -> Result<f64> {
        let a = 10f64.powf(t);
        eval(g2 + k / a, g3 + a * cross)
    };
    if p.nrows() == 1 {
        // Scalar receiver: skip the matrix machinery in the hot loop.
        let (pv, qv) = (p[(0, 0)].re, q[(0, 0)].re);
        let fs = |t: f64| {
            let a = 10f64.powf(t);
            Ok((1.0 + (g2 + k / a) * pv + (g3 + a * cross) * qv).ln())
        };
        return golden_on_log_a(fs).map(|(t, v, edge)| InnerInfimum {
            bits: to_bits(v),
            a: 10f64.powf(t),
            at_boundary: edge,
        });
    }
    golden_on_log_a(f).map(|(t, v, edge)| InnerInfimum {
        bits: to_bits(v),
        a: 10f64.powf(t),
        at_boundary: edge,
    })
}

/// Minimizes `f` over `[lo, hi]` = [`LOG10_A_RANGE`]. Returns `(t, f(t), at_edge)`.
fn golden_on_log_a(f: impl Fn(f64) -> Result<f64>) -> Result<(f64, f64, bool)> {
    let (lo, hi) = LOG10_A_RANGE;
    let steps = ((hi - lo) / COARSE_STEP).round() as usize;
    let mut best = (lo, f(lo)?);
    for i in 1..=steps {
        let t = lo + i as f64 * COARSE_STEP;
        let v = f(t)?;
        if v < best.1 {
            best = (t, v);
        }
    }
    let mut a = (best.0 - COARSE_STEP).max(lo);
    let mut b = (best.0 + COARSE_STEP).min(hi);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    while b - a > LOG10_A_TOL {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2)?;
        }
    }
    let (t, v) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    let (t, v) = if best.1 < v { best } else { (t, v) };
    let edge = (t - lo).abs() <= 10.0 * LOG10_A_TOL || (hi - t).abs() <= 10.0 * LOG10_A_TOL;
    Ok((t, v, edge))
}

/// `min(C1, C2)` for one choice of the bound's variables.
pub fn cutset_value(ch: &RelayChannel, vars: &UpperBoundVars) -> Result<f64> {
    vars.validate(ch)?;
    cutset_min(ch, vars.rho, vars.sigma11.as_matrix(), vars.sigma22.as_matrix())
}

pub(crate) fn cutset_min(ch: &RelayChannel, rho: f64, s11: &CMatrix, s22: &CMatrix) -> Result<f64> {
    let c1 = broadcast_bits(ch, rho, s11)?;
    let c2 = inner_inf(ch, rho, s11, s22)?.bits;
    Ok(c1.min(c2))
}

/// Pieces of the non-cooperative lower bound `max(C_d, min(C3, C4))`.
#[derive(Debug, Clone)]
pub struct LowerBoundTerms {
    /// Direct link alone.
    pub c_d: f64,
    /// Transmitter to relay.
    pub c3: f64,
    /// Relay to receiver, with the transmitter's relay-optimal signal as noise.
    pub c4: f64,
    /// Water-filling covariance on the direct link.
    pub sigma11_direct: HermitianPsd,
    /// Water-filling covariance on the relay link (`Σ11*`).
    pub sigma11_star: HermitianPsd,
    /// Relay covariance attaining `c4`.
    pub sigma22_star: HermitianPsd,
}

impl LowerBoundTerms {
    pub fn value(&self) -> f64 {
        self.c_d.max(self.c3.min(self.c4))
    }
}

/// Water-filling evaluation of `C_d`, `C3` and `C4` at the channel's power budgets.
pub fn lower_bound_terms(ch: &RelayChannel) -> Result<LowerBoundTerms> {
    let (mt, mr) = (ch.mt() as f64, ch.mr() as f64);
    let direct = water_fill(&ch.h2, ch.gamma2, mt)?;
    let relay = water_fill(&ch.h1, ch.gamma1, mt)?;

    // C4 = max log det(I + γ3 K^{-1/2} H3 Σ22 H3† K^{-1/2}), K = I + γ2 H2 Σ11* H2†.
    let g2h2 = &ch.h2 * c(ch.gamma2.sqrt());
    let mut k = congruence(&g2h2, relay.cov.as_matrix());
    for i in 0..k.nrows() {
        k[(i, i)] += c(1.0);
    }
    let l = cholesky(&k)
        .ok_or_else(|| Error::Domain("receiver noise-plus-interference is not positive definite".into()))?;
    let h3_eff = solve_lower(&l, &ch.h3);
    let fwd = water_fill(&h3_eff, ch.gamma3, mr)?;

    Ok(LowerBoundTerms {
        c_d: direct.bits,
        c3: relay.bits,
        c4: fwd.bits,
        sigma11_direct: direct.cov,
        sigma11_star: relay.cov,
        sigma22_star: fwd.cov,
    })
}

/// `max(C_d, min(C3, C4))`.
pub fn lower_bound(ch: &RelayChannel) -> Result<f64> {
    lower_bound_terms(ch).map(|t| t.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{make_angle_channel, Topology, TopologyKind};
    use crate::matrix::test_util::random_cmatrix;
    use crate::rates::test_util::random_channel;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn scalar(x: f64) -> CMatrix {
        CMatrix::from_element(1, 1, c(x))
    }

    fn vars(rho: f64, s11: HermitianPsd, s22: HermitianPsd) -> UpperBoundVars {
        UpperBoundVars {
            rho,
            sigma11: s11,
            sigma22: s22,
        }
    }

    fn random_budget_psd<R: Rng>(rng: &mut R, n: usize) -> HermitianPsd {
        let s = HermitianPsd::from_factor(&random_cmatrix(rng, n, n));
        let t = s.trace();
        s.scaled(rng.random_range(0.2..1.0) * n as f64 / t)
    }

    #[test]
    fn inner_inf_without_correlation_is_the_joint_log_det() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ch = random_channel(&mut rng, 2, 2, 2, 1);
        let v = vars(0.0, random_budget_psd(&mut rng, 2), random_budget_psd(&mut rng, 2));
        let got = cutset_inner_inf(&ch, &v).unwrap();
        let m = congruence(&ch.h2, v.sigma11.as_matrix()).scale(ch.gamma2)
            + congruence(&ch.h3, v.sigma22.as_matrix()).scale(ch.gamma3);
        let expect = nats_to_bits(ln_det_plus_identity(&m).unwrap());
        assert!((got.bits - expect).abs() < 1e-12);
        assert!(got.at_boundary);
    }

    #[test]
    fn inner_inf_direct_link_only() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ch = random_channel(&mut rng, 2, 1, 1, 1);
        let v = vars(0.0, random_budget_psd(&mut rng, 2), HermitianPsd::zeros(1));
        let got = cutset_inner_inf(&ch, &v).unwrap();
        let m = congruence(&ch.h2, v.sigma11.as_matrix()).scale(ch.gamma2);
        assert!((got.bits - nats_to_bits(ln_det_plus_identity(&m).unwrap())).abs() < 1e-12);
    }

    #[test]
    fn inner_inf_scalar_matches_grid() {
        let ch = RelayChannel::new(scalar(1.0), scalar(1.0), scalar(1.0), 1.0, 1.0, 1.0).unwrap();
        let v = vars(1.0, HermitianPsd::identity(1), HermitianPsd::identity(1));
        let got = cutset_inner_inf(&ch, &v).unwrap();
        let n = 1_000_000;
        let mut best = f64::INFINITY;
        for i in 0..n {
            let t = -6.0 + 12.0 * i as f64 / (n - 1) as f64;
            let a = 10f64.powf(t);
            best = best.min((1.0 + (1.0 + 1.0 / a) + (1.0 + a)).log2());
        }
        // Minimum at a = 1: log2(5).
        assert!((got.bits - best).abs() < 1e-6);
        assert!((got.bits - 5f64.log2()).abs() < 1e-9);
        assert!((got.a - 1.0).abs() < 1e-4);
    }

    #[test]
    fn inner_inf_below_random_probes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let ch = random_channel(&mut rng, 2, 2, 2, 1);
            let v = vars(
                rng.random_range(0.05..1.0),
                random_budget_psd(&mut rng, 2),
                random_budget_psd(&mut rng, 2),
            );
            let inf = cutset_inner_inf(&ch, &v).unwrap().bits;
            let (g2, g3) = (ch.gamma2, ch.gamma3);
            let p = congruence(&ch.h2, v.sigma11.as_matrix());
            let q = congruence(&ch.h3, v.sigma22.as_matrix());
            for _ in 0..20 {
                let a = 10f64.powf(rng.random_range(-6.0..6.0));
                let m = p.scale(g2 + v.rho * v.rho * (g2 * g3).sqrt() / a)
                    + q.scale(g3 + a * (g2 * g3).sqrt());
                let probe = nats_to_bits(ln_det_plus_identity(&m).unwrap());
                assert!(inf <= probe + 1e-12);
            }
        }
    }

    #[test]
    fn broadcast_term_edges() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ch = random_channel(&mut rng, 2, 1, 2, 2);
        let s = random_budget_psd(&mut rng, 2);
        assert_eq!(cutset_broadcast_term(&ch, &vars(1.0, s.clone(), HermitianPsd::identity(1))).unwrap(), 0.0);
        assert_eq!(
            cutset_broadcast_term(&ch, &vars(0.3, HermitianPsd::zeros(2), HermitianPsd::identity(1))).unwrap(),
            0.0
        );
        let mut prev = f64::INFINITY;
        for i in 0..=20 {
            let rho = i as f64 / 20.0;
            let v = cutset_broadcast_term(&ch, &vars(rho, s.clone(), HermitianPsd::identity(1))).unwrap();
            assert!(v <= prev + 1e-12);
            prev = v;
        }
    }

    #[test]
    fn invalid_vars_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ch = random_channel(&mut rng, 2, 1, 1, 1);
        let v = vars(1.5, HermitianPsd::identity(2), HermitianPsd::identity(1));
        assert!(matches!(cutset_broadcast_term(&ch, &v), Err(Error::Invariant(_))));
        let v = vars(0.5, HermitianPsd::identity(2).scaled(2.0), HermitianPsd::identity(1));
        assert!(cutset_inner_inf(&ch, &v).is_err());
    }

    #[test]
    fn lower_bound_plateau_on_angle_family() {
        let topo = Topology::new(TopologyKind::Equidistant, 0.5).unwrap();
        for i in 0..17 {
            let theta = PI * i as f64 / 16.0;
            let ch = make_angle_channel(theta, 10.0, topo).unwrap();
            let t = lower_bound_terms(&ch).unwrap();
            assert!((t.c_d - 1.0).abs() < 1e-12);
            assert!((t.c3 - 101f64.log2()).abs() < 1e-9);
            // Σ11* beamforms along H1, so H2 Σ11* H2† = 2cos²θ.
            let expect_c4 = (1.0 + 0.5 / (1.0 + 2.0 * 0.5 * theta.cos().powi(2))).log2();
            assert!((t.c4 - expect_c4).abs() < 1e-9, "{} vs {expect_c4}", t.c4);
            assert!((t.value() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn lower_bound_without_relay_link() {
        let ch = RelayChannel::new(
            CMatrix::zeros(1, 2),
            CMatrix::from_row_slice(1, 2, &[c(1.0), c(0.0)]),
            scalar(1.0),
            1.0,
            1.0,
            1.0,
        )
        .unwrap();
        let t = lower_bound_terms(&ch).unwrap();
        assert_eq!(t.c3, 0.0);
        assert!((t.value() - t.c_d).abs() < 1e-15);
    }

    #[test]
    fn water_filled_terms_match_scalar_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..10 {
            let h1 = rng.random_range(-3.0..3.0);
            let h2 = rng.random_range(-3.0..3.0);
            let h3 = rng.random_range(-3.0..3.0);
            let g: f64 = rng.random_range(0.2..2.0);
            let ch = RelayChannel::new(scalar(h1), scalar(h2), scalar(h3), g, g, g).unwrap();
            let t = lower_bound_terms(&ch).unwrap();
            let n = 100_000;
            let grid = |gain: f64| -> f64 {
                (0..=n)
                    .map(|i| (1.0 + gain * i as f64 / n as f64).log2())
                    .fold(0.0, f64::max)
            };
            assert!((t.c_d - grid(g * h2 * h2)).abs() < 1e-8);
            assert!((t.c3 - grid(g * h1 * h1)).abs() < 1e-8);
            let noise = 1.0 + g * h2 * h2;
            assert!((t.c4 - grid(g * h3 * h3 / noise)).abs() < 1e-8);
        }
    }
}
