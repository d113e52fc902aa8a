//! Closed-form mutual informations for transmit-side message splitting.
//!
//! The transmit signal is split as `x1 = u + v`: `u` carries the message the
//! relay decodes and forwards cooperatively, `v` the message only the receiver
//! decodes. Under dirty-paper precoding the transmitter instead sends
//! `x1 = x1' + v` and precodes the relay's auxiliary against `v`; the profile's
//! `sigma_u`/`cross_ux2` then describe `x1'` and its correlation with the relay.
//!
//! With `A = [Σ_u Γ; Γ† Σ_x2]`, `B = [√γ2 H2, √γ3 H3]`, `S_v = γ2 H2 Σ_v H2†`
//! and `T = B A B†`:
//!
//! | quantity           | value                                                  |
//! |--------------------|--------------------------------------------------------|
//! | `I(U;Y1|X2)`       | `log det(I + γ1H1(Σ_u|x2 + Σ_v)H1†) / det(I + γ1H1Σ_vH1†)` |
//! | `I(U,X2;Y)`        | `log det(I + S_v + T) / det(I + S_v)`                  |
//! | `I(V;Y|U,X2)`      | `log det(I + S_v)`                                     |
//! | `I(V;Y)`           | `log det(I + S_v + T) / det(I + T)`                    |
//! | `I(U,X2;Y|V)`      | `log det(I + T)`                                       |
//! | dirty-paper link   | `log det(I + γ1 H1 Σ_x1'|x2 H1†)`                      |

use std::fmt;
use std::str::FromStr;

use crate::channel::RelayChannel;
use crate::error::{Error, Result};
use crate::matrix::{
    c, congruence, ln_det_plus_identity, nats_to_bits, schur_conditional_cov, CMatrix, HermitianPsd,
};

/// Slack allowed on the trace budgets.
pub const POWER_TOL: f64 = 1e-9;

/// Covariances defining one message-splitting input distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceProfile {
    /// `Σ_u` (or `Σ_x1'` under precoding), `Mt × Mt`.
    pub sigma_u: HermitianPsd,
    /// `Σ_v`, `Mt × Mt`; `v` is independent of `u` and `x2`.
    pub sigma_v: HermitianPsd,
    /// `Σ_x2`, `Mr × Mr`.
    pub sigma_x2: HermitianPsd,
    /// `E(u x2†)`, `Mt × Mr`.
    pub cross_ux2: CMatrix,
    /// Covariance of `u` (or `x1'`) given `x2`.
    pub sigma_x1p_given_x2: HermitianPsd,
}

impl CovarianceProfile {
    /// Builds a profile, checking that the joint `(u, x2)` covariance is PSD
    /// and deriving the conditional covariance from it.
    pub fn new(
        sigma_u: HermitianPsd,
        sigma_v: HermitianPsd,
        sigma_x2: HermitianPsd,
        cross_ux2: CMatrix,
    ) -> Result<Self> {
        let (mt, mr) = (sigma_u.dim(), sigma_x2.dim());
        if sigma_v.dim() != mt || cross_ux2.shape() != (mt, mr) {
            return Err(Error::Invariant(format!(
                "profile blocks disagree: Σ_u {mt}, Σ_v {}, Σ_x2 {mr}, cross {:?}",
                sigma_v.dim(),
                cross_ux2.shape()
            )));
        }
        let joint = HermitianPsd::new(joint_matrix(&sigma_u, &sigma_x2, &cross_ux2))
            .map_err(|e| Error::Invariant(format!("joint (u, x2) covariance: {e}")))?;
        let cond = schur_conditional_cov(&joint, mt)?;
        Ok(Self {
            sigma_u,
            sigma_v,
            sigma_x2,
            cross_ux2,
            sigma_x1p_given_x2: cond.cov,
        })
    }

    /// Assembles a profile whose conditional covariance is already known.
    pub(crate) fn from_parts(
        sigma_u: HermitianPsd,
        sigma_v: HermitianPsd,
        sigma_x2: HermitianPsd,
        cross_ux2: CMatrix,
        sigma_x1p_given_x2: HermitianPsd,
    ) -> Self {
        Self {
            sigma_u,
            sigma_v,
            sigma_x2,
            cross_ux2,
            sigma_x1p_given_x2,
        }
    }

    pub fn zeros(mt: usize, mr: usize) -> Self {
        Self {
            sigma_u: HermitianPsd::zeros(mt),
            sigma_v: HermitianPsd::zeros(mt),
            sigma_x2: HermitianPsd::zeros(mr),
            cross_ux2: CMatrix::zeros(mt, mr),
            sigma_x1p_given_x2: HermitianPsd::zeros(mt),
        }
    }

    pub fn mt(&self) -> usize {
        self.sigma_u.dim()
    }

    pub fn mr(&self) -> usize {
        self.sigma_x2.dim()
    }

    /// `A = [Σ_u Γ; Γ† Σ_x2]`.
    pub fn joint(&self) -> CMatrix {
        joint_matrix(&self.sigma_u, &self.sigma_x2, &self.cross_ux2)
    }

    /// Checks every profile invariant against the given antenna counts.
    pub fn validate(&self, mt: usize, mr: usize) -> Result<()> {
        if self.mt() != mt || self.sigma_v.dim() != mt || self.mr() != mr {
            return Err(Error::Invariant(format!(
                "profile is {}+{} dimensional, channel needs {mt}+{mr}",
                self.mt(),
                self.mr()
            )));
        }
        if self.cross_ux2.shape() != (mt, mr) || self.sigma_x1p_given_x2.dim() != mt {
            return Err(Error::Invariant("cross-covariance or conditional block has wrong shape".into()));
        }
        HermitianPsd::new(self.joint())
            .map_err(|e| Error::Invariant(format!("joint (u, x2) covariance: {e}")))?;
        HermitianPsd::new(self.sigma_v.as_matrix().clone())?;
        HermitianPsd::new(self.sigma_x1p_given_x2.as_matrix().clone())?;
        let tx = self.sigma_u.trace() + self.sigma_v.trace();
        if tx > mt as f64 + POWER_TOL {
            return Err(Error::Invariant(format!(
                "transmit power {tx} exceeds budget {mt}"
            )));
        }
        let rx = self.sigma_x2.trace();
        if rx > mr as f64 + POWER_TOL {
            return Err(Error::Invariant(format!("relay power {rx} exceeds budget {mr}")));
        }
        Ok(())
    }
}

fn joint_matrix(sigma_u: &HermitianPsd, sigma_x2: &HermitianPsd, cross: &CMatrix) -> CMatrix {
    let (mt, mr) = (sigma_u.dim(), sigma_x2.dim());
    let mut a = CMatrix::zeros(mt + mr, mt + mr);
    a.view_mut((0, 0), (mt, mt)).copy_from(sigma_u.as_matrix());
    a.view_mut((mt, mt), (mr, mr)).copy_from(sigma_x2.as_matrix());
    a.view_mut((0, mt), (mt, mr)).copy_from(cross);
    a.view_mut((mt, 0), (mr, mt)).copy_from(&cross.adjoint());
    a
}

/// Coding scheme on the transmitter side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Superposition,
    DirtyPaper,
}

/// Which message the receiver decodes first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DecodeOrder {
    UFirst,
    VFirst,
}

/// One scheme/decode-order combination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    ScUFirst,
    ScVFirst,
    PreUFirst,
    PreVFirst,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::ScUFirst,
        Strategy::ScVFirst,
        Strategy::PreUFirst,
        Strategy::PreVFirst,
    ];

    pub fn new(scheme: Scheme, order: DecodeOrder) -> Self {
        match (scheme, order) {
            (Scheme::Superposition, DecodeOrder::UFirst) => Strategy::ScUFirst,
            (Scheme::Superposition, DecodeOrder::VFirst) => Strategy::ScVFirst,
            (Scheme::DirtyPaper, DecodeOrder::UFirst) => Strategy::PreUFirst,
            (Scheme::DirtyPaper, DecodeOrder::VFirst) => Strategy::PreVFirst,
        }
    }

    pub fn scheme(self) -> Scheme {
        match self {
            Strategy::ScUFirst | Strategy::ScVFirst => Scheme::Superposition,
            Strategy::PreUFirst | Strategy::PreVFirst => Scheme::DirtyPaper,
        }
    }

    pub fn order(self) -> DecodeOrder {
        match self {
            Strategy::ScUFirst | Strategy::PreUFirst => DecodeOrder::UFirst,
            Strategy::ScVFirst | Strategy::PreVFirst => DecodeOrder::VFirst,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Strategy::ScUFirst => "sc_u_first",
            Strategy::ScVFirst => "sc_v_first",
            Strategy::PreUFirst => "pre_u_first",
            Strategy::PreVFirst => "pre_v_first",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.tag())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.tag() == s)
            .ok_or_else(|| Error::Argument(format!("unknown strategy '{s}'")))
    }
}

/// Per-link terms and the resulting rate of one strategy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateBreakdown {
    /// Rate of `w_u` into the relay.
    pub r_relay_link: f64,
    /// Rate of `w_u` over the cooperative multiple-access link to the receiver.
    pub r_mac: f64,
    /// Rate of `w_v` at the receiver.
    pub r_direct: f64,
    /// `min(r_relay_link, r_mac)`.
    pub r_u: f64,
    /// `r_u + r_direct`.
    pub r_total: f64,
    pub strategy: Strategy,
}

fn check_dims(ch: &RelayChannel, p: &CovarianceProfile) -> Result<()> {
    if p.mt() != ch.mt() || p.sigma_v.dim() != ch.mt() || p.mr() != ch.mr() {
        return Err(Error::Invariant(format!(
            "profile is {}+{} dimensional but the channel has Mt={} Mr={}",
            p.mt(),
            p.mr(),
            ch.mt(),
            ch.mr()
        )));
    }
    Ok(())
}

fn bits(nats: f64) -> f64 {
    nats_to_bits(nats).max(0.0)
}

fn relay_link_sc_nats(ch: &RelayChannel, p: &CovarianceProfile) -> Result<f64> {
    let g1h1 = &ch.h1 * c(ch.gamma1.sqrt());
    let sv = congruence(&g1h1, p.sigma_v.as_matrix());
    let total = congruence(&g1h1, &(p.sigma_x1p_given_x2.as_matrix() + p.sigma_v.as_matrix()));
    Ok(ln_det_plus_identity(&total)? - ln_det_plus_identity(&sv)?)
}

fn relay_link_dpc_nats(ch: &RelayChannel, p: &CovarianceProfile) -> Result<f64> {
    let g1h1 = &ch.h1 * c(ch.gamma1.sqrt());
    ln_det_plus_identity(&congruence(&g1h1, p.sigma_x1p_given_x2.as_matrix()))
}

/// `ln det` of `I + S_v`, `I + T` and `I + S_v + T` at the receiver.
struct ReceiverTerms {
    sv: f64,
    t: f64,
    svt: f64,
}

impl ReceiverTerms {
    fn new(ch: &RelayChannel, p: &CovarianceProfile) -> Result<Self> {
        let g2h2 = &ch.h2 * c(ch.gamma2.sqrt());
        let s_v = congruence(&g2h2, p.sigma_v.as_matrix());
        let t = congruence(&ch.b_matrix(), &p.joint());
        Ok(Self {
            sv: ln_det_plus_identity(&s_v)?,
            svt: ln_det_plus_identity(&(&s_v + &t))?,
            t: ln_det_plus_identity(&t)?,
        })
    }
}

/// `I(U;Y1|X2)` under superposition coding.
pub fn mi_relay_link_sc(ch: &RelayChannel, p: &CovarianceProfile) -> Result<f64> {
    check_dims(ch, p)?;
    relay_link_sc_nats(ch, p).map(bits)
}

/// `I(U,X2;Y)`: `w_u` over the cooperative multiple-access link, `v` as noise.
pub fn mi_mac(ch: &RelayChannel, p: &CovarianceProfile) -> Result<f64> {
    check_dims(ch, p)?;
    let r = ReceiverTerms::new(ch, p)?;
    Ok(bits(r.svt - r.sv))
}

/// `I(V;Y|U,X2)`: `w_v` after `u` and `x2` are stripped.
pub fn mi_direct_given(ch: &RelayChannel, p: &CovarianceProfile) -> Result<f64> {
    check_dims(ch, p)?;
    let g2h2 = &ch.h2 * c(ch.gamma2.sqrt());
    ln_det_plus_identity(&congruence(&g2h2, p.sigma_v.as_matrix())).map(bits)
}

/// `I(V;Y)`: `w_v` decoded first, cooperative signal as noise.
pub fn mi_v_unconditional(ch: &RelayChannel, p: &CovarianceProfile) -> Result<f64> {
    check_dims(ch, p)?;
    let r = ReceiverTerms::new(ch, p)?;
    Ok(bits(r.svt - r.t))
}

/// `I(U,X2;Y|V)`: cooperative rate once `v` is stripped.
pub fn mi_mac_given_v(ch: &RelayChannel, p: &CovarianceProfile) -> Result<f64> {
    check_dims(ch, p)?;
    let g = ch.b_matrix();
    ln_det_plus_identity(&congruence(&g, &p.joint())).map(bits)
}

/// `I(U;Y1|X2) − I(U;V|X2)` with the transmitter precoding against `v`;
/// `v` no longer appears.
pub fn mi_relay_link_dpc(ch: &RelayChannel, p: &CovarianceProfile) -> Result<f64> {
    check_dims(ch, p)?;
    relay_link_dpc_nats(ch, p).map(bits)
}

/// Rate of `strategy` for profile `p`.
pub fn achievable_rate(
    ch: &RelayChannel,
    p: &CovarianceProfile,
    strategy: Strategy,
) -> Result<RateBreakdown> {
    check_dims(ch, p)?;
    let relay = match strategy.scheme() {
        Scheme::Superposition => relay_link_sc_nats(ch, p)?,
        Scheme::DirtyPaper => relay_link_dpc_nats(ch, p)?,
    };
    let rx = ReceiverTerms::new(ch, p)?;
    let (mac, direct) = match strategy.order() {
        DecodeOrder::UFirst => (rx.svt - rx.sv, rx.sv),
        DecodeOrder::VFirst => (rx.t, rx.svt - rx.t),
    };
    let (r_relay_link, r_mac, r_direct) = (bits(relay), bits(mac), bits(direct));
    let r_u = r_relay_link.min(r_mac);
    Ok(RateBreakdown {
        r_relay_link,
        r_mac,
        r_direct,
        r_u,
        r_total: r_u + r_direct,
        strategy,
    })
}

#[cfg(test)]
pub(crate) mod test_util {
    use super::*;
    use crate::matrix::test_util::random_cmatrix;
    use crate::matrix::C64;
    use rand::Rng;

    /// Random channel with the given antenna counts and γ in [0.2, 2].
    pub fn random_channel<R: Rng>(rng: &mut R, mt: usize, mr: usize, nt: usize, nr: usize) -> RelayChannel {
        let mut g = || rng.random_range(0.2..2.0);
        let (g1, g2, g3) = (g(), g(), g());
        RelayChannel::new(
            random_cmatrix(rng, nr, mt),
            random_cmatrix(rng, nt, mt),
            random_cmatrix(rng, nt, mr),
            g1,
            g2,
            g3,
        )
        .unwrap()
    }

    /// Random feasible profile: joint and Σ_v from random factors, scaled
    /// to a random fraction of the budgets.
    pub fn random_profile<R: Rng>(rng: &mut R, mt: usize, mr: usize) -> CovarianceProfile {
        let f = random_cmatrix(rng, mt + mr, mt + mr);
        let joint = HermitianPsd::from_factor(&f).into_matrix();
        let fv = random_cmatrix(rng, mt, mt);
        let sigma_v = HermitianPsd::from_factor(&fv);
        let su = joint.view((0, 0), (mt, mt)).into_owned();
        let sx = joint.view((mt, mt), (mr, mr)).into_owned();
        let tr_t: f64 = su.diagonal().iter().map(|z| z.re).sum::<f64>() + sigma_v.trace();
        let tr_r: f64 = sx.diagonal().iter().map(|z| z.re).sum();
        let st = (rng.random_range(0.1..1.0) * mt as f64 / tr_t).sqrt();
        let sr = (rng.random_range(0.1..1.0) * mr as f64 / tr_r).sqrt();
        let d: Vec<C64> = (0..mt + mr)
            .map(|i| C64::new(if i < mt { st } else { sr }, 0.0))
            .collect();
        let dm = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(d));
        let joint = &dm * joint * &dm;
        CovarianceProfile::new(
            HermitianPsd::from_hermitian(joint.view((0, 0), (mt, mt)).into_owned()),
            sigma_v.scaled(st * st),
            HermitianPsd::from_hermitian(joint.view((mt, mt), (mr, mr)).into_owned()),
            joint.view((0, mt), (mt, mr)).into_owned(),
        )
        .unwrap()
    }
}
