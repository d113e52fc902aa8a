//! The fixed Gaussian MIMO relay channel
//!
//! ```text
//! y1 = √γ1 H1 x1 + z1
//! y  = √γ2 H2 x1 + √γ3 H3 x2 + z
//! ```
//!
//! and the two-antenna angle family used by the sweeps.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{c, CMatrix, C64};

/// Channel gains and SNR scalings of a full-duplex relay channel.
#[derive(Debug, Clone, PartialEq)]
pub struct RelayChannel {
    /// Transmitter to relay, `Nr × Mt`.
    pub h1: CMatrix,
    /// Transmitter to receiver, `Nt × Mt`.
    pub h2: CMatrix,
    /// Relay to receiver, `Nt × Mr`.
    pub h3: CMatrix,
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma3: f64,
}

impl RelayChannel {
    pub fn new(
        h1: CMatrix,
        h2: CMatrix,
        h3: CMatrix,
        gamma1: f64,
        gamma2: f64,
        gamma3: f64,
    ) -> Result<Self> {
        let (nr, mt) = h1.shape();
        let (nt, mt2) = h2.shape();
        let (nt3, mr) = h3.shape();
        if mt == 0 || mr == 0 || nt == 0 || nr == 0 {
            return Err(Error::Invariant("every terminal needs at least one antenna".into()));
        }
        if mt2 != mt {
            return Err(Error::Invariant(format!(
                "H1 has {mt} transmit columns but H2 has {mt2}"
            )));
        }
        if nt3 != nt {
            return Err(Error::Invariant(format!(
                "H2 has {nt} receive rows but H3 has {nt3}"
            )));
        }
        for (name, g) in [("gamma1", gamma1), ("gamma2", gamma2), ("gamma3", gamma3)] {
            if !(g >= 0.0 && g.is_finite()) {
                return Err(Error::Invariant(format!("{name} must be finite and >= 0, got {g}")));
            }
        }
        for (name, h) in [("H1", &h1), ("H2", &h2), ("H3", &h3)] {
            if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::Invariant(format!("{name} has non-finite entries")));
            }
        }
        Ok(Self {
            h1,
            h2,
            h3,
            gamma1,
            gamma2,
            gamma3,
        })
    }

    /// Transmitter antennas.
    pub fn mt(&self) -> usize {
        self.h1.ncols()
    }

    /// Relay transmit antennas.
    pub fn mr(&self) -> usize {
        self.h3.ncols()
    }

    /// Receiver antennas.
    pub fn nt(&self) -> usize {
        self.h2.nrows()
    }

    /// Relay receive antennas.
    pub fn nr(&self) -> usize {
        self.h1.nrows()
    }

    /// True when every gain is real, so real covariances suffice.
    pub fn is_real(&self) -> bool {
        [&self.h1, &self.h2, &self.h3]
            .iter()
            .all(|h| h.iter().all(|z| z.im == 0.0))
    }

    /// `B = [√γ2 H2, √γ3 H3]`, the receiver's view of the stacked `(u, x2)` input.
    pub fn b_matrix(&self) -> CMatrix {
        let (nt, mt, mr) = (self.nt(), self.mt(), self.mr());
        let (s2, s3) = (self.gamma2.sqrt(), self.gamma3.sqrt());
        CMatrix::from_fn(nt, mt + mr, |i, j| {
            if j < mt {
                self.h2[(i, j)] * s2
            } else {
                self.h3[(i, j - mt)] * s3
            }
        })
    }
}

/// Relay placement, which fixes the ratio of the three SNR scalings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TopologyKind {
    Equidistant,
    RelayNearTx,
    RelayNearRx,
}

impl TopologyKind {
    pub const ALL: [TopologyKind; 3] = [
        TopologyKind::Equidistant,
        TopologyKind::RelayNearTx,
        TopologyKind::RelayNearRx,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TopologyKind::Equidistant => "equidistant",
            TopologyKind::RelayNearTx => "relay-near-tx",
            TopologyKind::RelayNearRx => "relay-near-rx",
        }
    }
}

impl fmt::Display for TopologyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl std::str::FromStr for TopologyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TopologyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown topology '{s}' (expected equidistant, relay-near-tx or relay-near-rx)"
                ))
            })
    }
}

/// Default SNR scaling; puts the non-cooperative lower bound of the angle
/// family at exactly 1 bit/s/Hz.
pub const DEFAULT_BASE_GAMMA: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Topology {
    pub kind: TopologyKind,
    pub base_gamma: f64,
}

impl Topology {
    pub fn new(kind: TopologyKind, base_gamma: f64) -> Result<Self> {
        if !(base_gamma > 0.0 && base_gamma.is_finite()) {
            return Err(Error::Argument(format!(
                "base gamma must be positive, got {base_gamma}"
            )));
        }
        Ok(Self { kind, base_gamma })
    }

    /// `(γ1, γ2, γ3)`.
    pub fn gammas(&self) -> (f64, f64, f64) {
        let g = self.base_gamma;
        match self.kind {
            TopologyKind::Equidistant => (g, g, g),
            TopologyKind::RelayNearTx => (10.0 * g, g, g),
            TopologyKind::RelayNearRx => (g, g, 10.0 * g),
        }
    }
}

/// Two transmit antennas, single-antenna relay and receiver:
/// `H2 = [1 0]`, `H3 = [1]`, `H1 = norm·[cos θ, sin θ]`.
pub fn make_angle_channel(theta: f64, h1_norm: f64, topology: Topology) -> Result<RelayChannel> {
    if !(0.0..=PI).contains(&theta) {
        return Err(Error::Argument(format!("angle {theta} outside [0, π]")));
    }
    if !(h1_norm > 0.0 && h1_norm.is_finite()) {
        return Err(Error::Argument(format!("H1 norm must be positive, got {h1_norm}")));
    }
    let (g1, g2, g3) = topology.gammas();
    let h1 = CMatrix::from_row_slice(1, 2, &[c(h1_norm * theta.cos()), c(h1_norm * theta.sin())]);
    let h2 = CMatrix::from_row_slice(1, 2, &[c(1.0), c(0.0)]);
    let h3 = CMatrix::from_row_slice(1, 1, &[c(1.0)]);
    RelayChannel::new(h1, h2, h3, g1, g2, g3)
}

/// Angle in `[0, π]` between two row vectors, from their real inner product.
pub fn angle_between(a: &[C64], b: &[C64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Argument(format!(
            "vectors have different lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    let na = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let nb = b.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::Argument("angle of a zero vector is undefined".into()));
    }
    // arccos of the normalized real inner product, evaluated as
    // 2·atan2(|â − b̂|, |â + b̂|) so it stays accurate near 0 and π.
    let (mut diff, mut sum) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (x, y) = (x / na, y / nb);
        diff += (x - y).norm_sqr();
        sum += (x + y).norm_sqr();
    }
    Ok(2.0 * diff.sqrt().atan2(sum.sqrt()))
}
