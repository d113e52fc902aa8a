//! Capacity bounds and message-splitting achievable rates for fixed Gaussian
//! MIMO relay channels.
//!
//! The crate evaluates
//!
//! * the cut-set upper bound and the non-cooperative lower bound,
//! * superposition-coding and dirty-paper-precoding rates for both receiver
//!   decode orders,
//!
//! optimizes them over feasible transmit covariances with derivative-free
//! search, checks every closed form against a Monte Carlo estimator, and
//! sweeps the two-antenna angle family over three relay placements.

pub mod bounds;
pub mod channel;
pub mod error;
pub mod matrix;
pub mod mc;
pub mod optimize;
pub mod rates;
pub mod sweep;

pub use channel::{make_angle_channel, angle_between, RelayChannel, Topology, TopologyKind};
pub use error::{Error, Result};
pub use matrix::{CMatrix, HermitianPsd, C64};
pub use rates::{achievable_rate, CovarianceProfile, RateBreakdown, Strategy};
