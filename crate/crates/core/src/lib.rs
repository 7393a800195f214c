#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Error-probability bounds and explicit protocols for locating one anomalous-noise
//! Gaussian channel among identical background channels.
//!
//! * [`gaussian`]: covariance-matrix algebra and the two-mode Gaussian fidelity.
//! * [`bounds`]: closed-form fidelities and fidelity-based error bounds.
//! * [`advantage`]: conditions and probe counts for provable quantum advantage.
//! * [`mle`]: photon-counting maximum-likelihood protocol, evaluated exactly.
//! * [`simulate`]: seedable Monte Carlo of the same protocol.
//! * [`scenarios`]: builders for imaging, eavesdropper and additive-noise tasks.

pub mod advantage;
pub mod bounds;
pub mod error;
pub mod gaussian;
pub mod mle;
mod quadrature;
pub mod scenarios;
pub mod simulate;

pub use bounds::{error_bounds, CpfScenario, ErrorBoundSet, LogProb};
pub use error::{Error, Result};
pub use gaussian::{ChannelKind, PhaseInsensitiveChannel, TwoModeCovariance};
