//! Coordinated downlink beamforming for multicell MISO networks where base
//! stations exchange only quantized scalar rates.
//!
//! Each base station knows the channels from its own antennas to every user
//! (local CSI). A set of users is chosen to be made interference-free; every
//! base station then designs its beam from local CSI alone. The choice of that
//! set is driven by a table of locally computable rates, quantized with a
//! Lloyd-Max codebook matched to their analytic distribution, plus an analytic
//! upper bound on the mean rate of the remaining users.
//!
//! Module map:
//! - [`numerics`]: complex vectors/matrices, Jacobi SVD, Rayleigh-quotient
//!   solve, upper incomplete gamma, adaptive quadrature.
//! - [`channel`]: Rayleigh and distance-attenuated channel drops, local CSI views.
//! - [`beamforming`]: per-regime beam construction, SINR/rate evaluation.
//! - [`selection`]: candidate enumeration, the global-rate bound, argmax choice.
//! - [`quantization`]: rate pdf, Lloyd-Max training, scalar quantizer.
//! - [`protocol`]: centralized/decentralized exchange with bit ledgers.
//! - [`baselines`]: Max-SNR, Min-GI, Max-SLNR, random, WMMSE, global search, ZF.
//! - [`harness`]: experiment specs, Monte Carlo runner, result files.

pub mod baselines;
pub mod beamforming;
pub mod channel;
mod error;
pub mod harness;
pub mod numerics;
pub mod protocol;
pub mod quantization;
pub mod selection;

pub use error::{Error, Result};
