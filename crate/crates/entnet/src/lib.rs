//! Simulation and analysis of entanglement-distribution networks that share
//! fiber with classical DWDM traffic.
//!
//! The crate covers the full chain: planning full-mesh wavelength-pair
//! allocations on the ITU grid ([`topology`], [`spectral`]), link budgets and
//! classical-noise physics ([`photonics`]), scenario files tying a whole
//! testbed together ([`scenario`]), analytic rate models and Monte-Carlo time
//! tag synthesis ([`statistics`]), and coincidence analysis from histograms to
//! secure-key rates ([`analysis`]). [`commands`] wires these into the CLI
//! exposed by the `entnet` binary.

// Guards are written `!(x > 0.0)` so NaN is rejected along with the
// out-of-range values; `x <= 0.0` would let NaN through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod commands;
pub mod error;
pub mod photonics;
pub mod scenario;
pub mod spectral;
pub mod statistics;
pub mod topology;

pub use error::{Error, Result};
