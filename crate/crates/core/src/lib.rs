//! Widely linear (augmented complex) adaptive IIR filters and their
//! incremental training over a ring of cooperating nodes.
//!
//! Layering, bottom up:
//!
//! - [`wl`]: weight-vector layout and augmented second-order statistics.
//! - [`filter`]: the single-node ACAIIR engine (output, sensitivities,
//!   gradient, update).
//! - [`signal`]: seeded generators for the test processes and a wind-data loader.
//! - [`network`]: incremental (IACA-IIR) and non-cooperative training loops.
//! - [`montecarlo`]: seeded batches of runs.
//! - [`metrics`]: prediction gain, ensemble MSE and parameter sweeps.
//! - [`experiment`]: experiment configs, presets and CSV/JSON output.

pub mod error;
pub mod experiment;
pub mod filter;
pub mod metrics;
pub mod montecarlo;
pub mod network;
pub mod signal;
pub mod wl;

pub use error::{Error, Result};
pub use filter::{FilterConfig, FilterNodeState, SensitivityMode, StepOutcome};
pub use network::{NodeStream, RingNetwork, RunRecord};
pub use signal::{NoiseSource, SignalKind, SignalSpec};
pub use wl::{AugmentedStats, WeightVector, C64};
