//! Stochastic-integral bandwidth model for peer-to-peer networks.
//!
//! A peer population evolves as a zero-mean Ornstein–Uhlenbeck process `S`,
//! per-peer traffic `B` follows a power law with lower cutoff `a`, and the
//! bandwidth is the Ito sum `|Σ B(t_{i+1}) (S_{t_{i+1}} − S_{t_i})|`.
//!
//! The crate is split by concern:
//!
//! - [`ou`]: exact OU transitions, path generation, stationary moments.
//! - [`traffic`]: the power-law traffic marginal and its sampler.
//! - [`synthesis`]: individual, aggregate and multiservice bandwidth traces.
//! - [`statistics`]: empirical moments and autocovariance, the closed-form
//!   moment expressions of the model, the three-term ACV fit and an LRD check.
//! - [`estimation`]: maximum likelihood for `(γ, σ)` and the tail index `n`.
//! - [`queueing`]: Lindley queue simulation and the Weibull-type tail formula
//!   for self-similar input.
//!
//! Every generator takes an explicit `u64` seed; identical inputs produce
//! bit-identical outputs.

pub mod error;
pub mod estimation;
pub mod ou;
pub mod queueing;
pub mod rng;
pub mod statistics;
pub mod synthesis;
pub mod traffic;

/// Library version recorded in output metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use error::{Error, Result};
pub use ou::{Grid, OuParams, Trace};
pub use synthesis::{AggregateSpec, BandwidthSpec, MultiserviceSpec, NamedService};
pub use traffic::{PowerLawParams, TrafficIndices};
