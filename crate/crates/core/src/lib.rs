//! Minimum time-span transmission scheduling for two-way relay networks
//! with network coding at the relay.
//!
//! Two sources exchange finite amounts of data through a relay, one node
//! transmitting at a time. The crate covers three channel models:
//!
//! * fixed link rates: [`rates`] gives the forwarding and coded rates and
//!   the per-slot rate region, [`span`] the optimal time split;
//! * finitely many joint link states: [`finite_state`] picks the assumed
//!   state that maximises expected delivered rate;
//! * Rayleigh fading at the relay: [`fading`] water-fills a total power
//!   budget over slots, with causal or noncausal channel knowledge, under
//!   several coding/forwarding strategies.
//!
//! [`harness`] runs seeded Monte-Carlo sweeps over those strategies.

pub mod error;
pub mod fading;
pub mod finite_state;
pub mod harness;
pub mod rates;
pub mod span;

pub use error::{Error, Result};
pub use fading::{
    FadingConfig, Knowledge, Mode, PowerAllocation, PowerConfig, RelayBuffers, Strategy,
};
pub use finite_state::{AlphaVector, FiniteStateModel, RateLevels, StatePolicy};
pub use harness::{ExperimentConfig, SpanStats, SummaryRow, Sweep};
pub use rates::{Backlog, LinkCapacities, RatePoint, RateTriple};
pub use span::Schedule;
