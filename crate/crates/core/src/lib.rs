//! Simulation laboratory for stochastic non-stationary delayed bandits with
//! intermediate observations.
//!
//! * [`instance`]: problem definition, expected rewards, JSON schema.
//! * [`environment`]: trajectory simulation, delay queue, shift schedules.
//! * [`estimators`]: windowed transition counts, delayed reward means,
//!   confidence radii.
//! * [`optimism`]: the L1-ball optimistic transition solver.
//! * [`policies`]: NSD-UCRL2, NSD-PSRL, UCB, SW-UCB and oracle variants.
//! * [`runner`]: Monte-Carlo harness with common random numbers.
//! * [`cli`]: experiment presets, CSV/SVG output, the `nsd-lab` binary.

pub mod cli;
pub mod environment;
pub mod error;
pub mod estimators;
pub mod feedback;
pub mod instance;
pub mod optimism;
pub mod policies;
pub mod rng;
pub mod runner;

pub use error::{NsdError, Result};
pub use feedback::{RegretTrace, RewardEvent, RoundFeedback};
pub use instance::{DelayModel, Mixture, NsdInstance, RewardModel, Segment};
pub use policies::{Policy, PolicyKind, PolicySpec};
pub use runner::{AggregateResult, ExperimentConfig, InstanceSource};
