//! Seeded random streams.
//!
//! Every random consumer in a run gets its own ChaCha stream derived from
//! `(master_seed, replication, purpose)`, so results do not depend on thread
//! scheduling or on how many draws another consumer made.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// What a random stream is used for within one replication.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamPurpose {
    /// Shift draws at change points.
    Schedule = 0,
    /// Signal, reward and delay draws inside the environment.
    Environment = 1,
    /// Internal randomness of a policy (posterior sampling).
    Policy = 2,
}

/// Derive an independent stream for `(master_seed, replication, purpose)`.
pub fn stream(master_seed: u64, replication: u64, purpose: StreamPurpose) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream((replication << 8) | purpose as u64);
    rng
}
