//! Two-dimensional neuroevolution of small neural networks.
//!
//! Networks evolve along two axes at once:
//!
//! - **across the population**: tournament selection, mutation and
//!   crossover, a few epochs of backprop per child, and removal of either the
//!   worst or the oldest member ([`evolution`]);
//! - **within each individual**: unit birth and death, contribution-driven
//!   stochastic killing, synapse pruning, and unit/filter migration
//!   ([`rewire`]).
//!
//! [`net`] is the numerical core (forward, backprop, SGD, dropout),
//! [`data`] generates and loads desk-scale tasks, and [`harness`] runs
//! experiments, writes JSONL logs, serializes genomes, replays lineages and
//! compares 1D against 2D evolution.
//!
//! The runnable programs under `examples/` walk through each capability:
//!
//! ```bash
//! cargo run --release -p neurodarwin --example xor_backprop
//! cargo run --release -p neurodarwin --example two_moons_evolution
//! ```

pub mod data;
pub mod error;
pub mod evolution;
pub mod harness;
pub mod net;
pub mod rewire;

pub use error::{Error, Result};

/// The random stream type used everywhere. All randomness is passed
/// explicitly; there is no global generator.
pub type StreamRng = rand_chacha::ChaCha8Rng;
