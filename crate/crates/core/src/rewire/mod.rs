//! Within-individual rewiring: unit birth and death, contribution-driven
//! stochastic killing, synapse pruning, unit and filter migration, and
//! layer insertion/removal.
//!
//! Every operator is pure: it takes a network (plus a random stream) and
//! returns a new, validated network with a [`RewireEvent`] describing what
//! changed.

mod contribution;
mod event;
mod ops;
mod phase;

pub use contribution::{
    contribution_scores, stochastic_kill, ContributionReport, Probe, UnitScore, GREEDY_TEMPERATURE,
};
pub use event::{RewireEvent, RewireOp};
pub use ops::{
    birth_unit, kill_unit, layer_mutation, migrate_filter, migrate_unit, permute_filters,
    permute_units, prune_synapses, BirthPolicy, LayerOp, PruneCriterion,
};
pub use phase::{apply_random, rewiring_phase, RewireConfig};
