//! Across-population evolution: tournament selection, mutation and
//! crossover, few-epoch training of each child, and kill-worst or
//! kill-oldest removal. In 2D mode every child also goes through a rewiring
//! phase before (or during) training.

mod engine;
mod mutation;
mod population;

pub use engine::{
    build_child, build_founder, evolve, founder_seeds, seed_population, worker_rng, Checkpoint,
    Context, Emission, Engine, EvolutionConfig, EvolutionHistory, EvolutionMode, FounderRecord,
    Offspring, Placement, PopulationStats, RngState, SeedRecord, StepRecord,
};
pub use mutation::{
    crossover, make_child, Child, MutationCatalog, MutationKind, MutationRecord,
    MAX_MUTATION_ATTEMPTS,
};
pub use population::{
    rank, remove_individual, tournament_select, Genome, Individual, Population, RemovalPolicy,
};
