//! Experiment plumbing: TOML configs, the JSONL event log, genome
//! documents, checkpoint/resume, lineage replay, the dropout baseline, the
//! 1D-vs-2D comparison runner and the `neurodarwin` command line.

mod baseline;
mod cli;
mod compare;
mod config;
mod genome;
mod log;
mod run;

pub use baseline::{run_train, BaselineRow, BASELINE_COLUMNS, BASELINE_SCHEMA_VERSION};
pub use cli::run_cli;
pub use compare::{
    arm_config, compare_csv, compare_modes, pairs_csv, Arm, ArmResult, CompareTable, PairSummary,
    ARMS, COMPARE_COLUMNS, COMPARE_SCHEMA_VERSION, PAIRS, PAIR_COLUMNS,
};
pub use config::{BaselineConfig, CompareConfig, ExperimentConfig, SplitConfig, TaskConfig};
pub use genome::{
    deserialize_genome, read_genome, serialize_genome, write_genome, GENOME_FORMAT, GENOME_VERSION,
};
pub use log::{log_event, read_events, strip_wall_clock, EventKind, EventLog, EventRecord};
pub use run::{
    checkpoint_from_json, checkpoint_to_json, final_payload, replay, resume_evolve, run_evolve,
    seed_payload, step_records, CheckpointPayload, DatasetInfo, FinalPayload, Phase, ReplayCheck,
    ReplayTarget, RewirePayload, RunSummary, SeedPayload, SUMMARY_COLUMNS, SUMMARY_SCHEMA_VERSION,
};
