use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::genome::{network_doc, network_from_doc, write_genome, NetworkDoc};
use super::log::{read_events, EventKind, EventLog, EventRecord};
use crate::data::Splits;
use crate::error::{Error, Result};
use crate::evolution::{
    build_child, build_founder, Checkpoint, Context, Emission, Engine, FounderRecord, Genome,
    Individual, MutationRecord, Population, PopulationStats, RngState, StepRecord,
};
use crate::net::{evaluate_with, Shape};
use crate::rewire::RewireEvent;

pub const SUMMARY_SCHEMA_VERSION: u32 = 1;
pub const CHECKPOINT_FORMAT: &str = "neurodarwin-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Columns of `summary.csv` written by `evolve`.
pub const SUMMARY_COLUMNS: &str =
    "schema_version,step,child_id,parents,fitness,diverged,param_count,param_steps,\
removed_id,best_fitness,mean_fitness,worst_fitness,best_id,best_param_count";

const NON_GOALS: &str =
    "desk-scale run: CIFAR-10 accuracies of 94.6% / 97.87% / 74.5% and a 9e19 FLOP budget \
are reference points only, not targets";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub input: Shape,
    pub classes: usize,
    pub train: usize,
    pub validation: usize,
    pub test: usize,
    pub split_checksum: String,
}

impl DatasetInfo {
    pub fn of(splits: &Splits) -> DatasetInfo {
        DatasetInfo {
            input: splits.train.input_shape(),
            classes: splits.train.classes(),
            train: splits.train.len(),
            validation: splits.validation.len(),
            test: splits.test.len(),
            split_checksum: splits.checksum(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedPayload {
    pub config: ExperimentConfig,
    pub dataset: DatasetInfo,
    pub non_goals: String,
    pub founders: Vec<FounderRecord>,
    pub stats: PopulationStats,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    /// The child's single catalog mutation.
    Mutation,
    /// The 2D within-individual rewiring phase.
    Rewiring,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewirePayload {
    pub step: u64,
    pub child_id: u64,
    pub phase: Phase,
    pub event: RewireEvent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointPayload {
    pub step: u64,
    pub file: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FinalPayload {
    pub steps: u64,
    /// Highest validation accuracy of any individual in the run.
    pub best_fitness: f64,
    pub champion_id: u64,
    pub champion_fitness: f64,
    pub champion_param_count: usize,
    pub champion_depth: usize,
    pub champion_widths: Vec<usize>,
    /// `None` when the test split is empty.
    pub test_accuracy: Option<f64>,
    /// Trained parameters times SGD updates, over every founder and child.
    pub param_steps: u64,
}

/// Outcome of `evolve`, as written to the `final` record.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub out: PathBuf,
    pub result: FinalPayload,
    pub dataset: DatasetInfo,
    pub wall_ms: u64,
}

#[derive(Serialize, Deserialize)]
struct MemberDoc {
    id: u64,
    parents: Vec<u64>,
    learning_rate: f64,
    fitness: Option<f64>,
    age: u64,
    diverged: bool,
    network: NetworkDoc,
}

#[derive(Serialize, Deserialize)]
struct CheckpointDoc {
    format: String,
    version: u32,
    step: u64,
    next_id: u64,
    capacity: usize,
    counter: u64,
    members: Vec<MemberDoc>,
    rngs: Vec<RngState>,
}

pub fn checkpoint_to_json(c: &Checkpoint) -> String {
    let doc = CheckpointDoc {
        format: CHECKPOINT_FORMAT.into(),
        version: CHECKPOINT_VERSION,
        step: c.step,
        next_id: c.next_id,
        capacity: c.population.capacity(),
        counter: c.population.counter(),
        members: c
            .population
            .members()
            .iter()
            .map(|m| MemberDoc {
                id: m.genome.id,
                parents: m.genome.parents.clone(),
                learning_rate: m.genome.learning_rate,
                fitness: m.fitness,
                age: m.age,
                diverged: m.diverged,
                network: network_doc(&m.genome.network),
            })
            .collect(),
        rngs: c.rngs.clone(),
    };
    serde_json::to_string(&doc).expect("checkpoints serialize")
}

pub fn checkpoint_from_json(text: &str) -> Result<Checkpoint> {
    let doc: CheckpointDoc =
        serde_json::from_str(text).map_err(|e| Error::SchemaViolation(e.to_string()))?;
    if doc.format != CHECKPOINT_FORMAT {
        return Err(Error::SchemaViolation(format!(
            "not a checkpoint: {:?}",
            doc.format
        )));
    }
    if doc.version != CHECKPOINT_VERSION {
        return Err(Error::VersionMismatch {
            expected: CHECKPOINT_VERSION,
            found: doc.version.into(),
        });
    }
    let members = doc
        .members
        .into_iter()
        .map(|m| {
            Ok(Individual {
                genome: Genome {
                    id: m.id,
                    parents: m.parents,
                    network: network_from_doc(m.network)?,
                    learning_rate: m.learning_rate,
                },
                fitness: m.fitness,
                age: m.age,
                diverged: m.diverged,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Checkpoint {
        step: doc.step,
        next_id: doc.next_id,
        population: Population::from_parts(doc.capacity, members, doc.counter)
            .map_err(|e| Error::SchemaViolation(e.to_string()))?,
        rngs: doc.rngs,
    })
}

fn checkpoint_name(step: u64) -> String {
    format!("checkpoints/step-{step:06}.json")
}

fn log_step(log: &mut EventLog, rec: &StepRecord) -> Result<()> {
    if let MutationRecord::Rewire(ev) = &rec.mutation {
        log.log(
            EventKind::Rewire,
            RewirePayload {
                step: rec.step,
                child_id: rec.child_id,
                phase: Phase::Mutation,
                event: ev.clone(),
            },
        )?;
    }
    for ev in &rec.rewire_events {
        log.log(
            EventKind::Rewire,
            RewirePayload {
                step: rec.step,
                child_id: rec.child_id,
                phase: Phase::Rewiring,
                event: ev.clone(),
            },
        )?;
    }
    log.log(EventKind::Step, rec)?;
    Ok(())
}

fn drive(engine: &mut Engine<'_>, log: &mut EventLog, out: &Path) -> Result<()> {
    engine.run(&mut |em| match em {
        Emission::Step(rec) => {
            log::debug!(
                "step {} fitness {:.4} best {:.4}",
                rec.step,
                rec.fitness,
                rec.stats.best_fitness
            );
            log_step(log, &rec)
        }
        Emission::Checkpoint(c) => {
            let name = checkpoint_name(c.step);
            let path = out.join(&name);
            std::fs::write(&path, checkpoint_to_json(&c)).map_err(|e| Error::io(&path, e))?;
            log.log(
                EventKind::Checkpoint,
                CheckpointPayload {
                    step: c.step,
                    file: name,
                },
            )?;
            Ok(())
        }
    })
}

fn finish(
    engine: &Engine<'_>,
    log: &mut EventLog,
    out: &Path,
    dataset: DatasetInfo,
) -> Result<RunSummary> {
    let records = read_events(log.path())?;
    let seed = seed_payload(&records)?;
    let steps: Vec<StepRecord> = step_records(&records)?;
    let best_fitness = seed
        .founders
        .iter()
        .map(|f| f.fitness)
        .chain(steps.iter().map(|s| s.fitness))
        .fold(f64::NEG_INFINITY, f64::max);
    let param_steps = seed.founders.iter().map(|f| f.param_steps).sum::<u64>()
        + steps.iter().map(|s| s.param_steps).sum::<u64>();
    let champion = engine.population().best().expect("population is non-empty");
    let ctx = engine.context();
    let test_accuracy = if ctx.splits.test.is_empty() {
        None
    } else {
        Some(evaluate_with(
            &champion.genome.network,
            &ctx.splits.test,
            &ctx.config.train.dropout,
        )?)
    };
    let result = FinalPayload {
        steps: engine.steps_done(),
        best_fitness,
        champion_id: champion.id(),
        champion_fitness: champion.fitness.unwrap_or(0.0),
        champion_param_count: champion.param_count(),
        champion_depth: champion.genome.network.depth(),
        champion_widths: champion.genome.network.widths(),
        test_accuracy,
        param_steps,
    };
    // a zero-step run logs its seed record and nothing else
    if engine.steps_done() > 0 {
        log.log(EventKind::Final, &result)?;
    }
    write_genome(out.join("champion.genome.json"), &champion.genome)?;
    write_summary(&out.join("summary.csv"), &steps)?;
    Ok(RunSummary {
        out: out.to_path_buf(),
        result,
        dataset,
        wall_ms: log.elapsed_ms(),
    })
}

fn write_summary(path: &Path, steps: &[StepRecord]) -> Result<()> {
    let mut text = String::from(SUMMARY_COLUMNS);
    text.push('\n');
    for s in steps {
        let parents: Vec<String> = s.parents.iter().map(u64::to_string).collect();
        writeln!(
            text,
            "{SUMMARY_SCHEMA_VERSION},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            s.step,
            s.child_id,
            parents.join(";"),
            s.fitness,
            s.diverged,
            s.param_count,
            s.param_steps,
            s.removed_id,
            s.stats.best_fitness,
            s.stats.mean_fitness,
            s.stats.worst_fitness,
            s.stats.best_id,
            s.stats.best_param_count
        )
        .expect("string write");
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn prepare_out(out: &Path) -> Result<()> {
    let dir = out.join("checkpoints");
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))
}

/// Runs one experiment into `out`: `events.jsonl`, `summary.csv`,
/// `champion.genome.json`, `config.toml` and periodic checkpoints.
pub fn run_evolve(cfg: &ExperimentConfig, out: &Path) -> Result<RunSummary> {
    cfg.validate()?;
    let splits = cfg.splits()?;
    prepare_out(out)?;
    let cfg_path = out.join("config.toml");
    std::fs::write(&cfg_path, cfg.to_toml_string()).map_err(|e| Error::io(&cfg_path, e))?;
    let mut log = EventLog::create(out.join("events.jsonl"))?;
    let dataset = DatasetInfo::of(&splits);
    let mut engine = Engine::seed(&cfg.evolution, &splits)?;
    let seed = engine.seed_record().expect("fresh engine").clone();
    log::info!(
        "seeded {} founders, best validation accuracy {:.4}",
        seed.founders.len(),
        seed.stats.best_fitness
    );
    log.log(
        EventKind::Seed,
        SeedPayload {
            config: cfg.clone(),
            dataset: dataset.clone(),
            non_goals: NON_GOALS.into(),
            founders: seed.founders,
            stats: seed.stats,
        },
    )?;
    drive(&mut engine, &mut log, out)?;
    let summary = finish(&engine, &mut log, out, dataset)?;
    log::info!(
        "{} steps, best validation accuracy {:.4}, champion test accuracy {:?}",
        summary.result.steps,
        summary.result.best_fitness,
        summary.result.test_accuracy
    );
    Ok(summary)
}

/// Continues an interrupted run from its last readable checkpoint (or from
/// the founders when none was written). The log is cut back to that point,
/// so a finished resumed run writes the same records as an uninterrupted
/// single-worker run.
pub fn resume_evolve(out: &Path) -> Result<RunSummary> {
    let events_path = out.join("events.jsonl");
    let records = read_events(&events_path)?;
    let cfg = seed_payload(&records)?.config;
    if cfg.evolution.generations == 0 || records.iter().any(|r| r.kind == EventKind::Final) {
        return Err(Error::Config(format!(
            "{} is already finished",
            out.display()
        )));
    }
    cfg.validate()?;
    let splits = cfg.splits()?;
    let dataset = DatasetInfo::of(&splits);
    let mut resume_point = None;
    for r in records
        .iter()
        .rev()
        .filter(|r| r.kind == EventKind::Checkpoint)
    {
        let payload: CheckpointPayload = from_payload(r)?;
        if let Ok(text) = std::fs::read_to_string(out.join(&payload.file)) {
            if let Ok(c) = checkpoint_from_json(&text) {
                resume_point = Some((r.seq, c));
                break;
            }
        }
    }
    let (mut engine, mut log) = match resume_point {
        Some((seq, c)) => {
            log::info!("resuming from step {}", c.step);
            (
                Engine::resume(&cfg.evolution, &splits, c)?,
                EventLog::truncate_after(&events_path, seq)?,
            )
        }
        None => {
            log::info!("no checkpoint; restarting after the seed record");
            (
                Engine::seed(&cfg.evolution, &splits)?,
                EventLog::truncate_after(&events_path, 0)?,
            )
        }
    };
    prepare_out(out)?;
    drive(&mut engine, &mut log, out)?;
    finish(&engine, &mut log, out, dataset)
}

fn from_payload<T: serde::de::DeserializeOwned>(r: &EventRecord) -> Result<T> {
    serde_json::from_value(r.payload.clone())
        .map_err(|e| Error::SchemaViolation(format!("record {}: {e}", r.seq)))
}

pub fn seed_payload(records: &[EventRecord]) -> Result<SeedPayload> {
    let first = records
        .first()
        .filter(|r| r.kind == EventKind::Seed)
        .ok_or_else(|| Error::SchemaViolation("log does not start with a seed record".into()))?;
    from_payload(first)
}

pub fn step_records(records: &[EventRecord]) -> Result<Vec<StepRecord>> {
    records
        .iter()
        .filter(|r| r.kind == EventKind::Step)
        .map(from_payload)
        .collect()
}

pub fn final_payload(records: &[EventRecord]) -> Result<Option<FinalPayload>> {
    records
        .iter()
        .find(|r| r.kind == EventKind::Final)
        .map(from_payload)
        .transpose()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReplayTarget {
    /// The champion named in the final record (or the last step's best).
    Champion,
    Id(u64),
    All,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReplayCheck {
    pub id: u64,
    pub logged: f64,
    pub replayed: f64,
    pub param_count: usize,
}

/// Rebuilds individuals from the founder and child seeds in a run's log
/// and checks that each recomputed fitness equals the logged value exactly.
pub fn replay(out: &Path, target: ReplayTarget) -> Result<Vec<ReplayCheck>> {
    let records = read_events(out.join("events.jsonl"))?;
    let seed = seed_payload(&records)?;
    let steps = step_records(&records)?;
    let cfg = seed.config;
    let splits = cfg.splits()?;
    let ctx = Context::new(&cfg.evolution, &splits)?;
    if splits.checksum() != seed.dataset.split_checksum {
        return Err(Error::ReplayMismatch(
            "dataset split differs from the logged one".into(),
        ));
    }

    let parents: HashMap<u64, &[u64]> = steps
        .iter()
        .map(|s| (s.child_id, s.parents.as_slice()))
        .collect();
    let known = |id: u64| seed.founders.iter().any(|f| f.id == id) || parents.contains_key(&id);
    let roots: Vec<u64> = match target {
        ReplayTarget::All => seed
            .founders
            .iter()
            .map(|f| f.id)
            .chain(steps.iter().map(|s| s.child_id))
            .collect(),
        ReplayTarget::Id(id) => vec![id],
        ReplayTarget::Champion => {
            let id = match final_payload(&records)? {
                Some(f) => f.champion_id,
                None => steps.last().map_or(seed.stats.best_id, |s| s.stats.best_id),
            };
            vec![id]
        }
    };
    let mut needed = BTreeSet::new();
    let mut stack = roots;
    while let Some(id) = stack.pop() {
        if !known(id) {
            return Err(Error::ReplayMismatch(format!(
                "individual {id} is not in the log"
            )));
        }
        if needed.insert(id) {
            if let Some(ps) = parents.get(&id) {
                stack.extend(ps.iter().copied());
            }
        }
    }

    let mut genomes: HashMap<u64, Genome> = HashMap::new();
    let mut checks = Vec::new();
    let mut verify = |id: u64,
                      logged: f64,
                      logged_params: usize,
                      replayed: f64,
                      genome: &Genome| {
        let params = genome.network.param_count();
        if replayed.to_bits() != logged.to_bits() || params != logged_params {
            return Err(Error::ReplayMismatch(format!(
                "individual {id}: logged fitness {logged} ({logged_params} params), replayed {replayed} ({params} params)"
            )));
        }
        checks.push(ReplayCheck {
            id,
            logged,
            replayed,
            param_count: params,
        });
        Ok(())
    };
    for f in &seed.founders {
        if needed.contains(&f.id) {
            let built = build_founder(&ctx, f.id, f.founder_seed)?;
            verify(f.id, f.fitness, f.param_count, built.fitness, &built.genome)?;
            genomes.insert(f.id, built.genome);
        }
    }
    for s in &steps {
        if !needed.contains(&s.child_id) {
            continue;
        }
        let a = genomes
            .get(&s.parents[0])
            .ok_or_else(|| Error::ReplayMismatch(format!("parent {} unavailable", s.parents[0])))?;
        let b = match s.parents.get(1) {
            Some(p) => Some(
                genomes
                    .get(p)
                    .ok_or_else(|| Error::ReplayMismatch(format!("parent {p} unavailable")))?,
            ),
            None => None,
        };
        let built = build_child(&ctx, a, b, s.child_id, s.child_seed)?;
        verify(
            s.child_id,
            s.fitness,
            s.param_count,
            built.fitness,
            &built.genome,
        )?;
        genomes.insert(s.child_id, built.genome);
    }
    Ok(checks)
}
