use std::sync::{mpsc, Mutex};
use std::thread;

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use super::mutation::{make_child, MutationCatalog, MutationRecord};
use super::population::{
    rank, remove_individual, tournament_select, Genome, Population, RemovalPolicy,
};
use crate::data::{Splits, Task};
use crate::error::{Error, Result};
use crate::net::{
    evaluate_with, init_layer, train_few_epochs, Activation, LayerSpec, Network, Shape, TrainConfig,
};
use crate::rewire::{rewiring_phase, Probe, RewireConfig, RewireEvent};
use crate::StreamRng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EvolutionMode {
    /// Population-level evolution only.
    #[serde(rename = "1d")]
    OneD,
    /// Population-level evolution plus a rewiring phase for every child.
    #[serde(rename = "2d")]
    TwoD,
}

impl std::str::FromStr for EvolutionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1d" | "1D" => Ok(EvolutionMode::OneD),
            "2d" | "2D" => Ok(EvolutionMode::TwoD),
            other => Err(Error::Config(format!(
                "unknown mode {other:?} (expected 1d or 2d)"
            ))),
        }
    }
}

impl std::fmt::Display for EvolutionMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EvolutionMode::OneD => "1d",
            EvolutionMode::TwoD => "2d",
        })
    }
}

/// Where the 2D rewiring phase runs relative to child training.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    /// Once, after mutation and before training.
    Between,
    /// Before every training epoch.
    Interleaved,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolutionConfig {
    pub population: usize,
    pub tournament: usize,
    /// Number of child-creation steps.
    pub generations: usize,
    pub removal: RemovalPolicy,
    pub mode: EvolutionMode,
    pub placement: Placement,
    pub rewire: RewireConfig,
    pub catalog: MutationCatalog,
    pub crossover: f64,
    /// Child training budget. Its `learning_rate` seeds the founders;
    /// children inherit (and may mutate) their parent's rate.
    pub train: TrainConfig,
    pub workers: usize,
    pub seed: u64,
    /// Emit a population snapshot every this many steps; 0 disables.
    pub checkpoint_every: usize,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            population: 16,
            tournament: 4,
            generations: 300,
            removal: RemovalPolicy::Oldest,
            mode: EvolutionMode::TwoD,
            placement: Placement::Between,
            rewire: RewireConfig::default(),
            catalog: MutationCatalog::default(),
            crossover: 0.1,
            train: TrainConfig::default(),
            workers: 1,
            seed: 0,
            checkpoint_every: 50,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population == 0 {
            return Err(Error::Config("population must be at least 1".into()));
        }
        if self.tournament == 0 || self.tournament > self.population {
            return Err(Error::Config(format!(
                "tournament size {} must be in 1..={}",
                self.tournament, self.population
            )));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.crossover) {
            return Err(Error::Config(
                "crossover probability must be in [0, 1]".into(),
            ));
        }
        self.train
            .validate()
            .map_err(|e| Error::Config(format!("train: {e}")))?;
        self.rewire.validate()?;
        self.catalog.validate()
    }
}

/// Snapshot of population fitness at a step boundary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopulationStats {
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub worst_fitness: f64,
    pub best_id: u64,
    pub best_param_count: usize,
}

impl PopulationStats {
    pub fn of(pop: &Population) -> PopulationStats {
        let best = pop.best().expect("population is non-empty");
        let fits: Vec<f64> = pop
            .members()
            .iter()
            .map(|m| m.fitness.unwrap_or(0.0))
            .collect();
        PopulationStats {
            best_fitness: best.fitness.unwrap_or(0.0),
            mean_fitness: fits.iter().sum::<f64>() / fits.len() as f64,
            worst_fitness: fits.iter().copied().fold(f64::INFINITY, f64::min),
            best_id: best.id(),
            best_param_count: best.param_count(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FounderRecord {
    pub id: u64,
    pub founder_seed: u64,
    pub fitness: f64,
    pub diverged: bool,
    pub param_count: usize,
    pub param_steps: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub founders: Vec<FounderRecord>,
    pub stats: PopulationStats,
}

/// Everything that happened in one child-creation step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// 1-based commit order.
    pub step: u64,
    pub worker: usize,
    pub child_id: u64,
    pub parents: Vec<u64>,
    pub child_seed: u64,
    pub mutation: MutationRecord,
    /// Rewiring-phase events (always empty in 1D mode).
    pub rewire_events: Vec<RewireEvent>,
    pub fitness: f64,
    pub diverged: bool,
    pub param_count: usize,
    pub learning_rate: f64,
    /// Trained parameters times SGD updates.
    pub param_steps: u64,
    pub removed_id: u64,
    pub stats: PopulationStats,
}

/// Serializable position of a [`StreamRng`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngState {
    pub seed: String,
    pub stream: u64,
    pub word_pos: String,
}

impl RngState {
    pub fn of(rng: &StreamRng) -> RngState {
        RngState {
            seed: hex::encode(rng.get_seed()),
            stream: rng.get_stream(),
            word_pos: rng.get_word_pos().to_string(),
        }
    }

    pub fn restore(&self) -> Result<StreamRng> {
        let bad = |what: &str| Error::SchemaViolation(format!("rng state: bad {what}"));
        let bytes = hex::decode(&self.seed).map_err(|_| bad("seed"))?;
        let seed: [u8; 32] = bytes.try_into().map_err(|_| bad("seed length"))?;
        let pos: u128 = self.word_pos.parse().map_err(|_| bad("word_pos"))?;
        let mut rng = StreamRng::from_seed(seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(pos);
        Ok(rng)
    }
}

/// Full engine state at a step boundary.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub step: u64,
    pub next_id: u64,
    pub population: Population,
    pub rngs: Vec<RngState>,
}

/// Output of the worker pool, in commit order.
#[derive(Clone, Debug)]
pub enum Emission {
    Step(StepRecord),
    Checkpoint(Checkpoint),
}

/// Read-only inputs shared by every worker.
#[derive(Clone, Debug)]
pub struct Context<'a> {
    pub config: &'a EvolutionConfig,
    pub splits: &'a Splits,
    pub probe: Probe,
}

impl<'a> Context<'a> {
    pub fn new(config: &'a EvolutionConfig, splits: &'a Splits) -> Result<Self> {
        config.validate()?;
        if splits.train.task() != Task::Classification {
            return Err(Error::Config(
                "evolution needs a classification task".into(),
            ));
        }
        if splits.train.is_empty() || splits.validation.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let probe = Probe::from_dataset(
            &splits.validation,
            config.rewire.ablation_batch,
            config.train.loss,
            config.train.dropout.clone(),
        )?;
        Ok(Context {
            config,
            splits,
            probe,
        })
    }

    pub fn classes(&self) -> usize {
        self.splits.train.classes()
    }
}

/// A trained and evaluated offspring (or founder).
#[derive(Clone, Debug)]
pub struct Offspring {
    pub genome: Genome,
    pub fitness: f64,
    pub diverged: bool,
    pub mutation: MutationRecord,
    pub rewire_events: Vec<RewireEvent>,
    pub param_steps: u64,
}

fn minimal_specs(input: Shape, classes: usize) -> Vec<LayerSpec> {
    match input {
        Shape::Flat(n) => vec![LayerSpec::dense(n, classes, Activation::Linear)],
        Shape::Image { .. } => vec![
            LayerSpec::Flatten,
            LayerSpec::dense(input.len(), classes, Activation::Linear),
        ],
    }
}

fn train_and_score(
    ctx: &Context<'_>,
    mut net: Network,
    learning_rate: f64,
    rng: &mut StreamRng,
    events: &mut Vec<RewireEvent>,
) -> Result<(Network, bool, f64, u64)> {
    let cfg = ctx.config;
    let batches = ctx.splits.train.len().div_ceil(cfg.train.batch_size) as u64;
    let interleave = cfg.mode == EvolutionMode::TwoD && cfg.placement == Placement::Interleaved;
    let rounds = if interleave { cfg.train.epochs } else { 1 };
    let epochs = if interleave { 1 } else { cfg.train.epochs };
    let mut diverged = false;
    let mut param_steps = 0u64;
    for _ in 0..rounds {
        if interleave {
            let (next, mut evs) = rewiring_phase(&net, &cfg.rewire, Some(&ctx.probe), rng)?;
            net = next;
            events.append(&mut evs);
        }
        let train = TrainConfig {
            epochs,
            learning_rate,
            seed: rng.gen(),
            ..cfg.train.clone()
        };
        let outcome = train_few_epochs(&net, &ctx.splits.train, &train)?;
        param_steps += net.param_count() as u64 * batches * outcome.history.len() as u64;
        net = outcome.net;
        if outcome.diverged {
            diverged = true;
            break;
        }
    }
    let fitness = if diverged {
        0.0
    } else {
        evaluate_with(&net, &ctx.splits.validation, &cfg.train.dropout)?
    };
    Ok((net, diverged, fitness, param_steps))
}

/// A minimal input→output network grown from `founder_seed`, trained with
/// the child budget and evaluated.
pub fn build_founder(ctx: &Context<'_>, id: u64, founder_seed: u64) -> Result<Offspring> {
    let mut rng = StreamRng::seed_from_u64(founder_seed);
    let input = ctx.splits.train.input_shape();
    let layers = minimal_specs(input, ctx.classes())
        .into_iter()
        .map(|s| init_layer(s, &mut rng))
        .collect();
    let net = Network::from_layers(input, layers)?;
    let lr = ctx.config.train.learning_rate;
    let mut events = Vec::new();
    let (net, diverged, fitness, param_steps) =
        train_and_score(ctx, net, lr, &mut rng, &mut events)?;
    Ok(Offspring {
        genome: Genome {
            id,
            parents: Vec::new(),
            network: net,
            learning_rate: lr,
        },
        fitness,
        diverged,
        mutation: MutationRecord::None { attempts: 0 },
        rewire_events: events,
        param_steps,
    })
}

/// Child pipeline: make_child, rewiring phase (2D only), training,
/// validation. A pure function of the parents, the id and `child_seed`.
pub fn build_child(
    ctx: &Context<'_>,
    a: &Genome,
    b: Option<&Genome>,
    child_id: u64,
    child_seed: u64,
) -> Result<Offspring> {
    let mut rng = StreamRng::seed_from_u64(child_seed);
    let child = make_child(a, b, child_id, ctx.config, Some(&ctx.probe), &mut rng)?;
    let mut events = Vec::new();
    let mut net = child.genome.network;
    if ctx.config.mode == EvolutionMode::TwoD && ctx.config.placement == Placement::Between {
        let (next, evs) = rewiring_phase(&net, &ctx.config.rewire, Some(&ctx.probe), &mut rng)?;
        net = next;
        events = evs;
    }
    let lr = child.genome.learning_rate;
    let (net, diverged, fitness, param_steps) =
        train_and_score(ctx, net, lr, &mut rng, &mut events)?;
    Ok(Offspring {
        genome: Genome {
            network: net,
            ..child.genome
        },
        fitness,
        diverged,
        mutation: child.mutation,
        rewire_events: events,
        param_steps,
    })
}

/// Seed stream for founders: stream 0 of the master seed.
pub fn founder_seeds(master: u64, count: usize) -> Vec<u64> {
    let mut rng = StreamRng::seed_from_u64(master);
    rng.set_stream(0);
    (0..count).map(|_| rng.gen()).collect()
}

/// Worker `w` draws from stream `w + 1` of the master seed.
pub fn worker_rng(master: u64, worker: usize) -> StreamRng {
    let mut rng = StreamRng::seed_from_u64(master);
    rng.set_stream(worker as u64 + 1);
    rng
}

/// P founders, built in parallel over the worker pool.
pub fn seed_population(ctx: &Context<'_>) -> Result<(Population, SeedRecord)> {
    let p = ctx.config.population;
    let seeds = founder_seeds(ctx.config.seed, p);
    let workers = ctx.config.workers.min(p);
    let mut built: Vec<Option<Result<Offspring>>> = (0..p).map(|_| None).collect();
    thread::scope(|s| {
        let chunk = p.div_ceil(workers);
        for (w, slots) in built.chunks_mut(chunk).enumerate() {
            let seeds = &seeds;
            s.spawn(move || {
                for (j, slot) in slots.iter_mut().enumerate() {
                    let id = (w * chunk + j) as u64;
                    *slot = Some(build_founder(ctx, id, seeds[id as usize]));
                }
            });
        }
    });
    let mut pop = Population::new(p)?;
    let mut founders = Vec::with_capacity(p);
    for (i, slot) in built.into_iter().enumerate() {
        let o = slot.expect("every slot filled")?;
        founders.push(FounderRecord {
            id: o.genome.id,
            founder_seed: seeds[i],
            fitness: o.fitness,
            diverged: o.diverged,
            param_count: o.genome.network.param_count(),
            param_steps: o.param_steps,
        });
        pop.insert(o.genome, Some(o.fitness), o.diverged);
    }
    let stats = PopulationStats::of(&pop);
    Ok((pop, SeedRecord { founders, stats }))
}

struct Claim {
    a: Genome,
    b: Option<Genome>,
    child_id: u64,
    child_seed: u64,
}

fn claim(pop: &Population, ctx: &Context<'_>, rng: &mut StreamRng, child_id: u64) -> Result<Claim> {
    let cross = rng.gen::<f64>() < ctx.config.crossover;
    let a = tournament_select(pop, ctx.config.tournament, rng)?
        .genome
        .clone();
    let b = if cross {
        Some(
            tournament_select(pop, ctx.config.tournament, rng)?
                .genome
                .clone(),
        )
    } else {
        None
    };
    Ok(Claim {
        a,
        b,
        child_id,
        child_seed: rng.gen(),
    })
}

fn commit(
    pop: &mut Population,
    ctx: &Context<'_>,
    claim: &Claim,
    mut child: Offspring,
    step: u64,
    worker: usize,
) -> Result<StepRecord> {
    if let MutationRecord::Rewire(ev) = &mut child.mutation {
        ev.generation = step;
    }
    for ev in &mut child.rewire_events {
        ev.generation = step;
    }
    let param_count = child.genome.network.param_count();
    let parents = child.genome.parents.clone();
    let learning_rate = child.genome.learning_rate;
    pop.insert(child.genome, Some(child.fitness), child.diverged);
    let removed = remove_individual(pop, ctx.config.removal)?;
    Ok(StepRecord {
        step,
        worker,
        child_id: claim.child_id,
        parents,
        child_seed: claim.child_seed,
        mutation: child.mutation,
        rewire_events: child.rewire_events,
        fitness: child.fitness,
        diverged: child.diverged,
        param_count,
        learning_rate,
        param_steps: child.param_steps,
        removed_id: removed.id(),
        stats: PopulationStats::of(pop),
    })
}

struct Shared {
    pop: Population,
    next_id: u64,
    started: u64,
    committed: u64,
    rngs: Vec<RngState>,
    abort: bool,
}

/// Steady-state evolution driver.
pub struct Engine<'a> {
    ctx: Context<'a>,
    population: Population,
    seed_record: Option<SeedRecord>,
    next_id: u64,
    step: u64,
    rngs: Vec<StreamRng>,
}

impl<'a> Engine<'a> {
    /// Validates the inputs and seeds the founders.
    pub fn seed(config: &'a EvolutionConfig, splits: &'a Splits) -> Result<Self> {
        let ctx = Context::new(config, splits)?;
        let (population, record) = seed_population(&ctx)?;
        Ok(Engine {
            next_id: config.population as u64,
            population,
            seed_record: Some(record),
            step: 0,
            rngs: (0..config.workers)
                .map(|w| worker_rng(config.seed, w))
                .collect(),
            ctx,
        })
    }

    /// Continues from a snapshot taken by a run with the same config.
    pub fn resume(
        config: &'a EvolutionConfig,
        splits: &'a Splits,
        checkpoint: Checkpoint,
    ) -> Result<Self> {
        let ctx = Context::new(config, splits)?;
        if checkpoint.rngs.len() != config.workers {
            return Err(Error::Config(format!(
                "checkpoint has {} worker streams, config asks for {}",
                checkpoint.rngs.len(),
                config.workers
            )));
        }
        if checkpoint.population.capacity() != config.population {
            return Err(Error::Config(
                "checkpoint population size differs from config".into(),
            ));
        }
        let rngs = checkpoint
            .rngs
            .iter()
            .map(RngState::restore)
            .collect::<Result<_>>()?;
        Ok(Engine {
            ctx,
            population: checkpoint.population,
            seed_record: None,
            next_id: checkpoint.next_id,
            step: checkpoint.step,
            rngs,
        })
    }

    pub fn context(&self) -> &Context<'a> {
        &self.ctx
    }

    pub fn population(&self) -> &Population {
        &self.population
    }

    /// `None` after [`Engine::resume`].
    pub fn seed_record(&self) -> Option<&SeedRecord> {
        self.seed_record.as_ref()
    }

    /// Completed steps.
    pub fn steps_done(&self) -> u64 {
        self.step
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            step: self.step,
            next_id: self.next_id,
            population: self.population.clone(),
            rngs: self.rngs.iter().map(RngState::of).collect(),
        }
    }

    /// One step on worker 0's stream, on the calling thread: tournament,
    /// child construction, insertion, removal.
    pub fn step(&mut self) -> Result<StepRecord> {
        let id = self.next_id;
        let c = claim(&self.population, &self.ctx, &mut self.rngs[0], id)?;
        self.next_id += 1;
        let child = build_child(&self.ctx, &c.a, c.b.as_ref(), c.child_id, c.child_seed)?;
        let rec = commit(&mut self.population, &self.ctx, &c, child, self.step + 1, 0)?;
        self.step += 1;
        Ok(rec)
    }

    /// Runs the remaining steps on the worker pool. Step records (and
    /// snapshots every `checkpoint_every` steps) reach `sink` in commit
    /// order on the calling thread.
    pub fn run(&mut self, sink: &mut dyn FnMut(Emission) -> Result<()>) -> Result<()> {
        let total = self.ctx.config.generations as u64;
        if self.step >= total {
            return Ok(());
        }
        let every = self.ctx.config.checkpoint_every as u64;
        let shared = Mutex::new(Shared {
            pop: self.population.clone(),
            next_id: self.next_id,
            started: self.step,
            committed: self.step,
            rngs: self.rngs.iter().map(RngState::of).collect(),
            abort: false,
        });
        let rngs = std::mem::take(&mut self.rngs);
        let ctx = &self.ctx;
        let (tx, rx) = mpsc::channel::<Result<Emission>>();

        let (first_err, rngs) = thread::scope(|s| {
            let handles: Vec<_> = rngs
                .into_iter()
                .enumerate()
                .map(|(w, mut rng)| {
                    let tx = tx.clone();
                    let shared = &shared;
                    s.spawn(move || {
                        let fail = |e: Error| {
                            shared.lock().expect("store lock").abort = true;
                            let _ = tx.send(Err(e));
                        };
                        loop {
                            let claimed = {
                                let mut st = shared.lock().expect("store lock");
                                if st.abort || st.started >= total {
                                    break;
                                }
                                let id = st.next_id;
                                let c = claim(&st.pop, ctx, &mut rng, id);
                                if c.is_ok() {
                                    st.started += 1;
                                    st.next_id += 1;
                                }
                                c
                            };
                            let c = match claimed {
                                Ok(c) => c,
                                Err(e) => {
                                    fail(e);
                                    break;
                                }
                            };
                            let child = match build_child(
                                ctx,
                                &c.a,
                                c.b.as_ref(),
                                c.child_id,
                                c.child_seed,
                            ) {
                                Ok(child) => child,
                                Err(e) => {
                                    fail(e);
                                    break;
                                }
                            };
                            let mut st = shared.lock().expect("store lock");
                            if st.abort {
                                break;
                            }
                            let step = st.committed + 1;
                            match commit(&mut st.pop, ctx, &c, child, step, w) {
                                Ok(rec) => {
                                    st.committed = step;
                                    st.rngs[w] = RngState::of(&rng);
                                    let _ = tx.send(Ok(Emission::Step(rec)));
                                    if every > 0 && step.is_multiple_of(every) {
                                        let snap = Checkpoint {
                                            step,
                                            next_id: st.next_id,
                                            population: st.pop.clone(),
                                            rngs: st.rngs.clone(),
                                        };
                                        let _ = tx.send(Ok(Emission::Checkpoint(snap)));
                                    }
                                }
                                Err(e) => {
                                    st.abort = true;
                                    let _ = tx.send(Err(e));
                                    break;
                                }
                            }
                        }
                        rng
                    })
                })
                .collect();
            drop(tx);
            let mut first_err = None;
            for msg in rx {
                if first_err.is_some() {
                    continue;
                }
                let res = msg.and_then(&mut *sink);
                if let Err(e) = res {
                    shared.lock().expect("store lock").abort = true;
                    first_err = Some(e);
                }
            }
            let rngs: Vec<StreamRng> = handles
                .into_iter()
                .map(|h| h.join().expect("worker panicked"))
                .collect();
            (first_err, rngs)
        });

        let st = shared.into_inner().expect("store lock");
        self.population = st.pop;
        self.next_id = st.next_id;
        self.step = st.committed;
        self.rngs = rngs;
        match first_err {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }
}

/// Result of a complete run.
#[derive(Clone, Debug)]
pub struct EvolutionHistory {
    pub seed: SeedRecord,
    /// One record per completed step, in commit order.
    pub steps: Vec<StepRecord>,
    pub population: Population,
}

impl EvolutionHistory {
    /// Highest fitness of any individual evaluated during the run.
    pub fn best_fitness(&self) -> f64 {
        self.seed
            .founders
            .iter()
            .map(|f| f.fitness)
            .chain(self.steps.iter().map(|s| s.fitness))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `(child, parent)` edges.
    pub fn lineage(&self) -> Vec<(u64, u64)> {
        self.steps
            .iter()
            .flat_map(|s| s.parents.iter().map(move |&p| (s.child_id, p)))
            .collect()
    }

    /// Best member of the final population.
    pub fn champion(&self) -> &super::Individual {
        self.population
            .members()
            .iter()
            .min_by(|a, b| rank(a, b))
            .expect("population is non-empty")
    }
}

/// Seeds and runs `config.generations` steps.
pub fn evolve(config: &EvolutionConfig, splits: &Splits) -> Result<EvolutionHistory> {
    let mut engine = Engine::seed(config, splits)?;
    let mut steps = Vec::with_capacity(config.generations);
    engine.run(&mut |em| {
        if let Emission::Step(rec) = em {
            steps.push(rec);
        }
        Ok(())
    })?;
    Ok(EvolutionHistory {
        seed: engine.seed_record.take().expect("fresh engine"),
        steps,
        population: engine.population,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{gen_synthetic, split_dataset, SplitSpec, SyntheticKind};

    fn moons() -> Splits {
        let data = gen_synthetic(SyntheticKind::Moons, 120, 0.1, 2, 3).unwrap();
        let mut s = split_dataset(&data, &SplitSpec::default()).unwrap();
        s.standardize();
        s
    }

    fn small(mode: EvolutionMode) -> EvolutionConfig {
        EvolutionConfig {
            population: 4,
            tournament: 2,
            generations: 12,
            mode,
            checkpoint_every: 5,
            train: TrainConfig {
                epochs: 2,
                ..TrainConfig::default()
            },
            ..EvolutionConfig::default()
        }
    }

    #[test]
    fn zero_generations_keeps_founders() {
        let splits = moons();
        let cfg = EvolutionConfig {
            generations: 0,
            ..small(EvolutionMode::TwoD)
        };
        let h = evolve(&cfg, &splits).unwrap();
        assert!(h.steps.is_empty());
        assert_eq!(h.population.len(), 4);
        for m in h.population.members() {
            assert_eq!(m.genome.network.depth(), 1);
            assert!(m.genome.parents.is_empty());
        }
    }

    #[test]
    fn single_worker_runs_repeat_exactly() {
        let splits = moons();
        let cfg = small(EvolutionMode::TwoD);
        let a = evolve(&cfg, &splits).unwrap();
        let b = evolve(&cfg, &splits).unwrap();
        assert_eq!(a.steps, b.steps);
        assert_eq!(a.population, b.population);
        assert_eq!(a.steps.len(), 12);
        assert!(a.steps.windows(2).all(|w| w[0].step < w[1].step));
    }

    #[test]
    fn one_d_mode_has_no_phase_events() {
        let splits = moons();
        let h = evolve(&small(EvolutionMode::OneD), &splits).unwrap();
        assert!(h.steps.iter().all(|s| s.rewire_events.is_empty()));
    }

    #[test]
    fn step_matches_run() {
        let splits = moons();
        let cfg = small(EvolutionMode::TwoD);
        let mut e = Engine::seed(&cfg, &splits).unwrap();
        let stepped: Vec<StepRecord> = (0..12).map(|_| e.step().unwrap()).collect();
        let h = evolve(&cfg, &splits).unwrap();
        assert_eq!(stepped, h.steps);
    }

    #[test]
    fn resume_from_checkpoint_matches() {
        let splits = moons();
        let cfg = small(EvolutionMode::TwoD);
        let full = evolve(&cfg, &splits).unwrap();
        let mut e = Engine::seed(&cfg, &splits).unwrap();
        let mut snap = None;
        e.run(&mut |em| {
            if let Emission::Checkpoint(c) = em {
                if c.step == 5 {
                    snap = Some(c);
                }
            }
            Ok(())
        })
        .unwrap();
        let mut resumed = Engine::resume(&cfg, &splits, snap.unwrap()).unwrap();
        let mut tail = Vec::new();
        resumed
            .run(&mut |em| {
                if let Emission::Step(r) = em {
                    tail.push(r);
                }
                Ok(())
            })
            .unwrap();
        assert_eq!(tail, full.steps[5..]);
        assert_eq!(resumed.population(), &full.population);
    }

    #[test]
    fn multi_worker_run_completes() {
        let splits = moons();
        let cfg = EvolutionConfig {
            workers: 3,
            ..small(EvolutionMode::TwoD)
        };
        let h = evolve(&cfg, &splits).unwrap();
        assert_eq!(h.steps.len(), 12);
        assert_eq!(h.population.len(), 4);
        let ids: std::collections::HashSet<u64> = h.steps.iter().map(|s| s.child_id).collect();
        assert_eq!(ids.len(), 12);
    }

    #[test]
    fn worst_removal_is_elitist() {
        let splits = moons();
        let cfg = EvolutionConfig {
            removal: RemovalPolicy::Worst,
            ..small(EvolutionMode::OneD)
        };
        let h = evolve(&cfg, &splits).unwrap();
        let mut best = h.seed.stats.best_fitness;
        for s in &h.steps {
            assert!(s.stats.best_fitness >= best);
            best = s.stats.best_fitness;
        }
    }

    #[test]
    fn regression_task_rejected() {
        let data = crate::data::Dataset::regression(
            Shape::Flat(1),
            crate::net::Matrix::from_rows(&[vec![0.0], vec![1.0]]).unwrap(),
            crate::net::Matrix::from_rows(&[vec![0.0], vec![1.0]]).unwrap(),
        )
        .unwrap();
        let splits = Splits::whole(&data);
        assert!(matches!(
            Engine::seed(&EvolutionConfig::default(), &splits),
            Err(Error::Config(_))
        ));
    }
}
