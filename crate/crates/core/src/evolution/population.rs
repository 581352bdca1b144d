use std::cmp::Ordering;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::Network;
use crate::StreamRng;

/// One individual's heritable material.
#[derive(Clone, Debug, PartialEq)]
pub struct Genome {
    pub id: u64,
    /// Empty for founders, one entry for mutants, two for crossover children.
    pub parents: Vec<u64>,
    pub network: Network,
    pub learning_rate: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Individual {
    pub genome: Genome,
    /// Validation accuracy; `None` until evaluated.
    pub fitness: Option<f64>,
    /// Insertion sequence number.
    pub age: u64,
    pub diverged: bool,
}

impl Individual {
    pub fn id(&self) -> u64 {
        self.genome.id
    }

    pub fn param_count(&self) -> usize {
        self.genome.network.param_count()
    }

    fn score(&self) -> Result<f64> {
        self.fitness.ok_or(Error::UnevaluatedMember(self.genome.id))
    }
}

/// Total order used for selection: higher fitness first, then fewer
/// parameters, then lower age, then lower id. `Less` means `a` is better.
pub fn rank(a: &Individual, b: &Individual) -> Ordering {
    let fa = a.fitness.unwrap_or(f64::NEG_INFINITY);
    let fb = b.fitness.unwrap_or(f64::NEG_INFINITY);
    fb.total_cmp(&fa)
        .then(a.param_count().cmp(&b.param_count()))
        .then(a.age.cmp(&b.age))
        .then(a.id().cmp(&b.id()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RemovalPolicy {
    /// Evict the least fit member.
    Worst,
    /// Evict the earliest inserted member (aging).
    Oldest,
}

/// Fixed-capacity pool of individuals.
#[derive(Clone, Debug, PartialEq)]
pub struct Population {
    capacity: usize,
    members: Vec<Individual>,
    counter: u64,
}

impl Population {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidParams(
                "population capacity must be at least 1".into(),
            ));
        }
        Ok(Population {
            capacity,
            members: Vec::with_capacity(capacity + 1),
            counter: 0,
        })
    }

    /// Rebuilds a population from saved members; `counter` is the next age.
    pub fn from_parts(capacity: usize, members: Vec<Individual>, counter: u64) -> Result<Self> {
        if capacity == 0 || members.len() > capacity + 1 {
            return Err(Error::InvalidParams("member count exceeds capacity".into()));
        }
        if members.iter().any(|m| m.age >= counter) {
            return Err(Error::InvalidParams(
                "member age not below insertion counter".into(),
            ));
        }
        Ok(Population {
            capacity,
            members,
            counter,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn members(&self) -> &[Individual] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Age the next inserted individual will receive.
    pub fn counter(&self) -> u64 {
        self.counter
    }

    /// Adds an individual, stamping its age. Returns the age.
    pub fn insert(&mut self, genome: Genome, fitness: Option<f64>, diverged: bool) -> u64 {
        let age = self.counter;
        self.counter += 1;
        self.members.push(Individual {
            genome,
            fitness,
            age,
            diverged,
        });
        age
    }

    pub fn get(&self, id: u64) -> Option<&Individual> {
        self.members.iter().find(|m| m.id() == id)
    }

    /// Best member under [`rank`].
    pub fn best(&self) -> Option<&Individual> {
        self.members.iter().min_by(|a, b| rank(a, b))
    }
}

/// Samples `k` distinct members uniformly and returns the best of them.
pub fn tournament_select<'p>(
    pop: &'p Population,
    k: usize,
    rng: &mut StreamRng,
) -> Result<&'p Individual> {
    let members = pop.members();
    if k == 0 || k > members.len() {
        return Err(Error::InvalidParams(format!(
            "tournament size {k} with {} members",
            members.len()
        )));
    }
    for m in members {
        m.score()?;
    }
    let winner = index::sample(rng, members.len(), k)
        .into_iter()
        .map(|i| &members[i])
        .min_by(|a, b| rank(a, b))
        .expect("k >= 1");
    Ok(winner)
}

/// Evicts one member from an over-capacity population.
///
/// `Worst` removes the lowest fitness, breaking ties toward more
/// parameters, then higher age, then higher id. `Oldest` removes the lowest
/// age.
pub fn remove_individual(pop: &mut Population, policy: RemovalPolicy) -> Result<Individual> {
    if pop.members.len() <= pop.capacity {
        return Err(Error::NothingToRemove);
    }
    let victim = match policy {
        RemovalPolicy::Worst => {
            for m in &pop.members {
                m.score()?;
            }
            pop.members
                .iter()
                .enumerate()
                .max_by(|(_, a), (_, b)| rank(a, b))
                .map(|(i, _)| i)
        }
        RemovalPolicy::Oldest => pop
            .members
            .iter()
            .enumerate()
            .min_by_key(|(_, m)| m.age)
            .map(|(i, _)| i),
    }
    .expect("population is non-empty");
    Ok(pop.members.remove(victim))
}
