use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::engine::EvolutionConfig;
use super::population::Genome;
use crate::error::{Error, Result};
use crate::net::{init_layer, Activation, LayerSpec, Network};
use crate::rewire::{apply_random, Probe, RewireEvent, RewireOp};
use crate::StreamRng;

/// Attempts before a child falls back to an unmutated copy.
pub const MAX_MUTATION_ATTEMPTS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MutationKind {
    Rewire(RewireOp),
    LearningRate,
    Activation,
}

/// Relative weights of the mutation operators applied to each child.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MutationCatalog {
    pub birth: f64,
    pub kill: f64,
    pub prune: f64,
    pub migrate_unit: f64,
    pub migrate_filter: f64,
    pub add_layer: f64,
    pub remove_layer: f64,
    pub learning_rate: f64,
    pub activation: f64,
}

impl Default for MutationCatalog {
    fn default() -> Self {
        MutationCatalog {
            birth: 3.0,
            kill: 1.0,
            prune: 0.5,
            migrate_unit: 0.5,
            migrate_filter: 0.5,
            add_layer: 1.0,
            remove_layer: 0.2,
            learning_rate: 1.0,
            activation: 0.5,
        }
    }
}

impl MutationCatalog {
    pub fn entries(&self) -> [(MutationKind, f64); 9] {
        [
            (MutationKind::Rewire(RewireOp::Birth), self.birth),
            (MutationKind::Rewire(RewireOp::Kill), self.kill),
            (MutationKind::Rewire(RewireOp::Prune), self.prune),
            (
                MutationKind::Rewire(RewireOp::MigrateUnit),
                self.migrate_unit,
            ),
            (
                MutationKind::Rewire(RewireOp::MigrateFilter),
                self.migrate_filter,
            ),
            (MutationKind::Rewire(RewireOp::AddLayer), self.add_layer),
            (
                MutationKind::Rewire(RewireOp::RemoveLayer),
                self.remove_layer,
            ),
            (MutationKind::LearningRate, self.learning_rate),
            (MutationKind::Activation, self.activation),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        let entries = self.entries();
        if entries.iter().any(|(_, w)| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Config(
                "catalog weights must be finite and >= 0".into(),
            ));
        }
        if entries.iter().all(|(_, w)| *w == 0.0) {
            return Err(Error::Config(
                "catalog needs at least one positive weight".into(),
            ));
        }
        Ok(())
    }
}

/// What the single mutation of a child did.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MutationRecord {
    Rewire(RewireEvent),
    LearningRate {
        from: f64,
        to: f64,
    },
    Activation {
        layer: usize,
        from: Activation,
        to: Activation,
    },
    /// Every attempt failed; the child is an unmutated copy.
    None {
        attempts: usize,
    },
}

#[derive(Clone, Debug)]
pub struct Child {
    pub genome: Genome,
    pub mutation: MutationRecord,
    pub crossed: bool,
}

/// Layer-aligned uniform crossover.
///
/// The child takes the layer count of one parent; each hidden position
/// copies the layer of a parent that has one there, and the output layer
/// comes from either parent. Layers are re-chained to the running shape:
/// a layer whose input no longer matches keeps its kind, width and
/// activation but is re-initialized. A chain that cannot be formed falls
/// back to a copy of `a`.
pub fn crossover(a: &Network, b: &Network, rng: &mut StreamRng) -> Network {
    let parents = [a, b];
    let len = parents[rng.gen_range(0..2)].layers().len();
    let mut shape = a.input_shape();
    let mut layers = Vec::with_capacity(len);
    for i in 0..len {
        let last = i + 1 == len;
        let candidates: Vec<&Network> = parents
            .iter()
            .copied()
            .filter(|p| if last { true } else { i + 1 < p.layers().len() })
            .collect();
        let parent = candidates
            .choose(rng)
            .expect("the longer parent always qualifies");
        let source = if last {
            parent.layers().last().expect("non-empty")
        } else {
            &parent.layers()[i]
        };
        let Some(spec) = source.spec.rechained(shape) else {
            return a.clone();
        };
        let layer = if spec == source.spec {
            source.clone()
        } else {
            init_layer(spec, rng)
        };
        let Ok(next) = spec.output_shape(shape) else {
            return a.clone();
        };
        shape = next;
        layers.push(layer);
    }
    Network::from_layers(a.input_shape(), layers).unwrap_or_else(|_| a.clone())
}

fn mutate_activation(net: &Network, rng: &mut StreamRng) -> Result<(Network, MutationRecord)> {
    let last = net.layers().len() - 1;
    let candidates: Vec<usize> = (0..last)
        .filter(|&i| net.layers()[i].spec.activation().is_some())
        .collect();
    let &layer = candidates
        .choose(rng)
        .ok_or_else(|| Error::NotApplicable("no hidden layer to re-activate".into()))?;
    let from = net.layers()[layer].spec.activation().expect("filtered");
    let others: Vec<Activation> = Activation::ALL.into_iter().filter(|&a| a != from).collect();
    let to = *others.choose(rng).expect("three alternatives");
    let mut layers = net.layers().to_vec();
    layers[layer].spec = match layers[layer].spec {
        LayerSpec::Dense {
            in_dim, out_dim, ..
        } => LayerSpec::dense(in_dim, out_dim, to),
        LayerSpec::Conv2d {
            in_channels,
            out_channels,
            kernel,
            ..
        } => LayerSpec::conv(in_channels, out_channels, kernel, to),
        LayerSpec::Flatten => unreachable!(),
    };
    Ok((
        Network::from_layers(net.input_shape(), layers)?,
        MutationRecord::Activation { layer, from, to },
    ))
}

fn apply_mutation(
    kind: MutationKind,
    genome: &Genome,
    config: &EvolutionConfig,
    probe: Option<&Probe>,
    rng: &mut StreamRng,
) -> Result<(Network, f64, MutationRecord)> {
    match kind {
        MutationKind::Rewire(op) => {
            let (net, event) = apply_random(op, &genome.network, &config.rewire, probe, rng)?;
            Ok((net, genome.learning_rate, MutationRecord::Rewire(event)))
        }
        MutationKind::LearningRate => {
            let factor = rng.gen_range(0.5f64.ln()..=2.0f64.ln()).exp();
            let to = genome.learning_rate * factor;
            Ok((
                genome.network.clone(),
                to,
                MutationRecord::LearningRate {
                    from: genome.learning_rate,
                    to,
                },
            ))
        }
        MutationKind::Activation => {
            let (net, rec) = mutate_activation(&genome.network, rng)?;
            Ok((net, genome.learning_rate, rec))
        }
    }
}

/// Builds an offspring: crossover with `b` when given (otherwise a copy of
/// `a`), then exactly one catalog mutation.
///
/// Failed mutations are resampled; after [`MAX_MUTATION_ATTEMPTS`] failures
/// the child is returned unmutated.
pub fn make_child(
    a: &Genome,
    b: Option<&Genome>,
    child_id: u64,
    config: &EvolutionConfig,
    probe: Option<&Probe>,
    rng: &mut StreamRng,
) -> Result<Child> {
    let (network, parents) = match b {
        Some(b) => (crossover(&a.network, &b.network, rng), vec![a.id, b.id]),
        None => (a.network.clone(), vec![a.id]),
    };
    let base = Genome {
        id: child_id,
        parents,
        network,
        learning_rate: a.learning_rate,
    };
    let entries = config.catalog.entries();
    let dist = WeightedIndex::new(entries.iter().map(|(_, w)| *w))
        .map_err(|e| Error::Config(format!("mutation catalog: {e}")))?;
    for _ in 0..MAX_MUTATION_ATTEMPTS {
        let kind = entries[dist.sample(rng)].0;
        if let Ok((network, learning_rate, mutation)) =
            apply_mutation(kind, &base, config, probe, rng)
        {
            return Ok(Child {
                genome: Genome {
                    network,
                    learning_rate,
                    ..base
                },
                mutation,
                crossed: b.is_some(),
            });
        }
    }
    Ok(Child {
        genome: base,
        mutation: MutationRecord::None {
            attempts: MAX_MUTATION_ATTEMPTS,
        },
        crossed: b.is_some(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::Shape;
    use rand::SeedableRng;

    fn genome(id: u64, hidden: &[usize], seed: u64) -> Genome {
        Genome {
            id,
            parents: vec![],
            network: Network::mlp(
                3,
                hidden,
                2,
                Activation::Tanh,
                &mut StreamRng::seed_from_u64(seed),
            )
            .unwrap(),
            learning_rate: 0.1,
        }
    }

    #[test]
    fn crossover_with_self_keeps_architecture() {
        let a = genome(0, &[4, 5], 1);
        let mut rng = StreamRng::seed_from_u64(2);
        for _ in 0..20 {
            let c = crossover(&a.network, &a.network, &mut rng);
            assert_eq!(c, a.network);
        }
    }

    #[test]
    fn crossover_layers_come_from_parents() {
        let a = genome(0, &[4, 5], 1);
        let b = genome(1, &[6], 2);
        let mut rng = StreamRng::seed_from_u64(9);
        let key = |s: &LayerSpec| (s.is_dense(), s.width(), s.activation());
        for _ in 0..200 {
            let c = crossover(&a.network, &b.network, &mut rng);
            c.validate().unwrap();
            let n = c.layers().len();
            assert!(n == 2 || n == 3);
            for (i, layer) in c.layers().iter().enumerate() {
                let from_parent = |p: &Network| {
                    let pl = p.layers();
                    if i + 1 == n {
                        key(&pl[pl.len() - 1].spec) == key(&layer.spec)
                    } else {
                        i + 1 < pl.len() && key(&pl[i].spec) == key(&layer.spec)
                    }
                };
                assert!(from_parent(&a.network) || from_parent(&b.network));
            }
        }
    }

    #[test]
    fn mutant_differs_by_one_record() {
        let a = genome(4, &[3], 1);
        let config = EvolutionConfig::default();
        let mut rng = StreamRng::seed_from_u64(5);
        for _ in 0..50 {
            let child = make_child(&a, None, 9, &config, None, &mut rng).unwrap();
            assert_eq!(child.genome.parents, vec![4]);
            match &child.mutation {
                MutationRecord::Rewire(ev) => {
                    assert_eq!(ev.params_after, child.genome.network.param_count())
                }
                MutationRecord::LearningRate { from, to } => {
                    assert_eq!(child.genome.network, a.network);
                    assert!(to / from >= 0.5 - 1e-12 && to / from <= 2.0 + 1e-12);
                }
                MutationRecord::Activation { layer, to, .. } => {
                    assert_eq!(
                        child.genome.network.layers()[*layer].spec.activation(),
                        Some(*to)
                    );
                }
                MutationRecord::None { .. } => panic!("a hidden layer is always mutable"),
            }
        }
    }

    #[test]
    fn all_failures_yield_plain_copy() {
        let a = Genome {
            id: 0,
            parents: vec![],
            network: Network::new(
                Shape::Flat(2),
                &[LayerSpec::dense(2, 2, Activation::Linear)],
                &mut StreamRng::seed_from_u64(0),
            )
            .unwrap(),
            learning_rate: 0.1,
        };
        let config = EvolutionConfig {
            catalog: MutationCatalog {
                birth: 1.0,
                kill: 1.0,
                migrate_unit: 1.0,
                activation: 1.0,
                prune: 0.0,
                migrate_filter: 0.0,
                add_layer: 0.0,
                remove_layer: 0.0,
                learning_rate: 0.0,
            },
            ..EvolutionConfig::default()
        };
        let child =
            make_child(&a, None, 1, &config, None, &mut StreamRng::seed_from_u64(1)).unwrap();
        assert_eq!(child.mutation, MutationRecord::None { attempts: 10 });
        assert_eq!(child.genome.network, a.network);
    }
}
