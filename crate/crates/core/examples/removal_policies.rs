//! Kill-worst against kill-oldest (aging) removal on noisy two-moons.
//!
//! cargo run --release --example removal_policies -- [generations]

use neurodarwin::data::{gen_synthetic, split_dataset, SplitSpec, SyntheticKind};
use neurodarwin::evolution::{evolve, EvolutionConfig, RemovalPolicy};
use neurodarwin::net::TrainConfig;

fn main() -> neurodarwin::Result<()> {
    let generations = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(300);
    let data = gen_synthetic(SyntheticKind::Moons, 600, 0.3, 2, 0)?;
    let mut splits = split_dataset(&data, &SplitSpec::default())?;
    splits.standardize();
    for removal in [RemovalPolicy::Worst, RemovalPolicy::Oldest] {
        for seed in 0..3 {
            let config = EvolutionConfig {
                removal,
                generations,
                seed,
                train: TrainConfig {
                    epochs: 8,
                    ..TrainConfig::default()
                },
                ..EvolutionConfig::default()
            };
            let h = evolve(&config, &splits)?;
            let ages: Vec<u64> = h.population.members().iter().map(|m| m.age).collect();
            let fitness: Vec<f64> = h
                .population
                .members()
                .iter()
                .filter_map(|m| m.fitness)
                .collect();
            println!(
                "{removal:?} seed {seed}: best ever {:.3}  final mean {:.3}  age span {}  champion widths {:?}",
                h.best_fitness(),
                fitness.iter().sum::<f64>() / fitness.len() as f64,
                ages.iter().max().unwrap() - ages.iter().min().unwrap(),
                h.champion().genome.network.widths()
            );
        }
    }
    Ok(())
}
