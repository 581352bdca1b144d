//! Two-moons, 2D evolution (P=16, k=4, G=300) over a few seeds.
//!
//! cargo run --release --example two_moons_evolution -- [seeds]

use std::time::Instant;

use neurodarwin::data::{gen_synthetic, split_dataset, SplitSpec, SyntheticKind};
use neurodarwin::evolution::{evolve, EvolutionConfig, EvolutionMode};

fn main() -> neurodarwin::Result<()> {
    let seeds: u64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(3);
    for seed in 0..seeds {
        let data = gen_synthetic(SyntheticKind::Moons, 400, 0.15, 2, seed)?;
        let mut splits = split_dataset(
            &data,
            &SplitSpec {
                seed,
                ..SplitSpec::default()
            },
        )?;
        splits.standardize();
        let config = EvolutionConfig {
            mode: EvolutionMode::TwoD,
            seed,
            ..EvolutionConfig::default()
        };
        let t = Instant::now();
        let h = evolve(&config, &splits)?;
        let champ = h.champion();
        println!(
            "seed {seed}: best validation accuracy {:.4}  champion widths {:?}  params {}  ({:.1}s)",
            h.best_fitness(),
            champ.genome.network.widths(),
            champ.param_count(),
            t.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
