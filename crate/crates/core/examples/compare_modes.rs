//! Paired 1D / 2D / dropout runs over matched seeds; writes compare.csv.
//!
//! cargo run --release --example compare_modes -- [out_dir]

use neurodarwin::harness::{compare_modes, ExperimentConfig, TaskConfig};

fn main() -> neurodarwin::Result<()> {
    let out = std::env::args().nth(1).map_or_else(
        || std::env::temp_dir().join("neurodarwin-compare"),
        Into::into,
    );
    let mut cfg = ExperimentConfig {
        task: TaskConfig::Spirals {
            n: 300,
            noise: 0.1,
            classes: 2,
            seed: None,
        },
        ..ExperimentConfig::default()
    };
    cfg.evolution.generations = 150;
    let table = compare_modes(&cfg, &[0, 1, 2, 3, 4], &out)?;
    for a in &table.arms {
        match &a.outcome {
            Ok(s) => println!(
                "seed {} {:<11} best {:.3}  champion params {:>4}  {} ms",
                a.seed, a.arm.name, s.result.best_fitness, s.result.champion_param_count, s.wall_ms
            ),
            Err(e) => println!("seed {} {:<11} failed: {e}", a.seed, a.arm.name),
        }
    }
    for p in &table.pairs {
        println!(
            "{:<24} +{} -{} ={}  mean {:+.4}",
            p.pair,
            p.positive,
            p.negative,
            p.zero,
            p.mean()
        );
    }
    println!("tables in {}", out.display());
    Ok(())
}
